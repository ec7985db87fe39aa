import pytest

from fvkplate import Grid, Material
from fvkplate.context import run_context
from fvkplate.core import reset_config


@pytest.fixture(autouse=True)
def clean_state():
    reset_config()
    run_context.clear()
    yield
    reset_config()
    run_context.clear()


@pytest.fixture
def material():
    return Material(young=1.0, poisson=0.3, thickness=0.1)


@pytest.fixture
def unit_square():
    return Grid.rectangle((0.0, 1.0), (0.0, 1.0), 17, 17)


@pytest.fixture
def small_rectangle():
    return Grid.rectangle((0.0, 1.5), (0.0, 1.0), 9, 7)


@pytest.fixture
def small_annulus():
    return Grid.annulus(1.0, 2.0, 7, 16)
