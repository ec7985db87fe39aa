import json

import pytest

from fvkplate import FvKConfigError
from fvkplate.cli import EXIT_DIVERGENCE, EXIT_OK, EXIT_USAGE, run
from fvkplate.presets import PRESETS, get_preset, list_presets, resolve_config


def _summary(out):
    return json.loads((out / "summary.json").read_text())


def test_list_presets(capsys):
    assert run(["--list-presets"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == len(PRESETS) >= 13
    assert any(line.startswith("radial_wrinkles") for line in lines)


def test_every_preset_resolves():
    for entry in list_presets():
        cfg = resolve_config(entry["command"], entry["name"])
        assert cfg.preset == entry["name"]


def test_gradcheck_passes(tmp_path):
    assert run(["gradcheck", "--grid", "8x8", "--trials", "2", "--out", str(tmp_path)]) == EXIT_OK
    summary = _summary(tmp_path)
    assert summary["schema_version"] == "1"
    assert summary["command"] == "gradcheck"
    assert summary["exit_code"] == EXIT_OK
    assert summary["derived"]["max_relative_error"] < 1e-6
    assert (tmp_path / "gradcheck.csv").exists()


def test_energy_command_writes_fields(tmp_path):
    assert run(["energy", "--grid", "5x4", "--out", str(tmp_path)]) == EXIT_OK
    summary = _summary(tmp_path)
    assert set(summary["energy"]) >= {"membrane", "bending", "total"}
    assert summary["grid"]["kind"] == "rectangle"
    assert len((tmp_path / "fields.csv").read_text().splitlines()) == 21


def test_compression_family_certifies_divergence(tmp_path):
    code = run(["family", "--preset", "compression_family", "--n", "1..5", "--out", str(tmp_path)])
    assert code == EXIT_DIVERGENCE
    summary = _summary(tmp_path)
    assert summary["exit_code"] == EXIT_DIVERGENCE
    assert summary["derived"]["certificate"]["certified"] is True
    assert summary["tables"]["index"] == [1, 2, 3, 4, 5]


def test_family_with_two_indices_has_no_certificate(tmp_path):
    code = run(["family", "--preset", "supported_edge_family", "--n", "1,2", "--out", str(tmp_path)])
    # two points are too few for a certificate
    assert code == EXIT_OK
    assert "certificate" not in _summary(tmp_path)["derived"]


def test_buckle_preset(tmp_path):
    assert run(["buckle", "--preset", "buckled_compression", "--out", str(tmp_path)]) == EXIT_OK
    derived = _summary(tmp_path)["derived"]
    assert derived["k1_relative_error"] < 5e-3
    assert abs(derived["limit_energy_at_critical"]) < 1e-8 * derived["bending_at_critical"]


def test_prestress_without_preset(tmp_path):
    code = run(["prestress", "--annulus", "1,2,17,32", "--p1", "-2", "--p2", "-1", "--out", str(tmp_path)])
    assert code == EXIT_OK
    derived = _summary(tmp_path)["derived"]
    assert derived["case"] == "inner_dominant"
    assert derived["classification"]["flat_forced"] is False
    assert (tmp_path / "classify.csv").exists()


def test_relax_radial_gaps_are_nonnegative(tmp_path):
    code = run(["relax", "--preset", "radial_wrinkles", "--hs", "0.02,0.01", "--out", str(tmp_path)])
    assert code == EXIT_OK
    summary = _summary(tmp_path)
    assert all(row["gap"] >= 0.0 for row in summary["tables"]["relax"])
    assert summary["derived"]["envelope_minimum"] >= summary["derived"]["envelope_closed_form_minimum"] - 1e-12


def test_poincare_command(tmp_path):
    assert run(["poincare", "--grid", "17x17", "--out", str(tmp_path)]) == EXIT_OK
    derived = _summary(tmp_path)["derived"]
    assert derived["poincare_constant"] == pytest.approx(1.0 / 9.8696, rel=5e-2)
    assert derived["compression_threshold"] < 0.0


def test_scaling_dichotomy(tmp_path):
    assert run(["sweep", "--preset", "scaling_dichotomy", "--out", str(tmp_path)]) == EXIT_OK
    regimes = _summary(tmp_path)["derived"]["regimes"]
    assert regimes["sawtooth@0"] == "diverging"
    assert regimes["sawtooth@2"] == "bounded"
    assert regimes["traction@2"] == "bounded"


def test_config_file_and_flags_layer(tmp_path):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"preset": "free_traction", "thickness": 0.05, "grid": {"nx": 9, "ny": 5}}))
    out = tmp_path / "out"
    assert run(["energy", "--config", str(config), "--nu", "0.25", "--out", str(out)]) == EXIT_OK
    echoed = _summary(out)["config"]
    assert echoed["thickness"] == 0.05
    assert echoed["poisson"] == 0.25
    assert echoed["grid"]["nx"] == 9


@pytest.mark.parametrize(
    "argv",
    [
        ["family", "--preset", "no_such_preset"],
        ["minimize", "--preset", "compression_family"],
        ["energy", "--grid", "5by5"],
        ["energy", "--nu", "0.7"],
        ["transmogrify"],
        [],
    ],
)
def test_usage_errors(tmp_path, argv):
    assert run(argv + ["--out", str(tmp_path)]) == EXIT_USAGE


def test_preset_of_another_command_is_rejected():
    with pytest.raises(FvKConfigError):
        resolve_config("minimize", "compression_family")


def test_presets_are_fresh_copies():
    first = get_preset("radial_wrinkles")
    first["params"]["hs"].append(1.0)
    assert get_preset("radial_wrinkles")["params"]["hs"] == [1e-2, 1e-3, 1e-4]


def test_free_traction_preset_converges_to_uniform_strain(tmp_path):
    assert run(["minimize", "--preset", "free_traction", "--out", str(tmp_path)]) == EXIT_OK
    summary = _summary(tmp_path)
    assert summary["solve"]["converged"] is True
    assert "elapsed" not in summary["solve"]
    assert "minimize" in summary["timings"]
    derived = summary["derived"]
    # E(u) = f (1 - nu) / E I within one percent
    assert derived["strain_deviation"] < 1e-2
    assert derived["h2_seminorm_ratio"] < 1e-4
    assert summary["energy"]["total"] == pytest.approx(-1.4e-3, rel=1e-4)


def test_supported_mild_compression_stays_flat(tmp_path):
    assert run(["minimize", "--preset", "supported_mild_compression", "--out", str(tmp_path)]) == EXIT_OK
    summary = _summary(tmp_path)
    derived = summary["derived"]
    assert derived["compression_threshold"] < 0.0
    assert derived["load"]["stress"][0] == pytest.approx(0.9 * derived["compression_threshold"])
    assert derived["h2_seminorm_ratio"] < 1e-3
    assert derived["strain_deviation"] < 1e-2


def test_minimize_is_reproducible(tmp_path):
    argv = ["minimize", "--preset", "free_traction", "--grid", "9x5", "--seed", "7"]
    first, second = tmp_path / "first", tmp_path / "second"
    assert run(argv + ["--out", str(first)]) == EXIT_OK
    assert run(argv + ["--out", str(second)]) == EXIT_OK
    a, b = _summary(first), _summary(second)
    a.pop("timings")
    b.pop("timings")
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
    assert (first / "fields.csv").read_bytes() == (second / "fields.csv").read_bytes()


def test_tangential_preset_uses_optimal_exponents(tmp_path):
    assert run(["relax", "--preset", "tangential_wrinkles", "--hs", "0.1", "--out", str(tmp_path)]) == EXIT_OK
    (row,) = _summary(tmp_path)["tables"]["relax"]
    assert row["beta"] == pytest.approx(10.0)
    assert row["sigma"] == pytest.approx(0.1 ** 0.5)
    assert row["gap"] >= 0.0
