"""
FvK Plate Utilities Module
"""

import json
import math
import os
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel

from .core import get_config
from .exceptions import FvKNumericalError


def round_significant(value: float, digits: Optional[int] = None) -> float:
    """
    Round a float to the configured number of significant digits

    17 digits (the default) reproduce every double exactly.
    """
    if digits is None:
        digits = int(get_config()["float_digits"])
    return float(f"{value:.{digits}g}")


def to_jsonable(value: Any, path: str = "") -> Any:
    """
    Convert numpy scalars and arrays, pydantic models and tuples into JSON-ready values

    Args:
        value: Value to convert
        path: Location of value in the enclosing record, used in error messages

    Returns:
        Plain Python structure of dicts, lists, strings, bools, ints and floats

    Raises:
        FvKNumericalError: If a float is not finite
    """
    if isinstance(value, BaseModel):
        return to_jsonable(value.model_dump(), path)
    if isinstance(value, dict):
        return {str(k): to_jsonable(v, f"{path}.{k}" if path else str(k)) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v, f"{path}[{i}]") for i, v in enumerate(value)]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist(), path)
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if not math.isfinite(value):
            raise FvKNumericalError(f"Non-finite value at {path or 'top level'}: {value}")
        return round_significant(value)
    return value


def write_json(path: str, record: Dict[str, Any]) -> None:
    """Write record with sorted keys so identical runs produce identical bytes."""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(to_jsonable(record), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> int:
    """
    Write rows under a comma-separated header; floats use the configured significant digits

    Returns:
        Number of rows written
    """
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    digits = int(get_config()["float_digits"])
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            cells: List[str] = []
            for cell in row:
                if isinstance(cell, (bool, np.bool_)):
                    cells.append(str(int(cell)))
                elif isinstance(cell, (float, np.floating)):
                    cells.append(f"{float(cell):.{digits}g}")
                else:
                    cells.append(str(cell))
            fh.write(",".join(cells) + "\n")
            count += 1
    return count


def parse_index_range(text: str) -> List[int]:
    """
    Parse "1..8", "1,2,5" or "3" into a list of integers

    Raises:
        ValueError: On malformed input
    """
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        start, stop = int(lo), int(hi)
        if stop < start:
            raise ValueError(f"Empty index range {text!r}")
        return list(range(start, stop + 1))
    return [int(part) for part in text.split(",") if part.strip()]
