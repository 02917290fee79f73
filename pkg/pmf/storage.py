# storage.py
"""Plain-text persistence: CSV result tables, terrain maps and JSON configs."""
import csv
import logging
from pathlib import Path
from typing import Iterable, Sequence, Type, TypeVar

import numpy as np
from pydantic import BaseModel

from pmf.terrain import TerrainMap

logger = logging.getLogger(__name__)

ModelT = TypeVar("ModelT", bound=BaseModel)

FLOAT_FORMAT = "%.17g"


def format_value(value) -> str:
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT % value
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def write_rows(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    """Write a CSV table with floats at 17 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
            count += 1
    logger.info(f"✓ Wrote {count} rows to {path}")
    return path


def read_rows(path) -> list:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def save_terrain(tm: TerrainMap, path) -> Path:
    """Header lines (origin, cell, dims) followed by the row-major altitude grid."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    nx, ny = tm.altitudes.shape
    header = "\n".join([
        f"origin {FLOAT_FORMAT % tm.origin[0]} {FLOAT_FORMAT % tm.origin[1]}",
        f"cell {FLOAT_FORMAT % tm.cell[0]} {FLOAT_FORMAT % tm.cell[1]}",
        f"dims {nx} {ny}",
    ])
    np.savetxt(path, tm.altitudes, fmt=FLOAT_FORMAT, header=header, comments="")
    return path


def load_terrain(path) -> TerrainMap:
    path = Path(path)
    with path.open() as fh:
        fields = {}
        for expected in ("origin", "cell", "dims"):
            key, *values = fh.readline().split()
            if key != expected:
                raise ValueError(f"{path}: expected '{expected}' header line, got '{key}'")
            fields[key] = values
    dims = tuple(int(v) for v in fields["dims"])
    altitudes = np.loadtxt(path, skiprows=3, ndmin=2)
    if altitudes.shape != dims:
        raise ValueError(f"{path}: header dims {dims} do not match grid shape {altitudes.shape}")
    return TerrainMap(
        origin=tuple(float(v) for v in fields["origin"]),
        cell=tuple(float(v) for v in fields["cell"]),
        altitudes=altitudes,
    )


def load_config(path, model: Type[ModelT]) -> ModelT:
    """Parse a JSON config file into a pydantic model; unknown keys are rejected by the model."""
    text = Path(path).read_text()
    config = model.model_validate_json(text)
    logger.info(f"✓ Loaded {model.__name__} from {path}")
    return config
