from pathlib import Path
from typing import Optional
import io
import json

import numpy as np
import pandas as pd
from pydantic import ValidationError

from ..config import logger
from ..exceptions import ParseError, InvalidArgumentError
from .schemas import SampleBatch

FORMATS = ("csv", "jsonl")


def _resolve_format(path: Path, fmt: Optional[str]) -> str:
    fmt = (fmt or path.suffix.lstrip(".") or "csv").lower()
    if fmt not in FORMATS:
        raise InvalidArgumentError(f"Unsupported sample format '{fmt}', expected one of {FORMATS}")
    return fmt


def _is_numeric_line(line: str) -> bool:
    try:
        [float(cell) for cell in line.split(",")]
        return True
    except ValueError:
        return False


def _parse_csv(text: str, path: Path) -> np.ndarray:
    lines = [(number, line) for number, line in enumerate(text.splitlines(), start=1) if line.strip()]
    if not lines:
        raise ParseError(f"{path}: empty file")
    if not _is_numeric_line(lines[0][1]):
        logger.info(f"Skipping header line of {path}: {lines[0][1]!r}")
        lines = lines[1:]
        if not lines:
            raise ParseError(f"{path}: header without data rows")

    width = len(lines[0][1].split(","))
    for number, line in lines:
        fields = len(line.split(","))
        if fields != width:
            raise ParseError(f"{path}: ragged row at line {number}, expected {width} fields, found {fields}")

    body = "\n".join(line for _, line in lines)
    frame = pd.read_csv(io.StringIO(body), header=None, dtype=str, skipinitialspace=True)
    values = frame.apply(lambda column: pd.to_numeric(column.str.strip(), errors="coerce"))
    bad = values.isna().to_numpy() | ~np.isfinite(values.to_numpy(dtype=np.float64, na_value=np.nan))
    if bad.any():
        row, col = np.argwhere(bad)[0]
        raise ParseError(f"{path}: non-numeric cell {frame.iat[row, col]!r} at line {lines[row][0]}, column {col + 1}")
    return values.to_numpy(dtype=np.float64)


def _parse_jsonl(text: str, path: Path) -> np.ndarray:
    rows = []
    width = None
    for number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as e:
            raise ParseError(f"{path}: invalid JSON at line {number}: {e.msg}")
        if not isinstance(row, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in row):
            raise ParseError(f"{path}: line {number} is not an array of numbers")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ParseError(f"{path}: ragged row at line {number}, expected {width} values, found {len(row)}")
        rows.append(row)
    if not rows:
        raise ParseError(f"{path}: empty file")
    data = np.asarray(rows, dtype=np.float64)
    if not np.all(np.isfinite(data)):
        raise ParseError(f"{path}: non-finite value")
    return data


def load_samples(path, fmt: Optional[str] = None, on_sphere: bool = False) -> SampleBatch:
    path = Path(path)
    fmt = _resolve_format(path, fmt)
    logger.info(f"Loading {fmt} samples from {path}")
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(f"Cannot read {path}: {e}")

    data = _parse_csv(text, path) if fmt == "csv" else _parse_jsonl(text, path)
    try:
        batch = SampleBatch(data=data, on_sphere=on_sphere)
    except ValidationError as e:
        raise InvalidArgumentError(f"{path}: {e.errors()[0]['msg']}")
    logger.info(f"Loaded n={batch.n}, d={batch.d} from {path}")
    return batch


def save_samples(batch: SampleBatch, path, fmt: Optional[str] = None) -> None:
    path = Path(path)
    fmt = _resolve_format(path, fmt)
    try:
        if fmt == "csv":
            pd.DataFrame(batch.data).to_csv(path, header=False, index=False, float_format="%.17g")
        else:
            with path.open("w", encoding="utf-8") as handle:
                for row in batch.data:
                    handle.write(json.dumps([float(v) for v in row]) + "\n")
    except OSError as e:
        raise ParseError(f"Cannot write {path}: {e}")
    logger.info(f"Saved n={batch.n}, d={batch.d} to {path}")
