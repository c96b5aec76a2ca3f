"""
Field I/O utilities for run artifacts.

GridFields are written as CSV (header "N,kind", then the size and kind, then
N rows of N values at 17 significant digits, exact on read-back) and as 8-bit
portable graymaps with a JSON sidecar recording the value mapping. Run
directories get deterministic, descriptive names.

Example:
    run_directory_name("level_set", "A", "small", 128, 7)
    -> "level-set-truth-a-small-n128-seed7"
"""
import json
import os
import re
import shutil
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

from exceptions import ValidationError
from experiment_config import (
    CSV_SIGNIFICANT_DIGITS,
    DEFAULT_OUTPUT_ROOT,
    OUTPUT_ROOT_ENV,
    RUN_NAME_MAX_LENGTH,
)
from logging_config import logger
from observation import ObservationSet
from spectral_prior import FieldKind, GridField

FLOAT_FORMAT = f"%.{CSV_SIGNIFICANT_DIGITS}g"


def sanitize_for_filename(text: str, max_length: int = RUN_NAME_MAX_LENGTH) -> str:
    """
    Sanitize text for use as a directory or file name.

    Lowercases, turns separators into hyphens, drops other special characters
    and truncates at a hyphen boundary where possible.

    Examples:
        >>> sanitize_for_filename("Level_Set Truth A")
        'level-set-truth-a'
        >>> sanitize_for_filename("eps=0.01")
        'eps0.01'
    """
    if not text:
        return ""

    result = text.lower().replace("_", " ")
    result = re.sub(r"[^a-z0-9.\s-]", "", result)
    result = re.sub(r"[\s-]+", "-", result)
    result = result.strip("-")

    if len(result) > max_length:
        truncated = result[:max_length]
        last_hyphen = truncated.rfind("-")
        if last_hyphen > max_length - 10:
            result = truncated[:last_hyphen]
        else:
            result = truncated.rstrip("-")

    return result


def run_directory_name(
    method: str,
    truth: str,
    regime: str,
    grid_size: int,
    seed: Optional[int],
) -> str:
    """Deterministic run directory name; identical configs share a name"""
    seed_part = f"seed{seed}" if seed is not None else "unseeded"
    name = sanitize_for_filename(f"{method} truth {truth} {regime} n{grid_size} {seed_part}")
    return name or "run"


def output_root(override: Optional[str] = None) -> Path:
    """Output root: explicit override, then $BINVERSE_OUT, then ./runs"""
    return Path(override or os.environ.get(OUTPUT_ROOT_ENV) or DEFAULT_OUTPUT_ROOT)


def write_field_csv(field: GridField, path: Path) -> Path:
    """Write a field to CSV; read_field_csv restores it exactly"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as handle:
        handle.write("N,kind\n")
        handle.write(f"{field.size},{field.kind.value}\n")
        np.savetxt(handle, field.values, fmt=FLOAT_FORMAT, delimiter=",")
    return path


def read_field_csv(path: Path) -> GridField:
    """
    Read a field written by write_field_csv.

    Raises:
        ValidationError: If the header or shape is malformed
    """
    with open(path) as handle:
        header = handle.readline().strip()
        if header != "N,kind":
            raise ValidationError(f"Unexpected field CSV header: {header!r}", field="header")
        size_text, kind = handle.readline().strip().split(",")
        values = np.loadtxt(handle, delimiter=",", ndmin=2)

    size = int(size_text)
    if values.shape != (size, size):
        raise ValidationError(
            f"Field CSV declares N={size} but holds {values.shape}",
            field="values"
        )
    return GridField(values, FieldKind(kind))


def write_field_pgm(field: GridField, path: Path) -> Path:
    """
    Write an 8-bit binary graymap; the affine map value -> gray level is
    recorded in a sidecar JSON next to the image.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    low, high = float(field.values.min()), float(field.values.max())
    if field.is_binary:
        low, high = -1.0, 1.0
    scale = 255.0 / (high - low) if high > low else 0.0
    gray = np.clip(np.rint((field.values - low) * scale), 0, 255).astype(np.uint8)

    # image rows run along y, top row is the largest y
    image = np.flipud(gray.T)
    with open(path, "wb") as handle:
        handle.write(f"P5\n{field.size} {field.size}\n255\n".encode("ascii"))
        handle.write(image.tobytes())

    write_json(path.with_suffix(".json"), {
        "min_value": low,
        "max_value": high,
        "scale": scale,
        "offset": -low * scale,
        "mapping": "gray = round((value - min_value) * scale)",
        "orientation": "rows are y descending, columns are x ascending",
        "kind": field.kind.value,
    })
    return path


def write_field(field: GridField, directory: Path, name: str) -> List[Path]:
    """CSV plus graymap for one field"""
    directory = Path(directory)
    return [
        write_field_csv(field, directory / f"{name}.csv"),
        write_field_pgm(field, directory / f"{name}.pgm"),
    ]


def write_rows_csv(rows: Iterable[Dict[str, Any]], path: Path, columns: Sequence[str]) -> Path:
    """Write dict rows with fixed columns; floats at full precision"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    def render(value: Any) -> str:
        if isinstance(value, (float, np.floating)):
            return FLOAT_FORMAT % value
        return "" if value is None else str(value)

    with open(path, "w", newline="") as handle:
        handle.write(",".join(columns) + "\n")
        for row in rows:
            handle.write(",".join(render(row.get(column)) for column in columns) + "\n")
    return path


def write_matrix_csv(matrix: np.ndarray, path: Path) -> Path:
    """Dense matrix, one row per line"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, np.atleast_2d(matrix), fmt=FLOAT_FORMAT, delimiter=",")
    return path


def write_observations(obs: ObservationSet, directory: Path) -> List[Path]:
    """Observation points and data as (x, y, value) plus dense Sigma"""
    directory = Path(directory)
    rows = [
        {"x": float(point[0]), "y": float(point[1]), "value": float(value)}
        for point, value in zip(obs.points, obs.y)
    ]
    return [
        write_rows_csv(rows, directory / "observations.csv", ["x", "y", "value"]),
        write_matrix_csv(obs.sigma, directory / "sigma.csv"),
    ]


def write_report_csv(report: Dict[str, Any], path: Path) -> Path:
    """Flat report as (parameter, value) rows"""
    rows = [{"parameter": key, "value": value} for key, value in report.items()]
    return write_rows_csv(rows, path, ["parameter", "value"])


def write_json(path: Path, payload: Dict[str, Any]) -> Path:
    """Pretty JSON with sorted keys so identical payloads give identical bytes"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True, default=_json_default)
        handle.write("\n")
    return path


def _json_default(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def remove_run_directory(directory: Path) -> dict:
    """
    Delete a (partial) run directory.

    Returns:
        Summary dict with file count and total bytes
    """
    directory = Path(directory)
    if not directory.exists():
        return {"directory": str(directory), "deleted_count": 0, "total_size_bytes": 0}

    files = [path for path in directory.rglob("*") if path.is_file()]
    total_size = sum(path.stat().st_size for path in files)

    shutil.rmtree(directory)
    logger.info("Removed run directory", directory=str(directory), files=len(files))

    return {
        "directory": str(directory),
        "deleted_count": len(files),
        "total_size_bytes": total_size,
    }
