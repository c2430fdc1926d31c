import csv
import json
import logging
import warnings
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from compbcp.errors import ConfigurationError

logger = logging.getLogger(__name__)


class JSONLoader:
    def __init__(self, file_path: Path | str | None = None):
        self.file_path = Path(file_path) if file_path else None
        self.data: Any = None

    def load(self) -> Any:
        if not self.file_path:
            raise ValueError("File path is not specified.")
        if not self.file_path.is_file():
            raise FileNotFoundError(f"File not found: {self.file_path}")
        try:
            with self.file_path.open("r", encoding="utf-8") as f:
                self.data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"Malformed JSON in {self.file_path}: {e}") from e
        return self.data

    def save(self, data: Any, file_path: Path | str | None = None) -> Path:
        path = Path(file_path) if file_path else self.file_path
        if not path:
            raise ValueError("File path is not specified.")
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as f:
            json.dump(data, f, ensure_ascii=False, indent=2, sort_keys=True, default=_json_default)
            f.write("\n")
        return path


class YAMLLoader(JSONLoader):
    def load(self) -> Any:
        if not self.file_path:
            raise ValueError("File path is not specified.")
        if not self.file_path.is_file():
            raise FileNotFoundError(f"File not found: {self.file_path}")
        try:
            with self.file_path.open("r", encoding="utf-8") as f:
                self.data = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ConfigurationError(f"Malformed YAML in {self.file_path}: {e}") from e
        if not isinstance(self.data, dict):
            raise ConfigurationError(f"{self.file_path} must hold a mapping at the top level")
        return self.data


def _json_default(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, (set, frozenset)):
        return sorted(value)
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def format_float(value: float) -> str:
    """Shortest round-trip representation, independent of locale."""
    return repr(float(value))


def _parse_field(field: str) -> float:
    return float(field) if field.strip() else np.nan


def read_matrix_csv(path: Path | str) -> np.ndarray:
    """
    Read a headerless numeric CSV; empty fields become NaN.

    Raises:
        FileNotFoundError: If the file does not exist.
        ConfigurationError: If a field is not a number or rows are ragged.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"File not found: {path}")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            matrix = np.loadtxt(path, delimiter=",", ndmin=2, converters=_parse_field, encoding="utf-8")
    except ValueError as e:
        raise ConfigurationError(f"{path}: {e}") from e
    if matrix.size == 0:
        raise ConfigurationError(f"{path} is empty")
    return matrix


def read_vector_csv(path: Path | str) -> np.ndarray:
    matrix = read_matrix_csv(path)
    if matrix.shape[1] != 1 and matrix.shape[0] != 1:
        raise ConfigurationError(f"{path} must hold a single column or row, got shape {matrix.shape}")
    return matrix.ravel()


def write_matrix_csv(matrix: np.ndarray, path: Path | str) -> Path:
    """Write a headerless CSV; NaN entries are written as empty fields."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cells = [["" if np.isnan(v) else format_float(v) for v in row] for row in np.atleast_2d(matrix)]
    np.savetxt(path, np.array(cells, dtype=object), fmt="%s", delimiter=",", encoding="utf-8")
    return path


def write_records_csv(records: list[dict[str, Any]], columns: list[str], path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for record in records:
            writer.writerow([format_float(v) if isinstance(v, float) else v for v in (record[c] for c in columns)])
    return path
