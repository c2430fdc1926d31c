import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from compbcp.errors import ContractError, InvariantBreach, ParameterError
from compbcp.io.loaders import JSONLoader, read_matrix_csv, write_matrix_csv

logger = logging.getLogger(__name__)

COMPUTED = "computed"
SCREENED = "screened"
DIAGONAL = "skipped-diagonal"
UNSET = "unset"
STATUSES = (COMPUTED, SCREENED, DIAGONAL, UNSET)

MATRIX_FILE = "pvalues.csv"
SIDECAR_FILE = "pvalues.json"
LATTICE_TOL = 1e-9


@dataclass(frozen=True)
class SpeedupConfig:
    """
    Screening shortcuts for the base p-value matrix.

    Attributes:
        lasso_screen: Force P_ij = 1 when one all-data CV lasso gives both i
            and j a zero coefficient.
        column_early_stop: Walk each column in ascending row order and screen
            the rest of it once ``c_col`` settled entries exceed ``tau_col``.
        tau_col: Early-stop threshold.
        c_col: Early-stop count; None means floor(d / 2) for a d-column matrix.
        adaptive_resampling: Look at the first ceil(f K) resamples and screen
            the entry if that interim p-value exceeds ``tau_p``.
        initial_fraction: The fraction f. Resamples are always drawn in the two
            blocks it defines, so screened and unscreened runs agree on every
            entry they both compute.
        tau_p: Abandon threshold for the interim p-value.
    """

    lasso_screen: bool = False
    column_early_stop: bool = False
    tau_col: float = 0.1
    c_col: int | None = None
    adaptive_resampling: bool = False
    initial_fraction: float = 0.1
    tau_p: float = 0.1

    def __post_init__(self):
        if not 0 < self.initial_fraction <= 1:
            raise ParameterError(f"initial_fraction must be in (0, 1], got {self.initial_fraction}")
        for name in ("tau_col", "tau_p"):
            value = getattr(self, name)
            if not 0 < value < 1:
                raise ParameterError(f"{name} must be in (0, 1), got {value}")
        if self.c_col is not None and self.c_col < 1:
            raise ParameterError(f"c_col must be >= 1, got {self.c_col}")

    @classmethod
    def none(cls) -> "SpeedupConfig":
        return cls()

    @classmethod
    def all(cls, **overrides) -> "SpeedupConfig":
        return cls(lasso_screen=True, column_early_stop=True, adaptive_resampling=True, **overrides)

    @classmethod
    def parse(cls, text: str | None) -> "SpeedupConfig":
        """
        Parse a comma list such as ``lasso,early-stop`` or the words ``all`` / ``none``.
        """
        if not text or text.strip().lower() == "none":
            return cls()
        names = {part.strip().lower() for part in text.split(",") if part.strip()}
        if names == {"all"}:
            return cls.all()
        aliases = {
            "lasso": "lasso_screen",
            "lasso-screen": "lasso_screen",
            "early": "column_early_stop",
            "early-stop": "column_early_stop",
            "column-early-stop": "column_early_stop",
            "adaptive": "adaptive_resampling",
            "adaptive-resampling": "adaptive_resampling",
        }
        unknown = names - aliases.keys()
        if unknown:
            raise ParameterError(f"Unknown speedups {sorted(unknown)}; expected some of {sorted(aliases)} or all/none")
        return cls(**{aliases[name]: True for name in names})

    @property
    def any(self) -> bool:
        return self.lasso_screen or self.column_early_stop or self.adaptive_resampling

    def early_stop_count(self, d: int) -> int:
        return self.c_col if self.c_col is not None else max(d // 2, 1)

    def initial_resamples(self, K: int) -> int:
        return min(K, int(np.ceil(self.initial_fraction * K)))

    def to_dict(self) -> dict[str, Any]:
        return dict(self.__dict__)


@dataclass
class PValueMatrix:
    """
    Square matrix of bivariate base p-values over the columns ``labels``.

    ``values[a, b]`` is P_{labels[a], labels[b]}: the test of the pair with
    column ``labels[b]`` as the column of its partial conjunction. The
    diagonal is NaN.
    """

    values: np.ndarray
    status: np.ndarray
    resamples: np.ndarray
    labels: np.ndarray
    seed: int | None = None
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        d = self.values.shape[0]
        if self.values.shape != (d, d):
            raise ContractError(f"A p-value matrix must be square, got shape {self.values.shape}")
        self.status = np.asarray(self.status, dtype=object)
        self.resamples = np.asarray(self.resamples, dtype=np.int64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.labels.shape != (d,):
            raise ContractError(f"Need {d} labels, got {self.labels.shape}")

    @classmethod
    def empty(cls, labels, seed: int | None = None) -> "PValueMatrix":
        labels = np.asarray(labels, dtype=np.int64)
        d = labels.size
        status = np.full((d, d), UNSET, dtype=object)
        np.fill_diagonal(status, DIAGONAL)
        return cls(np.full((d, d), np.nan), status, np.zeros((d, d), dtype=np.int64), labels, seed)

    @classmethod
    def from_values(cls, values, labels=None) -> "PValueMatrix":
        """Wrap a plain array of base p-values; off-diagonal entries count as computed."""
        values = np.array(values, dtype=float)
        d = values.shape[0]
        labels = np.arange(d) if labels is None else labels
        matrix = cls.empty(labels)
        off = ~np.eye(d, dtype=bool)
        matrix.values[off] = values[off]
        matrix.status[off] = COMPUTED
        return matrix

    @property
    def size(self) -> int:
        return self.values.shape[0]

    def position(self, label: int) -> int:
        hits = np.flatnonzero(self.labels == label)
        if hits.size == 0:
            raise ContractError(f"Column {label} is not part of this matrix")
        return int(hits[0])

    def column(self, j: int) -> np.ndarray:
        """Off-diagonal entries of column position j, in row order."""
        return np.delete(self.values[:, j], j)

    def count(self, status: str) -> int:
        return int(np.sum(self.status == status))

    def submatrix(self, positions) -> "PValueMatrix":
        positions = np.asarray(positions, dtype=np.int64)
        grid = np.ix_(positions, positions)
        return PValueMatrix(
            self.values[grid].copy(),
            self.status[grid].copy(),
            self.resamples[grid].copy(),
            self.labels[positions].copy(),
            self.seed,
            dict(self.meta),
        )

    def require_complete(self) -> None:
        """Raise ContractError if any off-diagonal entry was never filled."""
        if self.count(UNSET):
            rows, cols = np.nonzero(self.status == UNSET)
            raise ContractError(f"{rows.size} off-diagonal entries are unset, first at ({rows[0]}, {cols[0]})")

    def check_lattice(self) -> None:
        """
        Every computed entry is (1 + c) / (K' + 1) for its resample count K',
        and every screened entry is exactly 1.
        """
        computed = (self.status == COMPUTED) & (self.resamples > 0)
        scaled = self.values[computed] * (self.resamples[computed] + 1)
        off_lattice = np.abs(scaled - np.rint(scaled)) > LATTICE_TOL * (self.resamples[computed] + 1)
        if np.any(off_lattice) or np.any(np.rint(scaled) < 1):
            raise InvariantBreach("A computed p-value is not on the (1 + c) / (K + 1) lattice")
        if np.any(self.values[self.status == SCREENED] != 1.0):
            raise InvariantBreach("A screened entry differs from 1")

    def sidecar(self) -> dict[str, Any]:
        return {
            "labels": self.labels.tolist(),
            "seed": self.seed,
            "status": self.status.tolist(),
            "resamples": self.resamples.tolist(),
            "meta": self.meta,
        }

    def save(self, directory: Path | str) -> Path:
        directory = Path(directory)
        write_matrix_csv(self.values, directory / MATRIX_FILE)
        JSONLoader(directory / SIDECAR_FILE).save(self.sidecar())
        logger.info(f"Saved {self.size}x{self.size} p-value matrix to {directory}")
        return directory

    @classmethod
    def load(cls, path: Path | str) -> "PValueMatrix":
        """
        Load a matrix from a directory written by ``save`` or from a bare CSV.

        Without a JSON sidecar every off-diagonal entry is taken as computed.
        """
        path = Path(path)
        csv_path = path / MATRIX_FILE if path.is_dir() else path
        values = read_matrix_csv(csv_path)
        d = values.shape[0]
        if values.shape != (d, d):
            raise ContractError(f"{csv_path} must hold a square matrix, got shape {values.shape}")
        sidecar_path = csv_path.with_name(SIDECAR_FILE)
        if not sidecar_path.is_file():
            return cls.from_values(values)
        side = JSONLoader(sidecar_path).load()
        return cls(
            values,
            np.array(side["status"], dtype=object),
            np.array(side["resamples"], dtype=np.int64),
            np.array(side["labels"], dtype=np.int64),
            side.get("seed"),
            side.get("meta", {}),
        )
