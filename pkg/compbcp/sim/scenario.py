"""Simulation scenarios and their named presets."""

import logging
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from compbcp.dcrt.matrix import SpeedupConfig
from compbcp.errors import ConfigurationError, ParameterError
from compbcp.models.covariates import CovariateModel, Transform, model_from_dict, toeplitz_covariance
from compbcp.sim.methods import MethodSpec, parse_method

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SimScenario:
    """
    One simulation design.

    Attributes:
        name: Label written into outputs.
        model: Covariate law of the rows.
        n: Rows per replicate.
        s: Number of non-null coefficients.
        snr: Grid of signal strengths. Non-null coefficients are SNR * z with
            z ~ N(0, 1), so each replicate reuses its draws across the grid.
        reps: Replicates per grid value.
        K: Resamples per dCRT.
        methods: Method names such as ``BCP(p/2)-BH`` or ``LOO-Holm``.
        alpha_fdr: Level of the BH-type procedures.
        alpha_fwer: Level of the Holm-type procedures.
        alpha_single: Level of single tests.
        transform: Response transform; defaults to the model's.
        combiner: PCH combiner for single tests and Holm.
        speedups: Screening shortcuts for the base p-value matrix.
        test_coefficients: Single-test design; when set, the grid holds the
            coefficient of one tested column and the other s - 1 non-nulls
            are N(0, 1).
        dense_fraction: Fraction of columns, densest first, forming the
            conditioning set D for ``@dense`` methods.
        resample_fit: Draw resamples from a Dirichlet fitted to each
            replicate instead of the true law.
    """

    name: str
    model: CovariateModel
    n: int
    s: int
    snr: tuple[float, ...]
    reps: int
    K: int
    methods: tuple[str, ...]
    alpha_fdr: float = 0.1
    alpha_fwer: float = 0.1
    alpha_single: float = 0.05
    transform: Transform | None = None
    combiner: str = "simes"
    speedups: SpeedupConfig = field(default_factory=SpeedupConfig)
    test_coefficients: bool = False
    dense_fraction: float | None = None
    resample_fit: bool = False
    folds: int = 5

    def __post_init__(self):
        object.__setattr__(self, "snr", tuple(float(v) for v in self.snr))
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.n < 2:
            raise ParameterError(f"n must be >= 2, got {self.n}")
        if not 0 <= self.s < self.p:
            raise ParameterError(f"Need 0 <= s < p, got s={self.s}, p={self.p}")
        if self.reps < 1 or self.K < 1:
            raise ParameterError("reps and K must be >= 1")
        if not self.snr:
            raise ParameterError("The SNR grid is empty")
        if self.dense_fraction is not None and not 0 < self.dense_fraction <= 1:
            raise ParameterError(f"dense_fraction must be in (0, 1], got {self.dense_fraction}")
        if self.resample_fit and self.model.family != "dirichlet":
            raise ParameterError("Fitted resampling is only available for Dirichlet covariates")
        specs = self.method_specs()
        if any(spec.s_bar_token == "p/2" for spec in specs) and not self.s < self.p // 2:
            raise ParameterError(f"s_bar = p/2 needs s < p/2, got s={self.s}, p={self.p}")
        if any(spec.dense for spec in specs) and self.dense_fraction is None:
            raise ParameterError("Methods marked @dense need dense_fraction")
        if self.model.is_sum_constrained and any(spec.family == "Univariate" for spec in specs):
            raise ConfigurationError("Univariate tests are degenerate for sum-constrained covariates; use LOO or BCP")

    @property
    def p(self) -> int:
        return self.model.p

    @property
    def response_transform(self) -> Transform:
        return self.transform or self.model.default_transform

    def method_specs(self) -> list[MethodSpec]:
        return [parse_method(name) for name in self.methods]

    def dense_size(self) -> int:
        if self.dense_fraction is None:
            return self.p
        return max(3, int(round(self.dense_fraction * self.p)))

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "model": self.model.to_dict(),
            "n": self.n,
            "s": self.s,
            "snr": list(self.snr),
            "reps": self.reps,
            "K": self.K,
            "methods": list(self.methods),
            "alpha_fdr": self.alpha_fdr,
            "alpha_fwer": self.alpha_fwer,
            "alpha_single": self.alpha_single,
            "transform": self.response_transform,
            "combiner": self.combiner,
            "speedups": self.speedups.to_dict(),
            "test_coefficients": self.test_coefficients,
            "dense_fraction": self.dense_fraction,
            "resample_fit": self.resample_fit,
            "folds": self.folds,
        }


def sparse_dm_alpha(p: int) -> np.ndarray:
    """alpha_j = 1 / (1 + exp((j - p/2) / (p/20))) for j = 1..p; density falls with j."""
    j = np.arange(1, p + 1)
    return 1.0 / (1.0 + np.exp((j - p / 2) / (p / 20)))


def densest_columns(X: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k columns with the largest nonzero fraction, ties by index, sorted."""
    X = np.asarray(X)
    if not 1 <= k <= X.shape[1]:
        raise ParameterError(f"k must be in [1, {X.shape[1]}], got {k}")
    density = (X != 0).mean(axis=0)
    order = np.lexsort((np.arange(X.shape[1]), -density))
    return np.sort(order[:k])


COMPOSITIONAL_METHODS = (
    "BCP(p-1)",
    "BCP(p/2)",
    "BCP(s+1)",
    "BCP(p/2)-BH",
    "BCP(s+1)-BH",
    "BCP(p/2)-Holm",
    "BCP(s+1)-Holm",
    "BCP(p/2)-PlainHolm",
    "LOO",
    "LOO-BH",
    "LOO-Holm",
)
GAUSSIAN_METHODS = (
    "BCP(p-1)",
    "BCP(p/2)",
    "BCP(s+1)",
    "BCP(p/2)-BH",
    "BCP(s+1)-BH",
    "BCP(p/2)-Holm",
    "BCP(s+1)-Holm",
    "Univariate",
    "Univariate-BH",
    "Univariate-Holm",
)
SPARSE_METHODS = (
    "BCP(s+1)",
    "BCP(s+1)@dense",
    "BCP(p/4)-BH",
    "BCP(p/4)-BH@dense",
    "BCP(s+1)-BH",
    "BCP(s+1)-BH@dense",
    "BCP(s+1)-Holm",
    "BCP(s+1)-Holm@dense",
)
SINGLE_METHODS = ("BCP(p-1)", "BCP(p/2)", "BCP(s+1)", "LOO")

DESK_SNR = (0.5, 1.0, 2.0)
FULL_SNR = (0.25, 0.5, 1.0, 1.5, 2.0)


def _dirichlet(p: int) -> CovariateModel:
    return CovariateModel.dirichlet(np.full(p, 2.0))


def _logistic_normal(p: int) -> CovariateModel:
    return CovariateModel.logistic_normal(np.zeros(p), toeplitz_covariance(p, 0.6))


def _gaussian(p: int) -> CovariateModel:
    return CovariateModel.multivariate_normal(np.zeros(p), toeplitz_covariance(p, 0.6))


def _sparse_dm(p: int, trials: int) -> CovariateModel:
    return CovariateModel.dirichlet_multinomial(sparse_dm_alpha(p), trials)


def _build_presets() -> dict[str, SimScenario]:
    fast = SpeedupConfig.all()
    desk = dict(n=100, s=3, snr=DESK_SNR, reps=200, K=500, speedups=fast)
    full = dict(n=100, s=10, snr=FULL_SNR, reps=200, K=1500, speedups=fast)
    presets = [
        SimScenario("dirichlet-desk", _dirichlet(20), methods=COMPOSITIONAL_METHODS, **desk),
        SimScenario("dirichlet-full", _dirichlet(100), methods=COMPOSITIONAL_METHODS, **full),
        SimScenario("logistic-normal-desk", _logistic_normal(20), methods=COMPOSITIONAL_METHODS, **desk),
        SimScenario("logistic-normal-full", _logistic_normal(100), methods=COMPOSITIONAL_METHODS, **full),
        SimScenario("mvn-desk", _gaussian(20), methods=GAUSSIAN_METHODS, **desk),
        SimScenario("mvn-full", _gaussian(100), methods=GAUSSIAN_METHODS, **full),
        SimScenario("dirichlet-robust", _dirichlet(20), methods=COMPOSITIONAL_METHODS, resample_fit=True, **desk),
        SimScenario(
            "dirichlet-single",
            _dirichlet(20),
            n=100,
            s=3,
            snr=(0.0, 0.5, 1.0, 2.0),
            reps=200,
            K=500,
            methods=SINGLE_METHODS,
            test_coefficients=True,
            speedups=fast,
        ),
        SimScenario(
            "dm-sparse-desk",
            _sparse_dm(30, 120),
            n=100,
            s=3,
            snr=(2.0,),
            reps=100,
            K=500,
            methods=SPARSE_METHODS,
            dense_fraction=2 / 3,
            speedups=fast,
        ),
        SimScenario(
            "dm-sparse-full",
            _sparse_dm(100, 200),
            n=100,
            s=10,
            snr=(1.0,),
            reps=200,
            K=1500,
            methods=SPARSE_METHODS,
            dense_fraction=0.5,
            speedups=fast,
        ),
    ]
    return {scenario.name: scenario for scenario in presets}


PRESETS = _build_presets()


def preset(name: str) -> SimScenario:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigurationError(f"Unknown preset {name!r}; available presets: {', '.join(sorted(PRESETS))}") from None


def scenario_from_dict(cfg: dict[str, Any]) -> SimScenario:
    """
    Scenario from a parsed config mapping: an optional ``preset`` name plus
    overrides. ``model`` takes the same shorthands as model files and
    ``speedups`` takes a comma list or a mapping of SpeedupConfig fields.
    """
    cfg = dict(cfg)
    base = preset(cfg.pop("preset")) if "preset" in cfg else None
    if "model" in cfg:
        cfg["model"] = model_from_dict(cfg["model"])
    if "speedups" in cfg:
        value = cfg["speedups"]
        cfg["speedups"] = SpeedupConfig(**value) if isinstance(value, dict) else SpeedupConfig.parse(value)
    for key in ("snr", "methods"):
        if key in cfg:
            cfg[key] = tuple(cfg[key])
    known = set(SimScenario.__dataclass_fields__)
    unknown = set(cfg) - known
    if unknown:
        raise ConfigurationError(f"Unknown scenario keys {sorted(unknown)}")
    try:
        if base is not None:
            return replace(base, **cfg)
        return SimScenario(**cfg)
    except TypeError as e:
        raise ConfigurationError(f"Incomplete scenario: {e}") from e
