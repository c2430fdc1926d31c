"""Covariate distributions and row sampling.

A ``CovariateModel`` describes the law of one covariate row. It is the single
source of truth for sampling whole rows, for drawing conditional resamples of a
coordinate pair (see ``compbcp.models.conditional``) and for checking that an
observed matrix is compatible with the model's row constraint.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Literal

import numpy as np
from scipy.special import softmax

from compbcp.errors import ConstraintViolation, ParameterError
from compbcp.rng import as_generator

logger = logging.getLogger(__name__)

Family = Literal["dirichlet", "logistic-normal", "multivariate-normal", "dirichlet-multinomial", "one-hot-factor"]
RowConstraint = Literal["sum-one", "count-total", "none"]
Transform = Literal["log", "log1p", "identity"]

FAMILIES = ("dirichlet", "logistic-normal", "multivariate-normal", "dirichlet-multinomial", "one-hot-factor")

SUM_ONE_TOL = 1e-9
PSD_TOL = 1e-8
SIMPLEX_TOL = 1e-12


@dataclass(frozen=True)
class McmcConfig:
    """Random-walk Metropolis settings for the logistic-normal pair sampler."""

    burn_in: int = 500
    thin: int = 10
    step: float = 0.5
    adapt_every: int = 50
    target_low: float = 0.2
    target_high: float = 0.4
    warn_low: float = 0.05
    warn_high: float = 0.8

    def __post_init__(self):
        if self.burn_in < 0 or self.thin < 1 or self.adapt_every < 1:
            raise ParameterError(f"Invalid MCMC schedule: burn_in={self.burn_in}, thin={self.thin}")
        if self.step <= 0:
            raise ParameterError(f"MCMC step must be positive, got {self.step}")
        if not 0 < self.target_low < self.target_high < 1:
            raise ParameterError("MCMC acceptance band must satisfy 0 < low < high < 1")


def _as_vector(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ParameterError(f"{name} must be a non-empty vector, got shape {arr.shape}")
    return arr


def _check_covariance(sigma: np.ndarray, p: int) -> None:
    if sigma.shape != (p, p):
        raise ParameterError(f"Covariance must be {p}x{p}, got {sigma.shape}")
    if not np.allclose(sigma, sigma.T, atol=PSD_TOL):
        raise ParameterError("Covariance must be symmetric")
    min_eig = np.linalg.eigvalsh(sigma).min()
    if min_eig < -PSD_TOL:
        raise ParameterError(f"Covariance must be positive semi-definite, smallest eigenvalue {min_eig:.3e}")


@dataclass(frozen=True, eq=False)
class CovariateModel:
    family: Family
    alpha: np.ndarray | None = None
    mu: np.ndarray | None = None
    sigma: np.ndarray | None = None
    trials: int | None = None
    pi: np.ndarray | None = None
    mcmc: McmcConfig = field(default_factory=McmcConfig)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterError(f"Unknown family {self.family!r}; expected one of {FAMILIES}")

        if self.family in ("dirichlet", "dirichlet-multinomial"):
            if self.alpha is None:
                raise ParameterError(f"{self.family} needs a concentration vector alpha")
            alpha = _as_vector(self.alpha, "alpha")
            if not np.all(np.isfinite(alpha)) or np.any(alpha <= 0):
                raise ParameterError("Dirichlet concentration must be strictly positive")
            object.__setattr__(self, "alpha", alpha)
            if self.family == "dirichlet-multinomial":
                if self.trials is None or int(self.trials) != self.trials or self.trials < 1:
                    raise ParameterError(f"Trial count must be an integer >= 1, got {self.trials}")
                object.__setattr__(self, "trials", int(self.trials))

        elif self.family in ("logistic-normal", "multivariate-normal"):
            if self.mu is None or self.sigma is None:
                raise ParameterError(f"{self.family} needs mu and sigma")
            mu = _as_vector(self.mu, "mu")
            sigma = np.asarray(self.sigma, dtype=float)
            _check_covariance(sigma, mu.size)
            object.__setattr__(self, "mu", mu)
            object.__setattr__(self, "sigma", sigma)

        else:
            if self.pi is None:
                raise ParameterError("one-hot-factor needs a level-probability vector pi")
            pi = _as_vector(self.pi, "pi")
            if np.any(pi < 0) or abs(pi.sum() - 1.0) > SIMPLEX_TOL:
                raise ParameterError(f"Level probabilities must be nonnegative and sum to 1, got sum {pi.sum()!r}")
            object.__setattr__(self, "pi", pi)

    # --- constructors -------------------------------------------------

    @classmethod
    def dirichlet(cls, alpha) -> "CovariateModel":
        return cls("dirichlet", alpha=alpha)

    @classmethod
    def logistic_normal(cls, mu, sigma, mcmc: McmcConfig | None = None) -> "CovariateModel":
        return cls("logistic-normal", mu=mu, sigma=sigma, mcmc=mcmc or McmcConfig())

    @classmethod
    def multivariate_normal(cls, mu, sigma) -> "CovariateModel":
        return cls("multivariate-normal", mu=mu, sigma=sigma)

    @classmethod
    def dirichlet_multinomial(cls, alpha, trials: int) -> "CovariateModel":
        return cls("dirichlet-multinomial", alpha=alpha, trials=trials)

    @classmethod
    def one_hot_factor(cls, pi) -> "CovariateModel":
        return cls("one-hot-factor", pi=pi)

    # --- derived properties -------------------------------------------

    @property
    def p(self) -> int:
        for vec in (self.alpha, self.mu, self.pi):
            if vec is not None:
                return int(vec.size)
        raise AssertionError("unreachable")

    @property
    def constraint(self) -> RowConstraint:
        if self.family == "multivariate-normal":
            return "none"
        if self.family == "dirichlet-multinomial":
            return "count-total"
        return "sum-one"

    @property
    def default_transform(self) -> Transform:
        if self.family == "dirichlet-multinomial":
            return "log1p"
        if self.family in ("multivariate-normal", "one-hot-factor"):
            return "identity"
        return "log"

    @property
    def is_sum_constrained(self) -> bool:
        return self.constraint != "none"

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"family": self.family}
        for name in ("alpha", "mu", "sigma", "pi"):
            value = getattr(self, name)
            if value is not None:
                out[name] = np.asarray(value).tolist()
        if self.trials is not None:
            out["trials"] = self.trials
        if self.family == "logistic-normal":
            out["mcmc"] = self.mcmc.__dict__.copy()
        return out


@dataclass
class DataSet:
    X: np.ndarray
    y: np.ndarray
    row_constraint: RowConstraint = "none"
    total: int | None = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float).ravel()
        if self.X.ndim != 2:
            raise ParameterError(f"X must be a matrix, got shape {self.X.shape}")
        if self.X.shape[0] != self.y.size:
            raise ParameterError(f"X has {self.X.shape[0]} rows but y has {self.y.size} entries")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def validate(self, tol: float = SUM_ONE_TOL) -> None:
        check_rows(self.X, self.row_constraint, total=self.total, tol=tol)


def check_rows(X: np.ndarray, constraint: RowConstraint, total: int | None = None, tol: float = SUM_ONE_TOL) -> None:
    """
    Check every row of ``X`` against a row constraint.

    Args:
        X: Covariate matrix.
        constraint: ``sum-one``, ``count-total`` or ``none``.
        total: Required row total for ``count-total``; None accepts any
            common total.
        tol: Tolerance on the row sum for ``sum-one``.

    Raises:
        ConstraintViolation: Naming the first offending row.
    """
    if constraint == "none":
        return
    X = np.asarray(X, dtype=float)
    if constraint == "sum-one":
        negative = np.flatnonzero((X < 0).any(axis=1))
        if negative.size:
            raise ConstraintViolation(int(negative[0]), "negative entry in a compositional row")
        sums = X.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > tol)
        if bad.size:
            row = int(bad[0])
            raise ConstraintViolation(row, f"row sums to {sums[row]:.10g}, expected 1")
        return

    not_counts = np.flatnonzero(((X < 0) | (X != np.round(X))).any(axis=1))
    if not_counts.size:
        raise ConstraintViolation(int(not_counts[0]), "entries must be nonnegative integers")
    sums = X.sum(axis=1)
    expected = sums[0] if total is None else total
    bad = np.flatnonzero(sums != expected)
    if bad.size:
        row = int(bad[0])
        raise ConstraintViolation(row, f"row total {sums[row]:.0f} differs from {expected}")


def check_model_rows(X: np.ndarray, model: CovariateModel, tol: float = SUM_ONE_TOL) -> None:
    if X.shape[1] != model.p:
        raise ParameterError(f"X has {X.shape[1]} columns but the model has dimension {model.p}")
    check_rows(X, model.constraint, total=model.trials, tol=tol)
    if model.family == "one-hot-factor":
        not_indicator = np.flatnonzero(~np.isin(X, (0.0, 1.0)).all(axis=1))
        if not_indicator.size:
            raise ConstraintViolation(int(not_indicator[0]), "one-hot rows must be 0/1 indicators")


def log_gamma_draws(alpha: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """Log of Gamma(alpha_k, 1) draws, stable for tiny shapes.

    Uses G(a) = G(a + 1) * U**(1/a); the Gamma(a + 1) draw comes from numpy's
    Marsaglia-Tsang sampler, and working on the log scale keeps rows with very
    small shapes from underflowing to an all-zero row.
    """
    boosted = rng.standard_gamma(alpha + 1.0, size=(n, alpha.size))
    uniforms = rng.random(size=(n, alpha.size))
    return np.log(boosted) + np.log(uniforms) / alpha


def sample_dirichlet(alpha: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    return softmax(log_gamma_draws(alpha, n, rng), axis=1)


def sample_rows(model: CovariateModel, n: int, seed) -> np.ndarray:
    """
    Draw ``n`` i.i.d. covariate rows from ``model``.

    Args:
        model: Covariate distribution.
        n: Number of rows (>= 1).
        seed: Integer seed or a ``numpy.random.Generator``.

    Returns:
        np.ndarray: ``n x p`` matrix. Rows of sum-constrained families sum to
        1 (continuous) or to the trial count (Dirichlet-multinomial).
    """
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    rng = as_generator(seed)
    p = model.p

    if model.family == "dirichlet":
        return sample_dirichlet(model.alpha, n, rng)

    if model.family == "dirichlet-multinomial":
        theta = sample_dirichlet(model.alpha, n, rng)
        return rng.multinomial(model.trials, theta).astype(float)

    if model.family == "logistic-normal":
        z = rng.multivariate_normal(model.mu, model.sigma, size=n, method="eigh")
        return softmax(z, axis=1)

    if model.family == "multivariate-normal":
        return rng.multivariate_normal(model.mu, model.sigma, size=n, method="eigh")

    levels = rng.choice(p, size=n, p=model.pi)
    return np.eye(p)[levels]


def make_dataset(X: np.ndarray, y: np.ndarray, model: CovariateModel) -> DataSet:
    return DataSet(X=X, y=y, row_constraint=model.constraint, total=model.trials)


def apply_transform(Z: np.ndarray, transform: Transform) -> np.ndarray:
    if transform == "log":
        return np.log(Z)
    if transform == "log1p":
        return np.log1p(Z)
    if transform == "identity":
        return np.asarray(Z, dtype=float)
    raise ParameterError(f"Unknown transform {transform!r}")


def toeplitz_covariance(p: int, rho: float) -> np.ndarray:
    idx = np.arange(p)
    return rho ** np.abs(idx[:, None] - idx[None, :])


def model_from_dict(cfg: dict[str, Any]) -> CovariateModel:
    """
    Build a model from a parsed config section.

    Accepted shorthands: ``alpha: 2.0`` with ``p: 20`` for a constant vector,
    ``mu: 0`` with ``p``, and ``sigma: {toeplitz: 0.6}`` for
    ``Sigma_ij = 0.6**|i - j|``.
    """
    cfg = dict(cfg)
    family = cfg.pop("family", None)
    if family is None:
        raise ParameterError("Model config needs a 'family' key")
    p = cfg.pop("p", None)

    def vector(value, name):
        if np.isscalar(value):
            if p is None:
                raise ParameterError(f"Scalar {name} needs the dimension 'p'")
            return np.full(int(p), float(value))
        return np.asarray(value, dtype=float)

    kwargs: dict[str, Any] = {}
    if "alpha" in cfg:
        kwargs["alpha"] = vector(cfg.pop("alpha"), "alpha")
    if "mu" in cfg:
        kwargs["mu"] = vector(cfg.pop("mu"), "mu")
    if "pi" in cfg:
        kwargs["pi"] = np.asarray(cfg.pop("pi"), dtype=float)
    if "trials" in cfg:
        kwargs["trials"] = cfg.pop("trials")
    if "sigma" in cfg:
        sigma = cfg.pop("sigma")
        if isinstance(sigma, dict):
            dim = p if p is not None else (kwargs["mu"].size if "mu" in kwargs else None)
            if dim is None or "toeplitz" not in sigma:
                raise ParameterError("sigma shorthand must be {toeplitz: rho} together with p or mu")
            sigma = toeplitz_covariance(int(dim), float(sigma["toeplitz"]))
        kwargs["sigma"] = np.asarray(sigma, dtype=float)
    if "mcmc" in cfg:
        kwargs["mcmc"] = McmcConfig(**cfg.pop("mcmc"))
    if cfg:
        logger.warning(f"Ignoring unknown model keys: {sorted(cfg)}")
    return CovariateModel(family, **kwargs)
