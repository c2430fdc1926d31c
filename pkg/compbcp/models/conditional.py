"""Conditional resampling of covariate coordinates.

The central operation draws K resamples of a coordinate pair (X_i, X_j) for
every row, from the law of that pair given all the other coordinates of the
same row. For sum-constrained families the pair sum is fixed by the other
coordinates, so every draw only redistributes that sum between i and j.
"""

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from compbcp.errors import ConvergenceWarning, DomainError, ParameterError
from compbcp.models.covariates import CovariateModel, McmcConfig
from compbcp.rng import as_generator

logger = logging.getLogger(__name__)


@dataclass
class PairResample:
    """
    K conditional resamples of one coordinate pair.

    Attributes:
        pairs: Array of shape (K, n, 2); ``pairs[k, r]`` is the k-th resample
            of (x_i, x_j) for row r.
        exchangeable: True when the resamples are exchangeable with the
            observed pair but not independent (MCMC families).
        acceptance: Mean Metropolis acceptance rate, None for exact samplers.
        step: Per-row proposal scale of the frozen MCMC kernel, None for
            exact samplers.
        warnings: Diagnostics attached to this draw.
    """

    pairs: np.ndarray
    exchangeable: bool = False
    acceptance: float | None = None
    step: np.ndarray | None = None
    warnings: list[str] = field(default_factory=list)


def _check_pair(model: CovariateModel, i: int, j: int, K: int) -> None:
    if i == j:
        raise ParameterError(f"Pair indices must differ, got i = j = {i}")
    for idx in (i, j):
        if not 0 <= idx < model.p:
            raise ParameterError(f"Index {idx} out of range for dimension {model.p}")
    if K < 1:
        raise ParameterError(f"K must be >= 1, got {K}")


def gaussian_conditional(mu: np.ndarray, sigma: np.ndarray, X: np.ndarray, idx: list[int]) -> tuple[np.ndarray, np.ndarray]:
    """Mean (n x len(idx)) and covariance of X_idx given the remaining coordinates."""
    p = mu.size
    rest = np.setdiff1d(np.arange(p), idx)
    s_ab = sigma[np.ix_(idx, rest)]
    s_bb = sigma[np.ix_(rest, rest)]
    coef = np.linalg.lstsq(s_bb, s_ab.T, rcond=None)[0].T
    mean = mu[idx] + (X[:, rest] - mu[rest]) @ coef.T
    cov = sigma[np.ix_(idx, idx)] - coef @ s_ab.T
    cov = (cov + cov.T) / 2
    return mean, cov


def _gaussian_draws(mean: np.ndarray, cov: np.ndarray, K: int, rng: np.random.Generator) -> np.ndarray:
    eigval, eigvec = np.linalg.eigh(cov)
    root = eigvec * np.sqrt(np.clip(eigval, 0.0, None))
    noise = rng.standard_normal(size=(K, mean.shape[0], mean.shape[1]))
    return mean[None, :, :] + noise @ root.T


def _dirichlet_pair(model, X, i, j, K, rng) -> PairResample:
    total = X[:, i] + X[:, j]
    split = rng.beta(model.alpha[i], model.alpha[j], size=(K, X.shape[0]))
    first = split * total
    return PairResample(np.stack([first, total - first], axis=-1))


def _dirichlet_multinomial_pair(model, X, i, j, K, rng) -> PairResample:
    total = np.rint(X[:, i] + X[:, j]).astype(np.int64)
    split = rng.beta(model.alpha[i], model.alpha[j], size=(K, X.shape[0]))
    first = rng.binomial(total, split).astype(float)
    return PairResample(np.stack([first, total - first], axis=-1))


def _one_hot_pair(model, X, i, j, K, rng) -> PairResample:
    total = np.rint(X[:, i] + X[:, j])
    mass = model.pi[i] + model.pi[j]
    if mass == 0:
        if np.any(total > 0):
            raise DomainError(f"Levels {i} and {j} have zero probability but are observed")
        return PairResample(np.zeros((K, X.shape[0], 2)))
    first = (rng.random(size=(K, X.shape[0])) < model.pi[i] / mass) * total
    return PairResample(np.stack([first, total - first], axis=-1))


def _gaussian_pair(model, X, i, j, K, rng) -> PairResample:
    mean, cov = gaussian_conditional(model.mu, model.sigma, X, [i, j])
    return PairResample(_gaussian_draws(mean, cov, K, rng))


def logistic_normal_precision(model: CovariateModel) -> np.ndarray:
    """
    Precision of log(X) for a logistic-normal row, up to its null direction.

    With A = [I, -1] mapping log(X) to additive log-ratios, the density of X in
    logit coordinates of a pair split is proportional to
    exp(-0.5 (L - mu)' Q (L - mu)) with Q = A' (A Sigma A')^+ A and L = log X.
    """
    p = model.p
    A = np.hstack([np.eye(p - 1), -np.ones((p - 1, 1))])
    return A.T @ np.linalg.pinv(A @ model.sigma @ A.T) @ A


class _SplitTarget:
    """Log-density of u = logit(x_i / (x_i + x_j)) for every row at once."""

    def __init__(self, model: CovariateModel, X: np.ndarray, i: int, j: int):
        Q = logistic_normal_precision(model)
        d = np.log(X) - model.mu
        rest = np.setdiff1d(np.arange(model.p), [i, j])
        self.b_i = d[:, rest] @ Q[rest, i]
        self.b_j = d[:, rest] @ Q[rest, j]
        self.q_ii, self.q_jj, self.q_ij = Q[i, i], Q[j, j], Q[i, j]
        self.log_total = np.log(X[:, i] + X[:, j])
        self.mu_i, self.mu_j = model.mu[i], model.mu[j]

    def __call__(self, u: np.ndarray) -> np.ndarray:
        d_i = self.log_total - np.logaddexp(0.0, -u) - self.mu_i
        d_j = self.log_total - np.logaddexp(0.0, u) - self.mu_j
        quad = self.q_ii * d_i**2 + self.q_jj * d_j**2 + 2 * self.q_ij * d_i * d_j
        return -0.5 * quad - d_i * self.b_i - d_j * self.b_j


def _metropolis(target, u, logp, step, n_steps, rng):
    accepted = np.zeros_like(u)
    for _ in range(n_steps):
        proposal = u + step * rng.standard_normal(u.shape)
        logp_prop = target(proposal)
        accept = np.log(rng.random(u.shape)) < logp_prop - logp
        u = np.where(accept, proposal, u)
        logp = np.where(accept, logp_prop, logp)
        accepted += accept
    return u, logp, accepted


def _tune_step(target: _SplitTarget, start: np.ndarray, cfg: McmcConfig, rng) -> np.ndarray:
    """
    Per-row proposal scale from a pilot chain whose states are discarded.

    The pilot starts at ``start``, which must not depend on the observed
    split; the target itself only sees the other coordinates and the pair
    total. The frozen kernel is then the same for the observed state and for
    every resample, so the serial construction stays exchangeable.
    """
    step = np.full(start.shape, cfg.step)
    u, logp = start.copy(), target(start)
    for _ in range(cfg.burn_in // cfg.adapt_every):
        u, logp, accepted = _metropolis(target, u, logp, step, cfg.adapt_every, rng)
        rate = accepted / cfg.adapt_every
        step = np.where(rate < cfg.target_low, step * 0.7, np.where(rate > cfg.target_high, step * 1.3, step))
    return step


def _logistic_normal_pair(model, X, i, j, K, rng) -> PairResample:
    cfg: McmcConfig = model.mcmc
    total = X[:, i] + X[:, j]
    if np.any(X <= 0):
        raise DomainError("Logistic-normal rows must be strictly positive")
    target = _SplitTarget(model, X, i, j)
    u_obs = np.log(X[:, i]) - np.log(X[:, j])
    logp_obs = target(u_obs)

    step = _tune_step(target, np.full(u_obs.shape, model.mu[i] - model.mu[j]), cfg, rng)

    # Serial construction: the observed state sits at a uniform position m of
    # K + 1; the reversible chain is run backward m blocks and forward K - m.
    m = int(rng.integers(0, K + 1))
    states = []
    acc_total = np.zeros_like(u_obs)
    for n_blocks in (m, K - m):
        u, logp = u_obs.copy(), logp_obs.copy()
        for _ in range(n_blocks):
            u, logp, accepted = _metropolis(target, u, logp, step, cfg.thin, rng)
            acc_total += accepted
            states.append(u.copy())
    split = 1.0 / (1.0 + np.exp(-np.stack(states))) if states else np.empty((0, u_obs.size))
    order = rng.permutation(K)
    first = split[order] * total
    pairs = np.stack([first, total - first], axis=-1)

    acceptance = float(acc_total.mean() / (K * cfg.thin))
    notes = []
    if not cfg.warn_low <= acceptance <= cfg.warn_high:
        message = f"MCMC acceptance {acceptance:.3f} outside [{cfg.warn_low}, {cfg.warn_high}] for pair ({i}, {j})"
        notes.append(message)
        logger.warning(message)
        warnings.warn(message, ConvergenceWarning, stacklevel=3)
    return PairResample(pairs, exchangeable=True, acceptance=acceptance, step=step, warnings=notes)


_SAMPLERS = {
    "dirichlet": _dirichlet_pair,
    "dirichlet-multinomial": _dirichlet_multinomial_pair,
    "one-hot-factor": _one_hot_pair,
    "multivariate-normal": _gaussian_pair,
    "logistic-normal": _logistic_normal_pair,
}


def resample_pair(model: CovariateModel, X: np.ndarray, i: int, j: int, K: int, seed) -> PairResample:
    """
    Draw K conditional resamples of columns (i, j) for every row of ``X``.

    Args:
        model: Covariate distribution the rows were drawn from.
        X: ``n x p`` covariate matrix.
        i: First column of the pair.
        j: Second column of the pair.
        K: Number of resamples.
        seed: Integer seed or ``numpy.random.Generator``.

    Returns:
        PairResample: ``pairs`` has shape (K, n, 2).
    """
    _check_pair(model, i, j, K)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return _SAMPLERS[model.family](model, X, i, j, K, as_generator(seed))


def conditional_pair_sample(model: CovariateModel, x_row, i: int, j: int, K: int, seed) -> PairResample:
    """Single-row form of ``resample_pair``; ``pairs`` has shape (K, 2)."""
    draw = resample_pair(model, np.asarray(x_row, dtype=float)[None, :], i, j, K, seed)
    draw.pairs = draw.pairs[:, 0, :]
    return draw


def resample_coordinate(model: CovariateModel, X: np.ndarray, i: int, K: int, seed) -> np.ndarray:
    """
    K resamples of column i given all other columns, shape (K, n).

    Only defined for unconstrained (multivariate-normal) covariates: under a
    sum constraint the other columns determine column i exactly.
    """
    if model.is_sum_constrained:
        raise DomainError(f"Column {i} is a deterministic function of the others under {model.family}")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    mean, cov = gaussian_conditional(model.mu, model.sigma, X, [i])
    return _gaussian_draws(mean, cov, K, as_generator(seed))[..., 0]


def resample_single(model: CovariateModel, X: np.ndarray, i: int, drop: int, K: int, seed) -> np.ndarray:
    """
    K resamples of column i given every column except i and ``drop``, shape (K, n).

    With ``drop`` removed from the design the remaining columns are no longer
    sum-constrained; the dropped column absorbs the change in column i.
    """
    return resample_pair(model, X, i, drop, K, seed).pairs[..., 0]
