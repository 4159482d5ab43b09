"""Learned attacks from training data and the ergodic cost Monte Carlo.

The attacker estimates the state covariance from K training realizations;
the mean-subtracted sample covariance of K Gaussian vectors is a scaled
Wishart matrix with K-1 degrees of freedom, which is what every downstream
bound consumes.  The ergodic cost averages the stealth cost of the
resulting learned attack over independent training-set draws.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .gaussian import AttackModel, StateCovariance, logdet_psd, symmetrize, _as_matrix

__all__ = [
    "TrainingConfig",
    "SampleCovariance",
    "ErgodicEstimate",
    "sample_covariance",
    "draw_sample_covariance",
    "learned_attack_covariance",
    "estimate_ergodic_cost",
    "trial_seed_sequence",
]

SAMPLERS = ("bartlett", "empirical")

_MAX_SEED = 2**64


@dataclass(frozen=True)
class TrainingConfig:
    """Size and reproducibility knobs of the training-data experiment."""

    k: int
    seed: int
    trials: int = 1000
    sampler: str = "bartlett"

    def __post_init__(self) -> None:
        if self.k < 2:
            raise ValueError(f"need at least 2 training samples, got k={self.k}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if not 0 <= self.seed < _MAX_SEED:
            raise ValueError("seed must be a 64-bit non-negative integer")
        if self.sampler not in SAMPLERS:
            raise ValueError(f"sampler must be one of {SAMPLERS}, got {self.sampler!r}")


@dataclass(frozen=True)
class SampleCovariance:
    """Sample covariance of the training data with its degrees of freedom."""

    s_xx: np.ndarray
    dof: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "s_xx", symmetrize(self.s_xx))
        if self.dof < 1:
            raise ValueError(f"degrees of freedom must be >= 1, got {self.dof}")

    @property
    def n(self) -> int:
        return int(self.s_xx.shape[0])


@dataclass(frozen=True)
class ErgodicEstimate:
    """Monte Carlo mean/stderr of the learned-attack cost at one K."""

    mean: float
    stderr: float
    trials: int
    k: int


def trial_seed_sequence(seed: int, trial: int) -> np.random.SeedSequence:
    """Per-trial seed derived by mixing (base seed, trial index).

    The mix is order-independent, so trial results do not depend on
    execution order or thread count.
    """
    return np.random.SeedSequence(entropy=(seed, trial))


def sample_covariance(samples: np.ndarray, subtract_mean: bool = True) -> SampleCovariance:
    """Sample covariance of row-wise observations with divisor K-1.

    ``subtract_mean=True`` (default) centers the data, matching a scaled
    Wishart law with K-1 degrees of freedom.  ``subtract_mean=False``
    evaluates the uncentered variant (sum of raw outer products over K-1).

    Parameters
    ----------
    samples:
        Array of shape (K, N), one observation per row.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    k = x.shape[0]
    if k < 2:
        raise ValueError(f"need at least 2 samples, got {k}")
    centered = x - x.mean(axis=0) if subtract_mean else x
    s = centered.T @ centered / (k - 1)
    return SampleCovariance(s_xx=s, dof=k - 1)


def _draw_bartlett(chol: np.ndarray, dof: int, rng: np.random.Generator) -> np.ndarray:
    """One draw of W/dof with W ~ Wishart(dof, C), C = chol @ chol.T.

    Uses the triangular Bartlett factor: chi distributions on the diagonal,
    standard normals below.  Requires dof >= dimension.
    """
    n = chol.shape[0]
    a = np.zeros((n, n))
    df = dof - np.arange(n)
    a[np.diag_indices(n)] = np.sqrt(rng.chisquare(df))
    if n > 1:
        idx = np.tril_indices(n, -1)
        a[idx] = rng.standard_normal(len(idx[0]))
    la = chol @ a
    return la @ la.T / dof


def _draw_empirical(chol: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Mean-subtracted sample covariance of k Gaussian draws N(0, chol chol^T)."""
    x = rng.standard_normal((k, chol.shape[0])) @ chol.T
    centered = x - x.mean(axis=0)
    return centered.T @ centered / (k - 1)


def draw_sample_covariance(
    sigma_xx,
    k: int,
    seed: int | np.random.SeedSequence,
    sampler: str = "bartlett",
) -> SampleCovariance:
    """Draw one sample covariance of K Gaussian state realizations.

    Both samplers realize the same law, (1/(K-1)) Wishart(K-1, S_xx): the
    ``empirical`` path draws K state vectors and centers them, the
    ``bartlett`` path draws the Wishart factor directly (cost independent
    of K, but it needs K-1 >= N).  Deterministic given (seed, sampler).
    """
    if sampler not in SAMPLERS:
        raise ValueError(f"sampler must be one of {SAMPLERS}, got {sampler!r}")
    if k < 2:
        raise ValueError(f"need at least 2 training samples, got k={k}")
    sxx = _as_matrix(sigma_xx)
    chol = np.linalg.cholesky(sxx)
    n = sxx.shape[0]
    if sampler == "bartlett" and k - 1 < n:
        raise ValueError(
            f"bartlett sampler needs k-1 >= N (got k-1={k - 1}, N={n}); "
            "use the empirical sampler for singular sample covariances"
        )
    rng = np.random.default_rng(seed)
    if sampler == "bartlett":
        s = _draw_bartlett(chol, k - 1, rng)
    else:
        s = _draw_empirical(chol, k, rng)
    return SampleCovariance(s_xx=s, dof=k - 1)


def learned_attack_covariance(h: np.ndarray, s: SampleCovariance) -> AttackModel:
    """Attack covariance built from a sample covariance: H S_xx H^T."""
    h = np.asarray(h, dtype=float)
    if h.shape[1] != s.n:
        raise ValueError(f"H has {h.shape[1]} columns but S_xx is {s.n}-dimensional")
    return AttackModel(sigma_aa=symmetrize(h @ s.s_xx @ h.T), kind="learned")


class _CostEvaluator:
    """Precomputed pieces of the stealth cost for repeated attack draws."""

    def __init__(self, h: np.ndarray, sigma_xx: np.ndarray, sigma: float):
        m = h.shape[0]
        syy = symmetrize(h @ sigma_xx @ h.T) + sigma**2 * np.eye(m)
        self.h = h
        self.sigma_sq = sigma**2
        self.eye = np.eye(m)
        self.syy_inv = np.linalg.inv(syy)
        self.logdet_syy = logdet_psd(syy)

    def cost_of_sample(self, s_xx: np.ndarray) -> float:
        attack = symmetrize(self.h @ s_xx @ self.h.T)
        shifted = attack + self.sigma_sq * self.eye
        return 0.5 * (
            float(np.vdot(self.syy_inv, attack)) - logdet_psd(shifted) + self.logdet_syy
        )


def estimate_ergodic_cost(
    h: np.ndarray,
    sigma_xx: StateCovariance,
    sigma: float,
    cfg: TrainingConfig,
    workers: int = 1,
) -> ErgodicEstimate:
    """Monte Carlo estimate of the expected learned-attack cost at one K.

    Each trial draws an independent sample covariance, builds the learned
    attack, and evaluates the stealth cost; the reported mean/stderr are
    taken over ``cfg.trials`` trials.  Trial i uses the seed mix
    (cfg.seed, i), so the estimate is reproducible bit-for-bit regardless
    of execution order or ``workers``.

    Parameters
    ----------
    workers:
        Number of threads evaluating trials; results are written into a
        trial-indexed array, keeping the reduction order fixed.
    """
    if sigma <= 0.0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    h = np.asarray(h, dtype=float)
    sxx = _as_matrix(sigma_xx)
    chol = np.linalg.cholesky(sxx)
    n = sxx.shape[0]
    if cfg.sampler == "bartlett" and cfg.k - 1 < n:
        raise ValueError(
            f"bartlett sampler needs k-1 >= N (got k-1={cfg.k - 1}, N={n})"
        )
    evaluator = _CostEvaluator(h, sxx, sigma)

    def run_trial(trial: int) -> float:
        rng = np.random.default_rng(trial_seed_sequence(cfg.seed, trial))
        if cfg.sampler == "bartlett":
            s = _draw_bartlett(chol, cfg.k - 1, rng)
        else:
            s = _draw_empirical(chol, cfg.k, rng)
        return evaluator.cost_of_sample(s)

    costs = np.empty(cfg.trials)
    if workers <= 1:
        for i in range(cfg.trials):
            costs[i] = run_trial(i)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for i, value in enumerate(pool.map(run_trial, range(cfg.trials))):
                costs[i] = value

    mean = float(np.mean(costs))
    stderr = float(np.std(costs, ddof=1) / np.sqrt(cfg.trials)) if cfg.trials > 1 else 0.0
    return ErgodicEstimate(mean=mean, stderr=stderr, trials=cfg.trials, k=cfg.k)
