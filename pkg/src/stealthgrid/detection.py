"""Likelihood-ratio detection of stealth attacks and its error exponent.

The operator decides between the nominal and attacked measurement laws
with a log likelihood-ratio test aggregated over n independent
measurement vectors.  The best achievable error exponent of that test
equals the KL divergence between the attacked and nominal laws, which is
exactly the detectability term of the stealth cost; the experiment here
measures the empirical exponent and reports that KL alongside for
comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gaussian import DerivedCovariances, gaussian_kl_marginals, logdet_psd

__all__ = [
    "DetectionExperiment",
    "ExponentPoint",
    "ExponentEstimate",
    "lrt_statistic",
    "calibrate_threshold",
    "run_detection_experiment",
    "error_exponent_estimate",
]

#: Observations drawn per vectorized chunk (keeps memory under ~100 MB).
_CHUNK_BUDGET = 4_000_000


@dataclass(frozen=True)
class DetectionExperiment:
    """One calibrated detection run with measured error rates."""

    n: int
    epsilon: float
    tau: float
    trials: int
    seed: int
    alpha_hat: float
    beta_hat: float


@dataclass(frozen=True)
class ExponentPoint:
    """Empirical error exponent at one block length n."""

    n: int
    tau: float
    beta_hat: float
    exponent: float
    radius: float  # one-standard-error radius on the exponent
    exceed_count: int  # raw count of clean aggregates beyond the threshold
    estimable: bool  # False when the raw count is zero


@dataclass(frozen=True)
class ExponentEstimate:
    """Exponent sequence plus the KL divergence it converges to."""

    points: tuple[ExponentPoint, ...]
    kl_marginals: float


class _LrtModel:
    """Precomputed quadratic form and constant of the log likelihood ratio."""

    def __init__(self, derived: DerivedCovariances):
        self.m = derived.m
        syy_inv = np.linalg.inv(derived.sigma_yy)
        syaya_inv = np.linalg.inv(derived.sigma_yaya)
        self.delta = syy_inv - syaya_inv
        self.const = 0.5 * (logdet_psd(derived.sigma_yy) - logdet_psd(derived.sigma_yaya))
        self.chol_h0 = np.linalg.cholesky(derived.sigma_yy)
        self.chol_h1 = np.linalg.cholesky(derived.sigma_yaya)

    def log_lrt(self, y: np.ndarray) -> np.ndarray:
        """Log likelihood ratio of each observation (rows of y)."""
        y = np.atleast_2d(np.asarray(y, dtype=float))
        quad = np.einsum("im,mk,ik->i", y, self.delta, y)
        return self.const + 0.5 * quad

    def aggregate_samples(
        self, attacked: bool, n: int, trials: int, rng: np.random.Generator
    ) -> np.ndarray:
        """Sum of n per-observation log-LRTs for each of `trials` blocks."""
        chol = self.chol_h1 if attacked else self.chol_h0
        out = np.empty(trials)
        step = max(1, _CHUNK_BUDGET // (n * self.m))
        for start in range(0, trials, step):
            stop = min(trials, start + step)
            y = rng.standard_normal((stop - start, n, self.m)) @ chol.T
            quad = np.einsum("tnm,mk,tnk->tn", y, self.delta, y)
            out[start:stop] = n * self.const + 0.5 * quad.sum(axis=1)
        return out


def lrt_statistic(y: np.ndarray, derived: DerivedCovariances) -> float:
    """Log likelihood ratio of one measurement vector.

    log L(y) = 1/2 [ log(|S_yy| / |S_yaya|) + y^T (S_yy^-1 - S_yaya^-1) y ],
    positive values favor the attacked hypothesis.
    """
    return float(_LrtModel(derived).log_lrt(y)[0])


def calibrate_threshold(
    derived: DerivedCovariances, n: int, epsilon: float, trials: int, seed: int
) -> float:
    """Decision threshold meeting a false-alarm budget on clean data.

    Returns the empirical (1 - epsilon)-quantile of the n-observation
    aggregated log-LRT under the nominal law, so deciding "attack" above
    the threshold has Type I rate about epsilon.
    """
    if not 0.0 < epsilon < 0.5:
        raise ValueError(f"epsilon must lie in (0, 1/2), got {epsilon}")
    if trials < 50 / epsilon:
        raise ValueError(
            f"need at least {math.ceil(50 / epsilon)} trials to place the "
            f"(1-{epsilon})-quantile, got {trials}"
        )
    model = _LrtModel(derived)
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0)))
    samples = model.aggregate_samples(attacked=False, n=n, trials=trials, rng=rng)
    return float(np.quantile(samples, 1.0 - epsilon))


def run_detection_experiment(
    derived: DerivedCovariances, n: int, epsilon: float, trials: int, seed: int
) -> DetectionExperiment:
    """Calibrate a threshold, then measure both error rates on fresh data."""
    tau = calibrate_threshold(derived, n, epsilon, trials, seed)
    model = _LrtModel(derived)
    rng_h0 = np.random.default_rng(np.random.SeedSequence((seed, 1)))
    rng_h1 = np.random.default_rng(np.random.SeedSequence((seed, 2)))
    clean = model.aggregate_samples(attacked=False, n=n, trials=trials, rng=rng_h0)
    attacked = model.aggregate_samples(attacked=True, n=n, trials=trials, rng=rng_h1)
    return DetectionExperiment(
        n=n,
        epsilon=epsilon,
        tau=tau,
        trials=trials,
        seed=seed,
        alpha_hat=float(np.mean(clean > tau)),
        beta_hat=float(np.mean(attacked <= tau)),
    )


def _log_normal_sf(z: float) -> float:
    """log of the standard normal upper tail, stable far into the tail."""
    if z < 30.0:
        return math.log(0.5 * math.erfc(z / math.sqrt(2.0)))
    # asymptotic: Q(z) ~ phi(z)/z * (1 - 1/z^2 + 3/z^4)
    return (
        -0.5 * z * z
        - math.log(z)
        - 0.5 * math.log(2.0 * math.pi)
        + math.log1p(-1.0 / z**2 + 3.0 / z**4)
    )


def error_exponent_estimate(
    derived: DerivedCovariances,
    n_grid,
    epsilon: float = 0.05,
    trials: int = 100_000,
    seed: int = 0,
    tail: str = "normal",
) -> ExponentEstimate:
    """Empirical error exponent -(1/n) log beta_n over a grid of block lengths.

    For each n the threshold is placed at the empirical epsilon-quantile of
    the aggregated log-LRT under the attacked law, which caps the
    attack-side error at epsilon; beta_n is then the probability that a
    clean block still lands beyond the threshold.  Held to that constraint,
    the exponent converges (from below) to the KL divergence between the
    attacked and nominal laws, returned as ``kl_marginals``.

    beta_n decays exponentially, so raw frequencies die out once
    n * KL exceeds about log(trials).  The default ``tail="normal"``
    evaluates the tail of the aggregate statistic from its fitted Gaussian
    (the aggregate is a sum of n i.i.d. terms), which stays usable at
    block lengths where counting fails; ``tail="empirical"`` reports the
    raw frequency and flags zero-count points as unestimable.
    """
    if tail not in ("normal", "empirical"):
        raise ValueError(f"tail must be 'normal' or 'empirical', got {tail!r}")
    if not 0.0 < epsilon < 0.5:
        raise ValueError(f"epsilon must lie in (0, 1/2), got {epsilon}")
    model = _LrtModel(derived)
    points = []
    for grid_index, n in enumerate(n_grid):
        n = int(n)
        rng_h1 = np.random.default_rng(np.random.SeedSequence((seed, grid_index, 1)))
        rng_h0 = np.random.default_rng(np.random.SeedSequence((seed, grid_index, 0)))
        attacked = model.aggregate_samples(attacked=True, n=n, trials=trials, rng=rng_h1)
        clean = model.aggregate_samples(attacked=False, n=n, trials=trials, rng=rng_h0)
        tau = float(np.quantile(attacked, epsilon))
        exceed = int(np.count_nonzero(clean >= tau))

        m0 = float(np.mean(clean))
        s0 = float(np.std(clean, ddof=1)) if trials > 1 else 0.0
        if tail == "empirical":
            beta = exceed / trials
            estimable = exceed > 0
            log_beta = math.log(beta) if estimable else -math.inf
            radius = (
                math.sqrt(beta * (1.0 - beta) / trials) / (beta * n) if estimable else math.inf
            )
        else:
            if s0 == 0.0:
                beta = 1.0 if tau <= m0 else 0.0
                log_beta = 0.0 if tau <= m0 else -math.inf
                estimable = tau <= m0
                radius = 0.0
            else:
                z = (tau - m0) / s0
                log_beta = _log_normal_sf(z)
                beta = math.exp(log_beta)
                estimable = True
                # delta method through the quantile and the fitted moments
                m1 = float(np.mean(attacked))
                s1 = float(np.std(attacked, ddof=1))
                density = math.exp(-0.5 * ((tau - m1) / s1) ** 2) / (
                    s1 * math.sqrt(2.0 * math.pi)
                )
                var_tau = epsilon * (1.0 - epsilon) / (trials * density**2)
                dz = math.sqrt(var_tau + s0**2 / trials) / s0
                hazard = math.exp(-0.5 * z * z - log_beta) / math.sqrt(2.0 * math.pi)
                radius = hazard * dz / n
        exponent = -log_beta / n if estimable else math.inf
        points.append(
            ExponentPoint(
                n=n,
                tau=tau,
                beta_hat=beta,
                exponent=exponent,
                radius=radius,
                exceed_count=exceed,
                estimable=estimable,
            )
        )
    return ExponentEstimate(points=tuple(points), kl_marginals=gaussian_kl_marginals(derived))
