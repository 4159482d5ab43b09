from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import stats

from stealthgrid import (
    SampleCovariance,
    StateCovariance,
    TrainingConfig,
    draw_sample_covariance,
    estimate_ergodic_cost,
    learned_attack_covariance,
    optimal_attack_covariance,
    sample_covariance,
    toeplitz_covariance,
)


# ---------------------------------------------------------------------------
# sample_covariance
# ---------------------------------------------------------------------------


def test_sample_covariance_two_points():
    s = sample_covariance(np.array([1.0, -1.0]))
    assert s.s_xx[0, 0] == pytest.approx(2.0)
    assert s.dof == 1


def test_sample_covariance_identical_samples_is_zero():
    s = sample_covariance(np.ones((5, 3)) * 2.7)
    np.testing.assert_allclose(s.s_xx, 0.0, atol=1e-14)


def test_sample_covariance_law_of_large_numbers():
    rng = np.random.default_rng(5)
    s = sample_covariance(rng.standard_normal(100_000))
    assert 0.97 <= s.s_xx[0, 0] <= 1.03


def test_sample_covariance_rejects_single_sample():
    with pytest.raises(ValueError, match="at least 2"):
        sample_covariance(np.array([1.0]))


def test_sample_covariance_uncentered_variant():
    x = np.array([1.0, 1.0, 1.0])
    centered = sample_covariance(x)
    raw = sample_covariance(x, subtract_mean=False)
    assert centered.s_xx[0, 0] == pytest.approx(0.0)
    assert raw.s_xx[0, 0] == pytest.approx(1.5)  # sum of squares over K-1


# ---------------------------------------------------------------------------
# draw_sample_covariance
# ---------------------------------------------------------------------------


def test_draw_scalar_matches_chi_square_moments():
    # (K-1) S ~ chi-square with d = K-1 dof, so E[S] = 1 with var 2/d
    d = 10
    draws = 100_000
    cov = StateCovariance(sigma_xx=np.array([[1.0]]))
    vals = np.empty(draws)
    for i in range(draws):
        vals[i] = draw_sample_covariance(
            cov, d + 1, seed=np.random.SeedSequence((99, i))
        ).s_xx[0, 0]
    tol = 3.0 * math.sqrt(2.0 / d) / math.sqrt(draws)
    assert abs(vals.mean() - 1.0) <= tol


def test_draw_is_entrywise_unbiased():
    cov = toeplitz_covariance(3, 0.5)
    draws = 10_000
    total = np.zeros((3, 3))
    totalsq = np.zeros((3, 3))
    for i in range(draws):
        s = draw_sample_covariance(cov, 20, seed=np.random.SeedSequence((4, i))).s_xx
        total += s
        totalsq += s**2
    mean = total / draws
    stderr = np.sqrt((totalsq / draws - mean**2) / draws)
    assert np.all(np.abs(mean - cov.sigma_xx) <= 3.0 * stderr)


def test_draw_same_seed_is_bit_identical():
    cov = toeplitz_covariance(4, 0.3)
    a = draw_sample_covariance(cov, 12, seed=77).s_xx
    b = draw_sample_covariance(cov, 12, seed=77).s_xx
    assert a.tobytes() == b.tobytes()


def test_draw_samplers_differ_for_same_seed_but_share_law():
    cov = StateCovariance(sigma_xx=np.array([[1.0]]))
    a = draw_sample_covariance(cov, 8, seed=1, sampler="bartlett").s_xx[0, 0]
    b = draw_sample_covariance(cov, 8, seed=1, sampler="empirical").s_xx[0, 0]
    assert a != b


def test_bartlett_requires_enough_dof():
    cov = toeplitz_covariance(5, 0.2)
    with pytest.raises(ValueError, match="k-1 >= N"):
        draw_sample_covariance(cov, 4, seed=0, sampler="bartlett")
    # the empirical path accepts the same K and yields a singular PSD matrix
    s = draw_sample_covariance(cov, 4, seed=0, sampler="empirical")
    assert np.linalg.eigvalsh(s.s_xx).min() >= -1e-12


def test_samplers_agree_in_distribution():
    # two-sample Kolmogorov-Smirnov on scalar draws must not reject at 1%
    cov = StateCovariance(sigma_xx=np.array([[1.0]]))
    draws = 10_000
    bartlett = np.empty(draws)
    empirical = np.empty(draws)
    for i in range(draws):
        bartlett[i] = draw_sample_covariance(
            cov, 15, seed=np.random.SeedSequence((21, i)), sampler="bartlett"
        ).s_xx[0, 0]
        empirical[i] = draw_sample_covariance(
            cov, 15, seed=np.random.SeedSequence((22, i)), sampler="empirical"
        ).s_xx[0, 0]
    assert stats.ks_2samp(bartlett, empirical).pvalue > 0.01


# ---------------------------------------------------------------------------
# learned_attack_covariance
# ---------------------------------------------------------------------------


def test_learned_with_true_covariance_equals_optimal(ieee30_h):
    cov = toeplitz_covariance(29, 0.5)
    s = SampleCovariance(s_xx=cov.sigma_xx, dof=10)
    learned = learned_attack_covariance(ieee30_h, s)
    optimal = optimal_attack_covariance(ieee30_h, cov)
    np.testing.assert_allclose(learned.sigma_aa, optimal.sigma_aa, atol=1e-12)
    assert learned.kind == "learned"


def test_learned_with_zero_sample_is_zero():
    s = sample_covariance(np.ones((3, 2)))
    learned = learned_attack_covariance(np.ones((4, 2)), s)
    np.testing.assert_allclose(learned.sigma_aa, 0.0, atol=1e-14)


def test_learned_scalar_arithmetic():
    s = SampleCovariance(s_xx=np.array([[3.0]]), dof=1)
    learned = learned_attack_covariance(np.array([[2.0]]), s)
    assert learned.sigma_aa[0, 0] == pytest.approx(12.0)


# ---------------------------------------------------------------------------
# estimate_ergodic_cost
# ---------------------------------------------------------------------------

SCALAR_H = np.array([[1.0]])
SCALAR_COV = StateCovariance(sigma_xx=np.array([[1.0]]))


def test_ergodic_large_k_approaches_optimal():
    cfg = TrainingConfig(k=10**6, seed=3, trials=200)
    est = estimate_ergodic_cost(SCALAR_H, SCALAR_COV, 1.0, cfg)
    assert abs(est.mean - 0.25) <= 3.0 * est.stderr + 1e-3


def test_ergodic_scalar_matches_independent_chi_square_oracle():
    cfg = TrainingConfig(k=101, seed=17, trials=100_000)
    est = estimate_ergodic_cost(SCALAR_H, SCALAR_COV, 1.0, cfg)
    # oracle: draw s ~ chi2_100/100 directly and average the scalar cost
    rng = np.random.default_rng(1234)
    s = rng.chisquare(100, size=100_000) / 100.0
    costs = 0.5 * (s / 2.0 - np.log(s + 1.0) + math.log(2.0))
    oracle_mean = costs.mean()
    oracle_stderr = costs.std(ddof=1) / math.sqrt(costs.size)
    combined = math.hypot(est.stderr, oracle_stderr)
    assert abs(est.mean - oracle_mean) <= 3.0 * combined
    assert est.mean == pytest.approx(0.2513, abs=3e-3)


def test_ergodic_mean_respects_optimality():
    cfg = TrainingConfig(k=30, seed=5, trials=2000)
    est = estimate_ergodic_cost(SCALAR_H, SCALAR_COV, 1.0, cfg)
    assert est.mean + 3.0 * est.stderr >= 0.25 - 1e-9


def test_ergodic_reproducible_across_workers(ieee30_h):
    cov = toeplitz_covariance(29, 0.8)
    cfg = TrainingConfig(k=60, seed=9, trials=64)
    serial = estimate_ergodic_cost(ieee30_h, cov, 2.0, cfg, workers=1)
    threaded = estimate_ergodic_cost(ieee30_h, cov, 2.0, cfg, workers=4)
    assert serial.mean == threaded.mean
    assert serial.stderr == threaded.stderr


def test_ergodic_empirical_sampler_consistent():
    cfg = TrainingConfig(k=101, seed=31, trials=4000, sampler="empirical")
    est_emp = estimate_ergodic_cost(SCALAR_H, SCALAR_COV, 1.0, cfg)
    cfg_b = TrainingConfig(k=101, seed=32, trials=4000, sampler="bartlett")
    est_bar = estimate_ergodic_cost(SCALAR_H, SCALAR_COV, 1.0, cfg_b)
    combined = math.hypot(est_emp.stderr, est_bar.stderr)
    assert abs(est_emp.mean - est_bar.mean) <= 4.0 * combined


def test_ergodic_monotone_learning_trend(ieee30_h):
    cov = toeplitz_covariance(29, 0.8)
    from stealthgrid import sigma_from_snr

    sigma = sigma_from_snr(ieee30_h, cov, 20.0)
    results = [
        estimate_ergodic_cost(
            ieee30_h, cov, sigma, TrainingConfig(k=k, seed=41, trials=400)
        )
        for k in (50, 500, 5000)
    ]
    for small_k, large_k in zip(results, results[1:]):
        separation = 3.0 * math.hypot(small_k.stderr, large_k.stderr)
        assert large_k.mean < small_k.mean - separation


def test_training_config_validation():
    with pytest.raises(ValueError, match="at least 2"):
        TrainingConfig(k=1, seed=0)
    with pytest.raises(ValueError, match="trials"):
        TrainingConfig(k=5, seed=0, trials=0)
    with pytest.raises(ValueError, match="sampler"):
        TrainingConfig(k=5, seed=0, sampler="other")
