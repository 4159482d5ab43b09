"""Gaussian covariance model and the information-theoretic stealth cost.

All information quantities are in nats (natural logarithms).  The stealth
cost of an additive zero-mean Gaussian attack with covariance C against a
nominal measurement covariance S_yy = H S_xx H^T + sigma^2 I is

    f(C) = 1/2 [ tr(S_yy^-1 C) - log|C + sigma^2 I| + log|S_yy| ],

which equals the KL divergence between the joint law of (state, attacked
measurements) and the product of the nominal marginals.  It decomposes as
mutual information leaked to the operator plus the detectability KL
between the attacked and nominal measurement distributions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "StateCovariance",
    "AttackModel",
    "DerivedCovariances",
    "SpectralData",
    "toeplitz_covariance",
    "sigma_from_snr",
    "derived_covariances",
    "optimal_attack_covariance",
    "attack_from_matrix",
    "stealth_cost",
    "gaussian_mutual_information",
    "gaussian_kl_marginals",
    "zero_mean_gaussian_kl",
    "nonzero_spectrum",
    "optimal_cost",
]

#: Relative eigenvalue floor below which attack covariances are rejected.
PSD_TOL = 1e-8

#: Relative threshold separating true null directions from roundoff.
RANK_TOL = 1e-10


def symmetrize(m: np.ndarray) -> np.ndarray:
    """Return the symmetric part (m + m.T) / 2."""
    m = np.asarray(m, dtype=float)
    return (m + m.T) / 2.0


def logdet_psd(m: np.ndarray) -> float:
    """Log-determinant of a symmetric positive-definite matrix via Cholesky.

    Raises ``numpy.linalg.LinAlgError`` if the matrix is not positive
    definite.
    """
    chol = np.linalg.cholesky(m)
    return 2.0 * float(np.sum(np.log(np.diag(chol))))


def _as_matrix(cov) -> np.ndarray:
    """Accept a covariance wrapper or a plain array."""
    if hasattr(cov, "sigma_xx"):
        return cov.sigma_xx
    if hasattr(cov, "s_xx"):
        return cov.s_xx
    return np.asarray(cov, dtype=float)


@dataclass(frozen=True)
class StateCovariance:
    """Positive-definite covariance of the state variables.

    ``rho`` records the decay parameter when the matrix was generated as the
    exponential Toeplitz family, entry (i, j) = rho^|i-j|.
    """

    sigma_xx: np.ndarray
    rho: float | None = None

    def __post_init__(self) -> None:
        m = symmetrize(self.sigma_xx)
        np.linalg.cholesky(m)  # positive-definiteness check
        object.__setattr__(self, "sigma_xx", m)

    @property
    def n(self) -> int:
        return int(self.sigma_xx.shape[0])


@dataclass(frozen=True)
class AttackModel:
    """Covariance of the additive Gaussian attack and how it was built."""

    sigma_aa: np.ndarray
    kind: str = "custom"  # one of: optimal, learned, custom

    def __post_init__(self) -> None:
        if self.kind not in ("optimal", "learned", "custom"):
            raise ValueError(f"unknown attack kind {self.kind!r}")
        object.__setattr__(self, "sigma_aa", symmetrize(self.sigma_aa))


@dataclass(frozen=True)
class DerivedCovariances:
    """Nominal and attacked measurement covariances.

    ``sigma_yaya - sigma_yy`` equals the attack covariance exactly.
    """

    sigma_yy: np.ndarray
    sigma_yaya: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "sigma_yy", symmetrize(self.sigma_yy))
        object.__setattr__(self, "sigma_yaya", symmetrize(self.sigma_yaya))
        if self.sigma_yy.shape != self.sigma_yaya.shape:
            raise ValueError("covariance shape mismatch")

    @property
    def m(self) -> int:
        return int(self.sigma_yy.shape[0])


@dataclass(frozen=True)
class SpectralData:
    """Nonzero eigenvalues of the optimal attack covariance, descending."""

    eigenvalues: np.ndarray
    p: int

    def __post_init__(self) -> None:
        ev = np.asarray(self.eigenvalues, dtype=float)
        object.__setattr__(self, "eigenvalues", ev)
        if ev.shape != (self.p,):
            raise ValueError("eigenvalue count does not match rank p")
        if self.p and (np.any(ev <= 0) or np.any(np.diff(ev) > 0)):
            raise ValueError("eigenvalues must be positive and sorted descending")


def toeplitz_covariance(n: int, rho: float) -> StateCovariance:
    """Exponential-decay Toeplitz covariance, entry (i, j) = rho^|i-j|.

    Parameters
    ----------
    n:
        Dimension, at least 1.
    rho:
        Decay parameter in [0, 1); rho = 0 gives the identity.
    """
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    if not 0.0 <= rho < 1.0:
        raise ValueError(f"rho must lie in [0, 1), got {rho}")
    lags = np.abs(np.subtract.outer(np.arange(n), np.arange(n)))
    return StateCovariance(sigma_xx=np.power(rho, lags), rho=float(rho))


def sigma_from_snr(h: np.ndarray, sigma_xx, snr_db: float) -> float:
    """Noise standard deviation realizing a target SNR in dB.

    Inverts SNR = 10 log10( tr(H S_xx H^T) / (M sigma^2) ), i.e.
    sigma^2 = tr(H S_xx H^T) / (M 10^(SNR/10)).
    """
    h = np.asarray(h, dtype=float)
    gram = h @ _as_matrix(sigma_xx) @ h.T
    signal = float(np.trace(gram))
    if signal <= 0.0:
        raise ValueError("tr(H S_xx H^T) must be positive to set an SNR")
    m = h.shape[0]
    sigma_sq = signal / (m * 10.0 ** (snr_db / 10.0))
    return float(np.sqrt(sigma_sq))


def derived_covariances(
    h: np.ndarray, sigma_xx, sigma: float, attack: AttackModel
) -> DerivedCovariances:
    """Nominal S_yy = H S_xx H^T + sigma^2 I and attacked S_yy + S_aa."""
    h = np.asarray(h, dtype=float)
    sxx = _as_matrix(sigma_xx)
    if h.shape[1] != sxx.shape[0]:
        raise ValueError(f"H has {h.shape[1]} columns but S_xx is {sxx.shape[0]}-dimensional")
    if attack.sigma_aa.shape[0] != h.shape[0]:
        raise ValueError(
            f"attack covariance is {attack.sigma_aa.shape[0]}-dimensional "
            f"but there are {h.shape[0]} measurements"
        )
    if sigma <= 0.0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    syy = symmetrize(h @ sxx @ h.T) + sigma**2 * np.eye(h.shape[0])
    return DerivedCovariances(sigma_yy=syy, sigma_yaya=syy + attack.sigma_aa)


def optimal_attack_covariance(h: np.ndarray, sigma_xx) -> AttackModel:
    """Stealth-optimal attack covariance H S_xx H^T (symmetrized)."""
    h = np.asarray(h, dtype=float)
    return AttackModel(sigma_aa=symmetrize(h @ _as_matrix(sigma_xx) @ h.T), kind="optimal")


def attack_from_matrix(matrix: np.ndarray, kind: str = "custom", tol: float = PSD_TOL) -> AttackModel:
    """Validate a user-supplied attack covariance.

    Eigenvalues down to ``-tol * lambda_max`` are treated as roundoff and
    clipped to zero; anything lower is rejected.
    """
    sym = symmetrize(matrix)
    w, v = np.linalg.eigh(sym)
    floor = -tol * max(float(w[-1]), 0.0)
    if np.any(w < floor):
        raise ValueError(
            f"attack covariance is not positive semidefinite (min eigenvalue {w[0]:.3e})"
        )
    if np.any(w < 0):
        sym = symmetrize((v * np.clip(w, 0.0, None)) @ v.T)
    return AttackModel(sigma_aa=sym, kind=kind)


def stealth_cost(attack: AttackModel, derived: DerivedCovariances, sigma: float) -> float:
    """Stealth cost f of an attack: disruption plus detectability, in nats.

    f = 1/2 [ tr(S_yy^-1 S_aa) - log|S_aa + sigma^2 I| + log|S_yy| ].
    """
    syy = derived.sigma_yy
    saa = attack.sigma_aa
    m = syy.shape[0]
    trace_term = float(np.trace(np.linalg.solve(syy, saa)))
    return 0.5 * (
        trace_term - logdet_psd(saa + sigma**2 * np.eye(m)) + logdet_psd(syy)
    )


def gaussian_mutual_information(
    attack: AttackModel, derived: DerivedCovariances, sigma: float
) -> float:
    """Mutual information between the states and the attacked measurements.

    Closed Gaussian form 1/2 log( |S_yaya| / |S_aa + sigma^2 I| ).
    """
    m = derived.m
    return 0.5 * (
        logdet_psd(derived.sigma_yaya)
        - logdet_psd(attack.sigma_aa + sigma**2 * np.eye(m))
    )


def zero_mean_gaussian_kl(cov_p: np.ndarray, cov_q: np.ndarray) -> float:
    """KL divergence D(N(0, cov_p) || N(0, cov_q)) in nats."""
    cov_p = symmetrize(cov_p)
    cov_q = symmetrize(cov_q)
    m = cov_p.shape[0]
    trace_term = float(np.trace(np.linalg.solve(cov_q, cov_p)))
    return 0.5 * (trace_term - m + logdet_psd(cov_q) - logdet_psd(cov_p))


def gaussian_kl_marginals(derived: DerivedCovariances) -> float:
    """Detectability term: KL of the attacked vs nominal measurement law."""
    return zero_mean_gaussian_kl(derived.sigma_yaya, derived.sigma_yy)


def nonzero_spectrum(h: np.ndarray, sigma_xx, rank_tol: float = RANK_TOL) -> SpectralData:
    """Nonzero eigenvalues of H S_xx H^T and their count p.

    Eigenvalues at or below ``rank_tol * lambda_max`` are treated as zero.
    """
    gram = symmetrize(np.asarray(h, dtype=float) @ _as_matrix(sigma_xx) @ np.asarray(h).T)
    ev = np.linalg.eigvalsh(gram)[::-1]
    if ev.size == 0 or ev[0] <= 0.0:
        return SpectralData(eigenvalues=np.empty(0), p=0)
    kept = ev[ev > rank_tol * ev[0]]
    return SpectralData(eigenvalues=kept, p=int(kept.size))


def optimal_cost(spectrum: SpectralData, sigma: float) -> float:
    """Stealth cost at the optimal attack: 1/2 sum_i lambda_i/(lambda_i + sigma^2)."""
    ev = spectrum.eigenvalues
    return 0.5 * float(np.sum(ev / (ev + sigma**2)))
