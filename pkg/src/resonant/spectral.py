"""Model-order selection and natural-frequency estimation for exponential sums.

The pipeline for one series is: hard-threshold the Hankel singular values for
an upper bound on the order, pick the order inside that bracket with ESTER,
denoise by alternating rank truncation and Hankel averaging (Cadzow), and run
least-squares ESPRIT on the denoised series.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg
from scipy import integrate, optimize

from .signal_model import as_series

ORDER_METHODS = ("ester", "samos", "hard_threshold", "combined")

# Extra singular directions tracked by the warm-started truncated SVD.
_OVERSAMPLE = 4


class EstimationError(RuntimeError):
    """Raised when a subspace estimate is numerically degenerate."""


class SpectralWarning(UserWarning):
    """Diagnostic emitted by the order-selection and estimation routines."""


class LowConfidenceOrderWarning(SpectralWarning):
    """ESTER criterion is nearly flat: the order estimate is unreliable."""


@dataclass(frozen=True)
class SpectralConfig:
    order_method: str = "combined"
    max_order: int = 10
    denoise_iters: int = 50
    denoise_tol: float = 1e-8
    hankel_rows_fraction: float = 0.5
    ester_threshold: float = 0.05

    def __post_init__(self):
        if self.order_method not in ORDER_METHODS:
            raise ValueError(f"order_method must be one of {ORDER_METHODS}, got {self.order_method!r}")
        if self.max_order < 1:
            raise ValueError("max_order must be >= 1")
        if self.denoise_iters < 0:
            raise ValueError("denoise_iters must be >= 0")
        if not 0.0 < self.hankel_rows_fraction < 1.0:
            raise ValueError("hankel_rows_fraction must lie in (0, 1)")
        if not 0.0 < self.ester_threshold <= 1.0:
            raise ValueError("ester_threshold must lie in (0, 1]")

    def rows(self, T: int) -> int:
        """Number of Hankel rows K for a series of length T (clamped to [2, T-1])."""
        if T < 3:
            raise ValueError(f"series of length {T} is too short for a Hankel matrix")
        return int(min(max(round(self.hankel_rows_fraction * T), 2), T - 1))

    def order_cap(self, T: int) -> int:
        """Largest order usable on a length-T series: max_order, < min(K, J), T >= 2p+1."""
        K = self.rows(T)
        return max(0, min(self.max_order, min(K, T - K + 1) - 1, (T - 1) // 2))


@dataclass
class ResonanceSet:
    """Unordered set of estimated natural frequencies."""

    freqs: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.complex128))

    def __post_init__(self):
        self.freqs = np.atleast_1d(np.asarray(self.freqs, dtype=np.complex128))
        if not np.all(np.isfinite(self.freqs)):
            raise ValueError("resonance estimates must be finite")

    @property
    def order(self) -> int:
        return self.freqs.size

    def __len__(self) -> int:
        return self.order


@dataclass
class DenoiseInfo:
    iterations: int
    converged: bool
    rel_change: float


@dataclass
class EsterResult:
    order: int
    criterion: np.ndarray  # J(p) for p = 1..len(criterion)
    low_confidence: bool


# ---------------------------------------------------------------------------
# Hankel structure


def hankel(y, K: int) -> np.ndarray:
    """K x (T-K+1) Hankel matrix with entry (k, j) = y[k + j] (0-based)."""
    y = as_series(y, "y")
    T = y.size
    if not 2 <= K <= T - 1:
        raise ValueError(f"K must satisfy 2 <= K <= T-1 = {T - 1}, got {K}")
    return scipy.linalg.hankel(y[:K], y[K - 1:])


@lru_cache(maxsize=64)
def _antidiag_index(K: int, J: int) -> tuple[np.ndarray, np.ndarray]:
    idx = (np.arange(K)[:, None] + np.arange(J)[None, :]).ravel()
    counts = np.bincount(idx).astype(float)
    return idx, counts


def dehankelize(H) -> np.ndarray:
    """Average each anti-diagonal of ``H`` into one sample (length K+J-1)."""
    H = np.asarray(H, dtype=np.complex128)
    if H.ndim != 2 or min(H.shape) < 1:
        raise ValueError("H must be a nonempty 2-D matrix")
    idx, counts = _antidiag_index(*H.shape)
    flat = H.ravel()
    re = np.bincount(idx, weights=flat.real)
    im = np.bincount(idx, weights=flat.imag)
    return (re + 1j * im) / counts


# ---------------------------------------------------------------------------
# Low-rank denoising


def _truncate(H: np.ndarray, r: int, basis: np.ndarray | None):
    """Best rank-r approximation of H and a warm-start basis for the next call.

    With a previous basis the leading subspace is refined by one block power
    step plus Rayleigh-Ritz instead of a full SVD.
    """
    width = r + _OVERSAMPLE
    if basis is None or width >= min(H.shape):
        U, s, Vh = np.linalg.svd(H, full_matrices=False)
        return (U[:, :r] * s[:r]) @ Vh[:r], U[:, :width]
    Q, _ = np.linalg.qr(H @ (H.conj().T @ basis))
    B = Q.conj().T @ H
    lam, W = np.linalg.eigh(B @ B.conj().T)
    W = W[:, ::-1]
    U = Q @ W
    return U[:, :r] @ (W[:, :r].conj().T @ B), U


def _cadzow(y: np.ndarray, order: int, cfg: SpectralConfig, basis: np.ndarray | None = None):
    K = cfg.rows(y.size)
    x = y.copy()
    info = DenoiseInfo(0, cfg.denoise_iters == 0, 0.0)
    scale = np.linalg.norm(y)
    for it in range(1, cfg.denoise_iters + 1):
        A, basis = _truncate(hankel(x, K), order, basis)
        x_new = dehankelize(A)
        change = np.linalg.norm(x_new - x) / scale if scale > 0 else 0.0
        x = x_new
        info = DenoiseInfo(it, change < cfg.denoise_tol, float(change))
        if info.converged:
            break
    return x, info, basis


def lowrank_denoise(y, order: int, cfg: SpectralConfig = SpectralConfig(), full_output: bool = False):
    """Cadzow denoising: alternate rank-``order`` truncation and Hankel averaging.

    Stops after ``cfg.denoise_iters`` rounds or once the relative change of the
    series drops below ``cfg.denoise_tol``.  With ``full_output=True`` returns
    ``(series, DenoiseInfo)``; a non-converged run still returns the last iterate.
    """
    y = as_series(y, "y")
    T = y.size
    K = cfg.rows(T)
    if not 1 <= order <= cfg.max_order or order >= min(K, T - K + 1):
        raise ValueError(f"order {order} out of range for max_order={cfg.max_order}, K={K}, T={T}")
    x, info, _ = _cadzow(y, order, cfg)
    return (x, info) if full_output else x


# ---------------------------------------------------------------------------
# ESPRIT


def _shift_solve(Us: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares rotation Psi with Us[:-1] @ Psi = Us[1:], and the residual."""
    down, up = Us[:-1], Us[1:]
    psi, _, rank, _ = np.linalg.lstsq(down, up, rcond=None)
    if rank < Us.shape[1]:
        raise EstimationError("shift-invariance least squares is rank deficient")
    return psi, up - down @ psi


def esprit_from_basis(U: np.ndarray, order: int) -> np.ndarray:
    psi, _ = _shift_solve(U[:, :order])
    return np.linalg.eigvals(psi)


def esprit(y, order: int, cfg: SpectralConfig = SpectralConfig()) -> ResonanceSet:
    """Least-squares ESPRIT on the Hankel matrix of ``y`` at the given model order."""
    y = as_series(y, "y")
    T = y.size
    if order < 1 or order > cfg.max_order:
        raise ValueError(f"order must lie in 1..{cfg.max_order}, got {order}")
    if T < 2 * order + 1:
        raise ValueError(f"series of length {T} too short for order {order}")
    K = cfg.rows(T)
    if order >= min(K, T - K + 1):
        raise EstimationError(f"order {order} exceeds the Hankel subspace capacity")
    U, s, _ = np.linalg.svd(hankel(y, K), full_matrices=False)
    if s[0] == 0 or s[order - 1] <= s[0] * np.finfo(float).eps * max(K, T - K + 1):
        raise EstimationError(f"Hankel matrix has numerical rank below {order}")
    freqs = esprit_from_basis(U, order)
    if not np.all(np.isfinite(freqs)):
        raise EstimationError("ESPRIT produced non-finite frequencies")
    return ResonanceSet(freqs)


# ---------------------------------------------------------------------------
# Order selection


def _ester_from_basis(U: np.ndarray, pmax: int, threshold: float = 1.0) -> EsterResult:
    tiny = np.finfo(float).tiny
    J = np.empty(pmax)
    for p in range(1, pmax + 1):
        _, E = _shift_solve(U[:, :p])
        J[p - 1] = 1.0 / max(np.linalg.norm(E, 2) ** 2, tiny)
    J = np.minimum(J, np.finfo(float).max)
    # largest order whose criterion reaches threshold * max; threshold=1 is the argmax
    order = int(np.flatnonzero(J >= threshold * J.max()).max()) + 1
    low = bool(J.max() < 2.0 * np.median(J))
    return EsterResult(order, J, low)


def ester_criterion(y, cfg: SpectralConfig = SpectralConfig(), pmax: int | None = None) -> EsterResult:
    """ESTER inverse-error criterion J(p) = 1/||E(p)||_2**2 for p = 1..pmax.

    The selected order is the largest p with J(p) >= cfg.ester_threshold * max J.
    """
    y = as_series(y, "y")
    if not np.any(y):
        raise ValueError("ESTER is undefined for an all-zero signal")
    cap = cfg.order_cap(y.size)
    pmax = cap if pmax is None else min(pmax, cap)
    if pmax < 1:
        raise ValueError("no admissible model order for this series length")
    U, _, _ = np.linalg.svd(hankel(y, cfg.rows(y.size)), full_matrices=False)
    return _ester_from_basis(U, pmax, cfg.ester_threshold)


def ester_order(y, cfg: SpectralConfig = SpectralConfig()) -> int:
    """ESTER order in 1..max_order (argmax of J when ``cfg.ester_threshold == 1``).

    A ``LowConfidenceOrderWarning`` is issued when max J < 2 * median J.
    """
    res = ester_criterion(y, cfg)
    if res.low_confidence:
        warnings.warn(LowConfidenceOrderWarning(f"flat ESTER criterion, picked order {res.order}"),
                      stacklevel=2)
    return res.order


def _samos_from_basis(U: np.ndarray, pmax: int) -> np.ndarray:
    E = np.empty(pmax)
    for p in range(1, pmax + 1):
        Us = U[:, :p]
        s = np.linalg.svd(np.hstack([Us[:-1], Us[1:]]), compute_uv=False)
        E[p - 1] = s[p:2 * p].sum() / p
    return E


def samos_order(y, cfg: SpectralConfig = SpectralConfig()) -> int:
    """SAMOS: minimize the mean of the p smallest singular values of [U_down, U_up]."""
    y = as_series(y, "y")
    if not np.any(y):
        raise ValueError("SAMOS is undefined for an all-zero signal")
    pmax = cfg.order_cap(y.size)
    U, _, _ = np.linalg.svd(hankel(y, cfg.rows(y.size)), full_matrices=False)
    return int(np.argmin(_samos_from_basis(U, pmax))) + 1


def _mp_median(beta: float) -> float:
    """Median of the Marchenko-Pastur law with aspect ratio beta in (0, 1]."""
    lo, hi = (1 - np.sqrt(beta)) ** 2, (1 + np.sqrt(beta)) ** 2

    def density(t):
        return np.sqrt(max((hi - t) * (t - lo), 0.0)) / (2 * np.pi * beta * t)

    def cdf_gap(x):
        return integrate.quad(density, lo, x, limit=200)[0] - 0.5

    return optimize.brentq(cdf_gap, lo + 1e-12, hi)


@lru_cache(maxsize=256)
def optimal_threshold_coef(beta: float) -> float:
    """Optimal hard-threshold coefficient omega(beta) for unknown noise level.

    Singular values above ``omega(beta) * median(s)`` are kept; omega(1) ~ 2.858.
    """
    if not 0.0 < beta <= 1.0:
        raise ValueError("aspect ratio must lie in (0, 1]")
    lam = np.sqrt(2 * (beta + 1) + 8 * beta / ((beta + 1) + np.sqrt(beta ** 2 + 14 * beta + 1)))
    return float(lam / np.sqrt(_mp_median(beta)))


def _hard_threshold_from_sv(s: np.ndarray, shape: tuple[int, int], cap: int) -> int:
    if s.size == 0 or s[0] == 0:
        return 0
    beta = min(shape) / max(shape)
    count = int(np.sum(s > optimal_threshold_coef(round(beta, 12)) * np.median(s)))
    return min(max(count, 0), cap)


def hard_threshold_order(y, cfg: SpectralConfig = SpectralConfig()) -> int:
    """Number of Hankel singular values above the optimal hard threshold, clamped to max_order."""
    y = as_series(y, "y")
    if y.size < 4:
        raise ValueError("hard thresholding needs at least 4 samples")
    H = hankel(y, cfg.rows(y.size))
    s = np.linalg.svd(H, compute_uv=False)
    return _hard_threshold_from_sv(s, H.shape, cfg.max_order)


# ---------------------------------------------------------------------------
# Combined estimator


def select_order(y, cfg: SpectralConfig = SpectralConfig()) -> int:
    """Model order chosen by ``cfg.order_method``; 0 when nothing is admissible."""
    y = as_series(y, "y")
    cap = cfg.order_cap(y.size)
    if cap < 1 or not np.any(y):
        return 0
    H = hankel(y, cfg.rows(y.size))
    U, s, _ = np.linalg.svd(H, full_matrices=False)
    return _select_order(U, s, H.shape, cap, cfg)


def _select_order(U, s, shape, cap, cfg) -> int:
    method = cfg.order_method
    if method == "hard_threshold":
        return _hard_threshold_from_sv(s, shape, cap)
    if method == "samos":
        return int(np.argmin(_samos_from_basis(U, cap))) + 1
    pmax = cap
    if method == "combined":
        pmax = max(_hard_threshold_from_sv(s, shape, cap), 1)
    res = _ester_from_basis(U, pmax, cfg.ester_threshold)
    if res.low_confidence and method == "ester":
        warnings.warn(LowConfidenceOrderWarning(f"flat ESTER criterion, picked order {res.order}"),
                      stacklevel=3)
    return res.order


def estimate_resonances(y, cfg: SpectralConfig = SpectralConfig()) -> ResonanceSet:
    """Select the order, denoise at that order, and return the ESPRIT frequencies.

    An all-zero series, or one too short for any admissible order, yields an
    empty set with a ``SpectralWarning``.
    """
    y = as_series(y, "y")
    cap = cfg.order_cap(y.size) if y.size >= 3 else 0
    if cap < 1 or not np.any(y):
        warnings.warn(SpectralWarning("no admissible model order; returning an empty resonance set"),
                      stacklevel=2)
        return ResonanceSet()
    H = hankel(y, cfg.rows(y.size))
    U, s, _ = np.linalg.svd(H, full_matrices=False)
    order = _select_order(U, s, H.shape, cap, cfg)
    if order < 1:
        warnings.warn(SpectralWarning("order selection returned 0; returning an empty resonance set"),
                      stacklevel=2)
        return ResonanceSet()
    y_tilde, _, basis = _cadzow(y, order, cfg, U[:, :order + _OVERSAMPLE])
    # Ritz vectors of the denoised Hankel matrix, refined from the last denoising basis
    _, Ur = _truncate(hankel(y_tilde, cfg.rows(y.size)), order, basis)
    freqs = esprit_from_basis(Ur, order)
    if not np.all(np.isfinite(freqs)):
        raise EstimationError("ESPRIT produced non-finite frequencies")
    return ResonanceSet(freqs)
