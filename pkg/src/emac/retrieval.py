"""Mode retrieval from a completed line spectrum by shift invariance (matrix pencil)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePoles, OrderTooLarge, RankDeficient
from .signal import Mode, SpectralSignal


@dataclass(frozen=True)
class RetrievedModes:
    poles: np.ndarray
    freqs: np.ndarray
    dampings: np.ndarray
    amplitudes: np.ndarray
    residual: float

    @property
    def r(self) -> int:
        return len(self.poles)

    def to_signal(self, n: int) -> SpectralSignal:
        modes = [Mode((float(f),), complex(a), (float(d),))
                 for f, a, d in zip(self.freqs, self.amplitudes, self.dampings) if a != 0]
        return SpectralSignal((n, 1), tuple(modes))

    def to_dict(self) -> dict:
        return {
            "poles": [[p.real, p.imag] for p in self.poles],
            "freqs": self.freqs.tolist(),
            "dampings": self.dampings.tolist(),
            "amplitudes": [[a.real, a.imag] for a in self.amplitudes],
            "residual": self.residual,
        }


def vandermonde(poles, n: int) -> np.ndarray:
    poles = np.asarray(poles, dtype=complex)
    return poles[None, :] ** np.arange(n)[:, None]


def fit_amplitudes(samples, poles) -> tuple[np.ndarray, float]:
    """Least-squares amplitudes of ``samples`` on the Vandermonde basis of ``poles``."""
    x = np.asarray(samples, dtype=complex).ravel()
    poles = np.asarray(poles, dtype=complex).ravel()
    if len(poles) > 1:
        gaps = np.abs(poles[:, None] - poles[None, :])
        np.fill_diagonal(gaps, np.inf)
        if gaps.min() < 1e-10:
            raise DegeneratePoles("two poles coincide within 1e-10")
    V = vandermonde(poles, len(x))
    d, *_ = np.linalg.lstsq(V, x, rcond=None)
    ref = np.linalg.norm(x)
    residual = float(np.linalg.norm(V @ d - x) / ref) if ref > 0 else 0.0
    return d, residual


def matrix_pencil_1d(samples, r: int, k: int | None = None) -> RetrievedModes:
    """Estimate ``r`` poles and amplitudes of a 1-D sample vector.

    The pencil ``k`` sets the Hankel height and defaults to ceil((n + 1) / 2).
    Poles are the eigenvalues of the shift operator on the rank-r signal
    subspace; damping is the pole magnitude.
    """
    x = np.asarray(samples, dtype=complex).ravel()
    n = len(x)
    if n < 3:
        raise OrderTooLarge("need at least 3 samples")
    if k is None:
        k = math.ceil((n + 1) / 2)
    if not 1 <= k <= n:
        raise OrderTooLarge(f"pencil {k} outside [1, {n}]")
    if not 1 <= r <= min(k, n - k + 1) - 1:
        raise OrderTooLarge(f"model order {r} too large for pencil ({k}, {n - k + 1})")
    H = x[np.arange(k)[:, None] + np.arange(n - k + 1)[None, :]]
    U, s, _ = np.linalg.svd(H, full_matrices=False)
    if s[0] == 0 or s[r - 1] / s[0] < 1e-12:
        raise RankDeficient(f"sigma_{r}/sigma_1 below 1e-12; model order overestimated")
    Ur = U[:, :r]
    shift = np.linalg.pinv(Ur[:-1], rcond=1e-12) @ Ur[1:]
    poles = np.linalg.eigvals(shift)
    order = np.argsort(np.mod(np.angle(poles) / (2 * np.pi), 1.0))
    poles = poles[order]
    amplitudes, residual = fit_amplitudes(x, poles)
    freqs = np.mod(np.angle(poles) / (2 * np.pi), 1.0)
    # mod can return 1.0 for tiny negative angles
    freqs[freqs >= 1.0] = 0.0
    return RetrievedModes(poles=poles, freqs=freqs, dampings=np.abs(poles),
                          amplitudes=amplitudes, residual=residual)


def match_modes(estimated, truth, tol: float = 1e-6) -> bool:
    """Multiset equality of two frequency lists up to wrap-around distance ``tol``."""
    a = list(np.asarray(estimated, dtype=float).ravel())
    b = list(np.asarray(truth, dtype=float).ravel())
    if len(a) != len(b):
        return False
    for f in b:
        dist = [abs(((g - f) + 0.5) % 1.0 - 0.5) for g in a]
        j = int(np.argmin(dist))
        if dist[j] > tol:
            return False
        a.pop(j)
    return True


def frequency_error(estimated, truth) -> float:
    """Largest wrap-around distance after greedy nearest matching."""
    a = list(np.asarray(estimated, dtype=float).ravel())
    worst = 0.0
    for f in np.asarray(truth, dtype=float).ravel():
        if not a:
            return math.inf
        dist = [abs(((g - f) + 0.5) % 1.0 - 0.5) for g in a]
        j = int(np.argmin(dist))
        worst = max(worst, dist[j])
        a.pop(j)
    return worst
