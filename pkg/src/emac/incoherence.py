"""Incoherence diagnostics: Dirichlet-kernel Gram matrices, mu_1 and A-norms."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import EmptyFrequencies
from .hankel import PencilShape, _group_means, cs_factor

SINGULAR_FLOOR = 1e-12


def _dirichlet_1d(k: int, f: np.ndarray) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    out = np.ones(f.shape, dtype=complex)
    nz = np.abs(f) >= 1e-12
    fz = f[nz]
    # sine-ratio form avoids cancellation in 1 - exp(-j 2 pi f) for small f
    out[nz] = np.exp(-1j * np.pi * (k - 1) * fz) * np.sin(np.pi * k * fz) / (k * np.sin(np.pi * fz))
    return out


def dirichlet(k1: int, k2: int, f) -> complex | np.ndarray:
    """Normalized 2-D Dirichlet kernel.

    ``f`` is a pair (f1, f2) or an array whose last axis has length 2.  A zero
    frequency component contributes its limit value 1.
    """
    if k1 < 1 or k2 < 1:
        raise ValueError("kernel lengths must be positive")
    f = np.asarray(f, dtype=float)
    val = _dirichlet_1d(k1, f[..., 0]) * _dirichlet_1d(k2, f[..., 1])
    return complex(val) if val.ndim == 0 else val


def wrap(f):
    """Wrap-around difference into [-1/2, 1/2)."""
    return (np.asarray(f, dtype=float) + 0.5) % 1.0 - 0.5


@dataclass(frozen=True)
class GramPair:
    G_L: np.ndarray
    G_R: np.ndarray


def _as_freq_array(freqs) -> np.ndarray:
    F = np.asarray(freqs, dtype=float)
    if F.size == 0:
        raise EmptyFrequencies("need at least one frequency")
    if F.ndim == 1:
        F = F[:, None]
    if F.shape[1] == 1:
        F = np.hstack([F, np.zeros((F.shape[0], 1))])
    return F


def gram_pair(freqs, shape: PencilShape) -> GramPair:
    F = _as_freq_array(freqs)
    diff = wrap(F[:, None, :] - F[None, :, :])
    G_L = dirichlet(shape.k1, shape.k2, diff)
    G_R = dirichlet(shape.n1 - shape.k1 + 1, shape.n2 - shape.k2 + 1, diff)
    return GramPair(np.atleast_2d(G_L), np.atleast_2d(G_R))


@dataclass(frozen=True)
class IncoherenceReport:
    """Definition-1 incoherence and order-of sample bounds (universal constants omitted)."""

    r: int
    sigma_min_L: float
    sigma_min_R: float
    mu1: float
    cs: float
    bound_noiseless: float
    bound_robust: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["bounds_are"] = "order-of scaling, universal constants omitted"
        return d


def _least_eig(G: np.ndarray) -> float:
    H = 0.5 * (G + G.conj().T)
    return max(float(np.linalg.eigvalsh(H)[0]), 0.0)


def incoherence_report(freqs, shape: PencilShape) -> IncoherenceReport:
    gp = gram_pair(freqs, shape)
    r = gp.G_L.shape[0]
    sl, sr = _least_eig(gp.G_L), _least_eig(gp.G_R)
    smin = min(sl, sr)
    mu1 = math.inf if smin <= SINGULAR_FLOOR else 1.0 / smin
    cs = cs_factor(shape)
    logn = math.log(shape.n1 * shape.n2) if shape.n1 * shape.n2 > 1 else 0.0
    return IncoherenceReport(
        r=r,
        sigma_min_L=sl,
        sigma_min_R=sr,
        mu1=mu1,
        cs=cs,
        bound_noiseless=mu1 * cs * r * logn**4,
        bound_robust=mu1**2 * cs**2 * r**2 * logn**3,
    )


def group_inner_products(M, shape: PencilShape) -> np.ndarray:
    """<A_(k,l), M> for every grid index, flattened row-major."""
    data = np.asarray(getattr(M, "data", M), dtype=complex)
    omega = shape.omega
    # sum over the group divided by sqrt(omega)
    return _group_means(data, shape) * np.sqrt(omega)


def a_norms(M, shape: PencilShape) -> tuple[float, float]:
    """The A-infinity and A-2 norms of an enhanced-size matrix."""
    ip = np.abs(group_inner_products(M, shape))
    root = np.sqrt(shape.omega)
    a_inf = float(np.max(ip / root)) if ip.size else 0.0
    a_two = float(np.sqrt(np.sum(ip**2 / shape.omega)))
    return a_inf, a_two


def subspace_incoherence(E, r: int, shape: PencilShape) -> float:
    """Smallest mu_1 compatible with the singular subspaces of a rank-r enhanced matrix.

    Computes max over (k, l) of ||U* A_(k,l)||_F^2 and ||A_(k,l) V||_F^2 and
    rescales by n1 n2 / (c_s r).  The maximum is attained, so the value is the
    tightest constant for the given number ``r`` of retained singular vectors.
    """
    data = np.asarray(getattr(E, "data", E), dtype=complex)
    U, _, Vh = np.linalg.svd(data, full_matrices=False)
    U, V = U[:, :r], Vh[:r].conj().T
    idx = shape.index_map
    n = shape.n1 * shape.n2
    # A_(k,l) has one entry per row and per column of its group, so
    # ||U* A||_F^2 = (1/omega) sum over group positions of ||U[row]||^2.
    row_energy = np.sum(np.abs(U) ** 2, axis=1)
    col_energy = np.sum(np.abs(V) ** 2, axis=1)
    left = np.bincount(idx.ravel(), weights=np.broadcast_to(row_energy[:, None], idx.shape).ravel(), minlength=n)
    right = np.bincount(idx.ravel(), weights=np.broadcast_to(col_energy[None, :], idx.shape).ravel(), minlength=n)
    worst = max(np.max(left / shape.omega), np.max(right / shape.omega))
    return float(worst * n / (cs_factor(shape) * r))
