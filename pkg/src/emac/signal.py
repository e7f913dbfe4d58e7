"""Spectrally sparse signal model: modes, synthesis and Vandermonde factors."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, EmptySignal, InvalidSignal, ZeroReference


@dataclass(frozen=True)
class Mode:
    """One complex exponential component.

    ``freq`` holds normalized frequencies in [0, 1) (one per axis), ``damping``
    the per-axis pole magnitude (1.0 means undamped).
    """

    freq: tuple[float, ...]
    amplitude: complex
    damping: tuple[float, ...] | None = None

    def __post_init__(self):
        freq = tuple(float(f) for f in np.atleast_1d(self.freq))
        damping = self.damping
        if damping is None:
            damping = (1.0,) * len(freq)
        damping = tuple(float(d) for d in np.atleast_1d(damping))
        object.__setattr__(self, "freq", freq)
        object.__setattr__(self, "damping", damping)
        object.__setattr__(self, "amplitude", complex(self.amplitude))
        if len(damping) != len(freq):
            raise InvalidSignal("damping and freq must have the same length")
        if not all(0.0 <= f < 1.0 for f in freq):
            raise InvalidSignal(f"frequencies must lie in [0, 1), got {freq}")
        if not all(d > 0 for d in damping):
            raise InvalidSignal(f"damping must be positive, got {damping}")
        if self.amplitude == 0:
            raise InvalidSignal("amplitude must be nonzero")

    @property
    def poles(self) -> tuple[complex, ...]:
        return tuple(d * np.exp(2j * np.pi * f) for f, d in zip(self.freq, self.damping))


@dataclass(frozen=True)
class SpectralSignal:
    dims: tuple[int, int]
    modes: tuple[Mode, ...] = field(default_factory=tuple)

    def __post_init__(self):
        dims = tuple(int(n) for n in self.dims)
        if len(dims) != 2 or min(dims) < 1:
            raise InvalidSignal(f"dims must be two positive integers, got {self.dims}")
        object.__setattr__(self, "dims", dims)
        modes = tuple(self.modes)
        object.__setattr__(self, "modes", modes)
        K = self.K
        for mode in modes:
            if len(mode.freq) != K:
                raise InvalidSignal(f"every mode needs {K} frequency components for dims {dims}")
        if len({m.freq for m in modes}) != len(modes):
            raise InvalidSignal("mode frequencies must be pairwise distinct")

    @property
    def K(self) -> int:
        return 2 if self.dims[1] > 1 else 1

    @property
    def r(self) -> int:
        return len(self.modes)

    @property
    def freqs(self) -> np.ndarray:
        """(r, K) array of frequencies."""
        return np.array([m.freq for m in self.modes], dtype=float).reshape(self.r, self.K)

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([m.amplitude for m in self.modes], dtype=complex)

    def pole_pairs(self) -> tuple[np.ndarray, np.ndarray]:
        """Poles (y_i, z_i) along each axis; z_i = 1 for line spectra."""
        y = np.array([m.poles[0] for m in self.modes], dtype=complex)
        if self.K == 2:
            z = np.array([m.poles[1] for m in self.modes], dtype=complex)
        else:
            z = np.ones(self.r, dtype=complex)
        return y, z


@dataclass(frozen=True)
class DataGrid:
    """Dense n1 x n2 complex samples; entry (k, l) holds X[k, l]."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise DimensionMismatch(f"grid must be 2-D, got shape {values.shape}")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def dims(self) -> tuple[int, int]:
        return self.values.shape


@dataclass(frozen=True)
class VandermondeFactors:
    Y: np.ndarray
    Z: np.ndarray
    D: np.ndarray

    def product(self) -> np.ndarray:
        return self.Y @ self.D @ self.Z.T


def _powers(poles: np.ndarray, n: int) -> np.ndarray:
    # n x r matrix with column i equal to poles[i] ** (0..n-1)
    return poles[None, :] ** np.arange(n)[:, None]


def synthesize(signal: SpectralSignal) -> DataGrid:
    """Evaluate X[k, l] = sum_i d_i y_i^k z_i^l on the signal's grid."""
    n1, n2 = signal.dims
    if signal.r == 0:
        return DataGrid(np.zeros((n1, n2), dtype=complex))
    y, z = signal.pole_pairs()
    Y = _powers(y, n1)
    Z = _powers(z, n2)
    return DataGrid(np.einsum("ki,i,li->kl", Y, signal.amplitudes, Z))


def vandermonde_factors(signal: SpectralSignal) -> VandermondeFactors:
    if signal.r == 0:
        raise EmptySignal("Vandermonde factors need at least one mode")
    n1, n2 = signal.dims
    y, z = signal.pole_pairs()
    return VandermondeFactors(Y=_powers(y, n1), Z=_powers(z, n2), D=np.diag(signal.amplitudes))


def nmse(candidate, truth) -> float:
    """Relative Frobenius error ||candidate - truth||_F / ||truth||_F."""
    a = np.asarray(getattr(candidate, "values", candidate), dtype=complex)
    b = np.asarray(getattr(truth, "values", truth), dtype=complex)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shape mismatch {a.shape} vs {b.shape}")
    ref = np.linalg.norm(b)
    if ref == 0:
        raise ZeroReference("reference grid is all zero")
    return float(np.linalg.norm(a - b) / ref)
