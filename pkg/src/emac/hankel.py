"""Two-fold Hankel lifting of data grids and its structured-matrix helpers.

The enhanced matrix of an n1 x n2 grid with pencil (k1, k2) has k1*k2 rows and
(n1-k1+1)*(n2-k2+1) columns.  Row a1*k2 + a2 and column b1*(n2-k2+1) + b2 hold
the sample X[a1+b1, a2+b2].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DimensionMismatch, DuplicateObservation, EmptySignal, OutOfRange
from .signal import DataGrid, SpectralSignal, synthesize


@dataclass(frozen=True)
class PencilShape:
    dims: tuple[int, int]
    k1: int
    k2: int

    def __post_init__(self):
        n1, n2 = (int(n) for n in self.dims)
        object.__setattr__(self, "dims", (n1, n2))
        object.__setattr__(self, "k1", int(self.k1))
        object.__setattr__(self, "k2", int(self.k2))
        if n1 < 1 or n2 < 1:
            raise OutOfRange(f"dims must be positive, got {self.dims}")
        if not (1 <= self.k1 <= n1 and 1 <= self.k2 <= n2):
            raise OutOfRange(f"pencil ({self.k1}, {self.k2}) out of range for dims {self.dims}")

    @property
    def n1(self) -> int:
        return self.dims[0]

    @property
    def n2(self) -> int:
        return self.dims[1]

    @property
    def rows(self) -> int:
        return self.k1 * self.k2

    @property
    def cols(self) -> int:
        return (self.n1 - self.k1 + 1) * (self.n2 - self.k2 + 1)

    @property
    def matrix_shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    @property
    def index_map(self) -> np.ndarray:
        """rows x cols array of row-major grid indices k*n2 + l (read-only)."""
        return _index_map(self.n1, self.n2, self.k1, self.k2)

    @property
    def omega(self) -> np.ndarray:
        """Multiplicity of every grid entry, flattened row-major (read-only)."""
        return _omega(self.n1, self.n2, self.k1, self.k2)


@lru_cache(maxsize=128)
def _index_map(n1, n2, k1, k2):
    c2 = n2 - k2 + 1
    a1 = np.arange(k1)[:, None, None, None]
    a2 = np.arange(k2)[None, :, None, None]
    b1 = np.arange(n1 - k1 + 1)[None, None, :, None]
    b2 = np.arange(c2)[None, None, None, :]
    flat = (a1 + b1) * n2 + (a2 + b2)
    # axes (a1, a2, b1, b2) -> rows (a1, a2), cols (b1, b2)
    out = flat.reshape(k1 * k2, (n1 - k1 + 1) * c2)
    out.flags.writeable = False
    return out


@lru_cache(maxsize=128)
def _omega(n1, n2, k1, k2):
    out = np.bincount(_index_map(n1, n2, k1, k2).ravel(), minlength=n1 * n2)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class EnhancedMatrix:
    shape: PencilShape
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        if data.shape != self.shape.matrix_shape:
            raise DimensionMismatch(f"expected {self.shape.matrix_shape}, got {data.shape}")
        object.__setattr__(self, "data", data)

    def is_structured(self, atol: float = 0.0) -> bool:
        """True when every index group holds equal values (within ``atol``)."""
        idx = self.shape.index_map.ravel()
        _, first = np.unique(idx, return_index=True)
        reference = self.data.ravel()[first][idx]
        return bool(np.all(np.abs(self.data.ravel() - reference) <= atol))


@dataclass(frozen=True)
class MultiplicityMap:
    shape: PencilShape
    omega: np.ndarray


def default_pencil(n1: int, n2: int = 1) -> PencilShape:
    """Pencil minimizing c_s: k = ceil((n + 1) / 2) along each axis."""
    return PencilShape((n1, n2), math.ceil((n1 + 1) / 2), math.ceil((n2 + 1) / 2))


def index_group(k: int, l: int, shape: PencilShape) -> list[tuple[int, int]]:
    """All enhanced-matrix positions that hold a copy of X[k, l]."""
    n1, n2, k1, k2 = shape.n1, shape.n2, shape.k1, shape.k2
    if not (0 <= k < n1 and 0 <= l < n2):
        raise OutOfRange(f"({k}, {l}) outside grid {shape.dims}")
    c2 = n2 - k2 + 1
    out = []
    for a1 in range(max(0, k - (n1 - k1)), min(k1 - 1, k) + 1):
        b1 = k - a1
        for a2 in range(max(0, l - (n2 - k2)), min(k2 - 1, l) + 1):
            b2 = l - a2
            out.append((a1 * k2 + a2, b1 * c2 + b2))
    return out


def multiplicities(shape: PencilShape) -> MultiplicityMap:
    return MultiplicityMap(shape, shape.omega.reshape(shape.dims).copy())


def _check_dims(grid_values: np.ndarray, shape: PencilShape) -> np.ndarray:
    values = np.asarray(grid_values, dtype=complex)
    if values.ndim == 1:
        values = values[:, None]
    if values.shape != shape.dims:
        raise DimensionMismatch(f"grid {values.shape} does not match pencil dims {shape.dims}")
    return values


def enhance(grid, shape: PencilShape) -> EnhancedMatrix:
    """Lift a data grid (DataGrid or array) to its enhanced matrix."""
    values = _check_dims(getattr(grid, "values", grid), shape)
    return EnhancedMatrix(shape, values.ravel()[shape.index_map])


def _group_means(Q: np.ndarray, shape: PencilShape) -> np.ndarray:
    idx = shape.index_map.ravel()
    n = shape.n1 * shape.n2
    q = np.asarray(Q).ravel()
    re = np.bincount(idx, weights=q.real, minlength=n)
    im = np.bincount(idx, weights=q.imag, minlength=n)
    return (re + 1j * im) / shape.omega


def dehankel_average(E, shape: PencilShape | None = None) -> DataGrid:
    """Grid whose (k, l) entry is the mean of E over the index group of (k, l)."""
    if isinstance(E, EnhancedMatrix):
        shape, data = E.shape, E.data
    else:
        data = np.asarray(E, dtype=complex)
        if shape is None:
            raise ValueError("a PencilShape is required for a bare array")
    if data.shape != shape.matrix_shape:
        raise DimensionMismatch(f"expected {shape.matrix_shape}, got {data.shape}")
    return DataGrid(_group_means(data, shape).reshape(shape.dims))


def observation_arrays(observed, shape: PencilShape) -> tuple[np.ndarray, np.ndarray]:
    """Validate ``((k, l), value)`` pairs; return flat indices and values."""
    pairs = list(observed.items()) if isinstance(observed, dict) else list(observed)
    n1, n2 = shape.dims
    flat = np.empty(len(pairs), dtype=np.intp)
    vals = np.empty(len(pairs), dtype=complex)
    for i, ((k, l), v) in enumerate(pairs):
        if not (0 <= k < n1 and 0 <= l < n2):
            raise OutOfRange(f"observation ({k}, {l}) outside grid {shape.dims}")
        flat[i] = k * n2 + l
        vals[i] = v
    if len(np.unique(flat)) != len(flat):
        raise DuplicateObservation("observed indices must be unique")
    return flat, vals


def project_arrays(Q: np.ndarray, flat: np.ndarray, vals: np.ndarray, shape: PencilShape) -> np.ndarray:
    """Array-level structure projection used inside the solver loops."""
    g = _group_means(Q, shape)
    g[flat] = vals
    return g[shape.index_map]


def structure_project(Q, observed, shape: PencilShape) -> EnhancedMatrix:
    """Nearest structured matrix consistent with the observed grid values.

    Observed groups are pinned to their values; every other group takes the
    mean of ``Q`` over its positions.
    """
    data = np.asarray(getattr(Q, "data", Q), dtype=complex)
    if data.shape != shape.matrix_shape:
        raise DimensionMismatch(f"expected {shape.matrix_shape}, got {data.shape}")
    flat, vals = observation_arrays(observed, shape)
    return EnhancedMatrix(shape, project_arrays(data, flat, vals, shape))


def enhanced_factors(signal: SpectralSignal, shape: PencilShape):
    """Left factor (sqrt(k1 k2) E_L), diagonal amplitudes D, right factor."""
    if signal.r == 0:
        raise EmptySignal("enhanced factors need at least one mode")
    if tuple(signal.dims) != shape.dims:
        raise DimensionMismatch(f"signal dims {signal.dims} vs pencil dims {shape.dims}")
    y, z = signal.pole_pairs()
    n1, n2, k1, k2 = shape.n1, shape.n2, shape.k1, shape.k2
    a1, a2 = np.divmod(np.arange(k1 * k2), k2)
    b1, b2 = np.divmod(np.arange(shape.cols), n2 - k2 + 1)
    left = y[None, :] ** a1[:, None] * z[None, :] ** a2[:, None]
    right = y[:, None] ** b1[None, :] * z[:, None] ** b2[None, :]
    return left, np.diag(signal.amplitudes), right


def cs_factor(shape: PencilShape) -> float:
    n = shape.n1 * shape.n2
    return max(n / shape.rows, n / shape.cols)


def toeplitz_from_hankel(E) -> np.ndarray:
    """Reverse the row order, mapping a Hankel lift to its Toeplitz counterpart."""
    data = np.asarray(getattr(E, "data", E))
    return data[::-1, :].copy()


def enhance_signal(signal: SpectralSignal, shape: PencilShape) -> EnhancedMatrix:
    return enhance(synthesize(signal), shape)
