"""Singular value thresholding solvers for enhanced-matrix completion.

Every variant iterates shrink-then-project on the enhanced matrix:

    Q_t     = D_tau(M_t - W_t)                 singular value shrinkage
    M_{t+1} = H(Q_t + W_t)                     structured, data-consistent projection
    W_{t+1} = W_t + Q_t - M_{t+1}              scaled multiplier (``dual_update``)

With ``dual_update=False`` the multiplier stays zero and the loop is the plain
shrink/project penalty iteration, whose fixed point carries an O(tau) bias
that only vanishes as the threshold anneals to zero.  The multiplier turns the
same two steps into an alternating-direction method for the convex program,
whose limit is the exact minimizer for any positive tau.

The variants differ only in the data step of ``H``: exact pins observed
entries, noisy keeps them in a Frobenius ball of radius delta, robust peels a
soft-thresholded sparse component off the observed residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import DimensionMismatch, EmptyObservation
from .hankel import PencilShape, _group_means, default_pencil, observation_arrays
from .signal import DataGrid
from .signal import nmse as _nmse

VARIANTS = ("exact", "noisy", "robust")
SCHEDULES = ("paper", "adaptive", "initial")


@dataclass(frozen=True)
class SolverConfig:
    """Solver settings.

    schedule
        ``"paper"``: tau_t = 0.1 sigma_max(M_t) / ceil(t / 10);
        ``"adaptive"``: tau_t = 0.1 sigma_max(M_t);
        ``"initial"``: tau_t = sigma_max(M_1), the zero-filled start;
        a float: fixed threshold.  ``None`` picks ``"adaptive"`` for the
        robust variant and ``"initial"`` otherwise.
    lam
        ``"auto"`` (1 / sqrt(m log(n1 n2))) or a positive float; robust only.
    """

    variant: str = "exact"
    max_iters: int = 500
    rel_tol: float = 1e-6
    schedule: str | float | None = None
    delta: float | None = None
    lam: str | float = "auto"
    dual_update: bool = True

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if self.variant == "noisy":
            if self.delta is None or self.delta < 0:
                raise ValueError("noisy variant requires delta >= 0")
        elif self.delta is not None:
            raise ValueError("delta is only meaningful for the noisy variant")
        if self.schedule is None:
            object.__setattr__(self, "schedule", "adaptive" if self.variant == "robust" else "initial")
        if isinstance(self.schedule, str):
            if self.schedule not in SCHEDULES:
                raise ValueError(f"schedule must be one of {SCHEDULES} or a number")
        elif float(self.schedule) < 0:
            raise ValueError("fixed threshold must be nonnegative")
        if self.lam != "auto" and float(self.lam) <= 0:
            raise ValueError("lambda must be positive")


@dataclass(frozen=True)
class TraceRow:
    t: int
    tau: float
    residual: float
    rank: int


@dataclass
class SolveReport:
    recovered: DataGrid
    iterations: int
    converged: bool
    trace: list[TraceRow] = field(default_factory=list)
    sparse_component: DataGrid | None = None
    nmse: float | None = None
    metadata: dict = field(default_factory=dict)


def threshold(t: int, sigma_max: float, schedule: str | float = "paper") -> float:
    """Shrinkage level at iteration ``t`` (1-based)."""
    if t < 1:
        raise ValueError("iteration index starts at 1")
    if schedule == "paper":
        return 0.1 * sigma_max / math.ceil(t / 10)
    if schedule == "adaptive":
        return 0.1 * sigma_max
    if schedule == "initial":
        return sigma_max
    return float(schedule)


def _shrink_svd(U, s, Vh, tau):
    smax = float(s[0]) if s.size else 0.0
    shrunk = np.maximum(s - tau, 0.0)
    rank = int(np.count_nonzero(shrunk > 1e-9 * smax)) if smax > 0 else 0
    if rank == 0:
        return np.zeros((U.shape[0], Vh.shape[1]), dtype=np.result_type(U, Vh)), rank
    return (U[:, :rank] * shrunk[:rank]) @ Vh[:rank], rank


def svd_shrink(M, tau: float) -> tuple[np.ndarray, float, int]:
    """Soft-threshold the singular values of ``M`` by ``tau``.

    Returns ``(U diag((s - tau)_+) V*, sigma_max(M), rank)`` where the rank
    counts shrunk values above 1e-9 sigma_max.
    """
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    M = np.asarray(M)
    if M.size == 0:
        return M.copy(), 0.0, 0
    U, s, Vh = np.linalg.svd(M, full_matrices=False)
    Z, rank = _shrink_svd(U, s, Vh, tau)
    return Z, float(s[0]), rank


def resolve_lambda(lam, m: int, dims) -> float:
    if lam == "auto":
        n = dims[0] * dims[1]
        return 1.0 / math.sqrt(m * math.log(n)) if n > 1 else 1.0
    return float(lam)


def soft_threshold(x, level: float) -> np.ndarray:
    """Entrywise complex soft threshold: shrink magnitudes by ``level``, keep phases."""
    x = np.asarray(x, dtype=complex)
    mag = np.abs(x)
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = np.where(mag > level, 1.0 - level / mag, 0.0)
    return x * scale


def ball_project(candidate, observed, weights, delta: float) -> np.ndarray:
    """Weighted projection of ``candidate`` onto {x : ||x - observed||_2 <= delta}.

    Minimizes sum_i weights_i |x_i - candidate_i|^2; with equal weights this is
    the radial move to the ball surface.  ``weights`` are group multiplicities,
    which makes this the Frobenius projection in enhanced-matrix space.
    """
    resid = candidate - observed
    norm = float(np.linalg.norm(resid))
    if norm <= delta:
        return candidate.copy()
    if delta == 0:
        return observed.copy()
    w = np.asarray(weights, dtype=float)
    if np.all(w == w[0]):
        return observed + resid * (delta / norm)
    a2 = np.abs(resid) ** 2

    def excess(mu):
        return float(np.sqrt(np.sum(a2 * (w / (w + mu)) ** 2))) - delta

    hi = w.max() * (norm / delta)
    mu = brentq(excess, 0.0, hi, xtol=1e-14 * hi, rtol=1e-14)
    return observed + resid * (w / (w + mu))


def _prepare(observed, dims, shape):
    dims = tuple(int(n) for n in dims)
    if shape is None:
        shape = default_pencil(*dims)
    if shape.dims != dims:
        raise DimensionMismatch(f"pencil dims {shape.dims} do not match {dims}")
    flat, vals = observation_arrays(observed, shape)
    if len(flat) == 0:
        raise EmptyObservation("at least one observation is required")
    return shape, flat, vals


def _iterate(shape, flat, vals, config, data_step, pinned=False):
    """Shared loop. ``data_step(g, tau)`` overwrites the observed entries of g in place.

    ``pinned`` marks a feasible set with a single point (every entry fixed);
    the multiplier is then pointless and the first projection is the answer.
    """
    idx = shape.index_map
    g = np.zeros(shape.n1 * shape.n2, dtype=complex)
    g[flat] = vals
    M = g[idx]
    W = np.zeros_like(M) if config.dual_update and not pinned else None
    trace = []
    converged = False
    tau_prev = None
    tau = 0.0
    t = 0
    for t in range(1, config.max_iters + 1):
        svd = None
        if config.schedule == "paper" or config.schedule == "adaptive" or t == 1:
            if W is None:
                svd = np.linalg.svd(M, full_matrices=False)
                smax = float(svd[1][0])
            else:
                smax = float(np.linalg.svd(M, compute_uv=False)[0])
            if config.schedule == "initial":
                tau = smax
            elif isinstance(config.schedule, str):
                tau = threshold(t, smax, config.schedule)
        if not isinstance(config.schedule, str):
            tau = float(config.schedule)
        if W is not None and tau_prev:
            # the multiplier is stored scaled by tau
            W *= tau / tau_prev
        U, s, Vh = svd if svd is not None else np.linalg.svd(M if W is None else M - W, full_matrices=False)
        tau_prev = tau
        Q, rank = _shrink_svd(U, s, Vh, tau)
        g = _group_means(Q + W if W is not None else Q, shape)
        data_step(g, tau)
        M_new = g[idx]
        denom = np.linalg.norm(M_new)
        change = float(np.linalg.norm(M_new - M))
        if W is not None:
            # with the multiplier, also require Q and M to agree
            primal = float(np.linalg.norm(Q - M_new))
            W += Q - M_new
            change = max(change, primal)
        resid = change / denom if denom > 0 else 0.0
        trace.append(TraceRow(t, tau, resid, rank))
        M = M_new
        if resid <= config.rel_tol:
            converged = True
            break
    return g, t, converged, trace


def _finish(g, shape, truth, config, **kwargs) -> SolveReport:
    recovered = DataGrid(g.reshape(shape.dims))
    meta = {"variant": config.variant, "pencil": [shape.k1, shape.k2],
            "schedule": config.schedule, "dual_update": config.dual_update}
    meta.update(kwargs.pop("metadata", {}))
    report = SolveReport(recovered=recovered, metadata=meta, **kwargs)
    if truth is not None:
        report.nmse = _nmse(recovered, truth)
    return report


def solve_exact(observed, dims, shape: PencilShape | None = None,
                config: SolverConfig | None = None, truth=None) -> SolveReport:
    """Complete a grid from noiseless samples.

    ``observed`` is a sequence of ``((k, l), value)`` pairs (or a dict).
    The recovered grid matches the observations exactly.
    """
    config = config or SolverConfig()
    shape, flat, vals = _prepare(observed, dims, shape)

    def step(g, tau):
        g[flat] = vals

    pinned = len(flat) == shape.n1 * shape.n2
    g, iters, conv, trace = _iterate(shape, flat, vals, config, step, pinned)
    return _finish(g, shape, truth, config, iterations=iters, converged=conv, trace=trace)


def solve_noisy(observed, dims, shape: PencilShape | None = None,
                config: SolverConfig | None = None, truth=None) -> SolveReport:
    """Completion with the observed entries constrained to ||P(M) - X_obs||_F <= delta."""
    if config is None or config.delta is None:
        raise ValueError("solve_noisy needs a config with delta")
    shape, flat, vals = _prepare(observed, dims, shape)
    delta = float(config.delta)
    weights = shape.omega[flat]

    def step(g, tau):
        g[flat] = ball_project(g[flat], vals, weights, delta)

    g, iters, conv, trace = _iterate(shape, flat, vals, config, step)
    return _finish(g, shape, truth, config, iterations=iters, converged=conv, trace=trace,
                   metadata={"delta": delta})


def solve_robust(observed, dims, shape: PencilShape | None = None,
                 config: SolverConfig | None = None, truth=None) -> SolveReport:
    """Low-rank plus sparse-outlier separation on the observed entries.

    The sparse step soft-thresholds the observed residual at lambda * tau_t,
    so the ratio of the two thresholds stays at the program's lambda.
    """
    config = config or SolverConfig(variant="robust")
    shape, flat, vals = _prepare(observed, dims, shape)
    lam = resolve_lambda(config.lam, len(flat), shape.dims)
    S_obs = np.zeros_like(vals)

    def step(g, tau):
        nonlocal S_obs
        S_obs = soft_threshold(vals - g[flat], lam * tau)
        g[flat] = vals - S_obs

    g, iters, conv, trace = _iterate(shape, flat, vals, config, step)
    S = np.zeros(shape.n1 * shape.n2, dtype=complex)
    S[flat] = S_obs
    report = _finish(g, shape, truth, config, iterations=iters, converged=conv, trace=trace,
                     metadata={"lambda": lam, "sparse_threshold": "lambda * tau_t"})
    report.sparse_component = DataGrid(S.reshape(shape.dims))
    return report


def solve(observed, dims, shape=None, config: SolverConfig | None = None, truth=None) -> SolveReport:
    config = config or SolverConfig()
    fn = {"exact": solve_exact, "noisy": solve_noisy, "robust": solve_robust}[config.variant]
    return fn(observed, dims, shape, config, truth)
