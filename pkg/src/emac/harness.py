"""Seeded experiment harness: random signals, masks, corruption, Monte Carlo sweeps."""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import EmacError, SeparationInfeasible, TooManySamples
from .hankel import PencilShape, default_pencil
from .signal import DataGrid, Mode, SpectralSignal, nmse, synthesize
from .solvers import SolverConfig, solve

SUCCESS_NMSE = 1e-3
MAX_SEPARATION_ATTEMPTS = 10_000


def trial_seed(base_seed: int, *coords: int) -> np.random.SeedSequence:
    """Seed derived from (base_seed, cell coordinates, trial index), never from execution order."""
    return np.random.SeedSequence([int(base_seed), *(int(c) for c in coords)])


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def wrap_distance(f, g) -> float:
    """Largest per-axis wrap-around distance between two frequency tuples."""
    d = (np.asarray(f, dtype=float) - np.asarray(g, dtype=float) + 0.5) % 1.0 - 0.5
    return float(np.max(np.abs(d)))


def min_wrap_separation(freqs) -> float:
    F = np.asarray(freqs, dtype=float)
    if F.ndim == 1:
        F = F[:, None]
    if len(F) < 2:
        return math.inf
    d = np.abs((F[:, None, :] - F[None, :, :] + 0.5) % 1.0 - 0.5).max(axis=-1)
    d[np.diag_indices(len(F))] = np.inf
    return float(d.min())


def random_signal(seed, dims, r: int, min_separation: float | None = None,
                  damping: tuple[float, ...] = ()) -> SpectralSignal:
    """Uniform random frequencies with unit-magnitude, uniform-phase amplitudes.

    ``damping`` lists pole magnitudes applied (on every axis) to the first
    modes; the remaining modes are undamped.
    """
    if r < 1:
        raise ValueError("r must be at least 1")
    dims = tuple(int(n) for n in dims)
    K = 2 if dims[1] > 1 else 1
    rng = _rng(seed)
    for _ in range(MAX_SEPARATION_ATTEMPTS):
        freqs = rng.random((r, K))
        distinct = len({tuple(f) for f in freqs}) == r
        if distinct and (min_separation is None or min_wrap_separation(freqs) >= min_separation):
            break
    else:
        raise SeparationInfeasible(f"no {r} frequencies with separation {min_separation} "
                                   f"after {MAX_SEPARATION_ATTEMPTS} draws")
    phases = rng.random(r)
    modes = []
    for i in range(r):
        damp = (damping[i],) * K if i < len(damping) else None
        modes.append(Mode(tuple(freqs[i]), np.exp(2j * np.pi * phases[i]), damp))
    return SpectralSignal(dims, tuple(modes))


def random_mask(seed, dims, m: int) -> list[tuple[int, int]]:
    """m distinct grid indices drawn uniformly without replacement, row-major sorted."""
    n1, n2 = dims
    if m > n1 * n2:
        raise TooManySamples(f"cannot draw {m} samples from {n1 * n2} entries")
    if m < 1:
        raise ValueError("m must be positive")
    flat = np.sort(_rng(seed).choice(n1 * n2, size=m, replace=False))
    return [(int(i // n2), int(i % n2)) for i in flat]


def corrupt(seed, values, fraction: float, magnitude_scale: float = 1.0,
            reference_inf: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Add outliers of magnitude ``magnitude_scale * reference_inf`` with random phase.

    Each entry is corrupted independently with probability ``fraction``.  The
    support and phases depend only on the seed, not on the magnitude.  Returns
    the corrupted copy and the boolean corruption support.
    """
    if not 0 <= fraction < 1:
        raise ValueError("corruption fraction must lie in [0, 1)")
    vals = np.asarray(values, dtype=complex).copy()
    rng = _rng(seed)
    support = rng.random(vals.shape) < fraction
    phases = rng.random(vals.shape)
    ref = float(np.max(np.abs(vals))) if reference_inf is None else float(reference_inf)
    vals[support] += magnitude_scale * ref * np.exp(2j * np.pi * phases[support])
    return vals, support


def gaussian_noise(seed, shape, std: float) -> np.ndarray:
    """Circular complex Gaussian noise with E|n|^2 = std^2."""
    rng = _rng(seed)
    return std / math.sqrt(2) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


@dataclass(frozen=True)
class TrialSpec:
    """One Monte Carlo trial.

    ``noise_snr`` adds Gaussian noise at the given signal-to-noise amplitude
    ratio (rms over the grid); ``noise_delta`` is the radius handed to the
    noisy solver and defaults to the realized noise norm on the samples.
    """

    dims: tuple[int, int]
    r: int
    m: int
    variant: str = "exact"
    corruption_fraction: float = 0.0
    corruption_scale: float = 1.0
    noise_snr: float | None = None
    noise_delta: float | None = None
    seed: int | tuple = 0
    min_separation: float | None = None
    damping: tuple[float, ...] = ()
    pencil: tuple[int, int] | None = None
    max_iters: int = 500
    rel_tol: float = 1e-6
    schedule: str | float | None = None
    lam: str | float = "auto"
    dual_update: bool = True
    success_nmse: float = SUCCESS_NMSE

    def __post_init__(self):
        n1, n2 = self.dims
        if not 0 < self.m <= n1 * n2:
            raise TooManySamples(f"m={self.m} outside (0, {n1 * n2}]")
        if not 0 <= self.corruption_fraction < 1:
            raise ValueError("corruption fraction must lie in [0, 1)")


@dataclass
class TrialResult:
    success: bool
    nmse: float
    iterations: int
    wallclock: float
    converged: bool = False
    reason: str = ""
    extra: dict = field(default_factory=dict)


def _streams(seed):
    # children built from the key, not via spawn(), which mutates its parent
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [np.random.SeedSequence(ss.entropy, spawn_key=ss.spawn_key + (i,), pool_size=ss.pool_size)
            for i in range(4)]


def build_trial(spec: TrialSpec):
    """Deterministically generate (signal, truth grid, observations, delta, corruption support)."""
    s_sig, s_mask, s_bad, s_noise = _streams(spec.seed)
    signal = random_signal(s_sig, spec.dims, spec.r, spec.min_separation, spec.damping)
    X = synthesize(signal).values
    mask = random_mask(s_mask, spec.dims, spec.m)
    obs_vals = np.array([X[k, l] for k, l in mask], dtype=complex)
    support = np.zeros(len(mask), dtype=bool)
    delta = spec.noise_delta
    if spec.noise_snr is not None:
        rms = np.linalg.norm(X) / math.sqrt(X.size)
        noise = gaussian_noise(s_noise, obs_vals.shape, rms / spec.noise_snr)
        obs_vals = obs_vals + noise
        if delta is None:
            delta = float(np.linalg.norm(noise))
    if spec.corruption_fraction > 0:
        obs_vals, support = corrupt(s_bad, obs_vals, spec.corruption_fraction,
                                    spec.corruption_scale, float(np.max(np.abs(X))))
    if spec.variant == "noisy" and delta is None:
        delta = 0.0
    observed = list(zip(mask, obs_vals))
    return signal, X, observed, delta, support


def trial_config(spec: TrialSpec, delta: float | None) -> SolverConfig:
    return SolverConfig(variant=spec.variant, max_iters=spec.max_iters, rel_tol=spec.rel_tol,
                        schedule=spec.schedule, delta=delta if spec.variant == "noisy" else None,
                        lam=spec.lam, dual_update=spec.dual_update)


def run_trial(spec: TrialSpec, keep_report: bool = False) -> TrialResult:
    """random_signal -> synthesize -> random_mask -> corrupt/noise -> solve -> nmse."""
    start = time.perf_counter()
    try:
        signal, X, observed, delta, support = build_trial(spec)
        shape = PencilShape(spec.dims, *spec.pencil) if spec.pencil else default_pencil(*spec.dims)
        report = solve(observed, spec.dims, shape, trial_config(spec, delta), truth=X)
    except EmacError as exc:
        return TrialResult(False, math.inf, 0, time.perf_counter() - start, reason=f"{type(exc).__name__}: {exc}")
    err = float(report.nmse)
    extra = {"n_corrupted": int(support.sum())}
    if keep_report:
        extra.update(report=report, signal=signal, truth=X, observed=observed, delta=delta)
    return TrialResult(success=err <= spec.success_nmse, nmse=err, iterations=report.iterations,
                       wallclock=time.perf_counter() - start, converged=report.converged, extra=extra)


def _threads() -> int:
    n = int(os.environ.get("EMAC_THREADS", "0") or 0)
    return n if n > 0 else (os.cpu_count() or 1)


def _worker_init():
    # keep each trial single-threaded so results do not depend on scheduling
    try:
        from threadpoolctl import threadpool_limits

        threadpool_limits(1)
    except ImportError:  # pragma: no cover
        pass


def _run_nmse(spec: TrialSpec) -> tuple[bool, float, int]:
    res = run_trial(spec)
    return res.success, res.nmse, res.iterations


def run_trials(specs, workers: int | None = None) -> list[tuple[bool, float, int]]:
    """Run trials, possibly in parallel; output order always follows ``specs``."""
    specs = list(specs)
    workers = _threads() if workers is None else workers
    if workers <= 1 or len(specs) <= 1:
        return [_run_nmse(s) for s in specs]
    with ProcessPoolExecutor(max_workers=workers, initializer=_worker_init) as pool:
        return list(pool.map(_run_nmse, specs, chunksize=max(1, len(specs) // (4 * workers))))


@dataclass
class PhaseDiagram:
    r_values: tuple[int, ...]
    m_values: tuple[int, ...]
    success_rate: np.ndarray
    trials_per_cell: int
    mean_nmse: np.ndarray | None = None


def phase_transition(dims, r_values, m_values, trials: int, variant: str = "exact",
                     base_seed: int = 0, workers: int | None = None, **spec_kwargs) -> PhaseDiagram:
    """Empirical success rate per (r, m) cell over ``trials`` seeded trials."""
    r_values, m_values = tuple(r_values), tuple(m_values)
    if not r_values or not m_values or trials < 1:
        raise ValueError("ranges must be nonempty and trials positive")
    specs, cells = [], []
    for i, r in enumerate(r_values):
        for j, m in enumerate(m_values):
            for t in range(trials):
                specs.append(TrialSpec(tuple(dims), r, m, variant=variant,
                                       seed=trial_seed(base_seed, r, m, t), **spec_kwargs))
                cells.append((i, j))
    results = run_trials(specs, workers)
    wins = np.zeros((len(r_values), len(m_values)))
    errs = np.zeros_like(wins)
    for (i, j), (ok, err, _) in zip(cells, results):
        wins[i, j] += ok
        errs[i, j] += min(err, 1e6)
    return PhaseDiagram(r_values, m_values, wins / trials, trials, errs / trials)


def transition_points(diagram: PhaseDiagram, level: float = 0.5) -> list[tuple[int, float]]:
    """For each r, the m at which the success rate first crosses ``level`` (linear interpolation)."""
    out = []
    ms = np.asarray(diagram.m_values, dtype=float)
    for r, row in zip(diagram.r_values, diagram.success_rate):
        if row[0] >= level:
            continue
        above = np.nonzero(row >= level)[0]
        if len(above) == 0:
            continue
        j = above[0]
        m0, m1, p0, p1 = ms[j - 1], ms[j], row[j - 1], row[j]
        out.append((int(r), float(m0 + (level - p0) * (m1 - m0) / (p1 - p0))))
    return out


def linear_fit(points) -> tuple[float, float, float]:
    """Least-squares m = slope * r + intercept; returns (slope, intercept, R^2)."""
    pts = np.asarray(points, dtype=float)
    if len(pts) < 2:
        return math.nan, math.nan, math.nan
    x, y = pts[:, 0], pts[:, 1]
    slope, intercept = np.polyfit(x, y, 1)
    ss_res = float(np.sum((y - (slope * x + intercept)) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


def monotone_violation(diagram: PhaseDiagram) -> float:
    """Largest drop of the success rate along increasing m, over all rows."""
    worst = 0.0
    for row in diagram.success_rate:
        running = np.maximum.accumulate(row)
        worst = max(worst, float(np.max(running - row)))
    return worst


def noise_sweep(spec: TrialSpec, deltas, trials: int = 1, workers: int | None = None) -> list[tuple[float, float]]:
    """Mean NMSE of the noisy solver per delta on noise-free data, ordered by delta."""
    deltas = sorted(float(d) for d in deltas)
    specs = [replace(spec, variant="noisy", noise_snr=None, noise_delta=d,
                     seed=trial_seed(_seed_int(spec.seed), t)) for d in deltas for t in range(trials)]
    results = run_trials(specs, workers)
    rows = []
    for i, d in enumerate(deltas):
        chunk = results[i * trials:(i + 1) * trials]
        rows.append((d, float(np.mean([err for _, err, _ in chunk]))))
    return rows


def _seed_int(seed) -> int:
    if isinstance(seed, (int, np.integer)):
        return int(seed)
    if isinstance(seed, np.random.SeedSequence):
        return int(seed.generate_state(1)[0])
    return int(np.random.SeedSequence(seed).generate_state(1)[0])


def loglog_slope(rows) -> float:
    pts = np.array([(d, e) for d, e in rows if d > 0 and e > 0])
    return float(np.polyfit(np.log(pts[:, 0]), np.log(pts[:, 1]), 1)[0])


@dataclass
class SuperResolutionResult:
    truth_image: np.ndarray
    lowres_image: np.ndarray
    reconstruction: np.ndarray
    reference: np.ndarray
    sources: list[tuple[int, int]]
    nmse: float
    solve_nmse: float
    iterations: int


def super_resolution_demo(grid_size: int = 32, n_sources: int = 6, f_lo_fraction: float = 0.125,
                          hi_ratio: float = 2.0, seed: int = 0, out_prefix: str | None = None,
                          sources=None, config: SolverConfig | None = None) -> SuperResolutionResult:
    """Extrapolate the spectrum of a point-source image from its low-frequency block.

    The spectrum samples F(k, l), |k|, |l| <= K_hi, form a spectrally sparse
    grid with one mode per source.  Only the central block |k|, |l| <= K_lo is
    observed, with K_lo = floor(f_lo_fraction * grid_size) and
    K_hi = floor(hi_ratio * K_lo).
    """
    N = int(grid_size)
    if not 0 < f_lo_fraction < 0.5:
        raise ValueError("f_lo_fraction must lie in (0, 0.5)")
    K_lo = int(math.floor(f_lo_fraction * N))
    K_hi = int(math.floor(hi_ratio * K_lo))
    if K_lo < 1 or 2 * K_hi + 1 > N:
        raise ValueError("band limits do not fit the image grid")
    rng = np.random.default_rng(seed)
    if sources is None:
        flat = rng.choice(N * N, size=n_sources, replace=False)
        sources = [(int(i // N), int(i % N)) for i in flat]
    sources = [tuple(s) for s in sources]
    image = np.zeros((N, N))
    for p, q in sources:
        image[p, q] = 1.0
    n = 2 * K_hi + 1
    ks = np.arange(-K_hi, K_hi + 1)
    # F(k, l) = sum_i exp(-j 2 pi (k p_i + l q_i) / N) is a sum of 2-D exponentials in (k, l)
    modes = []
    for p, q in sources:
        f = ((-p / N) % 1.0, (-q / N) % 1.0)
        amp = np.exp(2j * np.pi * (K_hi * p + K_hi * q) / N)
        modes.append(Mode(f, amp))
    spectrum = synthesize(SpectralSignal((n, n), tuple(modes))).values
    lo = np.abs(ks) <= K_lo
    observed = [((a, b), spectrum[a, b]) for a in range(n) for b in range(n) if lo[a] and lo[b]]
    config = config or SolverConfig(variant="exact", max_iters=2000)
    report = solve(observed, (n, n), default_pencil(n, n), config, truth=spectrum)

    def to_image(spec_block):
        full = np.zeros((N, N), dtype=complex)
        full[np.ix_(ks % N, ks % N)] = spec_block
        return np.fft.ifft2(full)

    low_block = np.where(lo[:, None] & lo[None, :], spectrum, 0)
    reference = to_image(spectrum)
    recon = to_image(report.recovered.values)
    lowres = to_image(low_block)
    result = SuperResolutionResult(image, lowres, recon, reference, sources,
                                   nmse=nmse(recon, reference), solve_nmse=float(report.nmse),
                                   iterations=report.iterations)
    if out_prefix:
        from .io import write_grid

        write_grid(f"{out_prefix}_truth.csv", image)
        write_grid(f"{out_prefix}_lowres.csv", lowres)
        write_grid(f"{out_prefix}_recon.csv", recon)
        write_grid(f"{out_prefix}_reference.csv", reference)
    return result


SVT_DEMO_FULL = dict(dims=(101, 101), r=30, m=600, snr=10.0)
SVT_DEMO_SCALED = dict(dims=(41, 41), r=8, m=round(0.06 * 41 * 41), snr=10.0)


# a 2601 x 2601 complex SVD takes ~20 s on one core; 120 iterations fit in an hour
SVT_DEMO_ITERS = {False: 500, True: 120}


def svt_demo(slow: bool = False, seed: int = 0, max_iters: int | None = None, out_prefix: str | None = None):
    """Noisy completion of a large grid at signal-to-noise amplitude ratio 10."""
    p = SVT_DEMO_FULL if slow else SVT_DEMO_SCALED
    max_iters = SVT_DEMO_ITERS[slow] if max_iters is None else max_iters
    spec = TrialSpec(p["dims"], p["r"], p["m"], variant="noisy", noise_snr=p["snr"],
                     seed=seed, max_iters=max_iters)
    res = run_trial(spec, keep_report=True)
    if out_prefix and "report" in res.extra:
        from .io import write_grid, write_trace

        write_grid(f"{out_prefix}_truth.csv", res.extra["truth"])
        write_grid(f"{out_prefix}_recovered.csv", res.extra["report"].recovered)
        write_trace(f"{out_prefix}_trace.csv", res.extra["report"].trace)
    return res
