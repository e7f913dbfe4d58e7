"""Command line interface: ``emac <subcommand>``."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import harness, io
from .errors import EmacError
from .hankel import PencilShape, default_pencil
from .incoherence import incoherence_report
from .retrieval import matrix_pencil_1d
from .signal import synthesize
from .solvers import SolverConfig, solve


def _pencil(dims, k1, k2):
    if k1 is None and k2 is None:
        return default_pencil(*dims)
    base = default_pencil(*dims)
    return PencilShape(dims, k1 or base.k1, k2 or base.k2)


def _dims(text):
    parts = [int(p) for p in text.replace("x", ",").split(",") if p]
    return (parts[0], parts[1] if len(parts) > 1 else 1)


def _ints(text):
    """Comma list or start:stop:step range (inclusive stop)."""
    if ":" in text:
        a, b, *c = (int(p) for p in text.split(":"))
        return list(range(a, b + 1, c[0] if c else 1))
    return [int(p) for p in text.split(",") if p]


def cmd_gen(a):
    sig = harness.random_signal(a.seed, _dims(a.dims), a.r, a.min_sep)
    io.write_signal(a.out, sig)
    if a.grid:
        io.write_grid(a.grid, synthesize(sig))


def cmd_sample(a):
    grid = io.read_grid(a.grid)
    io.write_mask(a.out, harness.random_mask(a.seed, grid.dims, a.m))


def cmd_corrupt(a):
    grid = io.read_grid(a.grid)
    mask = io.read_mask(a.mask)
    vals = np.array([grid.values[k, l] for k, l in mask])
    bad, support = harness.corrupt(a.seed, vals, a.fraction, a.scale,
                                   float(np.max(np.abs(grid.values))))
    out = np.array(grid.values)
    for (k, l), v in zip(mask, bad):
        out[k, l] = v
    io.write_grid(a.out, out)
    if a.support:
        io.write_mask(a.support, [kl for kl, s in zip(mask, support) if s])


def cmd_solve(a):
    grid = io.read_grid(a.grid)
    mask = io.read_mask(a.mask) if a.mask else [(k, l) for k in range(grid.dims[0]) for l in range(grid.dims[1])]
    observed = [((k, l), grid.values[k, l]) for k, l in mask]
    lam = a.lam if a.lam == "auto" else float(a.lam)
    config = SolverConfig(variant=a.variant, max_iters=a.max_iters, rel_tol=a.tol,
                          delta=a.delta if a.variant == "noisy" else None, lam=lam,
                          schedule=a.schedule, dual_update=not a.no_multiplier)
    truth = io.read_grid(a.truth) if a.truth else None
    report = solve(observed, grid.dims, _pencil(grid.dims, a.k1, a.k2), config, truth)
    io.write_grid(a.out, report.recovered)
    if a.trace:
        io.write_trace(a.trace, report.trace)
    summary = {"iterations": report.iterations, "converged": report.converged}
    if report.nmse is not None:
        summary["nmse"] = report.nmse
    print(json.dumps(summary))
    return 0 if report.converged else 2


def cmd_retrieve(a):
    grid = io.read_grid(a.grid)
    if grid.dims[1] != 1:
        raise SystemExit("retrieve works on 1-D grids (n2 = 1)")
    print(json.dumps(matrix_pencil_1d(grid.values[:, 0], a.r, a.k).to_dict(), indent=2))


def cmd_incoherence(a):
    sig = io.read_signal(a.signal)
    rep = incoherence_report(sig.freqs, _pencil(sig.dims, a.k1, a.k2))
    print(json.dumps(rep.to_dict(), indent=2))


def cmd_phase(a):
    diagram = harness.phase_transition(_dims(a.dims), _ints(a.r), _ints(a.m), a.trials,
                                       variant=a.variant, base_seed=a.seed,
                                       success_nmse=a.success_nmse)
    io.write_phase(a.out, diagram)
    fit = harness.linear_fit(harness.transition_points(diagram))
    print(json.dumps({"slope": fit[0], "intercept": fit[1], "r2": fit[2],
                      "monotone_violation": harness.monotone_violation(diagram)}))


def cmd_noise_sweep(a):
    spec = harness.TrialSpec(_dims(a.dims), a.r, a.m, variant="noisy", seed=a.seed)
    deltas = [float(d) for d in a.deltas.split(",")]
    rows = harness.noise_sweep(spec, deltas, trials=a.trials)
    out = open(a.out, "w") if a.out else sys.stdout
    try:
        out.write("delta,nmse\n")
        for d, e in rows:
            out.write(f"{d!r},{e!r}\n")
    finally:
        if a.out:
            out.close()


def cmd_demo_sr(a):
    res = harness.super_resolution_demo(a.grid_size, a.sources, a.f_lo, seed=a.seed, out_prefix=a.out_prefix)
    print(json.dumps({"nmse": res.nmse, "iterations": res.iterations, "sources": res.sources}))


def cmd_demo_svt(a):
    res = harness.svt_demo(slow=a.slow, seed=a.seed, max_iters=a.max_iters, out_prefix=a.out_prefix)
    print(json.dumps({"nmse": res.nmse, "iterations": res.iterations, "converged": res.converged,
                      "wallclock": res.wallclock}))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="emac", description="Spectral compressed sensing via enhanced matrix completion")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("gen", help="draw a random spectrally sparse signal")
    s.add_argument("--dims", required=True, help="n1 or n1,n2")
    s.add_argument("--r", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--min-sep", type=float, default=None)
    s.add_argument("--out", required=True, help="signal JSON")
    s.add_argument("--grid", help="also write the synthesized grid CSV")
    s.set_defaults(func=cmd_gen)

    s = sub.add_parser("sample", help="draw a uniform sampling mask")
    s.add_argument("--grid", required=True)
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("corrupt", help="add sparse outliers to the sampled entries")
    s.add_argument("--grid", required=True)
    s.add_argument("--mask", required=True)
    s.add_argument("--fraction", type=float, required=True)
    s.add_argument("--scale", type=float, default=1.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--support", help="write corrupted indices as a mask CSV")
    s.set_defaults(func=cmd_corrupt)

    s = sub.add_parser("solve", help="complete a grid from observed entries")
    s.add_argument("--grid", required=True)
    s.add_argument("--mask")
    s.add_argument("--variant", choices=["exact", "noisy", "robust"], default="exact")
    s.add_argument("--delta", type=float)
    s.add_argument("--lambda", dest="lam", default="auto")
    s.add_argument("--k1", type=int)
    s.add_argument("--k2", type=int)
    s.add_argument("--max-iters", type=int, default=500)
    s.add_argument("--tol", type=float, default=1e-6)
    s.add_argument("--schedule", default=None, help="paper, adaptive, initial or a fixed threshold")
    s.add_argument("--no-multiplier", action="store_true", help="plain shrink/project iteration")
    s.add_argument("--out", required=True)
    s.add_argument("--truth")
    s.add_argument("--trace")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("retrieve", help="matrix pencil frequency retrieval on a 1-D grid")
    s.add_argument("--grid", required=True)
    s.add_argument("--r", type=int, required=True)
    s.add_argument("--k", type=int)
    s.set_defaults(func=cmd_retrieve)

    s = sub.add_parser("incoherence", help="incoherence report for a signal")
    s.add_argument("--signal", required=True)
    s.add_argument("--k1", type=int)
    s.add_argument("--k2", type=int)
    s.set_defaults(func=cmd_incoherence)

    s = sub.add_parser("phase", help="phase transition experiment")
    s.add_argument("--dims", default="11,11")
    s.add_argument("--r", default="1:6", help="list or start:stop[:step]")
    s.add_argument("--m", default="10:115:15")
    s.add_argument("--trials", type=int, default=50)
    s.add_argument("--variant", default="exact")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--success-nmse", type=float, default=harness.SUCCESS_NMSE)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_phase)

    s = sub.add_parser("noise-sweep", help="noisy solver NMSE against delta")
    s.add_argument("--dims", default="11,11")
    s.add_argument("--r", type=int, default=4)
    s.add_argument("--m", type=int, default=50)
    s.add_argument("--deltas", required=True, help="comma separated")
    s.add_argument("--trials", type=int, default=1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_noise_sweep)

    s = sub.add_parser("demo-sr", help="super-resolution of point sources")
    s.add_argument("--grid-size", type=int, default=32)
    s.add_argument("--sources", type=int, default=6)
    s.add_argument("--f-lo", type=float, default=0.125)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out-prefix")
    s.set_defaults(func=cmd_demo_sr)

    s = sub.add_parser("demo-svt", help="large noisy completion demo")
    s.add_argument("--slow", action="store_true", help="full 101x101 scale")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--max-iters", type=int, default=None, help="default 500 (scaled) or 120 (full)")
    s.add_argument("--out-prefix")
    s.set_defaults(func=cmd_demo_svt)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "schedule", None) not in (None, "paper", "adaptive"):
        args.schedule = float(args.schedule)
    try:
        code = args.func(args)
    except EmacError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return code or 0


if __name__ == "__main__":
    sys.exit(main())
