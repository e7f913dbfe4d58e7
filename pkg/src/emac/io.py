"""File formats: signal JSON, grid/mask/trace/phase CSV."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch
from .signal import DataGrid, Mode, SpectralSignal


def signal_to_dict(signal: SpectralSignal) -> dict:
    modes = []
    for m in signal.modes:
        entry = {"f": list(m.freq), "amp": [m.amplitude.real, m.amplitude.imag]}
        if any(d != 1.0 for d in m.damping):
            entry["damp"] = list(m.damping)
        modes.append(entry)
    return {"dims": list(signal.dims), "modes": modes}


def signal_from_dict(data: dict) -> SpectralSignal:
    modes = []
    for entry in data.get("modes", []):
        re, im = entry["amp"]
        modes.append(Mode(tuple(entry["f"]), complex(re, im), tuple(entry["damp"]) if "damp" in entry else None))
    return SpectralSignal(tuple(data["dims"]), tuple(modes))


def write_signal(path, signal: SpectralSignal) -> None:
    Path(path).write_text(json.dumps(signal_to_dict(signal), indent=2))


def read_signal(path) -> SpectralSignal:
    return signal_from_dict(json.loads(Path(path).read_text()))


def write_grid(path, grid) -> None:
    values = np.asarray(getattr(grid, "values", grid), dtype=complex)
    if values.ndim == 1:
        values = values[:, None]
    n1, n2 = values.shape
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([n1, n2])
        for k in range(n1):
            for l in range(n2):
                v = values[k, l]
                w.writerow([k, l, repr(float(v.real)), repr(float(v.imag))])


def read_grid(path) -> DataGrid:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    n1, n2 = (int(x) for x in rows[0])
    values = np.zeros((n1, n2), dtype=complex)
    body = [r for r in rows[1:] if r]
    if len(body) != n1 * n2:
        raise DimensionMismatch(f"expected {n1 * n2} entries, found {len(body)}")
    for k, l, re, im in body:
        values[int(k), int(l)] = complex(float(re), float(im))
    return DataGrid(values)


def write_mask(path, indices) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "l"])
        w.writerows([int(k), int(l)] for k, l in indices)


def read_mask(path) -> list[tuple[int, int]]:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    return [(int(k), int(l)) for k, l in rows[1:]]


def write_trace(path, trace) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "tau", "residual", "rank"])
        for row in trace:
            w.writerow([row.t, repr(row.tau), repr(row.residual), row.rank])


def write_phase(path, diagram) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "m", "success_rate", "trials"])
        for i, r in enumerate(diagram.r_values):
            for j, m in enumerate(diagram.m_values):
                w.writerow([r, m, repr(float(diagram.success_rate[i, j])), diagram.trials_per_cell])


def read_phase(path):
    from .harness import PhaseDiagram

    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    rs = sorted({int(r["r"]) for r in rows})
    ms = sorted({int(r["m"]) for r in rows})
    rate = np.zeros((len(rs), len(ms)))
    trials = int(rows[0]["trials"]) if rows else 0
    for row in rows:
        rate[rs.index(int(row["r"])), ms.index(int(row["m"]))] = float(row["success_rate"])
    return PhaseDiagram(tuple(rs), tuple(ms), rate, trials)
