"""Report files: run.csv, summary.json and plotdata/*.csv.

Floats are written with ``repr`` so identical runs produce byte-identical CSV.
Wall-clock time lives only in summary.json.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .runner import RunRecord, SweepReport

__all__ = ["emit_outputs", "emit_sweep", "run_csv_header", "read_run_csv"]


def run_csv_header(dim: int) -> list:
    return (
        ["t_scaled", "soliton_index"]
        + [f"a[{i}]" for i in range(dim)]
        + [f"v[{i}]" for i in range(dim)]
        + ["gamma_mod2pi", "mu", "w_h1", "beta_inf", "x_delta", "mass", "energy", "energy_gap"]
    )


def _fmt(x) -> str:
    x = float(x)
    return "nan" if math.isnan(x) else repr(x)


def _write_csv(path: Path, header, rows):
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as exc:
        raise OSError(f"could not write {path}: {exc}") from exc


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def emit_outputs(record: RunRecord, out_dir, checks: dict | None = None, dim: int | None = None) -> dict:
    """Write the report files for one run; returns the summary dictionary."""
    out = Path(out_dir)
    try:
        (out / "plotdata").mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"could not create output directory {out}: {exc}") from exc
    n = record.dim or (dim if dim is not None else record.config.get("dim", 1))
    rows = []
    if record.frames:
        beta = record.beta_inf()
        two_pi = 2 * math.pi
        for f in range(record.frames):
            for j in range(record.k):
                p = record.params[f, j]
                rows.append(
                    [_fmt(record.t_scaled[f]), str(j)]
                    + [_fmt(x) for x in p[:n]]
                    + [_fmt(x) for x in p[n : 2 * n]]
                    + [
                        _fmt(p[2 * n] % two_pi),
                        _fmt(p[2 * n + 1]),
                        _fmt(record.w_h1[f]),
                        _fmt(beta[f, j]),
                        _fmt(record.x_delta[f, j]),
                        _fmt(record.mass[f]),
                        _fmt(record.energy[f]),
                        _fmt(record.energy_gap[f, j]),
                    ]
                )
    _write_csv(out / "run.csv", run_csv_header(n), rows)

    if record.frames:
        err = record.trajectory_error()
        traj = []
        for f in range(record.frames):
            for j in range(record.k):
                traj.append(
                    [_fmt(record.t_scaled[f]), str(j)]
                    + [_fmt(x) for x in record.params[f, j, :n]]
                    + [_fmt(x) for x in record.ode_a[f, j]]
                    + [_fmt(record.params[f, j, 2 * n]), _fmt(record.ode_gamma[f, j]), _fmt(err[f, j])]
                )
        header = (
            ["t_scaled", "soliton_index"]
            + [f"a_pde[{i}]" for i in range(n)]
            + [f"a_ode[{i}]" for i in range(n)]
            + ["gamma_pde", "gamma_ode", "trajectory_error"]
        )
        _write_csv(out / "plotdata" / "trajectory.csv", header, traj)
        cons = [[_fmt(t), _fmt(m), _fmt(e), _fmt(w)] for t, m, e, w in zip(record.t_scaled, record.mass, record.energy, record.w_h1)]
        _write_csv(out / "plotdata" / "conserved.csv", ["t_scaled", "mass", "energy", "w_h1"], cons)
        brows = []
        for f in range(record.frames):
            for j in range(record.k):
                brows.append([_fmt(record.t_scaled[f]), str(j)] + [_fmt(b) for b in record.beta[f, j]])
        bheader = ["t_scaled", "soliton_index"] + [f"beta[{m}]" for m in range(2 * n + 2)]
        _write_csv(out / "plotdata" / "beta.csv", bheader, brows)

    summary = record.summary()
    summary["metadata"] = record.metadata
    summary["config"] = record.config
    if checks is not None:
        summary["checks"] = checks
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, default=_json_default)
    return summary


def emit_sweep(report: SweepReport, out_dir) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for e, rec in zip(report.eps, report.records):
        emit_outputs(rec, out / f"eps_{e:g}")
    header = list(report.rows[0].keys()) if report.rows else ["eps"]
    _write_csv(out / "sweep.csv", header, [[r[h] if isinstance(r[h], str) else _fmt(r[h]) for h in header] for r in report.rows])
    doc = {"eps": report.eps, "slopes": report.slopes, "flagged": report.flagged, "rows": report.rows}
    with open(out / "sweep.json", "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=_json_default)
    return doc


def read_run_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, [[float(x) if x not in ("",) else math.nan for x in row] for row in reader]
