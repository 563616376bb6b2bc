"""Command line entry point: ``python -m solitonlab <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import SolitonLabError
from .evolution import EvolutionState, evolve, load_checkpoint, save_checkpoint
from .ground_state import decay_rate, mass_and_derivative, profile_to_json, rescale
from .harness import ExperimentConfig, build_initial_data, emit_outputs, emit_sweep, load_config, run_compare, run_sweep
from .manifold import ManifoldPoint, base_profile
from .modulation import decompose
from .particles import ParticleState, integrate


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    changes = {}
    if args.eps is not None and not isinstance(args.eps, list):
        changes["eps"] = args.eps
    if args.h is not None:
        changes["h"] = args.h
    if args.dt is not None:
        changes["dt"] = args.dt
    if args.phase_sign is not None:
        changes["phase_sign"] = 1 if args.phase_sign == "+" else -1
    if args.out is not None:
        changes["out"] = args.out
    cfg = cfg.replace(**changes)
    if args.frames:
        cfg = cfg.replace(cadence=cfg.t_end / cfg.eps / args.frames)
    return cfg


def _out(cfg: ExperimentConfig, args) -> Path:
    path = Path(args.out or cfg.out or "out")
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_ground_state(args) -> int:
    cfg = _config(args)
    cfg.validate()
    prof = rescale(base_profile(cfg.nonlinearity()), cfg.solitons[0]["mu"], cfg.eps, cfg.mu_range)
    out = _out(cfg, args)
    (out / "profile.json").write_text(profile_to_json(prof))
    m, dm = mass_and_derivative(prof)
    fit = decay_rate(prof)
    info = {"mass": m, "dmass": dm, "decay_rate": fit.rate, "window_shrunk": fit.shrunk}
    (out / "ground_state.json").write_text(json.dumps(info, indent=2))
    print(json.dumps(info))
    return 0


def cmd_evolve(args) -> int:
    cfg = _config(args)
    psi, point, grid = build_initial_data(cfg)
    state = EvolutionState(psi, 0.0, cfg.eps, grid, cfg.potential_spec(), cfg.nonlinearity())
    stride = max(1, int(round(cfg.cadence_time() / cfg.time_step())))
    final, rows = evolve(state, cfg.t_end / cfg.eps, cfg.time_step(), stride)
    out = _out(cfg, args)
    save_checkpoint(out / "checkpoint.json.gz", final)
    with open(out / "conserved.csv", "w") as fh:
        fh.write("t_scaled,mass,energy\n")
        for r in rows:
            fh.write(f"{cfg.eps * r['t']!r},{r['mass']!r},{r['energy']!r}\n")
    (out / "point.json").write_text(point.to_json())
    return 0


def cmd_decompose(args) -> int:
    cfg = _config(args)
    out = _out(cfg, args)
    state = load_checkpoint(args.checkpoint or out / "checkpoint.json.gz")
    guess = cfg.manifold_point()
    if args.guess:
        guess = ManifoldPoint.from_json(Path(args.guess).read_text())
    dec = decompose(state.psi, guess, state.grid)
    (out / "decomposition.json").write_text(dec.point.to_json())
    print(json.dumps({"iterations": dec.iterations, "w_h1": dec.w_norm(state.grid), "max_residual": dec.max_residual}))
    return 0


def cmd_ode(args) -> int:
    cfg = _config(args)
    cfg.validate()
    state = ParticleState.from_point(cfg.manifold_point(), cfg.potential_spec(), 0.0, cfg.phase_sign)
    series = integrate(state, cfg.t_end, cfg.dt_ode)
    out = _out(cfg, args)
    n = cfg.dim
    with open(out / "ode.csv", "w") as fh:
        fh.write(",".join(["t_scaled", "soliton_index"] + [f"a[{i}]" for i in range(n)] + [f"v[{i}]" for i in range(n)] + ["gamma", "mu"]) + "\n")
        for f, t in enumerate(series.t):
            for j in range(series.a.shape[1]):
                vals = [t, j, *series.a[f, j], *series.v[f, j], series.gamma[f, j], series.mu[f, j]]
                fh.write(",".join(repr(float(x)) if not isinstance(x, int) else str(x) for x in vals) + "\n")
    return 0


def cmd_compare(args) -> int:
    cfg = _config(args)
    record = run_compare(cfg)
    summary = emit_outputs(record, _out(cfg, args))
    print(json.dumps({k: summary[k] for k in ("status", "frames", "sup_w_h1", "max_trajectory_error")}))
    return 0 if record.status == "complete" else 2


def cmd_sweep(args) -> int:
    cfg = _config(args)
    eps_list = args.eps_list or [0.2, 0.1, 0.05]
    report = run_sweep(cfg, eps_list, workers=args.workers)
    doc = emit_sweep(report, _out(cfg, args))
    print(json.dumps(doc["slopes"]))
    return 0 if not report.flagged else 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="solitonlab", description="semiclassical NLS soliton laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON experiment configuration")
        p.add_argument("--out", help="output directory")
        p.add_argument("--h", type=float, help="potential scale exponent, eps_v = eps^h")
        p.add_argument("--phase-sign", choices=["+", "-"], help="sign of |v|^2/4 in the phase equation")
        p.add_argument("--frames", type=int, help="number of tracked frames over the horizon")
        p.add_argument("--dt", type=float, help="PDE time step (unscaled time)")
        return p

    for name, fn in [
        ("ground-state", cmd_ground_state),
        ("evolve", cmd_evolve),
        ("decompose", cmd_decompose),
        ("ode", cmd_ode),
        ("compare", cmd_compare),
    ]:
        p = common(sub.add_parser(name))
        p.add_argument("--eps", type=float, help="semiclassical parameter")
        p.set_defaults(func=fn)
        if name == "decompose":
            p.add_argument("--checkpoint", help="gzip JSON checkpoint to decompose")
            p.add_argument("--guess", help="manifold point JSON used as initial guess")

    p = common(sub.add_parser("sweep"))
    p.add_argument("--eps", dest="eps_list", type=float, nargs="+", help="eps values (at least three)")
    p.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    p.set_defaults(func=cmd_sweep, eps=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SolitonLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
