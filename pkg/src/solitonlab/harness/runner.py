"""Initial data, tracked PDE runs, particle comparison and eps sweeps."""

from __future__ import annotations

import logging
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .. import __version__
from ..diagnostics import energy_gap
from ..errors import ConfigError, DecompositionError, SolitonLabError, TruncationGeometryError
from ..evolution import Propagator
from ..manifold import ManifoldPoint, boost_phase, sum_solitons, tangent_basis
from ..modulation import TruncationSet, beta_from_trajectory, correction_terms, decompose, full_jacobian
from ..particles import ParticleState, integrate
from .config import ExperimentConfig

log = logging.getLogger(__name__)

__all__ = ["RunRecord", "build_initial_data", "run_compare", "run_sweep", "SweepReport", "fit_slope"]


# ---------------------------------------------------------------------------
# initial data


def _frame_list(point: ManifoldPoint, grid):
    return [z for j in range(point.k) for z in tangent_basis(point, grid, j)]


def _perturbation(config: ExperimentConfig, point: ManifoldPoint, grid):
    eps = config.eps
    if config.perturbation == "bump":
        sigma = point[0]
        center = np.asarray(sigma.a) + config.bump_offset * eps
        r2 = sum(d**2 for d in grid.displacement(center))
        bump = np.exp(-r2 / (2 * (config.bump_width * eps) ** 2)) * boost_phase(grid, sigma, eps)
    else:
        rng = np.random.default_rng(config.seed)
        bump = np.zeros(grid.shape, dtype=complex)
        for _ in range(3):
            sigma = point[int(rng.integers(point.k))]
            center = np.asarray(sigma.a) + rng.uniform(-2, 2, size=config.dim) * eps
            width = rng.uniform(0.5, 2.0) * eps
            amp = rng.normal() + 1j * rng.normal()
            r2 = sum(d**2 for d in grid.displacement(center))
            bump += amp * np.exp(-r2 / (2 * width**2)) * boost_phase(grid, sigma, eps)
    # symplectic projection off every tangent direction, then unit H1 norm
    frames = _frame_list(point, grid)
    omega = full_jacobian(point, grid)
    G = np.array([grid.symplectic(bump, z, eps) for z in frames])
    coeffs = np.linalg.solve(omega.T, G)
    bump = bump - sum(c * z for c, z in zip(coeffs, frames))
    return bump / grid.h1_norm(bump, eps)


def build_initial_data(config: ExperimentConfig):
    """``psi_0 = sum Psi_{sigma_l} + c eps_v bump`` together with its manifold point and grid."""
    config.validate()
    grid = config.grid()
    point = config.manifold_point()
    psi = sum_solitons(point, grid)
    if config.c > 0:
        psi = psi + config.c * config.eps_v * _perturbation(config, point, grid)
    return psi, point, grid


# ---------------------------------------------------------------------------
# records


@dataclass
class RunRecord:
    config: dict
    t_scaled: np.ndarray
    params: np.ndarray  # (frames, k, 2N+2), gamma unwrapped
    w_h1: np.ndarray  # (frames,)
    mass: np.ndarray
    energy: np.ndarray
    energy_gap: np.ndarray  # (frames, k)
    x_delta: np.ndarray  # (frames, k)
    beta: np.ndarray  # (frames, k, 2N+2), nan at the end frames
    ode_a: np.ndarray  # (frames, k, N)
    ode_gamma: np.ndarray  # (frames, k)
    status: str = "complete"
    message: str = ""
    windows: int = 1
    metadata: dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        return self.params.shape[1] if self.params.ndim == 3 else 0

    @property
    def dim(self) -> int:
        return (self.params.shape[2] - 2) // 2 if self.params.ndim == 3 else 0

    @property
    def frames(self) -> int:
        return len(self.t_scaled)

    def trajectory_error(self) -> np.ndarray:
        """``|a_PDE - a_ODE|`` per frame and soliton."""
        n = self.dim
        return np.linalg.norm(self.params[..., :n] - self.ode_a, axis=-1)

    def beta_inf(self) -> np.ndarray:
        with np.errstate(invalid="ignore"):
            return np.max(np.abs(self.beta), axis=-1)

    def summary(self) -> dict:
        if self.frames == 0:
            return {"status": "empty", "frames": 0}
        n = self.dim
        beta = self.beta_inf()
        finite = np.isfinite(beta)
        mu = self.params[..., 2 * n + 1]
        return {
            "status": self.status,
            "message": self.message,
            "frames": int(self.frames),
            "t_scaled_end": float(self.t_scaled[-1]),
            "windows": int(self.windows),
            "sup_w_h1": float(np.max(self.w_h1)),
            "sup_beta_inf": float(np.max(beta[finite])) if finite.any() else None,
            "sup_beta_rows": np.nanmax(np.abs(self.beta), axis=(0, 1)).tolist() if finite.any() else None,
            "mu_drift": float(np.max(np.abs(mu - mu[0]))),
            "max_trajectory_error": float(np.max(self.trajectory_error())),
            "trajectory_error_per_soliton": np.max(self.trajectory_error(), axis=0).tolist(),
            "sup_x_delta": float(np.max(self.x_delta)),
            "mass_drift": float(np.max(np.abs(self.mass - self.mass[0])) / abs(self.mass[0])),
            "energy_drift": float(np.max(np.abs(self.energy - self.energy[0])) / abs(self.energy[0])),
        }


# ---------------------------------------------------------------------------
# tracking


@dataclass
class _Track:
    t: list = field(default_factory=list)
    params: list = field(default_factory=list)
    w: list = field(default_factory=list)
    mass: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    gap: list = field(default_factory=list)
    xd: list = field(default_factory=list)
    status: str = "complete"
    message: str = ""
    windows: int = 1


def _predict(track: _Track, point: ManifoldPoint) -> ManifoldPoint:
    if len(track.params) < 2:
        return point
    guess = 2 * track.params[-1] - track.params[-2]
    return point.with_vector(guess)


def _schedule(config: ExperimentConfig, dt: float):
    """Step size, frame stride and step count landing exactly on ``t_end``."""
    t_end = config.t_end / config.eps
    stride = max(1, int(round(config.cadence_time() / dt)))
    n_steps = max(1, math.ceil(t_end / dt - 1e-9))
    return t_end / n_steps, stride, n_steps


def _track(config: ExperimentConfig, psi0, point0: ManifoldPoint, grid, refine: int = 1) -> _Track:
    """Evolve the PDE and decompose at the cadence until ``t_end`` or failure.

    ``refine`` divides the step and multiplies the stride, so the frames sit at
    the same times as the unrefined run.
    """
    eps = config.eps
    pot = config.potential_spec()
    nl = config.nonlinearity()
    prop = Propagator(grid, eps, pot, nl)
    dt, stride, n_steps = _schedule(config, config.time_step())
    dt, stride, n_steps = dt / refine, stride * refine, n_steps * refine
    cuts = TruncationSet.from_point(point0, config.cut_radius)
    anchor_every = config.anchor_window / eps
    next_anchor = anchor_every
    track = _Track()
    point = point0
    psi = psi0
    ref = np.max(np.abs(psi0))
    seam = 8 * eps / math.sqrt(config.mu_range[0])

    def observe(step, psi):
        nonlocal point, cuts, next_anchor
        t = step * dt
        dec = decompose(psi, _predict(track, point), grid)
        point = dec.point
        if t >= next_anchor - 1e-9 and point.k > 1:
            cuts = TruncationSet.from_point(point, config.cut_radius)
            next_anchor += anchor_every
            track.windows += 1
        cuts.check_point(point)
        for s in point.solitons:
            if grid.seam_distance(s.a) < seam:
                raise TruncationGeometryError(f"soliton at {s.a} reached the periodic seam")
        diag = prop.diagnostics(psi)
        rep = energy_gap(psi, dec, cuts, grid)
        xd = correction_terms(dec, cuts, pot, grid)
        track.t.append(eps * t)
        track.params.append(point.vector())
        track.w.append(dec.w_norm(grid))
        track.mass.append(diag["mass"])
        track.energy.append(diag["energy"])
        track.gap.append(rep.gaps)
        track.xd.append(np.max(np.abs(xd), axis=1))

    try:
        observe(0, psi)
        done = 0
        while done < n_steps:
            n = min(stride, n_steps - done)
            psi = prop.advance(psi, dt, n)
            done += n
            prop.guard(psi, done * dt, ref)
            observe(done, psi)
    except DecompositionError as exc:
        track.status, track.message = "decomposition_failed", str(exc)
    except TruncationGeometryError as exc:
        track.status, track.message = "geometry_failed", str(exc)
    except SolitonLabError as exc:
        track.status, track.message = "failed", str(exc)
    return track


def _reshape(track: _Track, k: int, n: int):
    return np.array(track.params).reshape(len(track.t), k, 2 * n + 2)


def run_compare(config: ExperimentConfig) -> RunRecord:
    """Tracked PDE run compared against the particle ODE started from ``sigma(0)``."""
    started = time.perf_counter()
    notes = config.validate()
    if notes and config.extend:
        config = config.replace(extend=False)
        log.warning("window extension disabled: %s", "; ".join(notes))
    psi0, point0, grid = build_initial_data(config)
    dec0 = decompose(psi0, point0, grid)
    point0 = dec0.point
    k, n = point0.k, point0.dim
    dt = _schedule(config, config.time_step())[0]
    pot = config.potential_spec()

    track = _track(config, psi0, point0, grid)
    params = _reshape(track, k, n)
    t = np.array(track.t)
    beta = np.full_like(params, np.nan)
    if len(t) >= 3:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            beta[1:-1] = beta_from_trajectory(t / config.eps, params, pot, config.eps).beta
    if config.richardson and len(t) >= 3:
        fine = _track(config, psi0, point0, grid, refine=2)
        if fine.status == "complete" and len(fine.t) == len(t) and np.allclose(fine.t, t, rtol=1e-12, atol=0):
            fparams = _reshape(fine, k, n)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                fbeta = beta_from_trajectory(t / config.eps, fparams, pot, config.eps).beta
            beta[1:-1] = (4 * fbeta - beta[1:-1]) / 3
        else:
            track.status = "richardson_failed"
    if len(t) >= 4:
        gaps = np.diff(t)
        if not math.isclose(gaps[-1], gaps[-2], rel_tol=1e-9):
            # the last stride is partial, so the centered difference next to it is lopsided
            beta[-2] = np.nan

    state = ParticleState.from_point(point0, pot, 0.0, config.phase_sign)
    if len(t) and t[-1] > 0:
        series = integrate(state, float(t[-1]), config.dt_ode)
        ode_a = series.at(t)
        ode_gamma = np.stack([np.interp(t, series.t, series.gamma[:, j]) for j in range(k)], axis=-1)
    else:
        ode_a = params[..., :n].copy()
        ode_gamma = params[..., 2 * n].copy()

    meta = {
        "config_hash": config.digest(),
        "version": __version__,
        "wall_time": time.perf_counter() - started,
        "dt": dt,
        "box": grid.length,
        "points": grid.points,
        "eps_v": config.eps_v,
    }
    return RunRecord(
        config=config.to_dict(),
        t_scaled=t,
        params=params,
        w_h1=np.array(track.w),
        mass=np.array(track.mass),
        energy=np.array(track.energy),
        energy_gap=np.array(track.gap).reshape(len(t), k),
        x_delta=np.array(track.xd).reshape(len(t), k),
        beta=beta,
        ode_a=ode_a,
        ode_gamma=ode_gamma,
        status=track.status,
        message=track.message,
        windows=track.windows,
        metadata=meta,
    )


# ---------------------------------------------------------------------------
# sweeps


def fit_slope(x, y, level: float = 0.95) -> dict:
    """Least-squares slope of ``log y`` against ``log x`` with a t-based confidence interval."""
    lx, ly = np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float))
    res = stats.linregress(lx, ly)
    dof = len(lx) - 2
    if dof > 0 and np.isfinite(res.stderr):
        half = float(stats.t.ppf(0.5 + level / 2, dof) * res.stderr)
    else:
        half = float("nan")
    return {"slope": float(res.slope), "intercept": float(res.intercept), "ci": [res.slope - half, res.slope + half]}


@dataclass
class SweepReport:
    eps: list
    records: list
    slopes: dict
    flagged: bool
    rows: list


def _member(config: ExperimentConfig) -> RunRecord:
    return run_compare(config)


def run_sweep(template: ExperimentConfig, eps_list, workers: int = 1) -> SweepReport:
    """Run ``template`` at each ``eps`` and fit the scaling slopes.

    Slopes: ``sup_t ||w||`` and ``sup_t |beta|`` against ``eps_v`` and the
    final trajectory error against ``eps_v^2/eps * t'``.
    """
    eps_list = [float(e) for e in eps_list]
    if len(eps_list) < 3:
        raise ConfigError("a sweep needs at least three eps values")
    configs = [template.replace(eps=e, out=None) for e in eps_list]
    for c in configs:
        c.validate()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_member, configs))
    else:
        records = [_member(c) for c in configs]
    flagged = any(r.status != "complete" for r in records)
    rows = []
    for e, c, r in zip(eps_list, configs, records):
        s = r.summary()
        rows.append(
            {
                "eps": e,
                "eps_v": c.eps_v,
                "status": r.status,
                "sup_w_h1": s.get("sup_w_h1"),
                "sup_beta_inf": s.get("sup_beta_inf"),
                "mu_drift": s.get("mu_drift"),
                "mu_drift_scale": c.eps_v**2 / e,
                "max_trajectory_error": s.get("max_trajectory_error"),
                "trajectory_scale": c.eps_v**2 / e * (r.t_scaled[-1] if r.frames else 0.0),
            }
        )
    ok = [row for row in rows if row["status"] == "complete"]
    slopes = {}
    if len(ok) >= 2:
        ev = [row["eps_v"] for row in ok]
        slopes["w_vs_eps_v"] = fit_slope(ev, [row["sup_w_h1"] for row in ok])
        slopes["beta_vs_eps_v"] = fit_slope(ev, [row["sup_beta_inf"] for row in ok])
        errs = [row["max_trajectory_error"] for row in ok]
        if all(e > 0 for e in errs):
            slopes["trajectory_vs_scale"] = fit_slope([row["trajectory_scale"] for row in ok], errs)
    return SweepReport(eps_list, records, slopes, flagged, rows)
