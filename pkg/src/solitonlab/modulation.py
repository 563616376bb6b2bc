"""Skew-orthogonal decomposition, peak truncation, beta coefficients and X_delta.

A field close to the k-soliton manifold is split as

    psi = sum_l Psi_{sigma_l} + w,    omega_eps(w, z_{j,m}) = 0  for all j, m,

by a damped Newton iteration whose Jacobian is the block-diagonal per-soliton
Omega.  Everything that needs a co-moving frame is evaluated in the lab frame
(``W_l = T_l w_l``) so no field ever has to be translated across the periodic
seam.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DecompositionError, DomainError, TruncationGeometryError
from .evolution import PotentialSpec, build_potential
from .grid import Grid
from .ground_state import mass_and_derivative
from .manifold import (
    ManifoldPoint,
    SolitonParams,
    _frame_omega,
    base_profile,
    boost_phase,
    omega_matrix,
    soliton_field,
    sum_solitons,
    tangent_basis,
)

log = logging.getLogger(__name__)

__all__ = [
    "Decomposition",
    "skew_residual",
    "decompose",
    "full_jacobian",
    "TruncationSet",
    "truncate_peaks",
    "lab_pieces",
    "BetaSeries",
    "beta_from_trajectory",
    "correction_terms",
    "Tracker",
]


def _frames(point: ManifoldPoint, grid: Grid) -> list:
    return [tangent_basis(point, grid, j) for j in range(point.k)]


def _residual_from(w, frames, grid: Grid, eps: float) -> np.ndarray:
    # G_{j,m} = <w, i z_{j,m}> = omega(w, z_{j,m})
    return np.concatenate([_frame_omega(grid, [w], fr, eps)[0] for fr in frames])


def skew_residual(psi, point: ManifoldPoint, grid: Grid) -> np.ndarray:
    """``G_{j,m} = <psi - sum Psi, i z_{j,m}>_eps``, flattened soliton-major."""
    grid.check(psi)
    w = psi - sum_solitons(point, grid)
    return _residual_from(w, _frames(point, grid), grid, point.eps)


def full_jacobian(point: ManifoldPoint, grid: Grid) -> np.ndarray:
    """All pairings ``<z_{i,n}, i z_{j,m}>`` as a ``k(2N+2)`` square matrix."""
    flat = [z for fr in _frames(point, grid) for z in fr]
    return _frame_omega(grid, flat, flat, point.eps)


@dataclass
class Decomposition:
    point: ManifoldPoint
    w: np.ndarray
    residual: np.ndarray
    iterations: int
    warnings: list = field(default_factory=list)

    @property
    def max_residual(self) -> float:
        return float(np.max(np.abs(self.residual)))

    def w_norm(self, grid: Grid) -> float:
        return grid.h1_norm(self.w, self.point.eps)


def _param_step(point: ManifoldPoint, coeffs: np.ndarray) -> np.ndarray:
    """Map frame coefficients ``c`` of ``delta Psi = sum c_n z_n`` to a parameter increment."""
    n = point.dim
    out = []
    for j, sigma in enumerate(point.solitons):
        c = coeffs[j * (2 * n + 2) : (j + 1) * (2 * n + 2)]
        ct, cb, cg, cs = c[:n], c[n : 2 * n], c[2 * n], c[2 * n + 1]
        v = np.asarray(sigma.v)
        out.append(np.concatenate([point.eps * ct, 2 * cb, [cg + 0.5 * v @ ct], [cs]]))
    return np.concatenate(out)


def _project_mu(point: ManifoldPoint, vec: np.ndarray, notes: list) -> np.ndarray:
    lo, hi = point.mu_range
    n = 2 * point.dim + 2
    for j in range(point.k):
        mu = vec[(j + 1) * n - 1]
        if not lo <= mu <= hi:
            msg = f"mu of soliton {j} left the admissible interval ({mu:.6g}); projected"
            log.warning(msg)
            notes.append(msg)
            vec[(j + 1) * n - 1] = min(max(mu, lo), hi)
    return vec


def decompose(
    psi,
    guess: ManifoldPoint,
    grid: Grid,
    tol: float | None = None,
    max_iter: int = 50,
    max_halvings: int = 5,
) -> Decomposition:
    """Newton iteration on ``G(psi, sigma) = 0`` started from ``guess``.

    The default tolerance is ``1e-10 * m(mu_inf)`` on ``max |G|``.
    """
    grid.check(psi)
    eps = guess.eps
    if tol is None:
        m_inf, _ = mass_and_derivative(base_profile(guess.nl), guess.mu_range[0])
        tol = 1e-10 * m_inf
    notes: list = []

    def evaluate(point):
        w = psi - sum_solitons(point, grid, check=False)
        frames = _frames(point, grid)
        return w, frames, _residual_from(w, frames, grid, eps)

    point = guess
    w, frames, G = evaluate(point)
    for it in range(max_iter + 1):
        gmax = float(np.max(np.abs(G)))
        if gmax <= tol:
            return Decomposition(point, w, G, it, notes)
        if it == max_iter:
            break
        n = 2 * point.dim + 2
        coeffs = np.concatenate(
            [
                np.linalg.solve(omega_matrix(point, grid, j, frames[j]).T, G[j * n : (j + 1) * n])
                for j in range(point.k)
            ]
        )
        step = _param_step(point, coeffs)
        base = point.vector()
        best = None
        scale = 1.0
        for _ in range(max_halvings + 1):
            trial = point.with_vector(_project_mu(point, base + scale * step, notes))
            tw, tf, tG = evaluate(trial)
            tmax = float(np.max(np.abs(tG)))
            if best is None or tmax < best[0]:
                best = (tmax, trial, tw, tf, tG)
            if tmax < gmax:
                break
            scale *= 0.5
        _, point, w, frames, G = best
    raise DecompositionError("skew-orthogonal decomposition did not converge", float(np.max(np.abs(G))), max_iter)


# ---------------------------------------------------------------------------
# truncation


def _smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t**3 * (10 - 15 * t + 6 * t**2)


@dataclass(frozen=True)
class TruncationSet:
    """Radial cutoffs ``phi_j``: 1 on ``B_L(c_j)``, 0 outside ``B_2L(c_j)``, quintic in between."""

    centers: tuple
    L: float

    def __post_init__(self):
        object.__setattr__(self, "centers", tuple(tuple(float(x) for x in np.atleast_1d(c)) for c in self.centers))
        if not self.L > 0:
            raise DomainError("cutoff radius must be positive")
        for i in range(len(self.centers)):
            for j in range(i + 1, len(self.centers)):
                if np.linalg.norm(np.subtract(self.centers[i], self.centers[j])) < 4 * self.L:
                    raise TruncationGeometryError(f"cutoffs {i} and {j} overlap (separation below 4L)")

    @classmethod
    def from_point(cls, point: ManifoldPoint, L: float) -> "TruncationSet":
        return cls(tuple(s.a for s in point.solitons), L)

    def phi(self, grid: Grid, j: int):
        disp = grid.displacement(self.centers[j])
        r = np.sqrt(sum(d**2 for d in disp))
        return 1.0 - _smoothstep((r - self.L) / self.L)

    def check_point(self, point: ManifoldPoint):
        if point.k != len(self.centers):
            raise TruncationGeometryError("number of cutoffs does not match the number of solitons")
        if point.k == 1:
            # a lone soliton takes the whole field as its piece
            return
        for j, c in enumerate(self.centers):
            for l, s in enumerate(point.solitons):
                dist = np.linalg.norm(np.subtract(s.a, c))
                if l == j and dist > self.L:
                    raise TruncationGeometryError(f"soliton {l} left the plateau of its own cutoff")
                if l != j and dist < 2 * self.L:
                    raise TruncationGeometryError(f"soliton {l} entered the support of cutoff {j}")


def lab_pieces(field_, cuts: TruncationSet, grid: Grid) -> list:
    """``phi_j field`` for ``j < k`` and the remainder for the last soliton."""
    k = len(cuts.centers)
    pieces = [cuts.phi(grid, j) * field_ for j in range(k - 1)]
    pieces.append(field_ - sum(pieces) if pieces else field_.copy())
    return pieces


def _untransform(grid: Grid, lab, sigma: SolitonParams, eps: float):
    """``T_sigma^{-1}``: remove the boost/gauge phase, then translate ``a`` back to the origin."""
    return grid.shift(np.conj(boost_phase(grid, sigma, eps)) * lab, -np.asarray(sigma.a))


def truncate_peaks(psi, dec: Decomposition, cuts: TruncationSet, grid: Grid):
    """Co-moving peaks ``u_j`` and perturbation pieces ``w_j``.

    ``u_j = T_j^{-1}(phi_j psi)`` for ``j < k`` and ``u_k = T_k^{-1}(psi - sum phi_l psi)``,
    with ``w_j`` built the same way from ``w``.
    """
    cuts.check_point(dec.point)
    eps = dec.point.eps
    u_lab = lab_pieces(psi, cuts, grid)
    w_lab = lab_pieces(dec.w, cuts, grid)
    us = [_untransform(grid, u, s, eps) for u, s in zip(u_lab, dec.point.solitons)]
    ws = [_untransform(grid, w, s, eps) for w, s in zip(w_lab, dec.point.solitons)]
    return us, ws


# ---------------------------------------------------------------------------
# beta coefficients


class BetaSeries(NamedTuple):
    t: np.ndarray
    beta: np.ndarray  # (frames, k, 2N+2)
    error: np.ndarray  # difference-error estimate, same shape
    resolved: bool


def _centered(y, t):
    return (y[2:] - y[:-2]) / (t[2:] - t[:-2])[:, None, None]


def beta_from_trajectory(t, params, potential: PotentialSpec, eps: float) -> BetaSeries:
    """beta coefficients at interior frames of a uniformly sampled trajectory.

    ``t`` is unscaled time and ``params`` has shape ``(frames, k, 2N+2)`` with
    rows ``(a, v, gamma, mu)`` and ``gamma`` unwrapped.
    """
    t = np.asarray(t, dtype=float)
    P = np.asarray(params, dtype=float)
    if P.ndim == 2:
        P = P[:, None, :]
    if len(t) < 3:
        raise DomainError("need at least three frames for centered differences")
    n = (P.shape[-1] - 2) // 2
    D = _centered(P, t)
    mid = P[1:-1]
    a, v = mid[..., :n], mid[..., n : 2 * n]
    gam_dot, mu_dot = D[..., 2 * n], D[..., 2 * n + 1]
    a_dot, v_dot = D[..., :n], D[..., n : 2 * n]
    V, gV = potential.evaluate(a, eps)
    beta = np.empty_like(mid)
    beta[..., :n] = a_dot / eps**2 - v / eps
    beta[..., n : 2 * n] = 0.5 * v_dot + eps * gV
    beta[..., 2 * n] = gam_dot - np.sum(a_dot * v, axis=-1) / (2 * eps) - mid[..., 2 * n + 1] + np.sum(v**2, axis=-1) / 4 + V
    beta[..., 2 * n + 1] = mu_dot

    # Richardson estimate of the difference error from a doubled stride
    err = np.zeros_like(beta)
    if len(t) >= 5:
        D2 = (P[4:] - P[:-4]) / (t[4:] - t[:-4])[:, None, None]
        diff = np.abs(D[1:-1] - D2) / 3
        scale = np.ones(P.shape[-1])
        scale[:n] = 1 / eps**2
        scale[n : 2 * n] = 0.5
        e = diff * scale
        err[1:-1] = e
        err[0], err[-1] = e[0], e[-1]
    # the estimate equals the truncation error to leading order, so a beta that is
    # pure difference noise sits at ratio 1; require a factor 2 margin
    resolved = bool(2 * np.max(err) <= max(np.max(np.abs(beta)), np.finfo(float).tiny))
    if not resolved:
        warnings.warn("beta: frame stride too coarse, difference error exceeds |beta|", RuntimeWarning, stacklevel=2)
    return BetaSeries(t[1:-1], beta, err, resolved)


# ---------------------------------------------------------------------------
# X_delta


def _generator_terms(grid: Grid, W, sigma: SolitonParams, eps: float):
    """Lab-frame images ``T K_m T^{-1} W`` of the symmetry generators (last entry via ``d_mu z``)."""
    disp = grid.displacement(sigma.a)
    grads = grid.gradient(W)
    kt = [-(eps * g - 0.5j * vm * W) for g, vm in zip(grads, sigma.v)]
    kb = [1j * d / eps * W for d in disp]
    return kt + kb + [1j * W]


def correction_terms(
    dec: Decomposition,
    cuts: TruncationSet,
    potential: PotentialSpec,
    grid: Grid,
    beta=None,
    dmu_step: float = 1e-5,
) -> np.ndarray:
    """The correction vector field ``X_delta`` with shape ``(k, 2N+2)``.

    Solves ``Omega X = b`` where, for each tangent ``z_{i,n}``,

        b_{i,n} = <z_{i,n}, sum_l T_l N_{eta_l}(w_l) + R_l T_l(eta_l + w_l)>
                  - sum_l beta_l . <J z_{i,n}, K_l w_l>,

    ``N_eta(w) = f(eta+w) - f(eta) - f'(eta) w`` and ``R_l`` is the Taylor
    remainder of ``V_eps`` at ``a_l`` beyond first order.  Pass ``beta=None``
    for the a-priori evaluation with ``beta = 0``.
    """
    point = dec.point
    eps, nl = point.eps, point.nl
    k, n = point.k, point.dim
    V, _ = build_potential(potential, grid, eps)
    W = lab_pieces(dec.w, cuts, grid)
    src = np.zeros(grid.shape, dtype=complex)
    for l, sigma in enumerate(point.solitons):
        Psi = soliton_field(sigma, point.profile(l), grid, check=False)
        Wl = W[l]
        src += nl.f(Psi + Wl) - nl.f(Psi) - nl.linearized(Psi, Wl)
        Va, gVa = potential.evaluate(np.asarray(sigma.a), eps)
        disp = grid.displacement(sigma.a)
        R = V - Va - sum(g * d for g, d in zip(np.atleast_1d(gVa), disp))
        src += R * (Psi + Wl)
    frames = _frames(point, grid)
    flat = [z for fr in frames for z in fr]
    rhs = np.array([grid.inner(z, src, eps) for z in flat])

    if beta is not None:
        beta = np.asarray(beta, dtype=float).reshape(k, 2 * n + 2)
        for l, sigma in enumerate(point.solitons):
            if not np.any(beta[l]):
                continue
            gens = _generator_terms(grid, W[l], sigma, eps)
            # mu generator: <J z, K_s w> := -<J d_mu z, W>
            shifted = point.replace_soliton(l, SolitonParams(sigma.a, sigma.v, sigma.gamma, sigma.mu + dmu_step))
            shifted_m = point.replace_soliton(l, SolitonParams(sigma.a, sigma.v, sigma.gamma, sigma.mu - dmu_step))
            for idx, z in enumerate(flat):
                i, m = divmod(idx, 2 * n + 2)
                acc = sum(beta[l, q] * grid.inner(-1j * z, gens[q], eps) for q in range(2 * n + 1))
                if beta[l, -1] and i == l:
                    zp = tangent_basis(shifted, grid, l)[m]
                    zm = tangent_basis(shifted_m, grid, l)[m]
                    acc -= beta[l, -1] * grid.inner(-1j * (zp - zm) / (2 * dmu_step), W[l], eps)
                rhs[idx] -= acc

    omega = _frame_omega(grid, flat, flat, eps)
    return np.linalg.solve(omega, rhs).reshape(k, 2 * n + 2)


# ---------------------------------------------------------------------------
# tracking


class Tracker:
    """Warm-started decomposition of successive frames of one run."""

    def __init__(self, guess: ManifoldPoint, grid: Grid, **kwargs):
        self.point = guess
        self.grid = grid
        self.kwargs = kwargs

    def __call__(self, psi) -> Decomposition:
        dec = decompose(psi, self.point, self.grid, **self.kwargs)
        self.point = dec.point
        return dec
