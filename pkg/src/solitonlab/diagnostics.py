"""Energy functional, energy gap, coercivity of the linearized operator and Taylor remainders.

Conventions: ``E_mu(u) = 1/2 int eps^-N (eps^2 |grad u|^2 + mu |u|^2) - F(u)`` with
``F(u) = lam/(p+1) int eps^-N |u|^(p+1)``, so that ``E_mu'(eta) = 0`` is the
ground-state equation.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh, null_space

from .grid import Grid
from .ground_state import GroundStateProfile, Nonlinearity, apply_linearized, tangent_generators
from .manifold import soliton_field
from .modulation import Decomposition, TruncationSet, lab_pieces

log = logging.getLogger(__name__)

__all__ = [
    "energy_functional",
    "EnergyReport",
    "energy_gap",
    "quadratic_form",
    "coercivity_form",
    "project_skew",
    "coercivity_constant",
    "taylor_remainders",
    "h_minus_one_norm",
]


def energy_functional(grid: Grid, u, mu: float, eps: float, nl: Nonlinearity, velocity=None) -> float:
    """``E_{mu,eps}(u)``; with ``velocity`` the kinetic term is taken in the co-moving frame."""
    dens = 0.5 * (grid.grad_sq(u, eps, velocity) + mu * np.abs(u) ** 2) - nl.potential_density(u)
    return grid.integrate(dens) / eps**grid.dim


def quadratic_form(grid: Grid, W, base, mu: float, eps: float, nl: Nonlinearity, velocity=None) -> float:
    """``<L w, w>_eps`` evaluated on a lab-frame field ``W`` around the lab-frame soliton ``base``."""
    dens = grid.grad_sq(W, eps, velocity) + mu * np.abs(W) ** 2 - np.real(np.conj(W) * nl.linearized(base, W))
    return grid.integrate(dens) / eps**grid.dim


@dataclass
class EnergyReport:
    energies: np.ndarray
    references: np.ndarray
    gaps: np.ndarray
    coercivity: np.ndarray
    w_norms: np.ndarray


def energy_gap(psi, dec: Decomposition, cuts: TruncationSet, grid: Grid) -> EnergyReport:
    """Per-soliton ``E_{mu_j}(u_j) - E_{mu_j}(eta_{mu_j})`` with coercivity values.

    All quantities are evaluated on the lab-frame pieces ``phi_j psi`` and
    ``phi_j w`` using the co-moving gradient, which equals evaluating them on
    ``u_j = T_j^{-1}(phi_j psi)`` and ``w_j``.
    """
    point = dec.point
    eps, nl = point.eps, point.nl
    U = lab_pieces(psi, cuts, grid)
    W = lab_pieces(dec.w, cuts, grid)
    rows = []
    for j, sigma in enumerate(point.solitons):
        prof = point.profile(j)
        Psi = soliton_field(sigma, prof, grid, check=False)
        e_u = energy_functional(grid, U[j], sigma.mu, eps, nl, sigma.v)
        e_ref = energy_functional(grid, Psi, sigma.mu, eps, nl, sigma.v)
        q = quadratic_form(grid, W[j], Psi, sigma.mu, eps, nl, sigma.v)
        rows.append((e_u, e_ref, e_u - e_ref, q, grid.h1_norm(W[j], eps, sigma.v)))
    cols = np.array(rows).T
    return EnergyReport(*cols)


def _frame(profile: GroundStateProfile, grid: Grid) -> list:
    z_t, z_b, z_g, z_s = tangent_generators(profile, grid)
    return [*z_t, *z_b, z_g, z_s]


def project_skew(profile: GroundStateProfile, grid: Grid, w):
    """Remove the tangent-frame component so that ``omega(w, z) = 0`` for every ``z``."""
    frame = _frame(profile, grid)
    eps = profile.eps
    omega = np.array([[grid.symplectic(a, b, eps) for b in frame] for a in frame])
    G = np.array([grid.symplectic(w, z, eps) for z in frame])
    c = np.linalg.solve(omega.T, G)
    return w - sum(ci * z for ci, z in zip(c, frame))


def coercivity_form(profile: GroundStateProfile, grid: Grid, w, project: bool = True) -> float:
    """``<L w, w>_eps`` at ``sigma_0 = (0, 0, 0, mu)``, after skew projection if requested."""
    w = np.asarray(w, dtype=complex)
    if project:
        frame = _frame(profile, grid)
        G = np.array([grid.symplectic(w, z, profile.eps) for z in frame])
        if np.max(np.abs(G)) > 1e-12 * max(grid.h1_norm(w, profile.eps), 1e-300):
            log.info("coercivity_form: projecting w onto the skew-orthogonal complement (|G| = %.3e)", np.max(np.abs(G)))
            w = project_skew(profile, grid, w)
    return grid.inner(apply_linearized(profile, grid, w), w, profile.eps)


def _diff_matrix(grid: Grid, order: int) -> np.ndarray:
    eye = np.eye(grid.points)
    k = grid.wavenumbers
    mult = (1j * k) ** order
    if order % 2:
        mult = np.where(np.abs(k) == np.max(np.abs(k)), 0.0, mult)
    return np.real(np.fft.ifft(mult[:, None] * np.fft.fft(eye, axis=0), axis=0))


def coercivity_constant(profile: GroundStateProfile, grid: Grid) -> float:
    """Smallest ratio ``<L w, w> / ||w||_{H1}^2`` on the skew-orthogonal complement (1D).

    Writing ``w = u + i v`` the form splits into ``L_+`` on ``u`` and ``L_-`` on
    ``v``; skew-orthogonality means ``u`` is orthogonal to ``eta`` and
    ``x eta`` while ``v`` is orthogonal to ``grad eta`` and ``d_mu eta``.  Each
    block is a dense generalized eigenproblem restricted to the constraint
    null space.
    """
    if grid.dim != 1:
        raise NotImplementedError("the dense coercivity oracle is one-dimensional")
    eps, mu, nl = profile.eps, profile.mu, profile.nl
    eta = profile.sample(grid)
    x = grid.displacement(0.0)[0]
    D1 = _diff_matrix(grid, 1)
    D2 = _diff_matrix(grid, 2)
    lap = -(eps**2) * D2
    mass = np.eye(grid.points)
    h1 = eps**2 * D1.T @ D1 + mass
    pot = nl.lam * eta ** (nl.p - 1)
    Lp = lap + mu * mass - np.diag(nl.p * pot)
    Lm = lap + mu * mass - np.diag(pot)
    blocks = [
        (Lp, np.stack([eta, x * eta], axis=1)),
        (Lm, np.stack([profile.gradient(grid)[0], profile.sample_dmu(grid)], axis=1)),
    ]
    best = np.inf
    for L, cons in blocks:
        Q = null_space(cons.T)
        A = Q.T @ (0.5 * (L + L.T)) @ Q
        B = Q.T @ (0.5 * (h1 + h1.T)) @ Q
        best = min(best, float(eigh(A, B, eigvals_only=True, subset_by_index=[0, 0])[0]))
    return best


def _dual_basis(profile: GroundStateProfile, grid: Grid, modes: int = 64) -> list:
    kv = grid.k_vectors
    knorm = np.sqrt(sum(k**2 for k in kv)).ravel()
    order = np.argsort(knorm, kind="stable")[: modes // 2]
    basis = []
    for idx in order:
        kvec = [k.ravel()[idx] for k in kv]
        wave = np.exp(1j * sum(km * x for km, x in zip(kvec, grid.coords)))
        basis += [wave, 1j * wave]
    return basis + _frame(profile, grid)


def h_minus_one_norm(profile: GroundStateProfile, grid: Grid, g, modes: int = 64) -> float:
    """Dual norm ``sup <g, phi> / ||phi||_{H1}`` over low Fourier modes and the tangent frame."""
    eps = profile.eps
    basis = _dual_basis(profile, grid, modes)
    gram = np.array([[grid.h1_inner(a, b, eps) for b in basis] for a in basis])
    b = np.array([grid.inner(g, phi, eps) for phi in basis])
    sol = np.linalg.lstsq(gram, b, rcond=1e-12)[0]
    return float(np.sqrt(max(b @ sol, 0.0)))


def taylor_remainders(profile: GroundStateProfile, grid: Grid, w):
    """``(R2, R3, ||N_eta(w)||_{H^-1})`` for the expansion of ``F`` at ``eta``.

    ``R2 = F(eta+w) - F(eta) - <f(eta), w>`` and
    ``R3 = R2 - 1/2 <f'(eta) w, w>``; ``N_eta(w) = f(eta+w) - f(eta) - f'(eta) w``.
    """
    eps, nl = profile.eps, profile.nl
    eta = profile.sample(grid)
    w = np.asarray(w, dtype=complex)

    def F(u):
        return grid.integrate(nl.potential_density(u)) / eps**grid.dim

    lin = nl.linearized(eta, w)
    r2 = F(eta + w) - F(eta) - grid.inner(nl.f(eta), w, eps)
    r3 = r2 - 0.5 * grid.inner(lin, w, eps)
    n_eta = nl.f(eta + w) - nl.f(eta) - lin
    return float(r2), float(r3), h_minus_one_norm(profile, grid, n_eta)
