"""Moving solitons, k-soliton superpositions, tangent frames and the matrix Omega.

A soliton with parameters ``sigma = (a, v, gamma, mu)`` is

    Psi(x) = exp(i (v.(x - a) / (2 eps) + gamma)) * eta_{mu,eps}(x - a),

i.e. the ground state carried by the combined translation/boost/gauge
transform ``T_sigma``.  The tangent frame at ``sigma`` is ``T_sigma`` applied to
``(-eps grad eta, (i x/eps) eta, i eta, d_mu eta)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DegeneracyError, DomainError, PlacementError
from .grid import Grid
from .ground_state import (
    DEFAULT_MU_RANGE,
    GroundStateProfile,
    Nonlinearity,
    mass_and_derivative,
    rescale,
    solve_base_profile,
)

__all__ = [
    "SolitonParams",
    "ManifoldPoint",
    "base_profile",
    "soliton_field",
    "sum_solitons",
    "tangent_basis",
    "omega_matrix",
    "analytic_omega",
    "cross_overlap",
    "boost_phase",
    "SEAM_WIDTHS",
]

# minimum distance from a soliton center to the periodic seam, in decay lengths
SEAM_WIDTHS = 8.0


@lru_cache(maxsize=None)
def base_profile(nl: Nonlinearity) -> GroundStateProfile:
    return solve_base_profile(nl)


@dataclass(frozen=True)
class SolitonParams:
    """Position ``a``, velocity ``v``, unwrapped phase ``gamma`` and eigenvalue ``mu``."""

    a: tuple
    v: tuple
    gamma: float
    mu: float

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(x) for x in np.atleast_1d(self.a)))
        object.__setattr__(self, "v", tuple(float(x) for x in np.atleast_1d(self.v)))
        if len(self.a) != len(self.v):
            raise DomainError("a and v must have the same dimension")
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "mu", float(self.mu))

    @property
    def dim(self) -> int:
        return len(self.a)

    def vector(self) -> np.ndarray:
        return np.array([*self.a, *self.v, self.gamma, self.mu])

    @classmethod
    def from_vector(cls, vec, dim: int) -> "SolitonParams":
        vec = np.asarray(vec, dtype=float)
        return cls(vec[:dim], vec[dim : 2 * dim], vec[2 * dim], vec[2 * dim + 1])

    def to_dict(self) -> dict:
        return {"a": list(self.a), "v": list(self.v), "gamma": self.gamma, "mu": self.mu}

    @classmethod
    def from_dict(cls, d: dict) -> "SolitonParams":
        return cls(d["a"], d["v"], d["gamma"], d["mu"])


@dataclass(frozen=True)
class ManifoldPoint:
    """Ordered k-tuple of soliton parameters sharing ``eps`` and a nonlinearity."""

    solitons: tuple
    eps: float
    nl: Nonlinearity
    mu_range: tuple = field(default=DEFAULT_MU_RANGE)

    def __post_init__(self):
        object.__setattr__(self, "solitons", tuple(self.solitons))
        if not self.solitons:
            raise DomainError("a manifold point needs at least one soliton")
        for s in self.solitons:
            if s.dim != self.nl.dim:
                raise DomainError("soliton dimension does not match the nonlinearity")
        if not self.eps > 0:
            raise DomainError("eps must be positive")

    @property
    def k(self) -> int:
        return len(self.solitons)

    @property
    def dim(self) -> int:
        return self.nl.dim

    def __getitem__(self, j) -> SolitonParams:
        return self.solitons[j]

    def profile(self, j: int) -> GroundStateProfile:
        return rescale(base_profile(self.nl), self.solitons[j].mu, self.eps, self.mu_range)

    def vector(self) -> np.ndarray:
        return np.concatenate([s.vector() for s in self.solitons])

    def with_vector(self, vec) -> "ManifoldPoint":
        n = 2 * self.dim + 2
        vec = np.asarray(vec, dtype=float)
        sols = [SolitonParams.from_vector(vec[j * n : (j + 1) * n], self.dim) for j in range(self.k)]
        return ManifoldPoint(tuple(sols), self.eps, self.nl, self.mu_range)

    def replace_soliton(self, j: int, sigma: SolitonParams) -> "ManifoldPoint":
        sols = list(self.solitons)
        sols[j] = sigma
        return ManifoldPoint(tuple(sols), self.eps, self.nl, self.mu_range)

    def min_separation(self) -> float:
        best = np.inf
        for i in range(self.k):
            for j in range(i + 1, self.k):
                best = min(best, float(np.linalg.norm(np.subtract(self[i].a, self[j].a))))
        return best

    def to_json(self) -> str:
        doc = {
            "eps": self.eps,
            "p": self.nl.p,
            "lambda": self.nl.lam,
            "dim": self.dim,
            "mu_range": list(self.mu_range),
            "solitons": [s.to_dict() for s in self.solitons],
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "ManifoldPoint":
        doc = json.loads(text)
        sols = tuple(SolitonParams.from_dict(s) for s in doc["solitons"])
        dim = doc.get("dim", len(sols[0].a))
        nl = Nonlinearity(doc["p"], doc["lambda"], dim)
        return cls(sols, doc["eps"], nl, tuple(doc.get("mu_range", DEFAULT_MU_RANGE)))


def boost_phase(grid: Grid, sigma: SolitonParams, eps: float):
    """``exp(i (v.(x-a)/(2 eps) + gamma))`` on the minimum-image branch."""
    disp = grid.displacement(sigma.a)
    theta = sigma.gamma + sum(0.5 * vm * d for vm, d in zip(sigma.v, disp)) / eps
    return np.exp(1j * theta)


def _check_placement(grid: Grid, sigma: SolitonParams, profile: GroundStateProfile, margin=SEAM_WIDTHS):
    need = margin * profile.width
    if grid.seam_distance(sigma.a) < need:
        raise PlacementError(
            f"center {sigma.a} is within {need:.3g} of the periodic seam (box length {grid.length:g})"
        )


def soliton_field(sigma: SolitonParams, profile: GroundStateProfile, grid: Grid, check: bool = True):
    """``T_sigma eta`` sampled on ``grid``; ``profile`` must carry ``sigma.mu``."""
    if check:
        _check_placement(grid, sigma, profile)
    return boost_phase(grid, sigma, profile.eps) * profile.sample(grid, sigma.a)


def sum_solitons(point: ManifoldPoint, grid: Grid, check: bool = True):
    out = np.zeros(grid.shape, dtype=complex)
    for j, sigma in enumerate(point.solitons):
        out += soliton_field(sigma, point.profile(j), grid, check)
    return out


def tangent_basis(point: ManifoldPoint, grid: Grid, j: int) -> list:
    """The ``2N+2`` fields ``z_{j,m}``: translations, boosts, gauge, then ``mu``."""
    if not 0 <= j < point.k:
        raise DomainError(f"soliton index {j} out of range")
    sigma = point[j]
    prof = point.profile(j)
    eps = point.eps
    phase = boost_phase(grid, sigma, eps)
    eta = prof.sample(grid, sigma.a)
    disp = grid.displacement(sigma.a)
    z_t = [-eps * phase * g for g in prof.gradient(grid, sigma.a)]
    z_b = [phase * (1j * d / eps) * eta for d in disp]
    z_g = phase * 1j * eta
    z_s = phase * prof.sample_dmu(grid, sigma.a)
    return [*z_t, *z_b, z_g, z_s]


def _frame_omega(grid: Grid, frame_a: list, frame_b: list, eps: float) -> np.ndarray:
    a = np.stack([z.ravel() for z in frame_a])
    b = np.stack([z.ravel() for z in frame_b])
    # <z_m, i z_n> = Re sum z_m conj(i z_n) = Im sum z_m conj(z_n)
    return (a @ b.conj().T).imag * grid.cell_volume / eps**grid.dim


def omega_matrix(point: ManifoldPoint, grid: Grid, j: int, frame=None, max_condition: float = 1e12) -> np.ndarray:
    """``Omega^{m,n} = <z_{j,m}, i z_{j,n}>_eps`` by quadrature."""
    if frame is None:
        frame = tangent_basis(point, grid, j)
    omega = _frame_omega(grid, frame, frame, point.eps)
    cond = np.linalg.cond(omega)
    if not np.isfinite(cond) or cond > max_condition:
        raise DegeneracyError(f"Omega for soliton {j} has condition number {cond:.3e}")
    return omega


def analytic_omega(profile: GroundStateProfile) -> np.ndarray:
    """Block form of Omega built from ``m(mu)`` and ``m'(mu)``."""
    n = profile.dim
    m, dm = mass_and_derivative(profile)
    omega = np.zeros((2 * n + 2, 2 * n + 2))
    for i in range(n):
        omega[i, n + i] = -m
        omega[n + i, i] = m
    omega[2 * n, 2 * n + 1] = dm
    omega[2 * n + 1, 2 * n] = -dm
    return omega


def cross_overlap(point: ManifoldPoint, grid: Grid, i: int, j: int) -> float:
    """``max_{m,n} |omega_eps(z_{i,m}, z_{j,n})|`` for two distinct solitons."""
    if i == j:
        raise DomainError("cross_overlap needs two different soliton indices")
    zi, zj = tangent_basis(point, grid, i), tangent_basis(point, grid, j)
    return float(np.max(np.abs(_frame_omega(grid, zi, zj, point.eps))))
