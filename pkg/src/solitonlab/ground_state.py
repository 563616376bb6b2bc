"""Ground states of ``-eps^2 Lap u + mu u - f(u) = 0`` and their scaling family.

Every profile is generated from the base solution at ``mu = eps = 1`` through

    eta_{mu,eps}(x) = mu^{1/(p-1)} * eta_{1,1}(sqrt(mu) x / eps).

In one dimension the base is the closed-form ``sech`` power; in two dimensions
it is computed by spectral renormalization (Petviashvili iteration) on a
periodic box and evaluated off-grid through its trigonometric interpolant.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np
import scipy.fft as sfft
from scipy.interpolate import make_interp_spline
from scipy.special import gamma as gamma_fn
from scipy.special import k0e, k1e

from .errors import DomainError, SolverError
from .grid import Grid

__all__ = [
    "Nonlinearity",
    "GroundStateProfile",
    "DEFAULT_MU_RANGE",
    "solve_base_profile",
    "rescale",
    "mass_and_derivative",
    "decay_rate",
    "DecayFit",
    "tangent_generators",
    "apply_linearized",
    "profile_to_json",
    "profile_from_json",
]

DEFAULT_MU_RANGE = (0.5, 2.0)


@dataclass(frozen=True)
class Nonlinearity:
    """Power nonlinearity ``f(s) = lam |s|^(p-1) s`` in ``dim`` space dimensions."""

    p: float
    lam: float = 1.0
    dim: int = 1

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise DomainError("only dimensions 1 and 2 are supported")
        if not 1.0 < self.p < self.critical_exponent:
            raise DomainError(
                f"p={self.p} outside the subcritical range (1, {self.critical_exponent:g}) for N={self.dim}"
            )
        if not self.lam > 0:
            raise DomainError("coupling lambda must be positive")

    @property
    def critical_exponent(self) -> float:
        return 1.0 + 4.0 / self.dim

    def f(self, s):
        return self.lam * np.abs(s) ** (self.p - 1) * s

    def potential_density(self, s):
        """``lam/(p+1) |s|^(p+1)``, whose gradient is ``f``."""
        return self.lam / (self.p + 1) * np.abs(s) ** (self.p + 1)

    def linearized(self, base, w):
        """``f'(base) w`` for the real-linearization of ``f`` at ``base``.

        For a positive real ``base`` this multiplies ``Re w`` by
        ``lam p base^(p-1)`` and ``Im w`` by ``lam base^(p-1)``.  A complex
        ``base`` is handled through gauge covariance.
        """
        mod = np.abs(base)
        amp = self.lam * mod ** (self.p - 1)
        if np.isrealobj(base) and np.all(base >= 0):
            return amp * (self.p * np.real(w) + 1j * np.imag(w))
        unit = np.divide(base, mod, out=np.ones_like(base, dtype=complex), where=mod > 0)
        return amp * (0.5 * (self.p + 1) * w + 0.5 * (self.p - 1) * unit**2 * np.conj(w))

    def to_dict(self) -> dict:
        return {"p": self.p, "lambda": self.lam, "dim": self.dim}


# ---------------------------------------------------------------------------
# base profiles at mu = eps = 1


class _SechBase:
    """Closed form ``A sech^q(b r)`` of the 1D problem."""

    dim = 1

    def __init__(self, nl: Nonlinearity):
        p, lam = nl.p, nl.lam
        self.amp = ((p + 1) / (2 * lam)) ** (1 / (p - 1))
        self.power = 2 / (p - 1)
        self.rate = (p - 1) / 2

    @staticmethod
    def _sech(s):
        e = np.exp(-np.abs(s))
        return 2 * e / (1 + e * e)

    def value(self, r):
        return self.amp * self._sech(self.rate * r) ** self.power

    def derivative(self, r):
        s = self.rate * np.asarray(r)
        return -self.amp * self.power * self.rate * np.tanh(s) * self._sech(s) ** self.power

    @property
    def mass_integral(self) -> float:
        """``int eta_{1,1}^2 dx`` over the real line."""
        q = self.power
        return self.amp**2 / self.rate * math.sqrt(math.pi) * gamma_fn(q) / gamma_fn(q + 0.5)


class _RadialSeriesBase:
    """2D base profile stored as its samples along the x-axis of a periodic box.

    The row ``y = 0`` of the 2D solution is a grid line, so its 1D
    trigonometric interpolant is the exact restriction of the 2D interpolant.
    Off-grid values come from a quintic spline of that interpolant sampled on a
    16x refined line.
    """

    dim = 2
    refine = 16

    def __init__(self, samples, length: float, mass_integral: float):
        self.samples = np.asarray(samples, dtype=float)
        self.length = float(length)
        self.mass_integral = float(mass_integral)
        m = self.samples.size
        fine = m * self.refine
        coeffs = sfft.fft(sfft.ifftshift(self.samples))
        padded = np.zeros(fine, dtype=complex)
        padded[: m // 2] = coeffs[: m // 2]
        padded[-m // 2 + 1 :] = coeffs[-m // 2 + 1 :]
        padded[m // 2] = 0.5 * coeffs[m // 2]
        padded[-m // 2] = 0.5 * coeffs[m // 2]
        line = sfft.fftshift(sfft.ifft(padded)).real * self.refine
        r = -0.5 * self.length + self.length / fine * np.arange(fine)
        self._spline = make_interp_spline(r, line, k=5)
        self._dspline = self._spline.derivative()
        # beyond 3/4 of the half-box the periodic images distort the stored line
        self._rmax = 0.375 * self.length

    def _tail(self, r, order=0):
        # the far field solves -Lap u + u = 0, so it is a multiple of K_0(r)
        rm = self._rmax
        scale = self._spline(rm) / k0e(rm) * np.exp(-(r - rm))
        return scale * (k0e(r) if order == 0 else -k1e(r))

    def value(self, r):
        r = np.asarray(r, dtype=float)
        far = np.maximum(r, self._rmax)
        return np.where(r < self._rmax, self._spline(np.minimum(r, self._rmax)), self._tail(far))

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        far = np.maximum(r, self._rmax)
        tail = self._tail(far, order=1)
        return np.where(r < self._rmax, self._dspline(np.minimum(r, self._rmax)), tail)


def _petviashvili(nl: Nonlinearity, points: int = 256, length: float = 48.0, tol: float = 1e-12, max_iter: int = 500):
    grid = Grid(nl.dim, points, length)
    r2 = sum(x**2 for x in grid.coords)
    u = 2.0 * np.exp(-r2 / 2)
    symbol = 1.0 + grid.k_squared
    gam = nl.p / (nl.p - 1)
    factor = np.nan
    for _ in range(max_iter):
        u_hat = grid.fft(u)
        n_hat = grid.fft(nl.f(u))
        factor = float(np.sum(symbol * np.abs(u_hat) ** 2) / np.sum(np.conj(u_hat) * n_hat).real)
        new = (factor**gam * grid.ifft(n_hat / symbol)).real
        change = np.max(np.abs(new - u)) / np.max(np.abs(new))
        u = new
        # the factor converges faster than the profile, so require both
        if abs(factor - 1.0) < tol and change < tol:
            break
    else:
        raise SolverError("spectral renormalization did not converge", abs(factor - 1.0))
    residual = -grid.laplacian(u) + u - nl.f(u)
    rel = np.sqrt(np.sum(residual**2) / np.sum(u**2))
    if rel > 1e-9:
        raise SolverError("spectral renormalization converged to an inaccurate profile", rel)
    return grid, u


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GroundStateProfile:
    """Radial ground state ``eta_{mu,eps}`` tagged with its parameters."""

    nl: Nonlinearity
    mu: float
    eps: float
    base: object = field(repr=False, compare=False)
    mu_range: tuple = DEFAULT_MU_RANGE

    @property
    def dim(self) -> int:
        return self.nl.dim

    @property
    def amplitude(self) -> float:
        return self.mu ** (1 / (self.nl.p - 1))

    @property
    def width(self) -> float:
        """Decay length ``eps / sqrt(mu)`` in the unscaled coordinate."""
        return self.eps / math.sqrt(self.mu)

    @property
    def alpha(self) -> float:
        """Exponential decay rate against ``|x|/eps``."""
        return math.sqrt(self.mu)

    # -- radial evaluation -------------------------------------------------

    def radial(self, r):
        return self.amplitude * self.base.value(np.asarray(r) / self.width)

    def radial_derivative(self, r):
        return self.amplitude / self.width * self.base.derivative(np.asarray(r) / self.width)

    def radial_dmu(self, r):
        """``d eta_{mu,eps} / d mu`` from the scaling family."""
        xi = np.asarray(r) / self.width
        s = 1 / (self.nl.p - 1)
        return self.mu ** (s - 1) * (s * self.base.value(xi) + 0.5 * xi * self.base.derivative(xi))

    # -- sampling on a grid ------------------------------------------------

    def _radius(self, grid: Grid, center):
        disp = grid.displacement(center)
        return disp, np.sqrt(sum(d**2 for d in disp))

    def sample(self, grid: Grid, center=0.0):
        _, r = self._radius(grid, center)
        return self.radial(r)

    def gradient(self, grid: Grid, center=0.0) -> list:
        disp, r = self._radius(grid, center)
        if grid.dim == 1:
            return [self.radial_derivative(r) * np.sign(disp[0])]
        dr = self.radial_derivative(r)
        safe = np.where(r > 0, r, 1.0)
        return [np.where(r > 0, dr * d / safe, 0.0) for d in disp]

    def sample_dmu(self, grid: Grid, center=0.0):
        _, r = self._radius(grid, center)
        return self.radial_dmu(r)

    def residual(self, grid: Grid) -> float:
        """Relative L2 residual of the ground-state equation on ``grid``."""
        eta = self.sample(grid)
        res = -(self.eps**2) * grid.laplacian(eta) + self.mu * eta - self.nl.f(eta)
        return float(np.sqrt(np.sum(res**2) / np.sum(eta**2)))


def _check_mu(mu, mu_range):
    lo, hi = mu_range
    if not lo <= mu <= hi:
        raise DomainError(f"mu={mu} outside the admissible interval [{lo}, {hi}]")


def solve_base_profile(nl: Nonlinearity, mu_range=DEFAULT_MU_RANGE) -> GroundStateProfile:
    """Ground state at ``mu = eps = 1``."""
    if nl.dim == 1:
        base = _SechBase(nl)
    else:
        grid, u = _petviashvili(nl)
        row = u[:, grid.points // 2]
        base = _RadialSeriesBase(row, grid.length, grid.integrate(u**2))
    return GroundStateProfile(nl, 1.0, 1.0, base, tuple(mu_range))


def rescale(profile: GroundStateProfile, mu: float, eps: float, mu_range=None) -> GroundStateProfile:
    mu_range = profile.mu_range if mu_range is None else tuple(mu_range)
    _check_mu(mu, mu_range)
    if not eps > 0:
        raise DomainError("eps must be positive")
    return replace(profile, mu=float(mu), eps=float(eps), mu_range=mu_range)


def mass_and_derivative(profile: GroundStateProfile, mu: float | None = None):
    """``m(mu) = 1/2 int eps^-N eta^2`` and its analytic derivative in ``mu``."""
    mu = profile.mu if mu is None else mu
    p, n = profile.nl.p, profile.dim
    expo = 2 / (p - 1) - n / 2
    base = profile.base.mass_integral
    m = 0.5 * mu**expo * base
    dm = 0.5 * expo * mu ** (expo - 1) * base
    return m, dm


def mass_exponent(nl: Nonlinearity) -> float:
    """Exponent of ``mu`` in ``m(mu)``; positive exactly in the subcritical range."""
    return 2 / (nl.p - 1) - nl.dim / 2


class DecayFit(NamedTuple):
    rate: float
    window: tuple
    shrunk: bool


def decay_rate(profile: GroundStateProfile, window=(3.0, 8.0), floor: float = 1e-280, samples: int = 200) -> DecayFit:
    """Least-squares tail slope of ``log eta`` against ``|x|/eps``.

    The window is given in decay lengths ``eps/sqrt(mu)``.  If the profile
    drops below ``floor`` inside the window the window is shrunk and the result
    flagged.
    """
    lo, hi = window
    shrunk = False
    r = profile.width * np.linspace(lo, hi, samples)
    eta = profile.radial(r)
    keep = eta > floor
    if not np.all(keep):
        shrunk = True
        r, eta = r[keep], eta[keep]
        if r.size < 3:
            raise SolverError("profile tail is below the floor over the whole window")
        hi = r[-1] / profile.width
    slope = np.polyfit(r / profile.eps, np.log(eta), 1)[0]
    return DecayFit(float(-slope), (lo, float(hi)), shrunk)


def tangent_generators(profile: GroundStateProfile, grid: Grid, center=0.0):
    """Tangent fields at ``sigma = (center, 0, 0, mu)``.

    Returns ``(z_t, z_b, z_g, z_s)`` with ``z_t``, ``z_b`` lists of ``N`` fields:
    ``z_t = -eps grad eta``, ``z_b = (i x / eps) eta``, ``z_g = i eta`` and
    ``z_s = d eta / d mu``.
    """
    eps = profile.eps
    eta = profile.sample(grid, center)
    disp = grid.displacement(center)
    z_t = [(-eps * g).astype(complex) for g in profile.gradient(grid, center)]
    z_b = [1j * d / eps * eta for d in disp]
    z_g = 1j * eta
    z_s = profile.sample_dmu(grid, center).astype(complex)
    return z_t, z_b, z_g, z_s


def apply_linearized(profile: GroundStateProfile, grid: Grid, w, eta=None):
    """``L w = -eps^2 Lap w + mu w - f'(eta) w`` with the real-linearized ``f'``."""
    grid.check(w)
    if eta is None:
        eta = profile.sample(grid)
    return -(profile.eps**2) * grid.laplacian(w) + profile.mu * w - profile.nl.linearized(eta, w)


# ---------------------------------------------------------------------------
# serialization


def profile_to_json(profile: GroundStateProfile, points: int = 256) -> str:
    """JSON document with the parameters and the base profile line samples."""
    base = profile.base
    if isinstance(base, _RadialSeriesBase):
        samples, box = base.samples, base.length
    else:
        box = 48.0
        samples = base.value(np.abs(-0.5 * box + box / points * np.arange(points)))
    doc = {
        "p": profile.nl.p,
        "lambda": profile.nl.lam,
        "dim": profile.dim,
        "mu": profile.mu,
        "eps": profile.eps,
        "mu_range": list(profile.mu_range),
        "alpha": profile.alpha,
        "box": box,
        "mass_integral": base.mass_integral,
        "samples": [float(s) for s in samples],
    }
    return json.dumps(doc)


def profile_from_json(text: str) -> GroundStateProfile:
    doc = json.loads(text)
    nl = Nonlinearity(doc["p"], doc["lambda"], doc.get("dim", 1))
    if nl.dim == 1:
        base = _SechBase(nl)
    else:
        base = _RadialSeriesBase(doc["samples"], doc["box"], doc["mass_integral"])
    return GroundStateProfile(nl, doc["mu"], doc["eps"], base, tuple(doc.get("mu_range", DEFAULT_MU_RANGE)))
