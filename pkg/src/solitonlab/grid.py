"""Uniform periodic grids, spectral calculus and the eps-weighted pairings.

Fields are plain complex ``numpy`` arrays of shape ``(M,)*N``; a :class:`Grid`
carries the geometry and every operation that needs it.  All integrals use the
rectangle rule, which is spectrally accurate for smooth periodic data.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft

from .errors import DomainError, GridMismatchError

__all__ = ["Grid", "pairing", "h1_norm", "spectral_derivative"]


@dataclass(frozen=True)
class Grid:
    """Periodic box ``[-L/2, L/2)^N`` sampled with ``M`` points per axis."""

    dim: int
    points: int
    length: float

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise DomainError(f"only N=1 or N=2 grids are supported, got {self.dim}")
        m = int(self.points)
        if m < 16 or m & (m - 1):
            raise DomainError(f"points per axis must be a power of two >= 16, got {m}")
        if not self.length > 0:
            raise DomainError("box length must be positive")

    @property
    def dx(self) -> float:
        return self.length / self.points

    @property
    def shape(self) -> tuple:
        return (self.points,) * self.dim

    @property
    def cell_volume(self) -> float:
        return self.dx**self.dim

    @cached_property
    def axis(self) -> np.ndarray:
        return -0.5 * self.length + self.dx * np.arange(self.points)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Angular wavenumbers in FFT order."""
        return 2 * np.pi * sfft.fftfreq(self.points, d=self.dx)

    @cached_property
    def coords(self) -> tuple:
        """Coordinate arrays, one per axis, broadcast to the full shape."""
        return tuple(np.meshgrid(*([self.axis] * self.dim), indexing="ij"))

    @cached_property
    def k_vectors(self) -> tuple:
        return tuple(np.meshgrid(*([self.wavenumbers] * self.dim), indexing="ij"))

    @cached_property
    def k_squared(self) -> np.ndarray:
        return sum(k**2 for k in self.k_vectors)

    def to_dict(self) -> dict:
        return {"dim": self.dim, "points": self.points, "length": self.length}

    @classmethod
    def from_dict(cls, data: dict) -> "Grid":
        return cls(int(data["dim"]), int(data["points"]), float(data["length"]))

    # -- geometry ---------------------------------------------------------

    def displacement(self, center) -> tuple:
        """Minimum-image displacement ``x - center`` per axis."""
        center = np.broadcast_to(np.asarray(center, dtype=float), (self.dim,))
        half = 0.5 * self.length
        return tuple((x - c + half) % self.length - half for x, c in zip(self.coords, center))

    def seam_distance(self, center) -> float:
        """Distance from ``center`` to the nearest periodic seam."""
        center = np.atleast_1d(np.asarray(center, dtype=float))
        half = 0.5 * self.length
        wrapped = (center + half) % self.length - half
        return float(np.min(half - np.abs(wrapped)))

    # -- checks -----------------------------------------------------------

    def check(self, *fields):
        for u in fields:
            if np.shape(u) != self.shape:
                raise GridMismatchError(f"field of shape {np.shape(u)} does not live on grid {self.shape}")

    # -- spectral calculus ------------------------------------------------

    def fft(self, u):
        return sfft.fftn(u, axes=tuple(range(self.dim)))

    def ifft(self, u_hat):
        return sfft.ifftn(u_hat, axes=tuple(range(self.dim)))

    def derivative(self, u, axis: int, order: int = 1):
        """Fourier-multiplier derivative along ``axis``.

        For odd orders the Nyquist mode is zeroed so the derivative of real
        data stays real.
        """
        if not 0 <= axis < self.dim:
            raise DomainError(f"axis {axis} out of range for a {self.dim}-D grid")
        if order not in (1, 2):
            raise DomainError("only first and second derivatives are provided")
        self.check(u)
        k = self.k_vectors[axis]
        mult = (1j * k) ** order
        if order % 2:
            mult = np.where(np.abs(k) == np.max(np.abs(self.wavenumbers)), 0.0, mult)
        out = self.ifft(mult * self.fft(u))
        return out.real if np.isrealobj(u) else out

    def gradient(self, u) -> list:
        return [self.derivative(u, ax, 1) for ax in range(self.dim)]

    def laplacian(self, u):
        self.check(u)
        out = self.ifft(-self.k_squared * self.fft(u))
        return out.real if np.isrealobj(u) else out

    def shift(self, u, offset):
        """Periodic translation ``u(x - offset)`` by the Fourier shift theorem."""
        offset = np.broadcast_to(np.asarray(offset, dtype=float), (self.dim,))
        phase = np.exp(-1j * sum(k * o for k, o in zip(self.k_vectors, offset)))
        return self.ifft(phase * self.fft(u))

    # -- integrals and pairings ------------------------------------------

    def integrate(self, density) -> float:
        return float(np.sum(density).real) * self.cell_volume

    def inner(self, u, v, eps: float) -> float:
        """Real inner product ``Re int eps^-N u conj(v)``."""
        self.check(u, v)
        return float(np.sum(u * np.conj(v)).real) * self.cell_volume / eps**self.dim

    def symplectic(self, u, v, eps: float) -> float:
        """Symplectic form ``Im int eps^-N u conj(v)``."""
        self.check(u, v)
        u, v = np.asarray(u), np.asarray(v)
        # elementwise antisymmetric form so that omega(u, u) is exactly zero
        density = u.imag * v.real - u.real * v.imag
        return float(np.sum(density)) * self.cell_volume / eps**self.dim

    def l2_norm(self, u, eps: float) -> float:
        return np.sqrt(max(self.inner(u, u, eps), 0.0))

    def grad_sq(self, u, eps: float, velocity=None):
        """Pointwise ``eps^2 |grad u|^2``.

        With ``velocity`` the gradient is taken in the frame boosted by
        ``v/2``: ``eps grad u - i (v/2) u``.  This is the co-moving gradient of
        a lab-frame field and needs no phase removal at the periodic seam.
        """
        self.check(u)
        grads = self.gradient(u)
        if velocity is None:
            return sum(np.abs(eps * g) ** 2 for g in grads)
        velocity = np.broadcast_to(np.asarray(velocity, dtype=float), (self.dim,))
        return sum(np.abs(eps * g - 0.5j * vm * u) ** 2 for g, vm in zip(grads, velocity))

    def h1_norm(self, u, eps: float, velocity=None) -> float:
        density = self.grad_sq(u, eps, velocity) + np.abs(u) ** 2
        return np.sqrt(self.integrate(density) / eps**self.dim)

    def h1_inner(self, u, v, eps: float) -> float:
        """Real inner product inducing :meth:`h1_norm`."""
        gu, gv = self.gradient(u), self.gradient(v)
        dens = sum(eps**2 * a * np.conj(b) for a, b in zip(gu, gv)) + u * np.conj(v)
        return float(np.sum(dens).real) * self.cell_volume / eps**self.dim


def pairing(grid: Grid, u, v, eps: float, kind: str = "inner") -> float:
    """``<u, v>_eps`` (``kind='inner'``) or ``omega_eps(u, v)`` (``kind='symplectic'``)."""
    if eps <= 0:
        raise DomainError("eps must be positive")
    if kind == "inner":
        return grid.inner(u, v, eps)
    if kind == "symplectic":
        return grid.symplectic(u, v, eps)
    raise DomainError(f"unknown pairing kind {kind!r}")


def h1_norm(grid: Grid, u, eps: float) -> float:
    if eps <= 0:
        raise DomainError("eps must be positive")
    return grid.h1_norm(u, eps)


def spectral_derivative(grid: Grid, u, axis: int = 0, order: int = 1):
    return grid.derivative(u, axis, order)
