"""Split-step Fourier evolution of

    i d_t psi = -eps^2 Lap psi + V_eps psi - lam |psi|^(p-1) psi,    V_eps(x) = V(eps^h x),

in unscaled time, with mass/energy/momentum diagnostics and gzip JSON checkpoints.
"""

from __future__ import annotations

import gzip
import json
import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import BlowUpError, ConfigError, DomainError
from .grid import Grid
from .ground_state import Nonlinearity

__all__ = [
    "PotentialSpec",
    "build_potential",
    "EvolutionState",
    "Propagator",
    "strang_step",
    "evolve",
    "mass",
    "hamiltonian",
    "momentum",
    "potential_energy",
    "default_dt",
    "save_checkpoint",
    "load_checkpoint",
]

FAMILIES = ("zero", "quadratic", "cosine", "gaussian_well")


@dataclass(frozen=True)
class PotentialSpec:
    """Slowly varying external potential ``V_eps(x) = V(eps_v x)`` with ``eps_v = eps^h``.

    ``quadratic``: ``V(y) = amplitude/2 |y|^2``; ``cosine``: ``amplitude * sum cos(y_i)``;
    ``gaussian_well``: ``-amplitude * exp(-|y|^2)``.
    """

    family: str = "zero"
    amplitude: float = 1.0
    h: float = 2.5

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown potential family {self.family!r}; expected one of {FAMILIES}")
        if not self.h > 2:
            raise ConfigError(f"h={self.h} must exceed 2", assumption="A")

    def eps_v(self, eps: float) -> float:
        return eps**self.h

    def _profile(self, y):
        """``V(y)`` and ``grad V(y)`` for ``y`` given as a list of coordinate arrays."""
        amp = self.amplitude
        if self.family == "zero":
            z = np.zeros_like(y[0], dtype=float)
            return z, [z.copy() for _ in y]
        if self.family == "quadratic":
            return 0.5 * amp * sum(c**2 for c in y), [amp * c for c in y]
        if self.family == "cosine":
            return amp * sum(np.cos(c) for c in y), [-amp * np.sin(c) for c in y]
        g = np.exp(-sum(c**2 for c in y))
        return -amp * g, [2 * amp * c * g for c in y]

    def evaluate(self, x, eps: float):
        """``V_eps`` and ``grad V_eps`` at points ``x`` (array of shape ``(..., N)``)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        ev = self.eps_v(eps)
        y = [ev * x[..., i] for i in range(x.shape[-1])]
        val, grad = self._profile(y)
        return val, np.stack([ev * g for g in grad], axis=-1)

    def hessian_bound(self) -> float:
        """Sup of the second derivatives of the unscaled profile ``V``."""
        return {"zero": 0.0, "quadratic": self.amplitude, "cosine": self.amplitude, "gaussian_well": 2 * self.amplitude}[
            self.family
        ]

    def to_dict(self) -> dict:
        return {"family": self.family, "amplitude": self.amplitude, "h": self.h}


def build_potential(spec: PotentialSpec, grid: Grid, eps: float):
    """Sample ``V_eps`` and its analytic gradient on ``grid``."""
    ev = spec.eps_v(eps)
    val, grad = spec._profile([ev * x for x in grid.coords])
    return val, [ev * g for g in grad]


# ---------------------------------------------------------------------------
# diagnostics


def mass(grid: Grid, psi, eps: float) -> float:
    return 0.5 * grid.integrate(np.abs(psi) ** 2) / eps**grid.dim


def potential_energy(grid: Grid, psi, eps: float, V) -> float:
    return 0.5 * grid.integrate(V * np.abs(psi) ** 2) / eps**grid.dim


def hamiltonian(grid: Grid, psi, eps: float, V, nl: Nonlinearity) -> float:
    dens = 0.5 * grid.grad_sq(psi, eps) + 0.5 * V * np.abs(psi) ** 2 - nl.potential_density(psi)
    return grid.integrate(dens) / eps**grid.dim


def momentum(grid: Grid, psi, eps: float) -> np.ndarray:
    """``<i psi, eps grad psi>_eps`` per axis."""
    return np.array([grid.inner(1j * psi, eps * g, eps) for g in grid.gradient(psi)])


# ---------------------------------------------------------------------------
# time stepping


def default_dt(grid: Grid, eps: float) -> float:
    return min(0.5 * grid.dx**2 / eps**2, 1e-3)


@dataclass(frozen=True)
class EvolutionState:
    psi: np.ndarray
    t: float
    eps: float
    grid: Grid
    potential: PotentialSpec
    nl: Nonlinearity

    def __post_init__(self):
        self.grid.check(self.psi)
        if not 0 < self.eps <= 1:
            raise DomainError("eps must lie in (0, 1]")


class Propagator:
    """Strang splitting with cached Fourier multipliers.

    One step is: half kinetic step ``exp(-i eps^2 |k|^2 dt/2)`` in Fourier space,
    full pointwise phase ``exp(-i dt (V - lam |psi|^(p-1)))``, half kinetic step.
    The pointwise substep is exact because it leaves ``|psi|`` unchanged.
    """

    def __init__(self, grid: Grid, eps: float, potential: PotentialSpec, nl: Nonlinearity, growth_limit: float = 10.0):
        self.grid = grid
        self.eps = eps
        self.potential = potential
        self.nl = nl
        self.V, self.grad_V = build_potential(potential, grid, eps)
        self.growth_limit = growth_limit
        self._kin = {}

    def kinetic(self, dt: float):
        """Fourier multiplier ``exp(-i eps^2 |k|^2 dt)``, cached per ``dt``."""
        mult = self._kin.get(dt)
        if mult is None:
            mult = np.exp(-1j * dt * self.eps**2 * self.grid.k_squared)
            self._kin[dt] = mult
        return mult

    def _phase(self, psi, dt: float):
        mod2 = psi.real**2 + psi.imag**2
        nonlin = mod2 if self.nl.p == 3 else mod2 ** (0.5 * (self.nl.p - 1))
        theta = dt * (self.nl.lam * nonlin - self.V)
        return psi * (np.cos(theta) + 1j * np.sin(theta))

    def advance(self, psi, dt: float, n: int = 1):
        """``n`` Strang steps with the inner half kinetic steps merged pairwise."""
        g = self.grid
        half, full = self.kinetic(0.5 * dt), self.kinetic(dt)
        psi = g.ifft(half * g.fft(psi))
        for i in range(n):
            psi = self._phase(psi, dt)
            psi = g.ifft((full if i < n - 1 else half) * g.fft(psi))
        return psi

    def step(self, psi, dt: float):
        return self.advance(psi, dt, 1)

    def guard(self, psi, t: float, reference: float):
        peak = np.max(np.abs(psi))
        if not np.isfinite(peak):
            raise BlowUpError("non-finite field", t)
        if peak > self.growth_limit * reference:
            raise BlowUpError(f"peak amplitude {peak:.3g} exceeds {self.growth_limit:g}x its initial value", t)

    def diagnostics(self, psi) -> dict:
        g, eps = self.grid, self.eps
        return {
            "mass": mass(g, psi, eps),
            "energy": hamiltonian(g, psi, eps, self.V, self.nl),
            "momentum": momentum(g, psi, eps),
        }

    @classmethod
    def for_state(cls, state: EvolutionState) -> "Propagator":
        return cls(state.grid, state.eps, state.potential, state.nl)


_PROPAGATORS: dict = {}


def _propagator(state: EvolutionState) -> Propagator:
    key = (state.grid, state.eps, state.potential, state.nl)
    prop = _PROPAGATORS.get(key)
    if prop is None:
        if len(_PROPAGATORS) > 16:
            _PROPAGATORS.clear()
        prop = _PROPAGATORS[key] = Propagator.for_state(state)
    return prop


def strang_step(state: EvolutionState, dt: float) -> EvolutionState:
    if not dt > 0:
        raise DomainError("dt must be positive")
    prop = _propagator(state)
    psi = prop.step(state.psi, dt)
    t = state.t + dt
    if not np.all(np.isfinite(psi)):
        raise BlowUpError("non-finite field", t)
    return replace(state, psi=psi, t=t)


def evolve(
    state: EvolutionState,
    t_end: float,
    dt: float,
    observer_stride: int = 1,
    observer: Callable | None = None,
):
    """Step ``state`` to ``t_end``; every ``observer_stride`` steps record diagnostics.

    The step count is ``ceil((t_end - t)/dt)`` with ``dt`` shrunk uniformly so the
    run lands on ``t_end`` exactly.  ``observer(t, psi)``, if given, is called at
    each recorded frame (including the initial one) and its return value is
    stored under ``"observed"``.  Returns ``(final_state, rows)``.
    """
    if not t_end > state.t:
        raise DomainError("t_end must exceed the current time")
    prop = _propagator(state)
    n_steps = max(1, math.ceil((t_end - state.t) / dt - 1e-9))
    dt = (t_end - state.t) / n_steps
    psi, t0 = state.psi, state.t
    ref = np.max(np.abs(psi))
    rows = []

    def record(step, psi):
        t = t0 + step * dt
        row = {"t": t, **prop.diagnostics(psi)}
        if observer is not None:
            row["observed"] = observer(t, psi)
        rows.append(row)

    record(0, psi)
    done = 0
    while done < n_steps:
        n = min(observer_stride, n_steps - done)
        psi = prop.advance(psi, dt, n)
        done += n
        prop.guard(psi, t0 + done * dt, ref)
        record(done, psi)
    return replace(state, psi=psi, t=t_end), rows


# ---------------------------------------------------------------------------
# checkpoints


def save_checkpoint(path, state: EvolutionState):
    """Write ``{t, eps, grid, psi_re, psi_im}`` as gzip-compressed JSON.

    Floats are written with ``repr`` (17 significant digits) so the samples
    round-trip exactly; the gzip timestamp is zeroed for reproducible bytes.
    """
    doc = {
        "t": state.t,
        "eps": state.eps,
        "grid": state.grid.to_dict(),
        "potential": state.potential.to_dict(),
        "nonlinearity": state.nl.to_dict(),
        "psi_re": np.real(state.psi).ravel().tolist(),
        "psi_im": np.imag(state.psi).ravel().tolist(),
    }
    data = json.dumps(doc).encode()
    with open(path, "wb") as fh:
        fh.write(gzip.compress(data, mtime=0))


def load_checkpoint(path) -> EvolutionState:
    with open(path, "rb") as fh:
        doc = json.loads(gzip.decompress(fh.read()))
    grid = Grid.from_dict(doc["grid"])
    psi = (np.array(doc["psi_re"]) + 1j * np.array(doc["psi_im"])).reshape(grid.shape)
    nl_doc = doc.get("nonlinearity", {"p": 3.0, "lambda": 1.0, "dim": grid.dim})
    nl = Nonlinearity(nl_doc["p"], nl_doc["lambda"], nl_doc.get("dim", grid.dim))
    pot = PotentialSpec(**doc.get("potential", {}))
    return EvolutionState(psi, doc["t"], doc["eps"], grid, pot, nl)
