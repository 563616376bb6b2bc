"""Leading-order particle dynamics of the solitons in scaled time ``t' = eps t``.

    da/dt'  = v
    dv/dt'  = -2 grad V_eps(a)
    dgamma/dt' = (mu - V_eps(a) + s |v|^2 / 4) / eps
    dmu/dt' = 0

``s`` is the phase-sign flag (``+1`` reproduces exact free traveling waves).
Integration is classical RK4 with step rejection on the per-particle
invariant ``|v|^2/4 + V_eps(a)``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import DomainError
from .evolution import PotentialSpec

__all__ = ["ParticleState", "ParticleSeries", "ode_rhs", "integrate", "invariant", "integral_form"]


@dataclass(frozen=True)
class ParticleState:
    a: np.ndarray  # (k, N)
    v: np.ndarray  # (k, N)
    gamma: np.ndarray  # (k,)
    mu: np.ndarray  # (k,)
    t: float
    eps: float
    potential: PotentialSpec
    phase_sign: int = 1

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.a, dtype=float))
        v = np.atleast_2d(np.asarray(self.v, dtype=float))
        if a.shape != v.shape:
            raise DomainError("a and v must have matching shapes (k, N)")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "gamma", np.atleast_1d(np.asarray(self.gamma, dtype=float)))
        object.__setattr__(self, "mu", np.atleast_1d(np.asarray(self.mu, dtype=float)))
        if self.phase_sign not in (1, -1):
            raise DomainError("phase_sign must be +1 or -1")

    @classmethod
    def from_point(cls, point, potential: PotentialSpec, t: float = 0.0, phase_sign: int = 1) -> "ParticleState":
        sols = point.solitons
        return cls(
            np.array([s.a for s in sols]),
            np.array([s.v for s in sols]),
            np.array([s.gamma for s in sols]),
            np.array([s.mu for s in sols]),
            t,
            point.eps,
            potential,
            phase_sign,
        )


def _rhs(a, v, mu, eps, potential, sign):
    V, gV = potential.evaluate(a, eps)
    return v, -2.0 * gV, (mu - V + sign * 0.25 * np.sum(v**2, axis=-1)) / eps, np.zeros_like(mu)


def ode_rhs(state: ParticleState):
    """Time derivatives ``(da, dv, dgamma, dmu)`` in scaled time."""
    return _rhs(state.a, state.v, state.mu, state.eps, state.potential, state.phase_sign)


def invariant(a, v, potential: PotentialSpec, eps: float):
    """``|v|^2/4 + V_eps(a)`` per particle."""
    V, _ = potential.evaluate(a, eps)
    return 0.25 * np.sum(np.asarray(v) ** 2, axis=-1) + V


def _rk4(a, v, g, mu, dt, eps, pot, sign):
    k1 = _rhs(a, v, mu, eps, pot, sign)
    k2 = _rhs(a + 0.5 * dt * k1[0], v + 0.5 * dt * k1[1], mu, eps, pot, sign)
    k3 = _rhs(a + 0.5 * dt * k2[0], v + 0.5 * dt * k2[1], mu, eps, pot, sign)
    k4 = _rhs(a + dt * k3[0], v + dt * k3[1], mu, eps, pot, sign)

    def comb(i):
        return dt / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i])

    return a + comb(0), v + comb(1), g + comb(2)


@dataclass
class ParticleSeries:
    t: np.ndarray  # (n,)
    a: np.ndarray  # (n, k, N)
    v: np.ndarray
    gamma: np.ndarray  # (n, k)
    mu: np.ndarray
    rejected: int = 0

    def final(self, template: ParticleState) -> ParticleState:
        return replace(template, a=self.a[-1], v=self.v[-1], gamma=self.gamma[-1], mu=self.mu[-1], t=float(self.t[-1]))

    def at(self, times):
        """Linear interpolation of ``a`` at the given scaled times."""
        times = np.asarray(times, dtype=float)
        flat = self.a.reshape(len(self.t), -1)
        out = np.stack([np.interp(times, self.t, col) for col in flat.T], axis=-1)
        return out.reshape(times.shape + self.a.shape[1:])


def integrate(state: ParticleState, t_end: float, dt: float, drift_tol: float = 1e-8, max_halvings: int = 20) -> ParticleSeries:
    """RK4 from ``state.t`` to ``t_end`` (backwards if ``t_end < state.t``).

    The nominal step is ``dt``; a step whose invariant changes by more than
    ``drift_tol`` (relative) is rejected and retried with half the step.
    Samples are stored at every accepted nominal step.
    """
    if dt <= 0:
        raise DomainError("dt must be positive")
    span = t_end - state.t
    n = max(1, int(np.ceil(abs(span) / dt - 1e-9)))
    h = span / n
    eps, pot, sign = state.eps, state.potential, state.phase_sign
    a, v, g, mu = state.a, state.v, state.gamma, state.mu
    ts, As, Vs, Gs = [state.t], [a], [v], [g]
    rejected = 0
    for i in range(n):
        done, sub, halvings = 0.0, h, 0
        while abs(h - done) > 1e-14 * abs(h):
            sub = h - done if abs(sub) > abs(h - done) else sub
            e0 = invariant(a, v, pot, eps)
            na, nv, ng = _rk4(a, v, g, mu, sub, eps, pot, sign)
            e1 = invariant(na, nv, pot, eps)
            scale = np.maximum(np.abs(e0), 0.25 * np.sum(v**2, axis=-1)) + 1e-300
            if np.any(np.abs(e1 - e0) > drift_tol * scale + 1e-15) and halvings < max_halvings:
                rejected += 1
                halvings += 1
                sub *= 0.5
                continue
            a, v, g = na, nv, ng
            done += sub
        ts.append(state.t + (i + 1) * h)
        As.append(a)
        Vs.append(v)
        Gs.append(g)
    n_t = len(ts)
    return ParticleSeries(
        np.array(ts), np.array(As), np.array(Vs), np.array(Gs), np.broadcast_to(mu, (n_t, len(mu))).copy(), rejected
    )


def integral_form(series: ParticleSeries, potential: PotentialSpec, eps: float, phase_sign: int = 1):
    """Reconstruct ``(a, v, gamma)`` by quadrature of the stored series.

    Uses ``v(t) = v(0) - 2 int grad V_eps(a)``, ``a(t) = a(0) + int v`` and
    ``gamma(t) = gamma(0) + (1/eps) int (mu - V_eps(a) + s|v|^2/4)``.
    """
    t = series.t
    V, gV = potential.evaluate(series.a, eps)
    v = series.v[0] - 2 * cumulative_trapezoid(gV, t, axis=0, initial=0)
    a = series.a[0] + cumulative_trapezoid(series.v, t, axis=0, initial=0)
    integrand = (series.mu - V + phase_sign * 0.25 * np.sum(series.v**2, axis=-1)) / eps
    gamma = series.gamma[0] + cumulative_trapezoid(integrand, t, axis=0, initial=0)
    return a, v, gamma
