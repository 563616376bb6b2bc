"""Experiment configuration with assumption gating.

Configs are JSON objects whose keys are exactly the fields of
:class:`ExperimentConfig`; unknown keys are rejected.  :meth:`validate` checks
the modelling assumptions before any computation:

(A) slowly varying potential, ``h > 2``;
(B) subcritical power nonlinearity, ``1 < p < 1 + 4/N`` and ``lam > 0``;
(C) initial solitons separated by more than ``6L``, speeds below ``K``,
    eigenvalues in ``I`` and a perturbation of size ``c eps_v``;
(D) straight reference paths ``a_i + t v_i`` stay ``2d`` apart (warning only).
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, DomainError
from ..evolution import FAMILIES, PotentialSpec
from ..grid import Grid
from ..ground_state import Nonlinearity
from ..manifold import ManifoldPoint, SolitonParams

__all__ = ["ExperimentConfig", "AssumptionWarning", "load_config"]


class AssumptionWarning(UserWarning):
    """A soft modelling assumption (D) does not hold."""


def _default_solitons():
    return [{"a": [0.0], "v": [0.0], "gamma": 0.0, "mu": 1.0}]


@dataclass
class ExperimentConfig:
    # semiclassical parameters
    eps: float = 0.1
    h: float = 2.5
    # nonlinearity
    p: float = 3.0
    lam: float = 1.0
    dim: int = 1
    # grid; box=None picks max(40 eps/sqrt(mu_inf) + span, 20)
    points: int = 4096
    box: float | None = None
    # potential V(y); V_eps(x) = V(eps^h x)
    potential: str = "zero"
    amplitude: float = 1.0
    # initial manifold point; v in scaled-time units
    solitons: list = field(default_factory=_default_solitons)
    # perturbation: ||w(0)||_H1 = c eps_v
    c: float = 0.0
    perturbation: str = "bump"
    bump_offset: float = 0.0
    bump_width: float = 1.0
    seed: int = 0
    # box constants of the assumptions
    K: float = 1.0
    L: float = 1.0
    d: float | None = None
    mu_range: list = field(default_factory=lambda: [0.5, 2.0])
    T0: float = 1.0
    # horizon as a fraction of the admissible window (scaled time)
    horizon: float = 0.5
    extend: bool = False
    # numerics (unscaled PDE time); None picks the defaults
    dt: float | None = None
    cadence: float | None = None
    dt_ode: float = 1e-3
    richardson: bool = False
    phase_sign: int = 1
    out: str | None = None

    # -- construction -------------------------------------------------------

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(doc) - names)
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
        return cls(**doc)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def digest(self) -> str:
        """Hash of the configuration, excluding the output location."""
        doc = self.to_dict()
        doc.pop("out", None)
        return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()[:16]

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    # -- derived objects ------------------------------------------------------

    @property
    def k(self) -> int:
        return len(self.solitons)

    @property
    def eps_v(self) -> float:
        return self.eps**self.h

    def nonlinearity(self) -> Nonlinearity:
        return Nonlinearity(self.p, self.lam, self.dim)

    def potential_spec(self) -> PotentialSpec:
        return PotentialSpec(self.potential, self.amplitude, self.h)

    def manifold_point(self) -> ManifoldPoint:
        sols = tuple(SolitonParams(s["a"], s["v"], s.get("gamma", 0.0), s["mu"]) for s in self.solitons)
        return ManifoldPoint(sols, self.eps, self.nonlinearity(), tuple(self.mu_range))

    @property
    def window(self) -> float:
        """Admissible scaled-time window ``min(T0/eps, L/K)``; ``T0/eps`` alone for one soliton or when extending."""
        base = self.T0 / self.eps
        if self.k == 1 or self.extend:
            return base
        return min(base, self.L / self.K)

    @property
    def t_end(self) -> float:
        """Scaled end time of the run."""
        return self.horizon * self.window

    @property
    def anchor_window(self) -> float:
        """Scaled time between re-anchorings of the cutoffs."""
        return self.L / self.K

    @property
    def cut_radius(self) -> float:
        return self.L

    def reference_paths(self, times) -> np.ndarray:
        a = np.array([s["a"] for s in self.solitons], dtype=float)
        v = np.array([s["v"] for s in self.solitons], dtype=float)
        times = np.asarray(times, dtype=float)
        return a[None] + times[:, None, None] * v[None]

    def grid(self) -> Grid:
        if self.box is not None:
            return Grid(self.dim, self.points, float(self.box))
        paths = self.reference_paths(np.linspace(0.0, self.t_end, 64))
        span = float(np.max(np.ptp(paths.reshape(-1, self.dim), axis=0))) if paths.size else 0.0
        return Grid(self.dim, self.points, max(40 * self.eps / math.sqrt(self.mu_range[0]) + span, 20.0))

    def time_step(self) -> float:
        if self.dt is not None:
            return float(self.dt)
        g = self.grid()
        return min(0.5 * g.dx**2 / self.eps**2, 1e-3)

    def cadence_time(self) -> float:
        """Unscaled time between decompositions."""
        return float(self.cadence) if self.cadence is not None else 0.01 / self.eps

    # -- validation -----------------------------------------------------------

    def validate(self) -> list:
        """Raise :class:`ConfigError` on (A)-(C) violations; return (D) warnings."""
        if self.potential not in FAMILIES:
            raise ConfigError(f"unknown potential family {self.potential!r}", assumption="A")
        if not self.h > 2:
            raise ConfigError(f"h={self.h} must exceed 2", assumption="A")
        if not 0 < self.eps <= 1:
            raise ConfigError("eps must lie in (0, 1]")
        try:
            self.nonlinearity()
        except DomainError as exc:
            raise ConfigError(str(exc), assumption="B") from exc
        if not self.solitons:
            raise ConfigError("at least one soliton is required", assumption="C")
        lo, hi = self.mu_range
        if not 0 < lo < hi:
            raise ConfigError("mu_range must satisfy 0 < mu_inf < mu_sup", assumption="C")
        if not (self.K > 0 and self.L > 0):
            raise ConfigError("K and L must be positive", assumption="C")
        for i, s in enumerate(self.solitons):
            if len(s["a"]) != self.dim or len(s["v"]) != self.dim:
                raise ConfigError(f"soliton {i}: a and v must have {self.dim} components")
            if not lo <= s["mu"] <= hi:
                raise ConfigError(f"soliton {i}: mu={s['mu']} outside [{lo}, {hi}]", assumption="C")
            if not np.linalg.norm(s["v"]) < self.K:
                raise ConfigError(f"soliton {i}: |v|={np.linalg.norm(s['v']):.4g} is not below K={self.K}", assumption="C")
        a = [np.asarray(s["a"], dtype=float) for s in self.solitons]
        for i in range(self.k):
            for j in range(i + 1, self.k):
                sep = float(np.linalg.norm(a[i] - a[j]))
                if not sep > 6 * self.L:
                    raise ConfigError(f"solitons {i} and {j} are {sep:.4g} apart, not more than 6L={6 * self.L:.4g}", assumption="C")
        if not (self.c >= 0 and math.isfinite(self.c)):
            raise ConfigError("perturbation amplitude c must be finite and non-negative", assumption="C")
        if self.perturbation not in ("bump", "random"):
            raise ConfigError(f"unknown perturbation mode {self.perturbation!r}")
        if self.phase_sign not in (1, -1):
            raise ConfigError("phase_sign must be +1 or -1")
        if not 0 < self.horizon <= 1:
            raise ConfigError("horizon must be a fraction in (0, 1] of the admissible window")

        notes = []
        if self.k > 1:
            d = self.d if self.d is not None else 3 * self.L
            paths = self.reference_paths(np.linspace(0.0, self.t_end, 401))
            gap = min(
                float(np.min(np.linalg.norm(paths[:, i] - paths[:, j], axis=-1)))
                for i in range(self.k)
                for j in range(i + 1, self.k)
            )
            if gap < 2 * d:
                msg = f"assumption (D): reference paths come within {gap:.4g} < 2d = {2 * d:.4g}"
                warnings.warn(msg, AssumptionWarning, stacklevel=2)
                notes.append(msg)
        return notes


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return ExperimentConfig.from_dict(json.load(fh))
