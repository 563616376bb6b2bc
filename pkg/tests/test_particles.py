import numpy as np
import pytest

from solitonlab.errors import DomainError
from solitonlab.evolution import PotentialSpec
from solitonlab.ground_state import Nonlinearity
from solitonlab.manifold import ManifoldPoint, SolitonParams
from solitonlab.particles import ParticleState, integral_form, integrate, invariant, ode_rhs

EPS = 0.1
WELL = PotentialSpec("quadratic", 1.0, 2.5)


def state(a=1.0, v=0.0, gamma=0.0, mu=1.0, potential=WELL, sign=1):
    return ParticleState([[a]], [[v]], [gamma], [mu], 0.0, EPS, potential, sign)


def test_free_rhs():
    da, dv, dg, dmu = ode_rhs(state(0.3, 0.4, potential=PotentialSpec()))
    assert da[0, 0] == 0.4 and dv[0, 0] == 0.0 and dmu[0] == 0.0
    assert dg[0] == pytest.approx((1.0 + 0.04) / EPS)
    _, _, dg_minus, _ = ode_rhs(state(0.3, 0.4, potential=PotentialSpec(), sign=-1))
    assert dg_minus[0] == pytest.approx((1.0 - 0.04) / EPS)


def test_quadratic_force():
    ev = WELL.eps_v(EPS)
    _, dv, _, _ = ode_rhs(state(2.0))
    assert dv[0, 0] == pytest.approx(-2 * ev**2 * 2.0, rel=1e-14)


def test_free_lines_exact():
    series = integrate(state(0.3, 0.7, potential=PotentialSpec()), 2.0, 1e-2)
    assert np.allclose(series.a[:, 0, 0], 0.3 + 0.7 * series.t, atol=1e-14, rtol=0)


def test_harmonic_oscillator_closed_form():
    ev = WELL.eps_v(EPS)
    omega = np.sqrt(2) * ev
    t_end = 1 / EPS
    series = integrate(state(1.0, 0.0), t_end, 1e-3)
    assert np.allclose(series.a[:, 0, 0], np.cos(omega * series.t), atol=1e-12)
    e = invariant(series.a, series.v, WELL, EPS)
    assert np.max(np.abs(e - e[0])) / abs(e[0]) < 1e-10


def test_invariant_along_large_oscillation():
    pot = PotentialSpec("gaussian_well", 1.0, 2.1)
    s = state(40.0, 0.0, potential=pot)
    series = integrate(s, 1 / EPS, 1e-3)
    e = invariant(series.a, series.v, pot, EPS)
    assert np.max(np.abs(e - e[0])) < 1e-8 * abs(e[0])


def test_well_attracts():
    series = integrate(state(1.0, 0.0), 5.0, 1e-2)
    assert series.v[1, 0, 0] < 0


def test_integral_form_consistency():
    series = integrate(state(1.0, 0.3), 1 / EPS, 1e-3)
    a, v, g = integral_form(series, WELL, EPS)
    assert np.max(np.abs(a - series.a)) < 1e-9
    assert np.max(np.abs(v - series.v)) < 1e-9
    assert np.max(np.abs(g - series.gamma)) < 1e-9 * np.max(np.abs(series.gamma))


def test_time_reversal():
    s = state(1.0, 0.5, 0.2, 1.3)
    fwd = integrate(s, 3.0, 1e-3)
    back = integrate(fwd.final(s), 0.0, 1e-3)
    end = back.final(s)
    assert np.allclose(end.a, s.a, atol=1e-9)
    assert np.allclose(end.v, s.v, atol=1e-9)
    assert np.allclose(end.gamma, s.gamma, atol=1e-9)
    assert end.t == pytest.approx(0.0, abs=1e-12)


def test_mu_constant():
    series = integrate(state(mu=1.7), 1.0, 1e-2)
    assert np.all(series.mu == 1.7)


def test_fourth_order_refinement():
    pot = PotentialSpec("gaussian_well", 1.0, 2.1)
    s = state(30.0, 0.0, potential=pot)
    ref = integrate(s, 1 / EPS, 1e-3).a[-1, 0, 0]
    errs = [abs(integrate(s, 1 / EPS, dt, drift_tol=1.0).a[-1, 0, 0] - ref) for dt in (0.4, 0.2)]
    order = np.log2(errs[0] / errs[1])
    assert order == pytest.approx(4.0, abs=0.3)


def test_from_point_and_interpolation():
    pt = ManifoldPoint((SolitonParams(-3.0, 0.2, 0.0, 1.0), SolitonParams(3.0, -0.2, 1.0, 1.5)), EPS, Nonlinearity(3.0))
    s = ParticleState.from_point(pt, PotentialSpec())
    assert s.a.shape == (2, 1)
    series = integrate(s, 1.0, 0.1)
    mid = series.at([0.55])
    assert np.allclose(mid[0, :, 0], [-3.0 + 0.11, 3.0 - 0.11])


def test_validation():
    with pytest.raises(DomainError):
        ParticleState([[0.0]], [[0.0, 1.0]], [0.0], [1.0], 0.0, EPS, WELL)
    with pytest.raises(DomainError):
        state(sign=0)
    with pytest.raises(DomainError):
        integrate(state(), 1.0, 0.0)
