import logging

import numpy as np
import pytest
from scipy.integrate import quad

from solitonlab.diagnostics import (
    coercivity_constant,
    coercivity_form,
    energy_functional,
    energy_gap,
    project_skew,
    taylor_remainders,
)
from solitonlab.grid import Grid
from solitonlab.ground_state import Nonlinearity, apply_linearized, rescale, solve_base_profile, tangent_generators
from solitonlab.manifold import ManifoldPoint, SolitonParams, boost_phase, sum_solitons
from solitonlab.modulation import TruncationSet, decompose

CUBIC = Nonlinearity(3.0)


@pytest.fixture(scope="module")
def base():
    return solve_base_profile(CUBIC)


@pytest.fixture(scope="module")
def grid():
    return Grid(1, 512, 40.0)


def smooth_field(grid, rng, modes=6):
    x = grid.axis
    w = np.zeros(grid.shape, dtype=complex)
    for _ in range(modes):
        c = rng.uniform(-3, 3)
        s = rng.uniform(0.4, 2.0)
        w += (rng.normal() + 1j * rng.normal()) * np.exp(-((x - c) ** 2) / (2 * s**2))
    return w


def test_energy_of_zero(base, grid):
    assert energy_functional(grid, np.zeros(grid.shape), 1.0, 1.0, CUBIC) == 0.0


def test_energy_matches_quadrature(base, grid):
    eta = base.sample(grid)
    u = 2 * eta

    def dens(x):
        s = 1 / np.cosh(x)
        e = 2 * np.sqrt(2) * s
        de = -2 * np.sqrt(2) * np.tanh(x) * s
        return 0.5 * (de**2 + e**2) - 0.25 * e**4

    oracle = quad(dens, -20, 20, limit=200)[0]
    assert energy_functional(grid, u, 1.0, 1.0, CUBIC) == pytest.approx(oracle, rel=1e-8)


def test_energy_critical_at_ground_state(base, grid, rng):
    eta = base.sample(grid)
    z = project_skew(base, grid, smooth_field(grid, rng))
    e0 = energy_functional(grid, eta, 1.0, 1.0, CUBIC)
    d = [abs(energy_functional(grid, eta + s * z, 1.0, 1.0, CUBIC) - e0) for s in (1e-3, 1e-4)]
    assert np.log10(d[0] / d[1]) == pytest.approx(2.0, abs=0.05)


def test_criticality_residual(base, grid80):
    eta = base.sample(grid80)
    res = -grid80.laplacian(eta) + eta - CUBIC.f(eta)
    assert np.sqrt(np.sum(res**2)) <= 1e-8 * np.sqrt(np.sum(eta**2))


def test_kernel_direction(base, grid, caplog):
    _, _, z_g, _ = tangent_generators(base, grid)
    assert abs(coercivity_form(base, grid, z_g, project=False)) < 1e-7
    with caplog.at_level(logging.INFO, logger="solitonlab.diagnostics"):
        projected = coercivity_form(base, grid, z_g)
    assert abs(projected) < 1e-7
    assert any("projecting" in r.message for r in caplog.records)


def test_random_skew_fields_are_coercive(base, grid, rng):
    ratios = []
    for _ in range(100):
        w = project_skew(base, grid, smooth_field(grid, rng))
        ratios.append(coercivity_form(base, grid, w, project=False) / grid.h1_norm(w, 1.0) ** 2)
    assert min(ratios) > 0.05
    assert min(ratios) >= coercivity_constant(base, Grid(1, 256, 40.0)) - 1e-6


def test_negative_direction_documented(base, grid):
    eta = base.sample(grid).astype(complex)
    assert coercivity_form(base, grid, eta, project=False) < 0


def test_coercivity_constant_grid_stable(base):
    coarse = coercivity_constant(base, Grid(1, 128, 40.0))
    fine = coercivity_constant(base, Grid(1, 256, 40.0))
    assert coarse > 0.05 and fine > 0.05
    assert abs(coarse - fine) <= 0.2 * fine


def test_remainders_vanish_at_zero(base, grid):
    r2, r3, n = taylor_remainders(base, grid, np.zeros(grid.shape, dtype=complex))
    assert (r2, r3, n) == (0.0, 0.0, 0.0)


def test_remainder_slopes(base, grid, rng):
    shape = smooth_field(grid, rng)
    shape /= grid.h1_norm(shape, 1.0)
    s = np.array([1e-1, 1e-2, 1e-3])
    vals = np.array([taylor_remainders(base, grid, si * shape) for si in s])
    slopes = [np.polyfit(np.log(s), np.log(np.abs(vals[:, i])), 1)[0] for i in range(3)]
    assert slopes == pytest.approx([2.0, 3.0, 2.0], abs=0.15)


def test_phase_orientation_reported(base, grid, rng):
    w = 1e-2 * smooth_field(grid, rng).real
    r_real = taylor_remainders(base, grid, w)[0]
    r_imag = taylor_remainders(base, grid, 1j * w)[0]
    assert np.isfinite(r_real) and np.isfinite(r_imag)


@pytest.fixture(scope="module")
def moving():
    eps = 0.1
    grid = Grid(1, 2048, 10.0)
    pt = ManifoldPoint((SolitonParams(0.2, 0.4, 0.3, 1.2),), eps, CUBIC)
    return grid, pt


def test_gap_zero_on_manifold(moving):
    grid, pt = moving
    psi = sum_solitons(pt, grid)
    dec = decompose(psi, pt, grid)
    rep = energy_gap(psi, dec, TruncationSet.from_point(pt, 1.0), grid)
    assert abs(rep.gaps[0]) < 1e-10
    assert rep.w_norms[0] < 1e-10


def test_gap_quadratic_floor(moving, rng):
    grid, pt = moving
    eps = pt.eps
    prof = pt.profile(0)
    centred = rescale(prof, prof.mu, eps)
    rest = Grid(1, 2048, 10.0)
    shape = project_skew(centred, rest, smooth_field(rest, rng, 4) * np.exp(-(rest.axis**2) / 0.02))
    shape /= rest.h1_norm(shape, eps)
    sigma = pt[0]
    lab = boost_phase(grid, sigma, eps) * grid.shift(shape, np.asarray(sigma.a))
    s_vals = np.array([1e-2, 3e-3, 1e-3])
    gaps, quads, norms = [], [], []
    for s in s_vals:
        psi = sum_solitons(pt, grid) + s * lab
        dec = decompose(psi, pt, grid)
        rep = energy_gap(psi, dec, TruncationSet.from_point(dec.point, 1.0), grid)
        gaps.append(rep.gaps[0])
        quads.append(rep.coercivity[0])
        norms.append(rep.w_norms[0])
    gaps, quads, norms = map(np.array, (gaps, quads, norms))
    # fit gap = (rho/2) s^2 + c s^3
    A = np.stack([0.5 * norms**2, norms**3], axis=1)
    rho, _ = np.linalg.lstsq(A, gaps, rcond=None)[0]
    assert rho > 0
    for g, q in zip(gaps, quads):
        assert 0.5 <= g / (0.5 * q) <= 2.0


def test_linearized_matches_second_variation(base, grid, rng):
    w = project_skew(base, grid, smooth_field(grid, rng))
    eta = base.sample(grid)
    h = 1e-4
    e = [energy_functional(grid, eta + c * h * w, 1.0, 1.0, CUBIC) for c in (-1, 0, 1)]
    second = (e[0] - 2 * e[1] + e[2]) / h**2
    assert second == pytest.approx(grid.inner(apply_linearized(base, grid, w), w, 1.0), rel=1e-5)
