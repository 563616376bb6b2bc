import warnings

import numpy as np
import pytest

from solitonlab.errors import DecompositionError, DomainError, TruncationGeometryError
from solitonlab.evolution import PotentialSpec
from solitonlab.grid import Grid
from solitonlab.ground_state import Nonlinearity, mass_and_derivative
from solitonlab.manifold import ManifoldPoint, SolitonParams, base_profile, boost_phase, omega_matrix, sum_solitons, tangent_basis
from solitonlab.modulation import (
    Decomposition,
    TruncationSet,
    Tracker,
    beta_from_trajectory,
    correction_terms,
    decompose,
    full_jacobian,
    skew_residual,
    truncate_peaks,
)

CUBIC = Nonlinearity(3.0)
EPS = 0.1


def single(a=0.0, v=0.0, gamma=0.0, mu=1.0, eps=EPS):
    return ManifoldPoint((SolitonParams(a, v, gamma, mu),), eps, CUBIC)


def pair(sep=4.0, v=(0.2, -0.1), mu=(1.0, 1.4), eps=EPS):
    return ManifoldPoint(
        (SolitonParams(-sep / 2, v[0], 0.3, mu[0]), SolitonParams(sep / 2, v[1], -1.0, mu[1])), eps, CUBIC
    )


def bump(grid, center, width=0.3, eps=EPS):
    g = np.exp(-((grid.axis - center) ** 2) / (2 * width**2)) * (1 + 0.5j)
    return g / grid.h1_norm(g, eps)


@pytest.fixture(scope="module")
def grid():
    return Grid(1, 2048, 10.0)


def test_residual_zero_on_manifold(grid):
    pt = pair()
    assert np.max(np.abs(skew_residual(sum_solitons(pt, grid), pt, grid))) < 1e-12


def test_residual_reproduces_omega_column(grid):
    pt = pair()
    z = tangent_basis(pt, grid, 0)[0]
    G = skew_residual(sum_solitons(pt, grid) + 0.01 * z, pt, grid)
    omega = omega_matrix(pt, grid, 0)
    assert np.allclose(G[:4], 0.01 * omega[0], atol=1e-12)
    m = mass_and_derivative(pt.profile(0))[0]
    assert G[1] == pytest.approx(-0.01 * m, abs=1e-6)
    assert np.max(np.abs(G[4:])) < 1e-8


def test_exact_point_needs_no_steps(grid):
    pt = single(0.3, 0.2, 0.5, 1.2)
    dec = decompose(sum_solitons(pt, grid), pt, grid)
    assert dec.iterations == 0
    assert dec.point == pt
    assert dec.w_norm(grid) < 1e-10


def test_recovers_translation(grid):
    truth = single(a=0.03)
    dec = decompose(sum_solitons(truth, grid), single(), grid)
    assert dec.point[0].a[0] == pytest.approx(0.03, abs=1e-10)


def test_round_trip_random_points(grid, rng):
    m_inf = mass_and_derivative(base_profile(CUBIC), 0.5)[0]
    for _ in range(50):
        a = rng.uniform(-1, 1)
        v = rng.uniform(-1, 1)
        g = rng.uniform(-np.pi, np.pi)
        mu = rng.uniform(0.6, 1.9)
        truth = single(a, v, g, mu)
        guess = single(
            a + rng.uniform(-0.3, 0.3) * EPS,
            v + rng.uniform(-0.1, 0.1) * EPS,
            g + rng.uniform(-0.3, 0.3),
            mu + rng.uniform(-0.05, 0.05),
        )
        dec = decompose(sum_solitons(truth, grid), guess, grid)
        assert np.max(np.abs(dec.point.vector() - truth.vector())) < 1e-8
        assert dec.max_residual <= 1e-10 * m_inf


def test_bump_perturbation(grid):
    truth = single(0.0, 0.3, 0.0, 1.0)
    ev = PotentialSpec().eps_v(EPS)
    raw = np.exp(-(grid.axis**2) / (2 * (0.5 * EPS) ** 2)) * boost_phase(grid, truth[0], EPS)
    psi = sum_solitons(truth, grid) + ev * raw / grid.h1_norm(raw, EPS)
    dec = decompose(psi, truth, grid)
    assert dec.w_norm(grid) <= 1.5 * ev
    assert np.max(np.abs(dec.point.vector() - truth.vector())) < 2 * ev


def test_pair_matches_independent_singles(grid):
    pt = pair()
    psi = sum_solitons(pt, grid)
    guess = pt.with_vector(pt.vector() + 0.002)
    both = decompose(psi, guess, grid)
    for j in range(2):
        alone = ManifoldPoint((pt[j],), EPS, CUBIC)
        g1 = ManifoldPoint((guess[j],), EPS, CUBIC)
        dec = decompose(soliton_only(pt, j, grid), g1, grid)
        assert np.max(np.abs(dec.point.vector() - both.point[j].vector())) < 1e-8
        assert np.max(np.abs(dec.point.vector() - alone.vector())) < 1e-8


def soliton_only(pt, j, grid):
    return sum_solitons(ManifoldPoint((pt[j],), pt.eps, pt.nl), grid)


def test_cross_blocks_small(grid):
    J = full_jacobian(pair(), grid)
    diag = np.linalg.norm(J[:4, :4])
    assert np.linalg.norm(J[:4, 4:]) < 1e-10 * diag


def test_decomposition_failure(grid):
    psi = np.zeros(grid.shape, dtype=complex)
    with pytest.raises(DecompositionError):
        decompose(psi, single(), grid, max_iter=3)


def test_mu_projection_warning(grid, caplog):
    truth = single(mu=1.0)
    psi = 1.6 * sum_solitons(truth, grid)
    with caplog.at_level("WARNING"):
        try:
            decompose(psi, single(mu=1.99), grid, max_iter=4)
        except DecompositionError:
            pass
    assert any("projected" in r.message for r in caplog.records)


def test_tracker_warm_start(grid):
    tracker = Tracker(single(), grid)
    for a in (0.01, 0.02, 0.03):
        dec = tracker(sum_solitons(single(a=a), grid))
        assert dec.point[0].a[0] == pytest.approx(a, abs=1e-10)
    assert tracker.point[0].a[0] == pytest.approx(0.03, abs=1e-10)


def test_cutoff_shape():
    grid = Grid(1, 1024, 20.0)
    cuts = TruncationSet(((0.0,),), 2.0)
    phi = cuts.phi(grid, 0)
    r = np.abs(grid.axis)
    assert np.all(phi[r <= 2.0] == 1.0)
    assert np.all(phi[r >= 4.0] == 0.0)
    inner = (r > 2) & (r < 4)
    order = np.argsort(r[inner])
    assert np.all(np.diff(phi[inner][order]) <= 0)


def test_cutoff_geometry_errors():
    with pytest.raises(TruncationGeometryError):
        TruncationSet(((0.0,), (3.0,)), 1.0)
    with pytest.raises(DomainError):
        TruncationSet(((0.0,),), 0.0)
    cuts = TruncationSet(((0.0,), (10.0,)), 2.0)
    with pytest.raises(TruncationGeometryError):
        cuts.check_point(pair(sep=7.0))


def test_single_peak_truncation_is_untransform(grid):
    pt = single(0.2, 0.4, 0.7, 1.1)
    psi = sum_solitons(pt, grid) + 1e-3 * bump(grid, 0.3)
    dec = decompose(psi, pt, grid)
    cuts = TruncationSet.from_point(dec.point, 1.0)
    (u,), (w,) = truncate_peaks(psi, dec, cuts, grid)
    eta = dec.point.profile(0).sample(grid)
    assert np.max(np.abs(u - (eta + w))) < 1e-10


def test_two_peak_truncation():
    grid = Grid(1, 8192, 40.0)
    pt = pair(sep=20.0)
    ev = PotentialSpec().eps_v(EPS)
    psi = sum_solitons(pt, grid) + ev * (bump(grid, -10.0) + bump(grid, 10.0))
    dec = decompose(psi, pt, grid)
    cuts = TruncationSet.from_point(pt, 5.0)
    us, ws = truncate_peaks(psi, dec, cuts, grid)
    for j in range(2):
        eta = dec.point.profile(j).sample(grid)
        assert grid.h1_norm(us[j] - (eta + ws[j]), EPS) < 1e-6
    # two-sided norm equivalence with tail slack
    vmax = max(abs(s.v[0]) for s in dec.point.solitons)
    total = sum(grid.h1_norm(w, EPS) for w in ws)
    wn = dec.w_norm(grid)
    tail = 1e-6
    assert (wn - tail) / (1 + vmax) <= total <= 2 * (wn + tail) / (1 - 2 * vmax)


def free_trajectory(eps=0.1, v=0.3, mu=1.0, frames=21, stride=0.05, sign=1):
    t = np.arange(frames) * stride
    a = eps * v * t
    gamma = (mu + sign * v**2 / 4) * t
    params = np.stack([a, np.full_like(t, v), gamma, np.full_like(t, mu)], axis=-1)
    return t, params


def test_beta_zero_on_free_trajectory():
    t, params = free_trajectory()
    series = beta_from_trajectory(t, params, PotentialSpec(), 0.1)
    assert series.beta.shape == (19, 1, 4)
    assert np.max(np.abs(series.beta)) < 1e-12
    assert series.resolved


def test_beta_detects_wrong_phase_sign():
    t, params = free_trajectory(sign=-1)
    series = beta_from_trajectory(t, params, PotentialSpec(), 0.1)
    assert np.allclose(series.beta[..., 2], -0.3**2 / 2)


def test_beta_constant_parameters():
    t = np.linspace(0, 1, 6)
    params = np.tile([0.5, 0.2, 0.1, 1.3], (6, 1))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        series = beta_from_trajectory(t, params, PotentialSpec(), 0.1)
    assert np.allclose(series.beta[..., 0], -0.2 / 0.1)
    assert np.allclose(series.beta[..., 1], 0.0)
    assert np.allclose(series.beta[..., 2], -1.3 + 0.01)
    assert np.allclose(series.beta[..., 3], 0.0)


def test_beta_resolution_warning():
    # exact oscillation in a quadratic well has zero beta in the a, v rows
    eps, mu, amp = 0.1, 1.0, 3.0
    pot = PotentialSpec("quadratic", 1.0, 2.5)
    ev = pot.eps_v(eps)
    omega = eps * np.sqrt(2) * ev
    for stride, expect in ((0.3, False), (1e-3, True)):
        t = np.arange(15) * stride / omega
        a = amp * np.cos(omega * t)
        v = -amp * omega / eps * np.sin(omega * t)
        gamma = mu * t - amp**2 * ev**2 / (4 * omega) * np.sin(2 * omega * t)
        # a slow mu drift is a genuine beta signal
        params = np.stack([a, v, gamma, mu + 1e-3 * omega * t], axis=-1)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            series = beta_from_trajectory(t, params, pot, eps)
        assert series.resolved is expect
        assert bool(caught) is not expect


def test_beta_needs_three_frames():
    with pytest.raises(DomainError):
        beta_from_trajectory([0, 1], np.zeros((2, 4)), PotentialSpec(), 0.1)


def make_dec(pt, w, grid):
    return Decomposition(pt, w, np.zeros(4 * pt.k), 0)


def test_correction_vanishes_without_sources(grid):
    pt = single(0.1, 0.2, 0.0, 1.0)
    dec = make_dec(pt, np.zeros(grid.shape, dtype=complex), grid)
    X = correction_terms(dec, TruncationSet.from_point(pt, 1.0), PotentialSpec(), grid)
    assert np.max(np.abs(X)) < 1e-12


def test_correction_potential_scaling():
    grid = Grid(1, 4096, 40.0)
    pt = single(0.5, 0.0, 0.0, 1.0)
    cuts = TruncationSet.from_point(pt, 5.0)
    w0 = np.zeros(grid.shape, dtype=complex)
    sizes = []
    ev = []
    for amp in (1.0, 4.0):
        pot = PotentialSpec("quadratic", amp, 2.5)
        X = correction_terms(make_dec(pt, w0, grid), cuts, pot, grid)
        sizes.append(np.max(np.abs(X)))
        ev.append(pot.eps_v(EPS))
    # R is exactly the quadratic remainder, so X scales linearly with the curvature
    assert sizes[1] / sizes[0] == pytest.approx(4.0, rel=1e-8)
    assert sizes[0] <= 10 * ev[0] ** 2


def test_correction_quadratic_in_w(grid):
    pt = single(0.0, 0.0, 0.0, 1.0)
    cuts = TruncationSet.from_point(pt, 1.0)
    shape = bump(grid, 0.05, width=0.15)
    sizes = []
    for s in (1e-2, 1e-3):
        X = correction_terms(make_dec(pt, s * shape, grid), cuts, PotentialSpec(), grid)
        sizes.append(np.max(np.abs(X)))
    slope = np.log(sizes[0] / sizes[1]) / np.log(10.0)
    assert slope == pytest.approx(2.0, abs=0.1)


def test_correction_beta_term_linear(grid):
    pt = single(0.0, 0.2, 0.0, 1.0)
    cuts = TruncationSet.from_point(pt, 1.0)
    w = 1e-4 * bump(grid, 0.05, width=0.15)
    dec = make_dec(pt, w, grid)
    base = correction_terms(dec, cuts, PotentialSpec(), grid)
    beta = np.array([1e-3, -2e-3, 5e-4, 1e-3])
    one = correction_terms(dec, cuts, PotentialSpec(), grid, beta=beta) - base
    two = correction_terms(dec, cuts, PotentialSpec(), grid, beta=2 * beta) - base
    assert np.allclose(two, 2 * one, rtol=1e-6, atol=1e-18)
    assert np.max(np.abs(one)) <= 10 * np.max(np.abs(beta)) * grid.l2_norm(w, EPS)
