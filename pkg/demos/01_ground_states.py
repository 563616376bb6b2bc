"""
Ground states and the soliton frame
===================================

Build the ground state, look at its scaling family, and check that the
symplectic matrix on the tangent frame has the expected block shape.
"""

import numpy as np

from solitonlab.grid import Grid
from solitonlab.ground_state import Nonlinearity, decay_rate, mass_and_derivative, rescale, solve_base_profile
from solitonlab.manifold import ManifoldPoint, SolitonParams, analytic_omega, omega_matrix

np.set_printoptions(precision=4, suppress=True)

# cubic focusing nonlinearity in one dimension: eta = sqrt(2) sech(x)
cubic = Nonlinearity(3.0)
base = solve_base_profile(cubic)
print("peak of eta_{1,1}:", base.radial(0.0), "expected", np.sqrt(2))

# the family eta_{mu,eps}(x) = mu^{1/(p-1)} eta(sqrt(mu) x / eps)
for mu in (0.5, 1.0, 2.0):
    prof = rescale(base, mu, 0.1)
    grid = Grid(1, 4096, 100 * prof.width)
    m, dm = mass_and_derivative(prof)
    print(f"mu={mu:3.1f}  residual={prof.residual(grid):.1e}  m={m:.4f}  m'={dm:.4f}  decay={decay_rate(prof).rate:.4f}")

# a quadratic nonlinearity, solved the same way
quad = rescale(solve_base_profile(Nonlinearity(2.0)), 1.0, 0.1)
print("p=2 residual:", quad.residual(Grid(1, 4096, 10.0)))

# the 2D profile has no closed form and comes from a Petviashvili iteration
planar = solve_base_profile(Nonlinearity(2.0, 1.0, 2))
print("2D peak and mass:", planar.radial(0.0), mass_and_derivative(planar)[0])

# Omega from quadrature against the block form built from m and m'
pt = ManifoldPoint((SolitonParams(0.3, 0.5, 1.0, 1.3),), 0.1, cubic)
grid = Grid(1, 4096, 10.0)
print("quadrature Omega:\n", omega_matrix(pt, grid, 0))
print("block form:\n", analytic_omega(pt.profile(0)))
