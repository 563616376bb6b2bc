"""Numerical laboratory for semiclassical NLS multi-soliton dynamics.

Submodules
----------
grid          periodic grids, spectral calculus and the eps-weighted pairings
ground_state  ground states, their scaling family and the linearized operator
manifold      moving solitons, tangent frames and the symplectic matrix
evolution     split-step PDE evolution and conserved quantities
modulation    skew-orthogonal decomposition, truncation, beta and X_delta
diagnostics   energy gap, coercivity and Taylor remainders
particles     effective particle ODE in scaled time
harness       experiment configs, tracked runs, sweeps and reports
"""

__version__ = "0.1.0"
