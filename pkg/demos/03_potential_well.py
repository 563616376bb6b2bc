"""
A soliton in a slowly varying well
==================================

Compare the PDE against the particle ODE in a quadratic well, for a few
values of eps, and watch the perturbation w and the beta terms shrink with
eps_v = eps^h.  This is a shortened version of the scaling sweep used in the
acceptance tests.
"""

import json

from solitonlab.harness import ExperimentConfig, run_sweep

cfg = ExperimentConfig(
    eps=0.2,
    h=2.5,
    potential="quadratic",
    amplitude=1.0,
    points=2048,
    box=20.0,
    solitons=[{"a": [1.0], "v": [0.0], "gamma": 0.0, "mu": 1.0}],
    c=1.0,
    bump_offset=0.0,
    T0=1.0,
    horizon=0.25,
    dt=4e-4,
    richardson=True,
)

report = run_sweep(cfg, [0.25, 0.2, 0.15])
for row in report.rows:
    print(
        f"eps={row['eps']:.2f}  eps_v={row['eps_v']:.2e}  sup|w|={row['sup_w_h1']:.2e}  "
        f"sup|beta|={row['sup_beta_inf']:.2e}  traj err={row['max_trajectory_error']:.1e}"
    )
print(json.dumps({k: round(v["slope"], 3) for k, v in report.slopes.items()}, indent=1))
