"""A tour of the Heisenberg group: normal geodesics, the split connection, and
the factorization of exp^sr through two Riemannian exponentials.

Run with ``python3 demos/heisenberg_tour.py``.
"""

import numpy as np

from geoflow import FlowConfig, load_model
from geoflow.connections import foliation_diagnostics
from geoflow.exponential import exp_r, exp_sr, factorization_check
from geoflow.hamiltonian import PhaseState, flow, poisson_bracket
from geoflow.geometry import lie_bracket

model = load_model("heisenberg")
x0 = np.zeros(3)
p0 = np.array([1.0, 0.0, 1.0])

# The frame X = d_x - y/2 d_z, Y = d_y + x/2 d_z brackets to d_z.
X = lambda y: model.frame(y)[0][:, 0]
Y = lambda y: model.frame(y)[0][:, 1]
print("[X, Y] at the origin:", lie_bracket(X, Y, x0))

# Its vertical direction is totally geodesic and Riemannian, so the split
# connection preserves the metric and the two Hamiltonians Poisson-commute.
rep = foliation_diagnostics(model, n=16)
print("verdicts:", rep.verdicts)
print("{H^h, H^v} at (0, p0):", poisson_bracket(model, "h", "v", x0, p0))

# The sub-Riemannian geodesic from p0 is a helix over the unit circle.
traj = flow(model, "h", PhaseState(x0, p0), 2 * np.pi)
print("after one turn:", traj.final.x, "(expected (0, 0, pi))")
print("energy drift:", traj.energy_drift)

# exp^sr(x, tp) is reached by a Riemannian geodesic followed by a vertical one.
y, _ = exp_sr(model, x0, p0, 1.0)
r = exp_r(model, x0, model.g_star(x0) @ p0, 1.0)
print("exp^sr(0, p0):", y)
print("exp^r(0, #p0):", r.x, "(overshoots along the fibre)")

rep = factorization_check(model, x0, p0, (0.25, 0.5, 1.0))
print("factorization residuals:", rep.primary_residuals)
print("alternate form:", rep.alternate_residuals)

# The residual does not shrink with the step: it is already at roundoff, since
# the vertical flow is an exact z-translation that RK4 reproduces exactly.
for h in (4e-3, 2e-3, 1e-3):
    rep = factorization_check(model, x0, p0, (1.0,), cfg=FlowConfig(step=h))
    print(f"step {h:.0e}: {rep.primary_residuals[0]:.2e}")
