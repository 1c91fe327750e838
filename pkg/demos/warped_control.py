"""The warped product g = dx^2 + dy^2 + e^{2x} dz^2 with V = span(d_z).

Its fibres are not totally geodesic, so every identity that needs a
parallel metric fails here, and fails by an amount that does not go away
when the step is refined.
"""

import numpy as np

from geoflow import FlowConfig, load_model
from geoflow.connections import foliation_point_residuals
from geoflow.exponential import factorization_check, projection_agreement
from geoflow.hamiltonian import PhaseState, flow_commutation_residual, poisson_bracket
from geoflow.studies import convergence_study

model = load_model("warped_control")
x0 = np.zeros(3)
p0 = np.array([1.0, 0.0, 1.0])

res = foliation_point_residuals(model, x0)
print("(L_X g)(Z, Z) at 0:", res["tg"], "  (L_Z g)(X, X):", res["rf"])
print("{H^h, H^v}(0, p0) =", poisson_bracket(model, "h", "v", x0, p0), "(hand value p1 e^{-2x} p3^2 = 1)")

s0 = PhaseState(x0, p0)
study = convergence_study(
    lambda h: max(flow_commutation_residual(model, s0, 1.0, 1.0, FlowConfig(step=h))),
    [4e-2, 2e-2, 1e-2],
    "flows of H^h and H^g fail to commute",
)
print(study.table())

for h in (4e-3, 1e-3):
    rep = factorization_check(model, x0, p0, (1.0,), cfg=FlowConfig(step=h))
    print(f"factorization at step {h:.0e}: {rep.primary_residuals[0]:.4f}")

r = projection_agreement(model, x0, p0, (0.5, 1.0), lift=False)
print("projections disagree by", r["agreement_residuals"])
