"""Hopf fibrations: the gauge formula on S^1 -> S^3 -> S^2(1/2), and the
factorization on the octonionic S^7 -> S^15 -> S^8(1/2), which has no
principal bundle structure at all.
"""

import time

import numpy as np

from geoflow import FlowConfig, load_model
from geoflow.bundles import gauge_formula_check, lcpb_relations_check
from geoflow.exponential import factorization_check
from geoflow.studies import convergence_study

hopf = load_model("hopf_s3")
x, p, c = hopf.canonical_states[0]  # q = 1, #p = unit horizontal + 1/2 fibre

r = gauge_formula_check(hopf, x, p, chart=c)
print("omega(#p):", r["omega_sharp_p"])
print("exp^sr vs exp^r . exp^G(-t omega):", [f"{v:.1e}" for v in r["gauge_residuals"]])
print("omega(gamma') stays constant to", f"{r['omega_deviation']:.1e}")

lc = lcpb_relations_check(hopf, n=20)["residuals"]
print("Levi-Civita relations:", {k: f"{v:.1e}" for k, v in lc.items()})

# a larger covector keeps the truncation error above roundoff on every rung
x, p, c = hopf.random_states(1, seed=3, norm=2.0)[0]
study = convergence_study(
    lambda h: factorization_check(hopf, x, p, (1.0,), c, FlowConfig(step=h)).primary_residuals[0],
    [4e-3, 2e-3, 1e-3],
    "factorization on S^3",
)
print(study.table())

octo = load_model("octonionic_hopf")
print("octonionic vertical rank:", octo.vertical_rank, " principal bundle:", octo.bundle is not None)
x, p, c = octo.random_states(1, seed=5, norm=2.0)[0]
start = time.perf_counter()
rep = factorization_check(octo, x, p, (0.5, 1.0), c, FlowConfig(step=1e-2))
print("octonionic factorization at step 1e-2:", [f"{v:.1e}" for v in rep.primary_residuals], f"({time.perf_counter() - start:.0f}s)")
