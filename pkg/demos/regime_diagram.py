# Counting stable steady states across the (lambda, G) plane.
#
# Each cell reports how many mean-field states survive linear stability, and the
# regime label that count implies. A coarse grid keeps this under a minute.

import numpy as np

from dualjc import criticality as cr
from dualjc import fluctuations as fl
from dualjc.model import ModelParams

params = ModelParams.from_lambdas(delta=2.0, sagnac=1.0, delta_q=1e4, kappa=0.1, lambda_a=1.0)
lambdas = np.linspace(0.2, 2.6, 25)
pumps = np.linspace(0.05, 3.2, 22) * params.kappa

# %% Print the labels as a text map, pump increasing upwards.
for direction in ("forward", "backward"):
    diagram = fl.fluctuation_phase_diagram(params.replace(pump_direction=direction), lambdas, pumps)
    print(f"\n{direction} pump, rows G/kappa from {pumps[-1] / params.kappa:.2f} down")
    for row in diagram.cells[::-1]:
        print(" ".join(f"{c.regime or '-':>4s}" for c in row))

    # %% Points where three regimes meet, away from the tricritical one.
    for j in fl.multicritical_points(diagram, params.replace(pump_direction=direction)):
        print(f"junction near lambda={j.lam:.2f}, G/kappa={j.pump / params.kappa:.2f}")

# %% Approaching the second-order pump the photon number blows up.
p = params.replace(pump_direction="forward").with_lambdas(1.0)
g_c = cr.g_crit_second_numeric(p).value
for eps in (1e-1, 1e-2, 1e-3, 1e-4):
    n = fl.steady_correlators(fl.np_system(p.replace(pump_strength=g_c * (1 - eps)))).n_c
    print(f"G = (1 - {eps:g}) G_c   <c+c> = {n:.4g}")
