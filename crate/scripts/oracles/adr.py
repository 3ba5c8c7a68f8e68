"""Reference ADR relative efficiencies from pvlib.pvarray.pvefficiency_adr.

    python3 adr.py > ../../crates/core/tests/fixtures/adr_reference.csv
"""
import numpy as np
import pvlib

P = dict(k_a=0.99924, k_d=-5.49097, tc_d=0.01918, k_rs=0.06999, k_rsh=0.26144)
rng = np.random.default_rng(20260426)
g = np.round(rng.uniform(5, 1200, 20), 1)
t = np.round(rng.uniform(-10, 70, 20), 1)
eta = pvlib.pvarray.pvefficiency_adr(g, t, **P)
print("irradiance,temperature,efficiency")
for gi, ti, ei in zip(g, t, eta):
    print(f"{gi:.1f},{ti:.1f},{ei:.10f}")
