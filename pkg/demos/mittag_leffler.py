"""Mittag-Leffler relaxation against its rational envelope.

Prints E_beta(-x) for a few orders next to the two bounds that sandwich it,
then checks the L1 Caputo scheme on the relaxation ODE of a single mode.
"""

import numpy as np

from fracspde.analyze import residual_orders
from fracspde.mlf import eval_mlf, mlf_envelope

xs = np.array([0.0, 0.1, 1.0, 10.0, 100.0, 1e4])
for beta in (0.2, 0.5, 0.8, 1.0):
    env = mlf_envelope(beta, xs)
    print(f"beta={beta}")
    for x, lo, v, hi in zip(xs, np.atleast_1d(env.lower), eval_mlf(beta, xs), np.atleast_1d(env.upper)):
        print(f"  x={x:8.1e}  {lo:.6e} <= {v:.6e} <= {hi:.6e}")

# heavy algebraic tail: E_beta(-x) ~ x^-1 / Gamma(1 - beta) for beta < 1
x = 1e6
print("tail check at x=1e6, beta=0.5:", eval_mlf(0.5, x) * x * np.sqrt(np.pi))

for lam, beta in ((1.0, 0.3), (5.0, 0.7)):
    print(f"L1 residual orders lam={lam} beta={beta}:", np.round(residual_orders(lam, beta), 3))
