"""Dirichlet spectra on four domains and the fractional transform.

Builds the first modes of an interval, a rectangle, a disk and an annulus,
prints the lowest eigenvalues and how fast lambda_k / k**q settles toward
its limit on the unit square.
"""

import numpy as np

from fracspde.domains import DomainSpec, build_eigensystem, gram_matrix
from fracspde.spectrum import FracParams, build_truncation, summability_check, weyl_diagnostic

for spec in (DomainSpec.interval(1.0), DomainSpec.rectangle(1.0, 2.0),
             DomainSpec.disk(1.0), DomainSpec.annulus(1.0, 2.0)):
    sysm = build_eigensystem(spec, 40)
    dev = np.max(np.abs(gram_matrix(sysm, 10) - np.eye(10)))
    print(f"{spec.kind:9s} {spec.lengths}: gamma_1..4 = {np.round(sysm.gammas[:4], 4)}, Gram dev {dev:.1e}")

sq = build_eigensystem(DomainSpec.rectangle(1.0, 1.0), 2000)
rep = weyl_diagnostic(build_truncation(sq, FracParams(0.5, 2.0, 0.0), 2000))
for k in (10, 100, 1000, 2000):
    print(f"k={k:5d}  lambda_k/k = {rep.ratios[k - 1]:.4f}   (limit {rep.limit:.4f})")

line = build_eigensystem(DomainSpec.interval(1.0), 400)
tr = build_truncation(line, FracParams(0.5, 2.0, 0.0), 400)
s = summability_check(tr, 0.5, 1.0)
print(f"S_100={s.partial_sums[99]:.6f}  S_400={s.partial_sums[-1]:.6f}  tail bound {s.tail_bound:.2e}")
