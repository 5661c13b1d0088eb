"""Descend from random starts and classify where the runs end.

With alpha >= d - 2 no run should end at a local maximum; every critical
point found has at least one positive Hessian direction.

Run: python demos/landscape.py
"""
from collections import Counter

import numpy as np

import riesz

rng = np.random.default_rng(1)
for d, n, alpha in [(1, 5, 1.0), (2, 4, 1.0), (2, 6, 2.0), (2, 7, 2.0), (3, 8, 1.0)]:
    params = riesz.RieszParams(alpha)
    kinds, energies = Counter(), []
    for _ in range(8):
        res = riesz.minimize(riesz.random_configuration(d, n, rng), params)
        if not res.converged:
            kinds["not converged"] += 1
            continue
        report = riesz.classify(res.config, params)
        kinds[report.classification.value] += 1
        energies.append(riesz.energy(res.config, params).raw)
    spread = np.ptp(energies) if energies else float("nan")
    print(f"S^{d} N={n} alpha={alpha}: {dict(kinds)}  lowest energy {min(energies):.10f}  spread {spread:.1e}")

# the Hessian spectrum of the tetrahedron: three rotation modes, five positive
report = riesz.classify(riesz.Configuration.from_vectors(
    [[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]]), riesz.RieszParams(1.0))
print("\ntetrahedron spectrum:", np.array2string(report.hessian_eigenvalues, precision=6, suppress_small=True))
print(f"zero modes {report.num_zero}, positive {report.num_positive}, {report.classification.value}")
