"""Energy of a few named configurations, and the energy along a moving point.

Run: python demos/energy_and_curves.py
"""
import numpy as np

import riesz
from riesz.io import generate_named

# the three hand-checkable configurations
for name, kw, alpha in [("antipodal", dict(d=1), 1.0), ("ngon", dict(n=3), 1.0), ("ngon", dict(n=4), 2.0)]:
    config = generate_named(name, **kw)
    ev = riesz.energy(config, riesz.RieszParams(alpha))
    print(f"{name:10s} N={config.n} alpha={alpha}: raw={ev.raw:.12f} scaled={ev.scaled:.12f}")

# move one point of a random configuration along a tangent direction and
# compare the closed-form curvature with a finite difference of the curve
rng = np.random.default_rng(0)
config = riesz.random_configuration(2, 6, rng, min_distance=0.3)
params = riesz.RieszParams(1.0)
h = riesz.sample_equator(config.points[0], rng)
pert = riesz.Perturbation.one_hot(config, 0, h)

ts = np.linspace(-0.2, 0.2, 9)
f = np.array([riesz.curve_energy(config, params, pert, t).scaled for t in ts])
print("\n t        f(t)")
for t, v in zip(ts, f):
    print(f"{t:+.3f}  {v:.10f}")

eps = 1e-4
fd = (riesz.curve_energy(config, params, pert, eps).scaled - 2 * f[4]
      + riesz.curve_energy(config, params, pert, -eps).scaled) / eps**2
print(f"\nf'(0)  closed form {riesz.directional_derivative(config, params, pert):+.10f}")
print(f"f''(0) closed form {riesz.second_variation(config, params, pert):+.10f}   finite difference {fd:+.10f}")
print(f"single-point value x2 {2 * riesz.single_point_second_variation(config, params, 0, h):+.10f}")

# averaged over all directions at x_0, every per-neighbor term is positive
avg = riesz.averaged_second_variation(config, params, 0)
print("\naveraged terms:", np.array2string(avg.eq4_terms, precision=4))
print(f"total {avg.eq4_total:.6f}")
