"""Certificates that a configuration is not a local maximum.

A non-critical configuration gets a gradient witness. A critical one (here
the regular simplex, which is the minimizer) still gets an explicit ascent
direction: one point can always be moved so that the energy curve bends
upward.

Run: python demos/certificates.py
"""
import numpy as np

import riesz
from riesz.io import generate_named

rng = np.random.default_rng(7)
params = riesz.RieszParams(1.0)

random_config = riesz.random_configuration(2, 5, rng)
cert = riesz.certify_not_max(random_config, params, rng)
print(cert.kind.value, f"gradient norm {cert.gradient_norm:.3e}")

simplex = generate_named("simplex", d=2)
cert = riesz.certify_not_max(simplex, params, rng)
print(cert.kind.value, f"point {cert.point_index}, f''(0) = {cert.second_variation_value:.8f}",
      f"(finite difference {cert.fd_confirmation:.8f})")
print("verifies:", riesz.verify_certificate(simplex, params, cert))

# JSON travels: read it back and re-check from scratch
back = riesz.Certificate.from_json(cert.to_json())
print("round trip verifies:", riesz.verify_certificate(simplex, params, back))
print(cert.to_json())

# below alpha = d - 2 nothing is claimed
cert = riesz.certify_not_max(riesz.random_configuration(4, 6, rng), riesz.RieszParams(1.0), rng)
print("S^4 with alpha = 1:", cert.kind.value)
