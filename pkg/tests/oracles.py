"""Independent reference computations used by the tests.

Nothing here calls the closed-form variation formulas of the package; the
oracles go through brute-force sums, finite differences, Monte Carlo
averages or high-precision arithmetic instead.
"""

import itertools
import math

import mpmath
import numpy as np

from riesz.energy import Perturbation, RieszParams, curve_energy
from riesz.manifold import Configuration, random_configuration

ALPHAS = (0.5, 1.0, 2.0, 4.0)
MIN_DISTANCE = 0.3


def brute_energy(points, alpha):
    """sum_{i != j} ||x_i - x_j||^(-alpha) with explicit Python loops."""
    total = 0.0
    for i, j in itertools.permutations(range(len(points)), 2):
        dist = math.sqrt(sum((a - b) ** 2 for a, b in zip(points[i], points[j])))
        total += dist ** (-alpha)
    return total


def curve_value(config, params, pert, t):
    return curve_energy(config, params, pert, t).scaled


def central_first(config, params, pert, eps=1e-5):
    return (curve_value(config, params, pert, eps) - curve_value(config, params, pert, -eps)) / (2 * eps)


def central_second(config, params, pert, eps=1e-4):
    fp = curve_value(config, params, pert, eps)
    f0 = curve_value(config, params, pert, 0.0)
    fm = curve_value(config, params, pert, -eps)
    return (fp - 2 * f0 + fm) / eps ** 2


def mp_curve(points, vectors, r, t, dps=60):
    """Scaled energy along the retraction curve in ``dps``-digit arithmetic."""
    with mpmath.workdps(dps):
        t = mpmath.mpf(t)
        r = mpmath.mpf(r)
        Y = []
        for x, h in zip(points, vectors):
            y = [mpmath.mpf(float(a)) + t * mpmath.mpf(float(b)) for a, b in zip(x, h)]
            nrm = mpmath.sqrt(mpmath.fsum(v * v for v in y))
            Y.append([v / nrm for v in y])
        total = mpmath.mpf(0)
        for i, j in itertools.permutations(range(len(Y)), 2):
            total += (1 - mpmath.fsum(a * b for a, b in zip(Y[i], Y[j]))) ** (-r)
        return total


def mp_second_derivative(points, vectors, r, eps="1e-20", dps=80):
    with mpmath.workdps(dps):
        e = mpmath.mpf(eps)
        f = lambda t: mp_curve(points, vectors, r, t, dps)
        return float((f(e) - 2 * f(0) + f(-e)) / e ** 2)


def rotation(dim, rng):
    """Haar-random orthogonal matrix."""
    Q, R = np.linalg.qr(rng.standard_normal((dim, dim)))
    return Q * np.sign(np.diag(R))


def unit_random_perturbation(config, rng):
    pert = Perturbation.random(config, rng)
    return Perturbation(config, pert.vectors / pert.norm())


def sweep_cases(seed=2024, reps=2, ds=(1, 2, 3), ns=range(2, 9), alphas=ALPHAS):
    """Seeded (config, params, perturbation) triples over the full grid.

    Configurations keep every pairwise distance at least ``MIN_DISTANCE``
    and perturbations have unit Frobenius norm; both keep the finite
    difference oracle's truncation error well below the tolerance under test.
    """
    rng = np.random.default_rng(seed)
    cases = []
    for d in ds:
        for n in ns:
            for alpha in alphas:
                for _ in range(reps):
                    config = random_configuration(d, n, rng, min_distance=MIN_DISTANCE)
                    cases.append((config, RieszParams(alpha), unit_random_perturbation(config, rng)))
    return cases


def ngon(n):
    ang = 2 * np.pi * np.arange(n) / n
    return Configuration.from_vectors(np.c_[np.cos(ang), np.sin(ang)])


def antipodal(d=1):
    X = np.zeros((2, d + 1))
    X[0, 0], X[1, 0] = 1.0, -1.0
    return Configuration(X)


def tetrahedron():
    V = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)
    return Configuration.from_vectors(V)
