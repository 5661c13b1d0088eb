"""Riesz energy on the sphere and its first and second variations.

With ``r = alpha / 2`` the Riesz kernel ``||x - y||^(-alpha)`` on the unit
sphere equals ``2^(-r) g_r(<x, y>)`` where ``g_r(t) = (1 - t)^(-r)``. All
sums run over ordered pairs ``i != j``, so each unordered pair appears twice.
Derivative quantities are stated for the *scaled* energy ``sum g_r(<x_i, x_j>)``.

Sums are accumulated with :func:`math.fsum`, which rounds the exact sum of
the summands once. Results are therefore independent of summation order.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import KernelSingularityError
from .manifold import (
    COLLISION_EPS,
    ORTHO_TOL,
    Configuration,
    TangentVector,
    gram,
    project_tangent,
    retract_all,
)

FD_STEP_FIRST = 1e-5
FD_STEP_SECOND = 1e-4


@dataclass(frozen=True)
class RieszParams:
    """Riesz exponent ``alpha > 0``; ``r`` is its half."""

    alpha: float

    def __post_init__(self):
        alpha = float(self.alpha)
        if not (math.isfinite(alpha) and alpha > 0):
            raise ValueError(f"alpha must be a positive finite number, got {self.alpha!r}")
        object.__setattr__(self, "alpha", alpha)

    @property
    def r(self):
        return self.alpha / 2.0


@dataclass(frozen=True)
class EnergyValue:
    raw: float
    scaled: float


@dataclass(frozen=True)
class Perturbation:
    """Tangent vectors ``h_i`` at every point of ``config``, one per row."""

    config: Configuration
    vectors: np.ndarray

    def __post_init__(self):
        H = np.array(self.vectors, dtype=float)
        if H.shape != self.config.points.shape:
            raise ValueError(
                f"perturbation shape {H.shape} does not match configuration {self.config.points.shape}")
        dots = np.einsum("ik,ik->i", self.config.points, H)
        scale = np.maximum(1.0, np.linalg.norm(H, axis=1))
        bad = np.flatnonzero(np.abs(dots) > ORTHO_TOL * scale)
        if bad.size:
            raise ValueError(f"perturbation vector {bad[0]} is not tangent to its point")
        H.setflags(write=False)
        object.__setattr__(self, "vectors", H)

    @classmethod
    def project(cls, config, raw):
        """Project arbitrary ambient vectors onto the tangent spaces."""
        raw = np.asarray(raw, dtype=float)
        return cls(config, np.stack([project_tangent(x, v).direction
                                     for x, v in zip(config.points, raw)]))

    @classmethod
    def zeros(cls, config):
        return cls(config, np.zeros_like(config.points))

    @classmethod
    def one_hot(cls, config, i, h):
        """``h`` at slot ``i`` and zero elsewhere."""
        h = h.direction if isinstance(h, TangentVector) else np.asarray(h, dtype=float)
        H = np.zeros_like(config.points)
        H[i] = h
        return cls(config, H)

    @classmethod
    def random(cls, config, rng=None):
        """Gaussian ambient vectors projected onto the tangent spaces."""
        rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        return cls.project(config, rng.standard_normal(config.points.shape))

    def tangent(self, i):
        return TangentVector(self.config.points[i], self.vectors[i])

    def __len__(self):
        return self.vectors.shape[0]

    def __iter__(self):
        return (self.tangent(i) for i in range(len(self)))

    def norm(self):
        return float(np.linalg.norm(self.vectors))


def _check_kernel_arg(t, collision_eps):
    t = np.asarray(t, dtype=float)
    if np.any(t >= 1.0 - collision_eps):
        raise KernelSingularityError()
    return t


def kernel(params, t, order=0, collision_eps=COLLISION_EPS):
    """``g_r(t) = (1 - t)^(-r)`` or its first or second derivative.

    ``t`` may be a scalar or an array; a scalar input gives a float back.
    """
    r = params.r
    tt = _check_kernel_arg(t, collision_eps)
    u = 1.0 - tt
    if order == 0:
        out = u ** (-r)
    elif order == 1:
        out = r * u ** (-r - 1.0)
    elif order == 2:
        out = r * (r + 1.0) * u ** (-r - 2.0)
    else:
        raise ValueError(f"order must be 0, 1 or 2, got {order!r}")
    return float(out) if np.ndim(out) == 0 else out


def _pair_mask(n):
    return ~np.eye(n, dtype=bool)


def _inner_products(X, collision_eps, t=None):
    """Gram matrix with a collision check over off-diagonal entries."""
    G = gram(X)
    n = G.shape[0]
    off = np.where(_pair_mask(n), G, -np.inf)
    if np.max(off) >= 1.0 - collision_eps:
        i, j = np.unravel_index(np.argmax(off), off.shape)
        pair = (int(min(i, j)), int(max(i, j)))
        raise KernelSingularityError(pair=pair, t=t)
    return G


def _energy_of_array(X, params, collision_eps, t=None):
    n = X.shape[0]
    G = _inner_products(X, collision_eps, t)
    mask = _pair_mask(n)
    # 1 - <x, y> = |x - y|^2 / 2 on the sphere; the difference form keeps
    # its digits for close pairs, where 1 - <x, y> cancels
    D = X[:, None, :] - X[None, :, :]
    sq = np.einsum("ijk,ijk->ij", D, D)[mask]
    scaled_terms = (0.5 * sq) ** (-params.r)
    raw_terms = sq ** (-params.alpha / 2.0)
    return EnergyValue(math.fsum(raw_terms), math.fsum(scaled_terms))


def energy(config, params):
    """Raw Riesz energy ``sum_{i != j} ||x_i - x_j||^(-alpha)`` and its scaled twin.

    Examples
    --------
    Two antipodal points with ``alpha = 1`` are at distance 2, and each of
    the two ordered pairs contributes 1/2:

    >>> from riesz.manifold import Configuration
    >>> energy(Configuration([[1.0, 0.0], [-1.0, 0.0]]), RieszParams(1.0)).raw
    1.0
    """
    return _energy_of_array(config.points, params, config.collision_eps)


def euclidean_gradient(config, params):
    """Gradient of the scaled energy in ambient coordinates, shape ``(N, d+1)``."""
    X = config.points
    G = _inner_products(X, config.collision_eps)
    mask = _pair_mask(len(X))
    W = np.zeros_like(G)
    W[mask] = params.r * (1.0 - G[mask]) ** (-params.r - 1.0)
    return 2.0 * (W @ X)


def riemannian_gradient(config, params):
    """Tangent projection of the Euclidean gradient at every point.

    The derivative of the energy along the retraction curve with tangents
    ``h`` at ``t = 0`` is ``sum_i <grad_i, h_i>``.
    """
    X = config.points
    E = euclidean_gradient(config, params)
    R = E - np.einsum("ik,ik->i", E, X)[:, None] * X
    R -= np.einsum("ik,ik->i", R, X)[:, None] * X
    return Perturbation(config, R)


def gradient_norm(config, params):
    return riemannian_gradient(config, params).norm()


def directional_derivative(config, params, pert):
    """``f'(0)`` along the retraction curve defined by ``pert``."""
    g = riemannian_gradient(config, params).vectors
    return math.fsum(np.einsum("ik,ik->i", g, pert.vectors))


def curve_energy(config, params, pert, t):
    """Energy of the configuration moved to parameter ``t`` along ``pert``.

    Raises :class:`KernelSingularityError` (carrying ``t``) if two moved
    points collide.
    """
    if t == 0:
        return energy(config, params)
    Y = retract_all(config.points, pert.vectors, t)
    return _energy_of_array(Y, params, config.collision_eps, t=t)


def _second_variation_terms(X, H, params, collision_eps):
    n = X.shape[0]
    G = _inner_products(X, collision_eps)
    mask = _pair_mask(n)
    T = G[mask]
    u = 1.0 - T
    g1 = params.r * u ** (-params.r - 1.0)
    g2 = params.r * (params.r + 1.0) * u ** (-params.r - 2.0)
    XH = np.einsum("ik,jk->ij", X, H)  # <x_i, h_j>
    A = (XH + XH.T)[mask]
    HH = gram(H)
    sqn = np.diag(HH)
    S = (2.0 * HH - (sqn[:, None] + sqn[None, :]) * G)[mask]
    return g2 * A * A + g1 * S


def second_variation(config, params, pert):
    """``f''(0)`` of the scaled energy along the retraction curve of ``pert``.

    Closed form, summed over ordered pairs::

        g''(t_ij) (<x_i, h_j> + <x_j, h_i>)^2
            + g'(t_ij) (2 <h_i, h_j> - (|h_i|^2 + |h_j|^2) t_ij)

    with ``t_ij = <x_i, x_j>``.
    """
    if pert.vectors.shape != config.points.shape:
        raise ValueError("perturbation does not match configuration")
    return math.fsum(_second_variation_terms(config.points, pert.vectors, params,
                                             config.collision_eps))


def raw_second_variation(config, params, pert):
    """Second variation of the unscaled energy, ``2^(-r)`` times the scaled one."""
    return 2.0 ** (-params.r) * second_variation(config, params, pert)


def _neighbors(config, i):
    n = config.n
    if not -n <= i < n:
        raise IndexError(f"point index {i} out of range for {n} points")
    i = i % n
    return i, np.array([j for j in range(n) if j != i])


def single_point_second_variation(config, params, i, h):
    """Half the second variation when only point ``i`` moves, along unit ``h``.

    ``sum_{j != i} g''(t_j) <x_j, h>^2 - g'(t_j) t_j`` with ``t_j = <x_i, x_j>``.
    ``h`` may be a :class:`TangentVector`, a single direction, or a stack of
    directions of shape ``(m, d+1)``, in which case an array is returned.
    """
    i, nb = _neighbors(config, i)
    x = config.points[i]
    Hd = h.direction if isinstance(h, TangentVector) else np.asarray(h, dtype=float)
    batch = Hd.ndim == 2
    Hd = np.atleast_2d(Hd)
    if Hd.shape[1] != x.size:
        raise ValueError("direction has the wrong ambient dimension")
    norms = np.linalg.norm(Hd, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-12):
        raise ValueError("unit tangent required")
    if np.any(np.abs(Hd @ x) > ORTHO_TOL):
        raise ValueError("unit tangent required: direction not orthogonal to the point")
    Xn = config.points[nb]
    t = _check_kernel_arg(Xn @ x, config.collision_eps)
    g1 = kernel(params, t, 1, config.collision_eps)
    g2 = kernel(params, t, 2, config.collision_eps)
    P = Hd @ Xn.T  # <x_j, h>
    terms = g2[None, :] * P * P - (g1 * t)[None, :]
    out = np.array([math.fsum(row) for row in terms])
    return out if batch else float(out[0])


@dataclass(frozen=True)
class AveragedSecondVariation:
    """Per-neighbor average of the single-point second variation over directions.

    ``expanded_terms`` are evaluated as ``g''(t)(1 - t^2)/d - g'(t) t`` and
    ``eq4_terms`` in the simplified form
    ``r((r+1) + (r+1-d) t) / (d (1-t)^(r+1))``.
    """

    index: int
    neighbors: np.ndarray
    inner_products: np.ndarray
    expanded_terms: np.ndarray
    eq4_terms: np.ndarray
    expanded_total: float
    eq4_total: float


def averaged_terms_expanded(r, d, t):
    """``g''(t)(1-t^2)/d - g'(t) t`` for ``g(t) = (1-t)^(-r)``."""
    t = np.asarray(t, dtype=float)
    u = 1.0 - t
    g1 = r * u ** (-r - 1.0)
    g2 = r * (r + 1.0) * u ** (-r - 2.0)
    return g2 * (u * (1.0 + t)) / d - g1 * t


def averaged_terms_simplified(r, d, t):
    """``r((r+1) + (r+1-d) t) / (d (1-t)^(r+1))``; same value, no cancellation."""
    t = np.asarray(t, dtype=float)
    u = 1.0 - t
    # same numerator, two groupings: for t >= 0 both parts are nonnegative
    # whenever alpha >= d - 2, so nothing cancels as t -> 1
    num = np.where(t >= 0, (r + 1.0) * u + (2.0 * (r + 1.0) - d) * t, (r + 1.0) + (r + 1.0 - d) * t)
    out = r * num / (d * u ** (r + 1.0))
    return float(out) if out.ndim == 0 else out


def averaged_second_variation(config, params, i):
    """Average of :func:`single_point_second_variation` over unit tangents at ``x_i``.

    Uses the identity that the mean of ``<y, h>^2`` over the tangent unit
    sphere at ``x`` is ``(1 - <x, y>^2) / d``.
    """
    d = config.d
    if d < 1:
        raise ValueError("equator undefined on S^0")
    i, nb = _neighbors(config, i)
    t = _check_kernel_arg(config.points[nb] @ config.points[i], config.collision_eps)
    e3 = averaged_terms_expanded(params.r, d, t)
    e4 = averaged_terms_simplified(params.r, d, t)
    return AveragedSecondVariation(
        index=i,
        neighbors=nb,
        inner_products=t,
        expanded_terms=e3,
        eq4_terms=e4,
        expanded_total=math.fsum(e3),
        eq4_total=math.fsum(e4),
    )


def fd_first(config, params, pert, eps=FD_STEP_FIRST):
    """Central difference ``(f(eps) - f(-eps)) / (2 eps)`` of the scaled energy."""
    fp = curve_energy(config, params, pert, eps).scaled
    fm = curve_energy(config, params, pert, -eps).scaled
    return (fp - fm) / (2.0 * eps)


def fd_second(config, params, pert, eps=FD_STEP_SECOND):
    """Central second difference ``(f(eps) - 2 f(0) + f(-eps)) / eps^2``."""
    fp = curve_energy(config, params, pert, eps).scaled
    f0 = curve_energy(config, params, pert, 0.0).scaled
    fm = curve_energy(config, params, pert, -eps).scaled
    return (fp - 2.0 * f0 + fm) / (eps * eps)
