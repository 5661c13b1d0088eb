"""Geometry of the unit sphere S^d embedded in R^(d+1).

Points are plain 1-D float arrays of unit norm. A configuration stacks N of
them as the rows of an ``(N, d+1)`` array. Tangent vectors carry their base
point so that orthogonality can be checked where they are consumed.
"""

from dataclasses import dataclass

import numpy as np

from .errors import KernelSingularityError

NORM_TOL = 1e-12
ORTHO_TOL = 1e-12
COLLISION_EPS = 1e-9
# Gaussian draws whose (projected) norm falls below this are redrawn.
RESAMPLE_TOL = 1e-12


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def as_point(coords, normalize=True):
    """Return ``coords`` as a unit vector.

    With ``normalize=False`` the input must already be unit-norm to
    ``NORM_TOL``, and it is returned unchanged (bit for bit).
    """
    x = np.asarray(coords, dtype=float)
    if x.ndim != 1 or x.size < 1:
        raise ValueError(f"a point must be a nonempty 1-D vector, got shape {x.shape}")
    n = np.linalg.norm(x)
    if normalize:
        if not np.isfinite(n) or n < RESAMPLE_TOL:
            raise ValueError("cannot normalize a zero or non-finite vector")
        if abs(n - 1.0) > 0.0:
            x = x / n
    elif abs(n - 1.0) > NORM_TOL:
        raise ValueError(f"point is not unit-norm (norm={n!r})")
    return _frozen(x)


@dataclass(frozen=True)
class TangentVector:
    """A vector ``direction`` orthogonal to the unit point ``base``."""

    base: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        base = _frozen(self.base)
        direction = _frozen(self.direction)
        if base.shape != direction.shape:
            raise ValueError("base and direction must have the same shape")
        scale = max(1.0, float(np.linalg.norm(direction)))
        if abs(float(base @ direction)) > ORTHO_TOL * scale:
            raise ValueError("direction is not orthogonal to its base point")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "direction", direction)

    @property
    def norm(self):
        return float(np.linalg.norm(self.direction))


@dataclass(frozen=True)
class Configuration:
    """N pairwise distinct unit vectors in R^(d+1), stored as rows.

    Parameters
    ----------
    points : array_like, shape (N, d+1)
        Rows must already be unit-norm to 1e-12; use :meth:`from_vectors`
        to normalize arbitrary input.
    collision_eps : float
        Two points collide when their inner product exceeds ``1 - collision_eps``.
    """

    points: np.ndarray
    collision_eps: float = COLLISION_EPS

    def __post_init__(self):
        X = _frozen(self.points)
        if X.ndim != 2 or X.shape[1] < 1:
            raise ValueError(f"points must be a 2-D array, got shape {X.shape}")
        if X.shape[0] < 2:
            raise ValueError("a configuration needs at least two points")
        if not np.all(np.isfinite(X)):
            raise ValueError("points must be finite")
        norms = np.linalg.norm(X, axis=1)
        bad = np.flatnonzero(np.abs(norms - 1.0) > NORM_TOL)
        if bad.size:
            raise ValueError(f"point {bad[0]} is not unit-norm (norm={norms[bad[0]]!r})")
        object.__setattr__(self, "points", X)
        check_distinct(X, self.collision_eps)

    @classmethod
    def from_vectors(cls, vectors, collision_eps=COLLISION_EPS):
        """Normalize each row of ``vectors`` and build a configuration."""
        V = np.asarray(vectors, dtype=float)
        if V.ndim != 2:
            raise ValueError(f"vectors must be a 2-D array, got shape {V.shape}")
        return cls(np.stack([as_point(v) for v in V]), collision_eps)

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def d(self):
        """Sphere dimension (ambient dimension minus one)."""
        return self.points.shape[1] - 1

    def __len__(self):
        return self.n

    def __getitem__(self, i):
        return self.points[i]

    def gram(self):
        """Matrix of inner products, exactly symmetric."""
        return gram(self.points)

    def rotated(self, Q):
        """Apply the orthogonal matrix ``Q`` to every point."""
        return Configuration.from_vectors(self.points @ np.asarray(Q).T, self.collision_eps)

    def permuted(self, order):
        return Configuration(self.points[np.asarray(order)], self.collision_eps)


def gram(X):
    """Pairwise inner products ``<x_i, x_j>`` with G[i, j] == G[j, i] bitwise.

    Elementwise products commute exactly and every row reduction has the same
    length, so the result does not depend on the order of the two factors.
    """
    X = np.asarray(X, dtype=float)
    return np.einsum("ik,jk->ij", X, X, optimize=False)


def check_distinct(X, collision_eps=COLLISION_EPS, t=None):
    """Raise :class:`KernelSingularityError` if two rows of ``X`` collide."""
    G = gram(X)
    n = G.shape[0]
    iu = np.triu_indices(n, 1)
    hits = np.flatnonzero(G[iu] >= 1.0 - collision_eps)
    if hits.size:
        k = hits[0]
        raise KernelSingularityError(pair=(int(iu[0][k]), int(iu[1][k])), t=t)


def project_tangent(x, v):
    """Orthogonal projection of ``v`` onto the tangent space at ``x``.

    Examples
    --------
    >>> project_tangent([1.0, 0.0, 0.0], [1.0, 1.0, 1.0]).direction
    array([0., 1., 1.])
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    w = v - (x @ v) * x
    # one correction pass pushes the residual down to rounding level
    w = w - (x @ w) * x
    return TangentVector(x, w)


def retract(x, h, t):
    """Normalization retraction ``(x + t h) / ||x + t h||``.

    ``h`` may be a :class:`TangentVector` or a raw direction orthogonal to
    ``x``. At ``t == 0`` the input point is returned unchanged.
    """
    x = np.asarray(x, dtype=float)
    direction = h.direction if isinstance(h, TangentVector) else np.asarray(h, dtype=float)
    if t == 0:
        return x
    y = x + t * direction
    return y / np.linalg.norm(y)


def retract_all(X, H, t):
    """Row-wise :func:`retract` of a whole configuration array."""
    X = np.asarray(X, dtype=float)
    if t == 0:
        return X
    Y = X + t * np.asarray(H, dtype=float)
    return Y / np.linalg.norm(Y, axis=1, keepdims=True)


def _rng(rng):
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def sample_uniform_sphere(d, rng=None, size=None):
    """Draw uniform points on S^d by normalizing standard Gaussian vectors.

    Returns one point of shape ``(d+1,)`` or, with ``size``, an array of
    shape ``(size, d+1)``.
    """
    if d < 1:
        raise ValueError("sphere dimension must be at least 1")
    rng = _rng(rng)
    m = 1 if size is None else int(size)
    G = rng.standard_normal((m, d + 1))
    norms = np.linalg.norm(G, axis=1)
    for k in np.flatnonzero(norms < RESAMPLE_TOL):
        while norms[k] < RESAMPLE_TOL:
            G[k] = rng.standard_normal(d + 1)
            norms[k] = np.linalg.norm(G[k])
    U = G / norms[:, None]
    return U[0] if size is None else U


def sample_equator_batch(x, rng=None, size=1):
    """Uniform draws from the unit sphere of the tangent space at ``x``.

    That sphere is ``{h in S^d : <x, h> = 0}``, a great (d-1)-sphere.
    Returns an array of shape ``(size, d+1)``.
    """
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        raise ValueError("equator undefined on S^0")
    rng = _rng(rng)
    G = rng.standard_normal((int(size), x.size))
    P = G - np.outer(G @ x, x)
    P -= np.outer(P @ x, x)
    norms = np.linalg.norm(P, axis=1)
    for k in np.flatnonzero(norms < RESAMPLE_TOL):
        while norms[k] < RESAMPLE_TOL:
            g = rng.standard_normal(x.size)
            g -= (x @ g) * x
            g -= (x @ g) * x
            P[k] = g
            norms[k] = np.linalg.norm(g)
    return P / norms[:, None]


def sample_equator(x, rng=None):
    """A single uniform unit tangent vector at ``x``."""
    x = np.asarray(x, dtype=float)
    return TangentVector(x, sample_equator_batch(x, rng, 1)[0])


def random_configuration(d, n, rng=None, min_distance=0.0, max_tries=10000,
                         collision_eps=COLLISION_EPS):
    """I.i.d. uniform points on S^d, optionally rejecting tight clusters.

    With ``min_distance > 0`` whole configurations are redrawn until every
    pairwise Euclidean distance is at least ``min_distance``.
    """
    rng = _rng(rng)
    for _ in range(max_tries):
        X = sample_uniform_sphere(d, rng, size=n)
        G = gram(X)
        off = G[~np.eye(n, dtype=bool)]
        if off.size and np.max(off) >= 1.0 - collision_eps:
            continue
        if min_distance > 0 and np.min(np.sqrt(np.maximum(2 - 2 * off, 0))) < min_distance:
            continue
        return Configuration(X, collision_eps)
    raise RuntimeError(f"no configuration with min distance {min_distance} after {max_tries} draws")


def tangent_basis(x, pivot_tol=1e-6):
    """Orthonormal basis of the tangent space at ``x``, shape ``(d, d+1)``.

    Gram-Schmidt over the projected standard basis vectors in index order.
    Candidates whose residual falls below ``pivot_tol`` are skipped. Each
    basis vector is signed so its first nonzero coordinate is positive.
    """
    x = np.asarray(x, dtype=float)
    m = x.size
    basis = []
    for k in range(m):
        if len(basis) == m - 1:
            break
        v = np.zeros(m)
        v[k] = 1.0
        for _ in range(2):
            v = v - (x @ v) * x
            for b in basis:
                v = v - (b @ v) * b
        nv = np.linalg.norm(v)
        if nv < pivot_tol:
            continue
        basis.append(v / nv)
    B = np.array(basis).reshape(len(basis), m)
    for row in B:
        nz = np.flatnonzero(np.abs(row) > 1e-12)
        if nz.size and row[nz[0]] < 0:
            row *= -1.0
    return B
