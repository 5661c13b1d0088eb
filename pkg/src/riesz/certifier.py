"""Checkable certificates that a configuration is not a local maximum.

For ``alpha >= d - 2`` a configuration is never a local maximum of the Riesz
energy. A certificate makes that concrete for one configuration: either the
Riemannian gradient is visibly nonzero, or a single point can be moved along
an explicit unit tangent ``h`` so that the energy curve has positive
curvature at ``t = 0``. Such an ``h`` exists because the average of the
single-point second variation over all unit tangents is a sum of strictly
positive terms (see :func:`eq4_terms`).

Below the threshold nothing is asserted; the certificate says so.
"""

import enum
import json
from dataclasses import dataclass, field

import numpy as np

from .energy import (
    FD_STEP_SECOND,
    Perturbation,
    averaged_second_variation,
    fd_second,
    kernel,
    riemannian_gradient,
    single_point_second_variation,
)
from .errors import CertificateMismatchError, NoPositiveDirectionError
from .manifold import TangentVector, _rng, sample_equator_batch

GRAD_TOL = 1e-8
POSITIVITY_REL_TOL = 1e-10
DEFAULT_MAX_TRIES = 64
# relative agreement required when a verifier recomputes a claimed value
VERIFY_RTOL = 1e-9


class CertificateKind(str, enum.Enum):
    GRADIENT_WITNESS = "GradientWitness"
    ASCENT_DIRECTION = "AscentDirection"
    CONDITION_NOT_MET = "ConditionNotMet"


def theorem_condition(alpha, d):
    """True iff ``alpha >= d - 2``, the regime where no local maxima exist.

    Equivalent to ``|r + 1 - d| <= r + 1`` with ``r = alpha / 2``.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if int(d) != d or d < 1:
        raise ValueError("d must be a positive integer")
    return alpha >= d - 2


def eq4_terms(config, params, i=0):
    """Per-neighbor averaged second variation at point ``i``, simplified form.

    Each value is ``r((r+1) + (r+1-d) t_j) / (d (1 - t_j)^(r+1))`` with
    ``t_j = <x_i, x_j>``. The numerator is linear in ``t_j``, equals ``d``
    at ``t_j = -1`` and ``2(r+1) - d >= 0`` at ``t_j = 1``, and the
    denominator is positive, so under the theorem condition every value is
    positive on ``[-1, 1)``.
    """
    if not theorem_condition(params.alpha, config.d):
        raise ValueError("theorem hypothesis violated: alpha < d - 2")
    return averaged_second_variation(config, params, i).eq4_terms


def positivity_tol(config, params, i=0):
    total = averaged_second_variation(config, params, i).eq4_total
    return POSITIVITY_REL_TOL * max(1.0, abs(total))


def top_eigen_direction(config, params, i):
    """Unit tangent at ``x_i`` maximizing the single-point second variation.

    Only the quadratic part ``sum_j g''(t_j) <x_j, h>^2`` depends on ``h``,
    so the maximizer is the top eigenvector of that form restricted to the
    tangent space. Its value is at least the average over all directions.
    """
    x = config.points[i]
    Xn = np.delete(config.points, i, axis=0)
    t = Xn @ x
    w = kernel(params, t, 2, config.collision_eps)
    P = np.eye(x.size) - np.outer(x, x)
    Y = Xn @ P
    Q = (Y.T * w) @ Y
    Q = 0.5 * (Q + Q.T)
    vals, vecs = np.linalg.eigh(Q)
    h = vecs[:, -1]
    h = h - (x @ h) * x
    h = h - (x @ h) * x
    h = h / np.linalg.norm(h)
    # deterministic sign: first nonzero coordinate positive
    nz = np.flatnonzero(np.abs(h) > 1e-12)
    if nz.size and h[nz[0]] < 0:
        h = -h
    return TangentVector(x, h)


def find_ascent_direction(config, params, i=0, rng=None, max_tries=DEFAULT_MAX_TRIES,
                          method="sample"):
    """Find a unit tangent at ``x_i`` with positive single-point second variation.

    With ``method="sample"`` up to ``max_tries // 2`` uniform directions are
    drawn first; after that (or immediately with ``method="eigen"``) the
    deterministic top-eigenvector direction is used.

    Returns
    -------
    direction : TangentVector
    value : float
        Half the second variation along ``direction`` (always above the
        positivity tolerance).

    Raises
    ------
    NoPositiveDirectionError
        If no candidate clears the tolerance. Mathematically impossible under
        the theorem condition, so this signals a numerical problem.
    """
    if not theorem_condition(params.alpha, config.d):
        raise ValueError("theorem hypothesis violated: alpha < d - 2")
    if method not in ("sample", "eigen"):
        raise ValueError(f"unknown method {method!r}")
    tol = positivity_tol(config, params, i)
    x = config.points[i]
    if method == "sample":
        rng = _rng(rng)
        for _ in range(max_tries // 2):
            h = sample_equator_batch(x, rng, 1)[0]
            value = single_point_second_variation(config, params, i, h)
            if value > tol:
                return TangentVector(x, h), value
    h = top_eigen_direction(config, params, i)
    value = single_point_second_variation(config, params, i, h)
    if value > tol:
        return h, value
    raise NoPositiveDirectionError(
        f"no positive direction found at point {i} (best value {value!r}, tolerance {tol!r})")


def _fmt(x):
    return None if x is None else format(float(x), ".17g")


def _parse(x):
    return None if x is None else float(x)


@dataclass(frozen=True)
class Certificate:
    """Outcome of :func:`certify_not_max`.

    ``second_variation_value`` is the full ``f''(0)`` of the scaled energy
    along the one-hot perturbation, i.e. twice the single-point value.
    ``point_index`` is zero-based.
    """

    kind: CertificateKind
    d: int
    n: int
    alpha: float
    point_index: int
    gradient_norm: float
    direction: np.ndarray = None
    second_variation_value: float = None
    eq4_terms: tuple = field(default_factory=tuple)
    fd_confirmation: float = None

    def to_dict(self):
        return {
            "kind": self.kind.value,
            "d": self.d,
            "n": self.n,
            "alpha": _fmt(self.alpha),
            "point_index": self.point_index,
            "gradient_norm": _fmt(self.gradient_norm),
            "direction": None if self.direction is None else [_fmt(v) for v in self.direction],
            "second_variation_value": _fmt(self.second_variation_value),
            "eq4_terms": [_fmt(v) for v in self.eq4_terms],
            "fd_confirmation": _fmt(self.fd_confirmation),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, obj):
        direction = obj.get("direction")
        return cls(
            kind=CertificateKind(obj["kind"]),
            d=int(obj["d"]),
            n=int(obj["n"]),
            alpha=float(obj["alpha"]),
            point_index=int(obj["point_index"]),
            gradient_norm=float(obj["gradient_norm"]),
            direction=None if direction is None else np.array([float(v) for v in direction]),
            second_variation_value=_parse(obj.get("second_variation_value")),
            eq4_terms=tuple(float(v) for v in obj.get("eq4_terms", [])),
            fd_confirmation=_parse(obj.get("fd_confirmation")),
        )

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _gradient_witness(config, params, grad):
    norms = np.linalg.norm(grad.vectors, axis=1)
    i = int(np.argmax(norms))
    return Certificate(
        kind=CertificateKind.GRADIENT_WITNESS,
        d=config.d, n=config.n, alpha=params.alpha,
        point_index=i,
        gradient_norm=grad.norm(),
        direction=grad.vectors[i] / norms[i],
    )


def _ascent_certificate(config, params, i, h, value, gnorm):
    pert = Perturbation.one_hot(config, i, h)
    fd = fd_second(config, params, pert, FD_STEP_SECOND)
    if not fd > 0:
        return None
    return Certificate(
        kind=CertificateKind.ASCENT_DIRECTION,
        d=config.d, n=config.n, alpha=params.alpha,
        point_index=i,
        gradient_norm=gnorm,
        direction=np.array(h.direction),
        second_variation_value=2.0 * value,
        eq4_terms=tuple(float(v) for v in eq4_terms(config, params, i)),
        fd_confirmation=fd,
    )


def certify_not_max(config, params, rng=None, grad_tol=GRAD_TOL, max_tries=DEFAULT_MAX_TRIES):
    """Produce a :class:`Certificate` that ``config`` is not a local maximum.

    A direction is reported only when the finite-difference second derivative
    along it is positive as well; otherwise the deterministic eigen-direction
    and then the point with the largest averaged term are tried.
    """
    rng = _rng(rng)
    grad = riemannian_gradient(config, params)
    gnorm = grad.norm()
    if not theorem_condition(params.alpha, config.d):
        return Certificate(
            kind=CertificateKind.CONDITION_NOT_MET,
            d=config.d, n=config.n, alpha=params.alpha,
            point_index=0, gradient_norm=gnorm,
        )
    if gnorm > grad_tol:
        return _gradient_witness(config, params, grad)

    totals = [averaged_second_variation(config, params, k).eq4_total for k in range(config.n)]
    candidates = [0]
    best = int(np.argmax(totals))
    if best != 0:
        candidates.append(best)
    for i in candidates:
        try:
            h, value = find_ascent_direction(config, params, i, rng, max_tries)
        except NoPositiveDirectionError:
            h = None
        if h is not None:
            cert = _ascent_certificate(config, params, i, h, value, gnorm)
            if cert is not None:
                return cert
        h = top_eigen_direction(config, params, i)
        value = single_point_second_variation(config, params, i, h)
        if value > positivity_tol(config, params, i):
            cert = _ascent_certificate(config, params, i, h, value, gnorm)
            if cert is not None:
                return cert
    raise NoPositiveDirectionError(
        "no positive direction found: analytic and finite-difference checks never agreed")


def _close(a, b, rtol=VERIFY_RTOL):
    return a is not None and b is not None and abs(a - b) <= rtol * max(abs(a), abs(b), 1e-300)


def verify_certificate(config, params, cert, grad_tol=GRAD_TOL):
    """Recompute everything a certificate claims and check its invariants.

    Raises
    ------
    CertificateMismatchError
        If the certificate was issued for a configuration of another shape
        or exponent.
    """
    if cert.d != config.d or cert.n != config.n or not 0 <= cert.point_index < config.n:
        raise CertificateMismatchError("certificate/config mismatch")
    if cert.direction is not None and len(cert.direction) != config.d + 1:
        raise CertificateMismatchError("certificate/config mismatch")
    if cert.alpha != params.alpha:
        raise CertificateMismatchError("certificate/config mismatch: different alpha")

    holds = theorem_condition(params.alpha, config.d)
    if cert.kind is CertificateKind.CONDITION_NOT_MET:
        return not holds
    if not holds:
        return False

    gnorm = riemannian_gradient(config, params).norm()
    if cert.kind is CertificateKind.GRADIENT_WITNESS:
        return gnorm > grad_tol and _close(cert.gradient_norm, gnorm)

    i = cert.point_index
    x = config.points[i]
    h = np.asarray(cert.direction, dtype=float)
    if abs(np.linalg.norm(h) - 1.0) > 1e-12 or abs(x @ h) > 1e-12:
        return False
    value = single_point_second_variation(config, params, i, h)
    if not value > positivity_tol(config, params, i):
        return False
    if not _close(cert.second_variation_value, 2.0 * value):
        return False
    terms = averaged_second_variation(config, params, i).eq4_terms
    if len(cert.eq4_terms) != len(terms) or not all(
            _close(a, b) and a > 0 for a, b in zip(cert.eq4_terms, terms)):
        return False
    fd = fd_second(config, params, Perturbation.one_hot(config, i, h), FD_STEP_SECOND)
    return fd > 0 and cert.fd_confirmation is not None and cert.fd_confirmation > 0 and _close(
        cert.fd_confirmation, fd, 1e-6)

