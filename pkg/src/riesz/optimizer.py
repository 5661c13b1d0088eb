"""Riemannian descent for the Riesz energy and second-order classification.

The Hessian here is the quadratic form ``h -> f''(0)`` of the energy along
normalization-retraction curves, written as a symmetric matrix in an
orthonormal tangent basis. For the sphere this retraction is second order,
so the matrix coincides with the Riemannian Hessian.
"""

import enum
from dataclasses import dataclass, field

import numpy as np

from .energy import (
    Perturbation,
    _inner_products,
    _pair_mask,
    energy,
    riemannian_gradient,
)
from .errors import NotCriticalError
from .manifold import Configuration, retract_all
from .manifold import tangent_basis as point_tangent_basis

STEP_FLOOR = 1e-16
MAX_MOVE = 0.5
# energy may rise by this relative amount per Newton step (rounding level)
POLISH_ENERGY_SLACK = 1e-13


@dataclass(frozen=True)
class OptimizerSettings:
    """Knobs for :func:`minimize`.

    After the Armijo phase stalls, or once the gradient norm drops below
    ``polish_below``, up to ``polish_iters`` Newton steps drive the gradient
    to ``grad_stop``; plain descent cannot get there because energy
    differences vanish below double-precision resolution first.
    """

    max_iters: int = 5000
    step_init: float = 1e-2
    armijo_c: float = 1e-4
    armijo_shrink: float = 0.5
    grad_stop: float = 1e-9
    seed: int = 0
    polish_below: float = 1e-5
    polish_iters: int = 50

    def __post_init__(self):
        if self.max_iters < 0 or self.polish_iters < 0:
            raise ValueError("iteration counts must be nonnegative")
        if not (self.step_init > 0 and self.grad_stop > 0 and self.polish_below > 0):
            raise ValueError("step_init, grad_stop and polish_below must be positive")
        if not (0 < self.armijo_c < 1 and 0 < self.armijo_shrink < 1):
            raise ValueError("Armijo parameters must lie in (0, 1)")


@dataclass(frozen=True)
class OptimizeResult:
    config: Configuration
    gradient_norm: float
    energy: float
    n_iter: int
    n_polish: int
    converged: bool
    step_collapsed: bool
    # (phase, energy before, energy after) for every accepted step
    history: tuple = field(default=(), repr=False)


class Classification(str, enum.Enum):
    MINIMUM = "Minimum"
    SADDLE = "Saddle"
    MAXIMUM = "Maximum"
    DEGENERATE = "Degenerate"


@dataclass(frozen=True)
class CriticalPointReport:
    config: Configuration
    gradient_norm: float
    hessian_eigenvalues: np.ndarray
    zero_tol: float
    num_zero: int
    num_positive: int
    num_negative: int
    classification: Classification

    def to_dict(self):
        return {
            "n": self.config.n,
            "d": self.config.d,
            "gradient_norm": repr(float(self.gradient_norm)),
            "zero_tol": repr(float(self.zero_tol)),
            "num_zero": self.num_zero,
            "num_positive": self.num_positive,
            "num_negative": self.num_negative,
            "classification": self.classification.value,
            "hessian_eigenvalues": [repr(float(v)) for v in self.hessian_eigenvalues],
        }


def tangent_basis(config):
    """Stacked orthonormal tangent bases, shape ``(N, d, d+1)``."""
    return np.stack([point_tangent_basis(x) for x in config.points])


def ambient_hessian(config, params):
    """Matrix of ``h -> f''(0)`` on the ambient space, shape ``(N(d+1), N(d+1))``.

    Block ``(i, i)`` is ``2 sum_j (g''_ij x_j x_j^T - g'_ij t_ij I)`` and block
    ``(i, j)`` is ``2 (g''_ij x_j x_i^T + g'_ij I)``. Restricted to tangent
    vectors it reproduces :func:`riesz.energy.second_variation`.
    """
    X = config.points
    n, m = X.shape
    G = _inner_products(X, config.collision_eps)
    mask = _pair_mask(n)
    r = params.r
    g1 = np.zeros_like(G)
    g2 = np.zeros_like(G)
    g1[mask] = r * (1.0 - G[mask]) ** (-r - 1.0)
    g2[mask] = r * (r + 1.0) * (1.0 - G[mask]) ** (-r - 2.0)
    eye = np.eye(m)
    # off-diagonal blocks: 2 (g2_ij x_j x_i^T + g1_ij I)
    M = 2.0 * (g2[:, :, None, None] * np.einsum("ja,ib->ijab", X, X)
               + g1[:, :, None, None] * eye)
    for i in range(n):
        w = g2[i]
        M[i, i] = 2.0 * ((X.T * w) @ X - np.sum(g1[i] * G[i]) * eye)
    M = M.transpose(0, 2, 1, 3).reshape(n * m, n * m)
    return 0.5 * (M + M.T)


def hessian(config, params, basis=None):
    """Symmetric ``(N d) x (N d)`` Hessian in the tangent basis.

    Entry ``(a, b)`` is the polarization of the second variation on the basis
    perturbations ``e_a`` and ``e_b``.
    """
    if basis is None:
        basis = tangent_basis(config)
    n, d, m = basis.shape
    B = np.zeros((n * d, n * m))
    for i in range(n):
        B[i * d:(i + 1) * d, i * m:(i + 1) * m] = basis[i]
    H = B @ ambient_hessian(config, params) @ B.T
    return 0.5 * (H + H.T)


def basis_perturbation(config, a, basis=None):
    """The perturbation for tangent-basis index ``a`` (point ``a // d``)."""
    if basis is None:
        basis = tangent_basis(config)
    d = basis.shape[1]
    return Perturbation.one_hot(config, a // d, basis[a // d, a % d])


def _tangent_coords(vectors, basis):
    return np.einsum("ikm,im->ik", basis, vectors).reshape(-1)


def _ambient(coords, basis):
    n, d, _ = basis.shape
    return np.einsum("ik,ikm->im", coords.reshape(n, d), basis)


def _newton_step(config, params, grad):
    basis = tangent_basis(config)
    H = hessian(config, params, basis)
    g = _tangent_coords(grad, basis)
    vals, vecs = np.linalg.eigh(H)
    tol = 1e-10 * max(1.0, np.max(np.abs(vals)))
    keep = np.abs(vals) > tol
    coeff = (vecs[:, keep].T @ g) / vals[keep]
    return _ambient(-(vecs[:, keep] @ coeff), basis)


def _armijo_phase(config, params, s, state, max_steps):
    """Run at most ``max_steps`` Armijo descent steps; mutates ``state``."""
    X, E, grad, gnorm = state["X"], state["E"], state["grad"], state["gnorm"]
    config = state["config"]
    step = state["step"]
    prev = state.get("prev")
    taken = 0
    collapsed = False
    while taken < max_steps and gnorm > s.grad_stop and gnorm > state["polish_below"]:
        if prev is not None:
            dx = X - prev[0]
            dg = grad - prev[1]
            denom = float(np.sum(dx * dg))
            if denom > 0:
                step = float(np.sum(dx * dx) / denom)
            else:
                step = 2.0 * step
        # displacement per step is capped; near-collisions produce huge gradients
        step = min(step, MAX_MOVE / gnorm)
        g2 = gnorm * gnorm
        while True:
            try:
                trial = Configuration(retract_all(X, -grad, step), config.collision_eps)
                E_new = energy(trial, params).scaled
            except ValueError:
                E_new = np.inf
            if E_new <= E - s.armijo_c * step * g2:
                break
            step *= s.armijo_shrink
            if step * gnorm < STEP_FLOOR:
                collapsed = True
                break
        if collapsed:
            break
        prev = (X, grad)
        state["history"].append(("armijo", state["E"], E_new))
        config, X, E = trial, trial.points, E_new
        state["E"] = E
        grad = riemannian_gradient(config, params).vectors
        gnorm = float(np.linalg.norm(grad))
        taken += 1
    state.update(config=config, X=X, E=E, grad=grad, gnorm=gnorm, step=step, prev=prev)
    return taken, collapsed


def _polish_phase(params, s, state):
    """Newton steps guarded by energy; the lowest-gradient iterate is kept.

    The gradient norm is not monotone along Newton iterates near degenerate
    minima (soft quartic modes), so steps are accepted on energy and the best
    iterate seen is returned.
    """
    config, X, E, grad, gnorm = (state[k] for k in ("config", "X", "E", "grad", "gnorm"))
    best = (gnorm, config, E, grad)
    taken = 0
    for _ in range(s.polish_iters):
        if gnorm <= s.grad_stop:
            break
        try:
            full = _newton_step(config, params, grad)
        except np.linalg.LinAlgError:
            break
        slack = POLISH_ENERGY_SLACK * max(1.0, abs(E))
        accepted = False
        lam = 1.0
        for _ in range(12):
            try:
                trial = Configuration(retract_all(X, lam * full, 1.0), config.collision_eps)
                E_new = energy(trial, params).scaled
            except ValueError:
                E_new = np.inf
            if E_new <= E + slack:
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            break
        state["history"].append(("newton", E, E_new))
        config, X, E = trial, trial.points, E_new
        grad = riemannian_gradient(config, params).vectors
        gnorm = float(np.linalg.norm(grad))
        taken += 1
        if gnorm < best[0]:
            best = (gnorm, config, E, grad)
    gnorm, config, E, grad = best
    state.update(config=config, X=config.points, E=E, grad=grad, gnorm=gnorm)
    return taken


def minimize(config0, params, settings=None):
    """Projected-gradient descent with Armijo backtracking on the sphere.

    The trial step is the Barzilai-Borwein step from the previous iterate
    (``settings.step_init`` on the first iteration), capped so that no step
    moves the configuration by more than ``MAX_MOVE``, and is shrunk until
    the Armijo condition holds; accepted descent steps never raise the
    energy. Newton polishing then finishes the job (see
    :class:`OptimizerSettings`); its steps may not raise the energy beyond
    rounding. If polishing stalls, descent resumes with the polishing
    threshold lowered.
    """
    s = settings or OptimizerSettings()
    grad = riemannian_gradient(config0, params).vectors
    E = energy(config0, params).scaled
    state = dict(config=config0, X=config0.points, E=E, grad=grad,
                 gnorm=float(np.linalg.norm(grad)), step=s.step_init, prev=None,
                 history=[], polish_below=s.polish_below)
    n_iter = 0
    n_polish = 0
    collapsed = False
    while state["gnorm"] > s.grad_stop:
        taken, collapsed = _armijo_phase(state["config"], params, s, state, s.max_iters - n_iter)
        n_iter += taken
        if state["gnorm"] <= s.grad_stop:
            break
        if not (collapsed or state["gnorm"] <= state["polish_below"]):
            break  # iteration budget exhausted
        polished = _polish_phase(params, s, state)
        n_polish += polished
        if state["gnorm"] <= s.grad_stop or collapsed or n_iter >= s.max_iters:
            break
        state["polish_below"] = min(state["polish_below"], state["gnorm"]) / 10.0

    converged = state["gnorm"] <= s.grad_stop
    return OptimizeResult(
        config=state["config"],
        gradient_norm=state["gnorm"],
        energy=state["E"],
        n_iter=n_iter,
        n_polish=n_polish,
        converged=converged,
        step_collapsed=collapsed and not converged,
        history=tuple(state["history"]),
    )


def classify(config, params, grad_stop=None, zero_rel_tol=1e-6):
    """Eigen-analysis of the Hessian at a critical point.

    Eigenvalues with ``|lambda| <= zero_rel_tol * max(1, spectral radius)``
    count as zero modes. Rotations of the whole configuration always
    produce some.

    Raises
    ------
    NotCriticalError
        If the gradient norm exceeds ``grad_stop``.
    """
    if grad_stop is None:
        grad_stop = OptimizerSettings().grad_stop
    gnorm = riemannian_gradient(config, params).norm()
    if gnorm > grad_stop:
        raise NotCriticalError(f"not a critical point (gradient norm {gnorm:.3e} > {grad_stop:.3e})")
    vals = np.linalg.eigvalsh(hessian(config, params))
    zero_tol = zero_rel_tol * max(1.0, float(np.max(np.abs(vals))))
    num_zero = int(np.sum(np.abs(vals) <= zero_tol))
    num_pos = int(np.sum(vals > zero_tol))
    num_neg = int(np.sum(vals < -zero_tol))
    if num_pos == 0 and num_neg == 0:
        kind = Classification.DEGENERATE
    elif num_pos == 0:
        kind = Classification.MAXIMUM
    elif num_neg == 0:
        kind = Classification.MINIMUM
    else:
        kind = Classification.SADDLE
    return CriticalPointReport(
        config=config,
        gradient_norm=gnorm,
        hessian_eigenvalues=np.sort(vals),
        zero_tol=zero_tol,
        num_zero=num_zero,
        num_positive=num_pos,
        num_negative=num_neg,
        classification=kind,
    )
