import math

import mpmath
import numpy as np
import pytest

from riesz.energy import (
    Perturbation,
    RieszParams,
    _second_variation_terms,
    averaged_second_variation,
    averaged_terms_expanded,
    averaged_terms_simplified,
    curve_energy,
    directional_derivative,
    energy,
    kernel,
    raw_second_variation,
    riemannian_gradient,
    second_variation,
    single_point_second_variation,
)
from riesz.errors import KernelSingularityError
from riesz.manifold import Configuration, random_configuration, sample_equator, sample_equator_batch
from oracles import (
    antipodal,
    brute_energy,
    central_first,
    central_second,
    mp_second_derivative,
    ngon,
    rotation,
    sweep_cases,
    unit_random_perturbation,
)


def antipodal_pert(config):
    return Perturbation(config, np.array([[0.0, 1.0], [0.0, 0.0]]))


def rel(a, b):
    return abs(a - b) / abs(b)


# ---------------------------------------------------------------- kernel

def test_kernel_examples():
    assert kernel(RieszParams(2.0), 0.0, 0) == 1.0
    assert kernel(RieszParams(2.0), 0.0, 2) == 2.0
    assert kernel(RieszParams(1.0), -1.0, 1) == pytest.approx(0.5 * 2 ** -1.5, rel=1e-15)


def test_kernel_derivative_matches_fd():
    p = RieszParams(1.0)
    step = 1e-6
    fd = (kernel(p, -1 + step) - kernel(p, -1 - step)) / (2 * step)
    assert rel(kernel(p, -1.0, 1), fd) < 1e-8
    fd2 = (kernel(p, 0.3 + 1e-4, 1) - kernel(p, 0.3 - 1e-4, 1)) / 2e-4
    assert rel(kernel(p, 0.3, 2), fd2) < 1e-7


def test_kernel_singularity():
    with pytest.raises(KernelSingularityError, match="kernel singularity"):
        kernel(RieszParams(1.0), 1.0)
    with pytest.raises(ValueError):
        kernel(RieszParams(1.0), 0.0, 3)


def test_params_validation():
    assert RieszParams(3.0).r == 1.5
    for bad in (0.0, -1.0, math.inf, math.nan):
        with pytest.raises(ValueError):
            RieszParams(bad)


# ---------------------------------------------------------------- energy

def test_energy_examples():
    assert energy(antipodal(), RieszParams(1.0)).raw == pytest.approx(1.0, abs=1e-15)
    assert energy(ngon(3), RieszParams(1.0)).raw == pytest.approx(2 * math.sqrt(3), abs=1e-12)
    assert energy(ngon(4), RieszParams(2.0)).raw == pytest.approx(5.0, abs=1e-12)


def test_energy_matches_brute_force():
    rng = np.random.default_rng(8)
    for d in (1, 2, 3):
        for n in (2, 5, 9):
            config = random_configuration(d, n, rng)
            for alpha in (0.5, 1.0, 3.0):
                got = energy(config, RieszParams(alpha)).raw
                assert rel(got, brute_energy(config.points.tolist(), alpha)) < 1e-12


def test_scaling_identity():
    rng = np.random.default_rng(9)
    for _ in range(50):
        d, n = rng.integers(1, 5), rng.integers(2, 10)
        p = RieszParams(rng.uniform(0.1, 6))
        ev = energy(random_configuration(d, n, rng), p)
        assert rel(ev.scaled, 2 ** p.r * ev.raw) < 1e-12


def test_energy_rotation_invariant():
    rng = np.random.default_rng(10)
    for d in (1, 2, 3):
        config = random_configuration(d, 7, rng)
        p = RieszParams(1.7)
        Q = rotation(d + 1, rng)
        assert rel(energy(config.rotated(Q), p).scaled, energy(config, p).scaled) < 1e-12


def test_energy_permutation_invariant_exactly():
    rng = np.random.default_rng(11)
    config = random_configuration(2, 9, rng)
    p = RieszParams(2.5)
    for _ in range(10):
        assert energy(config.permuted(rng.permutation(9)), p) == energy(config, p)


def test_energy_collision_names_pair():
    X = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 1.0]])
    with pytest.raises(KernelSingularityError, match="points 1 and 2"):
        energy(Configuration(X, collision_eps=0.0), RieszParams(1.0))


# ---------------------------------------------------------------- gradient

def test_gradient_vanishes_by_symmetry():
    for alpha in (0.5, 1.0, 2.0, 5.0):
        assert np.max(np.abs(riemannian_gradient(antipodal(), RieszParams(alpha)).vectors)) <= 1e-12
    assert np.max(np.abs(riemannian_gradient(ngon(3), RieszParams(1.0)).vectors)) <= 1e-10


def test_gradient_matches_fd():
    rng = np.random.default_rng(12)
    config = random_configuration(2, 5, rng)
    p = RieszParams(1.0)
    for _ in range(10):
        pert = Perturbation.random(config, rng)
        assert rel(directional_derivative(config, p, pert), central_first(config, p, pert)) < 1e-6


def test_gradient_is_tangent():
    rng = np.random.default_rng(13)
    config = random_configuration(3, 6, rng)
    g = riemannian_gradient(config, RieszParams(2.0)).vectors
    assert np.max(np.abs(np.einsum("ik,ik->i", g, config.points))) <= 1e-12


# ---------------------------------------------------------------- curve

def test_curve_at_zero_is_bitwise_energy():
    rng = np.random.default_rng(14)
    config = random_configuration(2, 6, rng)
    p = RieszParams(1.3)
    assert curve_energy(config, p, Perturbation.random(config, rng), 0.0) == energy(config, p)


def test_curve_hand_value():
    config = antipodal()
    p = RieszParams(2.0)
    pert = antipodal_pert(config)
    assert curve_energy(config, p, pert, 1.0).scaled == pytest.approx(2 / (1 + 1 / math.sqrt(2)), rel=1e-14)
    for t in np.linspace(-0.1, 0.1, 41):
        exact = 2 / (1 + 1 / math.sqrt(1 + t * t))
        f = curve_energy(config, p, pert, t).scaled
        assert abs(f - exact) <= 1e-14
        assert abs(f - curve_energy(config, p, pert, -t).scaled) <= 1e-12


def test_curve_collision_reports_t():
    config = Configuration(np.array([[1.0, 0.0], [0.0, 1.0]]))
    pert = Perturbation(config, np.array([[0.0, 1.0], [1.0, 0.0]]))
    with pytest.raises(KernelSingularityError, match="t=1"):
        curve_energy(config, RieszParams(1.0), pert, 1.0)


# ---------------------------------------------------------------- full second variation

def test_second_variation_zero_perturbation():
    config = random_configuration(3, 6, np.random.default_rng(15))
    assert second_variation(config, RieszParams(1.0), Perturbation.zeros(config)) == 0.0


def test_second_variation_antipodal_hand_value():
    config = antipodal()
    p = RieszParams(2.0)
    s = second_variation(config, p, antipodal_pert(config))
    assert rel(s, 0.5) < 1e-12
    assert rel(raw_second_variation(config, p, antipodal_pert(config)), 0.25) < 1e-12


def test_second_variation_fd_example():
    rng = np.random.default_rng(16)
    config = random_configuration(2, 6, rng, min_distance=0.3)
    p = RieszParams(1.0)
    pert = unit_random_perturbation(config, rng)
    assert rel(second_variation(config, p, pert), central_second(config, p, pert)) < 1e-5


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_second_variation_high_precision_oracle(seed):
    # no truncation, no cancellation: the residual is the rounding of the
    # double-precision summands themselves
    for config, p, pert in sweep_cases(seed=seed, reps=1, ns=(2, 4, 7)):
        s = second_variation(config, p, pert)
        scale = math.fsum(np.abs(_second_variation_terms(config.points, pert.vectors, p, 1e-9)))
        exact = mp_second_derivative(config.points, pert.vectors, p.r)
        assert abs(s - exact) <= 1e-10 * scale


def test_second_variation_is_quadratic():
    rng = np.random.default_rng(17)
    config = random_configuration(2, 5, rng)
    p = RieszParams(1.5)
    pert = Perturbation.random(config, rng)
    s = second_variation(config, p, pert)
    assert rel(second_variation(config, p, Perturbation(config, -3 * pert.vectors)), 9 * s) < 1e-12


# ---------------------------------------------------------------- single point

def test_single_point_antipodal():
    assert rel(single_point_second_variation(antipodal(), RieszParams(2.0), 0, [0.0, 1.0]), 0.25) < 1e-12


def test_single_point_is_half_of_one_hot():
    rng = np.random.default_rng(18)
    for d in (1, 2, 3):
        config = random_configuration(d, 6, rng)
        p = RieszParams(rng.uniform(0.3, 5))
        for i in range(config.n):
            h = sample_equator(config.points[i], rng)
            full = second_variation(config, p, Perturbation.one_hot(config, i, h))
            assert rel(single_point_second_variation(config, p, i, h), full / 2) < 1e-12


def test_single_point_fd_example():
    rng = np.random.default_rng(19)
    config = random_configuration(3, 5, rng, min_distance=0.3)
    p = RieszParams(2.5)
    h = sample_equator(config.points[0], rng)
    fd = central_second(config, p, Perturbation.one_hot(config, 0, h)) / 2
    assert rel(single_point_second_variation(config, p, 0, h), fd) < 1e-5


def test_single_point_requires_unit_tangent():
    config = antipodal()
    with pytest.raises(ValueError, match="unit tangent required"):
        single_point_second_variation(config, RieszParams(1.0), 0, [0.0, 2.0])
    with pytest.raises(ValueError, match="unit tangent required"):
        single_point_second_variation(config, RieszParams(1.0), 0, [0.6, 0.8])


def test_single_point_batch_matches_scalar():
    rng = np.random.default_rng(20)
    config = random_configuration(2, 5, rng)
    p = RieszParams(1.0)
    H = sample_equator_batch(config.points[2], rng, 7)
    batch = single_point_second_variation(config, p, 2, H)
    assert batch.shape == (7,)
    single = [single_point_second_variation(config, p, 2, h) for h in H]
    np.testing.assert_allclose(batch, single, rtol=1e-13)


# ---------------------------------------------------------------- averaged forms

def mc_average(config, p, i, rng, size=100_000):
    vals = single_point_second_variation(config, p, i, sample_equator_batch(config.points[i], rng, size))
    return vals.mean(), vals.std(ddof=1) / math.sqrt(size)


def test_averaged_neighbor_at_right_angle():
    config = Configuration(np.array([[1.0, 0, 0], [0, 1.0, 0]]))
    p = RieszParams(2.0)
    avg = averaged_second_variation(config, p, 0)
    np.testing.assert_allclose(avg.eq4_terms, [1.0], rtol=1e-15)
    mean, _ = mc_average(config, p, 0, np.random.default_rng(21))
    assert abs(mean - 1.0) < 0.01


def test_averaged_antipodal_neighbor():
    # every direction gives g'(-1) = 2^-2, so the average is 1/4
    config = Configuration(np.array([[1.0, 0, 0], [-1.0, 0, 0]]))
    p = RieszParams(2.0)
    avg = averaged_second_variation(config, p, 0)
    np.testing.assert_allclose(avg.eq4_terms, [0.25], rtol=1e-15)
    mean, _ = mc_average(config, p, 0, np.random.default_rng(22))
    assert abs(mean - 0.25) < 0.01


def test_averaged_forms_agree():
    rng = np.random.default_rng(23)
    for d in (1, 2, 3, 4):
        for _ in range(10):
            config = random_configuration(d, 8, rng)
            avg = averaged_second_variation(config, RieszParams(rng.uniform(0.2, 8)), 3)
            np.testing.assert_allclose(avg.expanded_terms, avg.eq4_terms, rtol=1e-12)
            assert avg.index == 3 and len(avg.neighbors) == 7


def test_averaged_closed_forms_on_grid():
    t = np.linspace(-1, 0.9, 200)
    for d in (1, 2, 5):
        for r in (0.25, 1.0, 2.5):
            np.testing.assert_allclose(averaged_terms_expanded(r, d, t), averaged_terms_simplified(r, d, t), rtol=1e-12)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_averaging_identity(d):
    rng = np.random.default_rng(100 + d)
    for _ in range(3):
        x1, xj = random_configuration(d, 2, rng).points
        H = sample_equator_batch(x1, rng, 100_000)
        s = (H @ xj) ** 2
        se = s.std(ddof=1) / math.sqrt(s.size)
        assert abs(s.mean() - (1 - (x1 @ xj) ** 2) / d) <= 4 * se


def test_monte_carlo_mean_matches_expanded_total():
    rng = np.random.default_rng(24)
    config = random_configuration(3, 5, rng, min_distance=0.3)
    p = RieszParams(2.5)
    mean, se = mc_average(config, p, 1, rng)
    assert abs(mean - averaged_second_variation(config, p, 1).expanded_total) <= 4 * se


@pytest.mark.parametrize("d", [3, 4, 6])
@pytest.mark.parametrize("t", [-1.0, 0.5, 1 - 1e-6])
def test_simplified_form_accurate_where_expanded_cancels(d, t):
    # at alpha = d - 2 and t -> 1 the two summands of the unsimplified form
    # nearly cancel; the simplified form keeps full precision

    r = (d - 2) / 2
    with mpmath.workdps(50):
        tt, rr = mpmath.mpf(t), mpmath.mpf(r)
        g1 = rr * (1 - tt) ** (-rr - 1)
        g2 = rr * (rr + 1) * (1 - tt) ** (-rr - 2)
        exact = float(g2 * (1 - tt * tt) / d - g1 * tt)
    assert rel(float(averaged_terms_simplified(r, d, t)), exact) < 1e-13
