"""Exact operator algebra: structural identities in rational arithmetic."""
from fractions import Fraction

import numpy as np
import pytest

from se2langevin.errors import ConfigurationError, UnsupportedPotentialError
from se2langevin.operators import (
    OperatorParams,
    angle_average,
    apply_angular_diffusion,
    apply_generator,
    apply_macroscopic_generator,
    apply_transport,
    centered_angle_average,
    gibbs_mean,
    inner_product,
    invariance_residual,
    macroscopic_identity_residual,
    random_test_function,
    sandwiched_transport_residual,
    second_transport_residual,
    transport_of_average_residual,
)
from se2langevin.polytrig import COS, SIN, PolyTrig
from se2langevin.potentials import DoubleWell, Quadratic

SIGMAS = [0.5, 1.0, 2.0]


def params(sigma=1.0, a1=1, a2=1):
    return OperatorParams(sigma=sigma, potential=Quadratic(a1=a1, a2=a2))


def x1():
    return PolyTrig.monomial(1, a=1)


def test_sigma_must_be_positive():
    with pytest.raises(ConfigurationError):
        OperatorParams(sigma=0.0, potential=Quadratic(a1=1, a2=1))
    with pytest.raises(ConfigurationError):
        OperatorParams(sigma=-1.0, potential=Quadratic(a1=1, a2=1))


def test_non_quadratic_potential_rejected():
    p = OperatorParams(sigma=1.0, potential=DoubleWell(height=4.0))
    with pytest.raises(UnsupportedPotentialError):
        apply_transport(x1(), p)
    with pytest.raises(UnsupportedPotentialError):
        gibbs_mean(x1(), p)


def test_angular_diffusion_on_pure_mode():
    # second angle derivative brings down -k^2, times sigma^2/2
    p = params(sigma=2.0)
    f = PolyTrig.monomial(1, k=3, phase=COS)
    expected = PolyTrig.monomial(-18, k=3, phase=COS)
    assert apply_angular_diffusion(f, p) == expected


def test_transport_on_angle_independent_function():
    # no angle dependence, so only the heading derivative survives
    p = params()
    out = apply_transport(x1(), p)
    assert out == PolyTrig.monomial(1, k=1, phase=COS)


def test_generator_is_diffusion_minus_transport():
    p = params(sigma=0.5)
    rng = np.random.default_rng(11)
    for _ in range(20):
        f = random_test_function(rng)
        lhs = apply_generator(f, p)
        rhs = apply_angular_diffusion(f, p) - apply_transport(f, p)
        assert (lhs - rhs).is_zero()


def test_gibbs_mean_known_moments():
    p = params(a1=1, a2=1)
    assert gibbs_mean(PolyTrig.constant(1), p) == 1
    assert gibbs_mean(x1(), p) == 0
    assert gibbs_mean(PolyTrig.monomial(1, a=2), p) == 1
    assert gibbs_mean(PolyTrig.monomial(1, a=4), p) == 3
    assert gibbs_mean(PolyTrig.monomial(1, a=2, k=1, phase=COS), p) == 0
    # anisotropic curvature scales the variance per coordinate
    assert gibbs_mean(PolyTrig.monomial(1, b=2), params(a2=4)) == Fraction(1, 4)


def test_inner_product_orthogonality():
    p = params()
    c = PolyTrig.monomial(1, k=1, phase=COS)
    s = PolyTrig.monomial(1, k=1, phase=SIN)
    assert inner_product(c, c, p) == Fraction(1, 2)
    assert inner_product(c, s, p) == 0
    assert inner_product(c, PolyTrig.monomial(1, k=2, phase=COS), p) == 0
    assert inner_product(PolyTrig.constant(3), PolyTrig.constant(2), p) == 6
    assert inner_product(x1().mul_cos(), x1().mul_cos(), p) == Fraction(1, 2)


def test_inner_product_positive_and_symmetric():
    p = params(sigma=1.0, a1=2, a2=3)
    rng = np.random.default_rng(5)
    for _ in range(30):
        f = random_test_function(rng)
        h = random_test_function(rng)
        assert inner_product(f, h, p) == inner_product(h, f, p)
        assert inner_product(f, f, p) > 0


@pytest.mark.parametrize("sigma", SIGMAS)
def test_transport_antisymmetric(sigma):
    p = params(sigma=sigma)
    rng = np.random.default_rng(17)
    for _ in range(100):
        f = random_test_function(rng)
        h = random_test_function(rng)
        lhs = inner_product(apply_transport(f, p), h, p)
        rhs = inner_product(f, apply_transport(h, p), p)
        assert lhs + rhs == 0


@pytest.mark.parametrize("sigma", SIGMAS)
def test_angular_diffusion_nonpositive(sigma):
    p = params(sigma=sigma)
    rng = np.random.default_rng(23)
    for _ in range(50):
        f = random_test_function(rng)
        q = inner_product(apply_angular_diffusion(f, p), f, p)
        assert q <= 0
        if f.max_mode() == 0:
            assert q == 0
    # equality only when every term is angle independent
    mixed = x1() + PolyTrig.monomial(1, k=1, phase=COS)
    assert inner_product(apply_angular_diffusion(mixed, p), mixed, p) < 0


def test_angle_average_projects():
    p = params()
    rng = np.random.default_rng(31)
    for _ in range(30):
        f = random_test_function(rng)
        avg = angle_average(f)
        assert avg.max_mode() == 0
        assert angle_average(avg) == avg
        cen = centered_angle_average(f, p)
        assert centered_angle_average(cen, p) == cen
        assert gibbs_mean(cen, p) == 0
    assert centered_angle_average(PolyTrig.constant(9), p).is_zero()


def test_angle_average_self_adjoint():
    p = params(a1=2, a2=1)
    rng = np.random.default_rng(37)
    for _ in range(50):
        f = random_test_function(rng)
        h = random_test_function(rng)
        assert inner_product(angle_average(f), h, p) == inner_product(f, angle_average(h), p)


@pytest.mark.parametrize("sigma", SIGMAS)
def test_structural_residuals_vanish(sigma):
    p = params(sigma=sigma)
    rng = np.random.default_rng(41)
    for _ in range(40):
        f = random_test_function(rng)
        g = angle_average(f)
        assert transport_of_average_residual(g, p) == 0
        assert sandwiched_transport_residual(f, p) == 0
        assert second_transport_residual(g, p) == 0
        assert macroscopic_identity_residual(g, p) == 0
        assert invariance_residual(f, p) == 0.0


def test_residuals_reject_angle_dependent_input():
    p = params()
    f = PolyTrig.monomial(1, k=1, phase=COS)
    for residual in (
        transport_of_average_residual,
        second_transport_residual,
        macroscopic_identity_residual,
    ):
        with pytest.raises(ConfigurationError):
            residual(f, p)
    with pytest.raises(ConfigurationError):
        apply_macroscopic_generator(f, p)


def test_invariance_examples():
    # hand-picked functions of increasing structure, all exactly invariant
    p = params()
    assert invariance_residual(PolyTrig.constant(4), p) == 0.0
    assert invariance_residual(x1().mul_cos(), p) == 0.0
    assert invariance_residual(PolyTrig.monomial(1, a=2, k=3, phase=SIN), p) == 0.0


def test_macroscopic_generator_on_coordinates():
    # half laplacian minus half gradient coupling: linear in each coordinate
    p = params(a1=1, a2=4)
    assert apply_macroscopic_generator(x1(), p) == x1() * Fraction(-1, 2)
    g2 = PolyTrig.monomial(1, b=1)
    assert apply_macroscopic_generator(g2, p) == g2 * (-2)


def test_random_test_function_reproducible():
    a = random_test_function(np.random.default_rng(7))
    b = random_test_function(np.random.default_rng(7))
    assert a == b
    assert not a.is_zero()
