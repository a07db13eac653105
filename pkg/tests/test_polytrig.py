"""Exact polynomial-trig algebra against pointwise numeric oracles."""
import json
import math
from fractions import Fraction

import numpy as np
import pytest

from se2langevin.polytrig import COS, SIN, PolyTrig

POINTS = [(0.3, -1.2, 0.7), (2.0, 0.5, 3.9), (-1.1, -0.4, 5.5), (0.0, 0.0, 0.0)]


def generic():
    return (
        PolyTrig.monomial(Fraction(3, 2), a=2, b=1, k=2, phase=SIN)
        + PolyTrig.monomial(-2, a=0, b=3, k=1, phase=COS)
        + PolyTrig.monomial(Fraction(1, 3), a=1)
        + PolyTrig.constant(5)
    )


def numeric(f):
    return lambda x, y, t: f.evaluate(x, y, t)


def test_constant_and_zero():
    assert PolyTrig.zero().is_zero()
    assert PolyTrig.constant(7).evaluate(1.0, 2.0, 3.0) == 7.0
    assert PolyTrig.monomial(0, a=2).is_zero()


def test_terms_cancel_exactly():
    f = PolyTrig.monomial(Fraction(1, 3), a=1) - PolyTrig.monomial(Fraction(1, 3), a=1)
    assert f.is_zero()


def test_sin_zero_mode_rejected():
    with pytest.raises(ValueError):
        PolyTrig.monomial(1, k=0, phase=SIN)


def test_negative_exponent_rejected():
    with pytest.raises(ValueError):
        PolyTrig({(-1, 0, 0, COS): 1})


def test_evaluate_matches_hand_formula():
    f = generic()
    for x, y, t in POINTS:
        expected = (
            1.5 * x * x * y * math.sin(2 * t)
            - 2.0 * y**3 * math.cos(t)
            + x / 3.0
            + 5.0
        )
        assert abs(f.evaluate(x, y, t) - expected) < 1e-12


@pytest.mark.parametrize("method,column", [("dx1", 0), ("dx2", 1), ("dtheta", 2)])
def test_derivatives_against_finite_differences(method, column):
    f = generic()
    df = getattr(f, method)()
    h = 1e-6
    for x, y, t in POINTS:
        shift = [x, y, t]
        shift[column] += h
        plus = f.evaluate(*shift)
        shift[column] -= 2 * h
        minus = f.evaluate(*shift)
        numeric_df = (plus - minus) / (2 * h)
        assert abs(df.evaluate(x, y, t) - numeric_df) < 1e-5


def test_multiplications_pointwise():
    f = generic()
    for x, y, t in POINTS:
        base = f.evaluate(x, y, t)
        assert abs(f.mul_x1().evaluate(x, y, t) - x * base) < 1e-10
        assert abs(f.mul_x2().evaluate(x, y, t) - y * base) < 1e-10
        assert abs(f.mul_cos().evaluate(x, y, t) - math.cos(t) * base) < 1e-10
        assert abs(f.mul_sin().evaluate(x, y, t) - math.sin(t) * base) < 1e-10


def test_product_to_sum_stays_canonical():
    # cos * cos raises and lowers the mode with half weights
    f = PolyTrig.monomial(1, k=1, phase=COS).mul_cos()
    assert f.terms == {
        (0, 0, 0, COS): Fraction(1, 2),
        (0, 0, 2, COS): Fraction(1, 2),
    }
    g = PolyTrig.monomial(1, k=1, phase=SIN).mul_cos()
    assert g.terms == {(0, 0, 2, SIN): Fraction(1, 2)}


def test_theta_average_keeps_zero_mode():
    f = generic()
    avg = f.theta_average()
    assert avg.max_mode() == 0
    # the average of the k=0 content is itself
    assert avg.theta_average() == avg


def test_degree_and_mode_inspection():
    f = generic()
    assert f.poly_degree() == 3
    assert f.max_mode() == 2


def test_scalar_multiplication_exact():
    f = generic()
    g = f * Fraction(2, 3)
    for (key, coeff) in f.terms.items():
        assert g.terms[key] == coeff * Fraction(2, 3)


def test_derivative_structure_exact():
    # d/dx1 of x1^3 is exactly 3 x1^2
    f = PolyTrig.monomial(1, a=3)
    assert f.dx1() == PolyTrig.monomial(3, a=2)
    # d/dtheta swaps phase and scales by the mode
    g = PolyTrig.monomial(1, k=4, phase=COS)
    assert g.dtheta() == PolyTrig.monomial(-4, k=4, phase=SIN)


def test_serialization_round_trip():
    f = generic()
    records = f.to_records()
    text = json.dumps(records)  # records must be JSON-compatible
    back = PolyTrig.from_records(json.loads(text))
    assert back == f


def test_serialization_golden():
    f = PolyTrig.monomial(Fraction(1, 2), a=1, k=1, phase=SIN) + PolyTrig.constant(-3)
    assert f.to_records() == [
        {"a": 0, "b": 0, "k": 0, "phase": COS, "coeff": "-3"},
        {"a": 1, "b": 0, "k": 1, "phase": SIN, "coeff": "1/2"},
    ]


def test_l1_norm_exact():
    f = PolyTrig.monomial(Fraction(1, 2), a=1) + PolyTrig.monomial(Fraction(-1, 3), b=1)
    assert f.l1_norm() == Fraction(5, 6)


def test_equality_is_canonical():
    f = PolyTrig.monomial(1, k=1, phase=COS).mul_cos() * 2
    g = PolyTrig.constant(1) + PolyTrig.monomial(1, k=2, phase=COS)
    assert f == g and hash(f) == hash(g)
