"""Kinetic operators acting exactly on polynomial-trig functions.

The model is the degenerate diffusion on the planar motion group whose
generator splits into an angular diffusion (the symmetric part) minus a
transport part coupling heading to position through the potential gradient.
For quadratic potentials every operator here maps the polynomial-trig class
into itself, so the structural identities (vanishing sandwiched transport,
the closed form of the squared transport on angle averages, and the averaged
macroscopic generator) can be checked in exact rational arithmetic.

Inner products are taken in the Gibbs-weighted space: uniform angle average
tensor the Gaussian measure exp(-Phi)/Z.  They are evaluated from closed-form
Gaussian moments and trig orthogonality, never from quadrature.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import ConfigurationError, UnsupportedPotentialError
from .geometry import FieldId, apply_field
from .polytrig import COS, SIN, PolyTrig
from .potentials import Potential, Quadratic


@dataclass(frozen=True)
class OperatorParams:
    """Angular noise strength and confining potential."""

    sigma: float
    potential: Potential

    def __post_init__(self):
        if not self.sigma > 0:
            raise ConfigurationError(f"sigma must be positive, got {self.sigma}")

    def sigma_sq(self) -> Fraction:
        return Fraction(self.sigma) ** 2

    def curvatures(self) -> tuple[Fraction, Fraction]:
        if not isinstance(self.potential, Quadratic):
            raise UnsupportedPotentialError(
                "exact operator algebra needs a quadratic potential; for other "
                "potentials use the grid discretization in se2langevin.spectral"
            )
        return self.potential.curvatures_exact()


def apply_angular_diffusion(f: PolyTrig, params: OperatorParams) -> PolyTrig:
    """Symmetric part: (sigma^2/2) * second angle derivative.

    Diagonal on trig modes: a mode-k term is scaled by -(sigma^2/2) k^2.
    """
    half_s2 = params.sigma_sq() / 2
    return PolyTrig({key: -half_s2 * key[2] ** 2 * c for key, c in f.terms.items()})


def _mul_grad_dot_normal(f: PolyTrig, params: OperatorParams) -> PolyTrig:
    """Multiply by grad Phi . (heading rotated by +pi/2)."""
    a1, a2 = params.curvatures()
    return f.mul_x1().mul_sin() * (-a1) + f.mul_x2().mul_cos() * a2


def apply_transport(f: PolyTrig, params: OperatorParams) -> PolyTrig:
    """Antisymmetric part: heading derivative minus the gradient-coupled turn."""
    return apply_field(FieldId.HEADING, f) - _mul_grad_dot_normal(f.dtheta(), params)


def apply_generator(f: PolyTrig, params: OperatorParams) -> PolyTrig:
    """Full generator: angular diffusion minus transport."""
    return apply_angular_diffusion(f, params) - apply_transport(f, params)


def angle_average(f: PolyTrig) -> PolyTrig:
    """Uniform average over the angle; keeps exactly the mode-0 terms."""
    return f.theta_average()


def _gaussian_moment(n: int, variance: Fraction) -> Fraction:
    """E[X^n] for X centered Gaussian: 0 for odd n, (n-1)!! var^(n/2) else."""
    if n % 2:
        return Fraction(0)
    m = Fraction(1)
    for j in range(1, n, 2):
        m *= j
    return m * variance ** (n // 2)


def gibbs_mean(f: PolyTrig, params: OperatorParams) -> Fraction:
    """Exact mean of f under the Gibbs measure (angle uniform, position Gaussian)."""
    a1, a2 = params.curvatures()
    v1, v2 = 1 / a1, 1 / a2
    total = Fraction(0)
    for (a, b, k, phase), c in f.terms.items():
        if k != 0:
            continue  # trig modes average to zero
        total += c * _gaussian_moment(a, v1) * _gaussian_moment(b, v2)
    return total


def inner_product(f: PolyTrig, g: PolyTrig, params: OperatorParams) -> Fraction:
    """Exact Gibbs-weighted inner product (f, g).

    Trig orthogonality: matching (k, phase) pairs contribute a factor 1 for
    k = 0 and 1/2 for k >= 1; position factors reduce to Gaussian moments.
    """
    a1, a2 = params.curvatures()
    v1, v2 = 1 / a1, 1 / a2
    g_terms = g.terms
    total = Fraction(0)
    for (a, b, k, phase), cf in f.terms.items():
        for (ag, bg, kg, phg), cg in g_terms.items():
            if kg != k or phg != phase:
                continue
            weight = Fraction(1) if k == 0 else Fraction(1, 2)
            total += cf * cg * weight * _gaussian_moment(a + ag, v1) * _gaussian_moment(b + bg, v2)
    return total


def centered_angle_average(f: PolyTrig, params: OperatorParams) -> PolyTrig:
    """Angle average with the global Gibbs mean removed.

    This is the orthogonal projection onto mean-zero angle-independent
    functions; it annihilates constants and is idempotent.
    """
    avg = f.theta_average()
    return avg - PolyTrig.constant(gibbs_mean(avg, params))


def apply_macroscopic_generator(g: PolyTrig, params: OperatorParams) -> PolyTrig:
    """Averaged diffusion (lap g)/2 - (grad Phi . grad g)/2 on angle averages.

    For angle-independent mean-zero g this equals the sandwich
    project-transport-transport-project applied to g, term for term.
    """
    if g.max_mode() != 0:
        raise ConfigurationError("macroscopic generator acts on angle-independent functions")
    a1, a2 = params.curvatures()
    half = Fraction(1, 2)
    lap = g.dx1().dx1() + g.dx2().dx2()
    drift = g.dx1().mul_x1() * a1 + g.dx2().mul_x2() * a2
    return lap * half - drift * half


# -- structural identity residuals (exact zero in rational arithmetic) ------


def transport_of_average_residual(g: PolyTrig, params: OperatorParams) -> Fraction:
    """Transport applied to an angle average must equal the heading derivative."""
    if g.max_mode() != 0:
        raise ConfigurationError("expected an angle-independent function")
    lhs = apply_transport(g, params)
    rhs = apply_field(FieldId.HEADING, g)
    return (lhs - rhs).l1_norm()


def sandwiched_transport_residual(f: PolyTrig, params: OperatorParams) -> Fraction:
    """Average-transport-average vanishes identically."""
    inner = centered_angle_average(f, params)
    outer = centered_angle_average(apply_transport(inner, params), params)
    return outer.l1_norm()


def second_transport_residual(g: PolyTrig, params: OperatorParams) -> Fraction:
    """Squared transport on an angle average versus its closed form.

    The closed form is the anisotropic second-order part
    cos^2 g_11 + 2 sin cos g_12 + sin^2 g_22 minus the gradient-coupled
    derivative along the rotated heading.
    """
    if g.max_mode() != 0:
        raise ConfigurationError("expected an angle-independent function")
    lhs = apply_transport(apply_transport(g, params), params)
    g11 = g.dx1().dx1()
    g12 = g.dx1().dx2()
    g22 = g.dx2().dx2()
    rhs = (
        g11.mul_cos().mul_cos()
        + (g12 * 2).mul_sin().mul_cos()
        + g22.mul_sin().mul_sin()
        - _mul_grad_dot_normal(apply_field(FieldId.NORMAL, g), params)
    )
    return (lhs - rhs).l1_norm()


def macroscopic_identity_residual(g: PolyTrig, params: OperatorParams) -> Fraction:
    """Sandwiched squared transport versus the averaged diffusion formula."""
    if g.max_mode() != 0:
        raise ConfigurationError("expected an angle-independent function")
    centered = centered_angle_average(g, params)
    sandwich = centered_angle_average(
        apply_transport(apply_transport(centered, params), params), params
    )
    direct = apply_macroscopic_generator(centered, params)
    return (sandwich - direct).l1_norm()


def invariance_residual(f: PolyTrig, params: OperatorParams) -> float:
    """|mean of (generator f)|: the Gibbs measure is invariant."""
    return abs(float(gibbs_mean(apply_generator(f, params), params)))


def random_test_function(
    rng, max_degree: int = 3, max_mode: int = 3, n_terms: int = 6
) -> PolyTrig:
    """Sparse random element of the class, small rational coefficients."""
    terms: dict[tuple[int, int, int, str], Fraction] = {}
    for _ in range(n_terms):
        a = int(rng.integers(0, max_degree + 1))
        b = int(rng.integers(0, max_degree + 1 - a))
        k = int(rng.integers(0, max_mode + 1))
        phase = SIN if k > 0 and rng.integers(2) else COS
        coeff = Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 5)))
        key = (a, b, k, phase)
        terms[key] = terms.get(key, Fraction(0)) + coeff
    f = PolyTrig(terms)
    return f if not f.is_zero() else PolyTrig.constant(1)
