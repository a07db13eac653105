"""Planar motion group: points, composition, and the invariant frame fields.

A group element is (xi1, xi2, theta): a translation of the plane together with
a heading angle.  Composition acts on the left factor's frame, i.e. the second
element's translation is rotated by the first element's heading.  Angles are
stored in [0, 2*pi).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi


def wrap_angle(theta: float) -> float:
    """Reduce an angle to the canonical interval [0, 2*pi)."""
    t = math.fmod(theta, TWO_PI)
    if t < 0.0:
        t += TWO_PI
    # fmod of a value just below a multiple of 2*pi can round up to 2*pi
    if t >= TWO_PI:
        t -= TWO_PI
    return t


class FieldId(enum.Enum):
    """The three left-invariant frame fields.

    HEADING differentiates along the heading direction (cos, sin, 0),
    TURN along the angle, and NORMAL along the rotated heading
    (-sin, cos, 0); NORMAL is the commutator [TURN, HEADING].
    """

    HEADING = "heading"
    TURN = "turn"
    NORMAL = "normal"


@dataclass(frozen=True)
class GroupPoint:
    xi1: float
    xi2: float
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", wrap_angle(float(self.theta)))
        object.__setattr__(self, "xi1", float(self.xi1))
        object.__setattr__(self, "xi2", float(self.xi2))


def identity() -> GroupPoint:
    return GroupPoint(0.0, 0.0, 0.0)


def group_compose(g: GroupPoint, h: GroupPoint) -> GroupPoint:
    """Product g*h: rotate h's translation by g's heading, then shift by g."""
    c, s = math.cos(g.theta), math.sin(g.theta)
    return GroupPoint(
        g.xi1 + c * h.xi1 - s * h.xi2,
        g.xi2 + s * h.xi1 + c * h.xi2,
        g.theta + h.theta,
    )


def group_inverse(g: GroupPoint) -> GroupPoint:
    """Inverse element: g * inverse(g) is the identity."""
    c, s = math.cos(g.theta), math.sin(g.theta)
    # rotate -xi by -theta
    return GroupPoint(-(c * g.xi1 + s * g.xi2), s * g.xi1 - c * g.xi2, -g.theta)


def heading_vector(theta: float) -> tuple[float, float]:
    """Unit heading (cos, sin)."""
    return math.cos(theta), math.sin(theta)


def normal_vector(theta: float) -> tuple[float, float]:
    """Heading rotated by +pi/2: (-sin, cos)."""
    return -math.sin(theta), math.cos(theta)


def field_coefficients(field: FieldId, p: GroupPoint) -> tuple[float, float, float]:
    """Coefficients of a frame field in the coordinate basis (d_xi1, d_xi2, d_theta)."""
    if field is FieldId.HEADING:
        c, s = heading_vector(p.theta)
        return c, s, 0.0
    if field is FieldId.TURN:
        return 0.0, 0.0, 1.0
    if field is FieldId.NORMAL:
        n1, n2 = normal_vector(p.theta)
        return n1, n2, 0.0
    raise ValueError(f"unknown field {field!r}")


def apply_field(field: FieldId, f):
    """Differentiate a polynomial-trig function along a frame field.

    Returns a new function in the same class; see :mod:`se2langevin.polytrig`.
    """
    if field is FieldId.HEADING:
        return f.dx1().mul_cos() + f.dx2().mul_sin()
    if field is FieldId.TURN:
        return f.dtheta()
    if field is FieldId.NORMAL:
        return f.dx2().mul_cos() - f.dx1().mul_sin()
    raise ValueError(f"unknown field {field!r}")


def commutator_residual(f, p: GroupPoint) -> float:
    """|([TURN, HEADING] - NORMAL) f| at p; identically zero by construction.

    The commutator is expanded literally (TURN of HEADING f minus HEADING of
    TURN f) so the cancellation is a property of the calculus, not of this
    routine.
    """
    a = apply_field(FieldId.TURN, apply_field(FieldId.HEADING, f))
    b = apply_field(FieldId.HEADING, apply_field(FieldId.TURN, f))
    c = apply_field(FieldId.NORMAL, f)
    return abs((a - b - c).evaluate(p.xi1, p.xi2, p.theta))
