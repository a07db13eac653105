"""Exact algebra of polynomial-trigonometric functions on the group.

The class below represents finite sums

    sum_j  c_j * xi1^a_j * xi2^b_j * {cos or sin}(k_j * theta)

with rational coefficients.  The family is closed under addition, scalar
multiplication, multiplication by xi1/xi2/cos(theta)/sin(theta), and the three
coordinate derivatives, which is exactly what the transport and angular
operators need when the confining potential is quadratic.  All arithmetic is
done in `fractions.Fraction`, so operator identities that hold in exact
arithmetic evaluate to literal zero rather than to rounding noise.

Canonical form: a term key is (a, b, k, phase) with a, b, k nonnegative
integers and phase "cos" or "sin"; k = 0 only ever appears with phase "cos"
(a sin(0*theta) term is identically zero), and zero coefficients are never
stored.
"""
from __future__ import annotations

from fractions import Fraction
from math import cos, sin
from typing import Iterable, Mapping, Union

Scalar = Union[int, float, Fraction, str]

COS = "cos"
SIN = "sin"

_HALF = Fraction(1, 2)


def _as_fraction(x: Scalar) -> Fraction:
    """Exact coefficient conversion; floats convert via their binary value."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, str)):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x)
    raise TypeError(f"cannot use {type(x).__name__} as a coefficient")


def _validate_key(a: int, b: int, k: int, phase: str) -> tuple[int, int, int, str]:
    if not (isinstance(a, int) and isinstance(b, int) and isinstance(k, int)):
        raise TypeError("term exponents must be integers")
    if a < 0 or b < 0 or k < 0:
        raise ValueError(f"negative exponent in term ({a}, {b}, {k}, {phase})")
    if phase not in (COS, SIN):
        raise ValueError(f"phase must be 'cos' or 'sin', got {phase!r}")
    if k == 0 and phase == SIN:
        raise ValueError("sin(0*theta) terms are identically zero; use k=0 with 'cos'")
    return a, b, k, phase


class PolyTrig:
    """A polynomial-trig function in canonical form.  Instances are immutable."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[tuple[int, int, int, str], Scalar] | None = None):
        clean: dict[tuple[int, int, int, str], Fraction] = {}
        if terms:
            for (a, b, k, phase), c in terms.items():
                key = _validate_key(a, b, k, phase)
                coeff = _as_fraction(c)
                if coeff != 0:
                    acc = clean.get(key, Fraction(0)) + coeff
                    if acc != 0:
                        clean[key] = acc
                    else:
                        clean.pop(key, None)
        self._terms = clean

    # -- constructors ---------------------------------------------------

    @staticmethod
    def zero() -> "PolyTrig":
        return PolyTrig()

    @staticmethod
    def constant(c: Scalar) -> "PolyTrig":
        return PolyTrig({(0, 0, 0, COS): c})

    @staticmethod
    def monomial(c: Scalar, a: int = 0, b: int = 0, k: int = 0, phase: str = COS) -> "PolyTrig":
        return PolyTrig({(a, b, k, phase): c})

    # -- inspection -----------------------------------------------------

    @property
    def terms(self) -> dict[tuple[int, int, int, str], Fraction]:
        return dict(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def l1_norm(self) -> Fraction:
        """Sum of absolute coefficients in canonical form (exact)."""
        return sum((abs(c) for c in self._terms.values()), Fraction(0))

    def poly_degree(self) -> int:
        return max((a + b for (a, b, _, _) in self._terms), default=0)

    def max_mode(self) -> int:
        return max((k for (_, _, k, _) in self._terms), default=0)

    def theta_average(self) -> "PolyTrig":
        """Keep the angle-independent (k = 0) part."""
        return PolyTrig({key: c for key, c in self._terms.items() if key[2] == 0})

    def __eq__(self, other) -> bool:
        if not isinstance(other, PolyTrig):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __repr__(self) -> str:
        if not self._terms:
            return "PolyTrig(0)"
        bits = []
        for (a, b, k, phase), c in sorted(self._terms.items()):
            factors = [str(c)]
            if a:
                factors.append(f"xi1^{a}" if a > 1 else "xi1")
            if b:
                factors.append(f"xi2^{b}" if b > 1 else "xi2")
            if k:
                factors.append(f"{phase}({k}t)")
            bits.append("*".join(factors))
        return "PolyTrig(" + " + ".join(bits) + ")"

    # -- linear structure -----------------------------------------------

    def __add__(self, other: "PolyTrig") -> "PolyTrig":
        if not isinstance(other, PolyTrig):
            return NotImplemented
        merged = dict(self._terms)
        for key, c in other._terms.items():
            acc = merged.get(key, Fraction(0)) + c
            if acc != 0:
                merged[key] = acc
            else:
                merged.pop(key, None)
        out = PolyTrig.__new__(PolyTrig)
        out._terms = merged
        return out

    def __neg__(self) -> "PolyTrig":
        out = PolyTrig.__new__(PolyTrig)
        out._terms = {key: -c for key, c in self._terms.items()}
        return out

    def __sub__(self, other: "PolyTrig") -> "PolyTrig":
        if not isinstance(other, PolyTrig):
            return NotImplemented
        return self + (-other)

    def __mul__(self, scalar: Scalar) -> "PolyTrig":
        s = _as_fraction(scalar)
        out = PolyTrig.__new__(PolyTrig)
        out._terms = {} if s == 0 else {key: c * s for key, c in self._terms.items()}
        return out

    __rmul__ = __mul__

    # -- multiplication by coordinate factors ----------------------------

    def mul_x1(self) -> "PolyTrig":
        out = PolyTrig.__new__(PolyTrig)
        out._terms = {(a + 1, b, k, p): c for (a, b, k, p), c in self._terms.items()}
        return out

    def mul_x2(self) -> "PolyTrig":
        out = PolyTrig.__new__(PolyTrig)
        out._terms = {(a, b + 1, k, p): c for (a, b, k, p), c in self._terms.items()}
        return out

    def mul_cos(self) -> "PolyTrig":
        """Multiply by cos(theta), reducing products to sums of single modes."""
        acc: dict[tuple[int, int, int, str], Fraction] = {}
        for (a, b, k, p), c in self._terms.items():
            # trig(k t) cos t = (trig((k-1) t) + trig((k+1) t)) / 2, same phase
            _accumulate(acc, a, b, k - 1, p, c * _HALF)
            _accumulate(acc, a, b, k + 1, p, c * _HALF)
        out = PolyTrig.__new__(PolyTrig)
        out._terms = acc
        return out

    def mul_sin(self) -> "PolyTrig":
        """Multiply by sin(theta)."""
        acc: dict[tuple[int, int, int, str], Fraction] = {}
        for (a, b, k, p), c in self._terms.items():
            if p == COS:
                # cos(k t) sin t = (sin((k+1) t) - sin((k-1) t)) / 2
                _accumulate(acc, a, b, k + 1, SIN, c * _HALF)
                _accumulate(acc, a, b, k - 1, SIN, -c * _HALF)
            else:
                # sin(k t) sin t = (cos((k-1) t) - cos((k+1) t)) / 2
                _accumulate(acc, a, b, k - 1, COS, c * _HALF)
                _accumulate(acc, a, b, k + 1, COS, -c * _HALF)
        out = PolyTrig.__new__(PolyTrig)
        out._terms = acc
        return out

    # -- derivatives -----------------------------------------------------

    def dx1(self) -> "PolyTrig":
        acc: dict[tuple[int, int, int, str], Fraction] = {}
        for (a, b, k, p), c in self._terms.items():
            if a:
                acc[(a - 1, b, k, p)] = c * a
        out = PolyTrig.__new__(PolyTrig)
        out._terms = acc
        return out

    def dx2(self) -> "PolyTrig":
        acc: dict[tuple[int, int, int, str], Fraction] = {}
        for (a, b, k, p), c in self._terms.items():
            if b:
                acc[(a, b - 1, k, p)] = c * b
        out = PolyTrig.__new__(PolyTrig)
        out._terms = acc
        return out

    def dtheta(self) -> "PolyTrig":
        acc: dict[tuple[int, int, int, str], Fraction] = {}
        for (a, b, k, p), c in self._terms.items():
            if k == 0:
                continue
            if p == COS:
                _accumulate(acc, a, b, k, SIN, -c * k)
            else:
                _accumulate(acc, a, b, k, COS, c * k)
        out = PolyTrig.__new__(PolyTrig)
        out._terms = acc
        return out

    # -- evaluation -------------------------------------------------------

    def evaluate(self, xi1: float, xi2: float, theta: float) -> float:
        total = 0.0
        for (a, b, k, p), c in self._terms.items():
            trig = cos(k * theta) if p == COS else sin(k * theta)
            total += float(c) * xi1**a * xi2**b * trig
        return total

    # -- serialization ----------------------------------------------------

    def to_records(self) -> list[dict]:
        """Canonical list of term records; coefficients as exact fraction strings."""
        out = []
        for (a, b, k, p) in sorted(self._terms):
            out.append({"a": a, "b": b, "k": k, "phase": p, "coeff": str(self._terms[(a, b, k, p)])})
        return out

    @staticmethod
    def from_records(records: Iterable[Mapping]) -> "PolyTrig":
        """Rebuild from term records, validating the canonical-form rules."""
        acc: dict[tuple[int, int, int, str], Fraction] = {}
        for i, rec in enumerate(records):
            try:
                key = _validate_key(int(rec["a"]), int(rec["b"]), int(rec["k"]), rec["phase"])
                coeff = _as_fraction(rec["coeff"])
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"bad term record at index {i}: {exc}") from exc
            _accumulate(acc, *key, coeff)
        out = PolyTrig.__new__(PolyTrig)
        out._terms = acc
        return out


def _accumulate(acc: dict, a: int, b: int, k: int, phase: str, coeff: Fraction) -> None:
    """Add a possibly non-canonical term, folding negative/zero modes."""
    if coeff == 0:
        return
    if k < 0:
        # cos is even, sin is odd
        k = -k
        if phase == SIN:
            coeff = -coeff
    if k == 0 and phase == SIN:
        return
    key = (a, b, k, phase)
    acc_c = acc.get(key, Fraction(0)) + coeff
    if acc_c != 0:
        acc[key] = acc_c
    else:
        acc.pop(key, None)
