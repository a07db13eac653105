"""Assembly of the coercivity constants into a certified decay-rate pair.

The two coercivity constants come from closed forms (angular dissipation
sigma^2/2, positional Poincare constant halved), the elliptic constants from
the spectral module's measurements.  Their combination into an exponential
rate pair follows the standard modified-entropy construction; since the
source theorem asserts existence of the pair without printing a formula, the
output is labeled a candidate bound and is always cross-checked against the
measured spectral gap and the Monte Carlo decay rate instead of being
trusted on its own.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .errors import ConfigurationError

GOLDEN_TOL = 1e-10
VALIDATION_TOL = 0.15
CANDIDATE_LABEL = "candidate bound (framework-style)"

_INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def microscopic_constant(sigma: float) -> float:
    """Dissipation strength of the angular noise: sigma^2/2.

    sigma = 0 is degenerate (no noise, no mixing) and rejected.
    """
    if sigma <= 0:
        raise ConfigurationError(f"sigma must be positive for a decay rate, got {sigma}")
    return 0.5 * sigma * sigma


def macroscopic_constant(lambda_poincare: float) -> float:
    """Half the positional Poincare constant."""
    if lambda_poincare <= 0:
        raise ConfigurationError(
            f"Poincare constant must be positive, got {lambda_poincare}; "
            "the potential does not confine"
        )
    return 0.5 * lambda_poincare


def _golden_max(fn, lo: float, hi: float, tol: float = GOLDEN_TOL) -> float:
    """Deterministic golden-section maximizer on [lo, hi]."""
    a, b = lo, hi
    c = b - _INV_GOLDEN * (b - a)
    d = a + _INV_GOLDEN * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _INV_GOLDEN * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_GOLDEN * (b - a)
            fd = fn(d)
    return 0.5 * (a + b)


def rate_bound(
    lambda_m: float, lambda_big_m: float, c1: float, c2: float
) -> tuple[float, float, float]:
    """(kappa1, kappa2, delta_star) maximizing the mixing-parameter tradeoff.

    Over delta in (0, delta_max), delta_max = min(1, lambda_m/(1 + c1 + c2)),
    the guaranteed dissipation is r(delta) = min(lambda_m - delta(1 + c1 + c2),
    delta * lambda_big_m / (1 + lambda_big_m)); the equivalence constant of the
    modified norm gives kappa1 = sqrt((1 + delta)/(1 - delta)) and the rate
    kappa2 = r(delta*)/(1 + delta*).
    """
    for name, val in (
        ("lambda_m", lambda_m),
        ("lambda_M", lambda_big_m),
        ("c1", c1),
        ("c2", c2),
    ):
        if not (val > 0 and math.isfinite(val)):
            raise ConfigurationError(f"{name} must be positive and finite, got {val}")
    penalty = 1.0 + c1 + c2
    delta_max = min(1.0, lambda_m / penalty)
    macro_share = lambda_big_m / (1.0 + lambda_big_m)

    def dissipation(delta: float) -> float:
        return min(lambda_m - delta * penalty, delta * macro_share)

    delta_star = _golden_max(dissipation, 0.0, delta_max)
    r = dissipation(delta_star)
    if r <= 0:
        raise ConfigurationError(
            f"no positive dissipation at delta={delta_star}; inputs are degenerate"
        )
    kappa2 = r / (1.0 + delta_star)
    kappa1 = math.sqrt((1.0 + delta_star) / (1.0 - delta_star))
    return kappa1, kappa2, delta_star


# -- report bundle ---------------------------------------------------------------

_PROVENANCE = {"formula", "grid-estimate", "monte-carlo"}


@dataclass(frozen=True)
class RateReport:
    """All constants of the decay estimate with the provenance of each."""

    sigma: float
    lambda_poincare: float
    lambda_m: float
    lambda_big_m: float
    c1: float
    c2_estimate: float
    delta_star: float
    kappa1: float
    kappa2: float
    gap_spectral: float | None = None
    kappa_empirical: float | None = None
    provenance: dict | None = None
    label: str = CANDIDATE_LABEL

    def __post_init__(self):
        prov = self.provenance or {}
        unknown = set(prov.values()) - _PROVENANCE
        if unknown:
            raise ConfigurationError(f"unknown provenance tags {sorted(unknown)}")
        if self.kappa1 < 1.0:
            raise ConfigurationError(f"kappa1 must be at least 1, got {self.kappa1}")
        if self.kappa2 <= 0:
            raise ConfigurationError(f"kappa2 must be positive, got {self.kappa2}")

    def to_json(self) -> str:
        prov = self.provenance or {}
        body = {}
        for name in (
            "sigma",
            "lambda_poincare",
            "lambda_m",
            "lambda_big_m",
            "c1",
            "c2_estimate",
            "delta_star",
            "kappa1",
            "kappa2",
            "gap_spectral",
            "kappa_empirical",
        ):
            value = getattr(self, name)
            entry = {"value": value}
            if name in prov:
                entry["provenance"] = prov[name]
            body[name] = entry
        body["label"] = self.label
        return json.dumps(body, indent=2, sort_keys=True)

    def to_csv_row(self) -> str:
        cells = [
            self.sigma,
            self.lambda_poincare,
            self.lambda_m,
            self.lambda_big_m,
            self.c1,
            self.c2_estimate,
            self.delta_star,
            self.kappa1,
            self.kappa2,
            self.gap_spectral,
            self.kappa_empirical,
        ]
        return ",".join("" if c is None else repr(float(c)) for c in cells)

    @staticmethod
    def csv_header() -> str:
        return (
            "sigma,lambda_poincare,lambda_m,lambda_M,c1,c2_estimate,"
            "delta_star,kappa1,kappa2,gap_spectral,kappa_empirical"
        )


def build_report(
    sigma: float,
    lambda_poincare: float,
    c1: float,
    c2: float,
    gap_spectral: float | None = None,
    kappa_empirical: float | None = None,
) -> RateReport:
    """Assemble the full report from the raw measured inputs."""
    lam_m = microscopic_constant(sigma)
    lam_big = macroscopic_constant(lambda_poincare)
    kappa1, kappa2, delta_star = rate_bound(lam_m, lam_big, c1, c2)
    provenance = {
        "sigma": "formula",
        "lambda_poincare": "grid-estimate",
        "lambda_m": "formula",
        "lambda_big_m": "formula",
        "c1": "formula",
        "c2_estimate": "grid-estimate",
        "delta_star": "formula",
        "kappa1": "formula",
        "kappa2": "formula",
    }
    if gap_spectral is not None:
        provenance["gap_spectral"] = "grid-estimate"
    if kappa_empirical is not None:
        provenance["kappa_empirical"] = "monte-carlo"
    return RateReport(
        sigma=sigma,
        lambda_poincare=lambda_poincare,
        lambda_m=lam_m,
        lambda_big_m=lam_big,
        c1=c1,
        c2_estimate=c2,
        delta_star=delta_star,
        kappa1=kappa1,
        kappa2=kappa2,
        gap_spectral=gap_spectral,
        kappa_empirical=kappa_empirical,
        provenance=provenance,
    )


@dataclass(frozen=True)
class ValidationResult:
    passed: bool
    kappa2: float
    gap_spectral: float
    kappa_empirical: float
    tol: float

    def summary(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (
            f"{verdict}: kappa2={self.kappa2:.6g} vs gap={self.gap_spectral:.6g}, "
            f"empirical={self.kappa_empirical:.6g} (tol {self.tol})"
        )


def validate(report: RateReport, tol: float = VALIDATION_TOL) -> ValidationResult:
    """A lower bound may not exceed either measured rate (up to tolerance)."""
    if report.gap_spectral is None or report.kappa_empirical is None:
        raise ConfigurationError(
            "report is incomplete: validation needs both gap_spectral and kappa_empirical"
        )
    ok = report.kappa2 <= report.gap_spectral * (1.0 + tol) and report.kappa2 <= (
        report.kappa_empirical * (1.0 + tol)
    )
    return ValidationResult(
        passed=ok,
        kappa2=report.kappa2,
        gap_spectral=report.gap_spectral,
        kappa_empirical=report.kappa_empirical,
        tol=tol,
    )
