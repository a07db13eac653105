"""Decay-rate assembly: closed forms, optimization, and cross-validation."""
import json
import math

import pytest

from se2langevin.errors import ConfigurationError
from se2langevin.rates import (
    RateReport,
    build_report,
    macroscopic_constant,
    microscopic_constant,
    rate_bound,
    validate,
)


def test_microscopic_constant():
    assert microscopic_constant(1.0) == 0.5
    assert microscopic_constant(2.0) == 2.0
    assert microscopic_constant(0.5) == 0.125
    with pytest.raises(ConfigurationError):
        microscopic_constant(0.0)
    with pytest.raises(ConfigurationError):
        microscopic_constant(-1.0)


def test_macroscopic_constant():
    assert macroscopic_constant(1.0) == 0.5
    assert macroscopic_constant(4.0) == 2.0
    with pytest.raises(ConfigurationError):
        macroscopic_constant(0.0)


def test_rate_bound_matches_closed_form():
    # the two linear branches cross inside the interval, so the optimum is
    # delta* = lambda_m / (penalty + macro_share) and everything follows
    lam_m, lam_big, c1, c2 = 0.5, 0.5, 0.25, 0.5
    penalty = 1.0 + c1 + c2
    share = lam_big / (1.0 + lam_big)
    delta_expected = lam_m / (penalty + share)
    kappa1, kappa2, delta_star = rate_bound(lam_m, lam_big, c1, c2)
    assert delta_star == pytest.approx(delta_expected, abs=1e-8)
    assert kappa2 == pytest.approx(delta_expected * share / (1.0 + delta_expected), rel=1e-7)
    assert kappa1 == pytest.approx(
        math.sqrt((1 + delta_expected) / (1 - delta_expected)), rel=1e-7
    )


def test_rate_bound_input_validation():
    for bad in ((0.0, 1, 1, 1), (1, -1, 1, 1), (1, 1, 0, 1), (1, 1, 1, math.inf)):
        with pytest.raises(ConfigurationError):
            rate_bound(*bad)


def test_rate_bound_deterministic():
    a = rate_bound(0.5, 0.5, 0.25, 0.49)
    b = rate_bound(0.5, 0.5, 0.25, 0.49)
    assert a == b


def test_larger_c2_means_smaller_rate():
    _, kappa2_small, _ = rate_bound(0.5, 0.5, 0.25, 0.5)
    _, kappa2_large, _ = rate_bound(0.5, 0.5, 0.25, 5.0)
    assert kappa2_large < kappa2_small


def test_rate_monotone_in_every_input():
    lams = (0.3, 0.5, 0.8)
    bigs = (0.4, 1.0, 2.0)
    cs = (0.1, 0.25, 0.6)
    slack = 1e-9

    def kappa2(lm, lb, c1, c2):
        return rate_bound(lm, lb, c1, c2)[1]

    for lb in bigs:
        for c1 in cs:
            for c2 in cs:
                for lo, hi in zip(lams, lams[1:]):
                    assert kappa2(lo, lb, c1, c2) <= kappa2(hi, lb, c1, c2) + slack
    for lm in lams:
        for c1 in cs:
            for c2 in cs:
                for lo, hi in zip(bigs, bigs[1:]):
                    assert kappa2(lm, lo, c1, c2) <= kappa2(lm, hi, c1, c2) + slack
                for lo, hi in zip(cs, cs[1:]):
                    assert kappa2(lm, c1, hi, c2) <= kappa2(lm, c1, lo, c2) + slack
                    assert kappa2(lm, c1, c2, hi) <= kappa2(lm, c1, c2, lo) + slack


def test_kappa1_at_least_one():
    for lm in (0.1, 0.5, 2.0):
        for lb in (0.2, 1.0, 5.0):
            kappa1, kappa2, delta = rate_bound(lm, lb, 0.25, 0.5)
            assert kappa1 >= 1.0
            assert 0 < delta < 1
            assert kappa2 > 0


def test_build_report_wiring():
    rep = build_report(1.0, 1.0, c1=0.25, c2=0.5, gap_spectral=0.3, kappa_empirical=0.33)
    assert rep.lambda_m == 0.5
    assert rep.lambda_big_m == 0.5
    assert rep.kappa2 == rate_bound(0.5, 0.5, 0.25, 0.5)[1]
    assert rep.provenance["kappa_empirical"] == "monte-carlo"
    assert rep.provenance["c2_estimate"] == "grid-estimate"
    assert rep.provenance["kappa2"] == "formula"


def test_report_validation_guards():
    with pytest.raises(ConfigurationError):
        RateReport(
            sigma=1.0, lambda_poincare=1.0, lambda_m=0.5, lambda_big_m=0.5,
            c1=0.25, c2_estimate=0.5, delta_star=0.2, kappa1=0.5, kappa2=0.05,
        )
    with pytest.raises(ConfigurationError):
        RateReport(
            sigma=1.0, lambda_poincare=1.0, lambda_m=0.5, lambda_big_m=0.5,
            c1=0.25, c2_estimate=0.5, delta_star=0.2, kappa1=1.1, kappa2=0.0,
        )
    with pytest.raises(ConfigurationError):
        RateReport(
            sigma=1.0, lambda_poincare=1.0, lambda_m=0.5, lambda_big_m=0.5,
            c1=0.25, c2_estimate=0.5, delta_star=0.2, kappa1=1.1, kappa2=0.05,
            provenance={"kappa2": "wishful-thinking"},
        )


def test_validate_pass_and_fail():
    good = build_report(1.0, 1.0, c1=0.25, c2=0.5, gap_spectral=0.3, kappa_empirical=0.28)
    res = validate(good)
    assert res.passed
    assert res.summary().startswith("PASS")
    forged = build_report(1.0, 1.0, c1=0.25, c2=0.5, gap_spectral=0.3, kappa_empirical=0.28)
    object.__setattr__(forged, "kappa2", 0.5)  # a bound above both measurements
    res2 = validate(forged)
    assert not res2.passed
    assert res2.summary().startswith("FAIL")


def test_validate_needs_both_measurements():
    partial = build_report(1.0, 1.0, c1=0.25, c2=0.5, gap_spectral=0.3)
    with pytest.raises(ConfigurationError):
        validate(partial)
    partial2 = build_report(1.0, 1.0, c1=0.25, c2=0.5, kappa_empirical=0.3)
    with pytest.raises(ConfigurationError):
        validate(partial2)


def test_json_round_trip():
    rep = build_report(1.0, 1.0, c1=0.25, c2=0.5, gap_spectral=0.3, kappa_empirical=0.33)
    body = json.loads(rep.to_json())
    assert body["kappa2"]["value"] == rep.kappa2
    assert body["kappa2"]["provenance"] == "formula"
    assert body["kappa_empirical"]["provenance"] == "monte-carlo"
    assert body["label"] == rep.label


def test_csv_row_matches_header():
    rep = build_report(1.0, 1.0, c1=0.25, c2=0.5, gap_spectral=0.3, kappa_empirical=0.33)
    header = RateReport.csv_header().split(",")
    cells = rep.to_csv_row().split(",")
    assert len(header) == len(cells)
    named = dict(zip(header, cells))
    assert float(named["sigma"]) == 1.0
    assert float(named["kappa2"]) == rep.kappa2
    partial = build_report(1.0, 1.0, c1=0.25, c2=0.5)
    cells2 = partial.to_csv_row().split(",")
    assert cells2[-1] == "" and cells2[-2] == ""
