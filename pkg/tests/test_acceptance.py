"""End-to-end acceptance battery.

Each test covers one shipping criterion and prints a single verdict line
(visible under `pytest -s` or in the captured output); the assertion that
follows makes the suite fail loudly on any miss.  Resolutions and seeds are
frozen so every run measures the same thing.
"""
import json
import time

import numpy as np
import pytest

from se2langevin.cli import main
from se2langevin.geometry import GroupPoint
from se2langevin.operators import (
    OperatorParams,
    angle_average,
    invariance_residual,
    macroscopic_identity_residual,
    random_test_function,
    sandwiched_transport_residual,
    second_transport_residual,
    transport_of_average_residual,
)
from se2langevin.potentials import Grid2D, Quadratic, Tabulated
from se2langevin.rates import build_report, validate
from se2langevin.simulate import (
    InitialLaw,
    SimConfig,
    autocovariance_rate,
    ensemble_autocovariance,
    simulate_ensemble,
    stationarity_test,
)
from se2langevin.spectral import (
    assemble,
    build_discretization,
    coercivity_report,
    elliptic_report,
    poincare_macroscopic,
    projection_identities,
    spectral_gap,
    structure_report,
)

STANDARD = Quadratic(a1=1, a2=1)


def make_ops(n, n_modes, sigma=1.0):
    params = OperatorParams(sigma=sigma, potential=STANDARD)
    grid = Grid2D.centered(7.5, 7.5, n, n)
    return assemble(params, build_discretization(STANDARD, grid, n_modes))


@pytest.fixture(scope="module")
def ops24():
    return make_ops(24, 4)


def _verdict(number: int, label: str, ok: bool) -> bool:
    print(f"ACCEPTANCE {number} {label}: {'PASS' if ok else 'FAIL'}")
    return ok


def test_criterion_1_symbolic_identities():
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    sigmas = (0.5, 1.0, 2.0)
    worst_exact = 0
    worst_mean = 0.0
    for i in range(200):
        params = OperatorParams(sigma=sigmas[i % 3], potential=STANDARD)
        f = random_test_function(rng)
        g = angle_average(f)
        worst_exact = max(
            worst_exact,
            transport_of_average_residual(g, params),
            sandwiched_transport_residual(f, params),
            second_transport_residual(g, params),
            macroscopic_identity_residual(g, params),
        )
        worst_mean = max(worst_mean, invariance_residual(f, params))
    elapsed = time.perf_counter() - start
    ok = worst_exact == 0 and worst_mean <= 1e-12 and elapsed < 10.0
    assert _verdict(1, "symbolic identities exact on 200 random functions", ok)


def test_criterion_2_discrete_structure():
    start = time.perf_counter()
    ops = make_ops(32, 8)  # 32 x 32 nodes, 17 angular components
    structure = structure_report(ops)
    identities = projection_identities(ops)
    elapsed = time.perf_counter() - start
    ok = (
        structure.max_residual() <= 1e-10
        and identities.sandwich_norm <= 1e-10
        and identities.macroscopic_relative_residual <= 1e-8
        and elapsed < 60.0
    )
    assert _verdict(2, "discrete structure and projection identities at 32x32x17", ok)


def test_criterion_3_coercivity(ops24):
    start = time.perf_counter()
    coercivity = coercivity_report(ops24, n_probes=100, seed=0)
    poincare = poincare_macroscopic(make_ops(64, 2))
    elapsed = time.perf_counter() - start
    ok = (
        coercivity.microscopic_min_ratio >= 1.0 - 1e-12
        and coercivity.macroscopic_min_ratio >= 0.95
        and abs(poincare - 1.0) <= 0.02
        and elapsed < 120.0
    )
    assert _verdict(3, "microscopic/macroscopic coercivity and unit Poincare", ok)


def test_criterion_4_elliptic_constants(ops24):
    fine = assemble(
        OperatorParams(sigma=1.0, potential=STANDARD),
        build_discretization(STANDARD, Grid2D.centered(7.5, 7.5, 36, 36), 4),
    )
    coarse_rep = elliptic_report(ops24, n_samples=200, seed=0)
    fine_rep = elliptic_report(fine, n_samples=200, seed=0)
    drift = abs(fine_rep.c2_estimate - coarse_rep.c2_estimate) / coarse_rep.c2_estimate
    ok = (
        coarse_rep.c1_observed <= 0.25 * (1 + 1e-6)
        and fine_rep.c1_observed <= 0.25 * (1 + 1e-6)
        and np.isfinite(coarse_rep.c2_estimate)
        and coarse_rep.c2_estimate > 0
        and drift <= 0.20
    )
    assert _verdict(4, "regularizer constants sharp and grid-stable", ok)


def test_criterion_5_free_angle_relaxation():
    start = time.perf_counter()
    flat = Tabulated.constant(0.0, 50.0, 50.0)
    cfg = SimConfig(
        sigma=1.0, potential=flat, dt=1e-3, t_final=2.0, n_paths=100000, seed=0,
        initial=InitialLaw("point", GroupPoint(0.0, 0.0, 0.0)),
    )
    series = simulate_ensemble(cfg, "cos_theta", at_times=(0.5, 1.0, 2.0))
    elapsed = time.perf_counter() - start
    ok = elapsed < 60.0
    for t, mean, err in zip(series.times, series.values, series.stderr):
        ok = ok and abs(mean - np.exp(-t / 2)) <= 3.0 * err
    assert _verdict(5, "zero-force angle autocorrelation matches exp(-t/2)", ok)


def test_criterion_6_stationarity():
    cfg = SimConfig(
        sigma=1.0, potential=STANDARD, dt=5e-3, t_final=50.0, n_paths=10000, seed=0,
        initial=InitialLaw("equilibrium"),
    )
    report = stationarity_test(cfg, burn_in=25.0, n_samples=10000)
    ok = report.position_pass and report.angle_pass
    assert _verdict(6, "equilibrium preserved over a long horizon", ok)


def test_criterion_7_rates_cross_validation(ops24):
    start = time.perf_counter()
    ops48 = make_ops(48, 4)
    gap = spectral_gap(ops48, seed=0)  # above the dense cutoff: decay fit
    cfg = SimConfig(
        sigma=1.0, potential=STANDARD, dt=5e-3, t_final=12.0, n_paths=20000, seed=2,
        initial=InitialLaw("equilibrium"),
    )
    fit = autocovariance_rate(ensemble_autocovariance(cfg, "xi1", max_lag=12.0))
    c2 = elliptic_report(ops24, n_samples=200, seed=0).c2_estimate
    report = build_report(
        sigma=1.0,
        lambda_poincare=poincare_macroscopic(ops48),
        c1=0.25,
        c2=c2,
        gap_spectral=gap.gap,
        kappa_empirical=fit.kappa_emp,
    )
    result = validate(report)
    elapsed = time.perf_counter() - start
    ok = (
        gap.method == "decay-fit"
        and abs(fit.kappa_emp - gap.gap) / gap.gap <= 0.20
        and result.passed
        and elapsed < 300.0
    )
    assert _verdict(7, "certified rate below both measured decay rates", ok)


def test_criterion_8_reproducible_artifacts(tmp_path):
    ok = True
    for name, argv in (
        ("sim", ["simulate", "--t-final", "0.05", "--n-paths", "50"]),
        ("spec", ["spectrum", "--n1", "12", "--n2", "12", "--modes", "2"]),
    ):
        out = tmp_path / name
        assert main(argv + ["-o", str(out)]) == 0
        tracked = sorted(p for p in out.rglob("*") if p.is_file() and p.name != "meta.json")
        first = {p: p.read_bytes() for p in tracked}
        assert main(argv + ["-o", str(out)]) == 0
        second = sorted(p for p in out.rglob("*") if p.is_file() and p.name != "meta.json")
        ok = ok and (tracked == second)
        ok = ok and all(p.read_bytes() == first[p] for p in tracked)
    assert _verdict(8, "pipeline reruns are byte-identical", ok)
