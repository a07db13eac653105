"""Batch front-end: parse a run configuration, drive the pipelines, emit reports.

One binary with subcommands because the pipelines share configuration and
seeding.  Every run writes `resolved.toml` (the full effective config),
`summary.json` (PASS/FAIL per check), and the per-command artifacts; reruns
with the same resolved config produce byte-identical data files.  Wall-clock
information lives only in `meta.json` so it never breaks that guarantee.

Exit codes: 0 all checks pass, 1 a check failed, 2 configuration error,
3 numerical error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import rates
from .errors import ConfigurationError, NumericalError
from .geometry import GroupPoint
from .operators import (
    OperatorParams,
    invariance_residual,
    macroscopic_identity_residual,
    random_test_function,
    sandwiched_transport_residual,
    transport_of_average_residual,
)
from .potentials import Grid2D, Potential, from_config
from .simulate import (
    InitialLaw,
    SimConfig,
    autocovariance_rate,
    ensemble_autocovariance,
    resolve_observable,
    simulate_ensemble,
    stationarity_test,
    write_series_csv,
)
from .spectral import (
    assemble,
    build_discretization,
    coercivity_report,
    dump_matrix,
    elliptic_report,
    angular_gap,
    poincare_macroscopic,
    projection_identities,
    report_rows,
    spectral_gap,
    structure_report,
)

COMMANDS = ("verify-identities", "spectrum", "simulate", "stationarity", "rates", "full-report")
OUTPUT_DIR_ENV = "SE2LANGEVIN_OUTDIR"

_TOP_KEYS = {"command", "sigma", "seed", "output_dir", "dump_matrices",
             "potential", "discretization", "simulation"}
_POTENTIAL_KEYS = {"kind", "a1", "a2", "height", "path"}
_DISC_KEYS = {"box", "n1", "n2", "modes"}
_SIM_KEYS = {"dt", "t_final", "n_paths", "observable", "initial", "point", "mirrored"}

# per-purpose simulation defaults; explicit user settings override all of them
_SIM_DEFAULTS = {
    "observable-series": {"dt": 1e-3, "t_final": 2.0, "n_paths": 2000,
                          "observable": "cos_theta", "initial": "point"},
    "stationarity": {"dt": 5e-3, "t_final": 50.0, "n_paths": 10000,
                     "observable": "xi1", "initial": "equilibrium"},
    "autocovariance": {"dt": 5e-3, "t_final": 12.0, "n_paths": 20000,
                       "observable": "xi1", "initial": "equilibrium"},
}
_PURPOSES = {
    "verify-identities": (),
    "spectrum": (),
    "simulate": ("observable-series",),
    "stationarity": ("stationarity",),
    "rates": ("autocovariance",),
    "full-report": ("observable-series", "stationarity", "autocovariance"),
}


def derive_seed(master: int, module: str) -> int:
    """Stable per-module stream: adding a module never shifts another's draws."""
    digest = hashlib.blake2b(f"{master}:{module}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") >> 1


@dataclass(frozen=True)
class RunConfig:
    command: str
    sigma: float
    seed: int
    output_dir: str
    dump_matrices: bool
    potential: Potential
    grid: Grid2D
    n_modes: int
    sims: dict  # purpose -> SimConfig, validated eagerly
    resolved: dict  # effective settings, echoed to resolved.toml


def _require(condition: bool, key: str, constraint: str, value) -> None:
    if not condition:
        raise ConfigurationError(f"{key} must satisfy {constraint}, got {value!r}")


def _check_keys(mapping: dict, allowed: set, where: str) -> None:
    unknown = sorted(set(mapping) - allowed)
    if unknown:
        raise ConfigurationError(f"unknown key {unknown[0]!r} in {where}")


def _load_toml(path: str) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"cannot parse {path}: {exc}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="se2langevin",
        description="Hypocoercive Langevin dynamics on the planar motion group: "
        "verification, spectra, simulation, and decay-rate reports.",
    )
    parser.add_argument("command", nargs="?", choices=COMMANDS,
                        help="pipeline to run (may also come from the config file)")
    parser.add_argument("--config", metavar="FILE", help="TOML configuration file")
    parser.add_argument("--sigma", type=float, help="angular noise strength")
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument("--output-dir", "-o", help="artifact directory")
    parser.add_argument("--dump-matrices", action="store_true", default=None,
                        help="also write assembled operators as coordinate triples")
    parser.add_argument("--potential", choices=("quadratic", "double_well", "tabulated"),
                        help="potential kind")
    parser.add_argument("--a1", type=float, help="quadratic curvature, first axis")
    parser.add_argument("--a2", type=float, help="quadratic curvature, second axis")
    parser.add_argument("--height", type=float, help="double-well barrier height")
    parser.add_argument("--table", metavar="CSV", help="tabulated potential file")
    parser.add_argument("--box", type=float, help="half-width of the position box")
    parser.add_argument("--n1", type=int, help="grid nodes along the first axis")
    parser.add_argument("--n2", type=int, help="grid nodes along the second axis")
    parser.add_argument("--modes", type=int, help="angular Fourier truncation order")
    parser.add_argument("--dt", type=float, help="time step")
    parser.add_argument("--t-final", type=float, help="simulation horizon")
    parser.add_argument("--n-paths", type=int, help="ensemble size")
    parser.add_argument("--observable", help="observable name for series output")
    parser.add_argument("--initial", choices=("point", "equilibrium"),
                        help="initial law for simulations")
    return parser


def parse_config(argv: list[str]) -> RunConfig:
    """Merge TOML file and command line (flags win) into a validated RunConfig."""
    args = build_parser().parse_args(argv)

    file_cfg: dict = {}
    if args.config:
        file_cfg = _load_toml(args.config)
        _check_keys(file_cfg, _TOP_KEYS, args.config)

    pot_cfg = dict(file_cfg.get("potential", {}))
    disc_cfg = dict(file_cfg.get("discretization", {}))
    sim_cfg = dict(file_cfg.get("simulation", {}))
    _check_keys(pot_cfg, _POTENTIAL_KEYS, "[potential]")
    _check_keys(disc_cfg, _DISC_KEYS, "[discretization]")
    _check_keys(sim_cfg, _SIM_KEYS, "[simulation]")

    command = args.command or file_cfg.get("command")
    if command not in COMMANDS:
        raise ConfigurationError(
            f"command must be one of {', '.join(COMMANDS)}, got {command!r}"
        )

    sigma = args.sigma if args.sigma is not None else float(file_cfg.get("sigma", 1.0))
    _require(sigma > 0, "sigma", "> 0", sigma)
    seed = args.seed if args.seed is not None else int(file_cfg.get("seed", 0))
    _require(0 <= seed < 2**63, "seed", "0 <= seed < 2**63", seed)

    output_dir = (
        args.output_dir
        or os.environ.get(OUTPUT_DIR_ENV)
        or file_cfg.get("output_dir")
        or "out"
    )
    dump_matrices = (
        args.dump_matrices
        if args.dump_matrices is not None
        else bool(file_cfg.get("dump_matrices", False))
    )

    if args.potential is not None:
        pot_cfg["kind"] = args.potential
    pot_cfg.setdefault("kind", "quadratic")
    for key, flag in (("a1", args.a1), ("a2", args.a2), ("height", args.height),
                      ("table", args.table)):
        if flag is not None:
            pot_cfg["path" if key == "table" else key] = flag
    potential = from_config(pot_cfg)

    for key, flag in (("box", args.box), ("n1", args.n1), ("n2", args.n2),
                      ("modes", args.modes)):
        if flag is not None:
            disc_cfg[key] = flag
    box = float(disc_cfg.get("box", 7.5))
    _require(box > 0, "discretization.box", "> 0", box)
    n1 = int(disc_cfg.get("n1", 16))
    n2 = int(disc_cfg.get("n2", 16))
    n_modes = int(disc_cfg.get("modes", 3))
    _require(n1 >= 8, "discretization.n1", ">= 8", n1)
    _require(n2 >= 8, "discretization.n2", ">= 8", n2)
    _require(n_modes >= 2, "discretization.modes", ">= 2", n_modes)
    grid = Grid2D.centered(box, box, n1, n2)

    for key, flag in (("dt", args.dt), ("t_final", args.t_final),
                      ("n_paths", args.n_paths), ("observable", args.observable),
                      ("initial", args.initial)):
        if flag is not None:
            sim_cfg[key] = flag
    if "observable" in sim_cfg:
        resolve_observable(sim_cfg["observable"])  # fail fast on unknown names
    raw_point = sim_cfg.get("point", (0.0, 0.0, 0.0))
    _require(isinstance(raw_point, (list, tuple)) and len(raw_point) == 3,
             "simulation.point", "three coordinates", raw_point)
    point = tuple(float(x) for x in raw_point)

    sims: dict[str, SimConfig] = {}
    resolved_sims: dict[str, dict] = {}
    for purpose in _PURPOSES[command]:
        merged = dict(_SIM_DEFAULTS[purpose])
        merged.update({k: sim_cfg[k] for k in sim_cfg if k != "point"})
        initial = InitialLaw(kind=merged["initial"], point=GroupPoint(*point))
        sims[purpose] = SimConfig(
            potential=potential,
            sigma=sigma,
            dt=float(merged["dt"]),
            t_final=float(merged["t_final"]),
            n_paths=int(merged["n_paths"]),
            seed=derive_seed(seed, f"simulate-{purpose}"),
            initial=initial,
            mirrored=bool(merged.get("mirrored", False)),
        )
        resolved_sims[purpose] = {
            "dt": float(merged["dt"]),
            "t_final": float(merged["t_final"]),
            "n_paths": int(merged["n_paths"]),
            "observable": merged["observable"],
            "initial": merged["initial"],
            "point": list(point),
            "mirrored": bool(merged.get("mirrored", False)),
        }

    resolved = {
        "command": command,
        "sigma": sigma,
        "seed": seed,
        "output_dir": output_dir,
        "dump_matrices": dump_matrices,
        "potential": potential.to_config(),
        "discretization": {"box": box, "n1": n1, "n2": n2, "modes": n_modes},
        "simulation": resolved_sims,
    }
    return RunConfig(
        command=command,
        sigma=sigma,
        seed=seed,
        output_dir=output_dir,
        dump_matrices=dump_matrices,
        potential=potential,
        grid=grid,
        n_modes=n_modes,
        sims=sims,
        resolved=resolved,
    )


def _toml_scalar(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, list):
        return "[" + ", ".join(_toml_scalar(v) for v in value) + "]"
    return json.dumps(str(value))


def _write_resolved_toml(resolved: dict, path: str) -> None:
    lines = []
    tables = []
    for key in sorted(resolved):
        value = resolved[key]
        if isinstance(value, dict):
            tables.append((key, value))
        else:
            lines.append(f"{key} = {_toml_scalar(value)}")
    for name, table in tables:
        nested = [(k, v) for k, v in sorted(table.items()) if isinstance(v, dict)]
        flat = [(k, v) for k, v in sorted(table.items()) if not isinstance(v, dict)]
        if flat:
            lines.append(f"\n[{name}]")
            lines.extend(f"{k} = {_toml_scalar(v)}" for k, v in flat)
        for sub, subtable in nested:
            lines.append(f"\n[{name}.{sub}]")
            lines.extend(f"{k} = {_toml_scalar(v)}" for k, v in sorted(subtable.items()))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


# -- pipelines -------------------------------------------------------------------
# each returns {check name: bool} and writes its artifacts into out_dir


def _assembled(cfg: RunConfig):
    disc = build_discretization(cfg.potential, cfg.grid, cfg.n_modes)
    return assemble(OperatorParams(cfg.sigma, cfg.potential), disc)


def _pipeline_verify(cfg: RunConfig, out_dir: str) -> dict:
    checks: dict[str, bool] = {}
    quantities: dict[str, float] = {}
    seed = derive_seed(cfg.seed, "verify")

    if getattr(cfg.potential, "kind", "") == "quadratic":
        rng = np.random.default_rng(seed)
        params = OperatorParams(cfg.sigma, cfg.potential)
        worst_sandwich = worst_transport = worst_macro = worst_mean = 0.0
        for _ in range(200):
            f = random_test_function(rng)
            g = f.theta_average()
            worst_sandwich = max(worst_sandwich, float(sandwiched_transport_residual(f, params)))
            worst_transport = max(worst_transport, float(transport_of_average_residual(g, params)))
            worst_macro = max(worst_macro, float(macroscopic_identity_residual(g, params)))
            worst_mean = max(worst_mean, invariance_residual(f, params))
        quantities["symbolic_sandwich_residual"] = worst_sandwich
        quantities["symbolic_transport_residual"] = worst_transport
        quantities["symbolic_macroscopic_residual"] = worst_macro
        quantities["symbolic_invariance_residual"] = worst_mean
        checks["symbolic_identities"] = (
            worst_sandwich == 0.0 and worst_transport == 0.0 and worst_macro == 0.0
        )
        checks["symbolic_invariance"] = worst_mean <= 1e-12

    ops = _assembled(cfg)
    structure = structure_report(ops, seed=seed)
    identity = projection_identities(ops, seed=seed)
    quantities.update(
        {
            "discrete_symmetry_residual": structure.symmetry_residual,
            "discrete_antisymmetry_residual": structure.antisymmetry_residual,
            "discrete_projection_idempotency": structure.projection_idempotency,
            "discrete_projection_self_adjointness": structure.projection_self_adjointness,
            "discrete_sandwich_norm": identity.sandwich_norm,
            "discrete_macroscopic_residual": identity.macroscopic_relative_residual,
        }
    )
    checks["discrete_structure"] = (
        structure.symmetry_residual <= 1e-10
        and structure.antisymmetry_residual <= 1e-10
        and structure.projection_idempotency <= 1e-10
        and structure.projection_self_adjointness <= 1e-10
    )
    checks["discrete_sandwich"] = identity.sandwich_norm <= 1e-10
    checks["discrete_macroscopic"] = identity.macroscopic_relative_residual <= 1e-8

    rows = report_rows(quantities, ops.disc.resolution, seed)
    with open(os.path.join(out_dir, "identities.csv"), "w") as fh:
        fh.write("quantity,value,resolution,seed\n")
        fh.write("\n".join(rows) + "\n")
    return checks


def _pipeline_spectrum(cfg: RunConfig, out_dir: str) -> dict:
    seed = derive_seed(cfg.seed, "spectral")
    ops = _assembled(cfg)
    structure = structure_report(ops, seed=seed)
    identity = projection_identities(ops, seed=seed)
    gap = spectral_gap(ops, seed=seed)
    coercivity = coercivity_report(ops, seed=seed)
    elliptic = elliptic_report(ops, seed=seed)
    lam = poincare_macroscopic(ops, seed=seed)

    quantities = {
        "angular_gap": angular_gap(ops),
        "poincare_constant": lam,
        "spectral_gap": gap.gap,
        "microscopic_min_ratio": coercivity.microscopic_min_ratio,
        "macroscopic_min_ratio": coercivity.macroscopic_min_ratio,
        "elliptic_c1_observed": elliptic.c1_observed,
        "elliptic_c1_bound": elliptic.c1_bound,
        "elliptic_c2_estimate": elliptic.c2_estimate,
        "sandwich_norm": identity.sandwich_norm,
        "macroscopic_residual": identity.macroscopic_relative_residual,
        "symmetry_residual": structure.symmetry_residual,
        "antisymmetry_residual": structure.antisymmetry_residual,
    }
    rows = report_rows(quantities, ops.disc.resolution, seed)
    with open(os.path.join(out_dir, "spectrum.csv"), "w") as fh:
        fh.write("quantity,value,resolution,seed\n")
        fh.write("\n".join(rows) + "\n")

    if cfg.dump_matrices:
        matrix_dir = os.path.join(out_dir, "operators")
        os.makedirs(matrix_dir, exist_ok=True)
        for op in ops.operators():
            dump_matrix(op.matrix, os.path.join(matrix_dir, f"{op.role}.txt"))

    return {
        "identities": identity.sandwich_norm <= 1e-10
        and identity.macroscopic_relative_residual <= 1e-8,
        "gap_positive": gap.gap > 0,
        "microscopic_coercivity": coercivity.microscopic_min_ratio >= 1.0 - 1e-9,
        "macroscopic_coercivity": coercivity.macroscopic_min_ratio >= 0.95,
        "elliptic_c1_bound": elliptic.passed,
    }


def _pipeline_simulate(cfg: RunConfig, out_dir: str) -> dict:
    sim = cfg.sims["observable-series"]
    observable = cfg.resolved["simulation"]["observable-series"]["observable"]
    series = simulate_ensemble(sim, observable)
    write_series_csv(series, os.path.join(out_dir, "series.csv"))
    return {"simulation_completed": True}


def _pipeline_stationarity(cfg: RunConfig, out_dir: str) -> dict:
    sim = cfg.sims["stationarity"]
    report = stationarity_test(sim, burn_in=sim.t_final / 2, n_samples=sim.n_paths)
    quantities = {
        "chi2_statistic": report.chi2_statistic,
        "chi2_threshold": report.chi2_threshold,
        "ks_statistic": report.ks_statistic,
        "ks_p_value": report.ks_p_value,
        "n_samples": float(report.n_samples),
    }
    rows = report_rows(quantities, "-", sim.seed)
    with open(os.path.join(out_dir, "stationarity.csv"), "w") as fh:
        fh.write("quantity,value,resolution,seed\n")
        fh.write("\n".join(rows) + "\n")
    return {
        "position_marginal": report.position_pass,
        "angle_marginal": report.angle_pass,
    }


def _pipeline_rates(cfg: RunConfig, out_dir: str) -> dict:
    seed = derive_seed(cfg.seed, "spectral")
    ops = _assembled(cfg)
    lam = poincare_macroscopic(ops, seed=seed)
    elliptic = elliptic_report(ops, seed=seed)
    gap = spectral_gap(ops, seed=seed)

    sim = cfg.sims["autocovariance"]
    observable = cfg.resolved["simulation"]["autocovariance"]["observable"]
    series = ensemble_autocovariance(sim, observable, max_lag=sim.t_final)
    fit = autocovariance_rate(series)

    report = rates.build_report(
        sigma=cfg.sigma,
        lambda_poincare=lam,
        c1=elliptic.c1_bound,  # the sharp sigma^2/4 bound, not the sampled value
        c2=elliptic.c2_estimate,
        gap_spectral=gap.gap,
        kappa_empirical=fit.kappa_emp,
    )
    verdict = rates.validate(report)
    with open(os.path.join(out_dir, "rates.json"), "w") as fh:
        fh.write(report.to_json() + "\n")
    with open(os.path.join(out_dir, "rates.csv"), "w") as fh:
        fh.write(rates.RateReport.csv_header() + "\n")
        fh.write(report.to_csv_row() + "\n")
    return {"rate_bound_validated": verdict.passed}


_PIPELINES = {
    "verify-identities": (_pipeline_verify,),
    "spectrum": (_pipeline_spectrum,),
    "simulate": (_pipeline_simulate,),
    "stationarity": (_pipeline_stationarity,),
    "rates": (_pipeline_rates,),
    "full-report": (_pipeline_verify, _pipeline_spectrum, _pipeline_stationarity,
                    _pipeline_rates),
}


def run(cfg: RunConfig) -> int:
    """Execute the selected pipeline; write artifacts and summary; return exit code."""
    out_dir = cfg.output_dir
    os.makedirs(out_dir, exist_ok=True)
    _write_resolved_toml(cfg.resolved, os.path.join(out_dir, "resolved.toml"))
    started = datetime.now(timezone.utc).isoformat()

    checks: dict[str, bool] = {}
    failure: Exception | None = None
    for pipeline in _PIPELINES[cfg.command]:
        try:
            checks.update(pipeline(cfg, out_dir))
        except Exception as exc:  # keep partial artifacts, mark the run
            failure = exc
            break

    if failure is not None:
        with open(os.path.join(out_dir, "FAILED"), "w") as fh:
            fh.write(f"{type(failure).__name__}: {failure}\n")

    summary = {
        "command": cfg.command,
        "checks": {name: "PASS" if ok else "FAIL" for name, ok in sorted(checks.items())},
        "overall": "PASS" if checks and all(checks.values()) and failure is None else "FAIL",
    }
    if failure is not None:
        summary["error"] = f"{type(failure).__name__}: {failure}"
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(os.path.join(out_dir, "meta.json"), "w") as fh:
        json.dump({"started": started,
                   "finished": datetime.now(timezone.utc).isoformat()}, fh, indent=2)
        fh.write("\n")

    if failure is not None:
        print(f"error: {failure}", file=sys.stderr)
        if isinstance(failure, ConfigurationError):
            return 2
        if isinstance(failure, NumericalError):
            return 3
        raise failure
    for name, verdict in sorted(summary["checks"].items()):
        print(f"{name}: {verdict}")
    print(f"overall: {summary['overall']} (artifacts in {out_dir})")
    return 0 if summary["overall"] == "PASS" else 1


def main(argv: list[str] | None = None) -> int:
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    try:
        return run(cfg)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
