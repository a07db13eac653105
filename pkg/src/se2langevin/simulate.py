"""Monte Carlo integration of the planar run-and-turn Langevin dynamics.

The process moves a planar position along (minus) its heading direction at
unit speed while the heading angle feels the potential through the normal
component of its gradient and is kicked by Brownian noise.  Euler-Maruyama
is adequate here: the noise enters only the angle, additively.

Determinism contract: every path owns the generator derived from
(master seed, path index), and ensemble reduction happens over an array
ordered by path index, so results do not depend on block sizes or on how
paths are scheduled.  The scalar `step` is the reference semantics; the
vectorized kernel applies the same formulas through numpy, which may differ
from a pure-Python loop in the last bit but is itself fully reproducible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import (
    ConfigurationError,
    FitError,
    NumericalError,
    UnsupportedPotentialError,
)
from .geometry import TWO_PI, GroupPoint, wrap_angle
from .potentials import DoubleWell, Grid2D, Potential, Quadratic, gibbs_weights

PATH_BLOCK = 8192
STEP_CHUNK = 1000
MAX_SAMPLE_TIMES = 256
ABORT_FRACTION_LIMIT = 0.01
MIN_SAMPLER_ACCEPTANCE = 1e-3
ENSEMBLE_MEMORY_LIMIT = 2 * 1024**3  # bytes held by the per-path sample matrix


def wrap_angles(theta: np.ndarray) -> np.ndarray:
    """Vectorized reduction to [0, 2*pi); guards the representability edge."""
    out = np.mod(theta, TWO_PI)
    out[out >= TWO_PI] -= TWO_PI
    return out


# -- configuration -------------------------------------------------------------


@dataclass(frozen=True)
class InitialLaw:
    """Either a fixed starting point or the equilibrium measure."""

    kind: str  # "point" or "equilibrium"
    point: GroupPoint | None = None

    def __post_init__(self):
        if self.kind not in ("point", "equilibrium"):
            raise ConfigurationError(f"unknown initial law {self.kind!r}")
        if self.kind == "point" and self.point is None:
            raise ConfigurationError("point initial law needs a starting point")


@dataclass(frozen=True)
class SimConfig:
    sigma: float
    potential: Potential
    dt: float
    t_final: float
    n_paths: int
    seed: int = 0
    initial: InitialLaw = field(default_factory=lambda: InitialLaw("point", GroupPoint(0.0, 0.0, 0.0)))
    mirrored: bool = False  # flips the sign pairing of both drifts; same equilibrium

    def __post_init__(self):
        if self.sigma < 0:
            raise ConfigurationError(f"sigma must be nonnegative, got {self.sigma}")
        cap = 0.1 / max(1.0, self.sigma**2)
        if not 0 < self.dt <= cap:
            raise ConfigurationError(f"dt must lie in (0, {cap}] for sigma={self.sigma}, got {self.dt}")
        if self.t_final < self.dt:
            raise ConfigurationError("t_final must cover at least one step")
        if self.n_paths < 1:
            raise ConfigurationError("n_paths must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError("seed must fit in 64 bits")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))


def step(state: GroupPoint, cfg: SimConfig, noise: float) -> GroupPoint:
    """One Euler-Maruyama step; reference scalar semantics."""
    direction = 1.0 if cfg.mirrored else -1.0
    c, s = math.cos(state.theta), math.sin(state.theta)
    g1, g2 = cfg.potential.gradient(state.xi1, state.xi2)
    normal_force = -g1 * s + g2 * c  # gradient against the left-normal direction
    drift_theta = -direction * normal_force
    if not (math.isfinite(g1) and math.isfinite(g2)):
        raise NumericalError(f"non-finite drift at state {state}")
    return GroupPoint(
        state.xi1 + direction * c * cfg.dt,
        state.xi2 + direction * s * cfg.dt,
        wrap_angle(state.theta + drift_theta * cfg.dt + cfg.sigma * math.sqrt(cfg.dt) * noise),
    )


# -- observables ----------------------------------------------------------------

OBSERVABLES = {
    "xi1": lambda x1, x2, th: x1,
    "xi2": lambda x1, x2, th: x2,
    "xi_norm_sq": lambda x1, x2, th: x1**2 + x2**2,
    "cos_theta": lambda x1, x2, th: np.cos(th),
    "sin_theta": lambda x1, x2, th: np.sin(th),
    "theta": lambda x1, x2, th: np.asarray(th, dtype=float),
    "one": lambda x1, x2, th: np.ones_like(np.asarray(th, dtype=float)),
}


def resolve_observable(observable):
    if callable(observable):
        return observable
    try:
        return OBSERVABLES[observable]
    except KeyError:
        raise ConfigurationError(
            f"unknown observable {observable!r}; choose from {sorted(OBSERVABLES)}"
        ) from None


@dataclass(frozen=True)
class ObservableSeries:
    times: np.ndarray
    values: np.ndarray
    stderr: np.ndarray

    def __post_init__(self):
        t, v, e = map(np.asarray, (self.times, self.values, self.stderr))
        if not (t.shape == v.shape == e.shape):
            raise ConfigurationError("series components must share one shape")
        if t.size >= 2 and not np.all(np.diff(t) > 0):
            raise ConfigurationError("sample times must increase")
        if np.any(e < 0):
            raise ConfigurationError("standard errors cannot be negative")


def write_series_csv(series: ObservableSeries, path: str) -> None:
    with open(path, "w") as fh:
        fh.write("t,mean,stderr\n")
        for t, v, e in zip(series.times, series.values, series.stderr):
            fh.write(f"{float(t)!r},{float(v)!r},{float(e)!r}\n")


# -- equilibrium sampling --------------------------------------------------------


def _envelope_parameters(potential: Potential) -> tuple[float, float]:
    """Envelope variance and log rejection bound for e^{-Phi} under a Gaussian."""
    if isinstance(potential, Quadratic):
        return 0.0, 0.0  # marker: sample the target directly
    if isinstance(potential, DoubleWell):
        h = potential.height
        var = math.sqrt(1.0 + 1.0 / h)
        # maximize u/(2 var) - h (u - 1)^2 / 4 over u = |xi|^2 >= 0
        u_star = 1.0 + 1.0 / (h * var)
        log_m = u_star / (2.0 * var) - h * (u_star - 1.0) ** 2 / 4.0
        return var, log_m
    raise UnsupportedPotentialError(
        f"no equilibrium sampler for {type(potential).__name__}; built-in kinds only"
    )


def sample_equilibrium(potential: Potential, n: int, seed: int) -> np.ndarray:
    """Draw n states from the invariant measure; returns (n, 3) array.

    Positions by rejection under a centered Gaussian envelope, angles uniform.
    """
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x5A3D]))
    var, log_m = _envelope_parameters(potential)
    if isinstance(potential, Quadratic):
        x1 = rng.normal(0.0, 1.0 / math.sqrt(potential.a1), size=n)
        x2 = rng.normal(0.0, 1.0 / math.sqrt(potential.a2), size=n)
    else:
        sd = math.sqrt(var)
        x1 = np.empty(n)
        x2 = np.empty(n)
        filled = 0
        proposed = 0
        accepted = 0
        while filled < n:
            batch = max(2 * (n - filled), 1024)
            c1 = rng.normal(0.0, sd, size=batch)
            c2 = rng.normal(0.0, sd, size=batch)
            log_target = -potential.value(c1, c2)
            log_envelope = -(c1**2 + c2**2) / (2.0 * var) + log_m
            keep = np.log(rng.random(batch)) < log_target - log_envelope
            proposed += batch
            accepted += int(keep.sum())
            take = min(int(keep.sum()), n - filled)
            x1[filled : filled + take] = c1[keep][:take]
            x2[filled : filled + take] = c2[keep][:take]
            filled += take
            if proposed >= 10000 and accepted / proposed < MIN_SAMPLER_ACCEPTANCE:
                raise ConfigurationError(
                    f"equilibrium sampler acceptance {accepted / proposed:.2e} "
                    f"below {MIN_SAMPLER_ACCEPTANCE}; envelope mismatched"
                )
    theta = rng.random(n) * TWO_PI
    return np.column_stack([x1, x2, theta])


# -- vectorized ensemble ---------------------------------------------------------


def _initial_states(cfg: SimConfig, n: int) -> np.ndarray:
    if cfg.initial.kind == "point":
        p = cfg.initial.point
        out = np.empty((n, 3))
        out[:, 0], out[:, 1], out[:, 2] = p.xi1, p.xi2, p.theta
        return out
    return sample_equilibrium(cfg.potential, n, cfg.seed)


def _advance_block(
    states: np.ndarray,
    alive: np.ndarray,
    cfg: SimConfig,
    generators: list[np.random.Generator],
    n_steps: int,
    record_steps: np.ndarray,
    out: np.ndarray,
    observable,
) -> None:
    """March one block of paths, writing observable samples into `out`.

    `states` is (block, 3); `out` is (block, n_samples).  Paths that turn
    non-finite are frozen and flagged dead in `alive`.
    """
    direction = 1.0 if cfg.mirrored else -1.0
    root_dt = math.sqrt(cfg.dt)
    x1, x2, th = states[:, 0], states[:, 1], states[:, 2]
    record_at = {int(s): i for i, s in enumerate(record_steps)}
    if 0 in record_at:
        out[:, record_at[0]] = observable(x1, x2, th)
    done = 0
    while done < n_steps:
        chunk = min(STEP_CHUNK, n_steps - done)
        noise = np.empty((len(generators), chunk))
        for i, gen in enumerate(generators):
            noise[i] = gen.standard_normal(chunk)
        for j in range(chunk):
            c = np.cos(th)
            s = np.sin(th)
            g1, g2 = cfg.potential.gradient(x1, x2)
            x1 += direction * cfg.dt * c
            x2 += direction * cfg.dt * s
            th += -direction * cfg.dt * (-g1 * s + g2 * c) + cfg.sigma * root_dt * noise[:, j]
            np.mod(th, TWO_PI, out=th)
            th[th >= TWO_PI] -= TWO_PI
            bad = alive & ~(np.isfinite(x1) & np.isfinite(x2) & np.isfinite(th))
            if bad.any():
                alive[bad] = False
                x1[bad], x2[bad], th[bad] = 0.0, 0.0, 0.0  # frozen; excluded later
            idx = record_at.get(done + j + 1)
            if idx is not None:
                out[:, idx] = observable(x1, x2, th)
        done += chunk


def _sample_schedule(cfg: SimConfig, max_samples: int = MAX_SAMPLE_TIMES, at_times=None):
    n_steps = cfg.n_steps
    if at_times is not None:
        wanted = np.unique(np.round(np.asarray(at_times, dtype=float) / cfg.dt).astype(int))
        if wanted.size == 0 or wanted[0] < 0 or wanted[-1] > n_steps:
            raise ConfigurationError("requested sample times fall outside the horizon")
        return wanted, wanted * cfg.dt
    stride = max(1, int(math.ceil(n_steps / max_samples)))
    record_steps = np.arange(0, n_steps + 1, stride)
    if record_steps[-1] != n_steps:
        record_steps = np.append(record_steps, n_steps)
    return record_steps, record_steps * cfg.dt


def _path_generators(seed: int, lo: int, hi: int) -> list[np.random.Generator]:
    return [
        np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(i)])))
        for i in range(lo, hi)
    ]


def ensemble_samples(
    cfg: SimConfig, observable, at_times=None
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(times, per-path sample matrix, alive mask); the reduction substrate."""
    obs = resolve_observable(observable)
    record_steps, times = _sample_schedule(cfg, at_times=at_times)
    n_samples = len(record_steps)
    if cfg.n_paths * n_samples * 8 > ENSEMBLE_MEMORY_LIMIT:
        raise ConfigurationError(
            f"{cfg.n_paths} paths x {n_samples} sample times exceeds the memory guard"
        )
    samples = np.empty((cfg.n_paths, n_samples))
    alive = np.ones(cfg.n_paths, dtype=bool)
    starts = _initial_states(cfg, cfg.n_paths)
    for lo in range(0, cfg.n_paths, PATH_BLOCK):
        hi = min(lo + PATH_BLOCK, cfg.n_paths)
        _advance_block(
            starts[lo:hi],
            alive[lo:hi],
            cfg,
            _path_generators(cfg.seed, lo, hi),
            cfg.n_steps,
            record_steps,
            samples[lo:hi],
            obs,
        )
    aborted = int((~alive).sum())
    if aborted > ABORT_FRACTION_LIMIT * cfg.n_paths:
        raise NumericalError(
            f"{aborted}/{cfg.n_paths} paths hit non-finite states; dynamics unstable at dt={cfg.dt}"
        )
    return times, samples, alive


def simulate_ensemble(cfg: SimConfig, observable, at_times=None) -> ObservableSeries:
    """Ensemble mean of the observable at the sample times, with standard errors."""
    times, samples, alive = ensemble_samples(cfg, observable, at_times=at_times)
    live = samples[alive]
    n = live.shape[0]
    mean = live.sum(axis=0) / n
    if n > 1:
        var = np.square(live - mean).sum(axis=0) / (n - 1)
        err = np.sqrt(var / n)
    else:
        err = np.zeros_like(mean)
    return ObservableSeries(times=times, values=mean, stderr=err)


def ensemble_final_states(cfg: SimConfig) -> tuple[np.ndarray, np.ndarray]:
    """States of all paths at t_final, (n_paths, 3), plus the alive mask."""
    states = _initial_states(cfg, cfg.n_paths)
    alive = np.ones(cfg.n_paths, dtype=bool)
    no_records = np.empty(0, dtype=int)
    for lo in range(0, cfg.n_paths, PATH_BLOCK):
        hi = min(lo + PATH_BLOCK, cfg.n_paths)
        _advance_block(
            states[lo:hi],
            alive[lo:hi],
            cfg,
            _path_generators(cfg.seed, lo, hi),
            cfg.n_steps,
            no_records,
            np.empty((hi - lo, 0)),
            OBSERVABLES["one"],
        )
    aborted = int((~alive).sum())
    if aborted > ABORT_FRACTION_LIMIT * cfg.n_paths:
        raise NumericalError(
            f"{aborted}/{cfg.n_paths} paths hit non-finite states; dynamics unstable at dt={cfg.dt}"
        )
    return states, alive


def dump_trajectory_csv(cfg: SimConfig, path: str, max_rows: int = 2_000_000) -> None:
    """Full state dump `t,xi1,xi2,theta,path_id`, size-guarded."""
    record_steps, times = _sample_schedule(cfg)
    total = cfg.n_paths * len(record_steps)
    if total > max_rows:
        raise ConfigurationError(
            f"trajectory dump of {total} rows exceeds the {max_rows} row guard"
        )
    columns = {}
    for name in ("xi1", "xi2", "theta"):
        _, samples, _ = ensemble_samples(cfg, name)
        columns[name] = samples
    with open(path, "w") as fh:
        fh.write("t,xi1,xi2,theta,path_id\n")
        for pid in range(cfg.n_paths):
            for j, t in enumerate(times):
                fh.write(
                    f"{float(t)!r},{float(columns['xi1'][pid, j])!r},"
                    f"{float(columns['xi2'][pid, j])!r},"
                    f"{float(columns['theta'][pid, j])!r},{pid}\n"
                )


# -- stationarity ----------------------------------------------------------------


@dataclass(frozen=True)
class StationarityReport:
    chi2_statistic: float
    chi2_threshold: float
    position_pass: bool
    ks_statistic: float
    ks_p_value: float
    angle_pass: bool
    n_samples: int

    @property
    def passed(self) -> bool:
        return self.position_pass and self.angle_pass


def _quantile_edges(mass: np.ndarray, boundaries: np.ndarray, n_cells: int) -> np.ndarray:
    """Interior cell edges near the quantiles of a discrete 1-d marginal.

    Edges snap to the quadrature cell boundaries so that no quadrature mass
    ever straddles an edge; cutting columns would bias every expected cell
    mass by up to one column and inflate the chi-squared statistic far above
    its nominal distribution.  Snapping only perturbs how equal the cell
    masses are, which the test does not rely on.
    """
    cum = np.concatenate([[0.0], np.cumsum(mass)])
    cum /= cum[-1]
    targets = np.arange(1, n_cells) / n_cells
    idx = np.searchsorted(cum, targets)
    for j in range(1, len(idx)):  # keep edges strictly increasing
        if idx[j] <= idx[j - 1]:
            idx[j] = idx[j - 1] + 1
    if idx[-1] >= len(boundaries):
        raise NumericalError("quadrature grid too coarse for the requested cell count")
    return boundaries[idx]


def stationarity_report(
    states: np.ndarray, potential: Potential, n_cells: int = 16, significance: float = 0.01
) -> StationarityReport:
    """Position chi-squared against the Gibbs density plus angle KS against uniform.

    Cells are quantile rectangles of the position marginals; expected masses
    come from fine-grid quadrature, so non-product densities are handled too.
    """
    n = states.shape[0]
    span = 1.2 * float(np.abs(states[:, :2]).max()) + 1.0
    grid = Grid2D.centered(span, span, 256, 256)
    mass = gibbs_weights(potential, grid)
    mass /= mass.sum()
    x1c = grid.nodes()[0]
    x2c = grid.nodes()[1]
    bounds1 = np.linspace(grid.x1_min, grid.x1_max, grid.n1 + 1)
    bounds2 = np.linspace(grid.x2_min, grid.x2_max, grid.n2 + 1)
    edges1 = _quantile_edges(mass.sum(axis=1), bounds1, n_cells)
    edges2 = _quantile_edges(mass.sum(axis=0), bounds2, n_cells)
    # expected cell masses by aggregating the quadrature grid; exact because
    # the edges coincide with quadrature cell boundaries
    idx1 = np.searchsorted(edges1, x1c)
    idx2 = np.searchsorted(edges2, x2c)
    expected = np.zeros((n_cells, n_cells))
    np.add.at(expected, (idx1[:, None].repeat(256, 1), idx2[None, :].repeat(256, 0)), mass)
    if expected.min() <= 0:
        raise NumericalError("degenerate cell partition: an expected cell mass vanished")
    observed = np.zeros((n_cells, n_cells))
    s1 = np.searchsorted(edges1, states[:, 0])
    s2 = np.searchsorted(edges2, states[:, 1])
    np.add.at(observed, (s1, s2), 1.0)
    chi2_stat = float(np.sum((observed - n * expected) ** 2 / (n * expected)))
    dof = n_cells * n_cells - 1
    threshold = float(stats.chi2.ppf(1.0 - significance, dof))
    ks_stat, ks_p = stats.kstest(states[:, 2] / TWO_PI, "uniform")
    return StationarityReport(
        chi2_statistic=chi2_stat,
        chi2_threshold=threshold,
        position_pass=chi2_stat <= threshold,
        ks_statistic=float(ks_stat),
        ks_p_value=float(ks_p),
        angle_pass=ks_p >= significance,
        n_samples=n,
    )


def stationarity_test(
    cfg: SimConfig, burn_in: float, n_samples: int, significance: float = 0.01
) -> StationarityReport:
    """Run equilibrium-started dynamics and test the invariance of the measure.

    The harvest happens at t_final, one state per path, so the samples stay
    independent; burn_in only asserts the horizon is long enough to expose a
    sign error through drift away from equilibrium.
    """
    if cfg.initial.kind != "equilibrium":
        raise ConfigurationError("stationarity test requires the equilibrium initial law")
    if not 0 <= burn_in <= cfg.t_final:
        raise ConfigurationError("burn_in must lie inside the simulated horizon")
    states, alive = ensemble_final_states(cfg)
    states = states[alive]
    if states.shape[0] < n_samples:
        raise ConfigurationError(
            f"{states.shape[0]} surviving paths cannot provide {n_samples} independent samples"
        )
    return stationarity_report(states[:n_samples], cfg.potential, significance=significance)


# -- autocovariance ----------------------------------------------------------------


def ensemble_autocovariance(cfg: SimConfig, observable, max_lag: float) -> ObservableSeries:
    """Stationary autocovariance from equilibrium-started independent paths."""
    if cfg.initial.kind != "equilibrium":
        raise ConfigurationError("autocovariance requires the equilibrium initial law")
    times, samples, alive = ensemble_samples(cfg, observable)
    live = samples[alive]
    keep = times <= max_lag
    times = times[keep]
    live = live[:, keep]
    grand_mean = float(live.mean())
    initial = live[:, 0] - grand_mean
    centered = live - grand_mean
    products = centered * initial[:, None]
    n = products.shape[0]
    mean = products.sum(axis=0) / n
    var = np.square(products - mean).sum(axis=0) / (n - 1)
    return ObservableSeries(times=times, values=mean, stderr=np.sqrt(var / n))


def _single_trajectory_samples(cfg: SimConfig, record_stride: int) -> np.ndarray:
    """One path, scalar integration, state recorded every record_stride steps.

    Uses the path-0 noise stream.  A plain Python loop beats the vectorized
    kernel on a single path by a wide margin.
    """
    gen = _path_generators(cfg.seed, 0, 1)[0]
    direction = 1.0 if cfg.mirrored else -1.0
    root_dt = math.sqrt(cfg.dt)
    start = _initial_states(cfg, 1)[0]
    x1, x2, th = float(start[0]), float(start[1]), float(start[2])
    n_steps = cfg.n_steps
    grad = cfg.potential.gradient
    out = np.empty((n_steps // record_stride + 1, 3))
    out[0] = x1, x2, th
    written = 1
    done = 0
    while done < n_steps:
        chunk = min(STEP_CHUNK, n_steps - done)
        noise = gen.standard_normal(chunk)
        for j in range(chunk):
            c = math.cos(th)
            s = math.sin(th)
            g1, g2 = grad(x1, x2)
            x1 += direction * cfg.dt * c
            x2 += direction * cfg.dt * s
            th += -direction * cfg.dt * (-g1 * s + g2 * c) + cfg.sigma * root_dt * noise[j]
            th = th % TWO_PI
            if th >= TWO_PI:
                th -= TWO_PI
            step_index = done + j + 1
            if step_index % record_stride == 0:
                out[written] = x1, x2, th
                written += 1
        done += chunk
    if not np.isfinite(out[:written]).all():
        raise NumericalError("the single trajectory hit a non-finite state")
    return out[:written]


def trajectory_autocovariance(
    cfg: SimConfig, observable, max_lag: float, n_batches: int = 20, sample_stride: int = 10
) -> ObservableSeries:
    """Stationary autocovariance from one long path via batched means.

    The configured n_paths is ignored: a single trajectory of length t_final
    is split into `n_batches` stretches whose per-stretch estimates give the
    spread.
    """
    if cfg.initial.kind != "equilibrium":
        raise ConfigurationError("autocovariance requires the equilibrium initial law")
    obs = resolve_observable(observable)
    states = _single_trajectory_samples(cfg, sample_stride)
    sample_dt = cfg.dt * sample_stride
    n_lags = int(max_lag / sample_dt) + 1
    series = obs(states[:, 0], states[:, 1], states[:, 2])
    series = series - series.mean()
    usable = len(series) - n_lags
    if usable < n_batches * 2:
        raise ConfigurationError(
            f"trajectory too short: {usable} usable offsets for {n_batches} batches"
        )
    bounds = np.linspace(0, usable, n_batches + 1, dtype=int)
    lags = np.arange(n_lags)
    per_batch = np.empty((n_batches, n_lags))
    for b in range(n_batches):
        lo, hi = bounds[b], bounds[b + 1]
        base = series[lo:hi]
        for ell in lags:
            per_batch[b, ell] = float(np.mean(base * series[lo + ell : hi + ell]))
    mean = per_batch.mean(axis=0)
    spread = per_batch.std(axis=0, ddof=1) / math.sqrt(n_batches)
    return ObservableSeries(times=lags * sample_dt, values=mean, stderr=spread)


# -- decay fitting -------------------------------------------------------------------


@dataclass(frozen=True)
class DecayFit:
    kappa_emp: float
    r_squared: float
    n_points: int
    window: tuple[float, float]
    oscillatory: bool = False
    angular_frequency: float = 0.0


def decay_rate_fit(
    series: ObservableSeries, window: tuple[float, float], limit: float = 0.0
) -> DecayFit:
    """Least-squares exponential rate of |value - limit| over the time window."""
    t0, t1 = window
    mask = (series.times >= t0) & (series.times <= t1)
    if int(mask.sum()) < 5:
        raise FitError(f"only {int(mask.sum())} points in window [{t0}, {t1}]; need 5")
    y = series.values[mask] - limit
    if np.any(y <= 0):
        lo = float(np.min(y))
        raise FitError(f"nonpositive values (min {lo}) after limit removal; cannot take logs")
    t = series.times[mask]
    logy = np.log(y)
    slope, intercept = np.polyfit(t, logy, 1)
    fitted = slope * t + intercept
    ss_res = float(np.sum((logy - fitted) ** 2))
    ss_tot = float(np.sum((logy - logy.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(
        kappa_emp=float(-slope),
        r_squared=r2,
        n_points=int(mask.sum()),
        window=(float(t0), float(t1)),
    )


def damped_oscillation_fit(series: ObservableSeries) -> DecayFit:
    """Rate of a decaying oscillation A e^{-rt} cos(wt + phase).

    Stationary autocovariances here typically sit on a complex eigenvalue
    pair, so the plain log fit is systematically wrong for them; this model
    captures both the rate and the rotation.  Initial guesses come from the
    spacing and heights of the extrema of |value|; points are weighted by
    the reported standard errors when present.
    """
    from scipy.optimize import curve_fit

    t = np.asarray(series.times, dtype=float)
    y = np.asarray(series.values, dtype=float)
    if len(t) < 8:
        raise FitError(f"need at least 8 points to fit an oscillation, got {len(t)}")
    mag = np.abs(y)
    ext_t, ext_v = [t[0]], [mag[0]]
    for i in range(1, len(t) - 1):
        if mag[i] >= mag[i - 1] and mag[i] >= mag[i + 1] and mag[i] > 0:
            ext_t.append(t[i])
            ext_v.append(mag[i])
    if len(ext_t) >= 3 and ext_v[1] > 0:
        rate0 = max(1e-3, math.log(ext_v[0] / max(ext_v[-1], 1e-300)) / (ext_t[-1] - ext_t[0]))
        omega0 = math.pi / float(np.median(np.diff(ext_t)))
    else:
        rate0, omega0 = 1.0, 1.0
    amp0 = float(mag[0]) or 1.0

    def model(tt, amp, rate, omega, phase):
        return amp * np.exp(-rate * tt) * np.cos(omega * tt + phase)

    err = np.asarray(series.stderr, dtype=float)
    weights = err if np.all(err > 0) else None
    try:
        params, _ = curve_fit(
            model,
            t,
            y,
            p0=(amp0, rate0, omega0, 0.0),
            sigma=weights,
            maxfev=20000,
        )
    except RuntimeError as exc:
        raise FitError(f"oscillation fit did not converge: {exc}") from exc
    amp, rate, omega, _ = params
    fitted = model(t, *params)
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    if rate <= 0:
        raise FitError(f"oscillation fit found nonpositive rate {rate}")
    return DecayFit(
        kappa_emp=float(rate),
        r_squared=r2,
        n_points=len(t),
        window=(float(t[0]), float(t[-1])),
        oscillatory=True,
        angular_frequency=abs(float(omega)),
    )


def autocovariance_rate(series: ObservableSeries) -> DecayFit:
    """Decay rate of a stationary autocovariance, oscillation-aware.

    Sign changes in the series select the damped-oscillation model;
    otherwise the plain log-linear fit on the full window applies.
    """
    signs = np.sign(series.values[np.abs(series.values) > 0])
    if len(signs) and np.any(signs[:-1] != signs[1:]):
        return damped_oscillation_fit(series)
    return decay_rate_fit(series, (float(series.times[0]), float(series.times[-1])))
