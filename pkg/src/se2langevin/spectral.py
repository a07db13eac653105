"""Grid discretization of the kinetic operators and its structure checks.

Angle dependence is handled spectrally in a truncated real Fourier basis
(orthonormalized: 1, sqrt(2) cos k, sqrt(2) sin k for k = 1..K), position by
centered second-order differences on a cell-centered tensor grid with
one-sided closures at the box boundary.  Operators are stored in the
orthonormal frame obtained by multiplying grid functions by the square root
of the Gibbs weights: in that frame the weighted inner product is the plain
dot product, the angular diffusion is diagonal, and the transport operator is
skew-symmetric *by construction*, because its drift multipliers are defined
as twice the symmetric part of the conjugated derivative matrices, which
reproduces, entry for entry, the cancellation that makes the continuum
transport antisymmetric.

The macroscopic (angle-averaged) diffusion block is assembled from the same
derivative and multiplier matrices, so the sandwich identity
"average o transport o transport o average = macroscopic block" holds to
matrix-product rounding rather than to discretization order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, sparse
from scipy.sparse.linalg import LinearOperator, eigsh, expm_multiply, splu

from .errors import ConfigurationError, NumericalError
from .operators import OperatorParams
from .potentials import Grid2D, check_box, gibbs_weights

DIMENSION_CAP = 40000
POWER_ITER_PROBES = 20
POWER_ITER_MAX = 200
POWER_ITER_RTOL = 1e-10
DENSE_EIG_LIMIT = 5000
DECAY_FIT_PROBES = 30
DECAY_FIT_MIN_R2 = 0.99


# -- angle-side matrices ------------------------------------------------------


def fourier_modes(n_modes: int) -> list[tuple[int, str]]:
    """Basis ordering: constant, then (cos, sin) pairs per wavenumber."""
    out = [(0, "c")]
    for k in range(1, n_modes + 1):
        out += [(k, "c"), (k, "s")]
    return out


def _angle_matrices(n_modes: int):
    """Derivative and cos/sin multiplication matrices in the orthonormal basis."""
    modes = fourier_modes(n_modes)
    m = len(modes)
    pos = {mk: i for i, mk in enumerate(modes)}
    deriv = np.zeros((m, m))
    mul_cos = np.zeros((m, m))
    mul_sin = np.zeros((m, m))
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    for j, (k, p) in enumerate(modes):
        if k > 0:
            # d/dtheta swaps the phase pair and scales by the wavenumber
            if p == "c":
                deriv[pos[(k, "s")], j] = -float(k)
            else:
                deriv[pos[(k, "c")], j] = float(k)
        # products reduce to neighboring wavenumbers; couplings to the
        # constant mode carry 1/sqrt(2) from the normalization
        if p == "c":
            if k == 0:
                mul_cos[pos[(1, "c")], j] = inv_sqrt2
                mul_sin[pos[(1, "s")], j] = inv_sqrt2
            else:
                down = pos[(k - 1, "c")] if k > 1 else pos[(0, "c")]
                mul_cos[down, j] = 0.5 if k > 1 else inv_sqrt2
                if k + 1 <= n_modes:
                    mul_cos[pos[(k + 1, "c")], j] = 0.5
                    mul_sin[pos[(k + 1, "s")], j] = 0.5
                if k > 1:
                    mul_sin[pos[(k - 1, "s")], j] = -0.5
        else:
            down_c = pos[(k - 1, "c")] if k > 1 else pos[(0, "c")]
            mul_sin[down_c, j] = 0.5 if k > 1 else inv_sqrt2
            if k + 1 <= n_modes:
                mul_sin[pos[(k + 1, "c")], j] = -0.5
                mul_cos[pos[(k + 1, "s")], j] = 0.5
            if k > 1:
                mul_cos[pos[(k - 1, "s")], j] = 0.5
    return modes, deriv, mul_cos, mul_sin


# -- position-side matrices ---------------------------------------------------


def _centered_derivative(n: int, h: float) -> sparse.csr_matrix:
    """Second-order first derivative; one-sided rows at both ends."""
    d = sparse.lil_matrix((n, n))
    inv = 1.0 / (2.0 * h)
    d[0, 0], d[0, 1], d[0, 2] = -3.0 * inv, 4.0 * inv, -1.0 * inv
    for i in range(1, n - 1):
        d[i, i - 1] = -inv
        d[i, i + 1] = inv
    d[n - 1, n - 3], d[n - 1, n - 2], d[n - 1, n - 1] = 1.0 * inv, -4.0 * inv, 3.0 * inv
    return d.tocsr()


# -- discretization container -------------------------------------------------


@dataclass(frozen=True)
class Discretization:
    """Grid, Fourier truncation, and normalized Gibbs node weights."""

    grid: Grid2D
    n_modes: int
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.n_modes < 2:
            raise ConfigurationError(f"need at least 2 Fourier modes, got {self.n_modes}")
        if self.dim > DIMENSION_CAP:
            raise ConfigurationError(
                f"total dimension {self.dim} exceeds cap {DIMENSION_CAP}; coarsen the grid"
            )
        w = self.weights
        if w.shape != (self.n_nodes,) or not np.all(w > 0) or not np.isfinite(w).all():
            raise ConfigurationError("weights must be positive and finite on every node")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ConfigurationError("weights must sum to one")

    @property
    def n_nodes(self) -> int:
        return self.grid.n1 * self.grid.n2

    @property
    def n_angular(self) -> int:
        return 2 * self.n_modes + 1

    @property
    def dim(self) -> int:
        return self.n_nodes * self.n_angular

    @property
    def resolution(self) -> str:
        return f"{self.grid.n1}x{self.grid.n2}x{self.n_angular}"

    @property
    def descriptor(self) -> str:
        g = self.grid
        return f"{self.resolution};box=[{g.x1_min},{g.x1_max}]x[{g.x2_min},{g.x2_max}]"


def build_discretization(potential, grid: Grid2D, n_modes: int) -> Discretization:
    """Validate the box against the Gibbs tail and normalize node weights."""
    check_box(potential, grid)
    w = gibbs_weights(potential, grid).ravel()
    w = w / w.sum()
    return Discretization(grid=grid, n_modes=n_modes, weights=w)


@dataclass
class OperatorSet:
    """Assembled sparse operators in the orthonormal (weight-conjugated) frame.

    Roles: angular_diffusion (symmetric part), transport (skew part),
    generator = angular_diffusion - transport, angle_average / centered_average
    (projections), macroscopic (angle-averaged diffusion block, stored on the
    position grid and acting on the leading mode block of the full space).
    """

    disc: Discretization
    params: OperatorParams
    angular_diffusion: sparse.csr_matrix
    transport: sparse.csr_matrix
    generator: sparse.csr_matrix
    angle_average: sparse.csr_matrix
    macroscopic: sparse.csr_matrix
    constant_direction: np.ndarray  # unit vector spanning constants
    mode_wavenumbers: np.ndarray  # wavenumber of each basis mode

    def centered_average_matvec(self, v: np.ndarray) -> np.ndarray:
        """Projection onto mean-zero angle averages (self-adjoint, idempotent)."""
        out = self.angle_average @ v
        u = self.constant_direction
        return out - u * (u @ v)

    def centered_average_operator(self) -> LinearOperator:
        return LinearOperator(
            (self.disc.dim, self.disc.dim),
            matvec=self.centered_average_matvec,
            rmatvec=self.centered_average_matvec,
        )

    def macroscopic_embedded_matvec(self, v: np.ndarray) -> np.ndarray:
        """Macroscopic block acting on the leading mode block of the full space."""
        n = self.disc.n_nodes
        out = np.zeros_like(v)
        out[:n] = self.macroscopic @ v[:n]
        return out

    def interior_row_mask(self) -> np.ndarray:
        """True away from the outermost node ring, tiled over all modes."""
        n1, n2 = self.disc.grid.n1, self.disc.grid.n2
        mask = np.zeros((n1, n2), dtype=bool)
        mask[1:-1, 1:-1] = True
        return np.tile(mask.ravel(), self.disc.n_angular)

    def artifact_directions(self) -> np.ndarray:
        """Orthonormal basis of the centered-difference parity artifacts.

        Centered stencils decouple odd and even nodes; the boundary closures
        re-couple them only through rows whose equilibrium weight is tiny, so
        the three alternating-sign patterns on the position grid act as
        spurious near-kernel directions of the generator.  Columns returned
        here span them (orthonormalized against the constants direction) so
        spectral estimates can project them out.
        """
        n1, n2 = self.disc.grid.n1, self.disc.grid.n2
        root_w = np.sqrt(self.disc.weights)
        sign1 = np.tile((-1.0) ** np.arange(n1)[:, None], (1, n2))
        sign2 = np.tile((-1.0) ** np.arange(n2)[None, :], (n1, 1))
        patterns = [sign1, sign2, sign1 * sign2]
        dim = self.disc.dim
        columns = []
        basis = [self.constant_direction]
        for pat in patterns:
            q = np.zeros(dim)
            q[: self.disc.n_nodes] = root_w * pat.ravel()
            for prev in basis:
                q -= prev * (prev @ q)
            q /= np.linalg.norm(q)
            basis.append(q)
            columns.append(q)
        return np.column_stack(columns)

    def operators(self) -> list["DiscreteOperator"]:
        """Role-tagged views of the assembled matrices, for dumps and audits.

        The centered average is included only when its explicit form stays
        sparse in practice (the rank-one mean correction fills an n-by-n
        block); the regularizer never appears here because it is dense and
        lives behind a linear solve instead.
        """
        meta = {
            "sigma": float(self.params.sigma),
            "potential": _potential_id(self.params.potential),
            "discretization": self.disc.descriptor,
        }
        named = [
            ("angular_diffusion", self.angular_diffusion),
            ("transport", self.transport),
            ("generator", self.generator),
            ("angle_average", self.angle_average),
            ("macroscopic", self.macroscopic),
        ]
        out = [DiscreteOperator(role, matrix, meta) for role, matrix in named]
        if self.disc.n_nodes <= 2048:
            u = self.constant_direction[: self.disc.n_nodes]
            mean_block = sparse.csr_matrix(np.outer(u, u))
            centered = (
                self.angle_average
                - sparse.block_diag(
                    [mean_block]
                    + [sparse.csr_matrix((self.disc.n_nodes,) * 2)] * (self.disc.n_angular - 1),
                    format="csr",
                )
            ).tocsr()
            out.append(DiscreteOperator("centered_average", centered, meta))
        return out


@dataclass(frozen=True)
class DiscreteOperator:
    """One assembled matrix with its role and provenance stamp."""

    role: str
    matrix: sparse.spmatrix
    metadata: dict


def _potential_id(potential) -> str:
    cfg = potential.to_config()
    inner = ",".join(f"{k}={cfg[k]}" for k in sorted(cfg) if k != "kind")
    return f"{cfg['kind']}({inner})"


def assemble(params: OperatorParams, disc: Discretization) -> OperatorSet:
    """Build all discrete operators for the given model on the given grid."""
    grid = disc.grid
    n1, n2, n = grid.n1, grid.n2, disc.n_nodes
    modes, deriv, mul_cos, mul_sin = _angle_matrices(disc.n_modes)
    m = len(modes)
    wavenumbers = np.array([k for k, _ in modes], dtype=float)

    root_w = np.sqrt(disc.weights)
    scale = sparse.diags(root_w)
    unscale = sparse.diags(1.0 / root_w)

    d1 = sparse.kron(_centered_derivative(n1, grid.h1), sparse.identity(n2), format="csr")
    d2 = sparse.kron(sparse.identity(n1), _centered_derivative(n2, grid.h2), format="csr")
    d1 = (scale @ d1 @ unscale).tocsr()
    d2 = (scale @ d2 @ unscale).tocsr()
    # twice the symmetric parts: consistent second-order representations of
    # multiplication by the respective potential-gradient components
    m1 = (d1 + d1.T).tocsr()
    m2 = (d2 + d2.T).tocsr()

    sp = lambda a: sparse.csr_matrix(a)
    transport = (
        sparse.kron(sp(mul_cos), d1)
        + sparse.kron(sp(mul_sin), d2)
        + sparse.kron(sp(mul_sin @ deriv), m1)
        - sparse.kron(sp(mul_cos @ deriv), m2)
    ).tocsr()

    half_s2 = 0.5 * float(params.sigma) ** 2
    angular = sparse.diags(np.repeat(-half_s2 * wavenumbers**2, n)).tocsr()

    avg = sparse.diags(np.repeat((wavenumbers == 0).astype(float), n)).tocsr()

    macroscopic = (0.5 * (d1 @ d1 + d2 @ d2) - 0.5 * (m1 @ d1 + m2 @ d2)).tocsr()

    u = np.zeros(n * m)
    u[:n] = root_w
    u /= np.linalg.norm(u)

    return OperatorSet(
        disc=disc,
        params=params,
        angular_diffusion=angular,
        transport=transport,
        generator=(angular - transport).tocsr(),
        angle_average=avg,
        macroscopic=macroscopic,
        constant_direction=u,
        mode_wavenumbers=wavenumbers,
    )


# -- norm estimation ----------------------------------------------------------


def operator_norm(op, dim: int, seed: int, probes: int = POWER_ITER_PROBES) -> float:
    """2-norm estimate: power iteration on op^T op from seeded random starts."""
    if sparse.issparse(op):
        mat = op.tocsr()
        matvec, rmatvec = mat.__matmul__, mat.T.__matmul__
    else:
        matvec, rmatvec = op.matvec, op.rmatvec
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(probes):
        v = rng.standard_normal(dim)
        v /= np.linalg.norm(v)
        prev = 0.0
        for _ in range(POWER_ITER_MAX):
            w = matvec(v)
            nw = np.linalg.norm(w)
            if nw == 0.0 or not np.isfinite(nw):
                prev = nw if np.isfinite(nw) else prev
                break
            z = rmatvec(w)
            nz = np.linalg.norm(z)
            if nz == 0.0:
                prev = nw
                break
            est = nw  # |op v| with |v| = 1: Rayleigh estimate of the top singular value
            if abs(est - prev) <= POWER_ITER_RTOL * max(est, 1e-300):
                prev = est
                break
            prev = est
            v = z / nz
        best = max(best, prev)
    return best


# -- structure and identity reports -------------------------------------------


@dataclass(frozen=True)
class StructureReport:
    symmetry_residual: float
    antisymmetry_residual: float
    projection_idempotency: float
    projection_self_adjointness: float
    diffusion_positive_part: float

    def max_residual(self) -> float:
        return max(
            self.symmetry_residual,
            self.antisymmetry_residual,
            self.projection_idempotency,
            self.projection_self_adjointness,
            self.diffusion_positive_part,
        )


def structure_report(ops: OperatorSet, seed: int = 0, probes: int = 10) -> StructureReport:
    """Relative residuals of the algebraic structure contracts."""
    s, a = ops.angular_diffusion, ops.transport
    s_scale = operator_norm(s, ops.disc.dim, seed) or 1.0
    a_scale = operator_norm(a, ops.disc.dim, seed + 1) or 1.0
    sym = operator_norm((s - s.T).tocsr(), ops.disc.dim, seed + 2, probes) / s_scale
    antisym = operator_norm((a + a.T).tocsr(), ops.disc.dim, seed + 3, probes) / a_scale
    # diagonal operator: the positive part of the spectrum is directly visible
    positive_part = float(max(s.diagonal().max(), 0.0)) / s_scale

    rng = np.random.default_rng(seed + 4)
    idem = 0.0
    self_adj = 0.0
    for _ in range(probes):
        v = rng.standard_normal(ops.disc.dim)
        w = rng.standard_normal(ops.disc.dim)
        pv = ops.centered_average_matvec(v)
        ppv = ops.centered_average_matvec(pv)
        idem = max(idem, float(np.linalg.norm(ppv - pv) / np.linalg.norm(v)))
        lhs = float(np.dot(ops.centered_average_matvec(v), w))
        rhs = float(np.dot(v, ops.centered_average_matvec(w)))
        self_adj = max(
            self_adj,
            abs(lhs - rhs) / (np.linalg.norm(v) * np.linalg.norm(w)),
        )
    return StructureReport(sym, antisym, idem, self_adj, positive_part)


@dataclass(frozen=True)
class IdentityReport:
    sandwich_norm: float  # |average . transport . average|
    macroscopic_relative_residual: float  # interior rows only
    macroscopic_norm: float


def projection_identities(ops: OperatorSet, seed: int = 0) -> IdentityReport:
    """Check the two operator identities behind the macroscopic limit."""
    dim = ops.disc.dim
    a = ops.transport

    pi = ops.centered_average_matvec

    def sandwich_mv(v):
        return pi(a @ pi(v))

    def sandwich_rmv(v):
        return pi(a.T @ pi(v))

    sandwich = LinearOperator((dim, dim), matvec=sandwich_mv, rmatvec=sandwich_rmv)
    sandwich_norm = operator_norm(sandwich, dim, seed)

    mask = ops.interior_row_mask().astype(float)

    def resid_mv(v):
        lhs = pi(a @ (a @ pi(v)))
        rhs = ops.macroscopic_embedded_matvec(pi(v))
        return mask * (lhs - rhs)

    def resid_rmv(v):
        mv = mask * v
        lhs = pi(a.T @ (a.T @ pi(mv)))
        rhs = pi(ops.macroscopic_embedded_matvec(mv))
        return lhs - rhs

    resid = LinearOperator((dim, dim), matvec=resid_mv, rmatvec=resid_rmv)
    g_norm = operator_norm(ops.macroscopic, ops.disc.n_nodes, seed + 1)
    resid_norm = operator_norm(resid, dim, seed + 2)
    return IdentityReport(sandwich_norm, resid_norm / g_norm, g_norm)


@dataclass(frozen=True)
class IdentityCheck:
    report: IdentityReport
    tolerance: float
    passed: bool


def verify_projection_identities(ops: OperatorSet, tol: float = 1e-8, seed: int = 0) -> IdentityCheck:
    """projection_identities with a pass verdict: both norms within tol."""
    report = projection_identities(ops, seed=seed)
    ok = report.sandwich_norm <= tol and report.macroscopic_relative_residual <= tol
    return IdentityCheck(report=report, tolerance=float(tol), passed=ok)


# -- spectral quantities -------------------------------------------------------


def angular_gap(ops: OperatorSet) -> float:
    """Gap of the angular diffusion alone: attained at the first mode pair."""
    n = ops.disc.n_nodes
    diag = -ops.angular_diffusion.diagonal()
    nonzero = diag[n:]  # skip the constant-mode block
    return float(nonzero.min())


def poincare_macroscopic(ops: OperatorSet, seed: int = 0) -> float:
    """Poincare estimate from the macroscopic block: twice its spectral gap.

    The macroscopic block is half the weighted diffusion generator, so its
    smallest nonzero eigenvalue is half the Poincare constant of the measure.
    """
    n = ops.disc.n_nodes
    neg_g = (-ops.macroscopic).tocsc()
    neg_g = (neg_g + neg_g.T) * 0.5  # symmetric to rounding; make it exact
    scale = float(np.abs(neg_g.diagonal()).max())
    rng = np.random.default_rng(seed + 77)
    vals = eigsh(
        neg_g,
        k=min(6, n - 2),
        sigma=-1e-4 * scale,
        which="LM",
        v0=rng.standard_normal(n),
        return_eigenvectors=False,
    )
    vals = np.sort(vals)
    gate = 1e-9 * scale
    positive = vals[vals > gate]
    if positive.size == 0:
        raise NumericalError("macroscopic block has no detectable spectral gap")
    return 2.0 * float(positive[0])


@dataclass(frozen=True)
class GapEstimate:
    gap: float
    method: str
    resolution: str
    detail: dict = field(default_factory=dict)


def spectral_gap(
    ops: OperatorSet,
    seed: int = 0,
    dense_limit: int = DENSE_EIG_LIMIT,
    horizon: float | None = None,
) -> GapEstimate:
    """Decay rate of the full generator on the complement of constants.

    Dense eigensolve below `dense_limit`; otherwise the slowest decay rate of
    the semigroup applied to random mean-zero probes is fitted, with a fit
    quality gate of R^2 >= 0.99 per probe.
    """
    dim = ops.disc.dim
    gen = ops.generator
    if dim <= dense_limit:
        eigenvalues = linalg.eigvals(gen.toarray())
        magnitudes = np.abs(eigenvalues)
        null = magnitudes <= 1e-8 * magnitudes.max()
        if not np.any(null):
            null = magnitudes <= magnitudes.min() * (1 + 1e-12)
        rest = eigenvalues[~null]
        gap = float(-rest.real.max())
        if gap <= 0:
            raise NumericalError(f"nonpositive spectral gap {gap}; discretization unstable")
        return GapEstimate(
            gap=gap,
            method="dense-eigensolve",
            resolution=ops.disc.resolution,
            detail={"dimension": dim, "null_count": int(null.sum())},
        )

    # semigroup decay fit
    if horizon is None:
        lam_half = 0.5 * poincare_macroscopic(ops, seed)
        horizon = 8.0 / min(angular_gap(ops), lam_half)
    rng = np.random.default_rng(seed)
    probes = rng.standard_normal((dim, DECAY_FIT_PROBES))
    # project out constants and the centered-difference parity artifacts:
    # both decay at numerically-zero rates and would floor the fit
    drop = np.column_stack([ops.constant_direction, ops.artifact_directions()])
    probes -= drop @ (drop.T @ probes)
    probes /= np.linalg.norm(probes, axis=0)
    n_times = 41
    times = np.linspace(0.0, horizon, n_times)
    trajectory = expm_multiply(gen.tocsc(), probes, start=0.0, stop=horizon, num=n_times)
    norms = np.linalg.norm(trajectory, axis=1)  # (n_times, n_probes)
    window = times >= 0.5 * horizon
    rates = []
    quality = []
    for j in range(DECAY_FIT_PROBES):
        y = np.log(norms[window, j])
        t = times[window]
        slope, intercept = np.polyfit(t, y, 1)
        fit = slope * t + intercept
        ss_res = float(np.sum((y - fit) ** 2))
        ss_tot = float(np.sum((y - y.mean()) ** 2))
        r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
        rates.append(-slope)
        quality.append(r2)
    worst = min(quality)
    if worst < DECAY_FIT_MIN_R2:
        raise NumericalError(
            f"semigroup decay fit quality {worst:.4f} below {DECAY_FIT_MIN_R2}; "
            f"rates={rates}, r2={quality}"
        )
    return GapEstimate(
        gap=float(min(rates)),
        method="decay-fit",
        resolution=ops.disc.resolution,
        detail={"horizon": horizon, "min_r2": worst, "rates": [float(r) for r in rates]},
    )


# -- coercivity and elliptic estimates ----------------------------------------


@dataclass(frozen=True)
class CoercivityReport:
    microscopic_min_ratio: float  # -(Sf, f) / (sigma^2/2 |f_fluct|^2), min over probes
    microscopic_bound: float
    macroscopic_min_ratio: float  # |A Pi f|^2 / ((Lambda_h/2) |Pi f|^2), min over probes
    macroscopic_bound: float
    poincare_estimate: float


def coercivity_report(ops: OperatorSet, n_probes: int = 100, seed: int = 0) -> CoercivityReport:
    """Sample the microscopic and macroscopic coercivity inequalities."""
    dim = ops.disc.dim
    n = ops.disc.n_nodes
    half_s2 = 0.5 * float(ops.params.sigma) ** 2
    lam_h = poincare_macroscopic(ops, seed)
    rng = np.random.default_rng(seed)
    micro = math.inf
    macro = math.inf
    for _ in range(n_probes):
        f = rng.standard_normal(dim)
        fluct = f.copy()
        fluct[:n] = 0.0  # remove the angle-average block
        denom = half_s2 * float(fluct @ fluct)
        if denom > 0:
            micro = min(micro, float(-(f @ (ops.angular_diffusion @ f))) / denom)
        g = ops.centered_average_matvec(f)
        denom_m = 0.5 * lam_h * float(g @ g)
        if denom_m > 0:
            af = ops.transport @ g
            macro = min(macro, float(af @ af) / denom_m)
    return CoercivityReport(
        microscopic_min_ratio=micro,
        microscopic_bound=half_s2,
        macroscopic_min_ratio=macro,
        macroscopic_bound=0.5 * lam_h,
        poincare_estimate=lam_h,
    )


@dataclass(frozen=True)
class EllipticReport:
    c1_observed: float
    c1_bound: float
    c2_estimate: float
    c2_centered_denominator: float  # same ratio against the full fluctuation norm
    n_samples: int
    resolution: str

    @property
    def passed(self) -> bool:
        return (
            self.c1_observed <= self.c1_bound * (1.0 + 1e-6)
            and math.isfinite(self.c2_estimate)
            and self.c2_estimate > 0
        )


def elliptic_report(ops: OperatorSet, n_samples: int = 200, seed: int = 0) -> EllipticReport:
    """Sampled norms of the regularization operator on diffusion and transport.

    The regularizer inverts (I + T^* T) against T^* where T is the transport
    restricted to angle averages; its output lives on the position grid.  The
    diffusion ratio has the sharp bound sigma^2/4 because the transport image
    sits entirely in the first mode pair, where the angular diffusion acts as
    -sigma^2/2, and s/(1+s^2) <= 1/2 for every singular value s.
    """
    n = ops.disc.n_nodes
    dim = ops.disc.dim
    t_block = ops.transport[:, :n].tocsc()  # transport restricted to angle averages
    gram = (t_block.T @ t_block).tocsc()
    solver = splu((sparse.identity(n, format="csc") + gram).tocsc())

    def regularize(v: np.ndarray) -> np.ndarray:
        return solver.solve(t_block.T @ v)

    rng = np.random.default_rng(seed)
    c1 = 0.0
    c2 = 0.0
    c2_centered = 0.0
    for _ in range(n_samples):
        f = rng.standard_normal(dim)
        fluct = f.copy()
        fluct[:n] = 0.0
        denom = float(np.linalg.norm(fluct))
        complement = f - ops.centered_average_matvec(f)
        a_compl = ops.transport @ complement
        num_c2 = float(np.linalg.norm(regularize(a_compl)))
        num_c1 = float(np.linalg.norm(regularize(ops.angular_diffusion @ f)))
        if denom > 0:
            c1 = max(c1, num_c1 / denom)
            c2 = max(c2, num_c2 / denom)
        denom_pi = float(np.linalg.norm(f - ops.centered_average_matvec(f)))
        if denom_pi > 0:
            c2_centered = max(c2_centered, num_c2 / denom_pi)
    return EllipticReport(
        c1_observed=c1,
        c1_bound=0.25 * float(ops.params.sigma) ** 2,
        c2_estimate=c2,
        c2_centered_denominator=c2_centered,
        n_samples=n_samples,
        resolution=ops.disc.resolution,
    )


def elliptic_estimate_check(
    ops: OperatorSet, samples: int = 200, seed: int = 0
) -> tuple[float, float, bool]:
    """(c1_observed, c2_estimate, pass) from a sampled elliptic report."""
    report = elliptic_report(ops, n_samples=samples, seed=seed)
    return report.c1_observed, report.c2_estimate, report.passed


# -- artifact helpers ----------------------------------------------------------


def report_rows(quantities: dict[str, float], resolution: str, seed: int) -> list[str]:
    """CSV rows `quantity,value,resolution,seed` with stable float formatting."""
    return [f"{name},{float(value)!r},{resolution},{seed}" for name, value in quantities.items()]


def dump_matrix(matrix: sparse.spmatrix, path: str) -> None:
    """Coordinate text dump: one `row col value` triple per line."""
    coo = matrix.tocoo()
    with open(path, "w") as fh:
        for r, c, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{r} {c} {float(v)!r}\n")
