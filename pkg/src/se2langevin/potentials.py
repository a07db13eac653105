"""Confining potentials on the plane and their Gibbs-measure diagnostics.

Three families are supported: quadratic wells (the symbolically closed case),
a radial double well, and tables loaded from CSV.  On top of evaluation the
module provides the partition-function quadrature, the growth-condition
constant max |lap Phi| / (1 + |grad Phi|), and a Poincare-constant estimate
for the measure exp(-Phi) dxi, computed as the smallest nonzero eigenvalue of
the weighted Dirichlet form.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import eigsh

from .errors import BoxTooSmallError, ConfigurationError, TableFormatError

# relative boundary weight above which the quadrature box is rejected
BOUNDARY_WEIGHT_LIMIT = 1e-10
# how much finer the cross-check grid is in poincare_constant
REFINE_FACTOR = 1.5
_EIGSH_SEED = 20240901


class Potential:
    """Interface: vectorized value/gradient/laplacian plus config round-trip."""

    kind = "abstract"

    def value(self, x1, x2):
        raise NotImplementedError

    def gradient(self, x1, x2):
        raise NotImplementedError

    def laplacian(self, x1, x2):
        raise NotImplementedError

    def to_config(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Quadratic(Potential):
    """Phi = (a1 xi1^2 + a2 xi2^2) / 2 with a1, a2 > 0."""

    a1: float = 1.0
    a2: float = 1.0
    kind = "quadratic"

    def __post_init__(self):
        if not (self.a1 > 0 and self.a2 > 0):
            raise ConfigurationError(
                f"quadratic potential needs positive curvatures, got a1={self.a1}, a2={self.a2}"
            )

    def value(self, x1, x2):
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        return 0.5 * (self.a1 * x1**2 + self.a2 * x2**2)

    def gradient(self, x1, x2):
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        return self.a1 * x1, self.a2 * x2

    def laplacian(self, x1, x2):
        shape = np.broadcast(np.asarray(x1), np.asarray(x2)).shape
        return np.full(shape, self.a1 + self.a2)

    def curvatures_exact(self) -> tuple[Fraction, Fraction]:
        """Curvatures as exact rationals (floats are binary rationals)."""
        return Fraction(self.a1), Fraction(self.a2)

    def to_config(self) -> dict:
        return {"kind": "quadratic", "a1": self.a1, "a2": self.a2}


@dataclass(frozen=True)
class DoubleWell(Potential):
    """Radial double well Phi = h (|xi|^2 - 1)^2 / 4 with height h > 0."""

    height: float = 1.0
    kind = "double_well"

    def __post_init__(self):
        if not self.height > 0:
            raise ConfigurationError(f"double-well height must be positive, got {self.height}")

    def value(self, x1, x2):
        r2 = np.asarray(x1, dtype=float) ** 2 + np.asarray(x2, dtype=float) ** 2
        return 0.25 * self.height * (r2 - 1.0) ** 2

    def gradient(self, x1, x2):
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        s = self.height * (x1**2 + x2**2 - 1.0)
        return s * x1, s * x2

    def laplacian(self, x1, x2):
        r2 = np.asarray(x1, dtype=float) ** 2 + np.asarray(x2, dtype=float) ** 2
        return self.height * (4.0 * r2 - 2.0)

    def to_config(self) -> dict:
        return {"kind": "double_well", "height": self.height}


class Tabulated(Potential):
    """Potential given on a uniform rectangular grid, interpolated bilinearly.

    Derivatives are formed by centered second-order differences on the table
    (one-sided at the edges) with step equal to the table spacing, then
    interpolated.  Queries outside the tabulated rectangle are rejected.
    """

    kind = "tabulated"

    def __init__(self, x1_nodes: np.ndarray, x2_nodes: np.ndarray, values: np.ndarray, source: str = "<memory>"):
        x1_nodes = np.asarray(x1_nodes, dtype=float)
        x2_nodes = np.asarray(x2_nodes, dtype=float)
        values = np.asarray(values, dtype=float)
        if x1_nodes.ndim != 1 or x2_nodes.ndim != 1 or values.shape != (x1_nodes.size, x2_nodes.size):
            raise TableFormatError("tabulated potential needs a rectangular value grid")
        if x1_nodes.size < 4 or x2_nodes.size < 4:
            raise TableFormatError("tabulated potential needs at least 4 nodes per axis")
        for name, nodes in (("xi1", x1_nodes), ("xi2", x2_nodes)):
            steps = np.diff(nodes)
            if np.any(steps <= 0):
                raise TableFormatError(f"{name} nodes must be strictly increasing")
            if np.max(np.abs(steps - steps[0])) > 1e-8 * abs(steps[0]):
                raise TableFormatError(f"{name} nodes must be uniformly spaced")
        if not np.all(np.isfinite(values)):
            raise TableFormatError("tabulated potential contains non-finite values")
        self.x1_nodes = x1_nodes
        self.x2_nodes = x2_nodes
        self.values = values
        self.step1 = float(x1_nodes[1] - x1_nodes[0])
        self.step2 = float(x2_nodes[1] - x2_nodes[0])
        self.source = source
        self._grad1 = np.gradient(values, self.step1, axis=0, edge_order=2)
        self._grad2 = np.gradient(values, self.step2, axis=1, edge_order=2)
        self._lap = (
            np.gradient(self._grad1, self.step1, axis=0, edge_order=2)
            + np.gradient(self._grad2, self.step2, axis=1, edge_order=2)
        )

    @staticmethod
    def constant(level: float, l1: float, l2: float, n1: int = 16, n2: int = 16) -> "Tabulated":
        """Flat potential on [-l1, l1] x [-l2, l2]; the zero-force model."""
        x1 = np.linspace(-l1, l1, n1)
        x2 = np.linspace(-l2, l2, n2)
        return Tabulated(x1, x2, np.full((n1, n2), float(level)), source="<constant>")

    @staticmethod
    def from_csv(path: str) -> "Tabulated":
        """Load `xi1,xi2,phi` rows (row-major over a rectangular grid)."""
        rows: list[tuple[float, float, float]] = []
        bad: list[int] = []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header] != ["xi1", "xi2", "phi"]:
                raise TableFormatError(f"{path}: line 1: expected header 'xi1,xi2,phi', got {header}")
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                try:
                    if len(row) != 3:
                        raise ValueError
                    rows.append((float(row[0]), float(row[1]), float(row[2])))
                except ValueError:
                    bad.append(lineno)
        if bad:
            raise TableFormatError(f"{path}: malformed rows at lines {bad[:20]}")
        if not rows:
            raise TableFormatError(f"{path}: no data rows")
        data = np.asarray(rows)
        x1_nodes = np.unique(data[:, 0])
        x2_nodes = np.unique(data[:, 1])
        n1, n2 = x1_nodes.size, x2_nodes.size
        if n1 * n2 != data.shape[0]:
            raise TableFormatError(
                f"{path}: expected a full {n1}x{n2} rectangular grid, got {data.shape[0]} rows"
            )
        expect1 = np.repeat(x1_nodes, n2)
        expect2 = np.tile(x2_nodes, n1)
        mismatch = np.nonzero((data[:, 0] != expect1) | (data[:, 1] != expect2))[0]
        if mismatch.size:
            raise TableFormatError(
                f"{path}: rows not in row-major grid order, first offenders at lines "
                f"{[int(i) + 2 for i in mismatch[:10]]}"
            )
        return Tabulated(x1_nodes, x2_nodes, data[:, 2].reshape(n1, n2), source=path)

    def box(self) -> tuple[float, float, float, float]:
        return (
            float(self.x1_nodes[0]),
            float(self.x1_nodes[-1]),
            float(self.x2_nodes[0]),
            float(self.x2_nodes[-1]),
        )

    def _locate(self, x1, x2):
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        eps1 = 1e-9 * self.step1
        eps2 = 1e-9 * self.step2
        if (
            np.any(x1 < self.x1_nodes[0] - eps1)
            or np.any(x1 > self.x1_nodes[-1] + eps1)
            or np.any(x2 < self.x2_nodes[0] - eps2)
            or np.any(x2 > self.x2_nodes[-1] + eps2)
        ):
            raise ConfigurationError(f"query outside tabulated box {self.box()} of {self.source}")
        i = np.clip(((x1 - self.x1_nodes[0]) / self.step1).astype(int), 0, self.x1_nodes.size - 2)
        j = np.clip(((x2 - self.x2_nodes[0]) / self.step2).astype(int), 0, self.x2_nodes.size - 2)
        t = (x1 - self.x1_nodes[i]) / self.step1
        u = (x2 - self.x2_nodes[j]) / self.step2
        return i, j, np.clip(t, 0.0, 1.0), np.clip(u, 0.0, 1.0)

    @staticmethod
    def _blend(table, i, j, t, u):
        return (
            table[i, j] * (1 - t) * (1 - u)
            + table[i + 1, j] * t * (1 - u)
            + table[i, j + 1] * (1 - t) * u
            + table[i + 1, j + 1] * t * u
        )

    def _interp(self, table, x1, x2):
        i, j, t, u = self._locate(x1, x2)
        return self._blend(table, i, j, t, u)

    def value(self, x1, x2):
        return self._interp(self.values, x1, x2)

    def gradient(self, x1, x2):
        # one shared locate: this sits on the hot path of the simulator
        i, j, t, u = self._locate(x1, x2)
        return self._blend(self._grad1, i, j, t, u), self._blend(self._grad2, i, j, t, u)

    def laplacian(self, x1, x2):
        return self._interp(self._lap, x1, x2)

    def to_config(self) -> dict:
        return {"kind": "tabulated", "path": self.source}


def from_config(cfg: dict) -> Potential:
    """Build a potential from a plain config mapping (CLI/TOML side)."""
    kind = cfg.get("kind")
    if kind == "quadratic":
        return Quadratic(float(cfg.get("a1", 1.0)), float(cfg.get("a2", 1.0)))
    if kind == "double_well":
        return DoubleWell(float(cfg.get("height", 1.0)))
    if kind == "tabulated":
        if "path" not in cfg:
            raise ConfigurationError("tabulated potential config needs key 'path'")
        return Tabulated.from_csv(cfg["path"])
    raise ConfigurationError(
        f"potential.kind must be one of quadratic/double_well/tabulated, got {kind!r}"
    )


def evaluate(potential: Potential, xi: tuple[float, float]) -> tuple[float, tuple[float, float], float]:
    """Point evaluation: (value, gradient, laplacian) at xi."""
    x1, x2 = float(xi[0]), float(xi[1])
    g1, g2 = potential.gradient(x1, x2)
    return (
        float(potential.value(x1, x2)),
        (float(g1), float(g2)),
        float(potential.laplacian(x1, x2)),
    )


@dataclass(frozen=True)
class Grid2D:
    """Midpoint (cell-centered) tensor grid on a rectangle."""

    x1_min: float
    x1_max: float
    x2_min: float
    x2_max: float
    n1: int
    n2: int

    def __post_init__(self):
        if self.n1 < 8 or self.n2 < 8:
            raise ConfigurationError(f"grid needs at least 8 nodes per axis, got {self.n1}x{self.n2}")
        if not (self.x1_max > self.x1_min and self.x2_max > self.x2_min):
            raise ConfigurationError("grid box is empty")

    @staticmethod
    def centered(l1: float, l2: float, n1: int, n2: int) -> "Grid2D":
        """Box [-l1, l1] x [-l2, l2]."""
        return Grid2D(-l1, l1, -l2, l2, n1, n2)

    @staticmethod
    def for_table(tab: Tabulated, n1: int, n2: int) -> "Grid2D":
        b = tab.box()
        return Grid2D(b[0], b[1], b[2], b[3], n1, n2)

    @property
    def h1(self) -> float:
        return (self.x1_max - self.x1_min) / self.n1

    @property
    def h2(self) -> float:
        return (self.x2_max - self.x2_min) / self.n2

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        x1 = self.x1_min + (np.arange(self.n1) + 0.5) * self.h1
        x2 = self.x2_min + (np.arange(self.n2) + 0.5) * self.h2
        return x1, x2

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        x1, x2 = self.nodes()
        return np.meshgrid(x1, x2, indexing="ij")

    def vertex_mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Lattice including the box corners (and the center for symmetric boxes)."""
        x1 = np.linspace(self.x1_min, self.x1_max, self.n1 + 1)
        x2 = np.linspace(self.x2_min, self.x2_max, self.n2 + 1)
        return np.meshgrid(x1, x2, indexing="ij")


def gibbs_weights(potential: Potential, grid: Grid2D) -> np.ndarray:
    """exp(-Phi) on the grid nodes, shape (n1, n2)."""
    X1, X2 = grid.mesh()
    return np.exp(-np.asarray(potential.value(X1, X2), dtype=float))


def check_box(potential: Potential, grid: Grid2D) -> None:
    """Reject boxes whose boundary carries non-negligible Gibbs weight.

    Tabulated potentials define the measure on their own finite box, so the
    tail diagnostic does not apply to them.
    """
    if isinstance(potential, Tabulated):
        return
    w = gibbs_weights(potential, grid)
    interior = w[1:-1, 1:-1]
    boundary = max(w[0, :].max(), w[-1, :].max(), w[:, 0].max(), w[:, -1].max())
    if boundary > BOUNDARY_WEIGHT_LIMIT * interior.max():
        raise BoxTooSmallError(
            f"boundary Gibbs weight {boundary:.3e} exceeds {BOUNDARY_WEIGHT_LIMIT:.0e} x "
            f"interior max {interior.max():.3e}; enlarge the box "
            f"[{grid.x1_min}, {grid.x1_max}] x [{grid.x2_min}, {grid.x2_max}]"
        )


def normalization(potential: Potential, grid: Grid2D) -> float:
    """Partition function by the midpoint tensor rule on the grid box."""
    check_box(potential, grid)
    w = gibbs_weights(potential, grid)
    return float(w.sum() * grid.h1 * grid.h2)


def growth_constant(potential: Potential, grid: Grid2D) -> float:
    """max over the vertex lattice of |lap Phi| / (1 + |grad Phi|).

    Vertices rather than cell centers so that symmetric boxes test the origin,
    where the ratio peaks for radially increasing potentials.
    """
    X1, X2 = grid.vertex_mesh()
    g1, g2 = potential.gradient(X1, X2)
    lap = np.asarray(potential.laplacian(X1, X2), dtype=float)
    ratio = np.abs(lap) / (1.0 + np.hypot(np.asarray(g1), np.asarray(g2)))
    return float(ratio.max())


def _dirichlet_pencil(potential: Potential, grid: Grid2D):
    """Weighted stiffness/mass pair for the form int |grad f|^2 exp(-Phi).

    Edge weights evaluate exp(-Phi) at face centers, the mass at cell centers;
    the kernel of the stiffness matrix is exactly the constants.
    """
    n1, n2 = grid.n1, grid.n2
    h1, h2 = grid.h1, grid.h2
    x1, x2 = grid.nodes()
    cell = h1 * h2

    w_node = gibbs_weights(potential, grid).ravel()
    mass = w_node * cell

    index = np.arange(n1 * n2).reshape(n1, n2)
    rows, cols, vals = [], [], []

    def add_edges(a_idx, b_idx, w_edge):
        a = a_idx.ravel()
        b = b_idx.ravel()
        w = w_edge.ravel()
        rows.append(np.concatenate([a, b, a, b]))
        cols.append(np.concatenate([a, b, b, a]))
        vals.append(np.concatenate([w, w, -w, -w]))

    # x1-direction edges: face centers at (x1_i + h1/2, x2_j)
    FX, FY = np.meshgrid(x1[:-1] + 0.5 * h1, x2, indexing="ij")
    we = np.exp(-np.asarray(potential.value(FX, FY), dtype=float)) * cell / h1**2
    add_edges(index[:-1, :], index[1:, :], we)

    # x2-direction edges
    FX, FY = np.meshgrid(x1, x2[:-1] + 0.5 * h2, indexing="ij")
    we = np.exp(-np.asarray(potential.value(FX, FY), dtype=float)) * cell / h2**2
    add_edges(index[:, :-1], index[:, 1:], we)

    stiff = sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n1 * n2, n1 * n2),
    )
    return stiff, mass


def _smallest_nonzero(stiff: sparse.csr_matrix, mass: np.ndarray) -> float:
    """Smallest nonzero generalized eigenvalue of (stiff, diag(mass))."""
    n = mass.size
    scale = float(np.median(stiff.diagonal() / mass))
    m_mat = sparse.diags(mass)
    rng = np.random.default_rng(_EIGSH_SEED)
    v0 = rng.standard_normal(n)
    vals = eigsh(
        stiff,
        k=min(6, n - 2),
        M=m_mat,
        sigma=-1e-4 * scale,
        which="LM",
        v0=v0,
        return_eigenvectors=False,
    )
    vals = np.sort(vals)
    null_gate = max(1e-9 * scale, 1e-9 * vals[-1])
    positive = vals[vals > null_gate]
    if positive.size == 0:
        raise BoxTooSmallError("no nonzero eigenvalue found; grid too coarse or degenerate weights")
    return float(positive[0])


@dataclass(frozen=True)
class PoincareEstimate:
    value: float
    refined_value: float
    refinement_delta: float


def poincare_constant(potential: Potential, grid: Grid2D, refine: bool = True) -> PoincareEstimate:
    """Spectral-gap estimate for the Gibbs measure on the grid box.

    The constant is the smallest nonzero eigenvalue of the weighted Dirichlet
    form, i.e. of the generator -lap + grad Phi . grad made self-adjoint in
    L^2(exp(-Phi)).  A 1.5x-refined grid provides the reported refinement
    delta; the estimate is independent of any constant shift of Phi.
    """
    lam = _smallest_nonzero(*_dirichlet_pencil(potential, grid))
    if not refine:
        return PoincareEstimate(lam, lam, 0.0)
    finer = Grid2D(
        grid.x1_min,
        grid.x1_max,
        grid.x2_min,
        grid.x2_max,
        int(math.ceil(grid.n1 * REFINE_FACTOR)),
        int(math.ceil(grid.n2 * REFINE_FACTOR)),
    )
    lam_f = _smallest_nonzero(*_dirichlet_pencil(potential, finer))
    return PoincareEstimate(lam, lam_f, abs(lam_f - lam) / max(abs(lam_f), 1e-300))


@dataclass(frozen=True)
class PotentialReport:
    """Summary of the Gibbs-measure checks on a grid box."""

    normalization: float
    poincare: PoincareEstimate
    growth_constant: float
    bounded_below: bool
    grid: Grid2D = field(repr=False)


def build_report(potential: Potential, grid: Grid2D) -> PotentialReport:
    X1, X2 = grid.mesh()
    vals = np.asarray(potential.value(X1, X2), dtype=float)
    return PotentialReport(
        normalization=normalization(potential, grid),
        poincare=poincare_constant(potential, grid),
        growth_constant=growth_constant(potential, grid),
        bounded_below=bool(np.all(np.isfinite(vals))),
        grid=grid,
    )
