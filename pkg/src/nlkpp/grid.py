"""Uniform grids on intervals and rectangles.

A :class:`Grid` carries node coordinates, spacing, and composite-trapezoid
quadrature weights; a :class:`Field` is one real value per node. The discrete
Laplacian uses ghost-node reflection at the boundary, which is the
second-order realization of a homogeneous Neumann condition and makes the
operator self-adjoint in the weighted inner product and exactly flux-free:
both properties are what the Lyapunov bookkeeping in :mod:`nlkpp.diagnostics`
relies on.
"""

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .errors import ShapeError, ValidationError

Extents = tuple[tuple[float, float], ...]


def _normalize_extents(extents) -> Extents:
    arr = np.asarray(extents, dtype=float)
    if arr.shape == (2,):
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] not in (1, 2):
        raise ValidationError(
            f"extents must be (lo, hi) or one/two (lo, hi) pairs, got {extents!r}")
    return tuple((float(lo), float(hi)) for lo, hi in arr)


def _normalize_counts(counts, dim: int) -> tuple[int, ...]:
    if np.isscalar(counts):
        counts = (counts,)
    counts = tuple(int(n) for n in counts)
    if len(counts) != dim:
        raise ValidationError(
            f"counts has {len(counts)} entries for a {dim}-dimensional domain")
    return counts


def _trapezoid_weights(n: int, h: float) -> np.ndarray:
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    return w


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform tensor-product grid with per-node trapezoid quadrature weights.

    Nodes are stored in row-major order (the first axis varies slowest).
    Instances are immutable and safe to share across threads.
    """

    extents: Extents
    counts: tuple[int, ...]
    spacing: tuple[float, ...]
    nodes: np.ndarray  # (n_nodes, dim)
    weights: np.ndarray  # (n_nodes,)

    @property
    def dim(self) -> int:
        return len(self.counts)

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.counts))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.counts

    @property
    def measure(self) -> float:
        out = 1.0
        for lo, hi in self.extents:
            out *= hi - lo
        return out

    def axis_coords(self, axis: int) -> np.ndarray:
        lo, hi = self.extents[axis]
        return np.linspace(lo, hi, self.counts[axis])

    def axis_weights(self, axis: int) -> np.ndarray:
        return _trapezoid_weights(self.counts[axis], self.spacing[axis])

    def same_layout(self, other: "Grid") -> bool:
        return self.counts == other.counts and self.extents == other.extents

    def __repr__(self) -> str:  # arrays are noise in test output
        return f"Grid(extents={self.extents}, counts={self.counts})"


def build_uniform_grid(extents, counts) -> Grid:
    """Build a uniform grid on an interval or axis-aligned rectangle.

    ``extents`` is ``(lo, hi)`` in 1D or a pair of such tuples in 2D;
    ``counts`` gives at least 3 nodes per axis.
    """
    ext = _normalize_extents(extents)
    cts = _normalize_counts(counts, len(ext))
    for ax, ((lo, hi), n) in enumerate(zip(ext, cts)):
        if n < 3:
            raise ValidationError(f"axis {ax}: need at least 3 nodes, got {n}")
        if not hi > lo:
            raise ValidationError(f"axis {ax}: degenerate extent ({lo}, {hi})")
    spacing = tuple((hi - lo) / (n - 1) for (lo, hi), n in zip(ext, cts))
    axes = [np.linspace(lo, hi, n) for (lo, hi), n in zip(ext, cts)]
    mesh = np.meshgrid(*axes, indexing="ij")
    nodes = np.stack([m.ravel() for m in mesh], axis=1)
    weights = _trapezoid_weights(cts[0], spacing[0])
    for ax in range(1, len(cts)):
        weights = np.outer(weights, _trapezoid_weights(cts[ax], spacing[ax])).ravel()
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return Grid(ext, cts, spacing, nodes, weights)


@dataclass(frozen=True, eq=False)
class Field:
    """Scalar nodal values on a grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).ravel()
        if values.size != self.grid.n_nodes:
            raise ShapeError(
                f"field has {values.size} values for a grid with "
                f"{self.grid.n_nodes} nodes")
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "Field":
        return cls(grid, np.full(grid.n_nodes, float(value)))

    @classmethod
    def from_function(cls, grid: Grid, func) -> "Field":
        """Evaluate ``func`` on node coordinates (one array argument per axis)."""
        return cls(grid, np.asarray(func(*grid.nodes.T), dtype=float))

    def __repr__(self) -> str:
        return f"Field(n={self.values.size}, min={self.values.min():.4g}, max={self.values.max():.4g})"


def integrate(field: Field) -> float:
    """Quadrature of the field over the domain: sum of weight * value."""
    return float(field.grid.weights @ field.values)


def _lap1d(u: np.ndarray, h: float) -> np.ndarray:
    out = np.empty_like(u)
    out[1:-1] = u[2:] - 2.0 * u[1:-1] + u[:-2]
    out[0] = 2.0 * (u[1] - u[0])
    out[-1] = 2.0 * (u[-2] - u[-1])
    return out / h**2


def apply_neumann_laplacian(field: Field) -> Field:
    """Second-order Laplacian with ghost-node reflection at the boundary."""
    grid = field.grid
    if grid.dim == 1:
        return Field(grid, _lap1d(field.values, grid.spacing[0]))
    n0, n1 = grid.counts
    h0, h1 = grid.spacing
    u = field.values.reshape(n0, n1)
    lap = np.zeros_like(u)
    lap[1:-1, :] += (u[2:, :] - 2.0 * u[1:-1, :] + u[:-2, :]) / h0**2
    lap[0, :] += 2.0 * (u[1, :] - u[0, :]) / h0**2
    lap[-1, :] += 2.0 * (u[-2, :] - u[-1, :]) / h0**2
    lap[:, 1:-1] += (u[:, 2:] - 2.0 * u[:, 1:-1] + u[:, :-2]) / h1**2
    lap[:, 0] += 2.0 * (u[:, 1] - u[:, 0]) / h1**2
    lap[:, -1] += 2.0 * (u[:, -2] - u[:, -1]) / h1**2
    return Field(grid, lap.ravel())


def _lap1d_matrix(n: int, h: float) -> sparse.csr_matrix:
    main = np.full(n, -2.0)
    lower = np.ones(n - 1)
    upper = np.ones(n - 1)
    upper[0] = 2.0
    lower[-1] = 2.0
    return (sparse.diags([lower, main, upper], offsets=[-1, 0, 1]) / h**2).tocsr()


def laplacian_matrix(grid: Grid) -> sparse.csr_matrix:
    """Sparse matrix L with L @ f == apply_neumann_laplacian(f). Row sums are zero."""
    if grid.dim == 1:
        return _lap1d_matrix(grid.counts[0], grid.spacing[0])
    L0 = _lap1d_matrix(grid.counts[0], grid.spacing[0])
    L1 = _lap1d_matrix(grid.counts[1], grid.spacing[1])
    eye0 = sparse.identity(grid.counts[0], format="csr")
    eye1 = sparse.identity(grid.counts[1], format="csr")
    return (sparse.kron(L0, eye1) + sparse.kron(eye0, L1)).tocsr()
