"""Lyapunov bookkeeping and linear stability of the homogeneous state.

The functional V(u) = integral of u - 1 - ln(u) is nonnegative and vanishes
only at u = 1. Along trajectories its decay rate splits into a gradient part
and a kernel quadratic-form part; the latter is nonnegative exactly when the
kernel certifies positive, which is the mechanism behind global convergence
to 1. ``decay_identity_residual`` measures how well a discrete trajectory
honours that identity, and the linearization utilities locate the Turing
instability when the positivity hypothesis fails.
"""

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import DomainError, NumericalError, ValidationError
from .grid import Field, Grid, laplacian_matrix
from .kernels import Kernel, apply_kernel

TRACE_COLUMNS = ("t", "V", "D_total", "D_grad", "D_kernel",
                 "sup_dist_one", "mass", "min_u", "dt_used")


@dataclass(eq=False)
class Snapshot:
    step: int
    t: float
    field: Field


@dataclass(eq=False)
class SimContext:
    """What a trace needs to re-evaluate its own diagnostics."""
    grid: Grid
    kernel: Kernel | None
    mu: float
    local_mode: bool = False


class Trace:
    """Per-step diagnostics rows plus periodic field snapshots.

    Appended by the running simulation, read-only afterwards. ``context`` is
    the in-memory simulation context; it is not serialized, so traces loaded
    from CSV carry rows and metadata only.
    """

    columns = TRACE_COLUMNS

    def __init__(self, metadata: dict | None = None,
                 context: SimContext | None = None):
        self._rows: list[tuple] = []
        self.snapshots: list[Snapshot] = []
        self.metadata: dict = dict(metadata or {})
        self.context = context

    def __len__(self) -> int:
        return len(self._rows)

    def append_row(self, **values) -> None:
        self._rows.append(tuple(float(values[c]) for c in TRACE_COLUMNS))

    def add_snapshot(self, step: int, t: float, field: Field) -> None:
        self.snapshots.append(Snapshot(step, t, field))

    def row(self, k: int) -> dict:
        return dict(zip(TRACE_COLUMNS, self._rows[k]))

    def column(self, name: str) -> np.ndarray:
        idx = TRACE_COLUMNS.index(name)
        return np.array([r[idx] for r in self._rows])

    def as_array(self) -> np.ndarray:
        return np.array(self._rows, dtype=float).reshape(len(self._rows),
                                                         len(TRACE_COLUMNS))

    def snapshot_for_step(self, step: int) -> Snapshot | None:
        for snap in self.snapshots:
            if snap.step == step:
                return snap
        return None

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(TRACE_COLUMNS)
            for row in self._rows:
                writer.writerow([repr(v) for v in row])

    @classmethod
    def from_csv(cls, path) -> "Trace":
        trace = cls()
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = tuple(next(reader))
            if header != TRACE_COLUMNS:
                raise ValidationError(
                    f"{Path(path).name}: unexpected trace header {header}")
            for row in reader:
                trace._rows.append(tuple(float(v) for v in row))
        return trace


def sup_distance_to_one(field: Field) -> float:
    """max_i |u_i - 1|, the uniform distance to the homogeneous state."""
    return float(np.max(np.abs(field.values - 1.0)))


def _require_positive(u: np.ndarray) -> None:
    if np.any(u <= 0.0):
        i = int(np.argmin(u))
        raise DomainError(
            f"strictly positive field required; node {i} has value {u[i]:.6g}")


def lyapunov_value(field: Field) -> float:
    """V(u) = sum of w * (u - 1 - ln u); nonnegative, zero only at u = 1."""
    u = field.values
    _require_positive(u)
    return float(field.grid.weights @ (u - 1.0 - np.log(u)))


class Dissipation(NamedTuple):
    total: float
    grad: float
    kernel_part: float


def dissipation(field: Field, kernel: Kernel | None, mu: float,
                local_mode: bool = False) -> Dissipation:
    """Decay rate of V: an edge-based gradient term plus the kernel quadratic form.

    The gradient term sums (du/h)^2 / u_mid^2 over grid edges with the edge
    midpoint average in the denominator; that pairing matches the Neumann
    Laplacian under summation by parts to second order, which is what makes
    the decay identity testable. The kernel part is
    mu * sum_ij w_i w_j K_ij (1 - u_i)(1 - u_j); in local mode it collapses to
    mu * integral of (1 - u)^2.
    """
    u = field.values
    _require_positive(u)
    grid = field.grid

    d_grad = 0.0
    if grid.dim == 1:
        h = grid.spacing[0]
        du = np.diff(u)
        mid = 0.5 * (u[1:] + u[:-1])
        d_grad = float(np.sum(du * du / (mid * mid)) / h)
    else:
        n0, n1 = grid.counts
        h0, h1 = grid.spacing
        U = u.reshape(n0, n1)
        w0 = grid.axis_weights(0)
        w1 = grid.axis_weights(1)
        du = np.diff(U, axis=0)
        mid = 0.5 * (U[1:, :] + U[:-1, :])
        d_grad += float(np.sum((du * du / (mid * mid)) * w1[None, :]) / h0)
        du = np.diff(U, axis=1)
        mid = 0.5 * (U[:, 1:] + U[:, :-1])
        d_grad += float(np.sum((du * du / (mid * mid)) * w0[:, None]) / h1)

    g = 1.0 - u
    if local_mode or kernel is None:
        d_kernel = mu * float(grid.weights @ (g * g))
    else:
        if not kernel.normalized:
            raise ValidationError(
                "dissipation needs a normalized kernel (1 - K[u] = K[1 - u] "
                "only holds then)")
        kg = apply_kernel(kernel, Field(grid, g)).values
        d_kernel = mu * float(grid.weights @ (g * kg))
    return Dissipation(d_grad + d_kernel, d_grad, d_kernel)


def decay_identity_residual(trace: Trace, step_index: int) -> float:
    """| (V_{k+1} - V_k)/dt + D at the half-step average field |.

    Needs per-step snapshots (run with ``snapshot_every=1``) and the trace's
    in-memory simulation context.
    """
    if not 0 <= step_index < len(trace) - 1:
        raise IndexError(
            f"need rows {step_index} and {step_index + 1}, trace has {len(trace)}")
    ctx = trace.context
    if ctx is None:
        raise ValidationError("trace carries no simulation context")
    snap0 = trace.snapshot_for_step(step_index)
    snap1 = trace.snapshot_for_step(step_index + 1)
    if snap0 is None or snap1 is None:
        raise ValidationError(
            "per-step snapshots missing; rerun with snapshot_every=1")
    row0, row1 = trace.row(step_index), trace.row(step_index + 1)
    dt = row1["t"] - row0["t"]
    mid = Field(ctx.grid, 0.5 * (snap0.field.values + snap1.field.values))
    d_mid = dissipation(mid, ctx.kernel, ctx.mu, ctx.local_mode).total
    return abs((row1["V"] - row0["V"]) / dt + d_mid)


def linearization_matrix(grid: Grid, kernel: Kernel, mu: float) -> np.ndarray:
    """Derivative of the dynamics at u = 1: J v = Lap v - mu K[v] + mu (1 - K[1]) v.

    The diagonal correction vanishes only for doubly balanced kernels; it is
    kept so the matrix is also right for merely column-normalized ones.
    """
    if not kernel.normalized:
        raise ValidationError("linearization needs a normalized kernel")
    L = laplacian_matrix(grid).toarray()
    kw = kernel.matrix * grid.weights[None, :]
    k_of_one = kernel.matrix @ grid.weights
    return L - mu * kw + mu * np.diag(1.0 - k_of_one)


def local_linearization_matrix(grid: Grid, mu: float) -> np.ndarray:
    """Derivative at u = 1 in the local (classical logistic) limit: Lap - mu I."""
    return laplacian_matrix(grid).toarray() - mu * np.eye(grid.n_nodes)


def spectral_abscissa(matrix: np.ndarray) -> float:
    """Largest real part of the spectrum; negative means linear stability."""
    try:
        eigvals = np.linalg.eigvals(np.asarray(matrix, dtype=float))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc
    return float(eigvals.real.max())


def cosine_mode_rates(grid: Grid, jacobian: np.ndarray,
                      max_mode: int | None = None) -> np.ndarray:
    """Weighted Rayleigh quotients of J on cos(k pi x) modes along axis 0, k >= 1."""
    n0 = grid.counts[0]
    if max_mode is None:
        max_mode = n0 - 2
    lo, hi = grid.extents[0]
    xhat = (grid.nodes[:, 0] - lo) / (hi - lo)
    w = grid.weights
    rates = np.empty(max_mode)
    for k in range(1, max_mode + 1):
        v = np.cos(k * np.pi * xhat)
        rates[k - 1] = float((w * v) @ (jacobian @ v) / ((w * v) @ v))
    return rates


def most_unstable_cosine_mode(grid: Grid, jacobian: np.ndarray,
                              max_mode: int | None = None) -> int:
    """Index k >= 1 of the fastest-growing cosine perturbation of u = 1."""
    return int(np.argmax(cosine_mode_rates(grid, jacobian, max_mode))) + 1
