"""Interaction kernels: sampling, normalization, application, positivity certificates.

Two certificates decide whether the double-integral quadratic form
``sum_ij w_i w_j K_ij f_i f_j`` is nonnegative for every grid function f:

* ``certify_positivity_eigen`` works on any sampled kernel; it symmetrizes the
  weighted matrix and inspects its smallest eigenvalue. A failing direction is
  reported when the verdict is negative.
* ``certify_positivity_bochner`` works on convolution profiles; by Bochner's
  theorem positivity of the transform certifies the quadratic form on any
  bounded domain (zero-extend the test function).

Normalization comes in two flavours. Column normalization makes the weighted
column sums one, so the homogeneous state 1 stays a steady state of the
dynamics. Sinkhorn-style double balancing additionally makes the weighted row
sums one, so the kernel maps constants to constants exactly; several oracles
in the test-suite want that stronger property.
"""

import math
from collections.abc import Callable
from dataclasses import dataclass, field as _field, replace

import numpy as np
from scipy.signal import fftconvolve

from .errors import BalancingError, KernelError, ShapeError, ValidationError
from .grid import Field, Grid

FAMILIES = ("gaussian", "tophat", "exponential", "mexican_hat", "custom")

# width ratio of the subtracted (inhibitory) gaussian in the mexican hat
MEXICAN_HAT_WIDTH_FACTOR = 2.0

# below this many nodes a dense matvec beats FFT overhead
_FFT_AUTO_THRESHOLD = 2048


@dataclass(frozen=True)
class KernelProfile:
    """Even profile phi(z) of a convolution kernel K(x, y) = phi(x - y).

    ``sigma`` is the length scale. The mexican hat is the difference of two
    gaussians, the wider one (width ``MEXICAN_HAT_WIDTH_FACTOR * sigma``)
    scaled by ``inhibition_ratio`` and subtracted; its transform dips negative
    exactly when ``inhibition_ratio >= 1 / MEXICAN_HAT_WIDTH_FACTOR``, which
    makes it a convenient positivity-violating specimen. The tophat is not
    Lipschitz; it is kept as the canonical discontinuous, positivity-violating
    example.
    """

    family: str
    sigma: float
    inhibition_ratio: float = 0.8
    func: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValidationError(
                f"unknown kernel family {self.family!r}; choose from {FAMILIES}")
        if not self.sigma > 0:
            raise ValidationError(f"kernel sigma must be positive, got {self.sigma}")
        if self.family == "custom" and self.func is None:
            raise ValidationError("custom profiles need an evaluation function")

    def __call__(self, offsets) -> np.ndarray:
        z = np.asarray(offsets, dtype=float)
        s = self.sigma
        if self.family == "gaussian":
            return np.exp(-(z * z) / (2.0 * s * s))
        if self.family == "tophat":
            return (np.abs(z) <= s).astype(float)
        if self.family == "exponential":
            return np.exp(-np.abs(z) / s)
        if self.family == "mexican_hat":
            wide = MEXICAN_HAT_WIDTH_FACTOR * s
            return (np.exp(-(z * z) / (2.0 * s * s))
                    - self.inhibition_ratio * np.exp(-(z * z) / (2.0 * wide * wide)))
        return np.asarray(self.func(z), dtype=float)


@dataclass(eq=False)
class Kernel:
    """A kernel sampled on a grid.

    ``matrix[i, j]`` approximates K(x_i, x_j) including any normalization
    scalings applied so far. For convolution kernels the profile plus the
    row/column scaling vectors are kept so that application can run through a
    zero-padded FFT instead of the dense matrix. Treat instances as immutable;
    the normalization operations return new kernels.
    """

    grid: Grid
    matrix: np.ndarray
    profile: KernelProfile | None = None
    is_convolution: bool = False
    normalization: str = "none"  # none | columns | balanced
    row_scale: np.ndarray | None = None
    col_scale: np.ndarray | None = None
    _offset_table: np.ndarray | None = _field(default=None, init=False, repr=False)

    @property
    def normalized(self) -> bool:
        return self.normalization != "none"

    @property
    def family(self) -> str:
        return self.profile.family if self.profile is not None else "general"

    @property
    def min_entry(self) -> float:
        return float(self.matrix.min())

    @property
    def strictly_positive(self) -> bool:
        """Whether K > 0 pointwise on the grid (assumed, not required, by the theory)."""
        return self.min_entry > 0.0

    def __repr__(self) -> str:
        return (f"Kernel(family={self.family}, n={self.grid.n_nodes}, "
                f"normalization={self.normalization})")


def _check_finite(matrix: np.ndarray) -> None:
    if not np.all(np.isfinite(matrix)):
        i, j = np.argwhere(~np.isfinite(matrix))[0]
        raise KernelError(f"kernel value at node pair ({i}, {j}) is not finite")


def sample_general_kernel(func: Callable, grid: Grid) -> Kernel:
    """Sample K(x, y) at all node pairs. ``func`` may be scalar or vectorized."""
    pts = grid.nodes
    n = grid.n_nodes
    matrix = None
    try:
        if grid.dim == 1:
            x = pts[:, 0]
            cand = np.asarray(func(x[:, None], x[None, :]), dtype=float)
        else:
            cand = np.asarray(func(pts[:, None, :], pts[None, :, :]), dtype=float)
        if cand.shape == (n, n):
            matrix = cand
    except Exception:
        matrix = None
    if matrix is None:
        if grid.dim == 1:
            x = pts[:, 0]
            matrix = np.array([[float(func(xi, xj)) for xj in x] for xi in x])
        else:
            matrix = np.array([[float(func(p, q)) for q in pts] for p in pts])
    _check_finite(matrix)
    return Kernel(grid, matrix)


def sample_convolution_kernel(profile: KernelProfile, grid: Grid) -> Kernel:
    """Sample K_ij = phi(x_i - x_j); in 2D phi acts on the Euclidean offset."""
    pts = grid.nodes
    if grid.dim == 1:
        offsets = pts[:, 0][:, None] - pts[:, 0][None, :]
    else:
        offsets = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
    matrix = np.asarray(profile(offsets), dtype=float)
    _check_finite(matrix)
    if profile.family in ("gaussian", "tophat", "exponential") and matrix.min() < 0:
        raise KernelError(f"{profile.family} profile produced negative entries")
    ones = np.ones(grid.n_nodes)
    return Kernel(grid, matrix, profile=profile, is_convolution=True,
                  row_scale=ones, col_scale=ones.copy())


def normalize_columns(kernel: Kernel) -> Kernel:
    """Rescale each column so its weighted sum is one.

    Columns whose sampled support is only the diagonal node cannot represent
    any neighbour interaction at this resolution (a tophat narrower than the
    grid spacing, say) and are rejected as degenerate, as are columns with
    nonpositive weighted sums.
    """
    w = kernel.grid.weights
    sums = w @ kernel.matrix
    support = np.count_nonzero(kernel.matrix, axis=0)
    bad = (sums <= 0) | (support < 2)
    if np.any(bad):
        j = int(np.argmax(bad))
        raise KernelError(
            f"degenerate kernel: column {j} has weighted sum {sums[j]:.3g} and "
            f"{support[j]} nonzero entries; the profile is unresolved on this grid")
    matrix = kernel.matrix / sums[None, :]
    col = None if kernel.col_scale is None else kernel.col_scale / sums
    return replace(kernel, matrix=matrix, normalization="columns", col_scale=col)


def symmetrize_and_normalize(kernel: Kernel, max_iterations: int = 5000,
                             tol: float = 1e-12) -> Kernel:
    """Sinkhorn balancing: weighted row and column sums both driven to one.

    The input must be entrywise nonnegative with no zero row or column. A
    symmetric input is scaled by a single vector, so symmetry is preserved
    exactly; a nonsymmetric input gets the usual alternating row/column
    scaling.
    """
    K = kernel.matrix
    if K.min() < 0:
        raise KernelError("balancing requires an entrywise nonnegative kernel")
    w = kernel.grid.weights
    if np.any(K @ w <= 0) or np.any(w @ K <= 0):
        raise KernelError("balancing requires no zero row or column")

    if np.array_equal(K, K.T):
        d = 1.0 / np.sqrt(K @ w)
        err = math.inf
        for _ in range(max_iterations):
            s = d * (K @ (w * d))
            err = float(np.max(np.abs(s - 1.0)))
            if err <= tol:
                break
            d = d / np.sqrt(s)
        if err > tol:
            raise BalancingError(
                f"balancing stalled at deviation {err:.3g} after "
                f"{max_iterations} iterations (tol {tol:.3g})")
        matrix = np.outer(d, d) * K
        row, col = d, d
    else:
        r = np.ones(kernel.grid.n_nodes)
        err = math.inf
        for _ in range(max_iterations):
            c = 1.0 / ((w * r) @ K)
            r = 1.0 / (K @ (w * c))
            err = float(np.max(np.abs(c * ((w * r) @ K) - 1.0)))
            if err <= tol:
                break
        if err > tol:
            raise BalancingError(
                f"balancing stalled at deviation {err:.3g} after "
                f"{max_iterations} iterations (tol {tol:.3g})")
        matrix = (r[:, None] * K) * c[None, :]
        row, col = r, c

    new_row = None if kernel.row_scale is None else kernel.row_scale * row
    new_col = None if kernel.col_scale is None else kernel.col_scale * col
    return replace(kernel, matrix=matrix, normalization="balanced",
                   row_scale=new_row, col_scale=new_col)


def _offset_table(kernel: Kernel) -> np.ndarray:
    """Profile values over all node offsets, the FFT path's convolution stencil."""
    if kernel._offset_table is None:
        grid = kernel.grid
        if grid.dim == 1:
            (n,), (h,) = grid.counts, grid.spacing
            table = kernel.profile(np.arange(-(n - 1), n) * h)
        else:
            (n0, n1), (h0, h1) = grid.counts, grid.spacing
            z0 = np.arange(-(n0 - 1), n0) * h0
            z1 = np.arange(-(n1 - 1), n1) * h1
            table = kernel.profile(np.hypot(z0[:, None], z1[None, :]))
        kernel._offset_table = np.asarray(table, dtype=float)
    return kernel._offset_table


def apply_kernel(kernel: Kernel, field: Field, method: str = "auto") -> Field:
    """Weighted application (K[u])_i = sum_j w_j K_ij u_j.

    ``method`` is ``"dense"``, ``"fft"`` (zero-padded linear convolution,
    available for convolution kernels on these uniform grids), or ``"auto"``
    which picks FFT only when the grid is large enough for it to win.
    """
    grid = kernel.grid
    if not field.grid.same_layout(grid):
        raise ShapeError("field does not live on the kernel's grid")
    if method == "auto":
        method = "fft" if (kernel.is_convolution
                           and grid.n_nodes >= _FFT_AUTO_THRESHOLD) else "dense"
    if method == "dense":
        return Field(grid, kernel.matrix @ (grid.weights * field.values))
    if method != "fft":
        raise ValidationError(f"unknown apply method {method!r}")
    if not kernel.is_convolution or kernel.profile is None:
        raise ValidationError("fft application needs a convolution kernel")
    src = grid.weights * field.values
    if kernel.col_scale is not None:
        src = src * kernel.col_scale
    out = fftconvolve(_offset_table(kernel), src.reshape(grid.shape),
                      mode="valid").ravel()
    if kernel.row_scale is not None:
        out = kernel.row_scale * out
    return Field(grid, out)


@dataclass(frozen=True, eq=False)
class PositivityCertificate:
    """Outcome of a positivity check.

    ``witness`` is the smallest eigenvalue of the symmetrized weighted matrix
    (eigen method) or the smallest real part of the profile transform
    (bochner method). ``tolerance`` is the absolute slack that was used, so
    ``verdict == "positive"`` iff ``witness >= -tolerance``.
    """

    method: str
    verdict: str  # positive | not_positive | inconclusive
    witness: float
    tolerance: float
    violating_direction: np.ndarray | None = None
    violating_frequency: float | None = None

    def __repr__(self) -> str:
        return (f"PositivityCertificate({self.method}, {self.verdict}, "
                f"witness={self.witness:.6g})")


def certify_positivity_eigen(kernel: Kernel, tol: float = 1e-9) -> PositivityCertificate:
    """Eigenvalue certificate for the weighted quadratic form of a sampled kernel.

    Forms M = D_w K D_w, symmetrizes, and checks the smallest eigenvalue
    against ``-tol * max(1, ||M||_inf)`` so discretization noise near zero
    cannot flip the verdict.
    """
    w = kernel.grid.weights
    M = (w[:, None] * kernel.matrix) * w[None, :]
    S = 0.5 * (M + M.T)
    scale = max(1.0, float(np.max(np.abs(M).sum(axis=1))))
    threshold = tol * scale
    try:
        eigvals, eigvecs = np.linalg.eigh(S)
    except np.linalg.LinAlgError:
        return PositivityCertificate("eigen", "inconclusive", math.nan, threshold)
    lam = float(eigvals[0])
    if lam >= -threshold:
        return PositivityCertificate("eigen", "positive", lam, threshold)
    return PositivityCertificate("eigen", "not_positive", lam, threshold,
                                 violating_direction=eigvecs[:, 0].copy())


def default_half_width(profile: KernelProfile, tol: float = 1e-9) -> float:
    """Window half-width at which the profile has decayed below ``tol``."""
    eps = min(tol, 1e-9)
    s = profile.sigma
    if profile.family == "gaussian":
        return 1.5 * s * math.sqrt(2.0 * math.log(1.0 / eps))
    if profile.family == "tophat":
        return 2.0 * s
    if profile.family == "exponential":
        return 1.5 * s * math.log(1.0 / eps)
    if profile.family == "mexican_hat":
        wide = MEXICAN_HAT_WIDTH_FACTOR * s
        return 1.5 * wide * math.sqrt(2.0 * math.log(1.0 / eps))
    raise ValidationError("custom profiles need an explicit half_width")


def certify_positivity_bochner(profile: KernelProfile, n_samples: int = 2048,
                               half_width: float | None = None,
                               tol: float = 1e-9, dim: int = 1) -> PositivityCertificate:
    """Fourier certificate for convolution profiles.

    Samples phi on a symmetric window, takes the discrete Fourier transform,
    and reports the smallest real part. A positive verdict certifies the
    quadratic form on any bounded domain. ``dim=2`` runs the radial profile
    through a 2D transform on a square window.
    """
    if dim not in (1, 2):
        raise ValidationError(f"bochner check supports dim 1 or 2, got {dim}")
    if half_width is None:
        half_width = default_half_width(profile, tol)
    if not half_width > 0:
        raise ValidationError("half_width must be positive")
    n = int(n_samples)
    if n < 16:
        raise ValidationError("need at least 16 samples for the transform")
    n += n % 2
    delta = 2.0 * half_width / n
    z = (np.arange(n) - n // 2) * delta

    vals = np.asarray(profile(z), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise KernelError("profile is not finite on the sampling window")
    peak = float(np.max(np.abs(vals)))
    if peak == 0.0:
        raise KernelError("profile vanishes identically on the window")
    edge = max(abs(float(vals[0])),
               abs(float(np.asarray(profile(np.array([half_width])))[0])))
    if edge > max(tol, 1e-15) * peak:
        raise KernelError(
            f"window too small: |phi| at the edge is {edge:.3g} "
            f"(tolerance {max(tol, 1e-15) * peak:.3g}); enlarge half_width")
    asym = float(np.max(np.abs(vals[1:] - vals[1:][::-1])))
    if asym > max(tol, 1e-13) * peak:
        raise KernelError(
            f"asymmetric profile: max |phi(z) - phi(-z)| = {asym:.3g}")

    if dim == 1:
        spectrum = np.fft.fft(np.fft.ifftshift(vals)) * delta
        freq_mag = np.abs(2.0 * np.pi * np.fft.fftfreq(n, d=delta))
    else:
        vals2 = np.asarray(profile(np.hypot(z[:, None], z[None, :])), dtype=float)
        spectrum = np.fft.fft2(np.fft.ifftshift(vals2)) * delta**2
        f1 = 2.0 * np.pi * np.fft.fftfreq(n, d=delta)
        freq_mag = np.hypot(f1[:, None], f1[None, :])

    scale = float(np.max(np.abs(spectrum)))
    threshold = tol * scale
    if float(np.max(np.abs(spectrum.imag))) > max(threshold, 1e-12 * scale):
        raise KernelError("transform has a nontrivial imaginary part; "
                          "the sampled profile is not even")
    re = spectrum.real
    witness = float(re.min())
    if witness >= -threshold:
        return PositivityCertificate("bochner", "positive", witness, threshold)
    bad = np.unravel_index(int(np.argmin(re)), re.shape)
    return PositivityCertificate("bochner", "not_positive", witness, threshold,
                                 violating_frequency=float(freq_mag[bad]))
