"""Uniform tensor grids, weight sampling, and singular-kernel tables.

Functions live on a box [-L, L]^dim (dim 1 or 2) split into n^dim equal
cells and are treated as identically zero outside the box.  A field is
piecewise constant with one value per cell, collocated at cell centers.

The kernel table precomputes the pairwise interaction
``K[i, j] = |x_i - x_j|^(-(dim + s*p))`` between cell centers together
with the per-cell exterior mass ``rho[i] = integral over box^c of
|x_i - y|^(-(dim + s*p)) dy``, which accounts for the zero extension.
The exterior mass combines midpoint quadrature over a ring of cells
(same spacing, out to ``ext_radius``) with the closed-form radial tail

    integral_{|z| > R} |z|^(-(dim + s*p)) dz = sigma_{dim-1} * R^(-s*p) / (s*p)

evaluated at ``R = ext_radius - |x_i|`` (sigma_0 = 2, sigma_1 = 2*pi).

All types are immutable after construction; value arrays are marked
read-only.  Sums use numpy's fixed-order pairwise reduction, so results
are reproducible run to run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import DomainError

SPHERE_SURFACE = {1: 2.0, 2: 2.0 * math.pi}


@dataclass(frozen=True)
class FracParams:
    """Differentiability order s in (0, 1) and integrability exponent p > 1."""

    s: float
    p: float

    def __post_init__(self):
        if not 0.0 < self.s < 1.0:
            raise DomainError(f"s must lie in (0, 1), got s={self.s}")
        if not self.p > 1.0:
            raise DomainError(f"p must exceed 1, got p={self.p}")

    @property
    def sp(self) -> float:
        return self.s * self.p

    def validate_for_dim(self, dim: int) -> None:
        # The standing constraint is s*p < dim; equality is admitted so the
        # borderline case s=0.5, p=2 remains usable on the line.
        if self.sp > dim:
            raise DomainError(
                f"s*p = {self.sp} exceeds the dimension {dim}; "
                "the kernel exponent is out of range"
            )


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centered grid on [-half_width, half_width]^dim."""

    dim: int
    half_width: float
    cells_per_dim: int
    spacing: float
    cell_measure: float
    centers: np.ndarray  # (n_cells, dim)

    @property
    def n_cells(self) -> int:
        return self.centers.shape[0]

    @property
    def total_measure(self) -> float:
        return self.n_cells * self.cell_measure

    def radii(self) -> np.ndarray:
        """Euclidean distance of each cell center from the origin."""
        return np.sqrt((self.centers**2).sum(axis=1))

    def index_nearest(self, point: Sequence[float]) -> int:
        pt = np.asarray(point, dtype=float).reshape(1, -1)
        if pt.shape[1] != self.dim:
            raise DomainError(f"point has {pt.shape[1]} coordinates, grid is {self.dim}-d")
        d2 = ((self.centers - pt) ** 2).sum(axis=1)
        return int(np.argmin(d2))


def _axis_centers(half_width: float, n: int) -> np.ndarray:
    # (k - (n-1)/2) * h equals -L + (k + 1/2) h but is exactly sign-symmetric
    h = 2.0 * half_width / n
    return (np.arange(n) - (n - 1) / 2.0) * h


def build_grid(dim: int, half_width: float, cells_per_dim: int) -> Grid:
    """Construct the uniform grid; centers at -L + (k + 1/2) h per axis.

    2-d cells are enumerated row-major: index i*n + j addresses center
    (x_i, y_j).
    """
    if dim not in (1, 2):
        raise DomainError(f"dim must be 1 or 2, got {dim}")
    if cells_per_dim < 2:
        raise DomainError(f"cells_per_dim must be >= 2, got {cells_per_dim}")
    if not half_width > 0:
        raise DomainError(f"half_width must be positive, got {half_width}")
    axis = _axis_centers(half_width, cells_per_dim)
    if dim == 1:
        centers = axis.reshape(-1, 1)
    else:
        xx, yy = np.meshgrid(axis, axis, indexing="ij")
        centers = np.column_stack([xx.ravel(), yy.ravel()])
    centers.setflags(write=False)
    h = 2.0 * half_width / cells_per_dim
    return Grid(
        dim=dim,
        half_width=float(half_width),
        cells_per_dim=int(cells_per_dim),
        spacing=h,
        cell_measure=h**dim,
        centers=centers,
    )


@dataclass(frozen=True)
class GridFunction:
    """Piecewise-constant real field: one value per grid cell."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.n_cells,):
            raise DomainError(
                f"value vector has shape {vals.shape}, expected ({self.grid.n_cells},)"
            )
        if not np.all(np.isfinite(vals)):
            raise DomainError("grid function contains non-finite values")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def with_values(self, values: np.ndarray) -> "GridFunction":
        return GridFunction(self.grid, values)

    def __neg__(self) -> "GridFunction":
        return GridFunction(self.grid, -self.values)


def same_grid(a: GridFunction, b: GridFunction) -> None:
    if a.grid is not b.grid and (
        a.grid.dim != b.grid.dim
        or a.grid.cells_per_dim != b.grid.cells_per_dim
        or a.grid.half_width != b.grid.half_width
    ):
        raise DomainError("grid functions live on different grids")


# ---------------------------------------------------------------------------
# Weight specifications
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float

    def contains(self, pts: np.ndarray) -> np.ndarray:
        c = np.asarray(self.center, dtype=float)
        return ((pts - c) ** 2).sum(axis=1) <= self.radius**2


@dataclass(frozen=True)
class HalfSpace:
    """Points with coordinate[axis] > threshold (side='right') or < (side='left')."""

    axis: int = 0
    threshold: float = 0.0
    side: str = "right"

    def contains(self, pts: np.ndarray) -> np.ndarray:
        if self.side == "right":
            return pts[:, self.axis] > self.threshold
        return pts[:, self.axis] < self.threshold


Region = Union[Ball, HalfSpace]


@dataclass(frozen=True)
class PowerLaw:
    """w(x) = amplitude * |x|^(-alpha), alpha >= 0.

    A cell whose center coincides with the origin is evaluated at a point
    offset by h/4 along each axis, which sidesteps the singularity.
    """

    alpha: float
    amplitude: float = 1.0

    def __post_init__(self):
        if self.alpha < 0:
            raise DomainError("power-law exponent must be >= 0")


@dataclass(frozen=True)
class GaussianBump:
    """w(x) = amplitude * exp(-|x - center|^2 / (2 sigma^2))."""

    sigma: float
    center: tuple = ()
    amplitude: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError("gaussian width must be positive")


@dataclass(frozen=True)
class Indicator:
    region: Region
    amplitude: float = 1.0


@dataclass(frozen=True)
class Difference:
    """w = w1 - w2 where both parts sample to non-negative fields."""

    w1: "WeightSpec"
    w2: "WeightSpec"


@dataclass(frozen=True)
class FromFile:
    path: str


WeightSpec = Union[PowerLaw, GaussianBump, Indicator, Difference, FromFile]


def _sample_spec(grid: Grid, spec) -> np.ndarray:
    pts = grid.centers
    if isinstance(spec, PowerLaw):
        eval_pts = pts
        if spec.alpha > 0:
            r = np.sqrt((pts**2).sum(axis=1))
            near_origin = r < 0.25 * grid.spacing
            if np.any(near_origin):
                eval_pts = pts.copy()
                eval_pts[near_origin] += 0.25 * grid.spacing
        r = np.sqrt((eval_pts**2).sum(axis=1))
        return spec.amplitude * np.power(r, -spec.alpha)
    if isinstance(spec, GaussianBump):
        c = np.zeros(grid.dim) if not spec.center else np.asarray(spec.center, dtype=float)
        d2 = ((pts - c) ** 2).sum(axis=1)
        return spec.amplitude * np.exp(-d2 / (2.0 * spec.sigma**2))
    if isinstance(spec, Indicator):
        return spec.amplitude * spec.region.contains(pts).astype(float)
    if isinstance(spec, Difference):
        v1 = _sample_spec(grid, spec.w1)
        v2 = _sample_spec(grid, spec.w2)
        if np.any(v1 < 0) or np.any(v2 < 0):
            raise DomainError("difference parts must sample to non-negative fields")
        return v1 - v2
    if isinstance(spec, FromFile):
        from .io import read_grid_function_values

        vals = read_grid_function_values(spec.path)
        if vals.shape != (grid.n_cells,):
            raise DomainError(
                f"file {spec.path!r} holds {vals.shape[0]} values, grid has {grid.n_cells} cells"
            )
        return vals
    if callable(spec):
        vals = np.array([float(spec(*xy)) for xy in pts])
        return vals
    raise DomainError(f"unrecognized weight specification {spec!r}")


def sample(grid: Grid, spec) -> GridFunction:
    """Collocate a weight spec or analytic callable at the cell centers."""
    vals = _sample_spec(grid, spec)
    if not np.all(np.isfinite(vals)):
        raise DomainError("sampled field contains NaN or infinity")
    return GridFunction(grid, vals)


# ---------------------------------------------------------------------------
# Kernel table
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KernelTable:
    """Pairwise singular kernel plus exterior-interaction mass for a grid."""

    grid: Grid
    params: FracParams
    ext_radius: float
    pair_kernel: np.ndarray    # (M, M), zero diagonal
    exterior_mass: np.ndarray  # (M,)

    @property
    def cell_measure(self) -> float:
        return self.grid.cell_measure


def _pairwise_kernel(centers: np.ndarray, exponent: float) -> np.ndarray:
    diff = centers[:, None, :] - centers[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=-1))
    m = dist.shape[0]
    with np.errstate(divide="ignore"):
        kern = np.power(dist, -exponent)
    kern[np.arange(m), np.arange(m)] = 0.0
    return kern


def _ring_centers(grid: Grid, ext_radius: float) -> tuple[np.ndarray, float]:
    """Cell centers of the exterior ring, plus the realized outer radius.

    The ring reuses the grid spacing; the requested radius is rounded up to
    a whole number of cells so quadrature and tail meet exactly.
    """
    L, h, n = grid.half_width, grid.spacing, grid.cells_per_dim
    m = int(math.ceil((ext_radius - L) / h - 1e-12))
    outer = L + m * h
    ext_axis = _axis_centers(outer, n + 2 * m)
    if grid.dim == 1:
        all_pts = ext_axis.reshape(-1, 1)
    else:
        xx, yy = np.meshgrid(ext_axis, ext_axis, indexing="ij")
        all_pts = np.column_stack([xx.ravel(), yy.ravel()])
    inside = np.all(np.abs(all_pts) < L, axis=1)
    return all_pts[~inside], outer


def tail_mass(dim: int, sp: float, radius: float) -> float:
    """Closed-form integral of |z|^(-(dim+sp)) over {|z| > radius}."""
    if radius <= 0:
        raise DomainError(f"tail radius must be positive, got {radius}")
    return SPHERE_SURFACE[dim] * radius ** (-sp) / sp


def build_kernel_table(grid: Grid, fp: FracParams, ext_radius: float) -> KernelTable:
    """Assemble the pairwise kernel and exterior mass for (grid, s, p).

    ``ext_radius`` must be at least twice the box half-width; the ring
    quadrature runs out to it (rounded up to whole cells) and the analytic
    tail covers the remainder.
    """
    fp.validate_for_dim(grid.dim)
    if ext_radius < 2.0 * grid.half_width:
        raise DomainError(
            f"ext_radius {ext_radius} must be at least twice the half-width "
            f"{grid.half_width}"
        )
    exponent = grid.dim + fp.sp
    kern = _pairwise_kernel(grid.centers, exponent)
    kern.setflags(write=False)

    ring, outer = _ring_centers(grid, ext_radius)
    diff = grid.centers[:, None, :] - ring[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=-1))
    # per-row sorted accumulation: cells related by a grid symmetry see the
    # same value multiset, so their masses come out bitwise equal
    ring_sum = np.sort(np.power(dist, -exponent), axis=1).sum(axis=1) * grid.cell_measure

    center_norms = grid.radii()
    tail_radii = outer - center_norms
    if np.any(tail_radii <= 0):
        raise DomainError("ext_radius leaves a non-positive tail radius for some cell")
    tails = SPHERE_SURFACE[grid.dim] * tail_radii ** (-fp.sp) / fp.sp

    rho = ring_sum + tails
    rho.setflags(write=False)
    return KernelTable(
        grid=grid,
        params=fp,
        ext_radius=float(outer),
        pair_kernel=kern,
        exterior_mass=rho,
    )
