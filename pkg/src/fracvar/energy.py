"""Nonlocal energy of a grid function and its first-order machinery.

For a piecewise-constant field u on the grid, the p-energy is the discrete
double integral over ordered pairs of cells plus the interaction with the
zero exterior:

    E(u) = sum_{i != j} |u_i - u_j|^p K[i,j] m^2  +  2 sum_i |u_i|^p rho_i m

with m the cell measure.  The within-cell contribution vanishes for
piecewise-constant u, which is why the kernel diagonal is zero.  The factor
2 on the boundary part counts both orders (x inside, y outside).

Everything else here is a derivative of E:

* ``nonlocal_gradient``     the field |Du|(x_i) with |Du|^p(x_i)
                            = sum_j |u_i-u_j|^p K[i,j] m + |u_i|^p rho_i,
                            so that sum_i |Du|^p(x_i) m + sum_i |u_i|^p rho_i m
                            reproduces E(u) exactly;
* ``gateaux``               the bilinear-in-v form (1/p) d/dt E(u + t v)|_0;
* ``frac_p_laplacian_apply``the weak residual density gateaux(u, e_i)/m;
* ``rayleigh_quotient``     E(u) divided by the weighted p-mass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .grid import GridFunction, KernelTable, same_grid


@dataclass(frozen=True)
class SeminormValue:
    value: float
    interior_part: float
    boundary_part: float


def _check(u: GridFunction, kt: KernelTable) -> None:
    if u.grid.n_cells != kt.grid.n_cells or u.grid.dim != kt.grid.dim:
        raise DomainError("grid function does not live on the kernel table's grid")
    if u.grid.half_width != kt.grid.half_width:
        raise DomainError("grid function does not live on the kernel table's grid")


def _phi(t: np.ndarray, p: float) -> np.ndarray:
    """|t|^(p-2) t with the continuous extension 0 at t = 0 (valid for p > 1)."""
    return np.sign(t) * np.abs(t) ** (p - 1.0)


def raw_energy(vals: np.ndarray, kt: KernelTable) -> float:
    """E(u) on a bare value array; no validation, used by inner solver loops."""
    p = kt.params.p
    m = kt.cell_measure
    diff = vals[:, None] - vals[None, :]
    interior = (np.abs(diff) ** p * kt.pair_kernel).sum() * m * m
    boundary = 2.0 * (np.abs(vals) ** p * kt.exterior_mass).sum() * m
    return float(interior + boundary)


def raw_gateaux_vector(vals: np.ndarray, kt: KernelTable) -> np.ndarray:
    """gateaux(u, e_i) on a bare value array; equals (1/p) grad E(u)."""
    p = kt.params.p
    m = kt.cell_measure
    diff = vals[:, None] - vals[None, :]
    row = (_phi(diff, p) * kt.pair_kernel).sum(axis=1)
    return 2.0 * row * m * m + 2.0 * _phi(vals, p) * kt.exterior_mass * m


def seminorm_p(u: GridFunction, kt: KernelTable) -> SeminormValue:
    """Evaluate E(u), split into interior and boundary parts."""
    _check(u, kt)
    p = kt.params.p
    m = kt.cell_measure
    vals = u.values
    diff = vals[:, None] - vals[None, :]
    interior = float((np.abs(diff) ** p * kt.pair_kernel).sum() * m * m)
    boundary = float(2.0 * (np.abs(vals) ** p * kt.exterior_mass).sum() * m)
    return SeminormValue(value=interior + boundary,
                         interior_part=interior,
                         boundary_part=boundary)


def nonlocal_gradient(u: GridFunction, kt: KernelTable) -> GridFunction:
    """The field |Du|(x_i), the p-th root of the per-cell energy density."""
    _check(u, kt)
    p = kt.params.p
    m = kt.cell_measure
    vals = u.values
    diff = vals[:, None] - vals[None, :]
    dens = (np.abs(diff) ** p * kt.pair_kernel).sum(axis=1) * m
    dens = dens + np.abs(vals) ** p * kt.exterior_mass
    return GridFunction(u.grid, dens ** (1.0 / p))


def gateaux_vector(u: GridFunction, kt: KernelTable) -> np.ndarray:
    """gateaux(u, e_i) for every basis direction at once.

    Component i equals 2 sum_j phi(u_i - u_j) K[i,j] m^2 + 2 phi(u_i) rho_i m,
    where phi(t) = |t|^(p-2) t.
    """
    _check(u, kt)
    return raw_gateaux_vector(u.values, kt)


def gateaux(u: GridFunction, v: GridFunction, kt: KernelTable) -> float:
    """(1/p) d/dt E(u + t v) at t = 0."""
    _check(u, kt)
    same_grid(u, v)
    p = kt.params.p
    m = kt.cell_measure
    du = u.values[:, None] - u.values[None, :]
    dv = v.values[:, None] - v.values[None, :]
    interior = float((_phi(du, p) * dv * kt.pair_kernel).sum() * m * m)
    boundary = float(2.0 * (_phi(u.values, p) * v.values * kt.exterior_mass).sum() * m)
    return interior + boundary


def frac_p_laplacian_apply(u: GridFunction, kt: KernelTable) -> GridFunction:
    """Weak residual density: gateaux(u, e_i) divided by the cell measure."""
    return GridFunction(u.grid, gateaux_vector(u, kt) / kt.cell_measure)


def weighted_mass(u: GridFunction, w: GridFunction, kt: KernelTable) -> float:
    """W(u) = sum_i w_i |u_i|^p m."""
    _check(u, kt)
    same_grid(u, w)
    return float((w.values * np.abs(u.values) ** kt.params.p).sum() * kt.cell_measure)


def rayleigh_quotient(u: GridFunction, w: GridFunction, kt: KernelTable) -> float:
    """E(u) / W(u); defined only where the weighted mass is positive."""
    wu = weighted_mass(u, w, kt)
    if wu <= 0.0:
        raise DomainError(f"weighted p-mass is {wu}; the quotient requires W(u) > 0")
    return seminorm_p(u, kt).value / wu


def stiffness_matrix(kt: KernelTable) -> np.ndarray:
    """Dense symmetric matrix A with u^T A u = E(u) when p = 2."""
    if kt.params.p != 2.0:
        raise DomainError("the quadratic stiffness matrix exists only for p = 2")
    m = kt.cell_measure
    kern = kt.pair_kernel
    row_sums = kern.sum(axis=1)
    a = -2.0 * m * m * kern
    idx = np.arange(kern.shape[0])
    a[idx, idx] = 2.0 * m * m * row_sums + 2.0 * m * kt.exterior_mass
    return a
