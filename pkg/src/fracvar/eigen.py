"""Weighted nonlocal eigenproblem: energy descent on the mass constraint.

The first eigenvalue is the minimum of the energy E(u) over the constraint
set { W(u) = sum_i w_i |u_i|^p m = 1 } with a sign-changing weight
w = w1 - w2 (w1, w2 >= 0, w1 not identically zero).  The solver performs
plain descent with backtracking:

    g_i = gateaux(u, e_i) - lam * w_i |u_i|^(p-2) u_i * m,   lam = E(u),

steps u <- u - eta g, shrinks eta until the weighted mass stays positive
and the renormalized energy decreases, then rescales u so W(u) = 1 exactly
(the constraint is p-homogeneous, so radial rescaling is exact and cheap).
Note g is tangent to the constraint at u, since <g, u> = E(u) - lam = 0.

Higher eigenvalues come from deflation: previously found eigenfunctions
u_k enter through the pairing pi_k(u) = sum_i w_i |u_k,i|^(p-2) u_k,i u_i m
(the natural dual pairing from the Euler-Lagrange right side), enforced by
a quadratic penalty with x10 continuation.  For p = 2 this reproduces the
dense generalized eigensolver's spectrum; for general p it is a documented
heuristic approximation of the min-max levels.

A dense p = 2 cross-check (``linear_oracle``) solves A u = lam M u with the
assembled stiffness matrix A and diagonal weight matrix M, restricted to
directions of positive weighted mass.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .energy import raw_energy, raw_gateaux_vector, stiffness_matrix
from .errors import ConvergenceError, DomainError
from .grid import GridFunction, KernelTable, same_grid


@dataclass(frozen=True)
class Weight:
    """Sign-changing weight w = w1 - w2 with non-negative parts."""

    w1: GridFunction
    w2: GridFunction

    def __post_init__(self):
        same_grid(self.w1, self.w2)
        if np.any(self.w1.values < 0) or np.any(self.w2.values < 0):
            raise DomainError("weight parts must be non-negative cellwise")
        if not np.any(self.w1.values > 0):
            raise DomainError("w1 must not vanish identically")

    @property
    def combined(self) -> GridFunction:
        return GridFunction(self.w1.grid, self.w1.values - self.w2.values)

    @staticmethod
    def from_function(w: GridFunction) -> "Weight":
        pos = np.maximum(w.values, 0.0)
        neg = np.maximum(-w.values, 0.0)
        return Weight(GridFunction(w.grid, pos), GridFunction(w.grid, neg))

    @staticmethod
    def constant(grid, value: float = 1.0) -> "Weight":
        if value <= 0:
            raise DomainError("constant weight must be positive")
        ones = GridFunction(grid, np.full(grid.n_cells, value))
        zero = GridFunction(grid, np.zeros(grid.n_cells))
        return Weight(ones, zero)

    def swapped(self) -> "Weight":
        """The weight -w, with the roles of the parts exchanged.

        Minimizing the quotient against -w produces the negative spectrum
        of the original problem (an eigenvalue mu of the swapped weight is
        the eigenvalue -mu of w); it requires w2 not identically zero.
        """
        return Weight(self.w2, self.w1)


@dataclass(frozen=True)
class EigenOptions:
    tol: float = 1e-6              # relative weak residual
    max_iter: int = 50000
    armijo: float = 1e-4
    shrink: float = 0.5
    initial_step: float = 1.0
    penalty_init: float = 10.0     # times max(1, lam of previous level)
    penalty_growth: float = 10.0
    penalty_max: float = 1e12
    orth_tol: float = 1e-7         # |pairing with previous levels| at exit
    collapse_alignment: float = 0.99
    negative_mode: bool = False    # solve against -w (swapped weight parts)
    seed: int = 0


@dataclass(frozen=True)
class EigenResult:
    lam: float
    u: GridFunction
    residual: float
    iterations: int
    constraint_gap: float


def _phi(t, p):
    return np.sign(t) * np.abs(t) ** (p - 1.0)


def _mass(vals, wvals, p, m):
    return float((wvals * np.abs(vals) ** p).sum() * m)


def _normalize(vals, wvals, p, m):
    mass = _mass(vals, wvals, p, m)
    if mass <= 0.0:
        raise DomainError("weighted p-mass is non-positive; iterate left the cone")
    return vals / mass ** (1.0 / p)


def default_start(wt: Weight, kt: KernelTable) -> np.ndarray:
    """A bump at the peak of w1, narrowed until the weighted mass is positive."""
    grid = kt.grid
    p, m = kt.params.p, kt.cell_measure
    wvals = wt.combined.values
    x0 = grid.centers[int(np.argmax(wt.w1.values))]
    widths = [grid.half_width / 4, grid.half_width / 8, grid.half_width / 16,
              2 * grid.spacing, grid.spacing]
    for sigma in widths:
        d2 = ((grid.centers - x0) ** 2).sum(axis=1)
        vals = np.exp(-d2 / (2.0 * sigma**2))
        if _mass(vals, wvals, p, m) > 0:
            return vals
    i = int(np.argmax(wvals))
    if wvals[i] > 0:
        vals = np.zeros(grid.n_cells)
        vals[i] = 1.0
        return vals
    raise DomainError("no candidate with positive weighted mass; "
                      "the constraint set is empty on this grid")


def seeded_start(wt: Weight, kt: KernelTable, rng: np.random.Generator) -> np.ndarray:
    base = default_start(wt, kt)
    noise = rng.standard_normal(kt.grid.n_cells)
    wvals = wt.combined.values
    p, m = kt.params.p, kt.cell_measure
    amp = 0.75
    for _ in range(40):
        cand = base + amp * noise * float(np.max(np.abs(base)))
        if _mass(cand, wvals, p, m) > 0:
            return cand
        amp *= 0.5
    return base


def _descend(wt: Weight, kt: KernelTable, u0: np.ndarray, opts: EigenOptions,
             deflate: tuple = ()) -> tuple[np.ndarray, float, float, int]:
    """Monotone backtracking descent of the (optionally penalized) energy.

    Returns (u, lam, residual, iterations); raises ConvergenceError on
    stagnation or iteration exhaustion, carrying the last iterate.
    """
    p = kt.params.p
    m = kt.cell_measure
    wvals = wt.combined.values
    pair_vecs = [wvals * _phi(uk, p) * m for uk, _mu in deflate]
    mus = [mu for _uk, mu in deflate]

    def objective(vals):
        f = raw_energy(vals, kt)
        for b, mu in zip(pair_vecs, mus):
            f += mu * float(b @ vals) ** 2
        return f

    u = _normalize(np.asarray(u0, dtype=float), wvals, p, m)
    energy = raw_energy(u, kt)
    obj = objective(u)
    step = opts.initial_step
    prev = None

    for it in range(1, opts.max_iter + 1):
        gate = raw_gateaux_vector(u, kt)
        grad = gate.copy()
        pis = []
        for b, mu in zip(pair_vecs, mus):
            pi = float(b @ u)
            pis.append(pi)
            grad += (2.0 * mu / p) * pi * b
        lam_hat = energy
        for pi, mu in zip(pis, mus):
            lam_hat += (2.0 * mu / p) * pi * pi
        residual_vec = grad - lam_hat * wvals * _phi(u, p) * m
        residual = float(np.max(np.abs(residual_vec))) / max(energy, 1e-300)
        if residual <= opts.tol:
            return u, energy, residual, it - 1

        if prev is not None:
            du = u - prev[0]
            dg = residual_vec - prev[1]
            denom = float(du @ dg)
            if denom > 0:
                step = float(du @ du) / denom
            else:
                step = min(step * 2.0, 1e8)
        step = float(np.clip(step, 1e-16, 1e8))
        prev = (u.copy(), residual_vec.copy())

        norm2 = float(residual_vec @ residual_vec)
        eta = step
        accepted = False
        for _ in range(70):
            cand = u - eta * residual_vec
            if _mass(cand, wvals, p, m) > 0:
                cand = _normalize(cand, wvals, p, m)
                cand_obj = objective(cand)
                if cand_obj <= obj - opts.armijo * eta * norm2:
                    accepted = True
                    break
            eta *= opts.shrink
        if not accepted:
            raise ConvergenceError(
                f"descent stagnated at residual {residual:.3e} (target {opts.tol:.1e})",
                result=_result_from(u, energy, residual, it, wt, kt),
            )
        u = cand
        obj = cand_obj
        energy = raw_energy(u, kt)
        step = eta

    raise ConvergenceError(
        f"no convergence within {opts.max_iter} iterations "
        f"(residual {residual:.3e}, target {opts.tol:.1e})",
        result=_result_from(u, energy, residual, opts.max_iter, wt, kt),
    )


def _result_from(u, lam, residual, iterations, wt, kt) -> EigenResult:
    gap = abs(_mass(u, wt.combined.values, kt.params.p, kt.cell_measure) - 1.0)
    return EigenResult(lam=lam, u=GridFunction(kt.grid, u), residual=residual,
                       iterations=iterations, constraint_gap=gap)


def first_eigenpair(wt: Weight, kt: KernelTable, opts: EigenOptions | None = None,
                    start: np.ndarray | None = None) -> EigenResult:
    """Minimize the energy over the unit-mass constraint set.

    The output is sign-normalized to be non-negative; a converged first
    eigenfunction has one sign, so only a global flip is ever applied.
    With ``opts.negative_mode`` the solve runs against the swapped weight
    -w; the returned level mu is then the eigenvalue -mu of the original
    problem.
    """
    opts = opts or EigenOptions()
    if opts.negative_mode:
        wt = wt.swapped()
    u0 = default_start(wt, kt) if start is None else start
    u, lam, residual, its = _descend(wt, kt, u0, opts)
    if u.sum() < 0:
        u = -u
    if np.any(u < 0) and np.any(u > 0):
        tol = 1e-8 * float(np.max(np.abs(u)))
        if (u < -tol).any() and (u > tol).any():
            warnings.warn("first eigenfunction changes sign beyond tolerance; "
                          "the iterate may be a higher critical point")
    return _result_from(u, lam, residual, its, wt, kt)


def linear_oracle(wt: Weight, kt: KernelTable) -> list[tuple[float, GridFunction]]:
    """Dense p = 2 cross-check via the generalized symmetric pencil.

    Solves M v = mu A v with the energy matrix A (positive definite) and
    M = diag(w m); directions with mu > 0 carry positive weighted mass and
    map to eigenvalues lam = 1/mu, returned sorted ascending with
    eigenfunctions normalized to unit weighted mass.
    """
    if kt.params.p != 2.0:
        raise DomainError("the dense oracle applies only to p = 2")
    a = stiffness_matrix(kt)
    wvals = wt.combined.values
    mmat = np.diag(wvals * kt.cell_measure)
    mus, vecs = scipy.linalg.eigh(mmat, a)
    out = []
    cutoff = 1e-12 * max(1.0, float(np.max(np.abs(mus))))
    for mu, v in zip(mus[::-1], vecs[:, ::-1].T):
        if mu <= cutoff:
            continue
        u = v / mu**0.5  # rescale so the weighted mass is exactly one
        if u.sum() < 0:
            u = -u
        out.append((float(1.0 / mu), GridFunction(kt.grid, u)))
    return out


def _pairing(uk: np.ndarray, vals: np.ndarray, wvals, p, m) -> float:
    return float((wvals * _phi(uk, p) * vals).sum() * m)


def deflated_start(wt: Weight, kt: KernelTable, previous, level: int,
                   rng: np.random.Generator) -> np.ndarray:
    """Oscillatory seed roughly cleared of the previously found levels."""
    grid = kt.grid
    p, m = kt.params.p, kt.cell_measure
    wvals = wt.combined.values
    base = default_start(wt, kt)
    t = np.clip(grid.centers[:, 0] / grid.half_width, -1.0, 1.0)
    pattern = np.cos((level - 1) * np.arccos(t))
    for _ in range(60):
        cand = base * pattern + 0.3 * rng.standard_normal(grid.n_cells)
        for res in previous:
            cand = cand - _pairing(res.u.values, cand, wvals, p, m) * res.u.values
        if _mass(cand, wvals, p, m) > 0:
            return cand
        pattern = rng.standard_normal(grid.n_cells)
    raise DomainError("could not seed a deflated start with positive mass")


def _deflated_solve(wt: Weight, kt: KernelTable, previous, opts: EigenOptions,
                    start: np.ndarray) -> EigenResult:
    """Penalty continuation: solve, tighten the penalty x10, warm-restart."""
    p, m = kt.params.p, kt.cell_measure
    wvals = wt.combined.values
    lam_scale = max(1.0, max(res.lam for res in previous))
    mu = opts.penalty_init * lam_scale
    u = start
    its = 0
    while True:
        deflate = tuple((res.u.values, mu) for res in previous)
        u, lam, residual, stage_its = _descend(wt, kt, u, opts, deflate=deflate)
        its += stage_its
        orth = max(abs(_pairing(res.u.values, u, wvals, p, m)) for res in previous)
        if orth <= opts.orth_tol:
            break
        mu *= opts.penalty_growth
        if mu > opts.penalty_max:
            raise ConvergenceError(
                f"deflation pairing stuck at {orth:.3e} despite penalty {mu:.1e}",
                result=_result_from(u, lam, residual, its, wt, kt),
            )
    for res in previous:
        denom = float(np.linalg.norm(u) * np.linalg.norm(res.u.values))
        if denom > 0 and abs(float(u @ res.u.values)) / denom > opts.collapse_alignment:
            raise ConvergenceError(
                "deflated solve collapsed onto a previous eigenfunction; "
                "increase the deflation penalty",
                result=_result_from(u, lam, residual, its, wt, kt),
            )
    if u.sum() < 0:
        u = -u
    return _result_from(u, lam, residual, its, wt, kt)


def second_eigenpair(wt: Weight, kt: KernelTable, first: EigenResult,
                     opts: EigenOptions | None = None) -> EigenResult:
    """Next energy level, constrained away from the first eigenfunction."""
    opts = opts or EigenOptions()
    if opts.negative_mode:
        wt = wt.swapped()
        opts = replace(opts, negative_mode=False)
    rng = np.random.default_rng(opts.seed)
    start = deflated_start(wt, kt, [first], 2, rng)
    res = _deflated_solve(wt, kt, [first], opts, start)
    if res.lam <= first.lam + 1e-6 * max(1.0, abs(first.lam)):
        warnings.warn(f"second level {res.lam} is not separated from the first "
                      f"{first.lam}")
    if sign_structure(res.u) != "sign_changing":
        warnings.warn("second eigenfunction does not change sign; the deflated "
                      "solve may have found a spurious critical point")
    return res


def eigen_sequence(wt: Weight, kt: KernelTable, k: int,
                   opts: EigenOptions | None = None) -> list[EigenResult]:
    """First k deflated levels, sorted non-decreasing in the eigenvalue."""
    if k < 1:
        raise DomainError("the requested number of levels must be >= 1")
    opts = opts or EigenOptions()
    rng = np.random.default_rng(opts.seed)
    results = [first_eigenpair(wt, kt, opts)]
    for level in range(2, k + 1):
        start = deflated_start(wt, kt, results, level, rng)
        results.append(_deflated_solve(wt, kt, results, opts, start))
    tail = sorted(results[1:], key=lambda r: r.lam)
    return [results[0]] + tail


def residual_check(lam: float, u: GridFunction, wt: Weight, kt: KernelTable) -> float:
    """Worst weak-form defect over basis directions, relative to the energy."""
    if not np.any(u.values):
        raise DomainError("residual check requires a nonzero function")
    p, m = kt.params.p, kt.cell_measure
    gate = raw_gateaux_vector(u.values, kt)
    rhs = lam * wt.combined.values * _phi(u.values, p) * m
    return float(np.max(np.abs(gate - rhs))) / raw_energy(u.values, kt)


@dataclass(frozen=True)
class PiconeResult:
    per_cell_min: GridFunction
    min_value: float


def picone_gap(u: GridFunction, v: GridFunction, p: float,
               kt: KernelTable | None = None, eps: float = 1e-8) -> PiconeResult:
    """Pairwise comparison term

        K(i, j) = |u_i - u_j|^p
                  - |v_i - v_j|^(p-2) (v_i - v_j) (u_i^p / v_i^(p-1)
                                                   - u_j^p / v_j^(p-1)),

    non-negative over all pairs for u >= 0, v > 0, vanishing exactly on the
    ray u = c v.  Returns the per-cell minimum over partners and the global
    minimum (the diagonal contributes zeros).
    """
    same_grid(u, v)
    if kt is not None and u.grid.n_cells != kt.grid.n_cells:
        raise DomainError("functions do not live on the kernel table's grid")
    if np.any(u.values < 0):
        raise DomainError("the comparison term requires u >= 0")
    if np.any(v.values < eps):
        raise DomainError(f"the comparison term requires v >= {eps} cellwise")
    uv = u.values
    vv = v.values
    # u^p / v^(p-1) computed as u (u/v)^(p-1): exact on the ray u = v
    ratio = uv * (uv / vv) ** (p - 1.0)
    dv = vv[:, None] - vv[None, :]
    du = uv[:, None] - uv[None, :]
    k = np.abs(du) ** p - _phi(dv, p) * (ratio[:, None] - ratio[None, :])
    per_cell = k.min(axis=1)
    return PiconeResult(GridFunction(u.grid, per_cell), float(k.min()))


def sign_structure(u: GridFunction, tol: float = 1e-8) -> str:
    """Classify as nonnegative / nonpositive / sign_changing at threshold
    tol * max|u|.  The zero function classifies as nonnegative."""
    peak = float(np.max(np.abs(u.values)))
    if peak == 0.0:
        warnings.warn("sign classification of the zero function is degenerate")
        return "nonnegative"
    thr = tol * peak
    has_pos = bool(np.any(u.values > thr))
    has_neg = bool(np.any(u.values < -thr))
    if has_pos and has_neg:
        return "sign_changing"
    return "nonpositive" if has_neg else "nonnegative"


@dataclass(frozen=True)
class SimplicityReport:
    lambdas: tuple
    lambda_spread: float
    function_spread: float
    midpoint_energy_gap: float      # J((phi1^p+phi2^p)/2)^(1/p) vs mean energy
    rayleigh_lower_gap: float       # J(Phi) - lam1 * W(Phi), >= 0 up to solver noise
    results: tuple


def simplicity_probe(wt: Weight, kt: KernelTable, restarts: int,
                     opts: EigenOptions | None = None) -> SimplicityReport:
    """First-level solves from independent seeded starts.

    Reports the worst pairwise eigenvalue difference, the worst pairwise
    sup-distance of the sign/scale-normalized eigenfunctions, and the hidden
    convexity of the energy along p-th-power midpoints of the minimizers.
    """
    if restarts < 2:
        raise DomainError("the probe needs at least 2 restarts")
    opts = opts or EigenOptions()
    p, m = kt.params.p, kt.cell_measure
    wvals = wt.combined.values
    results = []
    for j in range(restarts):
        rng = np.random.default_rng(opts.seed + j)
        start = seeded_start(wt, kt, rng)
        results.append(first_eigenpair(wt, kt, opts, start=start))
    lams = np.array([r.lam for r in results])
    lam_spread = float(lams.max() - lams.min())
    fun_spread = 0.0
    for a in range(len(results)):
        for b in range(a + 1, len(results)):
            d = float(np.max(np.abs(results[a].u.values - results[b].u.values)))
            fun_spread = max(fun_spread, d)

    phi1 = np.abs(results[0].u.values)
    phi2 = np.abs(results[1].u.values)
    midpoint = ((phi1**p + phi2**p) / 2.0) ** (1.0 / p)
    j_mid = raw_energy(midpoint, kt)
    mean_energy = 0.5 * (raw_energy(phi1, kt) + raw_energy(phi2, kt))
    w_mid = _mass(midpoint, wvals, p, m)
    lam1 = float(lams.min())
    return SimplicityReport(
        lambdas=tuple(float(x) for x in lams),
        lambda_spread=lam_spread,
        function_spread=fun_spread,
        midpoint_energy_gap=float(j_mid - mean_energy),
        rayleigh_lower_gap=float(j_mid - lam1 * w_mid),
        results=tuple(results),
    )
