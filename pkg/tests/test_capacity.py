import numpy as np
import pytest

import fracvar as fv
from fracvar.energy import stiffness_matrix
from fracvar.errors import DomainError


def qp_capacity_oracle(mask, kt):
    """Dense p = 2 oracle: solve the KKT system on the free cells, clamp,
    and verify feasibility."""
    a = stiffness_matrix(kt)
    fixed = mask
    free = ~fixed
    rhs = -a[np.ix_(free, fixed)] @ np.ones(fixed.sum())
    uf = np.linalg.solve(a[np.ix_(free, free)], rhs)
    assert uf.min() > -1e-12 and uf.max() < 1 + 1e-12, "clamp would activate"
    u = np.zeros(mask.size)
    u[fixed] = 1.0
    u[free] = np.clip(uf, 0.0, 1.0)
    return float(u @ a @ u), u


class TestCapacity:
    def test_empty_target_degenerate(self, line_kt, line_grid):
        with pytest.warns(UserWarning):
            res = fv.capacity(fv.CellSet.empty(line_grid), line_kt)
        assert res.value == 0.0
        assert res.degenerate
        assert np.all(res.minimizer.values == 0.0)

    def test_single_cell_matches_qp_oracle(self, line_kt, line_grid):
        target = fv.CellSet.from_indices(line_grid, [line_grid.n_cells // 2])
        res = fv.capacity(target, line_kt)
        oracle_value, oracle_u = qp_capacity_oracle(target.mask, line_kt)
        assert res.value == pytest.approx(oracle_value, rel=1e-6)
        assert np.max(np.abs(res.minimizer.values - oracle_u)) < 1e-5
        assert np.all(res.minimizer.values[target.mask] == 1.0)
        assert res.minimizer.values.min() >= 0.0
        assert res.minimizer.values.max() <= 1.0

    def test_interval_matches_qp_oracle(self, line_kt, line_grid):
        target = fv.CellSet.ball(line_grid, (0.1,), 0.3)
        res = fv.capacity(target, line_kt)
        oracle_value, _ = qp_capacity_oracle(target.mask, line_kt)
        assert res.value == pytest.approx(oracle_value, rel=1e-6)

    def test_monotone_in_the_target(self, line_kt, line_grid, rng):
        for _ in range(5):
            idx = rng.choice(line_grid.n_cells, size=6, replace=False)
            small = fv.CellSet.from_indices(line_grid, idx[:3])
            large = fv.CellSet.from_indices(line_grid, idx)
            assert (fv.capacity(small, line_kt).value
                    <= fv.capacity(large, line_kt).value * (1 + 1e-9))

    def test_start_independent_value(self, line_kt, line_grid, rng):
        target = fv.CellSet.ball(line_grid, (0.0,), 0.2)
        a = fv.capacity(target, line_kt, start=np.zeros(line_grid.n_cells))
        b = fv.capacity(target, line_kt,
                        start=rng.uniform(0, 1, line_grid.n_cells))
        assert a.value == pytest.approx(b.value, rel=1e-6)

    def test_subadditive_on_disjoint_union(self, line_kt, line_grid):
        left = fv.CellSet.ball(line_grid, (-0.6,), 0.15)
        right = fv.CellSet.ball(line_grid, (0.6,), 0.15)
        union = fv.CellSet(line_grid, left.mask | right.mask)
        cl = fv.capacity(left, line_kt).value
        cr = fv.capacity(right, line_kt).value
        cu = fv.capacity(union, line_kt).value
        assert cu <= (cl + cr) * (1 + 1e-9)

    def test_relative_capacity_localization(self, line_kt, line_grid):
        # pinning the complement of B_2r to zero shrinks the admissible
        # class, so the relative value dominates; ratio stays bounded
        target_all = fv.CellSet.ball(line_grid, (0.0,), 0.4)
        ratios = []
        for r in (0.2, 0.3, 0.4):
            ball_r = fv.CellSet.ball(line_grid, (0.0,), r)
            target = fv.CellSet(line_grid, target_all.mask & ball_r.mask)
            dom = fv.CellSet.ball(line_grid, (0.0,), 2 * r)
            rel = fv.capacity(target, line_kt, domain=dom).value
            full = fv.capacity(target, line_kt).value
            assert rel >= full * (1 - 1e-9)
            ratios.append(rel / full)
        assert max(ratios) < 10.0

    def test_target_outside_domain_rejected(self, line_kt, line_grid):
        target = fv.CellSet.ball(line_grid, (0.6,), 0.1)
        domain = fv.CellSet.ball(line_grid, (0.0,), 0.3)
        with pytest.raises(DomainError):
            fv.capacity(target, line_kt, domain=domain)


class TestBallScaling:
    def test_line_slope(self):
        fp = fv.FracParams(0.4, 2.0)
        builder = fv.ball_table_builder(fp, 1, cells_per_dim=32)
        fit = fv.capacity_ball_scaling([0.25, 0.5, 1.0, 2.0], builder, fp)
        assert fit.slope == pytest.approx(1 - 0.8, abs=0.05)

    def test_plane_slope(self):
        fp = fv.FracParams(0.5, 2.0)
        builder = fv.ball_table_builder(fp, 2, cells_per_dim=10)
        fit = fv.capacity_ball_scaling([0.5, 1.0, 2.0], builder, fp)
        assert fit.slope == pytest.approx(1.0, abs=0.05)

    def test_doubling_ratio(self):
        fp = fv.FracParams(0.4, 2.0)
        builder = fv.ball_table_builder(fp, 1, cells_per_dim=32)
        fit = fv.capacity_ball_scaling([0.5, 1.0, 2.0], builder, fp)
        assert fit.values[1] / fit.values[0] == pytest.approx(2 ** 0.2, rel=1e-3)

    def test_needs_three_radii(self):
        fp = fv.FracParams(0.4, 2.0)
        builder = fv.ball_table_builder(fp, 1)
        with pytest.raises(DomainError):
            fv.capacity_ball_scaling([0.5, 1.0], builder, fp)

    def test_under_resolved_ball_rejected(self):
        fp = fv.FracParams(0.4, 2.0)

        def coarse(radius):
            grid = fv.build_grid(1, 8.0 * radius, 8)  # 2 cells across the ball
            return fv.build_kernel_table(grid, fp, 32.0 * radius)

        with pytest.raises(DomainError):
            fv.capacity_ball_scaling([0.5, 1.0, 2.0], coarse, fp)


class TestHardyNorm:
    def test_zero_weight(self, line_kt, line_grid):
        w = fv.GridFunction(line_grid, np.zeros(line_grid.n_cells))
        assert fv.hardy_norm_estimate(w, line_kt).value == 0.0

    def test_positively_homogeneous(self, line_kt, line_grid):
        w = fv.sample(line_grid, fv.PowerLaw(alpha=0.8))
        base = fv.hardy_norm_estimate(w, line_kt)
        doubled = fv.hardy_norm_estimate(
            fv.GridFunction(line_grid, 2 * w.values), line_kt)
        assert doubled.value == base.value * 2

    def test_ball_indicator_argmax_contains_the_ball(self, line_kt, line_grid):
        w = fv.sample(line_grid, fv.Indicator(fv.Ball((0.0,), 0.25)))
        res = fv.hardy_norm_estimate(w, line_kt)
        support = w.values > 0
        # exhaustive sweep: shrinking below the support cannot improve
        assert np.all(res.argmax.mask[support])

    def test_estimate_positive_for_hardy_weight(self, line_kt, line_grid):
        w = fv.sample(line_grid, fv.PowerLaw(alpha=0.8))
        assert fv.hardy_norm_estimate(w, line_kt).value > 0


class TestConcentration:
    def test_profile_monotone_and_positive_at_singularity(self, line_kt, line_grid):
        w = fv.sample(line_grid, fv.PowerLaw(alpha=0.8))
        prof = fv.concentration_at(w, (0.0,), [0.5, 0.25, 0.125], line_kt)
        assert all(np.diff(prof.norm_estimates) <= 1e-12)
        assert prof.extrapolated_limit > 0.1 * fv.hardy_norm_estimate(
            w, line_kt).value

    def test_zero_weight_profile(self, line_kt, line_grid):
        w = fv.GridFunction(line_grid, np.zeros(line_grid.n_cells))
        prof = fv.concentration_at(w, (0.0,), [0.5, 0.25], line_kt)
        assert prof.norm_estimates == (0.0, 0.0)

    def test_unresolvable_radius_rejected(self, line_kt, line_grid):
        w = fv.sample(line_grid, fv.PowerLaw(alpha=0.0))
        with pytest.raises(DomainError):
            fv.concentration_at(w, (0.0,), [0.5, 1e-4], line_kt)

    def test_radii_must_decrease(self, line_kt, line_grid):
        w = fv.sample(line_grid, fv.PowerLaw(alpha=0.0))
        with pytest.raises(DomainError):
            fv.concentration_at(w, (0.0,), [0.25, 0.5], line_kt)

    def test_infinity_profile_vanishes_beyond_support(self, line_kt, line_grid):
        w = fv.sample(line_grid, fv.Indicator(fv.Ball((0.0,), 0.3)))
        prof = fv.concentration_at_infinity(w, [0.25, 0.5, 0.75], line_kt)
        assert prof.norm_estimates[-1] == 0.0
        assert prof.extrapolated_limit == 0.0

    def test_heavy_tail_stays_positive(self, line_kt, line_grid):
        w = fv.sample(line_grid, fv.PowerLaw(alpha=0.8))
        prof = fv.concentration_at_infinity(w, [0.25, 0.5, 0.75], line_kt)
        assert prof.norm_estimates[-1] > 0

    def test_compact_weight_limit_shrinks_under_refinement(self):
        # the resolvable limit tracks the smallest ball the grid supports
        limits = []
        for n in (32, 64, 128):
            g = fv.build_grid(1, 1.0, n)
            kt = fv.build_kernel_table(g, fv.FracParams(0.4, 2.0), 4.0)
            gauss = fv.sample(g, fv.GaussianBump(sigma=0.3))
            cut = fv.sample(g, fv.Indicator(fv.Ball((0.0,), 0.6)))
            w = fv.GridFunction(g, gauss.values * cut.values)
            radii = [0.5, 0.25, 0.125]
            if 2 * g.spacing < 0.125:
                radii.append(2 * g.spacing)
            limits.append(fv.concentration_at(
                w, (0.0,), radii, kt).extrapolated_limit)
        assert limits[0] > limits[1] > limits[2]


class TestCompactnessDiagnostic:
    def test_compact_continuous_weight_indicating(self, line_kt, line_grid):
        gauss = fv.sample(line_grid, fv.GaussianBump(sigma=0.3))
        cut = fv.sample(line_grid, fv.Indicator(fv.Ball((0.0,), 0.6)))
        w = fv.GridFunction(line_grid, gauss.values * cut.values)
        verdict = fv.compactness_diagnostic(w, line_kt)
        assert verdict.compact_indicating
        assert verdict.c_star <= verdict.tolerance

    def test_hardy_weight_not_indicating(self, line_kt, line_grid):
        w = fv.sample(line_grid, fv.PowerLaw(alpha=0.8))
        verdict = fv.compactness_diagnostic(w, line_kt)
        assert not verdict.compact_indicating
        assert verdict.c_star > verdict.tolerance

    def test_zero_weight_trivially_indicating(self, line_kt, line_grid):
        w = fv.GridFunction(line_grid, np.zeros(line_grid.n_cells))
        verdict = fv.compactness_diagnostic(w, line_kt)
        assert verdict.compact_indicating
        assert verdict.c_star == 0.0
