import numpy as np
import pytest

import fracvar as fv
from fracvar.eigen import default_start
from fracvar.energy import raw_energy
from fracvar.errors import DomainError

from conftest import bump


@pytest.fixture(scope="module")
def flat_setup():
    g = fv.build_grid(1, 1.0, 32)
    kt = fv.build_kernel_table(g, fv.FracParams(0.5, 2.0), 4.0)
    return g, kt, fv.Weight.constant(g)


@pytest.fixture(scope="module")
def signed_setup():
    g = fv.build_grid(1, 1.0, 32)
    kt = fv.build_kernel_table(g, fv.FracParams(0.4, 2.0), 4.0)
    w1 = fv.sample(g, fv.GaussianBump(sigma=0.35))
    w2 = fv.sample(g, fv.Indicator(fv.Ball((0.45,), 0.25), amplitude=0.2))
    return g, kt, fv.Weight(w1, w2)


class TestWeight:
    def test_rejects_negative_parts(self, line_grid):
        pos = fv.GridFunction(line_grid, np.ones(line_grid.n_cells))
        neg = fv.GridFunction(line_grid, -np.ones(line_grid.n_cells))
        with pytest.raises(DomainError):
            fv.Weight(neg, pos)

    def test_rejects_vanishing_positive_part(self, line_grid):
        zero = fv.GridFunction(line_grid, np.zeros(line_grid.n_cells))
        with pytest.raises(DomainError):
            fv.Weight(zero, zero)

    def test_split_from_function(self, line_grid, rng):
        w = fv.GridFunction(line_grid, rng.standard_normal(line_grid.n_cells))
        wt = fv.Weight.from_function(w)
        np.testing.assert_array_equal(wt.combined.values, w.values)
        assert np.all(wt.w1.values >= 0)
        assert np.all(wt.w2.values >= 0)


class TestFirstEigenpair:
    def test_matches_dense_oracle(self, flat_setup):
        _g, kt, wt = flat_setup
        res = fv.first_eigenpair(wt, kt)
        oracle = fv.linear_oracle(wt, kt)
        assert res.lam == pytest.approx(oracle[0][0], rel=1e-6)
        assert res.constraint_gap <= 1e-10

    def test_scale_invariant_under_start_scaling(self, flat_setup):
        _g, kt, wt = flat_setup
        start = default_start(wt, kt)
        a = fv.first_eigenpair(wt, kt, start=start)
        b = fv.first_eigenpair(wt, kt, start=2.0 * start)
        assert b.lam == pytest.approx(a.lam, rel=1e-10)

    def test_ground_state_strictly_positive(self, flat_setup, signed_setup):
        for _g, kt, wt in (flat_setup, signed_setup):
            res = fv.first_eigenpair(wt, kt)
            assert res.u.values.min() > 0.0

    def test_lambda_equals_energy_on_constraint(self, flat_setup):
        _g, kt, wt = flat_setup
        res = fv.first_eigenpair(wt, kt)
        assert res.lam == pytest.approx(raw_energy(res.u.values, kt), rel=1e-12)

    def test_empty_constraint_set_rejected(self, line_grid):
        kt = fv.build_kernel_table(line_grid, fv.FracParams(0.4, 2.0), 4.0)
        w1 = fv.GridFunction(line_grid, np.ones(line_grid.n_cells))
        w2 = fv.GridFunction(line_grid, 2 * np.ones(line_grid.n_cells))
        with pytest.raises(DomainError):
            fv.first_eigenpair(fv.Weight(w1, w2), kt)

    def test_rayleigh_quotient_of_minimizer_is_lambda(self, flat_setup):
        _g, kt, wt = flat_setup
        res = fv.first_eigenpair(wt, kt)
        q = fv.rayleigh_quotient(res.u, wt.combined, kt)
        assert q == pytest.approx(res.lam, rel=1e-10)

    def test_identical_starts_give_identical_results(self, flat_setup):
        _g, kt, wt = flat_setup
        start = default_start(wt, kt)
        a = fv.first_eigenpair(wt, kt, start=start)
        b = fv.first_eigenpair(wt, kt, start=start.copy())
        assert a.lam == b.lam
        np.testing.assert_array_equal(a.u.values, b.u.values)


class TestLinearOracle:
    def test_stiffness_symmetric_positive(self, flat_setup):
        _g, kt, _wt = flat_setup
        from fracvar.energy import stiffness_matrix
        a = stiffness_matrix(kt)
        assert np.max(np.abs(a - a.T)) <= 1e-12 * np.max(np.abs(a))
        assert np.linalg.eigvalsh(a).min() > 0

    def test_requires_p_two(self, line_grid):
        kt = fv.build_kernel_table(line_grid, fv.FracParams(0.3, 3.0), 4.0)
        with pytest.raises(DomainError):
            fv.linear_oracle(fv.Weight.constant(line_grid), kt)

    def test_sign_changing_weight_has_positive_principal_pair(self, signed_setup):
        _g, kt, wt = signed_setup
        pairs = fv.linear_oracle(wt, kt)
        lam1, u1 = pairs[0]
        assert lam1 > 0
        assert fv.sign_structure(u1) == "nonnegative"

    def test_normalizes_weighted_mass(self, flat_setup):
        _g, kt, wt = flat_setup
        from fracvar.energy import weighted_mass
        lam, u = fv.linear_oracle(wt, kt)[0]
        assert weighted_mass(u, wt.combined, kt) == pytest.approx(1.0, rel=1e-10)


class TestDeflation:
    def test_second_matches_oracle_and_changes_sign(self, flat_setup):
        _g, kt, wt = flat_setup
        first = fv.first_eigenpair(wt, kt)
        second = fv.second_eigenpair(wt, kt, first)
        oracle = fv.linear_oracle(wt, kt)
        assert second.lam == pytest.approx(oracle[1][0], rel=1e-4)
        assert fv.sign_structure(second.u) == "sign_changing"
        assert second.lam > first.lam + 1e-6

    def test_sequence_levels_match_oracle(self, flat_setup):
        _g, kt, wt = flat_setup
        seq = fv.eigen_sequence(wt, kt, 4)
        oracle = fv.linear_oracle(wt, kt)
        for res, (lam, _) in zip(seq, oracle):
            assert res.lam == pytest.approx(lam, rel=1e-4)
        lams = [r.lam for r in seq]
        assert lams == sorted(lams)

    def test_single_level_equals_first(self, flat_setup):
        _g, kt, wt = flat_setup
        seq = fv.eigen_sequence(wt, kt, 1)
        direct = fv.first_eigenpair(wt, kt)
        assert seq[0].lam == direct.lam
        np.testing.assert_array_equal(seq[0].u.values, direct.u.values)

    def test_signed_weight_spectrum(self, signed_setup):
        _g, kt, wt = signed_setup
        seq = fv.eigen_sequence(wt, kt, 2)
        oracle = fv.linear_oracle(wt, kt)
        assert seq[0].lam == pytest.approx(oracle[0][0], rel=1e-6)
        assert seq[1].lam == pytest.approx(oracle[1][0], rel=1e-4)
        assert fv.sign_structure(seq[1].u) == "sign_changing"

    def test_rejects_bad_level_count(self, flat_setup):
        _g, kt, wt = flat_setup
        with pytest.raises(DomainError):
            fv.eigen_sequence(wt, kt, 0)


class TestResidualCheck:
    def test_converged_pair_below_tolerance(self, flat_setup):
        _g, kt, wt = flat_setup
        opts = fv.EigenOptions(tol=1e-8)
        res = fv.first_eigenpair(wt, kt, opts)
        assert fv.residual_check(res.lam, res.u, wt, kt) <= 1e-8

    def test_oracle_pair_near_machine_precision(self, flat_setup):
        _g, kt, wt = flat_setup
        lam, u = fv.linear_oracle(wt, kt)[0]
        assert fv.residual_check(lam, u, wt, kt) <= 1e-8

    def test_random_field_far_from_critical(self, flat_setup, rng):
        g, kt, wt = flat_setup
        u = fv.GridFunction(g, np.abs(rng.standard_normal(g.n_cells)) + 0.1)
        assert fv.residual_check(5.0, u, wt, kt) > 1e-3

    def test_zero_function_rejected(self, flat_setup):
        g, kt, wt = flat_setup
        zero = fv.GridFunction(g, np.zeros(g.n_cells))
        with pytest.raises(DomainError):
            fv.residual_check(1.0, zero, wt, kt)


class TestPicone:
    def test_equal_arguments_vanish(self, line_grid):
        v = bump(line_grid, width=0.4)
        v = fv.GridFunction(line_grid, v.values + 0.1)
        res = fv.picone_gap(v, v, 2.5)
        assert abs(res.min_value) <= 1e-12

    def test_constant_multiple_vanishes(self, line_grid):
        v = fv.GridFunction(line_grid, bump(line_grid, width=0.4).values + 0.1)
        u = fv.GridFunction(line_grid, 3.0 * v.values)
        for p in (1.5, 2.0, 3.0):
            res = fv.picone_gap(u, v, p)
            assert abs(res.min_value) <= 1e-12

    def test_two_cell_cross_pair(self):
        g = fv.build_grid(1, 1.0, 2)
        u = fv.GridFunction(g, np.array([1.0, 0.0]))
        v = fv.GridFunction(g, np.array([1.0, 1.0]))
        for p in (1.5, 2.0, 2.7):
            res = fv.picone_gap(u, v, p)
            assert res.min_value == pytest.approx(0.0, abs=1e-15)
            i, j = 0, 1
            k_cross = (abs(u.values[i] - u.values[j]) ** p
                       - 0.0)  # v has no increment, the cross term drops
            assert k_cross == 1.0

    def test_nonnegative_over_random_pairs(self, line_grid, rng):
        for _ in range(25):
            u = fv.GridFunction(line_grid,
                                np.abs(rng.standard_normal(line_grid.n_cells)))
            v = fv.GridFunction(
                line_grid, np.abs(rng.standard_normal(line_grid.n_cells)) + 0.05)
            p = float(rng.uniform(1.1, 4.0))
            assert fv.picone_gap(u, v, p).min_value >= -1e-12

    def test_rejects_invalid_arguments(self, line_grid):
        u = fv.GridFunction(line_grid, -np.ones(line_grid.n_cells))
        v = fv.GridFunction(line_grid, np.ones(line_grid.n_cells))
        with pytest.raises(DomainError):
            fv.picone_gap(u, v, 2.0)
        tiny = fv.GridFunction(line_grid, np.full(line_grid.n_cells, 1e-12))
        with pytest.raises(DomainError):
            fv.picone_gap(-u, tiny, 2.0)


class TestSignStructure:
    def test_classifications(self, line_grid):
        n = line_grid.n_cells
        assert fv.sign_structure(
            fv.GridFunction(line_grid, np.ones(n))) == "nonnegative"
        assert fv.sign_structure(
            fv.GridFunction(line_grid, -np.ones(n))) == "nonpositive"
        wave = np.sin(np.linspace(0, 2 * np.pi, n))
        assert fv.sign_structure(
            fv.GridFunction(line_grid, wave)) == "sign_changing"

    def test_zero_function_flagged(self, line_grid):
        zero = fv.GridFunction(line_grid, np.zeros(line_grid.n_cells))
        with pytest.warns(UserWarning):
            assert fv.sign_structure(zero) == "nonnegative"


class TestSimplicityProbe:
    def test_restarts_agree(self, flat_setup):
        _g, kt, wt = flat_setup
        rep = fv.simplicity_probe(wt, kt, restarts=6,
                                  opts=fv.EigenOptions(tol=1e-8))
        assert rep.lambda_spread <= 1e-6
        assert rep.function_spread <= 1e-4
        assert rep.rayleigh_lower_gap >= -1e-6
        assert rep.midpoint_energy_gap <= 1e-9

    def test_midpoint_convexity_random_positive_pairs(self, line_grid, rng):
        # energy of the p-th power midpoint never exceeds the mean energy
        kt = fv.build_kernel_table(line_grid, fv.FracParams(0.4, 2.0), 4.0)
        p = 2.0
        for _ in range(10):
            phi1 = np.abs(rng.standard_normal(line_grid.n_cells)) + 0.05
            phi2 = np.abs(rng.standard_normal(line_grid.n_cells)) + 0.05
            mid = ((phi1**p + phi2**p) / 2.0) ** (1.0 / p)
            j_mid = raw_energy(mid, kt)
            j_avg = 0.5 * (raw_energy(phi1, kt) + raw_energy(phi2, kt))
            assert j_mid <= j_avg * (1 + 1e-12)

    def test_requires_two_restarts(self, flat_setup):
        _g, kt, wt = flat_setup
        with pytest.raises(DomainError):
            fv.simplicity_probe(wt, kt, restarts=1)
