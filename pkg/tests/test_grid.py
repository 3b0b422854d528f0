import math

import numpy as np
import pytest
from scipy.integrate import quad

import fracvar as fv
from fracvar.errors import DomainError


class TestBuildGrid:
    def test_two_cell_line(self):
        g = fv.build_grid(1, 1.0, 2)
        assert np.array_equal(g.centers.ravel(), [-0.5, 0.5])
        assert g.spacing == 1.0
        assert g.cell_measure == 1.0

    def test_two_by_two_square(self):
        g = fv.build_grid(2, 1.0, 2)
        assert g.n_cells == 4
        expected = {(-0.5, -0.5), (-0.5, 0.5), (0.5, -0.5), (0.5, 0.5)}
        assert {tuple(c) for c in g.centers} == expected

    def test_eight_cell_line(self):
        g = fv.build_grid(1, 2.0, 8)
        assert g.spacing == 0.5
        assert g.centers[0, 0] == -1.75
        assert g.centers[-1, 0] == 1.75

    @pytest.mark.parametrize("dim,L,n", [(3, 1.0, 4), (0, 1.0, 4),
                                         (1, 1.0, 1), (1, -1.0, 4), (1, 0.0, 4)])
    def test_rejects_bad_arguments(self, dim, L, n):
        with pytest.raises(DomainError):
            fv.build_grid(dim, L, n)

    def test_centers_strictly_inside(self):
        for dim in (1, 2):
            g = fv.build_grid(dim, 1.5, 6)
            assert np.all(np.abs(g.centers) < g.half_width)


class TestFracParams:
    @pytest.mark.parametrize("s,p", [(0.0, 2.0), (1.0, 2.0), (-0.1, 2.0),
                                     (0.5, 1.0), (0.5, 0.5)])
    def test_rejects_out_of_range(self, s, p):
        with pytest.raises(DomainError):
            fv.FracParams(s, p)

    def test_product_above_dim_rejected(self):
        with pytest.raises(DomainError):
            fv.FracParams(0.8, 2.0).validate_for_dim(1)

    def test_borderline_product_accepted(self):
        # s p = 1 on the line stays usable
        fv.FracParams(0.5, 2.0).validate_for_dim(1)
        fv.FracParams(0.8, 2.0).validate_for_dim(2)


class TestKernelTable:
    def test_unit_distance_pair_value(self):
        # centers one unit apart, exponent 1 + 0.8
        g = fv.build_grid(1, 1.0, 2)
        kt = fv.build_kernel_table(g, fv.FracParams(0.4, 2.0), 4.0)
        assert kt.pair_kernel[0, 1] == pytest.approx(1.0, abs=0.0)
        assert kt.pair_kernel[0, 0] == 0.0

    def test_symmetric_positive_off_diagonal(self, line_kt):
        k = line_kt.pair_kernel
        assert np.array_equal(k, k.T)
        off = k[~np.eye(k.shape[0], dtype=bool)]
        assert np.all(off > 0)
        assert np.all(np.diag(k) == 0)

    def test_doubling_distances_scales_kernel(self):
        fp = fv.FracParams(0.4, 2.0)
        k1 = fv.build_kernel_table(fv.build_grid(1, 1.0, 8), fp, 4.0).pair_kernel
        k2 = fv.build_kernel_table(fv.build_grid(1, 2.0, 8), fp, 8.0).pair_kernel
        mask = ~np.eye(8, dtype=bool)
        np.testing.assert_allclose(k2[mask], k1[mask] * 2.0 ** -(1 + 0.8),
                                   rtol=1e-13)

    def test_tail_closed_form(self):
        # independent oracle: numerical quadrature of the tail integral
        oracle = 2 * quad(lambda z: z ** -1.8, 10.0, np.inf)[0]
        assert fv.tail_mass(1, 0.8, 10.0) == pytest.approx(oracle, rel=1e-10)
        assert fv.tail_mass(1, 0.8, 10.0) == pytest.approx(0.39622329811527834,
                                                           rel=1e-12)

    def test_exterior_mass_against_quadrature(self):
        # full oracle for rho: adaptive quadrature over the complement
        g = fv.build_grid(1, 1.0, 8)
        kt = fv.build_kernel_table(g, fv.FracParams(0.4, 2.0), 80.0)
        for i in (2, 3, 5):
            x = g.centers[i, 0]
            exact = (quad(lambda y: abs(x - y) ** -1.8, -np.inf, -1.0)[0]
                     + quad(lambda y: abs(x - y) ** -1.8, 1.0, np.inf)[0])
            assert kt.exterior_mass[i] == pytest.approx(exact, rel=2e-2)

    def test_exterior_mass_reflection_invariant_bitwise(self, plane_kt):
        n = plane_kt.grid.cells_per_dim
        r = plane_kt.exterior_mass.reshape(n, n)
        assert np.array_equal(r, r[::-1, :])
        assert np.array_equal(r, r[:, ::-1])
        assert np.array_equal(r, r.T)

    def test_exterior_mass_larger_near_boundary(self, line_kt):
        rho = line_kt.exterior_mass
        mid = len(rho) // 2
        assert rho[0] > rho[mid]
        assert rho[-1] > rho[mid]

    def test_ext_radius_refinement_bounded_by_tail(self):
        g = fv.build_grid(1, 1.0, 16)
        fp = fv.FracParams(0.4, 2.0)
        kt1 = fv.build_kernel_table(g, fp, 4.0)
        kt2 = fv.build_kernel_table(g, fp, 16.0)
        old_tails = np.array([fv.tail_mass(1, fp.sp, kt1.ext_radius - abs(x))
                              for x in g.centers[:, 0]])
        assert np.all(np.abs(kt2.exterior_mass - kt1.exterior_mass) <= old_tails)

    def test_rejects_small_ext_radius(self, line_grid):
        with pytest.raises(DomainError):
            fv.build_kernel_table(line_grid, fv.FracParams(0.4, 2.0), 1.5)

    def test_rejects_sp_above_dim(self, line_grid):
        with pytest.raises(DomainError):
            fv.build_kernel_table(line_grid, fv.FracParams(0.6, 2.0), 4.0)


class TestSample:
    def test_half_line_indicator(self):
        g = fv.build_grid(1, 1.0, 2)
        f = fv.sample(g, fv.Indicator(fv.HalfSpace(axis=0, threshold=0.0)))
        assert np.array_equal(f.values, [0.0, 1.0])

    def test_power_law_zero_exponent_is_one(self, line_grid):
        f = fv.sample(line_grid, fv.PowerLaw(alpha=0.0))
        assert np.array_equal(f.values, np.ones(line_grid.n_cells))

    def test_power_law_pointwise_value(self):
        g = fv.build_grid(1, 1.0, 2)  # centers at +-0.5
        f = fv.sample(g, fv.PowerLaw(alpha=0.8))
        assert f.values[1] == pytest.approx(2.0**0.8, rel=1e-14)
        assert f.values[1] == pytest.approx(1.7411011265922482, rel=1e-12)

    def test_power_law_origin_cell_staggered(self):
        g = fv.build_grid(1, 1.5, 3)  # middle cell centered exactly at 0
        f = fv.sample(g, fv.PowerLaw(alpha=0.8))
        assert np.isfinite(f.values[1])
        assert f.values[1] == pytest.approx((g.spacing / 4.0) ** -0.8, rel=1e-12)

    def test_difference_requires_nonnegative_parts(self, line_grid):
        spec = fv.Difference(fv.PowerLaw(alpha=0.0),
                             fv.GaussianBump(sigma=0.5, amplitude=0.5))
        f = fv.sample(line_grid, spec)
        assert f.values.max() > 0 > f.values.min() or np.all(f.values >= 0)

        def negative(x):
            return -1.0

        with pytest.raises(DomainError):
            fv.sample(line_grid, fv.Difference(fv.PowerLaw(alpha=0.0), negative))

    def test_callable_sampling_and_nan_rejection(self, line_grid):
        f = fv.sample(line_grid, lambda x: x * x)
        assert f.values[0] == pytest.approx(line_grid.centers[0, 0] ** 2)
        with pytest.raises(DomainError):
            fv.sample(line_grid, lambda x: math.nan)

    def test_from_file_size_mismatch(self, tmp_path, line_grid):
        import fracvar.io as fio
        small = fv.build_grid(1, 1.0, 4)
        path = tmp_path / "w.csv"
        fio.write_grid_function(fv.GridFunction(small, np.ones(4)), path)
        with pytest.raises(DomainError):
            fv.sample(line_grid, fv.FromFile(str(path)))


class TestGridFunction:
    def test_rejects_wrong_length(self, line_grid):
        with pytest.raises(DomainError):
            fv.GridFunction(line_grid, np.ones(7))

    def test_rejects_non_finite(self, line_grid):
        vals = np.ones(line_grid.n_cells)
        vals[3] = np.inf
        with pytest.raises(DomainError):
            fv.GridFunction(line_grid, vals)

    def test_values_read_only(self, line_grid):
        f = fv.GridFunction(line_grid, np.ones(line_grid.n_cells))
        with pytest.raises(ValueError):
            f.values[0] = 2.0
