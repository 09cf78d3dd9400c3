"""Polynomial separation, FFT convolution, and the fast force field."""

import numpy as np
import pytest

from percolor.contrast import ContrastVariant, Regularizer, r_pointwise
from percolor.errors import FitError, ParameterError
from percolor.fastconv import (
    PolySeparation,
    cached_separation,
    circular_convolve,
    complexity_probe,
    fit_separation,
    r_field_fast,
    separated_field,
)
from percolor.image import RHO, ChannelPlane, mirror_extend, plane_of
from percolor.kernel import KernelSpec, build_kernel
from percolor.solver import r_field_exact
from tests.conftest import random_plane

ARCTAN = Regularizer("arctan", 1.0 / 20.0)
ID = ContrastVariant("id")


class TestFitSeparation:
    def test_exactly_recovers_polynomial_target(self):
        sep = fit_separation(ID, ARCTAN, degree=2, target=lambda a, b: a * b)
        np.testing.assert_allclose(sep.coefficients[1, 1], 1.0, atol=1e-9)
        mask = np.ones_like(sep.coefficients, dtype=bool)
        mask[1, 1] = False
        assert np.abs(sep.coefficients[mask]).max() < 1e-9
        assert sep.max_error < 1e-9

    def test_coefficient_count(self):
        sep = fit_separation(ID, ARCTAN, degree=9)
        assert sep.coefficient_count == 55
        exps = np.argwhere(np.abs(sep.coefficients) > 0)
        assert all(i + j <= 9 for i, j in exps)

    def test_force_fit_error_reported(self):
        for kind in ("id", "log", "michelson"):
            sep = cached_separation(ContrastVariant(kind), ARCTAN, 9)
            assert np.isfinite(sep.max_error) and sep.max_error > 0
            assert sep.rms_error < sep.max_error

    def test_verification_error_non_increasing_in_degree(self):
        errors = [cached_separation(ID, ARCTAN, n).max_error for n in (3, 5, 7, 9)]
        assert all(e1 >= e2 - 1e-12 for e1, e2 in zip(errors, errors[1:]))

    def test_near_antisymmetry_of_the_fit(self):
        """An odd target forces |p(a,b) + p(b,a)| <= 2 max_error on the grid."""
        sep = cached_separation(ID, ARCTAN, 9)
        g = np.linspace(RHO, 1.0, 57)
        aa, bb = np.meshgrid(g, g, indexing="ij")
        asym = np.abs(sep.evaluate(aa, bb) + sep.evaluate(bb, aa))
        assert asym.max() <= 2.0 * sep.max_error + 1e-12

    def test_rearranged_form_reproduces_raw_polynomial(self):
        """Direct monomial evaluation and the separated form agree."""
        sep = cached_separation(ID, ARCTAN, 9)
        g = np.linspace(RHO, 1.0, 101)
        aa, bb = np.meshgrid(g, g, indexing="ij")
        direct = np.zeros_like(aa)
        for i in range(sep.degree + 1):
            for j in range(sep.degree + 1 - i):
                c = sep.coefficients[i, j]
                if c != 0.0:
                    direct += c * aa**i * bb**j
        np.testing.assert_allclose(sep.evaluate(aa, bb), direct, atol=1e-9)

    def test_rank_deficient_grid_raises(self):
        with pytest.raises(FitError):
            fit_separation(ID, ARCTAN, degree=9, fit_grid=2)

    def test_degree_validation(self):
        with pytest.raises(ParameterError):
            fit_separation(ID, ARCTAN, degree=0)


class TestCircularConvolve:
    def test_impulse_reproduces_rolled_kernel(self, rng_factory):
        """Convolving a one-hot field returns the kernel column at that site."""
        k = build_kernel(KernelSpec(), 4, 3)
        rng = rng_factory(50)
        for _ in range(3):
            yr = int(rng.integers(0, 6))
            yc = int(rng.integers(0, 8))
            impulse = np.zeros((6, 8))
            impulse[yr, yc] = 1.0
            out = circular_convolve(k, impulse)
            expected = np.roll(k.weights, (yr, yc), axis=(0, 1))
            np.testing.assert_allclose(out, expected, atol=1e-10)

    def test_unit_field_returns_unit_mass(self):
        k = build_kernel(KernelSpec(), 4, 4)
        out = circular_convolve(k, np.ones((8, 8)))
        np.testing.assert_allclose(out, 1.0, atol=1e-12)

    def test_matches_direct_convolution_oracle(self, rng_factory):
        k = build_kernel(KernelSpec(), 3, 2)
        field = rng_factory(51).uniform(0, 1, (4, 6))
        direct = np.zeros_like(field)
        for xr in range(4):
            for xc in range(6):
                for yr in range(4):
                    for yc in range(6):
                        direct[xr, xc] += k.weights[(xr - yr) % 4, (xc - yc) % 6] * field[yr, yc]
        np.testing.assert_allclose(circular_convolve(k, field), direct, atol=1e-12)

    def test_shape_mismatch_rejected(self):
        k = build_kernel(KernelSpec(), 4, 4)
        with pytest.raises(ParameterError):
            circular_convolve(k, np.ones((4, 4)))


class TestFastField:
    def test_constant_plane_returns_fit_diagonal_value(self):
        plane = plane_of(0.37, 6, 6)
        k = build_kernel(KernelSpec(), 6, 6)
        sep = cached_separation(ID, ARCTAN, 9)
        field = r_field_fast(plane, k, sep)
        expected = float(sep.evaluate(0.37, 0.37))
        np.testing.assert_allclose(field, expected, atol=1e-11)
        assert abs(expected) <= sep.max_error + 1e-12  # true summand vanishes there

    @pytest.mark.parametrize("kind", ["id", "log", "michelson"])
    def test_fast_field_within_fit_bound_of_exact(self, rng_factory, kind):
        """Unit kernel mass turns the pointwise fit bound into a field bound."""
        variant = ContrastVariant(kind)
        sep = cached_separation(variant, ARCTAN, 9)
        k = build_kernel(KernelSpec(), 16, 16)
        rng = rng_factory(52)
        for _ in range(3):
            plane = random_plane(rng, 16, 16, lo=RHO, hi=1.0)
            exact = r_field_exact(plane, k, variant, ARCTAN)
            fast = r_field_fast(plane, k, sep)
            assert np.abs(fast - exact).max() <= sep.max_error + 1e-10

    def test_separated_field_equals_direct_separated_sum(self, rng_factory):
        """FFT path against a direct evaluation of the separated polynomial."""
        plane = random_plane(rng_factory(53), 5, 4)
        k = build_kernel(KernelSpec(), 4, 5)
        sep = cached_separation(ID, ARCTAN, 5)
        ext = mirror_extend(plane)
        eh, ew = ext.shape
        direct = np.zeros((5, 4))
        for xr in range(5):
            for xc in range(4):
                w = np.roll(k.weights, (xr, xc), axis=(0, 1))
                direct[xr, xc] = np.sum(w * sep.evaluate(plane.data[xr, xc], ext))
        np.testing.assert_allclose(separated_field(plane, k, sep), direct, atol=1e-10)

    def test_geometry_mismatch_rejected(self, rng_factory):
        plane = random_plane(rng_factory(54), 4, 4)
        k = build_kernel(KernelSpec(), 8, 8)
        sep = cached_separation(ID, ARCTAN, 3)
        with pytest.raises(ParameterError):
            r_field_fast(plane, k, sep)


class TestComplexityProbe:
    def test_smoke_structure(self):
        report = complexity_probe([8, 12], fast_repeats=1)
        assert report.pixel_counts == (64, 144)
        assert len(report.exact_seconds) == 2
        assert all(t > 0 for t in report.exact_seconds + report.fast_seconds)
        assert len(report.lines()) == 4

    def test_rejects_unsorted_sizes(self):
        with pytest.raises(ParameterError):
            complexity_probe([16, 8])
