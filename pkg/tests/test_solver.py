"""Force fields, the semi-implicit step, the full descent, stability."""

import math

import numpy as np
import pytest

from percolor.contrast import ContrastVariant, Regularizer, r_pointwise, s_eps_max_slope
from percolor.dispersion import DispersionParams
from percolor.errors import NumericalFailureError, ParameterError
from percolor.image import RHO, ChannelPlane, ColorImage, channel_stats, gray_image, mirror_extend, plane_of
from percolor.kernel import KernelSpec, build_kernel
from percolor.solver import (
    EnhanceParams,
    ace_r_field,
    aele_residual,
    enhance_channel,
    enhance_image,
    gd_step,
    r_field_exact,
    stability_report,
)
from percolor.synth import synth_color_cast, synth_texture
from tests.conftest import random_plane

ARCTAN = Regularizer("arctan", 1.0 / 20.0)

ALL_VARIANTS = [
    ContrastVariant("id"),
    ContrastVariant("log"),
    ContrastVariant("michelson"),
    ContrastVariant("id", 0.5),
    ContrastVariant("log", 0.5),
    ContrastVariant("michelson", 0.5),
]


def copies_weight(k, x, y):
    """Total kernel weight from block pixel x to all mirror copies of y."""
    eh, ew = k.weights.shape
    xr, xc = x
    total = 0.0
    for yr in (y[0], (-1 - y[0]) % eh):
        for yc in (y[1], (-1 - y[1]) % ew):
            total += k.weights[(yr - xr) % eh, (yc - xc) % ew]
    return total


class TestForceFieldExact:
    def test_constant_plane_gives_zero_field(self, kernel_8x8):
        plane = plane_of(0.5, 8, 8)
        for v in ALL_VARIANTS:
            np.testing.assert_allclose(
                r_field_exact(plane, kernel_8x8, v, ARCTAN), 0.0, atol=1e-15
            )

    def test_matches_pure_python_reference(self, rng_factory):
        plane = random_plane(rng_factory(30), 3, 4)
        k = build_kernel(KernelSpec(), 4, 3)
        ext = mirror_extend(plane)
        eh, ew = ext.shape
        v = ContrastVariant("id")
        ref = np.zeros((3, 4))
        for xr in range(3):
            for xc in range(4):
                for yr in range(eh):
                    for yc in range(ew):
                        w = k.weights[(yr - xr) % eh, (yc - xc) % ew]
                        ref[xr, xc] += w * r_pointwise(ext[xr, xc], ext[yr, yc], v, ARCTAN)
        np.testing.assert_allclose(r_field_exact(plane, k, v, ARCTAN), ref, atol=1e-13)

    def test_two_level_plane_sharp_limit_hand_values(self):
        """Log-variant sharp field on a 2x2 plane with one bright pixel.

        The bright pixel collects +1 times the weight of every position
        holding a darker value, i.e. 1 minus the weight mass of its own
        mirror copies; each dark pixel collects minus the weight mass of
        the bright pixel's copies.
        """
        data = np.array([[0.3, 0.3], [0.3, 0.7]])
        plane = ChannelPlane(data)
        k = build_kernel(KernelSpec(), 2, 2)
        field = r_field_exact(plane, k, ContrastVariant("log"), reg=None)
        bright = (1, 1)
        np.testing.assert_allclose(
            field[bright], 1.0 - copies_weight(k, bright, bright), rtol=1e-13
        )
        for dark in ((0, 0), (0, 1), (1, 0)):
            np.testing.assert_allclose(
                field[dark], -copies_weight(k, dark, bright), rtol=1e-13
            )

    def test_unit_bound_on_random_planes(self, rng_factory, kernel_8x8):
        rng = rng_factory(31)
        for _ in range(25):
            plane = random_plane(rng, 8, 8, lo=RHO, hi=1.0)
            for v in ALL_VARIANTS:
                field = r_field_exact(plane, kernel_8x8, v, ARCTAN)
                assert np.abs(field).max() <= 1.0 + 1e-12

    def test_sharp_limit_field_is_scale_invariant(self, rng_factory, kernel_8x8):
        rng = rng_factory(32)
        plane = rng.uniform(0.1, 0.45, (8, 8))
        for v in (ContrastVariant("id"), ContrastVariant("michelson")):
            base = r_field_exact(plane, kernel_8x8, v, reg=None)
            scaled = r_field_exact(2.0 * plane, kernel_8x8, v, reg=None)
            np.testing.assert_allclose(scaled, base, atol=1e-13)

    def test_kernel_geometry_mismatch_rejected(self, kernel_8x8):
        with pytest.raises(ParameterError):
            r_field_exact(plane_of(0.5, 4, 4), kernel_8x8, ContrastVariant("id"), ARCTAN)


class TestAceField:
    def test_bitwise_equal_to_log_variant(self, rng_factory, kernel_8x8):
        plane = random_plane(rng_factory(33), 8, 8)
        ace = ace_r_field(plane, kernel_8x8, ARCTAN)
        log_field = r_field_exact(plane, kernel_8x8, ContrastVariant("log"), ARCTAN)
        assert np.array_equal(ace, log_field)

    def test_constant_plane_is_zero(self, kernel_8x8):
        np.testing.assert_array_equal(ace_r_field(plane_of(0.5, 8, 8), kernel_8x8, ARCTAN), 0.0)

    def test_antisymmetric_under_intensity_swap(self):
        k = build_kernel(KernelSpec(), 2, 1)
        a = ace_r_field(ChannelPlane(np.array([[0.3, 0.7]])), k, ARCTAN)
        b = ace_r_field(ChannelPlane(np.array([[0.7, 0.3]])), k, ARCTAN)
        np.testing.assert_allclose(a, -b, atol=1e-15)


class TestGdStep:
    def test_fixed_point_at_half(self):
        half = plane_of(0.5, 4, 4)
        p = EnhanceParams(dispersion=DispersionParams(alpha=1.0, beta=1.0))
        out = gd_step(half, half, np.zeros((4, 4)), p)
        np.testing.assert_array_equal(out.data, half.data)

    def test_hand_value(self):
        p = EnhanceParams(dispersion=DispersionParams(alpha=1.0, beta=1.0), dt=0.2)
        out = gd_step(
            plane_of(0.4, 1, 1), plane_of(0.6, 1, 1), np.zeros((1, 1)), p
        )
        np.testing.assert_allclose(out.data[0, 0], 0.62 / 1.4, rtol=1e-15)

    def test_requires_entropic_dispersion(self):
        p = EnhanceParams(dispersion=DispersionParams(alpha=1.0, beta=1.0, kind="quadratic"))
        with pytest.raises(ParameterError):
            gd_step(plane_of(0.5, 2, 2), plane_of(0.5, 2, 2), np.zeros((2, 2)), p)

    def test_unclamped_range_invariance_at_threshold_alpha(self, rng_factory):
        """With alpha = 1/(1 - 2 RHO) the unclamped step maps [RHO,1] into
        itself whenever |force| <= 1."""
        rng = rng_factory(34)
        p = EnhanceParams(
            dispersion=DispersionParams(alpha=1.0 / (1.0 - 2.0 * RHO), beta=1.0),
            clamp=False,
        )
        for _ in range(200):
            cur = plane_of(rng.uniform(RHO, 1.0, (3, 3)))
            orig = plane_of(rng.uniform(RHO, 1.0, (3, 3)))
            force = rng.uniform(-1.0, 1.0, (3, 3))
            out = gd_step(cur, orig, force, p)
            assert out.data.min() >= RHO
            assert out.data.max() <= 1.0


class TestEnhanceChannel:
    def test_constant_half_converges_immediately(self, kernel_8x8):
        p = EnhanceParams(dispersion=DispersionParams(alpha=1.0, beta=1.0))
        out, trace = enhance_channel(plane_of(0.5, 8, 8), kernel_8x8, p)
        assert trace.iterations == 1
        assert trace.termination == "converged"
        assert trace.mse[0] == 0.0
        np.testing.assert_array_equal(out.data, 0.5)

    def test_two_level_plane_contrast_is_stretched(self, kernel_8x8):
        """A moderate two-level spread widens: the contrast force beats the
        dispersion pull (a spread already much wider than the dispersion
        equilibrium instead contracts toward it)."""
        data = np.full((8, 8), 0.45)
        data[:, 4:] = 0.55
        out, trace = enhance_channel(ChannelPlane(data), kernel_8x8, EnhanceParams())
        gap_in = 0.55 - 0.45
        gap_out = out.data[:, 4:].mean() - out.data[:, :4].mean()
        assert trace.termination == "converged"
        assert gap_out > gap_in

    def test_trace_contract(self, rng_factory, kernel_8x8):
        plane = random_plane(rng_factory(35), 8, 8)
        p = EnhanceParams()
        out, trace = enhance_channel(plane, kernel_8x8, p)
        assert trace.iterations == len(trace.mse) == len(trace.energy_contrast)
        assert trace.termination in ("converged", "max_iters")
        if trace.termination == "converged":
            assert trace.mse[-1] < p.stop_mse
        assert np.all(np.isfinite(trace.energy_total))

    def test_max_iters_termination(self, rng_factory, kernel_8x8):
        plane = random_plane(rng_factory(36), 8, 8)
        p = EnhanceParams(stop_mse=1e-30, max_iters=3)
        _, trace = enhance_channel(plane, kernel_8x8, p)
        assert trace.iterations == 3
        assert trace.termination == "max_iters"

    def test_energy_total_bounded_below_along_iterates(self, rng_factory, kernel_8x8):
        plane = random_plane(rng_factory(37), 8, 8)
        _, trace = enhance_channel(plane, kernel_8x8, EnhanceParams(max_iters=40))
        assert np.all(np.isfinite(trace.energy_total))
        # the id-variant contrast term is nonnegative, the dispersion too
        assert np.all(trace.energy_total > 0.0)

    def test_determinism_bitwise(self, rng_factory, kernel_8x8):
        plane = random_plane(rng_factory(38), 8, 8)
        out1, tr1 = enhance_channel(plane, kernel_8x8, EnhanceParams())
        out2, tr2 = enhance_channel(plane, kernel_8x8, EnhanceParams())
        assert np.array_equal(out1.data, out2.data)
        assert np.array_equal(tr1.mse, tr2.mse)
        assert np.array_equal(tr1.energy_contrast, tr2.energy_contrast)

    def test_non_finite_iterate_is_reported(self, rng_factory, kernel_8x8, monkeypatch):
        plane = random_plane(rng_factory(39), 8, 8)

        def bad_field(*args, **kwargs):
            out = np.zeros((8, 8))
            out[0, 0] = np.nan
            return out

        import percolor.solver as solver_mod

        monkeypatch.setattr(solver_mod, "r_field_exact", bad_field)
        with pytest.raises(NumericalFailureError, match="iteration 1"):
            enhance_channel(plane, kernel_8x8, EnhanceParams())

    def test_fast_mode_tracks_exact_mode(self, rng_factory, kernel_8x8):
        plane = random_plane(rng_factory(40), 8, 8)
        out_e, _ = enhance_channel(plane, kernel_8x8, EnhanceParams(r_mode="exact"))
        out_f, _ = enhance_channel(plane, kernel_8x8, EnhanceParams(r_mode="fast"))
        # per-step force gap is within the fit bound; a few contracting steps keep it small
        assert np.abs(out_e.data - out_f.data).max() < 0.05

    def test_csv_export(self, rng_factory, kernel_8x8, tmp_path):
        plane = random_plane(rng_factory(41), 8, 8)
        _, trace = enhance_channel(plane, kernel_8x8, EnhanceParams())
        path = tmp_path / "trace.csv"
        with open(path, "w", newline="") as fh:
            trace.write_csv(fh)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "iteration,mse,energy_contrast,energy_dispersion"
        assert len(lines) == trace.iterations + 1


class TestEnhanceImage:
    def test_gray_stays_gray(self, rng_factory):
        image = gray_image(random_plane(rng_factory(42), 8, 8))
        out, traces = enhance_image(image, EnhanceParams())
        assert out.is_gray()
        assert len(traces) == 3

    def test_constant_midgray_unchanged(self):
        image = gray_image(plane_of(0.5, 8, 8))
        out, _ = enhance_image(image, EnhanceParams())
        np.testing.assert_array_equal(out.r.data, 0.5)

    def test_gray_shortcut_matches_independent_channels(self, rng_factory):
        plane = random_plane(rng_factory(43), 8, 8)
        tinted = ChannelPlane(plane.data.copy())  # equal values, distinct object
        image = ColorImage(plane, tinted, plane)
        out, _ = enhance_image(image, EnhanceParams())
        k = build_kernel(KernelSpec(), 8, 8)
        direct, _ = enhance_channel(plane, k, EnhanceParams())
        assert np.array_equal(out.g.data, direct.data)

    def test_cast_reduction_on_textured_base(self):
        base = synth_texture(32, 24)
        casted = synth_color_cast(base, "B", 3.0)
        stds_in = [channel_stats(c).std for c in casted.channels]
        out, traces = enhance_image(casted, EnhanceParams())
        stds_out = [channel_stats(c).std for c in out.channels]
        assert max(stds_out) / min(stds_out) < max(stds_in) / min(stds_in)
        assert all(t.termination == "converged" for t in traces)


class TestStability:
    def test_default_parameters_hold_range_but_not_contraction(self):
        report = stability_report(EnhanceParams())
        assert report.range_invariance_holds
        assert not report.contraction_holds
        m = s_eps_max_slope(ARCTAN)
        np.testing.assert_allclose(report.max_sign_slope, m, rtol=1e-15)
        np.testing.assert_allclose(
            report.contraction_factor,
            (1 + 0.2 * (255.0 + m)) / (1 + 0.2 * (255.0 / 253.0 + 1.0)),
            rtol=1e-12,
        )

    def test_sqrt_slope_bound_is_reciprocal_eps(self):
        p = EnhanceParams(reg=Regularizer("sqrt", 0.2))
        assert stability_report(p).max_sign_slope == 5.0

    def test_contraction_regime_is_detected_and_observed(self, rng_factory):
        reg = Regularizer("arctan", 1.0)
        p = EnhanceParams(
            dispersion=DispersionParams(alpha=299.0, beta=1.0),
            reg=reg,
            clamp=False,
        )
        report = stability_report(p)
        assert report.contraction_holds
        assert report.contraction_factor < 1.0
        # observed successive-difference ratios respect the bound
        rng = rng_factory(44)
        i0 = random_plane(rng, 8, 8, lo=RHO, hi=1.0)
        k = build_kernel(KernelSpec(), 8, 8)
        cur = i0.data
        prev_diff = None
        for _ in range(12):
            force = r_field_exact(cur, k, p.variant, p.reg)
            nxt = (cur + p.dt * (0.5 * 299.0 + 1.0 * i0.data + 0.5 * force)) / (
                1.0 + p.dt * 300.0
            )
            diff = nxt - cur
            if prev_diff is not None and np.abs(prev_diff).max() > 1e-15:
                for order in (1, 2, np.inf):
                    num = np.linalg.norm(diff.ravel(), order)
                    den = np.linalg.norm(prev_diff.ravel(), order)
                    assert num <= report.contraction_factor * den + 1e-15
            prev_diff = diff
            cur = nxt

    def test_aele_residual_vanishes_at_fixed_point(self, rng_factory):
        reg = Regularizer("arctan", 1.0)
        p = EnhanceParams(
            dispersion=DispersionParams(alpha=299.0, beta=1.0),
            reg=reg,
            stop_mse=1e-26,
            max_iters=400,
            clamp=False,
        )
        i0 = random_plane(rng_factory(45), 8, 8)
        k = build_kernel(KernelSpec(), 8, 8)
        out, trace = enhance_channel(i0, k, p)
        assert trace.termination == "converged"
        residual = aele_residual(out, i0, k, p)
        assert np.abs(residual).max() < 1e-9
