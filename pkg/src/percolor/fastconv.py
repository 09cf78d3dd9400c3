"""Polynomial separation of pairwise summands and FFT evaluation.

The exact force field costs O(N) per pixel because every pair of pixels
interacts.  If the pairwise summand r(a, b) is replaced by a bivariate
polynomial p of total degree n, the field rearranges into

    R(x) ~ sum_j f_j(I(x)) * (w conv I^j)(x),

a sum of n + 1 circular convolutions on the mirror-extended block, each
computable by FFT, dropping the total cost to O(N log N).  The polynomial
is the least-squares fit of the summand on a uniform grid over
[RHO, 1]^2; since the kernel has unit mass and nonnegative weights, the
field error is bounded by the pointwise fit error.

Fitting uses monomials in coordinates affinely mapped to [-1/2, 1/2]^2
(raw monomials up to degree 9 on [0, 1] make the normal system badly
conditioned) and an orthogonal-decomposition solve; coefficients are then
expanded back to raw monomials, which is what the convolution path needs.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .contrast import ContrastVariant, Regularizer, energy_integrand, r_pointwise
from .errors import FitError, NumericalFailureError, ParameterError
from .image import RHO, ChannelPlane, mirror_extend
from .kernel import KernelGrid, KernelSpec, build_kernel

#: Largest tolerated imaginary residue of an inverse transform.
CONV_IMAG_TOL = 1e-9

DEFAULT_DEGREE = 9
DEFAULT_FIT_GRID = 101
DEFAULT_VERIFY_GRID = 257


@dataclass(frozen=True)
class PolySeparation:
    """Total-degree-n bivariate polynomial fit of a pairwise summand.

    ``coefficients[i, j]`` multiplies a^i b^j (zero whenever i + j > n).
    Grouping by powers of b gives the separated form
    sum_j f_j(a) b^j with f_j(a) = sum_i coefficients[i, j] a^i.
    """

    degree: int
    coefficients: np.ndarray
    max_error: float
    rms_error: float
    fit_grid: int
    verify_grid: int

    @property
    def coefficient_count(self) -> int:
        """Number of monomials: (n + 1)(n + 2) / 2."""
        return (self.degree + 1) * (self.degree + 2) // 2

    def f_values(self, a: np.ndarray) -> np.ndarray:
        """Stack of f_j(a) for j = 0..n, shape (n + 1,) + a.shape."""
        return _f_values(self.coefficients, self.degree, a)

    def evaluate(self, a, b) -> np.ndarray:
        """p(a, b) through the separated form sum_j f_j(a) b^j."""
        return _evaluate_separated(self.coefficients, self.degree, a, b)


def _f_values(coefficients: np.ndarray, degree: int, a) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    out = np.empty((degree + 1,) + a.shape, dtype=np.float64)
    for j in range(degree + 1):
        out[j] = np.polynomial.polynomial.polyval(a, coefficients[: degree - j + 1, j])
    return out


def _evaluate_separated(coefficients: np.ndarray, degree: int, a, b) -> np.ndarray:
    b = np.asarray(b, dtype=np.float64)
    fv = _f_values(coefficients, degree, a)
    out = fv[degree].copy()
    for j in range(degree - 1, -1, -1):
        out = out * b + fv[j]
    return out


def _monomial_exponents(degree: int) -> list[tuple[int, int]]:
    return [(j - l, l) for j in range(degree + 1) for l in range(j + 1)]


def _design_matrix(u: np.ndarray, v: np.ndarray, degree: int) -> np.ndarray:
    cols = [(u**i * v**l).ravel() for i, l in _monomial_exponents(degree)]
    return np.stack(cols, axis=1)


def _shifted_to_raw(coeffs: np.ndarray, degree: int, center: float, scale: float) -> np.ndarray:
    """Expand sum c_{il} ((a-c)/s)^i ((b-c)/s)^l into raw a^k b^m monomials."""
    raw = np.zeros((degree + 1, degree + 1), dtype=np.float64)
    for (i, l), c in zip(_monomial_exponents(degree), coeffs):
        cs = c / scale ** (i + l)
        for k in range(i + 1):
            fa = math.comb(i, k) * (-center) ** (i - k)
            for m in range(l + 1):
                raw[k, m] += cs * fa * math.comb(l, m) * (-center) ** (l - m)
    return raw


def fit_separation(
    variant: ContrastVariant,
    reg: Regularizer,
    degree: int = DEFAULT_DEGREE,
    fit_grid: int = DEFAULT_FIT_GRID,
    verify_grid: int = DEFAULT_VERIFY_GRID,
    target: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None,
) -> PolySeparation:
    """Least-squares separation of the force summand (or an injected target).

    The fit minimizes the l2 distance to the summand sampled on a uniform
    ``fit_grid`` x ``fit_grid`` grid over [RHO, 1]^2; error diagnostics are
    measured on the finer ``verify_grid``.
    """
    if degree < 1:
        raise ParameterError("separation degree must be >= 1")
    if fit_grid < 2 or verify_grid < 2:
        raise ParameterError("fit and verification grids need at least 2 points")
    if target is None:
        target = lambda a, b: r_pointwise(a, b, variant, reg)  # noqa: E731

    center = 0.5 * (1.0 + RHO)
    scale = 1.0 - RHO

    g = np.linspace(RHO, 1.0, fit_grid)
    av, bv = np.meshgrid(g, g, indexing="ij")
    design = _design_matrix((av - center) / scale, (bv - center) / scale, degree)
    rhs = np.asarray(target(av, bv), dtype=np.float64).ravel()

    n_cols = design.shape[1]
    coeffs, _, rank, singular = np.linalg.lstsq(design, rhs, rcond=None)
    if rank < n_cols:
        cond = singular[0] / singular[-1] if singular[-1] > 0 else np.inf
        raise FitError(
            f"separation normal system is rank deficient ({rank}/{n_cols} "
            f"independent columns, condition {cond:.3g}); enlarge the fit grid "
            "or lower the degree"
        )

    raw = _shifted_to_raw(coeffs, degree, center, scale)
    raw.setflags(write=False)
    gv = np.linspace(RHO, 1.0, verify_grid)
    avv, bvv = np.meshgrid(gv, gv, indexing="ij")
    residual = np.abs(
        _evaluate_separated(raw, degree, avv, bvv) - np.asarray(target(avv, bvv), dtype=np.float64)
    )
    return PolySeparation(
        degree=degree,
        coefficients=raw,
        max_error=float(residual.max()),
        rms_error=float(np.sqrt(np.mean(residual**2))),
        fit_grid=fit_grid,
        verify_grid=verify_grid,
    )


_SEPARATION_CACHE: dict = {}


def cached_separation(
    variant: ContrastVariant,
    reg: Regularizer,
    degree: int = DEFAULT_DEGREE,
    which: str = "force",
    fit_grid: int = DEFAULT_FIT_GRID,
    verify_grid: int = DEFAULT_VERIFY_GRID,
) -> PolySeparation:
    """Separation of the force or energy summand, fit once per configuration."""
    key = (variant, reg, degree, which, fit_grid, verify_grid)
    sep = _SEPARATION_CACHE.get(key)
    if sep is None:
        if which == "force":
            target = None
        elif which == "energy":
            target = lambda a, b: energy_integrand(a, b, variant, reg)  # noqa: E731
        else:
            raise ParameterError(f"unknown separation target {which!r}")
        sep = fit_separation(variant, reg, degree, fit_grid, verify_grid, target=target)
        _SEPARATION_CACHE[key] = sep
    return sep


def circular_convolve(k: KernelGrid, field: np.ndarray) -> np.ndarray:
    """Kernel-weighted circular convolution over the (2H, 2W) torus.

    The kernel spectrum is real (even grid), so the inverse transform of a
    real field must be real; its imaginary residue is checked and dropped.
    """
    if field.shape != k.torus_shape:
        raise ParameterError(f"field shape {field.shape} does not match torus {k.torus_shape}")
    out = np.fft.ifft2(np.fft.fft2(field) * k.spectrum)
    residue = float(np.abs(out.imag).max())
    if residue > CONV_IMAG_TOL:
        raise NumericalFailureError(
            f"inverse transform imaginary residue {residue:.3g} exceeds {CONV_IMAG_TOL:g}"
        )
    return np.ascontiguousarray(out.real)


def separated_field(plane: ChannelPlane | np.ndarray, k: KernelGrid, sep: PolySeparation) -> np.ndarray:
    """Field sum_j f_j(I(x)) (w conv I^j)(x) on the original block."""
    data = plane.data if isinstance(plane, ChannelPlane) else np.asarray(plane, dtype=np.float64)
    height, width = data.shape
    if (k.height, k.width) != (height, width):
        raise ParameterError(
            f"kernel built for {(k.height, k.width)} does not match plane {data.shape}"
        )
    ext = mirror_extend(data)
    fv = sep.f_values(data)
    out = np.zeros((height, width), dtype=np.float64)
    power = np.ones_like(ext)
    for j in range(sep.degree + 1):
        conv = circular_convolve(k, power)
        out += fv[j] * conv[:height, :width]
        if j < sep.degree:
            power = power * ext
    return out


def r_field_fast(plane: ChannelPlane, k: KernelGrid, sep: PolySeparation) -> np.ndarray:
    """FFT approximation of the exact force field; error <= sep.max_error."""
    return separated_field(plane, k, sep)


@dataclass(frozen=True)
class ComplexityReport:
    """Wall times of the exact and fast field paths across image sizes."""

    pixel_counts: tuple[int, ...]
    exact_seconds: tuple[float, ...]
    fast_seconds: tuple[float, ...]
    exact_exponent: float
    fast_exponent: float

    def lines(self) -> list[str]:
        rows = [f"{'pixels':>10}  {'exact [s]':>12}  {'fast [s]':>12}"]
        for n, te, tf in zip(self.pixel_counts, self.exact_seconds, self.fast_seconds):
            rows.append(f"{n:>10d}  {te:>12.4f}  {tf:>12.4f}")
        rows.append(
            f"empirical exponents: exact {self.exact_exponent:.2f}, fast {self.fast_exponent:.2f}"
        )
        return rows


def _scaling_exponent(pixel_counts, seconds) -> float:
    slope, _ = np.polyfit(np.log(np.asarray(pixel_counts, float)), np.log(np.asarray(seconds)), 1)
    return float(slope)


def complexity_probe(
    sizes: list[int | tuple[int, int]],
    variant: ContrastVariant | None = None,
    reg: Regularizer | None = None,
    degree: int = DEFAULT_DEGREE,
    fast_repeats: int = 3,
    seed: int = 2024,
) -> ComplexityReport:
    """Time the exact and FFT field paths over ascending image sizes.

    Defaults to the plain-ratio variant with the sqrt regularizer, whose
    per-pair cost is a handful of arithmetic operations, so the quadratic
    growth of the exact path is what dominates the measurement.
    """
    from .solver import r_field_exact  # local import: solver builds on this module

    if variant is None:
        variant = ContrastVariant("id")
    if reg is None:
        reg = Regularizer("sqrt", 1.0 / 20.0)

    dims = [(s, s) if isinstance(s, int) else s for s in sizes]
    pixel_counts = [w * h for w, h in dims]
    if sorted(pixel_counts) != pixel_counts:
        raise ParameterError("sizes must be ascending")

    sep = cached_separation(variant, reg, degree)
    rng = np.random.default_rng(seed)

    # compile/warm both paths on a small plane before timing
    warm = ChannelPlane(rng.uniform(0.1, 0.9, size=(8, 8)))
    warm_k = build_kernel(KernelSpec(), 8, 8)
    r_field_exact(warm, warm_k, variant, reg)
    r_field_fast(warm, warm_k, sep)

    exact_s: list[float] = []
    fast_s: list[float] = []
    for width, height in dims:
        plane = ChannelPlane(rng.uniform(0.1, 0.9, size=(height, width)))
        k = build_kernel(KernelSpec(), width, height)

        t0 = time.perf_counter()
        r_field_exact(plane, k, variant, reg)
        exact_s.append(time.perf_counter() - t0)

        best = np.inf
        for _ in range(fast_repeats):
            t0 = time.perf_counter()
            r_field_fast(plane, k, sep)
            best = min(best, time.perf_counter() - t0)
        fast_s.append(best)

    return ComplexityReport(
        pixel_counts=tuple(pixel_counts),
        exact_seconds=tuple(exact_s),
        fast_seconds=tuple(fast_s),
        exact_exponent=_scaling_exponent(pixel_counts, exact_s),
        fast_exponent=_scaling_exponent(pixel_counts, fast_s),
    )
