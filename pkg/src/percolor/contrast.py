"""Contrast energies, their pointwise force summands, and exact derivatives.

The basic contrast variable between two intensities a, b > 0 is the ratio
min(a, b) / max(a, b); shrinking it stretches contrast.  Three strictly
increasing functions of that ratio are supported as energy integrands:

- ``id``:        the ratio itself,
- ``log``:       its logarithm (ratios become differences of logs),
- ``michelson``: minus the Michelson contrast (1 - t) / (1 + t).

min and max are not differentiable, so they are smoothed through a convex
even surrogate A_eps of the absolute value with derivative s_eps (a smooth
sign).  Two surrogate families are provided: ``sqrt`` with
A = sqrt(eps^2 + z^2) - eps, and ``arctan`` with
s = arctan(z/eps) / arctan(1/eps).  Both satisfy A(0) = 0, 0 <= A <= |z|
and |s| <= 1 on [-1, 1], and approach |z| and sign(z) as eps -> 0.

An optional exponent gamma in (0, 1) raises the basic contrast variable to
a power before applying the integrand, boosting enhancement in dark areas;
for the log integrand this is only an overall scale factor.

``contrast_energy`` sums the integrand over every (block pixel, extended
pixel) pair with kernel weights; ``variation_contrast`` is its exact
per-pixel derivative, obtained by the chain rule through the smoothed
min/max (the symmetric double sum contributes the same term twice, and the
four mirror copies of a pixel exactly cancel the 1/4 relating the block
sum to the full torus sum).  The solver uses the cheaper main-term force
summands ``r_pointwise`` instead; keeping the exact derivative here makes
finite-difference verification crisp.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ParameterError
from .image import RHO, ChannelPlane, mirror_extend
from .kernel import KernelGrid

VARIANT_KINDS = ("id", "log", "michelson")
REGULARIZER_FAMILIES = ("sqrt", "arctan")

_KIND_CODE = {
    "id": _kernels.KIND_ID,
    "log": _kernels.KIND_LOG,
    "michelson": _kernels.KIND_MICH,
}
_FAMILY_CODE = {"sqrt": _kernels.FAM_SQRT, "arctan": _kernels.FAM_ARCTAN}


@dataclass(frozen=True)
class Regularizer:
    """Smooth surrogate family for |z| and sign(z), with sharpness eps."""

    family: str = "arctan"
    eps: float = 1.0 / 20.0

    def __post_init__(self) -> None:
        if self.family not in REGULARIZER_FAMILIES:
            raise ParameterError(f"unknown regularizer family {self.family!r}")
        if not self.eps > 0:
            raise ParameterError("regularizer eps must be positive")


#: Solver default: arctan family with eps = 1/20 (the plain sign is too
#: singular and amplifies noise).
DEFAULT_REG = Regularizer()


@dataclass(frozen=True)
class ContrastVariant:
    """Contrast integrand kind plus the optional gamma exponent."""

    kind: str = "id"
    gamma: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in VARIANT_KINDS:
            raise ParameterError(f"unknown contrast variant {self.kind!r}")
        if not 0.0 < self.gamma <= 1.0:
            raise ParameterError("gamma must lie in (0, 1]")

    @property
    def gamma_on(self) -> bool:
        return self.gamma != 1.0


def a_eps(z, reg: Regularizer = DEFAULT_REG):
    """Smooth absolute value A_eps(z); even, convex, A_eps(0) = 0."""
    z = np.asarray(z, dtype=np.float64)
    if reg.family == "sqrt":
        out = np.sqrt(reg.eps**2 + z**2) - reg.eps
    else:
        c0 = np.arctan(1.0 / reg.eps)
        out = z * np.arctan(z / reg.eps) / c0 - (reg.eps / (2.0 * c0)) * np.log1p(
            z**2 / reg.eps**2
        )
    return out if out.ndim else float(out)


def s_eps(z, reg: Regularizer = DEFAULT_REG):
    """Smooth sign s_eps = A_eps'; odd, strictly increasing, |s| <= 1 on [-1, 1]."""
    z = np.asarray(z, dtype=np.float64)
    if reg.family == "sqrt":
        out = z / np.sqrt(reg.eps**2 + z**2)
    else:
        out = np.arctan(z / reg.eps) / np.arctan(1.0 / reg.eps)
    return out if out.ndim else float(out)


def s_eps_max_slope(reg: Regularizer) -> float:
    """max over [-1, 1] of |s_eps'|, attained at z = 0 (closed form)."""
    if reg.family == "sqrt":
        return 1.0 / reg.eps
    return 1.0 / (reg.eps * np.arctan(1.0 / reg.eps))


def min_eps(a, b, reg: Regularizer = DEFAULT_REG):
    """Smoothed minimum (a + b - A_eps(a - b)) / 2; >= min(a, b)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    out = 0.5 * (a + b - a_eps(a - b, reg))
    return out if np.ndim(out) else float(out)


def max_eps(a, b, reg: Regularizer = DEFAULT_REG):
    """Smoothed maximum (a + b + A_eps(a - b)) / 2; <= max(a, b)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    out = 0.5 * (a + b + a_eps(a - b, reg))
    return out if np.ndim(out) else float(out)


def sign0(z):
    """Sign function with the selection sign0(0) = 0."""
    return np.sign(z)


def r_pointwise(a, b, variant: ContrastVariant, reg: Regularizer = DEFAULT_REG):
    """Force summand: the per-pair term of the contrast force field.

    Derived from -2 I(x) times the main term of the energy derivative:

    - id:               a b / max_eps(a, b)^2 * s_eps(a - b)
    - log:              s_eps(a - b)
    - michelson:        2 a b / (a + b)^2 * s_eps(a - b)
    - gamma id:         (min_eps / max_eps)^gamma * s_eps(a - b)
    - gamma michelson:  2 (min_eps max_eps)^gamma
                        / (min_eps^gamma + max_eps^gamma)^2 * s_eps(a - b)
    - gamma log:        gamma * s_eps(a - b)

    Odd under swapping a and b, and bounded by 1 in magnitude for
    a, b in [RHO, 1].
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    s = s_eps(a - b, reg)
    if variant.kind == "log":
        out = variant.gamma * s if variant.gamma_on else s
    elif variant.kind == "id":
        if variant.gamma_on:
            out = (min_eps(a, b, reg) / max_eps(a, b, reg)) ** variant.gamma * s
        else:
            out = a * b / max_eps(a, b, reg) ** 2 * s
    else:  # michelson
        if variant.gamma_on:
            mg = min_eps(a, b, reg) ** variant.gamma
            xg = max_eps(a, b, reg) ** variant.gamma
            out = 2.0 * mg * xg / (mg + xg) ** 2 * s
        else:
            out = 2.0 * a * b / (a + b) ** 2 * s
    return out if np.ndim(out) else float(out)


def r_limit_pointwise(a, b, kind: str):
    """Sharp-limit force summand (regularization removed, sign0 at ties).

    - id:        sign0(a - b) * min(a, b) / max(a, b)
    - log:       sign0(a - b)
    - michelson: sign0(a - b) * 2 a b / (a + b)^2

    All three are homogeneous of degree 0: rescaling both intensities by a
    common factor leaves the value unchanged.
    """
    if kind not in VARIANT_KINDS:
        raise ParameterError(f"unknown contrast variant {kind!r}")
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    s = sign0(a - b)
    if kind == "log":
        out = s
    elif kind == "id":
        out = s * np.minimum(a, b) / np.maximum(a, b)
    else:
        out = s * 2.0 * a * b / (a + b) ** 2
    return out if np.ndim(out) else float(out)


def energy_integrand(a, b, variant: ContrastVariant, reg: Regularizer = DEFAULT_REG):
    """Per-pair contrast energy term (kernel weight excluded).

    With m = min_eps(a, b), M = max_eps(a, b):

    - id:               (1/4) m / M            [gamma: (1/(4 gamma)) (m/M)^gamma]
    - log:              (1/4) log(m / M)       [gamma: overall factor gamma]
    - michelson:        -(1/4) A_eps(a - b) / (a + b)
                        [gamma: -(1/(4 gamma)) A_eps(a^g - b^g) / (a^g + b^g)]
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    g = variant.gamma
    if variant.kind == "michelson":
        if variant.gamma_on:
            ag, bg = a**g, b**g
            out = -0.25 / g * a_eps(ag - bg, reg) / (ag + bg)
        else:
            out = -0.25 * a_eps(a - b, reg) / (a + b)
    else:
        ratio = min_eps(a, b, reg) / max_eps(a, b, reg)
        if variant.kind == "id":
            out = (0.25 / g) * ratio**g if variant.gamma_on else 0.25 * ratio
        else:
            out = 0.25 * g * np.log(ratio) if variant.gamma_on else 0.25 * np.log(ratio)
    return out if np.ndim(out) else float(out)


def _check_geometry(plane: ChannelPlane, k: KernelGrid) -> None:
    if (k.height, k.width) != plane.shape:
        raise ParameterError(
            f"kernel built for {(k.height, k.width)} does not match plane {plane.shape}"
        )


def contrast_energy(
    plane: ChannelPlane,
    k: KernelGrid,
    variant: ContrastVariant,
    reg: Regularizer = DEFAULT_REG,
) -> float:
    """Contrast energy: weighted integrand over block x extended-block pairs.

    Equals one quarter of the full torus-by-torus double sum, by the mirror
    symmetry of the extension.
    """
    _check_geometry(plane, k)
    return _kernels.pair_energy_sum(
        mirror_extend(plane),
        k.weights,
        plane.height,
        plane.width,
        _KIND_CODE[variant.kind],
        _FAMILY_CODE[reg.family],
        reg.eps,
        variant.gamma,
    )


def _integrand_partial(a, b, variant: ContrastVariant, reg: Regularizer):
    """d/da of ``energy_integrand`` (exact, chain rule through min/max)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    g = variant.gamma
    z = a - b
    s = s_eps(z, reg)
    A = a_eps(z, reg)
    T = A - s * (a + b)
    if variant.kind == "michelson":
        if variant.gamma_on:
            ag, bg = a**g, b**g
            zg = ag - bg
            tg = a_eps(zg, reg) - s_eps(zg, reg) * (ag + bg)
            out = a ** (g - 1.0) * tg / (4.0 * (ag + bg) ** 2)
        else:
            out = T / (4.0 * (a + b) ** 2)
    else:
        m = min_eps(a, b, reg)
        mx = max_eps(a, b, reg)
        if variant.kind == "id":
            if variant.gamma_on:
                out = (m / mx) ** (g - 1.0) * T / (8.0 * mx**2)
            else:
                out = T / (8.0 * mx**2)
        else:
            out = g * T / (8.0 * m * mx)
    return out


def variation_contrast(
    plane: ChannelPlane,
    x: tuple[int, int],
    k: KernelGrid,
    variant: ContrastVariant,
    reg: Regularizer = DEFAULT_REG,
) -> float:
    """Exact derivative of ``contrast_energy`` with respect to pixel x.

    x is (column, row).  The value matches central finite differences of
    the energy to numerical precision; no main-term truncation is applied.
    """
    col, row = x
    field = variation_contrast_field(plane, k, variant, reg, rows=(row,))
    return float(field[0, col])


def variation_contrast_field(
    plane: ChannelPlane,
    k: KernelGrid,
    variant: ContrastVariant,
    reg: Regularizer = DEFAULT_REG,
    rows: tuple[int, ...] | None = None,
) -> np.ndarray:
    """Exact energy gradient at every pixel (or a subset of rows).

    For each block pixel p:  2 * sum over extended pixels y of
    w(p, y) * d integrand / d first-argument (I(p), I(y)).
    """
    _check_geometry(plane, k)
    ext = mirror_extend(plane)
    height, width = plane.shape
    row_list = list(range(height)) if rows is None else list(rows)
    out = np.empty((len(row_list), width), dtype=np.float64)
    for i, pr in enumerate(row_list):
        for pc in range(width):
            w_at = np.roll(k.weights, (pr, pc), axis=(0, 1))
            partial = _integrand_partial(plane.data[pr, pc], ext, variant, reg)
            out[i, pc] = 2.0 * float(np.sum(w_at * partial))
    return out


def dump_r_surface(
    variant: ContrastVariant,
    reg: Regularizer,
    path,
    grid: int = 256,
) -> None:
    """Write the force summand sampled on a grid over [RHO, 1]^2 as CSV."""
    levels = np.linspace(RHO, 1.0, grid)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["a", "b", "r"])
        for av in levels:
            values = r_pointwise(np.full_like(levels, av), levels, variant, reg)
            for bv, rv in zip(levels, values):
                writer.writerow([f"{av:.17g}", f"{bv:.17g}", f"{rv:.17g}"])
