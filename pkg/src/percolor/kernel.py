"""Spatial influence kernel on the mirror-periodic lattice.

The kernel is a function of the displacement between two lattice points of
the (2W, 2H) torus induced by mirror extension.  It is stored as a
(2H, 2W) grid of nonnegative weights indexed by wrapped displacement,
normalized so the total mass is exactly 1; by translation invariance this
makes the per-pixel sum of weights equal to 1 for every pixel
simultaneously.  Weight symmetry under displacement negation encodes that
mutual chromatic induction does not depend on pixel order.

The default radial profile is reciprocal distance, w = A / d.  The profile
is singular at zero distance, so the self-weight (zero displacement) is a
separate policy, 0 by default; since every pairwise contrast summand
vanishes at equal arguments anyway, this choice only shifts contrast
energies by a constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Union

import numpy as np

from .errors import DegenerateDomainError, DimensionError, NormalizationError, ParameterError

ProfileFn = Callable[[np.ndarray], np.ndarray]
Profile = Union[str, ProfileFn]

#: Spectrum entries of an even real kernel must be real to this tolerance.
SPECTRUM_IMAG_TOL = 1e-9


@dataclass(frozen=True)
class KernelSpec:
    """Radial decay family plus the weight policy at zero distance."""

    profile: Profile = "reciprocal"
    self_weight: float = 0.0

    def __post_init__(self) -> None:
        if isinstance(self.profile, str) and self.profile != "reciprocal":
            raise ParameterError(f"unknown kernel profile {self.profile!r}")
        if self.self_weight < 0:
            raise ParameterError("self-weight must be nonnegative")

    def evaluate(self, dist: np.ndarray) -> np.ndarray:
        """Profile value at each positive torus distance."""
        if callable(self.profile):
            return np.asarray(self.profile(dist), dtype=np.float64)
        return 1.0 / dist


@dataclass(frozen=True)
class KernelGrid:
    """Normalized weights over the (2H, 2W) displacement torus.

    ``weights[dy, dx]`` is the influence between two pixels separated by
    (dx, dy) modulo (2W, 2H).  ``norm_constant`` is the factor A applied to
    the raw profile so that ``weights.sum() == 1``.  ``spectrum`` is the
    real 2-D DFT of the weights (real because the grid is even), kept for
    FFT convolution.
    """

    width: int
    height: int
    weights: np.ndarray
    norm_constant: float
    spectrum: np.ndarray

    @property
    def torus_shape(self) -> tuple[int, int]:
        return (2 * self.height, 2 * self.width)


def torus_distance(p: tuple[int, int], q: tuple[int, int], width: int, height: int) -> float:
    """Shortest Euclidean distance between (x, y) points on the (2W, 2H) torus."""
    if width < 1 or height < 1:
        raise DimensionError("torus requires width and height >= 1")
    px, py = p
    qx, qy = q
    dx = abs(px - qx) % (2 * width)
    dy = abs(py - qy) % (2 * height)
    dx = min(dx, 2 * width - dx)
    dy = min(dy, 2 * height - dy)
    return math.hypot(dx, dy)


def _wrapped_axis_distances(n: int) -> np.ndarray:
    d = np.arange(n, dtype=np.float64)
    return np.minimum(d, n - d)


def torus_distance_grid(width: int, height: int) -> np.ndarray:
    """(2H, 2W) grid of torus distances from the zero displacement."""
    ax = _wrapped_axis_distances(2 * width)
    ay = _wrapped_axis_distances(2 * height)
    return np.hypot(ay[:, None], ax[None, :])


@lru_cache(maxsize=32)
def build_kernel(spec: KernelSpec, width: int, height: int) -> KernelGrid:
    """Construct and normalize the kernel grid for a W x H image.

    For a 1x1 image every lattice displacement joins the single pixel to
    one of its own mirror copies, so the grid has no true neighbor bins;
    with a zero self-weight there is nothing to normalize and the domain
    is rejected as degenerate.
    """
    if width < 1 or height < 1:
        raise DimensionError("kernel requires width and height >= 1")

    if width == 1 and height == 1:
        if spec.self_weight == 0.0:
            raise DegenerateDomainError(
                "1x1 image has no neighbors: every displacement is a self copy "
                "and the self-weight policy is 0"
            )
        raw = np.full((2, 2), spec.self_weight, dtype=np.float64)
    else:
        dist = torus_distance_grid(width, height)
        raw = np.zeros_like(dist)
        positive = dist > 0
        raw[positive] = spec.evaluate(dist[positive])
        raw[0, 0] = spec.self_weight

    if np.any(raw < 0) or not np.all(np.isfinite(raw)):
        raise NormalizationError("kernel profile produced negative or non-finite weights")
    total = raw.sum()
    if total <= 0:
        raise NormalizationError("kernel profile is identically zero; cannot normalize")

    norm_constant = 1.0 / total
    weights = raw * norm_constant
    weights.setflags(write=False)

    spectrum_c = np.fft.fft2(weights)
    imag_residue = np.abs(spectrum_c.imag).max()
    if imag_residue > SPECTRUM_IMAG_TOL:
        raise NormalizationError(
            f"kernel spectrum is not real (imag residue {imag_residue:.3g}); "
            "weights are not even under displacement negation"
        )
    spectrum = np.ascontiguousarray(spectrum_c.real)
    spectrum.setflags(write=False)

    return KernelGrid(
        width=width,
        height=height,
        weights=weights,
        norm_constant=norm_constant,
        spectrum=spectrum,
    )


def kernel_for_plane(shape: tuple[int, int], spec: KernelSpec | None = None) -> KernelGrid:
    """Kernel grid matching an (H, W) plane shape."""
    h, w = shape
    return build_kernel(spec if spec is not None else KernelSpec(), w, h)
