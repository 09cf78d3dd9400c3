"""Image planes on the normalized dynamic range with mirror-periodic semantics.

A chromatic channel is stored as an (H, W) float64 grid of intensities in
[RHO, 1], RHO = 1/255.  The positive floor keeps ratio-based contrast
measures and entropic penalties finite.  All spatial operators in this
package view a plane as evenly reflected into a (2H, 2W) block and then
tiled periodically, so every pixel has a full neighborhood and no boundary
receives special treatment.

Everything here is a pure function over immutable inputs; plane data is
marked read-only so instances can be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, DomainError

#: Positive intensity floor: one 8-bit quantization step.
RHO = 1.0 / 255.0

#: Slack for validating stored intensities against [RHO, 1].
_RANGE_TOL = 1e-12


def _as_readonly(a: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(a, dtype=np.float64)
    if out is a or out.base is not None:
        out = out.copy()
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ChannelPlane:
    """One chromatic channel: an (H, W) grid of intensities in [RHO, 1]."""

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DimensionError(f"plane must be a non-empty 2-D grid, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DomainError("plane contains non-finite intensities")
        if arr.min() < RHO - _RANGE_TOL or arr.max() > 1.0 + _RANGE_TOL:
            raise DomainError(
                f"intensities must lie in [{RHO:.6g}, 1], got range "
                f"[{arr.min():.6g}, {arr.max():.6g}]"
            )
        object.__setattr__(self, "data", _as_readonly(arr))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape


@dataclass(frozen=True)
class ColorImage:
    """Three channel planes (R, G, B) of identical dimensions."""

    r: ChannelPlane
    g: ChannelPlane
    b: ChannelPlane

    def __post_init__(self) -> None:
        if not (self.r.shape == self.g.shape == self.b.shape):
            raise DimensionError(
                f"channel shapes differ: {self.r.shape}, {self.g.shape}, {self.b.shape}"
            )

    @property
    def height(self) -> int:
        return self.r.height

    @property
    def width(self) -> int:
        return self.r.width

    @property
    def channels(self) -> tuple[ChannelPlane, ChannelPlane, ChannelPlane]:
        return (self.r, self.g, self.b)

    def is_gray(self) -> bool:
        """True when all three channels are bitwise identical."""
        return np.array_equal(self.r.data, self.g.data) and np.array_equal(
            self.r.data, self.b.data
        )


@dataclass(frozen=True)
class ChannelStats:
    """Mean and population standard deviation of one plane."""

    mean: float
    std: float


def normalize_from_8bit(raw: np.ndarray) -> ChannelPlane:
    """Map 8-bit integers to the normalized range, flooring 0 to RHO.

    The floor is applied at ingestion so downstream ratio and log
    operations never see a zero intensity.
    """
    arr = np.asarray(raw)
    if arr.ndim != 2 or arr.size == 0:
        raise DimensionError(f"expected a non-empty 2-D grid, got shape {arr.shape}")
    if arr.min() < 0 or arr.max() > 255:
        raise DomainError("8-bit input must lie in 0..255")
    return ChannelPlane(np.maximum(arr.astype(np.float64) / 255.0, RHO))


def denormalize_to_8bit(plane: ChannelPlane) -> np.ndarray:
    """Quantize a plane back to 8-bit integers, rounding half up."""
    scaled = np.floor(plane.data * 255.0 + 0.5)
    return np.clip(scaled, 0, 255).astype(np.uint8)


def mirror_extend(plane: ChannelPlane | np.ndarray) -> np.ndarray:
    """Reflect a plane evenly in both axes onto its (2H, 2W) fundamental block.

    Layout is [original | reversed] per axis, e.g. row [a, b] becomes
    [a, b, b, a].  Tiling the result with period (2H, 2W) yields the even
    periodic extension: g[(-1 - i) mod 2H, j] == g[i, j] and likewise in j.
    """
    data = plane.data if isinstance(plane, ChannelPlane) else np.asarray(plane, dtype=np.float64)
    ext = np.concatenate([data, data[::-1, :]], axis=0)
    return np.concatenate([ext, ext[:, ::-1]], axis=1)


def channel_stats(plane: ChannelPlane) -> ChannelStats:
    """Mean and population (ddof=0) standard deviation of all pixels."""
    return ChannelStats(mean=float(plane.data.mean()), std=float(plane.data.std()))


def plane_of(value: float | np.ndarray, height: int | None = None, width: int | None = None) -> ChannelPlane:
    """Convenience constructor: constant plane or plane from an array."""
    if np.isscalar(value):
        if height is None or width is None:
            raise DimensionError("constant plane needs explicit height and width")
        return ChannelPlane(np.full((height, width), float(value)))
    return ChannelPlane(np.asarray(value, dtype=np.float64))


def gray_image(plane: ChannelPlane) -> ColorImage:
    """Replicate one plane into an R=G=B image."""
    return ColorImage(plane, plane, plane)
