"""Synthetic test images: optical-illusion patterns and color casts.

These generators provide reproducible stand-ins for the photograph classes
the enhancement targets: staircase gratings for edge overshoot (Mach
bands), split backgrounds with identical patches for simultaneous
contrast, and single-channel gain for cast removal.  All generators are
deterministic.
"""

from __future__ import annotations

import numpy as np

from .errors import ParameterError
from .image import RHO, ChannelPlane, ColorImage, gray_image

CHANNEL_INDEX = {"R": 0, "G": 1, "B": 2}


def band_columns(width: int, steps: int) -> list[np.ndarray]:
    """Column index groups of the staircase bands (as equal as possible)."""
    return np.array_split(np.arange(width), steps)


def synth_mach_bands(
    width: int,
    height: int,
    steps: int,
    low: float = 0.25,
    high: float = 0.85,
) -> ColorImage:
    """Horizontal staircase: constant bands with linearly increasing gray."""
    if steps < 2 or steps > width:
        raise ParameterError("steps must satisfy 2 <= steps <= width")
    if not (RHO <= low < high <= 1.0):
        raise ParameterError("band levels must satisfy RHO <= low < high <= 1")
    levels = np.linspace(low, high, steps)
    data = np.empty((height, width), dtype=np.float64)
    for level, cols in zip(levels, band_columns(width, steps)):
        data[:, cols] = level
    return gray_image(ChannelPlane(data))


def simcon_patch_slices(width: int, height: int) -> tuple[tuple[slice, slice], tuple[slice, slice]]:
    """(rows, cols) slices of the dark-side and light-side patches."""
    side = width // 8
    r0 = height // 2 - side // 2
    out = []
    for cx in (width // 4, 3 * width // 4):
        c0 = cx - side // 2
        out.append((slice(r0, r0 + side), slice(c0, c0 + side)))
    return out[0], out[1]


def synth_simultaneous_contrast(
    width: int,
    height: int,
    patch_gray: float = 0.5,
    bg_dark: float = 0.25,
    bg_light: float = 0.75,
) -> ColorImage:
    """Two half-fields with a centered identical gray patch in each."""
    if width < 8 or height < 2:
        raise ParameterError("image must be at least 8 wide and 2 tall")
    for name, level in (("patch_gray", patch_gray), ("bg_dark", bg_dark), ("bg_light", bg_light)):
        if not (RHO <= level <= 1.0):
            raise ParameterError(f"{name} must lie in [RHO, 1]")
    data = np.empty((height, width), dtype=np.float64)
    data[:, : width // 2] = bg_dark
    data[:, width // 2 :] = bg_light
    dark_sl, light_sl = simcon_patch_slices(width, height)
    data[dark_sl] = patch_gray
    data[light_sl] = patch_gray
    return gray_image(ChannelPlane(data))


def synth_color_cast(base: ColorImage, channel: str, gain: float) -> ColorImage:
    """Scale one channel by ``gain`` (clamped to [RHO, 1])."""
    if gain <= 0:
        raise ParameterError("gain must be positive")
    if channel not in CHANNEL_INDEX:
        raise ParameterError(f"channel must be one of R, G, B, got {channel!r}")
    planes = list(base.channels)
    idx = CHANNEL_INDEX[channel]
    planes[idx] = ChannelPlane(np.clip(planes[idx].data * gain, RHO, 1.0))
    return ColorImage(*planes)


def synth_texture(width: int, height: int, mean: float = 0.2, amplitude: float = 0.12) -> ColorImage:
    """Smooth deterministic gray texture (sinusoid mixture) around ``mean``."""
    if not (RHO <= mean - amplitude and mean + amplitude <= 1.0):
        raise ParameterError("texture levels must stay inside [RHO, 1]")
    x = np.arange(width) / width
    y = np.arange(height) / height
    gx, gy = np.meshgrid(x, y)
    t = (
        mean
        + 0.7 * amplitude * np.sin(2 * np.pi * 3 * gx) * np.sin(2 * np.pi * 2 * gy)
        + 0.3 * amplitude * np.sin(2 * np.pi * (5 * gx + 3 * gy))
    )
    return gray_image(ChannelPlane(np.clip(t, RHO, 1.0)))
