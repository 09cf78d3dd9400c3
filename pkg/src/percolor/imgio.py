"""Image file reading and writing.

Binary PPM (P6, 8-bit, maxval 255) is the bit-exact interchange format;
binary PGM (P5) is read as a gray image with three identical channels.
PNG (8-bit RGB or grayscale) is supported as a convenience through Pillow.
Intensities are floored to RHO at ingestion and quantized (round half up)
only at export.
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np

from .errors import ImageFormatError, UnsupportedDepthError
from .image import ChannelPlane, ColorImage, denormalize_to_8bit, gray_image, normalize_from_8bit

try:
    from PIL import Image as _PILImage
except ImportError:  # pragma: no cover - Pillow is a declared dependency
    _PILImage = None


def _read_token(fh: io.BufferedReader) -> bytes:
    """Next whitespace-delimited header token, skipping '#' comments."""
    token = b""
    while True:
        ch = fh.read(1)
        if ch == b"":
            raise ImageFormatError("truncated header")
        if ch == b"#":
            while ch not in (b"\n", b""):
                ch = fh.read(1)
            continue
        if ch.isspace():
            if token:
                return token
            continue
        token += ch


def _parse_pnm(fh: io.BufferedReader) -> ColorImage:
    magic = fh.read(2)
    if magic not in (b"P6", b"P5"):
        raise ImageFormatError(f"not a binary PPM/PGM file (magic {magic!r})")
    try:
        width = int(_read_token(fh))
        height = int(_read_token(fh))
        maxval = int(_read_token(fh))
    except ValueError as exc:
        raise ImageFormatError("malformed PPM header") from exc
    if width < 1 or height < 1:
        raise ImageFormatError(f"invalid dimensions {width}x{height}")
    if maxval != 255:
        raise UnsupportedDepthError(f"only maxval 255 is supported, file declares {maxval}")
    channels = 3 if magic == b"P6" else 1
    expected = width * height * channels
    raw = fh.read(expected)
    if len(raw) != expected:
        raise ImageFormatError(f"truncated pixel data ({len(raw)} of {expected} bytes)")
    arr = np.frombuffer(raw, dtype=np.uint8)
    if channels == 1:
        return gray_image(normalize_from_8bit(arr.reshape(height, width)))
    arr = arr.reshape(height, width, 3)
    return ColorImage(*(normalize_from_8bit(arr[:, :, c]) for c in range(3)))


def _read_png(path: Path) -> ColorImage:
    if _PILImage is None:
        raise ImageFormatError("PNG support requires Pillow")
    with _PILImage.open(path) as img:
        if img.mode == "L":
            return gray_image(normalize_from_8bit(np.asarray(img)))
        arr = np.asarray(img.convert("RGB"))
    return ColorImage(*(normalize_from_8bit(arr[:, :, c]) for c in range(3)))


def read_image(path: str | Path) -> ColorImage:
    """Load a PPM/PGM/PNG file as a normalized color image."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".png":
        return _read_png(path)
    if suffix in (".ppm", ".pgm", ""):
        with open(path, "rb") as fh:
            return _parse_pnm(fh)
    raise ImageFormatError(f"unsupported image format {suffix!r}")


def to_uint8_rgb(image: ColorImage) -> np.ndarray:
    """Quantize an image to an (H, W, 3) uint8 array."""
    return np.stack([denormalize_to_8bit(c) for c in image.channels], axis=-1)


def write_image(path: str | Path, image: ColorImage) -> None:
    """Write a color image as binary PPM (P6) or PNG, by extension."""
    path = Path(path)
    suffix = path.suffix.lower()
    rgb = to_uint8_rgb(image)
    if suffix == ".png":
        if _PILImage is None:
            raise ImageFormatError("PNG support requires Pillow")
        _PILImage.fromarray(rgb, mode="RGB").save(path)
        return
    if suffix in (".ppm", ""):
        header = f"P6\n{image.width} {image.height}\n255\n".encode("ascii")
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(rgb.tobytes())
        return
    raise ImageFormatError(f"unsupported image format {suffix!r}")
