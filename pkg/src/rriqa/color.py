"""Image decoding and color space conversions (RGB, HSV, CIELAB, YCrCb).

Images are stored as ``(height, width, 3)`` float64 arrays, row-major.
Channel ranges: RGB in [0, 1]; HSV hue in degrees [0, 360) with S, V in
[0, 1]; CIELAB L in [0, 100] with a, b unbounded; YCrCb in [0, 1] with
the chroma planes centered on 0.5 (full-range BT.601).

The CIELAB path assumes sRGB primaries with the D65 white point; no ICC
profile handling is attempted.
"""

from __future__ import annotations

import enum
import io
from dataclasses import dataclass

import numpy as np
import PIL.Image
from PIL import UnidentifiedImageError

from .errors import ContractError, DecodeError


class ColorSpace(enum.Enum):
    RGB = "rgb"
    HSV = "hsv"
    CIELAB = "cielab"
    YCRCB = "ycrcb"


@dataclass(frozen=True)
class ColorImage:
    """Three aligned scalar planes in a declared color space."""

    space: ColorSpace
    data: np.ndarray  # (height, width, 3), float64

    def __post_init__(self):
        if self.data.ndim != 3 or self.data.shape[2] != 3:
            raise ContractError(f"expected (h, w, 3) data, got shape {self.data.shape}")
        if not np.all(np.isfinite(self.data)):
            raise ContractError("image planes must be finite")

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    def plane(self, index: int) -> np.ndarray:
        return self.data[:, :, index]


def decode_image(raw: bytes) -> ColorImage:
    """Decode an 8-bit PNG/BMP byte stream into an RGB ColorImage.

    Planes are normalized to [0, 1] by division by 255; grayscale and
    palette inputs are expanded to three planes.
    """
    try:
        with PIL.Image.open(io.BytesIO(raw)) as img:
            rgb = img.convert("RGB")
            arr = np.asarray(rgb, dtype=np.float64) / 255.0
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise DecodeError(f"cannot decode image: {exc}") from exc
    return ColorImage(ColorSpace.RGB, arr)


def load_image(path) -> ColorImage:
    with open(path, "rb") as fh:
        return decode_image(fh.read())


def _require_rgb(img: ColorImage, op: str) -> np.ndarray:
    if img.space is not ColorSpace.RGB:
        raise ContractError(f"{op} expects an RGB image, got {img.space.name}")
    return img.data


def rgb_to_hsv(img: ColorImage) -> ColorImage:
    """Hexcone HSV conversion; hue of achromatic pixels is defined as 0."""
    rgb = _require_rgb(img, "rgb_to_hsv")
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    maxc = rgb.max(axis=-1)
    minc = rgb.min(axis=-1)
    chroma = maxc - minc
    sat = np.where(maxc > 0.0, chroma / np.where(maxc > 0.0, maxc, 1.0), 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        safe = np.where(chroma > 0.0, chroma, 1.0)
        hue = np.select(
            [chroma == 0.0, maxc == r, maxc == g],
            [0.0,
             np.mod((g - b) / safe, 6.0),
             (b - r) / safe + 2.0],
            default=(r - g) / safe + 4.0,
        )
    hue = np.mod(hue * 60.0, 360.0)
    out = np.stack([hue, sat, maxc], axis=-1)
    return ColorImage(ColorSpace.HSV, out)


def hsv_to_rgb(img: ColorImage) -> ColorImage:
    """Inverse hexcone transform (round-trip companion of rgb_to_hsv)."""
    if img.space is not ColorSpace.HSV:
        raise ContractError(f"hsv_to_rgb expects an HSV image, got {img.space.name}")
    h, s, v = img.data[..., 0], img.data[..., 1], img.data[..., 2]
    hp = (h / 60.0) % 6.0
    chroma = v * s
    x = chroma * (1.0 - np.abs(hp % 2.0 - 1.0))
    zero = np.zeros_like(chroma)
    k = np.floor(hp).astype(int) % 6
    r1 = np.choose(k, [chroma, x, zero, zero, x, chroma])
    g1 = np.choose(k, [x, chroma, chroma, x, zero, zero])
    b1 = np.choose(k, [zero, zero, x, chroma, chroma, x])
    m = v - chroma
    out = np.stack([r1 + m, g1 + m, b1 + m], axis=-1)
    return ColorImage(ColorSpace.RGB, out)


def rgb_to_ycrcb(img: ColorImage) -> ColorImage:
    """Full-range BT.601 luma/chroma split."""
    rgb = _require_rgb(img, "rgb_to_ycrcb")
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    y = 0.299 * r + 0.587 * g + 0.114 * b
    cr = 0.5 + (r - y) * 0.713
    cb = 0.5 + (b - y) * 0.564
    return ColorImage(ColorSpace.YCRCB, np.stack([y, cr, cb], axis=-1))


# sRGB -> CIEXYZ (linear light, D65 white, 2 degree observer); the white
# point is the matrix's own image of (1,1,1) so reference white lands
# exactly on L=100, a=b=0
_SRGB_TO_XYZ = np.array([
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
])
_D65_WHITE = _SRGB_TO_XYZ.sum(axis=1)


def _srgb_expand(v: np.ndarray) -> np.ndarray:
    return np.where(v <= 0.04045, v / 12.92, ((v + 0.055) / 1.055) ** 2.4)


def rgb_to_cielab(img: ColorImage) -> ColorImage:
    """sRGB gamma expansion -> CIEXYZ (D65) -> CIELAB."""
    rgb = _require_rgb(img, "rgb_to_cielab")
    xyz = _srgb_expand(rgb) @ _SRGB_TO_XYZ.T
    t = xyz / _D65_WHITE
    delta = 6.0 / 29.0
    f = np.where(t > delta**3, np.cbrt(t), t / (3.0 * delta**2) + 4.0 / 29.0)
    lum = 116.0 * f[..., 1] - 16.0
    a = 500.0 * (f[..., 0] - f[..., 1])
    b = 200.0 * (f[..., 1] - f[..., 2])
    return ColorImage(ColorSpace.CIELAB, np.stack([lum, a, b], axis=-1))


_CONVERTERS = {
    ColorSpace.RGB: lambda img: img,
    ColorSpace.HSV: rgb_to_hsv,
    ColorSpace.CIELAB: rgb_to_cielab,
    ColorSpace.YCRCB: rgb_to_ycrcb,
}


def convert(img: ColorImage, space: ColorSpace) -> ColorImage:
    """Convert an image to ``space``.  Conversions are defined from RGB."""
    if img.space is space:
        return img
    if img.space is not ColorSpace.RGB:
        raise ContractError(
            f"conversions are defined from RGB; got {img.space.name} -> {space.name}")
    return _CONVERTERS[space](img)


def analysis_planes(img: ColorImage) -> np.ndarray:
    """Planes as fed to the multiscale decomposition.

    HSV hue is rescaled from degrees to [0, 1] so the three channels share
    comparable dynamic range; all other spaces pass through unchanged.
    """
    if img.space is ColorSpace.HSV:
        out = img.data.copy()
        out[..., 0] /= 360.0
        return out
    return img.data
