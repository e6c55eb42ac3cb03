"""Image container, quality metrics and residual utilities.

Images hold float64 samples in ``(height, width, channels)`` layout together
with the nominal pixel range. All public operations return new images whose
samples lie inside that range; quantisation to integers happens only at file
I/O. Colour conversion uses the full-range BT.601 YCbCr matrix (the JPEG
convention), with the chroma offset placed at ``128/255`` of the pixel range
so 8-bit images get the customary offset of exactly 128.
"""

import math

import numpy as np
from PIL import Image as PILImage


class ShapeMismatchError(ValueError):
    """Two images that must share geometry do not."""


# Full-range BT.601 luma weights.
_KR, _KG, _KB = 0.299, 0.587, 0.114
_RGB2YCC = np.array(
    [
        [_KR, _KG, _KB],
        [-0.5 * _KR / (1 - _KB), -0.5 * _KG / (1 - _KB), 0.5],
        [0.5, -0.5 * _KG / (1 - _KR), -0.5 * _KB / (1 - _KR)],
    ]
)
_YCC2RGB = np.linalg.inv(_RGB2YCC)


class Image:
    """Float image with an explicit pixel range.

    The sample array is marked read-only; operations build new instances
    rather than mutating in place.
    """

    def __init__(self, data, pixel_min: float = 0.0, pixel_max: float = 255.0):
        arr = np.ascontiguousarray(data, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3:
            raise ValueError(f"expected 2D or 3D sample array, got shape {arr.shape}")
        if arr.shape[2] not in (1, 3):
            raise ValueError(f"expected 1 or 3 channels, got {arr.shape[2]}")
        if pixel_max <= pixel_min:
            raise ValueError("pixel_max must exceed pixel_min")
        arr.setflags(write=False)
        self.data = arr
        self.pixel_min = float(pixel_min)
        self.pixel_max = float(pixel_max)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def pixel_range(self) -> float:
        return self.pixel_max - self.pixel_min

    def with_data(self, data, clamp: bool = True) -> "Image":
        """New image with the same range; clamps into range by default."""
        arr = np.asarray(data, dtype=np.float64)
        if clamp:
            arr = np.clip(arr, self.pixel_min, self.pixel_max)
        return Image(arr, self.pixel_min, self.pixel_max)

    def same_shape(self, other: "Image") -> bool:
        return self.data.shape == other.data.shape


class Residual:
    """Signed difference between two images; samples are unconstrained."""

    def __init__(self, data):
        arr = np.ascontiguousarray(data, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3:
            raise ValueError(f"expected 2D or 3D residual array, got shape {arr.shape}")
        arr.setflags(write=False)
        self.data = arr


def _require_same_shape(a: Image, b: Image) -> None:
    if a.data.shape != b.data.shape:
        raise ShapeMismatchError(f"image shapes differ: {a.data.shape} vs {b.data.shape}")


def psnr(a: Image, b: Image) -> float:
    """Peak signal-to-noise ratio in dB; +inf for identical images.

    Uses the squared-range form 10*log10(R^2 / MSE) with R the nominal
    pixel range of the first operand.
    """
    _require_same_shape(a, b)
    mse = float(np.mean((a.data - b.data) ** 2))
    if mse == 0.0:
        return math.inf
    r = a.pixel_range
    return 10.0 * math.log10(r * r / mse)


def residual(watermarked: Image, original: Image) -> Residual:
    """Watermark residual, ``watermarked - original``."""
    _require_same_shape(watermarked, original)
    return Residual(watermarked.data - original.data)


def apply_residual(original: Image, res: Residual, scale: float = 1.0) -> Image:
    """Add a scaled residual and clamp back into the pixel range."""
    if original.data.shape != res.data.shape:
        raise ShapeMismatchError(
            f"shapes differ: {original.data.shape} vs {res.data.shape}"
        )
    return original.with_data(original.data + scale * res.data)


def _chroma_offset(img: Image) -> float:
    return img.pixel_min + img.pixel_range * (128.0 / 255.0)


def rgb_to_ycbcr_array(data: np.ndarray, offset: float) -> np.ndarray:
    """Unclamped full-range BT.601 transform on a (h, w, 3) array."""
    out = data @ _RGB2YCC.T
    out[..., 1] += offset
    out[..., 2] += offset
    return out


def ycbcr_to_rgb_array(data: np.ndarray, offset: float) -> np.ndarray:
    """Unclamped inverse of :func:`rgb_to_ycbcr_array`."""
    shifted = data.copy()
    shifted[..., 1] -= offset
    shifted[..., 2] -= offset
    return shifted @ _YCC2RGB.T


def _require_rgb(img: Image) -> None:
    if img.channels != 3:
        raise ValueError(f"expected a 3-channel image, got {img.channels} channels")


def rgb_to_ycbcr(img: Image) -> Image:
    """Full-range BT.601 conversion; output clamped to the pixel range."""
    _require_rgb(img)
    return img.with_data(rgb_to_ycbcr_array(img.data, _chroma_offset(img)))


def ycbcr_to_rgb(img: Image) -> Image:
    _require_rgb(img)
    return img.with_data(ycbcr_to_rgb_array(img.data, _chroma_offset(img)))


def export_residual(res: Residual, mode: str = "rgb", gain: float = 10.0,
                    pixel_min: float = 0.0, pixel_max: float = 255.0) -> Image:
    """Render a residual for inspection.

    rgb:     gain * residual, offset to mid-range.
    ycbcr:   same, after rotating the residual by the linear part of the
             BT.601 matrix (offsets cancel in differences).
    fourier: channel-wise 2D DFT magnitude, log(1 + |.|) compressed and
             min-max normalised into the pixel range. A constant magnitude
             surface degenerates to pixel_min.
    """
    mid = 0.5 * (pixel_min + pixel_max)
    if mode == "rgb":
        out = mid + gain * res.data
    elif mode == "ycbcr":
        if res.data.shape[2] != 3:
            raise ValueError("ycbcr export needs a 3-channel residual")
        out = mid + gain * (res.data @ _RGB2YCC.T)
    elif mode == "fourier":
        spec = np.fft.fftshift(np.fft.fft2(res.data, axes=(0, 1)), axes=(0, 1))
        mag = np.log1p(np.abs(spec))
        lo, hi = float(mag.min()), float(mag.max())
        if hi == lo:
            out = np.full_like(mag, pixel_min)
        else:
            out = pixel_min + (mag - lo) / (hi - lo) * (pixel_max - pixel_min)
    else:
        raise ValueError(f"unknown residual export mode: {mode!r}")
    return Image(np.clip(out, pixel_min, pixel_max), pixel_min, pixel_max)


def read_png(path) -> Image:
    """Load an image file as float RGB in [0, 255]."""
    with PILImage.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float64)
    return Image(arr)


def write_png(img: Image, path) -> None:
    """Quantise to 8 bits and write a PNG."""
    scale = 255.0 / img.pixel_range
    arr = (img.data - img.pixel_min) * scale
    arr = np.clip(np.rint(arr), 0, 255).astype(np.uint8)
    if arr.shape[2] == 1:
        arr = arr[:, :, 0]
    PILImage.fromarray(arr).save(path, format="PNG")
