"""Seeded image-degradation suites for robustness evaluation.

Five named suites bundle the transform lists the evaluated watermarkers are
expected to survive. A suite applies its always-steps in order, then draws a
fixed number of pool steps without replacement and applies those in draw
order. Every random decision comes from one generator seeded per call, so a
(image, suite, seed) triple always produces the same output.

Each step consumes one uniform draw and fires only when it lands below the
step probability; parameters are sampled only when the step fires. Geometry
steps (crop, scale, rotation) resize or map back to the input resolution, so
extractors keep a fixed frame. All steps clamp back into the pixel range.

Interpretation notes for parameters the sources leave loose:
  - crop scale is an area fraction; the window keeps the image aspect.
  - resized_crop follows the usual sample-10-windows-then-center fallback,
    with the aspect ratio drawn log-uniformly.
  - frequency_compress keeps the lowest zig-zag fraction of full-frame DCT
    coefficients per channel and zeroes the rest.
  - color_jiggle applies brightness, contrast, saturation, hue in that order.
  - sharpness draws a factor f in [0, max] and adds f times the detail
    (input minus a fixed 3x3 smoothing) back onto the input.
  - gaussian_blur with a kernel range draws an odd size and derives sigma
    as 0.3*((k-1)*0.5 - 1) + 0.8; a fixed kernel uses the given sigma range.
  - noise std values are fractions of the pixel range.
"""

import io
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from PIL import Image as PILImage
from scipy import ndimage
from scipy.fft import dctn, idctn

from .image import Image

SUITE_NAMES = ("rivagan", "ssl", "trustmark_low", "trustmark_medium", "trustmark_high")

_LUMA = np.array([0.299, 0.587, 0.114])


class UnsupportedStepError(ValueError):
    """A step kind with no implementation; steps are never skipped silently."""


@dataclass(frozen=True)
class AugmentationStep:
    kind: str
    params: dict = field(default_factory=dict)
    probability: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError("probability must lie in [0, 1]")
        for name, value in self.params.items():
            if isinstance(value, tuple) and len(value) == 2 and value[0] > value[1]:
                raise ValueError(f"parameter {name} range is reversed: {value}")


@dataclass(frozen=True)
class AugmentationSuite:
    name: str
    always_steps: tuple
    choice_steps: tuple = ()
    choice_count: int = 0


# -- shared helpers ----------------------------------------------------------


def resize_bilinear(data: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resample aligning pixel centers, edge values replicated."""
    h, w = data.shape[:2]
    if (out_h, out_w) == (h, w):
        return data.copy()
    rows = (np.arange(out_h) + 0.5) * (h / out_h) - 0.5
    cols = (np.arange(out_w) + 0.5) * (w / out_w) - 0.5
    rr, cc = np.meshgrid(rows, cols, indexing="ij")
    out = np.empty((out_h, out_w, data.shape[2]))
    for k in range(data.shape[2]):
        out[:, :, k] = ndimage.map_coordinates(data[:, :, k], [rr, cc], order=1, mode="nearest")
    return out


def _crop_resize(img: Image, top: int, left: int, ch: int, cw: int) -> Image:
    window = img.data[top : top + ch, left : left + cw]
    return img.with_data(resize_bilinear(window, img.height, img.width))


def _norm(img: Image) -> np.ndarray:
    return (img.data - img.pixel_min) / img.pixel_range


def _denorm(img: Image, x01: np.ndarray) -> Image:
    return img.with_data(img.pixel_min + x01 * img.pixel_range)


def _luminance01(x01: np.ndarray) -> np.ndarray:
    if x01.shape[2] == 1:
        return x01[:, :, 0]
    return x01 @ _LUMA


def _rgb_to_hsv(x01: np.ndarray):
    r, g, b = x01[:, :, 0], x01[:, :, 1], x01[:, :, 2]
    mx = x01.max(axis=2)
    mn = x01.min(axis=2)
    diff = mx - mn
    safe = np.where(diff > 0, diff, 1.0)
    h = np.zeros_like(mx)
    is_r = (mx == r) & (diff > 0)
    is_g = (mx == g) & (diff > 0) & ~is_r
    is_b = (diff > 0) & ~is_r & ~is_g
    h[is_r] = (((g - b) / safe)[is_r] / 6.0) % 1.0
    h[is_g] = (((b - r) / safe)[is_g] + 2.0) / 6.0
    h[is_b] = (((r - g) / safe)[is_b] + 4.0) / 6.0
    s = np.where(mx > 0, diff / np.where(mx > 0, mx, 1.0), 0.0)
    return h, s, mx


def _hsv_to_rgb(h, s, v):
    i = np.floor(h * 6.0)
    f = h * 6.0 - i
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    i = i.astype(int) % 6
    out = np.empty(h.shape + (3,))
    for idx, (rr, gg, bb) in enumerate([(v, t, p), (q, v, p), (p, v, t),
                                        (p, q, v), (t, p, v), (v, p, q)]):
        m = i == idx
        out[m, 0], out[m, 1], out[m, 2] = rr[m], gg[m], bb[m]
    return out


@lru_cache(maxsize=8)
def _zigzag_rank(h: int, w: int) -> np.ndarray:
    """Visit rank of each (u, v) in zig-zag diagonal order."""
    uu, vv = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    s = uu + vv
    # odd diagonals walk u upward, even ones downward
    order = np.lexsort((np.where(s % 2 == 1, uu, -uu).ravel(), s.ravel()))
    rank = np.empty(h * w, dtype=np.int64)
    rank[order] = np.arange(h * w)
    rank = rank.reshape(h, w)
    rank.setflags(write=False)
    return rank


def _odd_in_range(rng, lo: int, hi: int) -> int:
    sizes = np.arange(lo | 1, hi + 1, 2)
    return int(sizes[rng.integers(0, len(sizes))])


# -- step implementations ----------------------------------------------------


def _do_identity(img, params, rng):
    return img


def _do_horizontal_flip(img, params, rng):
    return img.with_data(np.ascontiguousarray(img.data[:, ::-1]))


def _do_crop(img, params, rng):
    s = rng.uniform(*params["scale"])
    ch = max(1, round(img.height * math.sqrt(s)))
    cw = max(1, round(img.width * math.sqrt(s)))
    top = int(rng.integers(0, img.height - ch + 1))
    left = int(rng.integers(0, img.width - cw + 1))
    return _crop_resize(img, top, left, ch, cw)


def _do_scale(img, params, rng):
    f = rng.uniform(*params["scale"])
    small = resize_bilinear(img.data, max(1, round(img.height * f)), max(1, round(img.width * f)))
    return img.with_data(resize_bilinear(small, img.height, img.width))


def _do_resized_crop(img, params, rng):
    h, w = img.height, img.width
    area = h * w
    rlo, rhi = params["ratio"]
    for _ in range(10):
        target = rng.uniform(*params["scale"]) * area
        ratio = math.exp(rng.uniform(math.log(rlo), math.log(rhi)))
        cw = round(math.sqrt(target * ratio))
        ch = round(math.sqrt(target / ratio))
        if 0 < cw <= w and 0 < ch <= h:
            top = int(rng.integers(0, h - ch + 1))
            left = int(rng.integers(0, w - cw + 1))
            return _crop_resize(img, top, left, ch, cw)
    in_ratio = w / h
    if in_ratio < rlo:
        cw, ch = w, min(h, round(w / rlo))
    elif in_ratio > rhi:
        cw, ch = min(w, round(h * rhi)), h
    else:
        cw, ch = w, h
    return _crop_resize(img, (h - ch) // 2, (w - cw) // 2, ch, cw)


def _do_frequency_compress(img, params, rng):
    keep = rng.uniform(*params["fraction"])
    h, w = img.height, img.width
    mask = _zigzag_rank(h, w) < math.ceil(keep * h * w)
    out = np.empty_like(img.data)
    for k in range(img.channels):
        co = dctn(img.data[:, :, k], norm="ortho")
        out[:, :, k] = idctn(co * mask, norm="ortho")
    return img.with_data(out)


def _do_rotation(img, params, rng):
    angle = rng.uniform(*params["degrees"])
    out = ndimage.rotate(img.data, angle, axes=(1, 0), reshape=False, order=1, mode="reflect")
    return img.with_data(out)


def _do_jpeg(img, params, rng):
    x8 = np.rint(np.clip(_norm(img), 0.0, 1.0) * 255.0).astype(np.uint8)
    pil = PILImage.fromarray(x8[:, :, 0], "L") if img.channels == 1 else PILImage.fromarray(x8, "RGB")
    buf = io.BytesIO()
    pil.save(buf, format="JPEG", quality=int(params["quality"]))
    buf.seek(0)
    back = np.asarray(PILImage.open(buf), dtype=np.float64) / 255.0
    if back.ndim == 2:
        back = back[:, :, None]
    return _denorm(img, back)


def _do_brightness(img, params, rng):
    f = rng.uniform(*params["factor"])
    return _denorm(img, _norm(img) * f)


def _do_contrast(img, params, rng):
    f = rng.uniform(*params["factor"])
    x01 = _norm(img)
    mean = float(_luminance01(x01).mean())
    return _denorm(img, f * x01 + (1.0 - f) * mean)


def _do_saturation(img, params, rng):
    f = rng.uniform(*params["factor"])
    if img.channels == 1:
        return img
    x01 = _norm(img)
    gray = _luminance01(x01)[:, :, None]
    return _denorm(img, f * x01 + (1.0 - f) * gray)


def _do_hue(img, params, rng):
    d = rng.uniform(*params["delta"])
    if img.channels == 1:
        return img
    h, s, v = _rgb_to_hsv(np.clip(_norm(img), 0.0, 1.0))
    return _denorm(img, _hsv_to_rgb((h + d) % 1.0, s, v))


def _do_color_jiggle(img, params, rng):
    fb = rng.uniform(max(0.0, 1.0 - params["brightness"]), 1.0 + params["brightness"])
    fc = rng.uniform(max(0.0, 1.0 - params["contrast"]), 1.0 + params["contrast"])
    fs = rng.uniform(max(0.0, 1.0 - params["saturation"]), 1.0 + params["saturation"])
    fh = rng.uniform(-params["hue"], params["hue"])
    x01 = np.clip(_norm(img) * fb, 0.0, 1.0)
    mean = float(_luminance01(x01).mean())
    x01 = np.clip(fc * x01 + (1.0 - fc) * mean, 0.0, 1.0)
    if img.channels == 3:
        gray = _luminance01(x01)[:, :, None]
        x01 = np.clip(fs * x01 + (1.0 - fs) * gray, 0.0, 1.0)
        h, s, v = _rgb_to_hsv(x01)
        x01 = _hsv_to_rgb((h + fh) % 1.0, s, v)
    return _denorm(img, x01)


def _do_grayscale(img, params, rng):
    if img.channels == 1:
        return img
    gray = _luminance01(_norm(img))
    return _denorm(img, np.repeat(gray[:, :, None], img.channels, axis=2))


def _gaussian_kernel(size: int, sigma: float) -> np.ndarray:
    t = np.arange(size) - (size - 1) / 2.0
    k = np.exp(-(t * t) / (2.0 * sigma * sigma))
    return k / k.sum()


def _do_gaussian_blur(img, params, rng):
    kernel = params["kernel"]
    if isinstance(kernel, tuple):
        size = _odd_in_range(rng, *kernel)
        sigma = 0.3 * ((size - 1) * 0.5 - 1.0) + 0.8
    else:
        size = int(kernel)
        sigma = rng.uniform(*params["sigma"])
    k1 = _gaussian_kernel(size, sigma)
    out = ndimage.convolve1d(img.data, k1, axis=0, mode="reflect")
    out = ndimage.convolve1d(out, k1, axis=1, mode="reflect")
    return img.with_data(out)


def _do_gaussian_noise(img, params, rng):
    noise = rng.normal(0.0, params["std"], img.data.shape)
    return img.with_data(img.data + noise * img.pixel_range)


def _motion_kernel(size: int, angle_deg: float, direction: float) -> np.ndarray:
    half = (size - 1) / 2.0
    t = np.linspace(-half, half, size)
    weights = 1.0 + direction * (t / half if half else t)
    theta = math.radians(angle_deg)
    ys = half + t * math.sin(theta)
    xs = half + t * math.cos(theta)
    kern = np.zeros((size, size))
    for y, x, wgt in zip(ys, xs, weights):
        y0, x0 = int(math.floor(y)), int(math.floor(x))
        fy, fx = y - y0, x - x0
        for dy, dx, frac in ((0, 0, (1 - fy) * (1 - fx)), (0, 1, (1 - fy) * fx),
                             (1, 0, fy * (1 - fx)), (1, 1, fy * fx)):
            yy, xx = y0 + dy, x0 + dx
            if 0 <= yy < size and 0 <= xx < size:
                kern[yy, xx] += wgt * frac
    return kern / kern.sum()


def _do_motion_blur(img, params, rng):
    size = _odd_in_range(rng, *params["kernel"])
    angle = rng.uniform(*params["angle"])
    direction = rng.uniform(*params["direction"])
    kern = _motion_kernel(size, angle, direction)
    out = np.empty_like(img.data)
    for k in range(img.channels):
        out[:, :, k] = ndimage.convolve(img.data[:, :, k], kern, mode="reflect")
    return img.with_data(out)


def _do_posterize(img, params, rng):
    bits = int(params["bits"])
    if bits >= 8:
        return img
    q = np.rint(np.clip(_norm(img), 0.0, 1.0) * 255.0).astype(np.uint8)
    q &= np.uint8((0xFF << (8 - bits)) & 0xFF)
    return _denorm(img, q / 255.0)


def _do_rgb_shift(img, params, rng):
    limit = params["limit"]
    shifts = rng.uniform(-limit, limit, img.channels)
    return img.with_data(img.data + shifts * img.pixel_range)


def _do_sharpness(img, params, rng):
    f = rng.uniform(0.0, params["factor"])
    kern = np.array([[1.0, 1.0, 1.0], [1.0, 5.0, 1.0], [1.0, 1.0, 1.0]]) / 13.0
    out = np.empty_like(img.data)
    for k in range(img.channels):
        smooth = ndimage.convolve(img.data[:, :, k], kern, mode="reflect")
        out[:, :, k] = img.data[:, :, k] + f * (img.data[:, :, k] - smooth)
    return img.with_data(out)


def _do_median_blur(img, params, rng):
    size = int(params["kernel"])
    out = np.empty_like(img.data)
    for k in range(img.channels):
        out[:, :, k] = ndimage.median_filter(img.data[:, :, k], size=size, mode="reflect")
    return img.with_data(out)


def _do_box_blur(img, params, rng):
    size = int(params["kernel"])
    out = np.empty_like(img.data)
    for k in range(img.channels):
        out[:, :, k] = ndimage.uniform_filter(img.data[:, :, k], size=size, mode="reflect")
    return img.with_data(out)


_KINDS = {
    "identity": _do_identity,
    "horizontal_flip": _do_horizontal_flip,
    "crop": _do_crop,
    "scale": _do_scale,
    "resized_crop": _do_resized_crop,
    "frequency_compress": _do_frequency_compress,
    "rotation": _do_rotation,
    "jpeg": _do_jpeg,
    "brightness": _do_brightness,
    "contrast": _do_contrast,
    "saturation": _do_saturation,
    "hue": _do_hue,
    "color_jiggle": _do_color_jiggle,
    "grayscale": _do_grayscale,
    "gaussian_blur": _do_gaussian_blur,
    "gaussian_noise": _do_gaussian_noise,
    "motion_blur": _do_motion_blur,
    "posterize": _do_posterize,
    "rgb_shift": _do_rgb_shift,
    "sharpness": _do_sharpness,
    "median_blur": _do_median_blur,
    "box_blur": _do_box_blur,
}


def apply_step(img: Image, step: AugmentationStep, rng) -> Image:
    """Apply one step; one uniform draw decides whether it fires."""
    impl = _KINDS.get(step.kind)
    if impl is None:
        raise UnsupportedStepError(f"no implementation for step kind {step.kind!r}")
    if rng.uniform() >= step.probability:
        return img
    return impl(img, step.params, rng)


def apply_suite(img: Image, suite: AugmentationSuite, seed: int) -> Image:
    """Run always-steps, then the drawn pool steps, all from one seed."""
    rng = np.random.default_rng(int(seed))
    out = img
    for step in suite.always_steps:
        out = apply_step(out, step, rng)
    if suite.choice_count:
        picks = rng.permutation(len(suite.choice_steps))[: suite.choice_count]
        for i in picks:
            out = apply_step(out, suite.choice_steps[i], rng)
    return out


# -- the five named suites ---------------------------------------------------


def _rivagan_suite() -> AugmentationSuite:
    return AugmentationSuite(
        "rivagan",
        always_steps=(
            AugmentationStep("crop", {"scale": (0.8, 1.0)}, probability=0.5),
            AugmentationStep("scale", {"scale": (0.8, 1.0)}, probability=0.5),
            AugmentationStep("frequency_compress", {"fraction": (0.5, 1.0)}, probability=0.5),
        ),
    )


def _ssl_suite() -> AugmentationSuite:
    return AugmentationSuite(
        "ssl",
        always_steps=(AugmentationStep("horizontal_flip", probability=0.5),),
        choice_steps=(
            AugmentationStep("identity"),
            AugmentationStep("rotation", {"degrees": (-30.0, 30.0)}),
            AugmentationStep("resized_crop", {"scale": (0.2, 1.0), "ratio": (0.75, 4.0 / 3.0)}),
            AugmentationStep("scale", {"scale": (0.2, 1.0)}),
            AugmentationStep("gaussian_blur", {"kernel": (3, 17)}),
        ),
        choice_count=1,
    )


def _trustmark_suite(name, jpeg_quality, adjust, jiggle, blur_kernel, blur_sigma_hi,
                     noise_std, hue_max, motion_kernel_hi, motion_angle, motion_direction,
                     posterize_bits, shift_limit, sharpness_max, box_kernel) -> AugmentationSuite:
    lo, hi = adjust
    return AugmentationSuite(
        name,
        always_steps=(
            AugmentationStep("horizontal_flip", probability=0.5),
            AugmentationStep("resized_crop", {"scale": (0.7, 1.0), "ratio": (0.75, 4.0 / 3.0)}),
        ),
        choice_steps=(
            AugmentationStep("jpeg", {"quality": jpeg_quality}, probability=0.5),
            AugmentationStep("brightness", {"factor": (lo, hi)}, probability=0.5),
            AugmentationStep("contrast", {"factor": (lo, hi)}, probability=0.5),
            AugmentationStep("color_jiggle", {"brightness": jiggle[0], "contrast": jiggle[1],
                                              "saturation": jiggle[2], "hue": jiggle[3]},
                             probability=0.5),
            AugmentationStep("grayscale", probability=0.5),
            AugmentationStep("gaussian_blur", {"kernel": blur_kernel, "sigma": (0.1, blur_sigma_hi)},
                             probability=0.5),
            AugmentationStep("gaussian_noise", {"std": noise_std}, probability=0.5),
            AugmentationStep("hue", {"delta": (-hue_max, hue_max)}, probability=0.5),
            AugmentationStep("motion_blur", {"kernel": (3, motion_kernel_hi),
                                             "angle": (-motion_angle, motion_angle),
                                             "direction": (-motion_direction, motion_direction)},
                             probability=0.5),
            AugmentationStep("posterize", {"bits": posterize_bits}, probability=0.5),
            AugmentationStep("rgb_shift", {"limit": shift_limit}, probability=0.5),
            AugmentationStep("saturation", {"factor": (lo, hi)}, probability=0.5),
            AugmentationStep("sharpness", {"factor": sharpness_max}, probability=0.5),
            AugmentationStep("median_blur", {"kernel": 3}, probability=0.5),
            AugmentationStep("box_blur", {"kernel": box_kernel}, probability=0.5),
        ),
        choice_count=2,
    )


def _build_suites():
    return {
        "rivagan": _rivagan_suite(),
        "ssl": _ssl_suite(),
        "trustmark_low": _trustmark_suite(
            "trustmark_low", jpeg_quality=70, adjust=(0.9, 1.1),
            jiggle=(0.05, 0.05, 0.05, 0.01), blur_kernel=3, blur_sigma_hi=1.0,
            noise_std=0.02, hue_max=0.1, motion_kernel_hi=5, motion_angle=25.0,
            motion_direction=0.25, posterize_bits=5, shift_limit=0.02,
            sharpness_max=1.0, box_kernel=3),
        "trustmark_medium": _trustmark_suite(
            "trustmark_medium", jpeg_quality=50, adjust=(0.75, 1.25),
            jiggle=(0.1, 0.1, 0.1, 0.02), blur_kernel=5, blur_sigma_hi=1.5,
            noise_std=0.04, hue_max=0.2, motion_kernel_hi=7, motion_angle=45.0,
            motion_direction=0.5, posterize_bits=4, shift_limit=0.05,
            sharpness_max=1.5, box_kernel=5),
        "trustmark_high": _trustmark_suite(
            "trustmark_high", jpeg_quality=40, adjust=(0.5, 1.5),
            jiggle=(0.1, 0.1, 0.1, 0.05), blur_kernel=7, blur_sigma_hi=2.0,
            noise_std=0.08, hue_max=0.5, motion_kernel_hi=9, motion_angle=90.0,
            motion_direction=1.0, posterize_bits=3, shift_limit=0.1,
            sharpness_max=2.5, box_kernel=7),
    }


_SUITES = _build_suites()


def get_suite(name: str) -> AugmentationSuite:
    if name not in _SUITES:
        raise ValueError(f"unknown suite {name!r}; known: {SUITE_NAMES}")
    return _SUITES[name]
