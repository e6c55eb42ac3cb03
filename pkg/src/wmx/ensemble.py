"""Series/parallel watermark composition with PSNR clipping and coding.

An ensemble treats two watermarkers as one method whose capacity is the sum
of the parts (or the message length of an attached linear code). Series
embeds the second watermark into the output of the first; parallel averages
the two standalone residuals with equal weights. Strength clipping scales
the total residual toward a PSNR target interpolated between the two
standalone PSNR values measured on the same cover.

The composition helpers accept either a WatermarkerSpec or any object with
embed(image, bits) / extract(image) methods and a capacity_bits attribute,
so instrumented stand-ins can be composed in tests.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import watermark
from .ecc import DecodeFailure, LinearCode, decode, encode, join_for_ensemble, split_for_ensemble
from .image import Image, Residual, apply_residual, psnr, residual
from .watermark import WatermarkerSpec, as_secret

MODES = ("series", "parallel")


def _capacity_of(wmk) -> int:
    return int(wmk.capacity_bits)


def _embed_one(wmk, img: Image, bits) -> Image:
    if isinstance(wmk, WatermarkerSpec):
        return watermark.embed(wmk, img, bits)
    return wmk.embed(img, bits)


def _extract_one(wmk, img: Image):
    if isinstance(wmk, WatermarkerSpec):
        return watermark.extract(wmk, img)
    return wmk.extract(img)


@dataclass(frozen=True)
class EnsembleSpec:
    """Two watermarkers, a composition mode, and optional clip/code."""

    first: object
    second: object
    mode: str = "series"
    strength: float = None
    code: LinearCode = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.strength is not None and not math.isfinite(self.strength):
            raise ValueError("strength must be finite (or None to skip clipping)")
        if self.code is not None:
            total = _capacity_of(self.first) + _capacity_of(self.second)
            if self.code.n != total:
                raise ValueError(
                    f"code length {self.code.n} != combined capacity {total}"
                )

    @property
    def capacity_bits(self) -> int:
        if self.code is not None:
            return self.code.k
        return _capacity_of(self.first) + _capacity_of(self.second)


def series_ensemble(original: Image, wm1, wm2, m1, m2) -> Image:
    """Embed the second watermark into the output of the first."""
    return _embed_one(wm2, _embed_one(wm1, original, m1), m2)


def parallel_ensemble(original: Image, wm1, wm2, m1, m2) -> Image:
    """Average the standalone residuals; exactly commutative in (wm1, wm2)."""
    r1 = residual(_embed_one(wm1, original, m1), original)
    r2 = residual(_embed_one(wm2, original, m2), original)
    # sum the halves before touching the original so the float result is
    # identical under operand exchange
    combined = Residual(0.5 * r1.data + 0.5 * r2.data)
    return apply_residual(original, combined)


def psnr_clip(watermarked: Image, original: Image, target_psnr: float) -> Image:
    """Scale the residual down to the target PSNR; pass through if already there.

    The no-clip branch (zero residual, or measured PSNR at or above target)
    returns the watermarked image unchanged. Clamping after scaling can leave
    the result marginally above target; no second pass compensates.
    """
    if not math.isfinite(target_psnr):
        raise ValueError("target_psnr must be finite")
    diff = residual(watermarked, original).data
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return watermarked
    r = original.pixel_range
    target_mse = r * r * 10.0 ** (-target_psnr / 10.0)
    scaling = math.sqrt(target_mse / mse)
    if scaling >= 1.0:
        return watermarked
    return original.with_data(original.data + scaling * diff)


def strength_clip_target(original: Image, strength: float, wm1, wm2, m1, m2):
    """(target, psnr1, psnr2): the interpolated clip target for a strength."""
    p1 = psnr(_embed_one(wm1, original, m1), original)
    p2 = psnr(_embed_one(wm2, original, m2), original)
    lo, hi = min(p1, p2), max(p1, p2)
    return lo + strength * (hi - lo), p1, p2


def clip_to_strength(watermarked: Image, original: Image, strength: float,
                     wm1, wm2, m1, m2) -> Image:
    """Clip to the PSNR interpolated between the standalone embeds.

    Strength 0 targets the weaker standalone PSNR, 1 the stronger; values
    outside [0, 1] extrapolate. The standalone PSNR values are measured on
    fresh single-watermark embeds of the same cover, for series mode too.
    """
    target, _, _ = strength_clip_target(original, strength, wm1, wm2, m1, m2)
    return psnr_clip(watermarked, original, target)


def ensemble_embed(spec: EnsembleSpec, cover: Image, message) -> Image:
    bits = as_secret(message, spec.capacity_bits)
    word = encode(spec.code, bits) if spec.code is not None else bits
    m1, m2 = split_for_ensemble(word, _capacity_of(spec.first), _capacity_of(spec.second))
    if spec.mode == "series":
        out = series_ensemble(cover, spec.first, spec.second, m1, m2)
    else:
        out = parallel_ensemble(cover, spec.first, spec.second, m1, m2)
    if spec.strength is not None:
        out = clip_to_strength(out, cover, spec.strength, spec.first, spec.second, m1, m2)
    return out


def ensemble_extract(spec: EnsembleSpec, img: Image):
    """Joined bits (no code) or the decoded message; None on decode failure."""
    word = join_for_ensemble(_extract_one(spec.first, img), _extract_one(spec.second, img))
    if spec.code is None:
        return word
    try:
        message, _ = decode(spec.code, word)
    except DecodeFailure:
        return None
    return message
