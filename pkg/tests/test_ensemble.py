import math

import numpy as np
import pytest

from wmx.ecc import build_named_code
from wmx.ensemble import (EnsembleSpec, clip_to_strength, ensemble_embed,
                          ensemble_extract, parallel_ensemble, psnr_clip,
                          series_ensemble, strength_clip_target)
from wmx.image import Image, psnr
from wmx.watermark import WatermarkerSpec


class AdditiveMark:
    """Test double for residual arithmetic: +/- delta on its own pixel row."""

    def __init__(self, name, row, delta=4.0, capacity_bits=8):
        self.method_id = name
        self.row = row
        self.delta = delta
        self.capacity_bits = capacity_bits

    def embed(self, img, secret):
        data = img.data.copy()
        signs = np.where(np.asarray(secret) > 0, 1.0, -1.0)
        data[self.row, : self.capacity_bits, 0] += self.delta * signs
        return img.with_data(data, clamp=False)

    def extract(self, img):
        vals = img.data[self.row, : self.capacity_bits, 0]
        return (vals > 127.5).astype(int)


class ThresholdMark:
    """Test double for decode round-trips: writes absolute pixel levels."""

    def __init__(self, name, row, capacity_bits=8):
        self.method_id = name
        self.row = row
        self.capacity_bits = capacity_bits

    def embed(self, img, secret):
        data = img.data.copy()
        levels = np.where(np.asarray(secret) > 0, 200.0, 50.0)
        data[self.row, : self.capacity_bits, 0] = levels
        return img.with_data(data, clamp=False)

    def extract(self, img):
        vals = img.data[self.row, : self.capacity_bits, 0]
        return (vals > 127.5).astype(int)


class FlipOneBit(ThresholdMark):
    def extract(self, img):
        bits = super().extract(img)
        bits[0] ^= 1
        return bits


def test_psnr_clip_uniform_residual_oracle(flat_cover):
    # |residual| = 16 -> 20*log10(255/16) = 24.05 dB; clipping to 30 dB
    # scales by sqrt(255^2 * 10^-3 / 256) = 0.50399
    marked = Image(flat_cover.data + 16.0)
    clipped = psnr_clip(marked, flat_cover, 30.0)
    assert psnr(clipped, flat_cover) == pytest.approx(30.0, abs=1e-9)
    scaling = (clipped.data[0, 0, 0] - 100.0) / 16.0
    assert scaling == pytest.approx(math.sqrt(255.0**2 * 1e-3 / 256.0), abs=1e-12)


def test_psnr_clip_noop_branches(flat_cover):
    marked = Image(flat_cover.data + 1.0)  # ~48 dB, above a 40 dB target
    out = psnr_clip(marked, flat_cover, 40.0)
    assert np.array_equal(out.data, marked.data)
    same = psnr_clip(flat_cover, flat_cover, 50.0)  # zero residual
    assert np.array_equal(same.data, flat_cover.data)


def test_psnr_clip_rejects_non_finite_target(flat_cover):
    marked = Image(flat_cover.data + 16.0)
    for bad in (math.nan, math.inf, -math.inf):
        with pytest.raises(ValueError):
            psnr_clip(marked, flat_cover, bad)


def test_psnr_clip_random_triples_hit_target():
    rng = np.random.default_rng(61)
    for _ in range(25):
        base = rng.uniform(60, 200, (32, 32, 3))
        cover = Image(base)
        marked = cover.with_data(base + rng.uniform(-6, 6, base.shape), clamp=False)
        current = psnr(marked, cover)
        target = current + rng.uniform(1.0, 10.0)
        out = psnr_clip(marked, cover, target)
        assert psnr(out, cover) == pytest.approx(target, abs=0.05)


def test_strength_endpoints_match_standalone_psnrs(cover):
    w1 = AdditiveMark("a", row=4, delta=6.0)
    w2 = AdditiveMark("b", row=40, delta=2.0)
    m = np.ones(8, dtype=int)
    p1 = psnr(w1.embed(cover, m), cover)
    p2 = psnr(w2.embed(cover, m), cover)
    t0, q1, q2 = strength_clip_target(cover, 0.0, w1, w2, m, m)
    t1, _, _ = strength_clip_target(cover, 1.0, w1, w2, m, m)
    assert (q1, q2) == (pytest.approx(p1), pytest.approx(p2))
    assert t0 == pytest.approx(min(p1, p2), abs=1e-9)
    assert t1 == pytest.approx(max(p1, p2), abs=1e-9)


def test_series_composes_in_order(cover):
    w1 = AdditiveMark("a", row=4)
    w2 = AdditiveMark("b", row=40)
    m1 = np.array([1, 0, 1, 0, 1, 0, 1, 0])
    m2 = np.array([0, 0, 1, 1, 0, 0, 1, 1])
    out = series_ensemble(cover, w1, w2, m1, m2)
    ref = w2.embed(w1.embed(cover, m1), m2)
    assert np.array_equal(out.data, ref.data)


def test_parallel_averages_residuals_and_commutes(cover):
    w1 = AdditiveMark("a", row=4, delta=8.0)
    w2 = AdditiveMark("b", row=40, delta=8.0)
    m1 = np.array([1, 1, 1, 1, 0, 0, 0, 0])
    m2 = np.array([0, 1, 0, 1, 0, 1, 0, 1])
    out = parallel_ensemble(cover, w1, w2, m1, m2)
    # disjoint supports: each mark lands at half amplitude
    assert out.data[4, 0, 0] == pytest.approx(cover.data[4, 0, 0] + 4.0)
    swapped = parallel_ensemble(cover, w2, w1, m2, m1)
    assert np.array_equal(out.data, swapped.data)


def test_ensemble_spec_validation():
    w1 = WatermarkerSpec("dct", key=1, capacity_bits=4)
    w2 = WatermarkerSpec("dwt", key=2, capacity_bits=4)
    with pytest.raises(ValueError):
        EnsembleSpec(w1, w2, mode="stacked")
    with pytest.raises(ValueError):
        EnsembleSpec(w1, w2, strength=math.nan)
    with pytest.raises(ValueError):
        EnsembleSpec(w1, w2, code=build_named_code("hamming", 3))  # n=7 != 8
    spec = EnsembleSpec(w1, w2, code=build_named_code("extended_hamming", 3))
    assert spec.capacity_bits == 4
    assert EnsembleSpec(w1, w2).capacity_bits == 8


def test_uncoded_roundtrip_real_methods(cover):
    spec = EnsembleSpec(WatermarkerSpec("dct", key=101, capacity_bits=32),
                        WatermarkerSpec("dwt", key=202, capacity_bits=32))
    rng = np.random.default_rng(67)
    msg = rng.integers(0, 2, 64)
    marked = ensemble_embed(spec, cover, msg)
    assert np.array_equal(ensemble_extract(spec, marked), msg)


def test_parallel_has_higher_psnr_than_series(cover):
    w1 = WatermarkerSpec("dct", key=101, capacity_bits=32)
    w2 = WatermarkerSpec("dwt", key=202, capacity_bits=32)
    msg = np.tile([1, 0], 32)
    series = ensemble_embed(EnsembleSpec(w1, w2, mode="series"), cover, msg)
    parallel = ensemble_embed(EnsembleSpec(w1, w2, mode="parallel"), cover, msg)
    assert psnr(parallel, cover) > psnr(series, cover)


def test_code_rescues_flipped_bit(cover):
    # the faulty extractor always flips one bit: uncoded output is wrong,
    # the [8,4,4] code corrects it back
    w1 = FlipOneBit("bad", row=4, capacity_bits=4)
    w2 = ThresholdMark("good", row=40, capacity_bits=4)
    plain = EnsembleSpec(w1, w2)
    coded = EnsembleSpec(w1, w2, code=build_named_code("extended_hamming", 3))
    msg8 = np.array([1, 0, 1, 1, 0, 0, 1, 0])
    marked = ensemble_embed(plain, cover, msg8)
    assert not np.array_equal(ensemble_extract(plain, marked), msg8)
    msg4 = np.array([1, 0, 1, 1])
    marked = ensemble_embed(coded, cover, msg4)
    assert np.array_equal(ensemble_extract(coded, marked), msg4)


def test_extract_returns_none_outside_code_radius(cover):
    class FlipThree(ThresholdMark):
        def extract(self, img):
            bits = super().extract(img)
            bits[:3] ^= 1
            return bits

    w1 = FlipThree("worse", row=4, capacity_bits=4)
    w2 = ThresholdMark("good", row=40, capacity_bits=4)
    coded = EnsembleSpec(w1, w2, code=build_named_code("extended_hamming", 3))
    msg4 = np.array([0, 1, 0, 1])
    marked = ensemble_embed(coded, cover, msg4)
    result = ensemble_extract(coded, marked)
    assert result is None or not np.array_equal(result, msg4)


def test_strength_clipping_reaches_interpolated_target(cover):
    w1 = WatermarkerSpec("dct", key=7, capacity_bits=16)
    w2 = WatermarkerSpec("dwt", key=8, capacity_bits=16)
    msg = np.tile([1, 0], 16)
    spec = EnsembleSpec(w1, w2, mode="series", strength=0.5)
    marked = ensemble_embed(spec, cover, msg)
    target, _, _ = strength_clip_target(cover, 0.5, w1, w2, msg[:16], msg[16:])
    # series PSNR sits below both standalone values, so the clip fires
    assert psnr(marked, cover) == pytest.approx(target, abs=0.05)


def test_zero_capacity_member_passes_through(cover):
    class Inert:
        method_id = "inert"
        capacity_bits = 0

        def embed(self, img, secret):
            assert np.asarray(secret).size == 0
            return img

        def extract(self, img):
            return np.zeros(0, dtype=int)

    spec = EnsembleSpec(Inert(), ThresholdMark("solo", row=4))
    assert spec.capacity_bits == 8
    msg = np.array([1, 1, 0, 0, 1, 0, 1, 0])
    marked = ensemble_embed(spec, cover, msg)
    assert np.array_equal(ensemble_extract(spec, marked), msg)
