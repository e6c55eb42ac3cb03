"""Five keyed blind watermarkers sharing one embed/extract contract.

All methods write a fixed-length bit secret into keyed carrier slots and
read it back without the cover image. The four transform methods quantize
one coefficient per bit onto interleaved lattices (quantization index
modulation): the even lattice {2kD} encodes 0, the odd lattice {2kD + D}
encodes 1, and the decoder picks the nearer lattice.

    dct          keyed mid-band coefficients of 8x8 luminance DCT blocks
    dwt          keyed coefficients of the HL/LH Haar detail subbands
    dwtdct       keyed mid-band coefficients of 8x8 DCT blocks over the
                 Haar LL subband
    dwtdctsvd    largest singular value of keyed 4x4 DCT blocks over LL

spread_spectrum projects the image onto a fixed orthonormal set of
low-frequency full-frame cosine carriers (horizontally symmetric modes, so
the projections survive mirroring) and quantizes each projection with a
key-derived dither offset. The key controls which carrier holds which bit
and the dither, so a second instance under a different key re-quantizes
the same projections and erases the first secret, while the carriers stay
too coarse for the block-level methods to disturb.

The key fixes every random choice (slot permutations, coefficient picks,
dithers); embed and extract are pure functions of (spec, image, secret).
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .image import Image, _chroma_offset, rgb_to_ycbcr_array, ycbcr_to_rgb_array
from .kernels import (
    dct2_blocks,
    dct_matrix,
    from_blocks,
    haar2,
    idct2_blocks,
    ihaar2,
    to_blocks,
)

METHOD_IDS = ("dct", "dwt", "dwtdct", "dwtdctsvd", "spread_spectrum")

_DEFAULT_STEP = {
    "dct": 12.0,
    "dwt": 24.0,
    "dwtdct": 12.0,
    "dwtdctsvd": 8.0,
    "spread_spectrum": 500.0,
}
_DEFAULT_BLOCK = {"dct": 8, "dwt": 8, "dwtdct": 8, "dwtdctsvd": 4, "spread_spectrum": 8}


class CapacityError(ValueError):
    """The image cannot host the configured number of carrier slots."""


@dataclass(frozen=True)
class WatermarkerSpec:
    """Immutable configuration of one watermarker instance."""

    method_id: str
    key: int = 0
    capacity_bits: int = 32
    quantization_step: float = None
    embed_strength: float = 1.0
    block_size: int = None

    def __post_init__(self):
        if self.method_id not in METHOD_IDS:
            raise ValueError(f"unknown method {self.method_id!r}; known: {METHOD_IDS}")
        if self.capacity_bits < 1:
            raise ValueError("capacity_bits must be >= 1")
        if self.quantization_step is None:
            object.__setattr__(self, "quantization_step", _DEFAULT_STEP[self.method_id])
        if self.block_size is None:
            object.__setattr__(self, "block_size", _DEFAULT_BLOCK[self.method_id])
        if self.quantization_step <= 0:
            raise ValueError("quantization_step must be positive")
        if self.embed_strength <= 0:
            raise ValueError("embed_strength must be positive")
        if self.block_size < 2:
            raise ValueError("block_size must be >= 2")


# -- secrets ---------------------------------------------------------------


def as_secret(secret, capacity_bits: int) -> np.ndarray:
    bits = np.asarray(secret, dtype=np.uint8).ravel()
    if not np.all((bits == 0) | (bits == 1)):
        raise ValueError("secret must contain only bits")
    if bits.size != capacity_bits:
        raise ValueError(f"secret has {bits.size} bits, watermarker carries {capacity_bits}")
    return bits


def secret_from_hex(text: str, capacity_bits: int) -> np.ndarray:
    """Parse a hex string, leftmost digit giving the first four bits."""
    text = text.strip().lower()
    if text.startswith("0x"):
        text = text[2:]
    digits = math.ceil(capacity_bits / 4)
    if len(text) != digits:
        raise ValueError(f"need {digits} hex digits for {capacity_bits} bits, got {len(text)}")
    bits = []
    for ch in text:
        v = int(ch, 16)
        bits.extend(((v >> 3) & 1, (v >> 2) & 1, (v >> 1) & 1, v & 1))
    if any(bits[capacity_bits:]):
        raise ValueError("nonzero padding bits beyond the declared capacity")
    return np.array(bits[:capacity_bits], dtype=np.uint8)


def secret_to_hex(bits) -> str:
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    padded = np.concatenate([bits, np.zeros((-bits.size) % 4, dtype=np.uint8)])
    out = []
    for i in range(0, padded.size, 4):
        b = padded[i : i + 4]
        out.append(format((b[0] << 3) | (b[1] << 2) | (b[2] << 1) | b[3], "x"))
    return "".join(out)


# -- quantization index modulation ----------------------------------------


def qim_embed(value, step: float, bit, min_push=0.0):
    """Snap value to the nearest point of the lattice carrying bit.

    Where the nearest point lies closer than min_push, jump one lattice
    period further away instead, so the displacement written into the
    carrier never falls below min_push. The lattice itself is unchanged,
    so qim_decode reads the same bit either way.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    value = np.asarray(value, dtype=np.float64)
    offset = np.asarray(bit, dtype=np.float64) * step
    q = 2.0 * step * np.round((value - offset) / (2.0 * step)) + offset
    min_push = np.asarray(min_push, dtype=np.float64)
    if np.any(min_push > 0.0):
        away = np.where(q >= value, 2.0 * step, -2.0 * step)
        q = np.where(np.abs(q - value) < min_push, q + away, q)
    return q


def qim_decode(value, step: float):
    """Bit of the lattice nearest to value; ties resolve to 0."""
    if step <= 0:
        raise ValueError("step must be positive")
    value = np.asarray(value, dtype=np.float64)
    d0 = np.abs(value - 2.0 * step * np.round(value / (2.0 * step)))
    d1 = np.abs(value - (2.0 * step * np.round((value - step) / (2.0 * step)) + step))
    out = (d1 < d0).astype(np.uint8)
    return out if out.ndim else np.uint8(out)


# -- luminance plumbing ----------------------------------------------------


def _require_slots(spec: WatermarkerSpec, available: int, where: str) -> None:
    if spec.capacity_bits > available:
        raise CapacityError(
            f"{spec.method_id} needs {spec.capacity_bits} slots "
            f"but {where} offers only {available}"
        )


def _split_luminance(img: Image):
    """(luminance plane, full ycbcr or None, chroma offset)."""
    if img.channels == 1:
        return img.data[:, :, 0].copy(), None, 0.0
    if img.channels != 3:
        raise ValueError("expected a 1- or 3-channel image")
    offset = _chroma_offset(img)
    ycc = rgb_to_ycbcr_array(img.data, offset)
    return ycc[:, :, 0].copy(), ycc, offset


def _merge_luminance(img: Image, y: np.ndarray, ycc, offset: float) -> Image:
    if ycc is None:
        return img.with_data(y[:, :, None])
    ycc = ycc.copy()
    ycc[:, :, 0] = y
    return img.with_data(ycbcr_to_rgb_array(ycc, offset))


# -- block DCT family (dct, dwtdct) ----------------------------------------


def _mid_band(b: int):
    lo, hi = max(2, b // 2 - 1), b - 2
    return [(u, v) for u in range(b) for v in range(b) if lo <= u + v <= hi]


def _block_plan(spec: WatermarkerSpec, h: int, w: int):
    b = spec.block_size
    hb, wb = h - h % b, w - w % b
    nblocks = (hb // b) * (wb // b)
    _require_slots(spec, nblocks, f"a {h}x{w} plane in {b}x{b} blocks")
    rng = np.random.default_rng(spec.key)
    chosen = rng.permutation(nblocks)[: spec.capacity_bits]
    band = _mid_band(b)
    coords = [band[i] for i in rng.integers(0, len(band), size=spec.capacity_bits)]
    return hb, wb, chosen, coords


def _embed_block_dct(
    plane: np.ndarray, spec: WatermarkerSpec, bits: np.ndarray, push=0.0
) -> np.ndarray:
    hb, wb, chosen, coords = _block_plan(spec, *plane.shape)
    p = np.broadcast_to(np.asarray(push, dtype=np.float64), bits.shape)
    t = dct_matrix(spec.block_size)
    co = dct2_blocks(to_blocks(plane[:hb, :wb], spec.block_size), t)
    for i, (blk, (u, v)) in enumerate(zip(chosen, coords)):
        co[blk, u, v] = qim_embed(co[blk, u, v], spec.quantization_step, int(bits[i]), p[i])
    out = plane.copy()
    out[:hb, :wb] = from_blocks(idct2_blocks(co, t), hb, wb)
    return out


def _extract_block_dct(plane: np.ndarray, spec: WatermarkerSpec) -> np.ndarray:
    hb, wb, chosen, coords = _block_plan(spec, *plane.shape)
    t = dct_matrix(spec.block_size)
    co = dct2_blocks(to_blocks(plane[:hb, :wb], spec.block_size), t)
    return np.array(
        [qim_decode(co[blk, u, v], spec.quantization_step) for blk, (u, v) in zip(chosen, coords)],
        dtype=np.uint8,
    )


# -- Haar detail family (dwt) -----------------------------------------------


def _haar_region(plane: np.ndarray):
    h2, w2 = plane.shape[0] // 2 * 2, plane.shape[1] // 2 * 2
    return h2, w2


def _embed_haar_detail(
    plane: np.ndarray, spec: WatermarkerSpec, bits: np.ndarray, push=0.0
) -> np.ndarray:
    h2, w2 = _haar_region(plane)
    ll, lh, hl, hh = haar2(plane[:h2, :w2])
    flat = np.concatenate([hl.ravel(), lh.ravel()])
    _require_slots(spec, flat.size, "the HL/LH subbands")
    rng = np.random.default_rng(spec.key)
    slots = rng.permutation(flat.size)[: spec.capacity_bits]
    flat[slots] = qim_embed(flat[slots], spec.quantization_step, bits, push)
    hl2 = flat[: hl.size].reshape(hl.shape)
    lh2 = flat[hl.size :].reshape(lh.shape)
    out = plane.copy()
    out[:h2, :w2] = ihaar2(ll, lh2, hl2, hh)
    return out


def _extract_haar_detail(plane: np.ndarray, spec: WatermarkerSpec) -> np.ndarray:
    h2, w2 = _haar_region(plane)
    _, lh, hl, _ = haar2(plane[:h2, :w2])
    flat = np.concatenate([hl.ravel(), lh.ravel()])
    _require_slots(spec, flat.size, "the HL/LH subbands")
    rng = np.random.default_rng(spec.key)
    slots = rng.permutation(flat.size)[: spec.capacity_bits]
    return qim_decode(flat[slots], spec.quantization_step)


# -- SVD family (dwtdctsvd) --------------------------------------------------


def _svd_plan(spec: WatermarkerSpec, h: int, w: int):
    b = spec.block_size
    hb, wb = h - h % b, w - w % b
    nblocks = (hb // b) * (wb // b)
    _require_slots(spec, nblocks, f"a {h}x{w} plane in {b}x{b} blocks")
    rng = np.random.default_rng(spec.key)
    return hb, wb, rng.permutation(nblocks)[: spec.capacity_bits]


def _embed_block_svd(
    plane: np.ndarray, spec: WatermarkerSpec, bits: np.ndarray, push=0.0
) -> np.ndarray:
    hb, wb, chosen = _svd_plan(spec, *plane.shape)
    step = spec.quantization_step
    p = np.broadcast_to(np.asarray(push, dtype=np.float64), bits.shape)
    t = dct_matrix(spec.block_size)
    co = dct2_blocks(to_blocks(plane[:hb, :wb], spec.block_size), t)
    for i, blk in enumerate(chosen):
        u_, s_, vt_ = np.linalg.svd(co[blk])
        bit = int(bits[i])
        q = qim_embed(s_[0], step, bit, p[i])
        if s_.size > 1 and q < s_[1]:
            # keep the singular values ordered, or extraction would read
            # sigma_2 instead: smallest same-bit lattice point above sigma_2
            q = 2.0 * step * math.ceil((s_[1] - bit * step) / (2.0 * step)) + bit * step
        s_[0] = q
        co[blk] = (u_ * s_) @ vt_
    out = plane.copy()
    out[:hb, :wb] = from_blocks(idct2_blocks(co, t), hb, wb)
    return out


def _extract_block_svd(plane: np.ndarray, spec: WatermarkerSpec) -> np.ndarray:
    hb, wb, chosen = _svd_plan(spec, *plane.shape)
    t = dct_matrix(spec.block_size)
    co = dct2_blocks(to_blocks(plane[:hb, :wb], spec.block_size), t)
    bits = [qim_decode(np.linalg.svd(co[blk], compute_uv=False)[0], spec.quantization_step)
            for blk in chosen]
    return np.array(bits, dtype=np.uint8)


def _embed_in_ll(plane, spec, bits, core, push=0.0):
    h2, w2 = _haar_region(plane)
    ll, lh, hl, hh = haar2(plane[:h2, :w2])
    out = plane.copy()
    out[:h2, :w2] = ihaar2(core(ll, spec, bits, push), lh, hl, hh)
    return out


def _extract_from_ll(plane, spec, core):
    h2, w2 = _haar_region(plane)
    ll, _, _, _ = haar2(plane[:h2, :w2])
    return core(ll, spec)


# -- spread spectrum ---------------------------------------------------------


@lru_cache(maxsize=16)
def _carrier_rows(h: int, w: int, count: int):
    """Row/column factors of the first `count` symmetric cosine modes.

    Modes (u, v) are full-frame DCT-II frequencies with v even (invariant
    under horizontal mirroring) and (0, 0) excluded, ordered by (u+v, u).
    """
    modes = []
    s = 1
    while len(modes) < count and s <= h + w:
        for u in range(min(s, h - 1) + 1):
            v = s - u
            if v % 2 == 0 and v < w:
                modes.append((u, v))
                if len(modes) == count:
                    break
        s += 1
    if len(modes) < count:
        raise CapacityError(f"a {h}x{w} image offers only {len(modes)} carrier modes")
    tu, tv = dct_matrix(h), dct_matrix(w)
    rows_u = np.stack([tu[u] for u, _ in modes])
    rows_v = np.stack([tv[v] for _, v in modes])
    rows_u.setflags(write=False)
    rows_v.setflags(write=False)
    return rows_u, rows_v


def _carrier_projections(data: np.ndarray, rows_u, rows_v) -> np.ndarray:
    c = data.shape[2]
    return np.einsum("mh,hwk,mw->m", rows_u, data, rows_v) / math.sqrt(c)


def _ss_key_plan(spec: WatermarkerSpec):
    rng = np.random.default_rng(spec.key)
    perm = rng.permutation(spec.capacity_bits)
    dither = rng.uniform(0.0, 2.0 * spec.quantization_step, spec.capacity_bits)
    return perm, dither


def _embed_spread(spec: WatermarkerSpec, cover: Image, bits: np.ndarray, push=0.0) -> Image:
    h, w = cover.height, cover.width
    rows_u, rows_v = _carrier_rows(h, w, spec.capacity_bits)
    proj = _carrier_projections(cover.data, rows_u, rows_v)
    perm, dither = _ss_key_plan(spec)
    slots = proj[perm] - dither
    shift = qim_embed(slots, spec.quantization_step, bits, push) - slots
    coef = np.zeros(spec.capacity_bits)
    coef[perm] = shift
    res = np.einsum("m,mh,mw->hw", coef, rows_u, rows_v) / math.sqrt(cover.channels)
    return cover.with_data(cover.data + spec.embed_strength * res[:, :, None])


def _extract_spread(spec: WatermarkerSpec, img: Image) -> np.ndarray:
    rows_u, rows_v = _carrier_rows(img.height, img.width, spec.capacity_bits)
    proj = _carrier_projections(img.data, rows_u, rows_v)
    perm, dither = _ss_key_plan(spec)
    return qim_decode(proj[perm] - dither, spec.quantization_step)


# -- public contract ---------------------------------------------------------


_STORAGE_PASSES = 4


def _embed_once(spec: WatermarkerSpec, cover: Image, bits: np.ndarray, push=0.0) -> Image:
    if spec.method_id == "spread_spectrum":
        return _embed_spread(spec, cover, bits, push)
    y, ycc, offset = _split_luminance(cover)
    if spec.method_id == "dct":
        y = _embed_block_dct(y, spec, bits, push)
    elif spec.method_id == "dwt":
        y = _embed_haar_detail(y, spec, bits, push)
    elif spec.method_id == "dwtdct":
        y = _embed_in_ll(y, spec, bits, _embed_block_dct, push)
    else:
        y = _embed_in_ll(y, spec, bits, _embed_block_svd, push)
    return _merge_luminance(cover, y, ycc, offset)


def _snap_to_storage(img: Image) -> Image:
    """The image as it comes back from 8-bit file storage."""
    scale = 255.0 / img.pixel_range
    stored = np.clip(np.rint((img.data - img.pixel_min) * scale), 0.0, 255.0)
    return img.with_data(stored / scale + img.pixel_min)


def embed(spec: WatermarkerSpec, cover: Image, secret) -> Image:
    """Embed the secret; the result stays inside the pixel range.

    The result must also survive 8-bit storage: methods that spread one
    quantization step across many pixels write sub-half-unit pixel shifts
    that integer rounding erases outright on integer-valued covers. The
    embed therefore checks its output against the stored form and, for any
    slot that failed, re-embeds on that form with the slot pushed one
    lattice period out, so its displacement is too large for rounding to
    cancel. Slots land exactly on their lattice in every pass, so
    in-memory extraction stays exact; storage survival is best effort
    after _STORAGE_PASSES.
    """
    bits = as_secret(secret, spec.capacity_bits)
    out = _embed_once(spec, cover, bits)
    push = np.zeros(spec.capacity_bits)
    for _ in range(_STORAGE_PASSES):
        stored = _snap_to_storage(out)
        got = extract(spec, stored)
        if np.array_equal(got, bits):
            break
        push[got != bits] = spec.quantization_step
        out = _embed_once(spec, stored, bits, push)
    return out


def extract(spec: WatermarkerSpec, img: Image) -> np.ndarray:
    """Read capacity_bits bits; never refuses, correctness is statistical."""
    if spec.method_id == "spread_spectrum":
        return _extract_spread(spec, img)
    y, _, _ = _split_luminance(img)
    if spec.method_id == "dct":
        return _extract_block_dct(y, spec)
    if spec.method_id == "dwt":
        return _extract_haar_detail(y, spec)
    if spec.method_id == "dwtdct":
        return _extract_from_ll(y, spec, _extract_block_dct)
    return _extract_from_ll(y, spec, _extract_block_svd)
