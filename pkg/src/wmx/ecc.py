"""Binary linear codes over GF(2).

Codes are [n, k, d] with a generator matrix, a parity-check matrix and a
decoder strategy chosen by structure or by size:

    majority                repetition codes
    hadamard                first-order Reed-Muller, via the fast
                            Walsh-Hadamard transform (maximum likelihood)
    syndrome_table          n - k <= 24 and the bounded-distance error
                            sphere is small enough to enumerate
    exhaustive_codeword     k <= 20, nearest codeword by full scan
    info_set_probabilistic  everything else; randomized information-set
                            search with an iteration budget, no guarantee

Within Hamming radius ``(d - 1) // 2`` every strategy except the
probabilistic fallback returns the transmitted message. Beyond the radius,
``syndrome_table`` raises :class:`DecodeFailure`, the others return the
nearest codeword they find.
"""

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

_SYNDROME_PATTERN_CAP = 2_000_000
_EXHAUSTIVE_PRECOMPUTE_K = 16
_BRUTE_FORCE_K = 16


class DecodeFailure(Exception):
    """No codeword within the decoder's reach."""


def _as_bits(v, length=None, what="bit vector"):
    arr = np.asarray(v, dtype=np.uint8).ravel()
    if not np.all((arr == 0) | (arr == 1)):
        raise ValueError(f"{what} must be binary")
    if length is not None and arr.size != length:
        raise ValueError(f"{what} has length {arr.size}, expected {length}")
    return arr


def _gf2_mul(a, b):
    """Matrix product mod 2; promotes so row sums cannot wrap uint8."""
    return (a.astype(np.int64) @ b.astype(np.int64) % 2).astype(np.uint8)


def _rref_gf2(m):
    """Reduced row echelon form over GF(2); returns (rref, pivot columns)."""
    r = m.copy().astype(np.uint8)
    rows, cols = r.shape
    pivots = []
    row = 0
    for col in range(cols):
        if row >= rows:
            break
        hot = np.nonzero(r[row:, col])[0]
        if hot.size == 0:
            continue
        swap = row + hot[0]
        if swap != row:
            r[[row, swap]] = r[[swap, row]]
        mask = r[:, col].astype(bool)
        mask[row] = False
        r[mask] ^= r[row]
        pivots.append(col)
        row += 1
    return r, pivots


def parity_check_from_generator(g):
    """Parity-check matrix for a full-rank k x n generator."""
    k, n = g.shape
    r, pivots = _rref_gf2(g)
    if len(pivots) != k:
        raise ValueError("generator rows are not linearly independent")
    free = [j for j in range(n) if j not in pivots]
    h = np.zeros((n - k, n), dtype=np.uint8)
    for idx, j in enumerate(free):
        h[idx, j] = 1
        for i, p in enumerate(pivots):
            h[idx, p] = r[i, j]
    return h


def _message_map(g):
    """(pivots, U) with U such that message = codeword[pivots] @ U mod 2."""
    k, n = g.shape
    aug = np.concatenate([g, np.eye(k, dtype=np.uint8)], axis=1)
    r, pivots = _rref_gf2(aug)
    pivots = [p for p in pivots if p < n]
    if len(pivots) != k:
        raise ValueError("generator rows are not linearly independent")
    u = r[:, n:]
    return np.array(pivots), u


def _min_weight(g):
    """Exact minimum nonzero codeword weight by message enumeration."""
    k, n = g.shape
    best = n + 1
    for start in range(1, 2**k, 4096):
        stop = min(start + 4096, 2**k)
        msgs = np.arange(start, stop, dtype=np.uint32)
        bits = (msgs[:, None] >> np.arange(k, dtype=np.uint32)) & 1
        words = bits.astype(np.uint8) @ g % 2
        best = min(best, int(words.sum(axis=1).min()))
    return best


@dataclass
class LinearCode:
    """[n, k, d] binary linear code. Immutable after construction."""

    n: int
    k: int
    d: int
    generator: np.ndarray
    parity_check: np.ndarray = None
    decoder_strategy: str = None
    name: str = ""
    info_set_budget: int = 60

    def __post_init__(self):
        g = np.asarray(self.generator, dtype=np.uint8)
        if g.shape != (self.k, self.n):
            raise ValueError(f"generator shape {g.shape} != ({self.k}, {self.n})")
        if not np.all((g == 0) | (g == 1)):
            raise ValueError("generator must be binary")
        self.generator = g
        if self.parity_check is None:
            self.parity_check = parity_check_from_generator(g)
        else:
            h = np.asarray(self.parity_check, dtype=np.uint8)
            if h.shape != (self.n - self.k, self.n):
                raise ValueError("parity_check has wrong shape")
            if np.any(_gf2_mul(g, h.T)):
                raise ValueError("generator . parity_check^T != 0")
            self.parity_check = h
        if self.d < 1 or self.d > self.n:
            raise ValueError(f"invalid distance {self.d}")
        if self.k <= _BRUTE_FORCE_K:
            w = _min_weight(g)
            if w < self.d:
                raise ValueError(f"true minimum weight {w} below declared d={self.d}")
        self._pivots, self._msg_u = _message_map(g)
        if self.decoder_strategy is None:
            self.decoder_strategy = self._pick_strategy()
        self._syndrome_table = None
        self._codewords = None
        if self.decoder_strategy == "syndrome_table":
            self._syndrome_table = self._build_syndrome_table()
        elif self.decoder_strategy == "exhaustive_codeword":
            if self.k <= _EXHAUSTIVE_PRECOMPUTE_K:
                self._codewords = self._all_codewords()
        self.generator.setflags(write=False)
        self.parity_check.setflags(write=False)

    # -- construction helpers -------------------------------------------

    @property
    def t(self) -> int:
        """Guaranteed correction radius."""
        return (self.d - 1) // 2

    @property
    def guaranteed(self) -> bool:
        """False for the probabilistic fallback decoder."""
        return self.decoder_strategy != "info_set_probabilistic"

    def _pick_strategy(self):
        if self.n - self.k <= 24 and self._sphere_size() <= _SYNDROME_PATTERN_CAP:
            return "syndrome_table"
        if self.k <= 20:
            return "exhaustive_codeword"
        return "info_set_probabilistic"

    def _sphere_size(self):
        return sum(math.comb(self.n, i) for i in range(self.t + 1))

    def _build_syndrome_table(self):
        table = {}
        h = self.parity_check
        for w in range(self.t + 1):
            for pos in combinations(range(self.n), w):
                err = np.zeros(self.n, dtype=np.uint8)
                err[list(pos)] = 1
                syn = _bits_to_int(h @ err % 2)
                if syn not in table:
                    table[syn] = err
        return table

    def _all_codewords(self):
        msgs = np.arange(2**self.k, dtype=np.uint32)
        bits = ((msgs[:, None] >> np.arange(self.k, dtype=np.uint32)) & 1).astype(np.uint8)
        return bits, bits @ self.generator % 2

    def message_of(self, codeword):
        """Recover the message of a valid codeword."""
        c = _as_bits(codeword, self.n, "codeword")
        return _gf2_mul(c[self._pivots], self._msg_u)

    def __repr__(self):
        tag = self.name or "code"
        return f"LinearCode[{self.n},{self.k},{self.d}]({tag}, {self.decoder_strategy})"


def _bits_to_int(bits):
    v = 0
    for b in bits:
        v = (v << 1) | int(b)
    return v


def encode(code: LinearCode, message) -> np.ndarray:
    m = _as_bits(message, code.k, "message")
    return _gf2_mul(m, code.generator)


def decode(code: LinearCode, received):
    """Decode to (message, corrections); raises DecodeFailure out of reach."""
    r = _as_bits(received, code.n, "received word")
    strategy = code.decoder_strategy
    if strategy == "majority":
        ones = int(r.sum())
        bit = 1 if ones > code.n - ones else 0
        corrections = code.n - ones if bit else ones
        return np.array([bit], dtype=np.uint8), corrections
    if strategy == "hadamard":
        return _decode_hadamard(code, r)
    if strategy == "syndrome_table":
        syn = _bits_to_int(_gf2_mul(code.parity_check, r))
        if syn == 0:
            return code.message_of(r), 0
        err = code._syndrome_table.get(syn)
        if err is None:
            raise DecodeFailure(f"syndrome outside radius {code.t} for {code!r}")
        c = r ^ err
        return code.message_of(c), int(err.sum())
    if strategy == "exhaustive_codeword":
        return _decode_exhaustive(code, r)
    if strategy == "info_set_probabilistic":
        return _decode_info_set(code, r)
    raise ValueError(f"unknown decoder strategy {strategy!r}")


def _decode_exhaustive(code, r):
    if code._codewords is not None:
        msgs, words = code._codewords
        dists = np.count_nonzero(words != r, axis=1)
        best = int(np.argmin(dists))
        return msgs[best].copy(), int(dists[best])
    best_msg, best_dist = None, code.n + 1
    for start in range(0, 2**code.k, 4096):
        stop = min(start + 4096, 2**code.k)
        msgs = np.arange(start, stop, dtype=np.uint32)
        bits = ((msgs[:, None] >> np.arange(code.k, dtype=np.uint32)) & 1).astype(np.uint8)
        words = bits @ code.generator % 2
        dists = np.count_nonzero(words != r, axis=1)
        i = int(np.argmin(dists))
        if dists[i] < best_dist:
            best_dist = int(dists[i])
            best_msg = bits[i].copy()
    return best_msg, best_dist


def _fwht(a):
    a = a.astype(np.float64).copy()
    h = 1
    while h < a.size:
        for i in range(0, a.size, h * 2):
            x = a[i : i + h].copy()
            y = a[i + h : i + 2 * h].copy()
            a[i : i + h] = x + y
            a[i + h : i + 2 * h] = x - y
        h *= 2
    return a


def _decode_hadamard(code, r):
    """Maximum-likelihood decode of reed_muller_1(m) via the FWHT."""
    m = code.k - 1
    t = _fwht(1.0 - 2.0 * r.astype(np.float64))
    j = int(np.argmax(np.abs(t)))
    u = 0 if t[j] > 0 else 1
    msg = np.empty(code.k, dtype=np.uint8)
    msg[0] = u
    for i in range(1, code.k):
        msg[i] = (j >> (m - i)) & 1
    word = encode(code, msg)
    return msg, int(np.count_nonzero(word != r))


def _decode_info_set(code, r):
    """Randomized information-set search; best effort, no guarantee."""
    rng = np.random.default_rng(0x1C0DE)
    g = code.generator
    best_msg, best_dist = None, code.n + 1
    for _ in range(code.info_set_budget):
        perm = rng.permutation(code.n)
        sub = g[:, perm]
        aug = np.concatenate([sub, np.eye(code.k, dtype=np.uint8)], axis=1)
        red, pivots = _rref_gf2(aug)
        pivots = [p for p in pivots if p < code.n]
        if len(pivots) < code.k:
            continue
        # right block of the rref inverts the sampled information set
        info_cols = perm[pivots]
        u = red[:, code.n :]
        msg = _gf2_mul(r[info_cols], u)
        word = encode(code, msg)
        dist = int(np.count_nonzero(word != r))
        if dist < best_dist:
            best_msg, best_dist = msg, dist
            if best_dist <= code.t:
                break
    if best_msg is None:
        raise DecodeFailure("information-set search found no information set")
    return best_msg, best_dist


# -- named constructions -------------------------------------------------


def _verified_distance(g, declared, k):
    if k <= _BRUTE_FORCE_K:
        return _min_weight(g)
    return declared


def build_named_code(name: str, *params) -> LinearCode:
    """Construct one of the named code families."""
    builders = {
        "repetition": _build_repetition,
        "parity": _build_parity,
        "hamming": _build_hamming,
        "extended_hamming": _build_extended_hamming,
        "reed_muller_1": _build_reed_muller_1,
        "cyclic": _build_cyclic,
    }
    if name not in builders:
        raise ValueError(f"unknown code name {name!r}; known: {sorted(builders)}")
    return builders[name](*params)


def _build_repetition(r):
    r = int(r)
    if r < 1:
        raise ValueError("repetition length must be >= 1")
    g = np.ones((1, r), dtype=np.uint8)
    return LinearCode(r, 1, r, g, decoder_strategy="majority", name=f"repetition({r})")


def _build_parity(n):
    n = int(n)
    if n < 2:
        raise ValueError("parity length must be >= 2")
    g = np.concatenate([np.eye(n - 1, dtype=np.uint8), np.ones((n - 1, 1), dtype=np.uint8)], axis=1)
    return LinearCode(n, n - 1, 2, g, name=f"parity({n})")


def _hamming_data_columns(m):
    # nonzero syndrome vectors of weight >= 2, sorted by (weight, descending
    # value); this ordering yields the familiar p1=d1^d2^d4 layout at m=3
    cols = []
    for v in range(1, 2**m):
        w = bin(v).count("1")
        if w >= 2:
            cols.append((w, -v))
    cols.sort()
    return [-neg for _, neg in cols]


def _build_hamming(m):
    m = int(m)
    if m < 2:
        raise ValueError("hamming parameter must be >= 2")
    n = 2**m - 1
    k = n - m
    data = _hamming_data_columns(m)
    p = np.array([[(v >> (m - 1 - i)) & 1 for i in range(m)] for v in data], dtype=np.uint8)
    g = np.concatenate([np.eye(k, dtype=np.uint8), p], axis=1)
    return LinearCode(n, k, 3, g, name=f"hamming({m})")


def _build_extended_hamming(m):
    code = extend_code(_build_hamming(m))
    code.name = f"extended_hamming({m})"
    return code


def _build_reed_muller_1(m):
    m = int(m)
    if m < 1:
        raise ValueError("reed_muller_1 parameter must be >= 1")
    n = 2**m
    cols = np.arange(n)
    rows = [np.ones(n, dtype=np.uint8)]
    for i in range(1, m + 1):
        rows.append(((cols >> (m - i)) & 1).astype(np.uint8))
    g = np.stack(rows)
    return LinearCode(n, m + 1, 2 ** (m - 1), g, decoder_strategy="hadamard",
                      name=f"reed_muller_1({m})")


def _poly_mod(a: int, b: int) -> int:
    db = b.bit_length() - 1
    while a.bit_length() - 1 >= db and a:
        a ^= b << (a.bit_length() - 1 - db)
    return a


def _build_cyclic(length, generator_polynomial, d=None):
    n = int(length)
    g_poly = int(generator_polynomial)
    if g_poly <= 0 or not (g_poly & 1):
        raise ValueError("generator polynomial must have a nonzero constant term")
    deg = g_poly.bit_length() - 1
    if deg >= n:
        raise ValueError("generator polynomial degree must be below the length")
    if _poly_mod((1 << n) | 1, g_poly) != 0:
        raise ValueError(f"polynomial {g_poly:#x} does not divide x^{n} - 1 over GF(2)")
    k = n - deg
    g = np.zeros((k, n), dtype=np.uint8)
    for i in range(k):
        for j in range(deg + 1):
            g[i, i + j] = (g_poly >> j) & 1
    if d is None:
        if k > _BRUTE_FORCE_K:
            raise ValueError("distance must be supplied for cyclic codes with k > 16")
        d = _min_weight(g)
    return LinearCode(n, k, int(d), g, name=f"cyclic({n},{g_poly:#x})")


# -- construction operators ----------------------------------------------


def extend_code(code: LinearCode) -> LinearCode:
    """Append an overall parity bit."""
    parity = code.generator.sum(axis=1, keepdims=True) % 2
    g = np.concatenate([code.generator, parity.astype(np.uint8)], axis=1)
    d = code.d + 1 if code.d % 2 else code.d
    d = _verified_distance(g, d, code.k)
    return LinearCode(code.n + 1, code.k, d, g, name=f"extend({code.name})")


def shorten_code(code: LinearCode, positions) -> LinearCode:
    """Restrict to codewords that are 0 at ``positions`` and drop them."""
    pos = sorted(set(int(p) for p in positions))
    if any(p < 0 or p >= code.n for p in pos):
        raise ValueError("shorten positions out of range")
    g = code.generator.copy()
    for p in pos:
        hot = np.nonzero(g[:, p])[0]
        if hot.size == 0:
            raise ValueError(f"rank collapse: column {p} is identically zero in the subcode")
        pivot = hot[0]
        for r in hot[1:]:
            g[r] ^= g[pivot]
        g = np.delete(g, pivot, axis=0)
    g = np.delete(g, pos, axis=1)
    k = code.k - len(pos)
    if k < 1:
        raise ValueError("shortening removed every message bit")
    d = _verified_distance(g, code.d, k)
    return LinearCode(code.n - len(pos), k, d, g,
                      name=f"shorten({code.name},{pos})")


def puncture_code(code: LinearCode, positions) -> LinearCode:
    """Delete coordinate positions from every codeword."""
    pos = sorted(set(int(p) for p in positions))
    if any(p < 0 or p >= code.n for p in pos):
        raise ValueError("puncture positions out of range")
    if code.d - len(pos) < 1:
        raise ValueError("puncturing would drive the distance below 1")
    g = np.delete(code.generator, pos, axis=1)
    _, pivots = _rref_gf2(g)
    if len(pivots) != code.k:
        raise ValueError("puncturing collapsed the generator rank")
    d = _verified_distance(g, code.d - len(pos), code.k)
    return LinearCode(code.n - len(pos), code.k, d, g,
                      name=f"puncture({code.name},{pos})")


# -- ensemble plumbing ----------------------------------------------------


def split_for_ensemble(codeword, m1: int, m2: int):
    """First m1 bits to the first watermarker, the rest to the second."""
    c = _as_bits(codeword, m1 + m2, "codeword")
    return c[:m1].copy(), c[m1:].copy()


def join_for_ensemble(first, second):
    a = _as_bits(first, what="first fragment")
    b = _as_bits(second, what="second fragment")
    return np.concatenate([a, b])


# -- file format -----------------------------------------------------------


def save_code(code: LinearCode, path) -> None:
    """Write the plain-text matrix format: `n k d`, G rows, optional H."""
    lines = [f"{code.n} {code.k} {code.d}"]
    for row in code.generator:
        lines.append("".join(str(int(b)) for b in row))
    lines.append("H")
    for row in code.parity_check:
        lines.append("".join(str(int(b)) for b in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_code(path) -> LinearCode:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise ValueError(f"empty code file: {path}")
    try:
        n, k, d = (int(x) for x in lines[0].split())
    except Exception as exc:
        raise ValueError(f"bad header line in {path}: {lines[0]!r}") from exc
    if len(lines) < 1 + k:
        raise ValueError(f"expected {k} generator rows in {path}")
    g = _parse_rows(lines[1 : 1 + k], n, "generator")
    h = None
    rest = lines[1 + k :]
    if rest:
        if rest[0].upper() != "H":
            raise ValueError(f"unexpected content after generator rows: {rest[0]!r}")
        if len(rest) != 1 + (n - k):
            raise ValueError(f"expected {n - k} parity rows in {path}")
        h = _parse_rows(rest[1:], n, "parity")
    return LinearCode(n, k, d, g, parity_check=h, name=str(path))


def _parse_rows(lines, n, what):
    rows = []
    for ln in lines:
        if len(ln) != n or set(ln) - {"0", "1"}:
            raise ValueError(f"bad {what} row {ln!r}, expected {n} binary digits")
        rows.append([int(ch) for ch in ln])
    return np.array(rows, dtype=np.uint8)


def parse_code_spec(spec: str) -> LinearCode:
    """Parse CLI syntax like ``reed_muller_1(3)`` or ``cyclic(7,0b1011)``."""
    spec = spec.strip()
    if "(" not in spec or not spec.endswith(")"):
        raise ValueError(f"bad code spec {spec!r}; expected name(params)")
    name, _, inner = spec.partition("(")
    args = []
    inner = inner[:-1].strip()
    if inner:
        for part in inner.split(","):
            args.append(int(part.strip(), 0))
    try:
        return build_named_code(name.strip(), *args)
    except TypeError:
        raise ValueError(
            f"bad code spec {spec!r}; wrong parameter count for {name.strip()!r}"
        ) from None
