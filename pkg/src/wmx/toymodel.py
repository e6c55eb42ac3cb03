"""Exhaustive capacity study on tiny discretized images.

Treats every image on a small integer grid as a vertex and asks how many
watermarked versions of one clean image can coexist. Two conflict rules are
exposed: "adjacent" forbids pairs that differ in exactly one coordinate by
one level, and "ball_overlap" forbids pairs whose one-step-edit balls of a
given radius intersect (L1 distance <= 2 * radius). The adjacent rule models
pairwise confusability; the ball rule is the stricter disjoint-neighborhood
reading, and the two give different maxima, so reports always state the rule.

All searches are exact. The maximum independent set comes from a bitset
branch-and-bound; a naive subset enumeration is kept for cross-checks on
small balls. Greedy-extended maximal sets are reported alongside the true
maximum because interesting hand-drawn sets are often maximal but not
maximum.
"""

import itertools
import math
from dataclasses import dataclass

_BALL_LIMIT = 20_000
_GRID_LIMIT = 2_000_000


@dataclass(frozen=True)
class ToyConfig:
    """Grid geometry plus the quality and conflict rules."""

    channels: int = 3
    height: int = 1
    width: int = 1
    levels: int = 3
    center: tuple = None
    min_psnr: float = 5.0
    value_range: float = 1.0
    conflict_rule: str = "ball_overlap"
    conflict_radius: int = 1

    def __post_init__(self):
        if self.levels < 2:
            raise ValueError("levels must be at least 2")
        if min(self.channels, self.height, self.width) < 1:
            raise ValueError("channels, height, width must be positive")
        if self.conflict_rule not in ("adjacent", "ball_overlap"):
            raise ValueError("conflict_rule must be 'adjacent' or 'ball_overlap'")
        if self.conflict_rule == "ball_overlap" and self.conflict_radius < 1:
            raise ValueError("conflict_radius must be at least 1")
        if not math.isfinite(self.min_psnr):
            raise ValueError("min_psnr must be finite")
        if self.center is None:
            mid = (self.levels - 1) // 2
            object.__setattr__(self, "center", (mid,) * self.dims)
        else:
            object.__setattr__(self, "center", tuple(int(v) for v in self.center))
        if len(self.center) != self.dims:
            raise ValueError(f"center must have {self.dims} coordinates")
        if any(not 0 <= v < self.levels for v in self.center):
            raise ValueError("center coordinates must lie on the grid")

    @property
    def dims(self) -> int:
        return self.channels * self.height * self.width

    @property
    def step(self) -> float:
        """Physical distance between neighboring levels."""
        return self.value_range / (self.levels - 1)

    @property
    def epsilon(self) -> float:
        """Quality-ball radius induced by the minimum PSNR."""
        n = self.dims
        return math.sqrt(n * self.value_range**2 * 10.0 ** (-self.min_psnr / 10.0))


def quality_ball(cfg: ToyConfig) -> list:
    """All grid points within L2 distance epsilon of the center."""
    if cfg.levels**cfg.dims > _GRID_LIMIT:
        raise ValueError(
            f"grid has {cfg.levels}^{cfg.dims} points; enumeration capped at {_GRID_LIMIT}"
        )
    eps2 = (cfg.epsilon / cfg.step) ** 2 if cfg.step > 0 else 0.0
    center = cfg.center
    ball = []
    for point in itertools.product(range(cfg.levels), repeat=cfg.dims):
        d2 = sum((p - c) ** 2 for p, c in zip(point, center))
        if d2 <= eps2:
            ball.append(point)
    return ball


def tolerance_related(a, b) -> bool:
    """True iff the points differ in exactly one coordinate by one level."""
    if len(a) != len(b):
        raise ValueError(f"shape mismatch: {len(a)} vs {len(b)} coordinates")
    ones = 0
    for x, y in zip(a, b):
        d = abs(x - y)
        if d == 0:
            continue
        if d > 1:
            return False
        ones += 1
        if ones > 1:
            return False
    return ones == 1


def conflicts(a, b, cfg: ToyConfig) -> bool:
    """Whether two distinct points may not both be watermark codewords."""
    if a == b:
        return False
    if cfg.conflict_rule == "adjacent":
        return tolerance_related(a, b)
    l1 = sum(abs(x - y) for x, y in zip(a, b))
    return l1 <= 2 * cfg.conflict_radius


def _conflict_bitsets(points, cfg):
    n = len(points)
    adj = [0] * n
    for i in range(n):
        for j in range(i + 1, n):
            if conflicts(points[i], points[j], cfg):
                adj[i] |= 1 << j
                adj[j] |= 1 << i
    return adj


def _mis_branch_bound(adj):
    """Exact maximum independent set over bitset adjacency; returns a mask."""
    n = len(adj)
    best = [0, 0]

    def recurse(chosen_mask, chosen_size, cand):
        if chosen_size + cand.bit_count() <= best[0]:
            return
        if cand == 0:
            best[0], best[1] = chosen_size, chosen_mask
            return
        v = (cand & -cand).bit_length() - 1
        recurse(chosen_mask | (1 << v), chosen_size + 1, cand & ~adj[v] & ~(1 << v))
        recurse(chosen_mask, chosen_size, cand & ~(1 << v))

    recurse(0, 0, (1 << n) - 1)
    return best[1]


def naive_max_independent(points, cfg: ToyConfig) -> int:
    """Subset enumeration used to cross-check the branch-and-bound."""
    n = len(points)
    if n > 20:
        raise ValueError("naive enumeration capped at 20 points")
    adj = _conflict_bitsets(points, cfg)
    best = 0
    for mask in range(1 << n):
        size = mask.bit_count()
        if size <= best:
            continue
        if all(not (adj[i] & mask) for i in range(n) if mask >> i & 1):
            best = size
    return best


def _is_independent(members, adj):
    mask = 0
    for i in members:
        if adj[i] & mask:
            return False
        mask |= 1 << i
    return True


def _greedy_maximal(seed_members, adj, n):
    members = set(seed_members)
    mask = 0
    for i in members:
        mask |= 1 << i
    for v in range(n):
        if v in members or (adj[v] & mask):
            continue
        members.add(v)
        mask |= 1 << v
    return frozenset(members)


def _maximal_sets(points, adj, cap=256):
    """Greedy-extended maximal sets from single and pair seeds, deduplicated."""
    n = len(points)
    found = set()
    for v in range(n):
        found.add(_greedy_maximal([v], adj, n))
    for i in range(n):
        for j in range(i + 1, n):
            if not (adj[i] >> j) & 1:
                found.add(_greedy_maximal([i, j], adj, n))
    sets = []
    for members in found:
        if not _is_independent(sorted(members), adj):
            raise AssertionError("greedy produced a dependent set")
        sets.append(tuple(sorted(points[i] for i in members)))
    sets.sort(key=lambda s: (-len(s), s))
    return sets[:cap]


def watermark_sets(cfg: ToyConfig) -> dict:
    """Exact maximum and representative maximal codeword sets on the ball."""
    ball = quality_ball(cfg)
    if len(ball) > _BALL_LIMIT:
        raise ValueError(f"quality ball has {len(ball)} points; cap is {_BALL_LIMIT}")
    adj = _conflict_bitsets(ball, cfg)
    best_mask = _mis_branch_bound(adj)
    maximum = tuple(sorted(ball[i] for i in range(len(ball)) if best_mask >> i & 1))
    maximal = _maximal_sets(ball, adj)
    max_size = len(maximum)
    return {
        "rule": cfg.conflict_rule,
        "radius": cfg.conflict_radius if cfg.conflict_rule == "ball_overlap" else None,
        "ball_size": len(ball),
        "epsilon": cfg.epsilon,
        "max_size": max_size,
        "capacity_bits": math.log2(max_size) if max_size else float("-inf"),
        "maximum_set": maximum,
        "maximal_sets": [
            {"points": s, "size": len(s), "capacity_bits": math.log2(len(s))}
            for s in maximal
        ],
    }


def toy_coexistence(set_a, set_b, cfg: ToyConfig) -> dict:
    """Compose two codeword sets by residual addition and report the damage."""
    set_a = [tuple(p) for p in set_a]
    set_b = [tuple(p) for p in set_b]
    for p in set_a + set_b:
        if len(p) != cfg.dims:
            raise ValueError(f"shape mismatch: point {p} has {len(p)} coordinates, need {cfg.dims}")
        if any(not 0 <= v < cfg.levels for v in p):
            raise ValueError(f"point {p} lies outside the grid")
    top = cfg.levels - 1
    composed = sorted(
        {
            tuple(min(top, max(0, a + (b - c))) for a, b, c in zip(pa, pb, cfg.center))
            for pa in set_a
            for pb in set_b
        }
    )
    eps_steps2 = (cfg.epsilon / cfg.step) ** 2 if cfg.step > 0 else 0.0
    exits = sum(
        1
        for p in composed
        if sum((x - c) ** 2 for x, c in zip(p, cfg.center)) > eps_steps2
    )
    violations = sum(
        1
        for i in range(len(composed))
        for j in range(i + 1, len(composed))
        if conflicts(composed[i], composed[j], cfg)
    )
    return {
        "composed": composed,
        "composed_size": len(composed),
        "overlap_with_a": len(set(composed) & set(set_a)),
        "overlap_with_b": len(set(composed) & set(set_b)),
        "ball_exits": exits,
        "conflict_violations": violations,
    }
