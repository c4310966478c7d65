"""Whitney-style square covers of open rectangle unions.

The domain is the interior of a finite union of axis-aligned rectangles, so
membership and containment are decided exactly by coordinate compression (no
floating tolerances).  Whitney tiles are the maximal dyadic squares whose
threefold concentric inflation still fits inside the domain; each tile is
subdivided until its concentric double has side at most delta, and the listed
squares are those doubles.  The half-square of a listed square is exactly the
underlying subtile, so the subtiles' partition of the tiles is what makes the
half-squares cover the domain.

Families: (dyadic level mod 4, ix mod 3, iy mod 3) -> 36 fixed slots.  Two
same-family squares either live on the same level (indices differ by >= 3, so
their doubles are separated by a full subtile side) or at least 4 levels
apart (side ratio >= 16, which collides with the comparability of touching
squares), hence each family is pairwise disjoint.

Enumeration stops at a minimum tile side; the infinite tail of smaller tiles
hugging the boundary is still reachable analytically through locate(), which
descends the dyadic levels with the exact fit test and never needs the list.
"""

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

__all__ = [
    "Square",
    "SquareCover",
    "CoverReport",
    "whitney_cover",
    "locate",
    "neighbours",
    "verify_cover",
    "cover_to_dict",
]

Rect = Tuple[float, float, float, float]  # x0, y0, x1, y1

# declared comparability bound for touching squares; verify_cover measures the
# actual worst ratio and checks it stays under this
COMPARABILITY_C = 4.0

_MAX_DEPTH = 60
_MAX_SQUARES = 500_000


class _Compression:
    """Exact geometry on the interior of a union of closed rectangles."""

    def __init__(self, rects: Sequence[Rect]):
        xs = sorted({r[0] for r in rects} | {r[2] for r in rects})
        ys = sorted({r[1] for r in rects} | {r[3] for r in rects})
        self.xs, self.ys = xs, ys
        nx, ny = len(xs) - 1, len(ys) - 1
        self.covered = [[False] * ny for _ in range(nx)]
        for i in range(nx):
            mx = 0.5 * (xs[i] + xs[i + 1])
            for j in range(ny):
                my = 0.5 * (ys[j] + ys[j + 1])
                for (a0, b0, a1, b1) in rects:
                    if a0 <= mx <= a1 and b0 <= my <= b1:
                        self.covered[i][j] = True
                        break

    def rect_in_omega(self, x0: float, y0: float, x1: float, y1: float) -> bool:
        """Closed rectangle inside the open interior: every compression cell
        whose closure meets it must be covered."""
        xs, ys = self.xs, self.ys
        if x0 < xs[0] or x1 > xs[-1] or y0 < ys[0] or y1 > ys[-1]:
            return False
        for i in range(len(xs) - 1):
            if xs[i] > x1 or xs[i + 1] < x0:
                continue
            for j in range(len(ys) - 1):
                if ys[j] > y1 or ys[j + 1] < y0:
                    continue
                if not self.covered[i][j]:
                    return False
        return True

    def rect_meets_omega(self, x0: float, y0: float, x1: float, y1: float) -> bool:
        """Open rectangle intersects the interior."""
        xs, ys = self.xs, self.ys
        for i in range(len(xs) - 1):
            if xs[i] >= x1 or xs[i + 1] <= x0:
                continue
            for j in range(len(ys) - 1):
                if ys[j] >= y1 or ys[j + 1] <= y0:
                    continue
                if self.covered[i][j]:
                    return True
        return False

    def point_in_omega(self, x: float, y: float) -> bool:
        return self.rect_in_omega(x, y, x, y)


@dataclass(frozen=True)
class Square:
    """A listed square: center, half-side, and the dyadic address of its
    half-square subtile (side 2**-level, lattice indices ix, iy)."""
    cx: float
    cy: float
    half: float
    level: int
    ix: int
    iy: int

    @property
    def key(self) -> Tuple[int, int, int]:
        return (self.level, self.ix, self.iy)

    def bounds(self) -> Rect:
        return (self.cx - self.half, self.cy - self.half,
                self.cx + self.half, self.cy + self.half)

    def half_bounds(self) -> Rect:
        h = 0.5 * self.half
        return (self.cx - h, self.cy - h, self.cx + h, self.cy + h)

    def family_index(self) -> int:
        return (self.level % 4) * 9 + (self.ix % 3) * 3 + (self.iy % 3)


def _closed_intersects(a: Square, b: Square) -> bool:
    return (abs(a.cx - b.cx) <= a.half + b.half
            and abs(a.cy - b.cy) <= a.half + b.half)


def _square_distance(a: Square, b: Square) -> float:
    dx = max(0.0, abs(a.cx - b.cx) - (a.half + b.half))
    dy = max(0.0, abs(a.cy - b.cy) - (a.half + b.half))
    return math.hypot(dx, dy)


@dataclass
class SquareCover:
    omega: Tuple[Rect, ...]
    delta: float
    min_side: float
    families: List[List[Square]]

    def __post_init__(self):
        self._comp = _Compression(self.omega)
        self._by_key: Dict[Tuple[int, int, int], Square] = {}
        for fam in self.families:
            for q in fam:
                self._by_key[q.key] = q
        # spatial hash over square bounding boxes, bucket = largest side
        sides = [2.0 * q.half for q in self._by_key.values()]
        self._bucket = max(sides) if sides else 1.0
        self._grid: Dict[Tuple[int, int], List[Square]] = {}
        for q in self._by_key.values():
            x0, y0, x1, y1 = q.bounds()
            for gx in range(int(math.floor(x0 / self._bucket)),
                            int(math.floor(x1 / self._bucket)) + 1):
                for gy in range(int(math.floor(y0 / self._bucket)),
                                int(math.floor(y1 / self._bucket)) + 1):
                    self._grid.setdefault((gx, gy), []).append(q)

    def __contains__(self, q: Square) -> bool:
        return self._by_key.get(q.key) == q

    def all_squares(self) -> List[Square]:
        return [q for fam in self.families for q in fam]

    def candidates(self, q: Square) -> List[Square]:
        x0, y0, x1, y1 = q.bounds()
        seen: Dict[Tuple[int, int, int], Square] = {}
        for gx in range(int(math.floor(x0 / self._bucket)),
                        int(math.floor(x1 / self._bucket)) + 1):
            for gy in range(int(math.floor(y0 / self._bucket)),
                            int(math.floor(y1 / self._bucket)) + 1):
                for other in self._grid.get((gx, gy), ()):
                    seen[other.key] = other
        return list(seen.values())


def _tile_fits(comp: _Compression, level: int, ix: int, iy: int) -> bool:
    """The Whitney predicate: the concentric 3x inflation of the dyadic tile
    lies inside the domain."""
    s = 2.0 ** (-level)
    x0, y0 = ix * s, iy * s
    return comp.rect_in_omega(x0 - s, y0 - s, x0 + 2.0 * s, y0 + 2.0 * s)


def _start_level(rects: Sequence[Rect]) -> int:
    width = max(r[2] for r in rects) - min(r[0] for r in rects)
    height = max(r[3] for r in rects) - min(r[1] for r in rects)
    dim = max(width, height)
    return -int(math.ceil(math.log2(dim)))


def _validate_omega(omega: Sequence[Rect]) -> Tuple[Rect, ...]:
    rects = tuple(tuple(float(v) for v in r) for r in omega)
    if not rects:
        raise ValueError("empty domain")
    for r in rects:
        if len(r) != 4:
            raise ValueError("rectangles are (x0, y0, x1, y1)")
        x0, y0, x1, y1 = r
        if not all(map(math.isfinite, r)):
            raise ValueError("unbounded domain rejected")
        if x0 >= x1 or y0 >= y1:
            raise ValueError(f"degenerate rectangle {r}")
    return rects


def whitney_cover(omega: Sequence[Rect], delta: float,
                  min_side: Optional[float] = None) -> SquareCover:
    """Cover the interior of the rectangle union by 36 families of squares
    with side <= delta whose concentric half-squares tile the Whitney
    decomposition (down to min_side; smaller tiles remain reachable via
    locate)."""
    rects = _validate_omega(omega)
    if delta <= 0:
        raise ValueError("delta must be positive")
    comp = _Compression(rects)
    if min_side is None:
        thinnest = min(min(r[2] - r[0], r[3] - r[1]) for r in rects)
        min_side = min(delta, thinnest) / 64.0
    if min_side <= 0:
        raise ValueError("min_side must be positive")

    l0 = _start_level(rects)
    s0 = 2.0 ** (-l0)
    frontier = []
    for ix in range(int(math.floor(comp.xs[0] / s0)),
                    int(math.floor(comp.xs[-1] / s0)) + 1):
        for iy in range(int(math.floor(comp.ys[0] / s0)),
                        int(math.floor(comp.ys[-1] / s0)) + 1):
            frontier.append((l0, ix, iy))

    tiles: List[Tuple[int, int, int]] = []
    while frontier:
        nxt = []
        for (l, ix, iy) in frontier:
            if _tile_fits(comp, l, ix, iy):
                tiles.append((l, ix, iy))
                continue
            s_child = 2.0 ** (-(l + 1))
            if s_child < min_side or l + 1 - l0 > _MAX_DEPTH:
                continue  # truncated tail near the boundary
            for dx in (0, 1):
                for dy in (0, 1):
                    cx, cy = 2 * ix + dx, 2 * iy + dy
                    if comp.rect_meets_omega(cx * s_child, cy * s_child,
                                             (cx + 1) * s_child,
                                             (cy + 1) * s_child):
                        nxt.append((l + 1, cx, cy))
        frontier = nxt

    families: List[List[Square]] = [[] for _ in range(36)]
    total = 0
    for (l, ix, iy) in tiles:
        s = 2.0 ** (-l)
        m = 0
        while 2.0 * s / (1 << m) > delta:
            m += 1
        sub = s / (1 << m)
        total += (1 << m) ** 2
        if total > _MAX_SQUARES:
            raise ValueError(
                "cover too large to enumerate; raise min_side or delta")
        for a in range(1 << m):
            gx = (ix << m) + a
            for b in range(1 << m):
                gy = (iy << m) + b
                q = Square((gx + 0.5) * sub, (gy + 0.5) * sub, sub,
                           l + m, gx, gy)
                families[q.family_index()].append(q)
    return SquareCover(rects, float(delta), float(min_side), families)


def locate(cover: SquareCover, x: float, y: float) -> Square:
    """The listed square whose half-square contains (x, y), found by dyadic
    descent with the exact fit test (works below the enumeration floor too)."""
    comp = cover._comp
    if not comp.point_in_omega(x, y):
        raise ValueError("point is not in the domain")
    l = _start_level(cover.omega)
    for _ in range(_MAX_DEPTH + 1):
        s = 2.0 ** (-l)
        ix, iy = int(math.floor(x / s)), int(math.floor(y / s))
        if _tile_fits(comp, l, ix, iy):
            m = 0
            while 2.0 * s / (1 << m) > cover.delta:
                m += 1
            sub = s / (1 << m)
            gx, gy = int(math.floor(x / sub)), int(math.floor(y / sub))
            return Square((gx + 0.5) * sub, (gy + 0.5) * sub, sub,
                          l + m, gx, gy)
        l += 1
    raise ValueError("point too close to the boundary to locate")


def neighbours(cover: SquareCover, q: Square, k: int = 1) -> Set[Square]:
    """k-step intersection closure of q among the listed squares."""
    if q not in cover:
        raise ValueError("square is not part of the cover")
    if k < 1:
        raise ValueError("k must be >= 1")
    current: Set[Square] = {q}
    for _ in range(k):
        grown = set(current)
        for s in current:
            for cand in cover.candidates(s):
                if _closed_intersects(s, cand):
                    grown.add(cand)
        current = grown
    return current


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------

@dataclass
class CoverReport:
    n_families: int
    nonempty_families: int
    n_squares: int
    sides_ok: bool
    contained_ok: bool
    per_family_disjoint: bool
    comparability_ok: bool
    max_ratio: float
    coverage_checked: int
    coverage_misses: int
    tail_points: int
    a: float
    b: float

    @property
    def passed(self) -> bool:
        return (self.sides_ok and self.contained_ok
                and self.per_family_disjoint and self.comparability_ok
                and self.coverage_misses == 0
                and math.isfinite(self.a) and math.isfinite(self.b))

    def constants(self) -> dict:
        return {"c": self.max_ratio, "N": self.n_families,
                "a": self.a, "b": self.b}

    def to_dict(self) -> dict:
        return {
            "n_families": self.n_families,
            "nonempty_families": self.nonempty_families,
            "n_squares": self.n_squares,
            "sides_ok": self.sides_ok,
            "contained_ok": self.contained_ok,
            "per_family_disjoint": self.per_family_disjoint,
            "comparability_ok": self.comparability_ok,
            "coverage_checked": self.coverage_checked,
            "coverage_misses": self.coverage_misses,
            "tail_points": self.tail_points,
            "constants": self.constants(),
            "passed": self.passed,
        }


def _sample_points(cover: SquareCover, n: int, seed: int) -> List[Tuple[float, float]]:
    comp = cover._comp
    x0, x1 = comp.xs[0], comp.xs[-1]
    y0, y1 = comp.ys[0], comp.ys[-1]
    rng = np.random.default_rng(seed)
    pts: List[Tuple[float, float]] = []
    attempts = 0
    while len(pts) < n and attempts < 100 * n:
        xs = x0 + (x1 - x0) * rng.random(n)
        ys = y0 + (y1 - y0) * rng.random(n)
        for x, y in zip(xs, ys):
            attempts += 1
            if comp.point_in_omega(float(x), float(y)):
                pts.append((float(x), float(y)))
                if len(pts) == n:
                    break
    return pts


def verify_cover(cover: SquareCover, samples: int = 10000,
                 seed: int = 0) -> CoverReport:
    """Check the three cover properties and measure the constants: exact
    per-family disjointness, half-square coverage on random interior points
    (via locate, so the truncated tail counts as covered), and exact size
    comparability of touching squares."""
    comp = cover._comp
    squares = cover.all_squares()
    sides_ok = all(2.0 * q.half <= cover.delta * (1 + 1e-12) for q in squares)
    contained_ok = all(comp.rect_in_omega(*q.bounds()) for q in squares)

    disjoint = True
    comparability_ok = True
    max_ratio = 1.0 if squares else float("nan")
    for q in squares:
        for other in cover.candidates(q):
            if other.key <= q.key:
                continue
            if not _closed_intersects(q, other):
                continue
            ratio = max(q.half / other.half, other.half / q.half)
            max_ratio = max(max_ratio, ratio)
            if ratio > COMPARABILITY_C:
                comparability_ok = False
            if q.family_index() == other.family_index():
                disjoint = False

    pts = _sample_points(cover, samples, seed)
    misses = 0
    tail = 0
    for (x, y) in pts:
        try:
            q = locate(cover, x, y)
        except ValueError:
            misses += 1
            continue
        hx0, hy0, hx1, hy1 = q.half_bounds()
        if not (hx0 <= x <= hx1 and hy0 <= y <= hy1):
            misses += 1
        elif q not in cover:
            tail += 1  # below the enumeration floor; covered analytically

    # neighbour growth constants on a deterministic sample of squares
    a_const, b_const = 1.0, 1.0
    probe = squares[:: max(1, len(squares) // 40)][:40]
    for q in probe:
        for k in (1, 2):
            nk = neighbours(cover, q, k)
            b_const = max(b_const, len(nk) ** (1.0 / k))
            for other in nk:
                reach = (_square_distance(q, other) + other.half) / q.half
                if reach > 0:
                    a_const = max(a_const, reach ** (1.0 / k))

    return CoverReport(
        n_families=len(cover.families),
        nonempty_families=sum(1 for f in cover.families if f),
        n_squares=len(squares),
        sides_ok=sides_ok,
        contained_ok=contained_ok,
        per_family_disjoint=disjoint,
        comparability_ok=comparability_ok,
        max_ratio=max_ratio,
        coverage_checked=len(pts),
        coverage_misses=misses,
        tail_points=tail,
        a=a_const,
        b=b_const,
    )


def cover_to_dict(cover: SquareCover,
                  report: Optional[CoverReport] = None) -> dict:
    out = {
        "omega": [list(r) for r in cover.omega],
        "delta": cover.delta,
        "min_side": cover.min_side,
        "families": [
            [{"cx": q.cx, "cy": q.cy, "l": q.half} for q in fam]
            for fam in cover.families
        ],
    }
    if report is not None:
        out["constants"] = report.constants()
    return out
