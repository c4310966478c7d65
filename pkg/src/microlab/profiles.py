"""Exact piecewise-polynomial profiles on axis-aligned boxes.

A profile is one of:

* ``CellProfile`` -- a box partitioned into "graph cells" {x0<x<x1,
  lo(x)<y<hi(x)} with polynomial boundaries and bivariate-polynomial values.
  Gradient-discontinuity interfaces (graph curves and vertical segments) are
  detected from the cells at construction time.
* ``TiledProfile`` -- a base profile repeated vertically; the value is
  periodic (base top trace == base bottom trace).  One period stands in for
  all of them, which is what makes deeply refined constructions with ~1e6
  congruent cells affordable.
* ``CompositeProfile`` -- profiles glued side by side in x; values must agree
  across the junction lines, gradients may jump.

Everything (point evaluation, traces, areas) is exact up to float rounding.
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .grids import GridField, grid_nodes
from .poly import (
    as_poly,
    as_poly2,
    definite,
    p2add,
    p2at_x,
    p2at_y,
    p2dx,
    p2dy,
    p2eval,
    p2scale,
    pcompose,
    peval,
    poly_range,
    psub,
)

__all__ = [
    "Cell",
    "Interface",
    "VInterface",
    "CellProfile",
    "TiledProfile",
    "CompositeProfile",
    "Profile",
    "EdgeTrace",
    "edge_trace",
    "trace_mass",
    "trace_max_diff",
    "horizontal_trace",
    "profile_box",
    "profile_sample",
    "profile_value",
    "sample_profile",
    "validate_profile",
    "profile_add_poly",
    "profile_scale",
    "profile_to_dict",
    "profile_from_dict",
]

CONTAIN_TOL = 1e-9
EDGE_TOL = 1e-12
VALUE_TOL = 1e-9


@dataclass
class Cell:
    """Graph cell {x0 < x < x1, lo(x) < y < hi(x)} carrying a polynomial value."""

    x0: float
    x1: float
    lo: np.ndarray
    hi: np.ndarray
    value: np.ndarray

    def __post_init__(self):
        self.x0 = float(self.x0)
        self.x1 = float(self.x1)
        self.lo = as_poly(self.lo)
        self.hi = as_poly(self.hi)
        self.value = as_poly2(self.value)
        if not self.x1 > self.x0:
            raise ValueError("cell needs x1 > x0")

    def area(self) -> float:
        return definite(psub(self.hi, self.lo), self.x0, self.x1)

    def origin(self) -> Tuple[float, float]:
        return (self.x0, float(peval(self.lo, self.x0)))


@dataclass(frozen=True)
class Interface:
    """Shared graph edge y = curve(x) between two cells (below / above)."""

    x0: float
    x1: float
    curve: np.ndarray
    below: int
    above: int


@dataclass(frozen=True)
class VInterface:
    """Shared vertical edge x = x between two cells (left / right)."""

    x: float
    y0: float
    y1: float
    left: int
    right: int


def _build_interfaces(cells: Sequence[Cell]):
    horiz: List[Interface] = []
    vert: List[VInterface] = []
    for i, a in enumerate(cells):
        for k, b in enumerate(cells):
            if i == k:
                continue
            # horizontal interface: a below b
            xo0 = max(a.x0, b.x0)
            xo1 = min(a.x1, b.x1)
            if xo1 - xo0 > EDGE_TOL:
                gap = psub(a.hi, b.lo)
                lo_g, hi_g = poly_range(gap, xo0, xo1)
                if max(abs(lo_g), abs(hi_g)) <= 1e-10:
                    horiz.append(Interface(xo0, xo1, a.hi, i, k))
            # vertical interface: a left of b
            if abs(a.x1 - b.x0) <= EDGE_TOL:
                xs = a.x1
                y0 = max(peval(a.lo, xs), peval(b.lo, xs))
                y1 = min(peval(a.hi, xs), peval(b.hi, xs))
                if y1 - y0 > EDGE_TOL:
                    vert.append(VInterface(float(xs), float(y0), float(y1), i, k))
    return tuple(horiz), tuple(vert)


@dataclass
class CellProfile:
    cells: Tuple[Cell, ...]
    box: Tuple[float, float, float, float]  # (x0, y0, x1, y1)

    def __post_init__(self):
        self.cells = tuple(self.cells)
        if not self.cells:
            raise ValueError("profile needs at least one cell")
        self.box = tuple(float(v) for v in self.box)
        x0, y0, x1, y1 = self.box
        if not (x1 > x0 and y1 > y0):
            raise ValueError("degenerate profile box")
        self.interfaces, self.vinterfaces = _build_interfaces(self.cells)

    # evaluation ------------------------------------------------------------
    def sample(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        out = np.full(np.shape(X), np.nan)
        order = sorted(range(len(self.cells)),
                       key=lambda i: self.cells[i].origin(), reverse=True)
        for i in order:
            c = self.cells[i]
            in_x = (X >= c.x0 - CONTAIN_TOL) & (X <= c.x1 + CONTAIN_TOL)
            if not np.any(in_x):
                continue
            xs = X[in_x]
            ys = Y[in_x]
            lo = peval(c.lo, xs)
            hi = peval(c.hi, xs)
            in_y = (ys >= lo - CONTAIN_TOL) & (ys <= hi + CONTAIN_TOL)
            if not np.any(in_y):
                continue
            vals = out[in_x]
            vals[in_y] = p2eval(c.value, xs[in_y], ys[in_y])
            out[in_x] = vals
        return out


@dataclass
class TiledProfile:
    base: CellProfile
    count: int

    def __post_init__(self):
        self.count = int(self.count)
        if self.count < 1:
            raise ValueError("tile count must be >= 1")
        bx0, by0, bx1, by1 = self.base.box
        self.period = by1 - by0
        self.box = (bx0, by0, bx1, by0 + self.count * self.period)
        # the stack is only meaningful if the value continues periodically
        bot = horizontal_trace(self.base, "bottom", "value")
        top = horizontal_trace(self.base, "top", "value")
        mismatch = _piecewise_max_diff(bot, top)
        if mismatch > VALUE_TOL:
            raise ValueError(
                f"base is not vertically periodic: top/bottom traces differ by {mismatch:.3e}"
            )

    def sample(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        by0 = self.base.box[1]
        yr = np.asarray(Y, dtype=float) - by0
        k = np.clip(np.floor(yr / self.period + 1e-12), 0, self.count - 1)
        fold = np.clip(yr - k * self.period, 0.0, self.period)
        return self.base.sample(np.asarray(X, dtype=float), by0 + fold)


@dataclass
class CompositeProfile:
    parts: Tuple[Union[CellProfile, TiledProfile], ...]

    def __post_init__(self):
        self.parts = tuple(self.parts)
        if not self.parts:
            raise ValueError("composite needs at least one part")
        boxes = [profile_box(p) for p in self.parts]
        for left, right in zip(boxes[:-1], boxes[1:]):
            if abs(left[2] - right[0]) > 1e-9:
                raise ValueError("composite parts must abut in x")
            if abs(left[1] - right[1]) > 1e-9 or abs(left[3] - right[3]) > 1e-9:
                raise ValueError("composite parts must share the y extent")
        self.box = (boxes[0][0], boxes[0][1], boxes[-1][2], boxes[0][3])

    def sample(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        out = np.full(np.shape(X), np.nan)
        for part in reversed(self.parts):
            b = profile_box(part)
            mask = (X >= b[0] - CONTAIN_TOL) & (X <= b[2] + CONTAIN_TOL)
            if np.any(mask):
                out[mask] = part.sample(X[mask], Y[mask])
        return out


Profile = Union[CellProfile, TiledProfile, CompositeProfile]


def profile_box(profile: Profile) -> Tuple[float, float, float, float]:
    return profile.box


def profile_sample(profile: Profile, X, Y) -> np.ndarray:
    vals = profile.sample(np.asarray(X, dtype=float), np.asarray(Y, dtype=float))
    bad = int(np.count_nonzero(np.isnan(vals)))
    if bad:
        raise ValueError(f"{bad} sample points not covered by any cell")
    return vals


def profile_value(profile: Profile, x: float, y: float) -> float:
    return float(profile_sample(profile, np.array([x]), np.array([y]))[0])


def sample_profile(profile: Profile, nx: int, ny: int,
                   bc: Optional[str] = None) -> GridField:
    """Sample on the unit-square node grid; boundary-node ties resolve to the
    cell with the lexicographically smallest origin.  The bc tag is attached
    only after verifying the sampled left column satisfies it."""
    b = profile_box(profile)
    if max(abs(b[0]), abs(b[1]), abs(b[2] - 1), abs(b[3] - 1)) > 1e-9:
        raise ValueError("sample_profile expects a profile on the unit square")
    X, Y = np.meshgrid(grid_nodes(nx), grid_nodes(ny))
    values = profile_sample(profile, X, Y)
    return GridField(nx, ny, values, bc)


# ---------------------------------------------------------------------------
# traces
# ---------------------------------------------------------------------------

@dataclass
class EdgeTrace:
    """Piecewise-polynomial function of y on a vertical edge, periodically
    repeated: pieces live on [y0, y0+period], the function repeats ``repeats``
    times."""

    y0: float
    period: float
    repeats: int
    pieces: List[Tuple[float, float, np.ndarray]]

    @property
    def height(self) -> float:
        return self.period * self.repeats


_KINDS = ("value", "gx", "gy")


def _cell_quantity(cell: Cell, kind: str) -> np.ndarray:
    if kind == "value":
        return cell.value
    if kind == "gx":
        return p2dx(cell.value)
    if kind == "gy":
        return p2dy(cell.value)
    raise ValueError(f"unknown trace kind {kind!r}")


def edge_trace(profile: Profile, side: str, kind: str) -> EdgeTrace:
    """One-sided trace of value/gx/gy along the left or right edge."""
    if kind not in _KINDS:
        raise ValueError(f"unknown trace kind {kind!r}")
    if isinstance(profile, CompositeProfile):
        part = profile.parts[0] if side == "left" else profile.parts[-1]
        return edge_trace(part, side, kind)
    if isinstance(profile, TiledProfile):
        t = edge_trace(profile.base, side, kind)
        return EdgeTrace(t.y0, t.period, profile.count, t.pieces)
    b = profile.box
    xs = b[0] if side == "left" else b[2]
    pieces = []
    for c in profile.cells:
        edge_x = c.x0 if side == "left" else c.x1
        if abs(edge_x - xs) > EDGE_TOL:
            continue
        a = float(peval(c.lo, xs))
        t = float(peval(c.hi, xs))
        if t - a <= EDGE_TOL:
            continue
        pieces.append((a, t, p2at_x(_cell_quantity(c, kind), xs)))
    pieces.sort(key=lambda p: p[0])
    if not pieces:
        raise ValueError(f"no cells on the {side} edge")
    cover = pieces[0][0]
    if abs(cover - b[1]) > 1e-9:
        raise ValueError("edge trace does not start at the box bottom")
    for a, t, _ in pieces:
        if a > cover + 1e-9:
            raise ValueError("edge trace has a gap")
        cover = max(cover, t)
    if abs(cover - b[3]) > 1e-9:
        raise ValueError("edge trace does not reach the box top")
    return EdgeTrace(b[1], b[3] - b[1], 1, pieces)


def horizontal_trace(profile: CellProfile, side: str, kind: str):
    """Trace along a flat bottom/top edge, as pieces (x0, x1, poly in x)."""
    b = profile.box
    ys = b[1] if side == "bottom" else b[3]
    pieces = []
    for c in profile.cells:
        bound = c.lo if side == "bottom" else c.hi
        blo, bhi = poly_range(bound, c.x0, c.x1)
        if abs(blo - ys) <= 1e-12 and abs(bhi - ys) <= 1e-12:
            pieces.append((c.x0, c.x1, p2at_y(_cell_quantity(c, kind), ys)))
    pieces.sort(key=lambda p: p[0])
    if not pieces:
        raise ValueError(f"no flat cells on the {side} edge")
    cover = pieces[0][0]
    if abs(cover - b[0]) > 1e-9:
        raise ValueError(f"{side} edge trace does not start at the box corner")
    for a, t, _ in pieces:
        if a > cover + 1e-9:
            raise ValueError(f"{side} edge is not entirely flat")
        cover = max(cover, t)
    if abs(cover - b[2]) > 1e-9:
        raise ValueError(f"{side} edge is not entirely flat")
    return pieces


def _unfold(trace: EdgeTrace, target_period: float):
    """Pieces of the trace repeated up to the target period (absolute y)."""
    ratio = target_period / trace.period
    r = int(round(ratio))
    if r < 1 or abs(r - ratio) > 1e-9 * max(1.0, ratio):
        raise ValueError("trace periods are not commensurable")
    out = []
    for k in range(r):
        dy = k * trace.period
        for a, b, c in trace.pieces:
            out.append((a + dy, b + dy, pcompose(c, [-dy, 1.0])))
    return out


def _piece_at(pieces, y):
    for a, b, c in pieces:
        if a - 1e-12 <= y <= b + 1e-12:
            return c
    raise ValueError(f"no trace piece covers y={y!r}")


def _merged_cuts(pa, pb, y0, y1):
    cuts = {y0, y1}
    for a, b, _ in pa + pb:
        if y0 - 1e-12 < a < y1 + 1e-12:
            cuts.add(min(max(a, y0), y1))
        if y0 - 1e-12 < b < y1 + 1e-12:
            cuts.add(min(max(b, y0), y1))
    return sorted(cuts)


def trace_mass(ta: EdgeTrace, tb: EdgeTrace) -> float:
    """Integral of |ta - tb| over the full shared height (exact)."""
    if abs(ta.y0 - tb.y0) > 1e-9 or abs(ta.height - tb.height) > 1e-9:
        raise ValueError("traces cover different edges")
    period = max(ta.period, tb.period)
    pa = _unfold(ta, period)
    pb = _unfold(tb, period)
    y0 = ta.y0
    y1 = y0 + period
    total = 0.0
    for a, b in zip(*(lambda c: (c[:-1], c[1:]))(_merged_cuts(pa, pb, y0, y1))):
        if b - a <= 1e-14:
            continue
        mid = 0.5 * (a + b)
        diff = psub(_piece_at(pa, mid), _piece_at(pb, mid))
        total += _abs_integral(diff, a, b)
    reps = ta.height / period
    return total * round(reps)


def trace_max_diff(ta: EdgeTrace, tb: EdgeTrace) -> float:
    """Max of |ta - tb| over one common period (exact via critical points)."""
    if abs(ta.y0 - tb.y0) > 1e-9 or abs(ta.height - tb.height) > 1e-9:
        raise ValueError("traces cover different edges")
    period = max(ta.period, tb.period)
    pa = _unfold(ta, period)
    pb = _unfold(tb, period)
    y0 = ta.y0
    y1 = y0 + period
    worst = 0.0
    cuts = _merged_cuts(pa, pb, y0, y1)
    for a, b in zip(cuts[:-1], cuts[1:]):
        if b - a <= 1e-14:
            continue
        mid = 0.5 * (a + b)
        diff = psub(_piece_at(pa, mid), _piece_at(pb, mid))
        lo, hi = poly_range(diff, a, b)
        worst = max(worst, abs(lo), abs(hi))
    return worst


def _abs_integral(c, a, b):
    from .poly import integrate_abs

    return integrate_abs(c, a, b)


def _piecewise_max_diff(pa, pb) -> float:
    """Max |pa - pb| for two piecewise-in-x trace lists covering the same span."""
    cuts = {a for a, _, _ in pa} | {b for _, b, _ in pa}
    cuts |= {a for a, _, _ in pb} | {b for _, b, _ in pb}
    cuts = sorted(cuts)
    worst = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        if b - a <= 1e-14:
            continue
        mid = 0.5 * (a + b)
        diff = psub(_piece_at(pa, mid), _piece_at(pb, mid))
        lo, hi = poly_range(diff, a, b)
        worst = max(worst, abs(lo), abs(hi))
    return worst


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def validate_profile(profile: Profile) -> List[str]:
    """Structural checks; returns a list of human-readable problems (empty = ok)."""
    issues: List[str] = []
    _validate(profile, issues)
    return issues


def _validate(profile: Profile, issues: List[str]) -> None:
    if isinstance(profile, CompositeProfile):
        for part in profile.parts:
            _validate(part, issues)
        for left, right in zip(profile.parts[:-1], profile.parts[1:]):
            tl = edge_trace(left, "right", "value")
            tr = edge_trace(right, "left", "value")
            gap = trace_max_diff(tl, tr)
            if gap > VALUE_TOL:
                issues.append(
                    f"junction at x={profile_box(right)[0]:g}: value jump {gap:.3e}"
                )
        return
    if isinstance(profile, TiledProfile):
        _validate(profile.base, issues)
        return
    x0, y0, x1, y1 = profile.box
    area = 0.0
    for idx, c in enumerate(profile.cells):
        if c.x0 < x0 - 1e-9 or c.x1 > x1 + 1e-9:
            issues.append(f"cell {idx} leaves the box horizontally")
        gap_lo, gap_hi = poly_range(psub(c.hi, c.lo), c.x0, c.x1)
        if gap_lo < -1e-9:
            issues.append(f"cell {idx} has hi < lo (min gap {gap_lo:.3e})")
        area += c.area()
    box_area = (x1 - x0) * (y1 - y0)
    if abs(area - box_area) > 1e-10 * max(1.0, box_area):
        issues.append(
            f"cells cover area {area!r} but the box has area {box_area!r}"
        )
    for f in profile.interfaces:
        below = profile.cells[f.below]
        above = profile.cells[f.above]
        for t in (0.1, 0.3, 0.5, 0.7, 0.9):
            xm = f.x0 + t * (f.x1 - f.x0)
            ym = peval(f.curve, xm)
            vb = p2eval(below.value, xm, ym)
            va = p2eval(above.value, xm, ym)
            if abs(vb - va) > VALUE_TOL:
                issues.append(
                    f"value jump {abs(vb - va):.3e} across interface at x={xm:g}"
                )
                break
    for f in profile.vinterfaces:
        left = profile.cells[f.left]
        right = profile.cells[f.right]
        for t in (0.1, 0.5, 0.9):
            ym = f.y0 + t * (f.y1 - f.y0)
            vl = p2eval(left.value, f.x, ym)
            vr = p2eval(right.value, f.x, ym)
            if abs(vl - vr) > VALUE_TOL:
                issues.append(
                    f"value jump {abs(vl - vr):.3e} across vertical edge x={f.x:g}"
                )
                break


# ---------------------------------------------------------------------------
# arithmetic and serialization
# ---------------------------------------------------------------------------

def profile_add_poly(profile: Profile, coeffs) -> Profile:
    """Profile whose value is the old value plus a global polynomial."""
    c2 = as_poly2(coeffs)
    if isinstance(profile, CellProfile):
        cells = [Cell(c.x0, c.x1, c.lo, c.hi, p2add(c.value, c2))
                 for c in profile.cells]
        return CellProfile(tuple(cells), profile.box)
    if isinstance(profile, TiledProfile):
        from .poly import depends_only_on_x

        if not depends_only_on_x(c2):
            raise ValueError("adding a y-dependent polynomial would break periodicity")
        return TiledProfile(profile_add_poly(profile.base, c2), profile.count)
    return CompositeProfile(tuple(profile_add_poly(p, c2) for p in profile.parts))


def profile_scale(profile: Profile, s: float) -> Profile:
    if isinstance(profile, CellProfile):
        cells = [Cell(c.x0, c.x1, c.lo, c.hi, p2scale(c.value, s))
                 for c in profile.cells]
        return CellProfile(tuple(cells), profile.box)
    if isinstance(profile, TiledProfile):
        return TiledProfile(profile_scale(profile.base, s), profile.count)
    return CompositeProfile(tuple(profile_scale(p, s) for p in profile.parts))


def profile_to_dict(profile: Profile) -> dict:
    if isinstance(profile, CellProfile):
        return {
            "type": "cells",
            "box": list(profile.box),
            "cells": [
                {
                    "x0": c.x0,
                    "x1": c.x1,
                    "lo": c.lo.tolist(),
                    "hi": c.hi.tolist(),
                    "value": c.value.tolist(),
                }
                for c in profile.cells
            ],
        }
    if isinstance(profile, TiledProfile):
        return {
            "type": "tiled",
            "count": profile.count,
            "base": profile_to_dict(profile.base),
        }
    return {
        "type": "composite",
        "parts": [profile_to_dict(p) for p in profile.parts],
    }


def profile_from_dict(data: dict) -> Profile:
    kind = data.get("type")
    if kind == "cells":
        cells = tuple(
            Cell(c["x0"], c["x1"], c["lo"], c["hi"], c["value"])
            for c in data["cells"]
        )
        return CellProfile(cells, tuple(data["box"]))
    if kind == "tiled":
        return TiledProfile(profile_from_dict(data["base"]), data["count"])
    if kind == "composite":
        return CompositeProfile(tuple(profile_from_dict(p) for p in data["parts"]))
    raise ValueError(f"unknown profile type {kind!r}")
