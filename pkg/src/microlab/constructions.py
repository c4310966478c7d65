"""Explicit competitor profiles.

* ``constant_profile`` -- the do-nothing field v = 0 (all majority variant).
* ``branch_cell`` -- one period of a stripe-splitting cell: the minority
  stripes occupy a set S(x) of total height theta*h for every x, arranged so
  the right edge shows one centered stripe and the left edge its two-stripe
  refinement.  The value map is v(x, y) = -theta*y + |S(x) intersect (0, y)|,
  which makes v(x, 0) = 0, h-periodicity and the two-slope property exact.
* ``branching_profile`` -- the self-similar assembly of branch cells on the
  unit square, geometrically refining toward the pinned edge x = 0, closed by
  a linear-interpolation layer.
* ``recovery_sequence`` -- turns a limit field with horizontal jumps into a
  continuous steep-strip approximation at a given theta.
* ``example_sequence`` -- the two-cell diagonal-interface family whose energy
  stays bounded while the vertical derivative blows up.
"""

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np

from .energy import EnergyParams
from .limits import PiecewiseSBV, validate as validate_limit
from .poly import (
    as_poly,
    p2add,
    padd,
    pcompose,
    peval,
    poly_range,
    pscale,
    psub,
)
from .profiles import (
    Cell,
    CellProfile,
    CompositeProfile,
    TiledProfile,
    edge_trace,
)

__all__ = [
    "BranchCellSpec",
    "BranchingAssemblySpec",
    "constant_profile",
    "branch_cell",
    "branching_profile",
    "recovery_sequence",
    "example_sequence",
    "identity_profile",
]

GEOMETRY_SPLIT = "split"
GEOMETRY_PINCH = "pinch"

_MAX_BASE_PERIODS = 2 ** 31
_MAX_DEPTH = 60


def constant_profile() -> CellProfile:
    """The zero competitor: one cell, v = 0, admissible for the raw frame."""
    return CellProfile((Cell(0.0, 1.0, [0.0], [1.0], [[0.0]]),), (0.0, 0.0, 1.0, 1.0))


def identity_profile() -> CellProfile:
    """u = x2 on the unit square, the rescaled-frame do-nothing field."""
    return CellProfile((Cell(0.0, 1.0, [0.0], [1.0], [[0.0, 1.0]]),),
                       (0.0, 0.0, 1.0, 1.0))


# ---------------------------------------------------------------------------
# branch cell
# ---------------------------------------------------------------------------

@dataclass
class BranchCellSpec:
    """One refinement cell on (0, width) x (0, height).

    geometry is None (same as "split"), "pinch", or an explicit list of
    minority stripes [(lo, hi), ...] where lo/hi are polynomial coefficient
    lists in local coordinates, or piecewise lists [(a, b, coeffs), ...]."""

    width: float
    height: float
    theta: float
    geometry: object = None

    def __post_init__(self):
        self.width = float(self.width)
        self.height = float(self.height)
        self.theta = float(self.theta)
        if not self.width > 0 or not self.height > 0:
            raise ValueError("cell needs positive width and height")
        if not 0 < self.theta <= 0.5:
            raise ValueError("theta must lie in (0, 1/2]")


def _as_pieces(curve, width: float) -> List[Tuple[float, float, np.ndarray]]:
    if (isinstance(curve, (list, tuple)) and curve
            and isinstance(curve[0], (list, tuple)) and len(curve[0]) == 3):
        pieces = sorted(((float(a), float(b), as_poly(c)) for a, b, c in curve),
                        key=lambda t: t[0])
    else:
        pieces = [(0.0, width, as_poly(curve))]
    cursor = 0.0
    for i, (a, b, c) in enumerate(pieces):
        if abs(a - cursor) > 1e-9 * max(1.0, width):
            raise ValueError("stripe edge pieces must tile (0, width)")
        if not b > a:
            raise ValueError("stripe edge piece with nonpositive width")
        if i and abs(peval(pieces[i - 1][2], a) - peval(c, a)) > 1e-9:
            raise ValueError("stripe edge is discontinuous")
        cursor = b
    if abs(cursor - width) > 1e-9 * max(1.0, width):
        raise ValueError("stripe edge pieces must end at width")
    return pieces


def _split_stripes(width, height, theta):
    s = height * (1.0 - theta) / (4.0 * width)
    w = theta * height / 4.0
    c1 = np.array([height / 4.0, s])
    c2 = np.array([3.0 * height / 4.0, -s])
    return [
        (psub(c1, [w]), padd(c1, [w])),
        (psub(c2, [w]), padd(c2, [w])),
    ]


def _pinch_stripes(width, height, theta):
    t = np.array([0.0, 1.0 / width])
    w_out = pscale(psub([1.0], t), theta * height / 2.0)
    w_mid = pscale(t, theta * height)
    out = []
    for center, w in ((height / 4.0, w_out), (height / 2.0, w_mid),
                      (3.0 * height / 4.0, w_out)):
        out.append((psub([center], pscale(w, 0.5)), padd([center], pscale(w, 0.5))))
    return out


def _resolve_stripes(spec: BranchCellSpec):
    geo = spec.geometry
    if geo is None or geo == GEOMETRY_SPLIT:
        raw = _split_stripes(spec.width, spec.height, spec.theta)
    elif geo == GEOMETRY_PINCH:
        raw = _pinch_stripes(spec.width, spec.height, spec.theta)
    elif isinstance(geo, str):
        raise ValueError(f"unknown geometry {geo!r}")
    else:
        raw = list(geo)
    stripes = [(_as_pieces(lo, spec.width), _as_pieces(hi, spec.width))
               for lo, hi in raw]
    mid = spec.width / 2.0
    stripes.sort(key=lambda s: peval(_local_piece(s[0], mid), mid)
                 + peval(_local_piece(s[1], mid), mid))
    return stripes


def _merged_breaks(stripes, width: float) -> List[float]:
    cuts = {0.0, width}
    for lo, hi in stripes:
        for pieces in (lo, hi):
            for a, b, _ in pieces:
                cuts.add(a)
                cuts.add(b)
    out = []
    for c in sorted(cuts):
        if not out or c - out[-1] > 1e-12 * width:
            out.append(c)
    out[-1] = width
    return out


def _local_piece(pieces, x: float) -> np.ndarray:
    # pieces tile their span contiguously, so pick by right endpoint
    for a, b, c in pieces[:-1]:
        if x <= b:
            return c
    return pieces[-1][2]


def _merged_intervals(bounds: List[Tuple[float, float]], h: float):
    keep = [(a, b) for a, b in bounds if b - a > 1e-12 * h]
    keep.sort()
    out = []
    for a, b in keep:
        if out and a <= out[-1][1] + 1e-9 * h:
            out[-1] = (out[-1][0], max(out[-1][1], b))
        else:
            out.append((a, b))
    return out


def _check_stripes(spec: BranchCellSpec, stripes) -> None:
    w, h, theta = spec.width, spec.height, spec.theta
    tol = 1e-12 * h
    breaks = _merged_breaks(stripes, w)
    for a, b in zip(breaks[:-1], breaks[1:]):
        mid = 0.5 * (a + b)
        total = np.zeros(1)
        prev_hi = np.zeros(1)
        for lo_p, hi_p in stripes:
            lo = _local_piece(lo_p, mid)
            hi = _local_piece(hi_p, mid)
            if poly_range(psub(hi, lo), a, b)[0] < -tol:
                raise ValueError("stripe with upper edge below its lower edge")
            if poly_range(psub(lo, prev_hi), a, b)[0] < -tol:
                raise ValueError("crossing stripe interfaces rejected")
            total = padd(total, psub(hi, lo))
            prev_hi = hi
        if poly_range(psub([h], prev_hi), a, b)[0] < -tol:
            raise ValueError("stripe leaves the cell at the top")
        lo0 = _local_piece(stripes[0][0], mid)
        if poly_range(lo0, a, b)[0] < -tol:
            raise ValueError("stripe leaves the cell at the bottom")
        dev = poly_range(psub(total, [theta * h]), a, b)
        if max(abs(dev[0]), abs(dev[1])) > 1e-12 * theta * h:
            raise ValueError(
                "stripes must occupy exactly the volume fraction theta at every x"
            )
    # edge patterns: refined pair on the left, one centered stripe on the right
    for x, expected in (
        (0.0, [(h / 4 - theta * h / 4, h / 4 + theta * h / 4),
               (3 * h / 4 - theta * h / 4, 3 * h / 4 + theta * h / 4)]),
        (w, [(h * (1 - theta) / 2.0, h * (1 + theta) / 2.0)]),
    ):
        got = _merged_intervals(
            [(float(peval(_local_piece(lo, x), x)), float(peval(_local_piece(hi, x), x)))
             for lo, hi in stripes], h)
        ok = len(got) == len(expected) and all(
            abs(ga - ea) <= 1e-9 * h and abs(gb - eb) <= 1e-9 * h
            for (ga, gb), (ea, eb) in zip(got, expected)
        )
        if not ok:
            raise ValueError(
                f"stripe pattern at x={x:g} is {got}, expected {expected}"
            )


def _band_value(x_poly_local, y_slope: float, x0: float, y_base: float) -> np.ndarray:
    q = pcompose(x_poly_local, [-x0, 1.0])
    coeffs = np.zeros((max(q.size, 1), 2))
    coeffs[: q.size, 0] = q
    coeffs[0, 0] -= y_slope * y_base
    coeffs[0, 1] = y_slope
    return coeffs


def _stripe_cells(spec: BranchCellSpec, stripes, x0: float, y_base: float) -> List[Cell]:
    """Cells of one branch cell placed at (x0, y_base), built column by column."""
    w, h, theta = spec.width, spec.height, spec.theta
    breaks = _merged_breaks(stripes, w)
    shift = np.array([-x0, 1.0])
    cells: List[Cell] = []
    for a, b in zip(breaks[:-1], breaks[1:]):
        mid = 0.5 * (a + b)
        acc = np.zeros(1)
        prev_top = np.zeros(1)
        bands = []
        for lo_p, hi_p in stripes:
            lo = _local_piece(lo_p, mid)
            hi = _local_piece(hi_p, mid)
            bands.append((prev_top, lo, _band_value(acc, -theta, x0, y_base)))
            bands.append((lo, hi, _band_value(psub(acc, lo), 1.0 - theta, x0, y_base)))
            acc = padd(acc, psub(hi, lo))
            prev_top = hi
        bands.append((prev_top, [h], _band_value(acc, -theta, x0, y_base)))
        for lo, hi, value in bands:
            gap = poly_range(psub(hi, lo), a, b)
            if gap[1] <= 1e-14 * h:
                continue  # band degenerate across the whole column
            cells.append(Cell(
                x0 + a, x0 + b,
                padd(pcompose(as_poly(lo), shift), [y_base]),
                padd(pcompose(as_poly(hi), shift), [y_base]),
                value,
            ))
    return cells


def branch_cell(spec: BranchCellSpec) -> CellProfile:
    """Exact profile of one refinement cell on (0, width) x (0, height)."""
    stripes = _resolve_stripes(spec)
    _check_stripes(spec, stripes)
    cells = _stripe_cells(spec, stripes, 0.0, 0.0)
    return CellProfile(tuple(cells), (0.0, 0.0, spec.width, spec.height))


# ---------------------------------------------------------------------------
# self-similar assembly
# ---------------------------------------------------------------------------

@dataclass
class BranchingAssemblySpec:
    """Geometry actually used by branching_profile.

    ratio: horizontal shrink factor per generation (generation i spans
    (ratio^(i+1), ratio^i)); base_periods: stripe period count of the coarsest
    generation; depth: index of the finest generation (0..depth all built)."""

    ratio: float
    base_periods: int
    depth: int
    params: EnergyParams

    def __post_init__(self):
        p = self.params.p
        lo = 2.0 ** (-p / (p - 1.0))
        if not lo < self.ratio < 0.5:
            raise ValueError(
                f"ratio {self.ratio!r} outside the admissible interval "
                f"({lo:.6g}, 0.5) for p={p:g}"
            )
        if self.base_periods < 1:
            raise ValueError("base_periods must be >= 1")
        if self.depth < 0:
            raise ValueError("depth must be >= 0")

    def generation_height(self, i: int) -> float:
        return 1.0 / ((2 ** i) * self.base_periods)

    def to_dict(self) -> dict:
        return {
            "ratio": self.ratio,
            "base_periods": self.base_periods,
            "depth": self.depth,
            "params": self.params.to_dict(),
        }


def default_ratio(p: float) -> float:
    """Midpoint of the admissible shrink-factor interval."""
    return 0.5 * (2.0 ** (-p / (p - 1.0)) + 0.5)


def branching_profile(
    params: EnergyParams,
    ratio: Optional[float] = None,
    geometry: object = None,
) -> Tuple[CompositeProfile, BranchingAssemblySpec]:
    """Self-similar stripe refinement on the unit square (raw frame).

    Generation i (i = 0..depth) tiles (ratio^(i+1), ratio^i) with 2^i *
    base_periods branch cells; the remaining sliver (0, ratio^(depth+1)) is
    filled by interpolating the finest trace linearly down to 0, so the
    profile vanishes identically on the pinned edge.
    """
    p, theta, eps = params.p, params.theta, params.epsilon
    if eps > theta ** p * (1.0 + 1e-12):
        raise ValueError(
            "branching needs epsilon <= theta^p; the constant profile wins beyond"
        )
    if ratio is None:
        ratio = default_ratio(p)
    raw = (theta ** p / eps) ** (1.0 / (p + 1.0))
    if raw > _MAX_BASE_PERIODS:
        raise ValueError("refinement period count overflows the supported range")
    base_periods = max(1, math.floor(raw + 0.5))
    depth = max(0, math.floor(math.log(theta / base_periods) / math.log(2.0 * ratio)))
    if depth > _MAX_DEPTH:
        raise ValueError("generation depth overflows the supported range")
    spec = BranchingAssemblySpec(float(ratio), base_periods, depth, params)

    gen_parts: List[Union[CellProfile, TiledProfile]] = []
    finest_base: Optional[CellProfile] = None
    for i in range(depth, -1, -1):  # finest (leftmost) generation first
        x_lo = ratio ** (i + 1)
        x_hi = ratio ** i
        h_i = spec.generation_height(i)
        cell_spec = BranchCellSpec(x_hi - x_lo, h_i, theta, geometry)
        stripes = _resolve_stripes(cell_spec)
        _check_stripes(cell_spec, stripes)
        base = CellProfile(
            tuple(_stripe_cells(cell_spec, stripes, x_lo, 0.0)),
            (x_lo, 0.0, x_hi, h_i),
        )
        if i == depth:
            finest_base = base
        gen_parts.append(TiledProfile(base, (2 ** i) * base_periods))

    layer = _interpolation_layer(finest_base, ratio ** (depth + 1))
    parts = [TiledProfile(layer, (2 ** depth) * base_periods)] + gen_parts
    return CompositeProfile(tuple(parts)), spec


def _interpolation_layer(base: CellProfile, x_right: float) -> CellProfile:
    """Cells on (0, x_right) per period, interpolating the base's left-edge
    value trace linearly down to zero at x = 0."""
    trace = edge_trace(base, "left", "value")
    cells = []
    for a, b, cy in trace.pieces:
        cy = as_poly(cy)
        value = np.zeros((2, cy.size))
        value[1, :] = cy / x_right
        cells.append(Cell(0.0, x_right, [a], [b], value))
    return CellProfile(tuple(cells), (0.0, trace.y0, x_right, trace.y0 + trace.period))


# ---------------------------------------------------------------------------
# recovery sequences
# ---------------------------------------------------------------------------

def _extended_height(seg, width: float = 1.0):
    """Height pieces extended by zero to cover (0, width)."""
    pieces = []
    if seg.x0 > 1e-12:
        pieces.append((0.0, seg.x0, np.zeros(1)))
    pieces.extend(seg.height)
    if seg.x1 < width - 1e-12:
        pieces.append((seg.x1, width, np.zeros(1)))
    return pieces


def recovery_sequence(u: PiecewiseSBV, theta: float) -> CellProfile:
    """Continuous approximation of the limit field at volume fraction theta.

    Above each jump line the cells are shifted down by the jump height and a
    thin strip of slope 1/theta restores continuity; the strip above y with
    height theta*h(x) replaces the jump exactly.  When theta is too large for
    the strips to fit (or a jump height fails to vanish at an interior
    endpoint, which would tear the profile vertically), the plain identity
    field is returned instead -- it is always admissible.
    """
    if not 0 < theta <= 0.5:
        raise ValueError("theta must lie in (0, 1/2]")
    report = validate_limit(u)
    if not report.passed:
        raise ValueError("invalid limit field:\n" + "\n".join(report.issues))

    for seg in u.jumps:
        sup = max(max(abs(v) for v in poly_range(c, a, b)) for a, b, c in seg.height)
        # headroom: nearest jump line above, else the top edge
        room = min([1.0 - seg.y] + [o.y - seg.y for o in u.jumps if o.y > seg.y])
        if theta * sup > 0.5 * room:
            return identity_profile()
        for x_end in (seg.x0, seg.x1):
            if 1e-12 < x_end < 1.0 - 1e-12 and abs(seg.eval(x_end)) > 1e-9:
                return identity_profile()

    by_y = sorted(range(len(u.jumps)), key=lambda k: u.jumps[k].y)
    cells: List[Cell] = []
    for cell in u.cells.cells:
        seg = None
        if cell.lo.size == 1:
            for k in by_y:
                if abs(float(cell.lo[0]) - u.jumps[k].y) <= 1e-9:
                    seg = u.jumps[k]
                    break
        if seg is None:
            cells.append(cell)
            continue
        cells.extend(_strip_split(cell, seg, theta))
    return CellProfile(tuple(cells), u.cells.box)


def _strip_split(cell: Cell, seg, theta: float) -> List[Cell]:
    """Split a cell sitting on a jump line into strip + remainder columns."""
    y0 = seg.y
    out: List[Cell] = []
    for a, b, hc in _extended_height(seg):
        a = max(a, cell.x0)
        b = min(b, cell.x1)
        if b - a <= 1e-14:
            continue
        if poly_range(hc, a, b)[1] <= 1e-14:
            out.append(Cell(a, b, cell.lo, cell.hi, cell.value))
            continue
        top = padd([y0], pscale(hc, theta))
        if poly_range(psub(cell.hi, top), a, b)[0] < -1e-12:
            raise ValueError("jump strip does not fit inside the cell above it")
        # strip: value u + (y - y0)/theta - h(x); continuous against both sides
        corr = np.zeros((max(hc.size, 1), 2))
        corr[: hc.size, 0] = -hc
        corr[0, 0] -= y0 / theta
        corr[0, 1] = 1.0 / theta
        out.append(Cell(a, b, [y0], top, p2add(cell.value, corr)))
        if poly_range(psub(cell.hi, top), a, b)[1] > 1e-14:
            out.append(Cell(a, b, top, cell.hi, cell.value))
    return out


# ---------------------------------------------------------------------------
# bounded-energy, unbounded-gradient family
# ---------------------------------------------------------------------------

def example_sequence(theta: float, alpha: float, p: float = 2.0) -> CellProfile:
    """Two cells split by the diagonal y = 1 - theta^alpha * x: below it the
    identity, above it slope 1/theta in y.  Admissible for the rescaled frame;
    as theta -> 0 the energies stay bounded while the L1 norm of the vertical
    derivative diverges like theta^(alpha-1)."""
    if not 0 < theta <= 0.5:
        raise ValueError("theta must lie in (0, 1/2]")
    if not p / (p + 1.0) < alpha < 1.0:
        raise ValueError(
            f"alpha must lie in (p/(p+1), 1) = ({p / (p + 1.0):.6g}, 1)"
        )
    slope = theta ** alpha
    diag = np.array([1.0, -slope])
    lower = Cell(0.0, 1.0, [0.0], diag, [[0.0, 1.0]])
    upper = Cell(
        0.0, 1.0, diag, [1.0],
        [[1.0 - 1.0 / theta, 1.0 / theta], [-(1.0 - 1.0 / theta) * slope, 0.0]],
    )
    return CellProfile((lower, upper), (0.0, 0.0, 1.0, 1.0))
