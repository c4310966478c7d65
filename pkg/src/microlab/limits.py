"""Limit fields: piecewise-polynomial maps on the unit square whose only
discontinuities are horizontal jump lines with nonnegative jump height.

The limiting energy is ``int |d1 u|^p + |d2 u|^p + 2*sigma*length(jump set)``,
where the jump set is the part of each declared segment on which the jump
height is strictly positive.  Heights are piecewise polynomial on purpose:
the positivity set then has an exactly computable measure.

``validate`` is report-based (it never raises); ``limit_energy`` insists on a
clean report before evaluating.
"""

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from .poly import as_poly, peval, poly_range, psub, real_roots_in
from .profiles import (
    CellProfile,
    edge_trace,
    profile_from_dict,
    profile_to_dict,
)

__all__ = [
    "JumpSegment",
    "PiecewiseSBV",
    "SBVReport",
    "validate",
    "limit_energy",
    "jump_length",
    "sbv_to_dict",
    "sbv_from_dict",
]

_HEIGHT_TOL = 1e-9
_POSITIVE_TOL = 1e-12


@dataclass
class JumpSegment:
    """Horizontal jump line at ordinate y over [x0, x1] with piecewise
    polynomial height.  ``height`` accepts plain coefficients (one piece
    spanning the segment) or an explicit piece list [(a, b, coeffs), ...]."""

    y: float
    x0: float
    x1: float
    height: List[Tuple[float, float, np.ndarray]]

    def __post_init__(self):
        self.y = float(self.y)
        self.x0 = float(self.x0)
        self.x1 = float(self.x1)
        if not self.x1 > self.x0:
            raise ValueError("jump segment needs x1 > x0")
        h = self.height
        if not (isinstance(h, (list, tuple)) and h
                and isinstance(h[0], (list, tuple)) and len(h[0]) == 3):
            h = [(self.x0, self.x1, as_poly(h))]
        pieces = sorted(
            ((float(a), float(b), as_poly(c)) for a, b, c in h),
            key=lambda t: t[0],
        )
        cursor = self.x0
        for a, b, _ in pieces:
            if abs(a - cursor) > 1e-9:
                raise ValueError("height pieces must tile [x0, x1] without gaps")
            if not b > a:
                raise ValueError("height piece with nonpositive width")
            cursor = b
        if abs(cursor - self.x1) > 1e-9:
            raise ValueError("height pieces must end at x1")
        self.height = pieces

    def eval(self, x: float) -> float:
        for a, b, c in self.height:
            if a - 1e-12 <= x <= b + 1e-12:
                return float(peval(c, x))
        raise ValueError(f"x={x!r} outside the segment")

    def min_height(self) -> float:
        return min(poly_range(c, a, b)[0] for a, b, c in self.height)

    def positive_length(self) -> float:
        """Measure of {height > 0}, via the real roots of each piece."""
        total = 0.0
        for a, b, c in self.height:
            cuts = [a] + real_roots_in(c, a, b) + [b]
            for lo, hi in zip(cuts[:-1], cuts[1:]):
                if hi - lo > 1e-14 and peval(c, 0.5 * (lo + hi)) > _POSITIVE_TOL:
                    total += hi - lo
        return total

    def positive_intervals(self) -> List[Tuple[float, float]]:
        out = []
        for a, b, c in self.height:
            cuts = [a] + real_roots_in(c, a, b) + [b]
            for lo, hi in zip(cuts[:-1], cuts[1:]):
                if hi - lo > 1e-14 and peval(c, 0.5 * (lo + hi)) > _POSITIVE_TOL:
                    out.append((lo, hi))
        return _merge_intervals(out)


@dataclass
class PiecewiseSBV:
    cells: CellProfile
    jumps: List[JumpSegment]
    p: float
    sigma: float
    gap_min: float = 1e-3

    def __post_init__(self):
        if not isinstance(self.cells, CellProfile):
            raise TypeError("the smooth part must be a CellProfile")
        self.jumps = list(self.jumps)
        self.p = float(self.p)
        self.sigma = float(self.sigma)
        self.gap_min = float(self.gap_min)


@dataclass
class SBVReport:
    issues: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.issues

    def to_dict(self) -> dict:
        return {"passed": self.passed, "issues": list(self.issues)}


def _merge_intervals(ivals):
    out = []
    for a, b in sorted(ivals):
        if out and a <= out[-1][1] + 1e-12:
            out[-1] = (out[-1][0], max(out[-1][1], b))
        else:
            out.append((a, b))
    return out


def _intersect_length(ivals_a, ivals_b) -> float:
    total = 0.0
    for a0, a1 in ivals_a:
        for b0, b1 in ivals_b:
            total += max(0.0, min(a1, b1) - max(a0, b0))
    return total


def validate(u: PiecewiseSBV) -> SBVReport:
    """Report-based structural validation; an empty issue list means pass."""
    rep = SBVReport()
    if not u.p > 1:
        rep.issues.append(f"exponent p={u.p!r} must exceed 1")
    if not u.sigma > 0:
        rep.issues.append(f"sigma={u.sigma!r} must be positive")
    box = u.cells.box
    if max(abs(box[0]), abs(box[1]), abs(box[2] - 1), abs(box[3] - 1)) > 1e-9:
        rep.issues.append("cell decomposition does not cover the unit square")

    for k, seg in enumerate(u.jumps):
        if not (0.0 < seg.y < 1.0):
            rep.issues.append(f"segment {k}: ordinate y={seg.y:g} outside (0,1)")
        if seg.x0 < -1e-12 or seg.x1 > 1 + 1e-12:
            rep.issues.append(f"segment {k}: [{seg.x0:g},{seg.x1:g}] leaves [0,1]")
        for (a0, b0, c0), (a1, b1, c1) in zip(seg.height[:-1], seg.height[1:]):
            step = abs(peval(c0, b0) - peval(c1, a1))
            if step > _HEIGHT_TOL:
                rep.issues.append(
                    f"segment {k}: height discontinuous at x={b0:g} (step {step:.3e})"
                )
        mn = seg.min_height()
        if mn < -_HEIGHT_TOL:
            rep.issues.append(f"segment {k}: negative jump height (min {mn:.3e})")
        if abs(seg.x0) <= 1e-12 and abs(seg.eval(seg.x0)) > _HEIGHT_TOL:
            rep.issues.append(
                f"segment {k}: nonzero jump {seg.eval(seg.x0):.3e} at the pinned "
                f"left edge"
            )

    ys = sorted(seg.y for seg in u.jumps)
    for lo, hi in zip(ys[:-1], ys[1:]):
        if hi - lo < u.gap_min:
            rep.issues.append(
                f"segments at y={lo:g} and y={hi:g} are closer than gap_min="
                f"{u.gap_min:g}"
            )

    try:
        for a, b, c in edge_trace(u.cells, "left", "value").pieces:
            lo, hi = poly_range(psub(c, [0.0, 1.0]), a, b)
            dev = max(abs(lo), abs(hi))
            if dev > _HEIGHT_TOL:
                rep.issues.append(
                    f"left trace differs from the identity by {dev:.3e} on "
                    f"y in [{a:g},{b:g}]"
                )
                break
    except ValueError as exc:
        rep.issues.append(f"left trace not defined: {exc}")

    _check_jump_consistency(u, rep)
    return rep


def _check_jump_consistency(u: PiecewiseSBV, rep: SBVReport) -> None:
    """Cell-value discontinuities and declared segments must agree."""
    from .poly import p2at_x, p2compose_y, p2sub

    covered = {k: [] for k in range(len(u.jumps))}
    for f in u.cells.interfaces:
        below = u.cells.cells[f.below]
        above = u.cells.cells[f.above]
        jump = p2compose_y(p2sub(above.value, below.value), f.curve)
        lo, hi = poly_range(jump, f.x0, f.x1)
        if max(abs(lo), abs(hi)) <= _HEIGHT_TOL:
            continue
        if f.curve.size > 1:
            rep.issues.append(
                f"value jump across a non-horizontal interface on "
                f"x in [{f.x0:g},{f.x1:g}]"
            )
            continue
        yc = float(f.curve[0])
        match = None
        for k, seg in enumerate(u.jumps):
            if abs(seg.y - yc) <= 1e-9 and seg.x0 <= f.x0 + 1e-9 and f.x1 <= seg.x1 + 1e-9:
                match = k
                break
        if match is None:
            rep.issues.append(f"undeclared jump line at y={yc:g}")
            continue
        covered[match].append((f.x0, f.x1))
        seg = u.jumps[match]
        worst = 0.0
        for a, b, c in seg.height:
            oa, ob = max(a, f.x0), min(b, f.x1)
            if ob - oa > 1e-12:
                dlo, dhi = poly_range(psub(jump, c), oa, ob)
                worst = max(worst, abs(dlo), abs(dhi))
        if worst > 1e-7:
            rep.issues.append(
                f"declared height at y={yc:g} differs from the cell values "
                f"by {worst:.3e}"
            )
    for f in u.cells.vinterfaces:
        left = u.cells.cells[f.left]
        right = u.cells.cells[f.right]
        diff = psub(p2at_x(left.value, f.x), p2at_x(right.value, f.x))
        lo, hi = poly_range(diff, f.y0, f.y1)
        if max(abs(lo), abs(hi)) > _HEIGHT_TOL:
            rep.issues.append(f"vertical value jump at x={f.x:g}")
    for k, seg in enumerate(u.jumps):
        pos = seg.positive_intervals()
        want = sum(b - a for a, b in pos)
        got = _intersect_length(pos, _merge_intervals(covered[k]))
        if want - got > 1e-6:
            rep.issues.append(
                f"segment {k} declares a jump of length {want - got:.3e} that "
                f"the cells do not realize"
            )


def jump_length(u: PiecewiseSBV) -> float:
    """Total length of the jump set: the part of each segment where the
    height is strictly positive."""
    return sum(seg.positive_length() for seg in u.jumps)


def limit_energy(u: PiecewiseSBV):
    """Breakdown of the limiting energy; elastic terms are plain p-th powers
    of both partials, the jump set pays 2*sigma per unit length."""
    from .energy import EnergyBreakdown, _cell_density_integral
    from .poly import p2dx, p2dy

    rep = validate(u)
    if not rep.passed:
        raise ValueError("invalid limit field:\n" + "\n".join(rep.issues))
    pow_tf = ("pow", u.p)
    e1 = e2 = 0.0
    for cell in u.cells.cells:
        e1 += _cell_density_integral(cell, p2dx(cell.value), pow_tf)
        e2 += _cell_density_integral(cell, p2dy(cell.value), pow_tf)
    return EnergyBreakdown.from_parts(e1, e2, 2.0 * u.sigma * jump_length(u), None)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def sbv_to_dict(u: PiecewiseSBV) -> dict:
    return {
        "p": u.p,
        "sigma": u.sigma,
        "gap_min": u.gap_min,
        "cells": profile_to_dict(u.cells),
        "jumps": [
            {
                "y": seg.y,
                "x0": seg.x0,
                "x1": seg.x1,
                "height": [[a, b, c.tolist()] for a, b, c in seg.height],
            }
            for seg in u.jumps
        ],
    }


def sbv_from_dict(data: dict) -> PiecewiseSBV:
    cells = profile_from_dict(data["cells"])
    jumps = [
        JumpSegment(j["y"], j["x0"], j["x1"], j["height"]) for j in data["jumps"]
    ]
    return PiecewiseSBV(cells, jumps, data["p"], data["sigma"],
                        data.get("gap_min", 1e-3))
