"""Two-well transition energies, in both the raw and the rescaled frame.

Raw frame ("unrescaled"): fields v with v(0, .) = 0 and density

    |d1 v|^p + min{|d2 v + theta|^p, |d2 v - (1-theta)|^p} + epsilon * |D^2 v|.

Rescaled frame: u = x2 + v/theta with u(0, .) = x2, wells at 0 and 1/theta,
curvature weight sigma * theta, and epsilon = sigma * theta^p tying the two
frames together.  The interface mass is the anisotropic one the discrete
second-difference TV converges to: |[gx]| + |[gy]| weighted by |nu1| + |nu2|
per unit length (for axis-aligned jumps this is the plain jump size).

The analytic evaluator is closed-form on piecewise-affine cells; adaptive
quadrature only enters for genuinely non-affine value maps and reports
failure instead of silently truncating.
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .grids import (
    BC_LEFT_IDENTITY,
    BC_LEFT_ZERO,
    GridField,
    d1,
    d2,
    grid_nodes,
    second_total_variation,
)
from .poly import (
    as_poly,
    definite,
    depends_only_on_x,
    depends_only_on_y,
    integrate_abs,
    p2at_x,
    p2compose_y,
    p2dx,
    p2dy,
    p2is_constant,
    pcompose,
    pder,
    peval,
    pmul,
    psub,
    real_roots_in,
)
from .profiles import (
    CellProfile,
    CompositeProfile,
    Profile,
    TiledProfile,
    edge_trace,
    horizontal_trace,
    profile_add_poly,
    profile_scale,
    trace_mass,
    _piece_at,
)

__all__ = [
    "FORM_UNRESCALED",
    "FORM_RESCALED",
    "EnergyParams",
    "EnergyBreakdown",
    "QuadratureError",
    "double_well_unrescaled",
    "double_well_rescaled",
    "energy_grid",
    "energy_analytic",
    "d2_mass_analytic",
    "rescale_v_to_u",
    "rescale_u_to_v",
]

FORM_UNRESCALED = "unrescaled"
FORM_RESCALED = "rescaled"

_COUPLING_RTOL = 1e-12


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to converge to the requested accuracy."""


@dataclass(frozen=True)
class EnergyParams:
    p: float
    theta: float
    epsilon: float
    sigma: float
    form: str

    def __post_init__(self):
        if not self.p > 1:
            raise ValueError("exponent p must exceed 1")
        if not 0 < self.theta <= 0.5:
            raise ValueError("theta must lie in (0, 1/2]")
        if not self.epsilon > 0 or not self.sigma > 0:
            raise ValueError("epsilon and sigma must be positive")
        if self.form not in (FORM_UNRESCALED, FORM_RESCALED):
            raise ValueError(f"unknown form {self.form!r}")
        coupled = self.sigma * self.theta ** self.p
        if abs(coupled - self.epsilon) > _COUPLING_RTOL * max(self.epsilon, coupled):
            raise ValueError(
                f"epsilon={self.epsilon!r} and sigma={self.sigma!r} violate "
                f"epsilon = sigma * theta^p"
            )

    @classmethod
    def unrescaled(cls, p: float, theta: float, epsilon: float) -> "EnergyParams":
        return cls(float(p), float(theta), float(epsilon),
                   float(epsilon) / float(theta) ** float(p), FORM_UNRESCALED)

    @classmethod
    def rescaled(cls, p: float, theta: float, sigma: float) -> "EnergyParams":
        return cls(float(p), float(theta), float(sigma) * float(theta) ** float(p),
                   float(sigma), FORM_RESCALED)

    @property
    def curvature_weight(self) -> float:
        return self.epsilon if self.form == FORM_UNRESCALED else self.sigma * self.theta

    @property
    def bc_tag(self) -> str:
        return BC_LEFT_ZERO if self.form == FORM_UNRESCALED else BC_LEFT_IDENTITY

    def well_shifts(self) -> Tuple[float, float]:
        """DW(t) = min |t - s1|^p, |t - s2|^p; ties resolve to the first shift."""
        if self.form == FORM_UNRESCALED:
            return (-self.theta, 1.0 - self.theta)
        return (0.0, 1.0 / self.theta)

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "theta": self.theta,
            "epsilon": self.epsilon,
            "sigma": self.sigma,
            "form": self.form,
        }


def double_well_unrescaled(t, params: EnergyParams):
    """min{|t + theta|^p, |t - (1-theta)|^p}; vanishes exactly at the wells."""
    t = np.asarray(t, dtype=float)
    p, theta = params.p, params.theta
    return np.minimum(np.abs(t + theta) ** p, np.abs(t - (1.0 - theta)) ** p)


def double_well_rescaled(t, params: EnergyParams):
    """min{|t|^p, |t - 1/theta|^p}; vanishes exactly at 0 and 1/theta."""
    t = np.asarray(t, dtype=float)
    p, theta = params.p, params.theta
    return np.minimum(np.abs(t) ** p, np.abs(t - 1.0 / theta) ** p)


@dataclass(frozen=True)
class EnergyBreakdown:
    """params is None for breakdowns of the theta-free limiting functional."""

    elastic_d1: float
    elastic_d2: float
    interfacial: float
    total: float
    params: Optional[EnergyParams]

    def __post_init__(self):
        for name in ("elastic_d1", "elastic_d2", "interfacial"):
            if getattr(self, name) < -1e-12:
                raise ValueError(f"{name} is negative")
        s = self.elastic_d1 + self.elastic_d2 + self.interfacial
        if abs(s - self.total) > 1e-12 * max(1.0, abs(s)):
            raise ValueError("total does not equal the sum of the parts")

    @classmethod
    def from_parts(cls, e1: float, e2: float, inter: float,
                   params: Optional[EnergyParams]) -> "EnergyBreakdown":
        return cls(e1, e2, inter, math.fsum((e1, e2, inter)), params)

    def to_dict(self) -> dict:
        return {
            "elastic_d1": self.elastic_d1,
            "elastic_d2": self.elastic_d2,
            "interfacial": self.interfacial,
            "total": self.total,
            "params": self.params.to_dict() if self.params is not None else None,
        }


# ---------------------------------------------------------------------------
# grid energy
# ---------------------------------------------------------------------------

def energy_grid(field: GridField, params: EnergyParams) -> EnergyBreakdown:
    """Midpoint-per-cell energy with cell-averaged node gradients plus the
    discrete curvature term."""
    if field.bc != params.bc_tag:
        raise ValueError(
            f"{params.form} energies need bc {params.bc_tag!r}, field has {field.bc!r}"
        )
    g1 = d1(field).values
    g2 = d2(field).values
    a1 = 0.25 * (g1[:-1, :-1] + g1[1:, :-1] + g1[:-1, 1:] + g1[1:, 1:])
    a2 = 0.25 * (g2[:-1, :-1] + g2[1:, :-1] + g2[:-1, 1:] + g2[1:, 1:])
    area = 1.0 / ((field.nx - 1) * (field.ny - 1))
    if params.form == FORM_UNRESCALED:
        dw = double_well_unrescaled(a2, params)
    else:
        dw = double_well_rescaled(a2, params)
    e1 = math.fsum(np.abs(a1).ravel() ** params.p) * area
    e2 = math.fsum(dw.ravel()) * area
    inter = params.curvature_weight * second_total_variation(field)
    return EnergyBreakdown.from_parts(e1, e2, inter, params)


# ---------------------------------------------------------------------------
# 1-D integral engine: transform(g(x)) * w(x)
# ---------------------------------------------------------------------------

def _pow_scalar(t: float, p: float) -> float:
    return abs(t) ** p


def _dw_scalar(t: float, p: float, s1: float, s2: float) -> float:
    a = abs(t - s1) ** p
    b = abs(t - s2) ** p
    return a if a <= b else b


def _abspow_affine_times_poly(g: np.ndarray, p: float, w: np.ndarray,
                              a: float, b: float) -> float:
    """Exact integral of |g(x)|^p * w(x) for affine g (any polynomial w)."""
    g = as_poly(g)
    if g.size == 1:
        return _pow_scalar(g[0], p) * definite(w, a, b)
    c0, c1 = float(g[0]), float(g[1])
    wu = pcompose(w, [-c0 / c1, 1.0 / c1])
    ua = c0 + c1 * a
    ub = c0 + c1 * b
    total = 0.0
    for k, wk in enumerate(wu):
        if wk == 0.0:
            continue
        denom = p + k + 1.0
        fb = abs(ub) ** p * ub ** (k + 1) / denom
        fa = abs(ua) ** p * ua ** (k + 1) / denom
        total += wk * (fb - fa)
    return total / c1


def _quad_1d(fn, a: float, b: float, points) -> float:
    from scipy.integrate import quad

    inner = [x for x in points if a < x < b]
    val, err = quad(fn, a, b, points=inner or None, limit=500,
                    epsabs=1e-12, epsrel=1e-9)
    if err > max(1e-9, 1e-7 * abs(val)):
        raise QuadratureError(
            f"1-D quadrature error estimate {err:.3e} too large (value {val:.6e})"
        )
    return val


def integrate_transform(g, transform, w, a: float, b: float) -> float:
    """Integral over [a, b] of transform(g(x)) * w(x); w must be >= 0 there.

    transform is ("pow", p) for |t|^p or ("dw", p, s1, s2) for the two-well
    density min |t-s1|^p, |t-s2|^p.
    """
    if b <= a:
        return 0.0
    g = as_poly(g)
    w = as_poly(w)
    kind = transform[0]
    if kind == "pow":
        p = transform[1]
        if g.size <= 2:
            return _abspow_affine_times_poly(g, p, w, a, b)
        if p == int(p) and int(p) <= 4:
            # |g|^p * w = |g^p * w| for integer p and w >= 0, so root-splitting
            # the product integrates it exactly
            acc = np.ones(1)
            for _ in range(int(p)):
                acc = pmul(acc, g)
            return integrate_abs(pmul(acc, w), a, b)
        pts = real_roots_in(g, a, b)
        return _quad_1d(lambda x: _pow_scalar(peval(g, x), p) * peval(w, x), a, b, pts)
    if kind == "dw":
        p, s1, s2 = transform[1], transform[2], transform[3]
        mid = 0.5 * (s1 + s2)
        cuts = [a] + real_roots_in(psub(g, [mid]), a, b) + [b]
        total = 0.0
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            if hi - lo <= 1e-15:
                continue
            xm = 0.5 * (lo + hi)
            gm = peval(g, xm)
            shift = s1 if abs(gm - s1) <= abs(gm - s2) else s2
            total += integrate_transform(psub(g, [shift]), ("pow", p), w, lo, hi)
        return total
    raise ValueError(f"unknown transform {transform!r}")


def _transform_scalar(t: float, transform) -> float:
    if transform[0] == "pow":
        return _pow_scalar(t, transform[1])
    return _dw_scalar(t, transform[1], transform[2], transform[3])


def _cell_density_integral(cell, g2, transform) -> float:
    """Integral of transform(g2(x, y)) over one graph cell."""
    if p2is_constant(g2):
        return _transform_scalar(float(g2[0, 0]), transform) * cell.area()
    if depends_only_on_x(g2):
        return integrate_transform(g2[:, 0], transform,
                                   psub(cell.hi, cell.lo), cell.x0, cell.x1)
    lo_const = cell.lo.size == 1
    hi_const = cell.hi.size == 1
    if depends_only_on_y(g2) and lo_const and hi_const:
        width = cell.x1 - cell.x0
        return width * integrate_transform(
            g2[0, :], transform, [1.0], float(cell.lo[0]), float(cell.hi[0])
        )
    # general fallback: inner exact/adaptive integral in y, outer quadrature in x
    def inner(x: float) -> float:
        gy = p2at_x(g2, x)
        return integrate_transform(gy, transform, [1.0],
                                   float(peval(cell.lo, x)), float(peval(cell.hi, x)))

    return _quad_1d(inner, cell.x0, cell.x1, [])


# ---------------------------------------------------------------------------
# analytic energy
# ---------------------------------------------------------------------------

def _interface_mass_cells(profile: CellProfile) -> float:
    total = 0.0
    for f in profile.interfaces:
        below = profile.cells[f.below]
        above = profile.cells[f.above]
        jx = psub(p2compose_y(p2dx(above.value), f.curve),
                  p2compose_y(p2dx(below.value), f.curve))
        jy = psub(p2compose_y(p2dy(above.value), f.curve),
                  p2compose_y(p2dy(below.value), f.curve))
        slope = pder(f.curve)
        for j in (jx, jy):
            total += integrate_abs(j, f.x0, f.x1)
            total += integrate_abs(pmul(j, slope), f.x0, f.x1)
    for f in profile.vinterfaces:
        left = profile.cells[f.left]
        right = profile.cells[f.right]
        jx = psub(p2at_x(p2dx(right.value), f.x), p2at_x(p2dx(left.value), f.x))
        jy = psub(p2at_x(p2dy(right.value), f.x), p2at_x(p2dy(left.value), f.x))
        total += integrate_abs(jx, f.y0, f.y1) + integrate_abs(jy, f.y0, f.y1)
    return total


def _period_line_mass(base: CellProfile) -> float:
    """Gradient-jump mass across one tile boundary of a periodic stack."""
    total = 0.0
    for kind in ("gx", "gy"):
        bot = horizontal_trace(base, "bottom", kind)
        top = horizontal_trace(base, "top", kind)
        cuts = sorted({a for a, _, _ in bot + top} | {b for _, b, _ in bot + top})
        for a, b in zip(cuts[:-1], cuts[1:]):
            if b - a <= 1e-14:
                continue
            mid = 0.5 * (a + b)
            total += integrate_abs(psub(_piece_at(top, mid), _piece_at(bot, mid)), a, b)
    return total


def _junction_mass(left: Profile, right: Profile) -> float:
    total = 0.0
    for kind in ("gx", "gy"):
        total += trace_mass(edge_trace(left, "right", kind),
                            edge_trace(right, "left", kind))
    return total


def _energy_parts(profile: Profile, params: EnergyParams):
    """(elastic_d1, elastic_d2, unweighted interface mass)."""
    s1, s2 = params.well_shifts()
    pow_tf = ("pow", params.p)
    dw_tf = ("dw", params.p, s1, s2)
    if isinstance(profile, CellProfile):
        e1 = e2 = 0.0
        for cell in profile.cells:
            e1 += _cell_density_integral(cell, p2dx(cell.value), pow_tf)
            e2 += _cell_density_integral(cell, p2dy(cell.value), dw_tf)
        return e1, e2, _interface_mass_cells(profile)
    if isinstance(profile, TiledProfile):
        e1, e2, mass = _energy_parts(profile.base, params)
        line = _period_line_mass(profile.base)
        return (e1 * profile.count, e2 * profile.count,
                mass * profile.count + line * (profile.count - 1))
    if isinstance(profile, CompositeProfile):
        e1 = e2 = mass = 0.0
        for part in profile.parts:
            p1, p2_, pm = _energy_parts(part, params)
            e1 += p1
            e2 += p2_
            mass += pm
        for lhs, rhs in zip(profile.parts[:-1], profile.parts[1:]):
            mass += _junction_mass(lhs, rhs)
        return e1, e2, mass
    raise TypeError(f"not a profile: {type(profile).__name__}")


def energy_analytic(profile: Profile, params: EnergyParams) -> EnergyBreakdown:
    e1, e2, mass = _energy_parts(profile, params)
    return EnergyBreakdown.from_parts(e1, e2, params.curvature_weight * mass, params)


def d2_mass_analytic(profile: Profile) -> float:
    """L1 norm of the vertical derivative (absolutely continuous part)."""
    if isinstance(profile, CellProfile):
        total = 0.0
        for cell in profile.cells:
            g2 = p2dy(cell.value)
            if p2is_constant(g2):
                total += abs(float(g2[0, 0])) * cell.area()
            elif depends_only_on_x(g2):
                total += integrate_transform(g2[:, 0], ("pow", 1.0),
                                             psub(cell.hi, cell.lo),
                                             cell.x0, cell.x1)
            else:
                total += _cell_density_integral(cell, g2, ("pow", 1.0))
        return total
    if isinstance(profile, TiledProfile):
        return d2_mass_analytic(profile.base) * profile.count
    return math.fsum(d2_mass_analytic(p) for p in profile.parts)


# ---------------------------------------------------------------------------
# frame change
# ---------------------------------------------------------------------------

def rescale_v_to_u(field, theta: float):
    """u = x2 + v/theta on grid fields or profiles; a left-zero bc tag becomes
    a left-identity tag."""
    if not theta > 0:
        raise ValueError("theta must be positive")
    if isinstance(field, GridField):
        if field.bc not in (None, BC_LEFT_ZERO):
            raise ValueError("expected a raw-frame field (bc None or left-zero)")
        ys = grid_nodes(field.ny)[:, None]
        values = ys + field.values / theta
        bc = BC_LEFT_IDENTITY if field.bc == BC_LEFT_ZERO else None
        return GridField(field.nx, field.ny, values, bc)
    return profile_add_poly(profile_scale(field, 1.0 / theta), [[0.0, 1.0]])


def rescale_u_to_v(field, theta: float):
    """v = theta * (u - x2); inverse of rescale_v_to_u."""
    if not theta > 0:
        raise ValueError("theta must be positive")
    if isinstance(field, GridField):
        if field.bc not in (None, BC_LEFT_IDENTITY):
            raise ValueError("expected a rescaled-frame field (bc None or left-identity)")
        ys = grid_nodes(field.ny)[:, None]
        values = theta * (field.values - ys)
        bc = BC_LEFT_ZERO if field.bc == BC_LEFT_IDENTITY else None
        return GridField(field.nx, field.ny, values, bc)
    return profile_scale(profile_add_poly(field, [[0.0, -1.0]]), theta)
