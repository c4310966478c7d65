"""Projected gradient descent on a smoothed version of the grid energy.

Smoothing: the two-well min becomes the normalized soft-min
-delta * log((exp(-a/delta) + exp(-b/delta)) / 2), which lies between
min{a,b} and min{a,b} + delta*log 2 and is therefore nonnegative whenever a
and b are; the TV second differences go through a Huber window of width
delta.  A continuation schedule shrinks delta; backtracking (Armijo) line
search keeps the smoothed energy monotone per stage; the pinned left column
is projected out of every step.

Because the smoothed objective brackets the well term from above but the
Huber window undercuts the curvature term, a smoothed-monotone step can
still drift uphill in the exact energy.  Steps are therefore additionally
rejected when they would lift the exact energy more than exact_headroom
above its value at the initial iterate; with the default headroom of zero
no accepted iterate ever exceeds the starting exact energy.  The returned
field is the accepted iterate with the smallest exact energy.
"""

import math
from dataclasses import dataclass, field as dc_field
from typing import List, Optional, Tuple, Union

import numpy as np
from scipy.special import expit

from .constructions import branching_profile
from .energy import (
    FORM_UNRESCALED,
    EnergyParams,
    energy_grid,
    rescale_v_to_u,
)
from .grids import BC_LEFT_ZERO, GridField, grid_nodes
from .profiles import sample_profile

__all__ = [
    "MinimizeOptions",
    "MinimizeResult",
    "smoothed_energy",
    "minimize",
    "INIT_CONSTANT",
    "INIT_BRANCHING",
    "INIT_RANDOM",
]

INIT_CONSTANT = "constant"
INIT_BRANCHING = "branching"
INIT_RANDOM = "random"

STATUS_CONVERGED = "converged"
STATUS_MAX_ITER = "max_iter"
STATUS_STALLED = "stalled"


@dataclass
class MinimizeOptions:
    nx: int = 64
    ny: int = 64
    delta_schedule: Tuple[float, ...] = (0.1, 0.01, 0.001)
    max_iter: int = 200
    tol: float = 1e-7
    armijo: float = 1e-4
    shrink: float = 0.5
    grow: float = 1.3
    max_backtracks: int = 30
    seed: int = 0
    exact_headroom: float = 0.0

    def __post_init__(self):
        self.delta_schedule = tuple(float(d) for d in self.delta_schedule)
        if self.nx < 3 or self.ny < 3:
            raise ValueError("grid must be at least 3x3")
        if not self.delta_schedule or any(d <= 0 for d in self.delta_schedule):
            raise ValueError("smoothing widths must be positive")
        if any(b <= a for a, b in zip(self.delta_schedule[1:],
                                      self.delta_schedule[:-1])):
            raise ValueError("smoothing schedule must decrease")
        if self.max_iter < 1 or self.max_backtracks < 1:
            raise ValueError("iteration limits must be positive")
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")
        if not 0 < self.armijo < 1 or not 0 < self.shrink < 1 or self.grow < 1:
            raise ValueError("bad line-search parameters")
        if self.exact_headroom < 0:
            raise ValueError("exact_headroom must be >= 0")

    def to_dict(self) -> dict:
        return {
            "nx": self.nx,
            "ny": self.ny,
            "delta_schedule": list(self.delta_schedule),
            "max_iter": self.max_iter,
            "tol": self.tol,
            "armijo": self.armijo,
            "shrink": self.shrink,
            "grow": self.grow,
            "max_backtracks": self.max_backtracks,
            "seed": self.seed,
            "exact_headroom": self.exact_headroom,
        }


@dataclass
class MinimizeResult:
    field: GridField
    trace: List[Tuple[int, float, float, float]]  # (iter, delta_s, E_smooth, E_exact)
    status: str
    exact_energy: float


def _huber(t: np.ndarray, delta: float) -> np.ndarray:
    at = np.abs(t)
    return np.where(at <= delta, t * t / (2.0 * delta), at - 0.5 * delta)


def _huber_grad(t: np.ndarray, delta: float) -> np.ndarray:
    return np.clip(t / delta, -1.0, 1.0)


def _signed_pow(t: np.ndarray, q: float) -> np.ndarray:
    return np.abs(t) ** q * np.sign(t)


def smoothed_energy(f: GridField, params: EnergyParams,
                    delta_s: float) -> Tuple[float, GridField]:
    """Smoothed energy value and its exact gradient with respect to the node
    values.  The boundary tag is not enforced here; projection is the
    caller's job."""
    if delta_s <= 0:
        raise ValueError("delta_s must be positive")
    p = params.p
    s1, s2 = params.well_shifts()
    wcurv = params.curvature_weight
    V = f.values
    ny, nx = V.shape
    n1, n2 = nx - 1, ny - 1
    area = 1.0 / (n1 * n2)

    G1 = np.empty_like(V)
    G1[:, :-1] = (V[:, 1:] - V[:, :-1]) * n1
    G1[:, -1] = G1[:, -2]
    G2 = np.empty_like(V)
    G2[:-1, :] = (V[1:, :] - V[:-1, :]) * n2
    G2[-1, :] = G2[-2, :]
    A1 = 0.25 * (G1[:-1, :-1] + G1[1:, :-1] + G1[:-1, 1:] + G1[1:, 1:])
    A2 = 0.25 * (G2[:-1, :-1] + G2[1:, :-1] + G2[:-1, 1:] + G2[1:, 1:])

    e1 = area * float(np.sum(np.abs(A1) ** p))

    wa_arg = np.abs(A2 - s1) ** p
    wb_arg = np.abs(A2 - s2) ** p
    gap = wa_arg - wb_arg
    soft = (np.minimum(wa_arg, wb_arg)
            - delta_s * np.log1p(np.exp(-np.abs(gap) / delta_s))
            + delta_s * math.log(2.0))
    e2 = area * float(np.sum(soft))

    S11 = (V[:, 2:] - 2.0 * V[:, 1:-1] + V[:, :-2]) * n1 ** 2
    S22 = (V[2:, :] - 2.0 * V[1:-1, :] + V[:-2, :]) * n2 ** 2
    S12 = (V[1:, 1:] - V[1:, :-1] - V[:-1, 1:] + V[:-1, :-1]) * n1 * n2
    etv = wcurv * area * float(
        np.sum(_huber(S11, delta_s)) + np.sum(_huber(S22, delta_s))
        + 2.0 * np.sum(_huber(S12, delta_s))
    )
    value = e1 + e2 + etv

    # ---- gradient ----------------------------------------------------------
    gA1 = area * p * _signed_pow(A1, p - 1.0)
    w_first = expit(-gap / delta_s)  # weight of the |. - s1| branch
    gA2 = area * p * (w_first * _signed_pow(A2 - s1, p - 1.0)
                      + (1.0 - w_first) * _signed_pow(A2 - s2, p - 1.0))

    gG1 = np.zeros_like(V)
    gG2 = np.zeros_like(V)
    for g, ga in ((gG1, gA1), (gG2, gA2)):
        q = 0.25 * ga
        g[:-1, :-1] += q
        g[1:, :-1] += q
        g[:-1, 1:] += q
        g[1:, 1:] += q
    gG1[:, -2] += gG1[:, -1]
    gG2[-2, :] += gG2[-1, :]

    gV = np.zeros_like(V)
    gV[:, 1:] += n1 * gG1[:, :-1]
    gV[:, :-1] -= n1 * gG1[:, :-1]
    gV[1:, :] += n2 * gG2[:-1, :]
    gV[:-1, :] -= n2 * gG2[:-1, :]

    h11 = wcurv * area * n1 ** 2 * _huber_grad(S11, delta_s)
    gV[:, 2:] += h11
    gV[:, 1:-1] -= 2.0 * h11
    gV[:, :-2] += h11
    h22 = wcurv * area * n2 ** 2 * _huber_grad(S22, delta_s)
    gV[2:, :] += h22
    gV[1:-1, :] -= 2.0 * h22
    gV[:-2, :] += h22
    h12 = 2.0 * wcurv * area * n1 * n2 * _huber_grad(S12, delta_s)
    gV[1:, 1:] += h12
    gV[1:, :-1] -= h12
    gV[:-1, 1:] -= h12
    gV[:-1, :-1] += h12

    return value, GridField(nx, ny, gV, None)


# ---------------------------------------------------------------------------
# initialization and descent
# ---------------------------------------------------------------------------

def _trivial_values(params: EnergyParams, nx: int, ny: int) -> np.ndarray:
    if params.form == FORM_UNRESCALED:
        return np.zeros((ny, nx))
    return np.tile(grid_nodes(ny)[:, None], (1, nx))


def _bc_column(params: EnergyParams, ny: int) -> np.ndarray:
    if params.form == FORM_UNRESCALED:
        return np.zeros(ny)
    return grid_nodes(ny)


def _initial_field(params: EnergyParams, opts: MinimizeOptions,
                   init: Union[str, GridField]) -> GridField:
    if isinstance(init, GridField):
        if init.bc != params.bc_tag:
            raise ValueError(
                f"given initial field must carry bc {params.bc_tag!r}"
            )
        return init
    if init == INIT_CONSTANT:
        values = _trivial_values(params, opts.nx, opts.ny)
    elif init == INIT_BRANCHING:
        profile, _ = branching_profile(params)
        sampled = sample_profile(profile, opts.nx, opts.ny, BC_LEFT_ZERO)
        if params.form == FORM_UNRESCALED:
            values = sampled.values
        else:
            values = rescale_v_to_u(sampled, params.theta).values
    elif init == INIT_RANDOM:
        rng = np.random.default_rng(opts.seed)
        values = _trivial_values(params, opts.nx, opts.ny)
        values = values + 0.1 * rng.standard_normal(values.shape)
        values[:, 0] = _bc_column(params, opts.ny)
    else:
        raise ValueError(f"unknown initialization {init!r}")
    return GridField(opts.nx, opts.ny, values, params.bc_tag)


def minimize(params: EnergyParams, opts: Optional[MinimizeOptions] = None,
             init: Union[str, GridField] = INIT_CONSTANT) -> MinimizeResult:
    """Continuation descent; see the module docstring for the scheme."""
    opts = opts or MinimizeOptions()
    start = _initial_field(params, opts, init)
    nx, ny = start.nx, start.ny
    bc_col = _bc_column(params, ny)
    V = start.values.copy()

    def exact(values: np.ndarray) -> float:
        return energy_grid(GridField(nx, ny, values, params.bc_tag), params).total

    trace: List[Tuple[int, float, float, float]] = []
    best_vals = V.copy()
    best_exact = exact(V)
    ceiling = best_exact + opts.exact_headroom
    it = 0
    status = STATUS_MAX_ITER
    step = 1.0
    for delta_s in opts.delta_schedule:
        e_smooth, grad = smoothed_energy(
            GridField(nx, ny, V, params.bc_tag), params, delta_s)
        trace.append((it, delta_s, e_smooth, exact(V)))
        stage_status = STATUS_MAX_ITER
        for _ in range(opts.max_iter):
            g = grad.values.copy()
            g[:, 0] = 0.0
            gnorm2 = float(np.sum(g * g))
            if gnorm2 <= 1e-30:
                stage_status = STATUS_CONVERGED
                break
            accepted = False
            t = step
            for _ in range(opts.max_backtracks):
                W = V - t * g
                W[:, 0] = bc_col
                e_new, grad_new = smoothed_energy(
                    GridField(nx, ny, W, params.bc_tag), params, delta_s)
                if e_new <= e_smooth - opts.armijo * t * gnorm2:
                    e_ex = exact(W)
                    if e_ex <= ceiling:
                        accepted = True
                        break
                t *= opts.shrink
            if not accepted:
                stage_status = STATUS_STALLED
                break
            it += 1
            V = W
            drop = e_smooth - e_new
            e_smooth, grad = e_new, grad_new
            trace.append((it, delta_s, e_smooth, e_ex))
            if e_ex < best_exact:
                best_exact = e_ex
                best_vals = V.copy()
            step = t * opts.grow
            if drop <= opts.tol * max(abs(e_smooth), 1e-30):
                stage_status = STATUS_CONVERGED
                break
        status = stage_status
    final = GridField(nx, ny, best_vals, params.bc_tag)
    return MinimizeResult(final, trace, status, best_exact)
