"""Tests for the two-well energy in both frames, grid and closed-form."""

import math

import numpy as np
import pytest

from microlab.energy import (
    EnergyBreakdown,
    EnergyParams,
    FORM_RESCALED,
    FORM_UNRESCALED,
    d2_mass_analytic,
    double_well_rescaled,
    double_well_unrescaled,
    energy_analytic,
    energy_grid,
    integrate_transform,
    rescale_u_to_v,
    rescale_v_to_u,
)
from microlab.grids import BC_LEFT_IDENTITY, BC_LEFT_ZERO, GridField, grid_nodes
from microlab.poly import p2affine
from microlab.profiles import Cell, CellProfile

THETAS = (0.1, 0.25, 0.5)
PS = (1.5, 2.0, 3.0)


def zero_field(nx=33, ny=33):
    return GridField(nx, ny, np.zeros((ny, nx)), BC_LEFT_ZERO)


def identity_field(nx=33, ny=33):
    vals = np.tile(grid_nodes(ny)[:, None], (1, nx))
    return GridField(nx, ny, vals, BC_LEFT_IDENTITY)


def two_slab_profile(theta):
    """Raw-frame field sitting in one well per slab: d2 v = -theta below
    y=1/2 and 1-theta above, continuous across the interface."""
    lower = Cell(0.0, 1.0, [0.0], [0.5], p2affine(ay=-theta))
    upper = Cell(0.0, 1.0, [0.5], [1.0],
                 p2affine(a0=-0.5, ay=1.0 - theta))
    return CellProfile((lower, upper), (0.0, 0.0, 1.0, 1.0))


# parameter plumbing ---------------------------------------------------------

def test_params_constructors_couple_the_frames():
    a = EnergyParams.unrescaled(2.0, 0.25, 1e-3)
    assert a.form == FORM_UNRESCALED
    assert abs(a.sigma - 1e-3 / 0.25**2) < 1e-18
    assert a.curvature_weight == a.epsilon
    assert a.bc_tag == BC_LEFT_ZERO
    assert a.well_shifts() == (-0.25, 0.75)

    b = EnergyParams.rescaled(3.0, 0.1, 0.5)
    assert b.form == FORM_RESCALED
    assert abs(b.epsilon - 0.5 * 0.1**3) < 1e-18
    assert abs(b.curvature_weight - 0.5 * 0.1) < 1e-18
    assert b.bc_tag == BC_LEFT_IDENTITY
    assert b.well_shifts() == (0.0, 10.0)


def test_params_validation():
    with pytest.raises(ValueError):
        EnergyParams.unrescaled(1.0, 0.25, 1e-3)  # p must exceed 1
    with pytest.raises(ValueError):
        EnergyParams.unrescaled(2.0, 0.75, 1e-3)  # theta beyond 1/2
    with pytest.raises(ValueError):
        EnergyParams.unrescaled(2.0, 0.25, 0.0)
    with pytest.raises(ValueError):
        # epsilon and sigma telling different stories
        EnergyParams(2.0, 0.25, 1e-3, 42.0, FORM_UNRESCALED)
    with pytest.raises(ValueError):
        EnergyParams(2.0, 0.25, 1e-3, 1e-3 / 0.0625, "sideways")


def test_params_to_dict_roundtrips():
    a = EnergyParams.unrescaled(2.0, 0.25, 1e-3)
    d = a.to_dict()
    assert EnergyParams(**d) == a


# double wells ---------------------------------------------------------------

def test_double_well_unrescaled_values():
    params = EnergyParams.unrescaled(2.0, 0.25, 1e-3)
    assert double_well_unrescaled(0.0, params) == 0.25**2
    assert double_well_unrescaled(-0.25, params) == 0.0
    assert double_well_unrescaled(0.75, params) == 0.0
    # p shows up as advertised
    p3 = EnergyParams.unrescaled(3.0, 0.1, 1e-4)
    assert abs(double_well_unrescaled(0.0, p3) - 0.1**3) < 1e-18


def test_double_well_rescaled_values():
    params = EnergyParams.rescaled(2.0, 0.25, 1.0)
    assert double_well_rescaled(0.0, params) == 0.0
    assert double_well_rescaled(4.0, params) == 0.0
    assert double_well_rescaled(2.0, params) == 4.0  # midpoint, distance 2
    assert double_well_rescaled(1.0, params) == 1.0


def test_double_well_vectorizes():
    params = EnergyParams.unrescaled(2.0, 0.25, 1e-3)
    t = np.array([-0.25, 0.0, 0.75])
    assert np.array_equal(double_well_unrescaled(t, params),
                          [0.0, 0.0625, 0.0])


# breakdown container --------------------------------------------------------

def test_breakdown_rejects_negative_parts():
    with pytest.raises(ValueError):
        EnergyBreakdown(-1.0, 0.0, 0.0, -1.0, None)


def test_breakdown_rejects_bad_total():
    with pytest.raises(ValueError):
        EnergyBreakdown(1.0, 1.0, 1.0, 2.0, None)


def test_breakdown_from_parts_sums():
    b = EnergyBreakdown.from_parts(0.1, 0.2, 0.3, None)
    assert abs(b.total - 0.6) < 1e-15
    assert b.to_dict()["params"] is None


# grid energy ----------------------------------------------------------------

def test_grid_energy_of_zero_field_is_theta_to_p():
    for theta in THETAS:
        for p in PS:
            params = EnergyParams.unrescaled(p, theta, 1e-3 * theta**p)
            b = energy_grid(zero_field(), params)
            assert abs(b.total - theta**p) <= 1e-12 * theta**p
            assert b.elastic_d1 == 0.0
            assert b.interfacial == 0.0


def test_grid_energy_of_identity_field_is_one():
    for theta in THETAS:
        for p in PS:
            params = EnergyParams.rescaled(p, theta, 1e-3)
            b = energy_grid(identity_field(), params)
            assert abs(b.total - 1.0) <= 1e-12


def test_grid_energy_exact_on_x_ramp():
    # v = a*x keeps d2 v = 0, so the well term stays theta^p and the
    # elastic term is exactly |a|^p
    a = 0.37
    nx = ny = 21
    vals = a * np.tile(grid_nodes(nx)[None, :], (ny, 1))
    f = GridField(nx, ny, vals, BC_LEFT_ZERO)
    for p in PS:
        params = EnergyParams.unrescaled(p, 0.25, 1e-4)
        b = energy_grid(f, params)
        assert abs(b.elastic_d1 - a**p) <= 1e-13
        assert abs(b.elastic_d2 - 0.25**p) <= 1e-13
        assert b.interfacial <= 1e-13


def test_grid_energy_checks_bc_tag():
    params = EnergyParams.unrescaled(2.0, 0.25, 1e-3)
    with pytest.raises(ValueError):
        energy_grid(identity_field(), params)
    with pytest.raises(ValueError):
        energy_grid(zero_field().with_bc(None), params)


# analytic energy ------------------------------------------------------------

def test_two_slab_profile_is_pure_interface():
    for theta in THETAS:
        for p in PS:
            eps = 1e-3 * theta**p
            params = EnergyParams.unrescaled(p, theta, eps)
            b = energy_analytic(two_slab_profile(theta), params)
            assert b.elastic_d1 == 0.0
            assert abs(b.elastic_d2) <= 1e-15
            # d2 jumps by exactly 1 along a unit-length horizontal line
            assert abs(b.interfacial - eps) <= 1e-15 * eps


def test_two_slab_d2_mass():
    theta = 0.25
    m = d2_mass_analytic(two_slab_profile(theta))
    assert abs(m - (0.5 * theta + 0.5 * (1 - theta))) < 1e-15


def test_frame_identity_on_a_kinked_profile():
    # raw-frame energy equals theta^p times the rescaled energy of the
    # transported profile, for any profile at all
    lower = Cell(0.0, 1.0, [0.0], [0.5], p2affine(ax=0.3, ay=0.1))
    upper = Cell(0.0, 1.0, [0.5], [1.0],
                 p2affine(a0=-0.15, ax=0.3, ay=0.4))
    v_prof = CellProfile((lower, upper), (0.0, 0.0, 1.0, 1.0))
    for theta in THETAS:
        for p in PS:
            eps = 2e-4 * theta**p
            raw = EnergyParams.unrescaled(p, theta, eps)
            res = EnergyParams.rescaled(p, theta, raw.sigma)
            ev = energy_analytic(v_prof, raw).total
            eu = energy_analytic(rescale_v_to_u(v_prof, theta), res).total
            assert abs(ev - theta**p * eu) <= 1e-10 * max(ev, theta**p * eu)


def test_analytic_matches_grid_on_affine_field():
    a = 0.37
    prof = CellProfile(
        (Cell(0.0, 1.0, [0.0], [1.0], p2affine(ax=a)),),
        (0.0, 0.0, 1.0, 1.0),
    )
    params = EnergyParams.unrescaled(2.0, 0.25, 1e-4)
    b = energy_analytic(prof, params)
    assert abs(b.elastic_d1 - a**2) < 1e-15
    assert abs(b.elastic_d2 - 0.0625) < 1e-15
    assert b.interfacial == 0.0


# 1-D integral engine --------------------------------------------------------

def test_integrate_transform_pow_affine():
    # integral of (x - 1/2)^2 over [0, 1]
    v = integrate_transform([-0.5, 1.0], ("pow", 2.0), [1.0], 0.0, 1.0)
    assert abs(v - 1.0 / 12.0) < 1e-14
    # fractional exponent on an affine argument still closed-form
    v = integrate_transform([0.0, 1.0], ("pow", 1.5), [1.0], 0.0, 1.0)
    assert abs(v - 1.0 / 2.5) < 1e-14


def test_integrate_transform_pow_with_weight():
    v = integrate_transform([0.0, 1.0], ("pow", 1.0), [0.0, 1.0], 0.0, 1.0)
    assert abs(v - 1.0 / 3.0) < 1e-14


def test_integrate_transform_pow_quadratic_argument():
    # integer p: root-splitting keeps it exact, int x^6 = 1/7
    v = integrate_transform([0.0, 0.0, 1.0], ("pow", 3.0), [1.0], 0.0, 1.0)
    assert abs(v - 1.0 / 7.0) < 1e-14
    # non-integer p falls back to quadrature, int x^5 = 1/6
    v = integrate_transform([0.0, 0.0, 1.0], ("pow", 2.5), [1.0], 0.0, 1.0)
    assert abs(v - 1.0 / 6.0) < 1e-9


def test_integrate_transform_double_well():
    # min(x^2, (x-1)^2) over [0, 1] = 2 * int_0^0.5 x^2 = 1/12
    v = integrate_transform([0.0, 1.0], ("dw", 2.0, 0.0, 1.0), [1.0], 0.0, 1.0)
    assert abs(v - 1.0 / 12.0) < 1e-14


def test_integrate_transform_empty_and_unknown():
    assert integrate_transform([1.0], ("pow", 2.0), [1.0], 1.0, 1.0) == 0.0
    with pytest.raises(ValueError):
        integrate_transform([1.0], ("exp",), [1.0], 0.0, 1.0)


# frame change ---------------------------------------------------------------

def test_rescale_grid_roundtrip():
    rng = np.random.default_rng(5)
    vals = 0.1 * rng.standard_normal((17, 13))
    vals[:, 0] = 0.0
    v = GridField(13, 17, vals, BC_LEFT_ZERO)
    theta = 0.25
    u = rescale_v_to_u(v, theta)
    assert u.bc == BC_LEFT_IDENTITY
    back = rescale_u_to_v(u, theta)
    assert back.bc == BC_LEFT_ZERO
    assert np.max(np.abs(back.values - v.values)) < 1e-15


def test_rescale_rejects_wrong_frame():
    theta = 0.25
    with pytest.raises(ValueError):
        rescale_v_to_u(identity_field(), theta)
    with pytest.raises(ValueError):
        rescale_u_to_v(zero_field(), theta)
    with pytest.raises(ValueError):
        rescale_v_to_u(zero_field(), 0.0)


def test_rescale_profile_matches_pointwise_map():
    prof = two_slab_profile(0.25)
    u = rescale_v_to_u(prof, 0.25)
    from microlab.profiles import profile_value

    for x, y in ((0.3, 0.2), (0.8, 0.9), (0.5, 0.5)):
        v_val = profile_value(prof, x, y)
        assert abs(profile_value(u, x, y) - (y + v_val / 0.25)) < 1e-14
