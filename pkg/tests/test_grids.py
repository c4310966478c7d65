import numpy as np
import pytest

from microlab.grids import (
    BC_LEFT_IDENTITY,
    BC_LEFT_ZERO,
    GridField,
    d1,
    d2,
    grid_nodes,
    l1_distance,
    read_field,
    second_total_variation,
    write_field,
)


def field_from(fn, nx, ny, bc=None):
    X, Y = np.meshgrid(grid_nodes(nx), grid_nodes(ny))
    return GridField(nx, ny, fn(X, Y), bc)


def test_d1_constant_and_affine():
    f = field_from(lambda x, y: 0 * x + 2.5, 11, 7)
    assert np.all(d1(f).values == 0.0)
    g = field_from(lambda x, y: 3.0 * x, 11, 7)
    assert np.allclose(d1(g).values, 3.0)
    assert d1(g).bc is None


def test_d1_quadratic_error_bound():
    nx = 101
    f = field_from(lambda x, y: x**2, nx, 5)
    X, _ = np.meshgrid(grid_nodes(nx), grid_nodes(5))
    err = np.abs(d1(f).values - 2.0 * X)
    # forward difference of x^2 is off by exactly h on the interior
    assert err.max() <= 1.0 / (nx - 1) + 1e-12


def test_d2_examples():
    f = field_from(lambda x, y: y, 5, 9)
    assert np.allclose(d2(f).values, 1.0)
    ny = 201
    g = field_from(lambda x, y: np.sin(y), 4, ny)
    _, Y = np.meshgrid(grid_nodes(4), grid_nodes(ny))
    assert np.abs(d2(g).values - np.cos(Y)).max() <= 1.0 / (ny - 1)


def test_degenerate_grid_rejected():
    with pytest.raises(ValueError):
        GridField(1, 5, np.zeros((5, 1)), None)


def test_tv_affine_is_zero():
    f = field_from(lambda x, y: 1.0 + 2.0 * x - 0.5 * y, 31, 17)
    assert second_total_variation(f) <= 1e-12


def test_tv_gradient_jump():
    # slope jump of size s across a horizontal line carries mass s; the
    # discrete sum overcounts by the usual nodes-vs-cells factor in x
    s = 2.0
    for nx in (21, 201):
        f = field_from(lambda x, y: s * np.maximum(y - 0.5, 0.0), nx, 101)
        tv = second_total_variation(f)
        assert abs(tv - s) / s <= 1.5 / (nx - 1)


def test_tv_smooth_curvature():
    f = field_from(lambda x, y: y**2 / 2.0, 101, 201)
    assert abs(second_total_variation(f) - 1.0) <= 0.01


def test_tv_needs_three_nodes():
    with pytest.raises(ValueError):
        second_total_variation(GridField(2, 5, np.zeros((5, 2)), None))


def test_l1_distance_halves():
    f = field_from(lambda x, y: 0.0 * x, 51, 51)
    g = field_from(lambda x, y: y + 0.0 * x, 51, 51)
    assert abs(l1_distance(f, g) - 0.5) <= 1e-3


def test_bc_tags_enforced():
    vals = np.ones((5, 5))
    with pytest.raises(ValueError):
        GridField(5, 5, vals, BC_LEFT_ZERO)
    vals[:, 0] = 0.0
    GridField(5, 5, vals, BC_LEFT_ZERO)  # fine now
    ident = np.tile(grid_nodes(5)[:, None], (1, 5))
    GridField(5, 5, ident, BC_LEFT_IDENTITY)
    with pytest.raises(ValueError):
        GridField(5, 5, ident + 1.0, BC_LEFT_IDENTITY)


def test_nonfinite_rejected():
    vals = np.zeros((4, 4))
    vals[2, 2] = np.nan
    with pytest.raises(ValueError):
        GridField(4, 4, vals, None)


def test_field_file_round_trip(tmp_path):
    rng = np.random.default_rng(11)
    vals = rng.standard_normal((7, 9))
    vals[:, 0] = 0.0
    f = GridField(9, 7, vals, BC_LEFT_ZERO)
    path = tmp_path / "f.mfield"
    write_field(f, path)
    g = read_field(path)
    assert g.nx == 9 and g.ny == 7 and g.bc == BC_LEFT_ZERO
    assert np.array_equal(g.values, vals)


def test_field_file_bytes_stable(tmp_path):
    vals = np.linspace(0.0, 1.0, 12).reshape(3, 4)
    f = GridField(4, 3, vals, None)
    a, b = tmp_path / "a.mfield", tmp_path / "b.mfield"
    write_field(f, a)
    write_field(f, b)
    assert a.read_bytes() == b.read_bytes()
