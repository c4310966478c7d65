"""Tests for limit fields with horizontal jump lines and their energy."""

import numpy as np
import pytest

from microlab.limits import (
    JumpSegment,
    PiecewiseSBV,
    jump_length,
    limit_energy,
    sbv_from_dict,
    sbv_to_dict,
    validate,
)
from microlab.poly import p2affine
from microlab.profiles import Cell, CellProfile


def identity_cells():
    return CellProfile((Cell(0.0, 1.0, [0.0], [1.0], p2affine(ay=1.0)),),
                       (0.0, 0.0, 1.0, 1.0))


def single_jump_field(p=2.0, sigma=1.0):
    lower = Cell(0.0, 1.0, [0.0], [0.5], p2affine(ay=1.0))
    upper = Cell(0.0, 1.0, [0.5], [1.0], p2affine(ax=1.0, ay=1.0))
    cells = CellProfile((lower, upper), (0.0, 0.0, 1.0, 1.0))
    seg = JumpSegment(0.5, 0.0, 1.0, [0.0, 1.0])
    return PiecewiseSBV(cells, [seg], p, sigma)


# segments -------------------------------------------------------------------

def test_segment_accepts_plain_coefficients():
    seg = JumpSegment(0.5, 0.0, 1.0, [0.0, 2.0])
    assert seg.eval(0.25) == 0.5
    assert seg.min_height() == 0.0
    assert seg.positive_length() == 1.0


def test_segment_piecewise_height():
    seg = JumpSegment(0.5, 0.0, 1.0,
                      [(0.0, 0.5, [0.0]), (0.5, 1.0, [-0.5, 1.0])])
    assert seg.eval(0.25) == 0.0
    assert abs(seg.eval(0.75) - 0.25) < 1e-15
    # only the ramp half carries an actual jump
    assert abs(seg.positive_length() - 0.5) < 1e-12
    assert seg.positive_intervals() == [(0.5, 1.0)]


def test_segment_positive_length_with_sign_change():
    # height (x - 1/2) clipped by roots: positive only on the right half
    seg = JumpSegment(0.3, 0.0, 1.0, [-0.5, 1.0])
    assert abs(seg.positive_length() - 0.5) < 1e-12


def test_segment_validation():
    with pytest.raises(ValueError):
        JumpSegment(0.5, 0.7, 0.3, [1.0])
    with pytest.raises(ValueError):
        JumpSegment(0.5, 0.0, 1.0, [(0.0, 0.4, [1.0]), (0.6, 1.0, [1.0])])
    with pytest.raises(ValueError):
        JumpSegment(0.5, 0.0, 1.0, [(0.0, 0.4, [1.0]), (0.4, 0.9, [1.0])])
    with pytest.raises(ValueError):
        seg = JumpSegment(0.5, 0.0, 1.0, [1.0])
        seg.eval(1.5)


def test_sbv_requires_cell_profile():
    with pytest.raises(TypeError):
        PiecewiseSBV("not a profile", [], 2.0, 1.0)


# validation -----------------------------------------------------------------

def test_validate_accepts_the_single_jump_field():
    assert validate(single_jump_field()).passed


def test_validate_accepts_the_pure_identity():
    u = PiecewiseSBV(identity_cells(), [], 2.0, 1.0)
    rep = validate(u)
    assert rep.passed and rep.to_dict() == {"passed": True, "issues": []}


def test_validate_flags_negative_height():
    u = single_jump_field()
    u.jumps[0] = JumpSegment(0.5, 0.0, 1.0, [0.25, -1.0])
    rep = validate(u)
    assert any("negative" in s for s in rep.issues)


def test_validate_flags_nonzero_jump_at_pinned_edge():
    lower = Cell(0.0, 1.0, [0.0], [0.5], p2affine(ay=1.0))
    upper = Cell(0.0, 1.0, [0.5], [1.0], p2affine(a0=1.0, ay=1.0))
    cells = CellProfile((lower, upper), (0.0, 0.0, 1.0, 1.0))
    u = PiecewiseSBV(cells, [JumpSegment(0.5, 0.0, 1.0, [1.0])], 2.0, 1.0)
    rep = validate(u)
    assert any("pinned" in s for s in rep.issues)


def test_validate_flags_undeclared_jump():
    u = single_jump_field()
    u.jumps = []
    rep = validate(u)
    assert any("undeclared" in s for s in rep.issues)


def test_validate_flags_jump_not_realized_by_cells():
    u = PiecewiseSBV(identity_cells(),
                     [JumpSegment(0.5, 0.0, 1.0, [0.0, 1.0])], 2.0, 1.0)
    rep = validate(u)
    assert any("do not realize" in s for s in rep.issues)


def test_validate_flags_height_mismatch():
    u = single_jump_field()
    u.jumps[0] = JumpSegment(0.5, 0.0, 1.0, [0.0, 2.0])  # cells jump by x
    rep = validate(u)
    assert any("differs from the cell values" in s for s in rep.issues)


def test_validate_flags_non_horizontal_jump():
    slope = 0.2
    lower = Cell(0.0, 1.0, [0.0], [0.5, slope], p2affine(ay=1.0))
    upper = Cell(0.0, 1.0, [0.5, slope], [1.0], p2affine(a0=0.5, ay=1.0))
    cells = CellProfile((lower, upper), (0.0, 0.0, 1.0, 1.0))
    u = PiecewiseSBV(cells, [], 2.0, 1.0)
    rep = validate(u)
    assert any("non-horizontal" in s for s in rep.issues)


def test_validate_flags_left_trace_mismatch():
    cells = CellProfile((Cell(0.0, 1.0, [0.0], [1.0], p2affine(ay=2.0)),),
                        (0.0, 0.0, 1.0, 1.0))
    u = PiecewiseSBV(cells, [], 2.0, 1.0)
    rep = validate(u)
    assert any("left trace" in s for s in rep.issues)


def test_validate_flags_close_jump_lines():
    lower = Cell(0.0, 1.0, [0.0], [0.5], p2affine(ay=1.0))
    mid = Cell(0.0, 1.0, [0.5], [0.5005], p2affine(ax=1.0, ay=1.0))
    upper = Cell(0.0, 1.0, [0.5005], [1.0], p2affine(ax=2.0, ay=1.0))
    cells = CellProfile((lower, mid, upper), (0.0, 0.0, 1.0, 1.0))
    u = PiecewiseSBV(cells,
                     [JumpSegment(0.5, 0.0, 1.0, [0.0, 1.0]),
                      JumpSegment(0.5005, 0.0, 1.0, [0.0, 1.0])],
                     2.0, 1.0)
    rep = validate(u)
    assert any("gap_min" in s for s in rep.issues)


def test_validate_flags_bad_exponent_and_box():
    u = PiecewiseSBV(identity_cells(), [], 1.0, 1.0)
    assert any("exceed 1" in s for s in validate(u).issues)
    small = CellProfile((Cell(0.0, 0.5, [0.0], [1.0], p2affine(ay=1.0)),),
                        (0.0, 0.0, 0.5, 1.0))
    u = PiecewiseSBV(small, [], 2.0, 1.0)
    assert any("unit square" in s for s in validate(u).issues)


# energy ---------------------------------------------------------------------

def test_limit_energy_of_identity():
    u = PiecewiseSBV(identity_cells(), [], 2.0, 1.0)
    b = limit_energy(u)
    assert b.elastic_d1 == 0.0
    assert abs(b.elastic_d2 - 1.0) < 1e-15
    assert b.interfacial == 0.0
    assert b.params is None


def test_limit_energy_of_single_jump():
    b = limit_energy(single_jump_field())
    # d1 = 1 on the upper half, d2 = 1 everywhere, jump set length 1
    assert abs(b.elastic_d1 - 0.5) < 1e-14
    assert abs(b.elastic_d2 - 1.0) < 1e-14
    assert abs(b.interfacial - 2.0) < 1e-14
    assert abs(b.total - 3.5) < 1e-13


def test_limit_energy_interfacial_is_linear_in_sigma():
    b1 = limit_energy(single_jump_field(sigma=1.0))
    b3 = limit_energy(single_jump_field(sigma=3.0))
    assert abs(b3.interfacial - 3.0 * b1.interfacial) < 1e-13
    assert abs(b3.elastic_d1 - b1.elastic_d1) < 1e-15


def test_limit_energy_p_dependence():
    b = limit_energy(single_jump_field(p=3.0))
    assert abs(b.elastic_d1 - 0.5) < 1e-14  # |1|^3 on the upper half
    assert abs(b.elastic_d2 - 1.0) < 1e-14


def test_limit_energy_rejects_invalid_fields():
    u = single_jump_field()
    u.jumps = []
    with pytest.raises(ValueError):
        limit_energy(u)


def test_jump_length_counts_only_positive_height():
    u = single_jump_field()
    assert abs(jump_length(u) - 1.0) < 1e-12
    u.jumps.append(JumpSegment(0.8, 0.0, 1.0, [0.0]))
    assert abs(jump_length(u) - 1.0) < 1e-12


# serialization --------------------------------------------------------------

def test_sbv_dict_roundtrip():
    u = single_jump_field(p=2.5, sigma=0.7)
    back = sbv_from_dict(sbv_to_dict(u))
    assert back.p == 2.5 and back.sigma == 0.7
    assert back.gap_min == u.gap_min
    assert len(back.jumps) == 1
    assert back.jumps[0].y == 0.5
    assert validate(back).passed
    assert abs(limit_energy(back).total - limit_energy(u).total) < 1e-15


def test_sbv_from_dict_defaults_gap_min():
    d = sbv_to_dict(single_jump_field())
    del d["gap_min"]
    assert sbv_from_dict(d).gap_min == 1e-3
