import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wmorrey.field_core import (
    Ball,
    BallFamily,
    Grid,
    SampledField,
    UnderResolvedBall,
    ball_stencil,
    half_restrict,
    integrate_ball,
    mean_ball,
)
from wmorrey.fieldio import read_field, write_field


@pytest.fixture
def line():
    return Grid.cell_centered(-1.0, 1.0, 2.0 ** -8)


def test_grid_invariants(line):
    assert line.size == (512,)
    assert line.extent[0] == pytest.approx((512 - 1) * line.h)
    with pytest.raises(ValueError):
        Grid(1, (0.0,), 0.1, (3,))
    with pytest.raises(ValueError):
        Grid(1, (0.0,), -0.1, (10,))


def test_integrate_constant_measures_ball(line):
    one = SampledField.constant(line, 1.0)
    assert integrate_ball(one, Ball(0.0, 1.0)) == pytest.approx(2.0, abs=line.h)
    assert integrate_ball(one, Ball(0.3, 0.5)) == pytest.approx(1.0, abs=line.h)


def test_integrate_odd_function_vanishes(line):
    f = SampledField.from_function(line, lambda x: x)
    assert abs(integrate_ball(f, Ball(0.0, 0.7))) <= line.h ** 2


def test_integrate_x_squared_second_order():
    errs = []
    for k in (6, 7, 8):
        g = Grid.cell_centered(-1.0, 1.0, 2.0 ** -k)
        f = SampledField.from_function(g, lambda x: x ** 2)
        errs.append(abs(integrate_ball(f, Ball(0.0, 1.0)) - 2 / 3))
    # oracle: analytic integral; midpoint error decays like h^2
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.05)


def test_mean_ball_constant_exact(line):
    f = SampledField.constant(line, 3.0)
    for B in (Ball(0.0, 0.1), Ball(0.5, 0.37), Ball(-0.55, 0.4)):
        assert mean_ball(f, B) == 3.0


def test_mean_ball_constant_exact_2d():
    g = Grid.cell_centered((0, 0), (1, 1), 1 / 32)
    f = SampledField.constant(g, 3.0)
    assert mean_ball(f, Ball((0.5, 0.5), 0.2)) == 3.0


def test_mean_ball_log(line):
    g = Grid.cell_centered(-1.0, 1.0, 2.0 ** -10)
    f = SampledField.from_function(g, lambda x: np.log(np.abs(x)))
    for r in (32 * g.h, 0.25, 0.9):
        exact = np.log(r) - 1
        assert mean_ball(f, Ball(0.0, r)) == pytest.approx(exact, rel=0.02)


def test_mean_ball_sign(line):
    f = SampledField.from_function(line, np.sign)
    for r in (0.1, 0.5):
        assert abs(mean_ball(f, Ball(0.0, r))) <= line.h / r


def test_under_resolved_ball_raises(line):
    f = SampledField.constant(line, 1.0)
    with pytest.raises(UnderResolvedBall):
        integrate_ball(f, Ball(line.h / 4, line.h / 8))


def test_zero_extension_counts_virtual_cells(line):
    f = SampledField.constant(line, 1.0)
    # half the ball lies outside the grid
    assert mean_ball(f, Ball(1.0, 0.5)) == pytest.approx(0.5, abs=line.h)


def test_half_restrict(line):
    f = SampledField.constant(line, 1.0)
    fr = half_restrict(f)
    x = line.axes()[0]
    assert np.all(fr.support_mask == (x > 0))
    assert integrate_ball(fr, Ball(0.0, 1.0)) == pytest.approx(integrate_ball(f, Ball(0.5, 0.5)))


def test_half_restrict_odd_function(line):
    f = SampledField.from_function(line, lambda x: x ** 3)
    fr = half_restrict(f)
    # oracle: direct summation over the positive cells
    x = line.axes()[0]
    direct = np.sum(x[x > 0] ** 3) * line.h
    assert integrate_ball(fr, Ball(0.0, 1.0)) == pytest.approx(direct, rel=1e-13)
    assert integrate_ball(fr, Ball(0.0, 1.0)) == pytest.approx(
        0.5 * integrate_ball(f.abs(), Ball(0.0, 1.0)), rel=1e-13
    )


def test_half_restrict_2d_masks_last_axis():
    g = Grid.cell_centered((-1, -1), (1, 1), 1 / 16)
    fr = half_restrict(SampledField.constant(g, 1.0))
    y = g.mesh()[1]
    assert np.array_equal(fr.support_mask, y > 0)


@settings(max_examples=40, deadline=None)
@given(
    a=st.floats(-5, 5), b=st.floats(-5, 5),
    c=st.floats(-0.8, 0.8), r=st.floats(0.05, 0.9),
)
def test_linearity(a, b, c, r):
    g = Grid.cell_centered(-1.0, 1.0, 2.0 ** -7)
    f = SampledField.from_function(g, np.cos)
    h = SampledField.from_function(g, lambda x: x ** 2 - x)
    B = Ball(c, r)
    lhs = integrate_ball(a * f + b * h, B)
    rhs = a * integrate_ball(f, B) + b * integrate_ball(h, B)
    assert lhs == pytest.approx(rhs, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(c=st.floats(-0.5, 0.5), r=st.floats(0.05, 0.4), grow=st.floats(0.0, 0.4))
def test_monotonicity(c, r, grow):
    g = Grid.cell_centered((-1, -1), (1, 1), 1 / 32)
    f = SampledField.from_function(g, lambda x, y: 1 + np.sin(3 * x) ** 2 + y ** 2)
    small = integrate_ball(f, Ball((c, 0.1), r))
    big = integrate_ball(f, Ball((c, 0.1), r + grow))
    assert small <= big + 1e-14


def test_stencil_is_symmetric_on_sphere_ties():
    g = Grid.cell_centered((-1, -1), (1, 1), 1 / 32)
    # center at a grid point, radius hitting lattice points exactly (3-4-5)
    c = (g.origin[0] + 32 * g.h, g.origin[1] + 32 * g.h)
    st_ = ball_stencil(g, Ball(c, 5 * g.h))
    m = st_.mask
    assert np.array_equal(m, m[::-1, :]) and np.array_equal(m, m.T)


def test_family_extension():
    F = BallFamily.lattice(-0.5, 0.5, 0.25, 0.05, 2 ** 0.5, 4)
    E = F.extended()
    assert len(E.centers) == 2 * len(F.centers) - 1
    assert E.count == F.count + 2
    assert E.r_min == F.r_min
    D = F.extended("down")
    assert D.r_min == pytest.approx(F.r_min / 2)


def test_family_resolution_guard(line):
    F = BallFamily([[0.0]], 2 * line.h, 2.0, 3)
    with pytest.raises(UnderResolvedBall):
        F.check_resolution(line)


@pytest.mark.parametrize("dim", [1, 2])
def test_field_io_roundtrip_bit_exact(tmp_path, dim):
    if dim == 1:
        g = Grid.cell_centered(-1.0, 1.0, 1 / 64)
        f = SampledField.from_function(g, lambda x: np.exp(x) / 3.0)
    else:
        g = Grid.cell_centered((0, 0), (1, 1), 1 / 16)
        f = half_restrict(SampledField.from_function(g, lambda x, y: np.sin(x) / 7 + y / 3))
    p = write_field(f, tmp_path / "f.csv")
    back = read_field(p)
    assert back.grid == f.grid
    assert np.array_equal(back.values, f.values)
    if f.support_mask is None:
        assert back.support_mask is None
    else:
        assert np.array_equal(back.support_mask, f.support_mask)
