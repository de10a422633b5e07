import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wmorrey.field_core import Ball, BallFamily, Grid, SampledField, half_restrict, mean_ball
from wmorrey.morrey import MorreyWeightFn
from wmorrey.operators import (
    EllipticityViolated,
    KernelError,
    ReflectionMap,
    commutator_apply,
    cz_apply,
    geometric_inequality_check,
    hilbert,
    jump_cells,
    local_commutator_ratio,
    local_growth_ratio,
    maximal,
    nonsingular_apply,
    norm_ratio_estimate,
    pv_cutoff_consistency,
    random_spd_field,
    reflect_bounds_check,
    riesz_quadratic,
    support_sweep,
    tilde,
)
from wmorrey.operators import kernels, ratios
from wmorrey.operators.reflection import nonsingular_sublinearity
from wmorrey.operators.singular import commutator_identity_gap, sublinearity_constant
from wmorrey.weights import Weight

LINE = Grid.cell_centered(-2.0, 2.0, 2.0 ** -10)


def indicator(grid, lo, hi):
    return SampledField.from_function(grid, lambda x: ((x > lo) & (x < hi)).astype(float))


@pytest.fixture(scope="module")
def hilbert_of_unit_indicator():
    f = indicator(LINE, -1, 1)
    return f, cz_apply(hilbert(), f)


# -- kernels -----------------------------------------------------------------


@pytest.mark.parametrize("name", sorted(kernels.KERNELS))
def test_registered_kernels_pass_checks(name):
    chk = kernels.kernel_by_name(name).check()
    assert chk.ok
    assert chk.homogeneity_error < 1e-8
    assert abs(chk.sphere_mean) < 1e-8


def test_unbalanced_kernel_refused():
    f = indicator(LINE, -1, 1)
    with pytest.raises(KernelError):
        cz_apply(kernels.unbalanced_1d(), f)
    with pytest.raises(KernelError):
        kernels.kernel_by_name("no_such_kernel")


# -- singular integrals ------------------------------------------------------


def test_hilbert_indicator_oracle(hilbert_of_unit_indicator):
    _, Hf = hilbert_of_unit_indicator
    x = LINE.axes()[0]
    far = np.minimum(np.abs(x - 1), np.abs(x + 1)) >= 5 * LINE.h
    exact = np.log(np.abs((x[far] + 1) / (x[far] - 1))) / math.pi
    rel = np.abs(Hf.values[far] - exact) / np.abs(exact)
    assert rel.max() <= 0.02


def test_zero_field_gives_exact_zero():
    assert np.all(cz_apply(hilbert(), SampledField.constant(LINE, 0.0)).values == 0.0)


def test_translation_by_cells_commutes():
    g = Grid.cell_centered(-1.0, 1.0, 2.0 ** -7)
    x = g.axes()[0]
    base = np.exp(-((x + 0.2) / 0.1) ** 2) * (np.abs(x + 0.2) < 0.4)
    m = 13
    f = SampledField(g, base)
    fs = SampledField(g, np.roll(base, m))
    a, b = cz_apply(hilbert(), f).values, cz_apply(hilbert(), fs).values
    np.testing.assert_allclose(b[m:], a[:-m], rtol=1e-10, atol=1e-13)


def test_riesz_gaussian_against_refined_grid():
    def gauss(grid):
        return SampledField.from_function(grid, lambda x, y: np.exp(-(x * x + y * y) / (2 * 0.15 ** 2)))

    coarse, fine = Grid.nodes((-1, -1), (1, 1), 64), Grid.nodes((-1, -1), (1, 1), 256)
    rng = np.random.default_rng(3)
    pts = coarse.points()[rng.choice(coarse.points().shape[0], 60, replace=False)]
    pts = pts[np.abs(pts).max(axis=1) < 0.6]
    K = riesz_quadratic()
    c = cz_apply(K, gauss(coarse), pts)
    f = cz_apply(K, gauss(fine), pts)
    assert np.abs(c - f).max() / np.abs(f).max() <= 0.03


def test_pv_cutoffs_agree_within_quadrature_bound():
    g = Grid.cell_centered(-1.0, 1.0, 2.0 ** -8)
    f = SampledField.from_function(g, lambda x: np.exp(-(x / 0.2) ** 2))
    pts = g.points()[[200, 256, 300]]
    rep = pv_cutoff_consistency(hilbert(), f, pts, grad_bound=math.sqrt(2 / math.e) / 0.2)
    assert rep["status"] == "PASS"


def test_sublinearity_constant_of_hilbert_is_one_over_pi():
    g = Grid.cell_centered(-1.0, 1.0, 2.0 ** -8)
    rng = np.random.default_rng(5)
    for _, f in ratios.test_fields(g, rng, n_each=2, center_range=0.3, scales=(1 / 16, 1 / 8)):
        outside = np.nonzero(f.values == 0)[0]
        Tf = cz_apply(hilbert(), f).values
        assert sublinearity_constant(Tf, f, outside) <= (1 + 1e-12) / math.pi


# -- commutators -------------------------------------------------------------


def test_commutator_with_constant_vanishes(hilbert_of_unit_indicator):
    f, _ = hilbert_of_unit_indicator
    c = commutator_apply(SampledField.constant(LINE, 3.7), hilbert(), f)
    assert np.abs(c.values).max() <= 1e-10


def test_commutator_identity_with_sign():
    f = indicator(LINE, 0, 1)
    a = SampledField.from_function(LINE, np.sign)
    assert commutator_identity_gap(a, hilbert(), f) <= 1e-8


def test_commutator_with_x_is_two_over_pi(hilbert_of_unit_indicator):
    f, _ = hilbert_of_unit_indicator
    a = SampledField.from_function(LINE, lambda x: x)
    c = commutator_apply(a, hilbert(), f).values
    assert np.abs(c / (2 / math.pi) - 1).max() <= 0.01


def test_jump_cells_flag_sign_discontinuity():
    a = SampledField.from_function(LINE, np.sign)
    i = LINE.size[0] // 2
    assert jump_cells(a) == [(i - 1,), (i,)]
    assert jump_cells(SampledField.from_function(LINE, lambda x: x)) == []


def test_commutator_ratio_linear_in_a():
    g = Grid.cell_centered(-1.0, 1.0, 2.0 ** -8)
    sgn = SampledField.from_function(g, np.sign)
    fields = ratios.test_fields(g, np.random.default_rng(2), n_each=2, center_range=0.3, scales=(1 / 16, 1 / 8))
    F = BallFamily.lattice(-0.25, 0.25, 1 / 16, 1 / 32, 2.0, 3)
    w, phi = Weight.uniform(g), MorreyWeightFn.power(0.5)
    r1 = norm_ratio_estimate(lambda f: commutator_apply(sgn, hilbert(), f), 2.0, phi, phi, w, fields, F)
    r2 = norm_ratio_estimate(lambda f: commutator_apply(sgn * 2.0, hilbert(), f), 2.0, phi, phi, w, fields, F)
    assert r2.sup_ratio / r1.sup_ratio == pytest.approx(2.0, rel=0.03)


# -- maximal operator --------------------------------------------------------


@pytest.fixture(scope="module")
def maximal_of_unit_indicator():
    g = Grid.cell_centered(-4.0, 4.0, 2.0 ** -8)
    F = BallFamily.spanning([[0.5], [2.0]], 1 / 64, 4.0, 2 ** (1 / 16))
    return g, maximal(indicator(g, 0, 1), F)


def test_maximal_far_point(maximal_of_unit_indicator):
    g, M = maximal_of_unit_indicator
    i = g.index_of([2.0 + g.h / 2])[0]
    assert M.values[i] == pytest.approx(0.25, rel=0.03)


def test_maximal_inside_support(maximal_of_unit_indicator):
    g, M = maximal_of_unit_indicator
    i = g.index_of([0.5 + g.h / 2])[0]
    assert abs(M.values[i] - 1.0) <= g.h


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000), dim=st.sampled_from([1, 2]))
def test_maximal_dominates_every_family_mean(seed, dim):
    rng = np.random.default_rng(seed)
    g = Grid.cell_centered([-1.0] * dim, [1.0] * dim, 1 / 32)
    f = SampledField(g, rng.random(g.shape))
    F = BallFamily.lattice([-0.5] * dim, [0.5] * dim, 0.25, 1 / 8, 2.0, 3)
    M = maximal(f, F).values
    pts = g.points()
    for k in rng.choice(len(pts), 5, replace=False):
        idx = np.unravel_index(k, g.shape)
        means = [mean_ball(f, Ball(tuple(pts[k]), r)) for r in F.radii]
        assert M[idx] == pytest.approx(max(means), abs=1e-12)


# -- reflection --------------------------------------------------------------


def test_identity_reflection_is_mirror():
    R = ReflectionMap.identity(2)
    x = np.random.default_rng(0).uniform(0, 1, (50, 2))
    assert np.array_equal(R(x), tilde(x))
    b = reflect_bounds_check(R, np.random.default_rng(1), n_samples=2000)
    assert b.C1 == pytest.approx(1.0, abs=1e-12) and b.C2 == pytest.approx(1.0, abs=1e-12)


def test_boundary_points_are_fixed():
    R = random_spd_field(np.random.default_rng(4), 4.0)
    x = np.array([[0.3, 0.0], [-0.8, 0.0]])
    np.testing.assert_array_equal(R(x), x)


def test_ellipticity_violation_raises():
    R = ReflectionMap.constant(np.array([[1.0, 0.0], [0.0, 0.1]]), 4.0)
    with pytest.raises(EllipticityViolated, match="ellipticity violated"):
        R(np.array([[0.1, 0.5]]))


@pytest.mark.parametrize("seed", [0, 1])
def test_random_spd_reflection_bounds_stable(seed):
    R = random_spd_field(np.random.default_rng(100 + seed), 4.0)
    b = reflect_bounds_check(R, np.random.default_rng(seed))
    assert 0 < b.C1 <= b.C2 < math.inf
    assert b.maps_to_lower
    assert b.drift <= 0.05


def test_random_spd_field_eigenvalues_in_range():
    R = random_spd_field(np.random.default_rng(8), 4.0)
    y = np.random.default_rng(9).uniform(-1, 1, (500, 2))
    ev = np.linalg.eigvalsh(R.coeff(y))
    assert ev.min() >= 0.25 - 1e-12 and ev.max() <= 4.0 + 1e-12


def test_geometric_inequality():
    rep = geometric_inequality_check(np.random.default_rng(0))
    assert rep["status"] == "PASS"


# -- nonsingular half-space operators ----------------------------------------


@pytest.fixture(scope="module")
def half_line_problem():
    g = Grid.cell_centered(-4.0, 4.0, 2.0 ** -8)
    f = half_restrict(indicator(g, 1, 2))
    return g, f, nonsingular_apply(hilbert(), ReflectionMap.identity(1), f)


def test_nonsingular_hilbert_oracle(half_line_problem):
    g, _, Tf = half_line_problem
    x = g.axes()[0]
    up = x > 0
    exact = -np.log((x[up] + 2) / (x[up] + 1)) / math.pi
    assert np.abs(Tf.values[up] / exact - 1).max() <= 0.01


def test_nonsingular_needs_half_space_mask():
    g = Grid.cell_centered(-1.0, 1.0, 1 / 64)
    with pytest.raises(ValueError):
        nonsingular_apply(hilbert(), ReflectionMap.identity(1), indicator(g, 0.2, 0.4))
    zero = half_restrict(SampledField.constant(g, 0.0))
    assert np.all(nonsingular_apply(hilbert(), ReflectionMap.identity(1), zero).values == 0.0)


def test_nonsingular_sublinearity(half_line_problem):
    g, f, Tf = half_line_problem
    up = np.nonzero(g.axes()[0] > 0)[0]
    assert nonsingular_sublinearity(Tf.values, f, up) <= (1 + 1e-12) / math.pi


def test_local_growth_ratio_stable_over_r(half_line_problem):
    g, f, Tf = half_line_problem
    w = Weight.power_weight(g, 0.5, 0.0)
    vals = [local_growth_ratio(Tf, f, w, 0.5, 2.0 ** -k, 2.0) for k in range(2, 6)]
    assert max(vals) / min(vals) <= 1.05


# -- norm ratios -------------------------------------------------------------


def test_identity_operator_ratio_is_one():
    g = Grid.cell_centered(-1.0, 1.0, 2.0 ** -7)
    fields = ratios.test_fields(g, np.random.default_rng(0), n_each=2)
    F = BallFamily.lattice(-0.5, 0.5, 1 / 8, 1 / 16, 2.0, 3)
    rep = norm_ratio_estimate(lambda f: f, 2.0, MorreyWeightFn.power(0.5), MorreyWeightFn.power(0.5),
                              Weight.power_weight(g, 0.5, 0.0), fields, F)
    assert all(v == 1.0 for v in rep.per_field.values())
    assert rep.drift == 0.0


def test_test_family_has_varied_kinds():
    g = Grid.cell_centered(-1.0, 1.0, 2.0 ** -7)
    fields = ratios.test_fields(g, np.random.default_rng(0))
    assert len(fields) >= 20
    assert {n.split("_")[0] for n, _ in fields} == {"bump", "indicator", "oscillatory", "noise"}
    again = ratios.test_fields(g, np.random.default_rng(0))
    assert all(np.array_equal(a.values, b.values) for (_, a), (_, b) in zip(fields, again))


def _dual_sweep(alpha):
    g = Grid.cell_centered(-1.0, 1.0, 2.0 ** -10)
    F = BallFamily.lattice(-0.5, 0.5, 1 / 32, 2.0 ** -7, math.sqrt(2), 11)
    w = Weight.power_weight(g, alpha, 0.0)
    phi = MorreyWeightFn.power((1 + alpha) / 2)
    return [v for _, v in support_sweep(lambda f: cz_apply(hilbert(), f), 2.0, phi, w, F, g, s0=0.25)]


def test_dichotomy_sweep_bounded_for_a2_weight():
    vals = _dual_sweep(0.5)
    assert max(vals) / min(vals) <= 1.1


def test_dichotomy_sweep_grows_for_non_a2_weight():
    vals = _dual_sweep(3.0)
    assert vals[-1] / vals[0] >= 2.0


def test_vmo_commutator_local_ratio_shrinks():
    g = Grid.cell_centered(-1.0, 1.0, 2.0 ** -10)
    w, phi = Weight.power_weight(g, 0.5, 0.0), MorreyWeightFn.power(0.75)

    def profile(a):
        C = lambda f, pts: commutator_apply(a, hilbert(), f, pts)
        return [max(local_commutator_ratio(C, g, 0.0, 2.0 ** -k, 2.0, phi, w).values()) for k in range(1, 6)]

    vmo = profile(SampledField.from_function(g, lambda x: np.sqrt(np.abs(x))))
    assert all(b <= a * 1.05 for a, b in zip(vmo, vmo[1:]))
    assert vmo[-1] < 0.5 * vmo[0]
    jump = profile(SampledField.from_function(g, np.sign))
    assert jump[-1] > 0.8 * jump[0]
