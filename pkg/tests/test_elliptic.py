import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wmorrey.elliptic import problem as pr
from wmorrey.elliptic.apriori import (
    CORNER_MODES,
    NormPair,
    PreconditionFailed,
    apriori_estimate,
    default_pairs,
    homogeneous_check,
    max_principle_check,
    precondition_gate,
)
from wmorrey.elliptic.representation import gaussian_bump, offset_points, representation_check, sphere_term
from wmorrey.elliptic.seminorms import (
    Cutoff,
    LocalField,
    WeightSpec,
    adapted_family,
    caccioppoli_check,
    cutoff_check,
    interior_check,
    interpolation_check,
    interpolation_constant,
    seminorms,
    triangle_bound_check,
)
from wmorrey.elliptic.solver import (
    SolverError,
    erode,
    gradient,
    hessian,
    rounded_square,
    solve_dirichlet,
    unit_square,
)
from wmorrey.field_core import SampledField
from wmorrey.morrey import MorreyWeightFn
from wmorrey.operators import EllipticityViolated

PHI1 = MorreyWeightFn.power(1.0)
FLAT = WeightSpec(0.0)


# ---------------------------------------------------------------- solver

@pytest.mark.parametrize("name", ["laplace_sine", "smooth_variable"])
def test_manufactured_solution_converges_at_second_order(name):
    P = pr.problem_by_name(name)
    errs = [solve_dirichlet(P, n).max_error() for n in (32, 64, 128)]
    ratios = [errs[0] / errs[1], errs[1] / errs[2]]
    assert all(3.4 <= q <= 4.6 for q in ratios), ratios


def test_quadratic_in_each_variable_is_solved_exactly():
    # second differences are exact on polynomials of degree 2 in each variable
    sol = solve_dirichlet(pr.diagonal_polynomial(), 32)
    assert sol.max_error() < 1e-12


@pytest.mark.parametrize("name", ["laplace_sine", "vmo_cross", "smooth_variable"])
def test_zero_data_gives_zero_solution(name):
    assert homogeneous_check(pr.problem_by_name(name))["max_abs_u"] == 0.0


def test_residual_is_small():
    sol = solve_dirichlet(pr.smooth_variable(), 64)
    assert sol.residual < 1e-8


@pytest.mark.parametrize("name", ["vmo_diagonal", "vmo_cross"])
def test_vmo_problems_converge(name):
    P = pr.problem_by_name(name)
    u = [solve_dirichlet(P, n).u.values for n in (32, 64, 128)]
    d1 = np.abs(u[0] - u[1][::2, ::2]).max()
    d2 = np.abs(u[1] - u[2][::2, ::2]).max()
    assert d2 < d1 / 2


def test_too_coarse_mesh_is_refused():
    with pytest.raises(ValueError):
        unit_square(16)


def test_ellipticity_violation_is_raised():
    P = pr.manufactured("weak", "sin(pi*x)*sin(pi*y)", a=("1/10", "0", "1"), Lambda=2.0)
    with pytest.raises(EllipticityViolated):
        solve_dirichlet(P, 32)


def test_asymmetric_coefficients_are_rejected():
    def a(X, h=None):
        out = np.zeros(np.shape(X)[:-1] + (2, 2))
        out[..., 0, 0] = out[..., 1, 1] = 1.0
        out[..., 0, 1] = 0.1
        return out
    P = pr.EllipticProblem("asym", a, lambda X, h=None: np.ones(np.shape(X)[:-1]))
    with pytest.raises(EllipticityViolated):
        solve_dirichlet(P, 32)


def test_singular_operator_reports_solver_error():
    # c cancels the lowest eigenvalue -8 h^-2 sin^2(pi h / 2) of the discrete Laplacian
    h = 1 / 32
    c = 8 / h ** 2 * math.sin(math.pi * h / 2) ** 2
    P = pr.manufactured("resonant", "1", c=repr(c))
    with pytest.raises(SolverError, match="singular"):
        solve_dirichlet(P, 32)


def test_condition_estimate_is_recorded():
    sol = solve_dirichlet(pr.laplace_sine(), 32)
    assert 1 < sol.condition < 1e6


def test_vmo_amplitude_is_validated():
    with pytest.raises(ValueError):
        pr.vmo_cross(amplitude=1.0)
    with pytest.raises(ValueError):
        pr.problem_by_name("nope")


def test_discrete_derivatives_exact_on_quadratics():
    g = unit_square(32)
    X, Y = g.mesh()
    u = 3 * X * X - 2 * X * Y + Y * Y + X
    H = hessian(u, g.h)
    assert np.allclose(H[..., 0, 0], 6) and np.allclose(H[..., 1, 1], 2) and np.allclose(H[..., 0, 1], -2)
    G = gradient(u, g.h)
    assert np.allclose(G[..., 0], 6 * X - 2 * Y + 1) and np.allclose(G[..., 1], -2 * X + 2 * Y)


def test_masked_solve_vanishes_off_domain():
    g = unit_square(64)
    act = rounded_square(g)
    sol = solve_dirichlet(pr.laplace_sine(), 64, act)
    assert np.all(sol.u.values[~act] == 0) and sol.u.values[act].min() > 0
    assert erode(act).sum() < act.sum()


# ---------------------------------------------------------- representation

def test_sphere_terms_by_symmetry():
    assert sphere_term(0, 0) == pytest.approx(0.5, abs=1e-12)
    assert sphere_term(1, 1) == pytest.approx(0.5, abs=1e-12)
    assert abs(sphere_term(0, 1)) < 1e-12


def test_representation_formula_at_fine_mesh():
    g = unit_square(128)
    rep = representation_check(gaussian_bump(g), offset_points(g))
    assert rep.status == "PASS"
    assert rep.max_relative_error <= 0.05
    assert rep.per_pair["01"]["relative_error"] <= 0.05


def test_representation_of_zero_is_zero():
    g = unit_square(64)
    rep = representation_check(SampledField(g, np.zeros(g.shape)), offset_points(g))
    assert all(d["max_abs_error"] == 0 and d["max_abs_lhs"] == 0 for d in rep.per_pair.values())


# ------------------------------------------------------------- semi-norms

def test_seminorms_of_zero_vanish():
    L = seminorms(LocalField("zero", "0"), 2.0, PHI1, FLAT, 0.25)
    assert (L.theta0, L.theta1, L.theta2) == (0, 0, 0)


def test_seminorms_match_closed_forms():
    # with w = 1 and phi = r^-1, ||1||_{B_rho} = rho (largest sub-ball); maxima over theta = k/8
    r = 0.25
    assert seminorms(LocalField("one", "1"), 2.0, PHI1, FLAT, r).theta0 == pytest.approx(7 * r / 8, rel=1e-12)
    assert seminorms(LocalField("lin", "x"), 2.0, PHI1, FLAT, r).theta1 == pytest.approx(75 / 512 * r * r, rel=1e-12)
    L = seminorms(LocalField("sq", "x**2/2"), 2.0, PHI1, FLAT, r)
    assert L.theta2 == pytest.approx(1125 / 32768 * r ** 3, rel=1e-12)
    assert L.argmax_theta["Theta_2"] == 5 / 8


@settings(max_examples=10, deadline=None)
@given(st.floats(-5, 5).filter(lambda v: abs(v) > 1e-3))
def test_seminorms_are_homogeneous(lam):
    u = LocalField("w", "sin(3*x + y)*exp(x)")
    a = seminorms(u, 2.0, PHI1, FLAT, 0.125)
    b = seminorms(u.scaled(lam), 2.0, PHI1, FLAT, 0.125)
    for s in ("theta0", "theta1", "theta2"):
        assert getattr(b, s) == pytest.approx(abs(lam) * getattr(a, s), rel=1e-10)


def test_ball_leaving_the_square_is_refused():
    with pytest.raises(ValueError):
        seminorms(LocalField("one", "1"), 2.0, PHI1, FLAT, 0.3, center=(0.1, 0.5))


# ----------------------------------------------------------------- cut-off

@settings(max_examples=12, deadline=None)
@given(st.sampled_from([k / 8 for k in range(1, 8)]), st.sampled_from([0.25, 0.125]))
def test_cutoff_meets_its_bounds(theta, r):
    rep = cutoff_check(Cutoff((0.5, 0.5), r, theta))
    assert rep["status"] == "PASS", rep


def test_cutoff_derivatives_match_finite_differences():
    cut = Cutoff((0.5, 0.5), 0.25, 0.5)
    x = np.array([[0.5 + 0.14, 0.5 + 0.03], [0.5 - 0.1, 0.5 + 0.08]])
    _, grad, hess = cut.evaluate(x)
    e = 1e-5
    for k in range(2):
        step = np.zeros(2)
        step[k] = e
        fp, gp, _ = cut.evaluate(x + step)
        fm, gm, _ = cut.evaluate(x - step)
        assert np.allclose((fp - fm) / (2 * e), grad[:, k], atol=1e-6)
        assert np.allclose((gp - gm) / (2 * e), hess[:, :, k], atol=1e-4)


# ------------------------------------------------------- local inequalities

def test_interpolation_constant_trivial_members():
    c = interpolation_constant([LocalField("const", "3")], 2.0, PHI1, FLAT, 0.25)
    assert c["C"] == 0.0
    lin = interpolation_constant([LocalField("lin", "x + 2*y")], 2.0, PHI1, FLAT, 0.25)
    assert 0 < lin["C"] < math.inf


def test_interpolation_wave_sweep_is_stable():
    r = 0.125
    cs = [interpolation_constant([LocalField("s", f"sin({k}*(x - 0.5)/{r})")], 2.0, PHI1, FLAT, r)["C"]
          for k in (1, 2, 4)]
    assert max(cs) / min(cs) - 1 <= 0.15, cs


@pytest.mark.parametrize("pair", default_pairs(), ids=lambda p: p.name)
def test_interpolation_constant_is_r_independent(pair):
    rep = interpolation_check(2.0, pair.phi, pair.weight)
    assert rep.status == "PASS" and rep.spread <= 0.15
    res = interpolation_constant(adapted_family((0.5, 0.5), 0.125), 2.0, pair.phi, pair.weight, 0.125)
    assert min(res["min_slack"].values()) >= -1e-12


def test_caccioppoli_constant_is_r_independent():
    probs = [pr.laplace_sine(), pr.vmo_cross()]
    rep = caccioppoli_check(probs, 2.0, PHI1, FLAT)
    assert rep.status == "PASS"
    assert set(rep.extra["per_problem"]) == {"laplace_sine", "vmo_cross"}


def test_interior_ratio_is_bounded_and_stable():
    rep = interior_check(pr.laplace_sine(), 2.0, PHI1, FLAT)
    assert rep.status == "PASS"
    assert all(0 < v < 1 for v in rep.per_r.values())


@pytest.mark.parametrize("u", ["sin(3*x)*cos(2*y)", "x**2 - y**3"])
def test_triangle_bound(u):
    rep = triangle_bound_check(pr.smooth_variable(), LocalField("u", u), 2.0, PHI1, FLAT, 0.25)
    assert rep["status"] == "PASS" and rep["C"] >= 1


# ------------------------------------------------------------ a priori

def test_gate_refuses_constant_phi():
    with pytest.raises(PreconditionFailed):
        precondition_gate(NormPair("one", MorreyWeightFn.one(), FLAT))


def test_gate_accepts_default_pairs():
    for pair in default_pairs():
        assert precondition_gate(pair)["status"] == "PASS"


def test_bypassed_gate_is_recorded():
    rep = apriori_estimate(pr.laplace_sine(), NormPair("one", MorreyWeightFn.one(), FLAT), meshes=(32, 64),
                           enforce_gate=False)
    assert rep.gate["status"] == "FAIL" and any("bypassed" in f for f in rep.flags)
    assert all(math.isfinite(c) for c in rep.constants) and rep.spread <= 0.15


@pytest.mark.parametrize("pair", default_pairs(), ids=lambda p: p.name)
def test_apriori_constant_is_mesh_stable(pair):
    rep = apriori_estimate(pr.vmo_diagonal(), pair)
    assert rep.status == "PASS" and rep.spread <= 0.15
    assert rep.boundary_layer_excluded


def test_apriori_constant_is_invariant_under_data_scaling():
    pair = default_pairs()[0]
    a = apriori_estimate(pr.laplace_sine(), pair, meshes=(32,))
    b = apriori_estimate(pr.scaled_data(pr.laplace_sine(), 3.7), pair, meshes=(32,))
    assert b.constants[0] == pytest.approx(a.constants[0], rel=1e-12)


@pytest.mark.parametrize("corner", CORNER_MODES)
def test_corner_variants_are_reported(corner):
    rep = apriori_estimate(pr.laplace_sine(), default_pairs()[0], meshes=(32, 64), corner=corner)
    assert rep.corner == corner and rep.status == "PASS"


def test_unknown_corner_mode_raises():
    with pytest.raises(ValueError):
        apriori_estimate(pr.laplace_sine(), default_pairs()[0], corner="hexagon")


@pytest.mark.parametrize("name,guaranteed", [("laplace_sine", True), ("vmo_diagonal", True),
                                             ("vmo_cross", False)])
def test_discrete_maximum_principle(name, guaranteed):
    rep = max_principle_check(pr.problem_by_name(name))
    assert rep["status"] == "PASS" and rep["m_matrix_conditions"] == guaranteed
