"""Local Morrey norms on balls, the semi-norms Theta_s, the cut-off function
and the local inequalities built from them (interpolation, Caccioppoli,
interior estimate).

Local computations run on an auxiliary cell-centered grid covering the ball
with spacing r/64, on which test functions are sampled exactly together with
their first and second derivatives.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import sympy

from ..field_core import BallFamily, Grid, SampledField
from ..morrey import MorreyWeightFn, family_stencils, morrey_norm
from ..weights import Weight
from .problem import EllipticProblem

THETAS = tuple(k / 8 for k in range(1, 8))
CELLS_PER_RADIUS = 64
STABILITY_TOL = 0.15

_X, _Y = sympy.symbols("x y")


@dataclass(frozen=True)
class WeightSpec:
    """|x - x0|^alpha, rebuilt on whatever grid a norm is evaluated on."""

    alpha: float = 0.0
    x0: tuple = (0.5, 0.5)

    def on(self, grid: Grid) -> Weight:
        return Weight.power_weight(grid, self.alpha, tuple(self.x0))

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "x0": list(self.x0)}


@dataclass(frozen=True)
class LocalField:
    """A smooth function with exact derivatives: u, Du (..., 2), D^2u (..., 2, 2)."""

    name: str
    expr: str
    scale: float = 1.0

    def _fns(self):
        e = sympy.sympify(self.expr)
        xs = (_X, _Y)
        u = sympy.lambdify(xs, e, "numpy")
        g = [sympy.lambdify(xs, sympy.diff(e, v), "numpy") for v in xs]
        H = [[sympy.lambdify(xs, sympy.diff(e, a, b), "numpy") for b in xs] for a in xs]
        return u, g, H

    def evaluate(self, X):
        u, g, H = _cached_fns(self.expr)
        x, y = X[..., 0], X[..., 1]
        shape = X.shape[:-1]
        val = np.broadcast_to(u(x, y), shape) * self.scale
        grad = np.stack([np.broadcast_to(gi(x, y), shape) for gi in g], -1) * self.scale
        hess = np.empty(shape + (2, 2))
        for i in range(2):
            for j in range(2):
                hess[..., i, j] = np.broadcast_to(H[i][j](x, y), shape)
        return val, grad, hess * self.scale

    def scaled(self, lam: float) -> "LocalField":
        return LocalField(self.name, self.expr, self.scale * lam)


_FN_CACHE: dict = {}


def _cached_fns(expr: str):
    if expr not in _FN_CACHE:
        _FN_CACHE[expr] = LocalField("", expr)._fns()
    return _FN_CACHE[expr]


def adapted_family(center, r: float) -> list:
    """Test functions living at the scale of B_r(center), plus two fixed ones.

    In X = (x - x0)/r, Y = (y - y0)/r: harmonic and non-harmonic quadratics,
    a linear function, plane waves of frequency 1, 2, 4, and two off-center
    bumps.  The fixed members do not rescale with r.
    """
    X = f"((x - {center[0]!r})/{r!r})"
    Y = f"((y - {center[1]!r})/{r!r})"
    fam = {
        "harmonic_diff": f"{X}**2 - {Y}**2",
        "harmonic_prod": f"{X}*{Y}",
        "quadratic": f"{X}**2 + 2*{Y}**2 + {X}",
        "linear": f"{X} + 2*{Y} + 1/2",
        "bump_narrow": f"exp(-(({X} - 1/5)**2 + {Y}**2)/(2*(1/4)**2))",
        "bump_wide": f"exp(-(({X} - 1/5)**2 + {Y}**2)/(2*(1/2)**2))",
        "fixed_sine": "sin(pi*x)*sin(pi*y)",
        "fixed_polynomial": "x*(1 - x)*y*(1 - y)",
    }
    for k in (1, 2, 4):
        fam[f"wave_{k}"] = f"sin({k}*({X} + {Y}/2) + 3/10)"
    return [LocalField(n, e) for n, e in fam.items()]


def local_grid(center, r: float, per_radius: int = CELLS_PER_RADIUS) -> Grid:
    c = np.asarray(center, float)
    return Grid.cell_centered(c - r, c + r, r / per_radius)


def _check_inside_unit_square(center, r):
    c = np.asarray(center, float)
    if np.any(c - r < -1e-12) or np.any(c + r > 1 + 1e-12):
        raise ValueError(f"ball B_{r:g}({tuple(c)}) leaves the unit square")


@dataclass
class _Local:
    """Sampled u, |Du|, |D^2u| (and Lu) on a local grid, with a cache of sub-ball stencils."""

    grid: Grid
    X: np.ndarray
    w: Weight
    stencils: dict = field(default_factory=dict)

    @classmethod
    def build(cls, center, r, wspec: WeightSpec):
        g = local_grid(center, r)
        return cls(g, np.stack(g.mesh(), -1), wspec.on(g))

    def norm(self, values, p, phi, center, rho) -> float:
        """||values||_{p,phi,w;B_rho(center)}: sub-balls of radii rho/2 and rho
        centered on a 3x3 lattice of spacing rho/2, all intersected with the ball."""
        key = (tuple(np.round(center, 14)), round(rho, 14))
        if key not in self.stencils:
            offs = [(i * rho / 2, j * rho / 2) for i in (-1, 0, 1) for j in (-1, 0, 1)]
            F = BallFamily.spanning([(center[0] + a, center[1] + b) for a, b in offs], rho / 2, rho, 2.0)
            mask = np.hypot(self.X[..., 0] - center[0], self.X[..., 1] - center[1]) < rho * (1 - 1e-9)
            self.stencils[key] = (F, family_stencils(self.grid, F), mask)
        F, st, mask = self.stencils[key]
        return morrey_norm(SampledField(self.grid, values), p, phi, self.w, F, stencils=st, domain=mask).value


def _magnitudes(u, grad, hess):
    return np.abs(u), np.sqrt((grad ** 2).sum(-1)), np.sqrt((hess ** 2).sum((-1, -2)))


@dataclass
class SeminormLedger:
    r: float
    theta0: float
    theta1: float
    theta2: float
    thetas: tuple = THETAS
    argmax_theta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"r": self.r, "Theta_0": self.theta0, "Theta_1": self.theta1, "Theta_2": self.theta2,
                "theta_grid": list(self.thetas), "argmax_theta": self.argmax_theta}


def _seminorms_local(loc: _Local, mags, p, phi, r, center) -> SeminormLedger:
    vals, arg = [], {}
    for s, m in enumerate(mags):
        best, bt = 0.0, None
        for t in THETAS:
            v = (t * (1 - t) * r) ** s * loc.norm(m, p, phi, center, t * r)
            if v > best:
                best, bt = v, t
        vals.append(best)
        arg[f"Theta_{s}"] = bt
    return SeminormLedger(r, vals[0], vals[1], vals[2], THETAS, arg)


def seminorms(u: LocalField, p: float, phi: MorreyWeightFn, w: WeightSpec, r: float,
              center=(0.5, 0.5)) -> SeminormLedger:
    """Theta_s = max over theta of [theta (1 - theta) r]^s ||D^s u||_{p,phi,w;B_{theta r}}, s = 0, 1, 2."""
    _check_inside_unit_square(center, r)
    loc = _Local.build(center, r, w)
    return _seminorms_local(loc, _magnitudes(*u.evaluate(loc.X)), p, phi, r, center)


# ---------------------------------------------------------------------------
# cut-off


def _smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t ** 3 * (10 - 15 * t + 6 * t * t)


SMOOTHSTEP_D1 = 1.875               # max S'
SMOOTHSTEP_D2 = 10 / math.sqrt(3)   # max |S''|


@dataclass(frozen=True)
class Cutoff:
    """eta = 1 on B_{theta r}, 0 off B_{theta' r}, theta' = theta (3 - theta)/2,
    with a quintic smoothstep in between (C^2, piecewise polynomial in |x - x0|)."""

    center: tuple
    r: float
    theta: float

    @property
    def inner(self) -> float:
        return self.theta * self.r

    @property
    def outer(self) -> float:
        return self.theta * (3 - self.theta) / 2 * self.r

    def bounds(self) -> tuple:
        """Constants C_s with |D^s eta| <= C_s [theta (1 - theta) r]^-s.

        The transition width is d = theta (1 - theta) r / 2 and the inner
        radius is at least 2d, so |eta'| <= S'/d and the Hessian is bounded
        by hypot(S'', S'/2) / d^2.
        """
        return (1.0, 2 * SMOOTHSTEP_D1, 4 * math.hypot(SMOOTHSTEP_D2, SMOOTHSTEP_D1 / 2))

    def evaluate(self, X):
        X = np.asarray(X, float)
        d = self.outer - self.inner
        dx = X - np.asarray(self.center)
        rho = np.sqrt((dx ** 2).sum(-1))
        t = (rho - self.inner) / d
        tc = np.clip(t, 0, 1)
        eta = 1 - _smoothstep(t)
        s1 = 30 * tc ** 2 * (1 - tc) ** 2
        s2 = 60 * tc * (1 - tc) * (1 - 2 * tc)
        dpsi = -s1 / d
        d2psi = -s2 / (d * d)
        with np.errstate(invalid="ignore", divide="ignore"):
            e = np.where(rho[..., None] > 0, dx / rho[..., None], 0.0)
            over = np.where(rho > 0, dpsi / rho, 0.0)
        grad = dpsi[..., None] * e
        eye = np.eye(2)
        hess = d2psi[..., None, None] * e[..., :, None] * e[..., None, :] + over[..., None, None] * (
            eye - e[..., :, None] * e[..., None, :])
        return eta, grad, hess


def cutoff_check(cut: Cutoff, per_radius: int = 256) -> dict:
    """Evaluate eta on a fine grid: support, plateau and derivative bounds."""
    R = cut.outer * 1.1
    g = local_grid(cut.center, R, per_radius)
    X = np.stack(g.mesh(), -1)
    eta, grad, hess = cut.evaluate(X)
    rho = np.hypot(X[..., 0] - cut.center[0], X[..., 1] - cut.center[1])
    scale = cut.theta * (1 - cut.theta) * cut.r
    measured = (float(np.abs(eta).max()), float(np.sqrt((grad ** 2).sum(-1)).max() * scale),
                float(np.sqrt((hess ** 2).sum((-1, -2))).max() * scale ** 2))
    bounds = cut.bounds()
    plateau = bool(np.all(eta[rho <= cut.inner] == 1.0))
    support = bool(np.all(eta[rho >= cut.outer] == 0.0))
    ok = plateau and support and all(m <= b * (1 + 1e-12) for m, b in zip(measured, bounds))
    return {"status": "PASS" if ok else "FAIL", "plateau": plateau, "support": support,
            "measured_constants": list(measured), "bounds": list(bounds)}


# ---------------------------------------------------------------------------
# local inequalities


def _spread(vals) -> float:
    vals = [v for v in vals if v > 0]
    return max(vals) / min(vals) - 1 if vals else 0.0


@dataclass
class LocalConstantReport:
    name: str
    per_r: dict
    per_field: dict
    extra: dict = field(default_factory=dict)

    @property
    def spread(self) -> float:
        return _spread(list(self.per_r.values()))

    @property
    def status(self) -> str:
        finite = all(math.isfinite(v) for v in self.per_r.values())
        return "PASS" if finite and self.spread <= STABILITY_TOL else "FAIL"

    def to_dict(self) -> dict:
        return {"name": self.name, "status": self.status, "spread": self.spread,
                "constants": {str(k): v for k, v in self.per_r.items()},
                "per_field": {str(k): v for k, v in self.per_field.items()}, **self.extra}


def interpolation_constant(family, p, phi, w: WeightSpec, r, center=(0.5, 0.5), deltas=None) -> dict:
    """Smallest C with Theta_1 <= delta Theta_2 + (C/delta) Theta_0 for every
    member and every delta of the grid."""
    _check_inside_unit_square(center, r)
    deltas = tuple(2.0 ** -k for k in range(1, 6)) if deltas is None else tuple(deltas)
    loc = _Local.build(center, r, w)
    led = {u.name: _seminorms_local(loc, _magnitudes(*u.evaluate(loc.X)), p, phi, r, center) for u in family}
    per_delta, per_field, flags = {}, {}, []
    for d in deltas:
        best = 0.0
        for name, L in led.items():
            excess = L.theta1 - d * L.theta2
            if excess <= 0:
                c = 0.0
            elif L.theta0 == 0:
                c = math.inf
                flags.append(f"{name}: Theta_0 = 0 with Theta_1 > delta Theta_2 at delta={d:g}")
            else:
                c = d * excess / L.theta0
            per_field[name] = max(per_field.get(name, 0.0), c)
            best = max(best, c)
        per_delta[d] = best
    C = max(per_delta.values())
    slack = {name: min(d * L.theta2 + C / d * L.theta0 - L.theta1 for d in deltas) for name, L in led.items()}
    return {"C": C, "per_delta": per_delta, "per_field": per_field, "min_slack": slack,
            "ledgers": {n: L.to_dict() for n, L in led.items()}, "flags": flags}


def interpolation_check(p, phi, w: WeightSpec, radii=(0.25, 0.125, 0.0625), center=(0.5, 0.5),
                        deltas=None, family_fn=adapted_family) -> LocalConstantReport:
    per_r, per_field = {}, {}
    for r in radii:
        res = interpolation_constant(family_fn(center, r), p, phi, w, r, center, deltas)
        per_r[r] = res["C"]
        per_field[r] = res["per_field"]
    return LocalConstantReport("interpolation", per_r, per_field)


def caccioppoli_constant(P: EllipticProblem, family, p, phi, w: WeightSpec, r, center=(0.5, 0.5)) -> dict:
    """max over members of ||D^2u||_{B_{r/2}} / (||Lu||_{B_r} + r^-2 ||u||_{B_r})."""
    _check_inside_unit_square(center, r)
    loc = _Local.build(center, r, w)
    per = {}
    for u in family:
        val, grad, hess = u.evaluate(loc.X)
        Lu = P.apply(loc.X, val, grad, hess)
        num = loc.norm(_magnitudes(val, grad, hess)[2], p, phi, center, r / 2)
        den = loc.norm(np.abs(Lu), p, phi, center, r) + loc.norm(np.abs(val), p, phi, center, r) / (r * r)
        per[u.name] = num / den if den > 0 else (0.0 if num == 0 else math.inf)
    return {"C": max(per.values()), "per_field": per}


def caccioppoli_check(problems, p, phi, w: WeightSpec, radii=(0.25, 0.125, 0.0625), center=(0.5, 0.5),
                      family_fn=adapted_family) -> LocalConstantReport:
    """Constant per r = max over the problem suite; per-problem spreads reported too."""
    per_r, per_field, per_problem = {}, {}, {}
    for P in problems:
        row = {}
        for r in radii:
            res = caccioppoli_constant(P, family_fn(center, r), p, phi, w, r, center)
            row[r] = res["C"]
            per_field[(P.name, r)] = res["per_field"]
        per_problem[P.name] = {"constants": {str(k): v for k, v in row.items()}, "spread": _spread(row.values())}
        for r, v in row.items():
            per_r[r] = max(per_r.get(r, 0.0), v)
    return LocalConstantReport("caccioppoli", per_r, per_field, {"per_problem": per_problem})


def interior_ratio(P: EllipticProblem, family, p, phi, w: WeightSpec, r, center=(0.5, 0.5)) -> dict:
    """max over members of Theta_2 / (r^2 ||Lu||_{B_r} + Theta_1 + Theta_0)."""
    _check_inside_unit_square(center, r)
    loc = _Local.build(center, r, w)
    per = {}
    for u in family:
        val, grad, hess = u.evaluate(loc.X)
        L = _seminorms_local(loc, _magnitudes(val, grad, hess), p, phi, r, center)
        Lu = P.apply(loc.X, val, grad, hess)
        den = r * r * loc.norm(np.abs(Lu), p, phi, center, r) + L.theta1 + L.theta0
        per[u.name] = L.theta2 / den if den > 0 else (0.0 if L.theta2 == 0 else math.inf)
    return {"C": max(per.values()), "per_field": per}


def interior_check(P: EllipticProblem, p, phi, w: WeightSpec, radii=(0.25, 0.125, 0.0625), center=(0.5, 0.5),
                   family_fn=adapted_family) -> LocalConstantReport:
    per_r, per_field = {}, {}
    for r in radii:
        res = interior_ratio(P, family_fn(center, r), p, phi, w, r, center)
        per_r[r] = res["C"]
        per_field[r] = res["per_field"]
    return LocalConstantReport("interior", per_r, per_field)


def triangle_bound_check(P: EllipticProblem, u: LocalField, p, phi, w: WeightSpec, r, center=(0.5, 0.5)) -> dict:
    """||a:D^2u|| <= max(1, |b|, |c|) (||Lu|| + ||Du|| + ||u||) on B_r."""
    loc = _Local.build(center, r, w)
    val, grad, hess = u.evaluate(loc.X)
    s = P.sample(loc.X)
    principal = np.einsum("...ij,...ij->...", s["a"], hess)
    Lu = P.apply(loc.X, val, grad, hess)
    mags = _magnitudes(val, grad, hess)
    C = P.sup_lower_order(loc.X)
    lhs = loc.norm(np.abs(principal), p, phi, center, r)
    rhs = C * (loc.norm(np.abs(Lu), p, phi, center, r) + loc.norm(mags[1], p, phi, center, r)
               + loc.norm(mags[0], p, phi, center, r))
    return {"status": "PASS" if lhs <= rhs * (1 + 1e-12) else "FAIL", "lhs": lhs, "rhs": rhs, "C": C}
