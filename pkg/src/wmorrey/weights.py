"""Muckenhoupt weights: w-measure, A_p characteristic and structural checks."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from .field_core import (
    Ball,
    BallFamily,
    Grid,
    SampledField,
    UnderResolvedBall,
    ball_stencil,
    resolved_balls,
)

OVERFLOW_GUARD = 1e30


class NotInAp(ArithmeticError):
    pass


# ---------------------------------------------------------------------------
# analytic power-law helpers


def _prim_abs_power(t, g):
    """Primitive of |t|^g (g > -1), odd in t."""
    t = np.asarray(t, float)
    return np.sign(t) * np.abs(t) ** (g + 1) / (g + 1)


def _edge_integral(d, t1, t2, g):
    """Integral of |y|^g over the triangle spanned by the origin and an edge.

    The edge lies on a line at distance ``d`` from the origin and runs over
    tangential coordinates ``[t1, t2]``.
    """
    if d <= 0 or t2 <= t1:
        return 0.0
    f = lambda phi: (d / math.cos(phi)) ** (g + 2) / (g + 2)
    val, _ = integrate.quad(f, math.atan2(t1, d), math.atan2(t2, d), limit=200)
    return val


def square_power_mean(offset, h, g):
    """Mean of |y|^g over the square of side h centered at ``offset``.

    Only meaningful when the origin lies in the closed square (otherwise the
    midpoint value is accurate); uses a fan of triangles about the origin.
    """
    if g <= -2:
        return math.inf
    ox, oy = float(offset[0]), float(offset[1])
    a, b = ox - h / 2, ox + h / 2
    c, d = oy - h / 2, oy + h / 2
    total = (
        _edge_integral(b, c, d, g)
        + _edge_integral(-a, c, d, g)
        + _edge_integral(d, a, b, g)
        + _edge_integral(-c, a, b, g)
    )
    return total / (h * h)


@lru_cache(maxsize=4096)
def unit_ball_power_integral_2d(q: float, alpha: float) -> float:
    """Integral of |y|^alpha over the unit disk centered at distance q from 0."""
    nu = alpha / 2.0

    def ring(rho):
        A = q * q + rho * rho
        if A == 0.0:
            return 0.0
        z = min((2 * q * rho / A) ** 2, 1.0)
        return rho * 2 * math.pi * A ** nu * special.hyp2f1(-nu / 2, (1 - nu) / 2, 1.0, z)

    pts = [q] if 0 < q < 1 else None
    val, _ = integrate.quad(ring, 0.0, 1.0, points=pts, limit=200)
    return val


@dataclass(frozen=True)
class PowerLaw:
    """w(x) = coef * |x - x0|^alpha."""

    alpha: float
    x0: tuple
    coef: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "x0", tuple(float(v) for v in np.atleast_1d(self.x0)))

    @property
    def dim(self):
        return len(self.x0)

    def power_at(self, pts, beta):
        r = np.sqrt(sum((p - c) ** 2 for p, c in zip(pts, self.x0)))
        with np.errstate(divide="ignore"):
            return self.coef ** beta * r ** (self.alpha * beta)

    def cell_mean(self, center, h, beta):
        g = self.alpha * beta
        off = np.asarray(center, float) - np.asarray(self.x0)
        if self.dim == 1:
            if g <= -1:
                return math.inf
            lo, hi = off[0] - h / 2, off[0] + h / 2
            m = (_prim_abs_power(hi, g) - _prim_abs_power(lo, g)) / h
        else:
            m = square_power_mean(off, h, g)
        return self.coef ** beta * float(m)

    def ball_measure(self, x, s):
        """Exact w(B_s(x)); vectorized in ``s``."""
        s = np.asarray(s, float)
        x = np.atleast_1d(np.asarray(x, float))
        a = self.alpha
        if self.dim == 1:
            if a <= -1:
                raise NotInAp("|x|^alpha with alpha <= -1 is not locally integrable")
            d = x[0] - self.x0[0]
            return self.coef * (_prim_abs_power(d + s, a) - _prim_abs_power(d - s, a))
        if a <= -2:
            raise NotInAp("|x|^alpha with alpha <= -2 is not locally integrable in 2D")
        d = float(np.hypot(*(x - np.asarray(self.x0))))
        if d < 1e-14:
            return self.coef * 2 * math.pi * s ** (a + 2) / (a + 2)
        flat = np.atleast_1d(s)
        out = np.array(
            [self.coef * si ** (a + 2) * unit_ball_power_integral_2d(round(d / si, 12), a) for si in flat]
        )
        return out.reshape(s.shape)

    def half_ball_measure_1d(self, x, s):
        """w((x - s, x + s) ∩ (0, ∞)) for a 1D weight."""
        s = np.asarray(s, float)
        lo = np.maximum(x - s, 0.0) - self.x0[0]
        hi = x + s - self.x0[0]
        return self.coef * (_prim_abs_power(hi, self.alpha) - _prim_abs_power(lo, self.alpha))


class Weight:
    """Positive sampled weight, optionally backed by an analytic power law.

    With ``singular_rule="analytic"`` the cells whose closure holds the
    singular point of the power law carry exact cell averages of ``w**beta``
    instead of midpoint values; every other cell uses the midpoint value.
    """

    def __init__(self, field: SampledField, power: PowerLaw | None = None,
                 singular_rule: str = "analytic"):
        if singular_rule not in ("analytic", "midpoint"):
            raise ValueError("singular_rule must be 'analytic' or 'midpoint'")
        if np.any(field.effective() < 0):
            raise ValueError("weights are non-negative")
        self.field = field
        self.power = power
        self.singular_rule = singular_rule if power is not None else "midpoint"
        self._cache = {}

    @classmethod
    def power_weight(cls, grid: Grid, alpha: float, x0=None, coef: float = 1.0,
                     singular_rule: str = "analytic") -> "Weight":
        x0 = tuple([0.0] * grid.dim) if x0 is None else x0
        law = PowerLaw(alpha, x0, coef)
        w = cls.__new__(cls)
        w.power = law
        w.singular_rule = singular_rule
        w._cache = {}
        w.field = SampledField(grid, w._power_values(grid, 1.0))
        return w

    @classmethod
    def uniform(cls, grid: Grid) -> "Weight":
        return cls.power_weight(grid, 0.0)

    @property
    def grid(self) -> Grid:
        return self.field.grid

    def _singular_cells(self, grid):
        x0 = np.asarray(self.power.x0)
        idx = []
        ranges = []
        for d in range(grid.dim):
            k = (x0[d] - grid.origin[d]) / grid.h
            lo, hi = math.floor(k - 0.5 - 1e-9), math.ceil(k + 0.5 + 1e-9)
            ranges.append([i for i in range(lo, hi + 1)
                           if 0 <= i < grid.size[d]
                           and abs(grid.origin[d] + i * grid.h - x0[d]) <= grid.h / 2 * (1 + 1e-9)])
        if grid.dim == 1:
            idx = [(i,) for i in ranges[0]]
        else:
            idx = [(i, j) for i in ranges[0] for j in ranges[1]]
        return idx

    def _power_values(self, grid, beta):
        v = self.power.power_at(grid.mesh(), beta)
        if self.singular_rule == "analytic" and self.power.alpha * beta != 0:
            for ix in self._singular_cells(grid):
                center = [grid.origin[d] + ix[d] * grid.h for d in range(grid.dim)]
                v[ix] = self.power.cell_mean(center, grid.h, beta)
        return v

    def pow_values(self, beta: float) -> np.ndarray:
        """Cell values of ``w**beta`` (masked cells are left untouched)."""
        key = float(beta)
        if key not in self._cache:
            if self.power is not None:
                v = self._power_values(self.grid, key)
                if self.field.support_mask is not None:
                    v = np.where(self.field.support_mask, v, 0.0)
            else:
                base = self.field.effective()
                with np.errstate(divide="ignore"):
                    v = np.where(base > 0, base ** key, 0.0 if key > 0 else np.inf) if key != 1.0 else base
                if self.field.support_mask is not None:
                    v = np.where(self.field.support_mask, v, 0.0)
            v.setflags(write=False)
            self._cache[key] = v
        return self._cache[key]

    def pow_field(self, beta: float) -> SampledField:
        return SampledField(self.grid, np.where(np.isfinite(self.pow_values(beta)), self.pow_values(beta), 0.0))

    def power_of(self, beta: float) -> "Weight":
        """The weight ``w**beta`` as a new :class:`Weight`."""
        if self.power is not None:
            law = PowerLaw(self.power.alpha * beta, self.power.x0, self.power.coef ** beta)
            w = Weight.power_weight(self.grid, law.alpha, law.x0, law.coef, self.singular_rule)
            return w
        v = self.pow_values(beta)
        if not np.all(np.isfinite(v)):
            raise NotInAp("w**beta is not finite on the grid")
        return Weight(SampledField(self.grid, v))

    def scaled(self, c: float) -> "Weight":
        if self.power is not None:
            return Weight.power_weight(self.grid, self.power.alpha, self.power.x0,
                                       self.power.coef * c, self.singular_rule)
        return Weight(self.field * c)

    def measure(self, B: Ball) -> float:
        """Discrete w(B)."""
        st = ball_stencil(self.grid, B)
        if st.count == 0:
            raise UnderResolvedBall(f"ball under-resolved: {B}")
        return float(st.take(self.pow_values(1.0)).sum() * self.grid.cell_volume)

    def ball_measure(self, x, s):
        """w(B_s(x)) for any radius: exact for power laws, discrete otherwise."""
        if self.power is not None:
            return self.power.ball_measure(x, s)
        s_arr = np.atleast_1d(np.asarray(s, float))
        out = np.array([self.measure(Ball(tuple(np.atleast_1d(x)), si)) for si in s_arr])
        return out.reshape(np.shape(s))

    def describe(self) -> dict:
        d = {"singular_cell_rule": self.singular_rule}
        if self.power is not None:
            d["power"] = {"alpha": self.power.alpha, "x0": list(self.power.x0), "coef": self.power.coef}
        else:
            d["tabulated"] = True
        return d


def w_measure(w: Weight, B: Ball) -> float:
    return w.measure(B)


# ---------------------------------------------------------------------------
# A_p characteristic


@dataclass
class ApReport:
    p: float
    characteristic: float
    argmax_ball: Ball
    per_ball: list
    diagnostics: list = field(default_factory=list)
    singular_cell_rule: str = "midpoint"
    family: dict = field(default_factory=dict)

    @property
    def in_ap(self) -> bool:
        return math.isfinite(self.characteristic)

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "characteristic": _num(self.characteristic),
            "argmax_ball": self.argmax_ball.to_dict(),
            "per_ball": [{"center": list(B.center), "radius": B.radius, "value": _num(v)}
                         for B, v in self.per_ball],
            "diagnostics": list(self.diagnostics),
            "singular_cell_rule": self.singular_cell_rule,
            "family": self.family,
        }


def _num(v):
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if math.isnan(v):
        return "nan"
    return v


def _interior_stencil(grid, B):
    st = ball_stencil(grid, B)
    if st.count != st.n_inside:
        raise UnderResolvedBall(f"ball {B} leaves the grid; A_p needs interior families")
    return st


def local_ap(w: Weight, p: float, B: Ball) -> tuple:
    """Local A_p product on one ball and a diagnostic string (or None)."""
    st = _interior_stencil(w.grid, B)
    wv = st.take(w.pow_values(1.0))
    sv = st.take(w.pow_values(-1.0 / (p - 1.0)))
    if not np.all(np.isfinite(sv)) or sv.max(initial=0.0) > OVERFLOW_GUARD:
        return math.inf, f"not in A_p at ball {B.to_dict()}: w^(-1/(p-1)) exceeds overflow guard"
    mw = wv.sum() / st.count
    ms = sv.sum() / st.count
    return float(mw * ms ** (p - 1.0)), None


def ap_characteristic(w: Weight, p: float, F: BallFamily) -> ApReport:
    if not p > 1:
        raise ValueError("p must exceed 1")
    balls = resolved_balls(F, w.grid)
    per, diags = [], []
    for B in balls:
        v, d = local_ap(w, p, B)
        per.append((B, v))
        if d:
            diags.append(d)
    vals = np.array([v for _, v in per])
    k = int(np.argmax(vals))
    return ApReport(p, float(vals[k]), per[k][0], per, diags, w.singular_rule, F.describe())


# ---------------------------------------------------------------------------
# structural properties of A_p weights


@dataclass
class PropertyReport:
    p: float
    characteristic: float
    properties: dict

    def passed(self) -> bool:
        return all(v["status"] in ("PASS", "INFO") for v in self.properties.values())

    def to_dict(self) -> dict:
        return {"p": self.p, "characteristic": _num(self.characteristic), "properties": self.properties}


def ap_property_suite(w: Weight, p: float, F: BallFamily, q_values=None,
                      lambdas=(2.0, 4.0), n_sub: int = 8) -> PropertyReport:
    rep = ap_characteristic(w, p, F)
    if not rep.in_ap:
        raise NotInAp("; ".join(rep.diagnostics[:3]) or "characteristic is infinite")
    A = rep.characteristic
    props = {}
    tol = 1e-12

    # (1) 1 <= [w]_{A_p(B)}^{1/p} <= [w]_{A_p}^{1/p}
    loc = np.array([v for _, v in rep.per_ball]) ** (1.0 / p)
    lo_slack = float(loc.min() - 1.0)
    hi_slack = float(A ** (1.0 / p) - loc.max())
    props["local_bounds"] = {
        "status": "PASS" if lo_slack >= -tol and hi_slack >= -tol else "FAIL",
        "min_local_root": float(loc.min()),
        "max_local_root": float(loc.max()),
        "slack": min(lo_slack, hi_slack),
    }

    # (2) [w^{-1/(p-1)}]_{A_p'} = [w]_{A_p}^{1/(p-1)}
    pp = p / (p - 1.0)
    sigma = w.power_of(-1.0 / (p - 1.0))
    dual = ap_characteristic(sigma, pp, F).characteristic
    target = A ** (1.0 / (p - 1.0))
    gap = abs(dual - target) / target
    props["duality"] = {
        "status": "PASS" if gap <= 0.02 else "FAIL",
        "dual_characteristic": dual,
        "predicted": target,
        "relative_gap": gap,
    }

    # (3) ordering of [w]_{A_q} against [w]_{A_p}; measured, not asserted
    if q_values is None:
        q_values = [1.0 + (p - 1.0) * t for t in (0.5, 0.75)]
    qs = {}
    for q in q_values:
        r = ap_characteristic(w, q, F)
        qs[repr(float(q))] = _num(r.characteristic)
    observed = [
        "A_q >= A_p" if (isinstance(v, str) or v >= A * (1 - 1e-12)) else "A_q < A_p" for v in qs.values()
    ]
    props["monotone_in_p"] = {
        "status": "INFO",
        "A_p": A,
        "A_q": qs,
        "observed_ordering": sorted(set(observed)),
    }

    # (4) doubling: w(lam B) <= lam^{np} [w] w(B)
    n = w.grid.dim
    worst, n_checked, ok = 0.0, 0, True
    for lam in lambdas:
        bound = lam ** (n * p) * A
        for B, _ in rep.per_ball:
            big = B.scaled(lam)
            st = ball_stencil(w.grid, big)
            if st.count != st.n_inside:
                continue
            ratio = w.measure(big) / w.measure(B)
            n_checked += 1
            worst = max(worst, ratio / bound)
            ok &= ratio <= bound * (1 + tol)
    props["doubling"] = {
        "status": "PASS" if ok and n_checked else ("INFO" if not n_checked else "FAIL"),
        "max_ratio_over_bound": worst,
        "n_checked": n_checked,
    }

    # (5) w(E)/w(B) <= C (|E|/|B|)^delta, and from below by (|E|/|B|)^p / [w].
    # The linear lower bound (|E|/|B|) / [w] is also measured; it fails for
    # weights vanishing at the center of B, so it is reported, not gated.
    xs, ys, lower_ok, linear_ok = [], [], True, True
    floor = 4 * w.grid.h
    for B, _ in rep.per_ball:
        radii = B.radius * 2.0 ** (-np.arange(1, n_sub + 1) / 2.0)
        if radii[-1] < floor:
            continue
        wB = w.measure(B)
        vB = ball_stencil(w.grid, B).count
        for rE in radii:
            E = Ball(B.center, rE)
            fe = ball_stencil(w.grid, E).count / vB
            fw = w.measure(E) / wB
            xs.append(math.log(fe))
            ys.append(math.log(fw))
            lower_ok &= fw >= fe ** p / A * (1 - tol)
            linear_ok &= fw >= fe / A * (1 - tol)
    if len(xs) >= n_sub:
        delta, logC = np.polyfit(xs, ys, 1)
        resid = np.max(np.array(ys) - (delta * np.array(xs) + logC))
        props["sub_ball_exponent"] = {
            "status": "PASS" if lower_ok and delta > 0 else "FAIL",
            "delta": float(delta),
            "C": float(math.exp(logC + resid)),
            "lower_bound_holds": bool(lower_ok),
            "linear_lower_bound_holds": bool(linear_ok),
            "n_pairs": len(xs),
        }
    else:
        props["sub_ball_exponent"] = {"status": "INFO", "detail": "no ball large enough for 8 nested sub-balls"}

    # (6) A_infinity has no finite formula here
    props["a_infinity"] = {"status": "INFO", "detail": "A_infinity characteristic not computed (out of scope)"}
    return PropertyReport(p, A, props)
