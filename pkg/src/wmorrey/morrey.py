"""Generalized weighted Morrey norms, pair conditions on (phi1, phi2) and the
weighted Hardy operator ``H g(r) = int_r^inf g psi``."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .field_core import Ball, BallFamily, Grid, SampledField, ball_stencil, resolved_balls
from .weights import Weight


# ---------------------------------------------------------------------------
# phi(x, r)


@dataclass(frozen=True)
class MorreyWeightFn:
    """phi(x, r) from a named descriptor.

    kinds: ``power`` c r^-beta; ``log_power`` c r^-beta (1 + |ln r|)^gamma;
    ``morrey_classic`` r^((lam - n)/p); ``table`` log phi linear in log r,
    nearest tabulated center in x.
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("power", "log_power", "morrey_classic", "table"):
            raise ValueError(f"unknown phi kind {self.kind!r}")
        if self.kind == "morrey_classic":
            lam, n = self.params["lam"], self.params["n"]
            if not 0 < lam < n:
                raise ValueError("morrey_classic needs 0 < lam < n")
        if self.kind == "table":
            vals = np.asarray(self.params["values"], float)
            if np.any(vals <= 0):
                raise ValueError("tabulated phi must be positive")

    @classmethod
    def power(cls, beta: float, c: float = 1.0) -> "MorreyWeightFn":
        return cls("power", {"beta": float(beta), "c": float(c)})

    @classmethod
    def one(cls) -> "MorreyWeightFn":
        return cls.power(0.0)

    @classmethod
    def morrey_classic(cls, lam: float, n: int, p: float) -> "MorreyWeightFn":
        return cls("morrey_classic", {"lam": float(lam), "n": int(n), "p": float(p)})

    @classmethod
    def table(cls, centers, radii, values) -> "MorreyWeightFn":
        return cls("table", {"centers": np.atleast_2d(np.asarray(centers, float)).tolist(),
                             "radii": list(map(float, radii)),
                             "values": np.atleast_2d(np.asarray(values, float)).tolist()})

    @property
    def r_range(self) -> tuple:
        if self.kind == "table":
            return (min(self.params["radii"]), max(self.params["radii"]))
        return (0.0, math.inf)

    def __call__(self, x, r):
        r = np.asarray(r, float)
        k, P = self.kind, self.params
        if k == "power":
            return P.get("c", 1.0) * r ** (-P["beta"])
        if k == "log_power":
            return P.get("c", 1.0) * r ** (-P["beta"]) * (1 + np.abs(np.log(r))) ** P["gamma"]
        if k == "morrey_classic":
            return r ** ((P["lam"] - P["n"]) / P["p"])
        lo, hi = self.r_range
        if np.any(r < lo * (1 - 1e-12)) or np.any(r > hi * (1 + 1e-12)):
            raise ValueError(f"radius outside tabulated range [{lo:g}, {hi:g}]")
        centers = np.asarray(P["centers"])
        x = np.atleast_1d(np.asarray(x, float))
        row = int(np.argmin(((centers - x) ** 2).sum(axis=1)))
        logv = np.log(np.asarray(P["values"])[row])
        return np.exp(np.interp(np.log(r), np.log(P["radii"]), logv))

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.params}

    @classmethod
    def from_dict(cls, d) -> "MorreyWeightFn":
        d = dict(d)
        return cls(d.pop("kind"), d)


# ---------------------------------------------------------------------------
# Morrey norm


@dataclass
class MorreyReport:
    value: float
    argmax_ball: Ball
    per_ball: list
    family: dict
    restricted_to_grid: bool

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "argmax_ball": self.argmax_ball.to_dict(),
            "family": self.family,
            "restricted_to_grid": self.restricted_to_grid,
            "per_ball": [{"center": list(B.center), "radius": B.radius, "value": v} for B, v in self.per_ball],
        }


def family_stencils(grid: Grid, F: BallFamily) -> list:
    """Resolved balls of ``F`` paired with their stencils, for reuse across norms."""
    return [(B, ball_stencil(grid, B)) for B in resolved_balls(F, grid)]


def morrey_norm(f: SampledField, p: float, phi: MorreyWeightFn, w: Weight, F: BallFamily,
                restrict_to_grid: bool = False, stencils=None, domain=None) -> MorreyReport:
    """max over F of phi(x,r)^-1 (w(B)^-1 int_B |f|^p w)^(1/p).

    With ``restrict_to_grid`` every ball is intersected with the grid (norms
    on a bounded domain); otherwise a ball leaving the grid sees f = 0 outside
    and needs an analytic w(B).  ``domain`` (boolean per grid point) replaces
    B by B ∩ domain in both integrals.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    grid = f.grid
    if stencils is None:
        stencils = family_stencils(grid, F)
    fp = np.abs(f.effective()) ** p
    wv = w.pow_values(1.0)
    if domain is not None:
        wv = np.where(domain, wv, 0.0)
        restrict_to_grid = True
    prod = fp * wv
    per = []
    for B, st in stencils:
        num = st.take(prod).sum() * grid.cell_volume
        if restrict_to_grid or st.count == st.n_inside:
            den = st.take(wv).sum() * grid.cell_volume
        elif w.power is not None:
            den = float(w.power.ball_measure(B.center, B.radius))
        else:
            raise ValueError(f"{B} leaves the grid and the weight has no analytic form")
        if den <= 0:
            raise ZeroDivisionError(f"w-measure of {B} is zero")
        per.append((B, float((num / den) ** (1.0 / p) / phi(B.center, B.radius))))
    k = int(np.argmax([v for _, v in per]))
    return MorreyReport(per[k][1], per[k][0], per, F.describe(), restrict_to_grid)


def local_norm(f: SampledField, p: float, w: Weight, B: Ball) -> float:
    """||f||_{p,w;B} = (int_B |f|^p w)^(1/p)."""
    st = ball_stencil(f.grid, B)
    prod = np.abs(f.effective()) ** p * w.pow_values(1.0)
    return float((st.take(prod).sum() * f.grid.cell_volume) ** (1.0 / p))


# ---------------------------------------------------------------------------
# pair conditions


SUP_RATIO = 2.0 ** 0.125
T_MAX_FACTOR = 2.0 ** 12
CONSISTENCY_TOL = 0.10


@dataclass
class ConditionReport:
    mode: str
    status: str
    empirical_C: float
    worst_point: dict
    truncation: dict
    diagnostics: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "status": self.status,
            "empirical_C": self.empirical_C,
            "worst_point": self.worst_point,
            "truncation": self.truncation,
            "diagnostics": list(self.diagnostics),
        }


def _lebesgue_ball(n, s):
    return (2.0 * s) if n == 1 else math.pi * s * s


def _ball_measures(w, x, s, n):
    if w is None:
        return _lebesgue_ball(n, s)
    if w.power is not None:
        return w.power.ball_measure(x, s)
    out = np.full(s.shape, np.nan)
    for i, si in enumerate(s):
        st = ball_stencil(w.grid, Ball(tuple(np.atleast_1d(x)), si))
        if st.count == st.n_inside and st.count > 0:
            out[i] = w.measure(Ball(tuple(np.atleast_1d(x)), si))
    return out


def check_pair(phi1: MorreyWeightFn, phi2: MorreyWeightFn, p: float, w: Weight | None,
               mode: str, x_samples, r_samples, n: int | None = None,
               t_max_factor: float = T_MAX_FACTOR) -> ConditionReport:
    """Evaluate one of the sufficient conditions on (phi1, phi2) at sample (x, r).

    modes: ``zs``       int_r^inf phi1(t) dt/t
           ``sup``      int_r^inf sup_{s>t} phi1(s) s^(n/p) / t^(n/p) dt/t
           ``weighted`` as ``sup`` with w(B_s)^(1/p) in place of s^(n/p)
           ``weighted_log``  as ``weighted`` with the factor (1 + ln(t/r))
    Each left side is divided by phi2(x, r).  The t-integral is truncated at
    T = t_max_factor * r and recomputed at 2T and 4T: a change above 10% is
    INCONCLUSIVE, persistent growth (or an inner sup pinned to the top of the
    s-grid) is FAIL.
    """
    if mode not in ("zs", "sup", "weighted", "weighted_log"):
        raise ValueError(f"unknown mode {mode!r}")
    xs = [np.atleast_1d(np.asarray(x, float)) for x in x_samples]
    if n is None:
        n = w.grid.dim if w is not None else len(xs[0])
    rs = np.sort(np.asarray(r_samples, float))
    lr = math.log(SUP_RATIO)
    steps_T = int(round(math.log(t_max_factor) / lr))
    diags = []
    worst = (-math.inf, None, None)
    cons_all, growth_fail, boundary_fail, restricted = 0.0, False, False, False
    vals_at = {}
    for x in xs:
        for r in rs:
            s = r * SUP_RATIO ** np.arange(4 * steps_T + 1)
            if mode == "zs":
                inner = phi1(x, s)
                pinned = False
            else:
                if mode == "sup":
                    mass = s ** (n / p)
                else:
                    wm = _ball_measures(w, x, s, n)
                    if np.isnan(wm).any():
                        restricted = True
                        ok = ~np.isnan(wm)
                        wm = np.where(ok, wm, np.nan)
                    mass = np.asarray(wm) ** (1.0 / p)
                g = phi1(x, s) * mass
                inner = None
                pinned = False
            results = []
            for m in (1, 2, 4):
                k = steps_T + int(round(math.log(m) / lr))
                u = np.arange(k + 1) * lr
                if mode == "zs":
                    integrand = inner[: k + 1]
                else:
                    gk = g[: k + 1]
                    if np.isnan(gk).any():
                        results.append(math.nan)
                        continue
                    sup = np.maximum.accumulate(gk[::-1])[::-1]
                    # inner sup still rising at the top of the grid
                    if gk[-1] > (1 + 1e-9) * np.max(gk[:-1]) and gk[-1] > gk[-2] * (1 + 1e-9):
                        pinned = True
                    integrand = sup / mass[: k + 1]
                    if mode == "weighted_log":
                        integrand = integrand * (1 + u)
                results.append(float(integrate.trapezoid(integrand, u)))
            I1, I2, I4 = results
            denom = float(phi2(x, r))
            if any(math.isnan(v) for v in results):
                diags.append(f"w(B_s) unavailable beyond grid at x={x.tolist()}, r={r:g}")
                continue
            c12 = abs(I2 - I1) / I2 if I2 > 0 else 0.0
            c24 = abs(I4 - I2) / I4 if I4 > 0 else 0.0
            cons_all = max(cons_all, c12)
            if c12 > CONSISTENCY_TOL and c24 > CONSISTENCY_TOL:
                growth_fail = True
            if pinned:
                boundary_fail = True
            ratio = I2 / denom
            vals_at[(tuple(x), r)] = ratio
            if ratio > worst[0]:
                worst = (ratio, x, r)
    trunc = {"T_max_factor": t_max_factor, "consistency": cons_all, "sup_ratio": SUP_RATIO}
    if restricted:
        diags.append("tabulated weight: s-range restricted to balls inside the grid")
    if worst[1] is None:
        return ConditionReport(mode, "INCONCLUSIVE", math.nan, {}, trunc, diags)
    if growth_fail or boundary_fail:
        status = "FAIL"
        if boundary_fail:
            diags.append("inner essential sup is attained at the truncation boundary (diverges)")
        if growth_fail:
            diags.append("left side keeps growing as T_max doubles")
    elif cons_all > CONSISTENCY_TOL:
        status = "INCONCLUSIVE"
        diags.append(f"truncation consistency {cons_all:.3g} exceeds {CONSISTENCY_TOL}")
    else:
        status = "PASS"
    return ConditionReport(mode, status, worst[0],
                           {"x": worst[1].tolist(), "r": worst[2]}, trunc, diags)


# ---------------------------------------------------------------------------
# weighted Hardy operator


class NonIntegrableTail(ArithmeticError):
    pass


@dataclass(frozen=True)
class PowerFn:
    """c * t^a on (0, inf)."""

    a: float
    c: float = 1.0

    def __call__(self, t):
        return self.c * np.asarray(t, float) ** self.a


@dataclass(frozen=True)
class StepFunction:
    """Nonnegative nondecreasing step function: ``values[k]`` on
    ``[breaks[k], breaks[k+1])``, zero before ``breaks[0]``, last value to inf."""

    breaks: tuple
    values: tuple

    def __post_init__(self):
        b = np.asarray(self.breaks, float)
        v = np.asarray(self.values, float)
        if b.shape != v.shape or b.ndim != 1 or len(b) == 0:
            raise ValueError("breaks and values must be equal-length 1D")
        if np.any(np.diff(b) <= 0) or b[0] <= 0:
            raise ValueError("breaks must be positive and increasing")
        if v[0] < 0 or np.any(np.diff(v) < 0):
            raise ValueError("step function must be nonnegative and nondecreasing")
        object.__setattr__(self, "breaks", tuple(b.tolist()))
        object.__setattr__(self, "values", tuple(v.tolist()))

    def __call__(self, t):
        t = np.asarray(t, float)
        k = np.searchsorted(self.breaks, t, side="right") - 1
        v = np.concatenate([[0.0], self.values])
        return v[k + 1]


def weighted_hardy(g, psi, r: float, tol: float = 1e-10, max_doublings: int = 60) -> float:
    """int_r^inf g(t) psi(t) dt by octave-wise quadrature in log t.

    Octaves are summed until the last one falls below ``tol`` times the running
    total and the octave sums are decaying; the geometric tail past that
    point is added.  No decay within ``max_doublings`` octaves raises.
    """
    breaks = np.asarray(getattr(g, "breaks", ()), float)
    last_break = float(breaks.max()) if breaks.size else r
    f = lambda u: float(g(math.exp(u)) * psi(math.exp(u)) * math.exp(u))
    total, prev = 0.0, None
    lo = r
    for k in range(max_doublings):
        hi = 2 * lo
        pts = [math.log(b) for b in breaks if lo < b < hi] or None
        seg, _ = integrate.quad(f, math.log(lo), math.log(hi), points=pts, limit=200, epsabs=0.0, epsrel=1e-12)
        total += seg
        lo = hi
        past = lo > last_break and k >= 8
        if past and seg == 0.0:
            return total
        if past and prev is not None and prev > 0:
            q = seg / prev
            if q < 1 and seg <= tol * max(abs(total), 1e-300):
                return total + seg * q / (1 - q)
        prev = seg
    raise NonIntegrableTail(f"non-integrable tail: no decay within {max_doublings} doublings of r={r:g}")


def _log_grid(lo, hi, per_octave):
    n = int(math.ceil(math.log2(hi / lo) * per_octave))
    return lo * 2.0 ** (np.arange(n + 1) / per_octave)


@dataclass
class HardyConstant:
    B: float
    argmax_r: float
    diagnostics: list = field(default_factory=list)
    grid: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"B": self.B, "argmax_r": self.argmax_r, "diagnostics": self.diagnostics, "grid": self.grid}


def _tail_integral(vals, t, per_octave):
    """Reverse cumulative int_t^inf of samples on a log grid, with a geometric
    tail fitted to the last octave.  Returns (integrals, tail_ratio)."""
    u = np.log(t)
    dens = vals * t  # dt = t du
    seg = 0.5 * (dens[1:] + dens[:-1]) * np.diff(u)
    rev = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
    last = seg[-per_octave:].sum()
    prev = seg[-2 * per_octave: -per_octave].sum()
    if last == 0.0:
        return rev, 0.0
    q = last / prev if prev > 0 else math.inf
    if q >= 1:
        return rev + math.inf, q
    return rev + last * q / (1 - q), q


def hardy_best_constant(v1, v2, psi, r_range=(1e-3, 1e3), per_octave: int = 64,
                        tail_octaves: int = 24) -> HardyConstant:
    """B = sup_r v2(r) int_r^inf psi(t) / sup_{s>t} v1(s) dt on a shared log grid."""
    r_lo, r_hi = r_range
    t = _log_grid(r_lo, r_hi * 2.0 ** tail_octaves, per_octave)
    v1t = np.asarray(v1(t), float)
    V = np.maximum.accumulate(v1t[::-1])[::-1]
    psit = np.asarray(psi(t), float)
    diags = []
    if np.all(psit == 0):
        return HardyConstant(0.0, r_lo, ["psi vanishes identically"])
    if v1t[-1] >= V[-per_octave] * (1 - 1e-12) and v1t[-1] > v1t[-2]:
        diags.append("sup of v1 attained at the truncation boundary")
    with np.errstate(divide="ignore"):
        integrand = np.where(V > 0, psit / V, np.inf)
    if not np.all(np.isfinite(integrand)):
        return HardyConstant(math.inf, r_lo, diags + ["v1 vanishes: integrand infinite"])
    I, q = _tail_integral(integrand, t, per_octave)
    mask = t <= r_hi * (1 + 1e-12)
    prof = np.asarray(v2(t[mask]), float) * I[mask]
    if not np.all(np.isfinite(prof)):
        return HardyConstant(math.inf, r_lo, diags + [f"divergent integral (octave ratio {q:.3g} >= 1)"])
    k = int(np.argmax(prof))
    if k == 0 or k == len(prof) - 1:
        diags.append("maximum at the edge of the sampled r-range")
    return HardyConstant(float(prof[k]), float(t[mask][k]), diags,
                         {"r_range": list(r_range), "per_octave": per_octave, "tail_octaves": tail_octaves})


def hardy_profile(g: StepFunction, psi, r, per_octave: int = 64) -> np.ndarray:
    """H g at the radii ``r`` (vectorized).  Breaks are merged into the grid
    so each step is integrated on its own; the constant tail past the last
    break is integrated by quad."""
    r = np.sort(np.asarray(r, float))
    b = np.asarray(g.breaks)
    top = max(float(r[-1]), float(b[-1]))
    base = _log_grid(min(float(r[0]), float(b[0])), top, per_octave)
    t = np.unique(np.concatenate([base[base < top], b, r, [top]]))
    u = np.log(t)
    # on [t_i, t_i+1) g equals g(t_i); breaks are grid points
    left_val = g(t[:-1]) * np.asarray(psi(t[:-1]), float) * t[:-1]
    right_val = g(t[:-1]) * np.asarray(psi(t[1:]), float) * t[1:]
    seg = 0.5 * (left_val + right_val) * np.diff(u)
    rev = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
    vlast = g.values[-1]
    tail = 0.0
    if vlast > 0:
        tail = weighted_hardy(lambda s: vlast, psi, top)
    idx = np.searchsorted(t, r)
    return rev[idx] + tail


def hardy_ratio(g: StepFunction, v1, v2, psi, r_eval) -> float:
    """(sup_r v2 H g) / (sup_t v1 g) with both sups on ``r_eval`` plus the breaks."""
    H = hardy_profile(g, psi, r_eval)
    num = float(np.max(np.asarray(v2(np.sort(r_eval)), float) * H))
    tt = np.unique(np.concatenate([np.asarray(r_eval, float), g.breaks]))
    den = float(np.max(np.asarray(v1(tt), float) * g(tt)))
    return num / den if den > 0 else 0.0


def random_nondecreasing_steps(rng: np.random.Generator, lo: float, hi: float, v1, n_max: int = 400):
    """One random nonnegative nondecreasing step function on [lo, hi].

    Half of the draws follow 1/sup_{s>t} v1 (the profile that nearly saturates
    the inequality) with multiplicative noise; the other half are free random
    walks.  Monotonicity is enforced by a running maximum.
    """
    n = int(rng.integers(8, n_max))
    b = np.sort(np.exp(rng.uniform(math.log(lo), math.log(hi), n)))
    b = np.unique(b)
    if rng.random() < 0.5:
        tt = _log_grid(lo, hi * 4, 16)
        V = np.maximum.accumulate(np.asarray(v1(tt), float)[::-1])[::-1]
        target = 1.0 / np.interp(b, tt, V)
        noise = np.exp(rng.normal(0.0, rng.uniform(0.0, 0.3), len(b)))
        v = target * noise
    else:
        v = np.cumsum(rng.exponential(1.0, len(b)))
    v = np.maximum.accumulate(v)
    return StepFunction(tuple(b), tuple(v))


@dataclass
class SharpnessReport:
    B: float
    best_ratio: float
    worst_excess: float
    n_trials: int
    status: str

    def to_dict(self) -> dict:
        return self.__dict__.copy()


def hardy_sharpness(v1, v2, psi, B: float, rng: np.random.Generator, n_trials: int = 50,
                    lo: float = 1e-2, hi: float = 1e2) -> SharpnessReport:
    """Random nondecreasing g: the best ratio must reach 85% of B and never exceed 1.05 B."""
    r_eval = _log_grid(lo / 4, hi * 4, 32)
    ratios = []
    for _ in range(n_trials):
        g = random_nondecreasing_steps(rng, lo, hi, v1)
        ratios.append(hardy_ratio(g, v1, v2, psi, r_eval))
    best = max(ratios)
    ok = best >= 0.85 * B and best <= 1.05 * B
    return SharpnessReport(B, best / B if B else math.nan, best / B - 1 if B else math.nan, n_trials,
                           "PASS" if ok else "FAIL")
