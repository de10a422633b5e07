"""Mean oscillation: BMO norms, VMO moduli, John-Nirenberg and weighted ratios.

A supremum over "all balls" is a maximum over a BallFamily.  A claim that
such a supremum is finite is checked by extending the family one octave in
radius (and twice the center density) and requiring the maximum to move
by at most ``STABILITY_TOL``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .field_core import Ball, BallFamily, SampledField, ball_stencil, mean_ball, resolved_balls
from .weights import Weight, ap_characteristic

STABILITY_TOL = 0.10


class ConstantFunction(ValueError):
    pass


@dataclass(frozen=True)
class OscillationFn:
    field: SampledField
    family: BallFamily

    def with_family(self, family: BallFamily) -> "OscillationFn":
        return OscillationFn(self.field, family)

    def extended(self) -> "OscillationFn":
        return OscillationFn(self.field, self.family.extended())


def ball_oscillation(a: SampledField, B: Ball, p: float = 1.0, weight=None) -> tuple:
    """``(osc, a_B)`` where osc is the p-th power mean of |a - a_B| over B.

    ``a_B`` is always the unweighted mean.  With ``weight`` (cell values of a
    weight) the deviation is averaged against it and B must lie inside the grid.
    """
    st = ball_stencil(a.grid, B)
    vals = st.take(a.effective())
    m = vals.sum() / st.count
    dev = np.abs(vals - m) ** p
    if weight is None:
        outside = st.count - st.n_inside
        return float((dev.sum() + outside * abs(m) ** p) / st.count), float(m)
    if st.count != st.n_inside:
        raise ValueError(f"weighted oscillation needs {B} inside the grid")
    wv = st.take(weight)
    return float((dev * wv).sum() / wv.sum()), float(m)


def bmo_profile(a: OscillationFn) -> list:
    """``[(ball, mean oscillation)]`` over the resolved balls of the family."""
    return [(B, ball_oscillation(a.field, B)[0]) for B in resolved_balls(a.family, a.field.grid)]


def bmo_norm(a: OscillationFn) -> float:
    return max(v for _, v in bmo_profile(a))


def vmo_modulus(a: OscillationFn, R_list) -> list:
    """``[(R, gamma_a(R))]`` with gamma the sup over family balls of radius <= R."""
    prof = bmo_profile(a)
    r_lo = min(B.radius for B, _ in prof)
    out = []
    for R in R_list:
        if R < r_lo * (1 - 1e-12):
            raise ValueError(f"R={R:g} is below the smallest resolved radius {r_lo:g}")
        out.append((float(R), max(v for B, v in prof if B.radius <= R * (1 + 1e-12))))
    return out


def _drift(a, b):
    if a == 0.0:
        return 0.0 if b == 0.0 else math.inf
    return abs(b - a) / abs(a)


@dataclass
class RatioReport:
    """Maximum of a per-ball ratio on a family and on its one-octave extension."""

    name: str
    max_ratio: float
    argmax_ball: Ball
    extended_max: float
    drift: float
    per_ball: list = field(default_factory=list)
    flags: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def finite(self) -> bool:
        return math.isfinite(self.max_ratio) and math.isfinite(self.extended_max)

    @property
    def stable(self) -> bool:
        return self.finite and self.drift <= STABILITY_TOL

    @property
    def status(self) -> str:
        return "PASS" if self.stable else "FAIL"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "status": self.status,
            "max_ratio": self.max_ratio,
            "argmax_ball": self.argmax_ball.to_dict(),
            "extended_max": self.extended_max,
            "drift": self.drift,
            "flags": list(self.flags),
            "per_ball": [{"center": list(B.center), "radius": B.radius, "ratio": v} for B, v in self.per_ball],
            **self.extra,
        }


def _jn_ratios(a: OscillationFn, p: float):
    norm = bmo_norm(a)
    if norm == 0.0:
        raise ConstantFunction("constant function: BMO norm is 0, ratio undefined")
    per = [(B, ball_oscillation(a.field, B, p)[0] ** (1.0 / p) / norm)
           for B in resolved_balls(a.family, a.field.grid)]
    return per, norm


def jn_check(a: OscillationFn, p: float) -> RatioReport:
    """Per ball (|B|^-1 int_B |a - a_B|^p)^(1/p) / ||a||_*; max and its stability."""
    if not p > 1:
        raise ValueError("p must exceed 1")
    per, norm = _jn_ratios(a, p)
    ext, _ = _jn_ratios(a.extended(), p)
    k = int(np.argmax([v for _, v in per]))
    m, me = per[k][1], max(v for _, v in ext)
    return RatioReport("john_nirenberg", m, per[k][0], me, _drift(m, me), per,
                       extra={"p": p, "bmo_norm": norm})


def centered_mean_drift(a: SampledField, r: float, t: float, center=None) -> float:
    """a_{B_r} - a_{B_t} for concentric balls."""
    c = tuple([0.0] * a.grid.dim) if center is None else center
    return mean_ball(a, Ball(c, r)) - mean_ball(a, Ball(c, t))


@dataclass
class DriftResult:
    drift: float
    ratio: float
    bmo_norm: float
    flags: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"drift": self.drift, "ratio": self.ratio, "bmo_norm": self.bmo_norm, "flags": self.flags}


def mean_drift_check(a: OscillationFn, r: float, t: float, center=None) -> DriftResult:
    """|a_{B_r} - a_{B_t}| / (||a||_* ln(t/r)) for 0 < 2r < t."""
    if not 0 < 2 * r < t:
        raise ValueError("need 0 < 2r < t")
    d = centered_mean_drift(a.field, r, t, center)
    norm = bmo_norm(a)
    if norm == 0.0:
        return DriftResult(d, 0.0, 0.0, ["zero_over_zero"] if d == 0.0 else ["zero_norm"])
    return DriftResult(d, abs(d) / (norm * math.log(t / r)), norm)


def _weighted_ratios(a: OscillationFn, w: Weight, p: float):
    grid = a.field.grid
    balls = resolved_balls(a.family, grid)
    norm = bmo_norm(a)
    Ap = ap_characteristic(w, p, a.family).characteristic
    pp = p / (p - 1.0)
    w1 = w.pow_values(1.0)
    sig = w.pow_values(1.0 - pp)
    per_i, per_ii = [], []
    for B in balls:
        oi = ball_oscillation(a.field, B, p, w1)[0] ** (1.0 / p)
        oii = ball_oscillation(a.field, B, pp, sig)[0] ** (1.0 / pp)
        if norm == 0.0:
            per_i.append((B, 0.0))
            per_ii.append((B, 0.0))
        else:
            per_i.append((B, oi / norm))
            per_ii.append((B, oii / (Ap ** (1.0 / p) * norm)))
    return per_i, per_ii, norm, Ap


@dataclass
class WeightedBMOReport:
    form_w: RatioReport
    form_dual: RatioReport
    bmo_norm: float
    ap_characteristic: float

    @property
    def status(self) -> str:
        return "PASS" if self.form_w.stable and self.form_dual.stable else "FAIL"

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "bmo_norm": self.bmo_norm,
            "ap_characteristic": self.ap_characteristic,
            "weighted": self.form_w.to_dict(),
            "dual_weighted": self.form_dual.to_dict(),
        }


def weighted_bmo_check(a: OscillationFn, w: Weight, p: float) -> WeightedBMOReport:
    """Weighted oscillation ratios against ||a||_*, in the w and w^(1-p') forms.

    (i)  (w(B)^-1 int_B |a - a_B|^p w)^(1/p) / ||a||_*
    (ii) (s(B)^-1 int_B |a - a_B|^p' s)^(1/p') / ([w]_{A_p}^(1/p) ||a||_*), s = w^(1-p')
    Both maxima must be finite and stable under family extension.
    """
    per_i, per_ii, norm, Ap = _weighted_ratios(a, w, p)
    ext_i, ext_ii, _, _ = _weighted_ratios(a.extended(), w, p)
    flags = ["zero_over_zero"] if norm == 0.0 else []

    def pack(name, per, ext):
        k = int(np.argmax([v for _, v in per]))
        m, me = per[k][1], max(v for _, v in ext)
        return RatioReport(name, m, per[k][0], me, _drift(m, me), per, list(flags))

    return WeightedBMOReport(pack("weighted_oscillation", per_i, ext_i),
                             pack("dual_weighted_oscillation", per_ii, ext_ii), norm, Ap)
