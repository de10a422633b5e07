"""Empirical operator norms between generalized weighted Morrey spaces."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from ..field_core import Ball, BallFamily, Grid, SampledField
from ..morrey import MorreyWeightFn, family_stencils, morrey_norm
from ..weights import Weight

STABILITY_TOL = 0.10


def _bump(z):
    out = np.zeros_like(z)
    inside = np.abs(z) < 1
    out[inside] = np.exp(1 - 1 / (1 - z[inside] ** 2))
    return out


def test_fields(grid: Grid, rng: np.random.Generator, n_each: int = 6, center_range=0.5,
                scales=(1 / 32, 1 / 4)) -> list:
    """Seeded family of compactly supported fields: bumps, indicators,
    oscillatory products and smoothed noise, with varied centers and scales."""
    mesh = grid.mesh()
    out = []
    lo, hi = math.log(scales[0]), math.log(scales[1])
    for kind in ("bump", "indicator", "oscillatory", "noise"):
        for i in range(n_each):
            c = rng.uniform(-center_range, center_range, grid.dim)
            s = math.exp(rng.uniform(lo, hi))
            rad = np.sqrt(sum((m - ci) ** 2 for m, ci in zip(mesh, c))) / s
            if kind == "bump":
                v = _bump(rad)
            elif kind == "indicator":
                v = (rad < 1).astype(float)
            elif kind == "oscillatory":
                k = rng.uniform(2, 12) / s
                v = _bump(rad) * np.cos(k * (mesh[0] - c[0]))
            else:
                noise = rng.normal(size=grid.shape)
                v = ndimage.gaussian_filter(noise, sigma=max(1.0, 0.1 * s / grid.h)) * _bump(rad)
            out.append((f"{kind}_{i}", SampledField(grid, v)))
    return out


@dataclass
class OpRatioReport:
    name: str
    sup_ratio: float
    argmax_field: str
    per_field: dict
    extended_sup: float
    drift: float
    skipped: list = field(default_factory=list)

    @property
    def stable(self) -> bool:
        return math.isfinite(self.sup_ratio) and self.drift <= STABILITY_TOL

    def to_dict(self) -> dict:
        return {**self.__dict__, "stable": self.stable}


def _ratios(T, fields, p, phi1, phi2, w, F, domain=None):
    grid = fields[0][1].grid
    st = family_stencils(grid, F)
    out, skipped = {}, []
    for name, f in fields:
        nf = morrey_norm(f, p, phi1, w, F, stencils=st, domain=domain).value
        if nf == 0:
            skipped.append(name)
            continue
        out[name] = morrey_norm(T(f), p, phi2, w, F, stencils=st, domain=domain).value / nf
    return out, skipped


def norm_ratio_estimate(T, p: float, phi1: MorreyWeightFn, phi2: MorreyWeightFn, w: Weight,
                        fields: list, F: BallFamily, extra_fields: list = (), name: str = "T") -> OpRatioReport:
    """sup over fields of ||Tf||_{p,phi2,w} / ||f||_{p,phi1,w}.

    The extension recomputes with the family extended one octave and the
    fields joined by ``extra_fields``; the relative change is the drift.
    """
    per, skipped = _ratios(T, fields, p, phi1, phi2, w, F)
    ext, _ = _ratios(T, list(fields) + list(extra_fields), p, phi1, phi2, w, F.extended())
    k = max(per, key=per.get)
    s, se = per[k], max(ext.values())
    return OpRatioReport(name, s, k, per, se, abs(se - s) / s if s else 0.0, skipped)


def support_sweep(T, p: float, phi: MorreyWeightFn, w: Weight, F: BallFamily, grid: Grid,
                  s0: float = 0.25, octaves: int = 4, kind: str = "dual") -> list:
    """``[(s, ratio)]`` for ``octaves + 1`` supports moving toward 0 by octaves.

    kind "annulus": f = indicator of s < |x| < 2s, s = s0 2^-k.  For power weights and
    power phi this family is dilation invariant, so it only probes the grid.
    kind "dual": f = w^(-1/(p-1)) on s < |x| < s0 (x > 0 in 1D), s = s0 2^-(k+1), the usual
    witness for A_p failure; its ratio grows without bound as s -> 0 when
    w^(1-p') is not locally integrable.
    """
    st = family_stencils(grid, F)
    rad = np.sqrt(sum(m ** 2 for m in grid.mesh())) if grid.dim == 2 else grid.mesh()[0]
    if kind == "dual":
        dual = w.pow_values(-1.0 / (p - 1.0))
    elif kind != "annulus":
        raise ValueError(f"unknown sweep kind {kind!r}")
    rows = []
    for k in range(octaves + 1):
        s = s0 * 2.0 ** -(k + (kind == "dual"))
        if kind == "annulus":
            f = SampledField(grid, ((rad > s) & (rad < 2 * s)).astype(float))
        else:
            f = SampledField(grid, np.where((rad > s) & (rad < s0), dual, 0.0))
        nf = morrey_norm(f, p, phi, w, F, stencils=st).value
        rows.append((s, morrey_norm(T(f), p, phi, w, F, stencils=st).value / nf))
    return rows


# ---------------------------------------------------------------------------
# local growth of reflected operators (1D half-line)


def _half_line_norms(f: SampledField, w: Weight, x0: float, t, p: float):
    """||f||_{p,w;B_t^+(x0)} for an array of t (cells with center in (0, inf))."""
    x = f.grid.axes()[0]
    dens = np.abs(f.effective()) ** p * w.pow_values(1.0) * f.grid.h
    keep = x > 0
    d = np.abs(x[keep] - x0)
    order = np.argsort(d)
    cs = np.concatenate([[0.0], np.cumsum(dens[keep][order])])
    k = np.searchsorted(d[order], np.asarray(t) * math.sqrt(1 - 1e-9), side="left")
    return cs[k] ** (1.0 / p)


def local_growth_ratio(Tf: SampledField, f: SampledField, w: Weight, x0: float, r: float, p: float) -> float:
    """||Tf||_{p,w;B_r^+} / (w(B_r^+)^(1/p) int_2r^inf w(B_t^+)^(-1/p) ||f||_{p,w;B_t^+} dt/t), 1D.

    w(B_t^+) is taken from the weight's power law (exact for every t), and
    ||f|| is frozen once B_t^+ holds the whole grid.
    """
    if w.power is None or f.grid.dim != 1:
        raise ValueError("local growth ratio is implemented for 1D power weights")
    num = _half_line_norms(Tf, w, x0, [r], p)[0]
    wr = float(w.power.half_ball_measure_1d(x0, r))
    t = 2 * r * 2.0 ** (np.arange(0, 64 * 48 + 1) / 64)
    fn = _half_line_norms(f, w, x0, t, p)
    wt = w.power.half_ball_measure_1d(x0, t)
    integrand = wt ** (-1.0 / p) * fn
    den = wr ** (1.0 / p) * float(np.trapezoid(integrand, np.log(t)))
    return float(num / den) if den > 0 else 0.0


# ---------------------------------------------------------------------------
# commutators with VMO functions on shrinking balls


SHAPES = {
    "bump": lambda z: _bump(np.abs(z)),
    "indicator_half": lambda z: ((z > -0.5) & (z < 0.5)).astype(float),
    "oscillatory": lambda z: _bump(np.abs(z)) * np.cos(6 * z),
    "one_sided": lambda z: ((z > 0.1) & (z < 0.9)).astype(float),
}


def local_commutator_ratio(commutator, grid: Grid, center: float, r: float, p: float,
                           phi: MorreyWeightFn, w: Weight, shapes=SHAPES) -> dict:
    """max over rescaled shapes of ||C[a,f]||_{p,phi,w;B_r} / ||f||_{p,phi,w;B_r} (1D).

    Both norms see only B_r: sub-balls are centered in B_r with radii
    r/8 .. r and are intersected with B_r.
    """
    x = grid.axes()[0]
    dom = np.abs(x - center) < r * math.sqrt(1 - 1e-9)
    pts = np.nonzero(dom)[0]
    F = BallFamily.lattice(center - r, center + r, r / 4, r / 8, 2.0, 4)
    st = family_stencils(grid, F)
    out = {}
    for name, shape in shapes.items():
        f = SampledField(grid, np.where(dom, shape((x - center) / r), 0.0))
        cf = np.zeros(grid.shape)
        cf[pts] = commutator(f, grid.points()[pts])
        cfield = SampledField(grid, cf)
        nf = morrey_norm(f, p, phi, w, F, stencils=st, domain=dom).value
        out[name] = morrey_norm(cfield, p, phi, w, F, stencils=st, domain=dom).value / nf
    return out
