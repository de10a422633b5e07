"""Direct-summation singular integrals, commutators and the maximal operator.

The principal value is realized by dropping the cell of the output point:
output points are grid points, the source lattice is symmetric about each
of them, so every offset xi is summed together with -xi.  This is exactly
the symmetric-pair rule and needs no special handling of the neighbors.
"""
from __future__ import annotations

import math

import numpy as np

from ..field_core import BallFamily, Grid, SampledField
from .kernels import KernelSpec

# entries of the (outputs x sources) kernel matrix per chunk
CHUNK_ENTRIES = 4_000_000


def _source(f: SampledField):
    vals = f.effective().ravel()
    nz = np.nonzero(vals)[0]
    return f.grid.points()[nz], vals[nz], nz


def _targets(grid: Grid, points):
    if points is None:
        return grid.points(), None
    pts = np.asarray(points, float)
    return (pts.reshape(-1, grid.dim) if pts.ndim == 1 and grid.dim == 1 else np.atleast_2d(pts)), pts


def direct_sum(K: KernelSpec, f: SampledField, points=None, weight_diff=None, target_map=None):
    """sum_y K(x, m(x) - y) c(x, y) f(y) h^n over source cells y with m(x) - y != 0.

    ``weight_diff`` (cell values of a) turns c into a(x) - a(y); ``target_map``
    replaces the offset origin m(x) = x (used by reflected operators).
    Returns values at the grid points or at ``points``.
    """
    grid = f.grid
    Y, fy, idx = _source(f)
    X, raw = _targets(grid, points)
    out = np.zeros(len(X))
    if len(fy) == 0:
        return out.reshape(grid.shape) if points is None else out
    if weight_diff is not None:
        a_all = np.asarray(weight_diff, float).ravel()
        ay = a_all[idx]
        ax = _values_at(grid, a_all, X)
    M = X if target_map is None else target_map(X)
    step = max(1, CHUNK_ENTRIES // max(1, len(fy)))
    hv = grid.cell_volume
    for s in range(0, len(X), step):
        xi = M[s:s + step, None, :] - Y[None, :, :]
        center = np.all(xi == 0.0, axis=-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            kv = K(X[s:s + step, None, :], xi)
        kv = np.where(center, 0.0, kv)
        if weight_diff is not None:
            kv = kv * (ax[s:s + step, None] - ay[None, :])
        out[s:s + step] = kv @ fy * hv
    return out.reshape(grid.shape) if points is None else out


def _values_at(grid: Grid, flat_vals, X):
    idx = np.rint((X - np.asarray(grid.origin)) / grid.h).astype(int)
    if not np.allclose(np.asarray(grid.origin) + idx * grid.h, X, atol=1e-9 * grid.h):
        raise ValueError("commutator output points must be grid points")
    lin = np.ravel_multi_index(tuple(idx.T), grid.shape)
    return flat_vals[lin]


def cz_apply(K: KernelSpec, f: SampledField, points=None, check: bool = True):
    """P.V. sum_y K(x, x - y) f(y) h^n.  Refuses kernels without zero spherical mean."""
    if K.dim != f.grid.dim:
        raise ValueError("kernel and grid dimensions differ")
    if check:
        K.require_zero_mean()
    vals = direct_sum(K, f, points)
    return SampledField(f.grid, vals) if points is None else vals


def commutator_apply(a: SampledField, K: KernelSpec, f: SampledField, points=None, check: bool = True):
    """C[a, f](x) = P.V. sum_y K(x, x - y) (a(x) - a(y)) f(y) h^n."""
    if check:
        K.require_zero_mean()
    vals = direct_sum(K, f, points, weight_diff=a.values)
    return SampledField(f.grid, vals) if points is None else vals


def commutator_identity_gap(a: SampledField, K: KernelSpec, f: SampledField) -> float:
    """max |C[a,f] - (a Kf - K(af))| relative to max |C[a,f]| (absolute if that is 0)."""
    c = commutator_apply(a, K, f).values
    alt = a.values * cz_apply(K, f).values - cz_apply(K, a * f).values
    scale = max(float(np.abs(c).max()), 1.0)
    return float(np.abs(c - alt).max() / scale)


def jump_cells(a: SampledField, rel: float = 0.25) -> list:
    """Grid indices next to jumps of ``a`` larger than ``rel`` times its range."""
    v = a.values
    span = float(v.max() - v.min())
    if span == 0:
        return []
    hits = set()
    for ax in range(v.ndim):
        d = np.abs(np.diff(v, axis=ax)) > rel * span
        for idx in zip(*np.nonzero(d)):
            hits.add(tuple(int(i) for i in idx))
            nxt = list(idx)
            nxt[ax] += 1
            hits.add(tuple(nxt))
    return sorted(hits)


def pv_cutoff_consistency(K: KernelSpec, f: SampledField, points, grad_bound: float,
                          factors=(1, 2, 4)) -> dict:
    """Compare sums with the cells |xi| < eps removed, eps in {h, 2h, 4h}.

    Removing a symmetric set of offsets changes the sum by
    sum_{removed} K(xi)(f(x - xi) - f(x)) h^n, bounded by
    ||grad f|| sum |K(xi)| |xi| h^n over the removed offsets.
    """
    grid = f.grid
    X, _ = _targets(grid, points)
    Y, fy, _ = _source(f)
    h = grid.h
    vals = {}
    for m in factors:
        eps = m * h
        out = np.zeros(len(X))
        for i, x in enumerate(X):
            xi = x - Y
            r = np.sqrt((xi ** 2).sum(axis=1))
            keep = r >= eps * (1 - 1e-9)
            with np.errstate(divide="ignore"):
                out[i] = (K(x, xi[keep]) * fy[keep]).sum() * grid.cell_volume
        vals[m] = out
    # bound on the removed annulus, from a reference lattice
    span = max(factors) + 1
    offs = np.stack(np.meshgrid(*[np.arange(-span, span + 1)] * grid.dim, indexing="ij"), -1).reshape(-1, grid.dim)
    offs = offs * h
    rr = np.sqrt((offs ** 2).sum(axis=1))
    rows = []
    base = vals[factors[0]]
    ok = True
    for m in factors[1:]:
        sel = (rr > 0) & (rr < m * h * (1 - 1e-9))
        with np.errstate(divide="ignore"):
            kk = np.abs(K(X[:1].repeat(sel.sum(), 0), offs[sel]))
        bound = grad_bound * float((kk * rr[sel]).sum()) * grid.cell_volume
        gap = float(np.abs(vals[m] - base).max())
        ok &= gap <= bound * (1 + 1e-9) + 1e-13
        rows.append({"eps_over_h": m, "max_gap": gap, "bound": bound})
    return {"status": "PASS" if ok else "FAIL", "comparisons": rows}


def sublinearity_constant(Tf_vals, f: SampledField, points_idx) -> float:
    """max over output points of |Tf(x)| / sum_y |f(y)| / |x - y|^n h^n."""
    grid = f.grid
    Y, fy, _ = _source(f)
    X = grid.points()[points_idx]
    n = grid.dim
    denom = np.array([(np.abs(fy) / np.sqrt(((x - Y) ** 2).sum(axis=1)) ** n).sum() * grid.cell_volume
                      for x in X])
    num = np.abs(np.asarray(Tf_vals).ravel()[points_idx])
    return float(np.max(num / denom))


# ---------------------------------------------------------------------------
# Hardy-Littlewood maximal operator over a family of radii


def _window_half_width(r, h):
    # offsets j with |j| h < r (strict, same guard as ball membership)
    return int(math.ceil(r * math.sqrt(1 - 1e-9) / h)) - 1


def maximal(f: SampledField, F: BallFamily) -> SampledField:
    """Mf(x) = max over radii of F of mean_ball(|f|, B_r(x)) at every grid point."""
    grid = f.grid
    g = np.abs(f.effective())
    best = np.zeros(grid.shape)
    if grid.dim == 1:
        N = grid.size[0]
        for r in F.radii:
            m = _window_half_width(r, grid.h)
            if m < 0:
                continue
            c = np.concatenate([[0.0], np.cumsum(g)])
            i = np.arange(N)
            hi = np.minimum(i + m + 1, N)
            lo = np.maximum(i - m, 0)
            mean = (c[hi] - c[lo]) / (2 * m + 1)
            best = np.maximum(best, mean)
        return SampledField(grid, best)
    # 2D: the disk is a union of row segments; each segment sum is a
    # difference of prefix sums along the first axis
    N0, N1 = grid.shape
    c = np.concatenate([np.zeros((1, N1)), np.cumsum(g, axis=0)])
    i = np.arange(N0)
    for r in F.radii:
        k = _window_half_width(r, grid.h)
        if k < 0:
            continue
        total = np.zeros(grid.shape)
        count = 0
        for dj in range(-k, k + 1):
            m = _window_half_width(math.sqrt(max(r * r - (dj * grid.h) ** 2, 0.0)), grid.h)
            if m < 0:
                continue
            count += 2 * m + 1
            seg = c[np.minimum(i + m + 1, N0)] - c[np.maximum(i - m, 0)]
            lo, hi = max(0, -dj), min(N1, N1 - dj)
            total[:, lo:hi] += seg[:, lo + dj:hi + dj]
        best = np.maximum(best, total / count)
    return SampledField(grid, best)
