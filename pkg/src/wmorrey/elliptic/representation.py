"""Second derivatives from the Laplacian through the Newtonian kernel.

For a smooth compactly supported v in the plane,
    D_ij v(x) = P.V. int Gamma_ij(x - y) Lap v(y) dy + Lap v(x) int_{|y|=1} Gamma_j(y) y_i dsigma,
with Gamma = (2 pi)^-1 ln|y|.  Both sides are evaluated numerically.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..field_core import Grid, SampledField
from ..operators import cz_apply, laplace_hessian
from ..operators.kernels import laplace_gradient
from .solver import hessian

PAIRS = ((0, 0), (0, 1), (1, 1))
TOLERANCE = 0.05


def sphere_term(i: int, j: int, n_angles: int = 4096) -> float:
    """int over the unit circle of Gamma_j(y) y_i, by the periodic trapezoid rule."""
    th = 2 * math.pi * np.arange(n_angles) / n_angles
    y = np.stack([np.cos(th), np.sin(th)], axis=1)
    return float((laplace_gradient(j)(y) * y[:, i]).sum() * 2 * math.pi / n_angles)


def gaussian_bump(grid: Grid, center=(0.5, 0.5), sigma: float = 0.08) -> SampledField:
    X, Y = grid.mesh()
    return SampledField(grid, np.exp(-((X - center[0]) ** 2 + (Y - center[1]) ** 2) / (2 * sigma ** 2)))


def offset_points(grid: Grid, center=(0.5, 0.5), radii=(0.04, 0.08, 0.12), n_angles: int = 8) -> np.ndarray:
    """Grid indices (flat) of points near circles around ``center``."""
    pts = []
    for r in radii:
        for k in range(n_angles):
            t = 2 * math.pi * k / n_angles
            pts.append(grid.index_of([center[0] + r * math.cos(t), center[1] + r * math.sin(t)]))
    return np.unique(np.ravel_multi_index(tuple(np.array(pts).T), grid.shape))


@dataclass
class RepresentationReport:
    h: float
    per_pair: dict
    n_points: int
    sphere_terms: dict
    flags: list = field(default_factory=list)

    @property
    def max_relative_error(self) -> float:
        return max((d["relative_error"] for d in self.per_pair.values()), default=0.0)

    @property
    def status(self) -> str:
        return "PASS" if self.max_relative_error <= TOLERANCE else "FAIL"

    def to_dict(self) -> dict:
        return {"status": self.status, "h": self.h, "n_points": self.n_points,
                "max_relative_error": self.max_relative_error, "sphere_terms": self.sphere_terms,
                "per_pair": self.per_pair, "flags": self.flags}


def representation_check(v: SampledField, points_idx) -> RepresentationReport:
    """Compare centered-difference D_ij v with the kernel representation at ``points_idx``.

    The relative error of a pair is max |lhs - rhs| / max |lhs| over the points
    (absolute when lhs vanishes identically, e.g. for v = 0).
    """
    grid = v.grid
    H = hessian(v.values, grid.h)
    lap = SampledField(grid, H[..., 0, 0] + H[..., 1, 1])
    pts = grid.points()[points_idx]
    lap_at = lap.values.ravel()[points_idx]
    per, sph = {}, {}
    for i, j in PAIRS:
        s = sphere_term(i, j)
        sph[f"{i}{j}"] = s
        lhs = H[..., i, j].ravel()[points_idx]
        rhs = cz_apply(laplace_hessian(i, j), lap, pts) + lap_at * s
        scale = float(np.abs(lhs).max())
        err = float(np.abs(lhs - rhs).max())
        per[f"{i}{j}"] = {"max_abs_error": err, "max_abs_lhs": scale,
                          "relative_error": err / scale if scale > 0 else err}
    return RepresentationReport(grid.h, per, len(points_idx), sph)
