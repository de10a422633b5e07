"""Finite-difference solver for nondivergence problems on the unit square."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as spla

from ..field_core import Grid, SampledField
from .problem import EllipticProblem

RESIDUAL_TOL = 1e-10
COND_LIMIT = 1e12


class SolverError(RuntimeError):
    pass


def unit_square(n_cells: int) -> Grid:
    if n_cells < 32:
        raise ValueError("need at least 32 cells per side")
    return Grid.nodes((0.0, 0.0), (1.0, 1.0), n_cells)


def grid_points(grid: Grid) -> np.ndarray:
    return np.stack(grid.mesh(), axis=-1)


def interior_nodes(grid: Grid) -> np.ndarray:
    m = np.zeros(grid.shape, bool)
    m[1:-1, 1:-1] = True
    return m


def assemble(P: EllipticProblem, grid: Grid, active=None):
    """Sparse matrix and right side on the ``active`` nodes (default: all
    interior nodes); every other node carries the value 0.

    9-point stencil: centered second differences, the cross term
    (u(+,+) - u(+,-) - u(-,+) + u(-,-)) / 4h^2, and centered first differences.
    """
    active = interior_nodes(grid) if active is None else np.asarray(active, bool)
    if active[0].any() or active[-1].any() or active[:, 0].any() or active[:, -1].any():
        raise ValueError("active nodes must avoid the outer ring of the grid")
    h = grid.h
    X = grid_points(grid)[active]
    s = P.sample(X, h)
    a, b, c = s["a"], s["b"], s["c"]
    a11, a12, a22 = a[..., 0, 0], a[..., 0, 1], a[..., 1, 1]
    h2 = h * h
    stencil = {
        (0, 0): -2 * (a11 + a22) / h2 + c,
        (1, 0): a11 / h2 + b[..., 0] / (2 * h),
        (-1, 0): a11 / h2 - b[..., 0] / (2 * h),
        (0, 1): a22 / h2 + b[..., 1] / (2 * h),
        (0, -1): a22 / h2 - b[..., 1] / (2 * h),
        (1, 1): a12 / (2 * h2),
        (-1, -1): a12 / (2 * h2),
        (1, -1): -a12 / (2 * h2),
        (-1, 1): -a12 / (2 * h2),
    }
    number = np.full(grid.shape, -1)
    number[active] = np.arange(int(active.sum()))
    I, J = np.nonzero(active)
    row = number[I, J]
    rows, cols, vals = [], [], []
    for (di, dj), v in stencil.items():
        col = number[I + di, J + dj]
        ok = (col >= 0) & (v != 0)
        rows.append(row[ok])
        cols.append(col[ok])
        vals.append(v[ok])
    n = row.size
    A = sparse.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    return A, s["f"]


def _condition_estimate(A, lu=None) -> float:
    """1-norm condition estimate ||A||_1 ||A^-1||_1 from an LU factorization."""
    try:
        lu = spla.splu(A.tocsc()) if lu is None else lu
    except RuntimeError:
        return float("inf")
    inv = spla.LinearOperator(A.shape, matvec=lu.solve, rmatvec=lambda v: lu.solve(v, trans="T"),
                              dtype=float)
    return float(spla.onenormest(A, t=1) * spla.onenormest(inv, t=1))


@dataclass
class Solution:
    problem: EllipticProblem
    grid: Grid
    u: SampledField
    residual: float
    condition: float = float("nan")

    def max_error(self) -> float:
        if self.problem.exact is None:
            raise ValueError(f"problem {self.problem.name} has no exact solution")
        return float(np.abs(self.u.values - self.problem.exact(grid_points(self.grid))).max())


def solve_dirichlet(P: EllipticProblem, n_cells: int, active=None) -> Solution:
    """Zero Dirichlet data on the unit square, or on the node set ``active`` when given.

    Refuses numerically singular systems (condition estimate above COND_LIMIT)
    and solutions whose residual exceeds RESIDUAL_TOL times the backward-error
    scale ||f|| + ||A|| ||u||.
    """
    grid = unit_square(n_cells)
    active = interior_nodes(grid) if active is None else np.asarray(active, bool)
    A, rhs = assemble(P, grid, active)
    A = A.tocsc()
    try:
        lu = spla.splu(A)
    except RuntimeError as e:
        raise SolverError(f"LU factorization failed ({e}); matrix is singular") from e
    cond = _condition_estimate(A, lu)
    if not cond <= COND_LIMIT:
        raise SolverError(f"matrix is numerically singular: condition estimate {cond:.3g}")
    x = lu.solve(rhs)
    res = float(np.abs(A @ x - rhs).max()) if rhs.size else 0.0
    scale = max(float(np.abs(rhs).max()) + float(abs(A).sum(axis=1).max()) * float(np.abs(x).max()), 1e-300)
    if not np.all(np.isfinite(x)) or res > RESIDUAL_TOL * scale:
        raise SolverError(f"residual {res:.3g} exceeds {RESIDUAL_TOL:g} x {scale:.3g}; condition estimate {cond:.3g}")
    u = np.zeros(grid.shape)
    u[active] = x
    return Solution(P, grid, SampledField(grid, u), res, cond)


# ---------------------------------------------------------------------------
# derivatives on node grids


def _second_difference(u, h, axis):
    """Centered inside; second-order one-sided (2, -5, 4, -1) at both ends."""
    u = np.moveaxis(np.asarray(u, float), axis, 0)
    d = np.empty_like(u)
    d[1:-1] = (u[2:] - 2 * u[1:-1] + u[:-2]) / (h * h)
    d[0] = (2 * u[0] - 5 * u[1] + 4 * u[2] - u[3]) / (h * h)
    d[-1] = (2 * u[-1] - 5 * u[-2] + 4 * u[-3] - u[-4]) / (h * h)
    return np.moveaxis(d, 0, axis)


def gradient(u, h) -> np.ndarray:
    """Shape (..., 2); centered inside, second-order one-sided at the edges."""
    return np.stack(np.gradient(np.asarray(u, float), h, edge_order=2), axis=-1)


def hessian(u, h) -> np.ndarray:
    """Shape (..., 2, 2); the interior cross term equals the 9-point stencil's."""
    u = np.asarray(u, float)
    H = np.empty(u.shape + (2, 2))
    H[..., 0, 0] = _second_difference(u, h, 0)
    H[..., 1, 1] = _second_difference(u, h, 1)
    H[..., 0, 1] = H[..., 1, 0] = np.gradient(np.gradient(u, h, axis=0, edge_order=2), h, axis=1, edge_order=2)
    return H


def interior_mask(grid: Grid, layers: int = 1) -> np.ndarray:
    """False on the outermost ``layers`` rings of nodes."""
    m = np.zeros(grid.shape, bool)
    m[layers:-layers, layers:-layers] = True
    return m


def erode(mask, layers: int = 1) -> np.ndarray:
    """Nodes whose 3x3 neighbourhood lies in ``mask``, applied ``layers`` times."""
    m = np.asarray(mask, bool).copy()
    for _ in range(layers):
        p = np.pad(m, 1)
        out = np.ones_like(m)
        for di in (0, 1, 2):
            for dj in (0, 1, 2):
                out &= p[di:di + m.shape[0], dj:dj + m.shape[1]]
        m = out
    return m


def rounded_square(grid: Grid, radius: float = 0.125) -> np.ndarray:
    """Nodes strictly inside the unit square with its corners rounded to ``radius``."""
    X, Y = grid.mesh()
    cx = np.clip(X, radius, 1 - radius)
    cy = np.clip(Y, radius, 1 - radius)
    inside = np.hypot(X - cx, Y - cy) < radius - 1e-12
    return inside & interior_nodes(grid)
