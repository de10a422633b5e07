"""Uniform grids, balls, ball families and sampled scalar fields.

Every grid point is the center of a cubic cell of side ``h``; integrals
over a ball are midpoint sums over the cells whose centers lie strictly
inside the ball.  Fields are zero-extended beyond the grid, so a ball
that sticks out of the grid still counts its virtual cells in ``|B|``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

# points closer than this (relative) to the sphere are treated as outside
_BOUNDARY_RTOL = 1e-9
MIN_CELLS_PER_RADIUS = 4


class UnderResolvedBall(ValueError):
    """Raised when a ball holds no cell center or is below the 4h floor."""


@dataclass(frozen=True)
class Grid:
    dim: int
    origin: tuple
    h: float
    size: tuple

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if len(self.origin) != self.dim or len(self.size) != self.dim:
            raise ValueError("origin/size length must equal dim")
        if not self.h > 0:
            raise ValueError("spacing h must be positive")
        if min(self.size) < 4:
            raise ValueError("need at least 4 points per axis")
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))
        object.__setattr__(self, "size", tuple(int(s) for s in self.size))
        object.__setattr__(self, "h", float(self.h))

    @classmethod
    def cell_centered(cls, lo, hi, h) -> "Grid":
        """Cells tiling ``[lo, hi]`` exactly; points sit at cell centers."""
        lo = np.atleast_1d(np.asarray(lo, float))
        hi = np.atleast_1d(np.asarray(hi, float))
        n = np.rint((hi - lo) / h).astype(int)
        if np.any(np.abs(n * h - (hi - lo)) > 1e-9 * max(1.0, float(np.max(hi - lo)))):
            raise ValueError("box is not an integer number of cells")
        return cls(len(lo), tuple(lo + h / 2), h, tuple(n))

    @classmethod
    def nodes(cls, lo, hi, n_cells) -> "Grid":
        """Grid whose points include both endpoints of every axis."""
        lo = np.atleast_1d(np.asarray(lo, float))
        hi = np.atleast_1d(np.asarray(hi, float))
        h = float((hi[0] - lo[0]) / n_cells)
        n = np.rint((hi - lo) / h).astype(int) + 1
        return cls(len(lo), tuple(lo), h, tuple(n))

    @property
    def shape(self) -> tuple:
        return self.size

    @property
    def extent(self) -> tuple:
        return tuple((s - 1) * self.h for s in self.size)

    @property
    def cell_volume(self) -> float:
        return self.h ** self.dim

    @property
    def lower(self) -> np.ndarray:
        """Lower corner of the cell tiling."""
        return np.asarray(self.origin) - self.h / 2

    @property
    def upper(self) -> np.ndarray:
        return np.asarray(self.origin) + np.asarray(self.extent) + self.h / 2

    def axes(self) -> list:
        return [o + self.h * np.arange(n) for o, n in zip(self.origin, self.size)]

    def mesh(self) -> tuple:
        return tuple(np.meshgrid(*self.axes(), indexing="ij"))

    def points(self) -> np.ndarray:
        """All grid points as an ``(N, dim)`` array in C order."""
        return np.stack([m.ravel() for m in self.mesh()], axis=1)

    def index_of(self, x) -> tuple:
        """Index of the grid point nearest to ``x`` (no bounds check)."""
        x = np.atleast_1d(np.asarray(x, float))
        return tuple(int(round((xi - o) / self.h)) for xi, o in zip(x, self.origin))

    def contains_index(self, idx) -> bool:
        return all(0 <= i < n for i, n in zip(idx, self.size))

    def to_dict(self) -> dict:
        return {"dim": self.dim, "origin": list(self.origin), "h": self.h, "size": list(self.size)}

    @classmethod
    def from_dict(cls, d) -> "Grid":
        return cls(int(d["dim"]), tuple(d["origin"]), float(d["h"]), tuple(d["size"]))


@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float

    def __post_init__(self):
        c = tuple(float(v) for v in np.atleast_1d(self.center))
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")

    def scaled(self, lam) -> "Ball":
        return Ball(self.center, lam * self.radius)

    def to_dict(self) -> dict:
        return {"center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class BallStencil:
    """Cells of a ball: an in-grid window, a mask on it, and the virtual count."""

    slices: tuple
    mask: np.ndarray
    count: int

    @property
    def n_inside(self) -> int:
        return int(self.mask.sum())

    def take(self, values: np.ndarray) -> np.ndarray:
        return values[self.slices][self.mask]


def ball_stencil(grid: Grid, ball: Ball) -> BallStencil:
    c = np.asarray(ball.center, float)
    r = ball.radius
    r2 = r * r * (1.0 - _BOUNDARY_RTOL)
    ks, slices, clipped = [], [], []
    for d in range(grid.dim):
        lo = math.floor((c[d] - r - grid.origin[d]) / grid.h)
        hi = math.ceil((c[d] + r - grid.origin[d]) / grid.h)
        k = np.arange(lo, hi + 1)
        ks.append(k)
        a, b = max(lo, 0), min(hi + 1, grid.size[d])
        slices.append(slice(a, max(a, b)))
        clipped.append((a - lo, max(a, b) - lo))
    d2 = np.zeros([len(k) for k in ks])
    for d, k in enumerate(ks):
        coord = grid.origin[d] + grid.h * k - c[d]
        shape = [1] * grid.dim
        shape[d] = len(k)
        d2 = d2 + (coord ** 2).reshape(shape)
    full = d2 < r2
    count = int(full.sum())
    sub = full[tuple(slice(a, b) for a, b in clipped)]
    return BallStencil(tuple(slices), sub, count)


@dataclass(frozen=True)
class SampledField:
    grid: Grid
    values: np.ndarray
    support_mask: np.ndarray | None = None

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} != grid shape {self.grid.shape}")
        m = self.support_mask
        if m is not None:
            m = np.array(m, dtype=bool)
            if m.shape != self.grid.shape:
                raise ValueError("support_mask shape mismatch")
            m.setflags(write=False)
            bad = ~np.isfinite(v) & m
        else:
            bad = ~np.isfinite(v)
        if bad.any():
            raise ValueError("field values must be finite at unmasked points")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "support_mask", m)

    @classmethod
    def from_function(cls, grid: Grid, func, mask=None) -> "SampledField":
        return cls(grid, func(*grid.mesh()), mask)

    @classmethod
    def constant(cls, grid: Grid, c: float) -> "SampledField":
        return cls(grid, np.full(grid.shape, float(c)))

    @classmethod
    def cell_averages(cls, grid: Grid, antiderivative) -> "SampledField":
        """1D field whose values are exact cell averages of a function.

        ``antiderivative`` is any primitive of the function; cell averages make
        ball integrals exact whenever ball edges fall on cell edges.
        """
        if grid.dim != 1:
            raise ValueError("cell_averages is one-dimensional")
        x = grid.axes()[0]
        h = grid.h
        return cls(grid, (antiderivative(x + h / 2) - antiderivative(x - h / 2)) / h)

    def effective(self) -> np.ndarray:
        """Values with masked points zeroed."""
        if self.support_mask is None:
            return self.values
        return np.where(self.support_mask, self.values, 0.0)

    def with_values(self, values, keep_mask=True) -> "SampledField":
        return SampledField(self.grid, values, self.support_mask if keep_mask else None)

    def __add__(self, other):
        if isinstance(other, SampledField):
            return self.with_values(self.effective() + other.effective())
        return self.with_values(self.values + other)

    def __mul__(self, other):
        if isinstance(other, SampledField):
            return self.with_values(self.effective() * other.effective())
        return self.with_values(self.values * other)

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_values(-self.values)

    def abs(self) -> "SampledField":
        return self.with_values(np.abs(self.values))


def integrate_ball(f: SampledField, B: Ball) -> float:
    """Midpoint sum of ``f`` over the cells of ``B`` times the cell volume."""
    st = ball_stencil(f.grid, B)
    if st.count == 0:
        raise UnderResolvedBall(f"ball under-resolved: {B} holds no cell center")
    return float(st.take(f.effective()).sum() * f.grid.cell_volume)


def mean_ball(f: SampledField, B: Ball) -> float:
    """Average of ``f`` over ``B``, normalized by the discrete cell count."""
    st = ball_stencil(f.grid, B)
    if st.count == 0:
        raise UnderResolvedBall(f"ball under-resolved: {B} holds no cell center")
    return float(st.take(f.effective()).sum() / st.count)


def ball_volume(grid: Grid, B: Ball) -> float:
    """Discrete measure of ``B``: number of (virtual) cells times cell volume."""
    return ball_stencil(grid, B).count * grid.cell_volume


def half_restrict(f: SampledField) -> SampledField:
    """Mask out the closed lower half-space ``x_n <= 0``."""
    last = f.grid.mesh()[-1]
    upper = last > 0
    mask = upper if f.support_mask is None else (upper & f.support_mask)
    return SampledField(f.grid, np.where(mask, f.values, 0.0), mask)


@dataclass(frozen=True)
class BallFamily:
    """Finite stand-in for "all balls": centers times geometric radii.

    ``lattice`` records ``(lo, hi, spacing)`` when the centers came from
    :meth:`lattice`, so :meth:`extended` can double the center density.
    """

    centers: np.ndarray
    r_min: float
    ratio: float
    count: int
    lattice_spec: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.centers, float))
        if c.ndim != 2:
            raise ValueError("centers must be a list of points")
        order = np.lexsort(c.T[::-1])
        c = c[order]
        c.setflags(write=False)
        object.__setattr__(self, "centers", c)
        if not self.ratio > 1:
            raise ValueError("radius ratio must exceed 1")
        if self.count < 1 or not self.r_min > 0:
            raise ValueError("need a positive r_min and at least one radius")

    @classmethod
    def lattice(cls, lo, hi, spacing, r_min, ratio, count) -> "BallFamily":
        lo = np.atleast_1d(np.asarray(lo, float))
        hi = np.atleast_1d(np.asarray(hi, float))
        axes = [np.arange(a, b + spacing * 1e-9, spacing) for a, b in zip(lo, hi)]
        pts = np.stack([m.ravel() for m in np.meshgrid(*axes, indexing="ij")], axis=1)
        return cls(pts, r_min, ratio, count, (tuple(lo), tuple(hi), float(spacing)))

    @classmethod
    def spanning(cls, centers, r_min, r_max, ratio) -> "BallFamily":
        count = int(math.floor(math.log(r_max / r_min) / math.log(ratio) + 1e-9)) + 1
        return cls(np.atleast_2d(centers), r_min, ratio, count)

    @property
    def dim(self) -> int:
        return self.centers.shape[1]

    @property
    def radii(self) -> np.ndarray:
        return self.r_min * self.ratio ** np.arange(self.count)

    @property
    def r_max(self) -> float:
        return float(self.radii[-1])

    def __len__(self) -> int:
        return len(self.centers) * self.count

    def __iter__(self) -> Iterator[Ball]:
        for c in self.centers:
            for r in self.radii:
                yield Ball(tuple(c), float(r))

    def octave_steps(self) -> int:
        return max(1, int(round(math.log(2.0) / math.log(self.ratio))))

    def extended(self, direction: str = "up") -> "BallFamily":
        """One more octave of radii and twice the center density."""
        k = self.octave_steps()
        if direction == "up":
            r_min, count = self.r_min, self.count + k
        elif direction == "down":
            r_min, count = self.r_min / self.ratio ** k, self.count + k
        else:
            raise ValueError("direction must be 'up' or 'down'")
        if self.lattice_spec is not None:
            lo, hi, sp = self.lattice_spec
            fam = BallFamily.lattice(lo, hi, sp / 2, r_min, self.ratio, count)
            return fam
        return BallFamily(self.centers, r_min, self.ratio, count)

    def check_resolution(self, grid: Grid) -> None:
        if self.r_min < MIN_CELLS_PER_RADIUS * grid.h * (1 - 1e-9):
            raise UnderResolvedBall(
                f"r_min={self.r_min:g} below {MIN_CELLS_PER_RADIUS}h={MIN_CELLS_PER_RADIUS * grid.h:g}"
            )

    def inside(self, grid: Grid) -> bool:
        """True if every ball lies within the cell tiling of ``grid``."""
        lo, hi = grid.lower, grid.upper
        c = self.centers
        r = self.r_max * (1 - 1e-12)
        return bool(np.all(c - r >= lo - 1e-12) and np.all(c + r <= hi + 1e-12))

    def describe(self) -> dict:
        d = {
            "n_centers": int(len(self.centers)),
            "r_min": self.r_min,
            "ratio": self.ratio,
            "count": self.count,
            "r_max": self.r_max,
        }
        if self.lattice_spec is not None:
            lo, hi, sp = self.lattice_spec
            d["lattice"] = {"lo": list(lo), "hi": list(hi), "spacing": sp}
        else:
            d["centers"] = self.centers.tolist()
        return d


def resolved_balls(family: BallFamily, grid: Grid, warn: bool = True) -> list:
    """Balls of ``family`` that hold at least 4h of radius; warns about the rest."""
    keep, skipped = [], 0
    floor = MIN_CELLS_PER_RADIUS * grid.h * (1 - 1e-9)
    for B in family:
        if B.radius < floor or ball_stencil(grid, B).count == 0:
            skipped += 1
            continue
        keep.append(B)
    if skipped and warn:
        warnings.warn(f"skipped {skipped} under-resolved balls", stacklevel=3)
    if not keep:
        raise UnderResolvedBall("every ball of the family is under-resolved")
    return keep


def as_points(x: Sequence | np.ndarray, dim: int) -> np.ndarray:
    x = np.asarray(x, float)
    if x.ndim == 0 or (x.ndim == 1 and dim == 1):
        return x.reshape(-1, 1)
    return np.atleast_2d(x)
