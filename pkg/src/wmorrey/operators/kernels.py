"""Calderón-Zygmund kernels K(x, xi): homogeneous of degree -n in xi with
zero mean over the unit sphere."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class KernelError(ValueError):
    pass


@dataclass(frozen=True)
class KernelCheck:
    homogeneity_error: float
    sphere_mean: float
    sphere_abs_integral: float
    sphere_sup: float
    deriv_sup: float
    ok: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class KernelSpec:
    """``evaluator(x, xi)`` takes arrays whose last axis is the coordinate."""

    name: str
    dim: int
    evaluator: object = field(compare=False)
    autonomous: bool = True
    deriv_bound: float | None = None
    sphere_mean_tol: float = 1e-8

    def __call__(self, x, xi):
        return self.evaluator(np.asarray(x, float), np.asarray(xi, float))

    def sphere(self, n_angles: int = 4096) -> np.ndarray:
        if self.dim == 1:
            return np.array([[1.0], [-1.0]])
        th = 2 * math.pi * np.arange(n_angles) / n_angles
        return np.stack([np.cos(th), np.sin(th)], axis=1)

    def _sphere_weight(self, n_pts):
        return 1.0 if self.dim == 1 else 2 * math.pi / n_pts

    def check(self, x_samples=None, rng=None) -> KernelCheck:
        """Homogeneity, zero spherical mean, integrability and ``M`` on sampled x."""
        rng = np.random.default_rng(0) if rng is None else rng
        if x_samples is None:
            x_samples = rng.uniform(-1, 1, (8, self.dim))
        x_samples = np.atleast_2d(x_samples)
        S = self.sphere()
        wq = self._sphere_weight(len(S))
        hom, mean, absint, sup, dsup = 0.0, 0.0, 0.0, 0.0, 0.0
        for x in x_samples:
            xi = rng.normal(size=(64, self.dim))
            mu = np.exp(rng.uniform(math.log(0.1), math.log(10.0), (64, 1)))
            base = self(x, xi)
            scaled = self(x, mu * xi)
            expect = mu[:, 0] ** (-self.dim) * base
            hom = max(hom, float(np.max(np.abs(scaled - expect) / np.maximum(np.abs(expect), 1e-300))))
            kv = self(x, S)
            mean = max(mean, abs(float(kv.sum() * wq)))
            absint = max(absint, float(np.abs(kv).sum() * wq))
            sup = max(sup, float(np.abs(kv).max()))
            if self.dim == 2:
                d = np.diff(np.concatenate([kv, kv[:1]])) / (2 * math.pi / len(S))
                dsup = max(dsup, float(np.abs(d).max()))
            else:
                dsup = max(dsup, self.dim * sup)
        ok = hom <= 1e-8 and mean <= self.sphere_mean_tol and math.isfinite(absint)
        if self.deriv_bound is not None:
            ok = ok and dsup <= self.deriv_bound * (1 + 1e-6)
        return KernelCheck(hom, mean, absint, sup, dsup, ok)

    def require_zero_mean(self, x_samples=None) -> KernelCheck:
        chk = self.check(x_samples)
        if chk.sphere_mean > self.sphere_mean_tol:
            raise KernelError(
                f"kernel {self.name!r} fails the zero-mean check (|mean| = {chk.sphere_mean:.3g}); "
                "principal value is ill-defined"
            )
        return chk


def _r2(xi):
    return np.sum(xi * xi, axis=-1)


def hilbert() -> KernelSpec:
    """1/(pi xi) in 1D."""
    return KernelSpec("hilbert", 1, lambda x, xi: 1.0 / (math.pi * xi[..., 0]), deriv_bound=1 / math.pi)


def riesz_quadratic() -> KernelSpec:
    """(xi1^2 - xi2^2) / (2 pi |xi|^4) in 2D."""
    def ev(x, xi):
        return (xi[..., 0] ** 2 - xi[..., 1] ** 2) / (2 * math.pi * _r2(xi) ** 2)
    return KernelSpec("riesz_quadratic", 2, ev, deriv_bound=1 / math.pi)


def laplace_hessian(i: int, j: int) -> KernelSpec:
    """Second derivative D_ij of (1/2pi) ln|xi|: (delta_ij |xi|^2 - 2 xi_i xi_j) / (2 pi |xi|^4)."""
    d = 1.0 if i == j else 0.0

    def ev(x, xi):
        r2 = _r2(xi)
        return (d * r2 - 2 * xi[..., i] * xi[..., j]) / (2 * math.pi * r2 * r2)
    return KernelSpec(f"laplace_hessian_{i}{j}", 2, ev, deriv_bound=2 / math.pi)


def laplace_gradient(j: int):
    """First derivative D_j of (1/2pi) ln|xi| (homogeneous of degree 1 - n)."""
    return lambda xi: xi[..., j] / (2 * math.pi * _r2(xi))


def variable_riesz(amplitude: float = 0.5) -> KernelSpec:
    """(1 + amplitude cos(pi x1)) (xi1^2 - xi2^2)/(2 pi |xi|^4): x-dependent, zero mean for every x."""
    def ev(x, xi):
        return (1 + amplitude * np.cos(math.pi * x[..., 0])) * (xi[..., 0] ** 2 - xi[..., 1] ** 2) / (
            2 * math.pi * _r2(xi) ** 2)
    return KernelSpec("variable_riesz", 2, ev, autonomous=False,
                      deriv_bound=(1 + abs(amplitude)) / math.pi)


def unbalanced_1d() -> KernelSpec:
    """1/|xi|: homogeneous but with nonzero mean (no principal value)."""
    return KernelSpec("unbalanced", 1, lambda x, xi: 1.0 / np.abs(xi[..., 0]))


KERNELS = {
    "hilbert": hilbert,
    "riesz_quadratic": riesz_quadratic,
    "variable_riesz": variable_riesz,
    "laplace_hessian_00": lambda: laplace_hessian(0, 0),
    "laplace_hessian_01": lambda: laplace_hessian(0, 1),
    "laplace_hessian_11": lambda: laplace_hessian(1, 1),
}


def kernel_by_name(name: str, **params) -> KernelSpec:
    try:
        return KERNELS[name](**params)
    except KeyError:
        raise KernelError(f"unknown kernel {name!r}; known: {sorted(KERNELS)}") from None
