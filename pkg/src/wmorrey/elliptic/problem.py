"""Nondivergence Dirichlet problems on the unit square.

Lu = a^ij D_ij u + b^i D_i u + c u = f,  u = 0 on the boundary.

Coefficients and data are callables ``(X, h)`` on point arrays of shape
``(..., 2)``; ``h`` is the mesh size of the grid being sampled (``None`` for
pointwise evaluation), so mesh-tied mollification can be expressed.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import sympy

from ..operators.reflection import EllipticityViolated

_X, _Y = sympy.symbols("x y")


def _lambdify(expr):
    fn = sympy.lambdify((_X, _Y), sympy.sympify(expr), "numpy")

    def ev(X, h=None):
        X = np.asarray(X, float)
        return np.broadcast_to(fn(X[..., 0], X[..., 1]), X.shape[:-1]).astype(float)
    return ev


def _matrix_fn(entries):
    a11, a12, a22 = (_lambdify(e) for e in entries)

    def ev(X, h=None):
        out = np.empty(np.shape(X)[:-1] + (2, 2))
        out[..., 0, 0] = a11(X, h)
        out[..., 1, 1] = a22(X, h)
        out[..., 0, 1] = out[..., 1, 0] = a12(X, h)
        return out
    return ev


def _vector_fn(entries):
    b1, b2 = (_lambdify(e) for e in entries)
    return lambda X, h=None: np.stack([b1(X, h), b2(X, h)], axis=-1)


@dataclass(frozen=True)
class EllipticProblem:
    name: str
    a: object
    f: object
    b: object = None
    c: object = None
    Lambda: float = 1.0
    exact: object = None
    params: dict = field(default_factory=dict)

    def sample(self, X, h=None) -> dict:
        """Coefficient and data arrays at ``X``; checks ellipticity."""
        a = np.asarray(self.a(X, h), float)
        check_ellipticity(a, self.Lambda)
        shape = np.shape(X)[:-1]
        b = np.zeros(shape + (2,)) if self.b is None else np.asarray(self.b(X, h), float)
        c = np.zeros(shape) if self.c is None else np.asarray(self.c(X, h), float)
        return {"a": a, "b": b, "c": c, "f": np.asarray(self.f(X, h), float)}

    def apply(self, X, u, grad, hess, h=None):
        """Lu from pointwise values of u, Du, D^2u."""
        s = self.sample(X, h)
        return (np.einsum("...ij,...ij->...", s["a"], hess) + np.einsum("...i,...i->...", s["b"], grad)
                + s["c"] * u)

    def sup_lower_order(self, X, h=None) -> float:
        """max(1, ||b||_inf, ||c||_inf) on the sample points."""
        s = self.sample(X, h)
        return max(1.0, float(np.abs(s["b"]).max()), float(np.abs(s["c"]).max()))

    def describe(self) -> dict:
        return {"name": self.name, "Lambda": self.Lambda, **self.params}


def check_ellipticity(a, Lambda: float):
    """Eigenvalues of every 2x2 symmetric matrix must lie in [1/Lambda, Lambda]."""
    a = np.asarray(a, float)
    if not np.allclose(a[..., 0, 1], a[..., 1, 0]):
        raise EllipticityViolated("coefficient matrix is not symmetric")
    mean = 0.5 * (a[..., 0, 0] + a[..., 1, 1])
    rad = np.hypot(0.5 * (a[..., 0, 0] - a[..., 1, 1]), a[..., 0, 1])
    lo, hi = float(np.min(mean - rad)), float(np.max(mean + rad))
    if lo < (1 - 1e-12) / Lambda or hi > Lambda * (1 + 1e-12):
        raise EllipticityViolated(
            f"ellipticity violated: eigenvalues in [{lo:.4g}, {hi:.4g}], need [{1 / Lambda:.4g}, {Lambda:.4g}]")


def manufactured(name: str, u: str, a=("1", "0", "1"), b=("0", "0"), c="0", Lambda: float = 1.0) -> EllipticProblem:
    """Problem whose right side is L applied symbolically to ``u``.

    ``a`` lists (a11, a12, a22); all entries are sympy-parsable strings in x, y.
    """
    ue = sympy.sympify(u)
    A = [[sympy.sympify(a[0]), sympy.sympify(a[1])], [sympy.sympify(a[1]), sympy.sympify(a[2])]]
    B = [sympy.sympify(v) for v in b]
    C = sympy.sympify(c)
    xs = (_X, _Y)
    Lu = sum(A[i][j] * sympy.diff(ue, xs[i], xs[j]) for i in range(2) for j in range(2))
    Lu += sum(B[i] * sympy.diff(ue, xs[i]) for i in range(2)) + C * ue
    u_fn = _lambdify(ue)
    return EllipticProblem(name, _matrix_fn(a), _lambdify(sympy.simplify(Lu)), _vector_fn(b), _lambdify(C),
                           Lambda, lambda X: u_fn(X),
                           {"u": u, "a": list(a), "b": list(b), "c": c})


# ---------------------------------------------------------------------------
# VMO-type coefficients: sin(ln|ln r|) oscillates at every scale near r = 0
# but its mean oscillation over B_r tends to 0


def loglog_profile(X, center, scale: float = 2.0):
    d = np.hypot(X[..., 0] - center[0], X[..., 1] - center[1]) / scale
    return np.sin(np.log(np.abs(np.log(np.maximum(d, 1e-300)))))


def _bump_weights(k: int = 9):
    t = np.linspace(-1, 1, k)
    P, Q = np.meshgrid(t, t, indexing="ij")
    r2 = P * P + Q * Q
    w = np.where(r2 < 1, np.exp(-1 / np.maximum(1 - r2, 1e-12)), 0.0)
    keep = w > 0
    return np.stack([P[keep], Q[keep]], -1), w[keep] / w[keep].sum()


def mollified(func, X, h, width: float = 2.0):
    """Average of ``func`` against a smooth bump of radius ``width * h`` (pointwise when h is None)."""
    if h is None:
        return func(X)
    offs, wts = _bump_weights()
    X = np.asarray(X, float)
    out = np.zeros(X.shape[:-1])
    for o, wt in zip(offs * width * h, wts):
        out += wt * func(X + o)
    return out


_SINE = "-2*pi**2*sin(pi*x)*sin(pi*y)"


def vmo_diagonal(center=(0.45, 0.55), amplitude: float = 1.0) -> EllipticProblem:
    """a11 = 2 + A sin(ln|ln(|x - x*|/2)|) mollified at 2h, a22 = 1, a12 = 0."""
    if not 0 <= amplitude <= 1:
        raise ValueError("amplitude must lie in [0, 1]")

    def a(X, h=None):
        out = np.zeros(np.shape(X)[:-1] + (2, 2))
        out[..., 0, 0] = 2 + amplitude * mollified(lambda Z: loglog_profile(Z, center), X, h)
        out[..., 1, 1] = 1.0
        return out
    return EllipticProblem("vmo_diagonal", a, _lambdify(_SINE), Lambda=2 + amplitude,
                           params={"center": list(center), "amplitude": amplitude})


def vmo_cross(center=(0.45, 0.55), amplitude: float = 0.75) -> EllipticProblem:
    """a11 = a22 = 2, a12 = A sin(ln|ln(|x - x*|/2)|) mollified at 2h."""
    if not 0 <= amplitude < 1:
        raise ValueError("amplitude must lie in [0, 1)")

    def a(X, h=None):
        out = np.zeros(np.shape(X)[:-1] + (2, 2))
        out[..., 0, 0] = out[..., 1, 1] = 2.0
        out[..., 0, 1] = out[..., 1, 0] = amplitude * mollified(lambda Z: loglog_profile(Z, center), X, h)
        return out
    return EllipticProblem("vmo_cross", a, _lambdify(_SINE), Lambda=2 + amplitude,
                           params={"center": list(center), "amplitude": amplitude})


def laplace_sine() -> EllipticProblem:
    return manufactured("laplace_sine", "sin(pi*x)*sin(pi*y)")


def diagonal_polynomial() -> EllipticProblem:
    return manufactured("diagonal_polynomial", "x*(1-x)*y*(1-y)", a=("2", "0", "1"), Lambda=2.0)


def smooth_variable() -> EllipticProblem:
    """Variable smooth coefficients with drift and c <= 0; manufactured solution."""
    return manufactured("smooth_variable", "sin(pi*x)*sin(pi*y)*exp(x*y)",
                        a=("2 + sin(2*pi*x*y)/2", "3*sin(pi*(x + y))/10", "3/2 + cos(pi*x)/2"),
                        b=("1", "-1/2"), c="-1", Lambda=3.0)


PROBLEMS = {
    "laplace_sine": laplace_sine,
    "diagonal_polynomial": diagonal_polynomial,
    "smooth_variable": smooth_variable,
    "vmo_diagonal": vmo_diagonal,
    "vmo_cross": vmo_cross,
}


def problem_by_name(name: str, **params) -> EllipticProblem:
    try:
        return PROBLEMS[name](**params)
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; known: {sorted(PROBLEMS)}") from None


def zero_data(P: EllipticProblem) -> EllipticProblem:
    """Same operator with f = 0."""
    return EllipticProblem(P.name + "_homogeneous", P.a, lambda X, h=None: np.zeros(np.shape(X)[:-1]),
                           P.b, P.c, P.Lambda, (lambda X: np.zeros(np.shape(X)[:-1])), dict(P.params))


def scaled_data(P: EllipticProblem, lam: float) -> EllipticProblem:
    """Same operator with f -> lam f (so u -> lam u)."""
    ex = None if P.exact is None else (lambda X: lam * P.exact(X))
    return EllipticProblem(P.name, P.a, lambda X, h=None: lam * P.f(X, h), P.b, P.c, P.Lambda, ex,
                           {**P.params, "data_scale": lam})

