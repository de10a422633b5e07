"""Registry of runnable experiments: one validated config model and one run
function per claim, each returning a Report."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Annotated, Callable, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from .elliptic import problem as pr
from .elliptic.apriori import (
    NormPair,
    PreconditionFailed,
    apriori_estimate,
    max_principle_check,
    precondition_gate,
)
from .elliptic.representation import gaussian_bump, offset_points, representation_check, sphere_term
from .elliptic.seminorms import (
    Cutoff,
    LocalField,
    WeightSpec,
    caccioppoli_check,
    cutoff_check,
    interior_check,
    interpolation_check,
    interpolation_constant,
    triangle_bound_check,
)
from .elliptic.solver import hessian, solve_dirichlet, unit_square
from .field_core import Ball, BallFamily, Grid, SampledField, half_restrict
from .morrey import (
    MorreyWeightFn,
    PowerFn,
    check_pair,
    hardy_best_constant,
    hardy_sharpness,
    morrey_norm,
)
from .operators import (
    ReflectionMap,
    commutator_apply,
    cz_apply,
    geometric_inequality_check,
    hilbert,
    kernels,
    local_commutator_ratio,
    local_growth_ratio,
    maximal,
    nonsingular_apply,
    norm_ratio_estimate,
    pv_cutoff_consistency,
    random_spd_field,
    reflect_bounds_check,
    support_sweep,
    tilde,
)
from .operators import ratios
from .operators.reflection import nonsingular_sublinearity
from .oscillation import OscillationFn, bmo_norm, centered_mean_drift, jn_check, vmo_modulus, weighted_bmo_check
from .reports import Assertion, Report, check
from .weights import Weight, ap_characteristic, ap_property_suite


class UnknownExperiment(KeyError):
    pass


# ---------------------------------------------------------------------------
# config models


class Config(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class Seeded(Config):
    seed: int


class PairConfig(Config):
    name: str
    beta: float = Field(gt=0)
    alpha: float = 0.0
    x0: tuple[float, float] = (0.5, 0.5)

    def build(self) -> NormPair:
        return NormPair(self.name, MorreyWeightFn.power(self.beta), WeightSpec(self.alpha, self.x0))


class ProblemConfig(Config):
    name: str
    params: dict = Field(default_factory=dict)

    def build(self) -> pr.EllipticProblem:
        return pr.problem_by_name(self.name, **self.params)


ProblemRef = Union[str, ProblemConfig]
MeshSize = Annotated[int, Field(ge=32, le=512)]


def _problems(refs) -> list:
    return [pr.problem_by_name(r) if isinstance(r, str) else r.build() for r in refs]


DEFAULT_PAIRS = (PairConfig(name="unweighted_r^-1", beta=1.0),
                 PairConfig(name="sqrt_weight_r^-1.25", beta=1.25, alpha=0.5))
SUITE = ("laplace_sine", "smooth_variable", "vmo_diagonal", "vmo_cross")


def _check_problems(v):
    for r in v:
        name = r if isinstance(r, str) else r.name
        if name not in pr.PROBLEMS:
            raise ValueError(f"unknown problem {name!r}; known: {sorted(pr.PROBLEMS)}")
    return v


# ---------------------------------------------------------------------------
# registry


@dataclass(frozen=True)
class Experiment:
    name: str
    anchor: str
    runtime_s: float
    config: type
    run: Callable
    criteria: tuple = ()

    @property
    def randomized(self) -> bool:
        return issubclass(self.config, Seeded)

    def default_config(self) -> dict:
        # randomized experiments have no default seed: it must be given
        return {}

    def row(self) -> dict:
        return {"name": self.name, "anchor": self.anchor, "expected_runtime_s": self.runtime_s,
                "criteria": list(self.criteria), "randomized": self.randomized}


REGISTRY: dict = {}


def register(name, anchor, runtime_s, config, criteria=()):
    def deco(fn):
        REGISTRY[name] = Experiment(name, anchor, runtime_s, config, fn, tuple(criteria))
        return fn
    return deco


def get(name: str) -> Experiment:
    try:
        return REGISTRY[name]
    except KeyError:
        raise UnknownExperiment(f"unknown experiment {name!r}; known: {', '.join(REGISTRY)}") from None


def list_experiments() -> list:
    return [e.row() for e in REGISTRY.values()]


def validate(name: str, data: dict | None = None, seed: int | None = None):
    """Config model for ``name`` from ``data`` with an optional seed override.

    Raises pydantic.ValidationError (field diagnostics) or UnknownExperiment.
    """
    exp = get(name)
    data = dict(exp.default_config() if data is None else data)
    if data.get("experiment", name) != name:
        raise UnknownExperiment(f"config is for experiment {data['experiment']!r}, not {name!r}")
    data.pop("experiment", None)
    data.pop("out", None)
    notes = []
    if seed is not None:
        if exp.randomized:
            data["seed"] = seed
        else:
            notes.append(f"seed {seed} ignored: {name} is deterministic")
    return exp, exp.config.model_validate(data), notes


def run_experiment(name: str, data: dict | None = None, seed: int | None = None) -> Report:
    exp, cfg, notes = validate(name, data, seed)
    out = exp.run(cfg)
    assertions, measured, details = out[:3]
    fields = out[3] if len(out) > 3 else {}
    return Report(name, exp.anchor, cfg.model_dump(), assertions, measured, details, notes, fields)


# ---------------------------------------------------------------------------
# helpers


def _line(h_exp: int, half: float = 1.0) -> Grid:
    return Grid.cell_centered(-half, half, 2.0 ** -h_exp)


def _weight(grid, alpha: float, x0=None) -> Weight:
    return Weight.uniform(grid) if alpha == 0 else Weight.power_weight(grid, alpha, x0)


def log_abs_primitive(x):
    """x ln|x| - x, continuous at 0."""
    x = np.asarray(x, float)
    safe = np.where(x == 0, 1.0, x)
    return np.where(x == 0, 0.0, x * np.log(np.abs(safe)) - x)


def _osc_field(grid: Grid, name: str) -> SampledField:
    if name == "log_abs":
        return SampledField.cell_averages(grid, log_abs_primitive)
    fn = {"sgn": np.sign, "x": lambda x: x, "sqrt_abs": lambda x: np.sqrt(np.abs(x))}[name]
    return SampledField.from_function(grid, fn)


def _indicator(grid, lo, hi) -> SampledField:
    return SampledField.from_function(grid, lambda x: ((x > lo) & (x < hi)).astype(float))


def _spread(vals) -> float:
    vals = [v for v in vals if v > 0]
    return max(vals) / min(vals) - 1 if vals else 0.0


OSC_FAMILY = BallFamily.lattice(-0.25, 0.25, 0.125, 2.0 ** -5, 2 ** 0.5, 7)


# ---------------------------------------------------------------------------
# weights


class ApConstantConfig(Config):
    alpha: float = 0.5
    p: float = Field(2.0, gt=1)
    h_exp: int = Field(10, ge=6, le=13)
    include_uniform: bool = True


@register("ap-constant", "A_p characteristic: sup over balls of mean(w) mean(w^(-1/(p-1)))^(p-1)", 2,
          ApConstantConfig, criteria=(1,))
def _ap_constant(cfg: ApConstantConfig):
    g = _line(cfg.h_exp)
    F = BallFamily([[0.0]], 2.0 ** -5, 2.0, 5)
    out, measured, details = [], {}, {}
    if cfg.include_uniform:
        c1 = ap_characteristic(Weight.uniform(g), cfg.p, F).characteristic
        measured["uniform"] = c1
        out.append(check("uniform weight has characteristic 1", "A_p characteristic of w = 1",
                         abs(c1 - 1) <= 1e-8, c1, 1.0, tolerance=1e-8))
    rep = ap_characteristic(Weight.power_weight(g, cfg.alpha), cfg.p, F)
    measured["power"] = rep.characteristic
    details["power_report"] = rep
    a, p = cfg.alpha, cfg.p
    if -1 < a < p - 1:
        # centered intervals: mean |x|^a = 1/(1+a), mean |x|^(-a/(p-1)) = 1/(1-a/(p-1))
        exact = (1 / (1 + a)) * (1 / (1 - a / (p - 1))) ** (p - 1)
        err = abs(rep.characteristic - exact) / exact
        out.append(check("power weight matches the centered-interval closed form",
                         "A_p characteristic of |x|^alpha in one dimension",
                         err <= 0.02, rep.characteristic, exact, relative_error=err, tolerance=0.02))
    else:
        out.append(check("power weight outside A_p is detected", "|x|^alpha in A_p iff -1 < alpha < p-1",
                         not rep.in_ap, rep.characteristic, "inf", diagnostics=rep.diagnostics[:3]))
    return out, measured, details


class ApPropertiesConfig(Config):
    alphas: list[float] = Field(default_factory=lambda: [-0.5, -0.25, 0.25, 0.5, 0.75], min_length=1)
    p: float = Field(3.0, gt=1)
    h_exp: int = Field(10, ge=6, le=13)


@register("ap-properties", "structural properties of A_p weights (local bounds, duality, doubling, ...)", 2,
          ApPropertiesConfig, criteria=(2,))
def _ap_properties(cfg: ApPropertiesConfig):
    g = _line(cfg.h_exp)
    F = BallFamily.lattice(-0.25, 0.25, 0.125, 2.0 ** -5, 2.0, 4)
    out, measured, details = [], {}, {}
    for a in cfg.alphas:
        key = f"alpha={a:g}"
        rep = ap_property_suite(Weight.power_weight(g, a), cfg.p, F)
        gap = rep.properties["duality"]["relative_gap"]
        measured[key] = {"characteristic": rep.characteristic, "duality_gap": gap}
        details[key] = rep
        out.append(check(f"duality gap, {key}", "[w^(-1/(p-1))]_{A_p'} = [w]_{A_p}^(1/(p-1))",
                         gap <= 0.02, gap, "<= 0.02"))
        failed = [k for k, v in rep.properties.items() if v["status"] == "FAIL"]
        out.append(check(f"structural properties, {key}", "properties of A_p weights",
                         not failed, failed or "all pass"))
    return out, measured, details


# ---------------------------------------------------------------------------
# oscillation


class BmoConfig(Config):
    h_exp: int = Field(10, ge=8, le=13)


@register("bmo", "BMO norm as sup of mean oscillation; mean drift of ln|x| across scales", 2,
          BmoConfig, criteria=(3,))
def _bmo(cfg: BmoConfig):
    g = _line(cfg.h_exp)
    sgn = bmo_norm(OscillationFn(_osc_field(g, "sgn"), OSC_FAMILY))
    ident = vmo_modulus(OscillationFn(_osc_field(g, "x"), OSC_FAMILY), OSC_FAMILY.radii)
    lg = _osc_field(g, "log_abs")
    pairs = [(32 * g.h, 0.5), (2.0 ** -4, 2.0 ** -1), (2.0 ** -5, 2.0 ** -2)]
    drift = [(r, t, centered_mean_drift(lg, r, t), math.log(r / t)) for r, t in pairs]
    ident_err = max(abs(gm / (R / 2) - 1) for R, gm in ident)
    drift_err = max(abs(d - e) for _, _, d, e in drift)
    a_log = OscillationFn(lg, OSC_FAMILY)
    n0, n1 = bmo_norm(a_log), bmo_norm(a_log.extended())
    out = [
        check("||sgn||_* = 1", "BMO norm of the sign function", abs(sgn - 1) <= 0.02, sgn, 1.0, tolerance=0.02),
        check("gamma_x(R) = R/2", "VMO modulus of the identity", ident_err <= 0.02, ident_err, "<= 0.02",
              modulus=[{"R": R, "gamma": gm} for R, gm in ident]),
        check("ln|x| centered mean drift = ln(r/t)", "mean drift of a BMO function across scales",
              drift_err <= 1e-3, drift_err, "<= 1e-3",
              pairs=[{"r": r, "t": t, "drift": d, "ln(r/t)": e} for r, t, d, e in drift]),
        check("||ln|x|||_* finite and stable", "ln|x| belongs to BMO",
              math.isfinite(n0) and abs(n1 - n0) <= 0.1 * n0, n0, "drift <= 0.10", extended=n1),
    ]
    return out, {"sgn": sgn, "log_abs": n0, "identity_modulus_error": ident_err, "drift_error": drift_err}, {}


class VmoConfig(Config):
    function: Literal["x", "sgn", "sqrt_abs", "log_abs"] = "sqrt_abs"
    h_exp: int = Field(10, ge=8, le=13)


@register("vmo", "VMO modulus gamma_a(R) = sup of mean oscillation over balls of radius <= R", 2,
          VmoConfig, criteria=(3,))
def _vmo(cfg: VmoConfig):
    g = _line(cfg.h_exp)
    mod = vmo_modulus(OscillationFn(_osc_field(g, cfg.function), OSC_FAMILY), OSC_FAMILY.radii)
    gam = [gm for _, gm in mod]
    anchor = "VMO: gamma_a(R) -> 0 as R -> 0"
    if cfg.function == "x":
        err = max(abs(gm / (R / 2) - 1) for R, gm in mod)
        a = check("gamma_x(R) = R/2", anchor, err <= 0.02, err, "<= 0.02")
    elif cfg.function == "sgn":
        a = check("sgn is not VMO: gamma = 1 at every R", anchor, min(gam) >= 0.98, min(gam), ">= 0.98")
    elif cfg.function == "sqrt_abs":
        mono = all(x <= y * (1 + 1e-12) for x, y in zip(gam, gam[1:]))
        a = check("gamma decays toward 0", anchor, mono and gam[0] <= 0.5 * gam[-1], gam[0] / gam[-1],
                  "<= 0.5, nondecreasing in R")
    else:
        a = check("ln|x| is not VMO: gamma does not decay", anchor, gam[0] >= 0.5 * gam[-1], gam[0] / gam[-1],
                  ">= 0.5")
    return [a], {"modulus": [{"R": R, "gamma": gm} for R, gm in mod]}, {}


class JnConfig(Config):
    p: float = Field(2.0, gt=1)
    h_exp: int = Field(10, ge=8, le=13)
    functions: list[Literal["sgn", "log_abs", "x", "sqrt_abs"]] = Field(
        default_factory=lambda: ["sgn", "log_abs"], min_length=1)
    alphas: list[float] = Field(default_factory=lambda: [0.0, 0.5], min_length=1)


@register("jn", "John-Nirenberg: L^p mean oscillation controlled by ||a||_*, also with A_p weights", 10,
          JnConfig, criteria=(4,))
def _jn(cfg: JnConfig):
    g = _line(cfg.h_exp)
    out, measured, details = [], {}, {}
    for fn in cfg.functions:
        a = OscillationFn(_osc_field(g, fn), OSC_FAMILY)
        jn = jn_check(a, cfg.p)
        measured[f"{fn}/jn"] = {"max": jn.max_ratio, "extended": jn.extended_max, "drift": jn.drift}
        out.append(check(f"JN ratio finite and stable, {fn}", "John-Nirenberg inequality",
                         jn.stable, jn.drift, "<= 0.10", max_ratio=jn.max_ratio))
        for al in cfg.alphas:
            w = _weight(g, al)
            rep = weighted_bmo_check(a, w, cfg.p)
            key = f"{fn}/w=|x|^{al:g}"
            measured[key] = {"weighted": rep.form_w.max_ratio, "weighted_drift": rep.form_w.drift,
                             "dual": rep.form_dual.max_ratio, "dual_drift": rep.form_dual.drift}
            details[key] = {"ap_characteristic": rep.ap_characteristic, "bmo_norm": rep.bmo_norm}
            out.append(check(f"weighted BMO ratios finite and stable, {key}",
                             "weighted BMO norms equivalent to ||a||_* for A_p weights",
                             rep.status == "PASS", max(rep.form_w.drift, rep.form_dual.drift), "<= 0.10"))
    return out, measured, details


# ---------------------------------------------------------------------------
# Morrey norms, pair conditions, Hardy operator


class MorreyNormConfig(Config):
    field: Literal["indicator", "constant"] = "indicator"
    beta: float = 0.5
    p: float = Field(2.0, ge=1)
    h_exp: int = Field(10, ge=6, le=13)


@register("morrey-norm", "generalized weighted Morrey norm: sup over balls of phi^-1 (w(B)^-1 int_B |f|^p w)^(1/p)",
          2, MorreyNormConfig)
def _morrey_norm(cfg: MorreyNormConfig):
    g = Grid.cell_centered(-2.0, 2.0, 2.0 ** -cfg.h_exp)
    F = BallFamily.lattice(-1.0, 1.0, 0.125, 2.0 ** -4, 2.0, 4)
    w = Weight.uniform(g)
    phi = MorreyWeightFn.power(cfg.beta)
    if cfg.field == "constant":
        f = SampledField.constant(g, 1.0)
        exact = max(r ** cfg.beta for r in F.radii)
    else:
        # ball edges fall on cell edges, so the continuous value is exact on the grid
        f = _indicator(g, -0.5, 0.5)
        exact = max((max(0.0, min(B.center[0] + B.radius, 0.5) - max(B.center[0] - B.radius, -0.5))
                     / (2 * B.radius)) ** (1 / cfg.p) * B.radius ** cfg.beta for B in F)
    rep = morrey_norm(f, cfg.p, phi, w, F)
    scaled = morrey_norm(f * 3.0, cfg.p, phi, w, F).value
    out = [check("norm matches the continuous value", "Morrey norm of an indicator",
                 abs(rep.value - exact) <= 1e-10 * max(1.0, exact), rep.value, exact),
           check("homogeneity ||3f|| = 3||f||", "norm homogeneity", abs(scaled - 3 * rep.value) <= 1e-12 * scaled,
                 scaled / rep.value, 3.0)]
    return out, {"norm": rep.value}, {"report": rep}


class CheckPairConfig(Config):
    beta: float = Field(1.5, gt=0)
    subthreshold_beta: float = Field(0.5, gt=0)
    p: float = Field(2.0, ge=1)
    n: int = Field(2, ge=1, le=3)


@register("check-pair", "sufficient conditions on (phi1, phi2) for boundedness between Morrey spaces", 2,
          CheckPairConfig, criteria=(8,))
def _check_pair(cfg: CheckPairConfig):
    xs = [(0.0,) * cfg.n, (0.3, -0.2, 0.1)[: cfg.n]]
    rs = 2.0 ** -np.arange(0, 7)
    b = cfg.beta
    expected = {"weighted": 1 / b, "weighted_log": 1 / b + 1 / b ** 2}
    out, measured, details = [], {}, {}
    phi = MorreyWeightFn.power(b)
    for mode, exp in expected.items():
        rep = check_pair(phi, phi, cfg.p, None, mode, xs, rs, n=cfg.n)
        err = abs(rep.empirical_C - exp) / exp
        measured[mode] = {"C": rep.empirical_C, "consistency": rep.truncation["consistency"]}
        details[mode] = rep
        out.append(check(f"power pair passes, mode {mode}", f"pair condition ({mode})",
                         rep.status == "PASS" and err <= 0.05, rep.empirical_C, exp, relative_error=err))
        out.append(check(f"truncation doubling consistent, mode {mode}", "truncated t-integral",
                         rep.truncation["consistency"] <= 0.10, rep.truncation["consistency"], "<= 0.10"))
        sub = check_pair(MorreyWeightFn.power(cfg.subthreshold_beta), MorreyWeightFn.power(cfg.subthreshold_beta),
                         cfg.p, None, mode, xs, rs, n=cfg.n)
        out.append(check(f"sub-threshold beta reported FAIL, mode {mode}", f"pair condition ({mode})",
                         sub.status == "FAIL", sub.status, "FAIL", diagnostics=sub.diagnostics))
    return out, measured, details


class HardyConfig(Seeded):
    triples: list[tuple[float, float]] = Field(default_factory=lambda: [(1.0, 3.0), (0.5, 2.0), (0.5, 3.0)],
                                               min_length=1)
    n_trials: int = Field(50, ge=5)

    @field_validator("triples")
    @classmethod
    def _convergent(cls, v):
        for a, c in v:
            if not c - a - 1 > 0:
                raise ValueError(f"triple (a={a}, c={c}) needs c - a - 1 > 0")
        return v


@register("hardy", "weighted Hardy operator on nondecreasing g: best constant and its sharpness", 15,
          HardyConfig, criteria=(7,))
def _hardy(cfg: HardyConfig):
    rng = np.random.default_rng(cfg.seed)
    out, measured, details = [], {}, {}
    for a, c in cfg.triples:
        key = f"a={a:g},c={c:g}"
        v1, v2, psi = PowerFn(-a), PowerFn(c - a - 1), PowerFn(-c)
        hb = hardy_best_constant(v1, v2, psi)
        exact = 1 / (c - a - 1)
        sh = hardy_sharpness(v1, v2, psi, hb.B, rng, n_trials=cfg.n_trials)
        measured[key] = {"B": hb.B, "closed_form": exact, "best_ratio": sh.best_ratio}
        details[key] = {"best_constant": hb, "sharpness": sh}
        out.append(check(f"best constant, {key}", "v1 = s^-a, psi = t^-c, v2 = r^(c-a-1): B = 1/(c-a-1)",
                         abs(hb.B - exact) <= 1e-3 * exact, hb.B, exact))
        out.append(check(f"random search attains >= 85% of B and never exceeds 1.05 B, {key}",
                         "sharpness of the Hardy constant", 0.85 <= sh.best_ratio <= 1.05, sh.best_ratio,
                         "[0.85, 1.05]"))
    return out, measured, details


# ---------------------------------------------------------------------------
# operators


class MaximalConfig(Config):
    h_exp: int = Field(8, ge=6, le=11)


@register("maximal", "centered maximal function over a ball family", 2, MaximalConfig)
def _maximal(cfg: MaximalConfig):
    g = Grid.cell_centered(-4.0, 4.0, 2.0 ** -cfg.h_exp)
    F = BallFamily.spanning([[0.5], [2.0]], 1 / 64, 4.0, 2 ** (1 / 16))
    f = _indicator(g, 0, 1)
    M = maximal(f, F).values
    far = M[g.index_of([2.0 + g.h / 2])[0]]
    ins = M[g.index_of([0.5 + g.h / 2])[0]]
    x = g.axes()[0]
    # centered balls never shrink below r_min, so compare only that far from the jumps
    away = np.minimum(np.abs(x), np.abs(x - 1)) >= F.radii.min()
    dom = float((M - np.abs(f.values))[away].min())
    out = [check("M chi_[0,1](2) = 1/4", "maximal function of an indicator far away", abs(far / 0.25 - 1) <= 0.03,
                 far, 0.25),
           check("M chi_[0,1](1/2) = 1", "maximal function inside the support", abs(ins - 1) <= g.h, ins, 1.0),
           check("M f >= |f| at distance >= r_min from jumps", "maximal function dominates |f| at Lebesgue points", dom >= -1e-12, dom, ">= 0")]
    return out, {"far": far, "inside": ins}, {}


class CzConfig(Config):
    h_exp: int = Field(10, ge=8, le=12)


@register("cz", "Calderon-Zygmund singular integrals: kernel checks and the Hilbert transform oracle", 5,
          CzConfig, criteria=(5,))
def _cz(cfg: CzConfig):
    g = Grid.cell_centered(-2.0, 2.0, 2.0 ** -cfg.h_exp)
    x = g.axes()[0]
    Hf = cz_apply(hilbert(), _indicator(g, -1, 1)).values
    far = np.minimum(np.abs(x - 1), np.abs(x + 1)) >= 5 * g.h
    exact = np.log(np.abs((x[far] + 1) / (x[far] - 1))) / math.pi
    err = float((np.abs(Hf[far] - exact) / np.abs(exact)).max())
    kc = {name: kernels.kernel_by_name(name).check() for name in sorted(kernels.KERNELS)}
    zero = float(np.abs(cz_apply(hilbert(), SampledField.constant(g, 0.0)).values).max())
    g8 = Grid.cell_centered(-1.0, 1.0, 2.0 ** -8)
    gauss = SampledField.from_function(g8, lambda x: np.exp(-(x / 0.2) ** 2))
    pv = pv_cutoff_consistency(hilbert(), gauss, g8.points()[[200, 256, 300]],
                               grad_bound=math.sqrt(2 / math.e) / 0.2)
    out = [check("Hilbert transform of chi_[-1,1] vs (1/pi) ln|(x+1)/(x-1)|", "Hilbert transform closed form",
                 err <= 0.02, err, "<= 0.02 at distance >= 5h from jumps"),
           check("registered kernels are homogeneous with zero sphere mean", "Calderon-Zygmund kernel conditions",
                 all(c.ok for c in kc.values()), sorted(k for k, c in kc.items() if c.ok)),
           check("T0 = 0", "linearity", zero == 0.0, zero, 0.0),
           check("principal value independent of the cut-off", "principal value limit",
                 pv["status"] == "PASS", pv["status"])]
    return out, {"hilbert_max_relative_error": err}, {"kernel_checks": kc, "pv_cutoffs": pv}


class CommutatorConfig(Config):
    h_exp: int = Field(10, ge=8, le=11)
    p: float = Field(2.0, gt=1)
    alpha: float = 0.5


@register("commutator", "commutators C[a, f] = a Kf - K(af): identities and VMO smallness on small balls", 20,
          CommutatorConfig, criteria=(14,))
def _commutator(cfg: CommutatorConfig):
    line = Grid.cell_centered(-2.0, 2.0, 2.0 ** -cfg.h_exp)
    f = _indicator(line, -1, 1)
    const = float(np.abs(commutator_apply(SampledField.constant(line, 3.7), hilbert(), f).values).max())
    cx = commutator_apply(SampledField.from_function(line, lambda x: x), hilbert(), f).values
    cx_err = float(np.abs(cx / (2 / math.pi) - 1).max())
    g = Grid.cell_centered(-1.0, 1.0, 2.0 ** -cfg.h_exp)
    w, phi = Weight.power_weight(g, cfg.alpha, 0.0), MorreyWeightFn.power((1 + cfg.alpha) / cfg.p)

    def profile(a):
        C = lambda f, pts: commutator_apply(a, hilbert(), f, pts)
        return [max(local_commutator_ratio(C, g, 0.0, 2.0 ** -k, cfg.p, phi, w).values()) for k in range(1, 6)]

    vmo = profile(SampledField.from_function(g, lambda x: np.sqrt(np.abs(x))))
    jump = profile(SampledField.from_function(g, np.sign))
    mono = all(b <= a * 1.05 for a, b in zip(vmo, vmo[1:]))
    radii = [2.0 ** -k for k in range(1, 6)]
    out = [check("C[const, H] = 0", "commutator with a constant", const <= 1e-10, const, 0.0),
           check("C[x, H] chi_[-1,1] = 2/pi", "commutator with the identity", cx_err <= 0.01, cx_err, "<= 0.01"),
           check("local ratio nonincreasing as r halves for a = |x|^(1/2)", "VMO coefficients give small commutators",
                 mono and vmo[-1] < 0.5 * vmo[0], vmo, "nonincreasing within 5%, last < first / 2"),
           check("no decay for a = sgn (BMO, not VMO)", "smallness needs vanishing oscillation",
                 jump[-1] > 0.8 * jump[0], jump, "last > 0.8 first")]
    return out, {"radii": radii, "vmo_profile": vmo, "sgn_profile": jump}, {}


class ReflectConfig(Seeded):
    Lambda: float = Field(4.0, ge=1)
    n_samples: int = Field(10_000, ge=1000)
    n_fields: int = Field(2, ge=1, le=8)


@register("reflect", "generalized reflection T(x) = x - 2 x_n a^n / a^nn and its two-sided distance bounds", 12,
          ReflectConfig, criteria=(9,))
def _reflect(cfg: ReflectConfig):
    ss = np.random.SeedSequence(cfg.seed)
    streams = [np.random.default_rng(s) for s in ss.spawn(2 * cfg.n_fields + 2)]
    R0 = ReflectionMap.identity(2)
    x = streams[0].uniform(0, 1, (50, 2))
    ident = reflect_bounds_check(R0, streams[1], n_samples=2000)
    out = [check("identity coefficients give the mirror image", "reflection with a = I",
                 bool(np.array_equal(R0(x), tilde(x))) and ident.C1 == 1.0 and ident.C2 == 1.0,
                 [ident.C1, ident.C2], [1.0, 1.0])]
    measured = {}
    for k in range(cfg.n_fields):
        R = random_spd_field(streams[2 + 2 * k], cfg.Lambda)
        b = reflect_bounds_check(R, streams[3 + 2 * k], n_samples=cfg.n_samples)
        measured[f"field_{k}"] = {"C1": b.C1, "C2": b.C2, "C1_doubled": b.C1_doubled, "C2_doubled": b.C2_doubled,
                                  "drift": b.drift}
        out.append(check(f"random SPD field {k}: finite bounds, stable under sample doubling",
                         "C1 |x - y| <= |T(x) - y| <= C2 |x - y|",
                         0 < b.C1 <= b.C2 < math.inf and b.maps_to_lower and b.drift <= 0.05,
                         [b.C1, b.C2], "finite, drift <= 0.05", drift=b.drift))
    geo = geometric_inequality_check(streams[-1])
    out.append(check("geometric inequality", "|x~ - y| comparable to |x - y| across the boundary",
                     geo["status"] == "PASS", geo.get("max_ratio", geo["status"])))
    return out, measured, {"geometric": geo}


class NonsingularConfig(Config):
    h_exp: int = Field(8, ge=6, le=10)
    alpha: float = 0.5
    p: float = Field(2.0, gt=1)


@register("nonsingular", "nonsingular operators built on reflected points and their local growth", 3,
          NonsingularConfig)
def _nonsingular(cfg: NonsingularConfig):
    g = Grid.cell_centered(-4.0, 4.0, 2.0 ** -cfg.h_exp)
    f = half_restrict(_indicator(g, 1, 2))
    Tf = nonsingular_apply(hilbert(), ReflectionMap.identity(1), f)
    x = g.axes()[0]
    up = x > 0
    exact = -np.log((x[up] + 2) / (x[up] + 1)) / math.pi
    err = float(np.abs(Tf.values[up] / exact - 1).max())
    sub = nonsingular_sublinearity(Tf.values, f, np.nonzero(up)[0])
    w = Weight.power_weight(g, cfg.alpha, 0.0)
    growth = [local_growth_ratio(Tf, f, w, 0.5, 2.0 ** -k, cfg.p) for k in range(2, 6)]
    out = [check("reflected Hilbert operator vs closed form", "nonsingular operator of a half-line indicator",
                 err <= 0.01, err, "<= 0.01"),
           check("sublinearity constant <= 1/pi", "|Tf(x)| <= C int |f(y)| / |x~ - y| dy",
                 sub <= (1 + 1e-12) / math.pi, sub, 1 / math.pi),
           check("local growth ratio stable over r", "local growth estimate", max(growth) / min(growth) <= 1.05,
                 max(growth) / min(growth), "<= 1.05", ratios=growth)]
    return out, {"oracle_error": err, "sublinearity": sub, "growth": growth}, {}


class OpRatioConfig(Seeded):
    alpha: float = 0.5
    p: float = Field(2.0, gt=1)
    n_each: int = Field(6, ge=2, le=12)


@register("op-ratio", "Hilbert transform on weighted Morrey spaces: bounded for A_p weights, unbounded otherwise",
          10, OpRatioConfig, criteria=(6,))
def _op_ratio(cfg: OpRatioConfig):
    beta = (1 + cfg.alpha) / cfg.p
    phi = MorreyWeightFn.power(beta)
    T = lambda f: cz_apply(hilbert(), f)
    # the grid must hold the slow |x|^-1 tail of Hf for every family ball
    g = Grid.cell_centered(-8.0, 8.0, 2.0 ** -7)
    F = BallFamily.lattice(-0.5, 0.5, 1 / 32, 1 / 16, math.sqrt(2), 11)
    w = Weight.power_weight(g, cfg.alpha, 0.0)
    fields = ratios.test_fields(g, np.random.default_rng(cfg.seed), n_each=cfg.n_each)
    extra = ratios.test_fields(g, np.random.default_rng(cfg.seed + 1), n_each=cfg.n_each)
    rep = norm_ratio_estimate(T, cfg.p, phi, phi, w, fields, F, extra, "hilbert")
    gs = Grid.cell_centered(-1.0, 1.0, 2.0 ** -10)
    Fs = BallFamily.lattice(-0.5, 0.5, 1 / 32, 2.0 ** -7, math.sqrt(2), 11)
    sweep = support_sweep(T, cfg.p, phi, Weight.power_weight(gs, cfg.alpha, 0.0), Fs, gs, s0=0.25)
    growth = sweep[-1][1] / sweep[0][1]
    ap = ap_characteristic(Weight.power_weight(gs, cfg.alpha, 0.0), cfg.p, BallFamily([[0.0]], 2.0 ** -5, 2.0, 4))
    out = [check("norm ratio stable under family extension", "boundedness: sup ratio finite",
                 rep.stable, rep.drift, "<= 0.10", sup_ratio=rep.sup_ratio, extended_sup=rep.extended_sup),
           check("dual-witness ratio does not grow over a 4-octave support sweep", "boundedness needs A_p",
                 growth < 2.0, growth, "< 2", sweep=[{"s": s, "ratio": v} for s, v in sweep])]
    measured = {"sup_ratio": rep.sup_ratio, "extended_sup": rep.extended_sup, "drift": rep.drift,
                "sweep_growth": growth, "phi_beta": beta,
                "ap_characteristic": ap.characteristic if ap.in_ap else math.inf}
    return out, measured, {"per_field": rep.per_field, "argmax_field": rep.argmax_field}


# ---------------------------------------------------------------------------
# elliptic


class MmsConfig(Config):
    problems: list[ProblemRef] = Field(default_factory=lambda: ["laplace_sine", "smooth_variable"], min_length=1)
    meshes: list[MeshSize] = Field(default_factory=lambda: [32, 64, 128], min_length=3)
    write_fields: bool = False

    @field_validator("problems")
    @classmethod
    def _manufactured(cls, v):
        for P in _problems(_check_problems(v)):
            if P.exact is None:
                raise ValueError(f"problem {P.name} has no manufactured solution")
        return v


@register("elliptic-mms", "second-order convergence of the finite-difference solver (manufactured solutions)", 10,
          MmsConfig, criteria=(10,))
def _mms(cfg: MmsConfig):
    out, measured, fields = [], {}, {}
    for P in _problems(cfg.problems):
        sols = [solve_dirichlet(P, n) for n in cfg.meshes]
        errs = [s.max_error() for s in sols]
        rat = [a / b for a, b in zip(errs, errs[1:])]
        measured[P.name] = {"errors": errs, "ratios": rat, "residuals": [s.residual for s in sols],
                            "condition": [s.condition for s in sols]}
        out.append(check(f"error ratio per halving, {P.name}", "O(h^2) accuracy of the 9-point scheme",
                         all(3.4 <= q <= 4.6 for q in rat), rat, "[3.4, 4.6]"))
        if cfg.write_fields:
            s = sols[-1]
            H = hessian(s.u.values, s.grid.h)
            fields[f"{P.name}_u"] = s.u
            fields[f"{P.name}_D2u"] = SampledField(s.grid, np.sqrt((H ** 2).sum((-1, -2))))
    dp = solve_dirichlet(pr.diagonal_polynomial(), cfg.meshes[0]).max_error()
    zero = float(np.abs(solve_dirichlet(pr.zero_data(pr.laplace_sine()), cfg.meshes[0]).u.values).max())
    out.append(check("quadratic in each variable solved exactly", "second differences exact on quadratics",
                     dp <= 1e-12, dp, "<= 1e-12"))
    out.append(check("f = 0 gives u = 0", "uniqueness for zero data", zero == 0.0, zero, 0.0))
    return out, measured, {}, fields


class RepresentConfig(Config):
    n_cells: int = Field(128, ge=32, le=256)
    sigma: float = Field(0.08, gt=0.02, lt=0.2)


@register("represent", "second derivatives from the Laplacian through the Newtonian kernel", 2,
          RepresentConfig, criteria=(11,))
def _represent(cfg: RepresentConfig):
    g = unit_square(cfg.n_cells)
    pts = offset_points(g)
    rep = representation_check(gaussian_bump(g, sigma=cfg.sigma), pts)
    zero = representation_check(SampledField(g, np.zeros(g.shape)), pts)
    s = [sphere_term(0, 0), sphere_term(0, 1), sphere_term(1, 1)]
    out = [check(f"D_{k} v matches the kernel representation", "representation of D_ij v through Gamma_ij",
                 d["relative_error"] <= 0.05, d["relative_error"], "<= 0.05") for k, d in rep.per_pair.items()]
    out.append(check("sphere terms 1/2, 0, 1/2", "int_{|y|=1} Gamma_j y_i (quadrature)",
                     max(abs(a - b) for a, b in zip(s, (0.5, 0.0, 0.5))) <= 1e-12, s, [0.5, 0.0, 0.5]))
    out.append(check("v = 0 gives 0 = 0", "linearity", all(d["max_abs_error"] == 0 for d in zero.per_pair.values()),
                     max(d["max_abs_error"] for d in zero.per_pair.values()), 0.0))
    return out, {"max_relative_error": rep.max_relative_error}, {"report": rep}


class AprioriConfig(Config):
    problems: list[ProblemRef] = Field(default_factory=lambda: list(SUITE), min_length=1)
    pairs: list[PairConfig] = Field(default_factory=lambda: list(DEFAULT_PAIRS), min_length=1)
    meshes: list[MeshSize] = Field(default_factory=lambda: [32, 64, 128], min_length=2)
    p: float = Field(2.0, gt=1)
    corner: Literal["square", "interior_offset", "rounded"] = "square"
    exclude_boundary: bool = True

    _v = field_validator("problems")(classmethod(lambda cls, v: _check_problems(v)))


@register("apriori", "global estimate ||D^2u|| <= C (||u|| + ||f||) in weighted Morrey norms", 30,
          AprioriConfig, criteria=(12,))
def _apriori(cfg: AprioriConfig):
    out, measured, details = [], {}, {}
    probs = _problems(cfg.problems)
    for pc in cfg.pairs:
        pair = pc.build()
        try:
            gate = precondition_gate(pair, cfg.p)
        except PreconditionFailed as e:
            out.append(Assertion(f"precondition gate, {pair.name}", "hypotheses: pair condition and A_p", "FAIL",
                                 "refused", "PASS", {"diagnostic": str(e)}))
            continue
        out.append(check(f"precondition gate, {pair.name}", "hypotheses: pair condition and A_p", True, "PASS",
                         "PASS", ap_characteristic=gate["ap_characteristic"],
                         pair_condition_C=gate["pair_condition"]["empirical_C"]))
        for P in probs:
            rep = apriori_estimate(P, pair, cfg.p, tuple(cfg.meshes), cfg.exclude_boundary, cfg.corner)
            key = f"{P.name}/{pair.name}"
            measured[key] = {"C_est": rep.constants, "spread": rep.spread}
            details[key] = rep
            out.append(check(f"C_est mesh spread, {key}", "the constant depends on known quantities only",
                             rep.status == "PASS", rep.spread, "<= 0.15", C_est=rep.constants))
    try:
        precondition_gate(NormPair("phi=1", MorreyWeightFn.one(), WeightSpec(0.0)), cfg.p)
        refused = False
    except PreconditionFailed:
        refused = True
    out.append(check("gate refuses phi = 1", "hypotheses are enforced", refused, refused, True))
    pair = cfg.pairs[0].build()
    P0 = probs[0]
    a = apriori_estimate(P0, pair, cfg.p, (cfg.meshes[0],), cfg.exclude_boundary, cfg.corner).constants[0]
    b = apriori_estimate(pr.scaled_data(P0, 3.7), pair, cfg.p, (cfg.meshes[0],), cfg.exclude_boundary,
                         cfg.corner).constants[0]
    out.append(check("C_est invariant under f -> 3.7 f", "homogeneity", abs(a - b) <= 1e-12 * a, b / a, 1.0))
    mp = max_principle_check(pr.laplace_sine())
    out.append(check("discrete maximum principle", "f <= 0, c <= 0 gives u >= 0", mp["status"] == "PASS",
                     mp["min_u"], ">= 0"))
    return out, measured, details


class LocalConfig(Config):
    p: float = Field(2.0, gt=1)
    radii: list[float] = Field(default_factory=lambda: [0.25, 0.125, 0.0625], min_length=2)
    pairs: list[PairConfig] = Field(default_factory=lambda: list(DEFAULT_PAIRS), min_length=1)

    @field_validator("radii")
    @classmethod
    def _inside(cls, v):
        if any(not 0 < r <= 0.5 for r in v):
            raise ValueError("radii must lie in (0, 1/2] so balls about (1/2, 1/2) stay in the square")
        return v


@register("interp", "interpolation ||Du|| <= delta ||D^2u|| + (C/delta) ||u|| in Theta form, C independent of r",
          10, LocalConfig, criteria=(13,))
def _interp(cfg: LocalConfig):
    out, measured, details = [], {}, {}
    for pc in cfg.pairs:
        pair = pc.build()
        rep = interpolation_check(cfg.p, pair.phi, pair.weight, tuple(cfg.radii))
        measured[pair.name] = {"C": {str(r): v for r, v in rep.per_r.items()}, "spread": rep.spread}
        details[pair.name] = rep
        out.append(check(f"interpolation constant r-independent, {pair.name}", "constant independent of r",
                         rep.status == "PASS", rep.spread, "<= 0.15", C=list(rep.per_r.values())))
    pair = cfg.pairs[0].build()
    r = cfg.radii[len(cfg.radii) // 2]
    waves = [interpolation_constant([LocalField("wave", f"sin({k}*(x - 0.5)/{r!r})")], cfg.p, pair.phi,
                                    pair.weight, r)["C"] for k in (1, 2, 4)]
    out.append(check("sin(kx) sweep k = 1, 2, 4", "constant independent of the function", _spread(waves) <= 0.15,
                     waves, "spread <= 0.15"))
    const = interpolation_constant([LocalField("const", "3")], cfg.p, pair.phi, pair.weight, r)["C"]
    lin = interpolation_constant([LocalField("linear", "x + 2*y")], cfg.p, pair.phi, pair.weight, r)["C"]
    out.append(check("u = const holds with C = 0", "Du = 0", const == 0.0, const, 0.0))
    out.append(check("u linear needs a finite C", "D^2u = 0", 0 < lin < math.inf, lin, "finite"))
    return out, measured, details


class CaccioppoliConfig(LocalConfig):
    problems: list[ProblemRef] = Field(default_factory=lambda: list(SUITE), min_length=1)

    _v = field_validator("problems")(classmethod(lambda cls, v: _check_problems(v)))


@register("caccioppoli", "Caccioppoli-type and interior estimates on balls, with the cut-off construction", 25,
          CaccioppoliConfig, criteria=(13,))
def _caccioppoli(cfg: CaccioppoliConfig):
    out, measured, details = [], {}, {}
    probs = _problems(cfg.problems)
    radii = tuple(cfg.radii)
    for pc in cfg.pairs:
        pair = pc.build()
        rep = caccioppoli_check(probs, cfg.p, pair.phi, pair.weight, radii)
        measured[pair.name] = {"C": {str(r): v for r, v in rep.per_r.items()}, "spread": rep.spread,
                               "per_problem": rep.extra["per_problem"]}
        out.append(check(f"Caccioppoli constant r-independent, {pair.name}", "constant independent of r",
                         rep.status == "PASS", rep.spread, "<= 0.15", C=list(rep.per_r.values())))
        intr = interior_check(probs[0], cfg.p, pair.phi, pair.weight, radii)
        measured[f"{pair.name}/interior"] = {"ratio": list(intr.per_r.values()), "spread": intr.spread}
        out.append(check(f"interior ratio bounded and r-independent, {pair.name}",
                         "Theta_2 <= C (r^2 ||Lu|| + Theta_1 + Theta_0)", intr.status == "PASS", intr.spread,
                         "<= 0.15", ratio=list(intr.per_r.values())))
    cuts = {f"theta={t:g}": cutoff_check(Cutoff((0.5, 0.5), cfg.radii[0], t)) for t in (k / 8 for k in range(1, 8))}
    worst = [max(c["measured_constants"][s] for c in cuts.values()) for s in range(3)]
    out.append(check("cut-off: plateau, support and |D^s eta| <= C_s [theta(1-theta)r]^-s",
                     "cut-off construction", all(c["status"] == "PASS" for c in cuts.values()), worst,
                     next(iter(cuts.values()))["bounds"]))
    pair = cfg.pairs[0].build()
    tb = triangle_bound_check(probs[0], LocalField("u", "sin(3*x)*cos(2*y)"), cfg.p, pair.phi, pair.weight,
                              cfg.radii[0])
    out.append(check("||a:D^2u|| <= max(1,|b|,|c|)(||Lu|| + ||Du|| + ||u||)", "triangle bound",
                     tb["status"] == "PASS", tb["lhs"] / tb["rhs"], "<= 1"))
    details["cutoffs"] = cuts
    return out, measured, details
