"""Acceptance criteria 1-14, each checked at its stated tolerance and runtime budget.

Every criterion records one PASS/FAIL line, printed in the terminal summary.
"""
import time


from conftest import ACCEPTANCE_LINES
from wmorrey.experiments import run_experiment


def record(n: int, title: str, budget_s: float, fn):
    t0 = time.perf_counter()
    ok, evidence = fn()
    dt = time.perf_counter() - t0
    in_time = dt < budget_s
    status = "PASS" if ok and in_time else "FAIL"
    timing = f"{dt:.1f}s < {budget_s:g}s" if in_time else f"{dt:.1f}s OVER BUDGET {budget_s:g}s"
    line = f"criterion {n:>2} {status}  {title}: {evidence} [{timing}]"
    ACCEPTANCE_LINES[n] = line
    print(line)
    assert ok, line
    assert in_time, line


def by_name(report, name):
    return next(a for a in report.assertions if a.name == name)


def all_pass(report, prefix):
    sel = [a for a in report.assertions if a.name.startswith(prefix)]
    return bool(sel) and all(a.status == "PASS" for a in sel)


def test_criterion_01_ap_exactness():
    def run():
        r = run_experiment("ap-constant", {"alpha": 0.5, "p": 2.0, "h_exp": 10})
        one, power = r.measured["uniform"], r.measured["power"]
        ok = abs(one - 1) <= 1e-8 and abs(power / (4 / 3) - 1) <= 0.02
        return ok, f"[1]_A2 = {one:.12g}, [|x|^1/2]_A2 = {power:.5f} vs 4/3"
    record(1, "A_p exactness", 10, run)


def test_criterion_02_ap_duality():
    def run():
        r = run_experiment("ap-properties", {"alphas": [-0.5, -0.25, 0.25, 0.5, 0.75], "p": 3.0})
        gaps = [v["duality_gap"] for v in r.measured.values()]
        return len(gaps) == 5 and max(gaps) <= 0.02, f"max relative gap {max(gaps):.2e} over 5 weights"
    record(2, "A_p duality", 30, run)


def test_criterion_03_bmo_oracles():
    def run():
        r = run_experiment("bmo", {"h_exp": 10})
        m = r.measured
        ok = (abs(m["sgn"] - 1) <= 0.02 and m["identity_modulus_error"] <= 0.02 and m["drift_error"] <= 1e-3)
        return ok, (f"||sgn||_* = {m['sgn']:.4f}, gamma_x rel err {m['identity_modulus_error']:.2e}, "
                    f"ln|x| drift err {m['drift_error']:.1e}")
    record(3, "BMO oracles", 30, run)


def test_criterion_04_john_nirenberg_weighted_bmo():
    def run():
        r = run_experiment("jn", {"functions": ["sgn", "log_abs"], "alphas": [0.0, 0.5]})
        drifts = [v for m in r.measured.values() for k, v in m.items() if "drift" in k]
        return r.status == "PASS" and len(drifts) == 10, f"max drift {max(drifts):.3f} over 2 x 2 cases (<= 0.10)"
    record(4, "John-Nirenberg and weighted BMO", 120, run)


def test_criterion_05_hilbert_oracle():
    def run():
        r = run_experiment("cz", {"h_exp": 10})
        err = r.measured["hilbert_max_relative_error"]
        return err <= 0.02, f"max relative error {err:.2e} at distance >= 5h"
    record(5, "Hilbert transform oracle", 30, run)


def test_criterion_06_weighted_boundedness_dichotomy():
    def run():
        good = run_experiment("op-ratio", {"alpha": 0.5, "seed": 0})
        bad = run_experiment("op-ratio", {"alpha": 3.0, "seed": 0})
        d, g = good.measured["drift"], bad.measured["sweep_growth"]
        ok = d <= 0.10 and g >= 2.0 and bad.status == "FAIL"
        return ok, f"|x|^1/2: extension drift {d:.3f}; |x|^3: sweep growth {g:.2f}x"
    record(6, "weighted boundedness dichotomy", 180, run)


def test_criterion_07_hardy_best_constant():
    def run():
        r = run_experiment("hardy", {"seed": 0})
        ratios = [v["best_ratio"] for v in r.measured.values()]
        ok = len(ratios) == 3 and all(0.85 <= q <= 1.05 for q in ratios) and r.status == "PASS"
        return ok, "best/B = " + ", ".join(f"{q:.3f}" for q in ratios)
    record(7, "Hardy best constant", 60, run)


def test_criterion_08_pair_condition():
    def run():
        r = run_experiment("check-pair", {"beta": 1.5, "subthreshold_beta": 0.5})
        m = r.measured
        return r.status == "PASS", (f"C weighted {m['weighted']['C']:.4f} (1/b = 0.6667), "
                                    f"weighted_log {m['weighted_log']['C']:.4f} (1.1111), sub-threshold FAIL")
    record(8, "pair-condition checker", 60, run)


def test_criterion_09_reflection():
    def run():
        r = run_experiment("reflect", {"seed": 0, "Lambda": 4.0, "n_samples": 10_000})
        drifts = [v["drift"] for v in r.measured.values()]
        ok = r.status == "PASS" and max(drifts) <= 0.05
        return ok, f"identity exact, max doubling drift {max(drifts):.4f}"
    record(9, "generalized reflection", 30, run)


def test_criterion_10_mms_convergence():
    def run():
        r = run_experiment("elliptic-mms", {"meshes": [32, 64, 128]})
        rat = [q for v in r.measured.values() for q in v["ratios"]]
        return all(3.4 <= q <= 4.6 for q in rat), "ratios " + ", ".join(f"{q:.3f}" for q in rat)
    record(10, "elliptic MMS convergence", 120, run)


def test_criterion_11_representation():
    def run():
        r = run_experiment("represent", {"n_cells": 128})
        e = r.measured["max_relative_error"]
        return e <= 0.05, f"max relative error {e:.2e} at h = 1/128"
    record(11, "representation formula", 180, run)


def test_criterion_12_apriori_estimate():
    def run():
        r = run_experiment("apriori", {})
        spreads = [v["spread"] for v in r.measured.values()]
        gate = by_name(r, "gate refuses phi = 1").status == "PASS"
        ok = len(spreads) == 8 and max(spreads) <= 0.15 and all_pass(r, "precondition gate") and gate
        return ok, f"max C_est spread {max(spreads):.3f} over 4 problems x 2 pairs; gate enforced"
    record(12, "a priori estimate", 600, run)


def test_criterion_13_interpolation_caccioppoli():
    def run():
        cfg = {"radii": [0.25, 0.125, 0.0625]}
        a, b = run_experiment("interp", cfg), run_experiment("caccioppoli", cfg)
        s = [v["spread"] for v in a.measured.values()] + [v["spread"] for v in b.measured.values()]
        ok = max(s) <= 0.15 and all_pass(a, "interpolation constant") and all_pass(b, "Caccioppoli constant")
        return ok, f"max spread over r in {{1/4, 1/8, 1/16}}: {max(s):.2e}"
    record(13, "interpolation and Caccioppoli", 120, run)


def test_criterion_14_vmo_commutator():
    def run():
        r = run_experiment("commutator", {})
        prof = r.measured["vmo_profile"]
        mono = all(b <= 1.05 * a for a, b in zip(prof, prof[1:]))
        return mono and prof[-1] < prof[0], "ratio profile " + ", ".join(f"{q:.3f}" for q in prof)
    record(14, "VMO commutator smallness", 120, run)
