import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from pydantic import ValidationError

from wmorrey import cli, experiments
from wmorrey.reports import Assertion, Report, check, jsonable, overall_status, without_timestamp


def run_cli(args, capsys):
    code = cli.main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


# --- reports ---------------------------------------------------------------


def test_overall_status_precedence():
    p = check("a", "x", True)
    f = check("b", "x", False)
    i = Assertion("c", "x", "INCONCLUSIVE")
    assert overall_status([p, p]) == "PASS"
    assert overall_status([p, i]) == "INCONCLUSIVE"
    assert overall_status([p, i, f]) == "FAIL"
    assert overall_status([]) == "INCONCLUSIVE"


def test_assertion_rejects_unknown_status():
    with pytest.raises(ValueError):
        Assertion("a", "x", "MAYBE")


def test_jsonable_maps_non_finite_to_strings():
    d = jsonable({"a": math.inf, "b": -math.inf, "c": math.nan, 1: (1, 2.5)})
    assert d == {"a": "inf", "b": "-inf", "c": "nan", "1": [1, 2.5]}
    json.dumps(d, allow_nan=False)


@settings(max_examples=30, deadline=None)
@given(st.dictionaries(st.text(max_size=5), st.floats(allow_nan=True, allow_infinity=True), max_size=6),
       st.text(max_size=20), st.text(max_size=20))
def test_report_json_is_a_function_of_content(measured, ts1, ts2):
    rep = Report("e", "anchor", {}, [check("a", "x", True, 1.0)], measured)
    a, b = rep.to_json(ts1), rep.to_json(ts2)
    assert without_timestamp(a) == without_timestamp(b)
    assert rep.to_json(ts1) == a


# --- registry --------------------------------------------------------------


def test_registry_covers_every_criterion():
    assert len(experiments.REGISTRY) >= 12
    covered = {c for e in experiments.REGISTRY.values() for c in e.criteria}
    assert covered == set(range(1, 15))


def test_registry_has_every_documented_subcommand():
    names = ("ap-constant ap-properties bmo vmo jn morrey-norm check-pair hardy maximal cz commutator reflect "
             "nonsingular op-ratio elliptic-mms represent apriori interp caccioppoli").split()
    assert set(names) == set(experiments.REGISTRY)


def test_every_entry_has_anchor_and_runtime():
    for row in experiments.list_experiments():
        assert row["anchor"] and row["expected_runtime_s"] > 0


def test_list_output_stable(capsys):
    first = run_cli(["list"], capsys)
    second = run_cli(["list"], capsys)
    assert first == second and first[0] == 0
    code, out, _ = run_cli(["list", "--json"], capsys)
    rows = json.loads(out)
    assert [r["name"] for r in rows] == list(experiments.REGISTRY)


def test_seed_is_mandatory_for_randomized_experiments():
    with pytest.raises(ValidationError, match="seed"):
        experiments.validate("hardy", {})
    _, cfg, _ = experiments.validate("hardy", {}, seed=4)
    assert cfg.seed == 4


def test_seed_override_wins_over_config():
    _, cfg, _ = experiments.validate("reflect", {"seed": 1}, seed=9)
    assert cfg.seed == 9


def test_seed_on_deterministic_experiment_is_noted():
    _, _, notes = experiments.validate("bmo", {}, seed=3)
    assert notes and "ignored" in notes[0]


def test_unknown_config_key_rejected():
    with pytest.raises(ValidationError):
        experiments.validate("ap-constant", {"alpah": 0.5})


def test_config_for_another_experiment_rejected():
    with pytest.raises(experiments.UnknownExperiment):
        experiments.validate("bmo", {"experiment": "vmo"})


# --- CLI -------------------------------------------------------------------


def test_ap_constant_uniform_passes(capsys, tmp_path):
    out = tmp_path / "r.json"
    code, stdout, _ = run_cli(["ap-constant", "--out", str(out)], capsys)
    assert code == 0
    rep = json.loads(out.read_text())
    assert rep["status"] == "PASS"
    assert rep["measured"]["uniform"] == pytest.approx(1.0, abs=1e-8)
    assert all(a["anchor"] for a in rep["assertions"])
    assert "PASS" in stdout


def test_op_ratio_non_ap_weight_fails_with_growth_evidence(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"experiment": "op-ratio", "alpha": 3.0, "seed": 0}))
    out = tmp_path / "r.json"
    code, _, _ = run_cli(["run", "--config", str(cfg), "--out", str(out)], capsys)
    assert code == 1
    rep = json.loads(out.read_text())
    assert rep["status"] == "FAIL"
    assert rep["measured"]["sweep_growth"] >= 2.0
    assert rep["measured"]["ap_characteristic"] == "inf"


def test_unknown_experiment_is_usage_error(capsys, tmp_path):
    with pytest.raises(SystemExit) as e:
        cli.main(["no-such-experiment"])
    assert e.value.code == 3
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"experiment": "no-such-experiment"}))
    code, _, err = run_cli(["run", "--config", str(cfg)], capsys)
    assert code == 3 and "unknown experiment" in err


def test_malformed_json_reports_line_and_column(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text('{"alpha": 0.5,\n  "p": }\n')
    code, _, err = run_cli(["ap-constant", "--config", str(cfg)], capsys)
    assert code == 3
    assert f"{cfg}:2:" in err


def test_invalid_field_reports_location(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"p": 0.5}))
    code, _, err = run_cli(["ap-constant", "--config", str(cfg)], capsys)
    assert code == 3 and "field p" in err


def test_missing_seed_is_usage_error(capsys):
    code, _, err = run_cli(["hardy"], capsys)
    assert code == 3 and "field seed" in err


def test_bad_flag_is_usage_error():
    with pytest.raises(SystemExit) as e:
        cli.main(["bmo", "--seed", "abc"])
    assert e.value.code == 3


def test_report_deterministic_modulo_timestamp(capsys, tmp_path):
    paths = [tmp_path / f"r{i}.json" for i in range(2)]
    for p in paths:
        assert run_cli(["reflect", "--seed", "5", "--out", str(p)], capsys)[0] == 0
    a, b = (p.read_text() for p in paths)
    assert without_timestamp(a) == without_timestamp(b)
    strip = lambda t: "\n".join(l for l in t.splitlines() if '"timestamp"' not in l)
    assert strip(a) == strip(b)


def test_stdout_report_is_pure_json(capsys):
    code, out, err = run_cli(["bmo", "--out", "-"], capsys)
    assert code == 0
    assert json.loads(out)["experiment"] == "bmo"
    assert "overall" in err


def test_fields_written_as_csv_next_to_report(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"problems": ["laplace_sine"], "write_fields": True}))
    out = tmp_path / "mms.json"
    assert run_cli(["elliptic-mms", "--config", str(cfg), "--out", str(out)], capsys)[0] == 0
    assert (tmp_path / "mms_laplace_sine_u.csv").exists()
    assert (tmp_path / "mms_laplace_sine_D2u.csv").exists()


def test_mms_rejects_problem_without_exact_solution(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"problems": ["vmo_cross"]}))
    code, _, err = run_cli(["elliptic-mms", "--config", str(cfg)], capsys)
    assert code == 3 and "manufactured" in err
