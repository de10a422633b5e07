"""Command line entry point: one subcommand per experiment plus ``list`` and ``run``.

Exit codes: 0 all assertions PASS, 1 any FAIL, 2 INCONCLUSIVE, 3 usage error.
"""
from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

from pydantic import ValidationError

from . import __version__
from .experiments import REGISTRY, UnknownExperiment, list_experiments, run_experiment
from .fieldio import write_field
from .reports import USAGE_EXIT


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_EXIT, f"{self.prog}: error: {message}\n")


def _add_run_flags(p):
    p.add_argument("--config", metavar="PATH", help="JSON config; keys not in the experiment's model are rejected")
    p.add_argument("--out", metavar="PATH", help="write the JSON report here ('-' for stdout)")
    p.add_argument("--seed", type=int, metavar="N", help="seed override for randomized experiments")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="wmorrey", description="Numerical checks of weighted Morrey-space estimates.")
    ap.add_argument("--version", action="version", version=f"wmorrey {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, metavar="COMMAND", parser_class=_Parser)
    ls = sub.add_parser("list", help="list registered experiments")
    ls.add_argument("--json", action="store_true", help="machine-readable table")
    run = sub.add_parser("run", help="run the experiment named by the config's 'experiment' key")
    _add_run_flags(run)
    for e in REGISTRY.values():
        _add_run_flags(sub.add_parser(e.name, help=e.anchor))
    return ap


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise UsageError(f"cannot read config {path}: {e.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise UsageError(f"{path}:{e.lineno}:{e.colno}: malformed JSON: {e.msg}") from None
    if not isinstance(data, dict):
        raise UsageError(f"{path}: config must be a JSON object")
    return data


def _format_validation(err: ValidationError, source: str) -> str:
    lines = [f"{source}: invalid config"]
    for d in err.errors():
        loc = ".".join(str(x) for x in d["loc"]) or "(root)"
        lines.append(f"  field {loc}: {d['msg']}")
    return "\n".join(lines)


def print_list(as_json: bool, stream=None):
    stream = stream or sys.stdout
    rows = list_experiments()
    if as_json:
        stream.write(json.dumps(rows, indent=2, sort_keys=True) + "\n")
        return
    w = max(len(r["name"]) for r in rows)
    stream.write(f"{'name':<{w}}  {'runtime_s':>9}  {'criteria':<8}  anchor\n")
    for r in rows:
        crit = ",".join(str(c) for c in r["criteria"]) or "-"
        stream.write(f"{r['name']:<{w}}  {r['expected_runtime_s']:>9g}  "
                     f"{crit:<8}  {r['anchor']}\n")


def _write_outputs(report, out: str | None):
    text = report.to_json(datetime.now(timezone.utc).isoformat(timespec="seconds"))
    if out == "-":
        sys.stdout.write(text)
    elif out:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        for name, f in report.fields.items():
            write_field(f, path.with_name(f"{path.stem}_{name}.csv"))
    # keep stdout pure JSON when the report goes there
    summary = sys.stderr if out == "-" else sys.stdout
    for line in report.summary_lines():
        summary.write(line + "\n")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        print_list(args.json)
        return 0
    try:
        data = _load_config(args.config)
        name = args.command
        if name == "run":
            name = data.get("experiment")
            if not name:
                raise UsageError("'run' needs a config with an 'experiment' key")
        out = args.out if args.out is not None else data.get("out")
        try:
            report = run_experiment(name, data, args.seed)
        except ValidationError as e:
            raise UsageError(_format_validation(e, args.config or name)) from None
    except (UsageError, UnknownExperiment) as e:
        msg = e.args[0] if isinstance(e, UnknownExperiment) else str(e)
        sys.stderr.write(f"wmorrey: error: {msg}\n")
        return USAGE_EXIT
    _write_outputs(report, out)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
