"""Command line driver: ``gplab <experiment> [flags]``.

Every experiment writes ``result.json`` (deterministic given the config),
``timing.json`` (wall time) and its CSV/JSON artifacts to
``<outdir>/<experiment>/<run-id>/``.  Exit status is 0 when all checks pass,
1 when a check fails and 2 when the configuration is rejected.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import BACKEND, __version__
from .experiments import EXPERIMENTS, resolve_params

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_INVALID = 2


class ValidationError(ValueError):
    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


@dataclass
class ExperimentConfig:
    id: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    outdir: str = "runs"

    def resolved(self) -> dict:
        return resolve_params(self.id, self.params)

    def to_json(self) -> dict:
        return {"id": self.id, "seed": self.seed, "params": self.resolved()}


@dataclass
class ResultRecord:
    config: ExperimentConfig
    checks: list[dict]
    passed: bool
    summary: dict
    artifacts: list[str]
    wall_time: float
    path: str | None = None

    def to_json(self) -> dict:
        """Deterministic part of the record; wall time lives in ``timing.json``."""
        return {
            "experiment": self.config.id,
            "config": self.config.to_json(),
            "checks": self.checks,
            "pass": self.passed,
            "summary": self.summary,
            "artifacts": self.artifacts,
            "version": __version__,
        }


def validate(config: ExperimentConfig) -> list[str]:
    """All reasons the configuration would be rejected (empty when valid)."""
    if config.id not in EXPERIMENTS:
        return [f"unknown experiment {config.id!r}; choose from {sorted(EXPERIMENTS)}"]
    out = []
    if isinstance(config.seed, bool) or not isinstance(config.seed, int) or config.seed < 0:
        out.append(f"seed must be a non-negative integer, got {config.seed!r}")
    unknown = set(config.params) - set(EXPERIMENTS[config.id].defaults)
    if unknown:
        out.append(f"unknown parameters for {config.id}: {sorted(unknown)}")
    return out + EXPERIMENTS[config.id].validate(config.resolved())


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def run(config: ExperimentConfig, run_id: str | None = None, write: bool = True) -> ResultRecord:
    problems = validate(config)
    if problems:
        raise ValidationError(problems)
    exp = EXPERIMENTS[config.id]
    start = time.perf_counter()
    outcome = exp.run(config.resolved(), config.seed)
    wall = time.perf_counter() - start
    artifacts = sorted(list(outcome.tables) + list(outcome.documents))
    record = ResultRecord(
        config,
        [c.to_json() for c in outcome.checks],
        all(c.passed for c in outcome.checks),
        outcome.summary,
        artifacts,
        wall,
    )
    if write:
        rid = run_id or datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%S%fZ")
        path = Path(config.outdir) / config.id / rid
        path.mkdir(parents=True, exist_ok=True)
        for name, text in outcome.tables.items():
            (path / name).write_text(text)
        for name, doc in outcome.documents.items():
            (path / name).write_text(_dump(doc))
        (path / "result.json").write_text(_dump(record.to_json()))
        (path / "timing.json").write_text(_dump({"wall_time_s": wall, "backend": BACKEND}))
        record.path = str(path)
    return record


def report(records: list[dict]) -> dict:
    """Aggregate ``result.json`` documents into a pass/fail summary."""
    rows = []
    for rec in records:
        failed = [c["name"] for c in rec.get("checks", []) if not c.get("pass")]
        rows.append({"experiment": rec.get("experiment"), "pass": bool(rec.get("pass")), "failed_checks": failed})
    passed = sum(r["pass"] for r in rows)
    return {"total": len(rows), "passed": passed, "failed": len(rows) - passed, "pass": passed == len(rows), "runs": rows}


def format_report(summary: dict) -> str:
    lines = []
    for r in summary["runs"]:
        status = "PASS" if r["pass"] else "FAIL"
        extra = "" if r["pass"] else "  (" + ", ".join(r["failed_checks"]) + ")"
        lines.append(f"{status}  {r['experiment']}{extra}")
    lines.append(f"{summary['passed']}/{summary['total']} passed")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# argparse


def _json_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gplab", description="Numerical experiments for the Gross-Pitaevskii hierarchy.")
    parser.add_argument("--version", action="version", version=f"gplab {__version__} ({BACKEND} kernels)")
    sub = parser.add_subparsers(dest="command", required=True)
    for exp_id, exp in EXPERIMENTS.items():
        p = sub.add_parser(exp_id, help=f"run the {exp_id} experiment")
        p.add_argument("--config", type=Path, help="JSON file; its values override flags")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--outdir", default=None)
        p.add_argument("--run-id", default=None, help="output subdirectory name (default: UTC timestamp)")
        p.add_argument("--validate-only", action="store_true", help="check the configuration and exit")
        for key, default in exp.defaults.items():
            flag = "--" + key.replace("_", "-")
            if isinstance(default, bool):
                p.add_argument(flag, dest=key, type=lambda s: s.lower() in ("1", "true", "yes"), default=None, metavar="BOOL")
            elif isinstance(default, (int, float)) and not isinstance(default, bool):
                p.add_argument(flag, dest=key, type=type(default) if isinstance(default, float) else _json_value, default=None)
            else:
                p.add_argument(flag, dest=key, type=_json_value, default=None, metavar="JSON")
    rp = sub.add_parser("report", help="summarise result.json files")
    rp.add_argument("paths", nargs="+", type=Path, help="result.json files or directories to search")
    rp.add_argument("--json", action="store_true", help="print the summary as JSON")
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    exp_id = args.command
    params = {k: getattr(args, k) for k in EXPERIMENTS[exp_id].defaults if getattr(args, k) is not None}
    seed = args.seed if args.seed is not None else 0
    outdir = args.outdir or "runs"
    if args.config is not None:
        data = json.loads(args.config.read_text())
        if "id" in data and data["id"] != exp_id:
            raise ValidationError([f"config id {data['id']!r} does not match command {exp_id!r}"])
        params.update(data.get("params", {}))
        seed = data.get("seed", seed)
        outdir = data.get("outdir", outdir)
    return ExperimentConfig(exp_id, params, seed, outdir)


def _collect(paths: list[Path]) -> list[dict]:
    files = []
    for p in paths:
        files += sorted(p.rglob("result.json")) if p.is_dir() else [p]
    return [json.loads(f.read_text()) for f in files]


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "report":
        summary = report(_collect(args.paths))
        print(json.dumps(summary, indent=2) if args.json else format_report(summary))
        return EXIT_PASS if summary["pass"] else EXIT_FAIL
    try:
        config = config_from_args(args)
        problems = validate(config)
        if problems:
            raise ValidationError(problems)
    except (ValidationError, OSError, json.JSONDecodeError) as exc:
        msgs = exc.violations if isinstance(exc, ValidationError) else [str(exc)]
        for m in msgs:
            print(f"invalid configuration: {m}", file=sys.stderr)
        return EXIT_INVALID
    if args.validate_only:
        print("configuration ok")
        return EXIT_PASS
    record = run(config, args.run_id)
    for c in record.checks:
        print(f"{'PASS' if c['pass'] else 'FAIL'}  {c['name']} = {c['value']} (tol {c['tol']})")
    print(f"results written to {record.path}")
    return EXIT_PASS if record.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
