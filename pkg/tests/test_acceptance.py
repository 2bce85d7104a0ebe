"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v`` or directly with
``python3 tests/test_acceptance.py``.  Experiments run through the same
entry point as the CLI, with default configurations unless noted, and the
outputs land in a temporary directory.  Criterion 11 re-runs each of them
and compares every written file byte for byte.
"""

from __future__ import annotations

import math
import sys
import tempfile
import time
from pathlib import Path

import pytest

from gplab import cli
from gplab import combinatorics as comb

_OUT = Path(tempfile.mkdtemp(prefix="gplab-acceptance-"))

# key -> (experiment id, parameter overrides)
RUNS = {
    "counts": ("counts", {}),
    "moves": ("verify-moves", {}),
    "comm": ("verify-comm", {}),
    "regroup": ("verify-regroup", {}),
    "lemma22": ("est-lemma22", {}),
    "lemma23": ("est-lemma23", {}),
    "prop": ("est-prop21-scan", {}),
    "nls1": ("nls-run", {}),
    "nls3": ("nls-run", {"d": 3, "m": 32}),
    "factor": ("nls-factor-check", {}),
    "remark": ("remark-bound", {}),
}
_CACHE: dict[str, tuple[cli.ResultRecord, float]] = {}


def _run(key: str, run_id: str = "first"):
    if run_id == "first" and key in _CACHE:
        return _CACHE[key]
    exp_id, params = RUNS[key]
    config = cli.ExperimentConfig(exp_id, dict(params), seed=0, outdir=str(_OUT / key))
    start = time.perf_counter()
    record = cli.run(config, run_id)
    out = (record, time.perf_counter() - start)
    if run_id == "first":
        _CACHE[key] = out
    return out


def _checks(record, prefix: str = "") -> dict:
    return {c["name"]: c["value"] for c in record.checks if c["name"].startswith(prefix)}


def _announce(capsys, number: int, ok: bool, text: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {text}"
    if capsys is None:
        print(line)
    else:
        with capsys.disabled():
            print("\n" + line)


def criterion_1():
    rec, wall = _run("counts")
    p = rec.config.resolved()
    table = {r["n"]: r for r in comb.count_table(12)}
    fact = all(table[n]["n_factorial"] == math.factorial(n) and _checks(rec)[f"enumeration_minus_factorial_n{n}"] == 0 for n in range(1, 8))
    bounds = all(table[n]["echelon_count"] <= 4**n and table[n]["partition_count"] <= 2**n for n in range(2, 13))
    brute = all(_checks(rec)[f"echelon_vs_bruteforce_n{n}"] == 0 for n in range(1, 7))
    ok = p["n_max"] >= 12 and fact and bounds and brute and wall < 10
    return ok, f"|M|=n! for n<=7 {fact}, 4^n/2^n bounds n<=12 {bounds}, brute force n<=6 {brute}, {wall:.2f} s"


def criterion_2():
    state = comb.BoardState(comb.CollisionMap((1, 2, 1, 4)), comb.TimePermutation.from_inverse((2, 5, 4, 3)))
    moved = comb.acceptable_move(state, 3)
    marked = {(1, 2), (1, 3), (2, 4), (3, 5)}
    ok = moved.map.values == (1, 1, 2, 3) and moved.perm.header() == (2, 4, 5, 3) and moved.highlighted() == marked
    return ok, f"mu'={moved.map.values} header={moved.perm.header()} marked={sorted(moved.highlighted())}"


def criterion_3():
    rec, wall = _run("moves")
    p = rec.config.resolved()
    res = _checks(rec)["max_move_residual"]
    ok = (p["n"], p["d"], p["m"], p["points"], p["seeds"]) == (3, 1, 2, 8, 20) and res <= 1e-6 and wall < 300
    return ok, f"max residual {res:.3g} <= 1e-6 over {rec.summary['cases']} cases, {wall:.1f} s"


def criterion_4():
    rec, wall = _run("comm")
    p = rec.config.resolved()
    res = _checks(rec)["max_comm_residual"]
    ok = p["m"] == 2 and p["j_max"] + 1 <= 5 and p["j_max"] >= 4 and res <= 1e-12
    return ok, f"max residual {res:.3g} <= 1e-12 for j+1 <= {p['j_max'] + 1}"


def criterion_5():
    rec, wall = _run("regroup")
    p = rec.config.resolved()
    checks = _checks(rec)
    res, meas = checks["max_regroup_residual"], checks["domain_measure_deviation"]
    ok = p["n"] == 3 and rec.summary["classes"] == 5 and p["seeds"] == 5 and res <= 1e-6 and meas <= 1e-12
    return ok, f"{rec.summary['classes']} classes, residual {res:.3g} <= 1e-6, measure deviation {meas:.3g} <= 1e-12"


def criterion_6():
    rec, wall = _run("lemma22")
    p = rec.config.resolved()
    exps = _checks(rec, "exponent_error_")
    env = _checks(rec, "envelope_ratio_")
    grid = min(p["magnitudes"]) == 1 and max(p["magnitudes"]) == 64 and set(p["kinds"]) == {"plane", "sphere"}
    ok = grid and len(exps) == 6 and max(exps.values()) <= 0.1 and len(env) == 3 and max(env.values()) <= 10 and wall < 600
    return ok, f"max exponent error {max(exps.values()):.3g} <= 0.1, max envelope {max(env.values()):.3g} <= 10, {wall:.1f} s"


def criterion_7():
    rec, wall = _run("lemma23")
    exps = _checks(rec, "exponent_error_")
    ok = len(exps) == 2 and max(exps.values()) <= 0.1
    return ok, f"max exponent error vs -2.8 {max(exps.values()):.3g} <= 0.1"


def criterion_8():
    rec, wall = _run("prop")
    c = _checks(rec)
    ok = c["nonfinite_points"] == 0 and c["max_median_ratio"] <= 100 and c["large_xi_exponent_abs"] <= 0.2 and c["truncation_shift"] < 0.02
    return ok, (
        f"nonfinite {c['nonfinite_points']}, max/median {c['max_median_ratio']:.3g} <= 100, "
        f"|exponent| {c['large_xi_exponent_abs']:.3g} <= 0.2, truncation shift {c['truncation_shift']:.3g} < 0.02"
    )


def criterion_9():
    parts, ok = [], True
    for key in ("nls1", "nls3"):
        rec, wall = _run(key)
        p = rec.config.resolved()
        c = _checks(rec)
        good = (
            (p["dt"], p["T"]) == (1e-3, 1.0)
            and c["plane_wave_error"] <= 1e-8
            and c["mass_drift"] <= 1e-10
            and c["energy_drift"] <= 1e-6
            and 3.5 <= c["strang_ratio"] <= 4.5
        )
        ok = ok and good
        parts.append(
            f"d={p['d']} m={p['m']}: plane wave {c['plane_wave_error']:.2g}, mass {c['mass_drift']:.2g}, "
            f"energy {c['energy_drift']:.2g}, Strang ratio {c['strang_ratio']:.3f}"
        )
    return ok, "; ".join(parts)


def criterion_10():
    f, _ = _run("factor")
    r, _ = _run("remark")
    pf, pr = f.config.resolved(), r.config.resolved()
    res, ratio = _checks(f)["max_factor_residual"], _checks(r)["max_ratio"]
    ok = pf["ks"] == [2, 3] and pf["m"] == 16 and res <= 1e-10 and pr["runs"] == 10 and ratio <= 1 + 1e-6
    return ok, f"factorization residual {res:.3g} <= 1e-10 (k=2,3), remark ratio {ratio:.6f} <= 1+1e-6 over {pr['runs']} runs"


def criterion_11():
    mismatched = []
    for key in RUNS:
        first, _ = _run(key)
        second, _ = _run(key, "second")
        a, b = Path(first.path), Path(second.path)
        names = sorted(q.name for q in a.iterdir() if q.name != "timing.json")
        if names != sorted(q.name for q in b.iterdir() if q.name != "timing.json"):
            mismatched.append(key)
        elif any((a / n).read_bytes() != (b / n).read_bytes() for n in names):
            mismatched.append(key)
    ok = not mismatched
    return ok, f"{len(RUNS) - len(mismatched)}/{len(RUNS)} experiments byte-identical on re-run" + (f" (differ: {mismatched})" if mismatched else "")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8, criterion_9, criterion_10, criterion_11]


@pytest.mark.slow
@pytest.mark.parametrize("number", range(1, len(CRITERIA) + 1))
def test_criterion(number, capsys):
    ok, text = CRITERIA[number - 1]()
    _announce(capsys, number, ok, text)
    assert ok, text


if __name__ == "__main__":
    results = []
    for i, fn in enumerate(CRITERIA, start=1):
        ok, text = fn()
        _announce(None, i, ok, text)
        results.append(ok)
    sys.exit(0 if all(results) else 1)
