"""Experiment drivers behind the command line.

Each experiment has default parameters (tolerances included), a validator
that runs before any computation, and a runner returning checks plus the
CSV/JSON artifacts to persist.  Runners are deterministic functions of
``(params, root seed)``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import combinatorics as comb
from . import estimates as est
from . import hierarchy as hier
from . import nls
from .seeds import derive_seed


@dataclass
class Check:
    name: str
    value: float
    tol: float | tuple[float, float]
    passed: bool

    def to_json(self) -> dict:
        tol = list(self.tol) if isinstance(self.tol, tuple) else self.tol
        return {"name": self.name, "value": _num(self.value), "tol": tol, "pass": bool(self.passed)}


def at_most(name: str, value: float, tol: float) -> Check:
    return Check(name, float(value), float(tol), bool(value <= tol))


def within(name: str, value: float, lo: float, hi: float) -> Check:
    return Check(name, float(value), (float(lo), float(hi)), bool(lo <= value <= hi))


@dataclass
class Outcome:
    checks: list[Check]
    tables: dict[str, str] = field(default_factory=dict)
    documents: dict[str, object] = field(default_factory=dict)
    summary: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Experiment:
    defaults: dict
    validate: Callable[[dict], list[str]]
    run: Callable[[dict, int], Outcome]


def _num(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# parameter validation helpers


def _int_in(params, key, lo, hi=None) -> list[str]:
    v = params.get(key)
    if isinstance(v, bool) or not isinstance(v, int):
        return [f"{key} must be an integer, got {v!r}"]
    if v < lo or (hi is not None and v > hi):
        rng = f">= {lo}" if hi is None else f"in [{lo}, {hi}]"
        return [f"{key}={v} must be {rng}"]
    return []


def _positive(params, key) -> list[str]:
    v = params.get(key)
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0:
        return [f"{key} must be a positive number, got {v!r}"]
    return []


def _real(params, key) -> list[str]:
    v = params.get(key)
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        return [f"{key} must be a finite number, got {v!r}"]
    return []


# ---------------------------------------------------------------------------
# combinatorics


def _v_enumerate(p):
    out = _int_in(p, "cap", 1)
    if not out:
        out += _int_in(p, "n", 1, p["cap"])
    return out


def _r_enumerate(p, seed):
    maps = comb.enumerate_maps(p["n"], p["cap"])
    doc = {"n": p["n"], "maps": [m.to_json() for m in maps]}
    checks = [at_most("count_minus_factorial", abs(len(maps) - math.factorial(p["n"])), 0)]
    return Outcome(checks, documents={"maps.json": doc}, summary={"count": len(maps)})


def _r_classes(p, seed):
    n = p["n"]
    classes = comb.partition_classes(n, p["cap"])
    members = sum(len(c.members) for c in classes)
    distinct = all(len({m.perm for m in c.members}) == len(c.members) for c in classes)
    sound = all(
        comb.reduce_to_echelon(m.map).representative == c.representative
        and comb.reduce_to_echelon(m.map).perm == m.perm
        for c in classes
        for m in c.members
    )
    measure = sum(comb.build_domain(c, p["t1"]).measure for c in classes)
    checks = [
        at_most("member_total_minus_factorial", abs(members - math.factorial(n)), 0),
        at_most("class_count_minus_echelon_count", abs(len(classes) - comb.count_echelon(n)), 0),
        at_most("repeated_permutation_in_class", 0 if distinct else 1, 0),
        at_most("unsound_member", 0 if sound else 1, 0),
        at_most("domain_measure_deviation", abs(measure - p["t1"] ** n), p["measure_tol"]),
    ]
    rows = [
        (n, " ".join(map(str, c.representative.values)), len(c.members), comb.build_domain(c, p["t1"]).measure)
        for c in classes
    ]
    return Outcome(
        checks,
        tables={"classes.csv": csv_text(["n", "class_representative", "member_count", "measure"], rows)},
        documents={"classes.json": {"n": n, "classes": [c.to_json() for c in classes]}},
        summary={"classes": len(classes)},
    )


def _v_classes(p):
    return _v_enumerate(p) + _positive(p, "t1") + _positive(p, "measure_tol")


def _brute_force_echelon_count(n: int) -> int:
    """Distinct representatives reached by acceptable moves from every map.

    Explores all move orders from each map's initial board, independent of the
    deterministic reduction and the monotone characterisation.
    """
    reps = set()
    for cmap in comb.iter_maps(n):
        seen = {cmap.values}
        stack = [comb.BoardState.initial(cmap)]
        while stack:
            state = stack.pop()
            moves = [j for j in range(2, n + 1) if comb.is_admissible(state.map, j)]
            if not moves:
                if comb.is_upper_echelon_by_rows(state.map):
                    reps.add(state.map.values)
                continue
            for j in moves:
                nxt = comb.acceptable_move(state, j)
                if nxt.map.values not in seen:
                    seen.add(nxt.map.values)
                    stack.append(nxt)
    return len(reps)


def _v_counts(p):
    return _int_in(p, "n_max", 1, 60) + _int_in(p, "n_factorial_max", 1, 8) + _int_in(p, "brute_force_max", 1, 8)


def _r_counts(p, seed):
    table = comb.count_table(p["n_max"])
    rows = [[r[c] for c in ("n", "n_factorial", "echelon_count", "four_pow_n", "partition_count")] for r in table]
    checks = []
    for n in range(1, min(p["n_factorial_max"], p["n_max"]) + 1):
        checks.append(at_most(f"enumeration_minus_factorial_n{n}", abs(sum(1 for _ in comb.iter_maps(n)) - math.factorial(n)), 0))
    for r in table:
        checks.append(at_most(f"echelon_over_4pow_n{r['n']}", r["echelon_count"] / r["four_pow_n"], 1.0))
        checks.append(at_most(f"partition_over_2pow_n{r['n']}", r["partition_count"] / 2 ** r["n"], 1.0))
    for n in range(1, min(p["brute_force_max"], p["n_max"]) + 1):
        checks.append(at_most(f"echelon_vs_bruteforce_n{n}", abs(comb.count_echelon(n) - _brute_force_echelon_count(n)), 0))
    header = ["n", "n_factorial", "echelon_count", "four_pow_n", "partition_count"]
    return Outcome(checks, tables={"counts.csv": csv_text(header, rows)})


# ---------------------------------------------------------------------------
# hierarchy


def _v_hier_common(p) -> list[str]:
    out = _int_in(p, "m", 2, 8) + _int_in(p, "d", 1, 3) + _int_in(p, "seeds", 1) + _int_in(p, "points", 1, 32)
    out += _positive(p, "t1") + _positive(p, "tol")
    return out


def _v_moves(p):
    out = _int_in(p, "cap", 1) + _v_hier_common(p) + _int_in(p, "example_seeds", 1)
    if not out:
        out += _int_in(p, "n", 2, p["cap"])
        if not out and (p["m"] ** p["d"]) ** (2 * (p["n"] + 1)) > 2**22:
            out.append(f"kernel with {p['n'] + 1} particles on m={p['m']}, d={p['d']} is too large")
    return out


def _move_cases(n: int, cap: int) -> list[tuple[comb.BoardState, int]]:
    """Every admissible move from every state on each deterministic reduction path."""
    cases = []
    for cmap in comb.enumerate_maps(n, cap):
        red = comb.reduce_to_echelon(cmap)
        state = comb.BoardState.initial(cmap)
        path = [state]
        for j in red.moves:
            state = comb.acceptable_move(state, j)
            path.append(state)
        for st in path:
            for j in range(2, n + 1):
                if comb.is_admissible(st.map, j):
                    cases.append((st, j))
    return cases


def worked_example() -> tuple[comb.BoardState, int]:
    """Board ``mu = (1,2,1,4)`` with header ``(t2, t5, t4, t3)``, move at column 3."""
    state = comb.BoardState(comb.CollisionMap((1, 2, 1, 4)), comb.TimePermutation.from_inverse((2, 5, 4, 3)))
    return state, 3


def _r_moves(p, seed):
    grid = hier.LatticeGrid(p["d"], p["m"])
    quad = hier.SimplexQuadrature(p["points"])
    rows, worst = [], 0.0
    jobs = []
    for n in range(2, p["n"] + 1):
        jobs += [(n, st, j, p["seeds"]) for st, j in _move_cases(n, p["cap"])]
    if p.get("include_example") and p["m"] ** (10 * p["d"]) <= 2**22:
        st, j = worked_example()
        jobs.append((4, st, j, p["example_seeds"]))
    for n, st, j, count in jobs:
        for s in range(count):
            src = hier.random_symmetric_kernel(n + 1, grid, derive_seed(seed, "verify-moves", n, s))
            res = hier.verify_move_invariance(st, j, src, p["t1"], quad)
            worst = max(worst, res)
            rows.append((n, " ".join(map(str, st.map.values)), " ".join(map(str, st.perm.images)), j, s, p["points"], res))
    checks = [at_most("max_move_residual", worst, p["tol"]), at_most("no_cases", 0 if jobs else 1, 0)]
    header = ["n", "mu", "sigma", "j", "seed", "quad_points", "residual"]
    return Outcome(checks, tables={"moves.csv": csv_text(header, rows)}, summary={"cases": len(rows)})


def _v_comm(p):
    out = _int_in(p, "m", 2, 4) + _int_in(p, "d", 1, 2) + _int_in(p, "seeds", 1) + _positive(p, "tol")
    out += _int_in(p, "j_max", 3, 6)
    if not out and (p["m"] ** p["d"]) ** (2 * (p["j_max"] + 1)) > 2**22:
        out.append("kernel too large for the commutation check")
    return out


def _r_comm(p, seed):
    grid = hier.LatticeGrid(p["d"], p["m"])
    rows, worst = [], 0.0
    for j in range(3, p["j_max"] + 1):
        for s in range(p["seeds"]):
            rng = np.random.default_rng(derive_seed(seed, "verify-comm", j, s))
            gamma = hier.random_symmetric_kernel(j + 1, grid, int(rng.integers(2**63)))
            times = np.sort(rng.uniform(0.0, 1.0, 4))[::-1]
            for i in range(1, j - 1):
                for l in range(i + 1, j):
                    res = hier.verify_commutation(times, i, l, j, gamma)
                    worst = max(worst, res)
                    rows.append((j, i, l, s, *times, res))
    header = ["j", "i", "l", "seed", "t_jm1", "t_j", "t_jp1", "t_jp2", "residual"]
    return Outcome([at_most("max_comm_residual", worst, p["tol"])], tables={"commutation.csv": csv_text(header, rows)})


def _v_regroup(p):
    out = _int_in(p, "cap", 1) + _v_hier_common(p) + _positive(p, "measure_tol")
    if not out:
        out += _int_in(p, "n", 1, min(p["cap"], 4))
    return out


def _r_regroup(p, seed):
    n = p["n"]
    grid = hier.LatticeGrid(p["d"], p["m"])
    quad = hier.SimplexQuadrature(p["points"])
    classes = comb.partition_classes(n, p["cap"])
    rows, worst = [], 0.0
    for s in range(p["seeds"]):
        src = hier.random_symmetric_kernel(n + 1, grid, derive_seed(seed, "verify-regroup", n, s))
        for c in classes:
            res = hier.verify_regrouping(n, c, src, p["t1"], quad)
            worst = max(worst, res)
            rows.append((n, " ".join(map(str, c.representative.values)), len(c.members), s, p["points"], res))
    measure = sum(comb.build_domain(c, p["t1"]).measure for c in classes)
    checks = [
        at_most("max_regroup_residual", worst, p["tol"]),
        at_most("domain_measure_deviation", abs(measure - p["t1"] ** n) / p["t1"] ** n, p["measure_tol"]),
    ]
    header = ["n", "class_representative", "member_count", "seed", "quad_points", "residual"]
    return Outcome(checks, tables={"regroup.csv": csv_text(header, rows)}, summary={"classes": len(classes)})


# ---------------------------------------------------------------------------
# estimates


def _unit(v):
    return v / np.linalg.norm(v)


def unit_placements(count: int, seed: int) -> list[est.SurfaceSpec]:
    """Planes and spheres passing near the segment ``[0, e1]``.

    Each surface goes through a point within ``1/4`` of ``t e1`` with
    ``t ~ U[0, 1]``; spheres have radius ``U[0.5, 3]``.  Even indices are
    planes, odd indices spheres.
    """
    rng = np.random.default_rng(seed)
    e1 = np.array([1.0, 0.0, 0.0])
    out = []
    for i in range(count):
        anchor = rng.uniform(0.0, 1.0) * e1 + rng.uniform(0.0, 0.25) * _unit(rng.normal(size=3))
        n = _unit(rng.normal(size=3))
        if i % 2 == 0:
            out.append(est.SurfaceSpec.plane(n, float(anchor @ n)))
        else:
            radius = rng.uniform(0.5, 3.0)
            out.append(est.SurfaceSpec.sphere(anchor + radius * n, radius))
    return out


def random_rotation(seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def _v_surface(p, pairs: bool):
    out = _int_in(p, "placements", 1) + _positive(p, "exponent_tol")
    mags = p.get("magnitudes")
    if not isinstance(mags, list) or len(mags) < 2 or not all(isinstance(v, (int, float)) and v > 0 for v in mags):
        out.append("magnitudes must be a list of at least two positive numbers")
    kinds = p.get("kinds")
    if not isinstance(kinds, list) or not kinds or not set(kinds) <= {"plane", "sphere"}:
        out.append("kinds must be a nonempty subset of ['plane', 'sphere']")
    if pairs:
        out += _positive(p, "band_max")
        pl = p.get("pairs")
        if not isinstance(pl, list) or not pl:
            out.append("pairs must be a nonempty list of [a, b]")
        else:
            for pair in pl:
                if not (isinstance(pair, list) and len(pair) == 2):
                    out.append(f"pair {pair!r} must be [a, b]")
                    continue
                a, b = pair
                if not (0 < a < 2 and 0 < b < 2 and a + b > 2):
                    out.append(f"(a, b) = ({a}, {b}) violates 0 < a < 2, 0 < b < 2, a + b > 2")
    return out


def _surface_sweep(p, seed, label, integrand, degree, fresh=False):
    """Evaluate ``integrand(P, xi)`` over magnitudes x placements x kinds.

    By default one family of unit placements is rotated and dilated to each
    ``|xi|``; with ``fresh`` every magnitude draws its own family.
    """
    per_kind = {}
    rows = []
    common = unit_placements(2 * p["placements"], derive_seed(seed, label, "placements"))
    for kind in p["kinds"]:
        mags, vals = [], []
        for mag in p["magnitudes"]:
            base = unit_placements(2 * p["placements"], derive_seed(seed, label, "fresh", mag)) if fresh else common
            shapes = [P for P in base if P.kind == kind][: p["placements"]]
            rot = random_rotation(derive_seed(seed, label, "rotation", kind, mag, fresh))
            xi = mag * (rot @ np.array([1.0, 0.0, 0.0]))
            for idx, P in enumerate(shapes):
                res = integrand(P.transformed(rot, mag), xi)
                mags.append(mag)
                vals.append(res.value)
                rows.append((kind, "fresh" if fresh else "common", idx, mag, *xi, res.value, res.abs_err, res.evals, res.value * mag**degree))
        per_kind[kind] = (np.array(mags), np.array(vals))
    return per_kind, rows


def envelope_ratio(per_kind, degree: float) -> tuple[float, dict]:
    """max/min over ``|xi|`` of ``|xi|^degree * max_P value`` (all kinds pooled)."""
    mags = np.concatenate([m for m, _ in per_kind.values()])
    vals = np.concatenate([v for _, v in per_kind.values()])
    env = {float(m): float(vals[mags == m].max() * m**degree) for m in np.unique(mags)}
    return max(env.values()) / min(env.values()), env


def _spread(per_kind, degree: float) -> float:
    """Largest max/min of scaled values among placements at one ``|xi|``."""
    mags = np.concatenate([m for m, _ in per_kind.values()])
    vals = np.concatenate([v for _, v in per_kind.values()])
    return float(max(vals[mags == m].max() / vals[mags == m].min() for m in np.unique(mags)))


def _r_lemma22(p, seed):
    checks, rows, fits = [], [], {}
    quad = est.QuadratureSpec(tol=p["quad_tol"])
    for a, b in p["pairs"]:
        degree = a + b - 2.0
        integrand = lambda P, xi: est.surface_integral(P, xi, a, b, quad)  # noqa: E731
        label = f"lemma22/{a}/{b}"
        per_kind, prow = _surface_sweep(p, seed, label, integrand, degree)
        fresh, frow = _surface_sweep(p, seed, label, integrand, degree, fresh=True)
        rows += [(a, b, *r) for r in prow + frow]
        for kind, (mags, vals) in per_kind.items():
            slope, band = est.fit_exponent(mags, vals)
            fits[f"{a}_{b}_{kind}"] = {"exponent": slope, "band": list(band), "expected": -degree}
            checks.append(at_most(f"exponent_error_a{a}_b{b}_{kind}", abs(slope + degree), p["exponent_tol"]))
        ratio, env = envelope_ratio(fresh, degree)
        fits[f"{a}_{b}_envelope"] = {"ratio": ratio, "by_magnitude": {repr(k): v for k, v in env.items()}}
        fits[f"{a}_{b}_placement_spread"] = _spread(fresh, degree)
        checks.append(at_most(f"envelope_ratio_a{a}_b{b}", ratio, p["band_max"]))
    header = ["a", "b", "kind", "family", "placement", "magnitude", "xi_x", "xi_y", "xi_z", "value", "abs_err_estimate", "evals", "scaled"]
    return Outcome(checks, tables={"lemma22.csv": csv_text(header, rows)}, documents={"fits.json": fits})


def _r_lemma23(p, seed):
    quad = est.QuadratureSpec(tol=p["quad_tol"])
    expected = 3.0 - 2.0 * est.EPSILON
    per_kind, rows = _surface_sweep(p, seed, "lemma23", lambda P, xi: est.lemma23_integral(P, xi, quad), expected)
    checks, fits = [], {}
    for kind, (mags, vals) in per_kind.items():
        slope, band = est.fit_exponent(mags, vals)
        fits[kind] = {"exponent": slope, "band": list(band), "expected": -expected}
        checks.append(at_most(f"exponent_error_{kind}", abs(slope + expected), p["exponent_tol"]))
    header = ["kind", "family", "placement", "magnitude", "xi_x", "xi_y", "xi_z", "value", "abs_err_estimate", "evals", "scaled"]
    return Outcome(checks, tables={"lemma23.csv": csv_text(header, rows)}, documents={"fits.json": fits})


def _v_prop(p):
    out = []
    for key in ("tau_min", "tau_max"):
        out += _real(p, key)
    out += _int_in(p, "tau_points", 1) + _int_in(p, "xi_points", 1)
    out += _positive(p, "xi_min") + _positive(p, "xi_max") + _positive(p, "ratio_max")
    out += _positive(p, "exponent_tol") + _positive(p, "truncation_tol") + _positive(p, "truncation")
    out += _int_in(p, "budget", 1)
    if not out and not p["xi_min"] <= p["xi_max"]:
        out.append("xi_min must not exceed xi_max")
    tol = p.get("quad_tol")
    if not isinstance(tol, (int, float)) or not 0 < tol < 1:
        out.append("quad_tol must lie in (0, 1)")
    return out


def _r_prop(p, seed):
    taus = tuple(np.linspace(p["tau_min"], p["tau_max"], p["tau_points"]))
    mags = np.logspace(math.log10(p["xi_min"]), math.log10(p["xi_max"]), p["xi_points"])
    xis = []
    for i, mag in enumerate(mags):
        rot = random_rotation(derive_seed(seed, "prop21", i))
        xis.append(tuple(mag * (rot @ np.array([0.0, 0.0, 1.0]))))
    grid = est.ScanGrid(taus, tuple(xis))
    quad = est.QuadratureSpec(budget=p["budget"], tol=p["quad_tol"])
    rep = est.scan_uniform_bound(grid, quad, p["truncation"])
    finite = all(pt.error is None and math.isfinite(pt.value) for pt in rep.points)
    checks = [
        at_most("nonfinite_points", 0 if finite else rep.failures or 1, 0),
        at_most("max_median_ratio", rep.max_median_ratio, p["ratio_max"]),
        at_most("large_xi_exponent_abs", abs(rep.exponent), p["exponent_tol"]),
        at_most("truncation_shift", rep.truncation_shift, p["truncation_tol"]),
    ]
    rows = [(pt.tau, *pt.xi1, pt.value, pt.abs_err, pt.evals) for pt in rep.points]
    header = ["tau", "xi1_x", "xi1_y", "xi1_z", "value", "abs_err_estimate", "evals"]
    doc = rep.to_json()
    return Outcome(checks, tables={"scan.csv": csv_text(header, rows)}, documents={"bound_report.json": doc})


# ---------------------------------------------------------------------------
# nls


def _box(p) -> nls.PeriodicBox:
    return nls.PeriodicBox(p["d"], p["m"], float(p["L"]))


def _v_nls_common(p):
    out = _int_in(p, "m", 2, 1024) + _positive(p, "L") + _positive(p, "dt") + _positive(p, "T")
    if p.get("d") not in (1, 3):
        out.append(f"d must be 1 or 3, got {p.get('d')!r}")
    if not out:
        steps = p["T"] / p["dt"]
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            out.append("T must be an integer multiple of dt")
        if p["d"] == 3 and p["m"] > 64:
            out.append("3-d runs are limited to m <= 64")
    init = p.get("initial")
    if not isinstance(init, dict) or init.get("kind") not in ("plane-wave", "gaussian", "random", "zero"):
        out.append("initial.kind must be plane-wave, gaussian, random or zero")
    return out


def _v_nls_run(p):
    out = _v_nls_common(p)
    for key in ("mass_tol", "energy_tol", "oracle_tol"):
        out += _positive(p, key)
    dts = p.get("order_dts")
    if not isinstance(dts, list) or len(dts) != 3 or not all(isinstance(v, (int, float)) and v > 0 for v in dts):
        out.append("order_dts must list three positive step sizes")
    band = p.get("order_band")
    if not isinstance(band, list) or len(band) != 2 or not band[0] < band[1]:
        out.append("order_band must be [lo, hi] with lo < hi")
    return out


def strang_ratio(box: nls.PeriodicBox, initial: dict, T: float, dts) -> float:
    """Successive-difference ratio ``|u_h - u_{h/2}| / |u_{h/2} - u_{h/4}|``."""
    sols = [nls.nls_solve(nls.NlsRunConfig(box, dt, T, initial, save_every=10**9)).final.values for dt in dts]
    return float(np.linalg.norm(sols[0] - sols[1]) / np.linalg.norm(sols[1] - sols[2]))


def _r_nls_run(p, seed):
    box = _box(p)
    init = dict(p["initial"])
    if init.get("kind") == "random":
        init.setdefault("seed", derive_seed(seed, "nls-run") % 2**32)
    cfg = nls.NlsRunConfig(box, p["dt"], p["T"], init, p["dealias"])
    traj = nls.nls_solve(cfg)
    series = nls.strichartz_norms(traj)
    checks = [
        at_most("mass_drift", traj.mass_drift(), p["mass_tol"]),
        at_most("energy_drift", traj.energy_drift(), p["energy_tol"]),
    ]
    pw = p["plane_wave"]
    pw_cfg = nls.NlsRunConfig(box, p["dt"], p["T"], {"kind": "plane-wave", **pw}, p["dealias"], save_every=10**9)
    exact = nls.plane_wave_exact(box, pw["amplitude"], pw["mode"], p["T"])
    err = float(np.max(np.abs(nls.nls_solve(pw_cfg).final.values - exact)))
    checks.append(at_most("plane_wave_error", err, p["oracle_tol"]))
    if p["check_order"] and init.get("kind") != "zero":
        ratio = strang_ratio(box, init, p["T"], p["order_dts"])
        checks.append(within("strang_ratio", ratio, *p["order_band"]))
    return Outcome(checks, tables={"norms.csv": series.to_csv()}, summary={"snapshots": len(traj.states)})


def _v_factor(p):
    out = _int_in(p, "m", 2, 64) + _int_in(p, "seeds", 1) + _positive(p, "tol") + _int_in(p, "bandwidth", 0)
    ks = p.get("ks")
    if not isinstance(ks, list) or not ks or not all(isinstance(k, int) and 2 <= k <= nls.MAX_TENSOR_PARTICLES for k in ks):
        out.append(f"ks must be integers in [2, {nls.MAX_TENSOR_PARTICLES}]")
    elif not out and p["m"] ** (2 * max(ks)) > nls.MAX_TENSOR_ENTRIES:
        out.append("tensor size guard exceeded")
    return out


def _r_factor(p, seed):
    box = nls.PeriodicBox(1, p["m"], 2.0 * math.pi)
    rows, worst = [], 0.0
    for k in p["ks"]:
        for s in range(p["seeds"]):
            spec = {"kind": "random", "seed": derive_seed(seed, "nls-factor", k, s) % 2**32, "bandwidth": p["bandwidth"]}
            phi = nls.FieldState(box, nls.initial_field(box, spec))
            res = nls.factorized_norm_identity(phi, k)
            worst = max(worst, res.residual)
            rows.append((k, s, res.tensor_norm, res.product_norm, res.residual))
    header = ["k", "seed", "tensor_norm", "product_norm", "residual"]
    return Outcome([at_most("max_factor_residual", worst, p["tol"])], tables={"factorization.csv": csv_text(header, rows)})


def _v_remark(p):
    out = _v_nls_common(p) + _int_in(p, "runs", 1) + _positive(p, "slack") + _int_in(p, "k", 2, 6)
    return out


def _r_remark(p, seed):
    box = _box(p)
    rows, worst, ok = [], 0.0, True
    for r in range(p["runs"]):
        init = dict(p["initial"])
        if init.get("kind") == "random":
            init["seed"] = derive_seed(seed, "remark", r) % 2**32
        cfg = nls.NlsRunConfig(box, p["dt"], p["T"], init, True)
        rep = nls.remark_bound_check(cfg, p["k"], slack=p["slack"])
        worst = max(worst, rep.ratio)
        ok = ok and rep.passed
        rows.append((r, rep.k, rep.lhs_R, rep.lhs_grad, rep.lhs_tensor if rep.lhs_tensor is not None else "", rep.rhs, rep.ratio, rep.B_T))
    header = ["run", "k", "lhs_R", "lhs_grad", "lhs_tensor", "rhs", "ratio", "B_T"]
    checks = [at_most("max_ratio", worst, 1.0 + p["slack"])]
    return Outcome(checks, tables={"remark.csv": csv_text(header, rows)})


# ---------------------------------------------------------------------------
# registry

NLS_DEFAULT_LENGTH = {1: 20.0, 3: 12.0}
_HIER = {"d": 1, "m": 2, "points": hier.DEFAULT_POINTS, "t1": 1.0}
_SURF = {"magnitudes": [1, 2, 4, 8, 16, 32, 64], "placements": 20, "kinds": ["plane", "sphere"], "quad_tol": 1e-4}

EXPERIMENTS: dict[str, Experiment] = {
    "enumerate": Experiment({"n": 3, "cap": comb.DEFAULT_MAX_N}, _v_enumerate, _r_enumerate),
    "classes": Experiment({"n": 3, "cap": comb.DEFAULT_MAX_N, "t1": 1.0, "measure_tol": 1e-12}, _v_classes, _r_classes),
    "counts": Experiment({"n_max": 12, "n_factorial_max": 7, "brute_force_max": 6}, _v_counts, _r_counts),
    "verify-moves": Experiment(
        {"n": 3, "cap": comb.DEFAULT_MAX_N, "seeds": 20, "tol": 1e-6, "include_example": True, "example_seeds": 5, **_HIER},
        _v_moves,
        _r_moves,
    ),
    "verify-comm": Experiment({"j_max": 4, "m": 2, "d": 1, "seeds": 5, "tol": 1e-12}, _v_comm, _r_comm),
    "verify-regroup": Experiment(
        {"n": 3, "cap": comb.DEFAULT_MAX_N, "seeds": 5, "tol": 1e-6, "measure_tol": 1e-12, **_HIER},
        _v_regroup,
        _r_regroup,
    ),
    "est-lemma22": Experiment(
        {"pairs": [[1.5, 1.5], [1.9, 0.25], [1.5, 1.0]], "exponent_tol": 0.1, "band_max": 10.0, **_SURF},
        lambda p: _v_surface(p, True),
        _r_lemma22,
    ),
    "est-lemma23": Experiment({"exponent_tol": 0.1, **_SURF}, lambda p: _v_surface(p, False), _r_lemma23),
    "est-prop21-scan": Experiment(
        {
            "tau_min": -50.0, "tau_max": 50.0, "tau_points": 11,
            "xi_min": 0.01, "xi_max": 100.0, "xi_points": 9,
            "quad_tol": 1e-4, "budget": 20_000_000, "truncation": est.DEFAULT_TRUNCATION,
            "ratio_max": 100.0, "exponent_tol": 0.2, "truncation_tol": 0.02,
        },
        _v_prop,
        _r_prop,
    ),
    "nls-run": Experiment(
        {
            "d": 1, "m": 256, "L": None, "dt": 1e-3, "T": 1.0, "dealias": True,
            "initial": {"kind": "gaussian", "amplitude": 1.0, "width": 1.5},
            "plane_wave": {"amplitude": 0.8, "mode": None},
            "mass_tol": 1e-10, "energy_tol": 1e-6, "oracle_tol": 1e-8,
            "check_order": True, "order_dts": [0.02, 0.01, 0.005], "order_band": [3.5, 4.5],
        },
        _v_nls_run,
        _r_nls_run,
    ),
    "nls-factor-check": Experiment({"ks": [2, 3], "m": 16, "seeds": 3, "bandwidth": 4, "tol": 1e-10}, _v_factor, _r_factor),
    "remark-bound": Experiment(
        {
            "k": 2, "runs": 10, "d": 1, "m": 16, "L": 2.0 * math.pi, "dt": 1e-3, "T": 1.0,
            "initial": {"kind": "random", "bandwidth": 4, "amplitude": 0.5}, "slack": 1e-6,
        },
        _v_remark,
        _r_remark,
    ),
}


def resolve_params(exp_id: str, overrides: dict) -> dict:
    params = {k: (dict(v) if isinstance(v, dict) else v) for k, v in EXPERIMENTS[exp_id].defaults.items()}
    params.update(overrides)
    if exp_id == "nls-run":
        if params.get("L") is None:
            # 3-d runs use a smaller box so the Gaussian stays resolved at m = 32
            params["L"] = NLS_DEFAULT_LENGTH.get(params.get("d"), 20.0)
        pw = dict(params.get("plane_wave") or {})
        pw.setdefault("amplitude", 0.8)
        if pw.get("mode") is None and isinstance(params.get("d"), int):
            pw["mode"] = [2] + [1] * (params["d"] - 1)
        params["plane_wave"] = pw
    return params
