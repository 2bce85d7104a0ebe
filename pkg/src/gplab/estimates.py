"""Singular surface integrals and the delta-restricted collision integral.

Surface integrals of ``prod_k |eta - s_k|^{-a_k}`` over a plane or sphere are
computed with one polar chart per singular point, centred at the point's
foot on the surface.  A partition of unity
``w_i = d_i^{-2p} / sum_k d_k^{-2p}`` (``d_k = |eta - s_k|``) assigns each
node to charts, so every chart sees a single singularity at its origin.
Radii are split into dyadic annuli down to ``1e-6`` of the length scale,
with a power substitution on the innermost disk and, for planes, on the
tail.  Chart contributions are also binned by ``|eta|`` into the near,
shell and far regions.

The collision integral is reduced to axisymmetric outer variables
``(rho, mu)``; the inner surface integrals have closed forms (see
``_kernels_py``), leaving a two-dimensional integral with logarithmic
singular curves that are passed to QUADPACK as breakpoints.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, stats

from . import _backend

EPSILON = 0.1
POU_POWER = 2
INNER_SCALE = 1e-6
OUTER_SCALE = 1e3
LEVELS = ((8, 32), (12, 64), (16, 128), (24, 256))
BREAK_FLOOR = 1e-8
DEFAULT_TRUNCATION = 1e3


class QuadratureBudgetError(RuntimeError):
    """Evaluation budget exhausted before the target tolerance was met."""

    def __init__(self, message: str, partial_value: float, evals: int):
        super().__init__(f"{message} (partial value {partial_value:.6g} after {evals} evaluations)")
        self.partial_value = partial_value
        self.evals = evals


@dataclass(frozen=True)
class SurfaceSpec:
    """Plane ``{eta : eta . normal = offset}`` or sphere ``|eta - center| = radius``."""

    kind: str
    normal: tuple[float, float, float] | None = None
    offset: float = 0.0
    center: tuple[float, float, float] | None = None
    radius: float = 0.0

    def __post_init__(self):
        if self.kind == "plane":
            if self.normal is None:
                raise ValueError("plane needs a normal")
            n = np.asarray(self.normal, dtype=float)
            if n.shape != (3,) or not abs(np.linalg.norm(n) - 1.0) <= 1e-12:
                raise ValueError(f"plane normal must be a unit 3-vector, got {self.normal}")
            object.__setattr__(self, "normal", tuple(float(v) for v in n))
            object.__setattr__(self, "offset", float(self.offset))
        elif self.kind == "sphere":
            if self.center is None:
                raise ValueError("sphere needs a center")
            c = np.asarray(self.center, dtype=float)
            if c.shape != (3,):
                raise ValueError("sphere center must be a 3-vector")
            if not self.radius > 0:
                raise ValueError(f"sphere radius must be positive, got {self.radius}")
            object.__setattr__(self, "center", tuple(float(v) for v in c))
            object.__setattr__(self, "radius", float(self.radius))
        else:
            raise ValueError(f"unknown surface kind {self.kind!r}")

    @classmethod
    def plane(cls, normal, offset: float) -> "SurfaceSpec":
        n = np.asarray(normal, dtype=float)
        norm = float(np.linalg.norm(n))
        if not norm > 0:
            raise ValueError(f"plane normal must be nonzero, got {normal}")
        return cls("plane", normal=tuple(n / norm), offset=offset)

    @classmethod
    def sphere(cls, center, radius: float) -> "SurfaceSpec":
        return cls("sphere", center=tuple(center), radius=radius)

    def transformed(self, rotation=None, scale: float = 1.0) -> "SurfaceSpec":
        """Image under ``eta -> scale * rotation @ eta``."""
        rot = np.eye(3) if rotation is None else np.asarray(rotation, dtype=float)
        if self.kind == "plane":
            return SurfaceSpec("plane", normal=tuple(rot @ np.asarray(self.normal)), offset=scale * self.offset)
        return SurfaceSpec("sphere", center=tuple(scale * (rot @ np.asarray(self.center))), radius=scale * self.radius)

    def foot(self, point) -> tuple[np.ndarray, float]:
        """Closest surface point to ``point`` and the distance to it."""
        s = np.asarray(point, dtype=float)
        if self.kind == "plane":
            n = np.asarray(self.normal)
            excess = float(s @ n - self.offset)
            return s - excess * n, abs(excess)
        c = np.asarray(self.center)
        v = s - c
        dist = float(np.linalg.norm(v))
        if dist == 0.0:
            return c + self.radius * np.array([0.0, 0.0, 1.0]), self.radius
        return c + self.radius * v / dist, abs(dist - self.radius)

    def to_json(self) -> dict:
        if self.kind == "plane":
            return {"kind": "plane", "normal": list(self.normal), "offset": self.offset}
        return {"kind": "sphere", "center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class QuadratureSpec:
    method: str = "adaptive"
    budget: int = 20_000_000
    tol: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if self.method not in ("adaptive", "monte-carlo"):
            raise ValueError(f"unknown quadrature method {self.method!r}")
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        if not 0 < self.tol < 1:
            raise ValueError("tol must lie in (0, 1)")


@dataclass
class SurfaceResult:
    value: float
    abs_err: float
    evals: int
    converged: bool
    charts: list[float]
    regions: dict[str, float]
    level: tuple[int, int]


def _tangent_basis(n: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    helper = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(n, helper)
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(n, e1)


def _segments(r_lo: float, r_end: float, breaks) -> list[tuple[float, float]]:
    edges = [r_lo]
    while edges[-1] * 2.0 < r_end:
        edges.append(edges[-1] * 2.0)
    edges.append(r_end)
    extra = [b for b in breaks if r_lo < b < r_end]
    edges = sorted(set(edges) | set(extra))
    return list(zip(edges[:-1], edges[1:]))


def _radial_rule(P: SurfaceSpec, height: float, a_own: float, s_total: float, scale: float, breaks, n_r: int, rng):
    """Radial nodes and ``dr`` weights for one chart (surface Jacobian excluded)."""
    x, w = np.polynomial.legendre.leggauss(n_r)
    u = 0.5 * (x + 1.0)
    wu = 0.5 * w
    r_lo = INNER_SCALE * scale
    if P.kind == "sphere":
        r_end = math.pi * P.radius
        r_lo = min(r_lo, 1e-6 * r_end)
    else:
        r_end = OUTER_SCALE * scale
    radii, weights = [], []

    def sample(count):
        if rng is None:
            return u, wu
        # one jittered node per stratum
        return (np.arange(count) + rng.random(count)) / count, np.full(count, 1.0 / count)

    # inner disk: r = r_lo * v^{1/(2-a)} flattens r^{1-a}
    a_eff = a_own if height < r_lo else 0.0
    a_eff = min(a_eff, 1.9)
    v, wv = sample(n_r)
    beta = 1.0 / (2.0 - a_eff)
    radii.append(r_lo * v**beta)
    weights.append(wv * r_lo * beta * v ** (beta - 1.0))
    for lo, hi in _segments(r_lo, r_end, breaks):
        v, wv = sample(n_r)
        radii.append(lo + (hi - lo) * v)
        weights.append(wv * (hi - lo))
    if P.kind == "plane":
        if not s_total > 2.0:
            raise ValueError(f"plane integral diverges at infinity for total exponent {s_total}")
        # tail: r = r_end * v^{-1/(S-2)} flattens r^{1-S}
        v, wv = sample(n_r)
        g = 1.0 / (s_total - 2.0)
        radii.append(r_end * v ** (-g))
        weights.append(wv * r_end * g * v ** (-g - 1.0))
    return np.concatenate(radii), np.concatenate(weights)


def _chart_nodes(P: SurfaceSpec, foot: np.ndarray, radii: np.ndarray, rw: np.ndarray, n_theta: int, rng):
    """Chart nodes relative to ``foot`` (avoids cancellation at tiny radii)."""
    if rng is None:
        theta = (np.arange(n_theta) + 0.5) * (2.0 * math.pi / n_theta)
        theta = np.broadcast_to(theta, (len(radii), n_theta))
    else:
        theta = (np.arange(n_theta) + rng.random((len(radii), n_theta))) * (2.0 * math.pi / n_theta)
    wt = 2.0 * math.pi / n_theta
    r = radii[:, None]
    if P.kind == "plane":
        n = np.asarray(P.normal)
        e1, e2 = _tangent_basis(n)
        pts = r[..., None] * (np.cos(theta)[..., None] * e1 + np.sin(theta)[..., None] * e2)
        jac = radii
    else:
        c = np.asarray(P.center)
        n = (foot - c) / P.radius
        e1, e2 = _tangent_basis(n)
        ang = r / P.radius
        dirs = np.cos(theta)[..., None] * e1 + np.sin(theta)[..., None] * e2
        drop = -2.0 * np.sin(0.5 * ang) ** 2
        pts = P.radius * (drop[..., None] * n + np.sin(ang)[..., None] * dirs)
        jac = P.radius * np.sin(radii / P.radius)
    wts = np.broadcast_to((rw * jac * wt)[:, None], theta.shape)
    return pts.reshape(-1, 3), wts.ravel()


def _one_level(P, sing, exps, scale, n_r, n_theta, rng, want_regions):
    kern = _backend.kernels
    feet = [P.foot(s) for s in sing]
    s_total = float(np.sum(exps))
    charts = []
    evals = 0
    regions = {"near": 0.0, "shell": 0.0, "far": 0.0}
    for i, (foot, height) in enumerate(feet):
        if exps[i] >= 2.0 and height == 0.0:
            raise ValueError(f"exponent {exps[i]} at a point on the surface is not integrable")
        if P.kind == "plane":
            breaks = [float(np.linalg.norm(f - foot)) for f, _ in feet]
        else:
            breaks = [
                P.radius * math.acos(np.clip(np.dot(f - P.center, foot - P.center) / P.radius**2, -1.0, 1.0))
                for f, _ in feet
            ]
        breaks += [h for _, h in feet if h > 0]
        radii, rw = _radial_rule(P, height, float(exps[i]), s_total, scale, breaks, n_r, rng)
        pts, wts = _chart_nodes(P, foot, radii, rw, n_theta, rng)
        rel = sing - foot
        evals += len(wts)
        charts.append(float(kern.chart_sum(pts, wts, rel, exps, i, POU_POWER)))
        if want_regions:
            mag = np.linalg.norm(pts + foot, axis=1)
            masks = {"near": mag < 0.5 * scale, "far": mag > 2.0 * scale}
            masks["shell"] = ~(masks["near"] | masks["far"])
            for key, mask in masks.items():
                if mask.any():
                    regions[key] += float(kern.chart_sum(pts[mask], wts[mask], rel, exps, i, POU_POWER))
    return float(sum(charts)), charts, regions, evals


def singular_surface_integral(
    P: SurfaceSpec,
    points,
    exponents,
    quad: QuadratureSpec | None = None,
    scale: float | None = None,
) -> SurfaceResult:
    """``int_P prod_k |eta - points_k|^{-exponents_k} dS(eta)``.

    ``scale`` sets the annulus range and the region bins (default: the largest
    distance between singular points, or 1).
    """
    quad = quad or QuadratureSpec()
    sing = np.atleast_2d(np.asarray(points, dtype=float))
    exps = np.asarray(exponents, dtype=float)
    if sing.shape[1] != 3 or len(exps) != len(sing):
        raise ValueError("points must be (K, 3) with one exponent each")
    if scale is None:
        diffs = sing[:, None, :] - sing[None, :, :]
        scale = float(np.max(np.linalg.norm(diffs, axis=2))) if len(sing) > 1 else 1.0
        scale = scale or 1.0
    if quad.method == "monte-carlo":
        return _surface_mc(P, sing, exps, scale, quad)
    prev = None
    evals = 0
    result = None
    for idx, (n_r, n_theta) in enumerate(LEVELS):
        last = idx == len(LEVELS) - 1
        value, charts, regions, used = _one_level(P, sing, exps, scale, n_r, n_theta, None, True)
        evals += used
        if prev is not None:
            err = abs(value - prev)
            result = SurfaceResult(value, err, evals, err <= quad.tol * abs(value), charts, regions, (n_r, n_theta))
            if result.converged:
                return result
        if evals > quad.budget and not last:
            raise QuadratureBudgetError("surface integral budget exhausted", value, evals)
        prev = value
    return result


def _surface_mc(P, sing, exps, scale, quad: QuadratureSpec) -> SurfaceResult:
    rng = np.random.default_rng(quad.seed)
    n_r, n_theta = LEVELS[1]
    reps = []
    evals = 0
    while True:
        value, charts, regions, used = _one_level(P, sing, exps, scale, n_r, n_theta, rng, False)
        reps.append(value)
        evals += used
        if len(reps) >= 4:
            mean = float(np.mean(reps))
            err = float(np.std(reps, ddof=1) / math.sqrt(len(reps)))
            if err <= quad.tol * abs(mean) or evals + used > quad.budget:
                return SurfaceResult(mean, err, evals, err <= quad.tol * abs(mean), charts, regions, (n_r, n_theta))


def _check_nonzero(xi) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (3,):
        raise ValueError("xi must be a 3-vector")
    if not np.linalg.norm(xi) > 0:
        raise ValueError("xi must be nonzero")
    return xi


def surface_integral(P: SurfaceSpec, xi, a: float, b: float, quad: QuadratureSpec | None = None) -> SurfaceResult:
    """``int_P |xi - eta|^{-a} |eta|^{-b} dS(eta)`` for ``0 < a, b < 2 < a + b``."""
    if not (0 < a < 2 and 0 < b < 2 and a + b > 2):
        raise ValueError(f"(a, b) = ({a}, {b}) outside 0 < a < 2, 0 < b < 2, a + b > 2")
    xi = _check_nonzero(xi)
    return singular_surface_integral(P, [xi, np.zeros(3)], [a, b], quad, float(np.linalg.norm(xi)))


def lemma23_integral(P: SurfaceSpec, xi, quad: QuadratureSpec | None = None) -> SurfaceResult:
    """``int_P |xi - eta|^{-(2-e)} |xi/2 - eta|^{-1} |eta|^{-(2-e)} dS`` with ``e = 1/10``."""
    xi = _check_nonzero(xi)
    a = 2.0 - EPSILON
    return singular_surface_integral(P, [xi, 0.5 * xi, np.zeros(3)], [a, 1.0, a], quad, float(np.linalg.norm(xi)))


# ---------------------------------------------------------------------------
# delta-restricted collision integral


@dataclass
class PropositionResult:
    value: float
    abs_err: float
    evals: int
    case1: float
    case2: float
    tail_estimate: float
    truncation: float
    method: str

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "abs_err": self.abs_err,
            "evals": self.evals,
            "case1": self.case1,
            "case2": self.case2,
            "tail_estimate": self.tail_estimate,
            "truncation": self.truncation,
            "method": self.method,
        }


class _Budget:
    def __init__(self, limit: int):
        self.limit = limit
        self.used = 0

    def charge(self, n: int) -> None:
        self.used += n
        if self.used > self.limit:
            raise _BudgetExceeded


class _BudgetExceeded(Exception):
    pass


def _mu_breaks(case: int, rho: float, tau: float, x: float) -> list[float]:
    if rho <= 0.0:
        return []
    two = 2.0 * x * rho
    cands = []
    if case == 1:
        cands.append((x * x - tau) / two)
        if tau < 0:
            s = math.sqrt(-tau)
            for p in (rho + s, abs(rho - s)):
                cands.append((x * x + rho * rho - p * p) / two)
    else:
        cands.append((x * x + tau) / two)
        cands.append((x * x - rho * rho + 2.0 * tau) / two)
    return sorted({c for c in cands if -1.0 < c < 1.0})


def _rho_breaks(tau: float, x: float, limit: float) -> list[float]:
    cands = [x / 4, x / 2, x, 2 * x, 4 * x, abs(x * x - tau) / (2 * x), abs(x * x + tau) / (2 * x)]
    if tau != 0:
        cands.append(math.sqrt(abs(tau)))
    if 2 * x * x + 2 * tau > 0:
        cands.append(-x + math.sqrt(2 * x * x + 2 * tau))
    # breakpoints below the floor are roundoff images of a degenerate zero
    floor = BREAK_FLOOR * max(x, math.sqrt(abs(tau)))
    cands = [c for c in cands if c > floor]
    base = min(cands)
    g = base / 16
    while g < limit:
        cands.append(g)
        g *= 4
    return sorted({c for c in cands if 0 < c < limit})


def _integrand(case: int, restrict: float = 1.0):
    llc = _backend.low_level_callable("case1_llc" if case == 1 else "case2_llc")
    if llc is not None:
        return llc, () if case == 1 else (restrict,)
    kern = _backend.kernels
    if case == 1:
        return kern.prop_case1, ()
    return kern.prop_case2, (restrict,)


def _rho_profile(rho: float, case: int, tau: float, x: float, tol: float, budget: _Budget, restrict: float = 1.0):
    f, extra = _integrand(case, restrict)
    pts = _mu_breaks(case, rho, tau, x)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err, info = integrate.quad(
            f, -1.0, 1.0, args=(rho, tau, x) + extra, points=pts or None,
            limit=200, epsabs=0.0, epsrel=0.1 * tol, full_output=1,
        )[:3]
    budget.charge(int(info["neval"]))
    return val


def _case_adaptive(case: int, tau: float, x: float, limit: float, tol: float, budget: _Budget, restrict: float = 1.0):
    edges = [0.0] + _rho_breaks(tau, x, limit) + [limit]
    total = err_total = 0.0
    try:
        for lo, hi in zip(edges[:-1], edges[1:]):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", integrate.IntegrationWarning)
                val, err = integrate.quad(
                    _rho_profile, lo, hi, args=(case, tau, x, tol, budget, restrict),
                    limit=200, epsabs=0.0, epsrel=tol,
                )
            total += val
            err_total += err
    except _BudgetExceeded:
        raise QuadratureBudgetError(f"case {case} budget exhausted", total, budget.used) from None
    tail_g = _rho_profile(limit, case, tau, x, tol, _Budget(10**9), restrict)
    return total, err_total, 0.5 * limit * tail_g


def _case_mc(case: int, tau: float, x: float, limit: float, n: int, rng, restrict: float = 1.0):
    """Stratified sampling in ``(u, mu)`` with ``rho = c u / (1 - u)``."""
    kern = _backend.kernels
    f = kern.prop_case1_vec if case == 1 else kern.prop_case2_vec
    c = max(x, math.sqrt(abs(tau)))
    u_max = limit / (c + limit)
    side = max(1, int(math.sqrt(n)))
    iu, im = np.meshgrid(np.arange(side), np.arange(side), indexing="ij")
    u = (iu.ravel() + rng.random(side * side)) / side * u_max
    mu = -1.0 + 2.0 * (im.ravel() + rng.random(side * side)) / side
    rho = c * u / (1.0 - u)
    jac = c / (1.0 - u) ** 2 * u_max * 2.0
    args = (tau, x) if case == 1 else (tau, x, restrict)
    vals = f(rho, mu, *args) * jac
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(len(vals))), len(vals)


def proposition_integral(
    tau: float,
    xi1,
    quad: QuadratureSpec | None = None,
    truncation: float | None = None,
) -> PropositionResult:
    """Delta-restricted collision integral as Case 1 plus Case 2.

    The outer integral is cut at ``truncation * max(1, |xi1|)`` (default
    ``1e3``); ``tail_estimate`` extrapolates the remainder from the radial
    profile at the cut assuming ``rho^-3`` decay.
    """
    quad = quad or QuadratureSpec()
    xi1 = np.asarray(xi1, dtype=float)
    if xi1.shape != (3,):
        raise ValueError("xi1 must be a 3-vector")
    tau = float(tau)
    if not math.isfinite(tau) or not np.all(np.isfinite(xi1)):
        raise ValueError("tau and xi1 must be finite")
    x = float(np.linalg.norm(xi1))
    factor = DEFAULT_TRUNCATION if truncation is None else float(truncation)
    limit = factor * max(1.0, x)
    if x == 0.0:
        return PropositionResult(0.0, 0.0, 0, 0.0, 0.0, 0.0, limit, quad.method)
    if quad.method == "monte-carlo":
        rng = np.random.default_rng(quad.seed)
        per = max(4, quad.budget // 2)
        v1, e1, n1 = _case_mc(1, tau, x, limit, per, rng)
        v2, e2, n2 = _case_mc(2, tau, x, limit, per, rng)
        value, err = v1 + v2, math.hypot(e1, e2)
        if err > quad.tol * abs(value):
            raise QuadratureBudgetError("monte-carlo error above tolerance", value, n1 + n2)
        return PropositionResult(value, err, n1 + n2, v1, v2, 0.0, limit, quad.method)
    budget = _Budget(quad.budget)
    v1, e1, t1 = _case_adaptive(1, tau, x, limit, quad.tol, budget)
    try:
        v2, e2, t2 = _case_adaptive(2, tau, x, limit, quad.tol, budget)
    except QuadratureBudgetError as exc:
        raise QuadratureBudgetError("case 2 budget exhausted", v1 + exc.partial_value, exc.evals) from None
    return PropositionResult(v1 + v2, e1 + e2, budget.used, v1, v2, t1 + t2, limit, quad.method)


def full_sphere_integral(tau: float, xi1, quad: QuadratureSpec | None = None, truncation: float | None = None) -> float:
    """Same integral with the delta resolved on spheres everywhere (no case split)."""
    quad = quad or QuadratureSpec()
    x = float(np.linalg.norm(np.asarray(xi1, dtype=float)))
    if x == 0.0:
        return 0.0
    factor = DEFAULT_TRUNCATION if truncation is None else float(truncation)
    v, _, _ = _case_adaptive(2, float(tau), x, factor * max(1.0, x), quad.tol, _Budget(quad.budget), restrict=0.0)
    return v


# ---------------------------------------------------------------------------
# uniform-bound scan


@dataclass(frozen=True)
class ScanGrid:
    tau_values: tuple[float, ...]
    xi1_values: tuple[tuple[float, float, float], ...]
    allow_zero: bool = False

    def __post_init__(self):
        if not self.tau_values or not self.xi1_values:
            raise ValueError("scan grid must be nonempty")
        object.__setattr__(self, "tau_values", tuple(float(t) for t in self.tau_values))
        vecs = tuple(tuple(float(c) for c in v) for v in self.xi1_values)
        for v in vecs:
            if len(v) != 3:
                raise ValueError("xi1 values must be 3-vectors")
            if not self.allow_zero and not math.hypot(*v) > 0:
                raise ValueError("xi1 magnitudes must be positive")
        object.__setattr__(self, "xi1_values", vecs)

    @classmethod
    def default(cls, direction=(1.0, 2.0, 2.0)) -> "ScanGrid":
        d = np.asarray(direction, dtype=float)
        d = d / np.linalg.norm(d)
        taus = tuple(np.linspace(-50.0, 50.0, 11))
        mags = np.logspace(-2, 2, 9)
        return cls(taus, tuple(tuple(m * d) for m in mags))


@dataclass
class ScanPoint:
    tau: float
    xi1: tuple[float, float, float]
    value: float
    abs_err: float
    evals: int
    error: str | None = None

    @property
    def magnitude(self) -> float:
        return math.hypot(*self.xi1)


@dataclass
class BoundReport:
    points: list[ScanPoint]
    supremum: float
    median: float
    max_median_ratio: float
    exponent: float
    exponent_band: tuple[float, float]
    fit_magnitudes: list[float]
    failures: int
    truncation_shift: float | None = None
    diagnostics: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "supremum": self.supremum,
            "median": self.median,
            "max_median_ratio": self.max_median_ratio,
            "exponent": self.exponent,
            "exponent_band": list(self.exponent_band),
            "fit_magnitudes": self.fit_magnitudes,
            "failures": self.failures,
            "truncation_shift": self.truncation_shift,
            "diagnostics": self.diagnostics,
        }


def fit_exponent(mags, values, level: float = 0.95) -> tuple[float, tuple[float, float]]:
    """Least-squares slope of ``log value`` against ``log mags`` with a t-band."""
    lx = np.log(np.asarray(mags, dtype=float))
    ly = np.log(np.asarray(values, dtype=float))
    if len(lx) < 2:
        return float("nan"), (float("nan"), float("nan"))
    fit = stats.linregress(lx, ly)
    if len(lx) > 2:
        half = float(stats.t.ppf(0.5 + level / 2, len(lx) - 2) * fit.stderr)
    else:
        half = 0.0
    return float(fit.slope), (float(fit.slope - half), float(fit.slope + half))


def scan_uniform_bound(
    grid: ScanGrid,
    quad: QuadratureSpec | None = None,
    truncation: float | None = None,
    check_truncation: bool = True,
) -> BoundReport:
    """Evaluate the collision integral on ``grid`` and summarise its envelope.

    The exponent is fitted to ``sup_tau value`` against ``|xi1|`` over the
    top decade of magnitudes.
    """
    quad = quad or QuadratureSpec()
    points = []
    for xi in grid.xi1_values:
        for tau in grid.tau_values:
            try:
                res = proposition_integral(tau, xi, quad, truncation)
                points.append(ScanPoint(tau, xi, res.value, res.abs_err, res.evals))
            except (QuadratureBudgetError, ValueError) as exc:
                points.append(ScanPoint(tau, xi, float("nan"), float("nan"), 0, str(exc)))
    good = [p for p in points if p.error is None and math.isfinite(p.value)]
    values = np.array([p.value for p in good])
    sup = float(values.max()) if len(values) else float("nan")
    med = float(np.median(values)) if len(values) else float("nan")
    ratio = sup / med if med > 0 else float("inf")
    by_mag: dict[float, float] = {}
    for p in good:
        by_mag[p.magnitude] = max(by_mag.get(p.magnitude, -math.inf), p.value)
    mags = sorted(m for m in by_mag if m > 0)
    top = [m for m in mags if m >= mags[-1] / 10 * (1 - 1e-12)] if mags else []
    exponent, band = fit_exponent(top, [by_mag[m] for m in top]) if len(top) >= 2 else (float("nan"), (float("nan"),) * 2)
    report = BoundReport(
        points, sup, med, ratio, exponent, band, top, len(points) - len(good),
        diagnostics={"total_evals": int(sum(p.evals for p in points)), "method": quad.method},
    )
    if check_truncation and good:
        best = max(good, key=lambda p: p.value)
        factor = DEFAULT_TRUNCATION if truncation is None else float(truncation)
        doubled = proposition_integral(best.tau, best.xi1, quad, 2.0 * factor).value
        report.truncation_shift = abs(doubled - best.value) / abs(best.value)
    return report
