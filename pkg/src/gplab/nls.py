"""Split-step spectral solver for the defocusing cubic NLS on a periodic box.

Solves ``(i d/dt + Delta) phi = |phi|^2 phi`` with Strang splitting: half a
step of the pointwise phase rotation ``phi exp(-i |phi|^2 dt/2)``, a full
linear step ``exp(-i |k|^2 dt)`` in Fourier space, and another half
nonlinear step.  The 2/3-rule filter is applied after each nonlinear
substep when dealiasing is on.

Norms use the physical measure ``dx = (L/m)^d``.  The factorised kernels of
the hierarchy are built from snapshots through :mod:`gplab.hierarchy` on a
grid whose frequencies are scaled to ``2 pi / L``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from . import hierarchy as hier

BLOWUP_THRESHOLD = 1e6
MAX_TENSOR_PARTICLES = 3
MAX_TENSOR_ENTRIES = 2**24


class BlowUpError(RuntimeError):
    def __init__(self, t: float, peak: float):
        super().__init__(f"field maximum {peak:.3e} exceeded {BLOWUP_THRESHOLD:.0e} at t={t:.6g}")
        self.t = t
        self.peak = peak


class SizeGuardError(ValueError):
    """Requested tensor evaluation is too large."""


@dataclass(frozen=True)
class PeriodicBox:
    d: int = 1
    m: int = 256
    L: float = 2.0 * math.pi

    def __post_init__(self):
        if self.d not in (1, 3):
            raise ValueError(f"d must be 1 or 3, got {self.d}")
        if self.m < 2:
            raise ValueError("m must be >= 2")
        if not self.L > 0:
            raise ValueError("L must be positive")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.m,) * self.d

    @property
    def dx(self) -> float:
        return self.L / self.m

    @property
    def cell(self) -> float:
        return self.dx**self.d

    @property
    def volume(self) -> float:
        return self.L**self.d

    def coords(self) -> list[np.ndarray]:
        x = np.arange(self.m) * self.dx
        return list(np.meshgrid(*([x] * self.d), indexing="ij"))

    def wavenumbers(self) -> list[np.ndarray]:
        k = 2.0 * math.pi * np.fft.fftfreq(self.m, self.dx)
        return list(np.meshgrid(*([k] * self.d), indexing="ij"))

    def k2(self) -> np.ndarray:
        return sum(k * k for k in self.wavenumbers())

    def dealias_mask(self) -> np.ndarray:
        n = np.abs(np.fft.fftfreq(self.m) * self.m)
        keep = n < self.m / 3.0
        mask = np.ones(self.shape, dtype=bool)
        for ax in range(self.d):
            shape = [1] * self.d
            shape[ax] = self.m
            mask = mask & keep.reshape(shape)
        return mask

    def lattice(self) -> hier.LatticeGrid:
        return hier.LatticeGrid(self.d, self.m, 2.0 * math.pi / self.L)

    def to_json(self) -> dict:
        return {"d": self.d, "m": self.m, "L": self.L}


@dataclass(frozen=True, eq=False)
class FieldState:
    box: PeriodicBox
    values: np.ndarray
    t: float = 0.0
    mass: float = field(init=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != self.box.shape:
            raise ValueError(f"field shape {v.shape} does not match box {self.box.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field has non-finite values")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "mass", l2_norm(v, self.box) ** 2)


def l2_norm(f: np.ndarray, box: PeriodicBox) -> float:
    return float(math.sqrt(np.sum(np.abs(f) ** 2) * box.cell))


def grad_norm(f: np.ndarray, box: PeriodicBox) -> float:
    """``||grad f||_{L^2}`` via Plancherel."""
    fh = np.fft.fftn(f)
    return float(math.sqrt(np.sum(box.k2() * np.abs(fh) ** 2) * box.cell / f.size))


def energy(f: np.ndarray, box: PeriodicBox) -> float:
    """``int |grad f|^2 + |f|^4 / 2``."""
    return grad_norm(f, box) ** 2 + 0.5 * float(np.sum(np.abs(f) ** 4) * box.cell)


def initial_field(box: PeriodicBox, spec: dict) -> np.ndarray:
    """Initial data from a spec dict (``kind`` = plane-wave | gaussian | random)."""
    kind = spec.get("kind")
    amp = float(spec.get("amplitude", 1.0))
    xs = box.coords()
    if kind == "plane-wave":
        mode = np.asarray(spec.get("mode", [1] * box.d), dtype=float)
        if mode.shape != (box.d,):
            raise ValueError(f"mode must have {box.d} entries")
        phase = sum((2.0 * math.pi / box.L) * n * x for n, x in zip(mode, xs))
        return amp * np.exp(1j * phase)
    if kind == "gaussian":
        width = float(spec.get("width", 1.0))
        centre = np.asarray(spec.get("center", [box.L / 2] * box.d), dtype=float)
        kick = np.asarray(spec.get("momentum", [0.0] * box.d), dtype=float)
        r2 = sum((x - c) ** 2 for x, c in zip(xs, centre))
        phase = sum(p * x for p, x in zip(kick, xs))
        return amp * np.exp(-r2 / (2.0 * width**2)) * np.exp(1j * phase)
    if kind == "random":
        rng = np.random.default_rng(int(spec.get("seed", 0)))
        band = int(spec.get("bandwidth", 4))
        n = np.rint(np.fft.fftfreq(box.m) * box.m)
        allowed = np.ones(box.shape, dtype=bool)
        for ax in range(box.d):
            shape = [1] * box.d
            shape[ax] = box.m
            allowed = allowed & (np.abs(n) <= band).reshape(shape)
        coef = (rng.standard_normal(box.shape) + 1j * rng.standard_normal(box.shape)) * allowed
        f = np.fft.ifftn(coef)
        return amp * f / np.max(np.abs(f))
    if kind == "zero":
        return np.zeros(box.shape, dtype=complex)
    raise ValueError(f"unknown initial data kind {kind!r}")


@dataclass(frozen=True)
class NlsRunConfig:
    box: PeriodicBox
    dt: float
    T: float
    initial: dict
    dealias: bool = True
    save_every: int | None = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.T >= self.dt * (1 - 1e-12):
            raise ValueError("T must be at least dt")
        steps = self.T / self.dt
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            raise ValueError(f"T={self.T} is not an integer multiple of dt={self.dt}")

    @property
    def steps(self) -> int:
        return int(round(self.T / self.dt))

    def stride(self) -> int:
        if self.save_every is not None:
            return max(1, int(self.save_every))
        return max(1, self.steps // 100)

    def to_json(self) -> dict:
        return {
            "box": self.box.to_json(),
            "dt": self.dt,
            "T": self.T,
            "initial": dict(self.initial),
            "dealias": self.dealias,
            "save_every": self.stride(),
        }


@dataclass
class Trajectory:
    config: NlsRunConfig
    states: list[FieldState]

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    @property
    def final(self) -> FieldState:
        return self.states[-1]

    def mass_drift(self) -> float:
        m0 = self.states[0].mass
        scale = m0 if m0 > 0 else 1.0
        return max(abs(s.mass - m0) for s in self.states) / scale

    def energy_drift(self) -> float:
        box = self.config.box
        e = [energy(s.values, box) for s in self.states]
        scale = abs(e[0]) if e[0] != 0 else 1.0
        return max(abs(v - e[0]) for v in e) / scale


def nls_solve(config: NlsRunConfig, initial: np.ndarray | None = None) -> Trajectory:
    box = config.box
    phi = initial_field(box, config.initial) if initial is None else np.asarray(initial, dtype=complex)
    dt = config.dt
    lin = np.exp(-1j * box.k2() * dt)
    mask = box.dealias_mask() if config.dealias else None
    stride = config.stride()
    if mask is not None:
        # evolve within the dealiased subspace from the start
        phi = np.fft.ifftn(np.fft.fftn(phi) * mask)
    states = [FieldState(box, phi, 0.0)]

    def nonlinear(f):
        f = f * np.exp(-0.5j * dt * np.abs(f) ** 2)
        if mask is not None:
            f = np.fft.ifftn(np.fft.fftn(f) * mask)
        return f

    for step in range(1, config.steps + 1):
        phi = nonlinear(phi)
        phi = np.fft.ifftn(np.fft.fftn(phi) * lin)
        phi = nonlinear(phi)
        peak = float(np.max(np.abs(phi)))
        if not peak <= BLOWUP_THRESHOLD:
            raise BlowUpError(step * dt, peak)
        if step % stride == 0 or step == config.steps:
            states.append(FieldState(box, phi, step * dt))
    return Trajectory(config, states)


def plane_wave_exact(box: PeriodicBox, amplitude: float, mode, t: float) -> np.ndarray:
    mode = np.asarray(mode, dtype=float)
    kvec = (2.0 * math.pi / box.L) * mode
    omega = float(kvec @ kvec) + abs(amplitude) ** 2
    phase = sum(k * x for k, x in zip(kvec, box.coords()))
    return amplitude * np.exp(1j * (phase - omega * t))


# ---------------------------------------------------------------------------
# norm bookkeeping


@dataclass
class NormSeries:
    times: np.ndarray
    l2: np.ndarray
    mass: np.ndarray
    energy: np.ndarray
    grad: np.ndarray
    cubic: np.ndarray
    grad_cubic: np.ndarray
    A: np.ndarray
    B: np.ndarray

    COLUMNS = ("t", "mass", "energy", "grad_norm", "cubic_norm", "grad_cubic_norm", "A_accum", "B_accum")

    def rows(self) -> list[tuple[float, ...]]:
        return list(zip(self.times, self.mass, self.energy, self.grad, self.cubic, self.grad_cubic, self.A, self.B))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.COLUMNS)
        for row in self.rows():
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


def strichartz_norms(traj: Trajectory) -> NormSeries:
    """Spatial norms per snapshot and the accumulated ``L^1_t L^2_x`` norms."""
    if not traj.states:
        raise ValueError("empty trajectory")
    box = traj.config.box
    cols = {k: [] for k in ("l2", "energy", "grad", "cubic", "grad_cubic")}
    for s in traj.states:
        f = s.values
        cub = np.abs(f) ** 2 * f
        cols["l2"].append(l2_norm(f, box))
        cols["energy"].append(energy(f, box))
        cols["grad"].append(grad_norm(f, box))
        cols["cubic"].append(l2_norm(cub, box))
        cols["grad_cubic"].append(grad_norm(cub, box))
    t = traj.times
    arr = {k: np.array(v) for k, v in cols.items()}
    A = cumulative_trapezoid(arr["cubic"], t, initial=0.0) if len(t) > 1 else np.zeros(1)
    B = cumulative_trapezoid(arr["grad_cubic"], t, initial=0.0) if len(t) > 1 else np.zeros(1)
    return NormSeries(t, arr["l2"], arr["l2"] ** 2, arr["energy"], arr["grad"], arr["cubic"], arr["grad_cubic"], A, B)


@dataclass
class FactorizationResult:
    k: int
    part: str
    tensor_norm: float
    product_norm: float | None
    residual: float | None


def _R_norm(f: np.ndarray, box: PeriodicBox) -> float:
    """``||R f||`` with ``R = |nabla|``."""
    fh = np.fft.fftn(f)
    return float(math.sqrt(np.sum(box.k2() * np.abs(fh) ** 2) * box.cell / f.size))


def factorized_norm_identity(phi: FieldState, k: int, part: str = "B1") -> FactorizationResult:
    """Tensor norm ``||R^{(k-1)} B_{1,k} gamma^{(k)}||`` against its product form.

    For ``gamma^{(k)} = prod phi(x_j) conj(phi(x'_j))`` the ``B1`` part factorises
    as ``|phi|^2 phi`` in ``x_1`` times ``2k - 3`` single-particle factors, so its
    norm is ``||R(|phi|^2 phi)|| * ||R phi||^{2k-3}``.  ``B2`` has the same
    product norm; the full difference has none and reports ``None``.
    """
    box = phi.box
    if k < 2:
        raise ValueError("k must be >= 2")
    if k > MAX_TENSOR_PARTICLES or (box.m**box.d) ** (2 * k) > MAX_TENSOR_ENTRIES:
        raise SizeGuardError(f"tensor with k={k} on {box.m}^{box.d} points exceeds the size guard")
    grid = box.lattice()
    gamma = hier.DensityKernel.factorized(phi.values.ravel(), k, grid)
    out = hier.apply_R(hier.collision_op(gamma, 1, part=part))
    del gamma
    tensor = out.norm() * box.cell ** (k - 1)
    if part == "full":
        return FactorizationResult(k, part, tensor, None, None)
    f = phi.values
    prod = _R_norm(np.abs(f) ** 2 * f, box) * _R_norm(f, box) ** (2 * k - 3)
    resid = abs(tensor - prod) / max(tensor, prod, hier.RESIDUAL_FLOOR)
    return FactorizationResult(k, part, tensor, prod, resid)


@dataclass
class RemarkReport:
    k: int
    lhs_R: float
    lhs_grad: float
    lhs_tensor: float | None
    rhs: float
    ratio: float
    passed: bool
    B_T: float
    sup_grad: float

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "lhs_R": self.lhs_R,
            "lhs_grad": self.lhs_grad,
            "lhs_tensor": self.lhs_tensor,
            "rhs": self.rhs,
            "ratio": self.ratio,
            "pass": self.passed,
            "B_T": self.B_T,
            "sup_grad": self.sup_grad,
        }


def remark_bound_check(
    config: NlsRunConfig, k: int, tensor: bool | None = None, slack: float = 1e-6
) -> RemarkReport:
    """``||R^{(k-1)} B1_{1,k} gamma^{(k)}||_{L^1_t L^2}`` against ``B(T) sup ||grad phi||^{2k-3}``.

    The left side is accumulated by the same trapezoid rule as ``B(T)``, in
    the ``R`` form, the ``grad`` form and (when small enough) directly from
    the tensor.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    box = config.box
    if tensor is None:
        tensor = k <= MAX_TENSOR_PARTICLES and (box.m**box.d) ** (2 * k) <= MAX_TENSOR_ENTRIES
    elif tensor and (k > MAX_TENSOR_PARTICLES or (box.m**box.d) ** (2 * k) > MAX_TENSOR_ENTRIES):
        raise SizeGuardError(f"tensor with k={k} on {box.m}^{box.d} points exceeds the size guard")
    traj = nls_solve(config)
    series = strichartz_norms(traj)
    t = series.times
    p = 2 * k - 3
    lhs_grad_t = series.grad_cubic * series.grad**p
    lhs_R_t = np.array([_R_norm(np.abs(s.values) ** 2 * s.values, box) * _R_norm(s.values, box) ** p for s in traj.states])
    lhs_tensor = None
    if tensor:
        vals = np.array([factorized_norm_identity(s, k).tensor_norm for s in traj.states])
        lhs_tensor = float(trapezoid(vals, t)) if len(t) > 1 else 0.0
    lhs_R = float(trapezoid(lhs_R_t, t)) if len(t) > 1 else 0.0
    lhs_grad = float(trapezoid(lhs_grad_t, t)) if len(t) > 1 else 0.0
    sup_grad = float(series.grad.max())
    B_T = float(series.B[-1])
    rhs = B_T * sup_grad**p
    worst = max(v for v in (lhs_R, lhs_grad, lhs_tensor) if v is not None)
    ratio = worst / rhs if rhs > 0 else (0.0 if worst == 0 else float("inf"))
    return RemarkReport(k, lhs_R, lhs_grad, lhs_tensor, rhs, ratio, worst <= rhs * (1 + slack), B_T, sup_grad)
