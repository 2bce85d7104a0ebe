"""Discrete surrogate of the Gross-Pitaevskii hierarchy on a small torus.

A ``k``-particle kernel is a complex tensor of shape ``(M,) * 2k`` with
``M = m**d``: the first ``k`` axes carry ``x_1..x_k`` and the last ``k``
carry ``x'_1..x'_k``.  Each axis is a flattened ``d``-dimensional periodic
lattice with integer frequencies, so the Laplacian is the spectral
multiplier ``-|xi|^2``.

The free propagator ``e^{it Delta_pm}`` is the Fourier multiplier
``exp(-it (sum |xi_j|^2 - sum |xi'_j|^2))``, the sign that makes
``(i d/dt + Delta_pm) gamma = 0``.  Collision operators act by diagonal
extraction on the grid; no lattice-spacing factor is attached.

Internally every tensor carries a leading batch axis so that all nodes of a
quadrature rule propagate through one Duhamel chain together.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .combinatorics import (
    BoardState,
    CollisionMap,
    EchelonClass,
    TimePermutation,
    acceptable_move,
)

RESIDUAL_FLOOR = 1e-14
SYMMETRY_TOL = 1e-10
DEFAULT_POINTS = 8
DENSE_DFT_MAX = 64


class SymmetryError(ValueError):
    """Source kernel fails the permutation-symmetry precondition."""


@dataclass(frozen=True)
class LatticeGrid:
    d: int = 1
    m: int = 2
    scale: float = 1.0  # frequency unit; 1 gives integer frequencies

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")
        if self.d < 1:
            raise ValueError(f"d must be >= 1, got {self.d}")
        if self.m < 2:
            raise ValueError(f"m must be >= 2, got {self.m}")

    @property
    def M(self) -> int:
        return self.m**self.d

    @property
    def frequencies(self) -> np.ndarray:
        """Integer frequencies per axis, in FFT order."""
        return np.rint(np.fft.fftfreq(self.m) * self.m).astype(int)

    def energies(self) -> np.ndarray:
        """``|xi|^2`` for every single-particle Fourier index (flattened, FFT order)."""
        f2 = (self.scale * self.frequencies.astype(float)) ** 2
        total = np.zeros((self.m,) * self.d)
        for ax in range(self.d):
            shape = [1] * self.d
            shape[ax] = self.m
            total = total + f2.reshape(shape)
        return total.ravel()

    def norms(self) -> np.ndarray:
        """``|xi|`` for every single-particle Fourier index."""
        return np.sqrt(self.energies())


@dataclass(frozen=True, eq=False)
class DensityKernel:
    k: int
    grid: LatticeGrid
    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=complex)
        expected = (self.grid.M,) * (2 * self.k)
        if arr.shape != expected:
            raise ValueError(f"kernel shape {arr.shape} does not match {expected}")
        object.__setattr__(self, "data", arr)

    @classmethod
    def zeros(cls, k: int, grid: LatticeGrid) -> "DensityKernel":
        return cls(k, grid, np.zeros((grid.M,) * (2 * k), dtype=complex))

    @classmethod
    def factorized(cls, phi: np.ndarray, k: int, grid: LatticeGrid) -> "DensityKernel":
        """``prod_j phi(x_j) * prod_j conj(phi(x'_j))``."""
        phi = np.asarray(phi, dtype=complex).ravel()
        if phi.shape != (grid.M,):
            raise ValueError(f"phi has {phi.size} entries, grid needs {grid.M}")
        factors = [phi] * k + [np.conj(phi)] * k
        data = factors[0]
        for f in factors[1:]:
            data = np.multiply.outer(data, f)
        return cls(k, grid, data)

    def norm(self) -> float:
        return float(np.linalg.norm(self.data.ravel()))

    def hermitian_residual(self) -> float:
        k = self.k
        swapped = np.conj(np.transpose(self.data, list(range(k, 2 * k)) + list(range(k))))
        return float(np.linalg.norm((self.data - swapped).ravel()) / max(self.norm(), RESIDUAL_FLOOR))

    def symmetry_residual(self) -> float:
        """Largest relative change under a simultaneous adjacent transposition.

        Adjacent transpositions generate the symmetric group, so a zero value
        certifies invariance under every permutation.
        """
        k = self.k
        scale = max(self.norm(), RESIDUAL_FLOOR)
        worst = 0.0
        for a in range(k - 1):
            perm = list(range(k))
            perm[a], perm[a + 1] = perm[a + 1], perm[a]
            moved = np.transpose(self.data, perm + [k + p for p in perm])
            worst = max(worst, float(np.linalg.norm((self.data - moved).ravel())) / scale)
        return worst

    def __add__(self, other: "DensityKernel") -> "DensityKernel":
        _check_same(self, other)
        return DensityKernel(self.k, self.grid, self.data + other.data)

    def __sub__(self, other: "DensityKernel") -> "DensityKernel":
        _check_same(self, other)
        return DensityKernel(self.k, self.grid, self.data - other.data)

    def scaled(self, c: complex) -> "DensityKernel":
        return DensityKernel(self.k, self.grid, c * self.data)


def _check_same(a: DensityKernel, b: DensityKernel) -> None:
    if a.k != b.k or a.grid != b.grid:
        raise ValueError("kernels live on different spaces")


# ---------------------------------------------------------------------------
# batched tensor kernels: arrays of shape (N,) + (M,) * 2k


def _frequency(grid: LatticeGrid, k: int) -> np.ndarray:
    """``sum |xi_j|^2 - sum |xi'_j|^2`` on the full k-particle Fourier grid."""
    e = grid.energies()
    n_ax = 2 * k
    total = np.zeros((grid.M,) * n_ax)
    for ax in range(n_ax):
        shape = [1] * n_ax
        shape[ax] = grid.M
        total = total + (e if ax < k else -e).reshape(shape)
    return total


@functools.lru_cache(maxsize=None)
def _dft_matrix(m: int, d: int) -> np.ndarray:
    """Forward DFT on the flattened ``m^d`` grid, numpy sign convention."""
    j = np.arange(m)
    f1 = np.exp(-2j * np.pi * np.outer(j, j) / m)
    out = np.ones((1, 1), dtype=complex)
    for _ in range(d):
        out = np.kron(out, f1)
    return out


def _apply_each_axis(batch: np.ndarray, mat: np.ndarray) -> np.ndarray:
    for ax in range(1, batch.ndim):
        batch = np.moveaxis(np.tensordot(mat, batch, axes=([1], [ax])), 0, ax)
    return batch


def _fourier_multiply(batch: np.ndarray, grid: LatticeGrid, mult: np.ndarray) -> np.ndarray:
    n = batch.shape[0]
    n_ax = batch.ndim - 1
    if grid.M <= DENSE_DFT_MAX:
        # many tiny axes: dense DFT matrices beat per-line FFT calls
        f = _dft_matrix(grid.m, grid.d)
        spec = _apply_each_axis(batch, f) * mult
        return _apply_each_axis(spec, f.conj() / grid.M)
    fine = (n,) + (grid.m,) * (grid.d * n_ax)
    axes = tuple(range(1, len(fine)))
    spec = np.fft.fftn(batch.reshape(fine), axes=axes).reshape(batch.shape)
    spec *= mult
    return np.fft.ifftn(spec.reshape(fine), axes=axes).reshape(batch.shape)


def _propagate(batch: np.ndarray, grid: LatticeGrid, times) -> np.ndarray:
    n = batch.shape[0]
    k = (batch.ndim - 1) // 2
    times = np.broadcast_to(np.asarray(times, dtype=float), (n,))
    if k == 0 or not np.any(times):
        return batch
    omega = _frequency(grid, k)
    mult = np.exp(-1j * times.reshape((n,) + (1,) * omega.ndim) * omega)
    return _fourier_multiply(batch, grid, mult)


def _contract(batch: np.ndarray, target: int, source: int, primed: bool) -> np.ndarray:
    """Set ``x_source = x'_source`` equal to ``x_target`` (or ``x'_target``).

    Particle labels are 1-based positions in the input tensor; the output keeps
    the remaining particles in their original order.
    """
    K = (batch.ndim - 1) // 2
    labels = list(range(batch.ndim))
    tgt_axis = 1 + (K if primed else 0) + (target - 1)
    src_x = 1 + (source - 1)
    src_xp = 1 + K + (source - 1)
    labels[src_x] = labels[tgt_axis]
    labels[src_xp] = labels[tgt_axis]
    out = [0] + [labels[a] for a in range(1, batch.ndim) if a not in (src_x, src_xp)]
    return np.einsum(batch, labels, out)


def _collide(batch: np.ndarray, j: int, source: int, part: str) -> np.ndarray:
    if part == "B1":
        return _contract(batch, j, source, primed=False)
    if part == "B2":
        return _contract(batch, j, source, primed=True)
    return _contract(batch, j, source, primed=False) - _contract(batch, j, source, primed=True)


def _multiplier_R(grid: LatticeGrid, k: int) -> np.ndarray:
    r = grid.norms()
    n_ax = 2 * k
    total = np.ones((grid.M,) * n_ax)
    for ax in range(n_ax):
        shape = [1] * n_ax
        shape[ax] = grid.M
        total = total * r.reshape(shape)
    return total


# ---------------------------------------------------------------------------
# public operators


def apply_propagator(gamma: DensityKernel, t: float) -> DensityKernel:
    """``e^{it Delta_pm^{(k)}} gamma``."""
    if not math.isfinite(t):
        raise ValueError(f"time must be finite, got {t}")
    out = _propagate(gamma.data[None], gamma.grid, [t])[0]
    return DensityKernel(gamma.k, gamma.grid, out)


def collision_op(
    gamma: DensityKernel, j: int, part: str = "full", source_particle: int | None = None
) -> DensityKernel:
    """``B_{j,k+1} gamma`` for a ``k+1`` particle kernel.

    ``part`` selects ``"B1"``, ``"B2"`` or the difference ``"full"``.  By
    default the contracted particle is the last one; ``source_particle``
    contracts another position instead (used by the commutation check).
    """
    K = gamma.k
    src = K if source_particle is None else int(source_particle)
    if K < 2:
        raise ValueError("collision needs at least two particles")
    if part not in ("full", "B1", "B2"):
        raise ValueError(f"unknown part {part!r}")
    if not 1 <= src <= K:
        raise ValueError(f"source particle {src} outside 1..{K}")
    if source_particle is None:
        if not 1 <= j <= K - 1:
            raise ValueError(f"j={j} outside 1..{K - 1}")
    elif not (1 <= j <= K and j != src):
        raise ValueError(f"target {j} must be in 1..{K} and differ from source {src}")
    out = _collide(gamma.data[None], j, src, part)[0]
    return DensityKernel(K - 1, gamma.grid, out)


def total_collision(gamma: DensityKernel) -> DensityKernel:
    """``B^{(k+1)} = sum_{j<=k} B_{j,k+1}``."""
    parts = [collision_op(gamma, j) for j in range(1, gamma.k)]
    acc = parts[0]
    for p in parts[1:]:
        acc = acc + p
    return acc


def apply_R(gamma: DensityKernel) -> DensityKernel:
    """``R^{(k)} = prod_j |nabla_{x_j}| prod_j |nabla_{x'_j}|`` as a Fourier multiplier."""
    mult = _multiplier_R(gamma.grid, gamma.k)
    out = _fourier_multiply(gamma.data[None], gamma.grid, mult[None])[0]
    return DensityKernel(gamma.k, gamma.grid, out)


def free_source(gamma0: DensityKernel) -> Callable[[float], DensityKernel]:
    """Freely evolving source ``t -> e^{it Delta_pm} gamma0``."""

    def source(t: float) -> DensityKernel:
        return apply_propagator(gamma0, t)

    source.initial = gamma0  # type: ignore[attr-defined]
    return source


def _evolve_from(gamma0: DensityKernel, times: np.ndarray) -> np.ndarray:
    """``e^{it Delta_pm} gamma0`` for each ``t`` in ``times``, stacked."""
    grid, k = gamma0.grid, gamma0.k
    mult = np.exp(-1j * np.asarray(times, dtype=float).reshape((-1,) + (1,) * (2 * k)) * _frequency(grid, k))
    if grid.M <= DENSE_DFT_MAX:
        f = _dft_matrix(grid.m, grid.d)
        spec = _apply_each_axis(gamma0.data[None], f)
        return _apply_each_axis(spec * mult, f.conj() / grid.M)
    base = np.broadcast_to(gamma0.data, mult.shape).copy()
    return _fourier_multiply(base, grid, mult)


def _source_batch(source, times_last: np.ndarray, k: int) -> tuple[np.ndarray, LatticeGrid]:
    """Source tensors at each node's last time, stacked along the batch axis."""
    if isinstance(source, DensityKernel):
        if source.k != k:
            raise ValueError(f"source has {source.k} particles, map needs {k}")
        return np.broadcast_to(source.data, (len(times_last),) + source.data.shape).copy(), source.grid
    initial = getattr(source, "initial", None)
    if isinstance(initial, DensityKernel):
        if initial.k != k:
            raise ValueError(f"source has {initial.k} particles, map needs {k}")
        return _evolve_from(initial, times_last), initial.grid
    kernels = [source(float(t)) for t in times_last]
    if kernels[0].k != k:
        raise ValueError(f"source has {kernels[0].k} particles, map needs {k}")
    return np.stack([g.data for g in kernels]), kernels[0].grid


def _evaluate_J_batch(times: np.ndarray, cmap: CollisionMap, source) -> tuple[np.ndarray, LatticeGrid]:
    """``J`` at every row of ``times`` (shape ``(N, n+1)``)."""
    n = cmap.n
    g, grid = _source_batch(source, times[:, n], n + 1)
    for c in range(n + 1, 1, -1):
        g = _collide(g, cmap(c), c, "full")
        g = _propagate(g, grid, times[:, c - 2] - times[:, c - 1])
    return g, grid


def evaluate_J(times: Sequence[float], cmap: CollisionMap, source) -> DensityKernel:
    """``e^{i(t1-t2)Delta} B_{1,2} e^{i(t2-t3)Delta} B_{mu(3),3} ... gamma(t_{n+1})``.

    ``source`` is either a fixed ``n+1`` particle kernel or a callable of the
    last time (see :func:`free_source`).
    """
    t = np.asarray(times, dtype=float)
    if t.shape != (cmap.n + 1,):
        raise ValueError(f"need {cmap.n + 1} times, got {t.shape}")
    out, grid = _evaluate_J_batch(t[None], cmap, source)
    return DensityKernel(1, grid, out[0])


# ---------------------------------------------------------------------------
# simplex quadrature


@dataclass(frozen=True)
class SimplexQuadrature:
    """Nested Gauss-Legendre rule on ``t1 >= t_sigma(2) >= ... >= t_sigma(n+1) >= 0``.

    ``perm`` fixes the nesting order; ``None`` adopts the board's permutation.
    """

    points: int = DEFAULT_POINTS
    perm: TimePermutation | None = None
    scheme: str = "gauss-legendre"

    def __post_init__(self):
        if self.points < 1:
            raise ValueError("points must be >= 1")
        if self.scheme != "gauss-legendre":
            raise ValueError(f"unknown scheme {self.scheme!r}")

    def chain(self, n: int, t1: float) -> tuple[np.ndarray, np.ndarray]:
        """Ordered nodes ``s_1 >= ... >= s_n`` in ``[0, t1]`` and positive weights."""
        x, w = np.polynomial.legendre.leggauss(self.points)
        x = 0.5 * (x + 1.0)
        w = 0.5 * w
        grids = np.meshgrid(*([x] * n), indexing="ij")
        wgrids = np.meshgrid(*([w] * n), indexing="ij")
        frac = np.stack([g.ravel() for g in grids], axis=1)
        weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
        s = np.empty_like(frac)
        prev = np.full(len(frac), float(t1))
        for k in range(n):
            weights = weights * prev
            s[:, k] = prev * frac[:, k]
            prev = s[:, k]
        return s, weights

    def nodes(self, n: int, t1: float, perm: TimePermutation | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Full time vectors ``(t_1, ..., t_{n+1})`` per node, and weights."""
        perm = perm or self.perm or TimePermutation.identity(n)
        s, w = self.chain(n, t1)
        times = np.empty((len(s), n + 1))
        times[:, 0] = t1
        for k, target in enumerate(perm.images):
            times[:, target - 1] = s[:, k]
        return times, w


def integrate_I(board: BoardState, source, t1: float, quad: SimplexQuadrature) -> DensityKernel:
    """``I(mu, sigma)``: integral of ``J(.; mu)`` over the simplex ordered by ``sigma``."""
    if quad.perm is not None and quad.perm != board.perm:
        raise ValueError("quadrature nesting order differs from the board permutation")
    times, w = quad.nodes(board.n, t1, board.perm)
    vals, grid = _evaluate_J_batch(times, board.map, source)
    return DensityKernel(1, grid, np.tensordot(w, vals, axes=1))


def relative_residual(a: DensityKernel, b: DensityKernel, floor: float = RESIDUAL_FLOOR) -> float:
    return float((a - b).norm() / max(a.norm(), b.norm(), floor))


def _source_initial(source) -> DensityKernel:
    if isinstance(source, DensityKernel):
        return source
    initial = getattr(source, "initial", None)
    if isinstance(initial, DensityKernel):
        return initial
    return source(0.0)


def require_symmetric(source, tol: float = SYMMETRY_TOL) -> None:
    g = _source_initial(source)
    res = g.symmetry_residual()
    if res > tol:
        raise SymmetryError(f"source symmetry residual {res:.3e} exceeds {tol:.1e}")


def _as_source(gamma, evolve: bool):
    if evolve and isinstance(gamma, DensityKernel):
        return free_source(gamma)
    return gamma


def verify_move_invariance(
    board: BoardState,
    j: int,
    source,
    t1: float,
    quad: SimplexQuadrature,
    evolve: bool = True,
) -> float:
    """Relative residual ``I(mu, sigma)`` vs ``I(mu', sigma')`` after the move at ``j``.

    A kernel source is evolved freely by default; a static source breaks the
    identity for the move that touches the last time variable.
    """
    moved = acceptable_move(board, j)
    require_symmetric(source)
    src = _as_source(source, evolve)
    plain = SimplexQuadrature(quad.points, None, quad.scheme)
    left = integrate_I(board, src, t1, plain)
    right = integrate_I(moved, src, t1, plain)
    return relative_residual(left, right)


def commutation_sides(
    times: Sequence[float], i: int, l: int, j: int, gamma: DensityKernel
) -> tuple[DensityKernel, DensityKernel]:
    """Both sides of the exchange identity for ``B_{l,j}`` and ``B_{i,j+1}``.

    ``times = (t_{j-1}, t_j, t_{j+1}, t_{j+2})`` and ``gamma`` has ``j+1``
    particles.  On the right, ``B_{l,j}`` contracts position ``j``; the
    particle formerly at ``j+1`` then sits last, so the tilde Laplacian is the
    plain Laplacian of the remaining positions.
    """
    if not 1 <= i < l < j:
        raise ValueError(f"need 1 <= i < l < j, got i={i}, l={l}, j={j}")
    if gamma.k != j + 1:
        raise ValueError(f"gamma must have j+1={j + 1} particles, has {gamma.k}")
    tm1, tj, tj1, tj2 = (float(x) for x in times)
    lhs = apply_propagator(gamma, tj1 - tj2)
    lhs = collision_op(lhs, i)
    lhs = apply_propagator(lhs, tj - tj1)
    lhs = collision_op(lhs, l)
    lhs = apply_propagator(lhs, tm1 - tj)

    rhs = apply_propagator(gamma, tj - tj2)
    rhs = collision_op(rhs, l, source_particle=j)
    rhs = apply_propagator(rhs, -(tj - tj1))
    rhs = collision_op(rhs, i)
    rhs = apply_propagator(rhs, tm1 - tj1)
    return lhs, rhs


def verify_commutation(times: Sequence[float], i: int, l: int, j: int, gamma: DensityKernel) -> float:
    lhs, rhs = commutation_sides(times, i, l, j, gamma)
    return relative_residual(lhs, rhs)


def verify_regrouping(
    n: int,
    cls: EchelonClass,
    source,
    t1: float,
    quad: SimplexQuadrature,
    evolve: bool = True,
) -> float:
    """Class sum of standard-simplex integrals vs ``J(.; mu_s)`` over the class domain.

    Left: ``sum_{mu ~ mu_s} I(mu, id)``.  Right: ``sum_sigma I(mu_s, sigma)``
    over the member permutations.
    """
    if cls.n != n:
        raise ValueError(f"class has n={cls.n}, expected {n}")
    require_symmetric(source)
    src = _as_source(source, evolve)
    plain = SimplexQuadrature(quad.points, None, quad.scheme)
    left = right = None
    for member in cls.members:
        lv = integrate_I(BoardState.initial(member.map), src, t1, plain)
        rv = integrate_I(BoardState(cls.representative, member.perm), src, t1, plain)
        left = lv if left is None else left + lv
        right = rv if right is None else right + rv
    return relative_residual(left, right)


def duhamel_step(
    gamma_next: Callable[[float], DensityKernel], t: float, quad: SimplexQuadrature
) -> DensityKernel:
    """``int_0^t e^{i(t-s)Delta^{(k)}} B^{(k+1)} gamma_next(s) ds`` by Gauss-Legendre."""
    x, w = np.polynomial.legendre.leggauss(quad.points)
    s = 0.5 * t * (x + 1.0)
    w = 0.5 * t * w
    acc = None
    for si, wi in zip(s, w):
        term = apply_propagator(total_collision(gamma_next(float(si))), t - si).scaled(wi)
        acc = term if acc is None else acc + term
    return acc


def random_symmetric_kernel(k: int, grid: LatticeGrid, seed: int) -> DensityKernel:
    """Unit-norm kernel, Hermitian and symmetric under simultaneous permutations."""
    rng = np.random.default_rng(seed)
    shape = (grid.M,) * (2 * k)
    g = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    g = 0.5 * (g + np.conj(np.transpose(g, list(range(k, 2 * k)) + list(range(k)))))
    acc = np.zeros(shape, dtype=complex)
    for p in itertools.permutations(range(k)):
        acc += np.transpose(g, list(p) + [k + q for q in p])
    acc /= np.linalg.norm(acc.ravel())
    return DensityKernel(k, grid, acc)
