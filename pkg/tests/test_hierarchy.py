from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from gplab import combinatorics as comb
from gplab import hierarchy as hier

GRID2 = hier.LatticeGrid(1, 2)
seeds = st.integers(0, 2**32 - 1)
times = st.floats(-3.0, 3.0, allow_nan=False)


def _err(a, b):
    return float(np.abs(np.asarray(a) - np.asarray(b)).max())


@settings(max_examples=25, deadline=None)
@given(st.sampled_from([2, 3, 4]), st.integers(1, 2), times, seeds)
def test_propagator_matches_dense_oracle(m, k, t, seed):
    gam = hier.random_symmetric_kernel(k, hier.LatticeGrid(1, m), seed)
    assert _err(hier.apply_propagator(gam, t).data, oracles.dense_propagate(gam.data, t)) < 1e-12


@settings(max_examples=25, deadline=None)
@given(times, times, seeds)
def test_propagator_group_and_unitarity(s, t, seed):
    grid = hier.LatticeGrid(1, 4)
    gam = hier.random_symmetric_kernel(2, grid, seed)
    both = hier.apply_propagator(hier.apply_propagator(gam, s), t)
    assert _err(both.data, hier.apply_propagator(gam, s + t).data) < 1e-12
    assert both.norm() == pytest.approx(gam.norm(), rel=1e-12)
    assert _err(hier.apply_propagator(gam, 0.0).data, gam.data) == 0.0


def test_propagator_on_2d_grid_separates():
    # product of one-particle kernels on a 2-d lattice evolves factor by factor
    grid = hier.LatticeGrid(2, 3)
    rng = np.random.default_rng(0)
    phi = rng.normal(size=grid.M) + 1j * rng.normal(size=grid.M)
    gam = hier.DensityKernel.factorized(phi, 1, grid)
    out = hier.apply_propagator(gam, 0.4)
    f = np.fft.fftn(phi.reshape(3, 3))
    k = np.fft.fftfreq(3, d=1 / 3)
    e = k[:, None] ** 2 + k[None, :] ** 2
    evolved = np.fft.ifftn(f * np.exp(-0.4j * e)).ravel()
    assert _err(out.data, np.outer(evolved, evolved.conj())) < 1e-12


@settings(max_examples=15, deadline=None)
@given(st.sampled_from([2, 3]), st.integers(2, 3), seeds, st.sampled_from(["B1", "B2", "full"]))
def test_collision_matches_dense_oracle(m, K, seed, part):
    gam = hier.random_symmetric_kernel(K, hier.LatticeGrid(1, m), seed)
    for j in range(1, K):
        assert _err(hier.collision_op(gam, j, part).data, oracles.dense_collision(gam.data, j, part)) == 0.0


def test_collision_on_factorized_kernel():
    grid = hier.LatticeGrid(1, 5)
    phi = np.exp(2j * np.pi * np.arange(5) / 5) * (1 + np.arange(5))
    g3 = hier.DensityKernel.factorized(phi, 3, grid)
    g2 = hier.DensityKernel.factorized(phi, 2, grid)
    weight = np.abs(phi) ** 2
    b1 = hier.collision_op(g3, 1, "B1").data
    assert _err(b1, g2.data * weight[:, None, None, None]) < 1e-10
    b2 = hier.collision_op(g3, 2, "B2").data
    assert _err(b2, g2.data * weight[None, None, None, :]) < 1e-10


def test_total_collision_is_sum():
    gam = hier.random_symmetric_kernel(3, GRID2, 1)
    total = hier.total_collision(gam)
    parts = hier.collision_op(gam, 1).data + hier.collision_op(gam, 2).data
    assert _err(total.data, parts) == 0.0


def test_collision_validation():
    gam = hier.random_symmetric_kernel(3, GRID2, 2)
    with pytest.raises(ValueError):
        hier.collision_op(gam, 3)
    with pytest.raises(ValueError):
        hier.collision_op(gam, 1, part="B3")
    with pytest.raises(ValueError):
        hier.collision_op(gam, 2, source_particle=2)
    with pytest.raises(ValueError):
        hier.collision_op(hier.random_symmetric_kernel(1, GRID2, 0), 1)
    with pytest.raises(ValueError):
        hier.apply_propagator(gam, math.inf)
    with pytest.raises(ValueError):
        hier.DensityKernel(2, GRID2, np.zeros((2, 2)))


def test_apply_R_factorizes():
    grid = hier.LatticeGrid(1, 8, scale=0.5)
    rng = np.random.default_rng(3)
    phi = rng.normal(size=8) + 1j * rng.normal(size=8)
    rphi = np.fft.ifft(np.fft.fft(phi) * 0.5 * np.abs(np.fft.fftfreq(8, d=1 / 8)))
    out = hier.apply_R(hier.DensityKernel.factorized(phi, 2, grid))
    assert _err(out.data, hier.DensityKernel.factorized(rphi, 2, grid).data) < 1e-12


@given(st.integers(1, 3), seeds)
@settings(max_examples=20, deadline=None)
def test_random_kernel_symmetries(k, seed):
    gam = hier.random_symmetric_kernel(k, hier.LatticeGrid(1, 3), seed)
    assert gam.hermitian_residual() < 1e-14
    assert gam.symmetry_residual() < 1e-14
    assert gam.norm() == pytest.approx(1.0)


def test_asymmetric_source_rejected():
    rng = np.random.default_rng(0)
    bad = hier.DensityKernel(3, GRID2, rng.normal(size=(2,) * 6))
    with pytest.raises(hier.SymmetryError):
        hier.require_symmetric(bad)
    state = comb.BoardState.initial(comb.CollisionMap((1, 2, 1)))
    with pytest.raises(hier.SymmetryError):
        hier.verify_move_invariance(state, 3, hier.DensityKernel(4, GRID2, rng.normal(size=(2,) * 8)), 1.0, hier.SimplexQuadrature(2))


@settings(max_examples=10, deadline=None)
@given(st.sampled_from([(1,), (1, 1), (1, 2), (1, 1, 2), (1, 2, 1), (1, 2, 3)]), seeds, st.data())
def test_J_matches_dense_oracle(mu, seed, data):
    n = len(mu)
    grid = hier.LatticeGrid(1, 3)
    gam = hier.random_symmetric_kernel(n + 1, grid, seed)
    rest = sorted(data.draw(st.lists(st.floats(0.0, 1.0), min_size=n, max_size=n)), reverse=True)
    t = [1.0] + rest
    got = hier.evaluate_J(t, comb.CollisionMap(mu), hier.free_source(gam)).data
    ref = oracles.dense_J(t, mu, lambda s: oracles.dense_propagate(gam.data, s))
    assert _err(got, ref) < 1e-12


def test_J_time_count_checked():
    with pytest.raises(ValueError):
        hier.evaluate_J([1.0], comb.CollisionMap((1,)), hier.random_symmetric_kernel(2, GRID2, 0))


@pytest.mark.parametrize("seed", range(3))
def test_static_duhamel_closed_form(seed):
    gam = hier.random_symmetric_kernel(2, GRID2, seed)
    ref = oracles.static_duhamel_n1(gam.data, 0.8)
    board = comb.BoardState.initial(comb.CollisionMap((1,)))
    got = hier.integrate_I(board, gam, 0.8, hier.SimplexQuadrature(8)).data
    assert _err(got, ref) < 1e-13
    step = hier.duhamel_step(lambda s: gam, 0.8, hier.SimplexQuadrature(8)).data
    assert _err(step, ref) < 1e-13


def test_simplex_rule():
    quad = hier.SimplexQuadrature(6)
    s, w = quad.chain(3, 2.0)
    assert np.all(np.diff(s, axis=1) <= 0) and np.all(s >= 0) and np.all(s <= 2.0)
    assert w.sum() == pytest.approx(2.0**3 / 6, rel=1e-13)
    # exact on low-degree polynomials over the simplex
    assert (w * s[:, 0] * s[:, 2]).sum() == pytest.approx(2.0**5 / 30, rel=1e-12)
    perm = comb.TimePermutation.from_inverse((3, 2, 4))
    t, _ = quad.nodes(3, 2.0, perm)
    assert np.all(t[:, 2] >= t[:, 1]) and np.all(t[:, 1] >= t[:, 3])
    with pytest.raises(ValueError):
        hier.SimplexQuadrature(0)


@pytest.mark.parametrize("seed", range(5))
def test_move_invariance(seed):
    state = comb.BoardState.initial(comb.CollisionMap((1, 2, 1)))
    src = hier.random_symmetric_kernel(4, GRID2, seed)
    assert hier.verify_move_invariance(state, 3, src, 1.0, hier.SimplexQuadrature(8)) < 1e-12


def test_move_invariance_needs_evolving_source():
    state = comb.BoardState.initial(comb.CollisionMap((1, 2, 1)))
    src = hier.random_symmetric_kernel(4, GRID2, 0)
    assert hier.verify_move_invariance(state, 3, src, 1.0, hier.SimplexQuadrature(8), evolve=False) > 1e-4


def test_move_invariance_worked_board():
    state = comb.BoardState(comb.CollisionMap((1, 2, 1, 4)), comb.TimePermutation.from_inverse((2, 5, 4, 3)))
    src = hier.random_symmetric_kernel(5, GRID2, 11)
    assert hier.verify_move_invariance(state, 3, src, 1.0, hier.SimplexQuadrature(3)) < 1e-12


@pytest.mark.parametrize("i,l,j", [(1, 2, 3), (1, 2, 4), (1, 3, 4), (2, 3, 4)])
def test_commutation(i, l, j):
    rng = np.random.default_rng(j * 10 + l)
    for _ in range(3):
        gam = hier.random_symmetric_kernel(j + 1, GRID2, int(rng.integers(2**32)))
        t = np.sort(rng.uniform(0, 2, 4))[::-1]
        assert hier.verify_commutation(t, i, l, j, gam) < 1e-12


def test_commutation_on_larger_grid():
    grid = hier.LatticeGrid(1, 3)
    gam = hier.random_symmetric_kernel(4, grid, 7)
    assert hier.verify_commutation([1.0, 0.7, 0.4, 0.1], 1, 2, 3, gam) < 1e-12


def test_commutation_validation():
    gam = hier.random_symmetric_kernel(4, GRID2, 0)
    with pytest.raises(ValueError):
        hier.commutation_sides([1, 0.5, 0.2, 0.1], 2, 2, 3, gam)
    with pytest.raises(ValueError):
        hier.commutation_sides([1, 0.5, 0.2, 0.1], 1, 2, 4, gam)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_regrouping(n):
    src = hier.random_symmetric_kernel(n + 1, GRID2, 100 + n)
    for cls in comb.partition_classes(n):
        assert hier.verify_regrouping(n, cls, src, 1.0, hier.SimplexQuadrature(6)) < 1e-12


def test_regrouping_sum_is_full_expansion():
    # summing the regrouped class integrals recovers the full n = 2 expansion
    src = hier.free_source(hier.random_symmetric_kernel(3, GRID2, 5))
    quad = hier.SimplexQuadrature(8)
    full = sum((hier.integrate_I(comb.BoardState.initial(m), src, 1.0, quad).data for m in comb.enumerate_maps(2)))
    grouped = 0
    for cls in comb.partition_classes(2):
        for member in cls.members:
            grouped = grouped + hier.integrate_I(comb.BoardState(cls.representative, member.perm), src, 1.0, quad).data
    assert _err(full, grouped) < 1e-12


def test_relative_residual_floor():
    z = hier.DensityKernel.zeros(1, GRID2)
    assert hier.relative_residual(z, z) == 0.0
