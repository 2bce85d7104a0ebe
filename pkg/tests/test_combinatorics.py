from __future__ import annotations

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from gplab import combinatorics as comb


@st.composite
def collision_maps(draw, max_n=7):
    n = draw(st.integers(1, max_n))
    values = tuple(draw(st.integers(1, c - 1)) for c in range(2, n + 2))
    return comb.CollisionMap(values)


@pytest.mark.parametrize("n", range(1, 8))
def test_enumeration_size(n):
    maps = comb.enumerate_maps(n)
    assert len(maps) == math.factorial(n)
    assert len({m.values for m in maps}) == len(maps)


def test_enumeration_cap():
    with pytest.raises(comb.EnumerationLimitError):
        comb.enumerate_maps(9)
    assert len(comb.enumerate_maps(3, cap=3)) == 6


def test_map_validation():
    with pytest.raises(ValueError):
        comb.CollisionMap((2,))
    with pytest.raises(ValueError):
        comb.CollisionMap((1, 3))
    m = comb.CollisionMap((1, 2, 1))
    assert comb.CollisionMap.from_json(m.to_json()) == m


def test_worked_example():
    before, after = oracles.WORKED_BEFORE, oracles.WORKED_AFTER
    state = comb.BoardState(comb.CollisionMap(before["mu"]), comb.TimePermutation.from_inverse(before["header"]))
    assert state.highlighted() == before["marked"]
    moved = comb.acceptable_move(state, 3)
    assert moved.map.values == after["mu"]
    assert moved.perm.header() == after["header"]
    assert moved.highlighted() == after["marked"]


def test_rejected_move():
    state = comb.BoardState.initial(comb.CollisionMap((1, 1, 2)))
    with pytest.raises(comb.RejectedMoveError):
        comb.acceptable_move(state, 2)
    with pytest.raises(comb.RejectedMoveError):
        comb.acceptable_move(state, 4)


def test_render_marks_entries():
    text = comb.BoardState.initial(comb.CollisionMap((1, 2))).render()
    assert "[B1,2]" in text and "[B2,3]" in text and " B1,3 " in text


@given(collision_maps())
def test_move_matches_tuple_oracle(cmap):
    state = comb.BoardState.initial(cmap)
    for j in range(2, cmap.n + 1):
        ref = oracles.move_on_tuples(cmap.values, state.perm.header(), j)
        if ref is None:
            assert not comb.is_admissible(cmap, j)
            continue
        moved = comb.acceptable_move(state, j)
        assert (moved.map.values, moved.perm.header()) == ref


@given(collision_maps())
def test_move_is_involution_up_to_direction(cmap):
    # undoing a move is never itself admissible: mu'(j+1) > mu'(j)
    state = comb.BoardState.initial(cmap)
    for j in range(2, cmap.n + 1):
        if comb.is_admissible(cmap, j):
            moved = comb.acceptable_move(state, j)
            assert moved.map(j) < moved.map(j + 1)


@given(collision_maps())
def test_move_decreases_lexicographically(cmap):
    # columns before j are untouched and mu'(j) = mu(j+1) < mu(j), so reduction terminates
    state = comb.BoardState.initial(cmap)
    for j in range(2, cmap.n + 1):
        if comb.is_admissible(cmap, j):
            moved = comb.acceptable_move(state, j).map
            assert moved.values[: j - 2] == cmap.values[: j - 2]
            assert moved(j) == cmap(j + 1) and moved.values < cmap.values


def test_adjacent_descents_need_not_drop():
    before = comb.CollisionMap((1, 2, 1, 1))
    after = comb.acceptable_move(comb.BoardState.initial(before), 3).map
    assert after.values == (1, 1, 2, 1)

    def descents(v):
        return sum(a > b for a, b in zip(v, v[1:]))

    assert descents(after.values) == descents(before.values)


@given(collision_maps())
def test_reduction_reaches_echelon(cmap):
    red = comb.reduce_to_echelon(cmap)
    assert comb.is_upper_echelon(red.representative)
    assert comb.is_upper_echelon_by_rows(red.representative)
    final = comb.replay(cmap, red.moves)
    assert final.map == red.representative and final.perm == red.perm
    assert sorted(red.perm.images) == list(range(2, cmap.n + 2))


@given(collision_maps())
def test_echelon_definitions_agree(cmap):
    assert comb.is_upper_echelon(cmap) == comb.is_upper_echelon_by_rows(cmap)


@given(collision_maps())
def test_batch_reduction_matches_scalar(cmap):
    (rep, perm), = comb.reduce_all([cmap])
    red = comb.reduce_to_echelon(cmap)
    assert rep == red.representative and perm == red.perm


@pytest.mark.parametrize("n", range(1, 13))
def test_counts(n):
    assert comb.count_echelon(n) == oracles.CATALAN[n - 1]
    assert comb.count_echelon(n) <= 4**n
    assert comb.partition_count(n) <= 2**n
    assert comb.partition_count(n) == 1 + sum(comb.partition_count(k) for k in range(1, n))


@pytest.mark.parametrize("n", range(1, 7))
def test_echelon_count_matches_exhaustive_search(n):
    terminal = oracles.terminal_forms(n)
    assert len(terminal) == comb.count_echelon(n)
    assert all(all(a <= b for a, b in zip(t, t[1:])) for t in terminal)


@pytest.mark.parametrize("n", range(1, 6))
def test_reduction_independent_of_move_order(n):
    # every order of admissible moves ends at the deterministic representative
    for mu in oracles.all_maps(n):
        rep = comb.reduce_to_echelon(comb.CollisionMap(mu)).representative.values
        assert oracles.reachable_terminals(mu) == {rep}


@pytest.mark.parametrize("n", range(1, 7))
def test_reduction_idempotent_on_echelon_maps(n):
    for cls in comb.partition_classes(n):
        red = comb.reduce_to_echelon(cls.representative)
        assert red.representative == cls.representative and list(red.moves) == []
        assert red.perm == comb.BoardState.initial(cls.representative).perm


@pytest.mark.parametrize("n", range(1, 7))
def test_partition_classes(n):
    classes = comb.partition_classes(n)
    assert len(classes) == comb.count_echelon(n)
    assert sum(len(c.members) for c in classes) == math.factorial(n)
    for c in classes:
        perms = c.perms()
        assert len(set(perms)) == len(perms)
        for member in c.members:
            red = comb.reduce_to_echelon(member.map)
            assert red.representative == c.representative and red.perm == member.perm
    t1 = 0.7
    total = sum(comb.build_domain(c, t1).measure for c in classes)
    assert total == pytest.approx(t1**n, rel=1e-12)


def test_domain_membership():
    cls = next(c for c in comb.partition_classes(3) if c.representative.values == (1, 1, 2))
    assert len(cls.members) == 2
    dom = comb.build_domain(cls, 1.0)
    inside = dom.contains([[0.9, 0.6, 0.3], [0.9, 0.3, 0.6], [0.3, 0.9, 0.6], [1.2, 0.5, 0.1]])
    assert list(inside) == [True, True, False, False]
    with pytest.raises(ValueError):
        comb.build_domain(cls, -1.0)


def test_count_table_columns():
    table = comb.count_table(4)
    assert [r["n_factorial"] for r in table] == [1, 2, 6, 24]
    assert [r["four_pow_n"] for r in table] == [4, 16, 64, 256]


@given(st.integers(1, 6).flatmap(lambda n: st.permutations(range(2, n + 2))))
def test_time_permutation_roundtrip(header):
    perm = comb.TimePermutation.from_inverse(tuple(header))
    assert perm.header() == tuple(header)
    assert perm.inverse().inverse() == perm
    assert all(perm(h) == i for i, h in enumerate(header, start=2))
