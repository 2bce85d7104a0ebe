"""Collision maps, acceptable moves and upper-echelon classes.

A collision map picks one collision operator ``B_{mu(j), j}`` per column
``j = 2, ..., n+1`` of the Duhamel board.  A board state pairs a map with a
permutation ``sigma`` of ``{2, ..., n+1}`` that fixes the time ordering
``t_1 >= t_sigma(2) >= ... >= t_sigma(n+1)`` of the associated simplex
integral.  Acceptable moves swap adjacent columns of the board; repeated
leftmost moves bring every map to a nondecreasing (upper echelon) map, and
the maps sharing a representative form one class.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from . import _backend

DEFAULT_MAX_N = 8


class EnumerationLimitError(ValueError):
    """Requested expansion depth exceeds the enumeration cap."""

    def __init__(self, n: int, cap: int):
        super().__init__(f"n={n} exceeds enumeration cap {cap} ({math.factorial(n)} maps)")
        self.n = n
        self.cap = cap


class RejectedMoveError(ValueError):
    """An acceptable move was requested where ``mu(j+1) < mu(j)`` fails."""

    def __init__(self, j: int, mu_j: int | None, mu_j1: int | None, reason: str = ""):
        msg = f"move at column {j} rejected: mu({j})={mu_j}, mu({j + 1})={mu_j1}"
        if reason:
            msg += f" ({reason})"
        super().__init__(msg)
        self.j = j
        self.mu_j = mu_j
        self.mu_j1 = mu_j1


@dataclass(frozen=True)
class CollisionMap:
    """Map ``mu: {2..n+1} -> {1..n}`` with ``mu(2) = 1`` and ``mu(j) < j``.

    ``values[c - 2]`` holds ``mu(c)``.
    """

    values: tuple[int, ...]

    def __post_init__(self):
        vals = tuple(int(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if not vals:
            raise ValueError("collision map needs n >= 1")
        if vals[0] != 1:
            raise ValueError(f"mu(2) must be 1, got {vals[0]}")
        for c, v in enumerate(vals, start=2):
            if not 1 <= v < c:
                raise ValueError(f"mu({c})={v} violates 1 <= mu(j) < j")

    @property
    def n(self) -> int:
        return len(self.values)

    def __call__(self, column: int) -> int:
        if not 2 <= column <= self.n + 1:
            raise IndexError(f"column {column} outside 2..{self.n + 1}")
        return self.values[column - 2]

    def to_json(self) -> dict:
        return {"n": self.n, "mu": list(self.values)}

    @classmethod
    def from_json(cls, data: dict) -> "CollisionMap":
        cmap = cls(tuple(data["mu"]))
        if "n" in data and data["n"] != cmap.n:
            raise ValueError(f"n={data['n']} does not match len(mu)={cmap.n}")
        return cmap


@dataclass(frozen=True)
class TimePermutation:
    """Bijection ``sigma`` of ``{2, ..., n+1}`` in one-line notation.

    ``images[i]`` is ``sigma(i + 2)``.
    """

    images: tuple[int, ...]

    def __post_init__(self):
        imgs = tuple(int(v) for v in self.images)
        object.__setattr__(self, "images", imgs)
        n = len(imgs)
        if sorted(imgs) != list(range(2, n + 2)):
            raise ValueError(f"{imgs} is not a permutation of 2..{n + 1}")

    @classmethod
    def identity(cls, n: int) -> "TimePermutation":
        return cls(tuple(range(2, n + 2)))

    @classmethod
    def from_inverse(cls, inverse_images: Sequence[int]) -> "TimePermutation":
        n = len(inverse_images)
        images = [0] * n
        for i, v in enumerate(inverse_images):
            images[v - 2] = i + 2
        return cls(tuple(images))

    @property
    def n(self) -> int:
        return len(self.images)

    def __call__(self, i: int) -> int:
        return self.images[i - 2]

    def inverse(self) -> "TimePermutation":
        return TimePermutation.from_inverse(self.images)

    def header(self) -> tuple[int, ...]:
        """Time indices shown above columns 2..n+1: ``sigma^{-1}(2), ...``."""
        return self.inverse().images

    def is_identity(self) -> bool:
        return self.images == tuple(range(2, self.n + 2))

    def to_json(self) -> list[int]:
        return list(self.images)


@dataclass(frozen=True)
class BoardState:
    map: CollisionMap
    perm: TimePermutation

    def __post_init__(self):
        if self.map.n != self.perm.n:
            raise ValueError(f"map has n={self.map.n} but permutation has n={self.perm.n}")

    @property
    def n(self) -> int:
        return self.map.n

    @classmethod
    def initial(cls, cmap: CollisionMap) -> "BoardState":
        return cls(cmap, TimePermutation.identity(cmap.n))

    def highlighted(self) -> frozenset[tuple[int, int]]:
        """Highlighted board entries ``(row, column)``."""
        return frozenset((v, c) for c, v in enumerate(self.map.values, start=2))

    def render(self) -> str:
        """Text rendering of the board with its time header."""
        n = self.n
        header = "  ".join(f"t{h:<5d}" for h in self.perm.header())
        lines = [" " + header]
        marks = self.highlighted()
        for row in range(1, n + 1):
            cells = []
            for col in range(2, n + 2):
                if row >= col:
                    cells.append("0".ljust(6))
                else:
                    name = f"B{row},{col}"
                    cells.append((f"[{name}]" if (row, col) in marks else f" {name} ").ljust(6))
            lines.append(" ".join(cells))
        return "\n".join(lines)

    def to_json(self) -> dict:
        return {"mu": list(self.map.values), "sigma": self.perm.to_json()}


@dataclass(frozen=True)
class Reduction:
    representative: CollisionMap
    perm: TimePermutation
    moves: tuple[int, ...]


@dataclass
class EchelonClass:
    representative: CollisionMap
    members: list[BoardState] = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.representative.n

    def perms(self) -> list[TimePermutation]:
        return [m.perm for m in self.members]

    def to_json(self) -> dict:
        return {
            "representative": list(self.representative.values),
            "members": [m.to_json() for m in self.members],
        }


@dataclass(frozen=True)
class SimplexDomain:
    """Union of ordered simplices ``t1 >= t_sigma(2) >= ... >= t_sigma(n+1) >= 0``."""

    t1: float
    perms: tuple[TimePermutation, ...]

    @property
    def n(self) -> int:
        return self.perms[0].n

    @property
    def measure(self) -> float:
        return len(self.perms) * self.t1**self.n / math.factorial(self.n)

    def contains(self, times) -> "list[bool]":
        """Membership of points ``(t_2, ..., t_{n+1})``; boundaries count as inside."""
        import numpy as np

        pts = np.atleast_2d(np.asarray(times, dtype=float))
        inside = np.zeros(len(pts), dtype=bool)
        for perm in self.perms:
            cols = [c - 2 for c in perm.images]
            chain = np.column_stack([np.full(len(pts), self.t1), pts[:, cols], np.zeros(len(pts))])
            inside |= np.all(np.diff(chain, axis=1) <= 0, axis=1)
        return inside


def _check_cap(n: int, cap: int) -> None:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if n > cap:
        raise EnumerationLimitError(n, cap)


def iter_maps(n: int) -> Iterator[CollisionMap]:
    ranges = [range(1, c) for c in range(3, n + 2)]
    for tail in itertools.product(*ranges):
        yield CollisionMap((1,) + tail)


def enumerate_maps(n: int, cap: int = DEFAULT_MAX_N) -> list[CollisionMap]:
    """All collision maps of depth ``n`` in lexicographic order (``n!`` of them)."""
    _check_cap(n, cap)
    return list(iter_maps(n))


def _swap(v: int, j: int) -> int:
    if v == j:
        return j + 1
    if v == j + 1:
        return j
    return v


def is_admissible(cmap: CollisionMap, j: int) -> bool:
    return 2 <= j <= cmap.n and cmap(j + 1) < cmap(j)


def acceptable_move(state: BoardState, j: int) -> BoardState:
    """Exchange columns (and rows) ``j`` and ``j+1``.

    ``mu' = (j j+1) o mu o (j j+1)`` and ``sigma'^{-1} = sigma^{-1} o (j j+1)``.
    """
    n = state.n
    if not 2 <= j <= n:
        raise RejectedMoveError(j, None, None, f"column must lie in 2..{n}")
    mu = state.map
    if not mu(j + 1) < mu(j):
        raise RejectedMoveError(j, mu(j), mu(j + 1))
    new_values = tuple(_swap(mu(_swap(c, j)), j) for c in range(2, n + 2))
    header = list(state.perm.header())
    header[j - 2], header[j - 1] = header[j - 1], header[j - 2]
    return BoardState(CollisionMap(new_values), TimePermutation.from_inverse(header))


def is_upper_echelon(cmap: CollisionMap) -> bool:
    """Nondecreasing test; equivalent to the row/column definition."""
    v = cmap.values
    return all(a <= b for a, b in zip(v, v[1:]))


def is_upper_echelon_by_rows(cmap: CollisionMap) -> bool:
    """Literal board test: an entry in a higher row lies left of every entry in a lower row."""
    marks = [(v, c) for c, v in enumerate(cmap.values, start=2)]
    return all(c1 < c2 for r1, c1 in marks for r2, c2 in marks if r1 < r2)


def reduce_to_echelon(cmap: CollisionMap) -> Reduction:
    """Apply the leftmost admissible move until the map is nondecreasing."""
    state = BoardState.initial(cmap)
    moves = []
    while True:
        v = state.map.values
        j = next((c for c in range(2, state.n + 1) if v[c - 1] < v[c - 2]), None)
        if j is None:
            return Reduction(state.map, state.perm, tuple(moves))
        state = acceptable_move(state, j)
        moves.append(j)


def replay(cmap: CollisionMap, moves: Iterable[int]) -> BoardState:
    state = BoardState.initial(cmap)
    for j in moves:
        state = acceptable_move(state, j)
    return state


def reduce_all(maps: Sequence[CollisionMap]) -> list[tuple[CollisionMap, TimePermutation]]:
    """Batch reduction through the kernel backend (moves are not recorded)."""
    import numpy as np

    if not maps:
        return []
    arr = np.array([m.values for m in maps], dtype=np.int64)
    reps, headers = _backend.kernels.reduce_maps(arr)
    return [
        (CollisionMap(tuple(r)), TimePermutation.from_inverse(tuple(h)))
        for r, h in zip(reps.tolist(), headers.tolist())
    ]


def partition_classes(n: int, cap: int = DEFAULT_MAX_N) -> list[EchelonClass]:
    """Group all maps by their deterministic echelon representative.

    Classes are ordered by representative, members by their original map.
    """
    maps = enumerate_maps(n, cap)
    classes: dict[tuple[int, ...], EchelonClass] = {}
    for cmap, (rep, perm) in zip(maps, reduce_all(maps)):
        cls = classes.setdefault(rep.values, EchelonClass(rep))
        cls.members.append(BoardState(cmap, perm))
    return [classes[k] for k in sorted(classes)]


def count_echelon(n: int) -> int:
    """Number of nondecreasing collision maps of depth ``n``.

    Dynamic programming over the last value, valid for any ``n``.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    ways = {1: 1}  # last value -> count, after column 2
    for c in range(3, n + 2):
        nxt: dict[int, int] = {}
        acc = 0
        for v in range(1, c):
            acc += ways.get(v, 0)
            nxt[v] = acc
        ways = nxt
    return sum(ways.values())


def partition_count(n: int) -> int:
    """``P_n = 1 + P_1 + ... + P_{n-1}`` with ``P_1 = 1``."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    p = [0, 1]
    for k in range(2, n + 1):
        p.append(1 + sum(p[1:k]))
    return p[n]


def build_domain(cls: EchelonClass, t1: float) -> SimplexDomain:
    if not cls.members:
        raise ValueError("empty class")
    if t1 < 0:
        raise ValueError(f"t1 must be >= 0, got {t1}")
    return SimplexDomain(float(t1), tuple(cls.perms()))


def count_table(n_max: int) -> list[dict]:
    rows = []
    for n in range(1, n_max + 1):
        rows.append(
            {
                "n": n,
                "n_factorial": math.factorial(n),
                "echelon_count": count_echelon(n),
                "four_pow_n": 4**n,
                "partition_count": partition_count(n),
            }
        )
    return rows
