"""Pairwise comparison matrices with explicitly missing judgments.

Alternatives are indexed from 0 throughout the Python API.  A matrix keeps
its known values and a boolean ``known`` mask side by side; the mask is the
single source of truth for which comparisons exist.
"""

from __future__ import annotations

from collections import deque
from collections.abc import Iterable, Sequence

import numpy as np

from .errors import (
    DiagonalNotOneError,
    IncompleteMatrixError,
    IndexOutOfRangeError,
    NonPositiveEntryError,
    NonSquareError,
    ReciprocityViolationError,
    TooSmallError,
)

RECIPROCITY_RTOL = 1e-9

Cell = float | None


class PCMatrix:
    """Immutable reciprocal pairwise comparison matrix.

    Use :func:`validate` (or :meth:`from_grid`) to build one from user data.
    """

    __slots__ = ("_values", "_known")

    def __init__(self, values: np.ndarray, known: np.ndarray):
        # Trusted constructor: callers guarantee the invariants.
        values = np.array(values, dtype=float)
        known = np.array(known, dtype=bool)
        values[~known] = np.nan
        values.setflags(write=False)
        known.setflags(write=False)
        self._values = values
        self._known = known

    @classmethod
    def from_grid(cls, grid: Sequence[Sequence[Cell]]) -> PCMatrix:
        return validate(grid)

    @classmethod
    def complete(cls, values: np.ndarray) -> PCMatrix:
        """Validate a dense array with every comparison present."""
        return validate(np.asarray(values, dtype=float).tolist())

    @property
    def n(self) -> int:
        return self._known.shape[0]

    @property
    def known(self) -> np.ndarray:
        """Read-only boolean mask; ``known[i, j]`` iff the comparison exists."""
        return self._known

    @property
    def values(self) -> np.ndarray:
        """Read-only float array; missing cells hold NaN."""
        return self._values

    def value(self, i: int, j: int) -> float | None:
        _check_index(self.n, i)
        _check_index(self.n, j)
        return float(self._values[i, j]) if self._known[i, j] else None

    def is_complete(self) -> bool:
        return bool(self._known.all())

    def to_array(self) -> np.ndarray:
        """Dense copy of a complete matrix."""
        if not self.is_complete():
            raise IncompleteMatrixError("matrix has missing comparisons")
        return self._values.copy()

    def to_grid(self) -> list[list[Cell]]:
        n = self.n
        return [
            [float(self._values[i, j]) if self._known[i, j] else None for j in range(n)]
            for i in range(n)
        ]

    def without(self, pairs: Iterable[tuple[int, int]]) -> PCMatrix:
        """Copy with the given comparisons (and their reciprocals) removed."""
        known = self._known.copy()
        for i, j in pairs:
            _check_index(self.n, i)
            _check_index(self.n, j)
            if i == j:
                raise ValueError("cannot remove a diagonal entry")
            known[i, j] = known[j, i] = False
        return PCMatrix(self._values, known)

    def permuted(self, perm: Sequence[int]) -> PCMatrix:
        """Relabel alternatives: new alternative ``k`` is old ``perm[k]``."""
        p = np.asarray(perm)
        return PCMatrix(self._values[np.ix_(p, p)], self._known[np.ix_(p, p)])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PCMatrix):
            return NotImplemented
        return bool(
            np.array_equal(self._known, other._known)
            and np.array_equal(self._values[self._known], other._values[other._known])
        )

    def __hash__(self) -> int:
        return hash((self._known.tobytes(), np.nan_to_num(self._values).tobytes()))

    def __repr__(self) -> str:
        return f"PCMatrix(n={self.n}, missing={missing_count(self)})"


def _check_index(n: int, i: int) -> None:
    if not 0 <= i < n:
        raise IndexOutOfRangeError(f"alternative index {i} outside 0..{n - 1}")


def validate(grid: Sequence[Sequence[Cell]]) -> PCMatrix:
    """Check a raw grid of optional positive reals and build a PCMatrix.

    A pair given on one side only is completed with the reciprocal.  When
    both sides are present they must multiply to 1 within a relative
    tolerance of 1e-9, and the upper-triangle value is kept.
    """
    rows = [list(r) for r in grid]
    n = len(rows)
    for r, row in enumerate(rows):
        if len(row) != n:
            raise NonSquareError(f"row {r} has {len(row)} entries, expected {n}", cell=(r, len(row) - 1))
    if n < 2:
        raise TooSmallError(f"need at least 2 alternatives, got {n}")

    values = np.ones((n, n))
    known = np.eye(n, dtype=bool)
    for i in range(n):
        d = rows[i][i]
        if d is None or float(d) != 1.0:
            raise DiagonalNotOneError(f"diagonal entry ({i}, {i}) is {d!r}, expected 1", cell=(i, i))
    for i in range(n):
        for j in range(i + 1, n):
            a, b = rows[i][j], rows[j][i]
            for (r, c), v in (((i, j), a), ((j, i), b)):
                if v is not None and not (np.isfinite(float(v)) and float(v) > 0):
                    raise NonPositiveEntryError(
                        f"entry ({r}, {c}) = {v!r} is not a positive finite number", cell=(r, c)
                    )
            if a is None and b is None:
                continue
            if a is not None and b is not None:
                if abs(float(a) * float(b) - 1.0) > RECIPROCITY_RTOL:
                    raise ReciprocityViolationError(
                        f"entries ({i}, {j}) = {a} and ({j}, {i}) = {b} are not reciprocal",
                        cell=(j, i),
                    )
            v = float(a) if a is not None else 1.0 / float(b)
            values[i, j], values[j, i] = v, 1.0 / v
            known[i, j] = known[j, i] = True
    return PCMatrix(values, known)


def adjacency(C: PCMatrix) -> np.ndarray:
    """Undirected adjacency of the comparison graph (no self-loops)."""
    adj = C.known.copy()
    np.fill_diagonal(adj, False)
    return adj


def degrees(C: PCMatrix) -> np.ndarray:
    return adjacency(C).sum(axis=1)


def outdeg(C: PCMatrix, i: int) -> int:
    """Number of alternatives directly compared with alternative ``i``."""
    _check_index(C.n, i)
    return int(degrees(C)[i])


def missing_count(C: PCMatrix) -> int:
    """Number of unordered pairs ``i < j`` without a comparison."""
    return int(np.count_nonzero(~C.known[np.triu_indices(C.n, 1)]))


def missing_pairs(C: PCMatrix) -> list[tuple[int, int]]:
    iu, ju = np.triu_indices(C.n, 1)
    return [(int(i), int(j)) for i, j in zip(iu, ju) if not C.known[i, j]]


def reachable(C: PCMatrix, start: int = 0) -> set[int]:
    adj = adjacency(C)
    seen = {start}
    queue = deque([start])
    while queue:
        v = queue.popleft()
        for u in np.flatnonzero(adj[v]):
            u = int(u)
            if u not in seen:
                seen.add(u)
                queue.append(u)
    return seen


def components(C: PCMatrix) -> list[tuple[int, ...]]:
    """Connected components of the comparison graph, ordered by smallest member."""
    left = set(range(C.n))
    out = []
    while left:
        comp = reachable(C, min(left))
        out.append(tuple(sorted(comp)))
        left -= comp
    return out


def is_irreducible(C: PCMatrix) -> bool:
    """True iff every pair of alternatives is comparable at least indirectly."""
    return len(reachable(C, 0)) == C.n


def laplacian(C: PCMatrix) -> np.ndarray:
    """Integer Laplacian of the comparison graph: degrees minus adjacency."""
    adj = adjacency(C).astype(np.int64)
    lap = -adj
    lap[np.diag_indices(C.n)] = adj.sum(axis=1)
    return lap
