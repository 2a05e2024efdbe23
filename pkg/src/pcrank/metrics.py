"""Distances between rankings."""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from .errors import LengthMismatchError


def _same_length(a, b) -> None:
    if len(a) != len(b):
        raise LengthMismatchError(f"vectors have lengths {len(a)} and {len(b)}")


def manhattan(w: Sequence[float], u: Sequence[float]) -> float:
    """Sum of absolute weight differences; at most 2 for normalized vectors."""
    _same_length(w, u)
    return float(np.abs(np.asarray(w, dtype=float) - np.asarray(u, dtype=float)).sum())


def ordinal(w: Sequence[float]) -> np.ndarray:
    """Position of each alternative when sorted by descending weight.

    Ties share the best position they cover (competition ranking, "1, 1, 3").
    Only exactly equal weights tie.
    """
    w = np.asarray(w, dtype=float)
    # Number of strictly larger weights, plus one.
    return (w[None, :] > w[:, None]).sum(axis=1) + 1


def kendall(p: Sequence[int], q: Sequence[int]) -> int:
    """Number of pairs ``i < j`` ordered differently by ``p`` and ``q``.

    A pair tied in one vector but not the other counts as a disagreement.
    """
    _same_length(p, q)
    p = np.asarray(p)
    q = np.asarray(q)
    sp = np.sign(p[:, None] - p[None, :])
    sq = np.sign(q[:, None] - q[None, :])
    return int(np.count_nonzero(np.triu(sp != sq, 1)))


def kendall_rescaled(p: Sequence[int], q: Sequence[int]) -> float:
    """Kendall distance divided by its maximum ``n(n-1)/2``."""
    _same_length(p, q)
    n = len(p)
    if n < 2:
        raise ValueError("need at least 2 alternatives")
    return 2 * kendall(p, q) / (n * (n - 1))


def ranking_distance(w: Sequence[float], u: Sequence[float]) -> tuple[float, float]:
    """Manhattan distance of the weights and rescaled Kendall distance of their orders."""
    _same_length(w, u)
    return manhattan(w, u), kendall_rescaled(ordinal(w), ordinal(u))
