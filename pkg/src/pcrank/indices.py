"""Inconsistency and incompleteness indices of a comparison matrix.

All incompleteness indices depend only on which comparisons are missing,
never on the judgment values.  They are 0 for a complete matrix and grow
as comparisons disappear, more steeply when the gaps pile up on a few
alternatives.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .core import PCMatrix, degrees, laplacian, missing_count
from .errors import IncompleteMatrixError, UndefinedForOrderTwoError
from .priority import EigenResult, evm

DEFAULT_ALPHA = 1.5
DEFAULT_BETA = 1.0


def _missing_per_row(C: PCMatrix) -> np.ndarray:
    return (C.n - 1) - degrees(C)


def consistency_index(C: PCMatrix, eig: EigenResult | None = None) -> float:
    """Saaty's CI, ``(lambda_max - n) / (n - 1)``, for a complete matrix."""
    if not C.is_complete():
        raise IncompleteMatrixError("CI is only defined for complete matrices")
    if eig is None:
        eig = evm(C)
    n = C.n
    return (eig.lambda_max - n) / (n - 1)


def alpha_index(C: PCMatrix, alpha: float = DEFAULT_ALPHA) -> float:
    """Mean of per-alternative missing counts raised to ``alpha``, scaled to [0, 1].

    ``alpha = 1`` is accepted; the index then reduces to the missing fraction.
    """
    if alpha < 1:
        raise ValueError(f"alpha must be >= 1, got {alpha}")
    n = C.n
    # Normalizing before the power keeps the boundaries 0 and 1 exact.
    rel = _missing_per_row(C) / (n - 1)
    return float(np.mean(rel ** alpha))


def alpha_rankability_bound(n: int, alpha: float = DEFAULT_ALPHA) -> float:
    """Largest alpha index a connected comparison graph can have.

    Attained by a star (one alternative compared with every other one).
    Staying below it is necessary, not sufficient, for a ranking to exist.
    """
    if n < 3:
        raise ValueError(f"bound needs n >= 3, got {n}")
    return (n - 1) / n * ((n - 2) / (n - 1)) ** alpha


def beta_index(C: PCMatrix, beta: float = DEFAULT_BETA) -> float:
    """Worst-row missing count to the power ``beta`` times the total missing count, scaled."""
    if beta < 1:
        raise ValueError(f"beta must be >= 1, got {beta}")
    n = C.n
    miss = _missing_per_row(C)
    return float((miss.max() / (n - 1)) ** beta * miss.sum() / (n * (n - 1)))


def bareiss_det(M) -> int:
    """Exact determinant of an integer matrix by fraction-free elimination."""
    a = [[int(x) for x in row] for row in M]
    n = len(a)
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            pivot = next((r for r in range(k + 1, n) if a[r][k] != 0), None)
            if pivot is None:
                return 0
            a[k], a[pivot] = a[pivot], a[k]
            sign = -sign
        akk = a[k][k]
        for i in range(k + 1, n):
            aik = a[i][k]
            row_i, row_k = a[i], a[k]
            for j in range(k + 1, n):
                # Exact by Sylvester's identity.
                row_i[j] = (row_i[j] * akk - aik * row_k[j]) // prev
            row_i[k] = 0
        prev = akk
    return sign * a[n - 1][n - 1]


def spanning_tree_count(C: PCMatrix) -> int:
    """Number of spanning trees of the comparison graph (matrix-tree theorem).

    Determinant of the Laplacian with the first row and column deleted.
    """
    return bareiss_det(laplacian(C)[1:, 1:])


def tree_index(C: PCMatrix) -> float:
    """``1 - NT^(1/(n-2)) / n`` with NT the spanning-tree count."""
    n = C.n
    if n == 2:
        raise UndefinedForOrderTwoError("tree index is undefined for n = 2")
    nt = spanning_tree_count(C)
    if nt == 0:
        return 1.0
    if nt == n ** (n - 2):
        return 0.0
    return 1.0 - nt ** (1.0 / (n - 2)) / n


def compound_index(C: PCMatrix, alpha: float = DEFAULT_ALPHA, beta: float = DEFAULT_BETA) -> float:
    return alpha_index(C, alpha) * beta_index(C, beta)


@dataclass(frozen=True)
class IndexReport:
    n: int
    missing: int
    alpha: float
    beta: float
    ci: float | None  # None when the matrix is incomplete
    iid_alpha: float
    ii_beta: float
    spanning_trees: int
    tree_index: float | None  # None for n = 2
    compound: float

    def as_dict(self) -> dict:
        return asdict(self)


def report(C: PCMatrix, alpha: float = DEFAULT_ALPHA, beta: float = DEFAULT_BETA) -> IndexReport:
    ci = consistency_index(C) if C.is_complete() else None
    try:
        ti = tree_index(C)
    except UndefinedForOrderTwoError:
        ti = None
    a = alpha_index(C, alpha)
    b = beta_index(C, beta)
    return IndexReport(
        n=C.n,
        missing=missing_count(C),
        alpha=alpha,
        beta=beta,
        ci=ci,
        iid_alpha=a,
        ii_beta=b,
        spanning_trees=spanning_tree_count(C),
        tree_index=ti,
        compound=a * b,
    )
