"""Priority vectors: eigenvalue method, geometric mean method, Harker's method."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import PCMatrix, components, is_irreducible
from .errors import IncompleteMatrixError, NoConvergenceError, NotIrreducibleError

DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 100_000


@dataclass(frozen=True)
class EigenResult:
    lambda_max: float
    vector: np.ndarray  # L1-normalized, strictly positive
    iterations: int
    residual: float


def _graph_connected(A: np.ndarray) -> bool:
    adj = (A > 0) | (A.T > 0)
    n = A.shape[0]
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    frontier = seen.copy()
    while frontier.any():
        frontier = adj[frontier].any(axis=0) & ~seen
        seen |= frontier
    return bool(seen.all())


def power_iteration(
    A: np.ndarray, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Shifted power iteration on a stack of nonnegative matrices.

    ``A`` has shape ``(m, n, n)``.  Each matrix is iterated on ``A + n*I``
    from the uniform start vector until the residual
    ``max|A v - lam v| <= tol * max|v|`` holds, where ``lam`` is the Rayleigh
    quotient.  Converged members are frozen while the rest continue, so a
    matrix gets the same answer whatever it is stacked with.

    Returns ``(lambdas, vectors, iterations, residuals)``; vectors are
    L1-normalized.  Members that hit ``max_iter`` have iterations equal to
    ``max_iter`` and a residual above ``tol``.
    """
    A = np.asarray(A, dtype=float)
    m, n, _ = A.shape
    v = np.full((m, n), 1.0 / n)
    lam = np.zeros(m)
    res = np.full(m, np.inf)
    its = np.full(m, max_iter, dtype=np.int64)
    # Working copies of the unconverged members; re-sliced only when some converge.
    active = np.arange(m)
    A_act, va = A, v.copy()
    for it in range(1, max_iter + 1):
        Av = np.matmul(A_act, va[:, :, None])[:, :, 0]
        lam_a = (va * Av).sum(axis=1) / (va * va).sum(axis=1)
        res_a = np.abs(Av - lam_a[:, None] * va).max(axis=1)
        done = res_a <= tol * np.abs(va).max(axis=1)
        if done.any() or it == max_iter:
            lam[active] = lam_a
            res[active] = res_a
            v[active] = va
            its[active[done]] = it - 1
            keep = ~done
            active, A_act, va = active[keep], A_act[keep], va[keep]
            Av = Av[keep]
            if active.size == 0:
                break
        # (A + nI) v without forming the shifted matrix.
        w = Av + n * va
        va = w / w.sum(axis=1, keepdims=True)
    v = v / v.sum(axis=1, keepdims=True)
    return lam, v, its, res


def evm(A: np.ndarray | PCMatrix, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> EigenResult:
    """Perron eigenpair of a nonnegative irreducible matrix.

    The eigenvector is rescaled to sum to 1.
    """
    if isinstance(A, PCMatrix):
        A = A.to_array()
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if (A < 0).any() or not np.isfinite(A).all():
        raise ValueError("matrix must be finite and nonnegative")
    if not _graph_connected(A):
        raise NotIrreducibleError("matrix is reducible: its graph is not connected")
    lam, v, its, res = power_iteration(A[None], tol, max_iter)
    if its[0] >= max_iter and res[0] > tol * v[0].max():
        raise NoConvergenceError(
            f"power iteration did not converge in {max_iter} iterations (residual {res[0]:.3e})",
            residual=float(res[0]),
        )
    return EigenResult(float(lam[0]), v[0], int(its[0]), float(res[0]))


def gmm(C: PCMatrix) -> np.ndarray:
    """Normalized row geometric means of a complete matrix."""
    if not C.is_complete():
        raise IncompleteMatrixError("the geometric mean method needs a complete matrix")
    g = np.exp(np.log(C.to_array()).mean(axis=1))
    return g / g.sum()


def harker_matrix(C: PCMatrix) -> np.ndarray:
    """Auxiliary matrix ``B + I``: missing entries zeroed, diagonal 1 + missing-in-row."""
    known = C.known
    H = np.where(known, C.values, 0.0)
    np.fill_diagonal(H, 1.0 + (~known).sum(axis=1))
    return H


def harker_rank(C: PCMatrix, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> EigenResult:
    """Eigenvalue method applied to Harker's auxiliary matrix."""
    if not is_irreducible(C):
        comps = components(C)
        lone = next(c for c in comps if 0 not in c)
        names = ", ".join(f"a{i + 1}" for i in lone)
        raise NotIrreducibleError(
            f"comparison graph is disconnected; component {{{names}}} is not linked to a1",
            component=lone,
        )
    return evm(harker_matrix(C), tol, max_iter)
