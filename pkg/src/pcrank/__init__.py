"""Rankings, incompleteness indices and sensitivity studies for pairwise comparisons."""

__version__ = "0.1.0"

from .core import PCMatrix, is_irreducible, laplacian, missing_count, outdeg, validate
from .indices import (
    IndexReport,
    alpha_index,
    alpha_rankability_bound,
    beta_index,
    compound_index,
    consistency_index,
    report,
    spanning_tree_count,
    tree_index,
)
from .metrics import kendall, kendall_rescaled, manhattan, ordinal, ranking_distance
from .priority import EigenResult, evm, gmm, harker_matrix, harker_rank

__all__ = [
    "EigenResult",
    "IndexReport",
    "PCMatrix",
    "alpha_index",
    "alpha_rankability_bound",
    "beta_index",
    "compound_index",
    "consistency_index",
    "evm",
    "gmm",
    "harker_matrix",
    "harker_rank",
    "is_irreducible",
    "kendall",
    "kendall_rescaled",
    "laplacian",
    "manhattan",
    "missing_count",
    "ordinal",
    "outdeg",
    "ranking_distance",
    "report",
    "spanning_tree_count",
    "tree_index",
    "validate",
]
