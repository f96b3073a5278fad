"""Exact reference computations on small instances.

Both operations enumerate the full assignment lattice (depth-first with
load-based pruning on the numba backend, blockwise vectorized on the
numpy backend) and are gated by a node budget: the product of
(max_count + 1) over items must not exceed ``node_budget``.  They are
the ground truth the approximate engines are tested against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .cavity import Marginals
from .errors import BudgetExceededError, InfeasibleInstanceError
from .instance import Instance, Selection

DEFAULT_NODE_BUDGET = 10**8


@dataclass(frozen=True)
class ExactResult:
    """Globally optimal selection, its profit, and the feasible-set size."""

    best_selection: Selection
    best_profit: float
    n_feasible: int


def _check_budget(instance: Instance, node_budget: int) -> None:
    log_nodes = float(np.log(instance.max_counts + 1.0).sum())
    if log_nodes > math.log(node_budget):
        raise BudgetExceededError(
            f"assignment lattice has exp({log_nodes:.1f}) nodes, over the budget of {node_budget:g}"
        )


def _scan(instance: Instance, node_budget: int):
    _check_budget(instance, node_budget)
    return kernels.exhaustive_scan(
        instance.weights, instance.capacities, instance.max_counts, instance.profits
    )


def exact_optimum(instance: Instance, node_budget: int = DEFAULT_NODE_BUDGET) -> ExactResult:
    """Globally optimal profit by exhaustive search.

    Ties are broken toward the lexicographically smallest counts vector.
    Raises :class:`BudgetExceededError` when the lattice is too large and
    :class:`InfeasibleInstanceError` when no assignment is feasible.
    """
    n_feasible, best_profit, best_counts, _ = _scan(instance, node_budget)
    if n_feasible == 0:
        raise InfeasibleInstanceError("no feasible assignment exists")
    return ExactResult(
        best_selection=Selection(best_counts),
        best_profit=float(best_profit),
        n_feasible=int(n_feasible),
    )


def exact_marginals(instance: Instance, node_budget: int = DEFAULT_NODE_BUDGET) -> Marginals:
    """Exact marginals of the uniform distribution over feasible assignments.

    p_i(x) = (# feasible assignments with item i at level x) / (# feasible).
    """
    n_feasible, _, _, tallies = _scan(instance, node_budget)
    if n_feasible == 0:
        raise InfeasibleInstanceError("no feasible assignment exists")
    tables = [
        tallies[i, : instance.max_counts[i] + 1].astype(float) / n_feasible
        for i in range(instance.n_items)
    ]
    return Marginals(tables)
