"""Greedy solvers.

:func:`marginal_greedy_solve` repeatedly estimates the marginals of the
uniform feasible measure on the current residual problem, adds one unit
of the item most likely to be non-zero, shrinks that item's cap and all
capacities, and repeats until nothing more fits.  A hard feasibility
guard pre-checks every candidate, so the committed selection can never
violate a constraint regardless of marginal quality.

:func:`density_greedy_solve` is the cheap baseline: it ranks items by
profit per unit of relative capacity consumption.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cavity import BPState, GAMPState, IterOpts, bp_run, gamp_run
from .errors import NumericsError
from .instance import EnsembleParams, Evaluation, Instance, Selection, evaluate

__all__ = ["GreedyTrace", "marginal_greedy_solve", "density_greedy_solve"]


@dataclass(frozen=True)
class GreedyTrace:
    """Pick-by-pick record of one greedy run."""

    picks: list[int]
    sweeps_per_pick: list[int]
    converged_per_pick: list[bool]
    final_selection: Selection
    final_evaluation: Evaluation
    final_residual: float = 0.0   # last engine residual (0 for density greedy)
    clamp_count: int = 0          # variance-floor hits (gamp engine only)


def _feasible_to_add(slacks: np.ndarray, w_col: np.ndarray) -> bool:
    return bool((slacks >= w_col).all())


def marginal_greedy_solve(
    instance: Instance,
    engine: str = "bp",
    opts: IterOpts = IterOpts(),
    warm_start: bool = True,
    params: EnsembleParams | None = None,
) -> GreedyTrace:
    """Greedy driven by estimated marginals ('bp' or 'gamp' engine).

    Each round ranks items by P(x_i != 0) on the residual problem
    (ties to the smallest index), demotes candidates that would break a
    constraint, and commits one unit of the first fitting candidate.
    With ``warm_start`` the next round's estimation starts from the
    previous converged state.
    """
    if engine not in ("bp", "gamp"):
        raise ValueError(f"engine must be 'bp' or 'gamp', got {engine!r}")
    caps = instance.capacities.copy()
    max_counts = instance.max_counts.copy()
    counts = np.zeros(instance.n_items, dtype=np.int64)
    picks: list[int] = []
    sweeps_per_pick: list[int] = []
    converged_per_pick: list[bool] = []
    state: BPState | GAMPState | None = None
    while (max_counts > 0).any():
        residual = instance.with_residual(caps, max_counts)
        try:
            if engine == "bp":
                marg, state, converged, sweeps = bp_run(residual, opts, init=state if warm_start else None)
            else:
                marg, state, converged, sweeps = gamp_run(residual, opts, init=state if warm_start else None)
        except NumericsError as err:
            err.pick = len(picks)
            raise
        score = marg.nonzero_probability()
        score[max_counts == 0] = -np.inf
        slacks = caps  # loads of committed picks are already subtracted
        placed = -1
        for i in np.argsort(-score, kind="stable"):
            if score[i] == -np.inf:
                break
            if _feasible_to_add(slacks, instance.weights[:, i]):
                placed = int(i)
                break
        if placed < 0:
            break
        counts[placed] += 1
        caps = caps - instance.weights[:, placed]
        max_counts = max_counts.copy()
        max_counts[placed] -= 1
        picks.append(placed)
        sweeps_per_pick.append(sweeps)
        converged_per_pick.append(converged)
        if warm_start and engine == "bp":
            state.shrink_item(placed, int(max_counts[placed]) + 1)
    selection = Selection(counts)
    return GreedyTrace(
        picks=picks,
        sweeps_per_pick=sweeps_per_pick,
        converged_per_pick=converged_per_pick,
        final_selection=selection,
        final_evaluation=evaluate(instance, selection, params),
        final_residual=float(state.residual) if state is not None else 0.0,
        clamp_count=int(getattr(state, "clamp_count", 0)) if state is not None else 0,
    )


def density_greedy_solve(
    instance: Instance,
    params: EnsembleParams | None = None,
) -> GreedyTrace:
    """Profit-density greedy baseline.

    Desirability of item i is v_i / sum_mu(w_mu_i / remaining C_mu),
    summed over constraints with positive remaining capacity; a
    non-positive denominator counts as infinitely desirable.  Same
    feasibility guard and termination as the marginal greedy.
    """
    caps = instance.capacities.copy()
    max_counts = instance.max_counts.copy()
    counts = np.zeros(instance.n_items, dtype=np.int64)
    picks: list[int] = []
    while (max_counts > 0).any():
        active = caps > 0
        if active.any():
            denom = (instance.weights[active, :] / caps[active, None]).sum(axis=0)
        else:
            denom = np.zeros(instance.n_items)
        with np.errstate(divide="ignore"):
            score = np.where(denom > 0, instance.profits / np.where(denom > 0, denom, 1.0), np.inf)
        score = np.where(max_counts > 0, score, -np.inf)
        placed = -1
        for i in np.argsort(-score, kind="stable"):
            if score[i] == -np.inf:
                break
            if _feasible_to_add(caps, instance.weights[:, i]):
                placed = int(i)
                break
        if placed < 0:
            break
        counts[placed] += 1
        caps = caps - instance.weights[:, placed]
        max_counts = max_counts.copy()
        max_counts[placed] -= 1
        picks.append(placed)
    selection = Selection(counts)
    return GreedyTrace(
        picks=picks,
        sweeps_per_pick=[0] * len(picks),
        converged_per_pick=[True] * len(picks),
        final_selection=selection,
        final_evaluation=evaluate(instance, selection, params),
    )
