"""Marginal estimation engines over the uniform feasible measure.

Two engines approximate the per-item marginals p_i(x_i) of the uniform
distribution over feasible selections:

* :func:`bp_run` -- message passing on the dense factor graph, with the
  factor-to-variable messages reduced to Gaussian-tail evaluations of
  the cavity load (one table per edge, O(N*K*L) per sweep);
* :func:`gamp_run` -- the node-variable reduction (O(N*K) per sweep)
  obtained by expanding the edge messages to second order.

Both engines damp their updates, floor vanishing variances, and report
non-convergence rather than failing; callers that iterate (the greedy
solver) proceed with the last iterate and may warm-start the next call
from the returned state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import NumericsError
from .instance import Instance
from .special import log_tail_d1, tail_curvature

__all__ = [
    "IterOpts",
    "Marginals",
    "BPState",
    "GAMPState",
    "bp_run",
    "gamp_run",
]


@dataclass(frozen=True)
class IterOpts:
    """Iteration controls shared by both engines."""

    max_sweeps: int = 1000
    tol: float = 1e-8
    damping: float = 0.7
    v_floor: float = 1e-12
    h_floor: float = 1e-300

    def __post_init__(self):
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be >= 1")
        if not (self.tol > 0):
            raise ValueError("tol must be > 0")
        if not (0 <= self.damping < 1):
            raise ValueError("damping must be in [0, 1)")
        if not (self.v_floor > 0):
            raise ValueError("v_floor must be > 0")
        if not (self.h_floor > 0):
            raise ValueError("h_floor must be > 0")


class Marginals:
    """Per-item probability tables; table i has max_counts[i] + 1 entries."""

    def __init__(self, tables: list[np.ndarray]):
        self.tables = [np.asarray(t, dtype=float) for t in tables]

    def __len__(self) -> int:
        return len(self.tables)

    def __getitem__(self, i: int) -> np.ndarray:
        return self.tables[i]

    def nonzero_probability(self) -> np.ndarray:
        """P(x_i != 0) per item: the greedy's ranking score."""
        return np.array([1.0 - t[0] for t in self.tables])

    def total_variation(self, other: "Marginals") -> np.ndarray:
        """Per-item total variation distance (half L1) to another set."""
        return np.array(
            [0.5 * np.abs(a - b).sum() for a, b in zip(self.tables, other.tables)]
        )

    @staticmethod
    def from_padded(padded: np.ndarray, n_levels: np.ndarray) -> "Marginals":
        return Marginals([padded[i, : n_levels[i]].copy() for i in range(len(n_levels))])


def _n_levels(instance: Instance) -> np.ndarray:
    return (instance.max_counts + 1).astype(np.int64)


@dataclass
class BPState:
    """Per-edge message tables, stored padded to the largest level count.

    ``msg_factor_to_var[i, k, x]`` and ``msg_var_to_factor[i, k, x]`` are
    normalized over x < max_counts[i] + 1 and zero beyond.  ``residual``
    is the last sweep's max table change.
    """

    msg_var_to_factor: np.ndarray
    msg_factor_to_var: np.ndarray
    n_levels: np.ndarray
    residual: float = np.inf

    @staticmethod
    def uniform(instance: Instance) -> "BPState":
        n, k = instance.n_items, instance.n_constraints
        nl = _n_levels(instance)
        L = int(nl.max())
        lv = np.arange(L)
        table = np.where(lv[None, :] < nl[:, None], 1.0 / nl[:, None], 0.0)
        f2v = np.repeat(table[:, None, :], k, axis=1)
        return BPState(f2v.copy(), f2v.copy(), nl)

    def matches(self, instance: Instance) -> bool:
        n, k = instance.n_items, instance.n_constraints
        return (
            self.msg_var_to_factor.shape[:2] == (n, k)
            and np.array_equal(self.n_levels, _n_levels(instance))
        )

    def shrink_item(self, item: int, new_levels: int) -> None:
        """Drop the top level(s) of one item's tables and renormalize.

        Used by warm starts after a greedy pick reduces that item's cap.
        """
        for msg in (self.msg_var_to_factor, self.msg_factor_to_var):
            msg[item, :, new_levels:] = 0.0
            s = msg[item].sum(axis=-1, keepdims=True)
            dead = s[:, 0] <= 0
            if dead.any():
                msg[item, dead, :new_levels] = 1.0 / new_levels
                s = msg[item].sum(axis=-1, keepdims=True)
            msg[item] /= s
        self.n_levels = self.n_levels.copy()
        self.n_levels[item] = new_levels

    def marginals(self) -> Marginals:
        logp = np.where(
            np.arange(self.msg_factor_to_var.shape[2])[None, None, :] < self.n_levels[:, None, None],
            np.log(np.maximum(self.msg_factor_to_var, kernels.TINY_LOG_ARG)),
            0.0,
        ).sum(axis=1)
        lv = np.arange(logp.shape[1])
        logp = np.where(lv[None, :] < self.n_levels[:, None], logp, -np.inf)
        p = np.exp(logp - logp.max(axis=-1, keepdims=True))
        p = np.where(lv[None, :] < self.n_levels[:, None], p, 0.0)
        p /= p.sum(axis=-1, keepdims=True)
        return Marginals.from_padded(p, self.n_levels)


def bp_run(
    instance: Instance,
    opts: IterOpts = IterOpts(),
    init: BPState | None = None,
) -> tuple[Marginals, BPState, bool, int]:
    """Run damped message passing until the tables stop moving.

    Returns ``(marginals, state, converged, sweeps)``.  With ``init``
    given, iteration resumes from that state (its shape must match the
    instance); the default start is uniform tables over each item's
    levels.  Non-convergence after ``opts.max_sweeps`` is reported via
    the flag, not raised.
    """
    if init is not None:
        if not init.matches(instance):
            raise ValueError("init state does not match the instance's edge structure")
        state = init
    else:
        state = BPState.uniform(instance)
    f2v = state.msg_factor_to_var
    v2f = state.msg_var_to_factor
    converged = False
    sweeps = 0
    for sweep in range(1, opts.max_sweeps + 1):
        sweeps = sweep
        delta = kernels.bp_sweep(
            instance.weights,
            instance.capacities,
            state.n_levels,
            f2v,
            v2f,
            opts.damping,
            opts.v_floor,
            opts.h_floor,
        )
        if not np.isfinite(delta):
            raise NumericsError(f"non-finite message change in sweep {sweep}", sweep=sweep)
        if delta < opts.tol:
            converged = True
            break
    state.residual = float(delta)
    return state.marginals(), state, converged, sweeps


@dataclass
class GAMPState:
    """Node-variable state: per-item means/variances and curvature/field,
    per-constraint variances, fields, and curvatures."""

    m: np.ndarray
    chi: np.ndarray
    a: np.ndarray
    b: np.ndarray
    v_mu: np.ndarray
    a_mu: np.ndarray
    b_mu: np.ndarray
    residual: float = np.inf
    clamp_count: int = 0

    @staticmethod
    def uniform(instance: Instance, v_floor: float = 1e-12) -> "GAMPState":
        """Start from uniform level distributions.

        The constraint-side quantities are what one no-op item phase
        followed by a constraint phase would produce from the uniform
        start, so the first real sweep sees consistent fields.
        """
        nl = _n_levels(instance).astype(float)
        m = (nl - 1.0) / 2.0
        chi = (nl * nl - 1.0) / 12.0
        w2 = instance.weights * instance.weights
        v_mu = np.maximum(w2 @ chi, v_floor)
        u = (instance.weights @ m - instance.capacities) / np.sqrt(v_mu)
        b_mu = log_tail_d1(u)
        a_mu = tail_curvature(u)
        n = instance.n_items
        return GAMPState(m, chi, np.zeros(n), np.zeros(n), v_mu, a_mu, b_mu)

    def matches(self, instance: Instance) -> bool:
        return self.m.shape == (instance.n_items,) and self.v_mu.shape == (instance.n_constraints,)

    def marginals(self, instance: Instance) -> Marginals:
        """Level distributions of the quadratic-exponential family at the
        current curvatures and fields (recomputed from m, v_mu, b_mu)."""
        wt = instance.weights.T
        a = (wt * wt / self.v_mu[None, :] * self.a_mu[None, :]).sum(-1)
        b = (wt / np.sqrt(self.v_mu)[None, :] * self.b_mu[None, :]).sum(-1) + a * self.m
        tables = []
        for i, x_max in enumerate(instance.max_counts):
            lv = np.arange(int(x_max) + 1, dtype=float)
            t = -0.5 * a[i] * lv * lv + b[i] * lv
            p = np.exp(t - t.max())
            tables.append(p / p.sum())
        return Marginals(tables)


def gamp_run(
    instance: Instance,
    opts: IterOpts = IterOpts(),
    init: GAMPState | None = None,
) -> tuple[Marginals, GAMPState, bool, int]:
    """Run the node-variable iteration; same contract as :func:`bp_run`.

    Convergence is max |mean change| below ``opts.tol``; variance floors
    hit during constraint updates are counted in ``state.clamp_count``.
    """
    if init is not None:
        if not init.matches(instance):
            raise ValueError("init state does not match the instance's dimensions")
        state = init
    else:
        state = GAMPState.uniform(instance, opts.v_floor)
    nl = _n_levels(instance)
    converged = False
    sweeps = 0
    clamps = 0
    for sweep in range(1, opts.max_sweeps + 1):
        sweeps = sweep
        dm, clamped = kernels.gamp_sweep(
            instance.weights,
            instance.capacities,
            nl,
            state.m,
            state.chi,
            state.a,
            state.b,
            state.v_mu,
            state.a_mu,
            state.b_mu,
            opts.damping,
            opts.v_floor,
        )
        clamps += clamped
        if not np.isfinite(dm) or not np.all(np.isfinite(state.m)):
            raise NumericsError(f"non-finite node mean in sweep {sweep}", sweep=sweep)
        if dm < opts.tol:
            converged = True
            break
    state.residual = float(dm)
    state.clamp_count = clamps
    return state.marginals(instance), state, converged, sweeps
