"""Problem data model, random ensemble generator, evaluation, and file I/O.

An :class:`Instance` is an integer-count knapsack with K simultaneous
weight constraints: maximize sum(v_i x_i) subject to W @ x <= C and
0 <= x_i <= max_counts[i].  The random ensemble draws every weight from
one Gaussian, sets all profits to 1, all capacities to a fixed fraction
of N, and a uniform per-item count cap.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import InstanceFormatError

#: File format tag written on the first line of saved instances.
FORMAT_TAG = "gmdkp 1"


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    if a.flags.writeable:
        a = a.copy()  # never freeze a caller's array in place
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class EnsembleParams:
    """Parameters of the random ensemble.

    ``alpha`` is the constraint density K/N (K is rounded half-up), the
    weights are i.i.d. Gaussian(mean_weight, weight_variance), every
    capacity equals capacity_ratio * n_items, and every item shares the
    same count cap ``x_max``.
    """

    n_items: int
    alpha: float
    mean_weight: float = 0.5
    weight_variance: float = 1.0 / 12.0
    capacity_ratio: float = 0.25
    x_max: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.n_items < 1:
            raise ValueError("n_items must be >= 1")
        if not (self.alpha > 0):
            raise ValueError("alpha must be > 0")
        if not (self.mean_weight > 0):
            raise ValueError("mean_weight must be > 0")
        if not (self.weight_variance > 0):
            raise ValueError("weight_variance must be > 0")
        if not (self.capacity_ratio > 0):
            raise ValueError("capacity_ratio must be > 0")
        if self.x_max < 1:
            raise ValueError("x_max must be >= 1")
        if self.n_constraints < 1:
            raise ValueError("alpha * n_items rounds below 1 constraint")

    @property
    def n_constraints(self) -> int:
        """K = alpha * N rounded half-up."""
        return int(math.floor(self.alpha * self.n_items + 0.5))

    @property
    def sigma(self) -> float:
        return math.sqrt(self.weight_variance)


@dataclass(frozen=True)
class Instance:
    """A concrete problem: profits, weight matrix, capacities, count caps.

    Immutable after construction; arrays are frozen so instances can be
    shared across threads.
    """

    profits: np.ndarray      # (N,) non-negative
    weights: np.ndarray      # (K, N)
    capacities: np.ndarray   # (K,)
    max_counts: np.ndarray   # (N,) non-negative integers

    def __post_init__(self):
        object.__setattr__(self, "profits", _frozen(np.asarray(self.profits, dtype=float)))
        object.__setattr__(self, "weights", _frozen(np.asarray(self.weights, dtype=float)))
        object.__setattr__(self, "capacities", _frozen(np.asarray(self.capacities, dtype=float)))
        object.__setattr__(self, "max_counts", _frozen(np.asarray(self.max_counts, dtype=np.int64)))
        if self.weights.ndim != 2:
            raise ValueError("weights must be a K x N matrix")
        k, n = self.weights.shape
        if n < 1 or k < 1:
            raise ValueError("need at least one item and one constraint")
        if self.profits.shape != (n,):
            raise ValueError("profits must have length N")
        if self.max_counts.shape != (n,):
            raise ValueError("max_counts must have length N")
        if self.capacities.shape != (k,):
            raise ValueError("capacities must have length K")
        if (self.max_counts < 0).any():
            raise ValueError("max_counts must be >= 0")
        if (self.profits < 0).any():
            raise ValueError("profits must be >= 0")

    @property
    def n_items(self) -> int:
        return self.weights.shape[1]

    @property
    def n_constraints(self) -> int:
        return self.weights.shape[0]

    def with_residual(self, capacities: np.ndarray, max_counts: np.ndarray) -> "Instance":
        """Same weights/profits with reduced capacities and count caps.

        The weight matrix is shared, not copied, which keeps per-pick
        residual construction cheap inside the greedy loop.
        """
        return Instance(self.profits, self.weights, capacities, max_counts)


@dataclass(frozen=True)
class Selection:
    """An assignment of per-item counts."""

    counts: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "counts", _frozen(np.asarray(self.counts, dtype=np.int64)))
        if (self.counts < 0).any():
            raise ValueError("counts must be >= 0")


@dataclass(frozen=True)
class Evaluation:
    """Profit, per-constraint loads/slacks, feasibility, and the scaled profit.

    ``scaled_m`` is (profit - (C/w) N)/sqrt(N) and is only defined when
    ensemble parameters are supplied; it is None otherwise.
    """

    profit: float
    loads: np.ndarray
    slacks: np.ndarray
    feasible: bool
    scaled_m: float | None = None


def generate_instance(params: EnsembleParams) -> Instance:
    """Draw an instance from the Gaussian ensemble.

    The generator is numpy's PCG64 seeded with ``params.seed``; normals
    come from numpy's ziggurat standard_normal.  The same seed therefore
    reproduces the instance bit-for-bit across platforms.
    """
    n, k = params.n_items, params.n_constraints
    rng = np.random.Generator(np.random.PCG64(params.seed))
    weights = params.mean_weight + params.sigma * rng.standard_normal((k, n))
    return Instance(
        profits=np.ones(n),
        weights=weights,
        capacities=np.full(k, params.capacity_ratio * n),
        max_counts=np.full(n, params.x_max, dtype=np.int64),
    )


def evaluate(instance: Instance, selection: Selection, params: EnsembleParams | None = None) -> Evaluation:
    """Profit, loads, slacks and feasibility of a selection.

    Feasibility uses the non-strict inequality load <= capacity.
    """
    x = selection.counts
    if x.shape != (instance.n_items,):
        raise ValueError(f"selection has length {x.shape[0]}, instance has {instance.n_items} items")
    if (x > instance.max_counts).any():
        bad = int(np.argmax(x > instance.max_counts))
        raise ValueError(f"count {x[bad]} exceeds max_count {instance.max_counts[bad]} at item {bad}")
    profit = float(instance.profits @ x)
    loads = instance.weights @ x
    slacks = instance.capacities - loads
    feasible = bool((slacks >= 0).all())
    scaled_m = None
    if params is not None:
        n = instance.n_items
        scaled_m = (profit - (params.capacity_ratio / params.mean_weight) * n) / math.sqrt(n)
    return Evaluation(profit=profit, loads=loads, slacks=slacks, feasible=feasible, scaled_m=scaled_m)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def save_instance(instance: Instance) -> str:
    """Serialize to the line-oriented text format (see ``load_instance``)."""
    out = io.StringIO()
    out.write(FORMAT_TAG + "\n")
    out.write(f"{instance.n_items} {instance.n_constraints}\n")
    out.write(" ".join(_fmt(v) for v in instance.profits) + "\n")
    out.write(" ".join(str(int(c)) for c in instance.max_counts) + "\n")
    out.write(" ".join(_fmt(c) for c in instance.capacities) + "\n")
    for row in instance.weights:
        out.write(" ".join(_fmt(w) for w in row) + "\n")
    return out.getvalue()


def load_instance(text: str) -> Instance:
    """Parse the text format produced by :func:`save_instance`.

    Layout: ``gmdkp 1`` / ``N K`` / N profits / N max_counts /
    K capacities / K weight rows of N entries.  Lines starting with
    ``#`` are ignored; reals accept decimal or scientific notation.
    """
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise InstanceFormatError("empty instance text")
    if lines[0] != FORMAT_TAG:
        raise InstanceFormatError(f"bad format tag {lines[0]!r}, expected {FORMAT_TAG!r}")
    try:
        n_s, k_s = lines[1].split()
        n, k = int(n_s), int(k_s)
    except (IndexError, ValueError) as exc:
        raise InstanceFormatError("line 2 must be 'N K'") from exc
    if n < 1 or k < 1:
        raise InstanceFormatError("N and K must be >= 1")
    expected = 5 + k
    if len(lines) != expected:
        raise InstanceFormatError(f"expected {expected} content lines, found {len(lines)}")

    def _floats(line: str, count: int, what: str) -> np.ndarray:
        parts = line.split()
        if len(parts) != count:
            raise InstanceFormatError(f"{what}: expected {count} values, found {len(parts)}")
        try:
            return np.array([float(p) for p in parts])
        except ValueError as exc:
            raise InstanceFormatError(f"{what}: non-numeric value") from exc

    profits = _floats(lines[2], n, "profits")
    max_line = lines[3].split()
    if len(max_line) != n:
        raise InstanceFormatError(f"max_counts: expected {n} values, found {len(max_line)}")
    try:
        max_counts = np.array([int(p) for p in max_line], dtype=np.int64)
    except ValueError as exc:
        raise InstanceFormatError("max_counts: non-integer value") from exc
    capacities = _floats(lines[4], k, "capacities")
    weights = np.empty((k, n))
    for mu in range(k):
        weights[mu] = _floats(lines[5 + mu], n, f"weight row {mu}")
    try:
        return Instance(profits, weights, capacities, max_counts)
    except ValueError as exc:
        raise InstanceFormatError(str(exc)) from exc
