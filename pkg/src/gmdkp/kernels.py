"""Hot numeric kernels: one numba ``@njit`` and one vectorized numpy
implementation of each, selected via :mod:`gmdkp.backend`.

The kernels are the per-sweep message-passing updates (the O(N*K*L)
inner loops that dominate solver runtime) and the exhaustive search
used by the exact oracle.  Both twins implement identical update
schedules (items ascending, constraints ascending, two-phase sweeps);
they differ only in floating-point summation order, so results agree
to roundoff but are not bit-identical across backends.  Within one
backend every kernel is deterministic.
"""

import math

import numpy as np
from scipy import special as _sp

from .backend import HAS_NUMBA, USE_NUMBA, njit

if HAS_NUMBA:
    from numba import prange
else:  # pragma: no cover
    prange = range

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
INV_SQRT2 = 1.0 / math.sqrt(2.0)
TINY_LOG_ARG = 1e-320


# ---------------------------------------------------------------------------
# scalar tail functions (numba twins of gmdkp.special)
# ---------------------------------------------------------------------------

@njit(cache=True)
def _log_tail_asympt(u):
    # upper-tail asymptotic series of log H(u), valid for u >= ~30
    iu2 = 1.0 / (u * u)
    s = 1.0 + iu2 * (-1.0 + iu2 * (3.0 + iu2 * (-15.0 + iu2 * (105.0 + iu2 * (-945.0 + iu2 * 10395.0)))))
    return -0.5 * u * u - math.log(u) - LOG_SQRT_2PI + math.log(s)


@njit(cache=True)
def log_tail_scalar(u):
    # erfc underflows past ~37.5; switch to the asymptotic tail well before.
    # For u < 0 go through log1p(-H(-u)): log(1 - tiny) cancels otherwise.
    if u >= 30.0:
        return _log_tail_asympt(u)
    if u >= 0.0:
        return math.log(0.5 * math.erfc(u * INV_SQRT2))
    if u > -30.0:
        return math.log1p(-0.5 * math.erfc(-u * INV_SQRT2))
    return math.log1p(-math.exp(_log_tail_asympt(-u)))


@njit(cache=True)
def log_tail_d1_scalar(u):
    # (log H)'(u) = -pdf(u)/H(u)
    return -math.exp(-0.5 * u * u - LOG_SQRT_2PI - log_tail_scalar(u))


@njit(cache=True)
def tail_curvature_scalar(u):
    # -(log H)''(u) = B^2 + u*B, with B = (log H)'(u)
    b = log_tail_d1_scalar(u)
    return b * b + u * b


# ---------------------------------------------------------------------------
# belief-propagation sweep
# ---------------------------------------------------------------------------
#
# Message tables are stored as probabilities in (N, K, L) arrays; entries at
# levels >= n_levels[i] are zero padding.  One sweep:
#   phase 1: per-edge means/variances of the variable-to-factor tables,
#            running sums for each constraint, and per-item log-products of
#            the factor-to-variable tables;
#   phase 2: per edge, the cavity Gaussian argument gives new
#            factor-to-variable tables via log H, then the variable-to-factor
#            tables by dividing the item product by the (new, damped)
#            factor message.  Both tables are floored, normalized, damped.
# Returns the max absolute table change of the sweep.
#
# The prange phases write disjoint slices and reduce only via exact max,
# so the result equals the sequential schedule bit for bit at any thread
# count; the constraint sums keep a fixed item order inside each row.

@njit(cache=True, parallel=True)
def bp_sweep_numba(weights, caps, n_levels, f2v, v2f, damping, v_floor, h_floor):
    K, N = weights.shape
    L = f2v.shape[2]
    m = np.empty((N, K))
    chi = np.empty((N, K))
    log_mi = np.zeros((N, L))
    for i in prange(N):
        li = n_levels[i]
        for k in range(K):
            mm = 0.0
            for x in range(li):
                mm += v2f[i, k, x] * x
            vv = 0.0
            for x in range(li):
                d = x - mm
                vv += v2f[i, k, x] * d * d
            m[i, k] = mm
            chi[i, k] = vv
            for x in range(li):
                p = f2v[i, k, x]
                if p < TINY_LOG_ARG:
                    p = TINY_LOG_ARG
                log_mi[i, x] += math.log(p)
    delta_mu = np.empty(K)
    v_mu = np.empty(K)
    for k in prange(K):
        dm = 0.0
        vv = 0.0
        for i in range(N):
            w = weights[k, i]
            dm += w * m[i, k]
            vv += w * w * chi[i, k]
        delta_mu[k] = dm
        v_mu[k] = vv
    deltas = np.zeros(N)
    for i in prange(N):
        work = np.empty(L)
        local = 0.0
        li = n_levels[i]
        for k in range(K):
            w = weights[k, i]
            dmi = delta_mu[k] - w * m[i, k]
            vmi = v_mu[k] - w * w * chi[i, k]
            if vmi < v_floor:
                vmi = v_floor
            inv_sq = 1.0 / math.sqrt(vmi)
            top = -1e308
            for x in range(li):
                lh = log_tail_scalar((w * x + dmi - caps[k]) * inv_sq)
                work[x] = lh
                if lh > top:
                    top = lh
            tot = 0.0
            for x in range(li):
                p = math.exp(work[x] - top)
                if p < h_floor:
                    p = h_floor
                work[x] = p
                tot += p
            for x in range(li):
                new = (1.0 - damping) * (work[x] / tot) + damping * f2v[i, k, x]
                d = abs(new - f2v[i, k, x])
                if not (d <= local):  # NaN-propagating max
                    local = d
                f2v[i, k, x] = new
            top = -1e308
            for x in range(li):
                p = f2v[i, k, x]
                if p < TINY_LOG_ARG:
                    p = TINY_LOG_ARG
                lq = log_mi[i, x] - math.log(p)
                work[x] = lq
                if lq > top:
                    top = lq
            tot = 0.0
            for x in range(li):
                p = math.exp(work[x] - top)
                if p < h_floor:
                    p = h_floor
                work[x] = p
                tot += p
            for x in range(li):
                new = (1.0 - damping) * (work[x] / tot) + damping * v2f[i, k, x]
                d = abs(new - v2f[i, k, x])
                if not (d <= local):
                    local = d
                v2f[i, k, x] = new
        deltas[i] = local
    max_delta = 0.0
    for i in range(N):
        d = deltas[i]
        if not (d <= max_delta):
            max_delta = d
    return max_delta


def bp_sweep_numpy(weights, caps, n_levels, f2v, v2f, damping, v_floor, h_floor):
    """Vectorized twin of :func:`bp_sweep_numba` (same schedule, same result
    up to summation order)."""
    K, N = weights.shape
    L = f2v.shape[2]
    lv = np.arange(L, dtype=float)
    valid = lv[None, :] < n_levels[:, None]
    vmask = valid[:, None, :]
    wt = weights.T  # (N, K)
    m = (v2f * lv[None, None, :]).sum(-1)
    chi = (v2f * (lv[None, None, :] - m[..., None]) ** 2).sum(-1)
    delta_mu = np.einsum("ik,ik->k", wt, m)
    v_mu = np.einsum("ik,ik->k", wt * wt, chi)
    log_mi = np.where(vmask, np.log(np.maximum(f2v, TINY_LOG_ARG)), 0.0).sum(axis=1)
    dmi = delta_mu[None, :] - wt * m
    vmi = np.maximum(v_mu[None, :] - wt * wt * chi, v_floor)
    args = (wt[:, :, None] * lv[None, None, :] + dmi[:, :, None] - caps[None, :, None]) / np.sqrt(vmi)[:, :, None]
    lh = np.where(vmask, _sp.log_ndtr(-args), -np.inf)
    p = np.exp(lh - lh.max(-1, keepdims=True))
    p = np.where(vmask, np.maximum(p, h_floor), 0.0)
    p /= p.sum(-1, keepdims=True)
    new_f2v = (1.0 - damping) * p + damping * f2v
    max_delta = np.abs(new_f2v - f2v).max()
    f2v[...] = new_f2v
    lq = log_mi[:, None, :] - np.where(vmask, np.log(np.maximum(f2v, TINY_LOG_ARG)), 0.0)
    lq = np.where(vmask, lq, -np.inf)
    q = np.exp(lq - lq.max(-1, keepdims=True))
    q = np.where(vmask, np.maximum(q, h_floor), 0.0)
    q /= q.sum(-1, keepdims=True)
    new_v2f = (1.0 - damping) * q + damping * v2f
    max_delta = max(max_delta, np.abs(new_v2f - v2f).max())
    v2f[...] = new_v2f
    return float(max_delta)


# ---------------------------------------------------------------------------
# GAMP sweep (node variables only, O(N*K) per sweep)
# ---------------------------------------------------------------------------
#
# Item phase: curvature a_i and field b_i collect the constraint messages,
# then the discrete family exp(-a/2 x^2 + b x) over this item's levels gives
# new mean/variance (damped).  Constraint phase: fresh V, then the cavity
# argument u carries the previous B as its correction term; B and the
# curvature A are the first two log-tail derivatives at that same u.
# Returns (max |mean change|, number of clamped V entries).

@njit(cache=True)
def gamp_sweep_numba(weights, caps, n_levels, m, chi, a, b, v_mu, a_mu, b_mu, damping, v_floor):
    K, N = weights.shape
    deltas = np.zeros(N)
    for i in range(N):
        ai = 0.0
        bi = 0.0
        for k in range(K):
            w = weights[k, i]
            ai += w * w / v_mu[k] * a_mu[k]
            bi += w / math.sqrt(v_mu[k]) * b_mu[k]
        bi += ai * m[i]
        a[i] = ai
        b[i] = bi
        li = n_levels[i]
        top = -1e308
        for x in range(li):
            t = -0.5 * ai * x * x + bi * x
            if t > top:
                top = t
        tot = 0.0
        mean = 0.0
        for x in range(li):
            p = math.exp(-0.5 * ai * x * x + bi * x - top)
            tot += p
            mean += p * x
        mean /= tot
        var = 0.0
        for x in range(li):
            p = math.exp(-0.5 * ai * x * x + bi * x - top)
            d = x - mean
            var += p * d * d
        var /= tot
        new_m = (1.0 - damping) * mean + damping * m[i]
        deltas[i] = abs(new_m - m[i])
        m[i] = new_m
        chi[i] = (1.0 - damping) * var + damping * chi[i]
    max_dm = 0.0
    for i in range(N):
        d = deltas[i]
        if not (d <= max_dm):  # NaN-propagating max
            max_dm = d
    clamped = 0
    for k in range(K):
        vv = 0.0
        dot = 0.0
        for i in range(N):
            w = weights[k, i]
            vv += w * w * chi[i]
            dot += w * m[i]
        if vv < v_floor:
            vv = v_floor
            clamped += 1
        v_mu[k] = vv
        u = (dot - caps[k]) / math.sqrt(vv) - b_mu[k]
        bn = log_tail_d1_scalar(u)
        a_mu[k] = bn * bn + u * bn
        b_mu[k] = bn
    return max_dm, clamped


def gamp_sweep_numpy(weights, caps, n_levels, m, chi, a, b, v_mu, a_mu, b_mu, damping, v_floor):
    """Vectorized twin of :func:`gamp_sweep_numba`."""
    K, N = weights.shape
    L = int(n_levels.max())
    lv = np.arange(L, dtype=float)
    valid = lv[None, :] < n_levels[:, None]
    wt = weights.T
    w2t = wt * wt
    a[...] = (w2t / v_mu[None, :] * a_mu[None, :]).sum(-1)
    b[...] = (wt / np.sqrt(v_mu)[None, :] * b_mu[None, :]).sum(-1) + a * m
    t = -0.5 * np.multiply.outer(a, lv * lv) + np.multiply.outer(b, lv)
    t = np.where(valid, t, -np.inf)
    p = np.exp(t - t.max(-1, keepdims=True))
    p /= p.sum(-1, keepdims=True)
    mean = p @ lv
    var = (p * (lv[None, :] - mean[:, None]) ** 2).sum(-1)
    new_m = (1.0 - damping) * mean + damping * m
    max_dm = float(np.abs(new_m - m).max())
    m[...] = new_m
    chi[...] = (1.0 - damping) * var + damping * chi
    vv = (weights * weights) @ chi
    clamped = int((vv < v_floor).sum())
    vv = np.maximum(vv, v_floor)
    v_mu[...] = vv
    u = (weights @ m - caps) / np.sqrt(vv) - b_mu
    bn = -np.exp(-0.5 * u * u - LOG_SQRT_2PI - _sp.log_ndtr(-u))
    a_mu[...] = bn * bn + u * bn
    b_mu[...] = bn
    return max_dm, clamped


# ---------------------------------------------------------------------------
# exhaustive search (exact oracle)
# ---------------------------------------------------------------------------
#
# Depth-first enumeration in lexicographic order of the counts vector,
# items ascending, levels ascending.  A subtree is pruned when a partial
# load already exceeds some capacity and every remaining weight on that
# row is non-negative (no completion can recover).  The first strict
# profit improvement therefore yields the lexicographically smallest
# optimal counts vector.  Returns (n_feasible, best_profit, best_counts,
# per-item level tallies over feasible assignments).

@njit(cache=True)
def exhaustive_scan_numba(weights, caps, max_counts, profits):
    K, N = weights.shape
    L = int(max_counts.max()) + 1
    suffix_nonneg = np.empty((K, N + 1), dtype=np.bool_)
    for k in range(K):
        suffix_nonneg[k, N] = True
        for d in range(N - 1, -1, -1):
            suffix_nonneg[k, d] = suffix_nonneg[k, d + 1] and (weights[k, d] >= 0.0)
    x = np.full(N, -1, dtype=np.int64)
    loads = np.zeros(K)
    tallies = np.zeros((N, L), dtype=np.int64)
    best_counts = np.zeros(N, dtype=np.int64)
    best_profit = -1.0
    found = False
    n_feasible = 0
    profit = 0.0
    d = 0
    while d >= 0:
        x[d] += 1
        if x[d] > max_counts[d]:
            for k in range(K):
                loads[k] -= max_counts[d] * weights[k, d]
            profit -= max_counts[d] * profits[d]
            x[d] = -1
            d -= 1
            continue
        if x[d] > 0:
            for k in range(K):
                loads[k] += weights[k, d]
            profit += profits[d]
        pruned = False
        for k in range(K):
            if loads[k] > caps[k] and suffix_nonneg[k, d + 1]:
                pruned = True
                break
        if pruned:
            continue
        if d == N - 1:
            feasible = True
            for k in range(K):
                if loads[k] > caps[k]:
                    feasible = False
                    break
            if feasible:
                n_feasible += 1
                for i in range(N):
                    tallies[i, x[i]] += 1
                if not found or profit > best_profit:
                    found = True
                    best_profit = profit
                    for i in range(N):
                        best_counts[i] = x[i]
            continue
        d += 1
    return n_feasible, best_profit, best_counts, tallies


def exhaustive_scan_numpy(weights, caps, max_counts, profits, block=1 << 17):
    """Blockwise vectorized twin of :func:`exhaustive_scan_numba`.

    Enumerates assignments in the same lexicographic order (item 0 most
    significant) without pruning, so tie-breaking matches the DFS.
    """
    K, N = weights.shape
    radix = (max_counts + 1).astype(np.int64)
    L = int(radix.max())
    strides = np.ones(N, dtype=np.int64)
    for i in range(N - 2, -1, -1):
        strides[i] = strides[i + 1] * radix[i + 1]
    total = int(strides[0] * radix[0])
    tallies = np.zeros((N, L), dtype=np.int64)
    best_profit = -1.0
    best_counts = np.zeros(N, dtype=np.int64)
    found = False
    n_feasible = 0
    for start in range(0, total, block):
        idx = np.arange(start, min(start + block, total), dtype=np.int64)
        digits = (idx[:, None] // strides[None, :]) % radix[None, :]
        loads = digits @ weights.T
        feas = (loads <= caps[None, :]).all(axis=1)
        nf = int(feas.sum())
        if nf == 0:
            continue
        n_feasible += nf
        fd = digits[feas]
        prof = fd @ profits
        j = int(np.argmax(prof))
        if not found or prof[j] > best_profit:
            found = True
            best_profit = float(prof[j])
            best_counts = fd[j].copy()
        for i in range(N):
            tallies[i] += np.bincount(fd[:, i], minlength=L)
    return n_feasible, best_profit, best_counts, tallies


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

if USE_NUMBA:
    bp_sweep = bp_sweep_numba
    gamp_sweep = gamp_sweep_numba
    exhaustive_scan = exhaustive_scan_numba
else:  # pragma: no cover - exercised via GMDKP_BACKEND=numpy
    bp_sweep = bp_sweep_numpy
    gamp_sweep = gamp_sweep_numpy
    exhaustive_scan = exhaustive_scan_numpy
