"""Replica-symmetric theory: entropy of feasible selections at fixed
scaled profit, and the profit prefactor where that entropy vanishes.

The entropy functional (per item, in the large-N limit at constraint
density alpha) is

    S(M) = extr { alpha * E_z[log H(f(z))] + E_z[log Z(z)]
                  + Q_hat*Q/2 + q_hat*q/2 - (C/w) M_hat }

over order parameters (Q, q, Q_hat, q_hat, M_hat), with

    f(z) = (w*M/sigma + sqrt(q) z) / sqrt(Q - q),
    Z(z) = sum_{x=0..x_max} exp(-(Q_hat+q_hat)/2 x^2 + (sqrt(q_hat) z + M_hat) x),

E_z the standard Gaussian average (Gauss-Hermite quadrature), and H the
Gaussian tail.  Stationarity reduces to five coupled equations solved by
damped fixed-point iteration with the mean-pinning equation for M_hat
solved exactly inside each step; a multidimensional root-finder polishes
non-converged iterates.  Every accepted point is validated against a
finite-difference gradient of the functional itself, which guards the
hand-derived stationarity equations.

S(M) is strictly decreasing in M on the physical branch.  Beyond a
density-dependent M the saddle collapses (Q -> q); spurious frozen
fixed points appear near the collapse, so the curve tracer rejects any
continuation step on which S increases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import optimize
from scipy.special import roots_hermite as special_roots_hermite

from .errors import DegenerateSaddleError, SaddleConvergenceError
from .instance import EnsembleParams
from .special import log_gaussian_tail, log_partition, log_tail_d1, tail_curvature

__all__ = [
    "OrderParams",
    "EntropyPoint",
    "TheoryResult",
    "rs_bracket",
    "rs_entropy",
    "find_m_opt",
    "profit_limit",
]

D2_FLOOR = 1e-14
DEFAULT_NODES = 480


@dataclass(frozen=True)
class OrderParams:
    """The five replica-symmetric order parameters."""

    Q: float
    q: float
    Q_hat: float
    q_hat: float
    M_hat: float

    def as_array(self) -> np.ndarray:
        return np.array([self.Q, self.q, self.Q_hat, self.q_hat, self.M_hat])


@dataclass(frozen=True)
class EntropyPoint:
    """Entropy value and saddle data at one (M, alpha)."""

    m: float
    alpha: float
    entropy: float
    order: OrderParams
    residual: float       # max |finite-difference gradient| of the functional
    fp_residual: float    # last fixed-point update size
    iterations: int


@dataclass(frozen=True)
class TheoryResult:
    """M_opt plus the entropy curve sampled on the way to it."""

    alpha: float
    x_max: int
    m_opt: float
    curve: list[EntropyPoint]


@lru_cache(maxsize=8)
def _gh_nodes(n: int) -> tuple[np.ndarray, np.ndarray]:
    t, w = special_roots_hermite(n)  # stable for large n, unlike hermgauss
    return math.sqrt(2.0) * t, w / math.sqrt(math.pi)


def _pin_mean(a_coeff: float, sqrt_qh: float, mh0: float, cw: float, x_max: int, z, wz) -> float:
    """Solve E_z[mean(Z(z))] = cw for M_hat (monotone in M_hat)."""
    mh = mh0
    for _ in range(80):
        _, mean, var = log_partition(a_coeff, sqrt_qh * z + mh, x_max)
        g = float(wz @ mean) - cw
        if abs(g) < 1e-13:
            return mh
        dg = float(wz @ var)
        if not (dg > 1e-300):
            break
        step = g / dg
        if abs(step) > 2.0:
            step = math.copysign(2.0, step)
        mh -= step
    # Newton stalled; fall back to a bracketing solve
    def fun(v: float) -> float:
        _, mean, _ = log_partition(a_coeff, sqrt_qh * z + v, x_max)
        return float(wz @ mean) - cw

    lo, hi = mh - 1.0, mh + 1.0
    for _ in range(200):
        if fun(lo) <= 0:
            break
        lo = 2 * lo - abs(lo) - 1
    for _ in range(200):
        if fun(hi) >= 0:
            break
        hi = 2 * hi + abs(hi) + 1
    return float(optimize.brentq(fun, lo, hi, xtol=1e-13))


def rs_bracket(
    m: float,
    alpha: float,
    params: EnsembleParams,
    order: OrderParams,
    n_nodes: int = DEFAULT_NODES,
) -> float:
    """Evaluate the entropy functional at arbitrary order parameters.

    This is the object whose stationary points :func:`rs_entropy` finds;
    exposing it lets tests probe stationarity by finite differences.
    """
    z, wz = _gh_nodes(n_nodes)
    cw = params.capacity_ratio / params.mean_weight
    x_max = params.x_max
    if order.q_hat < 0:
        raise ValueError("q_hat must be >= 0")
    logz, _, _ = log_partition(order.Q_hat + order.q_hat, math.sqrt(order.q_hat) * z + order.M_hat, x_max)
    s = float(wz @ logz) + 0.5 * order.Q_hat * order.Q + 0.5 * order.q_hat * order.q - cw * order.M_hat
    if alpha > 0:
        d2 = order.Q - order.q
        if d2 <= 0 or order.q < 0:
            raise ValueError("need Q > q >= 0 for the constraint term")
        f = (params.mean_weight * m / params.sigma + np.sqrt(order.q) * z) / math.sqrt(d2)
        s += alpha * float(wz @ log_gaussian_tail(f))
    return s


def _stationarity_residual(m, alpha, params, order, n_nodes, h=1e-6) -> float:
    base = order.as_array()
    grad = np.zeros(5)
    for j in range(5):
        up = base.copy()
        dn = base.copy()
        up[j] += h
        dn[j] -= h
        # keep probes inside the domain (Q > q, q_hat >= 0): shift to one-sided
        def ok(v):
            return v[0] - v[1] > 0 and v[1] >= 0 and v[3] >= 0

        if ok(up) and ok(dn):
            s_up = rs_bracket(m, alpha, params, OrderParams(*up), n_nodes)
            s_dn = rs_bracket(m, alpha, params, OrderParams(*dn), n_nodes)
            grad[j] = (s_up - s_dn) / (2 * h)
        elif ok(up):
            s_up = rs_bracket(m, alpha, params, OrderParams(*up), n_nodes)
            s0 = rs_bracket(m, alpha, params, order, n_nodes)
            grad[j] = (s_up - s0) / h
        else:
            s0 = rs_bracket(m, alpha, params, order, n_nodes)
            s_dn = rs_bracket(m, alpha, params, OrderParams(*dn), n_nodes)
            grad[j] = (s0 - s_dn) / h
    return float(np.abs(grad).max())


def _saddle_residuals(v, m, alpha, params, z, wz):
    """The five stationarity equations as a residual vector."""
    Q, q, Qh, qh, Mh = v
    cw = params.capacity_ratio / params.mean_weight
    x_max = params.x_max
    if Q - q < D2_FLOOR or q < 0 or qh < 0:
        return np.full(5, 1e6)
    _, mean, var = log_partition(Qh + qh, math.sqrt(qh) * z + Mh, x_max)
    r1 = Q - float(wz @ (var + mean * mean))
    r2 = q - float(wz @ (mean * mean))
    r3 = float(wz @ mean) - cw
    if alpha > 0:
        d2 = Q - q
        f = (params.mean_weight * m / params.sigma + math.sqrt(q) * z) / math.sqrt(d2)
        b = log_tail_d1(f)
        a = tail_curvature(f)
        bf = float(wz @ (b * f))
        r4 = Qh - (alpha / d2) * bf
        r5 = qh - (alpha / d2) * (float(wz @ a) - bf)
    else:
        r4 = Qh
        r5 = qh
    return np.array([r1, r2, r3, r4, r5])



def rs_entropy(
    m: float,
    alpha: float,
    params: EnsembleParams,
    init: OrderParams | None = None,
    *,
    n_nodes: int = DEFAULT_NODES,
    fp_tol: float = 1e-11,
    max_iter: int = 4000,
    fp_damping: float = 0.5,
    grad_tol: float = 1e-5,
) -> EntropyPoint:
    """Solve the saddle at one (M, alpha) and return the entropy there.

    Damped fixed-point iteration on the stationarity equations, with the
    mean constraint solved exactly for M_hat inside every step; a hybr
    root-solve polishes iterates that have not met ``fp_tol``.  Cold
    starts first converge on a 120-node quadrature, then refine at
    ``n_nodes`` (the family-term integrand sharpens near the collapse;
    480 nodes keeps its quadrature error below 1e-10 where 120 leaves
    ~1e-6 and can fail the stationarity gate).  Raises
    :class:`DegenerateSaddleError` if Q - q collapses below floor and
    :class:`SaddleConvergenceError` if no stationary point is reached or
    the finite-difference gradient check fails.
    """
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    cw = params.capacity_ratio / params.mean_weight
    x_max = params.x_max
    if init is None:
        q = cw * cw + 0.05
        Q = q + 0.1
        Qh = qh = 0.1
        Mh = 0.0
    else:
        Q, q, Qh, qh, Mh = init.Q, init.q, init.Q_hat, init.q_hat, init.M_hat
    a_shift = params.mean_weight * m / params.sigma
    dd = math.inf
    it = 0
    stages = [120, n_nodes] if (init is None and n_nodes > 160) else [n_nodes]
    stage_idx = 0
    z, wz = _gh_nodes(stages[0])
    while it < max_iter:
        it += 1
        Mh = _pin_mean(Qh + qh, math.sqrt(max(qh, 0.0)), Mh, cw, x_max, z, wz)
        _, mean, var = log_partition(Qh + qh, math.sqrt(max(qh, 0.0)) * z + Mh, x_max)
        Qn = float(wz @ (var + mean * mean))
        qn = float(wz @ (mean * mean))
        d2 = Qn - qn
        if d2 < D2_FLOOR:
            raise DegenerateSaddleError(f"Q - q = {d2:.2e} at M = {m}, alpha = {alpha}")
        if alpha > 0:
            f = (a_shift + math.sqrt(max(qn, 0.0)) * z) / math.sqrt(d2)
            b = log_tail_d1(f)
            a_curv = tail_curvature(f)
            bf = float(wz @ (b * f))
            Qhn = (alpha / d2) * bf
            qhn = (alpha / d2) * (float(wz @ a_curv) - bf)
        else:
            Qhn = qhn = 0.0
        dd = max(abs(Qn - Q), abs(qn - q), abs(Qhn - Qh), abs(qhn - qh))
        g = fp_damping
        Q = (1 - g) * Qn + g * Q
        q = (1 - g) * qn + g * q
        Qh = (1 - g) * Qhn + g * Qh
        qh = (1 - g) * qhn + g * qh
        if dd < fp_tol:
            if stage_idx + 1 < len(stages):
                stage_idx += 1
                z, wz = _gh_nodes(stages[stage_idx])
                dd = math.inf
                continue
            break
    if dd >= fp_tol:
        sol = optimize.root(
            _saddle_residuals,
            np.array([Q, q, Qh, qh, Mh]),
            args=(m, alpha, params, z, wz),
            method="hybr",
            tol=1e-12,
        )
        res = np.abs(_saddle_residuals(sol.x, m, alpha, params, z, wz)).max()
        if not sol.success or res > 1e-8:
            raise SaddleConvergenceError(
                f"saddle iteration stalled at residual {dd:.2e} (root polish {res:.2e}) at M = {m}"
            )
        Q, q, Qh, qh, Mh = sol.x
        if Q - q < D2_FLOOR:
            raise DegenerateSaddleError(f"Q - q = {Q - q:.2e} after polish at M = {m}")
        dd = float(res)
    order = OrderParams(Q, q, Qh, qh, Mh)
    entropy = rs_bracket(m, alpha, params, order, n_nodes)
    residual = _stationarity_residual(m, alpha, params, order, n_nodes)
    if residual > grad_tol:
        raise SaddleConvergenceError(
            f"stationarity gradient {residual:.2e} exceeds {grad_tol:g} at M = {m}"
        )
    return EntropyPoint(
        m=m, alpha=alpha, entropy=entropy, order=order,
        residual=residual, fp_residual=dd, iterations=it,
    )


def _try_point(m, alpha, params, init, n_nodes):
    try:
        return rs_entropy(m, alpha, params, init, n_nodes=n_nodes)
    except (DegenerateSaddleError, SaddleConvergenceError):
        return None


def find_m_opt(
    alpha: float,
    params: EnsembleParams,
    *,
    m_step: float = 0.05,
    m_lb: float | None = None,
    m_ub: float | None = None,
    n_nodes: int = DEFAULT_NODES,
    s_tol: float = 1e-7,
    reverse: bool = False,
) -> TheoryResult:
    """Locate M_opt where the entropy crosses zero.

    Walks an adaptive grid from M = 0 (stepping down first when the
    saddle is unsolvable or the entropy is already negative there) with
    order-parameter continuation, brackets the sign change, and bisects
    until |S| < ``s_tol``.  Continuation steps on which S increases are
    rejected as spurious-branch jumps; the step is halved instead.
    With ``reverse=True`` the bracketing grid is re-solved downward from
    its upper end before bisection (a continuation-direction check).
    """
    if not (alpha > 0):
        raise ValueError("alpha must be > 0")
    x_max = params.x_max
    if m_ub is None:
        m_ub = 5.0 * x_max
    if m_lb is None:
        m_lb = -5.0 * x_max
    curve: list[EntropyPoint] = []

    # starting point at or below M = 0
    m0 = 0.0
    pt = _try_point(m0, alpha, params, None, n_nodes)
    while pt is None:
        m0 -= m_step
        if m0 < m_lb:
            raise SaddleConvergenceError(f"no solvable entropy point in [{m_lb}, 0]")
        pt = _try_point(m0, alpha, params, None, n_nodes)
    curve.append(pt)

    lo_pt = hi_pt = None  # bracket: S(lo) > 0 >= S(hi)
    if pt.entropy > 0:
        step = m_step
        cur = pt
        while True:
            m_next = cur.m + step
            if m_next > m_ub + 1e-12:
                raise SaddleConvergenceError(
                    f"no sign change of S found in [0, {m_ub}] at alpha = {alpha}"
                )
            cand = _try_point(m_next, alpha, params, cur.order, n_nodes)
            if cand is None or cand.entropy > cur.entropy + 1e-9:
                step *= 0.5  # collapsed or jumped to a frozen branch
                if step < 1e-6:
                    raise SaddleConvergenceError(
                        f"entropy still {cur.entropy:.3e} at the solvable boundary M = {cur.m}"
                    )
                continue
            curve.append(cand)
            if cand.entropy <= 0:
                lo_pt, hi_pt = cur, cand
                break
            cur = cand
    else:
        cur = pt
        while True:
            m_next = cur.m - m_step
            if m_next < m_lb - 1e-12:
                raise SaddleConvergenceError(
                    f"S never positive down to {m_lb} at alpha = {alpha}"
                )
            cand = _try_point(m_next, alpha, params, cur.order, n_nodes)
            if cand is None:
                raise SaddleConvergenceError(f"saddle unsolvable at M = {m_next} while walking down")
            curve.append(cand)
            if cand.entropy > 0:
                lo_pt, hi_pt = cand, cur
                break
            cur = cand

    if reverse:
        # re-approach the bracket from above with downward continuation
        redo = _try_point(hi_pt.m, alpha, params, hi_pt.order, n_nodes)
        if redo is not None:
            hi_pt = redo
        cand = _try_point(lo_pt.m, alpha, params, hi_pt.order, n_nodes)
        if cand is not None and cand.entropy > 0:
            lo_pt = cand

    m_lo, m_hi = lo_pt.m, hi_pt.m
    anchor = lo_pt
    m_opt = None
    for _ in range(300):
        mid = 0.5 * (m_lo + m_hi)
        cand = _try_point(mid, alpha, params, anchor.order, n_nodes)
        if cand is None or cand.entropy > anchor.entropy + 1e-9:
            m_hi = mid
        else:
            curve.append(cand)
            if abs(cand.entropy) < s_tol:
                m_opt = mid
                break
            if cand.entropy > 0:
                m_lo, anchor = mid, cand
            else:
                m_hi = mid
        if m_hi - m_lo < 1e-13:
            break
    if m_opt is None:
        if abs(anchor.entropy) < 1e-4:
            m_opt = m_lo  # slope-limited: crossing pinned to solver resolution
        else:
            raise SaddleConvergenceError(
                f"bisection could not reach |S| < {s_tol:g} (last S = {anchor.entropy:.3e})"
            )
    curve.sort(key=lambda p: p.m)
    return TheoryResult(alpha=alpha, x_max=x_max, m_opt=float(m_opt), curve=curve)


def profit_limit(n_items: int, m_opt: float, params: EnsembleParams) -> float:
    """Achievable-profit estimate (C/w) N + M_opt sqrt(N)."""
    if n_items < 1:
        raise ValueError("n_items must be >= 1")
    cw = params.capacity_ratio / params.mean_weight
    return cw * n_items + m_opt * math.sqrt(n_items)
