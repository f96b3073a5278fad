import math

import numpy as np
import pytest

from gmdkp import (
    EnsembleParams,
    SaddleConvergenceError,
    find_m_opt,
    profit_limit,
    rs_bracket,
    rs_entropy,
)
from gmdkp.replica import OrderParams, _gh_nodes
from gmdkp.special import log_partition


def params(alpha=1.0, x_max=1, C=0.25):
    return EnsembleParams(
        n_items=64, alpha=alpha, mean_weight=0.5, weight_variance=1.0 / 12.0,
        capacity_ratio=C, x_max=x_max, seed=0,
    )


def binary_entropy(p):
    return -p * math.log(p) - (1 - p) * math.log(1 - p)


@pytest.mark.parametrize("C,p", [(0.25, 0.5), (0.1, 0.2)])
def test_alpha_zero_closed_form(C, p):
    pt = rs_entropy(0.4, 0.0, params(C=C))
    assert pt.entropy == pytest.approx(binary_entropy(p), abs=1e-9)
    # independent of M when unconstrained
    pt2 = rs_entropy(-0.7, 0.0, params(C=C))
    assert pt2.entropy == pytest.approx(pt.entropy, abs=1e-10)


def test_entropy_point_regression():
    pt = rs_entropy(0.0, 0.5, params(alpha=0.5))
    assert pt.entropy == pytest.approx(0.0261970, abs=2e-6)
    assert pt.residual < 1e-5
    assert pt.order.Q >= pt.order.q >= 0
    assert pt.order.q_hat >= 0


def test_saddle_mean_is_pinned():
    pt = rs_entropy(-0.25, 1.0, params())
    z, wz = _gh_nodes(480)
    o = pt.order
    _, mean, _ = log_partition(o.Q_hat + o.q_hat, math.sqrt(o.q_hat) * z + o.M_hat, 1)
    assert float(wz @ mean) == pytest.approx(0.5, abs=1e-10)
    assert o.q <= o.Q <= 1.0  # Q bounded by x_max^2


def test_stationarity_via_functional_probe():
    # move each order parameter off the saddle: the functional must not increase
    # its gradient magnitude beyond the finite-difference tolerance at the point
    pt = rs_entropy(0.1, 0.25, params(alpha=0.25))
    assert pt.residual < 1e-5
    base = rs_bracket(0.1, 0.25, params(alpha=0.25), pt.order)
    assert base == pytest.approx(pt.entropy, abs=1e-12)


def test_quadrature_doubling_stability():
    # at the working default (480 nodes) doubling the rule moves S by < 1e-8
    for m, alpha in ((0.0, 0.5), (-0.15, 1.0)):
        s_def = rs_entropy(m, alpha, params(alpha=alpha), n_nodes=480).entropy
        s_dbl = rs_entropy(m, alpha, params(alpha=alpha), n_nodes=960).entropy
        assert abs(s_def - s_dbl) < 1e-8


def test_find_m_opt_small_alpha():
    res = find_m_opt(0.5, params(alpha=0.5))
    assert res.m_opt == pytest.approx(0.00689, abs=5e-4)
    ms = [pt.m for pt in res.curve]
    ss = [pt.entropy for pt in res.curve]
    # strictly decreasing in M along the sampled curve
    for i in range(1, len(ms)):
        assert ss[i] <= ss[i - 1] + 1e-9
    signs = [s > 0 for s in ss]
    assert sum(1 for i in range(1, len(signs)) if signs[i] != signs[i - 1]) == 1


def test_m_opt_decreases_with_alpha():
    hi = find_m_opt(0.5, params(alpha=0.5)).m_opt
    lo = find_m_opt(2.0, params(alpha=2.0)).m_opt
    assert lo < hi


def test_m_opt_increases_with_x_max():
    one = find_m_opt(1.0, params(alpha=1.0, x_max=1)).m_opt
    two = find_m_opt(1.0, params(alpha=1.0, x_max=2)).m_opt
    assert two > one


def test_reverse_continuation_matches():
    fwd = find_m_opt(1.0, params())
    rev = find_m_opt(1.0, params(), reverse=True)
    assert abs(fwd.m_opt - rev.m_opt) < 1e-5


def test_profit_limit():
    assert profit_limit(100, 0.0, params()) == pytest.approx(50.0, abs=1e-12)
    res = profit_limit(50, -0.178811, params())
    assert res == pytest.approx(0.5 * 50 - 0.178811 * math.sqrt(50), abs=1e-9)
    with pytest.raises(ValueError):
        profit_limit(0, 0.1, params())


def test_find_m_opt_requires_positive_alpha():
    with pytest.raises(ValueError):
        find_m_opt(0.0, params())


def test_bracket_domain_validation():
    with pytest.raises(ValueError):
        rs_bracket(0.0, 0.5, params(alpha=0.5), OrderParams(0.3, 0.4, 0.0, 0.1, 0.0))
    with pytest.raises(ValueError):
        rs_bracket(0.0, 0.5, params(alpha=0.5), OrderParams(0.5, 0.3, 0.0, -0.1, 0.0))
