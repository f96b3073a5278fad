"""Scalar kernels shared by the message-passing engines and the theory module.

``gaussian_tail`` is the upper tail mass of the standard normal,
H(x) = integral from x to infinity of exp(-z^2/2)/sqrt(2*pi) dz.
The log version and its first two derivatives are needed deep inside
iterative updates where H underflows, so everything here is evaluated
in log space.  These public functions are numpy-vectorized and backed
by scipy; the numba kernels carry their own scalar twins (see
``kernels.py``), cross-checked against these in the test suite.
"""

import numpy as np
from scipy import special as _sp

LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


def gaussian_tail(x):
    """H(x): upper tail probability of the standard normal at x."""
    return _sp.ndtr(-np.asarray(x, dtype=float)) if np.ndim(x) else float(_sp.ndtr(-x))


def log_gaussian_tail(x):
    """log H(x), accurate far into both tails (never -inf for |x| <= 38)."""
    return _sp.log_ndtr(-np.asarray(x, dtype=float)) if np.ndim(x) else float(_sp.log_ndtr(-x))


def log_tail_d1(u):
    """First derivative of log H at u: -pdf(u)/H(u).  Always negative."""
    u = np.asarray(u, dtype=float)
    out = -np.exp(-0.5 * u * u - LOG_SQRT_2PI - _sp.log_ndtr(-u))
    return out if out.ndim else float(out)


def log_tail_d2(u):
    """Second derivative of log H at u.

    Computed from the identity (log H)'' = -(B^2 + u*B) with B = (log H)'.
    Always <= 0 (H is log-concave); the curvature magnitude -d2 is the
    quantity the engines consume.
    """
    u = np.asarray(u, dtype=float)
    b = -np.exp(-0.5 * u * u - LOG_SQRT_2PI - _sp.log_ndtr(-u))
    out = -(b * b + u * b)
    return out if out.ndim else float(out)


def tail_curvature(u):
    """-(log H)''(u) = B^2 + u*B >= 0; the convexity budget of one constraint."""
    u = np.asarray(u, dtype=float)
    b = -np.exp(-0.5 * u * u - LOG_SQRT_2PI - _sp.log_ndtr(-u))
    out = b * b + u * b
    return out if out.ndim else float(out)


def log_partition(a, b, x_max: int):
    """Log-normalizer of p(x) proportional to exp(-a/2 x^2 + b x) on x = 0..x_max.

    Returns ``(value, mean, variance)`` where mean and variance are the
    first and second derivatives of the log-normalizer with respect to b,
    i.e. the moments of the discrete distribution.  ``b`` may be an array;
    the computation is a stable log-sum-exp over the x_max + 1 levels.
    """
    if x_max < 0:
        raise ValueError("x_max must be >= 0")
    b = np.asarray(b, dtype=float)
    scalar = b.ndim == 0
    b = np.atleast_1d(b)
    x = np.arange(x_max + 1, dtype=float)
    t = -0.5 * a * x * x + b[..., None] * x
    tmax = t.max(axis=-1, keepdims=True)
    p = np.exp(t - tmax)
    s = p.sum(axis=-1, keepdims=True)
    p = p / s
    mean = p @ x
    var = np.einsum("...l,...l->...", p, (x[None, :] - mean[..., None]) ** 2)
    value = np.log(s[..., 0]) + tmax[..., 0]
    if scalar:
        return float(value[0]), float(mean[0]), float(var[0])
    return value, mean, var
