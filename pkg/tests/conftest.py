import numpy as np
import pytest

from gmdkp import EnsembleParams, generate_instance


@pytest.fixture
def ensemble():
    """Factory for ensemble params with the standard benchmark settings."""

    def make(n_items=10, alpha=1.0, x_max=1, seed=0, **kw):
        base = dict(
            n_items=n_items, alpha=alpha, mean_weight=0.5,
            weight_variance=1.0 / 12.0, capacity_ratio=0.25,
            x_max=x_max, seed=seed,
        )
        base.update(kw)
        return EnsembleParams(**base)

    return make


@pytest.fixture
def small_instance(ensemble):
    return generate_instance(ensemble(n_items=8, alpha=0.25, seed=3))


def rng_instances(seed, count, n_range, k_range, xm_range):
    """Deterministic stream of (params, instance) pairs for property tests."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        n = int(rng.integers(*n_range))
        k = int(rng.integers(*k_range))
        xm = int(rng.integers(*xm_range))
        p = EnsembleParams(
            n_items=n, alpha=k / n, mean_weight=0.5, weight_variance=1.0 / 12.0,
            capacity_ratio=0.25, x_max=xm, seed=int(rng.integers(0, 2**31)),
        )
        out.append((p, generate_instance(p)))
    return out
