import numpy as np
import pytest

from mfcq.core import Example, ModelConstants


@pytest.fixture(scope="session")
def lq_constants() -> ModelConstants:
    return ModelConstants(Example.LQ_FINITE, b=0.25, sigma=0.5, sigma_o=0.5,
                          beta=0.0, gamma=0.5, T=1.0, lam=1.5)


@pytest.fixture(scope="session")
def nlq_constants() -> ModelConstants:
    return ModelConstants(Example.NLQ_FINITE, b=1.5, sigma=0.5, sigma_o=1.0,
                          beta=1.0, gamma=0.2, T=1.0)


def central_diff(f, x, h=1e-6):
    """Componentwise central finite differences of a scalar function."""
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(x.size):
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (f(xp) - f(xm)) / (2.0 * h)
    return g


def assert_grad_close(analytic, numeric, rel=1e-5, floor=1e-8):
    analytic = np.asarray(analytic, dtype=float)
    numeric = np.asarray(numeric, dtype=float)
    denom = np.maximum(np.abs(numeric), floor)
    assert np.max(np.abs(analytic - numeric) / denom) < rel, (analytic, numeric)
