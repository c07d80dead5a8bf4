import numpy as np
import pytest

from cdesign import DesignMeasure, PolynomialModel


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def poly_design(k, u, p):
    u = np.asarray(u, float)
    return DesignMeasure(PolynomialModel(k).features(u), np.asarray(p, float), u)


def symmetric_support(k, pos, center=False):
    """Polynomial feature rows for {+-u : u in pos} (plus u = 0 if asked)."""
    pos = np.asarray(pos, float)
    u = np.concatenate(([0.0] if center else [], -pos[::-1], pos))
    return u, PolynomialModel(k).features(u)


def random_li_support(rng, k, ell=None):
    """``ell`` random independent points in R^k and a target in their span."""
    ell = int(rng.integers(1, k + 1)) if ell is None else ell
    while True:
        X = rng.uniform(-1, 1, (ell, k))
        if np.linalg.svd(X, compute_uv=False).min() > 1e-2:
            break
    c = X.T @ rng.standard_normal(ell)
    return X, c
