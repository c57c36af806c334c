"""Shared oracles and helpers for the test suite.

The dense-inverse GP oracle here deliberately avoids the library's Cholesky
path: predictions are recomputed from scratch with explicit matrix inverses
so the two routes stay independent.
"""

import numpy as np
import pytest


def dense_gp_oracle(kernel, X, y, noise_var, Xq):
    """Posterior mean/variance via explicit dense inversion, standardized
    internally the same way the estimator standardizes (mean/std of y)."""
    X = np.asarray(X, float)
    y = np.asarray(y, float)
    Xq = np.asarray(Xq, float)
    y_mean = y.mean()
    y_std = y.std() if y.std() > 1e-12 else 1.0
    z = (y - y_mean) / y_std
    K = kernel(X) + (noise_var / y_std**2) * np.eye(len(y))
    K_inv = np.linalg.inv(K)
    Ks = kernel(Xq, X)
    mu_z = Ks @ K_inv @ z
    var_z = kernel.diag_value() - np.sum(Ks * (Ks @ K_inv), axis=1)
    return mu_z * y_std + y_mean, np.maximum(var_z, 0.0) * y_std**2


def dense_lml_oracle(kernel, X, y, noise_var):
    """Log marginal likelihood from the dense determinant/inverse formula."""
    X = np.asarray(X, float)
    y = np.asarray(y, float)
    y_mean = y.mean()
    y_std = y.std() if y.std() > 1e-12 else 1.0
    z = (y - y_mean) / y_std
    K = kernel(X) + (noise_var / y_std**2) * np.eye(len(y))
    sign, logdet = np.linalg.slogdet(K)
    assert sign > 0
    return float(-0.5 * z @ np.linalg.solve(K, z) - 0.5 * logdet
                 - 0.5 * len(z) * np.log(2 * np.pi))


def spread_points(rng, n, d, min_dist=0.05, max_tries=2000):
    """Random unit-cube points with a guaranteed pairwise separation."""
    for _ in range(max_tries):
        X = rng.random((n, d))
        diff = X[:, None, :] - X[None, :, :]
        dist = np.sqrt((diff**2).sum(-1)) + np.eye(n)
        if dist.min() > min_dist:
            return X
    raise AssertionError("could not draw separated points")


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
