"""Stationary covariance functions with gradients in log-hyperparameter space.

All kernels are isotropic over unit-cube distances and carry a fitted signal
variance on top of the unit-amplitude correlation form, so k(x, x) equals
``signal_variance`` exactly. Gradients are taken with respect to the log of
each hyperparameter, which is the parameterization the marginal-likelihood
optimizer works in.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.base import BaseEstimator

from .validation import as_point_matrix

# Log-space boxes used both as optimizer bounds and as the region MLE
# restarts are drawn from. Chosen for unit-cube inputs: below 1e-3 the
# kernel matrix is numerically diagonal, above 10 it is numerically constant.
LENGTH_SCALE_BOUNDS = (1e-3, 10.0)
SIGNAL_VARIANCE_BOUNDS = (1e-4, 1e3)
RQ_ALPHA_BOUNDS = (1e-2, 1e2)


def _sq_dists(X, X2):
    if X2 is None:
        X2 = X
    return cdist(X, X2, "sqeuclidean")


class Kernel(BaseEstimator):
    """Base class; subclasses implement the correlation form and its gradient.

    Each hyperparameter has a matching ``<name>_bounds`` attribute used by
    the likelihood optimizer (log-space box); the module-level defaults suit
    unit-cube inputs and can be overridden per instance.
    """

    #: names of the log-parameterized hyperparameters, in theta order
    param_names = ("length_scale", "signal_variance")

    def __call__(self, X, X2=None):
        """Covariance matrix between two point sets (n, d) x (m, d)."""
        X = as_point_matrix(X)
        if X.shape[0] == 0:
            raise ValueError("kernel matrix needs at least one point")
        if X2 is not None:
            X2 = as_point_matrix(X2, d=X.shape[1], name="X2")
            if X2.shape[0] == 0:
                raise ValueError("kernel matrix needs at least one point")
        return self._k(_sq_dists(X, X2))

    def diag_value(self):
        """k(x, x), identical for every x under a stationary kernel."""
        return self.signal_variance

    def gradient(self, X):
        """Matrices dK/d(log p) for each hyperparameter, in ``param_names`` order."""
        X = as_point_matrix(X)
        return self._grad(_sq_dists(X, None))

    @property
    def theta(self):
        return np.log([getattr(self, name) for name in self.param_names])

    @theta.setter
    def theta(self, value):
        value = np.asarray(value, dtype=float)
        if value.shape != (len(self.param_names),):
            raise ValueError(f"theta must have length {len(self.param_names)}")
        for name, v in zip(self.param_names, np.exp(value)):
            setattr(self, name, float(v))

    @property
    def theta_bounds(self):
        return [tuple(np.log(getattr(self, f"{name}_bounds")))
                for name in self.param_names]

    def _validate(self):
        for name in self.param_names:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
            lo, hi = getattr(self, f"{name}_bounds")
            if not 0 < lo < hi:
                raise ValueError(f"{name}_bounds must be positive and increasing")


class SquaredExponential(Kernel):
    """Infinitely smooth exponentiated-quadratic kernel."""

    def __init__(self, length_scale=0.5, signal_variance=1.0,
                 length_scale_bounds=LENGTH_SCALE_BOUNDS,
                 signal_variance_bounds=SIGNAL_VARIANCE_BOUNDS):
        self.length_scale = length_scale
        self.signal_variance = signal_variance
        self.length_scale_bounds = length_scale_bounds
        self.signal_variance_bounds = signal_variance_bounds

    def _k(self, d2):
        self._validate()
        return self.signal_variance * np.exp(-d2 / (2.0 * self.length_scale**2))

    def _grad(self, d2):
        K = self._k(d2)
        return [K * d2 / self.length_scale**2, K.copy()]


class Matern32(Kernel):
    """Once-differentiable Matérn kernel (half-integer order 3/2)."""

    def __init__(self, length_scale=0.5, signal_variance=1.0,
                 length_scale_bounds=LENGTH_SCALE_BOUNDS,
                 signal_variance_bounds=SIGNAL_VARIANCE_BOUNDS):
        self.length_scale = length_scale
        self.signal_variance = signal_variance
        self.length_scale_bounds = length_scale_bounds
        self.signal_variance_bounds = signal_variance_bounds

    def _k(self, d2):
        self._validate()
        a = np.sqrt(3.0 * d2) / self.length_scale
        return self.signal_variance * (1.0 + a) * np.exp(-a)

    def _grad(self, d2):
        self._validate()
        a = np.sqrt(3.0 * d2) / self.length_scale
        e = np.exp(-a)
        return [self.signal_variance * a**2 * e, self.signal_variance * (1.0 + a) * e]


class Matern52(Kernel):
    """Twice-differentiable Matérn kernel (half-integer order 5/2)."""

    def __init__(self, length_scale=0.5, signal_variance=1.0,
                 length_scale_bounds=LENGTH_SCALE_BOUNDS,
                 signal_variance_bounds=SIGNAL_VARIANCE_BOUNDS):
        self.length_scale = length_scale
        self.signal_variance = signal_variance
        self.length_scale_bounds = length_scale_bounds
        self.signal_variance_bounds = signal_variance_bounds

    def _k(self, d2):
        self._validate()
        a = np.sqrt(5.0 * d2) / self.length_scale
        return self.signal_variance * (1.0 + a + a**2 / 3.0) * np.exp(-a)

    def _grad(self, d2):
        self._validate()
        a = np.sqrt(5.0 * d2) / self.length_scale
        e = np.exp(-a)
        return [
            self.signal_variance * (a**2 * (1.0 + a) / 3.0) * e,
            self.signal_variance * (1.0 + a + a**2 / 3.0) * e,
        ]


class RationalQuadratic(Kernel):
    """Scale mixture of squared-exponential kernels; tends to SE as alpha grows."""

    param_names = ("length_scale", "signal_variance", "alpha")

    def __init__(self, length_scale=0.5, signal_variance=1.0, alpha=1.0,
                 length_scale_bounds=LENGTH_SCALE_BOUNDS,
                 signal_variance_bounds=SIGNAL_VARIANCE_BOUNDS,
                 alpha_bounds=RQ_ALPHA_BOUNDS):
        self.length_scale = length_scale
        self.signal_variance = signal_variance
        self.alpha = alpha
        self.length_scale_bounds = length_scale_bounds
        self.signal_variance_bounds = signal_variance_bounds
        self.alpha_bounds = alpha_bounds

    def _base(self, d2):
        return 1.0 + d2 / (2.0 * self.alpha * self.length_scale**2)

    def _k(self, d2):
        self._validate()
        return self.signal_variance * self._base(d2) ** (-self.alpha)

    def _grad(self, d2):
        self._validate()
        u = self._base(d2)
        K = self.signal_variance * u ** (-self.alpha)
        d_log_l = self.signal_variance * u ** (-self.alpha - 1.0) * d2 / self.length_scale**2
        d_log_alpha = K * (-self.alpha * np.log(u) + d2 / (2.0 * self.length_scale**2 * u))
        return [d_log_l, K.copy(), d_log_alpha]


KERNEL_FAMILIES = {
    "se": SquaredExponential,
    "matern32": Matern32,
    "matern52": Matern52,
    "rq": RationalQuadratic,
}


def make_kernel(family, **params):
    """Instantiate a kernel by family name ('se', 'matern32', 'matern52', 'rq')."""
    try:
        cls = KERNEL_FAMILIES[family]
    except KeyError:
        raise ValueError(f"unknown kernel family {family!r}; known: {sorted(KERNEL_FAMILIES)}")
    return cls(**params)
