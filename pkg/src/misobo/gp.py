"""Gaussian-process regression with Cholesky caching and multi-restart MLE.

The estimator follows the scikit-learn fit/predict contract. Targets are
standardized internally (the zero-mean prior assumption is enforced by
shifting/scaling y), predictions are returned in original units. The noise
variance can be fixed by the caller or fitted jointly with the kernel
hyperparameters.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.linalg
import scipy.optimize
from sklearn.base import BaseEstimator, RegressorMixin, clone

from .errors import IllConditionedKernelError, NumericalInstabilityError
from .kernels import SquaredExponential, make_kernel
from .spaces import latin_hypercube_unit
from .validation import as_vector, check_unit_points

# Fitted-noise box (standardized-output variance units).
NOISE_BOUNDS = (1e-8, 10.0)

# Jitter escalation: base level and number of x10 retries after a failed
# factorization. Rescues near-singular kernel matrices from duplicate or
# near-duplicate training points.
_JITTER_BASE = 1e-10
_JITTER_RETRIES = 6

# Posterior variances in [-_VAR_TOL, 0) are rounding noise and clamp to zero;
# anything more negative signals a genuinely broken factorization.
_VAR_TOL = 1e-10

_LOG_2PI = math.log(2.0 * math.pi)


def _factorize(K, noise_var):
    """Cholesky of K + noise*I with jitter escalation; returns (L, jitter)."""
    n = K.shape[0]
    diag = np.arange(n)
    A = K.copy()
    A[diag, diag] += noise_var
    try:
        return scipy.linalg.cholesky(A, lower=True), 0.0
    except scipy.linalg.LinAlgError:
        pass
    base = max(noise_var, _JITTER_BASE)
    for k in range(_JITTER_RETRIES):
        jitter = base * 10.0**k
        A = K.copy()
        A[diag, diag] += noise_var + jitter
        try:
            return scipy.linalg.cholesky(A, lower=True), jitter
        except scipy.linalg.LinAlgError:
            continue
    raise IllConditionedKernelError(
        f"kernel matrix not positive definite after jitter escalation up to "
        f"{base * 10.0 ** (_JITTER_RETRIES - 1):g}"
    )


def _lml_terms(L, y):
    """Log marginal likelihood pieces given the Cholesky factor and targets."""
    alpha = scipy.linalg.cho_solve((L, True), y)
    lml = -0.5 * float(y @ alpha) - float(np.sum(np.log(np.diag(L)))) - 0.5 * len(y) * _LOG_2PI
    return alpha, lml


class GaussianProcess(RegressorMixin, BaseEstimator):
    """GP regressor over unit-cube inputs.

    Parameters
    ----------
    kernel : Kernel, optional
        Covariance function; defaults to a squared-exponential kernel. The
        instance passed in is never mutated (it is cloned on fit).
    noise : "fit" or float
        Observation-noise variance in output units. "fit" optimizes it by
        MLE within ``NOISE_BOUNDS`` (standardized scale); a float fixes it
        (0.0 gives noise-free interpolation).
    optimizer : "lbfgs" or None
        None skips hyperparameter optimization and fits with the kernel's
        current parameters.
    n_restarts : int
        Multi-start count for the MLE; start points are a Latin Hypercube
        over the log-parameter box.
    random_state : int, SeedSequence, Generator, or None
        Drives restart start-point sampling only.

    An unfitted instance predicts from the prior: zero mean, variance equal
    to the kernel's signal variance.
    """

    def __init__(self, kernel=None, noise="fit", optimizer="lbfgs", n_restarts=10,
                 random_state=None):
        self.kernel = kernel
        self.noise = noise
        self.optimizer = optimizer
        self.n_restarts = n_restarts
        self.random_state = random_state

    # ------------------------------------------------------------------ fit

    def fit(self, X, y):
        X = check_unit_points(X)
        y = as_vector(y, n=X.shape[0])
        if X.shape[0] < 1:
            raise ValueError("fit needs at least one observation")
        if isinstance(self.noise, str):
            if self.noise != "fit":
                raise ValueError("noise must be 'fit' or a nonnegative float")
            fit_noise = True
        else:
            if self.noise < 0:
                raise ValueError("noise variance must be nonnegative")
            fit_noise = False

        self.X_train_ = X
        self.y_train_ = y
        self.y_mean_ = float(np.mean(y))
        std = float(np.std(y))
        self.y_std_ = std if std > 1e-12 else 1.0
        self._z = (y - self.y_mean_) / self.y_std_

        self.kernel_ = clone(self.kernel) if self.kernel is not None else SquaredExponential()
        if fit_noise:
            self.noise_var_ = NOISE_BOUNDS[0]
        else:
            # fixed noise is given in raw output units; standardize it
            self.noise_var_ = float(self.noise) / self.y_std_**2

        if self.optimizer is not None and X.shape[0] >= 2:
            self._optimize_hyperparameters(fit_noise)

        K = self.kernel_(self.X_train_)
        self.L_, self.jitter_ = _factorize(K, self.noise_var_)
        self.alpha_, self.lml_value_ = _lml_terms(self.L_, self._z)
        return self

    def _theta_bounds(self, fit_noise):
        bounds = list(self.kernel_.theta_bounds)
        if fit_noise:
            bounds.append(tuple(np.log(NOISE_BOUNDS)))
        return bounds

    def _split_theta(self, theta, fit_noise):
        k = len(self.kernel_.param_names)
        if fit_noise:
            return theta[:k], float(np.exp(theta[k]))
        return theta, self.noise_var_

    def _neg_lml_and_grad(self, theta, fit_noise):
        kernel = clone(self.kernel_)
        kernel.theta, noise_var = self._split_theta(theta, fit_noise)
        try:
            K = kernel(self.X_train_)
            A = K.copy()
            A[np.diag_indices_from(A)] += noise_var
            L = scipy.linalg.cholesky(A, lower=True)
        except scipy.linalg.LinAlgError:
            return 1e25, np.zeros_like(theta)
        alpha, lml = _lml_terms(L, self._z)
        K_inv = scipy.linalg.cho_solve((L, True), np.eye(len(self._z)))
        M = np.outer(alpha, alpha) - K_inv
        grads = [0.5 * float(np.sum(M * dK)) for dK in kernel.gradient(self.X_train_)]
        if fit_noise:
            grads.append(0.5 * float(np.trace(M)) * noise_var)
        return -lml, -np.asarray(grads)

    def _optimize_hyperparameters(self, fit_noise):
        bounds = self._theta_bounds(fit_noise)
        lo = np.array([b[0] for b in bounds])
        hi = np.array([b[1] for b in bounds])
        starts = lo + latin_hypercube_unit(
            int(self.n_restarts), len(bounds), random_state=self.random_state
        ) * (hi - lo)

        best = None  # (lml, restart index, theta)
        for i, x0 in enumerate(starts):
            res = scipy.optimize.minimize(
                self._neg_lml_and_grad, x0, args=(fit_noise,), jac=True,
                method="L-BFGS-B", bounds=bounds,
            )
            for theta in (res.x, x0):
                value = -self._neg_lml_and_grad(theta, fit_noise)[0]
                if value <= -1e24:  # factorization-failure sentinel
                    continue
                if best is None or value > best[0]:
                    best = (value, i, np.array(theta))
        if best is None:
            raise IllConditionedKernelError("every MLE restart failed to factorize")
        self.kernel_.theta, self.noise_var_ = self._split_theta(best[2], fit_noise)

    # -------------------------------------------------------------- predict

    @property
    def is_fitted(self):
        return hasattr(self, "alpha_")

    def _prior_kernel(self):
        return self.kernel_ if hasattr(self, "kernel_") else (
            self.kernel if self.kernel is not None else SquaredExponential()
        )

    def predict(self, X, return_std=False, return_cov=False):
        """Posterior mean (and std or full covariance) in original y units."""
        if return_std and return_cov:
            raise ValueError("return_std and return_cov are mutually exclusive")
        X = check_unit_points(X)
        if not self.is_fitted:
            kernel = self._prior_kernel()
            mean = np.zeros(X.shape[0])
            if return_cov:
                return mean, kernel(X)
            if return_std:
                return mean, np.full(X.shape[0], math.sqrt(kernel.diag_value()))
            return mean

        Ks = self.kernel_(X, self.X_train_)
        mean_z = Ks @ self.alpha_
        mean = mean_z * self.y_std_ + self.y_mean_
        if not (return_std or return_cov):
            return mean

        V = scipy.linalg.solve_triangular(self.L_, Ks.T, lower=True)
        if return_cov:
            cov_z = self.kernel_(X) - V.T @ V
            diag = np.diag_indices_from(cov_z)
            cov_z[diag] = self._clamp_var(cov_z[diag])
            return mean, cov_z * self.y_std_**2
        var_z = self._clamp_var(self.kernel_.diag_value() - np.sum(V * V, axis=0))
        return mean, np.sqrt(var_z) * self.y_std_

    @staticmethod
    def _clamp_var(var):
        var = np.atleast_1d(np.asarray(var, dtype=float))
        worst = var.min() if var.size else 0.0
        if worst < -_VAR_TOL:
            raise NumericalInstabilityError(
                f"posterior variance {worst:g} below -{_VAR_TOL:g}"
            )
        return np.maximum(var, 0.0)

    # ---------------------------------------------------- likelihood access

    def log_marginal_likelihood(self, theta=None, eval_gradient=False):
        """LML of the fitted (or a supplied) log-hyperparameter vector.

        The vector layout is the kernel's theta, plus a trailing log noise
        variance entry when noise is fitted.
        """
        if not self.is_fitted:
            raise ValueError("model is not fitted")
        fit_noise = isinstance(self.noise, str)
        if theta is None:
            if not eval_gradient:
                return self.lml_value_  # matches the fitted factorization
            theta = np.array(self.kernel_.theta.tolist()
                             + ([np.log(self.noise_var_)] if fit_noise else []))
        value, grad = self._neg_lml_and_grad(np.asarray(theta, float), fit_noise)
        if eval_gradient:
            return -value, -grad
        return -value

    def sample_y(self, X, n_samples=1, random_state=None):
        """Draw joint samples from the prior (unfitted) or posterior (fitted).

        Uses an eigendecomposition with negative eigenvalues clipped to zero,
        so noise-free posteriors reproduce their training values.
        """
        X = check_unit_points(X)
        rng = np.random.default_rng(random_state)
        if self.is_fitted:
            mean, cov = self.predict(X, return_cov=True)
        else:
            mean = np.zeros(X.shape[0])
            cov = self._prior_kernel()(X)
        w, V = scipy.linalg.eigh(cov)
        root = V * np.sqrt(np.maximum(w, 0.0))
        z = rng.standard_normal((X.shape[0], n_samples))
        return mean[:, None] + root @ z


def mle_train(X, y, kernel="se", noise="fit", n_restarts=10, random_state=None,
              **kernel_params):
    """Fit a GP by multi-restart maximum likelihood; needs n >= 2 points."""
    X = check_unit_points(X)
    if X.shape[0] < 2:
        raise ValueError("mle_train needs at least two observations")
    if n_restarts < 1:
        raise ValueError("mle_train needs at least one restart")
    gp = GaussianProcess(
        kernel=make_kernel(kernel, **kernel_params), noise=noise,
        optimizer="lbfgs", n_restarts=n_restarts, random_state=random_state,
    )
    return gp.fit(X, y)
