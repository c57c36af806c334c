"""Single-source acquisition functions and the multi-start inner optimizer.

Everything here scores points in the unit cube and works in original
objective units. The inner optimizer maximizes an arbitrary scalar field
with bounded quasi-Newton runs from a Latin Hypercube of start points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.optimize
from scipy.stats import norm

from .errors import ObjectiveEvaluationError
from .spaces import latin_hypercube_unit
from .validation import check_unit_points


@dataclass(frozen=True)
class BetaSchedule:
    """Exploration weight for the confidence-bound acquisition.

    The default mode grows the weight logarithmically with the evaluation
    count, the standard practical schedule for a no-regret confidence bound;
    ``constant`` pins it.
    """

    dimension: int
    mode: str = "srinivas_practical"
    delta_conf: float = 0.05
    constant_value: float = 4.0

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if self.mode not in ("srinivas_practical", "constant"):
            raise ValueError(f"unknown beta schedule mode {self.mode!r}")
        if not 0.0 < self.delta_conf < 1.0:
            raise ValueError("delta_conf must be in (0, 1)")
        if self.constant_value <= 0.0:
            raise ValueError("constant_value must be positive")

    def beta(self, n):
        """Weight after ``n`` evaluations (n >= 1)."""
        if n < 1:
            raise ValueError("beta is defined for n >= 1")
        if self.mode == "constant":
            return self.constant_value
        return 2.0 * math.log(self.dimension * n**2 * math.pi**2 / (6.0 * self.delta_conf))


def _lcb_values(mean, std, beta):
    # shared expression so every caller computes bit-identical values
    return mean - math.sqrt(beta) * std


def lcb(gp, X, beta):
    """Lower confidence bound mu - sqrt(beta) * sigma; lower is better."""
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    mean, std = gp.predict(check_unit_points(X), return_std=True)
    return _lcb_values(mean, std, beta)


def probability_of_improvement(gp, X, best_y, xi=0.0):
    """P(f(x) improves on the incumbent by at least xi), for minimization.

    At zero predictive deviation this degenerates to an indicator on the
    mean strictly beating ``best_y - xi``.
    """
    if xi < 0:
        raise ValueError("xi must be nonnegative")
    mean, std = gp.predict(check_unit_points(X), return_std=True)
    imp = best_y - mean - xi
    out = np.where(imp > 0.0, 1.0, 0.0)
    positive = std > 0.0
    out[positive] = norm.cdf(imp[positive] / std[positive])
    return out


def expected_improvement(gp, X, best_y, xi=0.0):
    """E[max(best_y - xi - f(x), 0)] under the posterior; zero where sigma is."""
    if xi < 0:
        raise ValueError("xi must be nonnegative")
    mean, std = gp.predict(check_unit_points(X), return_std=True)
    out = np.zeros(len(mean))
    positive = std > 0.0
    imp = best_y - mean[positive] - xi
    z = imp / std[positive]
    out[positive] = imp * norm.cdf(z) + std[positive] * norm.pdf(z)
    return np.maximum(out, 0.0)


def optimize_acquisition(objective, dim, n_starts=None, random_state=None, maxiter=100):
    """Maximize a scalar field over the unit cube by multi-start local search.

    Parameters
    ----------
    objective : callable
        Maps a (dim,) point to a float. Non-finite returns abort the search.
    n_starts : int, optional
        Defaults to 10 * dim. Start points come from a seeded Latin
        Hypercube; ties between local optima break toward the lowest start
        index, so results are reproducible.

    Returns
    -------
    (x_best, value) with x_best inside the closed unit cube.
    """
    if n_starts is None:
        n_starts = 10 * dim
    if n_starts < 1:
        raise ValueError("n_starts must be >= 1")

    def checked(x):
        value = float(objective(x))
        if not math.isfinite(value):
            raise ObjectiveEvaluationError(
                f"objective returned {value!r} at {x.tolist()}", point=np.array(x)
            )
        return value

    starts = latin_hypercube_unit(n_starts, dim, random_state=random_state)
    bounds = [(0.0, 1.0)] * dim
    best_x, best_value = None, -math.inf
    for x0 in starts:
        res = scipy.optimize.minimize(
            lambda x: -checked(x), x0, method="L-BFGS-B", bounds=bounds,
            options={"maxiter": maxiter},
        )
        x_loc = np.clip(res.x, 0.0, 1.0)
        value = checked(x_loc)
        if value > best_value:
            best_x, best_value = x_loc, value
    return best_x, best_value
