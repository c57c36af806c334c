"""Augmented-GP machinery for optimization over multiple information sources.

A per-source GP is kept for every source; cheap-source evaluations whose
model disagrees with the ground-truth model by less than a multiple of the
ground-truth predictive deviation are merged into an augmented training set.
The augmented GP drives a cost- and discrepancy-penalized confidence-bound
acquisition over (source, location) pairs, with a proximity correction that
redirects near-duplicate proposals into a maximum-uncertainty query on the
ground-truth source.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .acquisition import _lcb_values, optimize_acquisition
from .errors import (
    EmptyAugmentedSetError,
    MisoboError,
    ProposalFailureError,
)
from .gp import GaussianProcess, mle_train
from .kernels import make_kernel
from .spaces import latin_hypercube_unit
from .validation import check_unit_points

FROM_GROUND_TRUTH = "from_d1"
RELIABLE = "reliable"


@dataclass
class SourceData:
    """Evaluations collected on one source, in unit-cube coordinates."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.X = check_unit_points(self.X) if len(self.X) else np.zeros((0, 0))
        self.y = np.asarray(self.y, dtype=float).ravel()

    @property
    def n(self):
        return len(self.y)

    def append(self, x, y):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        self.X = x.copy() if self.n == 0 else np.vstack([self.X, x])
        self.y = np.append(self.y, float(y))


@dataclass
class SourceModelSet:
    """Per-source datasets, fitted GPs, and nominal costs.

    Index 0 is source 1, the ground-truth and most expensive source; costs
    must be strictly decreasing.
    """

    data: list
    models: list
    costs: list

    def __post_init__(self):
        if not (len(self.data) == len(self.models) == len(self.costs) >= 1):
            raise ValueError("need one dataset, model, and cost per source")
        costs = [float(c) for c in self.costs]
        if any(c <= 0 for c in costs):
            raise ValueError("source costs must be positive")
        if any(a <= b for a, b in zip(costs, costs[1:])):
            raise ValueError("source costs must be strictly decreasing (source 1 most expensive)")
        self.costs = costs

    @property
    def n_sources(self):
        return len(self.costs)


@dataclass(frozen=True)
class AugmentedRecord:
    """One training record of the augmented GP, with provenance."""

    x: np.ndarray
    y: float
    origin_source: int
    reason: str


@dataclass
class AugmentedDataset:
    """The merged reliable training set and the GP fitted on it."""

    records: list
    model: GaussianProcess = None

    @property
    def size(self):
        return len(self.records)

    @property
    def X(self):
        return np.vstack([r.x for r in self.records])

    @property
    def y(self):
        return np.array([r.y for r in self.records])


@dataclass(frozen=True)
class MisoProposal:
    """Next (source, location) pair to query.

    ``acquisition_value`` is the score of the returned pair under the
    objective that selected it: the cost-penalized confidence bound for an
    uncorrected proposal, the ground-truth predictive deviation after the
    proximity correction fired.
    """

    source: int
    x: np.ndarray
    acquisition_value: float
    corrected: bool = False


def discrepancy(model_a, model_b, X):
    """Absolute gap between two posterior means, pointwise."""
    X = check_unit_points(X)
    return np.abs(model_a.predict(X) - model_b.predict(X))


def select_reliable(models, m):
    """Pick cheap-source records whose model agrees with the ground-truth one.

    A record (x, y) from source z >= 2 qualifies when the mean gap between
    the ground-truth GP and source z's GP at x is strictly below m times the
    ground-truth predictive deviation at x. With m = 0 nothing qualifies.
    """
    if m < 0:
        raise ValueError("threshold multiplier m must be nonnegative")
    g1 = models.models[0]
    selected = []
    for z in range(1, models.n_sources):
        data = models.data[z]
        if data.n == 0:
            continue
        mean1, std1 = g1.predict(data.X, return_std=True)
        gap = np.abs(mean1 - models.models[z].predict(data.X))
        for i in np.nonzero(gap < m * std1)[0]:
            selected.append(
                AugmentedRecord(x=data.X[i].copy(), y=float(data.y[i]),
                                origin_source=z + 1, reason=RELIABLE)
            )
    return selected


def _same_location(a, b):
    return a.shape == b.shape and bool(np.all(a == b))


def build_agp(models, m, kernel="se", noise="fit", n_restarts=10, random_state=None,
              kernel_params=None):
    """Merge ground-truth data with reliable cheap records and fit the AGP.

    Ground-truth records always stay. A reliable record landing exactly on a
    ground-truth location is dropped (the ground-truth value wins), and
    repeated (location, origin) pairs keep their first occurrence, so the
    merged set never exceeds the union of the per-source sets.
    """
    d1 = models.data[0]
    records = [
        AugmentedRecord(x=d1.X[i].copy(), y=float(d1.y[i]), origin_source=1,
                        reason=FROM_GROUND_TRUTH)
        for i in range(d1.n)
    ]
    for rec in select_reliable(models, m):
        if any(_same_location(rec.x, kept.x) and kept.origin_source == 1 for kept in records):
            continue
        if any(_same_location(rec.x, kept.x) and kept.origin_source == rec.origin_source
               for kept in records):
            continue
        records.append(rec)
    if not records:
        raise EmptyAugmentedSetError("no ground-truth data and no reliable records")

    X = np.vstack([r.x for r in records])
    y = np.array([r.y for r in records])
    kernel_params = kernel_params or {}
    if len(records) >= 2:
        model = mle_train(X, y, kernel=kernel, noise=noise, n_restarts=n_restarts,
                          random_state=random_state, **kernel_params)
    else:
        model = GaussianProcess(kernel=make_kernel(kernel, **kernel_params),
                                noise=noise, optimizer=None).fit(X, y)
    return AugmentedDataset(records=records, model=model)


def miso_acquisition_value(agp_model, models, source, X, beta, shift=0.0):
    """Cost- and discrepancy-penalized negated confidence bound, pointwise.

    value = (-(mu_hat - sqrt(beta) sigma_hat) - shift)
            / (c_s * (1 + |mu_hat - mu_s|))

    ``shift`` is normally zero; the numerator-shift option passes the probed
    numerator minimum through it.
    """
    X = check_unit_points(X)
    mean, std = agp_model.predict(X, return_std=True)
    numerator = -_lcb_values(mean, std, beta) - shift
    gap = np.abs(mean - models.models[source - 1].predict(X))
    return numerator / (models.costs[source - 1] * (1.0 + gap))


def _numerator_shift(agp_model, beta, dim, probes=256, random_state=None):
    """Smallest probed numerator value, when negative (for the shift option)."""
    U = latin_hypercube_unit(probes, dim, random_state=random_state)
    mean, std = agp_model.predict(U, return_std=True)
    low = float(np.min(-_lcb_values(mean, std, beta)))
    return min(low, 0.0)


def propose(agp, models, beta, delta, n_starts=None, source_seeds=None,
            sigma_seed=None, shift_numerator=False, maxiter=100):
    """Choose the next (source, location) pair.

    The penalized acquisition is maximized independently per source and the
    best pair wins; value ties break toward the cheaper source, then the
    lower source id. If the winning location falls within squared distance
    ``delta`` of an existing evaluation on the winning source, the proposal
    is replaced by the maximum-deviation point of the ground-truth model on
    source 1. A corrected proposal still within ``delta`` of every
    ground-truth point is refused rather than silently duplicated.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    dim = models.data[0].X.shape[1] if models.data[0].n else agp.records[0].x.shape[0]
    n_src = models.n_sources
    if source_seeds is None:
        source_seeds = [None] * n_src
    shift = 0.0
    if shift_numerator:
        shift = _numerator_shift(agp.model, beta, dim, random_state=sigma_seed)

    candidates = []  # (value, source id, x)
    errors = []
    for s in range(1, n_src + 1):
        def objective(u, s=s):
            return float(miso_acquisition_value(agp.model, models, s, u[None, :],
                                                beta, shift=shift)[0])
        try:
            x_s, v_s = optimize_acquisition(objective, dim, n_starts=n_starts,
                                            random_state=source_seeds[s - 1],
                                            maxiter=maxiter)
        except MisoboError as exc:
            errors.append(f"source {s}: {exc}")
            continue
        candidates.append((v_s, s, x_s))
    if not candidates:
        raise ProposalFailureError("acquisition optimization failed on every source: "
                                   + "; ".join(errors))

    # cheaper source first so it wins ties, then lower id
    candidates.sort(key=lambda c: (models.costs[c[1] - 1], c[1]))
    best_value, best_source, best_x = candidates[0]
    for value, s, x in candidates[1:]:
        if value > best_value:
            best_value, best_source, best_x = value, s, x

    own = models.data[best_source - 1]
    if own.n and np.min(np.sum((own.X - best_x) ** 2, axis=1)) < delta:
        x_c, sigma_value = _corrected_location(models, dim, delta, n_starts,
                                               sigma_seed, maxiter)
        return MisoProposal(source=1, x=x_c, acquisition_value=sigma_value, corrected=True)
    return MisoProposal(source=best_source, x=best_x, acquisition_value=best_value,
                        corrected=False)


def _corrected_location(models, dim, delta, n_starts, sigma_seed, maxiter):
    """Maximum ground-truth predictive deviation, kept clear of existing data.

    The unconstrained maximizer is used when it already respects the
    proximity threshold. Otherwise the best threshold-respecting point of a
    dense probe sweep stands in; only a cube with no clear point left at all
    is refused.
    """
    g1 = models.models[0]
    d1 = models.data[0]

    def sigma1(u):
        return float(g1.predict(u[None, :], return_std=True)[1][0])

    def clear_of_data(x):
        return d1.n == 0 or np.min(np.sum((d1.X - x) ** 2, axis=1)) >= delta

    x_c, value = optimize_acquisition(sigma1, dim, n_starts=n_starts,
                                      random_state=sigma_seed, maxiter=maxiter)
    if clear_of_data(x_c):
        return x_c, value

    if isinstance(sigma_seed, np.random.SeedSequence):
        probe_seed = sigma_seed.spawn(1)[0]
    else:
        probe_seed = np.random.SeedSequence(sigma_seed).spawn(1)[0]
    probes = latin_hypercube_unit(max(1024, 256 * dim), dim, random_state=probe_seed)
    dist2 = np.min(
        np.sum((probes[:, None, :] - d1.X[None, :, :]) ** 2, axis=2), axis=1
    )
    feasible = probes[dist2 >= delta]
    if len(feasible) == 0:
        raise ProposalFailureError(
            "no location clear of existing ground-truth evaluations by the "
            "proximity threshold; the threshold covers the search space"
        )
    _, stds = g1.predict(feasible, return_std=True)
    best = int(np.argmax(stds))
    return feasible[best], float(stds[best])
