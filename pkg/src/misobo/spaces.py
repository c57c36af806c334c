"""Search-space definitions, unit-cube normalization, and Latin Hypercube designs.

Every optimizer-internal quantity (GP training inputs, acquisition
optimization, distance thresholds) lives in the normalized unit cube; raw
coordinates appear only when querying a source or writing traces.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BoundsError
from .validation import as_point_matrix, check_unit_points

# Relative slack when checking raw bounds, so that from_internal round-trips
# of boundary points do not trip the bounds check.
_BOUNDS_RTOL = 1e-9


@dataclass(frozen=True)
class Dimension:
    """One box-bounded coordinate, optionally searched on a log10 scale."""

    name: str
    lower: float
    upper: float
    log10: bool = False

    def __post_init__(self):
        if not (np.isfinite(self.lower) and np.isfinite(self.upper)):
            raise ValueError(f"dimension {self.name!r}: bounds must be finite")
        if not self.lower < self.upper:
            raise ValueError(f"dimension {self.name!r}: lower must be < upper")
        if self.log10 and self.lower <= 0:
            raise ValueError(f"dimension {self.name!r}: log10 scaling requires lower > 0")


class SearchSpace:
    """Box-bounded d-dimensional search space with per-dimension log scaling."""

    def __init__(self, dims):
        dims = tuple(dims)
        if len(dims) == 0:
            raise ValueError("a search space needs at least one dimension")
        if not all(isinstance(dim, Dimension) for dim in dims):
            raise TypeError("dims must be Dimension instances")
        self.dims = dims
        self._lo = np.array([np.log10(d.lower) if d.log10 else d.lower for d in dims])
        self._hi = np.array([np.log10(d.upper) if d.log10 else d.upper for d in dims])
        self._log = np.array([d.log10 for d in dims])
        self._raw_lo = np.array([d.lower for d in dims])
        self._raw_hi = np.array([d.upper for d in dims])

    @property
    def d(self):
        return len(self.dims)

    @property
    def names(self):
        return [dim.name for dim in self.dims]

    def to_internal(self, x):
        """Map raw coordinates into the unit cube.

        Log-scaled dimensions pass through log10 before the affine map, so a
        power-of-ten grid in raw units becomes uniform internally.
        """
        x = as_point_matrix(x, d=self.d, name="x")
        squeeze = x.shape[0] == 1
        for j, dim in enumerate(self.dims):
            lo_slack = abs(dim.lower) * _BOUNDS_RTOL
            hi_slack = abs(dim.upper) * _BOUNDS_RTOL
            bad = (x[:, j] < dim.lower - lo_slack) | (x[:, j] > dim.upper + hi_slack)
            if np.any(bad):
                val = x[bad, j][0]
                raise BoundsError(
                    f"coordinate {val!r} outside [{dim.lower}, {dim.upper}] "
                    f"for dimension {dim.name!r}"
                )
        x = np.clip(x, self._raw_lo, self._raw_hi)
        scaled = np.where(self._log, np.log10(np.where(self._log, x, 1.0)), x)
        u = (scaled - self._lo) / (self._hi - self._lo)
        u = np.clip(u, 0.0, 1.0)
        return u[0] if squeeze else u

    def from_internal(self, u):
        """Inverse of :meth:`to_internal`."""
        u = check_unit_points(u, d=self.d, name="u")
        squeeze = u.shape[0] == 1
        scaled = self._lo + u * (self._hi - self._lo)
        x = np.where(self._log, 10.0 ** scaled, scaled)
        return x[0] if squeeze else x

    def latin_hypercube(self, n, random_state=None, centered=False):
        """Sample ``n`` unit-cube points, one per stratum in every dimension."""
        return latin_hypercube_unit(n, self.d, random_state=random_state, centered=centered)


def latin_hypercube_unit(n, d, random_state=None, centered=False):
    """Latin Hypercube design on [0, 1]^d.

    Each dimension is split into ``n`` equal strata; a random permutation
    assigns exactly one point per stratum, jittered uniformly within it
    (or centered when ``centered`` is set). Deterministic for a fixed seed.
    """
    if n < 1:
        raise ValueError("latin hypercube needs n >= 1")
    if d < 1:
        raise ValueError("latin hypercube needs d >= 1")
    rng = np.random.default_rng(random_state)
    u = np.empty((n, d))
    for j in range(d):
        perm = rng.permutation(n)
        offset = 0.5 if centered else rng.random(n)
        u[:, j] = (perm + offset) / n
    return u
