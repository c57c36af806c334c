"""Synthetic label-last CSV datasets shaped like the target workload."""

import csv

import numpy as np
import pytest

# class counts of the real telescope dataset the adapter targets
FULL_COUNTS = (12332, 6688)


def write_dataset(path, n_majority, n_minority, seed=0):
    rng = np.random.default_rng(seed)
    Xg = rng.normal(0.45, 0.16, (n_majority, 10))
    Xh = rng.normal(0.55, 0.16, (n_minority, 10))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in np.clip(Xg, 0, 1):
            writer.writerow([f"{v:.6f}" for v in row] + ["g"])
        for row in np.clip(Xh, 0, 1):
            writer.writerow([f"{v:.6f}" for v in row] + ["h"])
    return path


@pytest.fixture(scope="session")
def magic_shaped_csv(tmp_path_factory):
    """Full-size stand-in: the real class counts, synthetic features."""
    path = tmp_path_factory.mktemp("data") / "magic_shaped.csv"
    return str(write_dataset(path, *FULL_COUNTS, seed=1))


@pytest.fixture(scope="session")
def medium_csv(tmp_path_factory):
    """3000 rows at the same class ratio; big enough for cost ordering."""
    path = tmp_path_factory.mktemp("data") / "medium.csv"
    n_g = int(round(3000 * FULL_COUNTS[0] / sum(FULL_COUNTS)))
    return str(write_dataset(path, n_g, 3000 - n_g, seed=2))


@pytest.fixture(scope="session")
def small_csv(tmp_path_factory):
    """600 rows; both sources evaluate quickly for protocol round-trips."""
    path = tmp_path_factory.mktemp("data") / "small.csv"
    n_g = int(round(600 * FULL_COUNTS[0] / sum(FULL_COUNTS)))
    return str(write_dataset(path, n_g, 600 - n_g, seed=3))
