import numpy as np
import pytest

from rvqr.measures import Dataset, center_covariates, make_rank_grid


def random_instance(rng, I=5, J=12, N=2, d=1):
    """Small centered dataset plus matching rank grid."""
    data = center_covariates(Dataset(
        X=rng.standard_normal((J, N)),
        Y=rng.standard_normal((J, d)),
        nu=np.full(J, 1.0 / J),
        x_mean=np.zeros(N),
    ))
    n = I if d == 1 else max(2, round(I ** (1.0 / d)))
    grid = make_rank_grid(d, n)
    return data, grid


@pytest.fixture
def rng():
    return np.random.default_rng(0)
