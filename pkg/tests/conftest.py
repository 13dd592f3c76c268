import numpy as np
import pytest


def make_correlated_instance(rng, d_in, n_cols=None, rank=3, noise=0.1):
    """Random (w, X, G) with low-rank feature correlation."""
    if n_cols is None:
        n_cols = 2 * d_in
    factors = rng.standard_normal((d_in, rank))
    latent = rng.standard_normal((rank, n_cols))
    x = factors @ latent + noise * rng.standard_normal((d_in, n_cols))
    g = x @ x.T
    g = (g + g.T) / 2.0
    w = rng.standard_normal(d_in)
    return w, x, g


def random_feasible_mask(rng, d_in, prune_count):
    mask = np.ones(d_in)
    mask[rng.choice(d_in, size=prune_count, replace=False)] = 0.0
    return mask


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
