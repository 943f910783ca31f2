import numpy as np
import pytest

from dimvar.paths import SamplePath


def random_dyadic_path(rng, n, rho=10, lo_exp=-2, hi_exp=3, complex_values=True):
    """Random strictly increasing dyadic path with n samples in [2**lo, 2**hi)."""
    lo = 1 << (lo_exp + rho)
    hi = 1 << (hi_exp + rho)
    nums = np.unique(rng.integers(lo, hi, size=2 * n))[:n]
    while nums.size < n:
        extra = np.unique(rng.integers(lo, hi, size=2 * n))
        nums = np.unique(np.concatenate([nums, extra]))[:n]
    vals = rng.standard_normal(n)
    if complex_values:
        vals = vals + 1j * rng.standard_normal(n)
    return SamplePath(nums.astype(np.int64), rho, vals)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
