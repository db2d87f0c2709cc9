import numpy as np
import pytest

from sphereq import SpectralCoeffs, make_grid, make_operator, sht_inverse


@pytest.fixture(scope="session")
def grid32():
    return make_grid(32, 64)


@pytest.fixture(scope="session")
def op32(grid32):
    return make_operator(grid32, "spectral")


@pytest.fixture(scope="session")
def fd32(grid32):
    return make_operator(grid32, "finite-difference")


def random_band_limited(grid, degree_cap, rng, scale=1.0):
    """Field synthesized from random harmonic coefficients up to degree_cap."""
    arr = np.zeros((degree_cap + 1, 2 * degree_cap + 1))
    for l in range(degree_cap + 1):
        for m in range(-l, l + 1):
            arr[l, degree_cap + m] = scale * rng.standard_normal()
    return sht_inverse(SpectralCoeffs(degree_cap, arr), grid)
