import pytest

from strong_epi.grid import Grid, MixtureSpec, default_grid, gaussian_density, mixture_density

BIMODAL = MixtureSpec((0.5, 0.5), (-2.0, 2.0), (1.0, 1.0))


@pytest.fixture
def std_normal():
    return gaussian_density(Grid(-10.0, 10.0, 2001), 0.0, 1.0)


@pytest.fixture
def bimodal():
    return mixture_density(default_grid(BIMODAL), BIMODAL)
