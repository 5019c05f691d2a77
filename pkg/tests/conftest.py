import numpy as np
import pytest

from nlkg.grid import Field, GridSpec


@pytest.fixture
def grid2d():
    return GridSpec(d=2, n=64, box_length=8.0)


@pytest.fixture
def grid1d():
    return GridSpec(d=1, n=256, box_length=8.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_field(grid: GridSpec, rng, band_limit_frac: float = 0.33) -> Field:
    """Seeded random field, band-limited to avoid Nyquist edge effects."""
    vals = rng.standard_normal(grid.shape)
    F = np.fft.fftn(vals)
    from nlkg.grid import wavenumber_magnitude

    mag = wavenumber_magnitude(grid)
    F[mag > band_limit_frac * grid.max_wavenumber] = 0.0
    out = np.fft.ifftn(F).real
    return Field(grid, np.ascontiguousarray(out / np.max(np.abs(out))))


def cosine_field(grid: GridSpec, k_int) -> Field:
    """cos(k . x) for an on-grid integer mode vector."""
    from nlkg.grid import axis_coordinates

    k = 2.0 * np.pi / grid.box_length * np.asarray(k_int, dtype=float)
    phase = np.zeros(grid.shape)
    for ax, x in enumerate(axis_coordinates(grid)):
        phase = phase + k[ax] * x
    return Field(grid, np.cos(phase))
