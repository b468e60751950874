#!/usr/bin/env python3
"""
Test Spectral Core
Verify transforms, derivatives, the truncation filter and regridding on 1D and 2D grids
"""

import math

import numpy as np
import pytest

from chaostat.spectral.fields import FilterSpec, GridSpec, RealField, SpectralField
from chaostat.spectral.transforms import (
    apply_filter,
    dealias_mask,
    forward_transform,
    inverse_transform,
    resample,
    spectral_derivative,
)
from chaostat.utils.errors import FilterError, GridError, HermitianSymmetryError, NonFiniteError


def random_field(grid: GridSpec, seed: int = 0) -> RealField:
    return RealField(grid, np.random.default_rng(seed).standard_normal(grid.shape))


@pytest.mark.parametrize("dim", [1, 2])
def test_roundtrip_and_parseval(dim):
    grid = GridSpec(dim, 32, 2.0 * math.pi)
    u = random_field(grid)
    s = forward_transform(u)
    back = inverse_transform(s)
    assert np.max(np.abs(back.values - u.values)) < 1e-12
    assert abs(np.sum(np.abs(s.coeffs) ** 2) - u.mean_square()) < 1e-12


def test_constant_field_has_only_the_mean_mode():
    grid = GridSpec(1, 16, 3.0)
    s = forward_transform(RealField(grid, np.full(grid.shape, 2.5)))
    assert abs(s.coefficient(0) - 2.5) < 1e-14
    assert np.max(np.abs(s.coeffs[1:])) < 1e-14


def test_derivative_of_sine():
    grid = GridSpec(1, 64, 6.0 * math.pi)
    (x,) = grid.coordinates()
    q = 2.0 * math.pi * 3 / grid.length
    u = RealField(grid, np.sin(q * x))
    du = inverse_transform(spectral_derivative(forward_transform(u), 1))
    assert np.max(np.abs(du.values - q * np.cos(q * x))) < 1e-11


def test_hermitian_violation_is_rejected():
    grid = GridSpec(1, 16)
    coeffs = np.zeros(grid.shape, dtype=np.complex128)
    coeffs[1] = 1.0
    with pytest.raises(HermitianSymmetryError):
        inverse_transform(SpectralField(grid, coeffs))


def test_non_finite_samples_are_rejected():
    grid = GridSpec(1, 8)
    values = np.zeros(grid.shape)
    values[3] = np.nan
    with pytest.raises(NonFiniteError):
        forward_transform(RealField(grid, values))


def test_grid_validation():
    with pytest.raises(GridError):
        GridSpec(1, 12)
    with pytest.raises(GridError):
        GridSpec(3, 16)
    with pytest.raises(FilterError):
        FilterSpec(9, GridSpec(1, 16))


def test_dealias_mask_keeps_two_thirds():
    assert int(dealias_mask(GridSpec(1, 32)).sum()) == 21
    assert int(dealias_mask(GridSpec(2, 32)).sum()) == 21 * 21


@pytest.mark.parametrize("dim", [1, 2])
def test_filter_keeps_low_modes_and_is_idempotent(dim):
    fine = GridSpec(dim, 64, 2.0 * math.pi)
    coarse = fine.with_n(16)
    spec = FilterSpec(5, coarse)
    u = random_field(fine, seed=3)

    bar = apply_filter(u, spec)
    assert isinstance(bar, RealField)
    assert bar.grid == coarse

    u_hat = forward_transform(u)
    bar_hat = forward_transform(bar)
    mode = (3,) if dim == 1 else (-2, 5)
    assert abs(bar_hat.coefficient(*mode) - u_hat.coefficient(*mode)) < 1e-12
    outside = (6,) if dim == 1 else (6, 1)
    assert abs(bar_hat.coefficient(*outside)) < 1e-14

    again = apply_filter(bar, spec)
    assert np.max(np.abs(again.values - bar.values)) < 1e-12


def test_filter_returns_the_kind_it_was_given():
    fine = GridSpec(1, 32)
    spec = FilterSpec(4, fine.with_n(16))
    s = forward_transform(random_field(fine))
    assert isinstance(apply_filter(s, spec), SpectralField)


def test_filter_preserves_constants():
    fine = GridSpec(2, 32, 4.0)
    spec = FilterSpec(3, fine.with_n(8))
    out = apply_filter(RealField(fine, np.full(fine.shape, -1.25)), spec)
    assert np.max(np.abs(out.values + 1.25)) < 1e-14


def test_filter_cutoff_above_source_nyquist():
    source = GridSpec(1, 8)
    with pytest.raises(FilterError):
        apply_filter(random_field(source), FilterSpec(6, GridSpec(1, 16)))


def test_resample_band_limited_field_both_ways():
    coarse = GridSpec(1, 16, 5.0)
    fine = coarse.with_n(64)
    (x,) = coarse.coordinates()
    q = 2.0 * math.pi / coarse.length
    u = RealField(coarse, np.cos(2 * q * x) + 0.3 * np.sin(5 * q * x))
    up = resample(u, fine)
    (xf,) = fine.coordinates()
    assert np.max(np.abs(up.values - (np.cos(2 * q * xf) + 0.3 * np.sin(5 * q * xf)))) < 1e-12
    down = resample(up, coarse)
    assert np.max(np.abs(down.values - u.values)) < 1e-12


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
