#!/usr/bin/env python3
"""
Test Dynamics
Verify the KS ETDRK4 stepper against exact and Galerkin references, and the NS split step on
an exact decaying vortex
"""

import math

import numpy as np
import pytest

from chaostat.dynamics.initial import random_initial_condition
from chaostat.dynamics.kuramoto import (
    KsEtdrk4Stepper,
    check_state,
    ks_galerkin_integrate,
    ks_galerkin_rhs,
    ks_integrate,
    ks_linear_symbol,
    ks_rhs,
    modes_to_spectral,
    spectral_to_modes,
)
from chaostat.dynamics.navier_stokes import ns_integrate, ns_rhs, velocity_from_vorticity
from chaostat.dynamics.params import KsParams, NsParams, SolverConfig
from chaostat.spectral.fields import GridSpec, RealField
from chaostat.spectral.transforms import fft_forward, fft_inverse, forward_transform
from chaostat.utils.errors import GridError, NonZeroMeanError, SolverBlowUpError

KS = KsParams(nu=0.01, length=6.0 * math.pi)


def test_linear_step_is_exact():
    p = KsParams(nu=0.01, length=6.0 * math.pi, nonlinear=False)
    grid = GridSpec(1, 64, p.length)
    u0 = random_initial_condition(grid, seed=1, n_modes=20)
    dt = 0.01
    v0 = fft_forward(u0.values)
    v1 = KsEtdrk4Stepper(grid, dt, p).step(v0)
    expected = np.exp(ks_linear_symbol(grid, p.nu) * dt) * v0
    assert np.max(np.abs(v1 - expected)) <= 1e-12 * max(1.0, np.max(np.abs(expected)))


def _ks_state_after(grid: GridSpec, u0: RealField, dt: float, t_end: float) -> np.ndarray:
    traj = ks_integrate(u0, SolverConfig(grid, t_end, dt=dt, record_every=int(round(t_end / dt))), KS)
    return traj.values[-1]


def test_etdrk4_is_fourth_order():
    grid = GridSpec(1, 64, KS.length)
    u0 = random_initial_condition(grid, seed=2, n_modes=4, amplitude=0.5)
    reference = _ks_state_after(grid, u0, 0.02 / 32, 1.0)
    steps = [0.02, 0.01, 0.005]
    errors = [np.max(np.abs(_ks_state_after(grid, u0, dt, 1.0) - reference)) for dt in steps]
    order = np.polyfit(np.log(steps), np.log(errors), 1)[0]
    assert order >= 3.8, f"observed order {order:.2f} from errors {errors}"


def test_spectral_rhs_matches_galerkin_modes():
    grid = GridSpec(1, 64, KS.length)
    n_modes = 8
    u = random_initial_condition(grid, seed=4, n_modes=n_modes)
    s = forward_transform(u)
    z = spectral_to_modes(s, n_modes)
    spectral = spectral_to_modes(ks_rhs(s, KS), n_modes)
    assert np.max(np.abs(spectral - ks_galerkin_rhs(z, KS, n_modes))) < 1e-10


def test_integrated_state_matches_galerkin():
    # on n = 32 the dealiased solver keeps exactly |k| <= 10 and never aliases
    grid = GridSpec(1, 32, KS.length)
    n_modes = 10
    u0 = random_initial_condition(grid, seed=5, n_modes=8, amplitude=0.5)
    z0 = spectral_to_modes(forward_transform(u0), n_modes)
    dt = 1e-4
    spectral = _ks_state_after(grid, u0, dt, 0.1)
    galerkin = ks_galerkin_integrate(z0, dt, 0.1, KS)
    oracle = fft_inverse(modes_to_spectral(galerkin, grid).coeffs)
    assert np.max(np.abs(spectral - oracle)) < 1e-8


def test_ks_integrate_records_on_schedule():
    grid = GridSpec(1, 32, KS.length)
    u0 = random_initial_condition(grid, seed=6)
    traj = ks_integrate(u0, SolverConfig(grid, 0.5, dt=0.01, record_every=10), KS)
    assert np.allclose(traj.times, np.arange(6) * 0.1)
    assert np.array_equal(traj.values[0], u0.values)
    assert traj.provenance == "FRS"


def test_ks_rejects_wrong_domain():
    grid = GridSpec(1, 32, 2.0 * math.pi)
    with pytest.raises(GridError):
        KsEtdrk4Stepper(grid, 0.01, KS)


def test_blow_up_guard():
    grid = GridSpec(1, 16)
    coeffs = fft_forward(np.full(grid.shape, 2e6))
    with pytest.raises(SolverBlowUpError) as info:
        check_state(coeffs, 1.5, 30)
    assert info.value.step == 30
    with pytest.raises(SolverBlowUpError):
        check_state(np.array([np.nan, 0.0]), 0.0, 1)


def _taylor_green(grid: GridSpec) -> RealField:
    x, y = grid.coordinates()
    return RealField(grid, 2.0 * np.sin(x) * np.sin(y))


def test_taylor_green_decays_exactly():
    p = NsParams(re=100.0, forcing_on=False)
    grid = GridSpec(2, 64, p.length)
    w0 = _taylor_green(grid)
    traj = ns_integrate(w0, SolverConfig(grid, 1.0, dt=0.01, record_dt=0.5), p)
    assert np.allclose(traj.times, [0.0, 0.5, 1.0])
    for t, w in zip(traj.times, traj.values):
        assert np.max(np.abs(w - w0.values * math.exp(-2.0 * t / p.re))) < 1e-6


def _ns_state_after(grid: GridSpec, w0: RealField, dt: float, t_end: float, p: NsParams) -> np.ndarray:
    return ns_integrate(w0, SolverConfig(grid, t_end, dt=dt), p).values[-1]


def test_split_step_is_second_order():
    p = NsParams(re=100.0)
    grid = GridSpec(2, 32, p.length)
    w0 = random_initial_condition(grid, seed=10, n_modes=4)
    reference = _ns_state_after(grid, w0, 0.05 / 32, 0.5, p)
    steps = [0.05, 0.025, 0.0125]
    errors = [np.max(np.abs(_ns_state_after(grid, w0, dt, 0.5, p) - reference)) for dt in steps]
    order = np.polyfit(np.log(steps), np.log(errors), 1)[0]
    assert order >= 1.8, f"observed order {order:.2f} from errors {errors}"


def test_taylor_green_is_a_steady_advection_balance():
    p = NsParams(re=50.0, forcing_on=False)
    grid = GridSpec(2, 32, p.length)
    w = forward_transform(_taylor_green(grid))
    rhs = ns_rhs(w, p)
    assert np.max(np.abs(rhs.coeffs + 2.0 / p.re * w.coeffs)) < 1e-12


def test_velocity_is_divergence_free_with_matching_curl():
    grid = GridSpec(2, 32)
    w = random_initial_condition(grid, seed=8, n_modes=6)
    u, v = velocity_from_vorticity(w)
    qx, qy = grid.wavenumbers()
    u_hat, v_hat = fft_forward(u.values), fft_forward(v.values)
    assert np.max(np.abs(1j * qx * u_hat + 1j * qy * v_hat)) < 1e-12
    curl = fft_inverse(1j * qx * v_hat - 1j * qy * u_hat)
    assert np.max(np.abs(curl - w.values)) < 1e-10


def test_nonzero_mean_vorticity_is_rejected():
    grid = GridSpec(2, 16)
    with pytest.raises(NonZeroMeanError):
        velocity_from_vorticity(RealField(grid, np.ones(grid.shape)))


def test_forced_ns_with_cfl_steps_stays_finite():
    p = NsParams(re=100.0)
    grid = GridSpec(2, 32, p.length)
    w0 = random_initial_condition(grid, seed=9, n_modes=4)
    traj = ns_integrate(w0, SolverConfig(grid, 0.5, dt=0.05, cfl_number=0.5, record_dt=0.25), p)
    assert len(traj) == 3
    assert np.all(np.isfinite(traj.values))
    assert np.max(np.abs(traj.values.mean(axis=(1, 2)))) < 1e-10


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
