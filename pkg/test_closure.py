#!/usr/bin/env python3
"""
Test Closure
Verify closure terms, coarse stepping, commutator targets against the Galerkin oracle,
single-state training and the non-uniqueness bound
"""

import math

import numpy as np
import pytest

from chaostat.closure.coarse import cgs_integrate, cgs_step
from chaostat.closure.commutator import (
    FINE,
    CommutatorSample,
    SingleStateTrainConfig,
    commutator_dataset,
    commutator_target,
    nonuniqueness_demo,
    nonuniqueness_pair,
    train_single_state,
)
from chaostat.closure.terms import ClosureSpec, eddy_viscosity_term, smagorinsky_term
from chaostat.closure.tuning import tune_eddy_viscosity
from chaostat.dynamics.initial import random_initial_condition
from chaostat.dynamics.kuramoto import ks_etdrk4_step, ks_galerkin_rhs, spectral_to_modes
from chaostat.dynamics.params import KsParams, SolverConfig
from chaostat.models.single_state import SingleStateConfig, SingleStateModel, init_single_state
from chaostat.spectral.fields import FilterSpec, GridSpec, RealField
from chaostat.spectral.transforms import forward_transform
from chaostat.stats.measure import tracked_modes
from chaostat.stats.report import summarize

KS = KsParams(nu=0.01, length=6.0 * math.pi)
FINE_GRID = GridSpec(1, 64, KS.length)
CUTOFF = 5
FILTER = FilterSpec(CUTOFF, FINE_GRID.with_n(16))


def mode(grid: GridSpec, k: int, amplitude: float = 1.0) -> np.ndarray:
    (x,) = grid.coordinates()
    return amplitude * np.sin(2.0 * math.pi * k * x / grid.length)


def rms(values: np.ndarray) -> float:
    return float(np.sqrt(np.mean(values ** 2)))


def test_eddy_viscosity_of_sine():
    grid = GridSpec(1, 16, 2.0 * math.pi)
    (x,) = grid.coordinates()
    out = eddy_viscosity_term(RealField(grid, np.sin(x)), 0.3)
    assert np.max(np.abs(out.values + 0.3 * np.sin(x))) < 1e-12


def test_smagorinsky_removes_enstrophy():
    grid = GridSpec(2, 32)
    w = random_initial_condition(grid, seed=1, n_modes=4)
    term = smagorinsky_term(w, 0.17)
    assert float(np.sum(w.values * term.values)) < 0.0
    assert np.max(np.abs(smagorinsky_term(w, 0.0).values)) == 0.0


def test_closure_spec_validation():
    with pytest.raises(ValueError):
        ClosureSpec.eddy_viscosity(-1.0)
    with pytest.raises(ValueError):
        ClosureSpec("learned_single_state")
    assert ClosureSpec.eddy_viscosity(0.02).label == "eddy_viscosity(coeff=0.02)"


def test_cgs_step_without_closure_is_the_bare_step():
    grid = GridSpec(1, 16, KS.length)
    v = forward_transform(random_initial_condition(grid, seed=2, n_modes=4))
    bare = ks_etdrk4_step(v, 1e-3, KS)
    closed = cgs_step(v, 1e-3, ClosureSpec.none(), KS)
    assert np.array_equal(bare.coeffs, closed.coeffs)


def test_zero_learned_closure_matches_no_closure():
    grid = GridSpec(1, 16, KS.length)
    model = init_single_state(SingleStateConfig(width=2, n_layers=1, n=16), seed=0)
    zero = SingleStateModel(model.config, {k: np.zeros_like(v) for k, v in model.arrays.items()})
    v0 = random_initial_condition(grid, seed=3, n_modes=4)
    cfg = SolverConfig(grid, 0.2, dt=1e-2, record_every=5)
    plain = cgs_integrate(v0, cfg, ClosureSpec.none(), KS)
    learned = cgs_integrate(v0, cfg, ClosureSpec.learned(zero), KS)
    assert np.max(np.abs(plain.values - learned.values)) < 1e-12
    assert learned.provenance == "CGS"


def test_commutator_vanishes_inside_the_band():
    sample = commutator_target(RealField(FINE_GRID, mode(FINE_GRID, 1)), FILTER, KS)
    assert np.max(np.abs(sample.target.values)) < 1e-10
    zero = commutator_target(RealField(FINE_GRID, np.zeros(FINE_GRID.shape)), FILTER, KS)
    assert np.max(np.abs(zero.target.values)) == 0.0


def test_commutator_matches_galerkin_oracle():
    u = RealField(FINE_GRID, mode(FINE_GRID, 1) + mode(FINE_GRID, CUTOFF + 1))
    sample = commutator_target(u, FILTER, KS)
    assert rms(sample.target.values) > 1e-3

    n_modes = CUTOFF + 1
    z_u = spectral_to_modes(forward_transform(u), n_modes)
    z_bar = spectral_to_modes(forward_transform(RealField(FINE_GRID, mode(FINE_GRID, 1))), n_modes)
    expected = ks_galerkin_rhs(z_u, KS, n_modes) - ks_galerkin_rhs(z_bar, KS, n_modes)
    got = forward_transform(sample.target)
    for k in range(-CUTOFF, CUTOFF + 1):
        assert abs(got.coefficient(k) - expected[k + n_modes]) < 1e-8


def test_second_term_resolutions_agree_on_band_limited_states():
    u = RealField(FINE_GRID, mode(FINE_GRID, 1) + 0.5 * mode(FINE_GRID, 2))
    coarse = commutator_target(u, FILTER, KS)
    fine = commutator_target(u, FILTER, KS, second_term=FINE)
    assert np.max(np.abs(coarse.target.values - fine.target.values)) < 1e-12
    with pytest.raises(ValueError):
        commutator_target(u, FILTER, KS, second_term="middle")


def test_nonuniqueness_bound_against_galerkin():
    u1 = RealField(FINE_GRID, mode(FINE_GRID, 1))
    u2 = RealField(FINE_GRID, u1.values + mode(FINE_GRID, CUTOFF + 1, 0.5))
    report = nonuniqueness_demo(u1, u2, FILTER, KS)
    assert report.bound > 0.0
    assert report.model_respects_bound is None

    n_modes = CUTOFF + 1
    g1 = ks_galerkin_rhs(spectral_to_modes(forward_transform(u1), n_modes), KS, n_modes)
    g2 = ks_galerkin_rhs(spectral_to_modes(forward_transform(u2), n_modes), KS, n_modes)
    band = slice(n_modes - CUTOFF, n_modes + CUTOFF + 1)
    expected = 0.5 * math.sqrt(float(np.sum(np.abs(g1[band] - g2[band]) ** 2)))
    assert abs(report.bound - expected) < 1e-10


def test_nonuniqueness_degenerate_and_mismatched_inputs():
    u1 = RealField(FINE_GRID, mode(FINE_GRID, 1))
    assert nonuniqueness_demo(u1, u1, FILTER, KS).bound == 0.0
    other = RealField(FINE_GRID, mode(FINE_GRID, 2))
    with pytest.raises(ValueError):
        nonuniqueness_demo(u1, other, FILTER, KS)


def test_nonuniqueness_pair_shares_the_filtered_image():
    u1 = random_initial_condition(FINE_GRID, seed=4, n_modes=4)
    u2 = nonuniqueness_pair(u1, FILTER, seed=5, amplitude=0.5)
    assert abs(rms(u2.values - u1.values) - 0.5 * rms(u1.values)) < 1e-10
    report = nonuniqueness_demo(u1, u2, FILTER, KS)
    assert report.filtered_gap < 1e-12
    assert report.bound > 0.0


def quiet(**kwargs) -> SingleStateTrainConfig:
    base = dict(width=4, n_layers=1, batch_size=2, validation_fraction=0.0, weight_decay=0.0, log_every=0)
    base.update(kwargs)
    return SingleStateTrainConfig(**base)


def test_single_state_learns_a_zero_target():
    grid = FILTER.target
    u_bar = RealField(grid, mode(grid, 1))
    zero = RealField(grid, np.zeros(grid.shape))
    data = [CommutatorSample(u_bar, zero), CommutatorSample(u_bar, zero)]
    model = train_single_state(data, quiet(epochs=1000, lr=1e-2, gamma=0.5, step_size=100))
    assert model.report["train_loss"] < 1e-6


def test_single_state_cannot_beat_the_average_of_conflicting_targets():
    u1 = RealField(FINE_GRID, mode(FINE_GRID, 1))
    u2 = nonuniqueness_pair(u1, FILTER, seed=6, amplitude=0.5)
    data = commutator_dataset([u1, u2], FILTER, KS)
    assert np.array_equal(data[0].filtered_state.values, data[1].filtered_state.values)

    model = train_single_state(data, quiet(epochs=300, lr=1e-2, gamma=0.5, step_size=100))
    # one input, two targets: no model beats predicting their average
    floor = 0.25 * float(np.mean((data[0].target.values - data[1].target.values) ** 2))
    assert floor > 0.0
    assert model.report["train_loss"] >= floor * (1.0 - 1e-9)

    report = nonuniqueness_demo(u1, u2, FILTER, KS, model)
    assert report.model_respects_bound
    assert max(report.model_errors) >= report.bound - 1e-6


def test_single_state_loss_descends_with_small_steps():
    states = [random_initial_condition(FINE_GRID, seed=s, n_modes=8) for s in range(3)]
    data = commutator_dataset(states, FILTER, KS)
    model = train_single_state(data, quiet(epochs=15, lr=1e-5, batch_size=3))
    history = model.report["history"]
    assert all(later <= earlier + 1e-12 for earlier, later in zip(history, history[1:]))


def test_trained_single_state_commutes_with_shifts():
    states = [random_initial_condition(FINE_GRID, seed=s, n_modes=8) for s in range(3)]
    data = commutator_dataset(states, FILTER, KS)
    model = train_single_state(data, quiet(epochs=200, lr=1e-2, batch_size=3))
    u = data[0].filtered_state.values
    shifted = model.predict(np.roll(u, 3))
    assert np.max(np.abs(shifted - np.roll(model.predict(u), 3))) < 1e-12
    assert rms(model.predict(u)) > 0.0


def test_single_state_rejects_empty_dataset():
    with pytest.raises(ValueError):
        train_single_state([], quiet(epochs=1))


def test_eddy_tuning_recovers_the_reference_coefficient():
    p = KsParams(nu=0.5, length=6.0 * math.pi)
    grid = GridSpec(1, 16, p.length)
    cfg = SolverConfig(grid, 2.0, dt=1e-2, record_every=5)
    starts = [random_initial_condition(grid, seed=s, n_modes=4) for s in range(2)]
    modes = tracked_modes(1, 3)
    reference_runs = [cgs_integrate(v0, cfg, ClosureSpec.eddy_viscosity(0.01), p) for v0 in starts]
    reference = summarize("reference", reference_runs, 0.5, 2.0, modes, p.nu)
    best, scores = tune_eddy_viscosity(starts, cfg, p, reference, 0.5, 2.0, modes, (0.001, 0.01, 0.1))
    assert best == 0.01
    assert scores[0.01] == 0.0


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
