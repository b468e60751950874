#!/usr/bin/env python3
"""
Test Training
Verify datasets, losses, their gradients and the multi-stage schedule
"""

import math

import numpy as np
import pytest

from chaostat.autodiff import tensor as ad
from chaostat.autodiff.tensor import Tape, numerical_gradient
from chaostat.dynamics.initial import random_initial_condition
from chaostat.dynamics.kuramoto import ks_integrate
from chaostat.dynamics.params import KsParams, SolverConfig, Trajectory
from chaostat.models.fno import FnoConfig, FnoParams, init_params
from chaostat.spectral.fields import GridSpec
from chaostat.training.datasets import (
    PairDataset,
    PdeInputSet,
    label_slots,
    make_pde_inputs,
    merge_pairs,
    pairs_from_trajectory,
)
from chaostat.training.losses import (
    evaluate_data_loss,
    evaluate_pde_loss,
    frames_residual_norm,
    loss_data,
    loss_pde,
    relative_l2_error,
)
from chaostat.training.multistage import (
    LambdaSchedule,
    StageSchedule,
    TrainingData,
    train_multistage,
    train_supervised,
)
from chaostat.utils.errors import GridError, NumericalError, TrainingDivergedError

KS = KsParams(nu=0.01, length=6.0 * math.pi)
GRID = GridSpec(1, 8, KS.length)
TOY = FnoConfig(n_layers=2, width=4, proj_width=4, modes_kept=2, t_frames=4)


def toy_pairs(n: int = 4, seed: int = 0) -> PairDataset:
    rng = np.random.default_rng(seed)
    inputs = rng.standard_normal((n,) + GRID.shape)
    labels = rng.standard_normal((n, TOY.t_frames) + GRID.shape)
    masks = np.ones((n, TOY.t_frames), dtype=bool)
    return PairDataset(GRID, inputs, labels, masks, TOY.h)


def toy_pde(n: int = 3, seed: int = 1) -> PdeInputSet:
    return PdeInputSet(GRID, np.random.default_rng(seed).standard_normal((n,) + GRID.shape))


def schedule(**kwargs) -> StageSchedule:
    base = dict(n1=2, n2=2, n3=2, lr=1e-3, gamma=0.7, step_size=10, batch_size_cgs=2, batch_size_frs=2,
                batch_size_stage3_data=2, batch_size_stage3_pde=2,
                lambda1=LambdaSchedule.halving(1), lambda2=LambdaSchedule.divided_by(2.0, 1), seed=3, log_every=0)
    base.update(kwargs)
    return StageSchedule(**base)


def test_lambda_schedules():
    halving = LambdaSchedule.halving(100)
    assert [halving.value(e) for e in (0, 99, 100, 250)] == [1.0, 1.0, 0.5, 0.25]
    indicator = LambdaSchedule.indicator(20, 100)
    assert indicator.value(20) == 1.0
    assert indicator.value(21) == 0.0
    assert abs(LambdaSchedule.divided_by(1.7, 500).value(500) - 1.0 / 1.7) < 1e-15
    with pytest.raises(ValueError):
        LambdaSchedule(initial=-1.0)


def test_ablations_drop_leading_stages():
    full = StageSchedule.full_ks()
    assert full.ablation("full") == full
    assert full.ablation("no_cgs_pretraining").n1 == 0
    no_data = full.ablation("no_data_pretraining")
    assert (no_data.n1, no_data.n2, no_data.n3) == (0, 0, full.n3)
    with pytest.raises(ValueError):
        full.ablation("no_pde")
    assert StageSchedule.full_ns().lambda1.value(21) == 0.0


def test_label_slots():
    assert label_slots(16, 4) == [3, 7, 11, 15]
    assert label_slots(16, 1) == [15]
    assert label_slots(4, 4) == [0, 1, 2, 3]
    with pytest.raises(ValueError):
        label_slots(16, 3)


def ladder_trajectory() -> Trajectory:
    """State i is the constant i, recorded every 0.125"""
    times = 0.125 * np.arange(9)
    values = np.arange(9, dtype=float)[:, None] * np.ones(GRID.shape)
    return Trajectory(GRID, times, values, "CGS")


def test_pairs_from_trajectory_fill_masked_slots():
    traj = ladder_trajectory()
    pairs = pairs_from_trajectory(traj, [0.25], horizon=0.5, t_frames=4, slots=[3])
    assert pairs.provenance == "CGS"
    assert np.all(pairs.inputs[0] == 2.0)
    assert pairs.masks[0].tolist() == [False, False, False, True]
    assert np.all(pairs.labels[0, 3] == 6.0)
    assert np.all(pairs.labels[0, :3] == 0.0)

    dense = pairs_from_trajectory(traj, [0.0, 0.25], horizon=0.5, t_frames=4)
    assert dense.masks.all()
    assert [float(dense.labels[1, j, 0]) for j in range(4)] == [3.0, 4.0, 5.0, 6.0]

    with pytest.raises(ValueError):
        pairs_from_trajectory(traj, [0.3], horizon=0.5, t_frames=4)


def test_merged_pairs_and_subsets_keep_alignment():
    a, b = toy_pairs(2, seed=4), toy_pairs(3, seed=5)
    merged = merge_pairs([a, b])
    assert len(merged) == 5
    assert np.array_equal(merged.subset([2]).labels[0], b.labels[0])
    with pytest.raises(ValueError):
        merge_pairs([])


def test_pde_inputs_are_noisy_copies():
    states = [random_initial_condition(GRID, seed=s, n_modes=2) for s in range(2)]
    pde = make_pde_inputs(states, 0.1, seed=0, copies=2)
    assert len(pde) == 4
    assert not np.array_equal(pde.inputs[0], pde.inputs[1])
    assert np.sqrt(np.mean((pde.inputs[0] - states[0].values) ** 2)) < 0.5


def test_pde_inputs_must_sit_on_the_fine_grid():
    fine = GRID.with_n(16)
    with pytest.raises(GridError):
        PdeInputSet(GRID, np.zeros((2,) + GRID.shape), fine_grid=fine)
    states = [random_initial_condition(fine, seed=s, n_modes=2) for s in range(2)]
    pde = make_pde_inputs(states, 0.1, seed=0, fine_grid=fine)
    assert pde.subset([1]).fine_grid == fine


def test_relative_l2_error():
    truth = np.ones((2, 3, 8))
    assert abs(relative_l2_error(1.1 * truth, truth) - 0.1) < 1e-12
    pred = truth.copy()
    pred[:, 0] = 3.0
    masks = np.array([[False, True, True]] * 2)
    assert relative_l2_error(pred, truth, masks) == 0.0
    with pytest.raises(NumericalError):
        relative_l2_error(truth, np.zeros_like(truth))


def test_masked_frames_do_not_enter_the_data_loss():
    params = init_params(TOY, seed=0)
    data = toy_pairs()
    masked = PairDataset(GRID, data.inputs, data.labels.copy(), data.masks.copy(), data.horizon)
    masked.masks[:, :3] = False
    moved = PairDataset(GRID, data.inputs, data.labels.copy(), masked.masks, data.horizon)
    moved.labels[:, :3] += 100.0
    assert evaluate_data_loss(params, masked) == evaluate_data_loss(params, moved)


@pytest.mark.parametrize("name", ["lift.w", "layer0.r_im", "layer1.w", "proj2.b"])
def test_loss_gradients_match_finite_differences(name):
    params = init_params(TOY, seed=1)
    data, pde = toy_pairs(), toy_pde()

    def total(arrays):
        tape = Tape()
        leaves = ad.parameters_on(tape, arrays)
        return tape, loss_data(leaves, TOY, data) + loss_pde(leaves, TOY, pde, KS)

    tape, loss = total(params.arrays)
    grads = tape.backward(loss)

    def value(x):
        arrays = dict(params.arrays)
        arrays[name] = x
        perturbed = FnoParams(TOY, arrays)
        return evaluate_data_loss(perturbed, data) + evaluate_pde_loss(perturbed, pde, KS)

    numeric = numerical_gradient(value, params.arrays[name])
    error = np.linalg.norm(grads[name] - numeric) / max(np.linalg.norm(numeric), 1e-12)
    assert error < 1e-4


def test_residual_is_small_on_solver_frames():
    grid = GridSpec(1, 64, KS.length)
    u0 = random_initial_condition(grid, seed=7, n_modes=4, amplitude=0.5)
    traj = ks_integrate(u0, SolverConfig(grid, 0.08, dt=1e-3, record_every=10), KS)
    frames = traj.values[None]
    exact = frames_residual_norm(frames, grid, KS, 0.01)
    reversed_frames = frames_residual_norm(frames[:, ::-1].copy(), grid, KS, 0.01)
    assert exact < 1e-2
    assert reversed_frames > 100.0 * exact


def test_residual_converges_at_second_order_in_frame_spacing():
    grid = GridSpec(1, 64, KS.length)
    u0 = random_initial_condition(grid, seed=7, n_modes=4, amplitude=0.5)
    horizon, dt = 0.2, 1.25e-3
    spacings, norms = [], []
    for t_frames in (8, 16, 32):
        record_every = int(round(horizon / t_frames / dt))
        traj = ks_integrate(u0, SolverConfig(grid, horizon, dt=dt, record_every=record_every), KS)
        assert len(traj) == t_frames + 1
        spacings.append(horizon / t_frames)
        norms.append(frames_residual_norm(traj.values[None], grid, KS, horizon / t_frames))
    order = np.polyfit(np.log(spacings), np.log(norms), 1)[0]
    assert 1.7 <= order <= 2.3, f"residual order {order:.2f}"


def test_single_stage_matches_supervised_training():
    data = TrainingData(cgs=toy_pairs())
    sched = schedule(n1=3, n2=0, n3=0)
    staged, _ = train_multistage(init_params(TOY, seed=2), data, sched, KS)
    plain, _ = train_supervised(init_params(TOY, seed=2), data.cgs, sched, 3)
    for name in staged.arrays:
        assert np.array_equal(staged.arrays[name], plain.arrays[name])


def test_small_steps_descend():
    sched = schedule(n1=10, n2=0, n3=0, lr=1e-5, batch_size_cgs=4)
    _, report = train_multistage(init_params(TOY, seed=3), TrainingData(cgs=toy_pairs()), sched, KS)
    losses = [r.loss for r in report.records]
    assert all(later <= earlier + 1e-12 for earlier, later in zip(losses, losses[1:]))


def test_three_stages_run_in_order_and_reproduce():
    data = TrainingData(cgs=toy_pairs(seed=8), frs=toy_pairs(seed=9), pde=toy_pde(), test=toy_pairs(2, seed=10))
    seen = []
    _, report = train_multistage(init_params(TOY, seed=4), data, schedule(), KS,
                                 checkpoint=lambda stage, params, rep: seen.append(stage))
    assert seen == [1, 2, 3]
    assert [r.stage for r in report.records] == [1, 1, 2, 2, 3, 3]
    assert [r.weight for r in report.records if r.stage == 2] == [1.0, 0.5]
    assert set(report.last(3).terms) == {"frs", "pde"}
    assert set(report.stage_test_errors) == {1, 2, 3}

    _, again = train_multistage(init_params(TOY, seed=4), data, schedule(), KS)
    assert [r.loss for r in again.records] == [r.loss for r in report.records]


def test_missing_stage_data_is_rejected():
    with pytest.raises(ValueError):
        train_multistage(init_params(TOY, seed=0), TrainingData(cgs=toy_pairs()), schedule(), KS)


def test_non_finite_loss_stops_training():
    params = init_params(TOY, seed=0)
    params.arrays["proj2.b"] = np.array([np.nan])
    with pytest.raises(TrainingDivergedError) as info:
        train_multistage(params, TrainingData(cgs=toy_pairs()), schedule(n2=0, n3=0), KS)
    assert info.value.stage == 1
    assert info.value.epoch == 0


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
