#!/usr/bin/env python3
"""
Test Harness
Verify configuration loading, binary containers, the worker pool, report tables and
deterministic dataset generation
"""

import hashlib
import json
import math
import threading
import time
from pathlib import Path

import numpy as np
import pytest

from chaostat.dynamics.params import Trajectory
from chaostat.harness.config import ExperimentConfig, config_from_dict, load_config, parse_override
from chaostat.harness.containers import (
    decode_snapshot,
    encode_snapshot,
    load_model,
    load_trajectory,
    save_model,
    save_snapshot,
    save_trajectory,
)
from chaostat.harness.datagen import gen_dataset, load_dataset
from chaostat.harness.runs import ROLES, derive_seed
from chaostat.harness.summary import cost_error_summary, write_reports
from chaostat.utils.worker_pool import WorkerPool, default_workers, values_or_raise
from chaostat.models.fno import FnoConfig, init_params
from chaostat.models.single_state import SingleStateConfig, init_single_state
from chaostat.spectral.fields import GridSpec
from chaostat.stats.measure import tracked_modes
from chaostat.stats.report import compare, summarize
from chaostat.utils.errors import ConfigError, ManifestError

SMOKE = Path(__file__).parent / "configs" / "ks_smoke.toml"


# ----------------------------------------------------------------------
# configuration
# ----------------------------------------------------------------------

def test_smoke_config_loads(tmp_path):
    cfg = load_config(SMOKE, out=str(tmp_path))
    assert cfg.equation == "ks"
    assert cfg.fine_grid().n == 32 and cfg.coarse_grid().n == 16
    assert abs(cfg.length - 6.0 * math.pi) < 1e-12
    assert cfg.solver_config(True, 1.0, 0.025).record_every == 50
    assert cfg.stage_schedule().lambda2.value(1) == 1.0 / cfg.train.lambda2_divisor


def test_unknown_keys_are_named():
    with pytest.raises(ConfigError) as info:
        config_from_dict({"grid": {"fine": 64}})
    assert info.value.key == "grid.fine"
    with pytest.raises(ConfigError) as info:
        load_config(SMOKE, overrides=["stats.bogus=1"])
    assert info.value.key == "stats.bogus"


def test_type_and_range_errors():
    with pytest.raises(ConfigError) as info:
        config_from_dict({"seed": "seven"})
    assert info.value.key == "seed"
    with pytest.raises(ConfigError) as info:
        config_from_dict({"grid": {"fine_n": 32, "coarse_n": 16, "cutoff": 12}})
    assert info.value.key == "grid.cutoff"
    with pytest.raises(ConfigError):
        config_from_dict({"equation": "burgers"})
    with pytest.raises(ConfigError):
        ExperimentConfig().record_every(5e-4, 3e-4)


def test_override_parsing():
    assert parse_override("train.lr=0.01") == ("train.lr", 0.01)
    assert parse_override("equation=ns") == ("equation", "ns")
    assert parse_override("stats.with_w1 = true") == ("stats.with_w1", True)
    with pytest.raises(ConfigError):
        parse_override("train.lr")
    cfg = load_config(SMOKE, overrides=["train.n1=5", "closure.second_term=fine"], seed=11)
    assert cfg.train.n1 == 5 and cfg.closure.second_term == "fine" and cfg.seed == 11


def test_digest_ignores_the_output_location(tmp_path):
    a = load_config(SMOKE, out=str(tmp_path / "a"))
    b = load_config(SMOKE, out=str(tmp_path / "b"))
    assert a.digest() == b.digest()
    assert load_config(SMOKE, seed=8).digest() != a.digest()


# ----------------------------------------------------------------------
# containers
# ----------------------------------------------------------------------

def test_snapshot_container_framing():
    array = np.arange(12, dtype=float).reshape(3, 4)
    data = encode_snapshot(array, {"equation": "ks", "provenance": "FRS"})
    assert data[:8] == b"CHSTAT01"
    header, back = decode_snapshot(data)
    assert header["shape"] == [3, 4] and header["dtype"] == "f64-le"
    assert np.array_equal(back, array)
    assert data == encode_snapshot(array, {"provenance": "FRS", "equation": "ks"})

    with pytest.raises(ManifestError):
        decode_snapshot(b"NOTMAGIC" + data[8:])
    with pytest.raises(ManifestError):
        decode_snapshot(data[:-8])
    with pytest.raises(ValueError):
        encode_snapshot(np.array([np.inf]), {})


def test_model_weights_survive_a_save(tmp_path):
    fno = init_params(FnoConfig(n_layers=1, width=2, proj_width=2, modes_kept=2, t_frames=2), seed=0)
    loaded = load_model(save_model(tmp_path / "fno.chw", fno), expect="fno")
    assert loaded.config == fno.config
    assert all(np.array_equal(loaded.arrays[k], v) for k, v in fno.arrays.items())

    closure = init_single_state(SingleStateConfig(width=2, n_layers=1, n=8), seed=0)
    closure.report = {"train_loss": 0.5}
    restored = load_model(save_model(tmp_path / "closure.chw", closure))
    assert restored.report == {"train_loss": 0.5}
    with pytest.raises(ManifestError):
        load_model(tmp_path / "closure.chw", expect="fno")
    with pytest.raises(ManifestError):
        load_model(tmp_path / "missing.chw")


def test_trajectory_container(tmp_path):
    grid = GridSpec(1, 8, 2.0)
    traj = Trajectory(grid, [0.0, 0.5], np.ones((2, 8)), "CGS")
    back = load_trajectory(save_trajectory(tmp_path / "t.chs", traj, "ks", {"nu": 0.1}))
    assert back.grid == grid and back.provenance == "CGS"
    assert np.array_equal(back.times, traj.times)


# ----------------------------------------------------------------------
# worker pool and seeds
# ----------------------------------------------------------------------

def test_pool_keeps_submission_order_and_isolates_failures():
    def job(i):
        def run():
            time.sleep(0.01 * (4 - i))
            if i == 2:
                raise RuntimeError("boom")
            return i * i
        return run

    pool = WorkerPool(max_workers=4)
    results = pool.map([job(i) for i in range(5)], [f"job-{i}" for i in range(5)])
    assert [r.index for r in results] == list(range(5))
    assert [r.value for r in results if r.ok] == [0, 1, 9, 16]
    assert isinstance(results[2].error, RuntimeError)
    assert pool.get_stats()["failed"] == 1 and pool.get_stats()["completed"] == 4
    with pytest.raises(RuntimeError):
        values_or_raise(results)


def test_pool_runs_jobs_concurrently():
    barrier = threading.Barrier(2, timeout=5)
    results = WorkerPool(max_workers=2).map([barrier.wait, barrier.wait])
    assert all(r.ok for r in results)


def test_worker_count_from_environment(monkeypatch):
    monkeypatch.setenv("CHAOSTAT_WORKERS", "3")
    assert default_workers() == 3
    monkeypatch.setenv("CHAOSTAT_WORKERS", "many")
    assert default_workers() == 1


def test_derived_seeds_are_distinct_and_stable():
    seeds = {derive_seed(0, role, i) for role in ROLES for i in range(5)}
    assert len(seeds) == len(ROLES) * 5
    assert derive_seed(3, "frs", 1) == derive_seed(3, "frs", 1)
    assert derive_seed(3, "frs", 1) != derive_seed(4, "frs", 1)


# ----------------------------------------------------------------------
# report tables
# ----------------------------------------------------------------------

def _stats(method, scale, seed):
    grid = GridSpec(1, 16, 2.0 * math.pi)
    values = scale * np.random.default_rng(seed).standard_normal((20, 16))
    traj = Trajectory(grid, 0.1 * np.arange(20), values)
    return summarize(method, [traj], 0.0, 1.9, tracked_modes(1, 3), 1.0, runtime_seconds=2.0)


def test_cost_error_table(tmp_path):
    reference = _stats("FRS", 1.0, 0)
    reports = [compare(reference, _stats("CGS", 1.5, 1), bins=8), compare(reference, _stats("FNO", 1.0, 2), bins=8)]
    rows = cost_error_summary(reports)
    assert [r["method"] for r in rows] == ["CGS", "FNO"]
    assert rows[0]["seconds_per_trajectory"] == 2.0
    with pytest.raises(ValueError):
        cost_error_summary([])

    paths = write_reports(tmp_path, reports, failures={"closure": "not trained"})
    saved = json.loads(paths["reports"].read_text())
    assert saved["failures"] == {"closure": "not trained"}
    assert paths["table"].read_text().splitlines()[0].startswith("method,avg_tv,max_tv")
    assert (tmp_path / "histograms" / "CGS" / "mode_1.csv").exists()


# ----------------------------------------------------------------------
# dataset generation
# ----------------------------------------------------------------------

def _file_hashes(data_dir: Path):
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(data_dir.iterdir())}


def test_dataset_generation_is_deterministic(tmp_path):
    cfg_a = load_config(SMOKE, out=str(tmp_path / "a"))
    cfg_b = load_config(SMOKE, out=str(tmp_path / "b"))
    first = gen_dataset(cfg_a)
    second = gen_dataset(cfg_b, pool=WorkerPool(max_workers=2))
    assert first.digest == second.digest
    assert _file_hashes(tmp_path / "a" / "data") == _file_hashes(tmp_path / "b" / "data")
    assert first.counts == {"cgs": 6, "frs": 3, "test": 2, "pde": 3, "frs_fine": 3}

    loaded = load_dataset(tmp_path / "a")
    cgs = loaded.data.cgs
    assert cgs.inputs.shape == (6, 16) and cgs.labels.shape == (6, 4, 16)
    assert cgs.masks[:, -1].all() and not cgs.masks[:, :-1].any()
    assert loaded.data.frs.masks.all()
    assert loaded.fine_states.shape == (3, 32)
    assert loaded.fine_grid.n == 32
    assert cgs.grid.n == 16
    assert loaded.data.frs.grid.n == loaded.data.pde.grid.n == loaded.data.test.grid.n == 32
    assert loaded.data.frs.labels.shape == (3, 4, 32)
    assert np.array_equal(loaded.data.frs.inputs, loaded.fine_states)
    assert loaded.data.pde.fine_grid == loaded.fine_grid


def test_dataset_loading_checks_files(tmp_path):
    with pytest.raises(ManifestError):
        load_dataset(tmp_path)
    gen_dataset(load_config(SMOKE, out=str(tmp_path)))
    save_snapshot(tmp_path / "data" / "cgs.inputs.chs", np.zeros((5, 16)), {})
    with pytest.raises(ManifestError):
        load_dataset(tmp_path)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
