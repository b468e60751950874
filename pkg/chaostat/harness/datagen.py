"""
chaostat - Dataset generation
Runs the coarse and fully resolved trajectories of a dataset schedule, slices them into
input/label pairs and writes snapshot containers plus a JSON manifest. CGS pairs live on the
coarse grid; FRS, test and PDE sets keep the fine grid of the solver that produced them.
"""

import asyncio
import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from chaostat.closure.terms import ClosureSpec
from chaostat.dynamics.params import Trajectory
from chaostat.harness.config import ExperimentConfig
from chaostat.harness.containers import canonical_json, load_snapshot, save_snapshot_async
from chaostat.harness.runs import coarse_state, derive_seed, initial_state, run_cgs, run_frs
from chaostat.utils.worker_pool import WorkerPool, values_or_raise
from chaostat.spectral.fields import GridSpec, RealField
from chaostat.spectral.transforms import apply_filter
from chaostat.training.datasets import (
    PairDataset,
    PdeInputSet,
    label_slots,
    make_pde_inputs,
    merge_pairs,
    pairs_from_trajectory,
)
from chaostat.training.multistage import TrainingData
from chaostat.utils.errors import ManifestError

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
MANIFEST_VERSION = 1
PAIR_SETS = ("cgs", "frs", "test")


@dataclass
class GeneratedDataset:
    manifest_path: Path
    digest: str
    counts: Dict[str, int]


@dataclass
class LoadedDataset:
    manifest: Dict[str, Any]
    data: TrainingData
    fine_states: Optional[np.ndarray]
    fine_grid: GridSpec


def snapshot_times(start: float, count: int, stride: float) -> List[float]:
    return [start + k * stride for k in range(count)]


def _file_digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def manifest_digest(manifest: Dict[str, Any]) -> str:
    """SHA-256 over the canonical manifest JSON"""
    return hashlib.sha256(canonical_json(manifest)).hexdigest()


def filter_trajectory(cfg: ExperimentConfig, traj: Trajectory) -> Trajectory:
    spec = cfg.filter_spec()
    values = np.stack([apply_filter(RealField(traj.grid, v), spec).values for v in traj.values])
    return Trajectory(spec.target, traj.times, values, traj.provenance)


class DatasetBuilder:
    """Builds the pair sets of one config; every trajectory seed derives from cfg.seed"""

    def __init__(self, cfg: ExperimentConfig, pool: Optional[WorkerPool] = None):
        self.cfg = cfg
        self.pool = pool or WorkerPool()
        self.h = cfg.fno.h
        self.t_frames = cfg.fno.t_frames

    def _cgs_job(self, index: int):
        ds = self.cfg.dataset
        times = snapshot_times(ds.cgs_start, ds.cgs_snapshots, ds.cgs_stride)
        v0 = coarse_state(self.cfg, initial_state(self.cfg, "cgs", index))
        traj = run_cgs(self.cfg, v0, ClosureSpec.none(), times[-1] + self.h, self.h / ds.cgs_labels)
        slots = label_slots(self.t_frames, ds.cgs_labels)
        return pairs_from_trajectory(traj, times, self.h, self.t_frames, slots)

    def _frs_job(self, role: str, index: int, count: int):
        ds = self.cfg.dataset
        times = snapshot_times(ds.frs_start, count, ds.frs_stride)
        traj = run_frs(self.cfg, initial_state(self.cfg, role, index), times[-1] + self.h, self.h / ds.frs_labels)
        slots = label_slots(self.t_frames, ds.frs_labels)
        pairs = pairs_from_trajectory(traj, times, self.h, self.t_frames, slots)
        fine = np.stack([traj.values[int(np.argmin(np.abs(traj.times - t)))] for t in times])
        return pairs, fine

    def _run(self, jobs, labels) -> List[Any]:
        return values_or_raise(self.pool.map(jobs, labels))

    def build(self) -> Tuple[Dict[str, PairDataset], PdeInputSet, np.ndarray]:
        ds = self.cfg.dataset
        logger.info(f"🚀 generating {self.cfg.equation.upper()} data: "
                    f"{ds.cgs_trajectories} CGS x {ds.cgs_snapshots}, {ds.frs_trajectories} FRS x {ds.frs_snapshots}")
        cgs = self._run([lambda i=i: self._cgs_job(i) for i in range(ds.cgs_trajectories)],
                        [f"cgs-{i}" for i in range(ds.cgs_trajectories)])
        frs = self._run([lambda i=i: self._frs_job("frs", i, ds.frs_snapshots) for i in range(ds.frs_trajectories)],
                        [f"frs-{i}" for i in range(ds.frs_trajectories)])
        test = self._run([lambda i=i: self._frs_job("test", i, ds.test_snapshots) for i in range(ds.test_trajectories)],
                         [f"test-{i}" for i in range(ds.test_trajectories)])

        pairs = {
            "cgs": merge_pairs(cgs),
            "frs": merge_pairs([p for p, _ in frs]),
            "test": merge_pairs([p for p, _ in test]),
        }
        fine_states = np.concatenate([f for _, f in frs])
        frs_inputs = [RealField(pairs["frs"].grid, v) for v in pairs["frs"].inputs]
        pde = make_pde_inputs(frs_inputs, ds.pde_noise, derive_seed(self.cfg.seed, "pde"), ds.pde_copies,
                              self.cfg.fine_grid())
        return pairs, pde, fine_states


def _header(cfg: ExperimentConfig, grid: GridSpec, provenance: str, role: str, times=None) -> Dict[str, Any]:
    return {
        "equation": cfg.equation,
        "params": cfg.params().to_dict(),
        "grid": grid.to_dict(),
        "time": None if times is None else [float(t) for t in times],
        "provenance": provenance,
        "role": role,
    }


async def _write_containers(items: List[Tuple[Path, np.ndarray, Dict[str, Any]]]) -> List[Path]:
    return await asyncio.gather(*(save_snapshot_async(path, array, header) for path, array, header in items))


def _cleanup(paths: List[Path]):
    for path in paths:
        try:
            path.unlink(missing_ok=True)
        except OSError as e:
            logger.warning(f"⚠️ could not remove partial output {path}: {e}")


def gen_dataset(cfg: ExperimentConfig, out_dir: Optional[Path] = None, pool: Optional[WorkerPool] = None) -> GeneratedDataset:
    """Generate, write and describe the datasets of `cfg`; a failure removes everything written"""
    out = Path(out_dir or cfg.out) / "data"
    out.mkdir(parents=True, exist_ok=True)
    planned: List[Path] = []
    try:
        pairs, pde, fine_states = DatasetBuilder(cfg, pool).build()
        coarse, fine = cfg.coarse_grid(), cfg.fine_grid()

        items = []
        entries: Dict[str, Any] = {}
        for name in PAIR_SETS:
            p = pairs[name]
            files = {}
            for role, array in (("inputs", p.inputs), ("labels", p.labels)):
                path = out / f"{name}.{role}.chs"
                items.append((path, array, _header(cfg, p.grid, p.provenance, role, p.source_times)))
                files[role] = {"path": path.name, "shape": list(array.shape)}
            entries[name] = {
                "provenance": p.provenance,
                "grid": p.grid.to_dict(),
                "count": len(p),
                "files": files,
                "masks": p.masks.astype(int).tolist(),
                "source_times": [float(t) for t in p.source_times],
            }
        items.append((out / "pde.inputs.chs", pde.inputs, _header(cfg, pde.grid, "FRS+noise", "inputs")))
        entries["pde"] = {"grid": pde.grid.to_dict(), "count": len(pde),
                          "files": {"inputs": {"path": "pde.inputs.chs", "shape": list(pde.inputs.shape)}}}
        items.append((out / "frs_fine.states.chs", fine_states, _header(cfg, fine, "FRS", "states")))
        entries["frs_fine"] = {"count": len(fine_states),
                               "files": {"states": {"path": "frs_fine.states.chs", "shape": list(fine_states.shape)}}}

        planned = [path for path, _, _ in items] + [out / MANIFEST_NAME]
        asyncio.run(_write_containers(items))
        for name, entry in entries.items():
            for spec in entry["files"].values():
                spec["sha256"] = _file_digest((out / spec["path"]).read_bytes())

        manifest = {
            "version": MANIFEST_VERSION,
            "equation": cfg.equation,
            "seed": cfg.seed,
            "config_digest": cfg.digest(),
            "params": cfg.params().to_dict(),
            "grid": coarse.to_dict(),
            "fine_grid": fine.to_dict(),
            "horizon": cfg.fno.h,
            "t_frames": cfg.fno.t_frames,
            "datasets": entries,
        }
        (out / MANIFEST_NAME).write_bytes(json.dumps(manifest, sort_keys=True, indent=2).encode("utf-8"))
    except Exception:
        logger.error(f"❌ dataset generation failed, removing partial output in {out}")
        _cleanup(planned)
        raise

    digest = manifest_digest(manifest)
    counts = {name: entry["count"] for name, entry in entries.items()}
    logger.info(f"✅ dataset written to {out}: {counts}, manifest sha256 {digest[:16]}")
    return GeneratedDataset(out / MANIFEST_NAME, digest, counts)


# ----------------------------------------------------------------------
# loading
# ----------------------------------------------------------------------

def find_manifest(path: Path) -> Path:
    path = Path(path)
    for candidate in (path, path / MANIFEST_NAME, path / "data" / MANIFEST_NAME):
        if candidate.is_file():
            return candidate
    raise ManifestError(f"dataset manifest not found: {path / 'data' / MANIFEST_NAME}")


def _load_array(base: Path, spec: Dict[str, Any]) -> np.ndarray:
    path = base / spec["path"]
    if not path.exists():
        raise ManifestError(f"manifest references missing file {path}")
    _, array = load_snapshot(path)
    if list(array.shape) != list(spec["shape"]):
        raise ManifestError(f"{path}: shape {list(array.shape)} does not match manifest {spec['shape']}")
    return array


def load_dataset(path: Path) -> LoadedDataset:
    """Read a manifest and its containers, checking that every file exists with the declared shape"""
    manifest_path = find_manifest(path)
    base = manifest_path.parent
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ManifestError(f"{manifest_path}: unreadable manifest: {e}")

    fine_grid = GridSpec.from_dict(manifest["fine_grid"])
    horizon = manifest["horizon"]
    sets: Dict[str, PairDataset] = {}
    for name in PAIR_SETS:
        entry = manifest["datasets"].get(name)
        if entry is None:
            continue
        inputs = _load_array(base, entry["files"]["inputs"])
        labels = _load_array(base, entry["files"]["labels"])
        set_grid = GridSpec.from_dict(entry.get("grid", manifest["grid"]))
        sets[name] = PairDataset(set_grid, inputs, labels, np.array(entry["masks"], dtype=bool), horizon,
                                 entry["provenance"], np.array(entry["source_times"]))
    pde = None
    if "pde" in manifest["datasets"]:
        entry = manifest["datasets"]["pde"]
        pde = PdeInputSet(GridSpec.from_dict(entry.get("grid", manifest["fine_grid"])),
                          _load_array(base, entry["files"]["inputs"]), fine_grid)
    fine_states = None
    if "frs_fine" in manifest["datasets"]:
        fine_states = _load_array(base, manifest["datasets"]["frs_fine"]["files"]["states"])

    data = TrainingData(cgs=sets.get("cgs"), frs=sets.get("frs"), pde=pde, test=sets.get("test"))
    logger.info(f"📂 loaded dataset {manifest_path}")
    return LoadedDataset(manifest, data, fine_states, fine_grid)
