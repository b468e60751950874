"""
chaostat - Binary containers
Snapshots and model weights share one framing: 8-byte magic, u64-le header length, UTF-8 JSON
header (sorted keys, compact separators), then a little-endian float64 payload.
"""

import json
import logging
import struct
from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

import aiofiles
import numpy as np

from chaostat.dynamics.params import Trajectory
from chaostat.models.fno import FnoConfig, FnoParams
from chaostat.models.single_state import SingleStateConfig, SingleStateModel
from chaostat.spectral.fields import GridSpec
from chaostat.utils.errors import ManifestError

logger = logging.getLogger(__name__)

SNAPSHOT_MAGIC = b"CHSTAT01"
WEIGHT_MAGIC = b"CHWGT001"
DTYPE = "f64-le"
_LENGTH = struct.Struct("<Q")

PathLike = Union[str, Path]


def canonical_json(data: Any) -> bytes:
    return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def _frame(magic: bytes, header: Dict[str, Any], payload: bytes) -> bytes:
    raw = canonical_json(header)
    return magic + _LENGTH.pack(len(raw)) + raw + payload


def _unframe(data: bytes, magic: bytes, source: str) -> Tuple[Dict[str, Any], bytes]:
    if data[:8] != magic:
        raise ManifestError(f"{source}: expected magic {magic!r}, found {data[:8]!r}")
    if len(data) < 16:
        raise ManifestError(f"{source}: truncated header")
    (length,) = _LENGTH.unpack_from(data, 8)
    end = 16 + length
    if len(data) < end:
        raise ManifestError(f"{source}: header runs past end of file")
    try:
        header = json.loads(data[16:end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ManifestError(f"{source}: unreadable header: {e}")
    return header, data[end:]


def _to_payload(array: np.ndarray) -> bytes:
    return np.ascontiguousarray(array, dtype="<f8").tobytes(order="C")


def _from_payload(payload: bytes, shape: Tuple[int, ...]) -> np.ndarray:
    return np.frombuffer(payload, dtype="<f8").reshape(shape).astype(np.float64)


# ----------------------------------------------------------------------
# snapshots
# ----------------------------------------------------------------------

def encode_snapshot(array: np.ndarray, header: Dict[str, Any]) -> bytes:
    """`header` carries equation, params, grid, time and provenance; shape and dtype are filled in"""
    array = np.asarray(array, dtype=np.float64)
    if not np.all(np.isfinite(array)):
        raise ValueError("refusing to store non-finite snapshot values")
    full = dict(header)
    full["shape"] = list(array.shape)
    full["dtype"] = DTYPE
    return _frame(SNAPSHOT_MAGIC, full, _to_payload(array))


def decode_snapshot(data: bytes, source: str = "<bytes>") -> Tuple[Dict[str, Any], np.ndarray]:
    header, payload = _unframe(data, SNAPSHOT_MAGIC, source)
    if header.get("dtype") != DTYPE:
        raise ManifestError(f"{source}: unsupported dtype {header.get('dtype')!r}")
    shape = tuple(header["shape"])
    expected = 8 * int(np.prod(shape, dtype=np.int64))
    if len(payload) != expected:
        raise ManifestError(f"{source}: payload holds {len(payload)} bytes, shape {shape} needs {expected}")
    return header, _from_payload(payload, shape)


def save_snapshot(path: PathLike, array: np.ndarray, header: Dict[str, Any]) -> Path:
    path = Path(path)
    path.write_bytes(encode_snapshot(array, header))
    return path


async def save_snapshot_async(path: PathLike, array: np.ndarray, header: Dict[str, Any]) -> Path:
    path = Path(path)
    data = encode_snapshot(array, header)
    async with aiofiles.open(path, "wb") as f:
        await f.write(data)
    logger.debug(f"wrote {path} ({len(data)} bytes)")
    return path


def load_snapshot(path: PathLike) -> Tuple[Dict[str, Any], np.ndarray]:
    path = Path(path)
    if not path.exists():
        raise ManifestError(f"snapshot file not found: {path}")
    return decode_snapshot(path.read_bytes(), str(path))


# ----------------------------------------------------------------------
# weights
# ----------------------------------------------------------------------

MODEL_KINDS = {"fno": (FnoConfig, FnoParams), "single_state": (SingleStateConfig, SingleStateModel)}


def encode_weights(kind: str, config: Dict[str, Any], arrays: Dict[str, np.ndarray],
                   extra: Dict[str, Any] = None) -> bytes:
    entries: List[Dict[str, Any]] = []
    chunks: List[bytes] = []
    offset = 0
    for name in sorted(arrays):
        chunk = _to_payload(arrays[name])
        entries.append({"name": name, "shape": list(np.shape(arrays[name])), "offset": offset, "nbytes": len(chunk)})
        chunks.append(chunk)
        offset += len(chunk)
    header = {"kind": kind, "config": config, "arrays": entries, "dtype": DTYPE, "extra": extra or {}}
    return _frame(WEIGHT_MAGIC, header, b"".join(chunks))


def decode_weights(data: bytes, source: str = "<bytes>") -> Tuple[Dict[str, Any], Dict[str, np.ndarray]]:
    header, payload = _unframe(data, WEIGHT_MAGIC, source)
    arrays = {}
    for entry in header["arrays"]:
        start, size = entry["offset"], entry["nbytes"]
        shape = tuple(entry["shape"])
        if start < 0 or start + size > len(payload) or size != 8 * int(np.prod(shape, dtype=np.int64)):
            raise ManifestError(f"{source}: array {entry['name']} does not fit the payload")
        arrays[entry["name"]] = _from_payload(payload[start:start + size], shape)
    return header, arrays


def save_model(path: PathLike, model: Union[FnoParams, SingleStateModel]) -> Path:
    path = Path(path)
    if isinstance(model, FnoParams):
        data = encode_weights("fno", model.config.to_dict(), model.arrays)
    else:
        data = encode_weights("single_state", model.config.to_dict(), model.arrays, {"report": model.report})
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)
    logger.info(f"💾 saved {type(model).__name__} weights to {path}")
    return path


def load_model(path: PathLike, expect: str = None) -> Union[FnoParams, SingleStateModel]:
    path = Path(path)
    if not path.exists():
        raise ManifestError(f"weight file not found: {path}")
    header, arrays = decode_weights(path.read_bytes(), str(path))
    kind = header.get("kind")
    if kind not in MODEL_KINDS:
        raise ManifestError(f"{path}: unknown model kind {kind!r}")
    if expect is not None and kind != expect:
        raise ManifestError(f"{path}: holds a {kind} model, expected {expect}")
    config_cls, model_cls = MODEL_KINDS[kind]
    config = config_cls.from_dict(header["config"])
    if kind == "fno":
        return FnoParams(config, arrays)
    return SingleStateModel(config, arrays, header.get("extra", {}).get("report", {}))


# ----------------------------------------------------------------------
# trajectories
# ----------------------------------------------------------------------

def save_trajectory(path: PathLike, traj: Trajectory, equation: str, params: Dict[str, Any]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {
        "equation": equation,
        "params": params,
        "grid": traj.grid.to_dict(),
        "time": [float(t) for t in traj.times],
        "provenance": traj.provenance,
    }
    return save_snapshot(path, traj.values, header)


def load_trajectory(path: PathLike) -> Trajectory:
    header, values = load_snapshot(path)
    if header.get("time") is None:
        raise ManifestError(f"{path}: container has no time stamps")
    return Trajectory(GridSpec.from_dict(header["grid"]), np.array(header["time"]), values, header["provenance"])
