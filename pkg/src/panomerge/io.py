"""Bit-exact binary file formats and their readers/writers.

TensorFile:   magic "PMT1", dtype code (u8: 1=f32, 2=u16, 3=u8), ndim (u8),
              dims (u32 LE each), then the row-major little-endian payload.
PanopticFile: instance map as a u16 TensorFile (N, H, W) plus a JSON sidecar
              (same path with a .json suffix) holding instance_to_class and
              the class table.
SplatFile:    magic "PSW1", counts G, N, H, W (u32 LE), then a stream of
              (splat_id u32, view u16, pixel u32, weight f32) records.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .masks import ClassTable, PanopticMap
from .uplift import SplatWeightTable

TENSOR_MAGIC = b"PMT1"
SPLAT_MAGIC = b"PSW1"

_DTYPES = {1: np.dtype("<f4"), 2: np.dtype("<u2"), 3: np.dtype("u1")}
_CODES = {np.dtype("float32"): 1, np.dtype("uint16"): 2, np.dtype("uint8"): 3}

_SPLAT_RECORD = np.dtype(
    [("splat", "<u4"), ("view", "<u2"), ("pixel", "<u4"), ("weight", "<f4")]
)


class FormatError(Exception):
    """Raised when a file does not conform to one of the binary formats."""


def write_tensor(path, array: np.ndarray) -> None:
    array = np.asarray(array)
    code = _CODES.get(array.dtype)
    if code is None:
        raise ValueError(f"unsupported tensor dtype {array.dtype}")
    if array.ndim > 255:
        raise ValueError("too many dimensions")
    with open(path, "wb") as f:
        f.write(TENSOR_MAGIC)
        f.write(struct.pack("<BB", code, array.ndim))
        f.write(struct.pack(f"<{array.ndim}I", *array.shape))
        f.write(np.ascontiguousarray(array, dtype=_DTYPES[code]).tobytes())


def read_tensor(path) -> np.ndarray:
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != TENSOR_MAGIC:
            raise FormatError(f"{path}: bad tensor magic {magic!r}")
        header = f.read(2)
        if len(header) != 2:
            raise FormatError(f"{path}: truncated header")
        code, ndim = struct.unpack("<BB", header)
        if code not in _DTYPES:
            raise FormatError(f"{path}: unknown dtype code {code}")
        raw = f.read(4 * ndim)
        if len(raw) != 4 * ndim:
            raise FormatError(f"{path}: truncated dims")
        dims = struct.unpack(f"<{ndim}I", raw)
        dtype = _DTYPES[code]
        expected = int(np.prod(dims, dtype=np.int64)) * dtype.itemsize
        payload = f.read()
        if len(payload) != expected:
            raise FormatError(
                f"{path}: payload length {len(payload)} != expected {expected}"
            )
    return np.frombuffer(payload, dtype=dtype).reshape(dims).copy()


def _sidecar(path) -> Path:
    return Path(path).with_suffix(".json")


def write_panoptic(path, pmap: PanopticMap) -> None:
    inst = pmap.instance_ids
    if inst.max(initial=0) > np.iinfo(np.uint16).max:
        raise ValueError("instance IDs exceed u16 range")
    write_tensor(path, inst.astype(np.uint16))
    sidecar = {
        "instance_to_class": {str(k): int(v) for k, v in pmap.instance_to_class.items()},
        "class_table": {
            "names": list(pmap.class_table.names),
            "is_thing": list(pmap.class_table.is_thing),
        },
        "void_id": 0,
    }
    _sidecar(path).write_text(json.dumps(sidecar, indent=1, sort_keys=True))


def read_panoptic(path) -> PanopticMap:
    inst = read_tensor(path)
    if inst.ndim != 3:
        raise FormatError(f"{path}: panoptic instance map must be 3D (N, H, W)")
    try:
        meta = json.loads(_sidecar(path).read_text())
        table = ClassTable(
            tuple(meta["class_table"]["names"]),
            tuple(meta["class_table"]["is_thing"]),
        )
        mapping = {int(k): int(v) for k, v in meta["instance_to_class"].items()}
    except (KeyError, ValueError, json.JSONDecodeError) as exc:
        raise FormatError(f"{_sidecar(path)}: bad sidecar: {exc}") from exc
    return PanopticMap.from_instances(inst.astype(np.int32), mapping, table)


def write_class_table(path, table: ClassTable) -> None:
    payload = {"names": list(table.names), "is_thing": list(table.is_thing)}
    Path(path).write_text(json.dumps(payload, indent=1, sort_keys=True))


def read_class_table(path) -> ClassTable:
    try:
        meta = json.loads(Path(path).read_text())
        return ClassTable(tuple(meta["names"]), tuple(meta["is_thing"]))
    except (KeyError, ValueError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: bad class table: {exc}") from exc


def write_splats(path, table: SplatWeightTable) -> None:
    records = np.empty(table.num_records, dtype=_SPLAT_RECORD)
    records["splat"] = table.splat_ids
    records["view"] = table.views
    records["pixel"] = table.pixels
    records["weight"] = table.weights
    with open(path, "wb") as f:
        f.write(SPLAT_MAGIC)
        f.write(
            struct.pack(
                "<4I", table.num_splats, table.num_views, table.height, table.width
            )
        )
        f.write(records.tobytes())


def read_splats(path) -> SplatWeightTable:
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != SPLAT_MAGIC:
            raise FormatError(f"{path}: bad splat magic {magic!r}")
        raw = f.read(16)
        if len(raw) != 16:
            raise FormatError(f"{path}: truncated splat header")
        num_splats, num_views, height, width = struct.unpack("<4I", raw)
        payload = f.read()
    if len(payload) % _SPLAT_RECORD.itemsize:
        raise FormatError(f"{path}: splat record stream length mismatch")
    records = np.frombuffer(payload, dtype=_SPLAT_RECORD)
    try:
        return SplatWeightTable(
            num_splats=num_splats,
            num_views=num_views,
            height=height,
            width=width,
            splat_ids=records["splat"].astype(np.int64),
            views=records["view"].astype(np.int64),
            pixels=records["pixel"].astype(np.int64),
            weights=records["weight"].astype(np.float64),
        )
    except ValueError as exc:
        raise FormatError(f"{path}: invalid splat table: {exc}") from exc
