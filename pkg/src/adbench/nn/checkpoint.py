"""JSON checkpoint of a parameter list: shape-tagged little-endian tensors, base64 encoded."""

from __future__ import annotations

import base64
import json
from pathlib import Path

import numpy as np

FORMAT = "adbench-netparams"
VERSION = 1


def dump_params(params, meta: dict | None = None) -> dict:
    tensors = []
    for p in params:
        p = np.asarray(p)
        dtype = "<f8" if p.dtype == np.float64 else "<f4"
        tensors.append({
            "shape": list(p.shape),
            "dtype": dtype,
            "data": base64.b64encode(np.ascontiguousarray(p, dtype=dtype).tobytes()).decode("ascii"),
        })
    return {"format": FORMAT, "version": VERSION, "meta": meta or {}, "tensors": tensors}


def load_params_dict(doc: dict) -> list[np.ndarray]:
    if doc.get("format") != FORMAT:
        raise ValueError("not a netparams checkpoint")
    if doc.get("version") != VERSION:
        raise ValueError(f"unsupported checkpoint version {doc.get('version')}")
    out = []
    for t in doc["tensors"]:
        raw = base64.b64decode(t["data"])
        arr = np.frombuffer(raw, dtype=np.dtype(t["dtype"])).reshape(t["shape"])
        out.append(arr.astype(arr.dtype.newbyteorder("=")).copy())
    return out


def save_params(path, params, meta: dict | None = None) -> None:
    Path(path).write_text(json.dumps(dump_params(params, meta)), encoding="utf-8")


def load_params(path) -> list[np.ndarray]:
    return load_params_dict(json.loads(Path(path).read_text(encoding="utf-8")))
