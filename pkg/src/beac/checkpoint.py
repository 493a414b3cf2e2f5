"""Policy checkpoints: a one-line JSON header plus a raw float64 payload.

The header (canonical JSON, so byte-reproducible) carries the model config,
normalization statistics, arbitrary training metadata, and a parameter
manifest of (name, shape, byte offset) entries. The payload is each
parameter's little-endian float64 bytes concatenated in manifest order.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor
from .data import NormalizationStats, canonical_dumps
from .models import ModelConfig

SCHEMA = "push-policy-v1"


@dataclass
class Checkpoint:
    params: dict[str, Tensor]
    model_config: ModelConfig
    stats: NormalizationStats
    train_meta: dict


def save_checkpoint(path: str, params: dict[str, Tensor], model_config: ModelConfig,
                    stats: NormalizationStats, train_meta: dict | None = None) -> None:
    manifest = []
    chunks = []
    offset = 0
    for name, tensor in params.items():
        data = np.ascontiguousarray(tensor.data, dtype="<f8")
        manifest.append({"name": name, "shape": list(tensor.shape), "offset": offset})
        chunks.append(data.tobytes())
        offset += len(chunks[-1])
    header = canonical_dumps({
        "schema": SCHEMA,
        "model": model_config.to_dict(),
        "stats": stats.to_dict(),
        "train": train_meta or {},
        "dtype": "<f8",
        "params": manifest,
        "payload_bytes": offset,
    })
    blob = header.encode() + b"\n" + b"".join(chunks)
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_checkpoint(path: str) -> Checkpoint:
    with open(path, "rb") as f:
        blob = f.read()
    newline = blob.find(b"\n")
    if newline < 0:
        raise ValueError(f"{path}: missing checkpoint header")
    header = json.loads(blob[:newline])
    if header.get("schema") != SCHEMA:
        raise ValueError(f"{path}: unknown schema {header.get('schema')!r}")
    payload = blob[newline + 1:]
    if len(payload) != header["payload_bytes"]:
        raise ValueError(
            f"{path}: payload is {len(payload)} bytes, header says "
            f"{header['payload_bytes']}")
    params = {}
    for entry in header["params"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = entry["offset"]
        arr = np.frombuffer(payload, dtype="<f8", count=count, offset=start)
        params[entry["name"]] = Tensor(arr.reshape(shape))
    return Checkpoint(
        params=params,
        model_config=ModelConfig.from_dict(header["model"]),
        stats=NormalizationStats.from_dict(header["stats"]),
        train_meta=header.get("train", {}),
    )
