"""Binary weight files.

Layout: ``b"AGSC"``, format version (u32 LE), header length (u32 LE), UTF-8
JSON header (config, vocabulary, metadata, parameter names and shapes),
every parameter as little-endian float64 in header order, then the CRC32 of
all preceding bytes (u32 LE).
"""

from __future__ import annotations

import json
import os
import struct
import zlib
from pathlib import Path

import numpy as np

from .errors import DataError
from .model import Model, ModelConfig, param_shapes
from .vocab import Vocabulary

MAGIC = b"AGSC"
VERSION = 1


class WeightFileError(DataError):
    pass


def to_bytes(model: Model) -> bytes:
    order = param_shapes(model.config)
    header = {
        "config": model.config.to_json(),
        "vocab": model.vocab.to_json(),
        "meta": model.meta,
        "params": [[name, list(shape)] for name, shape in order],
    }
    head = json.dumps(header, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")
    parts = [MAGIC, struct.pack("<II", VERSION, len(head)), head]
    parts += [np.ascontiguousarray(model.params[name], dtype="<f8").tobytes() for name, _ in order]
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)


def from_bytes(blob: bytes) -> Model:
    if len(blob) < 16 or blob[:4] != MAGIC:
        raise WeightFileError("not an AGSC weight file")
    version, head_len = struct.unpack_from("<II", blob, 4)
    if version != VERSION:
        raise WeightFileError(f"unsupported weight format version {version}")
    body, (crc,) = blob[:-4], struct.unpack("<I", blob[-4:])
    if 12 + head_len > len(body):
        raise WeightFileError("truncated weight file header")
    try:
        header = json.loads(body[12 : 12 + head_len].decode("utf-8"))
    except ValueError as exc:
        raise WeightFileError(f"corrupt header: {exc}") from None
    config = ModelConfig.from_json(header["config"])
    order = [(name, tuple(shape)) for name, shape in header["params"]]
    if order != param_shapes(config):
        raise WeightFileError("parameter table does not match the config")
    need = 12 + head_len + 8 * sum(int(np.prod(s)) for _, s in order)
    if len(body) != need:
        raise WeightFileError(f"truncated weight file: {len(body)} bytes, expected {need}")
    if zlib.crc32(body) & 0xFFFFFFFF != crc:
        raise WeightFileError("checksum mismatch")
    params, off = {}, 12 + head_len
    for name, shape in order:
        n = int(np.prod(shape))
        params[name] = np.frombuffer(body, dtype="<f8", count=n, offset=off).astype(np.float64).reshape(shape)
        off += 8 * n
    return Model(config, params, Vocabulary.from_json(header["vocab"]), header["meta"])


def save_weights(model: Model, path) -> Path:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(to_bytes(model))
    os.replace(tmp, path)
    return path


def load_weights(path) -> Model:
    return from_bytes(Path(path).read_bytes())
