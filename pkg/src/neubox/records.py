"""Run records (JSON), CSV traces and binary field dumps."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .errors import ConfigError

MAGIC = b"NEUBOXF1"
DUMP_VERSION = 1
HEADER_SIZE = 64


def _clean(obj):
    """Convert numpy scalars/arrays to plain JSON types; non-finite floats
    become strings so the output stays strict JSON."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    return obj


def to_json(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def atomic_write(path, data: str | bytes) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=path.suffix)
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def write_field(path, values: np.ndarray, d: int, box: float) -> Path:
    """Flat little-endian float64 dump with a 64-byte header:
    magic, version, d, m (uint64) and box side (float64), zero padded."""
    m = values.shape[0]
    if values.shape != (m,) * (2 * d):
        raise ConfigError("field shape does not match (m,)*2d")
    header = MAGIC + struct.pack("<QQQd", DUMP_VERSION, d, m, box)
    header = header.ljust(HEADER_SIZE, b"\0")
    body = np.ascontiguousarray(values, dtype="<f8").tobytes()
    return atomic_write(path, header + body)


def read_field(path):
    """Returns (values, d, box)."""
    raw = Path(path).read_bytes()
    if len(raw) < HEADER_SIZE or raw[:8] != MAGIC:
        raise ConfigError(f"{path}: not a field dump (bad magic)")
    version, d, m, box = struct.unpack("<QQQd", raw[8:40])
    if version != DUMP_VERSION:
        raise ConfigError(f"{path}: unsupported dump version {version}")
    count = m ** (2 * d)
    if len(raw) != HEADER_SIZE + 8 * count:
        raise ConfigError(f"{path}: truncated field dump")
    values = np.frombuffer(raw, dtype="<f8", offset=HEADER_SIZE, count=count)
    return values.reshape((m,) * (2 * d)).astype(float), int(d), float(box)
