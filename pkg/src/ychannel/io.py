"""Binary matrix container and small JSON helpers.

Container layout (all integers little-endian)::

    magic      4 bytes  b"YCMX"
    version    uint32   currently 1
    hdr_len    uint32   length of the UTF-8 JSON header that follows
    header     JSON     {"meta": {...}, "matrices": [{"name", "rows", "cols"}, ...]}
    payload    for each matrix in header order: rows*cols complex entries,
               row-major, each entry two float64 values (real, imaginary)

The payload of a matrix is exactly ``numpy.complex128`` memory in C order.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Mapping

import numpy as np

MAGIC = b"YCMX"
VERSION = 1


class ContainerError(ValueError):
    pass


def write_matrices(path: str | Path, matrices: Mapping[str, np.ndarray], meta: dict | None = None) -> None:
    entries = []
    blobs = []
    for name, m in matrices.items():
        a = np.asarray(m, dtype="<c16")
        if a.ndim != 2:
            raise ContainerError(f"matrix {name!r} must be 2-D, got shape {a.shape}")
        entries.append({"name": name, "rows": a.shape[0], "cols": a.shape[1]})
        blobs.append(np.ascontiguousarray(a).tobytes())
    header = json.dumps({"meta": meta or {}, "matrices": entries}, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(header)))
        fh.write(header)
        for blob in blobs:
            fh.write(blob)


def read_matrices(path: str | Path) -> tuple[dict, dict[str, np.ndarray]]:
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise ContainerError(f"{path}: not a matrix container")
    version, hdr_len = struct.unpack_from("<II", data, 4)
    if version != VERSION:
        raise ContainerError(f"{path}: unsupported container version {version}")
    off = 12
    header = json.loads(data[off:off + hdr_len])
    off += hdr_len
    out = {}
    for e in header["matrices"]:
        n = e["rows"] * e["cols"]
        if off + 16 * n > len(data):
            raise ContainerError(f"{path}: truncated payload for {e['name']!r}")
        a = np.frombuffer(data, dtype="<c16", count=n, offset=off).reshape(e["rows"], e["cols"])
        out[e["name"]] = a.astype(np.complex128)
        off += 16 * n
    if off != len(data):
        raise ContainerError(f"{path}: {len(data) - off} trailing bytes")
    return header["meta"], out


def matrix_to_json(m: np.ndarray) -> dict:
    m = np.asarray(m)
    return {"shape": list(m.shape), "re": m.real.tolist(), "im": m.imag.tolist()}


def matrix_from_json(obj: dict) -> np.ndarray:
    a = np.array(obj["re"], dtype=float) + 1j * np.array(obj["im"], dtype=float)
    return a.reshape(obj["shape"])


def dump_json(obj, path: str | Path | None = None) -> str:
    text = json.dumps(obj, indent=2, sort_keys=True)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text
