"""Byte-deterministic checkpoint container.

The standard ``np.savez`` format embeds zip metadata (timestamps, compression
details) that varies between writes, which breaks byte-identical
reproducibility. This module defines a minimal container that holds a JSON
header plus raw little-endian array payloads and nothing else: writing the
same logical state twice produces the same bytes.

Layout::

    MAGIC (6 bytes)
    header length (8-byte little-endian unsigned int)
    header JSON (utf-8): {"format_version", "kind", "meta", "arrays": [...]}
    concatenated raw array bytes, in header order

Array descriptors record name, dtype, and shape; payloads are C-contiguous.
Only little-endian float64 and int64 arrays are accepted, which covers every
parameter vector and optimizer accumulator in this package.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import CheckpointError

MAGIC = b"BWEDA\x00"
FORMAT_VERSION = 1

_ALLOWED_DTYPES = {"<f8", "<i8"}


def _canonical_json(obj: object) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def write_container(path: str | Path, kind: str, meta: dict, arrays: dict[str, np.ndarray]) -> None:
    """Write ``arrays`` and JSON-serializable ``meta`` to ``path``.

    The output bytes depend only on the arguments, never on time or
    environment, so two writes of identical state are byte-identical.
    """
    descriptors = []
    payloads = []
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr)
        dtype = arr.dtype.newbyteorder("<").str
        if dtype not in _ALLOWED_DTYPES:
            raise CheckpointError(f"array {name!r} has unsupported dtype {arr.dtype}")
        descriptors.append({"name": name, "dtype": dtype, "shape": list(arr.shape)})
        payloads.append(arr.astype(dtype, copy=False).tobytes(order="C"))
    header = {
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "meta": meta,
        "arrays": descriptors,
    }
    header_bytes = _canonical_json(header).encode("utf-8")
    blob = b"".join([MAGIC, struct.pack("<Q", len(header_bytes)), header_bytes, *payloads])
    Path(path).write_bytes(blob)


def read_container(path: str | Path, expected_kind: str | None = None) -> tuple[str, dict, dict[str, np.ndarray]]:
    """Read a container, returning ``(kind, meta, arrays)``.

    Raises ``CheckpointError`` on truncation, bad magic, version mismatch,
    or (when ``expected_kind`` is given) a kind mismatch.
    """
    raw = Path(path).read_bytes()
    if len(raw) < len(MAGIC) + 8:
        raise CheckpointError(f"{path}: file too short to be a checkpoint container")
    if raw[: len(MAGIC)] != MAGIC:
        raise CheckpointError(f"{path}: bad magic bytes, not a checkpoint container")
    (header_len,) = struct.unpack("<Q", raw[len(MAGIC) : len(MAGIC) + 8])
    header_start = len(MAGIC) + 8
    if len(raw) < header_start + header_len:
        raise CheckpointError(f"{path}: truncated header")
    try:
        header = json.loads(raw[header_start : header_start + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: unreadable header: {exc}") from exc
    if header.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(
            f"{path}: unsupported format version {header.get('format_version')!r},"
            f" expected {FORMAT_VERSION}"
        )
    kind = header.get("kind")
    if expected_kind is not None and kind != expected_kind:
        raise CheckpointError(f"{path}: container kind {kind!r}, expected {expected_kind!r}")
    arrays: dict[str, np.ndarray] = {}
    offset = header_start + header_len
    for desc in header.get("arrays", []):
        dtype = desc["dtype"]
        if dtype not in _ALLOWED_DTYPES:
            raise CheckpointError(f"{path}: array {desc['name']!r} has unsupported dtype {dtype}")
        shape = tuple(int(s) for s in desc["shape"])
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        nbytes = count * np.dtype(dtype).itemsize
        if len(raw) < offset + nbytes:
            raise CheckpointError(f"{path}: truncated payload for array {desc['name']!r}")
        arr = np.frombuffer(raw, dtype=dtype, count=count, offset=offset).reshape(shape)
        arrays[desc["name"]] = arr.copy()
        offset += nbytes
    if offset != len(raw):
        raise CheckpointError(f"{path}: {len(raw) - offset} trailing bytes after payloads")
    return kind, header.get("meta", {}), arrays
