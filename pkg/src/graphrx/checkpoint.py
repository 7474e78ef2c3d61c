"""Single-file checkpoints: a JSON header followed by raw float32 blobs.

Layout::

    b"GRXCKPT\\n"  | uint64 LE header length | header (UTF-8 JSON, sorted keys)
    | blobs, little-endian float32, concatenated in header order

The header carries no timestamps, so saving the same content twice yields
the same bytes.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CheckpointError

MAGIC = b"GRXCKPT\n"
FORMAT_VERSION = 1
_BLOB_DTYPE = np.dtype("<f4")


@dataclass
class Checkpoint:
    kind: str
    config: dict
    tensors: dict[str, np.ndarray]
    vocab: dict[str, list[str]] | None = None
    feature_scheme: str | None = None
    meta: dict = field(default_factory=dict)

    def header(self, blobs: list[dict]) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "kind": self.kind,
            "config": self.config,
            "feature_scheme": self.feature_scheme,
            "vocab": self.vocab,
            "meta": self.meta,
            "dtype": _BLOB_DTYPE.str,
            "blobs": blobs,
        }


def _dumps(obj) -> bytes:
    try:
        return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False).encode("utf-8")
    except (TypeError, ValueError) as exc:
        raise CheckpointError(f"checkpoint header is not serializable: {exc}") from None


def to_bytes(ckpt: Checkpoint) -> bytes:
    blobs, chunks, offset = [], [], 0
    for name, value in ckpt.tensors.items():
        arr = np.asarray(value, dtype=_BLOB_DTYPE, order="C")
        raw = arr.tobytes()
        blobs.append({"name": name, "offset": offset, "shape": list(arr.shape), "nbytes": len(raw)})
        chunks.append(raw)
        offset += len(raw)
    header = _dumps(ckpt.header(blobs))
    return MAGIC + struct.pack("<Q", len(header)) + header + b"".join(chunks)


def from_bytes(data: bytes, source: str = "<bytes>") -> Checkpoint:
    if not data.startswith(MAGIC):
        raise CheckpointError(f"{source}: not a graphrx checkpoint (bad magic)")
    start = len(MAGIC) + 8
    if len(data) < start:
        raise CheckpointError(f"{source}: truncated header")
    (hlen,) = struct.unpack("<Q", data[len(MAGIC):start])
    try:
        header = json.loads(data[start:start + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{source}: unreadable header ({exc})") from None
    if header.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(f"{source}: format version {header.get('format_version')!r}, "
                              f"this build reads {FORMAT_VERSION}")
    if header.get("dtype") != _BLOB_DTYPE.str:
        raise CheckpointError(f"{source}: unsupported blob dtype {header.get('dtype')!r}")
    body = data[start + hlen:]
    tensors, expected = {}, 0
    for blob in header["blobs"]:
        name, shape = blob["name"], tuple(blob["shape"])
        need = int(np.prod(shape, dtype=np.int64)) * _BLOB_DTYPE.itemsize
        if blob["nbytes"] != need:
            raise CheckpointError(f"{source}: blob {name!r} declares shape {shape} ({need} bytes) "
                                  f"but {blob['nbytes']} bytes")
        if blob["offset"] != expected or blob["offset"] + need > len(body):
            raise CheckpointError(f"{source}: blob {name!r} lies outside the data section")
        raw = body[blob["offset"]:blob["offset"] + need]
        tensors[name] = np.frombuffer(raw, dtype=_BLOB_DTYPE).reshape(shape).astype(np.float32)
        expected += need
    if expected != len(body):
        raise CheckpointError(f"{source}: {len(body) - expected} trailing bytes after the last blob")
    return Checkpoint(header["kind"], header["config"], tensors, header.get("vocab"),
                      header.get("feature_scheme"), header.get("meta") or {})


def save(path: str | Path, ckpt: Checkpoint) -> Path:
    """Write to a temporary file in the target directory, then rename."""
    path = Path(path)
    data = to_bytes(ckpt)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def load(path: str | Path, kind: str | None = None, config: dict | None = None) -> Checkpoint:
    """Read a checkpoint; ``kind`` and ``config`` entries must match if given."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc.strerror}") from None
    ckpt = from_bytes(data, str(path))
    check_compatible(ckpt, kind, config, str(path))
    return ckpt


def check_compatible(ckpt: Checkpoint, kind: str | None = None, config: dict | None = None,
                     source: str = "checkpoint") -> None:
    if kind is not None and ckpt.kind != kind:
        raise CheckpointError(f"{source} holds a {ckpt.kind!r} model, expected {kind!r}")
    for key, want in (config or {}).items():
        have = ckpt.config.get(key)
        if have != want:
            raise CheckpointError(f"{source}: config {key}={have!r} does not match requested {want!r}")
