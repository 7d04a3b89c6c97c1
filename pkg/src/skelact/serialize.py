"""Portable binary container for trained models.

Layout (all integers little-endian):

    magic  b"SKAC"
    u32    format version (currently 1)
    u64    manifest length, then manifest bytes (UTF-8 JSON listing each
           component's name, byte length and SHA-256 hex digest)
    component payloads, concatenated in manifest order

Payloads encode nested values with one tag byte per node:
'N' none, 'T'/'F' bool, 'I' i64, 'D' f64, 'S' u64-length utf-8 string,
'L' u64 count + items, 'M' u64 count + sorted (key, value) pairs,
'A' ndarray as dtype string + u8 ndim + u64 dims + raw little-endian
C-order bytes. Writing the same values twice yields identical bytes, so
training runs with identical seeds produce bit-identical archives.
"""
from __future__ import annotations

import hashlib
import io
import json
import struct
from pathlib import Path

import numpy as np

from .errors import ModelFormatError

MAGIC = b"SKAC"
FORMAT_VERSION = 1

_U32 = struct.Struct("<I")
_U64 = struct.Struct("<Q")
_I64 = struct.Struct("<q")
_F64 = struct.Struct("<d")


def _pack_into(buf: io.BytesIO, value) -> None:
    if value is None:
        buf.write(b"N")
    elif isinstance(value, bool):
        buf.write(b"T" if value else b"F")
    elif isinstance(value, (int, np.integer)):
        buf.write(b"I")
        buf.write(_I64.pack(int(value)))
    elif isinstance(value, (float, np.floating)):
        buf.write(b"D")
        buf.write(_F64.pack(float(value)))
    elif isinstance(value, str):
        raw = value.encode("utf-8")
        buf.write(b"S")
        buf.write(_U64.pack(len(raw)))
        buf.write(raw)
    elif isinstance(value, np.ndarray):
        dtype = value.dtype.newbyteorder("<")
        raw = np.ascontiguousarray(value, dtype=dtype).tobytes()
        name = dtype.str.encode("ascii")
        buf.write(b"A")
        buf.write(_U64.pack(len(name)))
        buf.write(name)
        buf.write(bytes([value.ndim]))
        for dim in value.shape:
            buf.write(_U64.pack(dim))
        buf.write(_U64.pack(len(raw)))
        buf.write(raw)
    elif isinstance(value, (list, tuple)):
        buf.write(b"L")
        buf.write(_U64.pack(len(value)))
        for item in value:
            _pack_into(buf, item)
    elif isinstance(value, dict):
        buf.write(b"M")
        buf.write(_U64.pack(len(value)))
        for key in sorted(value):
            if not isinstance(key, str):
                raise ModelFormatError(f"dict keys must be strings, got {key!r}")
            _pack_into(buf, key)
            _pack_into(buf, value[key])
    else:
        raise ModelFormatError(f"cannot serialize value of type {type(value)!r}")


def pack_obj(value) -> bytes:
    buf = io.BytesIO()
    _pack_into(buf, value)
    return buf.getvalue()


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.blob):
            raise ModelFormatError("payload truncated")
        out = self.blob[self.pos:self.pos + n]
        self.pos += n
        return out

    def u64(self) -> int:
        return _U64.unpack(self.take(8))[0]


def _unpack_from(r: _Reader):
    tag = r.take(1)
    if tag == b"N":
        return None
    if tag == b"T":
        return True
    if tag == b"F":
        return False
    if tag == b"I":
        return _I64.unpack(r.take(8))[0]
    if tag == b"D":
        return _F64.unpack(r.take(8))[0]
    if tag == b"S":
        return r.take(r.u64()).decode("utf-8")
    if tag == b"A":
        dtype = np.dtype(r.take(r.u64()).decode("ascii"))
        ndim = r.take(1)[0]
        shape = tuple(r.u64() for _ in range(ndim))
        raw = r.take(r.u64())
        return np.frombuffer(raw, dtype=dtype).reshape(shape).copy()
    if tag == b"L":
        return [_unpack_from(r) for _ in range(r.u64())]
    if tag == b"M":
        n = r.u64()
        out = {}
        for _ in range(n):
            key = _unpack_from(r)
            out[key] = _unpack_from(r)
        return out
    raise ModelFormatError(f"unknown payload tag {tag!r}")


def unpack_obj(blob: bytes):
    r = _Reader(blob)
    value = _unpack_from(r)
    if r.pos != len(blob):
        raise ModelFormatError("trailing bytes after payload")
    return value


def write_archive(components: dict[str, object], path: str | Path) -> None:
    """Serialize named components with per-component checksums."""
    payloads = {name: pack_obj(value) for name, value in components.items()}
    manifest = {
        "format_version": FORMAT_VERSION,
        "components": [
            {"name": name, "length": len(blob),
             "sha256": hashlib.sha256(blob).hexdigest()}
            for name, blob in sorted(payloads.items())
        ],
    }
    mblob = json.dumps(manifest, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_U32.pack(FORMAT_VERSION))
        fh.write(_U64.pack(len(mblob)))
        fh.write(mblob)
        for entry in manifest["components"]:
            fh.write(payloads[entry["name"]])


def read_archive(path: str | Path) -> dict[str, object]:
    """Load an archive, verifying the version and every checksum."""
    blob = Path(path).read_bytes()
    if len(blob) < len(MAGIC) + 4 + 8 or blob[:4] != MAGIC:
        raise ModelFormatError(f"{path}: not a model archive")
    version = _U32.unpack_from(blob, 4)[0]
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"{path}: format version {version} is not "
                               f"supported (expected {FORMAT_VERSION})")
    mlen = _U64.unpack_from(blob, 8)[0]
    start = 16
    if start + mlen > len(blob):
        raise ModelFormatError(f"{path}: truncated manifest")
    try:
        manifest = json.loads(blob[start:start + mlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"{path}: bad manifest: {exc}") from None
    if manifest.get("format_version") != FORMAT_VERSION:
        raise ModelFormatError(f"{path}: manifest version mismatch")

    out: dict[str, object] = {}
    pos = start + mlen
    for entry in manifest["components"]:
        name, length = entry["name"], entry["length"]
        if pos + length > len(blob):
            raise ModelFormatError(f"{path}: component {name!r} truncated")
        payload = blob[pos:pos + length]
        pos += length
        digest = hashlib.sha256(payload).hexdigest()
        if digest != entry["sha256"]:
            raise ModelFormatError(f"{path}: checksum mismatch in component "
                                   f"{name!r}")
        out[name] = unpack_obj(payload)
    if pos != len(blob):
        raise ModelFormatError(f"{path}: trailing bytes after components")
    return out
