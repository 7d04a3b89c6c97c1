"""File formats: skeleton text, depth binary, sample manifests.

Skeleton file: line 1 is "J T" (joints per frame, frame count), followed
by T*J lines of "x y z" in decimal meters, frames outermost.

Depth file: binary, header of three little-endian uint32 (T, width,
height), then T frames of width*height little-endian uint16 millimeter
values, row-major.

Manifest: CSV with one row per sample: sample_id, skeleton_path,
depth_path, label (label may be empty for unlabeled samples). Relative
paths are resolved against the manifest's directory.
"""
from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .datatypes import ActionSample, DepthSequence, SkeletonSequence
from .errors import ParseError

_DEPTH_HEADER = struct.Struct("<III")


def load_skeleton(path: str | Path, joint_count: int) -> SkeletonSequence:
    """Read a skeleton text file, checking it has exactly ``joint_count``
    joints per frame. Errors name the offending line or frame."""
    path = Path(path)
    if joint_count < 2:
        raise ParseError("joint_count must be >= 2")
    with path.open("r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError(f"{path}: empty file")

    header = lines[0].split()
    if len(header) != 2:
        raise ParseError(f"{path}: line 1: expected header 'J T'")
    try:
        file_joints, frame_count = int(header[0]), int(header[1])
    except ValueError:
        raise ParseError(f"{path}: line 1: non-integer header") from None
    if file_joints != joint_count:
        raise ParseError(f"{path}: file declares {file_joints} joints, "
                         f"expected {joint_count}")
    if frame_count < 1:
        raise ParseError(f"{path}: frame count must be >= 1")

    rows = np.empty((frame_count * joint_count, 3), dtype=np.float64)
    lineno = 1
    filled = 0
    for raw in lines[1:]:
        lineno += 1
        text = raw.strip()
        if not text:
            continue
        if filled >= frame_count * joint_count:
            raise ParseError(f"{path}: line {lineno}: more joint lines than "
                             f"the declared {frame_count}x{joint_count}")
        parts = text.split()
        if len(parts) != 3:
            raise ParseError(f"{path}: line {lineno}: expected 'x y z'")
        try:
            xyz = [float(p) for p in parts]
        except ValueError:
            raise ParseError(f"{path}: line {lineno}: malformed number") from None
        if not all(np.isfinite(xyz)):
            raise ParseError(f"{path}: line {lineno}: non-finite value")
        rows[filled] = xyz
        filled += 1

    if filled != frame_count * joint_count:
        frame = filled // joint_count + 1
        got = filled - (frame - 1) * joint_count
        raise ParseError(f"{path}: frame {frame}: expected {joint_count} "
                         f"joints, got {got}")
    return SkeletonSequence(rows.reshape(frame_count, joint_count, 3))


def save_skeleton(seq: SkeletonSequence, path: str | Path) -> None:
    """Write the skeleton text format. Coordinates use shortest
    round-trip decimal representation, so load(save(s)) is bit-exact."""
    path = Path(path)
    pos = seq.positions
    t, j, _ = pos.shape
    with path.open("w", encoding="ascii") as fh:
        fh.write(f"{j} {t}\n")
        for frame in pos:
            for x, y, z in frame:
                fh.write(f"{x!r} {y!r} {z!r}\n")


def load_depth(path: str | Path) -> DepthSequence:
    path = Path(path)
    blob = path.read_bytes()
    if len(blob) < _DEPTH_HEADER.size:
        raise ParseError(f"{path}: truncated depth header")
    t, width, height = _DEPTH_HEADER.unpack_from(blob)
    if t < 1 or width < 1 or height < 1:
        raise ParseError(f"{path}: bad depth header ({t}, {width}, {height})")
    expected = _DEPTH_HEADER.size + 2 * t * width * height
    if len(blob) != expected:
        raise ParseError(f"{path}: expected {expected} bytes, got {len(blob)}")
    vals = np.frombuffer(blob, dtype="<u2", offset=_DEPTH_HEADER.size)
    return DepthSequence(vals.reshape(t, height, width).astype(np.float64))


def save_depth(seq: DepthSequence, path: str | Path) -> None:
    path = Path(path)
    vals = np.rint(seq.values)
    if np.any(vals > np.iinfo(np.uint16).max):
        raise ParseError("depth value exceeds uint16 millimeter range")
    t, h, w = vals.shape
    with path.open("wb") as fh:
        fh.write(_DEPTH_HEADER.pack(t, w, h))
        fh.write(np.ascontiguousarray(vals.astype("<u2")).tobytes())


@dataclass(frozen=True)
class ManifestEntry:
    """One manifest row; ``load()`` materializes the sample lazily."""

    sample_id: str
    skeleton_path: Path
    depth_path: Path
    label: str | None
    joint_count: int

    def load(self) -> ActionSample:
        skeleton = load_skeleton(self.skeleton_path, self.joint_count)
        depth = load_depth(self.depth_path)
        return ActionSample(skeleton=skeleton, depth=depth,
                            label=self.label, sample_id=self.sample_id)


def read_manifest(path: str | Path, joint_count: int) -> list[ManifestEntry]:
    path = Path(path)
    base = path.parent
    entries = []
    with path.open("r", newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 4:
                raise ParseError(f"{path}: line {lineno}: expected 4 columns "
                                 f"(sample_id, skeleton_path, depth_path, label)")
            sample_id, skel, depth, label = (c.strip() for c in row)
            if not sample_id:
                raise ParseError(f"{path}: line {lineno}: empty sample_id")
            entries.append(ManifestEntry(
                sample_id=sample_id,
                skeleton_path=base / skel,
                depth_path=base / depth,
                label=label or None,
                joint_count=joint_count,
            ))
    if not entries:
        raise ParseError(f"{path}: empty manifest")
    return entries


def write_manifest(entries: list[ManifestEntry], path: str | Path) -> None:
    path = Path(path)
    base = path.parent
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        for e in entries:
            try:
                skel = e.skeleton_path.relative_to(base)
                depth = e.depth_path.relative_to(base)
            except ValueError:
                skel, depth = e.skeleton_path, e.depth_path
            writer.writerow([e.sample_id, skel, depth, e.label or ""])
