"""Core value types for skeleton/depth action samples.

Skeleton sequences are stored densely as a (T, J, 3) float64 array of
camera-space joint positions in meters; depth sequences as (T, H, W)
float64 arrays of millimeter readings where 0 means "no reading".
All values are immutable after construction (arrays are write-locked).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SkeletonFrame:
    """One frame of J 3D joints (meters) plus its index in the sequence."""

    joints: np.ndarray  # (J, 3)
    timestamp_index: int = 0

    def __post_init__(self):
        joints = np.asarray(self.joints, dtype=np.float64)
        if joints.ndim != 2 or joints.shape[1] != 3:
            raise DataError(f"joints must have shape (J, 3), got {joints.shape}")
        if joints.shape[0] < 2:
            raise DataError("a skeleton frame needs at least 2 joints")
        if not np.all(np.isfinite(joints)):
            raise DataError("non-finite joint coordinate")
        if self.timestamp_index < 0:
            raise DataError("timestamp_index must be non-negative")
        object.__setattr__(self, "joints", _frozen(joints))

    @property
    def joint_count(self) -> int:
        return self.joints.shape[0]


@dataclass(frozen=True)
class SkeletonSequence:
    """T frames of J joints as a (T, J, 3) array."""

    positions: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=np.float64)
        if pos.ndim != 3 or pos.shape[2] != 3:
            raise DataError(f"positions must have shape (T, J, 3), got {pos.shape}")
        if pos.shape[1] < 2:
            raise DataError("sequences need at least 2 joints per frame")
        if not np.all(np.isfinite(pos)):
            raise DataError("non-finite joint coordinate")
        object.__setattr__(self, "positions", _frozen(pos))

    def __len__(self) -> int:
        return self.positions.shape[0]

    @property
    def joint_count(self) -> int:
        return self.positions.shape[1]

    def frame(self, t: int) -> SkeletonFrame:
        return SkeletonFrame(self.positions[t], timestamp_index=t)

    def frames(self) -> list[SkeletonFrame]:
        return [self.frame(t) for t in range(len(self))]

    def slice(self, start: int, stop: int) -> "SkeletonSequence":
        """Sub-sequence covering frames start..stop inclusive."""
        return SkeletonSequence(self.positions[start:stop + 1])


@dataclass(frozen=True)
class DepthFrame:
    """One depth map: millimeters, 0 = missing reading."""

    values: np.ndarray  # (H, W)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 2:
            raise DataError(f"depth frame must be 2D, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)) or np.any(vals < 0):
            raise DataError("depth values must be finite and >= 0")
        object.__setattr__(self, "values", _frozen(vals))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class DepthSequence:
    """T depth frames as a (T, H, W) array of millimeters (0 = missing)."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 3:
            raise DataError(f"depth sequence must be (T, H, W), got {vals.shape}")
        if not np.all(np.isfinite(vals)) or np.any(vals < 0):
            raise DataError("depth values must be finite and >= 0")
        object.__setattr__(self, "values", _frozen(vals))

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]

    def frame(self, t: int) -> DepthFrame:
        return DepthFrame(self.values[t])

    def slice(self, start: int, stop: int) -> "DepthSequence":
        """Sub-sequence covering frames start..stop inclusive."""
        return DepthSequence(self.values[start:stop + 1])


@dataclass(frozen=True)
class ActionSample:
    """One action instance: a skeleton sequence, the matching depth
    sequence, an optional class label and a sample id."""

    skeleton: SkeletonSequence
    depth: DepthSequence
    label: str | None = None
    sample_id: str = ""

    def __post_init__(self):
        if len(self.skeleton) != len(self.depth):
            raise DataError(
                f"sample {self.sample_id!r}: skeleton has {len(self.skeleton)} "
                f"frames but depth has {len(self.depth)}")
        if len(self.skeleton) < 2:
            raise DataError(f"sample {self.sample_id!r}: needs >= 2 frames")

    @property
    def frame_count(self) -> int:
        return len(self.skeleton)


@dataclass(frozen=True)
class RotationSpec:
    """Rigid view rotation: yaw about the y axis then pitch about the x
    axis, both about ``pivot`` (default: skeleton centroid of the sample)."""

    yaw_degrees: float
    pitch_degrees: float
    pivot: np.ndarray | None = None

    def __post_init__(self):
        for name, val in (("yaw_degrees", self.yaw_degrees),
                          ("pitch_degrees", self.pitch_degrees)):
            if not np.isfinite(val):
                raise DataError(f"{name} must be finite")
            if not -180.0 <= val <= 180.0:
                raise DataError(f"{name} must be in [-180, 180], got {val}")
        if self.pivot is not None:
            pivot = np.asarray(self.pivot, dtype=np.float64)
            if pivot.shape != (3,) or not np.all(np.isfinite(pivot)):
                raise DataError("pivot must be a finite 3-vector")
            object.__setattr__(self, "pivot", _frozen(pivot))


def project_skeleton(frame: SkeletonFrame) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Project a frame onto the three orthogonal Cartesian planes.

    Returns (front, side, top) 2D point lists, one row per joint:
    front = (x, y), side = (z, y), top = (x, z).
    """
    j = frame.joints
    front = j[:, [0, 1]].copy()
    side = j[:, [2, 1]].copy()
    top = j[:, [0, 2]].copy()
    return front, side, top
