"""View augmentation: rigid rotation of skeleton and depth point clouds.

A rotated sample mimics a virtual camera orbiting the subject. The
skeleton is rotated in closed form; the depth maps are regenerated by
back-projecting every valid pixel to 3D, rotating the cloud, and
re-rendering through the same camera with nearest-pixel splatting and a
z-buffer (closest point wins). Unfilled pixels keep the "missing" value 0.
"""
from __future__ import annotations

import numpy as np

from .camera import CameraIntrinsics
from .datatypes import ActionSample, DepthSequence, RotationSpec, SkeletonSequence


def rotation_matrix(yaw_degrees: float, pitch_degrees: float) -> np.ndarray:
    """Yaw about +y then pitch about +x, as one 3x3 matrix (R = Rx @ Ry)."""
    a = np.deg2rad(yaw_degrees)
    b = np.deg2rad(pitch_degrees)
    ca, sa = np.cos(a), np.sin(a)
    cb, sb = np.cos(b), np.sin(b)
    ry = np.array([[ca, 0.0, sa],
                   [0.0, 1.0, 0.0],
                   [-sa, 0.0, ca]])
    rx = np.array([[1.0, 0.0, 0.0],
                   [0.0, cb, -sb],
                   [0.0, sb, cb]])
    return rx @ ry


def rotate_points(points: np.ndarray, rot: np.ndarray, pivot: np.ndarray) -> np.ndarray:
    return (points - pivot) @ rot.T + pivot


def splat_depth(points: np.ndarray, intrinsics: CameraIntrinsics) -> np.ndarray:
    """Render a 3D point cloud (meters) to a depth map (millimeters).

    Nearest-pixel splatting with a z-buffer: each point lands on the pixel
    nearest its projection; where several points collide the closest one
    (smallest z) wins. Pixels no point reaches stay 0.
    """
    depth = np.zeros((intrinsics.height, intrinsics.width), dtype=np.float64)
    if len(points) == 0:
        return depth
    u, v, z = intrinsics.project(points)
    ok = np.isfinite(u) & np.isfinite(v) & (z > 0)
    ui = np.rint(u[ok]).astype(np.int64)
    vi = np.rint(v[ok]).astype(np.int64)
    zs = z[ok]
    inside = (ui >= 0) & (ui < intrinsics.width) & (vi >= 0) & (vi < intrinsics.height)
    ui, vi, zs = ui[inside], vi[inside], zs[inside]
    if len(zs) == 0:
        return depth
    zbuf = np.full(depth.shape, np.inf)
    np.minimum.at(zbuf, (vi, ui), zs)
    hit = np.isfinite(zbuf)
    depth[hit] = zbuf[hit] * 1000.0
    return depth


def depth_to_points(depth_mm: np.ndarray, intrinsics: CameraIntrinsics) -> np.ndarray:
    """Back-project all non-missing pixels of one depth map to 3D meters."""
    v, u = np.nonzero(depth_mm > 0)
    z = depth_mm[v, u] / 1000.0
    return intrinsics.backproject(u.astype(np.float64), v.astype(np.float64), z)


def sequence_centroid(skeleton: SkeletonSequence) -> np.ndarray:
    """Mean of all joints over all frames; the default rotation pivot."""
    return skeleton.positions.reshape(-1, 3).mean(axis=0)


def rotate_sample(sample: ActionSample, spec: RotationSpec,
                  intrinsics: CameraIntrinsics,
                  suffix: str | None = None) -> ActionSample:
    """Rotate a whole sample rigidly about the pivot.

    The pivot defaults to the skeleton centroid over the entire sequence,
    so the rotation behaves like an orbiting camera rather than per-frame
    wobble. Label and frame count are preserved; ``suffix`` (if given) is
    appended to the sample id of the rotated copy.
    """
    pivot = spec.pivot if spec.pivot is not None else sequence_centroid(sample.skeleton)
    rot = rotation_matrix(spec.yaw_degrees, spec.pitch_degrees)

    pos = sample.skeleton.positions
    t, j, _ = pos.shape
    new_pos = rotate_points(pos.reshape(-1, 3), rot, pivot).reshape(t, j, 3)

    frames = []
    for k in range(t):
        cloud = depth_to_points(sample.depth.values[k], intrinsics)
        cloud = rotate_points(cloud, rot, pivot)
        frames.append(splat_depth(cloud, intrinsics))

    sid = sample.sample_id + (suffix or "")
    return ActionSample(skeleton=SkeletonSequence(new_pos),
                        depth=DepthSequence(np.stack(frames)),
                        label=sample.label, sample_id=sid)


def augmentation_specs(yaw_degrees: list[float],
                       pitch_degrees: list[float]) -> list[RotationSpec]:
    """Cartesian grid of rotation specs; (0, 0) means the original view."""
    return [RotationSpec(yaw_degrees=y, pitch_degrees=p)
            for y in yaw_degrees for p in pitch_degrees]
