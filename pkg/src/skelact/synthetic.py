"""Deterministic synthetic action samples for tests and benchmarks.

Each template animates a 16-joint stick figure (camera coords, y down,
subject ~2.5 m from the camera) through rest / motion / rest phases with
smooth envelopes, so sequences have the rest-move-rest structure the
segmentation stage expects. Depth frames are rendered as small filled
disks at the joint image positions with a z-buffer.
"""
from __future__ import annotations

import numpy as np

from .camera import DEFAULT_INTRINSICS, CameraIntrinsics
from .datatypes import ActionSample, DepthSequence, SkeletonSequence
from .errors import DataError

JOINT_NAMES = [
    "head", "neck", "torso", "pelvis",
    "l_shoulder", "r_shoulder", "l_elbow", "r_elbow", "l_hand", "r_hand",
    "l_hip", "r_hip", "l_knee", "r_knee", "l_foot", "r_foot",
]
JOINT_COUNT = len(JOINT_NAMES)
_J = {name: i for i, name in enumerate(JOINT_NAMES)}

_BASE_POSE = np.array([
    [0.00, -0.80, 2.5],   # head
    [0.00, -0.55, 2.5],   # neck
    [0.00, -0.25, 2.5],   # torso
    [0.00, 0.05, 2.5],    # pelvis
    [-0.22, -0.50, 2.5],  # l_shoulder
    [0.22, -0.50, 2.5],   # r_shoulder
    [-0.45, -0.30, 2.5],  # l_elbow
    [0.45, -0.30, 2.5],   # r_elbow
    [-0.55, -0.05, 2.5],  # l_hand
    [0.55, -0.05, 2.5],   # r_hand
    [-0.14, 0.08, 2.5],   # l_hip
    [0.14, 0.08, 2.5],    # r_hip
    [-0.16, 0.50, 2.5],   # l_knee
    [0.16, 0.50, 2.5],    # r_knee
    [-0.17, 0.92, 2.5],   # l_foot
    [0.17, 0.92, 2.5],    # r_foot
])

_DISK_RADIUS_M = 0.045


def _smoothstep(x: np.ndarray) -> np.ndarray:
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3.0 - 2.0 * x)


def _ramp(u: float, start: float, stop: float) -> float:
    # 0 before start, 1 after stop, smooth in between
    return float(_smoothstep(np.array((u - start) / (stop - start))))


def _pulse(u: float, start: float, stop: float) -> float:
    mid = 0.5 * (start + stop)
    return _ramp(u, start, mid) - _ramp(u, mid, stop)


def _window(u: float, start: float, stop: float) -> float:
    span = 0.15 * (stop - start)
    return _ramp(u, start, start + span) - _ramp(u, stop - span, stop)


def _wave(side: str):
    hand, elbow = _J[f"{side}_hand"], _J[f"{side}_elbow"]
    sign = -1.0 if side == "l" else 1.0

    def pose(u: float) -> np.ndarray:
        p = _BASE_POSE.copy()
        lift = _ramp(u, 0.10, 0.30) - _ramp(u, 0.70, 0.90)
        p[hand] += lift * np.array([sign * 0.05, -0.55, 0.0])
        p[elbow] += lift * np.array([sign * 0.02, -0.30, 0.0])
        w = _window(u, 0.38, 0.62)
        osc = np.sin(2.0 * np.pi * 2.0 * np.clip((u - 0.38) / 0.24, 0.0, 1.0)) * w
        p[hand] += np.array([0.15 * osc, 0.0, 0.0])
        p[elbow] += np.array([0.07 * osc, 0.0, 0.0])
        return p

    return pose


def _raise_both(u: float) -> np.ndarray:
    p = _BASE_POSE.copy()
    lift = _ramp(u, 0.12, 0.35) - _ramp(u, 0.62, 0.88)
    for side, sign in (("l", -1.0), ("r", 1.0)):
        p[_J[f"{side}_hand"]] += lift * np.array([sign * -0.15, -0.80, 0.0])
        p[_J[f"{side}_elbow"]] += lift * np.array([sign * -0.05, -0.45, 0.0])
    return p


def _squat(u: float) -> np.ndarray:
    p = _BASE_POSE.copy()
    env = _ramp(u, 0.15, 0.40) - _ramp(u, 0.60, 0.85)
    drop = np.array([0.0, 0.28, 0.0])
    for name in ("head", "neck", "torso", "pelvis",
                 "l_shoulder", "r_shoulder", "l_elbow", "r_elbow",
                 "l_hand", "r_hand", "l_hip", "r_hip"):
        p[_J[name]] += env * drop
    for side in ("l", "r"):
        p[_J[f"{side}_knee"]] += env * np.array([0.0, 0.10, -0.12])
    return p


def _kick_right(u: float) -> np.ndarray:
    p = _BASE_POSE.copy()
    env = _pulse(u, 0.15, 0.75)
    p[_J["r_foot"]] += env * np.array([0.05, -0.45, -0.35])
    p[_J["r_knee"]] += env * np.array([0.02, -0.20, -0.20])
    return p


def _clap(u: float) -> np.ndarray:
    p = _BASE_POSE.copy()
    env = _pulse(u, 0.12, 0.38) + _pulse(u, 0.50, 0.76)
    for side, sign in (("l", -1.0), ("r", 1.0)):
        p[_J[f"{side}_hand"]] += env * np.array([sign * -0.45, -0.25, -0.05])
        p[_J[f"{side}_elbow"]] += env * np.array([sign * -0.15, -0.10, -0.02])
    return p


TEMPLATES = {
    "wave_right": _wave("r"),
    "wave_left": _wave("l"),
    "raise_both": _raise_both,
    "squat": _squat,
    "kick_right": _kick_right,
    "clap": _clap,
}


def template_positions(template_id: str, frames: int) -> np.ndarray:
    """Closed-form noise-free joint trajectories, shape (frames, J, 3)."""
    if template_id not in TEMPLATES:
        raise DataError(f"unknown template {template_id!r}; "
                        f"known: {sorted(TEMPLATES)}")
    if frames < 4:
        raise DataError("frames must be >= 4")
    pose = TEMPLATES[template_id]
    out = np.empty((frames, JOINT_COUNT, 3))
    for t in range(frames):
        out[t] = pose(t / (frames - 1))
    return out


def render_joint_disks(positions: np.ndarray,
                       intrinsics: CameraIntrinsics) -> np.ndarray:
    """Render one frame of joints as filled depth disks (millimeters)."""
    depth = np.full((intrinsics.height, intrinsics.width), np.inf)
    u, v, z = intrinsics.project(positions)
    for ui, vi, zi in zip(u, v, z):
        if not (np.isfinite(ui) and np.isfinite(vi) and zi > 0):
            continue
        r = max(2, int(round(intrinsics.fx * _DISK_RADIUS_M / zi)))
        ci, ri = int(round(ui)), int(round(vi))
        r0, r1 = max(0, ri - r), min(intrinsics.height, ri + r + 1)
        c0, c1 = max(0, ci - r), min(intrinsics.width, ci + r + 1)
        if r0 >= r1 or c0 >= c1:
            continue
        rows = np.arange(r0, r1)[:, None] - vi
        cols = np.arange(c0, c1)[None, :] - ui
        mask = rows * rows + cols * cols <= r * r
        window = depth[r0:r1, c0:c1]
        window[mask] = np.minimum(window[mask], zi * 1000.0)
    depth[~np.isfinite(depth)] = 0.0
    return depth


def generate_synthetic(template_id: str, noise_sigma: float, frames: int,
                       seed: int,
                       intrinsics: CameraIntrinsics = DEFAULT_INTRINSICS) -> ActionSample:
    """Build a deterministic sample: template trajectory + Gaussian jitter,
    depth rendered from the jittered joints."""
    if noise_sigma < 0:
        raise DataError("noise_sigma must be >= 0")
    pos = template_positions(template_id, frames)
    rng = np.random.default_rng(seed)
    if noise_sigma > 0:
        pos = pos + rng.normal(0.0, noise_sigma, size=pos.shape)
    depth = np.stack([render_joint_disks(pos[t], intrinsics)
                      for t in range(frames)])
    return ActionSample(
        skeleton=SkeletonSequence(pos),
        depth=DepthSequence(depth),
        label=template_id,
        sample_id=f"{template_id}-{seed}",
    )
