"""Depth motion maps per segment and view, plus rainbow pseudo-coloring.

The front view of a frame is its raw depth map. Side and top views are
orthographic projections of the back-projected point cloud onto fixed
(z, y) and (x, z) grids over a configured scene volume; a cell holds the
farthest distance (in mm) that any of its points reaches along the
collapsed axis, measured from the volume's lower bound, so grids are
non-negative and empty cells are 0.

The motion map of a segment adds the first frame's projection to the
absolute inter-frame differences of the later frames, which keeps the
starting posture visible and makes the map sensitive to playing a
segment backwards (unlike the traditional all-differences variant).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .camera import CameraIntrinsics
from .errors import DataError

VIEWS = ("front", "side", "top")


@dataclass(frozen=True)
class ProjectionGeometry:
    """Scene volume (meters) and grid resolution for side/top projections."""

    x_range: tuple[float, float] = (-2.0, 2.0)
    y_range: tuple[float, float] = (-2.0, 2.0)
    z_range: tuple[float, float] = (0.0, 5.0)
    rows: int = 240
    cols: int = 320

    def __post_init__(self):
        for name, (lo, hi) in (("x_range", self.x_range),
                               ("y_range", self.y_range),
                               ("z_range", self.z_range)):
            if not (np.isfinite(lo) and np.isfinite(hi) and hi > lo):
                raise DataError(f"{name} must be a finite ascending interval")
        if self.rows < 2 or self.cols < 2:
            raise DataError("projection grid must be at least 2x2")


@dataclass(frozen=True)
class Dmm:
    view: str
    grid: np.ndarray
    segment_id: tuple[str, int] | None = None

    def __post_init__(self):
        if self.view not in VIEWS:
            raise DataError(f"view must be one of {VIEWS}")
        grid = np.asarray(self.grid, dtype=np.float64)
        if grid.ndim != 2 or np.any(grid < 0):
            raise DataError("DMM grid must be 2D and non-negative")
        grid.setflags(write=False)
        object.__setattr__(self, "grid", grid)


@dataclass(frozen=True)
class PseudoColorImage:
    channels: np.ndarray  # (H, W, 3)
    phases: tuple[float, float, float]
    modulation: str


def _bin_coords(vals: np.ndarray, lo: float, hi: float, n: int) -> np.ndarray:
    idx = ((vals - lo) / (hi - lo) * n).astype(np.int64)
    return np.clip(idx, 0, n - 1)


def project_depth_frame(depth_mm: np.ndarray, intrinsics: CameraIntrinsics,
                        geometry: ProjectionGeometry) -> dict[str, np.ndarray]:
    """Project one depth frame into the three view grids."""
    front = np.asarray(depth_mm, dtype=np.float64)
    side = np.zeros((geometry.rows, geometry.cols))
    top = np.zeros((geometry.rows, geometry.cols))

    v, u = np.nonzero(front > 0)
    if len(v):
        z = front[v, u] / 1000.0
        pts = intrinsics.backproject(u.astype(np.float64),
                                     v.astype(np.float64), z)
        x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
        # side: rows bin y, cols bin z; value = extent along x
        r = _bin_coords(y, *geometry.y_range, geometry.rows)
        c = _bin_coords(z, *geometry.z_range, geometry.cols)
        np.maximum.at(side, (r, c), (x - geometry.x_range[0]) * 1000.0)
        # top: rows bin z, cols bin x; value = extent along y
        r = _bin_coords(z, *geometry.z_range, geometry.rows)
        c = _bin_coords(x, *geometry.x_range, geometry.cols)
        np.maximum.at(top, (r, c), (y - geometry.y_range[0]) * 1000.0)
    return {"front": front, "side": side, "top": top}


def segment_projections(depth_values: np.ndarray, intrinsics: CameraIntrinsics,
                        geometry: ProjectionGeometry) -> dict[str, np.ndarray]:
    """Per-view stacks of projected maps for a segment's (M, H, W) frames."""
    per_view: dict[str, list[np.ndarray]] = {v: [] for v in VIEWS}
    for frame in depth_values:
        maps = project_depth_frame(frame, intrinsics, geometry)
        for view in VIEWS:
            per_view[view].append(maps[view])
    return {view: np.stack(stack) for view, stack in per_view.items()}


def compute_dmm(maps: np.ndarray | Sequence[np.ndarray], view: str = "front",
                include_first_diff: bool = False,
                segment_id: tuple[str, int] | None = None) -> Dmm:
    """Motion map of a segment: its first projection plus the absolute
    differences of consecutive later projections.

    With M maps the result is map_1 + sum over k of |map_{k+1} - map_k|
    for k = 2 .. M-1; the k = 1 term is excluded by default and added
    back by ``include_first_diff``.
    """
    stack = np.asarray(maps, dtype=np.float64)
    if stack.ndim != 3 or stack.shape[0] < 1:
        raise DataError("need a non-empty (M, H, W) stack of maps")
    start = 0 if include_first_diff else 1
    grid = stack[0].copy()
    diffs = np.abs(np.diff(stack[start:], axis=0))
    if diffs.size:
        grid += diffs.sum(axis=0)
    return Dmm(view=view, grid=grid, segment_id=segment_id)


def compute_dmm_traditional(maps: np.ndarray | Sequence[np.ndarray],
                            view: str = "front",
                            segment_id: tuple[str, int] | None = None) -> Dmm:
    """Baseline variant: sum of all consecutive absolute differences,
    without the first frame term (invariant to reversing the segment)."""
    stack = np.asarray(maps, dtype=np.float64)
    if stack.ndim != 3 or stack.shape[0] < 1:
        raise DataError("need a non-empty (M, H, W) stack of maps")
    if stack.shape[0] == 1:
        grid = np.zeros_like(stack[0])
    else:
        grid = np.abs(np.diff(stack, axis=0)).sum(axis=0)
    return Dmm(view=view, grid=grid, segment_id=segment_id)


MODULATIONS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "linear": lambda i: i,
    "sqrt": np.sqrt,
    "square": np.square,
    "ones": np.ones_like,
}

DEFAULT_PHASES = (0.0, 1.0 / 3.0, 2.0 / 3.0)


def pseudo_color(dmm: Dmm | np.ndarray,
                 phases: tuple[float, float, float] = DEFAULT_PHASES,
                 modulation: str = "linear") -> PseudoColorImage:
    """Rainbow transform of a motion map.

    The map is min/max normalized to I in [0, 1] (a constant map becomes
    all zeros), then each channel is sin(pi * (-I + phase) + 1/2)^2
    scaled by the amplitude modulation f(I).
    """
    grid = dmm.grid if isinstance(dmm, Dmm) else np.asarray(dmm, dtype=np.float64)
    if not np.all(np.isfinite(grid)):
        raise DataError("pseudo_color input must be finite")
    if modulation not in MODULATIONS:
        raise DataError(f"unknown modulation {modulation!r}; "
                        f"known: {sorted(MODULATIONS)}")
    lo, hi = grid.min(), grid.max()
    if hi > lo:
        i = (grid - lo) / (hi - lo)
    else:
        i = np.zeros_like(grid)
    f = MODULATIONS[modulation](i)
    channels = np.empty(grid.shape + (3,))
    for c, phase in enumerate(phases):
        channels[..., c] = np.sin(np.pi * (-i + phase) + 0.5) ** 2 * f
    return PseudoColorImage(channels=channels, phases=tuple(phases),
                            modulation=modulation)


def write_ppm(channels: np.ndarray, path) -> None:
    """Dump an (H, W, 3) image in [0, 1]-ish range as binary PPM (P6).
    Channels are written as (R, G, B) = (c3, c2, c1)."""
    img = np.asarray(channels, dtype=np.float64)
    peak = img.max()
    if peak > 0:
        img = img / peak
    rgb = (img[..., ::-1] * 255.0 + 0.5).astype(np.uint8)
    h, w, _ = rgb.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(rgb.tobytes())
