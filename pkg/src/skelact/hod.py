"""Histogram-of-oriented-displacements descriptor for skeleton segments.

For every joint and every 2D projection (front, side, top) the segment's
consecutive displacement vectors are binned by orientation, each vote
weighted by the displacement magnitude, over a binary temporal pyramid
(whole segment, halves, quarters, ...). Each pyramid-node histogram is
L1-normalized independently, so the descriptor is invariant to uniform
speed changes and to global translation; all-static nodes stay zero.

Concatenation order: joints outermost, then views (front, side, top),
then pyramid nodes in level order, then orientation bins, giving
dimension J * 3 * orientation_bins * (2**pyramid_levels - 1).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datatypes import SkeletonSequence
from .errors import DataError


@dataclass(frozen=True)
class HodConfig:
    orientation_bins: int = 8
    pyramid_levels: int = 3

    def __post_init__(self):
        if self.orientation_bins < 1:
            raise DataError("orientation_bins must be positive")
        if self.pyramid_levels < 1:
            raise DataError("pyramid_levels must be positive")

    @property
    def node_count(self) -> int:
        return 2 ** self.pyramid_levels - 1

    def dimension(self, joint_count: int) -> int:
        return joint_count * 3 * self.orientation_bins * self.node_count


@dataclass(frozen=True)
class HodDescriptor:
    values: np.ndarray
    segment_id: tuple[str, int] | None = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def dimension(self) -> int:
        return self.values.shape[0]


def pyramid_ranges(n_displacements: int, levels: int) -> list[tuple[int, int]]:
    """Half-open displacement index ranges of the binary pyramid, level order."""
    ranges = []
    for level in range(levels):
        parts = 2 ** level
        for q in range(parts):
            lo = q * n_displacements // parts
            hi = (q + 1) * n_displacements // parts
            ranges.append((lo, hi))
    return ranges


def compute_hod(segment: SkeletonSequence, cfg: HodConfig,
                segment_id: tuple[str, int] | None = None) -> HodDescriptor:
    if len(segment) < 2:
        raise DataError("HOD needs a segment of >= 2 frames")
    pos = segment.positions
    j = segment.joint_count
    disp = pos[1:] - pos[:-1]  # (D, J, 3)
    dx, dy, dz = disp[..., 0], disp[..., 1], disp[..., 2]
    # 2D displacements per view: front (x, y), side (z, y), top (x, z)
    comps = np.stack([np.stack([dx, dy], axis=-1),
                      np.stack([dz, dy], axis=-1),
                      np.stack([dx, dz], axis=-1)], axis=2)  # (D, J, 3, 2)
    mag = np.hypot(comps[..., 0], comps[..., 1])
    ang = np.mod(np.arctan2(comps[..., 1], comps[..., 0]), 2.0 * np.pi)
    obin = np.minimum((ang / (2.0 * np.pi / cfg.orientation_bins)).astype(np.int64),
                      cfg.orientation_bins - 1)

    ranges = pyramid_ranges(disp.shape[0], cfg.pyramid_levels)
    bins = cfg.orientation_bins
    # hist[j, v, node, bin]
    hist = np.zeros((j, 3, len(ranges), bins))
    for node, (lo, hi) in enumerate(ranges):
        if hi <= lo:
            continue
        for v in range(3):
            o = obin[lo:hi, :, v]  # (n, J)
            w = mag[lo:hi, :, v]
            flat = o + np.arange(j)[None, :] * bins
            acc = np.bincount(flat.ravel(), weights=w.ravel(),
                              minlength=j * bins)
            hist[:, v, node, :] = acc.reshape(j, bins)
    sums = hist.sum(axis=-1, keepdims=True)
    np.divide(hist, sums, out=hist, where=sums > 0)
    return HodDescriptor(values=hist.reshape(-1), segment_id=segment_id)
