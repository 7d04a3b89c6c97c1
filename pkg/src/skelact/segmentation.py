"""Temporal segmentation of skeleton sequences via joint-motion entropy.

Per consecutive frame pair, every joint's 2D displacement in each of the
three Cartesian projections is quantized by orientation and magnitude
into a motion histogram; the histogram's entropy traces how spread-out
the motion is over time. Key frames are picked at entropy peaks that are
also dissimilar from their neighbours, and split the sequence into
segments that share their boundary frames.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .datatypes import SkeletonFrame, SkeletonSequence
from .errors import DataError


@dataclass(frozen=True)
class MotionHistogramConfig:
    """Quantization grid for joint displacement vectors.

    Bin layout within one projection is orientation-major:
    flat = orientation_bin * magnitude_bins + magnitude_bin; the three
    projections (front, side, top) are concatenated in that order.
    Zero displacements get orientation bin 0 and magnitude bin 0.
    """

    orientation_bins: int = 8
    magnitude_bins: int = 4
    magnitude_edges: tuple[float, ...] = (0.005, 0.02, 0.05)

    def __post_init__(self):
        if self.orientation_bins < 1 or self.magnitude_bins < 1:
            raise DataError("bin counts must be positive")
        edges = tuple(float(e) for e in self.magnitude_edges)
        if len(edges) != self.magnitude_bins - 1:
            raise DataError(f"need {self.magnitude_bins - 1} magnitude edges, "
                            f"got {len(edges)}")
        if any(e <= 0 for e in edges):
            raise DataError("magnitude edges must be > 0")
        if any(b <= a for a, b in zip(edges, edges[1:])):
            raise DataError("magnitude edges must be strictly ascending")
        object.__setattr__(self, "magnitude_edges", edges)

    @property
    def k_max(self) -> int:
        return 3 * self.orientation_bins * self.magnitude_bins


@dataclass(frozen=True)
class MotionHistogram:
    """Concatenated three-projection displacement histogram of one frame pair."""

    counts: np.ndarray  # (k_max,) int64
    joint_count: int

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 1 or np.any(counts < 0):
            raise DataError("counts must be a 1D non-negative array")
        if counts.sum() != 3 * self.joint_count:
            raise DataError(f"histogram must hold J*3 = {3 * self.joint_count} "
                            f"votes, got {counts.sum()}")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def k_max(self) -> int:
        return self.counts.shape[0]

    @property
    def probabilities(self) -> np.ndarray:
        return self.counts / (3.0 * self.joint_count)


@dataclass(frozen=True)
class EntropyCurve:
    """Per-frame-pair entropy values; entry t covers the pair (t, t+1)."""

    values: np.ndarray
    k_max: int

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class SaliencyConfig:
    """Key-frame selection knobs.

    ``dissimilarity_weighting`` weights each candidate's entropy by
    (1 - mean neighbour intersection), so frames unlike their neighbours
    rank higher; switching it off uses the raw mean intersection instead.
    """

    peak_fraction: float = 0.5
    min_gap: int = 5
    dissimilarity_weighting: bool = True

    def __post_init__(self):
        if not 0.0 < self.peak_fraction <= 1.0:
            raise DataError("peak_fraction must be in (0, 1]")
        if self.min_gap < 1:
            raise DataError("min_gap must be >= 1")


@dataclass(frozen=True)
class KeyFrameSet:
    """Entropy local maxima (``initial``) and the surviving key frames."""

    initial: np.ndarray
    keys: np.ndarray
    curve: EntropyCurve | None = None
    weighted: np.ndarray | None = None  # aligned with ``initial``


@dataclass(frozen=True)
class SegmentBoundaries:
    """Ascending frame indices from 0 to T-1; neighbouring segments share
    their boundary frame."""

    boundaries: np.ndarray
    frame_count: int

    def __post_init__(self):
        b = np.asarray(self.boundaries, dtype=np.int64)
        if b[0] != 0 or b[-1] != self.frame_count - 1:
            raise DataError("boundaries must start at 0 and end at T-1")
        if np.any(np.diff(b) <= 0):
            raise DataError("boundaries must be strictly ascending")
        b.setflags(write=False)
        object.__setattr__(self, "boundaries", b)

    @property
    def segment_count(self) -> int:
        return len(self.boundaries) - 1

    def segments(self) -> list[tuple[int, int]]:
        b = self.boundaries
        return [(int(b[i]), int(b[i + 1])) for i in range(len(b) - 1)]


def _displacement_bins(disp: np.ndarray, cfg: MotionHistogramConfig) -> np.ndarray:
    """Quantize 3D per-joint displacements (..., J, 3) into flat histogram
    bins, shape (..., J, 3 projections)."""
    dx, dy, dz = disp[..., 0], disp[..., 1], disp[..., 2]
    # front (x, y), side (z, y), top (x, z)
    comps = np.stack([np.stack([dx, dy], axis=-1),
                      np.stack([dz, dy], axis=-1),
                      np.stack([dx, dz], axis=-1)], axis=-2)  # (..., J, 3, 2)
    mag = np.hypot(comps[..., 0], comps[..., 1])
    ang = np.arctan2(comps[..., 1], comps[..., 0])
    ang = np.mod(ang, 2.0 * np.pi)
    obin = np.minimum((ang / (2.0 * np.pi / cfg.orientation_bins)).astype(np.int64),
                      cfg.orientation_bins - 1)
    mbin = np.searchsorted(cfg.magnitude_edges, mag, side="right")
    view = np.arange(3, dtype=np.int64)
    per_view = cfg.orientation_bins * cfg.magnitude_bins
    return view * per_view + obin * cfg.magnitude_bins + mbin


def sequence_histogram_counts(seq: SkeletonSequence,
                              cfg: MotionHistogramConfig) -> np.ndarray:
    """Histogram counts for every consecutive frame pair, shape (T-1, k_max)."""
    pos = seq.positions
    disp = pos[1:] - pos[:-1]  # (T-1, J, 3)
    bins = _displacement_bins(disp, cfg)  # (T-1, J, 3)
    n_pairs = bins.shape[0]
    offset = np.arange(n_pairs, dtype=np.int64)[:, None, None] * cfg.k_max
    flat = (bins + offset).ravel()
    counts = np.bincount(flat, minlength=n_pairs * cfg.k_max)
    return counts.reshape(n_pairs, cfg.k_max)


def motion_histogram(prev: SkeletonFrame, next_frame: SkeletonFrame,
                     cfg: MotionHistogramConfig) -> MotionHistogram:
    """Quantized joint-displacement histogram between two frames."""
    if prev.joint_count != next_frame.joint_count:
        raise DataError(f"joint count mismatch: {prev.joint_count} vs "
                        f"{next_frame.joint_count}")
    disp = next_frame.joints - prev.joints
    bins = _displacement_bins(disp, cfg).ravel()
    counts = np.bincount(bins, minlength=cfg.k_max)
    return MotionHistogram(counts=counts, joint_count=prev.joint_count)


def entropy(hist: MotionHistogram) -> float:
    """Shannon entropy (bits) of the histogram's probabilities; empty bins
    contribute nothing."""
    p = hist.probabilities
    nz = p[p > 0]
    return float(-(nz * np.log2(nz)).sum())


def _entropy_of_probs(p: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
    return -terms.sum(axis=-1)


def histogram_intersection(a: MotionHistogram, b: MotionHistogram) -> float:
    """Sum of bin-wise minimum probabilities; 1 iff the distributions match."""
    if a.k_max != b.k_max:
        raise DataError(f"k_max mismatch: {a.k_max} vs {b.k_max}")
    return float(np.minimum(a.probabilities, b.probabilities).sum())


def compute_entropy_curve(seq: SkeletonSequence,
                          cfg: MotionHistogramConfig) -> EntropyCurve:
    counts = sequence_histogram_counts(seq, cfg)
    probs = counts / (3.0 * seq.joint_count)
    return EntropyCurve(values=_entropy_of_probs(probs), k_max=cfg.k_max)


def extract_key_frames(seq: SkeletonSequence, cfg: MotionHistogramConfig,
                       sal: SaliencyConfig) -> KeyFrameSet:
    """Pick key frames from the entropy curve.

    Strict local maxima of the curve form the initial candidates; each is
    re-weighted by how much its histogram differs from its neighbours,
    and candidates above ``peak_fraction`` of the best weighted value
    survive, thinned to at least ``min_gap`` frames apart (higher weight
    wins a conflict, the earlier frame wins an exact tie).
    """
    t_frames = len(seq)
    if t_frames < 4:
        raise DataError(f"sequence too short: {t_frames} frames (need >= 4)")
    counts = sequence_histogram_counts(seq, cfg)
    probs = counts / (3.0 * seq.joint_count)
    eta = _entropy_of_probs(probs)
    curve = EntropyCurve(values=eta, k_max=cfg.k_max)

    inner = np.arange(1, len(eta) - 1)
    is_max = (eta[inner] > eta[inner - 1]) & (eta[inner] > eta[inner + 1])
    initial = inner[is_max]
    if len(initial) == 0:
        return KeyFrameSet(initial=initial, keys=initial.copy(), curve=curve,
                           weighted=np.empty(0))

    inter_prev = np.minimum(probs[initial - 1], probs[initial]).sum(axis=1)
    inter_next = np.minimum(probs[initial], probs[initial + 1]).sum(axis=1)
    mean_inter = 0.5 * (inter_prev + inter_next)
    if sal.dissimilarity_weighting:
        weighted = eta[initial] * (1.0 - mean_inter)
    else:
        weighted = eta[initial] * mean_inter

    threshold = sal.peak_fraction * weighted.max()
    cand = [(float(w), int(t)) for w, t in zip(weighted, initial)
            if w >= threshold]
    cand.sort(key=lambda wt: (-wt[0], wt[1]))
    kept: list[int] = []
    for _, t in cand:
        if all(abs(t - k) >= sal.min_gap for k in kept):
            kept.append(t)
    keys = np.array(sorted(kept), dtype=np.int64)
    return KeyFrameSet(initial=initial, keys=keys, curve=curve, weighted=weighted)


def split_segments(frame_count: int, keys: KeyFrameSet | np.ndarray,
                   min_segment_frames: int = 5) -> SegmentBoundaries:
    """Boundaries = {0} + key frames + {T-1}; a key frame ends one segment
    and begins the next. Segments shorter than ``min_segment_frames``
    (inclusive span) are merged into their shorter neighbour until all
    segments are long enough or only one remains."""
    key_arr = keys.keys if isinstance(keys, KeyFrameSet) else np.asarray(keys)
    key_arr = np.asarray(key_arr, dtype=np.int64)
    if np.any((key_arr <= 0) | (key_arr >= frame_count - 1)):
        raise DataError("key frames must lie strictly inside (0, T-1)")
    bounds = np.unique(np.concatenate([[0], key_arr, [frame_count - 1]]))

    bounds = list(bounds)
    while len(bounds) > 2:
        lengths = [bounds[i + 1] - bounds[i] + 1 for i in range(len(bounds) - 1)]
        short = [i for i, ln in enumerate(lengths) if ln < min_segment_frames]
        if not short:
            break
        i = min(short, key=lambda i: (lengths[i], i))
        if i == 0:
            drop = 1
        elif i == len(lengths) - 1:
            drop = len(bounds) - 2
        else:
            drop = i if lengths[i - 1] <= lengths[i + 1] else i + 1
        del bounds[drop]
    return SegmentBoundaries(boundaries=np.array(bounds, dtype=np.int64),
                             frame_count=frame_count)
