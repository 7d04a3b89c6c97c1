"""Pipeline configuration: every tunable knob of every stage.

Config files are flat ``section.key = value`` text (a TOML-like subset):
values are parsed as JSON where possible (numbers, booleans, lists,
quoted strings) and as bare strings otherwise; ``#`` starts a comment.
Unknown keys are rejected, and every value is range-checked on load.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field, fields
from pathlib import Path

from .camera import CameraIntrinsics
from .classifier import ClassifierTrainConfig
from .dmm import DEFAULT_PHASES, MODULATIONS, ProjectionGeometry
from .errors import DataError
from .hod import HodConfig
from .igmm import AlphaConfig
from .segmentation import MotionHistogramConfig, SaliencyConfig


@dataclass(frozen=True)
class SegmentationConfig:
    orientation_bins: int = 8
    magnitude_bins: int = 4
    magnitude_edges: tuple[float, ...] = (0.005, 0.02, 0.05)
    peak_fraction: float = 0.5
    min_gap: int = 5
    min_segment_frames: int = 5
    dissimilarity_weighting: bool = True

    def histogram(self) -> MotionHistogramConfig:
        return MotionHistogramConfig(orientation_bins=self.orientation_bins,
                                     magnitude_bins=self.magnitude_bins,
                                     magnitude_edges=self.magnitude_edges)

    def saliency(self) -> SaliencyConfig:
        return SaliencyConfig(peak_fraction=self.peak_fraction,
                              min_gap=self.min_gap,
                              dissimilarity_weighting=self.dissimilarity_weighting)

    def __post_init__(self):
        self.histogram()
        self.saliency()
        if self.min_segment_frames < 1:
            raise DataError("min_segment_frames must be >= 1")


@dataclass(frozen=True)
class IgmmConfig:
    pca_dim: int = 10
    alpha: float = 1.0
    alpha_resample: bool = False
    alpha_gamma_shape: float = 1.0
    alpha_gamma_rate: float = 1.0
    iters: int = 200
    burn_in: int = 100
    kappa0: float = 1.0
    nu0_extra: float = 2.0
    prior_scale: float = 1.0
    seed: int = 1

    def alpha_config(self) -> AlphaConfig:
        return AlphaConfig(value=self.alpha, resample=self.alpha_resample,
                           gamma_shape=self.alpha_gamma_shape,
                           gamma_rate=self.alpha_gamma_rate)

    def __post_init__(self):
        self.alpha_config()
        if self.pca_dim < 1:
            raise DataError("pca_dim must be >= 1")
        if not self.iters > self.burn_in >= 0:
            raise DataError("need iters > burn_in >= 0")
        if self.kappa0 <= 0 or self.nu0_extra < 0 or self.prior_scale <= 0:
            raise DataError("bad IGMM prior configuration")


@dataclass(frozen=True)
class DmmConfig:
    include_first_diff: bool = False
    volume_x: tuple[float, float] = (-2.0, 2.0)
    volume_y: tuple[float, float] = (-2.0, 2.0)
    volume_z: tuple[float, float] = (0.0, 5.0)
    side_top_rows: int = 240
    side_top_cols: int = 320
    phases: tuple[float, float, float] = DEFAULT_PHASES
    modulation: str = "linear"

    def geometry(self) -> ProjectionGeometry:
        return ProjectionGeometry(x_range=self.volume_x, y_range=self.volume_y,
                                  z_range=self.volume_z,
                                  rows=self.side_top_rows,
                                  cols=self.side_top_cols)

    def __post_init__(self):
        self.geometry()
        if len(self.phases) != 3:
            raise DataError("need exactly 3 pseudo-color phases")
        if self.modulation not in MODULATIONS:
            raise DataError(f"unknown modulation {self.modulation!r}")


@dataclass(frozen=True)
class HmmConfig:
    freeze_emissions: bool = True
    epsilon: float = 1e-3
    max_iters: int = 50
    tol: float = 1e-6
    normalize_likelihood: bool = True
    feature_floor: float = -50.0

    def __post_init__(self):
        if self.epsilon < 0 or self.max_iters < 1 or self.tol <= 0:
            raise DataError("bad HMM configuration")


@dataclass(frozen=True)
class SvmConfig:
    c: float = 1.0
    epochs: int = 200
    seed: int = 3

    def __post_init__(self):
        if self.c <= 0 or self.epochs < 1:
            raise DataError("bad SVM configuration")


@dataclass(frozen=True)
class AugmentConfig:
    yaw_degrees: tuple[float, ...] = (-30.0, -15.0, 0.0, 15.0, 30.0)
    pitch_degrees: tuple[float, ...] = (0.0,)

    def __post_init__(self):
        for angles in (self.yaw_degrees, self.pitch_degrees):
            if not angles:
                raise DataError("augmentation grids must be non-empty")
            if any(not -180.0 <= a <= 180.0 for a in angles):
                raise DataError("augmentation angles must be in [-180, 180]")


@dataclass(frozen=True)
class CameraConfig:
    fx: float = 285.0
    fy: float = 285.0
    cx: float = 160.0
    cy: float = 120.0
    width: int = 320
    height: int = 240

    def intrinsics(self) -> CameraIntrinsics:
        return CameraIntrinsics(fx=self.fx, fy=self.fy, cx=self.cx,
                                cy=self.cy, width=self.width,
                                height=self.height)

    def __post_init__(self):
        self.intrinsics()


@dataclass(frozen=True)
class ClassifierConfig:
    downsample: int = 32
    epochs: int = 60
    batch_size: int = 32
    learning_rate: float = 0.1
    lr_decay: float = 0.02
    l2: float = 1e-4
    seed: int = 2

    def train_config(self) -> ClassifierTrainConfig:
        return ClassifierTrainConfig(downsample=self.downsample,
                                     epochs=self.epochs,
                                     batch_size=self.batch_size,
                                     learning_rate=self.learning_rate,
                                     lr_decay=self.lr_decay, l2=self.l2,
                                     seed=self.seed)

    def __post_init__(self):
        self.train_config()


@dataclass(frozen=True)
class PipelineConfig:
    segmentation: SegmentationConfig = field(default_factory=SegmentationConfig)
    hod: HodConfig = field(default_factory=HodConfig)
    igmm: IgmmConfig = field(default_factory=IgmmConfig)
    dmm: DmmConfig = field(default_factory=DmmConfig)
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)
    hmm: HmmConfig = field(default_factory=HmmConfig)
    svm: SvmConfig = field(default_factory=SvmConfig)
    augment: AugmentConfig = field(default_factory=AugmentConfig)
    camera: CameraConfig = field(default_factory=CameraConfig)
    joint_count: int = 16
    hmm_train_source: str = "classifier"
    seed: int = 0

    def __post_init__(self):
        if self.hmm_train_source not in ("classifier", "igmm"):
            raise DataError("hmm_train_source must be 'classifier' or 'igmm'")
        if self.joint_count < 2:
            raise DataError("joint_count must be >= 2")


_SECTIONS = {
    "segmentation": SegmentationConfig,
    "hod": HodConfig,
    "igmm": IgmmConfig,
    "dmm": DmmConfig,
    "classifier": ClassifierConfig,
    "hmm": HmmConfig,
    "svm": SvmConfig,
    "augment": AugmentConfig,
    "camera": CameraConfig,
}
_TOP_KEYS = {"joint_count", "hmm_train_source", "seed"}


def _parse_value(text: str):
    text = text.strip()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _coerce(value, annotation: str, key: str):
    """Convert a parsed value to the field's declared type; config fields
    only use int/float/bool/str and tuples thereof."""
    if annotation.startswith("tuple"):
        if not isinstance(value, (list, tuple)):
            raise DataError(f"{key}: expected a list")
        inner = float if "float" in annotation else int
        return tuple(inner(v) for v in value)
    if annotation == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise DataError(f"{key}: expected an integer, got {value!r}")
        return value
    if annotation == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise DataError(f"{key}: expected a number, got {value!r}")
        return float(value)
    if annotation == "bool":
        if not isinstance(value, bool):
            raise DataError(f"{key}: expected true/false, got {value!r}")
        return value
    if annotation == "str":
        if not isinstance(value, str):
            raise DataError(f"{key}: expected a string, got {value!r}")
        return value
    raise DataError(f"{key}: unsupported config field type {annotation}")


def apply_overrides(cfg: PipelineConfig, overrides: dict) -> PipelineConfig:
    """Rebuild a config with dotted-key overrides applied; rejects
    unknown keys and type mismatches."""
    values: dict[str, dict] = {}
    top: dict = {}
    for key, raw in overrides.items():
        parts = key.split(".")
        if len(parts) == 1 and key in _TOP_KEYS:
            ann = {f.name: f.type for f in fields(PipelineConfig)}[key]
            top[key] = _coerce(raw, ann, key)
            continue
        if len(parts) != 2 or parts[0] not in _SECTIONS:
            raise DataError(f"unknown config key {key!r}")
        section, name = parts
        sub_fields = {f.name: f.type for f in fields(_SECTIONS[section])}
        if name not in sub_fields:
            raise DataError(f"unknown config key {key!r}")
        values.setdefault(section, {})[name] = _coerce(raw, sub_fields[name], key)

    kwargs: dict = dict(top)
    for section in _SECTIONS:
        current = getattr(cfg, section)
        if section in values:
            kwargs[section] = dataclasses.replace(current, **values[section])
        else:
            kwargs[section] = current
    for key in _TOP_KEYS - set(top):
        kwargs[key] = getattr(cfg, key)
    return PipelineConfig(**kwargs)


def parse_config_text(text: str, base: PipelineConfig | None = None) -> PipelineConfig:
    overrides: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataError(f"config line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        overrides[key.strip()] = _parse_value(value)
    return apply_overrides(base or PipelineConfig(), overrides)


def load_config(path: str | Path | None,
                set_overrides: list[str] | None = None) -> PipelineConfig:
    """Config file (optional) plus ``--set key=value`` style overrides."""
    cfg = PipelineConfig()
    if path is not None:
        cfg = parse_config_text(Path(path).read_text(encoding="utf-8"), cfg)
    if set_overrides:
        parsed = {}
        for item in set_overrides:
            if "=" not in item:
                raise DataError(f"override {item!r} must look like key=value")
            key, _, value = item.partition("=")
            parsed[key.strip()] = _parse_value(value)
        cfg = apply_overrides(cfg, parsed)
    return cfg


def config_to_dict(cfg: PipelineConfig) -> dict:
    """Flat dotted-key dict snapshot (used for model persistence)."""
    out: dict = {}
    for f in fields(PipelineConfig):
        value = getattr(cfg, f.name)
        if dataclasses.is_dataclass(value):
            for sub in fields(value):
                sv = getattr(value, sub.name)
                out[f"{f.name}.{sub.name}"] = list(sv) if isinstance(sv, tuple) else sv
        else:
            out[f.name] = value
    return out


def config_from_dict(data: dict) -> PipelineConfig:
    return apply_overrides(PipelineConfig(), dict(data))
