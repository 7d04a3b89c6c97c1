"""End-to-end orchestration: train, predict, evaluate, persist.

Training runs augmentation, entropy segmentation, HOD extraction, PCA +
IGMM labeling, per-view classifier training on pseudo-colored motion
maps, classifier re-encoding of the training sequences into symbol
strings, per-action HMM fitting and finally the SVM over HMM
log-likelihood features. Prediction uses the original (unrotated)
sample only. Everything is deterministic given the config's seeds.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import io as skio
from .augment import augmentation_specs, rotate_sample
from .classifier import (SegmentClassifierModel, SoftmaxModel, area_downsample,
                         classify_segments, train_segment_classifier)
from .config import PipelineConfig, config_from_dict, config_to_dict
from .datatypes import ActionSample, RotationSpec
from .dmm import VIEWS, compute_dmm, pseudo_color, segment_projections
from .errors import DataError, ModelFormatError
from .hmm import HmmModel, baum_welch, build_features
from .igmm import IgmmState, NiwPrior, PcaModel, default_prior, hard_assign_many, igmm_fit, reduce_dim
from .segmentation import SegmentBoundaries, extract_key_frames, split_segments
from .serialize import read_archive, write_archive
from .svm import SvmModel, svm_predict, train_svm

log = logging.getLogger("skelact.pipeline")


@dataclass(frozen=True)
class InMemorySource:
    """Sample source backed by an already materialized sample."""

    sample: ActionSample

    @property
    def sample_id(self) -> str:
        return self.sample.sample_id

    @property
    def label(self) -> str | None:
        return self.sample.label

    def load(self) -> ActionSample:
        return self.sample


@dataclass
class TrainedPipeline:
    config: PipelineConfig
    pca: PcaModel
    igmm_state: IgmmState
    classifier: SegmentClassifierModel
    hmms: dict[str, HmmModel]
    svm: SvmModel
    class_labels: list[str]
    format_version: int = 1

    @property
    def n_symbols(self) -> int:
        return self.igmm_state.cluster_count


@dataclass(frozen=True)
class PredictionResult:
    predicted_label: str
    features: np.ndarray
    symbols: np.ndarray
    boundaries: SegmentBoundaries


@dataclass
class EvalReport:
    class_labels: list[str]
    confusion: np.ndarray       # rows = true class, cols = predicted
    accuracy: float
    precision: np.ndarray
    recall: np.ndarray
    n_samples: int
    timings: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "class_labels": self.class_labels,
            "confusion": self.confusion.tolist(),
            "accuracy": self.accuracy,
            "precision": self.precision.tolist(),
            "recall": self.recall.tolist(),
            "n_samples": self.n_samples,
            "timings": {k: round(v, 4) for k, v in self.timings.items()},
        }


def segment_sample(sample: ActionSample, cfg: PipelineConfig) -> SegmentBoundaries:
    seg = cfg.segmentation
    keys = extract_key_frames(sample.skeleton, seg.histogram(), seg.saliency())
    return split_segments(len(sample.skeleton), keys, seg.min_segment_frames)


def segment_color_triple(sample: ActionSample, start: int, stop: int,
                         cfg: PipelineConfig) -> dict[str, np.ndarray]:
    """Pseudo-colored per-view DMMs of one segment, downsampled to the
    classifier resolution."""
    depth = sample.depth.values[start:stop + 1]
    stacks = segment_projections(depth, cfg.camera.intrinsics(),
                                 cfg.dmm.geometry())
    size = cfg.classifier.downsample
    triple = {}
    for view in VIEWS:
        dmm = compute_dmm(stacks[view], view,
                          include_first_diff=cfg.dmm.include_first_diff)
        colored = pseudo_color(dmm, phases=cfg.dmm.phases,
                               modulation=cfg.dmm.modulation)
        triple[view] = area_downsample(colored.channels, size, size)
    return triple


@dataclass
class _EncodedSequence:
    sample_id: str
    label: str | None
    boundaries: SegmentBoundaries
    hods: list[np.ndarray]
    triples: list[dict[str, np.ndarray]]


def _encode_sample(sample: ActionSample, cfg: PipelineConfig) -> _EncodedSequence:
    from .hod import compute_hod

    bounds = segment_sample(sample, cfg)
    hods = []
    triples = []
    for idx, (start, stop) in enumerate(bounds.segments()):
        descriptor = compute_hod(sample.skeleton.slice(start, stop), cfg.hod,
                                 segment_id=(sample.sample_id, idx))
        hods.append(descriptor.values)
        triples.append(segment_color_triple(sample, start, stop, cfg))
    return _EncodedSequence(sample_id=sample.sample_id, label=sample.label,
                            boundaries=bounds, hods=hods, triples=triples)


def train_pipeline(sources: list, cfg: PipelineConfig | None = None) -> TrainedPipeline:
    if cfg is None:
        cfg = PipelineConfig()
    if not sources:
        raise DataError("empty training manifest")
    labels = [s.label for s in sources]
    if any(lbl is None for lbl in labels):
        missing = [s.sample_id for s in sources if s.label is None]
        raise DataError(f"unlabeled training samples: {missing[:5]}")
    class_labels = sorted(set(labels))
    if len(class_labels) < 2:
        raise DataError(f"at least 2 classes are required, got {class_labels}")

    intrinsics = cfg.camera.intrinsics()
    specs = augmentation_specs(list(cfg.augment.yaw_degrees),
                               list(cfg.augment.pitch_degrees))

    t0 = time.perf_counter()
    encoded: list[_EncodedSequence] = []
    for source in sources:
        try:
            sample = source.load()
        except Exception as exc:
            raise DataError(f"stage load, sample {source.sample_id!r}: {exc}") from exc
        for spec in specs:
            if spec.yaw_degrees == 0.0 and spec.pitch_degrees == 0.0:
                copy = sample
            else:
                suffix = f"#y{spec.yaw_degrees:g}p{spec.pitch_degrees:g}"
                copy = rotate_sample(sample, spec, intrinsics, suffix=suffix)
            try:
                encoded.append(_encode_sample(copy, cfg))
            except Exception as exc:
                raise DataError(f"stage segment/encode, sample "
                                f"{copy.sample_id!r}: {exc}") from exc
    log.info("augment+segment+features: %d sequences, %d segments, %.1fs",
             len(encoded), sum(len(e.hods) for e in encoded),
             time.perf_counter() - t0)

    t0 = time.perf_counter()
    hod_matrix = np.asarray([h for e in encoded for h in e.hods])
    reduced, pca = reduce_dim(hod_matrix, min(cfg.igmm.pca_dim,
                                              min(hod_matrix.shape)))
    prior = default_prior(reduced, kappa0=cfg.igmm.kappa0,
                          nu0_extra=cfg.igmm.nu0_extra,
                          scale=cfg.igmm.prior_scale)
    state = igmm_fit(reduced, prior, cfg.igmm.alpha_config(),
                     iters=cfg.igmm.iters, burn_in=cfg.igmm.burn_in,
                     seed=cfg.igmm.seed)
    n_symbols = state.cluster_count
    if n_symbols < 2:
        raise DataError("IGMM collapsed to a single cluster; the corpus has "
                        "no segment diversity to model")
    log.info("PCA+IGMM: %d observations -> %d symbols, %.1fs",
             len(reduced), n_symbols, time.perf_counter() - t0)

    t0 = time.perf_counter()
    triples = [t for e in encoded for t in e.triples]
    classifier = train_segment_classifier(triples, state.assignments,
                                          n_symbols,
                                          cfg.classifier.train_config())
    log.info("segment classifier: %.1fs", time.perf_counter() - t0)

    t0 = time.perf_counter()
    if cfg.hmm_train_source == "classifier":
        flat_symbols = classify_segments(classifier, triples)
    else:
        flat_symbols = state.assignments
    sequences: list[np.ndarray] = []
    pos = 0
    for e in encoded:
        n = len(e.hods)
        sequences.append(np.asarray(flat_symbols[pos:pos + n], dtype=np.int64))
        pos += n

    hmms: dict[str, HmmModel] = {}
    for cls in class_labels:
        cls_seqs = [seq for seq, e in zip(sequences, encoded) if e.label == cls]
        hmms[cls] = baum_welch(cls_seqs, n_symbols,
                               freeze_emissions=cfg.hmm.freeze_emissions,
                               epsilon=cfg.hmm.epsilon,
                               max_iters=cfg.hmm.max_iters, tol=cfg.hmm.tol)

    model_list = [hmms[cls] for cls in class_labels]
    features = np.asarray([
        build_features(model_list, seq,
                       normalize=cfg.hmm.normalize_likelihood,
                       floor=cfg.hmm.feature_floor)
        for seq in sequences
    ])
    seq_labels = [e.label for e in encoded]
    svm = train_svm(features, seq_labels, c=cfg.svm.c, epochs=cfg.svm.epochs,
                    seed=cfg.svm.seed)
    log.info("HMM+SVM: %.1fs", time.perf_counter() - t0)

    return TrainedPipeline(config=cfg, pca=pca, igmm_state=state,
                           classifier=classifier, hmms=hmms, svm=svm,
                           class_labels=class_labels)


def encode_symbols(tp: TrainedPipeline, sample: ActionSample) -> tuple[np.ndarray, SegmentBoundaries]:
    """Segment a sample and label each segment with the trained classifier."""
    cfg = tp.config
    bounds = segment_sample(sample, cfg)
    triples = [segment_color_triple(sample, start, stop, cfg)
               for start, stop in bounds.segments()]
    symbols = classify_segments(tp.classifier, triples)
    return symbols, bounds


def predict_sample(tp: TrainedPipeline, sample: ActionSample) -> PredictionResult:
    """Classify one (unaugmented) sample; returns the intermediate symbol
    sequence and likelihood features alongside the label."""
    symbols, bounds = encode_symbols(tp, sample)
    model_list = [tp.hmms[cls] for cls in tp.class_labels]
    features = build_features(model_list, symbols,
                              normalize=tp.config.hmm.normalize_likelihood,
                              floor=tp.config.hmm.feature_floor)
    predicted = svm_predict(tp.svm, features[None, :])[0]
    return PredictionResult(predicted_label=predicted, features=features,
                            symbols=symbols, boundaries=bounds)


def evaluate(tp: TrainedPipeline, sources: list) -> EvalReport:
    if not sources:
        raise DataError("empty evaluation manifest")
    labels = sorted(set(tp.class_labels)
                    | {s.label for s in sources if s.label is not None})
    index = {lbl: i for i, lbl in enumerate(labels)}
    confusion = np.zeros((len(labels), len(labels)), dtype=np.int64)
    timings = {"load": 0.0, "predict": 0.0}
    n = 0
    correct = 0
    for source in sources:
        if source.label is None:
            raise DataError(f"evaluation sample {source.sample_id!r} has no label")
        t0 = time.perf_counter()
        sample = source.load()
        timings["load"] += time.perf_counter() - t0
        t0 = time.perf_counter()
        result = predict_sample(tp, sample)
        timings["predict"] += time.perf_counter() - t0
        confusion[index[source.label], index[result.predicted_label]] += 1
        correct += int(result.predicted_label == source.label)
        n += 1

    col_sums = confusion.sum(axis=0)
    row_sums = confusion.sum(axis=1)
    diag = np.diag(confusion)
    with np.errstate(divide="ignore", invalid="ignore"):
        precision = np.where(col_sums > 0, diag / col_sums, 0.0)
        recall = np.where(row_sums > 0, diag / row_sums, 0.0)
    return EvalReport(class_labels=labels, confusion=confusion,
                      accuracy=correct / n, precision=precision,
                      recall=recall, n_samples=n, timings=timings)


# ---------------------------------------------------------------------------
# Persistence

def save_model(tp: TrainedPipeline, path) -> None:
    state = tp.igmm_state
    components = {
        "meta": {
            "kind": "pipeline",
            "n_symbols": tp.n_symbols,
            "class_labels": list(tp.class_labels),
        },
        "config": config_to_dict(tp.config),
        "pca": {
            "mean": tp.pca.mean,
            "components": tp.pca.components,
            "explained": tp.pca.explained,
        },
        "igmm": {
            "assignments": state.assignments,
            "counts": state.counts,
            "sums": state.sums,
            "sumsqs": state.sumsqs,
            "alpha": state.alpha,
            "seed": state.seed,
            "iteration": state.iteration,
            "joint_log_score": state.joint_log_score,
            "prior": {
                "mu0": state.prior.mu0,
                "kappa0": state.prior.kappa0,
                "nu0": state.prior.nu0,
                "lambda0": state.prior.lambda0,
            },
        },
        "classifier": {
            "n_classes": tp.classifier.n_classes,
            "downsample": tp.classifier.downsample,
            "views": {
                view: {
                    "weights": sm.weights,
                    "bias": sm.bias,
                    "feat_mean": sm.feat_mean,
                    "feat_std": sm.feat_std,
                }
                for view, sm in tp.classifier.views.items()
            },
        },
        "hmms": {
            cls: {
                "initial": m.initial,
                "transition": m.transition,
                "emission": m.emission,
            }
            for cls, m in tp.hmms.items()
        },
        "svm": {
            "weights": tp.svm.weights,
            "bias": tp.svm.bias,
            "classes": list(tp.svm.classes),
            "feat_mean": tp.svm.feat_mean,
            "feat_std": tp.svm.feat_std,
            "c": tp.svm.c,
        },
    }
    write_archive(components, path)


def load_model(path) -> TrainedPipeline:
    comp = read_archive(path)
    try:
        meta = comp["meta"]
        cfg = config_from_dict(comp["config"])
        pca = PcaModel(mean=comp["pca"]["mean"],
                       components=comp["pca"]["components"],
                       explained=comp["pca"]["explained"])
        ig = comp["igmm"]
        prior = NiwPrior(mu0=ig["prior"]["mu0"], kappa0=ig["prior"]["kappa0"],
                         nu0=ig["prior"]["nu0"], lambda0=ig["prior"]["lambda0"])
        state = IgmmState(assignments=ig["assignments"], counts=ig["counts"],
                          sums=ig["sums"], sumsqs=ig["sumsqs"],
                          alpha=ig["alpha"], prior=prior, seed=ig["seed"],
                          iteration=ig["iteration"],
                          joint_log_score=ig["joint_log_score"])
        cl = comp["classifier"]
        classifier = SegmentClassifierModel(
            views={view: SoftmaxModel(weights=v["weights"], bias=v["bias"],
                                      feat_mean=v["feat_mean"],
                                      feat_std=v["feat_std"])
                   for view, v in cl["views"].items()},
            n_classes=cl["n_classes"], downsample=cl["downsample"])
        hmms = {cls: HmmModel(initial=m["initial"], transition=m["transition"],
                              emission=m["emission"])
                for cls, m in comp["hmms"].items()}
        sv = comp["svm"]
        svm = SvmModel(weights=sv["weights"], bias=sv["bias"],
                       classes=list(sv["classes"]), feat_mean=sv["feat_mean"],
                       feat_std=sv["feat_std"], c=sv["c"])
    except KeyError as exc:
        raise ModelFormatError(f"{path}: missing component field {exc}") from None

    tp = TrainedPipeline(config=cfg, pca=pca, igmm_state=state,
                         classifier=classifier, hmms=hmms, svm=svm,
                         class_labels=list(meta["class_labels"]))
    k = tp.n_symbols
    if classifier.n_classes != k:
        raise ModelFormatError(f"{path}: classifier alphabet {classifier.n_classes} "
                               f"!= IGMM clusters {k}")
    for cls, m in hmms.items():
        if m.n_states != k:
            raise ModelFormatError(f"{path}: HMM {cls!r} has {m.n_states} "
                                   f"states, expected {k}")
    if sorted(hmms) != sorted(tp.class_labels):
        raise ModelFormatError(f"{path}: HMM set does not match class labels")
    return tp


def manifest_sources(path, joint_count: int) -> list[skio.ManifestEntry]:
    """ManifestEntry list for a CSV manifest (sources load lazily)."""
    return skio.read_manifest(path, joint_count)
