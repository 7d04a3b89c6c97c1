"""Command line interface.

Subcommands: synth-gen, segment, hod, cluster, dmm, train, predict,
evaluate. Machine-readable results go to stdout, logging and timing to
stderr. Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical
failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import io as skio
from .config import PipelineConfig, load_config
from .dmm import VIEWS, compute_dmm, pseudo_color, segment_projections, write_ppm
from .errors import DataError, NumericalError, SkelactError
from .hod import compute_hod
from .igmm import default_prior, igmm_fit, reduce_dim
from .pipeline import (evaluate, load_model, predict_sample, save_model,
                       segment_sample, train_pipeline)
from .serialize import write_archive
from .synthetic import TEMPLATES, generate_synthetic

log = logging.getLogger("skelact.cli")


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; our contract reserves 2 for data
    # errors, so remap usage problems to exit code 1
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="skelact",
                     description="skeleton+depth action recognition pipeline")
    parser.add_argument("--config", help="config file (key = value lines)")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="config override, repeatable")
    parser.add_argument("--seed", type=int, help="global seed override")
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="info logging to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth-gen", help="generate a synthetic dataset")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--classes", default=",".join(sorted(TEMPLATES)),
                   help="comma-separated template ids")
    p.add_argument("--train", type=int, default=20, help="samples per class")
    p.add_argument("--test", type=int, default=10, help="test samples per class")
    p.add_argument("--frames", type=int, default=40)
    p.add_argument("--noise", type=float, default=0.002, help="jitter sigma (m)")

    p = sub.add_parser("segment", help="print segment boundaries per sample")
    p.add_argument("--manifest", required=True)
    p.add_argument("--dump-entropy", metavar="DIR",
                   help="write raw/weighted entropy curves as CSV")

    p = sub.add_parser("hod", help="print per-segment HOD descriptors as CSV")
    p.add_argument("--manifest", required=True)

    p = sub.add_parser("cluster", help="fit PCA+IGMM on a descriptor CSV")
    p.add_argument("--descriptors", required=True, help="CSV from 'hod'")
    p.add_argument("--labeling", required=True, help="output labeling CSV")
    p.add_argument("--model", required=True, help="output model archive")

    p = sub.add_parser("dmm", help="dump pseudo-colored DMMs as PPM images")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("train", help="train the full pipeline")
    p.add_argument("--manifest", required=True)
    p.add_argument("--model", required=True, help="output model archive")

    p = sub.add_parser("predict", help="predict actions for manifest samples")
    p.add_argument("--model", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--dump-features", metavar="PATH",
                   help="write HMM likelihood features as CSV")

    p = sub.add_parser("evaluate", help="evaluate a model on a labeled manifest")
    p.add_argument("--model", required=True)
    p.add_argument("--manifest", required=True)
    return parser


def _config_from_args(args) -> PipelineConfig:
    overrides = list(args.set)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    return load_config(args.config, overrides)


def _cmd_synth_gen(args, cfg: PipelineConfig) -> int:
    classes = [c.strip() for c in args.classes.split(",") if c.strip()]
    unknown = [c for c in classes if c not in TEMPLATES]
    if unknown:
        raise DataError(f"unknown templates {unknown}; known: {sorted(TEMPLATES)}")
    out = Path(args.out)
    (out / "data").mkdir(parents=True, exist_ok=True)
    intrinsics = cfg.camera.intrinsics()
    rng = np.random.default_rng(cfg.seed)

    manifests = {"train": [], "test": []}
    for split, count in (("train", args.train), ("test", args.test)):
        for cls in classes:
            for i in range(count):
                seed = int(rng.integers(0, 2 ** 31))
                sample = generate_synthetic(cls, args.noise, args.frames,
                                            seed, intrinsics)
                sid = f"{cls}_{split}{i:03d}"
                skel = out / "data" / f"{sid}.skel"
                depth = out / "data" / f"{sid}.depth"
                skio.save_skeleton(sample.skeleton, skel)
                skio.save_depth(sample.depth, depth)
                manifests[split].append(skio.ManifestEntry(
                    sample_id=sid, skeleton_path=skel, depth_path=depth,
                    label=cls, joint_count=sample.skeleton.joint_count))
    for split, entries in manifests.items():
        skio.write_manifest(entries, out / f"{split}.csv")
        log.info("wrote %d %s samples", len(entries), split)
    print(f"{out / 'train.csv'}")
    print(f"{out / 'test.csv'}")
    return 0


def _cmd_segment(args, cfg: PipelineConfig) -> int:
    entries = skio.read_manifest(args.manifest, cfg.joint_count)
    dump_dir = Path(args.dump_entropy) if args.dump_entropy else None
    if dump_dir:
        dump_dir.mkdir(parents=True, exist_ok=True)
    writer = csv.writer(sys.stdout)
    seg = cfg.segmentation
    for entry in entries:
        sample = entry.load()
        bounds = segment_sample(sample, cfg)
        writer.writerow([entry.sample_id, *bounds.boundaries.tolist()])
        if dump_dir:
            from .segmentation import extract_key_frames
            keys = extract_key_frames(sample.skeleton, seg.histogram(),
                                      seg.saliency())
            with (dump_dir / f"{entry.sample_id}.csv").open("w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["pair_index", "entropy", "weighted"])
                weighted = dict(zip(keys.initial.tolist(),
                                    keys.weighted.tolist()))
                for t, eta in enumerate(keys.curve.values.tolist()):
                    w.writerow([t, eta, weighted.get(t, "")])
    return 0


def _cmd_hod(args, cfg: PipelineConfig) -> int:
    entries = skio.read_manifest(args.manifest, cfg.joint_count)
    writer = csv.writer(sys.stdout)
    for entry in entries:
        sample = entry.load()
        bounds = segment_sample(sample, cfg)
        for idx, (start, stop) in enumerate(bounds.segments()):
            descriptor = compute_hod(sample.skeleton.slice(start, stop),
                                     cfg.hod, segment_id=(entry.sample_id, idx))
            writer.writerow([f"{entry.sample_id}:{idx}",
                             *(repr(v) for v in descriptor.values.tolist())])
    return 0


def _cmd_cluster(args, cfg: PipelineConfig) -> int:
    ids = []
    rows = []
    with open(args.descriptors, newline="") as fh:
        for row in csv.reader(fh):
            if not row:
                continue
            ids.append(row[0])
            rows.append([float(v) for v in row[1:]])
    if not rows:
        raise DataError(f"{args.descriptors}: no descriptors")
    X = np.asarray(rows)
    reduced, pca = reduce_dim(X, min(cfg.igmm.pca_dim, min(X.shape)))
    prior = default_prior(reduced, kappa0=cfg.igmm.kappa0,
                          nu0_extra=cfg.igmm.nu0_extra,
                          scale=cfg.igmm.prior_scale)
    state = igmm_fit(reduced, prior, cfg.igmm.alpha_config(),
                     iters=cfg.igmm.iters, burn_in=cfg.igmm.burn_in,
                     seed=cfg.igmm.seed)
    with open(args.labeling, "w", newline="") as fh:
        writer = csv.writer(fh)
        for sid, symbol in zip(ids, state.assignments.tolist()):
            writer.writerow([sid, symbol])
    write_archive({
        "meta": {"kind": "cluster-model", "n_symbols": state.cluster_count},
        "pca": {"mean": pca.mean, "components": pca.components,
                "explained": pca.explained},
        "igmm": {
            "assignments": state.assignments, "counts": state.counts,
            "sums": state.sums, "sumsqs": state.sumsqs, "alpha": state.alpha,
            "seed": state.seed, "iteration": state.iteration,
            "joint_log_score": state.joint_log_score,
            "prior": {"mu0": state.prior.mu0, "kappa0": state.prior.kappa0,
                      "nu0": state.prior.nu0, "lambda0": state.prior.lambda0},
        },
    }, args.model)
    print(f"clusters={state.cluster_count}")
    log.info("labeled %d segments into %d clusters", len(ids),
             state.cluster_count)
    return 0


def _cmd_dmm(args, cfg: PipelineConfig) -> int:
    entries = skio.read_manifest(args.manifest, cfg.joint_count)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    intrinsics = cfg.camera.intrinsics()
    geometry = cfg.dmm.geometry()
    for entry in entries:
        sample = entry.load()
        bounds = segment_sample(sample, cfg)
        for idx, (start, stop) in enumerate(bounds.segments()):
            stacks = segment_projections(sample.depth.values[start:stop + 1],
                                         intrinsics, geometry)
            for view in VIEWS:
                dmm = compute_dmm(stacks[view], view,
                                  include_first_diff=cfg.dmm.include_first_diff)
                colored = pseudo_color(dmm, phases=cfg.dmm.phases,
                                       modulation=cfg.dmm.modulation)
                write_ppm(colored.channels,
                          out / f"{entry.sample_id}_seg{idx}_{view}.ppm")
    return 0


def _cmd_train(args, cfg: PipelineConfig) -> int:
    sources = skio.read_manifest(args.manifest, cfg.joint_count)
    tp = train_pipeline(sources, cfg)
    save_model(tp, args.model)
    print(f"model={args.model} classes={len(tp.class_labels)} "
          f"symbols={tp.n_symbols}")
    return 0


def _cmd_predict(args, cfg: PipelineConfig) -> int:
    tp = load_model(args.model)
    sources = skio.read_manifest(args.manifest, tp.config.joint_count)
    writer = csv.writer(sys.stdout)
    feature_rows = []
    for source in sources:
        result = predict_sample(tp, source.load())
        symbols = ";".join(str(s) for s in result.symbols.tolist())
        writer.writerow([source.sample_id, result.predicted_label, symbols])
        feature_rows.append([source.sample_id,
                             *(repr(v) for v in result.features.tolist())])
    if args.dump_features:
        with open(args.dump_features, "w", newline="") as fh:
            csv.writer(fh).writerows(feature_rows)
    return 0


def _cmd_evaluate(args, cfg: PipelineConfig) -> int:
    tp = load_model(args.model)
    sources = skio.read_manifest(args.manifest, tp.config.joint_count)
    report = evaluate(tp, sources)
    json.dump(report.to_dict(), sys.stdout, indent=2)
    print()
    return 0


_COMMANDS = {
    "synth-gen": _cmd_synth_gen,
    "segment": _cmd_segment,
    "hod": _cmd_hod,
    "cluster": _cmd_cluster,
    "dmm": _cmd_dmm,
    "train": _cmd_train,
    "predict": _cmd_predict,
    "evaluate": _cmd_evaluate,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(stream=sys.stderr,
                        level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        cfg = _config_from_args(args)
        return _COMMANDS[args.command](args, cfg)
    except NumericalError as exc:
        print(f"skelact: numerical error: {exc}", file=sys.stderr)
        return 3
    except (DataError, OSError) as exc:
        print(f"skelact: data error: {exc}", file=sys.stderr)
        return 2
    except SkelactError as exc:
        print(f"skelact: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
