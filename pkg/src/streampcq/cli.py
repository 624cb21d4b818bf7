"""Command-line surface.

Every subcommand is a thin wrapper over one library operation and speaks
CSV (UTF-8, header row, '.' decimal); pass --json where available for a
machine-readable mirror.  Deterministic: identical inputs and seed give
byte-identical outputs.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import bitstream as bs
from . import calibration as cal
from . import evaluation as ev
from . import pointcloud as pcio
from .errors import StreamPcqError
from .model import ModelParams, VARIANTS, predict


def _load_schema(path):
    path = path or os.environ.get("STREAMPCQ_SCHEMA")
    if path is None:
        return bs.default_schema()
    if not Path(path).exists():
        print(f"error: schema file not found: {path}", file=sys.stderr)
        raise SystemExit(2)
    return bs.SyntaxSchema.load(path)


def _load_params(path, variant=None):
    p = ModelParams.load(path) if path else ModelParams()
    if variant:
        p = ModelParams(**{**p.to_dict(), "variant": variant})
    return p


def _write_rows(out, header, rows, as_json=False):
    fh = open(out, "w", newline="") if out else sys.stdout
    try:
        if as_json:
            json.dump([dict(zip(header, r)) for r in rows], fh, indent=2)
            fh.write("\n")
        else:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)
    finally:
        if out:
            fh.close()


# ---------------------------------------------------------------------------
# Subcommands


def cmd_extract(args) -> int:
    schema = _load_schema(args.schema)
    rows, failures = [], []
    for stream in args.streams:
        sidecar = None
        meta = Path(args.sidecar_dir or Path(stream).parent) / (Path(stream).name + ".meta.json")
        if meta.exists():
            sidecar = json.loads(meta.read_text())
        t0 = time.monotonic()
        try:
            feats = bs.extract_features(Path(stream).read_bytes(), schema, sidecar)
        except (StreamPcqError, OSError) as exc:
            failures.append((stream, str(exc)))
            continue
        elapsed_us = (time.monotonic() - t0) * 1e6
        rows.append([stream, feats.pqs, feats.qp, feats.texture_bits,
                     feats.point_count, repr(feats.tbpp), feats.point_count_source,
                     f"{elapsed_us:.1f}"])
    _write_rows(args.out, ["stream", "pqs", "qp", "texture_bits", "point_count",
                           "tbpp", "point_count_source", "elapsed_us"], rows, args.json)
    for stream, msg in failures:
        print(f"error: {stream}: {msg}", file=sys.stderr)
    return 1 if failures else 0


def cmd_score(args) -> int:
    params = _load_params(args.params, args.variant)
    rows, failures = [], []
    with open(args.features, newline="") as fh:
        for i, row in enumerate(csv.DictReader(fh)):
            try:
                feats = bs.BitstreamFeatures(
                    pqs=float(row["pqs"]), qp=int(row["qp"]),
                    texture_bits=int(row.get("texture_bits") or 0),
                    point_count=int(row.get("point_count") or 1),
                    tbpp=float(row["tbpp"]))
                pred = predict(params, feats)
            except (StreamPcqError, KeyError, ValueError) as exc:
                failures.append((i, str(exc)))
                continue
            pmos = min(100.0, max(0.0, pred.pmos)) if args.clamp else pred.pmos
            rows.append([row.get("stream", str(i)), row["pqs"], row["qp"], row["tbpp"],
                         repr(pmos), repr(pred.pmos_t), repr(pred.pmos_g),
                         repr(pred.tc_est)])
    _write_rows(args.out, ["stream", "pqs", "qp", "tbpp", "pmos", "pmos_t",
                           "pmos_g", "tc_est"], rows, args.json)
    for i, msg in failures:
        print(f"error: row {i}: {msg}", file=sys.stderr)
    return 1 if failures else 0


def cmd_tc(args) -> int:
    rows, failures = [], []
    for cloud in args.clouds:
        try:
            pc = pcio.read_ply(cloud)
            res = pcio.compute_tc(pc, block_edge=args.block_edge)
        except (StreamPcqError, OSError) as exc:
            failures.append((cloud, str(exc)))
            continue
        rows.append([cloud, res.block_edge, res.blocks_used, repr(res.tc)])
    _write_rows(args.out, ["cloud", "block_edge", "blocks_used", "tc"], rows, args.json)
    for cloud, msg in failures:
        print(f"error: {cloud}: {msg}", file=sys.stderr)
    return 1 if failures else 0


def cmd_train(args) -> int:
    records = cal.read_training_csv(args.training)
    params, diag = cal.train_full(records, variant=args.variant)
    params.save(args.out_params)
    if args.diagnostics:
        rows = [[stage, repr(diag.stage_rss.get(stage)), diag.stage_samples.get(stage),
                 " ".join(repr(v) for v in diag.coefficients.get(stage, ()))]
                for stage in sorted(set(diag.stage_rss) | set(diag.coefficients))]
        _write_rows(args.diagnostics, ["stage", "rss", "samples", "coefficients"], rows)
    for stage, key, reason in diag.skipped_groups:
        print(f"note: stage {stage} skipped group {key}: {reason}", file=sys.stderr)
    return 0


def _read_scores_csv(path):
    obj, mos, labels, contents = [], [], [], []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            labels.append(row.get("stimulus", ""))
            contents.append(row.get("content", ""))
            obj.append(float(row["objective"]))
            mos.append(float(row["mos"]))
    return ev.ScorePairSet(np.array(obj), np.array(mos),
                           tuple(labels), tuple(contents))


def cmd_eval(args) -> int:
    rep = ev.evaluate(_read_scores_csv(args.scores))
    b1, b2, b3, b4 = rep.logistic_params
    _write_rows(args.out, ["plcc", "srcc", "rmse", "beta1", "beta2", "beta3",
                           "beta4", "converged"],
                [[repr(rep.plcc), repr(rep.srcc), repr(rep.rmse),
                  repr(b1), repr(b2), repr(b3), repr(b4), rep.converged]], args.json)
    return 0


def cmd_loocv(args) -> int:
    records = cal.read_training_csv(args.training)
    folds, summary = ev.loocv(records, variant=args.variant)
    rows = [[held, repr(r.plcc), repr(r.srcc), repr(r.rmse)]
            for held, r in sorted(folds.items())]
    rows.append(["mean", repr(summary["mean"]["plcc"]), repr(summary["mean"]["srcc"]),
                 repr(summary["mean"]["rmse"])])
    if summary["std"]:
        rows.append(["std", repr(summary["std"]["plcc"]), repr(summary["std"]["srcc"]),
                     repr(summary["std"]["rmse"])])
    _write_rows(args.out, ["fold", "plcc", "srcc", "rmse"], rows, args.json)
    for held, msg in summary["failed_folds"].items():
        print(f"error: fold {held}: {msg}", file=sys.stderr)
    return 1 if summary["failed_folds"] else 0


def cmd_splits(args) -> int:
    records = cal.read_training_csv(args.training)
    results, summary = ev.random_split_eval(
        records, n_splits=args.n, n_train=args.train_contents,
        seed=args.seed, variant=args.variant)
    rows = [[i, repr(p), repr(s), repr(r)] for i, (p, s, r) in enumerate(results)]
    _write_rows(args.out, ["split", "plcc", "srcc", "rmse"], rows, args.json)
    if summary["mean"]:
        print(f"seed={summary['seed']} n={summary['n_splits']} "
              f"mean plcc={summary['mean']['plcc']:.4f} "
              f"srcc={summary['mean']['srcc']:.4f} "
              f"rmse={summary['mean']['rmse']:.4f}", file=sys.stderr)
    return 0


def _read_residuals(path):
    with open(path, newline="") as fh:
        return np.array([float(r["residual"]) for r in csv.DictReader(fh)])


def cmd_significance(args) -> int:
    names = [Path(p).stem for p in args.residuals]
    residuals = [_read_residuals(p) for p in args.residuals]
    encode = {"row-better": "1", "equivalent": "0.5", "column-better": "0"}
    rows = []
    for i, ri in enumerate(residuals):
        row = [names[i]]
        for j, rj in enumerate(residuals):
            if i == j:
                row.append("0.5")
            else:
                row.append(encode[ev.f_test(ri, rj, level=args.level).decision])
        rows.append(row)
    _write_rows(args.out, ["model"] + names, rows, args.json)
    return 0


def cmd_synth(args) -> int:
    feats = bs.BitstreamFeatures.from_counts(
        args.pqs, args.qp, args.texture_bits, args.points)
    data = bs.synthesize_bitstream(feats, _load_schema(args.schema))
    Path(args.out).write_bytes(data)
    if args.sidecar:
        Path(str(args.out) + ".meta.json").write_text(json.dumps({
            "pqs": args.pqs, "qp": args.qp,
            "texture_bits": args.texture_bits, "point_count": args.points,
        }, indent=2))
    return 0


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="streampcq",
                                 description="Bitstream-layer point-cloud quality toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="extract coding features from bitstreams")
    p.add_argument("streams", nargs="+")
    p.add_argument("--schema")
    p.add_argument("--sidecar-dir")
    p.add_argument("--out")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("score", help="predict quality from a feature CSV")
    p.add_argument("features")
    p.add_argument("--params")
    p.add_argument("--variant", choices=VARIANTS)
    p.add_argument("--clamp", action="store_true")
    p.add_argument("--out")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("tc", help="texture complexity of original clouds")
    p.add_argument("clouds", nargs="+")
    p.add_argument("--block-edge", type=int, default=4)
    p.add_argument("--out")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_tc)

    p = sub.add_parser("train", help="re-derive model coefficients")
    p.add_argument("training")
    p.add_argument("--out-params", required=True)
    p.add_argument("--variant", choices=VARIANTS, default="eq11-literal")
    p.add_argument("--diagnostics")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="PLCC/SRCC/RMSE against MOS")
    p.add_argument("scores")
    p.add_argument("--out")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("loocv", help="content-level leave-one-out")
    p.add_argument("training")
    p.add_argument("--variant", choices=VARIANTS, default="eq11-literal")
    p.add_argument("--out")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_loocv)

    p = sub.add_parser("splits", help="seeded random train/validation splits")
    p.add_argument("training")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--train-contents", type=int, default=10)
    p.add_argument("--variant", choices=VARIANTS, default="eq11-literal")
    p.add_argument("--out")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_splits)

    p = sub.add_parser("significance", help="pairwise F-test matrix")
    p.add_argument("residuals", nargs="+")
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--out")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_significance)

    p = sub.add_parser("synth", help="write a synthetic fixture bitstream")
    p.add_argument("--pqs", type=float, required=True)
    p.add_argument("--qp", type=int, required=True)
    p.add_argument("--texture-bits", type=int, required=True)
    p.add_argument("--points", type=int, required=True)
    p.add_argument("--schema")
    p.add_argument("--sidecar", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except StreamPcqError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
