"""Single entry point (`tomo`) orchestrating the full pipeline.

Subcommands: phantom, ingest fetch, embed, density train/eval,
risk train/eval, detect train/predict/eval, stats compare/subgroup.

Conventions:
* machine-readable results go to stdout as one JSON document, logs to
  stderr;
* exit 0 on success, 1 on data errors, 2 on usage errors;
* every artifact records the resolved config and seed that produced it;
* with --deterministic no timestamps are written, so identical configs
  and seeds yield byte-identical artifacts;
* option precedence is command line > --config file > built-in defaults.
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

from . import __version__
from .density import DensityProbe, evaluate_density, train_density
from .detect import Detection, GroundTruthBox, LesionDetector, froc
from .embeddings import (
    AggregationMode,
    EmbeddingStore,
    SignalSpec,
    synthesize_embeddings,
    volume_token_grids,
)
from .errors import TomoError
from .features import dataset_features
from .ingest import (
    CacheConfig,
    DicomWebClient,
    PhantomDatasetConfig,
    Prefetcher,
    RemoteSource,
    RotatingDiskCache,
    fetch_volume_cached,
    generate_phantom_dataset,
)
from .io.jsonio import read_json, write_json
from .risk import CumulativeHazardModel, build_record, eval_risk, subgroup_risk
from .stats import (
    BootstrapConfig,
    PairedOutcomes,
    delong_test,
    mcnemar_test,
    subgroup_table,
)
from .studies import load_manifest
from .train import LinearHead

CACHE_DIR_ENV = "TOMO_CACHE_DIR"


def log(msg: str) -> None:
    print(msg, file=sys.stderr)


def emit(doc: dict) -> None:
    print(json.dumps(doc, sort_keys=True, indent=1))


def _stamp(doc: dict, deterministic: bool) -> dict:
    doc["tool_version"] = __version__
    if not deterministic:
        doc["generated_at"] = time.strftime("%Y-%m-%dT%H:%M:%S")
    return doc


def _head_to_json(head: LinearHead) -> dict:
    return {"w": head.weights.tolist(), "b": head.bias.tolist()}


def _head_from_json(doc: dict) -> LinearHead:
    return LinearHead(np.asarray(doc["w"]), np.asarray(doc["b"]))


# --- option resolution -----------------------------------------------------------


class Resolver:
    """flags > config file > defaults, tracked per task section."""

    def __init__(self, args: argparse.Namespace, task: str):
        self.args = vars(args)
        config = {}
        if self.args.get("config"):
            config = read_json(self.args["config"])
        self.section = {**config, **config.get(task, {})}

    def get(self, name: str, default=None):
        value = self.args.get(name)
        if value is not None:
            return value
        key = name.replace("_", "-")
        if key in self.section:
            return self.section[key]
        if name in self.section:
            return self.section[name]
        return default


# --- subcommand handlers ------------------------------------------------------------


def cmd_phantom(args) -> dict:
    r = Resolver(args, "phantom")
    cfg = PhantomDatasetConfig(
        n_exams=int(r.get("n_exams", 20)),
        slices_per_volume=int(r.get("slices", 6)),
        views_per_exam=int(r.get("views", 4)),
        write_pixels=r.get("pixels", "none") == "all",
        lesion_rate=float(r.get("lesion_rate", 0.7)),
        event_rate=float(r.get("event_rate", 0.15)),
    )
    seed = int(r.get("seed", 0))
    produced = generate_phantom_dataset(args.out, seed, cfg)
    return {
        "task": "phantom",
        "config": {"seed": seed, "out": args.out, **cfg.__dict__},
        "outputs": produced,
    }


def cmd_ingest_fetch(args) -> dict:
    r = Resolver(args, "ingest")
    cache_dir = r.get("cache_dir") or os.environ.get(CACHE_DIR_ENV)
    if not cache_dir:
        raise TomoError(f"--cache-dir or ${CACHE_DIR_ENV} is required")
    dataset = load_manifest(args.manifest)
    allow = r.get("allow")
    source = RemoteSource(
        base_url=str(r.get("base_url")),
        auth_token=str(r.get("token", "")),
        allowed_study_ids=frozenset(allow) if allow else None,
    )
    cache = RotatingDiskCache(
        CacheConfig(capacity_bytes=int(r.get("capacity_bytes")), root_dir=cache_dir)
    )
    client = DicomWebClient(source)
    refs = [v for exam in dataset.exams for v in exam.views.values()]
    depth = max(1, min(int(r.get("prefetch_depth", 1)), int(r.get("threads", 2))))
    fetched = []
    if depth > 1:
        for ref, path in Prefetcher(
            lambda rf: fetch_volume_cached(cache, client, rf), refs, depth=depth
        ):
            fetched.append({"volume": ref.key(), "path": str(path)})
        fetched.sort(key=lambda d: d["volume"])
    else:
        for ref in refs:
            path = fetch_volume_cached(cache, client, ref)
            fetched.append({"volume": ref.key(), "path": str(path)})
    return {
        "task": "ingest-fetch",
        "config": {
            "manifest": args.manifest,
            "cache_dir": str(cache_dir),
            "capacity_bytes": int(r.get("capacity_bytes")),
        },
        "outputs": {"fetched": fetched, "resident_bytes": cache.total_bytes()},
    }


def cmd_embed(args) -> dict:
    r = Resolver(args, "embed")
    dataset = load_manifest(args.manifest)
    spec = SignalSpec(
        dim=int(r.get("dim", 32)),
        patches=int(r.get("patches", 16)),
        slices_per_view=int(r.get("slices_per_view", 2)),
        noise=float(r.get("noise", 1.0)),
        density_separation=float(r.get("density_sep", 0.0)),
        risk_separation=float(r.get("risk_sep", 0.0)),
    )
    seed = int(r.get("seed", 0))
    store = EmbeddingStore(args.store)
    count = synthesize_embeddings(store, dataset, spec, seed)
    return {
        "task": "embed",
        "config": {"manifest": args.manifest, "store": args.store, "seed": seed,
                   **{k: getattr(spec, k) for k in
                      ("dim", "patches", "slices_per_view", "noise",
                       "density_separation", "risk_separation")}},
        "outputs": {"store": args.store, "volumes_written": count},
    }


def _density_xy(store, manifest, split, mode):
    dataset = load_manifest(manifest)
    exams = [e for e in dataset.by_split(split) if e.density is not None]
    X, kept = dataset_features(store, exams, mode)
    y = np.asarray([e.density.rank for e in kept], dtype=np.int64)
    return X, y, kept


def cmd_density_train(args) -> dict:
    r = Resolver(args, "density")
    mode = AggregationMode(r.get("mode", "patch-mean-std"))
    store = EmbeddingStore(args.store)
    seed = int(r.get("seed", 0))
    fraction = float(r.get("fraction", 1.0))
    X_train, y_train, _ = _density_xy(store, args.manifest, "train", mode)
    X_val, y_val, _ = _density_xy(store, args.manifest, "val", mode)
    probe = DensityProbe(
        lr=float(r.get("lr", 0.01)),
        epochs=int(r.get("epochs", 75)),
        batch_size=int(r.get("batch_size", 64)),
        weight_decay=float(r.get("weight_decay", 1e-4)),
        seed=seed,
    )
    run = train_density(
        X_train,
        y_train,
        mode=mode.value,
        fraction=fraction,
        seed=seed,
        fraction_seed=int(r.get("fraction_seed", 17)),
        probe=probe,
        val_data=(X_val, y_val) if len(y_val) else None,
    )
    doc = _stamp(
        {
            "task": "density-train",
            "config": {
                "store": args.store,
                "manifest": args.manifest,
                "mode": mode.value,
                "fraction": fraction,
                "seed": seed,
                "lr": probe.lr,
                "epochs": probe.epochs,
                "batch_size": probe.batch_size,
                "weight_decay": probe.weight_decay,
            },
            "weights": _head_to_json(run.probe.head_),
            "curves": {"train_loss": run.train_loss, "val_loss": run.val_loss},
            "feature_dim": int(run.probe.n_features_in_),
        },
        args.deterministic,
    )
    write_json(args.out, doc)
    return {"task": "density-train", "outputs": {"run": args.out}}


def cmd_density_eval(args) -> dict:
    r = Resolver(args, "density")
    run = read_json(args.run)
    store = EmbeddingStore(r.get("store") or run["config"]["store"])
    manifest = r.get("manifest") or run["config"]["manifest"]
    mode = AggregationMode(run["config"]["mode"])
    split = r.get("split", "test")
    X, y, _ = _density_xy(store, manifest, split, mode)
    probe = DensityProbe()
    probe.head_ = _head_from_json(run["weights"])
    probe.classes_ = np.arange(4)
    results = evaluate_density(probe, X, y)
    results["n"] = int(len(y))
    doc = _stamp(
        {"task": "density-eval", "config": {"run": args.run, "split": split},
         "results": results},
        args.deterministic,
    )
    if args.out:
        write_json(args.out, doc)
        return {"task": "density-eval", "outputs": {"eval": args.out}, "results": results}
    return doc


def _load_records(path: str):
    doc = read_json(path)
    entries = doc["records"] if isinstance(doc, dict) else doc
    records, meta = [], []
    for e in entries:
        records.append(
            build_record(
                e["exam_id"],
                bool(e["event"]),
                e.get("event_year"),
                float(e.get("followup_years", 0.0)),
            )
        )
        meta.append(e)
    return records, meta


def _risk_features(store, meta, mode):
    keep, rows = [], []
    from .features import study_features

    for i, e in enumerate(meta):
        rows.append(study_features(store, e["patient_id"], e["exam_id"], mode))
        keep.append(i)
    return np.stack(rows), keep


def cmd_risk_train(args) -> dict:
    r = Resolver(args, "risk")
    mode = AggregationMode(r.get("mode", "patch-mean-std"))
    store = EmbeddingStore(args.store)
    seed = int(r.get("seed", 0))
    records, meta = _load_records(args.records)
    idx_train = [i for i, e in enumerate(meta) if e.get("split", "train") == "train"]
    idx_val = [i for i, e in enumerate(meta) if e.get("split") == "val"]
    X, _ = _risk_features(store, meta, mode)
    y = np.stack([rec.labels for rec in records]).astype(np.float64)
    m = np.stack([rec.mask for rec in records]).astype(np.float64)
    model = CumulativeHazardModel(
        lr=float(r.get("lr", 0.05)),
        epochs=int(r.get("epochs", 100)),
        batch_size=int(r.get("batch_size", 64)),
        weight_decay=float(r.get("weight_decay", 1e-4)),
        seed=seed,
        select=str(r.get("select", "auroc")),
    )
    val_data = (X[idx_val], y[idx_val], m[idx_val]) if idx_val else None
    model.fit(X[idx_train], y[idx_train], m[idx_train], val_data=val_data)
    doc = _stamp(
        {
            "task": "risk-train",
            "config": {
                "store": args.store,
                "records": args.records,
                "mode": mode.value,
                "seed": seed,
                "lr": model.lr,
                "epochs": model.epochs,
                "batch_size": model.batch_size,
                "weight_decay": model.weight_decay,
                "select": model.select,
            },
            "weights": {name: _head_to_json(h) for name, h in model.heads_.items()},
            "feature_dim": int(model.n_features_in_),
        },
        args.deterministic,
    )
    write_json(args.out, doc)
    return {"task": "risk-train", "outputs": {"head": args.out}}


def cmd_risk_eval(args) -> dict:
    r = Resolver(args, "risk")
    head_doc = read_json(args.head)
    cfg = head_doc["config"]
    store = EmbeddingStore(r.get("store") or cfg["store"])
    records_path = r.get("records") or cfg["records"]
    mode = AggregationMode(cfg["mode"])
    split = r.get("split", "test")
    records, meta = _load_records(records_path)
    idx = [i for i, e in enumerate(meta) if e.get("split") == split]
    records = [records[i] for i in idx]
    meta = [meta[i] for i in idx]
    X, _ = _risk_features(store, meta, mode)
    model = CumulativeHazardModel(select=head_doc["config"]["select"])
    model.heads_ = {name: _head_from_json(w) for name, w in head_doc["weights"].items()}
    risk_scores = model.predict_risk(X)
    boot = BootstrapConfig(seed=int(r.get("bootstrap_seed", 0)))
    results = eval_risk(risk_scores, records, boot)
    if args.by_density:
        groups = [str(e.get("density")) for e in meta]
        results["by_density"] = subgroup_risk(risk_scores, records, groups, boot)
    doc = _stamp(
        {"task": "risk-eval", "config": {"head": args.head, "split": split},
         "results": results},
        args.deterministic,
    )
    if args.out:
        write_json(args.out, doc)
        return {"task": "risk-eval", "outputs": {"eval": args.out}, "results": results}
    return doc


def _detect_data(data_dir: str, split: str):
    """(volume grids, gt boxes) per volume of the split, from a phantom dir."""
    dataset = load_manifest(Path(data_dir) / "manifest.json")
    store = EmbeddingStore(Path(data_dir) / "volumes")
    by_volume: dict[str, list] = {}
    for box in dataset.annotations:
        by_volume.setdefault(box.volume.key(), []).append(box)
    volumes = {}
    gts = {}
    for exam in dataset.by_split(split):
        for ref in exam.views.values():
            key = ref.key()
            if key not in store:
                continue
            pixels = store.read(key).astype(np.float64)
            volumes[key] = volume_token_grids(pixels)
            gts[key] = [
                GroundTruthBox(b.x, b.y, b.w, b.h, b.slice_index)
                for b in by_volume.get(key, [])
            ]
    return volumes, gts


def cmd_detect_train(args) -> dict:
    r = Resolver(args, "detect")
    seed = int(r.get("seed", 0))
    train_volumes, train_gts = _detect_data(args.data, "train")
    val_volumes, val_gts = _detect_data(args.data, "val")
    annotated = []
    for key, grids in train_volumes.items():
        by_slice: dict[int, list] = {}
        for b in train_gts[key]:
            by_slice.setdefault(b.slice_index, []).append([b.x, b.y, b.w, b.h])
        for s, boxes in sorted(by_slice.items()):
            annotated.append((grids[s], np.asarray(boxes)))
    detector = LesionDetector(
        seed=seed,
        lr=float(r.get("lr", 0.05)),
        epochs=int(r.get("epochs", 60)),
        alpha=float(r.get("alpha", 0.5)),
        gamma=float(r.get("gamma", 2.0)),
        pos_thr=float(r.get("pos_thr", 0.5)),
        neg_thr=float(r.get("neg_thr", 0.4)),
        nms_iou=float(r.get("nms_iou", 0.2)),
    )
    val = [(val_volumes[k], val_gts[k]) for k in sorted(val_volumes)] or None
    detector.fit(annotated, val)
    doc = _stamp(
        {
            "task": "detect-train",
            "config": {"data": args.data, "seed": seed, "epochs": detector.epochs,
                       "lr": detector.lr, "alpha": detector.alpha,
                       "gamma": detector.gamma, "pos_thr": detector.pos_thr,
                       "neg_thr": detector.neg_thr, "nms_iou": detector.nms_iou},
            "weights": {
                "cls_weight": detector.head_.cls_weight.tolist(),
                "cls_bias": detector.head_.cls_bias.tolist(),
                "box_weight": detector.head_.box_weight.tolist(),
                "box_bias": detector.head_.box_bias.tolist(),
            },
            "val_sensitivity": detector.val_sensitivity_,
        },
        args.deterministic,
    )
    write_json(args.out, doc)
    return {"task": "detect-train",
            "outputs": {"head": args.out},
            "results": {"val_sensitivity": detector.val_sensitivity_}}


def _detector_from_doc(doc: dict) -> LesionDetector:
    from .detect.model import DetectorHeadParams

    detector = LesionDetector(
        seed=int(doc["config"]["seed"]),
        pos_thr=float(doc["config"].get("pos_thr", 0.5)),
        neg_thr=float(doc["config"].get("neg_thr", 0.4)),
        nms_iou=float(doc["config"].get("nms_iou", 0.2)),
    )
    detector._ensure_frozen()
    w = doc["weights"]
    detector.head_ = DetectorHeadParams(
        np.asarray(w["cls_weight"]),
        np.asarray(w["cls_bias"]),
        np.asarray(w["box_weight"]),
        np.asarray(w["box_bias"]),
    )
    return detector


def cmd_detect_predict(args) -> dict:
    r = Resolver(args, "detect")
    split = r.get("split", "test")
    volumes, gts = _detect_data(args.data, split)
    detector = _detector_from_doc(read_json(args.head))
    preds = []
    for key in sorted(volumes):
        for det in detector.predict_volume(volumes[key]):
            preds.append(
                {"volume_id": key, "slice_index": det.slice_index,
                 "x": det.x, "y": det.y, "w": det.w, "h": det.h,
                 "score": det.score}
            )
    out_doc = _stamp(
        {"task": "detect-predict", "config": {"data": args.data, "head": args.head,
                                              "split": split},
         "predictions": preds},
        args.deterministic,
    )
    write_json(args.out, out_doc)
    outputs = {"predictions": args.out}
    if args.gt_out:
        gt_doc = {
            "volumes": sorted(volumes),
            "annotations": [
                {"volume_id": key, "slice_index": b.slice_index, "x": b.x, "y": b.y,
                 "w": b.w, "h": b.h, "malignancy": "cancer"}
                for key in sorted(gts) for b in gts[key]
            ],
        }
        write_json(args.gt_out, gt_doc)
        outputs["gt"] = args.gt_out
    return {"task": "detect-predict", "outputs": outputs}


def cmd_detect_eval(args) -> dict:
    gt_doc = read_json(args.gt)
    pred_doc = read_json(args.preds)
    gts: dict[str, list[GroundTruthBox]] = {v: [] for v in gt_doc.get("volumes", [])}
    for a in gt_doc.get("annotations", []):
        gts.setdefault(a["volume_id"], []).append(
            GroundTruthBox(a["x"], a["y"], a["w"], a["h"], a.get("slice_index", 0))
        )
    preds: dict[str, list[Detection]] = {v: [] for v in gts}
    for p in pred_doc.get("predictions", []):
        preds.setdefault(p["volume_id"], []).append(
            Detection(p["x"], p["y"], p["w"], p["h"], p["score"],
                      p.get("slice_index", 0))
        )
    fp_points = [float(v) for v in str(args.fp).split(",")]
    result = froc(gts, preds, fp_points)
    if args.out_csv:
        with open(args.out_csv, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["threshold", "mean_fp_per_volume", "sensitivity"])
            for threshold, mean_fp, sens in result.curve:
                writer.writerow([repr(threshold), repr(mean_fp), repr(sens)])
    return {
        "task": "detect-eval",
        "config": {"preds": args.preds, "gt": args.gt, "fp": fp_points},
        "results": {
            "fp_points": result.fp_points,
            "sensitivities": result.sensitivities,
            "average_sensitivity": result.average_sensitivity,
            "n_volumes": result.n_volumes,
            "n_lesions": result.n_lesions,
        },
        "outputs": {"csv": args.out_csv} if args.out_csv else {},
    }


def _load_predictions(path: str) -> dict[str, dict]:
    doc = read_json(path)
    rows = doc["predictions"] if isinstance(doc, dict) else doc
    return {str(r["id"]): r for r in rows}


def cmd_stats_compare(args) -> dict:
    a = _load_predictions(args.preds_a)
    b = _load_predictions(args.preds_b)
    ids = sorted(set(a) & set(b))
    if not ids:
        raise TomoError("no shared sample ids between the two prediction files")
    if args.test == "mcnemar":
        correct_a = np.array([a[i]["pred"] == a[i]["label"] for i in ids])
        correct_b = np.array([b[i]["pred"] == b[i]["label"] for i in ids])
        p = mcnemar_test(PairedOutcomes(correct_a, correct_b))
        results = {
            "test": "mcnemar",
            "n": len(ids),
            "accuracy_a": float(correct_a.mean()),
            "accuracy_b": float(correct_b.mean()),
            "p": p,
        }
    else:
        labels = np.array([a[i]["label"] for i in ids])
        labels_b = np.array([b[i]["label"] for i in ids])
        if not np.array_equal(labels, labels_b):
            raise TomoError("label mismatch between prediction files")
        res = delong_test(
            np.array([a[i]["score"] for i in ids], dtype=float),
            np.array([b[i]["score"] for i in ids], dtype=float),
            labels,
        )
        results = {
            "test": "delong",
            "n": len(ids),
            "auc_a": res.auc_a,
            "auc_b": res.auc_b,
            "z": res.z,
            "p": res.p,
        }
    doc = {"task": "stats-compare",
           "config": {"preds_a": args.preds_a, "preds_b": args.preds_b,
                      "test": args.test},
           "results": results}
    if args.out:
        write_json(args.out, _stamp(dict(doc), args.deterministic))
        doc["outputs"] = {"json": args.out}
    return doc


def cmd_stats_subgroup(args) -> dict:
    preds = _load_predictions(args.preds)
    demo_doc = read_json(args.demo)
    demo_rows = {str(d["id"]): d for d in demo_doc.get("demographics", [])}
    ids = sorted(set(preds) & set(demo_rows))
    if not ids:
        raise TomoError("no shared ids between predictions and demographics")
    predictions = [preds[i]["pred"] for i in ids]
    refs = [preds[i]["label"] for i in ids]
    demographics = [demo_rows[i] for i in ids]
    rows = subgroup_table(
        predictions, refs, demographics, key=args.key,
        cfg=BootstrapConfig(seed=int(args.seed or 0)),
    )
    doc = {"task": "stats-subgroup",
           "config": {"preds": args.preds, "demo": args.demo, "key": args.key},
           "results": {"rows": rows, "n": len(ids)}}
    outputs = {}
    if args.out:
        write_json(args.out, _stamp(dict(doc), args.deterministic))
        outputs["json"] = args.out
    if args.out_csv:
        with open(args.out_csv, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["group", "n", "accuracy", "ci_lo", "ci_hi"])
            for row in rows:
                writer.writerow([row["group"], row["n"], repr(row["accuracy"]),
                                 repr(row["ci_lo"]), repr(row["ci_hi"])])
        outputs["csv"] = args.out_csv
    if outputs:
        doc["outputs"] = outputs
    return doc


# --- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tomo",
        description="Screening-tomosynthesis analysis pipeline",
    )
    parser.add_argument("--version", action="version", version=f"tomo {__version__}")
    parser.add_argument("--config", help="JSON config file (flags win)")
    parser.add_argument("--threads", type=int, default=None, help="worker cap")
    parser.add_argument(
        "--deterministic", action="store_true",
        help="omit timestamps so identical runs produce identical bytes",
    )
    sub = parser.add_subparsers(dest="task", required=True)

    def phantom_args(p):
        p.add_argument("--seed", type=int)
        p.add_argument("--out", required=True)
        p.add_argument("--n-exams", dest="n_exams", type=int)
        p.add_argument("--slices", type=int)
        p.add_argument("--views", type=int)
        p.add_argument("--pixels", choices=["none", "all"])
        p.add_argument("--lesion-rate", dest="lesion_rate", type=float)
        p.add_argument("--event-rate", dest="event_rate", type=float)
        p.set_defaults(handler=cmd_phantom)

    phantom_args(sub.add_parser("phantom", help="generate a synthetic dataset"))

    ingest = sub.add_parser("ingest", help="streaming ingest").add_subparsers(
        dest="subtask", required=True
    )
    fetch = ingest.add_parser("fetch", help="fetch manifest volumes through the cache")
    fetch.add_argument("--manifest", required=True)
    fetch.add_argument("--cache-dir", dest="cache_dir")
    fetch.add_argument("--capacity-bytes", dest="capacity_bytes", type=int, required=True)
    fetch.add_argument("--base-url", dest="base_url", required=True)
    fetch.add_argument("--token", default=None)
    fetch.add_argument("--allow", nargs="*", default=None)
    fetch.add_argument("--prefetch-depth", dest="prefetch_depth", type=int)
    fetch.set_defaults(handler=cmd_ingest_fetch)
    phantom_args(ingest.add_parser("phantom", help="alias of `tomo phantom`"))

    embed = sub.add_parser("embed", help="synthesize embeddings into a store")
    embed.add_argument("--manifest", required=True)
    embed.add_argument("--store", required=True)
    embed.add_argument("--seed", type=int)
    embed.add_argument("--dim", type=int)
    embed.add_argument("--patches", type=int)
    embed.add_argument("--slices-per-view", dest="slices_per_view", type=int)
    embed.add_argument("--noise", type=float)
    embed.add_argument("--density-sep", dest="density_sep", type=float)
    embed.add_argument("--risk-sep", dest="risk_sep", type=float)
    embed.set_defaults(handler=cmd_embed)

    density = sub.add_parser("density", help="density probe").add_subparsers(
        dest="subtask", required=True
    )
    dtrain = density.add_parser("train")
    dtrain.add_argument("--store", required=True)
    dtrain.add_argument("--manifest", required=True)
    dtrain.add_argument("--mode")
    dtrain.add_argument("--fraction", type=float)
    dtrain.add_argument("--seed", type=int)
    dtrain.add_argument("--fraction-seed", dest="fraction_seed", type=int)
    dtrain.add_argument("--lr", type=float)
    dtrain.add_argument("--epochs", type=int)
    dtrain.add_argument("--batch-size", dest="batch_size", type=int)
    dtrain.add_argument("--weight-decay", dest="weight_decay", type=float)
    dtrain.add_argument("--out", required=True)
    dtrain.set_defaults(handler=cmd_density_train)
    deval = density.add_parser("eval")
    deval.add_argument("--run", required=True)
    deval.add_argument("--split")
    deval.add_argument("--store")
    deval.add_argument("--manifest")
    deval.add_argument("--out")
    deval.set_defaults(handler=cmd_density_eval)

    risk = sub.add_parser("risk", help="5-year risk head").add_subparsers(
        dest="subtask", required=True
    )
    rtrain = risk.add_parser("train")
    rtrain.add_argument("--store", required=True)
    rtrain.add_argument("--records", required=True)
    rtrain.add_argument("--seed", type=int)
    rtrain.add_argument("--mode")
    rtrain.add_argument("--lr", type=float)
    rtrain.add_argument("--epochs", type=int)
    rtrain.add_argument("--batch-size", dest="batch_size", type=int)
    rtrain.add_argument("--weight-decay", dest="weight_decay", type=float)
    rtrain.add_argument("--select", choices=["loss", "auroc"])
    rtrain.add_argument("--out", required=True)
    rtrain.set_defaults(handler=cmd_risk_train)
    reval = risk.add_parser("eval")
    reval.add_argument("--head", required=True)
    reval.add_argument("--split")
    reval.add_argument("--store")
    reval.add_argument("--records")
    reval.add_argument("--by-density", dest="by_density", action="store_true")
    reval.add_argument("--bootstrap-seed", dest="bootstrap_seed", type=int)
    reval.add_argument("--out")
    reval.set_defaults(handler=cmd_risk_eval)

    detect = sub.add_parser("detect", help="lesion detection").add_subparsers(
        dest="subtask", required=True
    )
    dettrain = detect.add_parser("train")
    dettrain.add_argument("--data", required=True, help="phantom dataset directory")
    dettrain.add_argument("--seed", type=int)
    dettrain.add_argument("--lr", type=float)
    dettrain.add_argument("--epochs", type=int)
    dettrain.add_argument("--alpha", type=float)
    dettrain.add_argument("--gamma", type=float)
    dettrain.add_argument("--pos-thr", dest="pos_thr", type=float)
    dettrain.add_argument("--neg-thr", dest="neg_thr", type=float)
    dettrain.add_argument("--nms-iou", dest="nms_iou", type=float)
    dettrain.add_argument("--out", required=True)
    dettrain.set_defaults(handler=cmd_detect_train)
    detpred = detect.add_parser("predict")
    detpred.add_argument("--data", required=True)
    detpred.add_argument("--head", required=True)
    detpred.add_argument("--split")
    detpred.add_argument("--out", required=True)
    detpred.add_argument("--gt-out", dest="gt_out")
    detpred.set_defaults(handler=cmd_detect_predict)
    deteval = detect.add_parser("eval")
    deteval.add_argument("--preds", required=True)
    deteval.add_argument("--gt", required=True)
    deteval.add_argument("--fp", default="1,2,3,4")
    deteval.add_argument("--out-csv", dest="out_csv")
    deteval.set_defaults(handler=cmd_detect_eval)

    stats = sub.add_parser("stats", help="model comparison statistics").add_subparsers(
        dest="subtask", required=True
    )
    compare = stats.add_parser("compare")
    compare.add_argument("--preds-a", dest="preds_a", required=True)
    compare.add_argument("--preds-b", dest="preds_b", required=True)
    compare.add_argument("--test", choices=["mcnemar", "delong"], required=True)
    compare.add_argument("--out")
    compare.set_defaults(handler=cmd_stats_compare)
    subgroup = stats.add_parser("subgroup")
    subgroup.add_argument("--preds", required=True)
    subgroup.add_argument("--demo", required=True)
    subgroup.add_argument("--key", choices=["race", "age_band"], required=True)
    subgroup.add_argument("--seed", type=int)
    subgroup.add_argument("--out")
    subgroup.add_argument("--out-csv", dest="out_csv")
    subgroup.set_defaults(handler=cmd_stats_subgroup)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        doc = args.handler(args)
    except TomoError as exc:
        log(f"error: {exc}")
        return 1
    except (OSError, KeyError, ValueError, json.JSONDecodeError) as exc:
        log(f"error: {type(exc).__name__}: {exc}")
        return 1
    emit(doc)
    return 0


if __name__ == "__main__":
    sys.exit(main())
