"""Command-line pipeline driver.

Subcommands: segment | train | index | validate | stats | synth | serve.
Exit codes: 0 ok, 2 validation error, 3 partial failure (with a
machine-readable failures.json in the output directory).
"""
from __future__ import annotations

import argparse
import json
import statistics
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import cluster, fieldstats, gboost, labelsvc, pcio, synth, treeseg, yindex
from .config import RunConfig, load_config
from .core import TreeManifest, TreeObservation
from .errors import FallcolorError, NoFoliageError
from .synth import derive_seed

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_PARTIAL = 3


def _load_run_config(args) -> RunConfig:
    config = load_config(args.config) if args.config else RunConfig()
    if getattr(args, "seed", None) is not None:
        config.seed = args.seed
    if getattr(args, "method", None):
        config.method = args.method
    if getattr(args, "workers", None):
        config.workers = args.workers
    if getattr(args, "out", None):
        config.out_dir = args.out
    if getattr(args, "model", None):
        config.gbm_model_path = args.model
    return config


def _write_failures(out_dir: Path, failures: list[dict]) -> None:
    (out_dir / "failures.json").write_text(json.dumps(failures, sort_keys=True))


def _tree_week_tasks(manifest: TreeManifest, base: Path):
    for entry in manifest.entries:
        for week in sorted(entry.cloud_paths):
            yield entry, week, base / entry.cloud_paths[week]


def _run_tasks(tasks, worker, n_workers: int):
    """Run per-tree work, preserving manifest order in the result list."""
    tasks = list(tasks)
    if n_workers <= 1:
        return [worker(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        return list(pool.map(worker, tasks))


def _classifier_for(config: RunConfig, what: str = "run"):
    """Returns (classify(cloud, seed) -> ClassifiedCloud) for the active method."""
    if config.method == "kmeans":
        def classify(cloud, seed):
            return cluster.classify_kmeans(cloud, n=config.n_clusters,
                                           windows=config.windows, seed=seed)
        return classify
    if not config.gbm_model_path:
        raise FallcolorError(
            f"method=gbm {what} needs gbm.model_path in the config (or --model); "
            f"train one with 'fallcolor train'")
    model = gboost.load_model(config.gbm_model_path)

    def classify(cloud, seed):
        return gboost.classify_gbm(cloud, model)
    return classify


def cmd_segment(args) -> int:
    config = _load_run_config(args)
    manifest = pcio.read_manifest(args.manifest)
    base = Path(args.manifest).parent
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "clouds").mkdir(exist_ok=True)

    def work(task):
        entry, week, path = task
        try:
            cloud = pcio.read_cloud(path)
            seg = treeseg.segment_tree(cloud, config.segmentation)
            rel = f"clouds/{entry.tree_id}_w{week}_seg.ply"
            pcio.write_cloud(seg, out_dir / rel)
            return {"tree_id": entry.tree_id, "week": week, "points_in": cloud.n_points,
                    "points_out": seg.n_points, "path": rel}
        except (FallcolorError, OSError) as exc:
            return {"tree_id": entry.tree_id, "week": week, "error": str(exc)}

    results = _run_tasks(_tree_week_tasks(manifest, base), work, config.workers)
    failures = [r for r in results if "error" in r]
    ok = [r for r in results if "error" not in r]

    lines = ["tree_id,week,points_in,points_out,path"]
    lines += [f"{r['tree_id']},{r['week']},{r['points_in']},{r['points_out']},{r['path']}"
              for r in ok]
    (out_dir / "segmentation_summary.csv").write_text("\n".join(lines) + "\n")

    seg_entries = []
    for entry in manifest.entries:
        paths = {r["week"]: r["path"] for r in ok if r["tree_id"] == entry.tree_id}
        seg_entries.append(type(entry)(
            tree_id=entry.tree_id, row=entry.row, position_in_row=entry.position_in_row,
            cloud_paths=paths, leaf_n_percent=entry.leaf_n_percent,
            gt_yellow_mass_g=entry.gt_yellow_mass_g,
            gt_green_mass_g=entry.gt_green_mass_g))
    pcio.write_manifest(TreeManifest(entries=seg_entries, season=manifest.season),
                        out_dir / "manifest.txt")
    if failures:
        _write_failures(out_dir, failures)
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_train(args) -> int:
    config = _load_run_config(args)
    dataset = pcio.read_label_dataset(args.dataset)
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if config.gbm_grid:
        report = gboost.sweep(dataset, config.schema, config.gbm_grid,
                              config.gbm_split_fraction)
        (out_dir / "sweep_report.json").write_text(
            json.dumps(report.to_dict(), sort_keys=True))
        if report.best is None:
            print("sweep: no configuration trained successfully", file=sys.stderr)
            return EXIT_PARTIAL
        best_hp = report.best
    else:
        best_hp = config.gbm
    model, train_acc, test_acc = gboost.train(dataset, config.schema, best_hp,
                                              config.gbm_split_fraction)
    model_path = out_dir / "model.json"
    gboost.save_model(model, model_path)
    print(f"model: {model_path} train_acc={train_acc:.4f} test_acc={test_acc:.4f}")
    return EXIT_OK


def _observe(config: RunConfig, manifest: TreeManifest, base: Path):
    classify = _classifier_for(config, "index")
    final_week = {e.tree_id: max(e.cloud_paths) for e in manifest.entries
                  if e.cloud_paths}

    def work(task):
        entry, week, path = task
        try:
            cloud = pcio.read_cloud(path)
            seed = derive_seed(config.seed, entry.tree_id, week)
            yi = yindex.yellowness(classify(cloud, seed))
            gt = None
            if (week == final_week.get(entry.tree_id)
                    and entry.gt_yellow_mass_g is not None
                    and entry.gt_green_mass_g is not None):
                gt = yindex.ground_truth_index(entry.gt_yellow_mass_g,
                                               entry.gt_green_mass_g)
            return TreeObservation(
                tree_id=entry.tree_id, week=week, yellow_count=yi.yellow_count,
                green_count=yi.green_count, index=yi.value, ground_truth=gt,
                leaf_n_percent=entry.leaf_n_percent)
        except NoFoliageError as exc:  # flagged, not fatal
            return {"tree_id": entry.tree_id, "week": week,
                    "warning": str(exc)}
        except (FallcolorError, OSError) as exc:
            return {"tree_id": entry.tree_id, "week": week, "error": str(exc)}

    return _run_tasks(_tree_week_tasks(manifest, base), work, config.workers)


def cmd_index(args) -> int:
    config = _load_run_config(args)
    manifest = pcio.read_manifest(args.manifest)
    base = Path(args.manifest).parent
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results = _observe(config, manifest, base)
    observations = [r for r in results if isinstance(r, TreeObservation)]
    flagged = [r for r in results if isinstance(r, dict)]
    failures = [r for r in flagged if "error" in r]
    pcio.write_observations(observations, out_dir / "observations.csv")
    if flagged:
        (out_dir / "flagged.json").write_text(json.dumps(flagged, sort_keys=True))
    if failures:
        _write_failures(out_dir, failures)
        return EXIT_PARTIAL
    return EXIT_OK


def _median_time(fn, runs: int, warmup: int) -> float:
    for _ in range(warmup):
        fn()
    samples = []
    for _ in range(runs):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples)


def cmd_validate(args) -> int:
    config = _load_run_config(args)
    manifest = pcio.read_manifest(args.manifest)
    base = Path(args.manifest).parent
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    if not config.gbm_model_path:
        print("validate needs gbm.model_path (or --model)", file=sys.stderr)
        return EXIT_VALIDATION
    model = gboost.load_model(config.gbm_model_path)

    skipped = []
    obs_kmeans, obs_gbm = [], []
    timing_cloud = None
    for entry in manifest.entries:
        if not entry.cloud_paths:
            skipped.append({"tree_id": entry.tree_id, "reason": "no clouds"})
            continue
        week = max(entry.cloud_paths)
        if entry.gt_yellow_mass_g is None or entry.gt_green_mass_g is None:
            skipped.append({"tree_id": entry.tree_id,
                            "reason": "missing ground-truth masses"})
            continue
        cloud = pcio.read_cloud(base / entry.cloud_paths[week])
        if timing_cloud is None:
            timing_cloud = cloud
        band = yindex.crop_band(cloud, config.band_low_m, config.band_high_m,
                                up_axis=config.segmentation.up_axis,
                                up_sign=config.segmentation.up_sign)
        gt = yindex.ground_truth_index(entry.gt_yellow_mass_g, entry.gt_green_mass_g)
        seed = derive_seed(config.seed, entry.tree_id, week)
        for method, obs_list in (("kmeans", obs_kmeans), ("gbm", obs_gbm)):
            try:
                if method == "kmeans":
                    cc = cluster.classify_kmeans(band, n=config.n_clusters,
                                                 windows=config.windows, seed=seed)
                else:
                    cc = gboost.classify_gbm(band, model)
                yi = yindex.yellowness(cc)
                obs_list.append(TreeObservation(
                    tree_id=entry.tree_id, week=week, yellow_count=yi.yellow_count,
                    green_count=yi.green_count, index=yi.value, ground_truth=gt))
            except NoFoliageError as exc:
                skipped.append({"tree_id": entry.tree_id, "method": method,
                                "reason": str(exc)})

    report: dict = {"skipped": skipped, "band_m": [config.band_low_m, config.band_high_m]}
    for method, obs_list in (("kmeans", obs_kmeans), ("gbm", obs_gbm)):
        try:
            summary = yindex.validate(obs_list)
            report[method] = {"r_squared": summary.r_squared,
                              "n_pairs": summary.n_pairs,
                              "residuals": summary.residuals}
        except FallcolorError as exc:
            report[method] = {"error": str(exc)}
    (out_dir / "validation_report.json").write_text(json.dumps(report, sort_keys=True))

    timing: dict = {"error": "no cloud available for timing"}
    if timing_cloud is not None:
        seed = config.seed
        kmeans_med = _median_time(
            lambda: cluster.classify_kmeans(timing_cloud, n=config.n_clusters,
                                            windows=config.windows, seed=seed),
            config.timing_runs, config.timing_warmup)
        gbm_med = _median_time(lambda: gboost.classify_gbm(timing_cloud, model),
                               config.timing_runs, config.timing_warmup)
        timing = {"points": timing_cloud.n_points, "runs": config.timing_runs,
                  "warmup": config.timing_warmup,
                  "kmeans_median_s": kmeans_med, "gbm_median_s": gbm_med,
                  "kmeans_over_gbm_ratio": kmeans_med / gbm_med}
    (out_dir / "timing_report.json").write_text(json.dumps(timing, sort_keys=True))
    print(json.dumps({k: v for k, v in report.items() if k != "skipped"}, sort_keys=True))
    return EXIT_OK


def cmd_stats(args) -> int:
    config = _load_run_config(args)
    observations = pcio.read_observations(args.observations)
    manifest = pcio.read_manifest(args.manifest)
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        report = fieldstats.weekly_report(observations, manifest)
    except FallcolorError as exc:
        print(f"stats failed: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    (out_dir / "stats_report.json").write_text(
        json.dumps(report.to_dict(), sort_keys=True))
    lines = ["week,tree_id,row,position_in_row,index"]
    lines += [f"{m.week},{m.tree_id},{m.row},{m.position_in_row},{m.index!r}"
              for m in report.map_rows]
    (out_dir / "map.csv").write_text("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_synth(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    seed = args.seed if args.seed is not None else 0
    if args.kind == "tree":
        spec = synth.SynthTreeSpec(point_count=args.points,
                                   yellow_fraction=args.fraction, seed=seed)
        cloud, labels = synth.gen_tree(spec)
        pcio.write_cloud(cloud, out_dir / "tree.ply")
        _write_point_labels(labels, out_dir / "point_labels.csv")
    elif args.kind == "scene":
        spec = synth.SynthSceneSpec(tree=synth.SynthTreeSpec(
            point_count=args.points, yellow_fraction=args.fraction, seed=seed),
            seed=seed)
        cloud, prov = synth.gen_scene(spec)
        pcio.write_cloud(cloud, out_dir / "scene.ply")
        lines = ["point_index,provenance"]
        lines += [f"{i},{synth.PROVENANCE_NAMES[p]}" for i, p in enumerate(prov)]
        (out_dir / "provenance.csv").write_text("\n".join(lines) + "\n")
    elif args.kind == "dataset":
        spec = synth.SynthTreeSpec(point_count=args.points, yellow_fraction=0.4,
                                   trunk_fraction=0.2, seed=seed)
        ds = synth.gen_label_dataset(spec, per_class=args.per_class)
        pcio.write_label_dataset(ds, out_dir / "labels.csv")
    else:  # season
        leaf_n = np.linspace(1.4, 2.9, args.trees)
        trees = tuple((f"T{i+1:03d}", i % 5 + 1, i // 5 + 1, round(float(n), 3))
                      for i, n in enumerate(leaf_n))
        spec = synth.SynthSeasonSpec(
            trees=trees, weeks=args.weeks,
            tree_template=synth.SynthTreeSpec(point_count=args.points),
            seed=seed)
        season = synth.gen_season(spec)
        (out_dir / "clouds").mkdir(exist_ok=True)
        for (tree_id, week), cloud in season.clouds.items():
            pcio.write_cloud(cloud, out_dir / f"clouds/{tree_id}_w{week}.ply")
        pcio.write_manifest(season.manifest(), out_dir / "manifest.txt")
        lines = ["tree_id,week,yellow_fraction,true_index"]
        lines += [f"{t.tree_id},{t.week},{t.yellow_fraction!r},{t.true_index!r}"
                  for t in season.truth]
        (out_dir / "truth.csv").write_text("\n".join(lines) + "\n")
    return EXIT_OK


def _write_point_labels(labels, path) -> None:
    from .core import LABEL_NAMES
    lines = ["point_index,label"]
    lines += [f"{i},{LABEL_NAMES[v]}" for i, v in enumerate(labels)]
    Path(path).write_text("\n".join(lines) + "\n")


def cmd_serve(args) -> int:
    service = labelsvc.LabelService(dataset_path=args.dataset,
                                    display_stride=args.display_stride)
    n = service.register_directory(args.clouds)
    server = labelsvc.make_server(service, host=args.host, port=args.port,
                                  static_dir=args.ui)
    ui_note = f", UI at /ui from {args.ui}" if args.ui else ""
    print(f"serving {n} clouds on http://{args.host}:{server.server_address[1]} "
          f"(dataset: {args.dataset}{ui_note})")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fallcolor",
        description="Canopy fall-color pipeline: segment, classify, index, stats.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, manifest=True):
        p.add_argument("--config", help="run configuration file")
        p.add_argument("--seed", type=int, help="override config seed")
        p.add_argument("--out", help="output directory (default from config)")
        p.add_argument("--workers", type=int, help="parallel tree workers")
        if manifest:
            p.add_argument("--manifest", required=True, help="tree manifest file")

    p = sub.add_parser("segment", help="batch-segment all manifest clouds")
    common(p)
    p.set_defaults(fn=cmd_segment)

    p = sub.add_parser("train", help="train (or sweep) the gradient-boost model")
    common(p, manifest=False)
    p.add_argument("--dataset", required=True, help="label dataset CSV")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("index", help="classify clouds and emit observations table")
    common(p)
    p.add_argument("--method", choices=("kmeans", "gbm"))
    p.add_argument("--model", help="gbm model path (overrides config)")
    p.set_defaults(fn=cmd_index)

    p = sub.add_parser("validate", help="banded R^2 vs ground truth + timing")
    common(p)
    p.add_argument("--model", help="gbm model path (overrides config)")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("stats", help="weekly nitrogen-group statistics")
    common(p)
    p.add_argument("--observations", required=True, help="observations CSV")
    p.set_defaults(fn=cmd_stats)

    p = sub.add_parser("synth", help="generate synthetic orchard data")
    p.add_argument("--kind", choices=("tree", "scene", "season", "dataset"),
                   default="season")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trees", type=int, default=10)
    p.add_argument("--weeks", type=int, default=6)
    p.add_argument("--points", type=int, default=4000)
    p.add_argument("--fraction", type=float, default=0.5)
    p.add_argument("--per-class", type=int, default=80)
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("serve", help="run the labeling service")
    p.add_argument("--clouds", required=True, help="directory of PLY clouds")
    p.add_argument("--dataset", required=True, help="label dataset CSV to append to")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8787)
    p.add_argument("--display-stride", type=int, default=5)
    p.add_argument("--ui", help="directory of built UI files to serve at /ui")
    p.set_defaults(fn=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except FallcolorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
