"""Single executable for the whole pipeline.

Subcommands: synth, cluster, refine, render, eval, all. Exit codes: 0 ok,
2 configuration error, 3 data error, 4 internal error. All randomness
funnels through one seed; outputs are byte-identical for any --threads
value (timings in the manifest are the only run-dependent bytes).
"""

import argparse
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, config, png_io
from .errors import (
    ConfigError,
    HrlcError,
    InternalError,
    NotFoundError,
    ShapeError,
    StateError,
)
from .metrics import evaluate_sequence, format_table, write_report
from .pipeline import run_pipeline
from .refine import RefineConfig, refine_sequence
from .render import make_palette, render_contact_sheet, render_labels
from .synth import SynthSpec, adjusted_rand_index, default_generators, generate, min_generator_distance
from .tensor_io import (
    load_sequence,
    read_label_maps,
    read_mask,
    write_feature_tensor,
    write_label_maps,
)


@dataclass
class RunManifest:
    version: str
    seed: int
    config: dict
    inputs: dict
    outputs: dict
    timings_ms: dict = field(default_factory=dict)


def write_manifest(path, manifest: RunManifest) -> None:
    """Write the manifest atomically; an interrupted run leaves nothing."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    try:
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(asdict(manifest), fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, path)
    finally:
        tmp.unlink(missing_ok=True)


class StageTimer:
    def __init__(self):
        self.timings_ms = {}
        self._start = time.perf_counter()

    def run(self, name, fn):
        t0 = time.perf_counter()
        result = fn()
        self.timings_ms[name] = round((time.perf_counter() - t0) * 1000.0, 3)
        return result

    def total(self):
        self.timings_ms["total"] = round((time.perf_counter() - self._start) * 1000.0, 3)
        return self.timings_ms


def _parse_refine_size(text):
    try:
        h, w = text.lower().split("x")
        return int(h), int(w)
    except ValueError as exc:
        raise ConfigError(f"--refine-size expects HxW, got {text!r}") from exc


def _load_run_config(args) -> config.RunConfig:
    cfg = config.load_config(args.config)
    if args.seed is not None:
        cfg.pipeline.seed = args.seed
        cfg.synth.seed = args.seed
    if getattr(args, "batch_size", None) is not None:
        cfg.pipeline.batch_size = args.batch_size
    if getattr(args, "intra_k", None) is not None:
        cfg.pipeline.intra_k = args.intra_k
    if getattr(args, "inter_k", None) is not None:
        cfg.pipeline.inter_k = args.inter_k
    if getattr(args, "pca_dim", None) is not None:
        cfg.pipeline.pca_dim_intra = args.pca_dim
        cfg.pipeline.pca_dim_inter = args.pca_dim
    if getattr(args, "match_mode", None) is not None:
        cfg.match_mode = args.match_mode
    if getattr(args, "refine_size", None) is not None:
        cfg.target_h, cfg.target_w = _parse_refine_size(args.refine_size)
    if getattr(args, "contact_sheet", False):
        cfg.contact_sheet = True
    return cfg.validate()


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("HRLC_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"HRLC_THREADS={env!r} is not an integer") from exc
    return 1


def _refine_config(cfg: config.RunConfig, coarse_shape) -> RefineConfig:
    target_h = cfg.target_h or coarse_shape[0]
    target_w = cfg.target_w or coarse_shape[1]
    return RefineConfig(
        target_h=target_h,
        target_w=target_w,
        smooth_radius=cfg.smooth_radius,
        smooth_passes=cfg.smooth_passes,
    )


def _sorted_pngs(directory):
    directory = Path(directory)
    if not directory.is_dir():
        raise NotFoundError(f"directory not found: {directory}")
    names = sorted(p.name for p in directory.iterdir() if p.suffix == ".png")
    if not names:
        raise NotFoundError(f"no PNG files in {directory}")
    return names


def _read_masks(directory):
    names = _sorted_pngs(directory)
    return [read_mask(Path(directory) / n) for n in names], names


def cmd_synth(args) -> int:
    cfg = _load_run_config(args)
    s = cfg.synth
    if s.n_generators > 255:
        raise ConfigError("synthetic masks are 8-bit; n_generators must be <= 255")
    generators = default_generators(s.n_generators, s.feature_dim, seed=s.seed)
    sigma = s.noise_sigma
    if s.noise_rel >= 0:
        sigma = s.noise_rel * min_generator_distance(generators)
    spec = SynthSpec(
        n_frames=s.n_frames,
        height=s.height,
        width=s.width,
        generators=generators,
        layout=s.layout,
        noise_sigma=sigma,
        seed=s.seed,
        layout_period=cfg.pipeline.batch_size,
    )
    seq, truth = generate(spec)

    out = Path(args.out_dir)
    features_dir = out / "features"
    masks_dir = out / "masks"
    features_dir.mkdir(parents=True, exist_ok=True)
    masks_dir.mkdir(parents=True, exist_ok=True)
    for i, frame_id in enumerate(seq.frame_ids):
        write_feature_tensor(seq.frames[i], features_dir / f"{frame_id}.npy")
    for i in range(truth.maps.shape[0]):
        png_io.write_png(masks_dir / f"{i:05d}.png", truth.maps[i].astype(np.uint8))
    print(f"wrote {seq.n_frames} frames to {features_dir} and {masks_dir}")
    return 0


def cmd_cluster(args) -> int:
    cfg = _load_run_config(args)
    threads = _threads(args)
    timer = StageTimer()

    seq = timer.run("load", lambda: load_sequence(args.features_dir))
    labels = timer.run("cluster", lambda: run_pipeline(seq, cfg.pipeline, threads=threads))
    out = Path(args.out_dir)
    timer.run("write", lambda: write_label_maps(labels, out))

    write_manifest(out / "manifest.json", RunManifest(
        version=__version__,
        seed=cfg.pipeline.seed,
        config=config.snapshot(cfg),
        inputs={"features_dir": str(args.features_dir),
                "config_path": str(args.config) if args.config else ""},
        outputs={"labels_dir": str(out), "n_frames": seq.n_frames,
                 "num_labels": labels.num_labels},
        timings_ms=timer.total(),
    ))
    print(f"wrote {seq.n_frames} coarse label maps ({labels.num_labels} labels) to {out}")
    return 0


def cmd_refine(args) -> int:
    cfg = _load_run_config(args)
    labels = read_label_maps(args.labels_dir)
    refined = refine_sequence(labels, _refine_config(cfg, labels.maps.shape[1:]))
    write_label_maps(refined, args.out_dir)
    print(f"wrote {refined.maps.shape[0]} refined label maps to {args.out_dir}")
    return 0


def cmd_render(args) -> int:
    cfg = _load_run_config(args)
    labels = read_label_maps(args.labels_dir)
    palette = make_palette(max(labels.num_labels, 1))
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for i in range(labels.maps.shape[0]):
        render_labels(labels.maps[i], palette, out / f"{i:05d}.png")
    if cfg.contact_sheet:
        render_contact_sheet(list(labels.maps), palette, out / "contact_sheet.png")
    print(f"rendered {labels.maps.shape[0]} frames to {out}")
    return 0


def _discover_sequences(pred_dir, gt_dir):
    pred_dir = Path(pred_dir)
    gt_dir = Path(gt_dir)
    if not pred_dir.is_dir():
        raise NotFoundError(f"prediction directory not found: {pred_dir}")
    if not gt_dir.is_dir():
        raise NotFoundError(f"ground-truth directory not found: {gt_dir}")
    subdirs = sorted(p.name for p in pred_dir.iterdir() if p.is_dir())
    if subdirs:
        pairs = []
        for name in subdirs:
            if not (gt_dir / name).is_dir():
                raise NotFoundError(f"no ground truth for sequence {name!r} in {gt_dir}")
            pairs.append((name, pred_dir / name, gt_dir / name))
        return pairs
    return [(pred_dir.name, pred_dir, gt_dir)]


def _evaluate(pred_dir, gt_dir, mode):
    reports = {}
    for name, pred_path, gt_path in _discover_sequences(pred_dir, gt_dir):
        pred = read_label_maps(pred_path)
        gts, _ = _read_masks(gt_path)
        if len(gts) != pred.maps.shape[0]:
            raise ShapeError(
                f"sequence {name!r}: {pred.maps.shape[0]} predictions vs {len(gts)} masks"
            )
        reports[name] = evaluate_sequence(pred, gts, mode=mode)
    return reports


def cmd_eval(args) -> int:
    cfg = _load_run_config(args)
    reports = _evaluate(args.pred_dir, args.gt_dir, cfg.match_mode)
    rows = [(name, *report.per_sequence) for name, report in reports.items()]
    sys.stdout.write(format_table(rows))
    report_path = args.report or str(Path(args.pred_dir) / "metrics_report.txt")
    write_report(report_path, reports)
    return 0


def cmd_all(args) -> int:
    cfg = _load_run_config(args)
    threads = _threads(args)
    timer = StageTimer()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    seq = timer.run("load", lambda: load_sequence(args.features_dir))
    coarse = timer.run("cluster", lambda: run_pipeline(seq, cfg.pipeline, threads=threads))
    write_label_maps(coarse, out / "coarse")

    refined = timer.run(
        "refine", lambda: refine_sequence(coarse, _refine_config(cfg, coarse.maps.shape[1:]))
    )
    write_label_maps(refined, out / "labels")

    def render_stage():
        palette = make_palette(max(refined.num_labels, 1))
        render_dir = out / "render"
        render_dir.mkdir(parents=True, exist_ok=True)
        for i in range(refined.maps.shape[0]):
            render_labels(refined.maps[i], palette, render_dir / f"{i:05d}.png")
        if cfg.contact_sheet:
            render_contact_sheet(list(refined.maps), palette, render_dir / "contact_sheet.png")

    timer.run("render", render_stage)

    def eval_stage():
        gts, _ = _read_masks(args.gt_dir)
        if len(gts) != refined.maps.shape[0]:
            raise ShapeError(f"{refined.maps.shape[0]} predictions vs {len(gts)} masks")
        report = evaluate_sequence(refined, gts, mode=cfg.match_mode)
        ari = adjusted_rand_index(refined.maps, np.stack(gts))
        return report, ari

    report, ari = timer.run("eval", eval_stage)
    rows = [(Path(args.gt_dir).name, *report.per_sequence)]
    sys.stdout.write(format_table(rows))
    print(f"ARI {ari:.4f}")
    write_report(out / "report.txt", {rows[0][0]: report})

    write_manifest(out / "manifest.json", RunManifest(
        version=__version__,
        seed=cfg.pipeline.seed,
        config=config.snapshot(cfg),
        inputs={"features_dir": str(args.features_dir), "gt_dir": str(args.gt_dir),
                "config_path": str(args.config) if args.config else ""},
        outputs={"out_dir": str(out), "n_frames": seq.n_frames,
                 "num_labels": refined.num_labels, "ari": round(ari, 6),
                 "mean_iou": round(report.per_sequence[0], 6),
                 "mean_f1": round(report.per_sequence[1], 6),
                 "mean_recall": round(report.per_sequence[2], 6)},
        timings_ms=timer.total(),
    ))
    return 0


def _add_common(parser):
    parser.add_argument("--config", default=None, help="key = value config file")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--threads", type=int, default=None,
                        help="worker cap (HRLC_THREADS as fallback); output-invariant")
    parser.add_argument("--batch-size", type=int, default=None)
    parser.add_argument("--intra-k", type=int, default=None)
    parser.add_argument("--inter-k", type=int, default=None)
    parser.add_argument("--pca-dim", type=int, default=None,
                        help="sets both hierarchy levels' reduction dims")
    parser.add_argument("--match-mode", choices=["majority", "best-iou"], default=None)
    parser.add_argument("--refine-size", default=None, metavar="HxW")
    parser.add_argument("--contact-sheet", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hrlc",
        description="Hierarchical representative latent clustering over feature sequences",
    )
    parser.add_argument("--version", action="version", version=f"hrlc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic feature sequence + masks")
    p.add_argument("out_dir")
    _add_common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("cluster", help="features -> coarse label maps")
    p.add_argument("features_dir")
    p.add_argument("out_dir")
    _add_common(p)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("refine", help="coarse label maps -> refined label maps")
    p.add_argument("labels_dir")
    p.add_argument("out_dir")
    _add_common(p)
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("render", help="label maps -> RGB images")
    p.add_argument("labels_dir")
    p.add_argument("out_dir")
    _add_common(p)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("eval", help="label maps vs ground-truth masks")
    p.add_argument("pred_dir")
    p.add_argument("gt_dir")
    p.add_argument("--report", default=None, help="report file path")
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("all", help="cluster, refine, render, and evaluate")
    p.add_argument("features_dir")
    p.add_argument("gt_dir")
    p.add_argument("out_dir")
    _add_common(p)
    p.set_defaults(func=cmd_all)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (StateError, InternalError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 4
    except HrlcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # pragma: no cover - last-resort mapping
        print(f"unexpected error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    raise SystemExit(main())
