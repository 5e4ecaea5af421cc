"""Command-line entry point: fit, superres, eval, ablate, phantom-gen, bench.

Every command writes its outputs into a fresh timestamped directory under
the config's ``out`` path (or $SECOINR_OUTDIR, or ./runs) together with a
manifest listing the artifacts. Commands exit 0 on success and nonzero
with a one-line diagnostic on failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import time
from pathlib import Path

from . import dataio, metrics, phantom, sampling, training
from .config import ConfigError, RunConfig, load_config, save_config
from .fields import ClassField, ImageField


def _output_base(cfg_out: str) -> Path:
    return Path(cfg_out or os.environ.get("SECOINR_OUTDIR", "runs"))


def _make_run_dir(base: Path, command: str) -> Path:
    stamp = time.strftime("%Y%m%d-%H%M%S")
    for attempt in range(1000):
        suffix = "" if attempt == 0 else f"-{attempt}"
        run_dir = base / f"{command}-{stamp}-{os.getpid()}{suffix}"
        try:
            run_dir.mkdir(parents=True, exist_ok=False)
            return run_dir
        except FileExistsError:
            continue
    raise OSError(f"could not allocate a run directory under {base}")


def _write_manifest(run_dir: Path, command: str, cfg: RunConfig | None,
                    files: list[str], extra: dict | None = None) -> None:
    manifest = {
        "command": command,
        "created": time.strftime("%Y-%m-%dT%H:%M:%S"),
        "files": files,
        "config": dataclasses.asdict(cfg) if cfg is not None else None,
    }
    if extra:
        manifest.update(extra)
    (run_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def _load_cfg(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if getattr(args, "seed", None) is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    if getattr(args, "epochs", None) is not None:
        cfg = dataclasses.replace(cfg, epochs=args.epochs)
    cfg.validate()
    return cfg


def _phantom_truth(cfg: RunConfig, height: int, width: int):
    spec = phantom.standard_suite()[cfg.phantom_index]
    image, mask = phantom.render(spec, height, width)
    return spec, image, mask


def _fit_inputs(cfg: RunConfig) -> tuple[ImageField, ClassField | None]:
    """The training image and, for conditioned kinds, its mask."""
    wants_mask = cfg.model in ("seco", "seco_no_semantic")
    if cfg.image:
        image = dataio.load_image(cfg.image)
        mask = None
        if cfg.mask:
            labels = dataio.load_labels(cfg.mask)
            classes = cfg.classes if cfg.classes > 0 else int(labels.max()) + 1
            mask = dataio.load_mask(cfg.mask, classes)
        if cfg.model == "seco" and mask is None:
            raise ConfigError("model kind 'seco' requires a mask path")
        return image, mask if wants_mask else None
    _, image, mask = _phantom_truth(cfg, cfg.height, cfg.width)
    return image, mask if wants_mask else None


def _run_fit(cfg: RunConfig, run_dir: Path) -> training.TrainResult:
    image, mask = _fit_inputs(cfg)
    result = training.train(image, mask, cfg)
    dataio.save_checkpoint(result.models, cfg, run_dir / "model.ckpt")
    dataio.write_train_log(run_dir / "train_log.csv", result.log)
    dataio.save_inrf(result.fitted, run_dir / "fitted.inrf")
    return result


def cmd_fit(args) -> int:
    cfg = _load_cfg(args)
    run_dir = _make_run_dir(_output_base(cfg.out), "fit")
    started = time.perf_counter()
    result = _run_fit(cfg, run_dir)
    save_config(cfg, run_dir / "config.txt")
    _write_manifest(run_dir, "fit", cfg,
                    ["model.ckpt", "train_log.csv", "fitted.inrf", "config.txt"],
                    {"elapsed_seconds": time.perf_counter() - started})
    final = result.log[-1].psnr if result.log else math.nan
    print(f"fit: {cfg.model} seed={cfg.seed} -> {run_dir} (train psnr {final:.2f} dB)")
    return 0


def cmd_superres(args) -> int:
    models, cfg = dataio.load_checkpoint(args.checkpoint)
    if models.trained_shape is None:
        raise ValueError("checkpoint does not record a training grid")
    h0, w0 = models.trained_shape
    if args.dims is not None:
        height, width = args.dims
    else:
        height = int(math.floor(h0 * args.factor + 0.5))
        width = int(math.floor(w0 * args.factor + 0.5))
    image, seg = sampling.superresolve(models, height, width)

    run_dir = _make_run_dir(_output_base(cfg.out), "superres")
    dataio.save_inrf(image, run_dir / "sr.inrf")
    dataio.save_png16(image, run_dir / "sr.png")
    files = ["sr.inrf", "sr.png"]
    if seg is not None:
        dataio.save_mask_png(seg.labels(), run_dir / "sr_labels.png")
        files.append("sr_labels.png")
    _write_manifest(run_dir, "superres", cfg, files,
                    {"dims": [height, width], "source": str(args.checkpoint)})
    print(f"superres: {h0}x{w0} -> {height}x{width} in {run_dir}")
    return 0


def cmd_eval(args) -> int:
    pred = dataio.load_image(args.pred)
    truth = dataio.load_image(args.truth)
    report = metrics.evaluate(pred, truth, args.data_range)
    lines = [",".join(metrics.MetricReport.CSV_HEADER), ",".join(report.csv_row())]
    print("\n".join(lines))
    if args.out:
        Path(args.out).write_text("\n".join(lines) + "\n")
    return 0


def _ground_truth(cfg: RunConfig) -> tuple[ImageField, ClassField]:
    if cfg.image:
        image = dataio.load_image(cfg.image)
        if not cfg.mask:
            raise ConfigError("ablate/bench on a file image needs a mask path")
        labels = dataio.load_labels(cfg.mask)
        classes = cfg.classes if cfg.classes > 0 else int(labels.max()) + 1
        return image, dataio.load_mask(cfg.mask, classes)
    _, image, mask = _phantom_truth(cfg, cfg.height, cfg.width)
    return image, mask


def _low_res_pair(gt_image: ImageField, gt_mask: ClassField,
                  factor: float) -> tuple[ImageField, ClassField]:
    lr_image = sampling.downsample(gt_image, factor)
    lr_labels = sampling.downsample_labels(gt_mask.labels(),
                                           lr_image.height, lr_image.width)
    return lr_image, ClassField.from_labels(lr_labels, gt_mask.class_count)


def cmd_ablate(args) -> int:
    cfg = _load_cfg(args)
    if cfg.factor <= 1.0:
        raise ConfigError("ablate needs factor > 1")
    gt_image, gt_mask = _ground_truth(cfg)
    lr_image, lr_mask = _low_res_pair(gt_image, gt_mask, cfg.factor)

    rows = []
    for kind in ("seco", "seco_no_semantic"):
        variant = dataclasses.replace(cfg, model=kind)
        result = training.train(lr_image, lr_mask, variant)
        sr, _ = sampling.superresolve(result.models, gt_image.height, gt_image.width)
        report = metrics.evaluate(sr, gt_image)
        rows.append([kind, str(cfg.seed), repr(cfg.factor), *report.csv_row(),
                     repr(result.log[-1].seconds if result.log else 0.0)])

    run_dir = _make_run_dir(_output_base(cfg.out), "ablate")
    header = ["model", "seed", "factor", *metrics.MetricReport.CSV_HEADER,
              "train_seconds"]
    dataio.write_csv(run_dir / "ablation.csv", header, rows)
    _write_manifest(run_dir, "ablate", cfg, ["ablation.csv"])
    print(f"ablate: wrote {run_dir / 'ablation.csv'}")
    return 0


def cmd_bench(args) -> int:
    cfg = _load_cfg(args)
    threshold = args.psnr_threshold
    rows = []
    for kind in cfg.model_list():
        variant = dataclasses.replace(cfg, model=kind)
        image, mask = _fit_inputs(variant)
        result = training.train(image, mask, variant)
        reached, seconds, epoch = training.time_to_psnr(result.log, threshold)
        final = result.log[-1].psnr if result.log else math.nan
        rows.append([kind, repr(threshold),
                     "yes" if reached else "not_reached",
                     f"{seconds:.3f}" if reached else "",
                     str(epoch), repr(final)])

    run_dir = _make_run_dir(_output_base(cfg.out), "bench")
    header = ["model", "threshold_psnr", "reached", "seconds", "epoch", "final_psnr"]
    dataio.write_csv(run_dir / "bench.csv", header, rows)
    _write_manifest(run_dir, "bench", cfg, ["bench.csv"])
    print(f"bench: wrote {run_dir / 'bench.csv'}")
    return 0


def cmd_phantom_gen(args) -> int:
    suite = phantom.standard_suite()
    if not 0 <= args.index < len(suite):
        raise ValueError(f"phantom index must lie in [0, {len(suite)})")
    spec = suite[args.index]
    image, mask = phantom.render(spec, args.height, args.width)
    run_dir = _make_run_dir(Path(args.out or os.environ.get("SECOINR_OUTDIR", "runs")),
                            "phantom")
    dataio.save_inrf(image, run_dir / "phantom.inrf")
    dataio.save_png16(image, run_dir / "phantom.png")
    dataio.save_mask_png(mask.labels(), run_dir / "mask.png")
    _write_manifest(run_dir, "phantom-gen", None,
                    ["phantom.inrf", "phantom.png", "mask.png"],
                    {"name": spec.name, "classes": spec.class_count,
                     "dims": [args.height, args.width]})
    print(f"phantom-gen: {spec.name} ({spec.class_count} classes) -> {run_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="secoinr",
        description="Fit conditioned coordinate networks to an image and "
                    "super-resolve by evaluating on denser grids.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="train a model per config")
    p_fit.add_argument("--config", default=None)
    p_fit.add_argument("--seed", type=int, default=None)
    p_fit.add_argument("--epochs", type=int, default=None)
    p_fit.set_defaults(func=cmd_fit)

    p_sr = sub.add_parser("superres", help="evaluate a checkpoint on a larger grid")
    p_sr.add_argument("--checkpoint", required=True)
    group = p_sr.add_mutually_exclusive_group(required=True)
    group.add_argument("--factor", type=float)
    group.add_argument("--dims", type=int, nargs=2, metavar=("H", "W"))
    p_sr.set_defaults(func=cmd_superres)

    p_eval = sub.add_parser("eval", help="metrics between two images")
    p_eval.add_argument("--pred", required=True)
    p_eval.add_argument("--truth", required=True)
    p_eval.add_argument("--data-range", type=float, default=None)
    p_eval.add_argument("--out", default=None)
    p_eval.set_defaults(func=cmd_eval)

    p_ab = sub.add_parser("ablate", help="seco vs no-semantic on one image")
    p_ab.add_argument("--config", default=None)
    p_ab.add_argument("--seed", type=int, default=None)
    p_ab.add_argument("--epochs", type=int, default=None)
    p_ab.set_defaults(func=cmd_ablate)

    p_pg = sub.add_parser("phantom-gen", help="render a standard-suite phantom")
    p_pg.add_argument("--index", type=int, default=0)
    p_pg.add_argument("--height", type=int, default=64)
    p_pg.add_argument("--width", type=int, default=64)
    p_pg.add_argument("--out", default=None)
    p_pg.set_defaults(func=cmd_phantom_gen)

    p_bench = sub.add_parser("bench", help="time-to-threshold per model")
    p_bench.add_argument("--config", default=None)
    p_bench.add_argument("--seed", type=int, default=None)
    p_bench.add_argument("--epochs", type=int, default=None)
    p_bench.add_argument("--psnr-threshold", type=float, required=True)
    p_bench.set_defaults(func=cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # one-line diagnostic, nonzero exit
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
