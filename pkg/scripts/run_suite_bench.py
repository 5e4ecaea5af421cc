#!/usr/bin/env python3
"""Time-to-threshold comparison across the standard phantom suite.

Trains each requested model on every phantom's low-res image and records the
wall-clock seconds until the training PSNR first reaches the threshold. With
no explicit threshold the suite-median of the final training PSNRs is used.
"""

import argparse

from secoinr import dataio, phantom, sampling, training
from secoinr.config import RunConfig
from secoinr.fields import ClassField


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="suite_bench.csv")
    parser.add_argument("--models", default="seco,siren")
    parser.add_argument("--psnr-threshold", type=float, default=None)
    parser.add_argument("--factor", type=float, default=2.0)
    parser.add_argument("--gt-size", type=int, default=64)
    parser.add_argument("--hidden", type=int, default=96)
    args = parser.parse_args()

    kinds = [m.strip() for m in args.models.split(",") if m.strip()]
    logs = {}
    for spec in phantom.standard_suite():
        gt_image, gt_mask = phantom.render(spec, args.gt_size, args.gt_size)
        lr_image = sampling.downsample(gt_image, args.factor)
        labels = sampling.downsample_labels(gt_mask.labels(),
                                            lr_image.height, lr_image.width)
        lr_mask = ClassField.from_labels(labels, gt_mask.class_count)
        for kind in kinds:
            cfg = RunConfig(model=kind, seed=spec.seed, hidden=args.hidden)
            mask = lr_mask if kind in ("seco", "seco_no_semantic") else None
            logs[(spec.name, kind)] = training.train(lr_image, mask, cfg).log
            print(f"trained {kind} on {spec.name}")

    threshold = args.psnr_threshold
    if threshold is None:
        finals = sorted(log[-1].psnr for log in logs.values())
        threshold = finals[len(finals) // 2]
        print(f"suite-median threshold: {threshold:.2f} dB")

    rows = []
    for (name, kind), log in logs.items():
        reached, seconds, epoch = training.time_to_psnr(log, threshold)
        rows.append([name, kind, repr(threshold),
                     "yes" if reached else "not_reached",
                     f"{seconds:.3f}" if reached else "", str(epoch),
                     repr(log[-1].psnr)])
        shown = f"{seconds:.3f}s" if reached else "not reached"
        print(f"{name} {kind}: {shown}")

    header = ["phantom", "model", "threshold_psnr", "reached", "seconds",
              "epoch", "final_psnr"]
    dataio.write_csv(args.out, header, rows)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
