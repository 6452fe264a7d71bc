#!/usr/bin/env python3
"""End-to-end desk-scale study: generate, teach, train, evaluate, benchmark.

Runs the full workflow in one process and prints a summary per stage. The
default sizes finish in a few minutes; --full uses the 16k/4k split that the
acceptance suite trains at.

Usage:
    python scripts/desk_scale.py --workdir /tmp/study [--full] [--seed 0]
"""

import argparse
import dataclasses
import json
import time
from pathlib import Path

from tpcnn.bench import run_benchmark
from tpcnn.classical import teach_batch
from tpcnn.config import Config
from tpcnn.datafile import Record, read_dataset, write_dataset
from tpcnn.stages import (
    StageKind,
    StageSet,
    evaluate_stage,
    save_stage,
    train_stage,
)
from tpcnn.synth import gen_dataset


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--workdir", type=Path, required=True)
    ap.add_argument("--full", action="store_true", help="16k/4k acceptance-scale run")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--epochs", type=int, default=None)
    args = ap.parse_args()

    n_train, n_val = (16000, 4000) if args.full else (2000, 500)
    epochs = args.epochs or (60 if args.full else 20)
    args.workdir.mkdir(parents=True, exist_ok=True)
    cfg = Config()
    cfg.train = dataclasses.replace(cfg.train, epochs=epochs, seed=args.seed)

    print(f"== generating {n_train}+{n_val} traces")
    tic = time.time()
    gen_cfg = dataclasses.replace(cfg.gen, rng_seed=args.seed)
    gen_dataset(n_train + n_val, gen_cfg, args.workdir / "all.tpcd")
    ds = read_dataset(args.workdir / "all.tpcd")
    print(f"   {time.time() - tic:.1f}s")

    print("== teacher labels (classical pipeline)")
    tic = time.time()
    response = cfg.gold.response()
    base, deconv, scores, _ = teach_batch(
        ds.samples, ds.pad_ids, cfg.snip, response, cfg.gold.params,
        half_width=cfg.peaks.half_width,
        min_separation=cfg.peaks.min_separation,
        score_cut=cfg.peaks.score_cut,
    )
    print(f"   {time.time() - tic:.1f}s")

    def arrays(sl):
        return (ds.samples[sl], base[sl], deconv[sl], scores[sl])

    train_slice, val_slice = slice(0, n_train), slice(n_train, n_train + n_val)
    models = {}
    for kind in StageKind:
        print(f"== training {kind.value} stage")
        tic = time.time()
        model, report = train_stage(kind, arrays(train_slice), arrays(val_slice), cfg.train)
        metrics = evaluate_stage(model, *arrays(val_slice))
        models[kind] = model
        save_stage(model, args.workdir / f"{kind.value}.tpnn")
        print(
            f"   epochs={len(report.train_loss)} best={report.best_epoch} "
            f"val_loss={report.best_val_loss:.3e} ({time.time() - tic:.0f}s)"
        )
        print(f"   metrics: {json.dumps(metrics.to_dict())}")

    print("== benchmark (classical vs learned, paired)")
    stages = StageSet(
        models[StageKind.BASELINE], models[StageKind.DECONVOLUTION], models[StageKind.PEAKS]
    )
    val_path = args.workdir / "val.tpcd"
    write_dataset(
        val_path,
        (Record(r.event_id, r.pad_id, r.samples) for r in list(ds.records())[val_slice]),
        count=n_val,
    )
    report = run_benchmark(val_path, "both", cfg, stages, repeat=3)
    print(
        f"   classical {report['classical']['traces_per_second']:.0f} traces/s, "
        f"cnn {report['cnn']['traces_per_second']:.0f} traces/s, "
        f"speedup x{report['speedup']:.1f}"
    )
    (args.workdir / "bench.json").write_text(json.dumps(report, indent=1))


if __name__ == "__main__":
    main()
