"""Command-line entry point.

Subcommands cover the full workflow: generate synthetic datasets, produce
teacher labels, train the three stages, run chained inference to point
clouds, evaluate stage fidelity, and benchmark classical versus learned
pipelines. Every command is deterministic given its inputs, config and seed
(benchmark wall times aside). Reports are JSON on stdout; failures exit
non-zero with a one-line JSON error on stderr.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .bench import run_benchmark
from .classical import teach_batch
from .cloud import assemble, export_cloud, load_padplane
from .config import Config, dump_config, load_config
from .datafile import Record, read_dataset, write_dataset
from .stages import (
    StageKind,
    StageSet,
    TrainConfig,
    evaluate_stage,
    infer_chain_batch,
    load_stage,
    save_stage,
    train_stage,
)
from .synth import gen_dataset

STAGE_NAMES = {
    "baseline": StageKind.BASELINE,
    "deconv": StageKind.DECONVOLUTION,
    "peaks": StageKind.PEAKS,
}
STAGE_FILES = {
    StageKind.BASELINE: "baseline.tpnn",
    StageKind.DECONVOLUTION: "deconv.tpnn",
    StageKind.PEAKS: "peaks.tpnn",
}


def _emit(report: dict, out=None) -> None:
    text = json.dumps(report, indent=1)
    if out:
        Path(out).write_text(text + "\n")
    print(text)


def cmd_gen(args) -> None:
    cfg = load_config(args.config)
    gen_cfg = cfg.gen
    if args.seed is not None:
        gen_cfg = dataclasses.replace(gen_cfg, rng_seed=args.seed)
    n = gen_dataset(args.n, gen_cfg, args.out)
    _emit({"records": n, "path": str(args.out), "seed": gen_cfg.rng_seed})


def cmd_teach(args) -> None:
    cfg = load_config(args.config)
    ds = read_dataset(args.infile)
    response = cfg.gold.response()
    baselines, deconv, scores, hits = teach_batch(
        ds.samples,
        ds.pad_ids,
        cfg.snip,
        response,
        cfg.gold.params,
        half_width=cfg.peaks.half_width,
        min_separation=cfg.peaks.min_separation,
        score_cut=cfg.peaks.score_cut,
    )

    def records():
        for i, rec in enumerate(ds.records()):
            yield Record(
                rec.event_id,
                rec.pad_id,
                rec.samples,
                rec.truth,
                baselines[i],
                deconv[i],
                scores[i],
            )

    write_dataset(args.out, records(), len(ds), has_truth=ds.has_truth, has_labels=True)
    _emit(
        {
            "records": len(ds),
            "path": str(args.out),
            "teacher_hits": sum(len(h) for h in hits),
        }
    )


def _require_labels(ds, path) -> None:
    if not ds.has_labels:
        raise ValueError(f"dataset {path} has no teacher label blocks; run teach first")


def _label_tuple(ds):
    return (ds.samples, ds.label_baseline, ds.label_deconv, ds.label_scores)


def cmd_train(args) -> None:
    cfg = load_config(args.config)
    kind = STAGE_NAMES[args.stage]
    train_ds = read_dataset(args.infile)
    val_ds = read_dataset(args.val)
    _require_labels(train_ds, args.infile)
    _require_labels(val_ds, args.val)

    tc = cfg.train
    if args.epochs is not None:
        tc = dataclasses.replace(tc, epochs=args.epochs)
    if args.seed is not None:
        tc = dataclasses.replace(tc, seed=args.seed)

    model, report = train_stage(kind, _label_tuple(train_ds), _label_tuple(val_ds), tc)
    save_stage(model, args.out)

    out = Path(args.out)
    out.with_suffix(out.suffix + ".report.json").write_text(
        json.dumps(report.to_dict(), indent=1) + "\n"
    )
    curve = ["epoch,loss_train,loss_val"]
    curve += [
        f"{e},{tr:.10g},{va:.10g}"
        for e, (tr, va) in enumerate(zip(report.train_loss, report.val_loss))
    ]
    out.with_suffix(out.suffix + ".curve.csv").write_text("\n".join(curve) + "\n")

    _emit(
        {
            "stage": args.stage,
            "path": str(args.out),
            "param_count": model.param_count,
            "epochs_run": len(report.train_loss),
            "best_epoch": report.best_epoch,
            "best_val_loss": report.best_val_loss,
            "updates_per_epoch": report.updates_per_epoch,
        }
    )


def load_stages(models_dir) -> StageSet:
    models = {}
    for kind, name in STAGE_FILES.items():
        path = Path(models_dir) / name
        if not path.exists():
            raise FileNotFoundError(f"missing stage model {path}")
        models[kind] = load_stage(path)
        if models[kind].kind is not kind:
            raise ValueError(f"{path} is tagged {models[kind].kind.value}, expected {kind.value}")
    return StageSet(
        models[StageKind.BASELINE],
        models[StageKind.DECONVOLUTION],
        models[StageKind.PEAKS],
    )


def cmd_infer(args) -> None:
    cfg = load_config(args.config)
    stages = load_stages(args.models)
    plane = load_padplane(args.padplane)
    ds = read_dataset(args.infile)
    hits = infer_chain_batch(
        stages, ds.samples, ds.pad_ids, args.score_cut, cfg.bench.batch_size
    )
    clouds = []
    for event_id in np.unique(ds.event_ids):
        idx = np.flatnonzero(ds.event_ids == event_id)
        event_hits = [h for i in idx for h in hits[i]]
        clouds.append(assemble(event_hits, plane, int(event_id)))
    export_cloud(clouds, args.out)
    _emit(
        {
            "events": len(clouds),
            "points": sum(len(c.points) for c in clouds),
            "path": str(args.out),
        }
    )


def cmd_eval(args) -> None:
    cfg = load_config(args.config)
    stages = load_stages(args.models)
    ds = read_dataset(args.infile)
    _require_labels(ds, args.infile)
    labels = _label_tuple(ds)
    report = {
        name: evaluate_stage(model, *labels, score_cut=cfg.peaks.score_cut).to_dict()
        for name, model in (
            ("baseline", stages.baseline),
            ("deconv", stages.deconv),
            ("peaks", stages.peaks),
        )
    }
    _emit(report, args.out)


def cmd_bench(args) -> None:
    cfg = load_config(args.config)
    stages = None
    if args.pipeline in ("cnn", "both"):
        if args.models is None:
            raise ValueError("--models is required for the cnn pipeline")
        stages = load_stages(args.models)
    report = run_benchmark(args.infile, args.pipeline, cfg, stages, args.repeat)
    _emit(report, args.out)


def cmd_config(args) -> None:
    text = dump_config(Config(), args.out)
    if args.out:
        print(json.dumps({"path": str(args.out)}))
    else:
        print(text, end="")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="tpcnn",
        description="TPC pulse analysis: classical pipeline, learned stages, point clouds",
    )
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic dataset with truth")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--config")
    g.add_argument("--seed", type=int)
    g.set_defaults(fn=cmd_gen)

    t = sub.add_parser("teach", help="run the classical pipeline and store labels")
    t.add_argument("--in", dest="infile", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--config")
    t.set_defaults(fn=cmd_teach)

    tr = sub.add_parser("train", help="train one stage from teacher labels")
    tr.add_argument("--stage", choices=sorted(STAGE_NAMES), required=True)
    tr.add_argument("--in", dest="infile", required=True)
    tr.add_argument("--val", required=True)
    tr.add_argument("--out", required=True)
    tr.add_argument("--epochs", type=int)
    tr.add_argument("--seed", type=int)
    tr.add_argument("--config")
    tr.set_defaults(fn=cmd_train)

    inf = sub.add_parser("infer", help="learned chain: dataset to point cloud")
    inf.add_argument("--models", required=True)
    inf.add_argument("--in", dest="infile", required=True)
    inf.add_argument("--out", required=True)
    inf.add_argument("--padplane", required=True)
    inf.add_argument("--score-cut", type=float, default=0.5)
    inf.add_argument("--config")
    inf.set_defaults(fn=cmd_infer)

    ev = sub.add_parser("eval", help="stage metrics against teacher labels")
    ev.add_argument("--models", required=True)
    ev.add_argument("--in", dest="infile", required=True)
    ev.add_argument("--out")
    ev.add_argument("--config")
    ev.set_defaults(fn=cmd_eval)

    b = sub.add_parser("bench", help="classical vs learned throughput")
    b.add_argument("--in", dest="infile", required=True)
    b.add_argument("--pipeline", choices=["classical", "cnn", "both"], default="both")
    b.add_argument("--repeat", type=int)
    b.add_argument("--models")
    b.add_argument("--out")
    b.add_argument("--config")
    b.set_defaults(fn=cmd_bench)

    c = sub.add_parser("config", help="print or write the default config")
    c.add_argument("--out")
    c.set_defaults(fn=cmd_config)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.fn(args)
    except Exception as e:  # noqa: BLE001 - single CLI error funnel
        print(json.dumps({"error": f"{type(e).__name__}: {e}"}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
