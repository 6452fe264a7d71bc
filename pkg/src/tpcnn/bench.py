"""Paired throughput benchmark: classical pipeline vs learned chain.

Both pipelines run end to end from the same dataset file (decode included) to
per-trace hit lists. One warmup pass is discarded, then the median wall time
over the requested repeats is reported with a per-stage breakdown. By default
the timed region pins the BLAS thread pools to one thread so the comparison
measures single-threaded throughput.
"""

from __future__ import annotations

import statistics
import time
from collections import defaultdict
from contextlib import nullcontext

import numpy as np
from threadpoolctl import threadpool_limits

from .classical import (
    ResponseMatrix,
    find_peaks,
    gold_deconvolve_array,
    hits_from_arrays,
    label_windows,
    snip_baseline,
)
from .config import Config
from .datafile import read_dataset
from .stages import StageSet, predict_stage


def _classical_pass(path, config: Config, response: ResponseMatrix):
    times: dict[str, float] = defaultdict(float)
    tic = time.perf_counter()
    ds = read_dataset(path)
    times["decode"] += time.perf_counter() - tic
    gold = config.gold.params
    peaks = config.peaks
    batch = config.bench.batch_size
    total_hits = 0
    for s in range(0, len(ds), batch):
        chunk = ds.samples[s : s + batch]
        tic = time.perf_counter()
        base = snip_baseline(chunk, config.snip)
        times["snip"] += time.perf_counter() - tic
        tic = time.perf_counter()
        sub = chunk - base
        times["subtract"] += time.perf_counter() - tic
        tic = time.perf_counter()
        deconv = gold_deconvolve_array(sub, response, gold)
        times["gold"] += time.perf_counter() - tic
        tic = time.perf_counter()
        for i in range(chunk.shape[0]):
            centroids = find_peaks(deconv[i], gold.threshold, peaks.min_separation)
            smap = label_windows(centroids, peaks.half_width)
            total_hits += len(
                hits_from_arrays(sub[i], smap.scores, int(ds.pad_ids[s + i]), peaks.score_cut)
            )
        times["peaks"] += time.perf_counter() - tic
    return dict(times), len(ds), total_hits


def _cnn_pass(path, config: Config, stages: StageSet):
    times: dict[str, float] = defaultdict(float)
    tic = time.perf_counter()
    ds = read_dataset(path)
    times["decode"] += time.perf_counter() - tic
    batch = config.bench.batch_size
    cut = config.peaks.score_cut
    total_hits = 0
    for s in range(0, len(ds), batch):
        chunk = ds.samples[s : s + batch]
        tic = time.perf_counter()
        base = predict_stage(stages.baseline, chunk, batch)
        times["baseline_net"] += time.perf_counter() - tic
        tic = time.perf_counter()
        sub = chunk - base
        times["subtract"] += time.perf_counter() - tic
        tic = time.perf_counter()
        deconv = np.maximum(predict_stage(stages.deconv, sub, batch), 0.0)
        times["deconv_net"] += time.perf_counter() - tic
        tic = time.perf_counter()
        scores = np.clip(predict_stage(stages.peaks, deconv, batch), 0.0, 1.0)
        times["peak_net"] += time.perf_counter() - tic
        tic = time.perf_counter()
        for i in range(chunk.shape[0]):
            total_hits += len(
                hits_from_arrays(sub[i], scores[i], int(ds.pad_ids[s + i]), cut)
            )
        times["hits"] += time.perf_counter() - tic
    return dict(times), len(ds), total_hits


def _run_pipeline(pass_fn, repeat: int, single_thread: bool) -> dict:
    guard = threadpool_limits(limits=1) if single_thread else nullcontext()
    with guard:
        pass_fn()  # warmup: cold caches and allocator excluded from timing
        walls = []
        stage_samples = []
        n_traces = hits = 0
        for _ in range(repeat):
            tic = time.perf_counter()
            times, n_traces, hits = pass_fn()
            walls.append(time.perf_counter() - tic)
            stage_samples.append(times)
    wall = statistics.median(walls)
    per_stage = {
        k: statistics.median(s[k] for s in stage_samples) for k in stage_samples[0]
    }
    return {
        "n_traces": n_traces,
        "wall_seconds": wall,
        "traces_per_second": n_traces / wall,
        "per_stage_seconds": per_stage,
        "samples_seconds": walls,
        "total_hits": hits,
        "single_thread": single_thread,
    }


def run_benchmark(
    path,
    pipeline: str,
    config: Config,
    stages: StageSet | None = None,
    repeat: int | None = None,
) -> dict:
    """Benchmark one or both pipelines on a dataset file."""
    if pipeline not in ("classical", "cnn", "both"):
        raise ValueError(f"unknown pipeline {pipeline!r}")
    repeat = config.bench.repeat if repeat is None else repeat
    if repeat < 1:
        raise ValueError("repeat must be >= 1")
    if pipeline in ("cnn", "both") and stages is None:
        raise ValueError("cnn benchmark requires trained stage models")

    report: dict = {"pipeline": pipeline, "repeat": repeat}
    single = config.bench.single_thread
    if pipeline in ("classical", "both"):
        response = config.gold.response()
        report["classical"] = _run_pipeline(
            lambda: _classical_pass(path, config, response), repeat, single
        )
    if pipeline in ("cnn", "both"):
        report["cnn"] = _run_pipeline(
            lambda: _cnn_pass(path, config, stages), repeat, single
        )
    if pipeline == "both":
        report["speedup"] = (
            report["classical"]["wall_seconds"] / report["cnn"]["wall_seconds"]
        )
    return report
