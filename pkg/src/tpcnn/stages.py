"""The three learned pipeline stages and their training/evaluation.

Each stage distills one classical step from teacher labels:

  baseline       raw signal            -> smooth baseline estimate    (MSE)
  deconvolution  baseline-subtracted   -> deconvolved hit spectrum    (MSE)
  peaks          deconvolved spectrum  -> per-bucket window score map (BCE)

Inputs and regression targets are scaled by 1/4096 going into the networks
and rescaled on the way out; the peak stage emits sigmoid scores directly.
Chained together the stages map a raw trace to a hit list exactly like the
classical pipeline does.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .classical import hits_from_arrays, score_runs
from .nn import Conv1D, Dense, Flatten, MaxPoolChannel, Network, NumericError, ReLU, Sigmoid
from .nn import load_model, predict_in_batches, save_model, train
from .nn.train import TrainReport
from .trace import TRACE_LENGTH, Hit, Trace

INPUT_SCALE = 4096.0


class StageKind(Enum):
    BASELINE = "baseline"
    DECONVOLUTION = "deconv"
    PEAKS = "peaks"


STAGE_TAG = {StageKind.BASELINE: 1, StageKind.DECONVOLUTION: 2, StageKind.PEAKS: 3}
TAG_STAGE = {v: k for k, v in STAGE_TAG.items()}


@dataclass
class TrainConfig:
    epochs: int = 60
    batch_size: int = 8
    learning_rate: float = 5e-4
    beta1: float = 0.9
    beta2: float = 0.999
    patience: int | None = 10
    seed: int = 0


@dataclass
class StageModel:
    """One trained stage: 512 samples in, 512 values out."""

    kind: StageKind
    net: Network

    @property
    def param_count(self) -> int:
        return self.net.param_count()


def build_stage(kind: StageKind, seed: int = 0) -> StageModel:
    """Assemble an untrained stage network with seeded initialization.

    First convolution always has 32 filters; channel pooling by 16 reduces
    them to 2; a final dense layer restores the 512-bucket output length.
    Kernel sizes are 17/19/21 for baseline/deconvolution/peaks, the
    deconvolution stage convolving without padding (512 -> 494).
    """
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, STAGE_TAG[kind]))))
    n = TRACE_LENGTH
    if kind is StageKind.BASELINE:
        layers = [
            Conv1D(1, 32, 17, "same", rng=rng, init="he"),
            ReLU(),
            MaxPoolChannel(16),
            Conv1D(2, 2, 17, "same", rng=rng, init="he"),
            ReLU(),
            Flatten(),
            Dense(2 * n, n, rng=rng, init="glorot"),
        ]
    elif kind is StageKind.DECONVOLUTION:
        conv = Conv1D(1, 32, 19, "valid", rng=rng, init="he")
        layers = [
            conv,
            ReLU(),
            MaxPoolChannel(16),
            Flatten(),
            Dense(2 * conv.output_length(n), n, rng=rng, init="glorot"),
        ]
    else:
        layers = [
            Conv1D(1, 32, 21, "same", rng=rng, init="he"),
            ReLU(),
            MaxPoolChannel(16),
            Flatten(),
            Dense(2 * n, n, rng=rng, init="glorot"),
            Sigmoid(),
        ]
    return StageModel(kind, Network(layers))


def stage_loss(kind: StageKind) -> str:
    return "bce" if kind is StageKind.PEAKS else "mse"


def stage_arrays(
    kind: StageKind,
    samples: np.ndarray,
    label_baseline: np.ndarray,
    label_deconv: np.ndarray,
    label_scores: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Scaled (input, target) pair for one stage from teacher-labeled data."""
    if kind is StageKind.BASELINE:
        return samples / INPUT_SCALE, label_baseline / INPUT_SCALE
    if kind is StageKind.DECONVOLUTION:
        return (samples - label_baseline) / INPUT_SCALE, label_deconv / INPUT_SCALE
    return label_deconv / INPUT_SCALE, np.asarray(label_scores, dtype=np.float64)


def predict_stage(model: StageModel, inputs: np.ndarray, batch: int = 256) -> np.ndarray:
    """Run one stage on unscaled inputs; outputs come back in input units."""
    try:
        out = predict_in_batches(model.net, np.asarray(inputs) / INPUT_SCALE, batch)
    except NumericError as e:
        raise NumericError(f"{model.kind.value} stage: {e}") from e
    if model.kind is StageKind.PEAKS:
        return out
    return out * INPUT_SCALE


def train_stage(
    kind: StageKind,
    train_data: tuple[np.ndarray, ...],
    val_data: tuple[np.ndarray, ...],
    cfg: TrainConfig = TrainConfig(),
) -> tuple[StageModel, TrainReport]:
    """Train one stage from (samples, baseline, deconv, scores) label arrays."""
    model = build_stage(kind, seed=cfg.seed)
    xt, yt = stage_arrays(kind, *train_data)
    xv, yv = stage_arrays(kind, *val_data)
    _, report = train(
        model.net,
        (xt, yt),
        (xv, yv),
        epochs=cfg.epochs,
        batch_size=cfg.batch_size,
        seed=cfg.seed,
        loss=stage_loss(kind),
        lr=cfg.learning_rate,
        beta1=cfg.beta1,
        beta2=cfg.beta2,
        patience=cfg.patience,
    )
    return model, report


def save_stage(model: StageModel, path) -> None:
    save_model(model.net, path, stage=STAGE_TAG[model.kind])


def load_stage(path) -> StageModel:
    net, tag = load_model(path)
    if tag not in TAG_STAGE:
        raise ValueError(f"model at {path} carries no known stage tag (got {tag})")
    return StageModel(TAG_STAGE[tag], net)


@dataclass
class EvalMetrics:
    """Per-stage agreement with the teacher on a validation set."""

    rel_error_median: float | None = None
    detection_accuracy: float | None = None
    centroid_rms: float | None = None
    false_positive_rate: float | None = None
    n_traces: int = 0
    n_skipped: int = 0
    n_windows: int = 0
    n_missed: int = 0

    def to_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items()}


def _run_centroid(samples: np.ndarray, lo: int, hi: int) -> float:
    seg = samples[lo : hi + 1]
    weights = np.maximum(seg, 0.0)
    total = weights.sum()
    if total > 0:
        return float(np.dot(np.arange(lo, hi + 1), weights) / total)
    return 0.5 * (lo + hi)


def evaluate_regression(pred: np.ndarray, teacher: np.ndarray) -> EvalMetrics:
    """Median per-trace relative L2 error, skipping near-empty teacher traces."""
    norms = np.linalg.norm(teacher, axis=1)
    keep = norms >= 1.0
    rel = np.linalg.norm(pred[keep] - teacher[keep], axis=1) / norms[keep]
    return EvalMetrics(
        rel_error_median=float(np.median(rel)) if rel.size else None,
        n_traces=int(pred.shape[0]),
        n_skipped=int((~keep).sum()),
    )


def evaluate_peaks(
    pred_scores: np.ndarray,
    teacher_scores: np.ndarray,
    subtracted: np.ndarray,
    score_cut: float = 0.5,
) -> EvalMetrics:
    """Window detection metrics of predicted score maps against teacher maps.

    A teacher window counts as detected when any predicted run above the cut
    overlaps it; centroid RMS is taken over matched pairs using the
    subtracted trace for both sides; predicted runs overlapping no teacher
    window are false positives.
    """
    n = pred_scores.shape[0]
    total = detected = false_pos = 0
    sq_diffs: list[float] = []
    for i in range(n):
        t_runs = score_runs(teacher_scores[i], 0.5)
        p_runs = score_runs(pred_scores[i], score_cut)
        matched_p = set()
        for tlo, thi in t_runs:
            total += 1
            overlaps = [
                (j, plo, phi)
                for j, (plo, phi) in enumerate(p_runs)
                if plo <= thi and phi >= tlo
            ]
            if not overlaps:
                continue
            detected += 1
            t_cen = _run_centroid(subtracted[i], tlo, thi)
            j, plo, phi = min(
                overlaps, key=lambda o: abs(_run_centroid(subtracted[i], o[1], o[2]) - t_cen)
            )
            matched_p.add(j)
            sq_diffs.append((_run_centroid(subtracted[i], plo, phi) - t_cen) ** 2)
        for j, (plo, phi) in enumerate(p_runs):
            if not any(plo <= thi and phi >= tlo for tlo, thi in t_runs):
                false_pos += 1
    return EvalMetrics(
        detection_accuracy=detected / total if total else None,
        centroid_rms=float(np.sqrt(np.mean(sq_diffs))) if sq_diffs else None,
        false_positive_rate=false_pos / n,
        n_traces=n,
        n_windows=total,
        n_missed=total - detected,
    )


def evaluate_stage(
    model: StageModel,
    samples: np.ndarray,
    label_baseline: np.ndarray,
    label_deconv: np.ndarray,
    label_scores: np.ndarray,
    score_cut: float = 0.5,
) -> EvalMetrics:
    """Compare one stage's predictions with its teacher labels."""
    if samples.shape[0] == 0:
        raise ValueError("evaluation set is empty")
    inputs, _ = stage_arrays(model.kind, samples, label_baseline, label_deconv, label_scores)
    pred = predict_stage(model, inputs * INPUT_SCALE)
    if model.kind is StageKind.BASELINE:
        return evaluate_regression(pred, label_baseline)
    if model.kind is StageKind.DECONVOLUTION:
        return evaluate_regression(pred, label_deconv)
    return evaluate_peaks(pred, label_scores, samples - label_baseline, score_cut)


@dataclass
class StageSet:
    """The three trained stages wired for chained inference."""

    baseline: StageModel
    deconv: StageModel
    peaks: StageModel

    def __post_init__(self):
        for model, kind in (
            (self.baseline, StageKind.BASELINE),
            (self.deconv, StageKind.DECONVOLUTION),
            (self.peaks, StageKind.PEAKS),
        ):
            if model.kind is not kind:
                raise ValueError(f"stage slot {kind.value} holds a {model.kind.value} model")

    @property
    def param_count(self) -> int:
        return sum(m.param_count for m in (self.baseline, self.deconv, self.peaks))


def infer_chain_batch(
    stages: StageSet,
    samples: np.ndarray,
    pad_ids: np.ndarray,
    score_cut: float = 0.5,
    batch: int = 256,
) -> list[list[Hit]]:
    """Raw (N, 512) samples through all three stages to per-trace hit lists.

    The deconvolution output is clipped at zero before the peak stage, which
    keeps the peak network inside the non-negative domain it was trained on.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.shape[0] == 0:
        return []
    baseline = predict_stage(stages.baseline, samples, batch)
    sub = samples - baseline
    deconv = np.maximum(predict_stage(stages.deconv, sub, batch), 0.0)
    scores = np.clip(predict_stage(stages.peaks, deconv, batch), 0.0, 1.0)
    return [
        hits_from_arrays(sub[i], scores[i], int(pad_ids[i]), score_cut)
        for i in range(samples.shape[0])
    ]


def infer_chain(stages: StageSet, raw: Trace, score_cut: float = 0.5) -> list[Hit]:
    """Full learned chain on a single trace."""
    return infer_chain_batch(
        stages, raw.samples[None, :], np.array([raw.pad_id]), score_cut
    )[0]
