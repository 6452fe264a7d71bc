"""Digital pulse-shape analysis for active-target TPC pad signals.

Classical chain (peak-clipping baseline, Gold deconvolution, window
segmentation) as the teacher, three small 1D CNN stages that learn it, and
point-cloud reconstruction with a throughput benchmark comparing the two.
"""

from .trace import ADC_MAX, TRACE_LENGTH, Hit, PeakWindow, ScoreMap, Trace, integrate, subtract
from .synth import (
    BaselineModel,
    BaselineRanges,
    EdgeJump,
    GenConfig,
    HitTruth,
    PulseShape,
    TruthRecord,
    gen_baseline,
    gen_dataset,
    gen_records,
    gen_trace,
    trace_rng,
)
from .classical import (
    GoldParams,
    ResponseMatrix,
    SnipParams,
    TeacherLabels,
    find_peaks,
    gold_deconvolve,
    gold_deconvolve_array,
    label_windows,
    snip_background,
    snip_baseline,
    teach,
    teach_batch,
    windows_to_hits,
)
from .stages import (
    EvalMetrics,
    StageKind,
    StageModel,
    StageSet,
    TrainConfig,
    build_stage,
    evaluate_stage,
    infer_chain,
    infer_chain_batch,
    load_stage,
    save_stage,
    train_stage,
)
from .cloud import (
    CloudPoint,
    PadPlane,
    PointCloudEvent,
    assemble,
    export_cloud,
    grid_padplane,
    load_padplane,
)
from .config import Config, load_config
from .datafile import Dataset, Record, read_dataset, write_dataset

__version__ = "0.1.0"
