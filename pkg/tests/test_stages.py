import numpy as np
import pytest

from tpcnn.stages import (
    INPUT_SCALE,
    EvalMetrics,
    StageKind,
    StageModel,
    StageSet,
    TrainConfig,
    build_stage,
    evaluate_peaks,
    evaluate_stage,
    infer_chain,
    infer_chain_batch,
    load_stage,
    predict_stage,
    save_stage,
    stage_arrays,
    train_stage,
)
from tpcnn.nn.layers import Conv1D
from tpcnn.trace import Trace


class TestBuildStage:
    def test_output_lengths_are_512(self):
        x = np.zeros((2, 512))
        for kind in StageKind:
            model = build_stage(kind)
            assert model.net.forward(x).shape == (2, 512)

    def test_deconv_internal_valid_length(self):
        model = build_stage(StageKind.DECONVOLUTION)
        conv = model.net.layers[0]
        assert isinstance(conv, Conv1D)
        assert conv.padding == "valid"
        assert conv.output_length(512) == 494

    def test_first_conv_has_32_filters(self):
        for kind in StageKind:
            conv = build_stage(kind).net.layers[0]
            assert conv.filters == 32
            assert conv.kernel_size in (17, 19, 21)

    def test_parameter_counts(self):
        counts = {kind: build_stage(kind).param_count for kind in StageKind}
        assert counts[StageKind.BASELINE] == 525_446
        assert counts[StageKind.DECONVOLUTION] == 507_008
        assert counts[StageKind.PEAKS] == 525_504
        assert sum(counts.values()) > 500_000

    def test_seeded_build_reproducible(self):
        a = build_stage(StageKind.PEAKS, seed=5)
        b = build_stage(StageKind.PEAKS, seed=5)
        for pa, pb in zip(a.net.params(), b.net.params()):
            np.testing.assert_array_equal(pa, pb)


class TestPeaksRange:
    def test_scores_in_unit_interval_for_any_input(self):
        model = build_stage(StageKind.PEAKS, seed=1)
        rng = np.random.default_rng(0)
        x = rng.uniform(-4096, 4096, size=(8, 512))
        out = predict_stage(model, x)
        assert np.all((out >= 0.0) & (out <= 1.0))


class TestEvaluate:
    def test_oracle_injection_perfect_scores(self):
        # comparing teacher labels against themselves gives zero error and
        # perfect detection
        rng = np.random.default_rng(2)
        samples = rng.uniform(0, 4095, (5, 512))
        baseline = rng.uniform(100, 300, (5, 512))
        deconv = np.abs(rng.normal(0, 50, (5, 512)))
        scores = np.zeros((5, 512))
        scores[:, 100:111] = 1.0
        m = evaluate_peaks(scores, scores, samples - baseline)
        assert m.detection_accuracy == 1.0
        assert m.centroid_rms == 0.0
        assert m.false_positive_rate == 0.0

    def test_missed_and_false_windows_counted(self):
        sub = np.ones((2, 512))
        teacher = np.zeros((2, 512))
        teacher[0, 100:111] = 1.0
        pred = np.zeros((2, 512))
        pred[1, 300:306] = 1.0
        m = evaluate_peaks(pred, teacher, sub)
        assert m.detection_accuracy == 0.0
        assert m.n_missed == 1
        assert m.false_positive_rate == pytest.approx(0.5)

    def test_regression_skips_low_norm_traces(self):
        from tpcnn.stages import evaluate_regression

        pred = np.zeros((3, 512))
        teacher = np.zeros((3, 512))
        teacher[0, :] = 1.0
        pred[0, :] = 1.1
        m = evaluate_regression(pred, teacher)
        assert m.n_skipped == 2
        assert m.rel_error_median == pytest.approx(0.1, rel=1e-6)

    def test_empty_set_rejected(self):
        model = build_stage(StageKind.BASELINE)
        empty = np.zeros((0, 512))
        with pytest.raises(ValueError, match="empty"):
            evaluate_stage(model, empty, empty, empty, empty)


class TestStageSet:
    def test_slot_kind_checked(self):
        b = build_stage(StageKind.BASELINE)
        d = build_stage(StageKind.DECONVOLUTION)
        p = build_stage(StageKind.PEAKS)
        with pytest.raises(ValueError, match="slot"):
            StageSet(d, b, p)

    def test_total_param_count_exceeds_half_million(self):
        s = StageSet(
            build_stage(StageKind.BASELINE),
            build_stage(StageKind.DECONVOLUTION),
            build_stage(StageKind.PEAKS),
        )
        assert s.param_count > 500_000


class TestInferChain:
    @pytest.fixture(scope="class")
    def stages(self):
        return StageSet(
            build_stage(StageKind.BASELINE, seed=1),
            build_stage(StageKind.DECONVOLUTION, seed=1),
            build_stage(StageKind.PEAKS, seed=1),
        )

    def test_deterministic(self, stages):
        rng = np.random.default_rng(4)
        raw = Trace(0, 3, rng.uniform(0, 500, 512))
        a = infer_chain(stages, raw)
        b = infer_chain(stages, raw)
        assert a == b

    def test_batch_matches_single(self, stages):
        # batched and one-at-a-time BLAS reductions differ in the last ulp,
        # so hits match structurally and numerically to float tolerance
        rng = np.random.default_rng(5)
        samples = rng.uniform(0, 500, (4, 512))
        pad_ids = np.arange(4)
        batched = infer_chain_batch(stages, samples, pad_ids)
        for i in range(4):
            single = infer_chain(stages, Trace(0, i, samples[i]))
            assert len(batched[i]) == len(single)
            for hb, hs in zip(batched[i], single):
                assert hb.pad_id == hs.pad_id
                assert hb.time == pytest.approx(hs.time, abs=1e-9)
                assert hb.charge == pytest.approx(hs.charge, rel=1e-12)

    def test_hits_carry_pad_ids(self, stages):
        rng = np.random.default_rng(6)
        samples = rng.uniform(0, 500, (3, 512))
        hits = infer_chain_batch(stages, samples, np.array([7, 8, 9]))
        for pad, hs in zip((7, 8, 9), hits):
            assert all(h.pad_id == pad for h in hs)


class TestStagePersistence:
    def test_stage_tag_roundtrip(self, tmp_path):
        model = build_stage(StageKind.DECONVOLUTION, seed=2)
        path = tmp_path / "d.tpnn"
        save_stage(model, path)
        loaded = load_stage(path)
        assert loaded.kind is StageKind.DECONVOLUTION
        for a, b in zip(model.net.params(), loaded.net.params()):
            np.testing.assert_array_equal(a, b)

    def test_untagged_model_rejected(self, tmp_path):
        from tpcnn.nn import save_model

        model = build_stage(StageKind.PEAKS)
        path = tmp_path / "x.tpnn"
        save_model(model.net, path, stage=0)
        with pytest.raises(ValueError, match="stage tag"):
            load_stage(path)


def test_train_stage_tiny_run_improves():
    rng = np.random.default_rng(0)
    n = 48
    samples = rng.uniform(100, 400, (n, 512))
    baseline = samples - rng.uniform(0, 5, (n, 512))
    deconv = np.abs(rng.normal(0, 20, (n, 512)))
    scores = np.zeros((n, 512))
    data = (samples, baseline, deconv, scores)
    val = tuple(a[40:] for a in data)
    trn = tuple(a[:40] for a in data)
    model, report = train_stage(
        StageKind.BASELINE, trn, val, TrainConfig(epochs=3, seed=0, patience=None)
    )
    assert len(report.train_loss) == 3
    assert report.val_loss[-1] <= report.val_loss[0]
