import dataclasses
import math

import numpy as np
import pytest

from softvote.corpus import ClassLabel, LabeledCorpus, LabeledExample
from softvote.ensemble import ProbabilityTable
from softvote.errors import ParseError, TrainingError, ValidationError
from softvote.members import (
    HASH_DIM,
    EpochHistory,
    EpochRecord,
    MemberModel,
    MetricKind,
    TrainConfig,
    featurize,
    load_external_probabilities,
    load_model,
    loss_and_gradient,
    predict_proba,
    save_model,
    save_probabilities,
    select_best_epoch,
    train_member,
)

POS = ClassLabel.SELF_REPORTED
NEG = ClassLabel.NON_SELF_REPORTED


def make_corpus(rows, split_name="toy"):
    examples = tuple(
        LabeledExample(id=f"x{i}", text=text, label=label)
        for i, (text, label) in enumerate(rows)
    )
    return LabeledCorpus(examples=examples, split_name=split_name)


def zero_model(member_id="m"):
    return MemberModel(
        member_id=member_id, weights=np.zeros(HASH_DIM, dtype=np.float64), bias=0.0
    )


class TestFeaturize:
    def test_unigrams_plus_bigrams(self):
        fv = featurize("I am scared")
        # 3 unigrams + 2 bigrams, all distinct
        assert len(fv) == 5
        np.testing.assert_array_equal(fv.values, np.ones(5))

    def test_counts_accumulate(self):
        fv = featurize("go go go")
        # unigram 'go' x3 and bigram 'go go' x2
        assert len(fv) == 2
        assert sorted(fv.values.tolist()) == [2.0, 3.0]

    def test_case_folding(self):
        a = featurize("Hit HIT hit")
        b = featurize("hit hit hit")
        np.testing.assert_array_equal(a.indices, b.indices)
        np.testing.assert_array_equal(a.values, b.values)

    def test_punctuation_splits_tokens(self):
        # can't -> can, t; trailing ! dropped
        a = featurize("can't stop!")
        b = featurize("can t stop")
        np.testing.assert_array_equal(a.indices, b.indices)

    def test_whitespace_variants_equivalent(self):
        a = featurize("one two\tthree")
        b = featurize("one two three")
        np.testing.assert_array_equal(a.indices, b.indices)

    def test_indices_sorted_unique_in_range(self):
        fv = featurize("the quick brown fox jumps over the lazy dog again and again")
        assert (np.diff(fv.indices) > 0).all()
        assert fv.indices.min() >= 0
        assert fv.indices.max() < HASH_DIM

    def test_deterministic(self):
        a = featurize("same text £ twice 🙂")
        b = featurize("same text £ twice 🙂")
        np.testing.assert_array_equal(a.indices, b.indices)
        np.testing.assert_array_equal(a.values, b.values)

    def test_empty_text_gives_empty_vector(self):
        assert len(featurize("!!!")) == 0


class TestLossAndGradient:
    def test_zero_model_loss_is_log2(self):
        model = zero_model()
        batch = [(featurize("some words here"), POS), (featurize("other words"), NEG)]
        loss, _ = loss_and_gradient(model, batch, l2=0.0)
        assert loss == pytest.approx(math.log(2.0))

    def test_l2_term_and_gradient_on_inactive_coords(self):
        weights = np.zeros(HASH_DIM)
        weights[7] = 2.0  # inactive for this batch
        model = MemberModel(member_id="m", weights=weights, bias=0.0)
        fv = featurize("hello world")
        assert 7 not in fv.indices.tolist()
        loss, grad = loss_and_gradient(model, [(fv, POS)], l2=0.5)
        # penalty 0.5 * l2 * w^2 = 0.5 * 0.5 * 4
        base_loss, _ = loss_and_gradient(zero_model(), [(fv, POS)], l2=0.5)
        assert loss - base_loss == pytest.approx(1.0)
        assert grad[7] == pytest.approx(0.5 * 2.0)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(17)
        texts = ["alpha beta gamma", "beta delta", "gamma epsilon zeta alpha"]
        batch = [
            (featurize(t), POS if i % 2 == 0 else NEG) for i, t in enumerate(texts)
        ]
        weights = np.zeros(HASH_DIM)
        active = sorted({int(i) for fv, _ in batch for i in fv.indices})
        for i in active:
            weights[i] = float(rng.normal(0, 0.5))
        model = MemberModel(member_id="m", weights=weights, bias=float(rng.normal()))
        l2 = 0.01
        _, grad = loss_and_gradient(model, batch, l2)
        h = 1e-6
        for i in active:
            base = model.weights[i]
            model.weights[i] = base + h
            hi, _ = loss_and_gradient(model, batch, l2)
            model.weights[i] = base - h
            lo, _ = loss_and_gradient(model, batch, l2)
            model.weights[i] = base
            fd = (hi - lo) / (2 * h)
            assert grad[i] == pytest.approx(fd, abs=1e-6)
        # bias coordinate sits at the end of the gradient vector
        hi, _ = loss_and_gradient(dataclasses.replace(model, bias=model.bias + h), batch, l2)
        lo, _ = loss_and_gradient(dataclasses.replace(model, bias=model.bias - h), batch, l2)
        assert grad[HASH_DIM] == pytest.approx((hi - lo) / (2 * h), abs=1e-6)

    def test_stable_for_extreme_scores(self):
        weights = np.zeros(HASH_DIM)
        fv = featurize("boom")
        weights[fv.indices] = 500.0
        model = MemberModel(member_id="m", weights=weights, bias=100.0)
        loss, grad = loss_and_gradient(model, [(fv, NEG)], l2=0.0)
        assert math.isfinite(loss)
        assert np.isfinite(grad).all()

    def test_empty_batch_rejected(self):
        with pytest.raises(ValidationError, match="non-empty"):
            loss_and_gradient(zero_model(), [], l2=0.0)


TRAIN_ROWS = [
    ("danger threat harm tonight", POS),
    ("threat danger looming harm", POS),
    ("harm danger threat again", POS),
    ("danger harm threat always", POS),
    ("calm safe quiet evening", NEG),
    ("safe calm quiet walk", NEG),
    ("quiet safe calm night", NEG),
    ("calm quiet safe morning", NEG),
]

VAL_ROWS = [
    ("danger threat now", POS),
    ("harm threat danger", POS),
    ("safe calm here", NEG),
    ("quiet calm safe", NEG),
]


class TestTraining:
    def test_separable_toy_reaches_perfect_f1(self):
        model, history = train_member(
            make_corpus(TRAIN_ROWS), make_corpus(VAL_ROWS), TrainConfig(epochs=3, seed=0)
        )
        assert max(r.f1 for r in history.records) == 1.0
        table = predict_proba(model, make_corpus(VAL_ROWS))
        assert table.hard_label("x0") is POS
        assert table.hard_label("x2") is NEG

    def test_bit_deterministic_for_fixed_seed(self):
        config = TrainConfig(epochs=4, seed=123)
        model_a, history_a = train_member(make_corpus(TRAIN_ROWS), make_corpus(VAL_ROWS), config)
        model_b, history_b = train_member(make_corpus(TRAIN_ROWS), make_corpus(VAL_ROWS), config)
        np.testing.assert_array_equal(model_a.weights, model_b.weights)
        assert model_a.bias == model_b.bias
        assert [(r.f1, r.accuracy) for r in history_a.records] == [
            (r.f1, r.accuracy) for r in history_b.records
        ]

    def test_seed_changes_trajectory(self):
        corpus = make_corpus(TRAIN_ROWS)
        val = make_corpus(VAL_ROWS)
        model_a, _ = train_member(corpus, val, TrainConfig(epochs=1, seed=0))
        model_b, _ = train_member(corpus, val, TrainConfig(epochs=1, seed=1))
        assert not np.array_equal(model_a.weights, model_b.weights)

    def test_history_shape(self):
        _, history = train_member(
            make_corpus(TRAIN_ROWS), make_corpus(VAL_ROWS),
            TrainConfig(epochs=5, seed=0), member_id="m3",
        )
        assert history.member_id == "m3"
        assert [r.epoch for r in history.records] == [0, 1, 2, 3, 4]
        for record in history.records:
            assert 0.0 <= record.f1 <= 1.0
            assert 0.0 <= record.accuracy <= 1.0

    def test_returned_model_is_best_epoch_snapshot(self):
        config = TrainConfig(epochs=5, seed=0, selection_metric=MetricKind.ACCURACY)
        model, history = train_member(make_corpus(TRAIN_ROWS), make_corpus(VAL_ROWS), config)
        best = select_best_epoch(history, MetricKind.ACCURACY)
        np.testing.assert_array_equal(model.weights, history.records[best].model.weights)

    def test_single_class_training_rejected(self):
        rows = [(t, POS) for t, _ in TRAIN_ROWS]
        with pytest.raises(TrainingError, match="both classes"):
            train_member(make_corpus(rows), make_corpus(VAL_ROWS), TrainConfig(epochs=1))

    def test_unlabeled_corpus_rejected(self):
        unlabeled = LabeledCorpus(
            examples=(LabeledExample(id="u", text="hi there", label=None),)
        )
        with pytest.raises(ValidationError, match="labeled"):
            train_member(unlabeled, make_corpus(VAL_ROWS), TrainConfig(epochs=1))

    def test_config_validation(self):
        with pytest.raises(ValidationError):
            TrainConfig(epochs=0)
        with pytest.raises(ValidationError):
            TrainConfig(learning_rate=0.0)
        with pytest.raises(ValidationError):
            TrainConfig(l2=-1e-4)
        with pytest.raises(ValidationError):
            TrainConfig(selection_metric=MetricKind.PRECISION)


class TestSelectBestEpoch:
    def history_from(self, f1s, accs=None):
        model = zero_model()
        accs = accs if accs is not None else [0.5] * len(f1s)
        records = tuple(
            EpochRecord(epoch=i, f1=f, accuracy=a, model=model)
            for i, (f, a) in enumerate(zip(f1s, accs))
        )
        return EpochHistory(member_id="m", records=records)

    def test_earliest_tie_wins(self):
        history = self.history_from([0.5, 0.8, 0.8, 0.7])
        assert select_best_epoch(history, MetricKind.F1) == 1

    def test_metrics_disagree(self):
        history = self.history_from([0.2, 0.6], accs=[0.95, 0.90])
        assert select_best_epoch(history, MetricKind.F1) == 1
        assert select_best_epoch(history, MetricKind.ACCURACY) == 0

    def test_random_histories_match_linear_scan(self):
        rng = np.random.default_rng(31)
        model = zero_model()
        grid = [0.0, 0.25, 0.5, 0.75, 1.0]
        for _ in range(300):
            n = int(rng.integers(1, 9))
            f1s = [grid[int(i)] for i in rng.integers(0, len(grid), n)]
            records = tuple(
                EpochRecord(epoch=i, f1=f, accuracy=0.5, model=model)
                for i, f in enumerate(f1s)
            )
            history = EpochHistory(member_id="m", records=records)
            oracle = min(i for i, v in enumerate(f1s) if v == max(f1s))
            assert select_best_epoch(history, MetricKind.F1) == oracle

    def test_empty_history_rejected(self):
        history = EpochHistory(member_id="m", records=())
        with pytest.raises(ValidationError, match="empty"):
            select_best_epoch(history, MetricKind.F1)

    def test_non_contiguous_epochs_rejected(self):
        model = zero_model()
        records = (
            EpochRecord(epoch=0, f1=0.5, accuracy=0.5, model=model),
            EpochRecord(epoch=2, f1=0.6, accuracy=0.5, model=model),
        )
        with pytest.raises(ValidationError, match="contiguous"):
            EpochHistory(member_id="m", records=records)


class TestPredictProba:
    def test_open_interval_even_for_saturated_scores(self):
        weights = np.zeros(HASH_DIM)
        fv = featurize("boom")
        weights[fv.indices] = 10_000.0
        model = MemberModel(member_id="m", weights=weights, bias=0.0)
        corpus = LabeledCorpus(
            examples=(
                LabeledExample(id="hi", text="boom", label=None),
                LabeledExample(id="lo", text="unrelated words", label=None),
            )
        )
        table = predict_proba(model, corpus)
        assert 0.0 < table.entries["hi"] < 1.0
        assert table.entries["hi"] > 0.999999
        low_model = MemberModel(member_id="m", weights=-weights, bias=0.0)
        low = predict_proba(low_model, corpus)
        assert 0.0 < low.entries["hi"] < 1.0

    def test_covers_corpus_in_order(self):
        model = zero_model()
        corpus = make_corpus(VAL_ROWS)
        table = predict_proba(model, corpus)
        assert list(table.entries) == list(corpus.ids)
        np.testing.assert_allclose(list(table.entries.values()), 0.5)


class TestModelSnapshot:
    def test_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(19)
        weights = np.zeros(HASH_DIM)
        idx = rng.choice(HASH_DIM, size=200, replace=False)
        weights[idx] = rng.normal(0, 3, size=200)
        model = MemberModel(member_id="member\twith tab", weights=weights, bias=-0.75)
        path = tmp_path / "m.txt"
        save_model(model, path)
        loaded = load_model(path)
        assert loaded.member_id == model.member_id
        assert loaded.bias == model.bias
        np.testing.assert_array_equal(loaded.weights, model.weights)

    def test_save_is_deterministic(self, tmp_path):
        model, _ = train_member(
            make_corpus(TRAIN_ROWS), make_corpus(VAL_ROWS), TrainConfig(epochs=2, seed=0)
        )
        save_model(model, tmp_path / "a.txt")
        save_model(model, tmp_path / "b.txt")
        assert (tmp_path / "a.txt").read_bytes() == (tmp_path / "b.txt").read_bytes()

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "m.txt"
        path.write_text("something-else\tv1\n")
        with pytest.raises(ParseError, match="snapshot"):
            load_model(path)

    def test_wrong_row_count_rejected(self, tmp_path):
        path = tmp_path / "m.txt"
        path.write_text(
            "softvote-model\tv1\nmember_id\tm\ndim\t262144\nbias\t0.0\nnnz\t2\n5\t1.0\n"
        )
        with pytest.raises(ParseError, match="weight rows"):
            load_model(path)

    def test_wrong_dim_rejected(self, tmp_path):
        path = tmp_path / "m.txt"
        path.write_text("softvote-model\tv1\nmember_id\tm\ndim\t1024\nbias\t0.0\nnnz\t0\n")
        with pytest.raises(ValidationError, match="dimension"):
            load_model(path)

    def test_out_of_range_index_rejected(self, tmp_path):
        path = tmp_path / "m.txt"
        path.write_text(
            "softvote-model\tv1\nmember_id\tm\ndim\t262144\nbias\t0.0\nnnz\t1\n262144\t1.0\n"
        )
        with pytest.raises(ValidationError, match="out of range"):
            load_model(path)


class TestProbabilityFiles:
    def test_round_trip_exact(self, tmp_path):
        entries = {"a": 0.1234567890123456, "b\tc": 0.5, "d": 1e-300}
        table = ProbabilityTable(member_id="m0", entries=entries)
        path = tmp_path / "m0.tsv"
        save_probabilities(table, path)
        loaded = load_external_probabilities(path)
        assert loaded.member_id == "m0"  # defaults to the file stem
        assert loaded.entries == entries

    def test_member_id_override(self, tmp_path):
        path = tmp_path / "whatever.tsv"
        save_probabilities(ProbabilityTable(member_id="x", entries={"a": 0.5}), path)
        assert load_external_probabilities(path, member_id="m7").member_id == "m7"

    def test_decimal_noise_clamped(self, tmp_path):
        path = tmp_path / "p.tsv"
        path.write_text("id\tprob_positive\na\t1.0000000000001e0\nb\t-1e-13\n")
        table = load_external_probabilities(path)
        assert table.entries["a"] == 1.0
        assert table.entries["b"] == 0.0

    def test_out_of_range_value_names_id_and_line(self, tmp_path):
        path = tmp_path / "p.tsv"
        path.write_text("id\tprob_positive\tok\nbad\t1.2\n")
        path.write_text("id\tprob_positive\ngood\t0.5\nbad\t1.2\n")
        with pytest.raises(ValidationError, match=r"p\.tsv:3.*'bad'"):
            load_external_probabilities(path)

    def test_nan_rejected(self, tmp_path):
        path = tmp_path / "p.tsv"
        path.write_text("id\tprob_positive\na\tnan\n")
        with pytest.raises(ValidationError, match="outside"):
            load_external_probabilities(path)

    def test_unparseable_value_is_parse_error(self, tmp_path):
        path = tmp_path / "p.tsv"
        path.write_text("id\tprob_positive\na\tabc\n")
        with pytest.raises(ParseError, match=r"p\.tsv:2"):
            load_external_probabilities(path)

    def test_duplicate_id_rejected(self, tmp_path):
        path = tmp_path / "p.tsv"
        path.write_text("id\tprob_positive\na\t0.5\na\t0.6\n")
        with pytest.raises(ValidationError, match="duplicate"):
            load_external_probabilities(path)
