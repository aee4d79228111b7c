import numpy as np
import pytest

from causalflow.core.config import settings
from causalflow.models.training_errors import EmptyDatasetError
from causalflow.schemas.decoder.config import GenerationSettings
from causalflow.schemas.metrics.report import EvalConfig
from causalflow.services import metrics_service
from causalflow.services.metrics_service import detect_repetition, edit_distance

DIGEST = "0" * 64


def dp_distance(a, b):
    table = np.zeros((len(a) + 1, len(b) + 1), dtype=np.int64)
    table[:, 0] = np.arange(len(a) + 1)
    table[0, :] = np.arange(len(b) + 1)
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            table[i, j] = min(table[i - 1, j] + 1, table[i, j - 1] + 1, table[i - 1, j - 1] + (a[i - 1] != b[j - 1]))
    return table[-1, -1] / max(len(a), len(b), 1)


@pytest.mark.parametrize(
    "a,b,expected",
    [([1, 2, 3], [1, 2, 3], 0.0), ([1, 2, 3], [1, 2, 4], 1 / 3), ([], [], 0.0), ([], [5, 6], 1.0), ([7], [], 1.0)],
)
def test_edit_distance_examples(a, b, expected):
    assert edit_distance(a, b) == pytest.approx(expected)


def test_edit_distance_matches_dynamic_programming(rng):
    for _ in range(1000):
        a = rng.integers(0, 6, size=rng.integers(0, 12)).tolist()
        b = rng.integers(0, 6, size=rng.integers(0, 12)).tolist()
        assert edit_distance(a, b) == pytest.approx(dp_distance(a, b))


def test_edit_distance_is_a_bounded_symmetric_metric(rng):
    for _ in range(200):
        a, b, c = (rng.integers(0, 4, size=8).tolist() for _ in range(3))
        assert edit_distance(a, b) == edit_distance(b, a)
        assert 0.0 <= edit_distance(a, b) <= 1.0
        raw = [metrics_service.Levenshtein.distance(x, y) for x, y in ((a, c), (a, b), (b, c))]
        assert raw[0] <= raw[1] + raw[2]


def test_edit_distance_of_large_ids():
    assert edit_distance([1000, 2000], [1000, 3000]) == 0.5


def test_detect_repetition_examples():
    assert detect_repetition([1, 2, 3, 4, 5] * 4)
    assert not detect_repetition([1, 2, 3, 4, 5] * 3)
    assert not detect_repetition([7] * 3)
    assert detect_repetition([9, 9] + [3, 1, 4, 1, 5, 9] * 4 + [2, 6])
    assert detect_repetition([7] * 4, min_gram=1)


def test_detect_repetition_on_planted_loops():
    rng = np.random.default_rng(9)
    hits = misses = false_alarms = 0
    for case in range(500):
        fresh = iter(rng.permutation(10_000).tolist())
        prefix = [next(fresh) for _ in range(rng.integers(0, 10))]
        suffix = [next(fresh) for _ in range(rng.integers(0, 10))]
        block = [next(fresh) for _ in range(rng.integers(5, 9))]
        if case % 2:
            found = detect_repetition(prefix + block * int(rng.integers(4, 7)) + suffix)
            hits += found
            misses += not found
        else:
            false_alarms += detect_repetition(prefix + block * 3 + suffix)
    assert misses == 0 and false_alarms == 0
    assert hits == 250


def test_repetition_is_invariant_to_loop_free_context():
    loop = [4, 5, 6, 7, 8] * 4
    for prefix, suffix in (([], []), ([1, 2], []), ([], [3]), ([10, 11, 12], [13, 14])):
        assert detect_repetition(prefix + loop + suffix)


def test_trailing_loop_only_at_the_end():
    loop = [4, 5, 6, 7, 8] * 4
    assert metrics_service.has_trailing_loop(loop, 5, 4)
    assert not metrics_service.has_trailing_loop(loop + [1], 5, 4)


def test_strip_specials():
    assert metrics_service.strip_specials([1, 5, 6, 2, 7], bos=1, eos=2, pad=0) == [5, 6]
    assert metrics_service.strip_specials([5, 0, 6], bos=1, eos=2, pad=0) == [5, 6]


def echo(sample, generation):
    return list(sample.target), 52


def constant(sample, generation):
    return [1, 2], 16


def test_evaluate_with_a_perfect_recognizer(tiny_dataset):
    report = metrics_service.evaluate(echo, tiny_dataset, GenerationSettings(), EvalConfig(), DIGEST)
    agg = report.aggregate
    assert (agg.count, agg.mean_edit_distance, agg.exact_match_rate, agg.failures) == (24, 0.0, 1.0, 0)
    assert agg.max_visual_tokens == 52
    assert sum(a.count for a in agg.by_layout.values()) == 24
    assert list(agg.by_layout) == sorted(agg.by_layout)


def test_evaluate_with_a_constant_recognizer(tiny_dataset):
    report = metrics_service.evaluate(constant, tiny_dataset, GenerationSettings(), EvalConfig(), DIGEST)
    assert all(s.edit_distance == (1.0 if s.target else 0.0) for s in report.samples)
    assert report.aggregate.repetition_rate == 0.0


def test_failing_samples_are_recorded_not_raised(tiny_dataset, mocker):
    recognizer = mocker.Mock(side_effect=[echo(s, None) for s in tiny_dataset[:-1]] + [RuntimeError("boom")])
    report = metrics_service.evaluate(recognizer, tiny_dataset, GenerationSettings(), EvalConfig(), DIGEST)
    last = report.samples[-1]
    assert last.error == "RuntimeError: boom"
    assert last.edit_distance == 1.0
    assert report.aggregate.failures == 1
    assert recognizer.call_count == 24


def test_parallel_evaluation_gives_the_same_report(tiny_dataset):
    serial = metrics_service.evaluate(echo, tiny_dataset, GenerationSettings(), EvalConfig(workers=1), DIGEST)
    parallel = metrics_service.evaluate(echo, tiny_dataset, GenerationSettings(), EvalConfig(workers=2), DIGEST)
    assert serial == parallel


def test_aggregate_recomputes_from_samples(tiny_dataset):
    report = metrics_service.evaluate(constant, tiny_dataset, GenerationSettings(), EvalConfig(), DIGEST)
    assert metrics_service.aggregate(report.samples) == report.aggregate
    with pytest.raises(EmptyDatasetError):
        metrics_service.aggregate([])


def test_evaluate_empty_dataset():
    with pytest.raises(EmptyDatasetError):
        metrics_service.evaluate(echo, [], GenerationSettings(), EvalConfig(), DIGEST)


def test_report_round_trip(tiny_dataset, tmp_path):
    report = metrics_service.evaluate(constant, tiny_dataset, GenerationSettings(), EvalConfig(), DIGEST)
    path = metrics_service.write_report(report, str(tmp_path))
    assert path.name == settings.REPORT_FILE
    lines = path.read_text().splitlines()
    assert len(lines) == 24 + 2
    assert lines[-1] == '{"config_digest":"' + DIGEST + '"}'
    assert metrics_service.read_report(str(path)) == report
