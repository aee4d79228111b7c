"""
evaluation measures: normalized edit distance and degenerate-loop detection
"""

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Dict, List, Sequence, Tuple

import Levenshtein

from causalflow.core.config import settings
from causalflow.models.document import Sample
from causalflow.models.training_errors import EmptyDatasetError
from causalflow.schemas.decoder.config import GenerationSettings
from causalflow.schemas.metrics.report import (
    EvalAggregate,
    EvalConfig,
    EvalReport,
    LayoutAggregate,
    SampleResult,
)
from causalflow.utils.general import write_text_atomic

log = logging.getLogger("causalflow")

# (sample, settings) -> (predicted ids, visual tokens used)
Recognizer = Callable[[Sample, GenerationSettings], Tuple[List[int], int]]


def edit_distance(a: Sequence[int], b: Sequence[int]) -> float:
    """Levenshtein distance over token ids, normalized by the longer length"""
    return Levenshtein.distance(list(a), list(b)) / max(len(a), len(b), 1)


def _repeats_at(s: Sequence[int], start: int, gram: int, min_repeats: int) -> bool:
    block = s[start : start + gram]
    for r in range(1, min_repeats):
        if s[start + r * gram : start + (r + 1) * gram] != block:
            return False
    return True


def detect_repetition(s: Sequence[int], min_gram: int = 5, min_repeats: int = 4) -> bool:
    """True iff a block of length >= min_gram occurs min_repeats times back to back"""
    s = list(s)
    n = len(s)
    for gram in range(min_gram, n // min_repeats + 1):
        for start in range(0, n - gram * min_repeats + 1):
            if _repeats_at(s, start, gram, min_repeats):
                return True
    return False


def has_trailing_loop(s: Sequence[int], min_gram: int, min_repeats: int) -> bool:
    """detect_repetition restricted to loops that end at the last token"""
    s = list(s)
    n = len(s)
    for gram in range(min_gram, n // min_repeats + 1):
        if _repeats_at(s, n - gram * min_repeats, gram, min_repeats):
            return True
    return False


def strip_specials(ids: Sequence[int], bos: int, eos: int, pad: int) -> List[int]:
    """Drop a leading bos and everything from the first eos on"""
    out = list(ids)
    if out and out[0] == bos:
        out = out[1:]
    if eos in out:
        out = out[: out.index(eos)]
    return [i for i in out if i != pad]


def _score_sample(
    index: int,
    sample: Sample,
    recognizer: Recognizer,
    generation: GenerationSettings,
    eval_cfg: EvalConfig,
    specials: Tuple[int, int, int],
) -> SampleResult:
    target = strip_specials(sample.target, *specials)
    try:
        predicted, budget = recognizer(sample, generation)
    except Exception as exc:
        log.debug("sample %d failed: %s", index, exc)
        return SampleResult(
            index=index,
            layout=sample.layout,
            edit_distance=1.0,
            exact_match=False,
            repeated=False,
            target=target,
            error=f"{type(exc).__name__}: {exc}",
        )
    prediction = strip_specials(predicted, *specials)
    return SampleResult(
        index=index,
        layout=sample.layout,
        edit_distance=edit_distance(prediction, target),
        exact_match=prediction == target,
        repeated=detect_repetition(predicted, eval_cfg.min_gram, eval_cfg.min_repeats),
        budget=budget,
        prediction=prediction,
        target=target,
    )


def _aggregate_of(samples: Sequence[SampleResult]) -> LayoutAggregate:
    count = len(samples)
    return LayoutAggregate(
        count=count,
        mean_edit_distance=sum(s.edit_distance for s in samples) / count,
        exact_match_rate=sum(s.exact_match for s in samples) / count,
        repetition_rate=sum(s.repeated for s in samples) / count,
    )


def aggregate(samples: Sequence[SampleResult]) -> EvalAggregate:
    """Recompute every aggregate from per-sample records"""
    if not samples:
        raise EmptyDatasetError("Cannot aggregate an empty evaluation")
    overall = _aggregate_of(samples)
    layouts: Dict[str, List[SampleResult]] = {}
    for s in samples:
        layouts.setdefault(s.layout, []).append(s)
    return EvalAggregate(
        **overall.model_dump(),
        failures=sum(s.error is not None for s in samples),
        max_visual_tokens=max(s.budget for s in samples),
        by_layout={name: _aggregate_of(layouts[name]) for name in sorted(layouts)},
    )


def evaluate(
    recognizer: Recognizer,
    dataset: Sequence[Sample],
    generation: GenerationSettings,
    eval_cfg: EvalConfig,
    config_digest: str,
    specials: Tuple[int, int, int] = (1, 2, 0),
) -> EvalReport:
    """
    Run the recognizer over every sample. A failing sample is recorded with
    its error and the maximum distance; the run never aborts on it.
    """
    if not dataset:
        raise EmptyDatasetError("Evaluation dataset is empty")

    def score(item):
        return _score_sample(item[0], item[1], recognizer, generation, eval_cfg, specials)

    if eval_cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=eval_cfg.workers) as pool:
            results = list(pool.map(score, enumerate(dataset)))
    else:
        results = [score(item) for item in enumerate(dataset)]

    report = EvalReport(config_digest=config_digest, samples=results, aggregate=aggregate(results))
    log.info(
        "evaluated %d samples: mean ED %.4f, exact match %.3f, repetition %.3f",
        report.aggregate.count,
        report.aggregate.mean_edit_distance,
        report.aggregate.exact_match_rate,
        report.aggregate.repetition_rate,
    )
    return report


def report_lines(report: EvalReport) -> List[str]:
    """One JSON record per sample, then the aggregate block"""
    lines = [s.model_dump_json() for s in report.samples]
    lines.append(report.aggregate.model_dump_json())
    lines.append(json.dumps({"config_digest": report.config_digest}, separators=(",", ":")))
    return lines


def write_report(report: EvalReport, out_dir: str, name: str = settings.REPORT_FILE) -> Path:
    path = Path(out_dir) / name
    write_text_atomic(path, "\n".join(report_lines(report)) + "\n")
    log.debug("wrote report to %s", path)
    return path


def read_report(path: str) -> EvalReport:
    lines = [line for line in Path(path).read_text().splitlines() if line.strip()]
    return EvalReport(
        config_digest=json.loads(lines[-1])["config_digest"],
        samples=[SampleResult.model_validate_json(line) for line in lines[:-2]],
        aggregate=EvalAggregate.model_validate_json(lines[-2]),
    )
