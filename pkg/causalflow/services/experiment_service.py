"""
end-to-end runs built from the other services: evaluation of a trained
model, the raster-baseline ablation and the gradient-check suite
"""

import logging
import typing
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from causalflow.models.causalflow_model import CausalFlowModel
from causalflow.models.document import Sample
from causalflow.numerics.gradcheck import grad_check_groups
from causalflow.numerics.tensor import no_grad
from causalflow.schemas.encoder.config import ENCODER_MODES
from causalflow.schemas.metrics.report import EvalReport
from causalflow.schemas.run.config import RunConfig
from causalflow.schemas.synthetic.dataset import LayoutKind
from causalflow.schemas.training.stage import GROUPS
from causalflow.services import metrics_service, model_service, pipeline_service, synthetic_service, training_service
from causalflow.services.masking_service import AttentionStats
from causalflow.utils.general import derive_seed

log = logging.getLogger("causalflow")


def eval_split(samples: Sequence[Sample], cfg: RunConfig) -> List[Sample]:
    if not cfg.eval.holdout_only:
        return list(samples)
    return synthetic_service.split_holdout(samples, cfg.data.holdout)[1]


def evaluate_model(model: CausalFlowModel, stage: int, samples: Sequence[Sample], cfg: RunConfig) -> EvalReport:
    decoder = model.decoder
    return metrics_service.evaluate(
        pipeline_service.ModelRecognizer(model, stage),
        samples,
        cfg.generation,
        cfg.eval,
        cfg.digest(),
        specials=(decoder.bos, decoder.eos, decoder.pad),
    )


def with_mode(cfg: RunConfig, mode: str) -> RunConfig:
    """Same run with the encoder switched to another mode, revalidated"""
    dumped = cfg.model_dump()
    dumped["encoder"]["mode"] = mode
    return RunConfig.model_validate(dumped)


def run_ablation(cfg: RunConfig, samples: Sequence[Sample], out_dir: Optional[str] = None) -> Dict[str, EvalReport]:
    """
    Train and evaluate the causal-flow encoder and the raster baseline on
    the same data with the same seed and token budget.
    """
    train, held = synthetic_service.split_holdout(samples, cfg.data.holdout)
    if not cfg.eval.holdout_only:
        held = list(samples)
    reports: Dict[str, EvalReport] = {}
    for mode in typing.get_args(ENCODER_MODES):
        mode_cfg = with_mode(cfg, mode)
        mode_dir = str(Path(out_dir) / mode) if out_dir else None
        model = training_service.run_schedule(mode_cfg, train, mode_cfg.seed, out_dir=mode_dir)
        reports[mode] = evaluate_model(model, 3, held, mode_cfg)
        if out_dir:
            metrics_service.write_report(reports[mode], out_dir, f"report_{mode}.jsonl")
    return reports


def grad_check_model(cfg: RunConfig, seed: int) -> CausalFlowModel:
    double = cfg.model_copy(update={"training": cfg.training.model_copy(update={"dtype": "double"})})
    model = model_service.build_model(double, seed)
    model.store.set_trainable(GROUPS)
    return model


def grad_check_sample(cfg: RunConfig, seed: int) -> Sample:
    d = cfg.data
    return synthetic_service.generate(
        derive_seed(seed, "grad-check"), LayoutKind.RASTER, d.rows, d.cols, d.vocab, d.density, d.cell_pixels
    )


def grad_check_suite(cfg: RunConfig, seed: int, coordinates: int = 64, stage: int = 2) -> Dict[str, float]:
    """Worst relative error per parameter group of the full encoder+decoder page loss"""
    model = grad_check_model(cfg, seed)
    sample = grad_check_sample(cfg, seed)
    groups = {g: model.store.parameters([g]) for g in GROUPS if model.store.parameters([g])}
    return grad_check_groups(
        lambda: pipeline_service.page_loss(sample, model, stage), groups, coordinates=coordinates, seed=seed
    )


def attention_stats(cfg: RunConfig, seed: int) -> AttentionStats:
    """Score evaluations spent encoding one multi-crop page"""
    model = model_service.build_model(cfg, seed)
    stats = AttentionStats()
    with no_grad():
        pipeline_service.page_flow(pipeline_service.multi_crop_views(grad_check_sample(cfg, seed), model), model, stats)
    return stats
