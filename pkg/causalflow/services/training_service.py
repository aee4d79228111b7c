"""
three-stage training: encoder pretraining, query enhancement, decoder continuation
"""

import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from causalflow.core.config import settings
from causalflow.models.causalflow_model import CausalFlowModel
from causalflow.models.checkpoint import Checkpoint, OptimizerState
from causalflow.models.document import Sample
from causalflow.models.training_errors import EmptyDatasetError, TrainingError
from causalflow.numerics import ops
from causalflow.schemas.run.config import RunConfig
from causalflow.schemas.training.stage import StagePlan, StepRecord
from causalflow.services import model_service, optimizer_service, pipeline_service
from causalflow.services.checkpoint_service import checkpoint_of, save_checkpoint
from causalflow.utils.general import derive_seed

log = logging.getLogger("causalflow")


@dataclass
class StageRun:
    """Outcome of one (possibly partial) stage"""

    stage: int
    records: List[StepRecord] = field(default_factory=list)
    optimizer: OptimizerState = field(default_factory=OptimizerState)
    rng_state: Dict[str, Any] = field(default_factory=dict)

    @property
    def step(self) -> int:
        return self.optimizer.step


def _append_metrics(path: Optional[Path], record: StepRecord) -> None:
    if path is None:
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "a") as f:
        f.write(record.model_dump_json() + "\n")


def run_stage(
    plan: StagePlan,
    model: CausalFlowModel,
    dataset: Sequence[Sample],
    seed: int,
    resume: Optional[Checkpoint] = None,
    until: Optional[int] = None,
    metrics_path: Optional[Path] = None,
    log_every: int = 50,
) -> StageRun:
    """
    Train the plan's groups for steps [resume.step, until or plan.steps).
    Groups outside the plan are frozen before the first step and are not
    touched. Batches are drawn from a generator seeded by (seed, stage),
    whose state travels with the checkpoint.
    """
    if not dataset:
        raise EmptyDatasetError("Training dataset is empty")
    model.store.set_trainable(plan.trainable_groups)
    params = [p for p in model.store if p.trainable]

    rng = np.random.default_rng(derive_seed(seed, "batches", plan.stage))
    optimizer = optimizer_service.init_state(plan)
    if resume is not None:
        if resume.stage != plan.stage:
            raise TrainingError(f"Cannot resume stage {plan.stage} from a stage {resume.stage} checkpoint")
        optimizer = resume.optimizer
        rng.bit_generator.state = resume.rng_state
    stop = plan.steps if until is None else min(until, plan.steps)
    if optimizer.step > stop:
        raise TrainingError(f"Checkpoint is at step {optimizer.step}, past the requested stop {stop}")

    run = StageRun(stage=plan.stage, optimizer=optimizer)
    while optimizer.step < stop:
        started = time.perf_counter()
        lr = optimizer_service.cosine_lr(optimizer.step, plan.steps, plan.peak_lr, plan.floor_lr)
        indices = rng.integers(0, len(dataset), size=plan.batch)

        model.store.zero_gradients()
        losses = []
        for index in indices:
            loss = pipeline_service.page_loss(dataset[index], model, plan.stage, int(index))
            losses.append(loss.item())
            ops.scale(loss, 1.0 / plan.batch).backward()
        optimizer_service.clip_gradients(params, plan.clip_norm)
        optimizer_service.adamw_step(params, optimizer, lr)

        record = StepRecord(
            step=optimizer.step,
            stage=plan.stage,
            lr=lr,
            loss=float(np.mean(losses)),
            wall_ms=(time.perf_counter() - started) * 1000.0,
        )
        run.records.append(record)
        _append_metrics(metrics_path, record)
        if optimizer.step % log_every == 0 or optimizer.step == stop:
            log.info("stage %d step %d/%d lr %.3e loss %.4f", plan.stage, optimizer.step, plan.steps, lr, record.loss)

    model.store.zero_gradients()
    run.rng_state = rng.bit_generator.state
    return run


def enter_stage(model: CausalFlowModel, cfg: RunConfig, stage: int, seed: int) -> None:
    """From stage 2 on, the pretraining decoder is replaced by the full decoder"""
    if stage >= 2 and model.decoder != cfg.decoder:
        model_service.reset_decoder(model, cfg.decoder, seed)


def run_schedule(
    cfg: RunConfig,
    dataset: Sequence[Sample],
    seed: int,
    out_dir: Optional[str] = None,
    stages: Sequence[int] = (1, 2, 3),
    model: Optional[CausalFlowModel] = None,
) -> CausalFlowModel:
    """All requested stages back to back; a checkpoint per stage when out_dir is set"""
    if model is None:
        first = stages[0] if stages else 1
        decoder = model_service.lightweight_decoder(cfg) if first == 1 else cfg.decoder
        model = model_service.build_model(cfg, seed, decoder)
    metrics_path = Path(out_dir) / settings.METRICS_FILE if out_dir else None

    for stage in stages:
        enter_stage(model, cfg, stage, seed)
        plan = cfg.training.stage_plan(stage)
        run = run_stage(plan, model, dataset, seed, metrics_path=metrics_path, log_every=cfg.training.log_every)
        if out_dir:
            save_checkpoint(
                str(Path(out_dir) / f"stage{stage}.ckpt"),
                checkpoint_of(model, cfg, run.optimizer, run.rng_state, run.step, stage),
            )
    return model


def read_metrics(path: str) -> List[StepRecord]:
    with open(path) as f:
        return [StepRecord.model_validate(json.loads(line)) for line in f if line.strip()]
