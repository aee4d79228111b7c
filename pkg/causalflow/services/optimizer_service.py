"""
AdamW with a cosine learning-rate schedule and global-norm clipping
"""

import logging
import math
from typing import Sequence

import numpy as np

from causalflow.models.checkpoint import OptimizerState
from causalflow.models.training_errors import ScheduleRangeError
from causalflow.numerics.tensor import Parameter
from causalflow.schemas.training.stage import StagePlan

log = logging.getLogger("causalflow")


def cosine_lr(step: int, total_steps: int, peak: float, floor: float) -> float:
    if total_steps < 0 or not 0 <= step <= total_steps:
        raise ScheduleRangeError(f"Step {step} is outside the schedule [0, {total_steps}]")
    if step == 0:
        return peak
    if step == total_steps:
        return floor
    return floor + 0.5 * (peak - floor) * (1.0 + math.cos(math.pi * step / total_steps))


def init_state(plan: StagePlan) -> OptimizerState:
    return OptimizerState(betas=plan.betas, weight_decay=plan.weight_decay, epsilon=plan.epsilon)


def global_norm(params: Sequence[Parameter]) -> float:
    return math.sqrt(sum(float(np.sum(np.square(p.grad, dtype=np.float64))) for p in params))


def clip_gradients(params: Sequence[Parameter], max_norm: float) -> float:
    """Scale gradients so their global norm is at most max_norm; returns the norm before clipping"""
    norm = global_norm(params)
    if norm > max_norm:
        factor = max_norm / (norm + 1e-12)
        for p in params:
            p.grad *= p.grad.dtype.type(factor)
    return norm


def adamw_step(params: Sequence[Parameter], state: OptimizerState, lr: float) -> None:
    """One decoupled-weight-decay Adam update of every parameter in params"""
    state.step += 1
    beta1, beta2 = state.betas
    correction1 = 1.0 - beta1**state.step
    correction2 = 1.0 - beta2**state.step
    for p in params:
        m = state.first_moment.setdefault(p.name, np.zeros_like(p.data))
        v = state.second_moment.setdefault(p.name, np.zeros_like(p.data))
        m *= beta1
        m += (1.0 - beta1) * p.grad
        v *= beta2
        v += (1.0 - beta2) * np.square(p.grad)
        update = (m / correction1) / (np.sqrt(v / correction2) + state.epsilon)
        if state.weight_decay:
            p.data -= (lr * state.weight_decay * p.data).astype(p.data.dtype)
        p.data -= (lr * update).astype(p.data.dtype)
