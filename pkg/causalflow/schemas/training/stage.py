import typing
from typing import Tuple

from pydantic import BaseModel, Field, field_validator, model_validator

GROUPS = ("tokenizer", "encoder", "queries", "decoder")

STAGES = typing.Literal[1, 2, 3]


def _parse_pair(v):
    if isinstance(v, str):
        v = [i.strip() for i in v.split(",") if i.strip()]
    return v


class StagePlan(BaseModel, extra="forbid"):
    stage: STAGES
    trainable_groups: Tuple[str, ...]
    peak_lr: float = Field(gt=0)
    floor_lr: float = Field(ge=0)
    steps: int = Field(ge=0)
    batch: int = Field(default=8, ge=1)
    betas: Tuple[float, float] = (0.9, 0.95)
    weight_decay: float = Field(default=0.0, ge=0)
    epsilon: float = Field(default=1e-8, gt=0)
    clip_norm: float = Field(default=1.0, gt=0)

    @field_validator("trainable_groups")
    def validate_groups(cls, v):
        unknown = set(v) - set(GROUPS)
        assert not unknown, f"unknown parameter groups {sorted(unknown)}"
        return tuple(g for g in GROUPS if g in v)

    @model_validator(mode="after")
    def check_freezing(self) -> "StagePlan":
        assert self.floor_lr <= self.peak_lr, "floor_lr must not exceed peak_lr"
        if self.stage == 2:
            assert "tokenizer" not in self.trainable_groups, "stage 2 freezes the vision tokenizer"
        if self.stage == 3:
            assert self.trainable_groups == ("decoder",), "stage 3 trains the decoder only"
        return self

    @classmethod
    def toy(cls, stage: int, **overrides) -> "StagePlan":
        defaults = {
            1: dict(trainable_groups=GROUPS, peak_lr=3e-3, floor_lr=3e-5, steps=2000),
            2: dict(trainable_groups=("encoder", "queries", "decoder"), peak_lr=1.5e-3, floor_lr=3e-5, steps=1000),
            3: dict(trainable_groups=("decoder",), peak_lr=3e-4, floor_lr=1.5e-5, steps=1000),
        }[stage]
        return cls(stage=stage, **{**defaults, **overrides})

    @classmethod
    def full_scale(cls, stage: int) -> "StagePlan":
        defaults = {
            1: dict(trainable_groups=GROUPS, peak_lr=1e-4, floor_lr=1e-6, steps=40000),
            2: dict(trainable_groups=("encoder", "queries", "decoder"), peak_lr=5e-5, floor_lr=1e-6, steps=15000),
            3: dict(trainable_groups=("decoder",), peak_lr=1e-6, floor_lr=5e-8, steps=20000),
        }[stage]
        return cls(stage=stage, **defaults)


class TrainingConfig(BaseModel, extra="forbid"):
    stage1_steps: int = Field(default=2000, ge=0)
    stage2_steps: int = Field(default=1000, ge=0)
    stage3_steps: int = Field(default=1000, ge=0)
    stage1_peak_lr: float = Field(default=3e-3, gt=0)
    stage1_floor_lr: float = Field(default=3e-5, ge=0)
    stage2_peak_lr: float = Field(default=1.5e-3, gt=0)
    stage2_floor_lr: float = Field(default=3e-5, ge=0)
    stage3_peak_lr: float = Field(default=3e-4, gt=0)
    stage3_floor_lr: float = Field(default=1.5e-5, ge=0)
    batch: int = Field(default=8, ge=1)
    betas: Tuple[float, float] = (0.9, 0.95)
    weight_decay: float = Field(default=0.0, ge=0)
    epsilon: float = Field(default=1e-8, gt=0)
    clip_norm: float = Field(default=1.0, gt=0)
    stage1_decoder_layers: int = Field(default=2, ge=0)
    log_every: int = Field(default=50, ge=1)
    dtype: typing.Literal["single", "double"] = "single"

    @field_validator("betas", mode="before")
    def parse_betas(cls, v):
        return _parse_pair(v)

    def stage_plan(self, stage: int) -> StagePlan:
        return StagePlan.toy(
            stage,
            steps=getattr(self, f"stage{stage}_steps"),
            peak_lr=getattr(self, f"stage{stage}_peak_lr"),
            floor_lr=getattr(self, f"stage{stage}_floor_lr"),
            batch=self.batch,
            betas=self.betas,
            weight_decay=self.weight_decay,
            epsilon=self.epsilon,
            clip_norm=self.clip_norm,
        )


class StepRecord(BaseModel):
    step: int
    stage: int
    lr: float
    loss: float
    wall_ms: float = Field(description="excluded from reproducibility comparisons")
