from typing import Dict, List, Optional

from pydantic import BaseModel, Field


class EvalConfig(BaseModel, extra="forbid"):
    workers: int = Field(default=1, ge=1)
    min_gram: int = Field(default=5, ge=1)
    min_repeats: int = Field(default=4, ge=2)
    holdout_only: bool = True


class SampleResult(BaseModel):
    index: int
    layout: str
    edit_distance: float = Field(ge=0, le=1)
    exact_match: bool
    repeated: bool
    budget: int = 0
    prediction: List[int] = Field(default_factory=list)
    target: List[int] = Field(default_factory=list)
    error: Optional[str] = None


class LayoutAggregate(BaseModel):
    count: int
    mean_edit_distance: float
    exact_match_rate: float
    repetition_rate: float


class EvalAggregate(BaseModel):
    count: int
    mean_edit_distance: float
    exact_match_rate: float
    repetition_rate: float
    failures: int
    max_visual_tokens: int
    by_layout: Dict[str, LayoutAggregate] = Field(default_factory=dict)


class EvalReport(BaseModel):
    config_digest: str
    samples: List[SampleResult] = Field(default_factory=list)
    aggregate: EvalAggregate
