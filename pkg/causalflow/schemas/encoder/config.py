import typing

from pydantic import BaseModel, Field, model_validator

ENCODER_MODES = typing.Literal["causal_flow", "raster"]


class EncoderConfig(BaseModel, extra="forbid"):
    layers: int = Field(examples=[2], default=2, ge=0)
    heads: int = Field(examples=[4], default=4, ge=1)
    d: int = Field(examples=[64, 896], default=64, ge=1)
    ffn_mult: float = Field(default=2.0, gt=0)
    max_seq: int = Field(examples=[32], default=32, ge=2)
    equal_cardinality: bool = True
    query_ratio: float = Field(default=1.0, gt=0)
    mode: ENCODER_MODES = "causal_flow"
    init_scale: float = Field(default=0.02, gt=0)
    norm_epsilon: float = Field(default=1e-6, ge=0)

    @model_validator(mode="after")
    def check_shape(self) -> "EncoderConfig":
        assert self.d % self.heads == 0, "encoder.d must be divisible by encoder.heads"
        if self.equal_cardinality:
            assert self.query_ratio == 1.0, "equal cardinality needs encoder.query_ratio == 1"
        return self

    @property
    def head_dim(self) -> int:
        return self.d // self.heads

    @property
    def ffn_hidden(self) -> int:
        return max(1, int(round(self.d * self.ffn_mult)))

    def query_count(self, visual_tokens: int) -> int:
        return max(1, int(round(visual_tokens * self.query_ratio)))
