import typing
from typing import Optional

from pydantic import BaseModel, Field, model_validator


class DecoderConfig(BaseModel, extra="forbid"):
    layers: int = Field(examples=[3], default=3, ge=0)
    heads: int = Field(examples=[4], default=4, ge=1)
    d: int = Field(examples=[64], default=64, ge=1)
    ffn_mult: float = Field(default=2.0, gt=0)
    vocab_size: int = Field(examples=[35], default=35, ge=4)
    max_text_len: int = Field(examples=[80], default=80, ge=2)
    max_prefix: int = Field(examples=[80], default=80, ge=1)
    bos: int = 1
    eos: int = 2
    pad: int = 0
    init_scale: float = Field(default=0.02, gt=0)
    norm_epsilon: float = Field(default=1e-6, ge=0)

    @model_validator(mode="after")
    def check_vocab(self) -> "DecoderConfig":
        assert self.d % self.heads == 0, "decoder.d must be divisible by decoder.heads"
        specials = (self.bos, self.eos, self.pad)
        assert len(set(specials)) == 3, "special ids bos, eos, pad must be distinct"
        assert all(0 <= s < self.vocab_size for s in specials), "special ids must lie inside the vocabulary"
        return self

    @property
    def head_dim(self) -> int:
        return self.d // self.heads

    @property
    def ffn_hidden(self) -> int:
        return max(1, int(round(self.d * self.ffn_mult)))

    @property
    def max_seq(self) -> int:
        return self.max_prefix + self.max_text_len


class GenerationSettings(BaseModel, extra="forbid"):
    max_new_tokens: int = Field(examples=[80], default=80, ge=1)
    decoding: typing.Literal["greedy"] = "greedy"
    repetition_guard: Optional[int] = Field(examples=[4], default=None, ge=2)
    guard_min_gram: int = Field(default=5, ge=1)
