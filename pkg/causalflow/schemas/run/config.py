from pathlib import Path
from typing import Any, Dict, Optional, Sequence

from dotenv import dotenv_values
from pydantic import BaseModel, Field, ValidationError, model_validator

from causalflow.models.configuration_error import ConfigurationError
from causalflow.schemas.decoder.config import DecoderConfig, GenerationSettings
from causalflow.schemas.encoder.config import EncoderConfig
from causalflow.schemas.metrics.report import EvalConfig
from causalflow.schemas.planner.plan import PlannerConfig
from causalflow.schemas.synthetic.dataset import DatasetConfig
from causalflow.schemas.tokenizer.config import TokenizerConfig
from causalflow.schemas.training.stage import TrainingConfig
from causalflow.utils.general import canonical_json, sha256_hex

# tokens ahead of the glyphs in a target: bos, eos
TARGET_OVERHEAD = 2
SPECIAL_TOKENS = 3
LOCATION_FIELDS = {"out_dir"}


class RunConfig(BaseModel, extra="forbid"):
    seed: int = Field(examples=[0], default=0)
    out_dir: str = Field(examples=["runs/toy"], default="runs/default")
    tokenizer: TokenizerConfig = Field(default_factory=TokenizerConfig)
    encoder: EncoderConfig = Field(default_factory=EncoderConfig)
    decoder: DecoderConfig = Field(default_factory=DecoderConfig)
    generation: GenerationSettings = Field(default_factory=GenerationSettings)
    planner: PlannerConfig = Field(default_factory=PlannerConfig)
    data: DatasetConfig = Field(default_factory=DatasetConfig)
    training: TrainingConfig = Field(default_factory=TrainingConfig)
    eval: EvalConfig = Field(default_factory=EvalConfig)

    @model_validator(mode="after")
    def check_consistency(self) -> "RunConfig":
        tok, enc, dec, plan = self.tokenizer, self.encoder, self.decoder, self.planner
        assert tok.d_out == enc.d, "tokenizer.d_out must equal encoder.d"
        assert tok.channels == 1, "synthetic pages are single-channel, tokenizer.channels must be 1"
        for name, (width, height), count in (
            ("global", plan.global_canvas, plan.n_g),
            ("local", plan.local_canvas, plan.n_l),
        ):
            assert tok.divides(height, width), f"{name} canvas is not divisible by the tokenizer stride {tok.stride}"
            assert tok.token_count(height, width) == count, f"planner count for the {name} view disagrees with the tokenizer"
        longest_view = max(plan.n_g, plan.n_l)
        assert enc.max_seq >= longest_view + enc.query_count(longest_view), "encoder.max_seq is too short"
        assert dec.max_prefix >= self.max_visual_tokens(), "decoder.max_prefix is below the largest token budget"
        assert dec.vocab_size >= self.data.vocab + SPECIAL_TOKENS, "decoder.vocab_size is too small for data.vocab"
        assert (dec.bos, dec.eos, dec.pad) == (1, 2, 0), "synthetic targets use pad=0, bos=1, eos=2"
        assert dec.max_text_len >= self.data.rows * self.data.cols + TARGET_OVERHEAD, "decoder.max_text_len is too short"
        return self

    def max_visual_tokens(self) -> int:
        """Largest prefix the decoder can receive for one page"""
        if self.encoder.mode == "raster":
            return self.planner.budget_bounds[1]
        return self.planner.k_max * self.encoder.query_count(self.planner.n_l) + self.encoder.query_count(self.planner.n_g)

    def content(self) -> Dict[str, Any]:
        """Everything that shapes a run; where its files go is not part of it"""
        return self.model_dump(mode="json", exclude=LOCATION_FIELDS)

    def digest(self) -> str:
        return sha256_hex(canonical_json(self.content()))


def _nest(flat: Dict[str, Any]) -> Dict[str, Any]:
    nested: Dict[str, Any] = {}
    for key, value in flat.items():
        if value is None:
            raise ConfigurationError(f"Config key '{key}' has no value")
        section, _, field = key.strip().partition(".")
        if not field:
            nested[section] = value
            continue
        if "." in field:
            raise ConfigurationError(f"Config key '{key}' nests deeper than one section")
        target = nested.setdefault(section, {})
        if not isinstance(target, dict):
            raise ConfigurationError(f"Config key '{section}' is both a value and a section")
        target[field] = value
    return nested


def load_run_config(path: Optional[str] = None, overrides: Sequence[str] = ()) -> RunConfig:
    """
    Read a key-value run configuration (dotted keys, '#' comments) and apply
    'key=value' overrides on top. Unknown keys are rejected.
    """
    flat: Dict[str, Any] = {}
    if path is not None:
        if not Path(path).is_file():
            raise ConfigurationError(f"Config file {path} does not exist")
        flat.update(dotenv_values(path))
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigurationError(f"Override '{item}' is not key=value")
        flat[key.strip()] = value.strip()

    try:
        return RunConfig.model_validate(_nest(flat))
    except ValidationError as ve:
        first = ve.errors()[0]
        where = ".".join(str(i) for i in first["loc"]) or "config"
        raise ConfigurationError(f"{where}: {first['msg']} ({ve.error_count()} error(s))")
