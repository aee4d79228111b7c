from dataclasses import dataclass
from typing import Optional

from causalflow.models.flow import QueryBank
from causalflow.models.parameter_store import ParameterStore
from causalflow.schemas.decoder.config import DecoderConfig
from causalflow.schemas.encoder.config import EncoderConfig
from causalflow.schemas.planner.plan import PlannerConfig
from causalflow.schemas.tokenizer.config import TokenizerConfig


@dataclass
class CausalFlowModel:
    """Configs plus every parameter of tokenizer, encoder, query bank and decoder"""

    tokenizer: TokenizerConfig
    encoder: EncoderConfig
    decoder: DecoderConfig
    planner: PlannerConfig
    store: ParameterStore

    @property
    def queries(self) -> Optional[QueryBank]:
        """None for the raster baseline, which has no flow queries"""
        if "queries.global" not in self.store:
            return None
        return QueryBank(
            query_global=self.store["queries.global"],
            query_local=self.store["queries.local"],
        )

    @property
    def dtype(self):
        return self.store.dtype
