"""
building, resetting and restoring the full tokenizer/encoder/decoder model
"""

import logging
from typing import Optional

import numpy as np

from causalflow.models.causalflow_model import CausalFlowModel
from causalflow.models.checkpoint import Checkpoint
from causalflow.models.parameter_store import ParameterStore
from causalflow.numerics.tensor import resolve_dtype
from causalflow.schemas.decoder.config import DecoderConfig
from causalflow.schemas.run.config import RunConfig
from causalflow.services import decoder_service, encoder_service, tokenizer_service
from causalflow.utils.general import derive_seed

log = logging.getLogger("causalflow")


def lightweight_decoder(cfg: RunConfig) -> DecoderConfig:
    """The shallow decoder paired with the encoder during pretraining"""
    layers = cfg.training.stage1_decoder_layers
    if layers == 0 or layers == cfg.decoder.layers:
        return cfg.decoder
    return cfg.decoder.model_copy(update={"layers": layers})


def build_model(cfg: RunConfig, seed: int, decoder: Optional[DecoderConfig] = None) -> CausalFlowModel:
    decoder = decoder or cfg.decoder
    store = ParameterStore(resolve_dtype(cfg.training.dtype))
    tokenizer_service.init_tokenizer(store, cfg.tokenizer, np.random.default_rng(derive_seed(seed, "tokenizer")))
    encoder_service.init_encoder(store, cfg.encoder, np.random.default_rng(derive_seed(seed, "encoder")))
    if cfg.encoder.mode == "causal_flow":
        encoder_service.init_query_bank(
            store, cfg.encoder, cfg.planner, np.random.default_rng(derive_seed(seed, "queries"))
        )
    decoder_service.init_decoder(store, decoder, cfg.encoder.d, np.random.default_rng(derive_seed(seed, "decoder")))
    model = CausalFlowModel(
        tokenizer=cfg.tokenizer, encoder=cfg.encoder, decoder=decoder, planner=cfg.planner, store=store
    )
    log.info("built %s model with %d parameters (%d decoder layers)", cfg.encoder.mode, store.count(), decoder.layers)
    return model


def reset_decoder(model: CausalFlowModel, decoder: DecoderConfig, seed: int) -> None:
    """Discard the current decoder and initialise a fresh one; encoder-side parameters are kept"""
    rng = np.random.default_rng(derive_seed(seed, "decoder", decoder.layers))
    decoder_service.reset_decoder(model.store, decoder, model.encoder.d, rng)
    model.decoder = decoder
    log.info("replaced the decoder with a fresh %d-layer decoder", decoder.layers)


def restore_model(checkpoint: Checkpoint) -> CausalFlowModel:
    cfg = RunConfig.model_validate(checkpoint.configs["run"])
    decoder = DecoderConfig.model_validate(checkpoint.configs["decoder"])
    dtype = next(iter(checkpoint.parameters.values())).dtype if checkpoint.parameters else np.float32
    store = ParameterStore(dtype)
    for name, values in checkpoint.parameters.items():
        param = store.add(name, checkpoint.groups[name], values.copy())
        if checkpoint.trainable is not None:
            param.trainable = checkpoint.trainable[name]
    return CausalFlowModel(
        tokenizer=cfg.tokenizer, encoder=cfg.encoder, decoder=decoder, planner=cfg.planner, store=store
    )
