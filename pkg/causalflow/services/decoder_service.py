"""
toy causal language decoder reading flow tokens as a prefix
"""

import logging
from typing import List, Sequence

import numpy as np

from causalflow.models.configuration_error import ConfigurationError
from causalflow.models.decoder_errors import OverlengthError
from causalflow.models.parameter_store import ParameterStore
from causalflow.numerics import ops
from causalflow.numerics.numerics_errors import EmptyLossError
from causalflow.numerics.tensor import Tensor, no_grad
from causalflow.schemas.decoder.config import DecoderConfig, GenerationSettings
from causalflow.services.helpers import block_params, causal_block, init_block, positions
from causalflow.services.metrics_service import has_trailing_loop

log = logging.getLogger("causalflow")

GROUP = "decoder"


def init_decoder(store: ParameterStore, cfg: DecoderConfig, flow_width: int, rng: np.random.Generator) -> None:
    if flow_width != cfg.d:
        store.normal("decoder.flow_proj", GROUP, (flow_width, cfg.d), rng, cfg.init_scale)
    store.normal("decoder.embed", GROUP, (cfg.vocab_size, cfg.d), rng, cfg.init_scale)
    store.normal("decoder.positions", GROUP, (cfg.max_seq, cfg.d), rng, cfg.init_scale)
    for layer in range(cfg.layers):
        init_block(store, f"decoder.layer{layer}", GROUP, cfg.d, cfg.ffn_hidden, rng, cfg.init_scale)
    store.ones("decoder.final_norm", GROUP, (cfg.d,))
    store.normal("decoder.head", GROUP, (cfg.d, cfg.vocab_size), rng, cfg.init_scale)


def reset_decoder(store: ParameterStore, cfg: DecoderConfig, flow_width: int, rng: np.random.Generator) -> None:
    """Drop every decoder parameter and build a fresh decoder in its place"""
    store.remove_prefix("decoder.")
    init_decoder(store, cfg, flow_width, rng)


def decoder_hidden(flow: Tensor, text: Sequence[int], cfg: DecoderConfig, store: ParameterStore) -> Tensor:
    """Final-normed hidden states over [flow | embed(text)] under a causal mask"""
    q, t = flow.shape[0], len(text)
    if t > cfg.max_text_len:
        raise OverlengthError(f"Text of {t} tokens exceeds max_text_len {cfg.max_text_len}")
    if q > cfg.max_prefix:
        raise OverlengthError(f"Flow prefix of {q} tokens exceeds max_prefix {cfg.max_prefix}")

    prefix = ops.matmul(flow, store["decoder.flow_proj"]) if "decoder.flow_proj" in store else flow
    x = ops.concat([prefix, ops.embedding(store["decoder.embed"], text)], axis=0) if t else prefix
    x = ops.add(x, positions(store["decoder.positions"], 0, q + t))
    for layer in range(cfg.layers):
        x = causal_block(x, block_params(store, f"decoder.layer{layer}"), cfg.heads, cfg.norm_epsilon)
    return ops.rms_norm(x, store["decoder.final_norm"], cfg.norm_epsilon)


def decode_logits(flow: Tensor, text: Sequence[int], cfg: DecoderConfig, store: ParameterStore) -> Tensor:
    """Logits at the text positions; row i predicts text[i + 1]"""
    q = flow.shape[0]
    hidden = decoder_hidden(flow, text, cfg, store)
    return ops.matmul(ops.slice_rows(hidden, q, q + len(text)), store["decoder.head"])


def decode_train(flow: Tensor, text: Sequence[int], cfg: DecoderConfig, store: ParameterStore) -> Tensor:
    """Next-token loss over the text positions only"""
    if len(text) < 2:
        raise EmptyLossError("Text needs at least two tokens to predict anything")
    q = flow.shape[0]
    hidden = decoder_hidden(flow, text, cfg, store)
    logits = ops.matmul(ops.slice_rows(hidden, q, q + len(text) - 1), store["decoder.head"])
    return ops.cross_entropy(logits, list(text[1:]), ignore_id=cfg.pad)


def generate(
    flow: Tensor,
    prompt: Sequence[int],
    settings: GenerationSettings,
    cfg: DecoderConfig,
    store: ParameterStore,
) -> List[int]:
    """Greedy continuation of prompt; returns the new ids, eos included when emitted"""
    if not prompt:
        raise ConfigurationError("Generation needs a prompt holding at least bos")
    sequence = list(prompt)
    produced: List[int] = []
    with no_grad():
        while len(produced) < settings.max_new_tokens and len(sequence) < cfg.max_text_len:
            hidden = decoder_hidden(flow, sequence, cfg, store)
            last = ops.slice_rows(hidden, hidden.shape[0] - 1, hidden.shape[0])
            token = int(np.argmax(ops.matmul(last, store["decoder.head"]).data[0]))
            sequence.append(token)
            produced.append(token)
            if token == cfg.eos:
                break
            if settings.repetition_guard and has_trailing_loop(
                produced, settings.guard_min_gram, settings.repetition_guard
            ):
                log.debug("repetition guard stopped generation after %d tokens", len(produced))
                break
    return produced
