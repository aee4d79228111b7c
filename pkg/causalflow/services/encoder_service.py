"""
causal-flow encoder: a pre-norm transformer over [visual tokens | flow queries]

Visual rows and query rows travel as two streams that share every weight.
Visual rows attend bidirectionally among themselves; query rows see every
visual row and the queries up to their own position. Only the query rows of
the final layer leave the encoder.
"""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from causalflow.models.configuration_error import ConfigurationError
from causalflow.models.flow import VIEW_KINDS, FlowTokens, QueryBank
from causalflow.models.parameter_store import ParameterStore
from causalflow.models.view_errors import DuplicateViewError
from causalflow.numerics import ops
from causalflow.numerics.numerics_errors import ShapeError
from causalflow.numerics.tensor import Tensor
from causalflow.schemas.encoder.config import EncoderConfig
from causalflow.schemas.planner.plan import PlannerConfig
from causalflow.services.helpers import (
    BlockParams,
    block_params,
    feed_forward,
    init_block,
    merge_heads,
    positions,
    split_heads,
)
from causalflow.services.masking_service import AttentionStats, bidirectional_attention, block_attention

log = logging.getLogger("causalflow")

GROUP = "encoder"
QUERY_GROUP = "queries"


def init_encoder(store: ParameterStore, cfg: EncoderConfig, rng: np.random.Generator) -> None:
    store.normal("encoder.positions", GROUP, (cfg.max_seq, cfg.d), rng, cfg.init_scale)
    for layer in range(cfg.layers):
        init_block(store, f"encoder.layer{layer}", GROUP, cfg.d, cfg.ffn_hidden, rng, cfg.init_scale)


def init_query_bank(
    store: ParameterStore, cfg: EncoderConfig, planner: PlannerConfig, rng: np.random.Generator
) -> QueryBank:
    """Zero-mean gaussian queries sized by the view token counts and the query ratio"""
    store.normal("queries.global", QUERY_GROUP, (cfg.query_count(planner.n_g), cfg.d), rng, cfg.init_scale)
    store.normal("queries.local", QUERY_GROUP, (cfg.query_count(planner.n_l), cfg.d), rng, cfg.init_scale)
    return QueryBank(query_global=store["queries.global"], query_local=store["queries.local"])


def _dual_stream_block(
    xv: Tensor, xq: Tensor, p: BlockParams, cfg: EncoderConfig, stats: Optional[AttentionStats]
) -> Tuple[Tensor, Tensor]:
    hv = ops.rms_norm(xv, p.attn_norm, cfg.norm_epsilon)
    hq = ops.rms_norm(xq, p.attn_norm, cfg.norm_epsilon)
    visual_heads = split_heads(hv, p, cfg.heads)
    query_heads = split_heads(hq, p, cfg.heads)
    scale = 1.0 / np.sqrt(cfg.head_dim)

    visual_out, query_out = [], []
    for head in range(cfg.heads):
        ov, oq = block_attention(
            tuple(t[head] for t in visual_heads),
            tuple(t[head] for t in query_heads),
            scale,
            stats,
        )
        visual_out.append(ov)
        query_out.append(oq)

    xv = ops.add(xv, merge_heads(visual_out, p))
    xq = ops.add(xq, merge_heads(query_out, p))
    xv = ops.add(xv, feed_forward(xv, p, cfg.norm_epsilon))
    xq = ops.add(xq, feed_forward(xq, p, cfg.norm_epsilon))
    return xv, xq


def _visual_block(xv: Tensor, p: BlockParams, cfg: EncoderConfig, stats: Optional[AttentionStats]) -> Tensor:
    hv = ops.rms_norm(xv, p.attn_norm, cfg.norm_epsilon)
    qs, ks, vs = split_heads(hv, p, cfg.heads)
    scale = 1.0 / np.sqrt(cfg.head_dim)
    heads = [bidirectional_attention(q, k, v, scale, stats) for q, k, v in zip(qs, ks, vs)]
    xv = ops.add(xv, merge_heads(heads, p))
    return ops.add(xv, feed_forward(xv, p, cfg.norm_epsilon))


def encoder_states(
    visual: Tensor,
    queries: Optional[Tensor],
    cfg: EncoderConfig,
    store: ParameterStore,
    stats: Optional[AttentionStats] = None,
) -> Tuple[List[Tensor], List[Tensor]]:
    """
    Hidden states after the embeddings and after every layer, per stream.
    With queries=None only the visual stream runs (raster mode).
    """
    if visual.shape[1] != cfg.d:
        raise ShapeError(f"Visual tokens have width {visual.shape[1]}, encoder expects {cfg.d}")
    m = visual.shape[0]
    n = 0 if queries is None else queries.shape[0]
    if m + n > cfg.max_seq:
        raise ConfigurationError(f"Sequence of {m + n} positions exceeds encoder.max_seq {cfg.max_seq}")

    table = store["encoder.positions"]
    xv = ops.add(visual, positions(table, 0, m))
    visual_states = [xv]
    if queries is None:
        for layer in range(cfg.layers):
            xv = _visual_block(xv, block_params(store, f"encoder.layer{layer}"), cfg, stats)
            visual_states.append(xv)
        return visual_states, []

    xq = ops.add(queries, positions(table, m, n))
    query_states = [xq]
    for layer in range(cfg.layers):
        xv, xq = _dual_stream_block(xv, xq, block_params(store, f"encoder.layer{layer}"), cfg, stats)
        visual_states.append(xv)
        query_states.append(xq)
    return visual_states, query_states


def encode_view(
    visual: Tensor,
    bank: Optional[QueryBank],
    kind: VIEW_KINDS,
    cfg: EncoderConfig,
    store: ParameterStore,
    view_index: int = 0,
    stats: Optional[AttentionStats] = None,
) -> FlowTokens:
    """Run the stack over one view and keep only the query outputs"""
    m = visual.shape[0]
    if cfg.mode == "raster":
        visual_states, _ = encoder_states(visual, None, cfg, store, stats)
        return FlowTokens(values=visual_states[-1], view_kind=kind, view_index=view_index)

    if bank is None:
        raise ConfigurationError("causal_flow mode needs a query bank")
    queries = bank.for_kind(kind)
    expected = cfg.query_count(m)
    if queries.shape[0] != expected or (cfg.equal_cardinality and queries.shape[0] != m):
        raise ConfigurationError(
            f"{kind} view has {m} visual tokens but the query bank holds {queries.shape[0]} (expected {expected})"
        )
    _, query_states = encoder_states(visual, queries, cfg, store, stats)
    return FlowTokens(values=query_states[-1], view_kind=kind, view_index=view_index)


def assemble_sequence(
    global_flow: FlowTokens, local_flows: Sequence[FlowTokens], global_last: bool = True
) -> Tensor:
    """[local_1 | ... | local_k | global], locals ordered by view_index"""
    indices = [f.view_index for f in local_flows]
    if len(set(indices)) != len(indices):
        raise DuplicateViewError(f"Duplicate local view index in {sorted(indices)}")
    if global_flow.view_kind != "global" or any(f.view_kind != "local" for f in local_flows):
        raise DuplicateViewError("assemble_sequence needs one global view and local views only")
    ordered = [f.values for f in sorted(local_flows, key=lambda f: f.view_index)]
    parts = ordered + [global_flow.values] if global_last else [global_flow.values] + ordered
    sequence = ops.concat(parts, axis=0)
    log.debug("assembled %d local view(s) and the global view into %d flow tokens", len(ordered), sequence.shape[0])
    return sequence
