"""
shared resources between services: pre-norm transformer block pieces
"""

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from causalflow.models.parameter_store import ParameterStore
from causalflow.numerics import ops
from causalflow.numerics.tensor import Parameter, Tensor
from causalflow.services.masking_service import attention, causal_matrix

BLOCK_WEIGHTS = ("wq", "wk", "wv", "wo")
FFN_WEIGHTS = ("w_gate", "w_up", "w_down")


@dataclass
class BlockParams:
    attn_norm: Parameter
    wq: Parameter
    wk: Parameter
    wv: Parameter
    wo: Parameter
    ffn_norm: Parameter
    w_gate: Parameter
    w_up: Parameter
    w_down: Parameter


def init_block(
    store: ParameterStore,
    prefix: str,
    group: str,
    d: int,
    hidden: int,
    rng: np.random.Generator,
    init_scale: float,
) -> None:
    store.ones(f"{prefix}.attn_norm", group, (d,))
    for name in BLOCK_WEIGHTS:
        store.normal(f"{prefix}.{name}", group, (d, d), rng, init_scale)
    store.ones(f"{prefix}.ffn_norm", group, (d,))
    store.normal(f"{prefix}.w_gate", group, (d, hidden), rng, init_scale)
    store.normal(f"{prefix}.w_up", group, (d, hidden), rng, init_scale)
    store.normal(f"{prefix}.w_down", group, (hidden, d), rng, init_scale)


def block_params(store: ParameterStore, prefix: str) -> BlockParams:
    return BlockParams(
        **{name: store[f"{prefix}.{name}"] for name in ("attn_norm", *BLOCK_WEIGHTS, "ffn_norm", *FFN_WEIGHTS)}
    )


def split_heads(h: Tensor, p: BlockParams, heads: int) -> Tuple[List[Tensor], List[Tensor], List[Tensor]]:
    """Project normalized rows to q/k/v and cut each into per-head column slices"""
    width = h.shape[1] // heads
    q, k, v = ops.matmul(h, p.wq), ops.matmul(h, p.wk), ops.matmul(h, p.wv)

    def cut(t: Tensor) -> List[Tensor]:
        return [ops.slice_cols(t, i * width, (i + 1) * width) for i in range(heads)]

    return cut(q), cut(k), cut(v)


def merge_heads(outputs: List[Tensor], p: BlockParams) -> Tensor:
    return ops.matmul(ops.concat(outputs, axis=1), p.wo)


def feed_forward(x: Tensor, p: BlockParams, epsilon: float) -> Tensor:
    """Gated feed-forward on the pre-normed input; returns the residual branch"""
    h = ops.rms_norm(x, p.ffn_norm, epsilon)
    gated = ops.mul(ops.silu(ops.matmul(h, p.w_gate)), ops.matmul(h, p.w_up))
    return ops.matmul(gated, p.w_down)


def positions(table: Parameter, start: int, count: int) -> Tensor:
    return ops.take_rows(table, np.arange(start, start + count))


def causal_block(x: Tensor, p: BlockParams, heads: int, epsilon: float) -> Tensor:
    """One decoder-style block: every position sees itself and what precedes it"""
    h = ops.rms_norm(x, p.attn_norm, epsilon)
    qs, ks, vs = split_heads(h, p, heads)
    allowed = causal_matrix(x.shape[0])
    scale = 1.0 / np.sqrt(qs[0].shape[1])
    x = ops.add(x, merge_heads([attention(q, k, v, allowed, scale) for q, k, v in zip(qs, ks, vs)], p))
    return ops.add(x, feed_forward(x, p, epsilon))
