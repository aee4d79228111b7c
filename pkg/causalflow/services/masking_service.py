"""
dual-stream attention masks and the attention kernels that honour them
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from causalflow.models.configuration_error import ConfigurationError
from causalflow.models.mask import DualStreamMask
from causalflow.models.mask_errors import MaskIndexError
from causalflow.numerics import ops
from causalflow.numerics.numerics_errors import ShapeError
from causalflow.numerics.tensor import Tensor

QKV = Tuple[Tensor, Tensor, Tensor]

ACCUMULATE = np.float64


@dataclass
class AttentionStats:
    """Counts query-key score evaluations actually performed"""

    score_evaluations: int = 0


def allows(mask: DualStreamMask, i: int, j: int) -> bool:
    if not (0 <= i < mask.size and 0 <= j < mask.size):
        raise MaskIndexError(f"({i}, {j}) outside a {mask.size}x{mask.size} mask")
    if i < mask.m:
        return j < mask.m
    return j < mask.m or j <= i


def materialize(mask: DualStreamMask, max_seq: Optional[int] = None) -> np.ndarray:
    if max_seq is not None and mask.size > max_seq:
        raise ConfigurationError(f"Mask of {mask.size} positions exceeds max_seq {max_seq}")
    full = np.zeros((mask.size, mask.size), dtype=bool)
    full[: mask.m, : mask.m] = True
    full[mask.m :, : mask.m] = True
    full[mask.m :, mask.m :] = np.tri(mask.n, dtype=bool)
    return full


def causal_matrix(size: int) -> np.ndarray:
    """Plain lower-triangular mask used by the decoder"""
    return np.tri(size, dtype=bool)


def format_mask(mask: DualStreamMask) -> str:
    """One text row of 0/1 per mask row"""
    full = materialize(mask)
    return "\n".join("".join("1" if v else "0" for v in row) for row in full)


def _default_scale(head_dim: int, scale: Optional[float]) -> float:
    return 1.0 / np.sqrt(head_dim) if scale is None else scale


def _wide(*tensors: Tensor) -> Tuple[Tensor, ...]:
    return tuple(ops.cast(t, ACCUMULATE) for t in tensors)


def attention(q: Tensor, k: Tensor, v: Tensor, allowed: np.ndarray, scale: float) -> Tensor:
    """
    softmax(scale * q k^T over allowed pairs) v, evaluated densely. Scores,
    softmax and the value sum run in float64; the result has q's dtype.
    """
    dtype = q.dtype
    q, k, v = _wide(q, k, v)
    logits = ops.scale(ops.matmul(q, ops.transpose(k)), scale)
    return ops.cast(ops.matmul(ops.masked_softmax(logits, allowed), v), dtype)


def masked_attention(
    q: Tensor, k: Tensor, v: Tensor, mask: DualStreamMask, scale: Optional[float] = None
) -> Tensor:
    if not (q.shape[0] == k.shape[0] == v.shape[0] == mask.size):
        raise ShapeError(f"q/k/v rows {q.shape[0]}/{k.shape[0]}/{v.shape[0]} do not match mask size {mask.size}")
    return attention(q, k, v, materialize(mask), _default_scale(q.shape[1], scale))


def bidirectional_attention(
    q: Tensor, k: Tensor, v: Tensor, scale: Optional[float] = None, stats: Optional[AttentionStats] = None
) -> Tensor:
    rows = q.shape[0]
    if stats is not None:
        stats.score_evaluations += rows * k.shape[0]
    allowed = np.ones((rows, k.shape[0]), dtype=bool)
    return attention(q, k, v, allowed, _default_scale(q.shape[1], scale))


def block_attention(
    visual_qkv: QKV,
    query_qkv: QKV,
    scale: Optional[float] = None,
    stats: Optional[AttentionStats] = None,
) -> Tuple[Tensor, Tensor]:
    """
    Dual-stream attention without materializing the (m+n)^2 mask.

    Visual rows attend over visual keys only. Query rows attend over every
    visual key plus the query keys at or before their own index; the
    lower-triangular query scores are evaluated pair by pair so masked pairs
    are never scored.
    """
    qv, kv, vv = visual_qkv
    qq, kq, vq = query_qkv
    head_dim = qv.shape[1]
    if any(t.shape[1] != head_dim for t in (kv, vv, qq, kq, vq)):
        raise ShapeError("Visual and query streams must share the head width")
    m, n = qv.shape[0], qq.shape[0]
    scale = _default_scale(head_dim, scale)

    visual_out = bidirectional_attention(qv, kv, vv, scale, stats)

    dtype = qq.dtype
    qq, kq, vq, kv, vv = _wide(qq, kq, vq, kv, vv)
    prefix = ops.scale(ops.matmul(qq, ops.transpose(kv)), scale)
    rows, cols = np.tril_indices(n)
    pair_scores = ops.scale(ops.rowwise_dot(ops.take_rows(qq, rows), ops.take_rows(kq, cols)), scale)
    causal = ops.scatter(pair_scores, rows, cols, (n, n))
    allowed = np.concatenate([np.ones((n, m), dtype=bool), np.tri(n, dtype=bool)], axis=1)
    probs = ops.masked_softmax(ops.concat([prefix, causal], axis=1), allowed)
    query_out = ops.cast(ops.matmul(probs, ops.concat([vv, vq], axis=0)), dtype)

    if stats is not None:
        stats.score_evaluations += n * m + rows.size
    return visual_out, query_out
