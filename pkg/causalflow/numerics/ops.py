"""
causalflow.numerics.ops
~~~~~~~~~~~~~~~~~~~~~~~

differentiable operations over Tensor

Every op checks its operands, computes a value with numpy, refuses
non-finite results and, while recording, attaches a closure that maps the
output gradient onto gradients for each parent.
"""

from typing import Optional, Sequence

import numpy as np

from causalflow.numerics.numerics_errors import (
    DegenerateRowError,
    EmptyLossError,
    NonFiniteError,
    ShapeError,
)
from causalflow.numerics.tensor import BackwardFn, Tensor, is_recording


def _result(data: np.ndarray, parents: Sequence[Tensor], backward_fn: BackwardFn) -> Tensor:
    if not np.all(np.isfinite(data)):
        raise NonFiniteError("Operation produced a non-finite value")
    if is_recording() and any(p.requires_grad for p in parents):
        return Tensor(data, requires_grad=True, parents=tuple(parents), backward_fn=backward_fn)
    return Tensor(data)


def _unbroadcast(grad: np.ndarray, shape: Sequence[int]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _check_same_dtype(*tensors: Tensor) -> None:
    dtypes = {t.dtype for t in tensors}
    if len(dtypes) > 1:
        raise ShapeError(f"Mixed dtypes {sorted(str(d) for d in dtypes)}")


def _check_broadcast(a: Tensor, b: Tensor) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"Shapes {a.shape} and {b.shape} do not broadcast")


def add(a: Tensor, b: Tensor) -> Tensor:
    _check_same_dtype(a, b)
    _check_broadcast(a, b)

    def backward(grad: np.ndarray):
        return _unbroadcast(grad, a.shape), _unbroadcast(grad, b.shape)

    return _result(a.data + b.data, (a, b), backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product, with b broadcast over a's leading axes"""
    _check_same_dtype(a, b)
    _check_broadcast(a, b)

    def backward(grad: np.ndarray):
        return _unbroadcast(grad * b.data, a.shape), _unbroadcast(grad * a.data, b.shape)

    return _result(a.data * b.data, (a, b), backward)


def scale(a: Tensor, factor: float) -> Tensor:
    factor = a.dtype.type(factor)

    def backward(grad: np.ndarray):
        return (grad * factor,)

    return _result(a.data * factor, (a,), backward)


def cast(a: Tensor, dtype) -> Tensor:
    """Same values in another float dtype; the identity when it already matches"""
    dtype = np.dtype(dtype)
    if a.dtype == dtype:
        return a

    def backward(grad: np.ndarray):
        return (grad.astype(a.dtype),)

    return _result(a.data.astype(dtype), (a,), backward)


def total(a: Tensor) -> Tensor:
    """Sum of every entry, as a scalar"""

    def backward(grad: np.ndarray):
        return (np.broadcast_to(grad, a.shape).copy(),)

    return _result(np.asarray(a.data.sum(), dtype=a.dtype), (a,), backward)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ShapeError(f"matmul needs two matrices, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul inner extents differ: {a.shape} x {b.shape}")
    _check_same_dtype(a, b)

    def backward(grad: np.ndarray):
        return grad @ b.data.T, a.data.T @ grad

    return _result(a.data @ b.data, (a, b), backward)


def transpose(a: Tensor) -> Tensor:
    if a.data.ndim != 2:
        raise ShapeError(f"transpose needs a matrix, got {a.shape}")

    def backward(grad: np.ndarray):
        return (grad.T,)

    return _result(a.data.T.copy(), (a,), backward)


def silu(a: Tensor) -> Tensor:
    sig = 0.5 * (1.0 + np.tanh(0.5 * a.data))

    def backward(grad: np.ndarray):
        return (grad * sig * (1.0 + a.data * (1.0 - sig)),)

    return _result(a.data * sig, (a,), backward)


def take_rows(a: Tensor, index: np.ndarray) -> Tensor:
    """Rows of a at the given integer positions (repeats allowed)"""
    index = np.asarray(index, dtype=np.int64)
    if a.data.ndim != 2:
        raise ShapeError(f"take_rows needs a matrix, got {a.shape}")
    if index.size and (index.min() < 0 or index.max() >= a.shape[0]):
        raise ShapeError(f"Row index out of range for {a.shape[0]} rows")

    def backward(grad: np.ndarray):
        out = np.zeros_like(a.data)
        np.add.at(out, index, grad)
        return (out,)

    return _result(a.data[index], (a,), backward)


def embedding(table: Tensor, ids: Sequence[int]) -> Tensor:
    return take_rows(table, np.asarray(ids, dtype=np.int64))


def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """x @ weight (+ bias), weight stored as (in, out)"""
    out = matmul(x, weight)
    if bias is not None:
        out = add(out, bias)
    return out


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    """Concatenation; axis 0 is the sequence axis"""
    if not tensors:
        raise ShapeError("concat needs at least one tensor")
    _check_same_dtype(*tensors)
    try:
        data = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as exc:
        raise ShapeError(f"concat shapes disagree: {exc}")
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(grad: np.ndarray):
        return np.split(grad, bounds, axis=axis)

    return _result(data, tuple(tensors), backward)


def slice_rows(a: Tensor, start: int, stop: int) -> Tensor:
    if not 0 <= start <= stop <= a.shape[0]:
        raise ShapeError(f"Row slice [{start}:{stop}] outside {a.shape[0]} rows")

    def backward(grad: np.ndarray):
        out = np.zeros_like(a.data)
        out[start:stop] = grad
        return (out,)

    return _result(a.data[start:stop].copy(), (a,), backward)


def slice_cols(a: Tensor, start: int, stop: int) -> Tensor:
    if a.data.ndim != 2 or not 0 <= start <= stop <= a.shape[1]:
        raise ShapeError(f"Column slice [{start}:{stop}] outside {a.shape}")

    def backward(grad: np.ndarray):
        out = np.zeros_like(a.data)
        out[:, start:stop] = grad
        return (out,)

    return _result(a.data[:, start:stop].copy(), (a,), backward)


def rowwise_dot(a: Tensor, b: Tensor) -> Tensor:
    """out[i] = a[i] . b[i]"""
    if a.shape != b.shape or a.data.ndim != 2:
        raise ShapeError(f"rowwise_dot needs equal matrices, got {a.shape} and {b.shape}")
    _check_same_dtype(a, b)

    def backward(grad: np.ndarray):
        return grad[:, None] * b.data, grad[:, None] * a.data

    return _result(np.einsum("ij,ij->i", a.data, b.data), (a, b), backward)


def scatter(values: Tensor, rows: np.ndarray, cols: np.ndarray, shape: Sequence[int]) -> Tensor:
    """Matrix of the given shape holding values at (rows, cols), zeros elsewhere"""
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    if values.data.ndim != 1 or values.shape[0] != rows.size or rows.size != cols.size:
        raise ShapeError("scatter needs one value per (row, col) pair")
    data = np.zeros(tuple(shape), dtype=values.dtype)
    data[rows, cols] = values.data

    def backward(grad: np.ndarray):
        return (grad[rows, cols].copy(),)

    return _result(data, (values,), backward)


def masked_softmax(logits: Tensor, allowed: np.ndarray) -> Tensor:
    """
    Row softmax restricted to allowed columns.

    Disallowed entries come out exactly 0 and their logits are never read, so
    they may hold anything (including values never computed).
    """
    allowed = np.asarray(allowed, dtype=bool)
    if logits.data.ndim != 2 or allowed.shape != logits.shape:
        raise ShapeError(f"masked_softmax mask {allowed.shape} does not match logits {logits.shape}")
    if not allowed.any(axis=1).all():
        row = int(np.flatnonzero(~allowed.any(axis=1))[0])
        raise DegenerateRowError(f"Row {row} has no allowed column")

    x = logits.data
    row_max = np.where(allowed, x, -np.inf).max(axis=1, keepdims=True)
    shifted = np.where(allowed, x - row_max, 0.0)
    exps = np.where(allowed, np.exp(shifted), 0.0)
    probs = (exps / exps.sum(axis=1, keepdims=True)).astype(x.dtype)

    def backward(grad: np.ndarray):
        inner = (grad * probs).sum(axis=1, keepdims=True)
        return (probs * (grad - inner),)

    return _result(probs, (logits,), backward)


def rms_norm(x: Tensor, gain: Tensor, epsilon: float = 1e-6) -> Tensor:
    """Each length-d slice over the last axis divided by its RMS, times gain"""
    d = x.shape[-1]
    if d < 1 or gain.shape != (d,):
        raise ShapeError(f"rms_norm gain {gain.shape} does not match width {d}")
    _check_same_dtype(x, gain)
    inv = 1.0 / np.sqrt((x.data * x.data).mean(axis=-1, keepdims=True) + epsilon)
    normed = x.data * inv

    def backward(grad: np.ndarray):
        dnormed = grad * gain.data
        dx = inv * (dnormed - normed * (dnormed * normed).mean(axis=-1, keepdims=True))
        dgain = (grad * normed).reshape(-1, d).sum(axis=0)
        return dx, dgain

    return _result((normed * gain.data).astype(x.dtype), (x, gain), backward)


def cross_entropy(logits: Tensor, targets: Sequence[int], ignore_id: int) -> Tensor:
    """Mean negative log-softmax probability over non-ignored positions"""
    targets = np.asarray(targets, dtype=np.int64)
    if logits.data.ndim != 2 or targets.shape != (logits.shape[0],):
        raise ShapeError(f"cross_entropy logits {logits.shape} vs targets {targets.shape}")
    keep = targets != ignore_id
    count = int(keep.sum())
    if count == 0:
        raise EmptyLossError()
    vocab = logits.shape[1]
    if targets[keep].min() < 0 or targets[keep].max() >= vocab:
        raise ShapeError(f"Target id outside vocabulary of {vocab}")

    x = logits.data
    row_max = x.max(axis=1, keepdims=True)
    exps = np.exp(x - row_max)
    sums = exps.sum(axis=1, keepdims=True)
    log_z = (row_max + np.log(sums))[:, 0]
    rows = np.flatnonzero(keep)
    loss = (log_z[rows] - x[rows, targets[rows]]).sum() / count

    def backward(grad: np.ndarray):
        dlogits = exps / sums
        dlogits[rows, targets[rows]] -= 1.0
        dlogits[~keep] = 0.0
        return (dlogits * (grad / count),)

    return _result(np.asarray(loss, dtype=x.dtype), (logits,), backward)
