"""
causalflow.numerics.tensor
~~~~~~~~~~~~~~~~~~~~~~~~~~

dense tensors with a recorded graph for reverse-mode differentiation
"""

import threading
from contextlib import contextmanager
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from causalflow.numerics.numerics_errors import GraphError, ShapeError

DTYPES = {"single": np.float32, "double": np.float64}

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]

_state = threading.local()


def is_recording() -> bool:
    return getattr(_state, "recording", True)


@contextmanager
def no_grad() -> Iterator[None]:
    """Evaluate without recording a graph (thread-local)"""
    previous = is_recording()
    _state.recording = False
    try:
        yield
    finally:
        _state.recording = previous


def resolve_dtype(name: str) -> np.dtype:
    try:
        return np.dtype(DTYPES[name])
    except KeyError:
        raise ShapeError(f"Unknown dtype '{name}', pick one of {sorted(DTYPES)}")


class Tensor:
    """
    A row-major array of reals plus the bookkeeping needed to send gradients
    back to whatever produced it.
    """

    __slots__ = ("data", "requires_grad", "parents", "backward_fn", "grad")

    def __init__(
        self,
        data: np.ndarray,
        requires_grad: bool = False,
        parents: Tuple["Tensor", ...] = (),
        backward_fn: Optional[BackwardFn] = None,
    ):
        data = np.asarray(data)
        if not data.flags.c_contiguous:
            data = np.ascontiguousarray(data)
        if data.dtype not in (np.float32, np.float64):
            raise ShapeError(f"Tensor dtype must be float32 or float64, got {data.dtype}")
        self.data = data
        self.requires_grad = requires_grad
        self.parents = parents
        self.backward_fn = backward_fn
        self.grad: Optional[np.ndarray] = None

    @classmethod
    def constant(cls, values: np.ndarray, dtype: np.dtype = np.float32) -> "Tensor":
        return cls(np.asarray(values, dtype=dtype))

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def is_leaf(self) -> bool:
        return not self.parents

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single value, tensor has shape {self.shape}")
        return float(self.data.reshape(()))

    def numpy(self) -> np.ndarray:
        return self.data

    def backward(self) -> None:
        """
        Populate gradients on every reachable leaf that requires them.

        Gradients accumulate: calling backward twice on the same graph without
        zeroing doubles them.
        """
        if self.data.size != 1:
            raise GraphError(f"backward needs a scalar loss, got shape {self.shape}")
        if not self.requires_grad:
            raise GraphError("backward through a value with no recorded graph")

        order = _topological_order(self)
        pending: Dict[int, np.ndarray] = {id(self): np.ones_like(self.data)}
        for node in reversed(order):
            grad = pending.pop(id(node), None)
            if grad is None:
                continue
            if node.is_leaf:
                if node.grad is None:
                    node.grad = np.zeros_like(node.data)
                node.grad += grad
                continue
            if node.backward_fn is None:
                continue
            for parent, parent_grad in zip(node.parents, node.backward_fn(grad)):
                if parent_grad is None or not parent.requires_grad:
                    continue
                key = id(parent)
                if key in pending:
                    pending[key] = pending[key] + parent_grad
                else:
                    pending[key] = parent_grad

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, requires_grad={self.requires_grad})"


class Parameter(Tensor):
    """A named trainable leaf belonging to one of the model's groups"""

    __slots__ = ("name", "group")

    def __init__(self, data: np.ndarray, name: str, group: str, trainable: bool = True):
        super().__init__(data, requires_grad=trainable)
        self.name = name
        self.group = group
        self.grad = np.zeros_like(self.data)

    @property
    def trainable(self) -> bool:
        return self.requires_grad

    @trainable.setter
    def trainable(self, flag: bool) -> None:
        self.requires_grad = flag
        self.zero_gradient()

    def zero_gradient(self) -> None:
        self.grad = np.zeros_like(self.data)

    def __repr__(self) -> str:
        return f"Parameter(name={self.name!r}, group={self.group!r}, shape={self.shape}, trainable={self.trainable})"


def zero_gradients(params: Sequence[Parameter]) -> None:
    for param in params:
        param.zero_gradient()


def _topological_order(root: Tensor) -> List[Tensor]:
    order: List[Tensor] = []
    seen = set()
    stack: List[Tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node.parents:
            if parent.requires_grad and id(parent) not in seen:
                stack.append((parent, False))
    return order
