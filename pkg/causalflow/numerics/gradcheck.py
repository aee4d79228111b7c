"""
causalflow.numerics.gradcheck
~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

central finite differences against the recorded backward pass
"""

import logging
from typing import Callable, Dict, Sequence

import numpy as np

from causalflow.numerics.numerics_errors import NumericsError
from causalflow.numerics.tensor import Tensor, no_grad

log = logging.getLogger("causalflow")

MIN_COORDINATES = 64


def relative_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-8)


def _central_difference(fn: Callable[[], Tensor], flat: np.ndarray, index: int, step: float) -> float:
    """(f(x + h) - f(x - h)) / 2h at one coordinate, restoring it afterwards"""
    original = flat[index]
    with no_grad():
        flat[index] = original + step
        plus = fn().item()
        flat[index] = original - step
        minus = fn().item()
    width = (original + step) - (original - step)
    flat[index] = original
    return (plus - minus) / width


def grad_check(
    fn: Callable[[], Tensor],
    inputs: Sequence[Tensor],
    step: float = 1e-5,
    max_coordinates: int = MIN_COORDINATES,
    seed: int = 0,
) -> float:
    """
    Compare backward() against central differences for every input.

    Inputs larger than max_coordinates are subsampled (never below 64
    coordinates). Returns the largest relative error seen.
    """
    if any(t.dtype != np.float64 for t in inputs):
        raise NumericsError("grad_check runs in double precision only")
    max_coordinates = max(max_coordinates, MIN_COORDINATES)
    rng = np.random.default_rng(seed)

    for tensor in inputs:
        tensor.grad = np.zeros_like(tensor.data)
    fn().backward()
    analytic = [tensor.grad.copy() for tensor in inputs]

    worst = 0.0
    for tensor, grads in zip(inputs, analytic):
        flat = tensor.data.reshape(-1)
        if flat.size <= max_coordinates:
            coordinates = np.arange(flat.size)
        else:
            coordinates = np.sort(rng.choice(flat.size, size=max_coordinates, replace=False))
        for index in coordinates:
            numeric = _central_difference(fn, flat, int(index), step)
            worst = max(worst, relative_error(float(grads.reshape(-1)[index]), numeric))
    log.debug("grad_check over %d inputs: max relative error %.3e", len(inputs), worst)
    return worst


def grad_check_groups(
    fn: Callable[[], Tensor],
    groups: Dict[str, Sequence[Tensor]],
    step: float = 1e-5,
    coordinates: int = MIN_COORDINATES,
    seed: int = 0,
) -> Dict[str, float]:
    """
    grad_check with the coordinate budget spread over each named group of
    tensors rather than over each tensor. Returns the worst error per group.
    """
    members = [t for tensors in groups.values() for t in tensors]
    if any(t.dtype != np.float64 for t in members):
        raise NumericsError("grad_check runs in double precision only")
    coordinates = max(coordinates, MIN_COORDINATES)
    rng = np.random.default_rng(seed)

    for tensor in members:
        tensor.grad = np.zeros_like(tensor.data)
    fn().backward()

    worst: Dict[str, float] = {}
    for name, tensors in groups.items():
        sizes = np.array([t.data.size for t in tensors])
        offsets = np.concatenate([[0], np.cumsum(sizes)])
        total = int(offsets[-1])
        picked = np.arange(total) if total <= coordinates else np.sort(rng.choice(total, coordinates, replace=False))
        worst[name] = 0.0
        for flat_index in picked:
            owner = int(np.searchsorted(offsets, flat_index, side="right") - 1)
            tensor, index = tensors[owner], int(flat_index - offsets[owner])
            numeric = _central_difference(fn, tensor.data.reshape(-1), index, step)
            worst[name] = max(worst[name], relative_error(float(tensor.grad.reshape(-1)[index]), numeric))
        log.debug("grad_check group %s over %d coordinates: %.3e", name, len(picked), worst[name])
    return worst
