import math

import numpy as np
import pytest

from causalflow.numerics import ops
from causalflow.numerics.gradcheck import grad_check, grad_check_groups, relative_error
from causalflow.numerics.numerics_errors import (
    DegenerateRowError,
    EmptyLossError,
    GraphError,
    NonFiniteError,
    NumericsError,
    ShapeError,
)
from causalflow.numerics.tensor import Parameter, Tensor, no_grad, resolve_dtype, zero_gradients


def param(values, name="p", group="encoder"):
    return Parameter(np.asarray(values, dtype=np.float64), name=name, group=group)


def const(values):
    return Tensor.constant(np.asarray(values, dtype=np.float64), dtype=np.float64)


def test_matmul_identity():
    out = ops.matmul(const(np.eye(2)), const([[1, 2], [3, 4]]))
    assert np.array_equal(out.data, [[1, 2], [3, 4]])


def test_matmul_orthogonal_rows():
    assert np.array_equal(ops.matmul(const([[1, 0]]), const([[0], [5]])).data, [[0]])


def test_matmul_matches_triple_loop(rng):
    a, b = rng.normal(size=(3, 4)), rng.normal(size=(4, 2))
    expected = np.zeros((3, 2))
    for i in range(3):
        for j in range(2):
            for k in range(4):
                expected[i, j] += a[i, k] * b[k, j]
    assert np.allclose(ops.matmul(const(a), const(b)).data, expected, atol=1e-12)


def test_matmul_shape_mismatch():
    with pytest.raises(ShapeError):
        ops.matmul(const(np.ones((2, 3))), const(np.ones((2, 3))))


def test_masked_softmax_single_allowed_entry():
    out = ops.masked_softmax(const([[5, 100, 3]]), np.array([[True, False, False]]))
    assert out.data.tolist() == [[1.0, 0.0, 0.0]]


def test_masked_softmax_symmetric_row():
    out = ops.masked_softmax(const([[0, 0]]), np.ones((1, 2), dtype=bool))
    assert out.data.tolist() == [[0.5, 0.5]]


def test_masked_softmax_matches_exp_normalize():
    out = ops.masked_softmax(const([[1, 2, 3]]), np.ones((1, 3), dtype=bool))
    e = np.exp([1.0, 2.0, 3.0])
    assert np.allclose(out.data[0], e / e.sum(), atol=1e-15)


def test_masked_softmax_masked_entries_are_exactly_zero(rng):
    allowed = rng.random((6, 9)) < 0.5
    allowed[:, 0] = True
    out = ops.masked_softmax(const(rng.normal(size=(6, 9)) * 50), allowed)
    assert np.all(out.data[~allowed] == 0.0)
    assert np.allclose(out.data.sum(axis=1), 1.0, atol=1e-6)


def test_masked_softmax_degenerate_row():
    with pytest.raises(DegenerateRowError):
        ops.masked_softmax(const([[1, 2], [3, 4]]), np.array([[True, False], [False, False]]))


def test_rms_norm_unit_and_zero():
    ones = ops.rms_norm(const(np.ones((2, 4))), const(np.ones(4)), epsilon=0.0)
    assert np.array_equal(ones.data, np.ones((2, 4)))
    zeros = ops.rms_norm(const(np.zeros((2, 4))), const(np.ones(4)))
    assert np.array_equal(zeros.data, np.zeros((2, 4)))


def test_rms_norm_matches_scalar_loop(rng):
    x, gain = rng.normal(size=5), rng.normal(size=5)
    rms = math.sqrt(sum(v * v for v in x) / 5 + 1e-6)
    expected = [x[i] / rms * gain[i] for i in range(5)]
    assert np.allclose(ops.rms_norm(const([x]), const(gain)).data[0], expected, atol=1e-12)


def test_cross_entropy_saturated():
    logits = np.full((2, 4), -50.0)
    logits[0, 1] = logits[1, 3] = 50.0
    assert ops.cross_entropy(const(logits), [1, 3], ignore_id=0).item() < 1e-3


def test_cross_entropy_uniform():
    loss = ops.cross_entropy(const(np.zeros((3, 4))), [1, 2, 3], ignore_id=0)
    assert loss.item() == pytest.approx(math.log(4))


def test_cross_entropy_matches_log_sum_exp(rng):
    logits = rng.normal(size=(5, 7))
    targets = [3, 0, 6, 0, 2]
    kept = [i for i, t in enumerate(targets) if t != 0]
    expected = np.mean([np.log(np.exp(logits[i]).sum()) - logits[i, targets[i]] for i in kept])
    assert ops.cross_entropy(const(logits), targets, ignore_id=0).item() == pytest.approx(expected, abs=1e-12)


def test_cross_entropy_all_ignored():
    with pytest.raises(EmptyLossError):
        ops.cross_entropy(const(np.zeros((2, 3))), [0, 0], ignore_id=0)


def test_backward_of_sum_is_all_ones():
    p = param(np.arange(6.0).reshape(2, 3))
    ops.total(p).backward()
    assert np.array_equal(p.grad, np.ones((2, 3)))


def test_backward_of_square():
    p = param([1.0, 2.0])
    ops.total(ops.mul(p, p)).backward()
    assert p.grad.tolist() == [2.0, 4.0]


def test_repeated_backward_doubles_gradients():
    p = param([1.0, 2.0])
    loss = ops.total(ops.mul(p, p))
    loss.backward()
    loss.backward()
    assert p.grad.tolist() == [4.0, 8.0]
    zero_gradients([p])
    assert p.grad.tolist() == [0.0, 0.0]


def test_backward_without_graph():
    p = param([1.0, 2.0])
    with no_grad():
        loss = ops.total(p)
    with pytest.raises(GraphError):
        loss.backward()
    with pytest.raises(GraphError):
        ops.mul(p, p).backward()


def test_frozen_parameter_keeps_zero_gradient():
    frozen, live = param([1.0, 2.0], "frozen"), param([3.0, 4.0], "live")
    frozen.trainable = False
    ops.total(ops.mul(frozen, live)).backward()
    assert frozen.grad.tolist() == [0.0, 0.0]
    assert live.grad.tolist() == [1.0, 2.0]


def test_non_finite_values_are_refused():
    with pytest.raises(NonFiniteError):
        ops.scale(const([1e308]), 1e10)


def test_resolve_dtype():
    assert resolve_dtype("double") == np.float64
    with pytest.raises(ShapeError):
        resolve_dtype("half")


def test_relative_error_floor():
    assert relative_error(0.0, 0.0) == 0.0
    assert relative_error(1e-9, 0.0) == pytest.approx(0.1)


def test_grad_check_linear_function(rng):
    w = param(rng.normal(size=(4, 3)))
    x = const(rng.normal(size=(5, 4)))
    # central differences carry no truncation error on a linear function, so a
    # coarse power-of-two step leaves only rounding in f
    assert grad_check(lambda: ops.total(ops.matmul(x, w)), [w], step=0.25) < 1e-10


def test_grad_check_restores_inputs_and_groups_agree(rng):
    w = param(rng.normal(size=(6, 5)))
    b = param(rng.normal(size=(5,)))
    x = const(rng.normal(size=(4, 6)))
    before = (w.data.copy(), b.data.copy())

    def fn():
        return ops.total(ops.silu(ops.add(ops.matmul(x, w), b)))

    single = grad_check(fn, [w, b])
    grouped = grad_check_groups(fn, {"weights": [w], "bias": [b]})
    assert np.array_equal(w.data, before[0]) and np.array_equal(b.data, before[1])
    assert single < 1e-5
    assert max(grouped.values()) < 1e-5
    # both sample every coordinate of these small tensors with the same differences
    assert max(grouped.values()) == pytest.approx(single, rel=1e-12)


def test_grad_check_matmul_softmax_cross_entropy(rng):
    w = param(rng.normal(size=(6, 5)))
    x = const(rng.normal(size=(4, 6)))
    allowed = np.ones((4, 5), dtype=bool)

    def fn():
        probs = ops.masked_softmax(ops.matmul(x, w), allowed)
        return ops.cross_entropy(probs, [1, 2, 0, 4], ignore_id=0)

    assert grad_check(fn, [w]) < 1e-4


def test_grad_check_requires_double_precision():
    p = Parameter(np.ones(3, dtype=np.float32), name="p", group="encoder")
    with pytest.raises(NumericsError):
        grad_check(lambda: ops.total(p), [p])


@pytest.mark.parametrize("trial", range(4))
def test_elementwise_and_structural_ops_pass_grad_check(trial):
    rng = np.random.default_rng(trial)
    rows, cols = rng.integers(1, 9, size=2)
    a = param(rng.normal(size=(rows, cols)), "a")
    b = param(rng.normal(size=(rows, cols)), "b")
    bias = param(rng.normal(size=cols), "bias")
    w = param(rng.normal(size=(cols, 3)), "w")
    table = param(rng.normal(size=(7, cols)), "table")
    gain = param(rng.normal(size=cols), "gain")
    ids = rng.integers(0, 7, size=4)
    weights = const(rng.normal(size=(rows + 4, 3)))

    def fn():
        h = ops.silu(ops.add(ops.mul(a, b), bias))
        h = ops.concat([ops.rms_norm(h, gain), ops.embedding(table, ids)], axis=0)
        return ops.total(ops.mul(ops.linear(h, w), weights))

    assert grad_check(fn, [a, b, bias, w, table, gain]) < 1e-4


def test_grad_check_groups_spreads_coordinates(rng):
    first = param(rng.normal(size=(20, 5)), "first")
    second = param(rng.normal(size=(3,)), "second", group="decoder")
    x = const(rng.normal(size=(2, 20)))

    def fn():
        return ops.total(ops.mul(ops.silu(ops.matmul(x, first)), ops.total(second)))

    errors = grad_check_groups(fn, {"encoder": [first], "decoder": [second]})
    assert set(errors) == {"encoder", "decoder"}
    assert max(errors.values()) < 1e-4
