import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from semole.tensor import (LOG_2PI, AdamState, CorruptBuffer, NonFiniteError, NonScalarLoss, Parameter,
                           ShapeMismatch, Tape, Tensor, adam_step, add, backward, binary_cross_entropy_logits,
                           clamp, concat, dump_arrays, exp, gather_rows, gaussian_entropy, gaussian_kl,
                           gaussian_kl_rows, load_arrays, log, log_softmax, matmul, mean, mul, relu, reparameterize,
                           reshape, scale, segment_sum, sigmoid, slice_cols, slice_rows, square, std_normal_nll2,
                           stop_gradient, sub, tanh, tsum)

from conftest import numeric_grad, rel_error

RNG = np.random.default_rng(11)


def _away_from_zero(shape, lo=0.05):
    x = RNG.uniform(-2, 2, size=shape)
    return np.where(np.abs(x) < lo, np.sign(x + 1e-12) * lo * 2, x)


MASK = np.array([[True, False, True, True], [False, True, True, False], [True, True, True, True]])
IDX = np.array([2, 0, 2, 1, 2])
SEG = np.array([1, 0, 1, 3, 1])

CASES = {
    "add": (lambda a, b: add(a, b), [(3, 4), (1, 4)]),
    "add_col": (lambda a, b: add(a, b), [(3, 4), (3, 1)]),
    "sub": (lambda a, b: sub(a, b), [(3, 4), (3, 4)]),
    "mul": (lambda a, b: mul(a, b), [(3, 4), (1, 4)]),
    "scale": (lambda a: scale(a, -1.7), [(2, 3)]),
    "matmul": (lambda a, b: matmul(a, b), [(3, 4), (4, 2)]),
    "concat0": (lambda a, b: concat([a, b], axis=0), [(2, 3), (1, 3)]),
    "concat1": (lambda a, b: concat([a, b], axis=1), [(2, 3), (2, 2)]),
    "slice_cols": (lambda a: slice_cols(a, 1, 3), [(3, 4)]),
    "slice_rows": (lambda a: slice_rows(a, 1, 3), [(3, 4)]),
    "sum_all": (lambda a: tsum(a), [(3, 4)]),
    "sum_rows": (lambda a: tsum(a, axis=1), [(3, 4)]),
    "sum_cols": (lambda a: tsum(a, axis=0), [(3, 4)]),
    "mean": (lambda a: mean(a, axis=0), [(3, 4)]),
    "sigmoid": (lambda a: sigmoid(a), [(3, 4)]),
    "tanh": (lambda a: tanh(a), [(3, 4)]),
    "relu": (lambda a: relu(a), [(3, 4)]),
    "exp": (lambda a: exp(a), [(3, 4)]),
    "log": (lambda a: log(mul(a, a)), [(3, 4)]),
    "square": (lambda a: square(a), [(3, 4)]),
    "clamp": (lambda a: clamp(a, -1.0, 1.0), [(3, 4)]),
    "log_softmax": (lambda a: log_softmax(a), [(3, 4)]),
    "log_softmax_mask": (lambda a: log_softmax(a, MASK), [(3, 4)]),
    "gather_rows": (lambda a: gather_rows(a, IDX), [(3, 4)]),
    "segment_sum": (lambda a: segment_sum(a, SEG, 4), [(5, 3)]),
    "reshape": (lambda a: reshape(a, (2, 6)), [(3, 4)]),
    "kl": (lambda a, b: gaussian_kl(a, b), [(2, 3), (2, 3)]),
    "kl_rows": (lambda a, b: gaussian_kl_rows(a, b), [(2, 3), (2, 3)]),
    "entropy": (lambda a: gaussian_entropy(a), [(2, 3)]),
    "nll2": (lambda a: std_normal_nll2(a), [(2, 3)]),
    "bce": (lambda a: binary_cross_entropy_logits(a, np.array([[1.0], [0.0], [1.0]])), [(3, 1)]),
    "reparam": (lambda a, b: reparameterize(a, b, np.random.default_rng(5)), [(2, 3), (2, 3)]),
}


@pytest.mark.parametrize("name", sorted(CASES))
def test_primitive_gradients(name):
    fn, shapes = CASES[name]
    arrays = [_away_from_zero(s) for s in shapes]
    if name == "clamp":
        arrays[0] = np.where(np.abs(np.abs(arrays[0]) - 1.0) < 0.05, 0.5, arrays[0])
    out_shape = fn(*[Tensor(a) for a in arrays]).shape
    w = RNG.normal(size=out_shape)

    def loss_value():
        return float((fn(*[Tensor(a) for a in arrays]).data * w).sum())

    params = [Parameter(a) for a in arrays]
    with Tape():
        loss = tsum(mul(fn(*params), Tensor(w)))
        grads = backward(loss)
    for p, a in zip(params, arrays):
        num = numeric_grad(loss_value, a, h=1e-5)
        assert rel_error(grads[p], num) < 1e-4, name


def test_forward_examples():
    assert matmul(Tensor([[1.0, 2.0]]), Tensor([[3.0], [4.0]])).data.tolist() == [[11.0]]
    assert sigmoid(Tensor(0.0)).item() == 0.5
    lp = log_softmax(Tensor(RNG.normal(size=(4, 7)) * 10))
    assert np.allclose(np.exp(lp.data).sum(axis=1), 1.0, atol=1e-12)
    lpm = log_softmax(Tensor(RNG.normal(size=(3, 4))), MASK)
    assert np.allclose(np.exp(lpm.data[MASK]).sum() - 3.0, 0.0, atol=1e-12)
    assert (lpm.data[~MASK] == 0).all()


def test_square_derivative():
    x = Parameter(3.0)
    with Tape():
        g = backward(square(x))
    assert g[x].item() == 6.0


def test_stop_gradient_branch_is_zero():
    x = Parameter([[1.0, -2.0]])
    y = Parameter([[0.5, 0.5]])
    with Tape():
        loss = tsum(add(mul(stop_gradient(x), y), stop_gradient(square(x))))
        g = backward(loss)
    assert x not in g or (g[x] == 0).all()
    assert np.array_equal(g[y], x.data)


def test_errors():
    with pytest.raises(NonScalarLoss):
        with Tape():
            backward(square(Parameter([[1.0, 2.0]])))
    with pytest.raises(ShapeMismatch) as info:
        matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))
    assert "(2, 3)" in str(info.value)
    with pytest.raises(ShapeMismatch):
        add(Tensor(np.ones((2, 3))), Tensor(np.ones((3, 2))))
    with pytest.raises(ShapeMismatch):
        gaussian_kl(Tensor(np.ones((1, 2))), Tensor(np.ones((1, 3))))
    with pytest.raises(ShapeMismatch):
        Tensor(np.ones((2, 2, 2)))
    with pytest.raises(NonFiniteError):
        log(Tensor([[0.0]]))


def test_tape_cleared_after_backward():
    x = Parameter([[1.0]])
    with Tape() as tape:
        loss = square(x)
        assert len(tape) == 1
        backward(loss)
        assert len(tape) == 0


def test_kl_closed_form():
    assert gaussian_kl(np.zeros((1, 4)), np.zeros((1, 4))).item() == 0.0
    assert gaussian_kl([[1.0]], [[0.0]]).item() == pytest.approx(0.5, abs=1e-15)


def test_kl_monte_carlo():
    mu, lv = np.array([[0.7, -1.2]]), np.array([[-0.5, 0.4]])
    rng = np.random.default_rng(0)
    n = 10 ** 6
    sd = np.exp(lv / 2)
    z = mu + sd * rng.standard_normal((n, 2))
    log_q = -0.5 * (((z - mu) / sd) ** 2 + lv + LOG_2PI)
    log_p = -0.5 * (z ** 2 + LOG_2PI)
    mc = float((log_q - log_p).sum(axis=1).mean())
    assert abs(mc - gaussian_kl(mu, lv).item()) < 1e-2


@given(st.lists(st.tuples(st.floats(-5, 5), st.floats(-8, 8)), min_size=1, max_size=6))
@settings(max_examples=100)
def test_kl_nonnegative(pairs):
    mu = np.array([[p[0] for p in pairs]])
    lv = np.array([[p[1] for p in pairs]])
    assert gaussian_kl(mu, lv).item() >= -1e-12


def test_normal_nll_at_zero():
    assert abs(std_normal_nll2([[0.0]]).item() - math.log(2 * math.pi)) < 1e-9


def test_reparameterize():
    mu = np.array([[1.5, -0.3]])
    z = reparameterize(mu, np.full((1, 2), -1e3), np.random.default_rng(0))
    assert np.allclose(z.data, mu, atol=1e-4)
    a = reparameterize(mu, np.zeros((1, 2)), np.random.default_rng(9)).data
    b = reparameterize(mu, np.zeros((1, 2)), np.random.default_rng(9)).data
    assert np.array_equal(a, b)
    n = 10 ** 5
    lv = np.log(np.array([[0.25, 4.0]]))
    draws = reparameterize(np.repeat(mu, n, axis=0), np.repeat(lv, n, axis=0), np.random.default_rng(1)).data
    sigma = np.exp(lv / 2)
    assert (np.abs(draws.mean(axis=0) - mu) < 3 * sigma / math.sqrt(n)).all()


def test_adam_zero_gradient_noop():
    p = {"w": Parameter(np.arange(4.0).reshape(2, 2))}
    before = p["w"].data.copy()
    adam_step(p, {"w": np.zeros((2, 2))}, AdamState())
    assert np.array_equal(p["w"].data, before)


def _minimize(steps=500):
    p = {"x": Parameter([[5.0]])}
    st_ = AdamState(lr=0.05)
    trace = []
    for _ in range(steps):
        with Tape():
            g = backward(square(p["x"]))
        adam_step(p, {"x": g[p["x"]]}, st_)
        trace.append(p["x"].item())
    return trace, st_


def test_adam_converges_on_square():
    trace, state = _minimize()
    assert abs(trace[-1]) < 0.1
    assert state.step == 500
    again, _ = _minimize()
    assert trace == again


def test_adam_shape_checked():
    with pytest.raises(ShapeMismatch):
        adam_step({"w": Parameter(np.zeros((2, 2)))}, {"w": np.zeros((2, 3))}, AdamState())


def test_serialize_round_trip():
    arrays = {"a": RNG.normal(size=(3, 4)), "b.W": RNG.normal(size=(1, 1)), "c": np.zeros((0, 2))}
    back = load_arrays(dump_arrays(arrays))
    assert list(back) == list(arrays)
    for k in arrays:
        assert np.array_equal(back[k], arrays[k])


def test_serialize_corruption():
    blob = dump_arrays({"a": np.ones((2, 2))})
    with pytest.raises(CorruptBuffer):
        load_arrays(blob[:-3])
    with pytest.raises(CorruptBuffer):
        load_arrays(blob + b"x")
    with pytest.raises(CorruptBuffer):
        load_arrays(b"junk" + blob)
