import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import numeric_grad, rel_error, scalar_gru
from ibpm import autodiff as ad
from ibpm.autodiff import NonFiniteError, ShapeError, Tensor
from ibpm.layers import GruCell, ParamStore, UnknownParameter, adam_step, gru_step, read_checkpoint, save_checkpoint


def leaf(a):
    return Tensor(np.array(a, dtype=np.float64), requires_grad=True)


def check(build, *shapes, seed=0):
    """Gradient check of scalar ``build(*leaves)`` in every leaf."""
    rng = np.random.default_rng(seed)
    leaves = [leaf(rng.normal(size=s)) for s in shapes]
    out = build(*leaves)
    out.backward()
    for t in leaves:
        num = numeric_grad(lambda: build(*[Tensor(x.data) for x in leaves]).item(), t.data)
        assert rel_error(t.grad, num) < 1e-4


ELEMENTWISE = {
    "tanh": ad.tanh,
    "sigmoid": ad.sigmoid,
    "exp": ad.exp,
    "square": lambda x: x * x,
    "neg": lambda x: -x,
}


@pytest.mark.parametrize("name", sorted(ELEMENTWISE))
def test_elementwise_gradients(name):
    fn = ELEMENTWISE[name]
    w = np.arange(12.0).reshape(3, 4) / 7
    check(lambda x: ad.sum(fn(x) * Tensor(w)), (3, 4))


def test_composite_gradients():
    seg = np.array([0, 1, 0, 2, 1])
    check(lambda a, b: ad.sum(ad.tanh(a @ b) * ad.tanh(a @ b)), (3, 4), (4, 2))
    check(lambda a: ad.sum(ad.softmax(a, axis=0) * Tensor(np.arange(6.0).reshape(3, 2))), (3, 2))
    check(lambda a: ad.sum(ad.segment_softmax(a, seg, 3) * Tensor(np.arange(10.0).reshape(5, 2))), (5, 2))
    check(lambda a: ad.sum(ad.segment_sum(a, seg, 3) * ad.segment_sum(a, seg, 3)), (5, 2))
    check(lambda a, b: ad.sum(ad.concat([a, b], axis=1) * ad.concat([b, a], axis=1)), (2, 3), (2, 3))
    check(lambda a: ad.sum(ad.gather(a, np.array([2, 0, 2])) * ad.gather(a, np.array([1, 1, 0]))), (3, 2))
    check(lambda a, b: ad.mean(a / (ad.exp(b) + 1.0)), (2, 2), (2, 2))
    check(lambda a: ad.bce_with_logits(a, np.array([[1.0], [0.0], [1.0]]), np.array([[0.5], [1.0], [2.0]])), (3, 1))
    check(lambda a: ad.log(ad.sum(ad.exp(a))), (4,))
    check(lambda a: ad.sum(a[1:, :2] * a[:2, 1:]), (3, 3))


def test_linear_gradient_is_outer_product():
    w = leaf(np.ones((2, 3)))
    x = Tensor(np.array([[1.0, 2.0]]))
    ad.sum(x @ w).backward()
    np.testing.assert_array_equal(w.grad, np.array([[1.0, 1.0, 1.0], [2.0, 2.0, 2.0]]))


def test_detached_tensor_gets_no_gradient():
    a = leaf([1.0, 2.0])
    b = a.detach()
    ad.sum(a * b).backward()
    assert b.grad is None
    np.testing.assert_array_equal(a.grad, [1.0, 2.0])


def test_backward_needs_scalar():
    with pytest.raises(ShapeError):
        (leaf([1.0, 2.0]) * 2.0).backward()


def test_shape_errors_name_both_shapes():
    with pytest.raises(ShapeError, match=r"\(2, 3\).*\(2, 3\)"):
        leaf(np.ones((2, 3))) @ leaf(np.ones((2, 3)))
    with pytest.raises(ShapeError):
        leaf(np.ones(3)) + leaf(np.ones(4))


def test_non_finite_trips():
    with np.errstate(all="ignore"):
        with pytest.raises(NonFiniteError):
            ad.log(leaf([0.0]))
        with pytest.raises(NonFiniteError):
            ad.exp(leaf([1000.0]))


def test_softmax_simple_cases():
    np.testing.assert_allclose(ad.softmax(Tensor(np.full(5, 3.0))).data, np.full(5, 0.2), atol=1e-15)
    big = ad.softmax(Tensor(np.array([1000.0, 1000.0])))
    np.testing.assert_allclose(big.data, [0.5, 0.5])


@given(arrays(np.float64, (4, 3), elements=st.floats(-50, 50)))
def test_softmax_rows_sum_to_one(x):
    for axis in (0, 1):
        s = ad.softmax(Tensor(x), axis=axis).data.sum(axis=axis)
        assert np.all(np.abs(s - 1.0) < 1e-12)


def test_identity_matmul_and_singleton_sum():
    x = np.random.default_rng(1).normal(size=(3, 3))
    np.testing.assert_array_equal((Tensor(x) @ Tensor(np.eye(3))).data, x)
    np.testing.assert_array_equal(ad.segment_sum(Tensor(x[:1]), np.array([0]), 1).data, x[:1])


# GRU


def gru(seed=0, inp=3, hid=4):
    store = ParamStore(seed)
    return store, GruCell.create(store, "g", inp, hid)


def test_gru_zero_params_halves_state():
    store, cell = gru()
    for name in store:
        store.set(name, np.zeros(store[name].shape))
    h = np.array([[1.0, -2.0, 0.5, 4.0]])
    out = gru_step(cell, store, Tensor(np.zeros((1, 3))), Tensor(h))
    np.testing.assert_allclose(out.data, 0.5 * h)
    zero = gru_step(cell, store, Tensor(np.zeros((1, 3))), Tensor(np.zeros((1, 4))))
    assert not zero.data.any()


def test_gru_matches_scalar_reference():
    store, cell = gru(seed=3)
    store.set("g.b", np.random.default_rng(4).normal(size=12))
    rng = np.random.default_rng(5)
    x, h = rng.normal(size=(2, 3)), rng.normal(size=(2, 4))
    out = gru_step(cell, store, Tensor(x), Tensor(h)).data
    p = {k: store[k].data for k in store}
    for row in range(2):
        np.testing.assert_allclose(out[row], scalar_gru(p["g.W"], p["g.U"], p["g.Uc"], p["g.b"], x[row], h[row]),
                                   rtol=1e-12, atol=1e-12)


def test_gru_gradients():
    store, cell = gru(seed=7)
    rng = np.random.default_rng(8)
    x, h = rng.normal(size=(3, 3)), rng.normal(size=(3, 4))
    w = rng.normal(size=(3, 4))

    def loss():
        return ad.sum(gru_step(cell, store, Tensor(x), Tensor(h)) * Tensor(w))

    store.zero_grad()
    loss().backward()
    for name in store:
        num = numeric_grad(lambda: loss().item(), store[name].data)
        assert rel_error(store[name].grad, num) < 1e-4, name


def test_gru_dimension_mismatch():
    store, cell = gru()
    with pytest.raises(ShapeError):
        gru_step(cell, store, Tensor(np.zeros((1, 2))), Tensor(np.zeros((1, 4))))


# optimiser and store


def test_adam_zero_gradient_is_a_no_op():
    store = ParamStore(0)
    store.register("w", (2, 2))
    before = store.state()
    adam_step(store, {"w": np.zeros((2, 2))}, lr=0.1)
    np.testing.assert_array_equal(store["w"].data, before["w"])


def test_adam_descends_square():
    store = ParamStore(0)
    store.register("w", (1,), init="zeros")
    store.set("w", [1.0])
    adam_step(store, {"w": 2 * store["w"].data}, lr=0.1)
    assert store["w"].data[0] < 1.0


def test_adam_solves_quadratic():
    store = ParamStore(0)
    store.register("w", (2,), init="zeros")
    store.set("w", [3.0, -2.0])
    scale = np.array([1.0, 4.0])
    for _ in range(200):
        w = store["w"].data
        adam_step(store, {"w": 2 * scale * (w - [1.0, 0.5])}, lr=0.1)
    w = store["w"].data
    assert float(np.sum(scale * (w - [1.0, 0.5]) ** 2)) < 1e-3


def test_adam_unknown_gradient():
    store = ParamStore(0)
    with pytest.raises(UnknownParameter):
        adam_step(store, {"nope": np.zeros(1)})


def test_store_rules():
    store = ParamStore(0)
    store.register("w", (2, 3))
    with pytest.raises(ValueError):
        store.register("w", (2, 3))
    with pytest.raises(ValueError):
        store.set("w", np.zeros((3, 2)))
    a = np.sqrt(6 / 5)
    assert np.all(np.abs(store["w"].data) <= a)


def test_seeded_init_is_reproducible():
    a, b = ParamStore(9), ParamStore(9)
    a.register("w", (4, 4))
    b.register("w", (4, 4))
    np.testing.assert_array_equal(a["w"].data, b["w"].data)


def test_checkpoint_round_trip(tmp_path):
    store = ParamStore(2)
    store.register("w", (3, 5))
    store.register("b", (5,))
    path = tmp_path / "ck.json"
    save_checkpoint(path, store, {"note": "x"})
    state, meta = read_checkpoint(path)
    assert meta == {"note": "x"}
    for k in store:
        assert np.array_equal(state[k], store[k].data)
