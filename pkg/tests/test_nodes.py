import zlib

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fhegraph import ckks, ops
from fhegraph.autofhe import parameterise
from fhegraph.errors import KeyMismatch, PlaintextRequired, ShapeMismatch, StateError
from fhegraph.firing import Generated
from fhegraph.nodes import (CC, CCE, Q_BOUNDS, Argmax, Decrypt, Dense, Encrypt, Gather, OneHot,
                            OneHotDecode, ReluApprox, Rotate, SigmoidApprox, Stack, cc_forward)

from gradcheck import CHECKS


@pytest.fixture
def kp():
    return ckks.keygen(parameterise(3))


def random_cc_case(rng):
    if rng.random() < 0.5:
        shape = (int(rng.integers(3, 16)),)
        kernel = (int(rng.integers(1, shape[0] + 1)),)
    else:
        shape = tuple(int(v) for v in rng.integers(3, 10, size=2))
        kernel = tuple(int(rng.integers(1, s + 1)) for s in shape)
    stride = int(rng.integers(1, 3))
    node = CC(input_shape=shape, kernel_shape=kernel, stride=stride,
              bias_init=float(rng.normal()), seed=int(rng.integers(1 << 30)))
    return node, rng.normal(size=shape)


@given(st.integers(0, 1_000_000))
def test_commuted_sum_equals_cross_correlation(seed):
    rng = np.random.default_rng(seed)
    node, x = random_cc_case(rng)
    windows = cc_forward(node, x)
    expected = ops.cross_correlate(x, node.k, node.stride) + float(node.b)
    np.testing.assert_allclose([w.sum() for w in windows], expected, rtol=1e-12, atol=1e-12)


def test_cc_ciphertext_windows_match_plaintext(kp):
    node = CC(input_shape=(4, 4), kernel_shape=(2, 2), bias_init=0.3, seed=3)
    x = np.random.default_rng(0).normal(size=(4, 4))
    plain = cc_forward(node, x)
    cts = cc_forward(node, ckks.encrypt(x, kp))
    assert len(cts) == node.T_x == 9
    for p, c in zip(plain, cts):
        assert c.mult_count == 1
        np.testing.assert_array_equal(ckks.decrypt(c, kp), p)


def test_cc_forward_is_generated_and_checks_shape():
    node = CC(input_shape=(3, 3), kernel_shape=(2, 2))
    assert isinstance(node.forward(np.zeros((3, 3))), Generated)
    with pytest.raises(ShapeMismatch):
        node.forward(np.zeros((4, 4)))
    with pytest.raises(StateError):
        CC(input_shape=(3, 3), kernel_shape=(2, 2)).backward([np.zeros((3, 3))] * 4)


def test_cc_weight_init():
    node = CC(input_shape=(6, 6), kernel_shape=(3, 3), seed=5)
    assert np.all(np.abs(node.k) <= 1 / 3)
    again = CC(input_shape=(6, 6), kernel_shape=(3, 3), seed=5)
    np.testing.assert_array_equal(node.k, again.k)
    np.testing.assert_array_equal(CC(weight_init="ones", kernel_shape=(2, 2)).k, np.ones((2, 2)))


@pytest.mark.parametrize("name", list(CHECKS))
def test_backward_receptors_match_finite_differences(name):
    rng = np.random.default_rng(zlib.crc32(name.encode()))
    for _ in range(5):
        assert CHECKS[name](rng) < 1e-4


def test_dense_depth_and_values(kp):
    node = Dense(inputs=3, item_shape=(1,), bias_init=0.5, seed=1)
    xs = [np.array([v]) for v in (1.0, 2.0, 3.0)]
    plain = node.forward(xs)
    np.testing.assert_allclose(plain, [node.w[:, 0] @ [1.0, 2.0, 3.0] + 0.5])
    ct = node.forward([ckks.encrypt(x, kp) for x in xs])
    assert ct.mult_count == 1
    np.testing.assert_allclose(ckks.decrypt(ct, kp), plain, rtol=1e-15)
    with pytest.raises(ShapeMismatch):
        node.forward(xs[:2])


def test_dense_bias_spread_over_item():
    node = Dense(inputs=2, item_shape=(4,), bias_init=2.0, seed=0)
    node.w = np.zeros_like(node.w)
    np.testing.assert_array_equal(node.forward([np.ones(4), np.ones(4)]), np.full(4, 0.5))


def test_activation_costs():
    assert ReluApprox().cost() == 1 and SigmoidApprox().cost() == 2
    assert CC().cost() == 1 and Dense().cost() == 1
    assert Rotate().cost() == Encrypt().cost() == Stack().cost() == 0


def test_relu_q_update_is_clipped():
    node = ReluApprox(q=0.2)
    node.forward(np.array([0.1]))
    node.grad_q = np.array(1e6)
    node.update(1.0)
    assert float(node.q) == Q_BOUNDS[0]
    frozen = ReluApprox(q=1.0, trainable=False)
    frozen.grad_q = np.array(5.0)
    frozen.update(1.0)
    assert float(frozen.q) == 1.0


def test_trainable_update_lr_zero_keeps_parameters():
    node = Dense(inputs=2, seed=4)
    before = node.parameters()
    node.forward([np.ones(1), np.ones(1)])
    node.backward(np.ones(1))
    node.update(0.0)
    for k, v in node.parameters().items():
        np.testing.assert_array_equal(v, before[k])


def test_encrypt_needs_params_when_active(kp):
    enc = Encrypt()
    np.testing.assert_array_equal(enc.forward([1.0, 2.0]), [1.0, 2.0])
    enc.active = True
    with pytest.raises(StateError):
        enc.forward([1.0])
    enc.set_params(kp.params, kp)
    ct = enc.forward([1.0, 2.0])
    assert ckks.is_ciphertext(ct) and ct.key_id == kp.key_id


def test_rotate_and_decrypt(kp):
    kp2 = ckks.keygen(parameterise(2))
    ring = {kp.key_id: kp, kp2.key_id: kp2}
    rot = Rotate(mode="sum")
    rot.set_params(kp2.params, kp2, ring)
    out = rot.forward(ckks.encrypt(np.arange(4.0), kp) * np.ones(4))
    assert out.key_id == kp2.key_id and out.levels_left == 2
    dec = Decrypt()
    dec.set_params(kp2.params, kp2, ring)
    np.testing.assert_array_equal(dec.forward(out), [6.0])
    stranger = ckks.keygen(kp.params)
    with pytest.raises(KeyMismatch):
        dec.forward(ckks.encrypt([1.0], stranger))
    np.testing.assert_array_equal(rot.forward(np.arange(4.0)), [6.0])
    np.testing.assert_array_equal(rot.backward(np.array([2.0])), np.full(4, 2.0))
    with pytest.raises(ValueError):
        Rotate(mode="diagonal")


def test_stack_and_gather_route_gradients():
    s = Stack()
    out = s.forward([np.ones(1), np.ones(1) * 2])
    assert isinstance(out, tuple) and len(out) == 2
    back = s.backward([np.array([[1.0], [2.0]]), np.array([[10.0], [20.0]])])
    assert isinstance(back, Generated)
    np.testing.assert_array_equal(np.concatenate(list(back.values)), [11.0, 22.0])
    g = Gather()
    np.testing.assert_array_equal(g.forward([np.array([1.0, 2.0]), np.array([5.0])]), [3.0, 5.0])
    back = g.backward(np.array([0.5, -1.0]))
    np.testing.assert_array_equal(back.values[0], [0.5, 0.5])
    with pytest.raises(PlaintextRequired):
        g.forward([ckks.encrypt([1.0], ckks.keygen(parameterise(0)))])


def test_loss_and_prediction_nodes():
    cce = CCE()
    y = OneHot(num_classes=3).forward(np.array([2]))
    np.testing.assert_array_equal(y, [0, 0, 1])
    loss = cce.forward([np.array([0.25, 0.25, 0.5]), y])
    assert loss == pytest.approx(-np.log(0.5))
    back = cce.backward(1.0)
    np.testing.assert_allclose(back.values[0], [0.25, 0.25, -0.5])
    with pytest.raises(ShapeMismatch):
        cce.forward([np.ones(3)])
    am, dec = Argmax(), OneHotDecode()
    assert dec.forward(am.forward(np.array([0.1, 0.9, 0.3]))) == 1
    np.testing.assert_array_equal(am.backward(0.0), np.zeros(3))
