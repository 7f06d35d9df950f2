"""Graph nodes: encryption boundaries, CNN/dense layers, activations, loss and prediction.

Every node has a ``forward`` and a ``backward`` receptor.  Forward receptors
accept plaintext arrays or virtual ciphertexts alike.  Backward receptors run
on plaintext: the simulator holds all keys, so cached ciphertext activations
are read through :func:`fhegraph.ckks.reveal` and gradients and weights stay
in the clear (the plaintext-weights strategy).

Inputs that arrive over several edges come in as a ``list`` (the engine's
stacking); a :class:`Stack` node forwards its stack over a single edge as a
``tuple``.  Backward receptors hand gradients back in the same form, see
:func:`_route`.
"""
from __future__ import annotations

import math
from typing import Dict, List, Optional

import numpy as np

from . import ckks, ops
from .errors import KeyMismatch, PlaintextRequired, ShapeMismatch, StateError
from .firing import Broadcast, Generated
from .graph import ComputationNode, ComputationalGraph, register

Q_BOUNDS = (0.1, 100.0)


def _items(signal):
    if isinstance(signal, list):
        return signal, "edges"
    if isinstance(signal, tuple):
        return list(signal), "tuple"
    return [signal], "single"


def _route(grads, form):
    if form == "edges":
        return Generated(grads)
    if form == "tuple":
        return Broadcast(tuple(grads))
    return Broadcast(grads[0])


def _add(a, b):
    if isinstance(a, tuple):
        return tuple(_add(x, y) for x, y in zip(a, b))
    return np.asarray(a, dtype=float) + np.asarray(b, dtype=float)


def _total(gradient):
    """Sum the gradients a node receives from each of its consumers."""
    if isinstance(gradient, list):
        total = gradient[0]
        for g in gradient[1:]:
            total = _add(total, g)
        return total
    return gradient


def _uniform_init(rng, shape, fan_in):
    limit = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-limit, limit, size=shape)


class TrainableNode(ComputationNode):
    """Node with parameters updated by plain SGD after each backward pass."""

    param_names = ()

    def parameters(self) -> Dict[str, np.ndarray]:
        return {k: np.array(getattr(self, k)) for k in self.param_names}

    def set_parameters(self, values: dict) -> None:
        for k in self.param_names:
            if k in values:
                value, shape = np.array(values[k], dtype=float), np.shape(getattr(self, k))
                if value.size != int(np.prod(shape)):
                    raise ShapeMismatch(f"parameter {k!r} needs shape {shape}, got {value.shape}")
                setattr(self, k, value.reshape(shape))
        self._refresh()

    def _refresh(self):
        pass

    def zero_grad(self):
        for k in self.param_names:
            setattr(self, "grad_" + k, np.zeros(np.shape(getattr(self, k))))

    def update(self, lr: float) -> None:
        for k in self.param_names:
            setattr(self, k, ops.sgd_update(getattr(self, k), getattr(self, "grad_" + k), lr))
        self.zero_grad()
        self._refresh()


# input side ------------------------------------------------------------------

@register
class Input(ComputationNode):
    kind = "Input"
    category = "input"

    def forward(self, signal):
        return np.asarray(signal, dtype=float)


@register
class OneHot(ComputationNode):
    kind = "OneHot"
    category = "input"

    def __init__(self, num_classes=10, **config):
        super().__init__(num_classes=num_classes, **config)
        self.num_classes = int(num_classes)

    def forward(self, signal):
        return ops.onehot_encode(int(np.asarray(signal).ravel()[0]), self.num_classes)


# encryption boundaries ------------------------------------------------------------

class EncryptionNode(ComputationNode):
    category = "encryption"

    def __init__(self, **config):
        super().__init__(**config)
        self.params = None
        self.keypair: Optional[ckks.KeyPair] = None
        self.keyring: Dict[int, ckks.KeyPair] = {}
        self.noise = 0.0
        self.rng = None

    def set_params(self, params, keypair, keyring=None):
        self.params = params
        self.keypair = keypair
        self.keyring = dict(keyring or {keypair.key_id: keypair})

    def _key_for(self, ct):
        try:
            return self.keyring[ct.key_id]
        except KeyError:
            raise KeyMismatch(f"no key {ct.key_id} in this node's keyring") from None

    def _own_key(self):
        if self.keypair is None:
            raise StateError("encryption node is not parameterised; run auto_he + apply_params")
        return self.keypair

    def backward(self, gradient):
        return _total(gradient)


@register
class Encrypt(EncryptionNode):
    """Source boundary: plaintext becomes a ciphertext when ``active``."""

    kind = "Encrypt"

    def __init__(self, **config):
        super().__init__(**config)
        self.active = False

    def forward(self, signal):
        x = np.asarray(signal, dtype=float)
        if not self.active:
            return x
        return ckks.encrypt(x, self._own_key(), self.noise, self.rng)


@register
class Rotate(EncryptionNode):
    """Key rotation; in ``sum`` mode the slots are folded into one value."""

    kind = "Rotate"

    def __init__(self, mode="sum", **config):
        super().__init__(mode=mode, **config)
        if mode not in ("sum", "whole"):
            raise ValueError(f"rotation mode must be 'sum' or 'whole', got {mode!r}")
        self.mode = mode
        self._shape = None

    def forward(self, signal):
        self._shape = tuple(signal.shape) if hasattr(signal, "shape") else ()
        if ckks.is_ciphertext(signal):
            return ckks.rotate(signal, self._own_key(), self.mode, kp_old=self._key_for(signal))
        x = np.asarray(signal, dtype=float)
        return np.array([x.sum()]) if self.mode == "sum" else x

    def backward(self, gradient):
        g = _total(gradient)
        if self.mode == "sum":
            return np.full(self._shape, float(np.sum(g)))
        return g


@register
class Decrypt(EncryptionNode):
    """Sink boundary: ciphertexts become plaintext (the data owner's side)."""

    kind = "Decrypt"

    def forward(self, signal):
        if ckks.is_ciphertext(signal):
            return ckks.decrypt(signal, self._key_for(signal))
        return np.asarray(signal, dtype=float)


# CNN ---------------------------------------------------------------------------

@register
class CC(TrainableNode):
    """Biased cross-correlation with masqueraded kernels (one input, many outputs).

    Window ``t`` is emitted as ``mask_t * x + (b/N) * active_t``: a single
    elementwise product per window, bias spread over the window's own slots
    so the slot-sum of every window is ``sum(k * x_window) + b``.
    """

    kind = "CC"
    category = "conv"
    param_names = ("k", "b")

    def __init__(self, input_shape=(28, 28), kernel_shape=(3, 3), stride=1,
                 bias_init=0.0, weight_init="uniform", seed=0, **config):
        super().__init__(input_shape=list(input_shape), kernel_shape=list(kernel_shape),
                         stride=stride if isinstance(stride, int) else list(stride),
                         bias_init=bias_init, weight_init=weight_init, seed=seed, **config)
        self.input_shape = tuple(input_shape)
        self.kernel_shape = tuple(kernel_shape)
        self.stride = stride
        self.N = int(np.prod(self.kernel_shape))
        self._idx = ops.window_indices(self.kernel_shape, self.input_shape, stride)
        self.T_x = self._idx.shape[0]
        self._rows = np.arange(self.T_x)[:, None]
        rng = np.random.default_rng(seed)
        if weight_init == "uniform":
            self.k = _uniform_init(rng, self.kernel_shape, self.N)
        elif weight_init == "ones":
            self.k = np.ones(self.kernel_shape)
        else:
            raise ValueError(f"unknown weight_init {weight_init!r}")
        self.b = np.array(float(bias_init))
        self._x = None
        self.zero_grad()
        self._refresh()

    def cost(self):
        return 1

    def _refresh(self):
        size = int(np.prod(self.input_shape))
        masks = np.zeros((self.T_x, size))
        np.put_along_axis(masks, self._idx, np.broadcast_to(self.k.ravel(), self._idx.shape), axis=1)
        active = np.zeros((self.T_x, size))
        np.put_along_axis(active, self._idx, 1.0, axis=1)
        self.masks = masks
        self.bias_rows = active * (float(self.b) / self.N)

    def forward(self, signal):
        return Generated(cc_forward(self, signal))

    def backward(self, gradient):
        return cc_backward(self, gradient)


def cc_forward(node: CC, x) -> List:
    if tuple(x.shape) != node.input_shape:
        raise ShapeMismatch(f"CC expects input {node.input_shape}, got {tuple(x.shape)}")
    node._x = x
    shape = node.input_shape
    if ckks.is_ciphertext(x):
        return [x * node.masks[t].reshape(shape) + node.bias_rows[t].reshape(shape)
                for t in range(node.T_x)]
    flat = np.asarray(x, dtype=float).ravel()
    windows = node.masks * flat + node.bias_rows
    return list(windows.reshape((node.T_x,) + shape))


def cc_backward(node: CC, gradient) -> np.ndarray:
    """Accumulate kernel/bias gradients; return the gradient w.r.t. the input.

    ``gradient`` holds one entry per emitted window (a scalar or an
    input-shaped array of per-slot gradients).
    """
    if node._x is None:
        raise StateError("CC backward called before forward")
    grads, _ = _items(gradient)
    T = len(grads)
    size = int(np.prod(node.input_shape))
    G = np.stack([np.broadcast_to(ckks.reveal(g), node.input_shape).ravel() for g in grads])
    x = ckks.reveal(node._x).ravel()
    idx, rows = node._idx[:T], node._rows[:T]
    node.grad_k = node.grad_k + (G * x)[rows, idx].sum(axis=0).reshape(node.kernel_shape)
    node.grad_b = node.grad_b + G[rows, idx].sum() / node.N
    dx = (G * node.masks[:T]).sum(axis=0) if T else np.zeros(size)
    return dx.reshape(node.input_shape)


# glue ------------------------------------------------------------------------

@register
class Stack(ComputationNode):
    """Collect inbound values into one ordered stack carried on each out-edge."""

    kind = "Stack"
    category = "glue"

    def __init__(self, **config):
        super().__init__(**config)
        self._form = None

    def forward(self, signal):
        items, self._form = _items(signal)
        return tuple(items)

    def backward(self, gradient):
        total = _total(gradient)
        return _route(list(total), self._form)


@register
class Gather(ComputationNode):
    """Finish commuted sums after decryption: slot-sum each input into one vector entry."""

    kind = "Gather"
    category = "glue"

    def __init__(self, **config):
        super().__init__(**config)
        self._shapes = None
        self._form = None
        self.value = None

    def forward(self, signal):
        items, self._form = _items(signal)
        if any(ckks.is_ciphertext(v) for v in items):
            raise PlaintextRequired("Gather runs after decryption")
        items = [np.asarray(v, dtype=float) for v in items]
        self._shapes = [v.shape for v in items]
        self.value = np.array([v.sum() for v in items])
        return self.value

    def backward(self, gradient):
        g = np.asarray(_total(gradient), dtype=float).ravel()
        return _route([np.full(s, g[i]) for i, s in enumerate(self._shapes)], self._form)


# dense -------------------------------------------------------------------------

@register
class Dense(TrainableNode):
    """Fully connected neuron over ``inputs`` stacked items of ``item_shape``.

    ``z = sum_i x_i * w_i + b / size(item)``: each product is elementwise, the
    sum runs over the stack axis (depth-free for ciphertexts), and the bias is
    spread over the item's slots so a later slot-sum recovers ``b``.
    """

    kind = "Dense"
    category = "dense"
    param_names = ("w", "b")

    def __init__(self, inputs=1, item_shape=(1,), bias_init=0.0, seed=0, **config):
        super().__init__(inputs=inputs, item_shape=list(item_shape), bias_init=bias_init,
                         seed=seed, **config)
        self.inputs = int(inputs)
        self.item_shape = tuple(item_shape)
        self.item_size = int(np.prod(self.item_shape))
        rng = np.random.default_rng(seed)
        self.w = _uniform_init(rng, (self.inputs,) + self.item_shape, self.inputs * self.item_size)
        self.b = np.array(float(bias_init))
        self._xs = None
        self._form = None
        self.zero_grad()

    def cost(self):
        return 1

    def forward(self, signal):
        return dense_forward(self, signal)

    def backward(self, gradient):
        g = np.broadcast_to(ckks.reveal(_total(gradient)), self.item_shape)
        X = np.stack([ckks.reveal(x).reshape(self.item_shape) for x in self._xs])
        self.grad_w = self.grad_w + g * X
        self.grad_b = self.grad_b + g.sum() / self.item_size
        grads = g * self.w  # row i is the gradient for stacked item i
        if self._form == "tuple":
            return Broadcast(grads)  # consumers iterate rows; ndarray sums stay vectorised
        return _route(list(grads), self._form)


def dense_forward(node: Dense, xs):
    items, form = _items(xs)
    if len(items) != node.inputs:
        raise ShapeMismatch(f"dense node expects {node.inputs} stacked inputs, got {len(items)}")
    for x in items:
        if tuple(x.shape) != node.item_shape and np.prod(x.shape) != node.item_size:
            raise ShapeMismatch(f"dense item shape {tuple(x.shape)} != {node.item_shape}")
    node._xs, node._form = items, form
    bias = float(node.b) / node.item_size
    if any(ckks.is_ciphertext(x) for x in items):
        acc = items[0] * node.w[0]
        for i in range(1, node.inputs):
            acc = acc + items[i] * node.w[i]
        return acc + bias
    X = np.stack([np.asarray(x, dtype=float).reshape(node.item_shape) for x in items])
    return (X * node.w).sum(axis=0) + bias


# activations ---------------------------------------------------------------------

@register
class ReluApprox(TrainableNode):
    """Quadratic ReLU approximation with a trainable range ``q``."""

    kind = "ReluApprox"
    category = "dense"
    param_names = ("q",)

    def __init__(self, q=1.0, trainable=True, **config):
        super().__init__(q=q, trainable=trainable, **config)
        self.q = np.array(float(q))
        self.trainable = trainable
        self._x = None
        self.zero_grad()

    def cost(self):
        return 1

    def forward(self, signal):
        self._x = signal
        return ops.relu_approx(signal, float(self.q))

    def backward(self, gradient):
        g = ckks.reveal(_total(gradient))
        x = ckks.reveal(self._x)
        self.grad_q = self.grad_q + np.sum(g * ops.relu_approx_dq(x, float(self.q)))
        return g * ops.relu_approx_derivative(x, float(self.q))

    def update(self, lr):
        if self.trainable:
            super().update(lr)
            self.q = np.clip(self.q, *Q_BOUNDS)
        self.zero_grad()


@register
class SigmoidApprox(ComputationNode):
    kind = "SigmoidApprox"
    category = "dense"

    def __init__(self, **config):
        super().__init__(**config)
        self._x = None

    def cost(self):
        return 2

    def forward(self, signal):
        self._x = signal
        return ops.sigmoid_approx(signal)

    def backward(self, gradient):
        g = ckks.reveal(_total(gradient))
        return g * ops.sigmoid_approx_derivative(ckks.reveal(self._x))


# loss ------------------------------------------------------------------------------

class _Sink(ComputationNode):
    def __init__(self, **config):
        super().__init__(**config)
        self.value = None


@register
class Softmax(ComputationNode):
    """Plaintext softmax; its backward passes the fused softmax+CCE gradient through."""

    kind = "Softmax"
    category = "loss"

    def forward(self, signal):
        return ops.softmax(signal)

    def backward(self, gradient):
        return _total(gradient)


@register
class CCE(_Sink):
    """Categorical cross-entropy over ``[probabilities, one-hot target]``."""

    kind = "CCE"
    category = "loss"

    def forward(self, signal):
        items, self._form = _items(signal)
        if len(items) != 2:
            raise ShapeMismatch(f"CCE expects [probabilities, target], got {len(items)} inputs")
        self._p, self._y = (np.asarray(v, dtype=float) for v in items)
        self.value = ops.cce_loss(self._p, self._y)
        return self.value

    def backward(self, seed):
        grad = float(np.sum(seed)) * ops.cce_gradient(self._p, self._y)
        return _route([grad, np.zeros_like(self._y)], self._form)


@register
class MSE(_Sink):
    """Mean squared error over ``[prediction, target]``."""

    kind = "MSE"
    category = "loss"

    def forward(self, signal):
        items, self._form = _items(signal)
        if len(items) != 2:
            raise ShapeMismatch(f"MSE expects [prediction, target], got {len(items)} inputs")
        self._y_hat, self._y = (np.asarray(ckks.reveal(v), dtype=float) for v in items)
        self._y = self._y.reshape(self._y_hat.shape)
        self.value, self._grad = ops.mse_loss(self._y_hat, self._y)
        return self.value

    def backward(self, seed):
        grad = float(np.sum(seed)) * self._grad
        return _route([grad, np.zeros_like(self._y)], self._form)


# prediction (no gradient flows back from here) -----------------------------------------

class _PredictionNode(_Sink):
    category = "output"

    def backward(self, gradient):
        return np.zeros(self._in_shape)


@register
class Argmax(_PredictionNode):
    kind = "Argmax"

    def forward(self, signal):
        self._in_shape = np.shape(signal)
        self.value = ops.argmax_onehot(signal)
        return self.value


@register
class OneHotDecode(_PredictionNode):
    kind = "OneHotDecode"

    def forward(self, signal):
        self._in_shape = np.shape(signal)
        self.value = ops.onehot_decode(signal)
        return self.value


@register
class Output(_PredictionNode):
    kind = "Output"

    def forward(self, signal):
        if ckks.is_ciphertext(signal):
            raise PlaintextRequired("prediction output must be decrypted first")
        self._in_shape = np.shape(signal)
        self.value = np.asarray(signal, dtype=float)
        return self.value


def set_data_kind(g: ComputationalGraph, kind: str, noise: float = 0.0, seed=None) -> None:
    """Switch every Encrypt node between plaintext pass-through and encryption."""
    if kind not in ("plaintext", "ciphertext"):
        raise ValueError(f"data kind must be 'plaintext' or 'ciphertext', got {kind!r}")
    rng = np.random.default_rng(seed) if noise else None
    for rec in g.nodes.values():
        node = rec.node
        if isinstance(node, Encrypt):
            node.active = kind == "ciphertext"
        if isinstance(node, EncryptionNode):
            node.noise, node.rng = noise, rng


def trainable_nodes(g: ComputationalGraph) -> Dict[str, TrainableNode]:
    return {n: rec.node for n, rec in g.nodes.items() if isinstance(rec.node, TrainableNode)}
