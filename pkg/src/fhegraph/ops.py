"""Numerical building blocks for the neural nodes.

Functions that may see ciphertexts (the approximated activations) are written
with plain ``+``/``*`` so the same expression runs on NumPy arrays and on
:class:`~fhegraph.ckks.VirtualCiphertext` with identical results.  Everything
on the loss/prediction side requires plaintext.
"""
from __future__ import annotations

import math
from typing import Tuple

import numpy as np

from .ckks import is_ciphertext
from .errors import DomainError, PlaintextRequired, ShapeError, ShapeMismatch

SIGMOID_COEFFS = (0.5, 0.197, -0.004)
CCE_EPS = 1e-12


def _strides(stride, ndim) -> Tuple[int, ...]:
    if isinstance(stride, int):
        return (stride,) * ndim
    stride = tuple(int(s) for s in stride)
    if len(stride) != ndim:
        raise ShapeError(f"stride {stride} does not match {ndim} dimensions")
    return stride


def window_indices(kernel_shape, input_shape, stride=1) -> np.ndarray:
    """Flat input indices covered by each kernel placement, shape ``(T, N)``.

    Rows follow row-major order of the window origin; columns follow the
    row-major order of the kernel elements.
    """
    kernel_shape, input_shape = tuple(kernel_shape), tuple(input_shape)
    if len(kernel_shape) != len(input_shape):
        raise ShapeError(f"kernel {kernel_shape} and input {input_shape} differ in rank")
    if any(k > n for k, n in zip(kernel_shape, input_shape)):
        raise ShapeError(f"kernel {kernel_shape} larger than input {input_shape}")
    steps = _strides(stride, len(input_shape))
    if any(s < 1 for s in steps):
        raise ShapeError(f"stride must be positive, got {stride}")
    origins = np.stack(np.meshgrid(
        *[np.arange(0, n - k + 1, s) for n, k, s in zip(input_shape, kernel_shape, steps)],
        indexing="ij"), axis=-1).reshape(-1, len(input_shape))
    offsets = np.stack(np.meshgrid(*[np.arange(k) for k in kernel_shape], indexing="ij"),
                       axis=-1).reshape(-1, len(input_shape))
    coords = origins[:, None, :] + offsets[None, :, :]
    return np.ravel_multi_index(tuple(np.moveaxis(coords, -1, 0)), input_shape)


def masquerade_kernel(k, input_shape, stride=1) -> np.ndarray:
    """One input-shaped sparse copy of kernel ``k`` per window position.

    Returns an array of shape ``(T_x, *input_shape)``: row ``t`` holds the
    kernel weights where window ``t`` sits and zeros elsewhere.
    """
    k = np.asarray(k, dtype=float)
    idx = window_indices(k.shape, input_shape, stride)
    masks = np.zeros((idx.shape[0], int(np.prod(input_shape))))
    np.put_along_axis(masks, idx, np.broadcast_to(k.ravel(), idx.shape), axis=1)
    return masks.reshape((idx.shape[0],) + tuple(input_shape))


def cross_correlate(x, k, stride=1) -> np.ndarray:
    """Plain valid cross-correlation, one value per window (flattened)."""
    x, k = np.asarray(x, dtype=float), np.asarray(k, dtype=float)
    idx = window_indices(k.shape, x.shape, stride)
    return x.ravel()[idx] @ k.ravel()


# activations --------------------------------------------------------------

def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.asarray(x, dtype=float)))


def sigmoid_derivative(x):
    s = sigmoid(x)
    return (1.0 - s) * s


def relu(x):
    return np.maximum(0.0, np.asarray(x, dtype=float))


def relu_derivative(x):
    return (np.asarray(x) > 0).astype(float)


def sigmoid_approx(x):
    """0.5 + 0.197x - 0.004x^3, with x^3 as (x*x)*x: two multiplications deep."""
    a0, a1, a3 = SIGMOID_COEFFS
    return a0 + a1 * x + a3 * (x * x * x)


def sigmoid_approx_derivative(x):
    x = np.asarray(x, dtype=float)
    return 0.197 - 0.012 * x * x


def _check_q(q):
    if not q > 0:
        raise DomainError(f"ReLU approximation range q must be positive, got {q}")


def relu_approx(x, q: float = 1.0):
    """4/(3 pi q) x^2 + x/2 + q/(3 pi); one multiplication deep."""
    _check_q(q)
    return (4.0 / (3.0 * math.pi * q)) * (x * x) + 0.5 * x + q / (3.0 * math.pi)


def relu_approx_derivative(x, q: float = 1.0):
    _check_q(q)
    return (8.0 / (3.0 * math.pi * q)) * np.asarray(x, dtype=float) + 0.5


def relu_approx_dq(x, q: float = 1.0):
    """Partial derivative of the ReLU approximation with respect to its range q."""
    _check_q(q)
    x = np.asarray(x, dtype=float)
    return -(4.0 / (3.0 * math.pi * q * q)) * x * x + 1.0 / (3.0 * math.pi)


# loss and prediction (plaintext only) --------------------------------------

def _plain(x, what):
    if is_ciphertext(x):
        raise PlaintextRequired(f"{what} needs plaintext input; decrypt first")
    return np.asarray(x, dtype=float)


def softmax(a):
    a = _plain(a, "softmax")
    e = np.exp(a - a.max())
    return e / e.sum()


def cce_loss(p, y) -> float:
    p, y = _plain(p, "cce"), _plain(y, "cce")
    if p.shape != y.shape:
        raise ShapeMismatch(f"prediction {p.shape} vs target {y.shape}")
    return float(-np.sum(y * np.log(p + CCE_EPS)))


def cce_gradient(p, y) -> np.ndarray:
    """Gradient of CCE(softmax(a), y) with respect to the logits a."""
    p, y = _plain(p, "cce"), _plain(y, "cce")
    if p.shape != y.shape:
        raise ShapeMismatch(f"prediction {p.shape} vs target {y.shape}")
    return p - y


def mse_loss(y_hat, y):
    y_hat, y = _plain(y_hat, "mse"), _plain(y, "mse")
    if y_hat.shape != y.shape:
        raise ShapeMismatch(f"prediction {y_hat.shape} vs target {y.shape}")
    diff = y_hat - y
    return float(np.mean(diff * diff)), 2.0 * diff / diff.size


def argmax_onehot(a) -> np.ndarray:
    a = _plain(a, "argmax").ravel()
    if a.size == 0:
        raise DomainError("argmax of an empty vector")
    out = np.zeros_like(a)
    out[int(np.argmax(a))] = 1.0  # np.argmax returns the first maximum
    return out


def onehot_encode(label: int, num_classes: int) -> np.ndarray:
    label = int(label)
    if not 0 <= label < num_classes:
        raise DomainError(f"label {label} outside 0..{num_classes - 1}")
    out = np.zeros(num_classes)
    out[label] = 1.0
    return out


def onehot_decode(v) -> int:
    v = _plain(v, "one-hot decode").ravel()
    if v.size == 0:
        raise DomainError("cannot decode an empty vector")
    return int(np.argmax(v))


def sgd_update(param, grad, lr: float):
    if lr < 0:
        raise DomainError(f"learning rate must be non-negative, got {lr}")
    param = np.asarray(param, dtype=float)
    grad = np.asarray(grad, dtype=float)
    if param.shape != grad.shape:
        raise ShapeMismatch(f"parameter {param.shape} vs gradient {grad.shape}")
    return param - lr * grad


def mape(y_hat, y) -> float:
    """Mean absolute percentage error, in percent."""
    y_hat, y = np.asarray(y_hat, dtype=float).ravel(), np.asarray(y, dtype=float).ravel()
    return float(100.0 * np.mean(np.abs((y - y_hat) / y)))
