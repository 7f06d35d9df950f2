"""Builders for the two network shapes: ``sphira`` (image classification) and
``constellation`` (time-series regression)."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .graph import ComputationalGraph
from .nodes import (CC, CCE, MSE, Argmax, Decrypt, Dense, Encrypt, Gather, Input, OneHot,
                    OneHotDecode, Output, ReluApprox, Rotate, SigmoidApprox, Softmax, Stack)


def _seeds(seed):
    rng = np.random.default_rng(seed)
    while True:
        yield int(rng.integers(2 ** 31))


def _conv_front(g, input_shape, kernel, stride, seeds):
    """x -> encrypt -> CC -> one rotate/slot-sum per window -> stack."""
    g.add_node("x", Input(shape=list(input_shape)))
    g.add_node("x_enc", Encrypt())
    cc = CC(input_shape=input_shape, kernel_shape=kernel, stride=stride, seed=next(seeds))
    g.add_node("cc", cc)
    g.add_node("stack", Stack())
    g.add_edge("x", "x_enc")
    g.add_edge("x_enc", "cc")
    for t in range(cc.T_x):
        g.add_node(f"sum_{t}", Rotate(mode="sum"))
        g.add_edge("cc", f"sum_{t}")
        g.add_edge(f"sum_{t}", "stack")
    return cc.T_x


def build_sphira(num_classes: int = 10, input_shape: Sequence[int] = (28, 28),
                 kernel: Sequence[int] = (3, 3), stride=1, q: float = 1.0,
                 seed: int = 0) -> ComputationalGraph:
    """Encrypted CNN classifier.

    One dense neuron plus ReLU approximation per class, each decrypted on its
    own; the decrypted activations are gathered into the logit vector ``a``
    which feeds both the loss branch (softmax, CCE against the one-hot ``y``)
    and the prediction branch (argmax, one-hot decode into ``y_hat``).
    """
    g = ComputationalGraph()
    seeds = _seeds(seed)
    windows = _conv_front(g, tuple(input_shape), tuple(kernel), stride, seeds)
    g.add_node("a", Gather())
    for c in range(num_classes):
        g.add_node(f"dense_{c}", Dense(inputs=windows, item_shape=(1,), seed=next(seeds)))
        g.add_node(f"relu_{c}", ReluApprox(q=q))
        g.add_node(f"dec_{c}", Decrypt())
        g.add_edge("stack", f"dense_{c}")
        g.add_edge(f"dense_{c}", f"relu_{c}")
        g.add_edge(f"relu_{c}", f"dec_{c}")
        g.add_edge(f"dec_{c}", "a")

    g.add_node("softmax", Softmax())
    g.add_node("y", Input())
    g.add_node("y_onehot", OneHot(num_classes=num_classes))
    g.add_node("loss", CCE())
    g.add_edge("a", "softmax")
    g.add_edge("softmax", "loss")  # CCE stacks [probabilities, target] in this order
    g.add_edge("y", "y_onehot")
    g.add_edge("y_onehot", "loss")

    g.add_node("argmax", Argmax())
    g.add_node("y_hat", OneHotDecode())
    g.add_edge("a", "argmax")
    g.add_edge("argmax", "y_hat")

    g.meta = {
        "name": "sphira",
        "task": "classification",
        "inputs": ["x", "y"],
        "loss": "loss",
        "prediction": "y_hat",
        "logits": "a",
        "num_classes": num_classes,
        "input_shape": list(input_shape),
    }
    return g


def build_constellation(window: int = 8, features: int = 2, kernel_steps: int = 3,
                        stride: int = 1, seed: int = 0) -> ComputationalGraph:
    """Encrypted 1D (time-axis) CNN regressor ending in a sigmoid approximation."""
    g = ComputationalGraph()
    seeds = _seeds(seed)
    windows = _conv_front(g, (window, features), (kernel_steps, features), (stride, 1), seeds)
    g.add_node("dense", Dense(inputs=windows, item_shape=(1,), seed=next(seeds)))
    g.add_node("sigmoid", SigmoidApprox())
    g.add_node("dec", Decrypt())
    g.add_node("y", Input())
    g.add_node("loss", MSE())
    g.add_node("y_hat", Output())
    for src, dst in [("stack", "dense"), ("dense", "sigmoid"), ("sigmoid", "dec"),
                     ("dec", "loss"), ("y", "loss"), ("dec", "y_hat")]:
        g.add_edge(src, dst)
    g.meta = {
        "name": "constellation",
        "task": "regression",
        "inputs": ["x", "y"],
        "loss": "loss",
        "prediction": "y_hat",
        "input_shape": [window, features],
    }
    return g


BUILDERS = {"sphira": build_sphira, "constellation": build_constellation}
