"""Per-example training and evaluation driven by the firing engine."""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from functools import partial
from typing import Callable, Dict, List, Optional

import numpy as np

from . import ops
from .autofhe import apply_params, auto_he, parameterise
from .data import TEST, TRAIN, VAL, Dataset
from .errors import StateError
from .firing import fire
from .graph import ComputationalGraph
from .nodes import Encrypt, set_data_kind, trainable_nodes

log = logging.getLogger(__name__)

DATA_KINDS = ("plaintext", "ciphertext")


@dataclass
class TrainConfig:
    epochs: int = 5
    lr: float = 0.01
    seed: int = 0
    scale_power: int = 40
    special_multiplier: float = 1.5
    data_kind: str = "plaintext"
    noise: float = 0.0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.lr < 0:
            raise ValueError(f"learning rate must be >= 0, got {self.lr}")
        if self.data_kind not in DATA_KINDS:
            raise ValueError(f"data kind must be one of {DATA_KINDS}, got {self.data_kind!r}")


def parameterise_graph(g: ComputationalGraph, scale_power: int = 40, special_multiplier: float = 1.5,
                       concern=None, entries=None, param_fn=None):
    """Run source/cost discovery from the graph inputs and key every group."""
    entries = entries or g.meta.get("inputs") or g.entries()
    groups = auto_he(g, entries, concern)
    param_fn = param_fn or partial(parameterise, s=scale_power, p=special_multiplier)
    return groups, apply_params(g, groups, param_fn)


def is_parameterised(g: ComputationalGraph) -> bool:
    return all(rec.node.keypair is not None for rec in g.nodes.values()
               if isinstance(rec.node, Encrypt))


def forward(g: ComputationalGraph, x, y=None, trace=None):
    """One forward pass; returns the prediction sink's value."""
    g.clear_signals()
    x_id, y_id = g.meta["inputs"][:2]
    ids, signals = [x_id], [x]
    if y is not None:
        ids.append(y_id)
        signals.append(np.atleast_1d(y))
    fire(g, ids, ["forward"] * len(ids), signals, trace=trace)
    return g.node(g.meta["prediction"]).value


def backward(g: ComputationalGraph, trace=None) -> None:
    """Backward pass from every sink: the loss is seeded with 1, prediction sinks with 0."""
    loss = g.meta["loss"]
    sinks = [loss] + [s for s in g.sinks() if s != loss]
    fire(g, sinks, ["backward"] * len(sinks), [1.0] + [0.0] * (len(sinks) - 1), trace=trace)


def step(g: ComputationalGraph, lr: float) -> None:
    for node in trainable_nodes(g).values():
        node.update(lr)


def _metric(task, predictions, targets) -> float:
    predictions, targets = np.asarray(predictions, dtype=float), np.asarray(targets, dtype=float)
    if task == "classification":
        return float(np.mean(predictions == targets))
    return ops.mape(predictions, targets)


def _scalar(pred):
    return float(np.asarray(pred).ravel()[0])


def evaluate(g: ComputationalGraph, ds: Dataset, trace=None):
    """Mean loss, accuracy (or MAPE) and predictions over ``ds``; no updates."""
    losses, preds = [], []
    for x, y in zip(ds.features, ds.labels):
        preds.append(_scalar(forward(g, x, y, trace)))
        losses.append(g.node(g.meta["loss"]).value)
    if not preds:
        return float("nan"), float("nan"), []
    return float(np.mean(losses)), _metric(ds.task, preds, ds.labels), preds


def predict(g: ComputationalGraph, features, trace=None) -> List[float]:
    return [_scalar(forward(g, x, None, trace)) for x in features]


def train(g: ComputationalGraph, ds: Dataset, cfg: TrainConfig, trace=None,
          on_row: Optional[Callable[[dict], None]] = None) -> List[dict]:
    """Per-example SGD; returns one metrics row per (epoch, split)."""
    set_data_kind(g, cfg.data_kind, cfg.noise, cfg.seed)
    if cfg.data_kind == "ciphertext" and not is_parameterised(g):
        raise StateError("ciphertext training needs a parameterised graph (parameterise_graph)")
    metric_name = "accuracy" if ds.task == "classification" else "mape"
    train_ds = ds.subset(TRAIN)
    rng = np.random.default_rng(cfg.seed)
    for node in trainable_nodes(g).values():
        node.zero_grad()
    history = []
    for epoch in range(1, cfg.epochs + 1):
        losses, preds, targets = [], [], []
        for i in rng.permutation(len(train_ds)):
            x, y = train_ds.features[i], train_ds.labels[i]
            preds.append(_scalar(forward(g, x, y, trace)))
            targets.append(y)
            losses.append(g.node(g.meta["loss"]).value)
            backward(g, trace)
            step(g, cfg.lr)
        rows = [{"epoch": epoch, "split": TRAIN, "loss": float(np.mean(losses)),
                 metric_name: _metric(ds.task, preds, targets)}]
        for split in (VAL, TEST):
            part = ds.subset(split)
            if len(part):
                loss, metric, _ = evaluate(g, part, trace)
                rows.append({"epoch": epoch, "split": split, "loss": loss, metric_name: metric})
        for row in rows:
            log.info("epoch %d %s loss=%.5f %s=%.4f", row["epoch"], row["split"], row["loss"],
                     metric_name, row[metric_name])
            if on_row:
                on_row(row)
        history.extend(rows)
    return history


def write_metrics_csv(history: List[dict], dest) -> None:
    """Write metrics rows to a path or an open text stream; floats keep full precision."""
    if not history:
        return
    if hasattr(dest, "write"):
        _write_rows(history, dest)
        return
    with open(dest, "w", newline="") as fh:
        _write_rows(history, fh)


def _write_rows(history, fh):
    writer = csv.DictWriter(fh, fieldnames=list(history[0]), lineterminator="\n")
    writer.writeheader()
    for row in history:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})


def compare(g: ComputationalGraph, ds: Dataset, trace=None) -> Dict[str, object]:
    """Run ``ds`` through the graph as plaintext and as ciphertext.

    The graph must already be parameterised.  Compares the values reaching
    the prediction branch (the logit vector for classifiers, the prediction
    itself for regressors) and the predictions.
    """
    if not is_parameterised(g):
        raise StateError("compare needs a parameterised graph")
    probe = g.meta.get("logits", g.meta["prediction"])
    runs = {}
    for kind in DATA_KINDS:
        set_data_kind(g, kind)
        outputs, preds = [], []
        for x in ds.features:
            preds.append(_scalar(forward(g, x, None, trace)))
            outputs.append(np.array(g.node(probe).value, dtype=float))
        runs[kind] = (np.array(outputs), np.array(preds))
    set_data_kind(g, "plaintext")
    (out_p, pred_p), (out_c, pred_c) = runs["plaintext"], runs["ciphertext"]
    return {
        "examples": len(ds),
        "max_abs_diff": float(np.max(np.abs(out_p - out_c))) if len(ds) else 0.0,
        "prediction_mismatches": int(np.sum(pred_p != pred_c)),
        "plaintext_predictions": pred_p.tolist(),
        "ciphertext_predictions": pred_c.tolist(),
    }


def save_parameters(g: ComputationalGraph, path) -> None:
    state = {n: {k: v.tolist() for k, v in node.parameters().items()}
             for n, node in trainable_nodes(g).items()}
    with open(path, "w") as fh:
        json.dump(state, fh)


def load_parameters(g: ComputationalGraph, path) -> None:
    with open(path) as fh:
        state = json.load(fh)
    nodes = trainable_nodes(g)
    missing = sorted(set(state) - set(nodes))
    if missing:
        raise StateError(f"parameter file names nodes missing from the graph: {missing}")
    for n, values in state.items():
        nodes[n].set_parameters(values)
