"""Multi-directed computational graph.

Nodes hold a computation object plus the ``sources`` labels written by the
FHE parameter discovery; edges hold one signal slot per receptor.  Parallel
edges are ordinary, independent records.  Edge order is insertion order
everywhere, which is what makes input stacking deterministic.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, NamedTuple, Optional

from .errors import DuplicateNode, SchemaError, UnknownNode

NODE_KINDS: Dict[str, type] = {}

# figure legend of the sphira/constelation graphs
CATEGORY_COLOURS = {
    "input": "lightblue",
    "conv": "gold",
    "dense": "pink",
    "loss": "plum",
    "output": "orange",
    "glue": "tomato",
    "encryption": "palegreen",
}


def register(cls):
    """Class decorator adding a node class to the document registry under ``cls.kind``."""
    NODE_KINDS[cls.kind] = cls
    return cls


class ComputationNode:
    """Interface every graph node implements.

    A node exposes named receptors (at least ``forward`` and ``backward``) and
    a constant multiplicative-depth ``cost``.  ``config`` must be JSON-friendly
    and sufficient to rebuild the node through :func:`make_node`.
    """

    kind = "Node"
    category = "glue"
    receptors = ("forward", "backward")

    def __init__(self, **config):
        self.config = config

    def cost(self) -> int:
        return 0

    def receptor(self, name: str, signal):
        if name not in self.receptors:
            return None
        return getattr(self, name)(signal)

    def forward(self, signal):
        return signal

    def backward(self, gradient):
        return None

    def __repr__(self):
        return f"{type(self).__name__}({self.config})"


def make_node(kind: str, config: Optional[dict] = None) -> ComputationNode:
    try:
        cls = NODE_KINDS[kind]
    except KeyError:
        raise SchemaError(f"unknown node kind {kind!r}") from None
    return cls(**(config or {}))


@dataclass
class EdgeRecord:
    src: str
    dst: str
    key: int
    weight: int = 0
    signals: Dict[str, Any] = field(default_factory=dict, repr=False)

    def signal(self, receptor: str):
        return self.signals.get(receptor)

    def set_signal(self, receptor: str, value) -> None:
        self.signals[receptor] = value

    def clear(self, receptor: Optional[str] = None) -> None:
        if receptor is None:
            self.signals.clear()
        else:
            self.signals.pop(receptor, None)


@dataclass
class NodeRecord:
    node: ComputationNode
    sources: Dict[str, int] = field(default_factory=dict)


class Topology(NamedTuple):
    successors: List[str]
    in_edges: List[EdgeRecord]
    out_edges: List[EdgeRecord]


class ComputationalGraph:
    def __init__(self):
        self.nodes: Dict[str, NodeRecord] = {}
        self.edges: List[EdgeRecord] = []
        self.meta: Dict[str, Any] = {}
        self._in: Dict[str, List[EdgeRecord]] = {}
        self._out: Dict[str, List[EdgeRecord]] = {}
        self._next_key: Dict[tuple, int] = {}

    def __len__(self):
        return len(self.nodes)

    def __contains__(self, node_id):
        return node_id in self.nodes

    def add_node(self, node_id: str, node: ComputationNode) -> None:
        if node_id in self.nodes:
            raise DuplicateNode(node_id)
        self.nodes[node_id] = NodeRecord(node)
        self._in[node_id] = []
        self._out[node_id] = []

    def add_edge(self, src: str, dst: str) -> int:
        for n in (src, dst):
            if n not in self.nodes:
                raise UnknownNode(n)
        key = self._next_key.get((src, dst), 0)
        self._next_key[(src, dst)] = key + 1
        edge = EdgeRecord(src, dst, key, weight=self.nodes[dst].node.cost())
        self.edges.append(edge)
        self._out[src].append(edge)
        self._in[dst].append(edge)
        return key

    def node(self, node_id: str) -> ComputationNode:
        return self._record(node_id).node

    def _record(self, node_id: str) -> NodeRecord:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise UnknownNode(node_id) from None

    def in_edges(self, node_id: str) -> List[EdgeRecord]:
        self._record(node_id)
        return list(self._in[node_id])

    def out_edges(self, node_id: str) -> List[EdgeRecord]:
        self._record(node_id)
        return list(self._out[node_id])

    def successors(self, node_id: str) -> List[str]:
        self._record(node_id)
        return list(dict.fromkeys(e.dst for e in self._out[node_id]))

    def predecessors(self, node_id: str) -> List[str]:
        self._record(node_id)
        return list(dict.fromkeys(e.src for e in self._in[node_id]))

    def topology(self, node_id: str) -> Topology:
        return Topology(self.successors(node_id), self.in_edges(node_id), self.out_edges(node_id))

    @property
    def number_of_edges(self) -> int:
        return len(self.edges)

    def sinks(self) -> List[str]:
        return [n for n in self.nodes if not self._out[n]]

    def entries(self) -> List[str]:
        return [n for n in self.nodes if not self._in[n]]

    def clear_signals(self) -> None:
        for e in self.edges:
            e.clear()

    def clear_sources(self) -> None:
        for rec in self.nodes.values():
            rec.sources = {}

    def find(self, predicate: Callable[[ComputationNode], bool]) -> List[str]:
        return [n for n, rec in self.nodes.items() if predicate(rec.node)]


def serialize(g: ComputationalGraph) -> dict:
    """Graph structure as a JSON-ready document. Signals are never included."""
    doc = {
        "nodes": [
            {"id": n, "kind": rec.node.kind, "config": rec.node.config}
            for n, rec in g.nodes.items()
        ],
        "edges": [{"src": e.src, "dst": e.dst} for e in g.edges],
    }
    if g.meta:
        doc["meta"] = g.meta
    return doc


def deserialize(doc: dict) -> ComputationalGraph:
    if not isinstance(doc, dict) or not isinstance(doc.get("nodes"), list) \
            or not isinstance(doc.get("edges", []), list):
        raise SchemaError("graph document needs a 'nodes' list and an 'edges' list")
    g = ComputationalGraph()
    for entry in doc["nodes"]:
        try:
            node_id, kind = entry["id"], entry["kind"]
        except (KeyError, TypeError):
            raise SchemaError(f"malformed node entry {entry!r}") from None
        config = entry.get("config") or {}
        if not isinstance(config, dict):
            raise SchemaError(f"config of node {node_id!r} is not a mapping")
        g.add_node(node_id, make_node(kind, config))
    for entry in doc.get("edges", []):
        try:
            g.add_edge(entry["src"], entry["dst"])
        except (KeyError, TypeError):
            raise SchemaError(f"malformed edge entry {entry!r}") from None
        except UnknownNode as err:
            raise SchemaError(f"edge refers to unknown node {err}") from None
    g.meta = dict(doc.get("meta") or {})
    return g


def save(g: ComputationalGraph, path) -> None:
    with open(path, "w") as fh:
        json.dump(serialize(g), fh, indent=1)


def load(path) -> ComputationalGraph:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as err:
            raise SchemaError(f"{path}: {err}") from None
    return deserialize(doc)


def export_dot(g: ComputationalGraph, name: str = "G") -> str:
    lines = [f'digraph "{name}" {{', "  node [style=filled];"]
    for n, rec in g.nodes.items():
        colour = CATEGORY_COLOURS.get(rec.node.category, "white")
        lines.append(f'  "{n}" [label="{n}\\n{rec.node.kind}", fillcolor="{colour}"];')
    for e in g.edges:
        lines.append(f'  "{e.src}" -> "{e.dst}" [label="{e.weight}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
