"""Random plaintext DAG programs for checking the firing engine against recursion."""
import numpy as np

from fhegraph.firing import Generated
from fhegraph.graph import ComputationalGraph, ComputationNode

from conftest import random_dag


def step(a, b, fan_out, arg):
    """The node program shared by the engine run and the recursive oracle."""
    if isinstance(arg, list):
        v = 0.0
        for i, x in enumerate(arg):
            v = v + (i + 1) * x
    else:
        v = arg
    out = a * v + b
    if fan_out is None:
        return out
    return [out + k for k in range(fan_out)]


class Program(ComputationNode):
    kind = "Program"

    def __init__(self, a=1.0, b=0.0, fan_out=None, **config):
        super().__init__(**config)
        self.a, self.b, self.fan_out = a, b, fan_out
        self.calls = 0
        self.out = None

    def forward(self, signal):
        self.calls += 1
        self.out = step(self.a, self.b, self.fan_out, signal)
        return Generated(self.out) if self.fan_out is not None else self.out


def program_graph(seed, max_nodes=8):
    rng = np.random.default_rng(seed)
    shape = random_dag(rng, max_nodes=max_nodes, parallel_p=0.2)
    g = ComputationalGraph()
    for n in shape.nodes:
        fan = len(shape._out[n])
        gen = fan > 1 and rng.random() < 0.4
        g.add_node(n, Program(a=float(rng.normal()), b=float(rng.normal()),
                              fan_out=fan if gen else None))
    for e in shape.edges:
        g.add_edge(e.src, e.dst)
    inputs = {n: float(rng.normal()) for n in g.entries()}
    return g, inputs


def oracle_fn(g):
    def fn(n, arg):
        node = g.node(n)
        return step(node.a, node.b, node.fan_out, arg)
    return fn
