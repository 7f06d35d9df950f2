"""Neuronal firing: exhaustive, depth-first, blocking graph stimulation.

A node fires once every inbound edge slot for the receptor holds a signal (or
when it is handed a bootstrap signal directly).  Its output is written to the
outbound edges and the carrier then descends into each neighbour in turn.

Receptors listed in :data:`REVERSED_RECEPTORS` travel against the edges:
they read the slots of a node's out-edges and write to its in-edges, so a
``backward`` pass walks the same graph from the loss back to the inputs.
"""
from __future__ import annotations

import types
from typing import Any, Callable, Iterable, Optional, Sequence

from .errors import ArityError, GeneratorUnderrun
from .graph import ComputationalGraph

REVERSED_RECEPTORS = frozenset({"backward"})

Trace = Callable[[str, str, str], None]


class Broadcast:
    """The same value goes to every outbound edge."""

    __slots__ = ("value",)

    def __init__(self, value):
        self.value = value

    def __repr__(self):
        return f"Broadcast({self.value!r})"


class Generated:
    """One value per outbound edge, handed out in edge order."""

    __slots__ = ("values",)

    def __init__(self, values: Iterable):
        self.values = values

    def __repr__(self):
        return f"Generated({self.values!r})"


class _NotReady:
    def __repr__(self):
        return "NotReady"

    def __bool__(self):
        return False


NotReady = _NotReady()


def _inbound(g, n, r):
    return g._in[n] if r not in REVERSED_RECEPTORS else g._out[n]


def _outbound(g, n, r):
    return g._out[n] if r not in REVERSED_RECEPTORS else g._in[n]


def _neighbours(g, n, r):
    edges = _outbound(g, n, r)
    attr = "dst" if r not in REVERSED_RECEPTORS else "src"
    return list(dict.fromkeys(getattr(e, attr) for e in edges))


def fire(
    g: ComputationalGraph,
    n: Sequence[str],
    r: Sequence[str],
    s: Sequence[Any],
    trace: Optional[Trace] = None,
) -> ComputationalGraph:
    """Stimulate ``n[i]`` through receptor ``r[i]`` with signal ``s[i]``, in order."""
    if not len(n) == len(r) == len(s):
        raise ArityError(f"got {len(n)} nodes, {len(r)} receptors and {len(s)} signals")
    for node_id in n:
        g._record(node_id)
    for node_id, receptor, signal in zip(n, r, s):
        signal_carrier(g, node_id, receptor, signal, trace=trace)
    return g


def signal_carrier(g, n, r, bootstrap=None, trace: Optional[Trace] = None) -> None:
    """Carry one signal from ``n`` through everything it can reach.

    Depth-first pre-order over neighbours, run with an explicit stack so long
    chains do not hit the interpreter recursion limit.
    """
    g._record(n)
    stack = [(n, bootstrap)]
    while stack:
        node_id, boot = stack.pop()
        s = get_inbound_signal(g, node_id, r, boot)
        if s is NotReady:
            if trace:
                trace(node_id, r, "blocked")
            continue
        if trace:
            trace(node_id, r, "activated")
        out = apply_signal(g, node_id, r, s)
        if out is None:
            continue
        set_outbound_signals(g, node_id, r, out)
        if trace:
            trace(node_id, r, "emitted")
        stack.extend((m, None) for m in reversed(_neighbours(g, node_id, r)))


def get_inbound_signal(g, n, r, bootstrap=None):
    """Collect the inbound slots for ``r``; ``NotReady`` unless all are full.

    A single inbound edge yields its bare value, several yield a list in edge
    order.  Slots are consumed (cleared) once read.
    """
    if bootstrap is not None:
        return bootstrap
    edges = _inbound(g, n, r)
    if not edges:
        return NotReady
    # arrivals usually follow edge order, so the last slot is the likeliest gap
    for e in reversed(edges):
        if e.signals.get(r) is None:
            return NotReady
    s = [e.signals.pop(r) for e in edges]
    if len(s) == 1:
        return s[0]
    return s


def apply_signal(g, n, r, s):
    """Invoke the node's receptor and normalise what it returns.

    Returns ``None`` (nothing to send), :class:`Broadcast` or
    :class:`Generated`.  Errors raised by the node propagate with the node id
    attached as ``err.node_id``.
    """
    if s is None or s is NotReady:
        return None
    try:
        out = g.nodes[n].node.receptor(r, s)
    except Exception as err:
        _tag(err, n)
        raise
    if out is None or isinstance(out, (Broadcast, Generated)):
        return out
    if isinstance(out, types.GeneratorType):
        return Generated(out)
    return Broadcast(out)


def set_outbound_signals(g, n, r, s) -> None:
    if s is None:
        return
    edges = _outbound(g, n, r)
    if isinstance(s, Generated):
        values = iter(s.values)
        for e in edges:
            try:
                e.set_signal(r, next(values))
            except StopIteration:
                raise GeneratorUnderrun(
                    f"node {n!r} generated fewer values than its {len(edges)} edges"
                ) from None
            except Exception as err:
                _tag(err, n)
                raise
        return
    value = s.value if isinstance(s, Broadcast) else s
    for e in edges:
        e.set_signal(r, value)


def _tag(err, n):
    if getattr(err, "node_id", None) is None:
        try:
            err.node_id = n
        except AttributeError:
            pass
