"""Independent reference implementations the tests compare against.

They share no code with the package: plain recursion, exhaustive path
enumeration and boolean-matrix closure.
"""
import numpy as np


def all_paths(g, src, stop=lambda n: False):
    """Every path from ``src`` (list of node ids), not continuing past ``stop`` nodes."""
    out = []

    def walk(path):
        node = path[-1]
        out.append(list(path))
        if len(path) > 1 and stop(node):
            return
        for e in g._out[node]:
            walk(path + [e.dst])

    walk([src])
    return out


def brute_force_labels(g, entries, is_concern):
    """Labels by enumerating every path; concerns end paths and become new sources."""
    labels = {n: {} for n in g.nodes}
    sources, pending = [], list(entries)
    while pending:
        s = pending.pop(0)
        if s in sources:
            continue
        sources.append(s)
        for path in all_paths(g, s, stop=lambda n: is_concern(g.nodes[n].node)):
            if len(path) < 2:
                continue
            end = path[-1]
            cost = sum(g.nodes[v].node.cost() for v in path[1:])
            labels[end][s] = max(labels[end].get(s, -1), cost)
            if is_concern(g.nodes[end].node) and end not in sources and end not in pending:
                pending.append(end)
    return labels, sources


def closure_partition(labels, sources):
    """Partition sources by the transitive closure of 'labelled at the same node'."""
    idx = {s: i for i, s in enumerate(sources)}
    k = len(sources)
    reach = np.eye(k, dtype=bool)
    for lab in labels.values():
        present = [idx[s] for s in lab]
        for a in present:
            for b in present:
                reach[a, b] = True
    for m in range(k):  # Warshall
        reach |= reach[:, [m]] & reach[[m], :]
    return {frozenset(sources[j] for j in range(k) if reach[i, j]) for i in range(k)}


def brute_force_groups(g, entries, is_concern):
    labels, sources = brute_force_labels(g, entries, is_concern)
    parts = closure_partition(labels, sources)
    costs = {}
    for part in parts:
        costs[part] = max([lab[s] for lab in labels.values() for s in lab if s in part], default=0)
    return parts, costs


def evaluate_recursive(g, inputs, fn):
    """Functional evaluation: value on edge ``e`` = fn(node, inbound values)[edge index]."""
    memo = {}

    def outputs(n):
        if n not in memo:
            ins = g._in[n]
            if not ins:
                arg = inputs[n]
            elif len(ins) == 1:
                arg = edge_value(ins[0])
            else:
                arg = [edge_value(e) for e in ins]
            memo[n] = fn(n, arg)
        return memo[n]

    def edge_value(e):
        out = outputs(e.src)
        return out[g._out[e.src].index(e)] if isinstance(out, list) else out

    for n in g.nodes:
        outputs(n)
    return memo


def parameterise_by_hand(c, s=40, p=1.5):
    """Line-by-line re-execution of the modulus-chain heuristic."""
    chain = []
    for i in range(c + 2):
        chain.append(s)
    chain[0] = int(chain[0] * p)
    chain[len(chain) - 1] = int(chain[len(chain) - 1] * p)
    total = 0
    for bits in chain:
        total += bits
    bound = 27
    while bound < total:
        bound = bound * 2
    degree = int(1024 * (bound / 27))
    return chain, degree


def naive_cross_correlate(x, k, stride):
    """Loop-over-windows reference, written independently of window_indices."""
    x, k = np.asarray(x, float), np.asarray(k, float)
    if x.ndim == 1:
        return np.array([np.sum(x[i:i + k.size] * k) for i in range(0, x.size - k.size + 1, stride)])
    out = []
    for i in range(0, x.shape[0] - k.shape[0] + 1, stride):
        for j in range(0, x.shape[1] - k.shape[1] + 1, stride):
            out.append(np.sum(x[i:i + k.shape[0], j:j + k.shape[1]] * k))
    return np.array(out)


def central_difference(f, x, h=1e-5):
    x = np.array(x, dtype=float)
    grad = np.zeros_like(x)
    flat = x.ravel()
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + h
        up = f(x.copy())
        flat[i] = old - h
        down = f(x.copy())
        flat[i] = old
        grad.ravel()[i] = (up - down) / (2 * h)
    return grad


def relative_error(a, b):
    a, b = np.ravel(np.asarray(a, float)), np.ravel(np.asarray(b, float))
    scale = max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)
    return float(np.linalg.norm(a - b) / scale)
