"""Block-level automatic CKKS parameterisation of a computational graph.

Discovery walks the graph from each entry node, labelling every node it
reaches with ``sources[source] = accumulated multiplicative depth``.  A
*concern* node (encryption boundary: encrypt, rotate, decrypt) ends the walk
for the current source and starts a fresh walk with itself as the source.
Sources whose labels meet at some node interact, so they are merged into one
parameter group whose cost is the largest depth any member reaches.
"""
from __future__ import annotations

import warnings
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence

from . import ckks
from .errors import CycleError, DomainError
from .graph import ComputationalGraph, ComputationNode

CKKS = 2  # scheme id used by MS-SEAL


@dataclass(frozen=True)
class CkksParams:
    scheme: int
    scale: float
    coeff_mod_bits: tuple
    poly_modulus_degree: int
    security_level: int = 128  # recorded, not estimated

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "scale": self.scale,
            "coeff_mod_bits": list(self.coeff_mod_bits),
            "poly_modulus_degree": self.poly_modulus_degree,
            "security_level": self.security_level,
        }


@dataclass
class ParamGroups:
    membership: Dict[str, int] = field(default_factory=dict)
    costs: List[int] = field(default_factory=list)

    def __iter__(self):
        # unpacks like the (dict, list) tuple the discovery produces
        return iter((self.membership, self.costs))

    def members(self, group: int) -> List[str]:
        return [s for s, gi in self.membership.items() if gi == group]

    def nodes_of(self, g: ComputationalGraph, group: int) -> List[str]:
        """Members of ``group`` plus every node labelled by one of them."""
        members = set(self.members(group))
        return [n for n, rec in g.nodes.items() if n in members or members & rec.sources.keys()]

    def to_dict(self) -> dict:
        return {"membership": dict(self.membership), "costs": list(self.costs)}


def default_concern(node: ComputationNode) -> bool:
    from .nodes import Decrypt, Encrypt, Rotate

    return isinstance(node, (Encrypt, Rotate, Decrypt))


def as_concern(concern) -> Callable[[ComputationNode], bool]:
    """Accept a predicate, a node class or a tuple of node classes."""
    if concern is None:
        return default_concern
    if isinstance(concern, type) or isinstance(concern, tuple):
        return lambda node: isinstance(node, concern)
    return concern


def _visit_budget(g: ComputationalGraph) -> int:
    # labels only ever grow, and on acyclic input never past |V|*max_cost, so
    # this many visits per source cannot be exceeded without a costly cycle
    max_cost = max((rec.node.cost() for rec in g.nodes.values()), default=0)
    return g.number_of_edges * (len(g.nodes) * max_cost + 1) + len(g.nodes)


def auto_he_discover(g: ComputationalGraph, n: str, s: str, concern=None, c: int = 0,
                     *, _restarted=None, _order=None) -> None:
    """Label ``g`` in place with the depth each source reaches at each node.

    Depth-first like the recursive formulation, but driven by an explicit
    stack, and a branch is cut as soon as it cannot raise a label.
    """
    if c < 0:
        raise DomainError(f"cost must be non-negative, got {c}")
    g._record(n)
    g._record(s)
    is_concern = as_concern(concern)
    restarted = set() if _restarted is None else _restarted
    order = [] if _order is None else _order
    budget = _visit_budget(g)
    visits = Counter()
    stack = [(n, s, c)]
    while stack:
        node_id, src, cost = stack.pop()
        visits[src] += 1
        if visits[src] > budget:
            raise CycleError(f"discovery from {src!r} exceeded {budget} visits; costly cycle?")
        rec = g.nodes[node_id]
        if src != node_id:
            known = rec.sources.get(src)
            if known is not None and known >= cost:
                continue
            rec.sources[src] = cost
            if is_concern(rec.node):
                if node_id not in restarted:
                    restarted.add(node_id)
                    order.append(node_id)
                    stack.append((node_id, node_id, 0))
                continue
        for nxt in reversed(g.successors(node_id)):
            stack.append((nxt, src, cost + g.nodes[nxt].node.cost()))


class _UnionFind:
    def __init__(self, items: Iterable[str]):
        self.parent = {x: x for x in items}

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def auto_he(g: ComputationalGraph, n: Sequence[str], concern=None) -> ParamGroups:
    """Discover sources and costs from entries ``n`` and merge interacting sources."""
    is_concern = as_concern(concern)
    g.clear_sources()
    order: List[str] = []
    restarted = set(n)
    for entry in n:
        if entry in order:
            continue
        order.append(entry)
        auto_he_discover(g, entry, entry, is_concern, 0, _restarted=restarted, _order=order)

    uf = _UnionFind(order)
    for rec in g.nodes.values():
        labelled = list(rec.sources)
        for other in labelled[1:]:
            uf.union(labelled[0], other)

    groups = ParamGroups()
    root_index: Dict[str, int] = {}
    for src in order:
        root = uf.find(src)
        if root not in root_index:
            root_index[root] = len(groups.costs)
            groups.costs.append(0)
        groups.membership[src] = root_index[root]
    for rec in g.nodes.values():
        for src, cost in rec.sources.items():
            gi = groups.membership[src]
            if cost > groups.costs[gi]:
                groups.costs[gi] = cost
    return groups


def parameterise(c: int, s: int = 40, p: float = 1.5) -> CkksParams:
    """CKKS parameters for a group whose deepest path has ``c`` multiplications."""
    if c < 0:
        raise DomainError(f"group cost must be non-negative, got {c}")
    if s < 30:
        warnings.warn(f"scale power {s} < 30 risks noise blow-up and prime scarcity", stacklevel=2)
    m = [s] * (c + 2)
    m[0] = int(m[0] * p)
    m[-1] = int(m[-1] * p)
    b = 27
    while b < sum(m):
        b *= 2
    return CkksParams(scheme=CKKS, scale=float(2 ** s), coeff_mod_bits=tuple(m),
                      poly_modulus_degree=int(1024 * (b / 27)))


def apply_params(g: ComputationalGraph, groups: ParamGroups,
                 param_fn: Optional[Callable[[int], CkksParams]] = None) -> Dict[int, CkksParams]:
    """Parameterise each group and hand params plus a group key to its boundary nodes.

    Every boundary node also receives the shared keyring, so decrypting and
    rotating nodes can open ciphertexts produced by other groups.
    """
    param_fn = param_fn or parameterise
    params = {gi: param_fn(cost) for gi, cost in enumerate(groups.costs)}
    keys = {gi: ckks.keygen(p) for gi, p in params.items()}
    keyring = {kp.key_id: kp for kp in keys.values()}
    for src, gi in groups.membership.items():
        node = g.node(src)
        if hasattr(node, "set_params"):
            node.set_params(params[gi], keys[gi], keyring)
    return params
