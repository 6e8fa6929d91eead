"""Finite-state congruence for k-FVS on t-parses, plus the direct
nonminimality tests.

For every subset ``S`` of boundary labels the state records the witness
sets ``V`` (``V ∩ ∂ = S``, ``|V| <= k``, ``G - V`` acyclic) through the
reduced forests -- parks -- they leave on the remaining boundary.  Each
park is stored with the smallest witness size producing it.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

from .graphcore import Graph, GraphError, _bits
from .tparse import BoundariedGraph, EdgeOp, TParse, VertexOp, realize

log = logging.getLogger(__name__)

INTERIOR = -1


# -- parks -------------------------------------------------------------------------
#
# A park is a tuple of tree codes, one per tree, sorted.  A tree code is
# ``(label, children)`` rooted at its least boundary label, interior
# vertices carrying label -1 and children sorted.  The encoding is canonical
# for forests whose boundary vertices carry distinct labels.

def park_reduce(graph: Graph, labels: dict[int, int]) -> tuple:
    """Reduce a forest with labelled boundary vertices to its park.

    ``labels`` maps boundary vertices to labels.  Interior vertices of degree
    at most one are deleted and interior degree-two vertices with an interior
    neighbour are contracted into it, until neither rule applies.
    """
    if not graph.is_acyclic():
        raise GraphError("park_reduce needs an acyclic graph")
    nbrs = {v: set(_bits(graph.adj[v])) for v in range(graph.order)}
    return _reduce_sets(nbrs, labels)


def _reduce_sets(nbrs: dict[int, set], labels: dict[int, int]) -> tuple:
    stack = [v for v in nbrs if v not in labels]
    while stack:
        v = stack.pop()
        if v not in nbrs or v in labels:
            continue
        nb = nbrs[v]
        if len(nb) <= 1:
            for u in nb:
                nbrs[u].discard(v)
                stack.append(u)
            del nbrs[v]
        elif len(nb) == 2:
            a, b = nb
            inner = a if a not in labels else b if b not in labels else None
            if inner is None:
                continue
            other = b if inner == a else a
            # contract v into its interior neighbour
            nbrs[other].discard(v)
            nbrs[inner].discard(v)
            nbrs[other].add(inner)
            nbrs[inner].add(other)
            del nbrs[v]
            stack += [inner, other]
    return _encode_forest(nbrs, labels)


def _encode_forest(nbrs, labels) -> tuple:
    trees = []
    seen = set()
    for v in sorted(labels, key=labels.get):
        if v in seen or v not in nbrs:
            continue
        trees.append(_encode_tree(v, None, nbrs, labels, seen))
    return tuple(sorted(trees))


def _encode_tree(v, parent, nbrs, labels, seen):
    seen.add(v)
    kids = tuple(sorted(_encode_tree(u, v, nbrs, labels, seen)
                        for u in nbrs[v] if u != parent))
    return (labels.get(v, INTERIOR), kids)


def _decode(park: tuple):
    """Explicit ``(nbrs, labels)`` for a park code."""
    nbrs: dict[int, set] = {}
    labels: dict[int, int] = {}

    def walk(code, parent):
        v = len(nbrs)
        nbrs[v] = set()
        if code[0] != INTERIOR:
            labels[v] = code[0]
        if parent is not None:
            nbrs[v].add(parent)
            nbrs[parent].add(v)
        for child in code[1]:
            walk(child, v)

    for tree in park:
        walk(tree, None)
    return nbrs, labels


def park_order(park: tuple) -> int:
    def count(code):
        return 1 + sum(count(c) for c in code[1])
    return sum(count(tree) for tree in park)


@lru_cache(maxsize=None)
def park_info(park: tuple):
    """(partition of labels, boundary-boundary edges) of a park."""
    blocks = []
    edges = set()

    def walk(code, acc, parent_label):
        lab = code[0]
        if lab != INTERIOR:
            acc.append(lab)
            if parent_label is not None and parent_label != INTERIOR:
                edges.add((min(lab, parent_label), max(lab, parent_label)))
        for c in code[1]:
            walk(c, acc, lab)

    for tree in park:
        acc: list[int] = []
        walk(tree, acc, None)
        blocks.append(tuple(sorted(acc)))
    return tuple(sorted(blocks)), frozenset(edges)


def park_graph(park: tuple) -> tuple[Graph, dict[int, int]]:
    nbrs, labels = _decode(park)
    return Graph(len(nbrs), [(u, v) for u in nbrs for v in nbrs[u] if u < v]), labels


@lru_cache(maxsize=None)
def _park_make_interior(park: tuple, label: int) -> tuple:
    nbrs, labels = _decode(park)
    for v, lab in list(labels.items()):
        if lab == label:
            del labels[v]
    return _reduce_sets(nbrs, labels)


@lru_cache(maxsize=None)
def _park_add_isolated(park: tuple, label: int) -> tuple:
    return tuple(sorted(park + ((label, ()),)))


@lru_cache(maxsize=None)
def _park_add_edge(park: tuple, i: int, j: int):
    """Park after adding boundary edge ij; None when it closes a cycle;
    the park itself when the edge is already present."""
    blocks, edges = park_info(park)
    if (i, j) in edges:
        return park
    if any(i in b and j in b for b in blocks):
        return None
    nbrs, labels = _decode(park)
    where = {lab: v for v, lab in labels.items()}
    a, b = where[i], where[j]
    nbrs[a].add(b)
    nbrs[b].add(a)
    return _encode_forest(nbrs, labels)


# -- states ------------------------------------------------------------------------

def _subsets(t: int):
    return range(1 << (t + 1))


@dataclass(frozen=True)
class FvsState:
    """``table[S]`` is a sorted tuple of ``(park, min witness size)`` for the
    label subset with bitmask ``S``."""

    t: int
    k: int
    table: tuple

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash((self.t, self.k, self.table)))

    def __hash__(self):
        return self._hash

    def f_value(self, S: int) -> int:
        entry = self.table[S]
        return min((s for _, s in entry), default=self.k + 1)

    def parks(self, S: int) -> frozenset:
        return frozenset(p for p, _ in self.table[S])

    def min_f(self) -> int:
        return min(self.f_value(S) for S in _subsets(self.t))

    def in_family(self) -> bool:
        return any(self.table[S] for S in _subsets(self.t))

    def all_parks(self):
        for entry in self.table:
            for p, _ in entry:
                yield p

    def profile(self):
        """Coarsening that keeps, per subset, the boundary edges and each
        connectivity partition with its least witness size.  Still an exact
        congruence (acyclicity of a gluing only sees the partition)."""
        return _profile(self)

    def serialize(self) -> str:
        return json.dumps({"t": self.t, "k": self.k,
                           "table": [[[_park_to_json(p), s] for p, s in e] for e in self.table]},
                          separators=(",", ":"))

    @classmethod
    def deserialize(cls, text: str) -> "FvsState":
        d = json.loads(text)
        table = tuple(tuple((_park_from_json(p), s) for p, s in e) for e in d["table"])
        return cls(d["t"], d["k"], table)


def _park_to_json(park):
    return [_code_to_json(c) for c in park]


def _code_to_json(code):
    return [code[0], [_code_to_json(c) for c in code[1]]]


def _park_from_json(data):
    return tuple(_code_from_json(c) for c in data)


def _code_from_json(data):
    return (data[0], tuple(_code_from_json(c) for c in data[1]))


@lru_cache(maxsize=200_000)
def _profile(state: FvsState):
    out = []
    for entry in state.table:
        if not entry:
            out.append(None)
            continue
        best: dict = {}
        edges = None
        for p, s in entry:
            blocks, pe = park_info(p)
            edges = pe
            if s < best.get(blocks, state.k + 1):
                best[blocks] = s
        out.append((edges, tuple(sorted(best.items()))))
    return tuple(out)


def _freeze(table: list[dict], k: int) -> tuple:
    return tuple(tuple(sorted((p, s) for p, s in d.items() if s <= k)) for d in table)


def _put(d: dict, park, size):
    old = d.get(park)
    if old is None or size < old:
        d[park] = size


def initial_state(t: int, k: int) -> FvsState:
    table = []
    for S in _subsets(t):
        size = S.bit_count()
        d = {}
        if size <= k:
            park = tuple((lab, ()) for lab in range(t + 1) if not S >> lab & 1)
            d[park] = size
        table.append(d)
    return FvsState(t, k, _freeze(table, k))


@lru_cache(maxsize=500_000)
def state_apply(state: FvsState, op) -> FvsState:
    t, k = state.t, state.k
    new = [dict() for _ in _subsets(t)]
    if isinstance(op, VertexOp):
        i = op.label
        bit = 1 << i
        for S, entry in enumerate(state.table):
            for park, size in entry:
                if S & bit:
                    base = park
                else:
                    base = _park_make_interior(park, i)
                if size + 1 <= k:
                    _put(new[S | bit], base, size + 1)
                _put(new[S & ~bit], _park_add_isolated(base, i), size)
    else:
        i, j = op.i, op.j
        mask = (1 << i) | (1 << j)
        for S, entry in enumerate(state.table):
            if S & mask:
                new[S] = dict(entry)
                continue
            for park, size in entry:
                q = _park_add_edge(park, i, j)
                if q is not None:
                    _put(new[S], q, size)
    return FvsState(t, k, _freeze(new, k))


def state_of(p: TParse, k: int) -> FvsState:
    """Fold :func:`state_apply` over the parse."""
    state = initial_state(p.t, k)
    for op in p.ops[p.t + 1:]:
        state = state_apply(state, op)
    return state


MAX_SCRATCH_INTERIOR = 24


def state_from_scratch(bg: BoundariedGraph, k: int) -> FvsState:
    """State computed directly from the witness-set definition."""
    interior = bg.interior()
    if len(interior) > MAX_SCRATCH_INTERIOR:
        from .solvers import ScaleError
        raise ScaleError("state_from_scratch is limited to small graphs")
    t = bg.t
    g = bg.graph
    table = []
    for S in _subsets(t):
        d: dict = {}
        s_labels = [lab for lab in range(t + 1) if S >> lab & 1]
        if len(s_labels) <= k:
            removed_b = {bg.boundary[lab] for lab in s_labels}
            for extra in range(k - len(s_labels) + 1):
                for V in combinations(interior, extra):
                    gone = removed_b | set(V)
                    keep = [v for v in range(g.order) if v not in gone]
                    h = g.induced(keep)
                    if not h.is_acyclic():
                        continue
                    index = {v: i for i, v in enumerate(keep)}
                    labels = {index[bg.boundary[lab]]: lab
                              for lab in range(t + 1) if not S >> lab & 1}
                    _put(d, park_reduce(h, labels), len(s_labels) + extra)
        table.append(d)
    return FvsState(t, k, _freeze(table, k))


def states_equal(a: FvsState, b: FvsState) -> bool:
    if (a.t, a.k) != (b.t, b.k):
        raise ValueError("states belong to different (t, k)")
    return a.table == b.table


# -- FES --------------------------------------------------------------------------

@dataclass(frozen=True)
class FesProfile:
    """Cyclomatic number (capped at k+1), boundary connectivity partition and
    boundary-boundary edges: an exact finite-state description for k-FES."""

    k: int
    r: int
    blocks: tuple
    edges: frozenset

    @classmethod
    def of(cls, bg: BoundariedGraph, k: int) -> "FesProfile":
        g = bg.graph
        comp_of = {}
        comps = g.components()
        for idx, comp in enumerate(comps):
            for v in comp:
                comp_of[v] = idx
        r = g.size - g.order + len(comps)
        groups: dict[int, list[int]] = {}
        for lab, v in enumerate(bg.boundary):
            groups.setdefault(comp_of[v], []).append(lab)
        edges = frozenset(
            (i, j) for i in range(len(bg.boundary)) for j in range(i + 1, len(bg.boundary))
            if g.has_edge(bg.boundary[i], bg.boundary[j]))
        return cls._make(k, r, groups.values(), edges)

    @classmethod
    def _make(cls, k, r, blocks, edges):
        if r > k:
            return cls(k, k + 1, (), frozenset())
        return cls(k, r, tuple(sorted(tuple(sorted(b)) for b in blocks)), frozenset(edges))

    def in_family(self) -> bool:
        return self.r <= self.k

    def apply(self, op) -> "FesProfile":
        if not self.in_family():
            return self
        if isinstance(op, VertexOp):
            i = op.label
            blocks = [tuple(x for x in b if x != i) for b in self.blocks]
            blocks = [b for b in blocks if b] + [(i,)]
            edges = {e for e in self.edges if i not in e}
            return self._make(self.k, self.r, blocks, edges)
        e = (op.i, op.j)
        if e in self.edges:
            return self
        bi = next(b for b in self.blocks if op.i in b)
        bj = next(b for b in self.blocks if op.j in b)
        if bi == bj:
            return self._make(self.k, self.r + 1, self.blocks, self.edges | {e})
        blocks = [b for b in self.blocks if b not in (bi, bj)] + [bi + bj]
        return self._make(self.k, self.r, blocks, self.edges | {e})


# -- direct tests -----------------------------------------------------------------

def _interior_low_degree(bg: BoundariedGraph) -> bool:
    g = bg.graph
    return any(g.adj[v].bit_count() <= 1 for v in bg.interior())


def fvs_direct_nonminimal(p: TParse | BoundariedGraph, k: int | None = None) -> bool:
    """An interior vertex of degree at most one makes the parse nonminimal."""
    bg = realize(p) if isinstance(p, TParse) else p
    return _interior_low_degree(bg)


def fes_direct_nonminimal(p: TParse | BoundariedGraph, k: int | None = None) -> bool:
    """Interior degree <= 1, or an interior-interior edge whose contraction
    removes only that edge."""
    bg = realize(p) if isinstance(p, TParse) else p
    if _interior_low_degree(bg):
        return True
    g = bg.graph
    bset = set(bg.boundary)
    return any(u not in bset and v not in bset and not (g.adj[u] & g.adj[v])
               for u, v in g.iter_edges())


def park_count_bound(boundary_size: int) -> int:
    """Upper bound on the number of parks for a given boundary size."""
    b = boundary_size
    return (b + 1) ** (b - 1) * 2 * (2 * b - 1) ** (2 * b - 3)


def park_order_bound(boundary_size: int) -> int:
    return max(3 * boundary_size - 3, boundary_size)
