"""t-parses: operator strings generating boundaried graphs of pathwidth <= t.

A t-parse starts with ``v0 v1 ... vt`` and continues with vertex operators
``v<i>`` (new vertex, rebinds label i) and edge operators ``e<i>,<j>`` (edge
between the vertices bound to labels i and j; duplicates are ignored).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

from .graphcore import Graph, _bits, canonical_form


class ParseError(ValueError):
    pass


class VertexOp(NamedTuple):
    label: int

    def __str__(self):
        return f"v{self.label}"


class EdgeOp(NamedTuple):
    i: int
    j: int

    def __str__(self):
        return f"e{self.i},{self.j}"


Operator = VertexOp | EdgeOp


def edge_op(i: int, j: int) -> EdgeOp:
    if i == j:
        raise ParseError(f"edge operator needs two labels, got {i},{j}")
    return EdgeOp(min(i, j), max(i, j))


def op_key(op: Operator) -> tuple[int, int, int]:
    """Enumeration order: vertex operators by label, then edges by (i, j)."""
    if isinstance(op, VertexOp):
        return (0, op.label, 0)
    return (1, op.i, op.j)


def parse_op(token: str) -> Operator:
    try:
        if token.startswith("v"):
            return VertexOp(int(token[1:]))
        if token.startswith("e"):
            a, b = token[1:].split(",")
            i, j = int(a), int(b)
            if i >= j or i < 0:
                raise ParseError(f"edge token {token!r} must satisfy 0 <= i < j")
            return EdgeOp(i, j)
    except ValueError as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"bad operator token {token!r}") from None
    raise ParseError(f"bad operator token {token!r}")


def _check_op(op: Operator, t: int):
    if isinstance(op, VertexOp):
        if not 0 <= op.label <= t:
            raise ParseError(f"{op} outside labels 0..{t}")
    elif not (0 <= op.i < op.j <= t):
        raise ParseError(f"{op} outside labels 0..{t}")


@dataclass(frozen=True)
class TParse:
    t: int
    ops: tuple

    def __post_init__(self):
        if self.t < 0:
            raise ParseError("t must be non-negative")
        ops = tuple(self.ops)
        object.__setattr__(self, "ops", ops)
        if len(ops) < self.t + 1 or any(ops[i] != VertexOp(i) for i in range(self.t + 1)):
            raise ParseError(f"a {self.t}-parse must begin with v0 ... v{self.t}")
        for op in ops:
            _check_op(op, self.t)

    @classmethod
    def initial(cls, t: int) -> "TParse":
        return cls(t, tuple(VertexOp(i) for i in range(t + 1)))

    @classmethod
    def from_text(cls, text: str, t: int | None = None) -> "TParse":
        ops = [parse_op(tok) for tok in text.split()]
        if t is None:
            t = -1
            while t + 1 < len(ops) and ops[t + 1] == VertexOp(t + 1):
                t += 1
            if t < 0:
                raise ParseError("a t-parse must begin with v0")
        return cls(t, tuple(ops))

    def __str__(self):
        return " ".join(map(str, self.ops))

    def __len__(self):
        return len(self.ops)

    def extend(self, *ops: Operator) -> "TParse":
        return TParse(self.t, self.ops + tuple(ops))

    def prefixes(self) -> Iterable["TParse"]:
        for m in range(self.t + 1, len(self.ops)):
            yield TParse(self.t, self.ops[:m])

    def sort_key(self):
        return (len(self.ops), tuple(op_key(op) for op in self.ops))


@dataclass(frozen=True)
class BoundariedGraph:
    """Graph plus ``boundary[label] = vertex`` for labels ``0..t``."""

    graph: Graph
    boundary: tuple

    def __post_init__(self):
        b = tuple(self.boundary)
        object.__setattr__(self, "boundary", b)
        if len(set(b)) != len(b) or any(not 0 <= v < self.graph.order for v in b):
            raise ParseError("boundary must map labels to distinct existing vertices")

    @property
    def t(self) -> int:
        return len(self.boundary) - 1

    def interior(self) -> list[int]:
        bset = set(self.boundary)
        return [v for v in range(self.graph.order) if v not in bset]

    def label_colors(self, labeled: bool = True) -> list[int]:
        colors = [0] * self.graph.order
        for label, v in enumerate(self.boundary):
            colors[v] = label + 1 if labeled else 1
        return colors

    def canonical_key(self, labeled: bool = True) -> tuple:
        """Boundaried canonical form; ``labeled=False`` also forgets which
        label sits on which boundary vertex."""
        return canonical_form(self.graph, self.label_colors(labeled))


def realize(p: TParse) -> BoundariedGraph:
    """Replay the operators; vertices are numbered in creation order."""
    adj: list[int] = []
    bound = [0] * (p.t + 1)
    for op in p.ops:
        if isinstance(op, VertexOp):
            bound[op.label] = len(adj)
            adj.append(0)
        else:
            u, v = bound[op.i], bound[op.j]
            adj[u] |= 1 << v
            adj[v] |= 1 << u
    return BoundariedGraph(Graph.from_adjacency(adj), tuple(bound))


def concat(p: TParse, z: "TParse | Sequence[Operator]", t: int | None = None) -> TParse:
    """``p`` followed by the extension ``z`` (a sequence of operators)."""
    if isinstance(z, TParse):
        raise ParseError("extensions are plain operator sequences, not t-parses")
    if t is not None and t != p.t:
        raise ParseError(f"cannot extend a {p.t}-parse with a {t}-extension")
    for op in z:
        _check_op(op, p.t)
    return TParse(p.t, p.ops + tuple(z))


def circle_plus(g: BoundariedGraph, h: BoundariedGraph) -> Graph:
    """Glue ``g`` and ``h`` along equally labelled boundary vertices.

    Vertices of ``g`` keep their numbers; interior vertices of ``h`` follow.
    """
    if len(g.boundary) != len(h.boundary):
        raise ParseError("label sets differ")
    where = {}
    for label, v in enumerate(h.boundary):
        where[v] = g.boundary[label]
    nxt = g.graph.order
    for v in range(h.graph.order):
        if v not in where:
            where[v] = nxt
            nxt += 1
    adj = list(g.graph.adj) + [0] * (nxt - g.graph.order)
    for u, v in h.graph.iter_edges():
        a, b = where[u], where[v]
        adj[a] |= 1 << b
        adj[b] |= 1 << a
    return Graph.from_adjacency(adj)


# -- one-step boundary minors -------------------------------------------------

@dataclass(frozen=True)
class BoundaryMinor:
    """A one-step ∂-minor: description, boundaried graph, and the vertex order
    (inherited from the parent parse) used to rebuild it as a t-parse."""

    kind: str
    detail: tuple
    bgraph: BoundariedGraph
    order: tuple


def boundary_minors(bg: BoundariedGraph) -> list[BoundaryMinor]:
    """All one-step ∂-minors of a realized parse (before deduplication).

    Vertex numbers of ``bg`` are taken to be creation order, as produced by
    :func:`realize`.
    """
    g = bg.graph
    n = g.order
    bset = set(bg.boundary)
    out = []
    for v in range(n):
        if v not in bset and not g.adj[v]:
            keep = [u for u in range(n) if u != v]
            out.append(_minor_from_keep("delete-vertex", (v,), g.induced(keep), bg, keep))
    for u, v in g.iter_edges():
        adj = list(g.adj)
        adj[u] &= ~(1 << v)
        adj[v] &= ~(1 << u)
        out.append(BoundaryMinor("delete-edge", (u, v),
                                 BoundariedGraph(Graph.from_adjacency(adj), bg.boundary),
                                 tuple(range(n))))
    for u, v in g.iter_edges():
        if u in bset and v in bset:
            continue
        if v in bset:
            keep_v, gone = v, u
        else:
            keep_v, gone = u, v  # u < v: earlier-created interior survives
        adj = list(g.adj)
        merged = (adj[u] | adj[v]) & ~(1 << u) & ~(1 << v)
        for w in _bits(adj[gone]):
            adj[w] &= ~(1 << gone)
        adj[gone] = 0
        adj[keep_v] = merged
        for w in _bits(merged):
            adj[w] |= 1 << keep_v
        keep = [w for w in range(n) if w != gone]
        minor = _minor_from_keep("contract-edge", (u, v),
                                 Graph.from_adjacency(adj).induced(keep), bg, keep)
        # the merged vertex is introduced where the earlier endpoint was
        index = {w: i for i, w in enumerate(keep)}
        seq = []
        for w in range(n):
            if w == min(u, v):
                seq.append(keep_v)
            elif w not in (keep_v, gone):
                seq.append(w)
        out.append(BoundaryMinor(minor.kind, minor.detail, minor.bgraph,
                                 tuple(index[w] for w in seq)))
    return out


def _minor_from_keep(kind, detail, graph, bg, keep):
    index = {w: i for i, w in enumerate(keep)}
    boundary = tuple(index[b] for b in bg.boundary)
    return BoundaryMinor(kind, detail, BoundariedGraph(graph, boundary), tuple(range(len(keep))))


def parse_from_boundaried(bg: BoundariedGraph, order: Sequence[int] | None = None) -> TParse:
    """Rebuild a t-parse realizing ``bg`` (same labels on the same vertices).

    Vertices are introduced in ``order``; each is kept bound until its last
    neighbour has been introduced.  Raises :class:`ParseError` when the order
    needs more than ``t+1`` simultaneously live vertices.
    """
    g = bg.graph
    t = bg.t
    n = g.order
    order = list(range(n)) if order is None else list(order)
    if sorted(order) != list(range(n)) or n < t + 1:
        raise ParseError("order must list every vertex and n >= t+1")
    pos = [0] * n
    for p, v in enumerate(order):
        pos[v] = p
    bset = set(bg.boundary)
    never = n + 1
    end = [never if v in bset else max([pos[u] for u in _bits(g.adj[v])], default=pos[v])
           for v in range(n)]
    label_of = [-1] * n
    occupant = [-1] * (t + 1)
    ops: list = []
    for p, x in enumerate(order):
        if p <= t:
            lab = p
        else:
            lab = next((L for L in range(t + 1) if end[occupant[L]] < p), -1)
            if lab < 0:
                raise ParseError(f"vertex order exceeds width {t} at position {p}")
        occupant[lab] = x
        label_of[x] = lab
        ops.append(VertexOp(lab))
        if p < t:
            continue
        upto = range(t + 1) if p == t else (p,)
        for q in upto:
            y = order[q]
            for u in sorted(_bits(g.adj[y]), key=lambda w: pos[w]):
                if pos[u] < q:
                    if occupant[label_of[u]] != u:
                        raise ParseError("neighbour no longer bound")
                    ops.append(edge_op(label_of[y], label_of[u]))
    rename = {}
    for label, v in enumerate(bg.boundary):
        if occupant[label_of[v]] != v:
            raise ParseError("boundary vertex lost its label")
        rename[label_of[v]] = label
    out = []
    for op in ops:
        if isinstance(op, VertexOp):
            out.append(VertexOp(rename[op.label]))
        else:
            out.append(edge_op(rename[op.i], rename[op.j]))
    # the head is re-sorted by final label; creation order follows suit
    created = [0] * (t + 1) + list(order[t + 1:])
    for q in range(t + 1):
        created[rename[q]] = order[q]
    head = sorted(out[:t + 1], key=lambda op: op.label)
    result = TParse(t, tuple(head + out[t + 1:]))
    _check_rebuild(result, bg, created)
    return result


def _check_rebuild(p: TParse, bg: BoundariedGraph, created):
    """The replay must reproduce ``bg`` exactly under the creation map."""
    real = realize(p)
    g = real.graph
    if g.order != bg.graph.order or g.size != bg.graph.size:
        raise ParseError("rebuilt parse does not realize the minor")
    for a, b in g.iter_edges():
        if not bg.graph.has_edge(created[a], created[b]):
            raise ParseError("rebuilt parse does not realize the minor")
    if tuple(created[v] for v in real.boundary) != bg.boundary:
        raise ParseError("rebuilt parse moved a boundary label")


def one_step_boundary_minors(p: TParse, with_graphs: bool = False):
    """One-step ∂-minors of ``p`` as t-parses, deduplicated by boundaried
    canonical form and returned in canonical order."""
    bg = realize(p)
    seen = {}
    for m in boundary_minors(bg):
        key = m.bgraph.canonical_key()
        if key not in seen:
            seen[key] = m
    out = []
    for key in sorted(seen):
        m = seen[key]
        q = parse_from_boundaried(m.bgraph, m.order)
        out.append((q, m) if with_graphs else q)
    return out


# -- canonic enumeration ----------------------------------------------------------

def _run_tail(ops) -> tuple:
    """(last edge of the trailing edge run or None, last op)"""
    last = ops[-1] if ops else None
    return (last if isinstance(last, EdgeOp) else None), last


def canonic_extensions(p: TParse, bg: BoundariedGraph | None = None) -> list[Operator]:
    """Operators ``o`` such that ``p + [o]`` is canonic.

    Rules: no edge operator for an edge already present; edge operators in a
    run strictly increase; no ``v<i>`` directly after ``v<i>``.
    """
    bg = realize(p) if bg is None else bg
    last_edge, last = _run_tail(p.ops)
    out: list[Operator] = []
    for i in range(p.t + 1):
        if len(p.ops) > p.t + 1 and last == VertexOp(i):
            continue
        out.append(VertexOp(i))
    g = bg.graph
    for i in range(p.t + 1):
        for j in range(i + 1, p.t + 1):
            if g.has_edge(bg.boundary[i], bg.boundary[j]):
                continue
            e = EdgeOp(i, j)
            if last_edge is not None and e <= last_edge:
                continue
            out.append(e)
    return out


def free_extensions(p: TParse, bg: BoundariedGraph | None = None) -> list[Operator]:
    """Operators that change the realized graph (rule one of canonicity only)."""
    bg = realize(p) if bg is None else bg
    g = bg.graph
    out: list[Operator] = [VertexOp(i) for i in range(p.t + 1)]
    for i in range(p.t + 1):
        for j in range(i + 1, p.t + 1):
            if not g.has_edge(bg.boundary[i], bg.boundary[j]):
                out.append(EdgeOp(i, j))
    return out


def is_canonic(p: TParse) -> bool:
    q = TParse.initial(p.t)
    bg = realize(q)
    for op in p.ops[p.t + 1:]:
        if op not in canonic_extensions(q, bg):
            return False
        q = q.extend(op)
        bg = realize(q)
    return True


def all_operators(t: int) -> list[Operator]:
    return [VertexOp(i) for i in range(t + 1)] + [
        EdgeOp(i, j) for i in range(t + 1) for j in range(i + 1, t + 1)
    ]
