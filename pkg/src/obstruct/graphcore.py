"""Simple undirected graphs, minor operations and canonical labelling.

Vertices are the integers ``0..order-1``.  Adjacency is held as one integer
bitmask per vertex, which keeps the minor operations and the canonical-form
search cheap for the small graphs this package deals with.
"""

from __future__ import annotations

from itertools import combinations
from typing import Iterable, Iterator, Sequence


class GraphError(ValueError):
    pass


def _bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


class Graph:
    """Immutable simple graph.

    >>> g = Graph(3, [(0, 1), (1, 2)])
    >>> g.size, sorted(g.edges)
    (2, [(0, 1), (1, 2)])
    """

    __slots__ = ("order", "adj", "_hash")

    def __init__(self, order: int, edges: Iterable[tuple[int, int]] = ()):
        if order < 0:
            raise GraphError("negative order")
        adj = [0] * order
        for u, v in edges:
            if u == v:
                raise GraphError(f"self-loop at {u}")
            if not (0 <= u < order and 0 <= v < order):
                raise GraphError(f"edge ({u}, {v}) out of range for order {order}")
            adj[u] |= 1 << v
            adj[v] |= 1 << u
        self.order = order
        self.adj = tuple(adj)
        self._hash = None

    @classmethod
    def from_adjacency(cls, adj: Sequence[int]) -> "Graph":
        g = cls.__new__(cls)
        g.order = len(adj)
        g.adj = tuple(adj)
        g._hash = None
        return g

    @property
    def edges(self) -> frozenset[tuple[int, int]]:
        return frozenset(self.iter_edges())

    def iter_edges(self) -> Iterator[tuple[int, int]]:
        for u, row in enumerate(self.adj):
            for v in _bits(row >> (u + 1)):
                yield (u, u + 1 + v)

    @property
    def size(self) -> int:
        return sum(row.bit_count() for row in self.adj) // 2

    def degree(self, v: int) -> int:
        return self.adj[v].bit_count()

    def neighbors(self, v: int) -> list[int]:
        return list(_bits(self.adj[v]))

    def has_edge(self, u: int, v: int) -> bool:
        return 0 <= u < self.order and 0 <= v < self.order and bool(self.adj[u] >> v & 1)

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self.adj == other.adj

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.adj)
        return self._hash

    def __repr__(self):
        return f"Graph({self.order}, {sorted(self.iter_edges())})"

    def components(self) -> list[list[int]]:
        seen = 0
        comps = []
        for s in range(self.order):
            if seen >> s & 1:
                continue
            comp = 1 << s
            frontier = comp
            while frontier:
                nxt = 0
                for v in _bits(frontier):
                    nxt |= self.adj[v]
                frontier = nxt & ~comp
                comp |= nxt
            seen |= comp
            comps.append(list(_bits(comp)))
        return comps

    def is_connected(self) -> bool:
        return self.order <= 1 or len(self.components()) == 1

    def is_acyclic(self) -> bool:
        return self.size == self.order - len(self.components())

    def induced(self, keep: Sequence[int]) -> "Graph":
        """Subgraph induced on ``keep``, renumbered in the given order."""
        index = {v: i for i, v in enumerate(keep)}
        adj = []
        for v in keep:
            row = 0
            for u in _bits(self.adj[v]):
                j = index.get(u)
                if j is not None:
                    row |= 1 << j
            adj.append(row)
        return Graph.from_adjacency(adj)

    def relabel(self, perm: Sequence[int]) -> "Graph":
        """Graph with vertex ``v`` renamed ``perm[v]``."""
        return Graph(self.order, ((perm[u], perm[v]) for u, v in self.iter_edges()))


# -- minor operations --------------------------------------------------------

def _norm(e):
    u, v = e
    return (u, v) if u < v else (v, u)


def delete_edge(g: Graph, e: tuple[int, int]) -> Graph:
    u, v = _norm(e)
    if not g.has_edge(u, v):
        raise GraphError(f"no such edge {e}")
    adj = list(g.adj)
    adj[u] &= ~(1 << v)
    adj[v] &= ~(1 << u)
    return Graph.from_adjacency(adj)


def delete_vertex(g: Graph, v: int) -> Graph:
    if not 0 <= v < g.order:
        raise GraphError(f"vertex {v} out of range")
    return g.induced([u for u in range(g.order) if u != v])


def contract_edge(g: Graph, e: tuple[int, int]) -> Graph:
    """Merge the endpoints of ``e``; the lower-numbered endpoint survives."""
    u, v = _norm(e)
    if not g.has_edge(u, v):
        raise GraphError(f"no such edge {e}")
    adj = list(g.adj)
    merged = (adj[u] | adj[v]) & ~(1 << u) & ~(1 << v)
    adj[u] = merged
    for w in _bits(adj[v]):
        adj[w] &= ~(1 << v)
    for w in _bits(merged):
        adj[w] |= 1 << u
    return Graph.from_adjacency(adj).induced([w for w in range(g.order) if w != v])


def one_step_minors(g: Graph) -> list[Graph]:
    """All graphs one isolated-vertex deletion, edge deletion or edge
    contraction away from ``g``, one per isomorphism class."""
    out = {}
    candidates = [delete_vertex(g, v) for v in range(g.order) if not g.adj[v]]
    for e in g.iter_edges():
        candidates.append(delete_edge(g, e))
        candidates.append(contract_edge(g, e))
    for h in candidates:
        out.setdefault(canonical_form(h), h)
    return [out[key] for key in sorted(out)]


# -- canonical labelling -----------------------------------------------------

def _refine(adj, colors):
    """Iterated neighbourhood refinement; returns ranks (0..cells-1)."""
    n = len(adj)
    ncells = len(set(colors))
    while True:
        sigs = [
            (colors[v], tuple(sorted(colors[u] for u in _bits(adj[v]))))
            for v in range(n)
        ]
        order = sorted(set(sigs))
        rank = {s: i for i, s in enumerate(order)}
        colors = [rank[s] for s in sigs]
        if len(order) == ncells:
            return colors
        ncells = len(order)


def _encode(adj, colors, vcolor):
    # colors is a discrete partition: vertex -> position
    n = len(adj)
    at = [0] * n
    for v, p in enumerate(colors):
        at[p] = v
    rows = []
    for p in range(n):
        row = 0
        for u in _bits(adj[at[p]]):
            row |= 1 << (n - 1 - colors[u])
        rows.append(row)
    return tuple(vcolor[at[p]] for p in range(n)), tuple(rows)


def canonical_labeling(g: Graph, vertex_colors: Sequence[int] | None = None):
    """Return ``(code, perm)`` where ``perm[v]`` is the canonical position of
    ``v`` and ``code`` is the least adjacency encoding over all labellings
    that respect the colour classes (ordered by colour value)."""
    n = g.order
    adj = g.adj
    vcolor = tuple(vertex_colors) if vertex_colors is not None else (0,) * n
    if n == 0:
        return (0, (), ()), ()
    palette = {c: i for i, c in enumerate(sorted(set(vcolor)))}
    start = _refine(adj, [palette[c] for c in vcolor])
    best = [None, None]
    autos: list[tuple[int, ...]] = []

    def search(colors, fixed):
        cells = {}
        for v, c in enumerate(colors):
            cells.setdefault(c, []).append(v)
        if len(cells) == n:
            code = _encode(adj, colors, vcolor)
            if best[0] is None or code < best[0]:
                best[0], best[1] = code, tuple(colors)
            elif code == best[0]:
                # colors -> best[1] composes to an automorphism
                inv = [0] * n
                for v, p in enumerate(best[1]):
                    inv[p] = v
                autos.append(tuple(inv[colors[v]] for v in range(n)))
            return
        target = min((c for c in cells if len(cells[c]) > 1),
                     key=lambda c: (len(cells[c]), c))
        tried: list[int] = []
        for v in cells[target]:
            # twins inside a cell are swapped by an automorphism
            if any(_twins(adj, v, w) for w in tried):
                continue
            if tried and _in_orbit(v, tried, fixed, autos):
                continue
            tried.append(v)
            nc = [2 * c for c in colors]
            nc[v] -= 1
            search(_refine(adj, nc), fixed + (v,))

    search(start, ())
    return (n,) + best[0], best[1]


def _twins(adj, v, w):
    mask = ~((1 << v) | (1 << w))
    return (adj[v] & mask) == (adj[w] & mask)


def _in_orbit(v, tried, fixed, autos):
    """True if some discovered automorphism fixing ``fixed`` pointwise maps a
    tried vertex onto ``v`` (orbit closure under the generators)."""
    gens = [a for a in autos if all(a[f] == f for f in fixed)]
    if not gens:
        return False
    orbit = set(tried)
    frontier = list(tried)
    while frontier:
        x = frontier.pop()
        for a in gens:
            y = a[x]
            if y not in orbit:
                if y == v:
                    return True
                orbit.add(y)
                frontier.append(y)
    return v in orbit


def canonical_form(g: Graph, vertex_colors: Sequence[int] | None = None) -> tuple:
    """Isomorphism-invariant, totally ordered encoding of ``g``.

    With ``vertex_colors`` the isomorphisms must preserve colours, so giving
    boundary vertices distinct colours yields a boundaried canonical form.
    """
    return canonical_labeling(g, vertex_colors)[0]


def canonical_graph(g: Graph) -> Graph:
    _, perm = canonical_labeling(g)
    return g.relabel(perm)


def is_isomorphic(g: Graph, h: Graph) -> bool:
    return g.order == h.order and g.size == h.size and canonical_form(g) == canonical_form(h)


# -- generators --------------------------------------------------------------

def empty_graph(n: int = 0) -> Graph:
    return Graph(n)


def complete_graph(n: int) -> Graph:
    return Graph(n, combinations(range(n), 2))


def cycle_graph(n: int) -> Graph:
    if n < 3:
        raise GraphError("cycle needs at least 3 vertices")
    return Graph(n, ((i, (i + 1) % n) for i in range(n)))


def path_graph(n: int) -> Graph:
    return Graph(n, ((i, i + 1) for i in range(n - 1)))


def wheel_graph(spokes: int) -> Graph:
    """Hub 0 joined to a cycle on ``1..spokes``."""
    rim = cycle_graph(spokes)
    return Graph(spokes + 1, [(0, i + 1) for i in range(spokes)]
                 + [(u + 1, v + 1) for u, v in rim.iter_edges()])


def _augment(n: int, pairs) -> Graph:
    edges = list(pairs)
    extra = []
    for idx, (i, j) in enumerate(edges):
        x = n + idx
        extra += [(i, x), (x, j)]
    return Graph(n + len(edges), edges + extra)


def augmented_complete(n: int) -> Graph:
    """K_n with every edge ``ij`` doubled by a path ``i - v_ij - j``."""
    if n < 3:
        raise GraphError("augmented families need n >= 3")
    return _augment(n, combinations(range(n), 2))


def augmented_cycle(n: int) -> Graph:
    """C_n with every cycle edge doubled by a path of length two."""
    if n < 3:
        raise GraphError("augmented families need n >= 3")
    return _augment(n, [tuple(sorted((i, (i + 1) % n))) for i in range(n)])


def disjoint_union(g: Graph, h: Graph) -> Graph:
    shift = g.order
    return Graph(g.order + h.order,
                 list(g.iter_edges()) + [(u + shift, v + shift) for u, v in h.iter_edges()])


# -- text formats ------------------------------------------------------------

def _g6_size(n: int) -> bytes:
    if n < 63:
        return bytes([n + 63])
    if n < 258048:
        return bytes([126, (n >> 12 & 63) + 63, (n >> 6 & 63) + 63, (n & 63) + 63])
    return bytes([126, 126] + [(n >> s & 63) + 63 for s in (30, 24, 18, 12, 6, 0)])


def to_graph6(g: Graph) -> str:
    """graph6 string (no ``>>graph6<<`` header, no newline)."""
    n = g.order
    bits = []
    for j in range(1, n):
        row = g.adj[j]
        for i in range(j):
            bits.append(row >> i & 1)
    while len(bits) % 6:
        bits.append(0)
    body = bytes(
        63 + int("".join(map(str, bits[k:k + 6])), 2) for k in range(0, len(bits), 6)
    )
    return (_g6_size(n) + body).decode("ascii")


def from_graph6(text: str) -> Graph:
    s = text.strip()
    if s.startswith(">>graph6<<"):
        s = s[len(">>graph6<<"):]
    data = s.encode("ascii")
    if not data or any(c < 63 or c > 126 for c in data):
        raise GraphError(f"malformed graph6 string {text!r}")
    if data[0] != 126:
        n, pos = data[0] - 63, 1
    elif len(data) > 1 and data[1] == 126:
        n = 0
        for c in data[2:8]:
            n = (n << 6) | (c - 63)
        pos = 8
    else:
        n = 0
        for c in data[1:4]:
            n = (n << 6) | (c - 63)
        pos = 4
    need = (n * (n - 1) // 2 + 5) // 6
    body = data[pos:]
    if len(body) != need:
        raise GraphError(f"graph6 body has {len(body)} bytes, expected {need}")
    bits = []
    for c in body:
        v = c - 63
        bits.extend((v >> s) & 1 for s in range(5, -1, -1))
    edges = []
    k = 0
    for j in range(1, n):
        for i in range(j):
            if bits[k]:
                edges.append((i, j))
            k += 1
    return Graph(n, edges)


def to_edge_list(g: Graph) -> str:
    lines = [f"{g.order} {g.size}"]
    lines += [f"{u} {v}" for u, v in sorted(g.iter_edges())]
    return "\n".join(lines) + "\n"


def from_edge_list(text: str) -> Graph:
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows or len(rows[0]) != 2:
        raise GraphError("edge list needs an 'n m' header")
    n, m = map(int, rows[0])
    edges = [tuple(map(int, r)) for r in rows[1:]]
    if len(edges) != m or any(len(e) != 2 for e in edges):
        raise GraphError(f"header announces {m} edges, found {len(edges)}")
    return Graph(n, edges)


def to_dot(g: Graph, name: str = "G", highlight: Iterable[int] = ()) -> str:
    marked = set(highlight)
    lines = [f"graph {name} {{"]
    for v in range(g.order):
        style = ' [style=filled, fillcolor="#bbbbbb"]' if v in marked else ""
        lines.append(f"  {v}{style};")
    lines += [f"  {u} -- {v};" for u, v in sorted(g.iter_edges())]
    lines.append("}")
    return "\n".join(lines) + "\n"
