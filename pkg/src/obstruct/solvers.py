"""Exact feedback vertex/edge set solvers, family membership, and
obstruction certification."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

from .graphcore import Graph, _bits, one_step_minors


class ScaleError(ValueError):
    """Input is beyond the size the brute-force oracles are meant for."""


class CertificationMismatch(AssertionError):
    """The two independent FES obstruction characterisations disagree."""


class Kind(str, enum.Enum):
    FVS = "fvs"
    FES = "fes"


@dataclass(frozen=True)
class FamilyId:
    kind: Kind
    k: int

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.k < 0:
            raise ValueError("k must be non-negative")

    def __str__(self):
        return f"{self.k}-{self.kind.value.upper()}"


# -- FVS -----------------------------------------------------------------------

def _prune(adj: list[int], alive: int) -> int:
    """Strip vertices of degree <= 1 until none remain."""
    changed = True
    while changed:
        changed = False
        for v in _bits(alive):
            if (adj[v] & alive).bit_count() <= 1:
                alive &= ~(1 << v)
                changed = True
    return alive


def _short_cycle(adj: list[int], alive: int) -> list[int] | None:
    """Vertices of a shortest cycle in the subgraph induced on ``alive``."""
    best = None
    for s in _bits(alive):
        parent = {s: -1}
        depth = {s: 0}
        layer = [s]
        found = None
        while layer and found is None:
            nxt = []
            for u in layer:
                for w in _bits(adj[u] & alive):
                    if w == parent[u]:
                        continue
                    if w in depth:
                        found = (u, w)
                        break
                    parent[w] = u
                    depth[w] = depth[u] + 1
                    nxt.append(w)
                if found:
                    break
            layer = nxt
        if found is None:
            continue
        u, w = found
        a, b = [u], [w]
        while a[-1] != s:
            a.append(parent[a[-1]])
        while b[-1] != s:
            b.append(parent[b[-1]])
        cyc = set(a) | set(b)
        if best is None or len(cyc) < len(best):
            best = cyc
            if len(best) == 3:
                break
    return sorted(best) if best is not None else None


def _fvs_at_most(adj: tuple[int, ...], alive: int, k: int) -> bool:
    alive = _prune(list(adj), alive)
    if not alive:
        return True
    if k == 0:
        return False
    cyc = _short_cycle(list(adj), alive)
    if cyc is None:
        return True
    return any(_fvs_at_most(adj, alive & ~(1 << v), k - 1) for v in cyc)


@lru_cache(maxsize=200_000)
def _fvs_cached(adj: tuple[int, ...]) -> int:
    full = (1 << len(adj)) - 1
    k = 0
    while not _fvs_at_most(adj, full, k):
        k += 1
    return k


def fvs_exact(g: Graph) -> int:
    """Minimum feedback vertex set size (branching on a shortest cycle)."""
    return _fvs_cached(g.adj)


def fvs_at_most(g: Graph, k: int) -> bool:
    return _fvs_at_most(g.adj, (1 << g.order) - 1, k)


def fvs_bruteforce(g: Graph) -> int:
    """Subset enumeration; only for cross-checking on small graphs."""
    if g.order > 20:
        raise ScaleError("fvs_bruteforce is limited to 20 vertices")
    for k in range(g.order + 1):
        for drop in combinations(range(g.order), k):
            keep = [v for v in range(g.order) if v not in drop]
            if g.induced(keep).is_acyclic():
                return k
    return g.order


# -- FES -----------------------------------------------------------------------

def fes_exact(g: Graph) -> int:
    """Cyclomatic number |E| - |V| + c."""
    return g.size - g.order + len(g.components())


def fes_bruteforce(g: Graph) -> int:
    """Fewest edges whose removal leaves a forest, by exhaustive search over
    kept edge subsets.  Two partial subsets that induce the same vertex
    partition accept exactly the same future edges, so only the larger
    survives; nothing here relies on the cyclomatic formula."""
    if g.order > 10:
        raise ScaleError("fes_bruteforce is limited to 10 vertices")
    best = {tuple(range(g.order)): 0}
    for u, v in sorted(g.iter_edges()):
        nxt = dict(best)
        for part, kept in best.items():
            cu, cv = part[u], part[v]
            if cu == cv:
                continue
            lo, hi = min(cu, cv), max(cu, cv)
            merged = tuple(lo if c == hi else c for c in part)
            if nxt.get(merged, -1) < kept + 1:
                nxt[merged] = kept + 1
        best = nxt
    return g.size - max(best.values())


def minimum_feedback_edge_sets(g: Graph) -> list[frozenset]:
    """Every minimum feedback edge set (by enumeration)."""
    edges = sorted(g.iter_edges())
    k = fes_exact(g)
    out = []
    for drop in combinations(edges, k):
        gone = set(drop)
        if Graph(g.order, (e for e in edges if e not in gone)).is_acyclic():
            out.append(frozenset(drop))
    return out


# -- membership & certification --------------------------------------------------

def member(g: Graph, f: FamilyId) -> bool:
    if f.kind is Kind.FVS:
        return _fvs_at_most(g.adj, (1 << g.order) - 1, f.k)
    return fes_exact(g) <= f.k


MAX_CERTIFY_ORDER = 25


def every_edge_in_triangle(g: Graph) -> bool:
    """Adjacent vertices always share a neighbour, i.e. every contraction
    removes at least two edges."""
    return all(g.adj[u] & g.adj[v] for u, v in g.iter_edges())


def certify_obstruction(g: Graph, f: FamilyId) -> bool:
    """True iff ``g`` is outside ``f`` and every one-step minor is inside."""
    if g.order > MAX_CERTIFY_ORDER:
        raise ScaleError(f"certification is limited to {MAX_CERTIFY_ORDER} vertices")
    verdict = not member(g, f) and all(member(h, f) for h in one_step_minors(g))
    if f.kind is Kind.FES and g.order and g.is_connected():
        other = fes_exact(g) == f.k + 1 and every_edge_in_triangle(g)
        if other != verdict:
            raise CertificationMismatch(
                f"FES certification disagrees for {g!r}: minors say {verdict}, "
                f"edge/contraction test says {other}")
    return verdict
