import random

import pytest
from hypothesis import given, settings, strategies as st

from obstruct.graphcore import Graph, canonical_form, contract_edge, delete_edge, delete_vertex
from obstruct.tparse import (BoundariedGraph, EdgeOp, ParseError, TParse, VertexOp,
                             all_operators, boundary_minors, canonic_extensions, circle_plus,
                             concat, edge_op, is_canonic, one_step_boundary_minors, parse_op,
                             realize)

from helpers import random_canonic_parse

EXAMPLE = "v0 v1 v2 e0,1 e1,2 v1 e0,1 e1,2 v1 e0,1 e1,2 v0 e0,1 e0,2 v2 e0,2 e1,2"


def test_text_round_trip():
    p = TParse.from_text(EXAMPLE)
    assert p.t == 2 and len(p) == 17
    assert str(p) == EXAMPLE
    assert parse_op("e1,3") == EdgeOp(1, 3)
    assert edge_op(3, 1) == EdgeOp(1, 3)
    for bad in ("e2,1", "e1,1", "x3", "v", "e1"):
        with pytest.raises(ParseError):
            parse_op(bad)
    with pytest.raises(ParseError):
        TParse.from_text("v1 v0")
    with pytest.raises(ParseError):
        TParse.from_text("v0 v1 e0,2", t=1)


def test_realize_initial_and_duplicates():
    bg = realize(TParse.initial(2))
    assert (bg.graph.order, bg.graph.size) == (3, 0) and bg.boundary == (0, 1, 2)
    bg = realize(TParse.from_text("v0 v1 e0,1 e0,1"))
    assert (bg.graph.order, bg.graph.size) == (2, 1)


def test_realize_example():
    bg = realize(TParse.from_text(EXAMPLE))
    assert (bg.graph.order, bg.graph.size) == (7, 10)
    # vertices are numbered by creation; ops 12, 9 and 15 (1-based) create 5, 4, 6
    assert bg.boundary == (5, 4, 6)


def test_concat():
    p = TParse.initial(2)
    assert concat(p, []) == p
    assert realize(concat(p, [EdgeOp(0, 1)])).graph.size == 1
    with pytest.raises(ParseError):
        concat(p, TParse.initial(3))
    with pytest.raises(ParseError):
        concat(p, [EdgeOp(0, 3)])


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 3), st.integers(0, 12), st.integers(0, 10**6))
def test_concat_counts_vertices(t, zlen, seed):
    rng = random.Random(seed)
    p = random_canonic_parse(t, t + 1 + rng.randint(0, 8), rng)
    z = [rng.choice(all_operators(t)) for _ in range(zlen)]
    grown = realize(concat(p, z)).graph.order
    assert grown == realize(p).graph.order + sum(isinstance(op, VertexOp) for op in z)


def test_circle_plus():
    g = realize(TParse.from_text("v0 v1 v2 e0,1 v0 e0,1 e1,2"))
    empty = BoundariedGraph(Graph(3), (0, 1, 2))
    assert canonical_form(circle_plus(g, empty)) == canonical_form(g.graph)
    tri = BoundariedGraph(Graph(3, [(0, 1), (1, 2), (0, 2)]), (0, 1, 2))
    glued = circle_plus(tri, tri)
    assert (glued.order, glued.size) == (3, 3)
    with pytest.raises(ParseError):
        circle_plus(g, BoundariedGraph(Graph(2), (0, 1)))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3), st.integers(0, 10**6))
def test_circle_plus_order(t, seed):
    rng = random.Random(seed)
    g = realize(random_canonic_parse(t, t + 1 + rng.randint(0, 10), rng))
    h = realize(random_canonic_parse(t, t + 1 + rng.randint(0, 10), rng))
    assert circle_plus(g, h).order == g.graph.order + h.graph.order - (t + 1)


def test_boundary_minor_examples():
    minors = one_step_boundary_minors(TParse.from_text("v0 v1 v2 e0,1"))
    assert [str(m) for m in minors] == ["v0 v1 v2"]
    shapes = {(realize(m).graph.order, realize(m).graph.size)
              for m in one_step_boundary_minors(TParse.from_text(EXAMPLE))}
    assert shapes <= {(7, 9), (6, 9), (6, 8)}
    assert (7, 9) in shapes and (6, 9) in shapes


def _graph_level_minors(bg: BoundariedGraph):
    """Brute-force ∂-minors with boundary labels carried as colours."""
    g = bg.graph
    colours = bg.label_colors()
    bset = set(bg.boundary)
    out = set()
    for e in g.iter_edges():
        out.add(canonical_form(delete_edge(g, e), colours))
        u, v = e
        if u in bset and v in bset:
            continue
        keep = u if u in bset else v
        # contract_edge leaves the merged vertex at index u (< v)
        new_colours = list(colours)
        new_colours[u] = colours[keep]
        del new_colours[v]
        out.add(canonical_form(contract_edge(g, e), new_colours))
    for v in range(g.order):
        if v not in bset and not g.adj[v]:
            out.add(canonical_form(delete_vertex(g, v),
                                   [c for i, c in enumerate(colours) if i != v]))
    return out


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 3), st.integers(0, 10**6))
def test_boundary_minors_are_sound_and_complete(t, seed):
    rng = random.Random(seed)
    p = random_canonic_parse(t, t + 1 + rng.randint(0, 12), rng)
    bg = realize(p)
    got = {realize(m).canonical_key() for m in one_step_boundary_minors(p)}
    assert got == _graph_level_minors(bg)
    for m in one_step_boundary_minors(p):
        assert realize(m).t == t


def test_no_boundary_boundary_contraction():
    minors = boundary_minors(realize(TParse.from_text("v0 v1 v2 e0,1")))
    assert all(m.kind != "contract" for m in minors)


def test_canonic_extension_rules():
    p = TParse.initial(2)
    ops = canonic_extensions(p)
    assert sum(isinstance(o, VertexOp) for o in ops) == 3
    assert sum(isinstance(o, EdgeOp) for o in ops) == 3
    q = p.extend(EdgeOp(0, 1))
    assert EdgeOp(0, 1) not in canonic_extensions(q)
    assert EdgeOp(0, 1) in canonic_extensions(q.extend(VertexOp(0)))
    r = p.extend(EdgeOp(1, 2))
    assert EdgeOp(0, 1) not in canonic_extensions(r)
    s = p.extend(VertexOp(1))
    assert VertexOp(1) not in canonic_extensions(s)


def _reachable_keys(t, length, extend, suffix):
    root = TParse.initial(t)
    keys = {realize(root).canonical_key()}
    layer = {(realize(root).canonical_key(), suffix(root)): root}
    for _ in range(length - (t + 1)):
        nxt = {}
        for p in layer.values():
            for op in extend(p):
                q = p.extend(op)
                key = realize(q).canonical_key()
                keys.add(key)
                nxt.setdefault((key, suffix(q)), q)
        layer = nxt
    return keys


def test_canonic_parses_reach_every_graph():
    # layers are merged by boundaried graph plus whatever the rules read
    every = _reachable_keys(2, 10, lambda p: all_operators(p.t), lambda p: None)
    canonic = _reachable_keys(2, 10, canonic_extensions, lambda p: p.ops[-1])
    assert every == canonic


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 3), st.integers(0, 10**6))
def test_canonic_prefix_closed(t, seed):
    rng = random.Random(seed)
    p = random_canonic_parse(t, t + 1 + rng.randint(0, 14), rng)
    assert all(is_canonic(q) for q in p.prefixes())


def test_realization_deterministic():
    p = TParse.from_text(EXAMPLE)
    assert realize(p) == realize(p)
