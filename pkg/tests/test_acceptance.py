"""Acceptance criteria 1-11.  Each test records one PASS/FAIL line that is
printed again in the terminal summary."""

import random
import time
from collections import Counter

import networkx as nx
import pytest

from obstruct.config import load_config
from obstruct.congruence import (park_count_bound, park_order, park_order_bound,
                                 state_from_scratch, state_of, states_equal)
from obstruct.congruence import _park_add_edge, _park_add_isolated, _park_make_interior
from obstruct.graphcore import (Graph, augmented_complete, canonical_form, complete_graph,
                                disjoint_union, to_graph6, wheel_graph)
from obstruct.search import compose_disconnected, search
from obstruct.solvers import (FamilyId, Kind, certify_obstruction, fes_bruteforce, fes_exact,
                              fvs_exact)
from obstruct.testset import (TestSet, apply_op, distinguishes, family_descriptor,
                              generate_testset)
from obstruct.tparse import all_operators, concat, one_step_boundary_minors, realize

from acceptance_registry import record
from helpers import random_canonic_parse, random_graph
import oracles


def _nx(g):
    h = nx.Graph()
    h.add_nodes_from(range(g.order))
    h.add_edges_from(g.iter_edges())
    return h


def _same_classes(ours, theirs):
    """Match two lists of networkx graphs up to isomorphism."""
    left = list(theirs)
    for g in ours:
        hit = next((i for i, h in enumerate(left) if nx.is_isomorphic(g, h)), None)
        if hit is None:
            return False
        left.pop(hit)
    return not left


def _run(kind, k, t, tmp, **extra):
    cfg = load_config({"kind": kind, "k": k, "t": t, "out": str(tmp), **extra}, env={})
    started = time.perf_counter()
    report = search(cfg)
    report.write(tmp)
    return report, time.perf_counter() - started


@pytest.fixture(scope="module")
def fvs1(tmp_path_factory):
    out = tmp_path_factory.mktemp("fvs1-a")
    report, secs = _run("fvs", 1, 3, out)
    return report, secs, out


# -- 1 ---------------------------------------------------------------------------

def test_criterion_01_trivial_families(tmp_path):
    lines = []
    ok = True
    for kind in ("fvs", "fes"):
        report, secs = _run(kind, 0, 2, tmp_path / kind)
        got = report.graph6_lines()
        good = got == [to_graph6(complete_graph(3))] and report.complete and secs < 10
        ok &= good
        lines.append(f"{kind}: {got} in {secs:.2f}s")
    record(1, ok, "; ".join(lines))
    assert ok


# -- 2 ---------------------------------------------------------------------------

def test_criterion_02_fes_formula_matches_bruteforce():
    rng = random.Random(22)
    started = time.perf_counter()
    mismatches = 0
    for _ in range(10_000):
        g = random_graph(rng, rng.randint(1, 8), rng.random())
        mismatches += fes_exact(g) != fes_bruteforce(g)
    secs = time.perf_counter() - started
    ok = mismatches == 0 and secs < 60
    record(2, ok, f"10000 graphs, {mismatches} mismatches, {secs:.1f}s")
    assert ok


# -- 3 ---------------------------------------------------------------------------

def _census(tests):
    """Count tests by (forest component count, boundary triangles, free triangles)."""
    return Counter((len(t.key[0]), len(t.key[1]), t.key[2]) for t in tests)


def test_criterion_03_testset_counts():
    sizes = {}
    censuses = {}
    for b, k in ((4, 1), (5, 2)):
        tests = generate_testset(b, k, Kind.FVS)
        sizes[(b, k)] = len(tests)
        censuses[(b, k)] = _census(tests)
    fes = {(b, k): len(generate_testset(b, k, Kind.FES)) for b, k in ((4, 1), (5, 2))}
    ok = sizes == {(4, 1): 546, (5, 2): 14686}
    detail = (f"FVS boundary 4/k=1: {sizes[(4, 1)]}, boundary 5/k=2: {sizes[(5, 2)]}"
              f" (FES: {fes[(4, 1)]}, {fes[(5, 2)]})")
    if not ok:
        detail += f"; census {dict(censuses[(4, 1)])} / {dict(censuses[(5, 2)])}"
    record(3, ok, detail)
    assert ok


# -- 4 ---------------------------------------------------------------------------

def _exhaustive_distinguisher(da, db, t, depth):
    """Shortest extension (over all operators) putting the first descriptor
    outside and the second inside the family, or None up to ``depth``."""
    if not db.in_family():
        return None
    if not da.in_family():
        return ()
    layer = {(da, db): ()}
    seen = set(layer)
    ops = all_operators(t)
    for _ in range(depth):
        nxt = {}
        for (a, b), z in layer.items():
            for op in ops:
                a2, b2 = apply_op(a, op), apply_op(b, op)
                if not b2.in_family():
                    continue
                if not a2.in_family():
                    return z + (op,)
                if (a2, b2) not in seen:
                    seen.add((a2, b2))
                    nxt[(a2, b2)] = z + (op,)
        layer = nxt
    return None


def test_criterion_04_testset_completeness():
    started = time.perf_counter()
    failures = []
    found = pairs = 0
    for kind in (Kind.FVS, Kind.FES):
        for t in (2, 3):
            for k in (0, 1):
                f = FamilyId(kind, k)
                ts = TestSet(t + 1, f)
                rng = random.Random(1000 * t + 10 * k + (kind is Kind.FES))
                for _ in range(1000):
                    p = random_canonic_parse(t, rng.randint(t + 1, 10), rng)
                    dp = family_descriptor(p, f)
                    vp = ts.vector(dp)
                    for m in one_step_boundary_minors(p):
                        pairs += 1
                        dm = family_descriptor(m, f)
                        z = _exhaustive_distinguisher(dp, dm, t, 8)
                        if z is None:
                            continue
                        found += 1
                        # the extension really separates the two graphs
                        g_out = realize(concat(p, z)).graph
                        g_in = realize(concat(m, z)).graph
                        assert not oracles.in_family(_nx(g_out), kind.value, k)
                        assert oracles.in_family(_nx(g_in), kind.value, k)
                        diff = vp ^ ts.vector(dm)
                        if not diff:
                            failures.append((str(f), str(p), str(m)))
                            continue
                        test = ts.tests[(diff & -diff).bit_length() - 1]
                        if not distinguishes(test, realize(p), realize(m), f):
                            failures.append((str(f), str(p), str(m), "glue"))
    secs = time.perf_counter() - started
    ok = not failures and secs < 1800
    record(4, ok, f"{pairs} pairs, {found} distinguishable within 8 operators, "
                  f"{len(failures)} missed by the testset, {secs:.0f}s")
    assert ok, failures[:5]


# -- 5 and 6 ---------------------------------------------------------------------

@pytest.fixture(scope="module")
def folded():
    rng = random.Random(5)
    fold_bad = minf_bad = 0
    max_order = Counter()
    for _ in range(10_000):
        t = rng.randint(1, 3)
        k = rng.randint(0, 2)
        p = random_canonic_parse(t, rng.randint(t + 1, 12), rng)
        bg = realize(p)
        s = state_of(p, k)
        fold_bad += not states_equal(s, state_from_scratch(bg, k))
        minf_bad += s.min_f() != min(fvs_exact(bg.graph), k + 1)
        for park in s.all_parks():
            max_order[t] = max(max_order[t], park_order(park))
    return fold_bad, minf_bad, max_order


def test_criterion_05_state_folding(folded):
    fold_bad, minf_bad, _ = folded
    ok = fold_bad == 0 and minf_bad == 0
    record(5, ok, f"10000 parses: {fold_bad} fold/scratch differences, "
                  f"{minf_bad} min-f differences")
    assert ok


def _reachable_parks(b):
    """Closure of the all-isolated park under boundary operators (no deletions)."""
    start = tuple((lab, ()) for lab in range(b))
    seen = {start}
    stack = [start]
    while stack:
        q = stack.pop()
        nbrs = [_park_add_isolated(_park_make_interior(q, i), i) for i in range(b)]
        nbrs += [_park_add_edge(q, i, j) for i in range(b) for j in range(i + 1, b)]
        for r in nbrs:
            if r is not None and r not in seen:
                seen.add(r)
                stack.append(r)
    return seen


def test_criterion_06_park_bounds(folded):
    _, _, max_order = folded
    order_ok = all(max_order[t] <= park_order_bound(t + 1) for t in max_order)
    parts = [f"max park order t={t}: {max_order[t]} <= {park_order_bound(t + 1)}"
             for t in sorted(max_order)]
    count_ok = True
    for b in (3, 4):
        parks = _reachable_parks(b)
        count_ok &= len(parks) <= park_count_bound(b)
        order_ok &= max(park_order(q) for q in parks) <= park_order_bound(b)
        parts.append(f"reachable parks boundary {b}: {len(parks)} <= {park_count_bound(b)}")
    ok = order_ok and count_ok
    record(6, ok, "; ".join(parts))
    assert ok


# -- 7 ---------------------------------------------------------------------------

def test_criterion_07_fvs1(fvs1):
    report, secs, _ = fvs1
    f = FamilyId(Kind.FVS, 1)
    certified = all(certify_obstruction(g, f) for g in report.obstructions)
    keys = {to_graph6(g) for g in report.obstructions}
    forms = {canonical_form(g) for g in report.obstructions}
    named = {canonical_form(complete_graph(4)), canonical_form(augmented_complete(3))} <= forms
    ours = [_nx(g) for g in report.connected if g.order <= 8]
    theirs = oracles.connected_obstructions("fvs", 1, max_order=8, max_pathwidth=3)
    equal = _same_classes(ours, theirs)
    ok = certified and named and equal and report.complete and secs < 7200
    record(7, ok, f"{len(report.obstructions)} obstructions {sorted(keys)}, oracle "
                  f"{len(theirs)} connected, match={equal}, {secs:.1f}s")
    assert ok


# -- 8 ---------------------------------------------------------------------------

def test_criterion_08_fes(tmp_path):
    details = []
    ok = True
    one, secs1 = _run("fes", 1, 3, tmp_path / "fes1")
    f1 = FamilyId(Kind.FES, 1)
    keys1 = {to_graph6(g) for g in one.obstructions}
    bowtie = Graph(5, [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (2, 4)])
    diamond = Graph(4, [(0, 1), (1, 2), (0, 2), (1, 3), (2, 3)])
    conn1 = [_nx(g) for g in one.connected]
    has_lifts = all(any(nx.is_isomorphic(_nx(x), g) for g in conn1) for x in (bowtie, diamond))
    oracle1 = oracles.connected_obstructions("fes", 1, max_order=8, max_pathwidth=3)
    eq1 = _same_classes([g for g in conn1 if g.number_of_nodes() <= 8], oracle1)
    cert1 = all(certify_obstruction(g, f1) for g in one.obstructions)
    ok &= one.complete and has_lifts and eq1 and cert1
    details.append(f"1-FES {sorted(keys1)} certified={cert1} lifts={has_lifts} "
                   f"oracle match={eq1} {secs1:.1f}s")

    two, secs2 = _run("fes", 2, 4, tmp_path / "fes2")
    f2 = FamilyId(Kind.FES, 2)
    cert2 = all(certify_obstruction(g, f2) for g in two.obstructions)
    wheel = _nx(wheel_graph(3))
    has_w3 = any(nx.is_isomorphic(_nx(g), wheel) for g in two.obstructions)
    oracle2 = oracles.connected_obstructions("fes", 2, max_order=8, max_pathwidth=4)
    eq2 = _same_classes([_nx(g) for g in two.connected if g.order <= 8], oracle2)
    ok &= two.complete and cert2 and has_w3 and eq2
    details.append(f"2-FES {len(two.obstructions)} graphs "
                   f"({len(two.connected)} connected) certified={cert2} W3={has_w3} "
                   f"oracle match={eq2} {secs2:.0f}s")
    record(8, ok, "; ".join(details))
    assert ok


# -- 9 ---------------------------------------------------------------------------

def test_criterion_09_composition():
    k3, k4 = complete_graph(3), complete_graph(4)
    fvs2 = FamilyId(Kind.FVS, 2)
    out = compose_disconnected({0: [k3], 1: [k4, augmented_complete(3)]}, fvs2)
    want = to_graph6(disjoint_union(k3, k4))
    target = canonical_form(disjoint_union(k3, k4))
    got_fvs = any(canonical_form(g) == target for g in out)
    cert_fvs = certify_obstruction(disjoint_union(k3, k4), fvs2)
    fes1 = FamilyId(Kind.FES, 1)
    out_fes = compose_disconnected({0: [k3]}, fes1)
    pair = disjoint_union(k3, k3)
    got_fes = [canonical_form(g) for g in out_fes] == [canonical_form(pair)]
    cert_fes = certify_obstruction(pair, fes1)
    ok = got_fvs and cert_fvs and got_fes and cert_fes
    record(9, ok, f"FVS k=2 emits {want}: {got_fvs} (certified {cert_fvs}); "
                  f"FES k=1 emits K3+K3: {got_fes} (certified {cert_fes})")
    assert ok


# -- 10 --------------------------------------------------------------------------

def test_criterion_10_determinism_and_resume(fvs1, tmp_path):
    first, _, out_a = fvs1
    _run("fvs", 1, 3, tmp_path / "b")
    same = (out_a / "obstructions.g6").read_bytes() == (tmp_path / "b" / "obstructions.g6").read_bytes()
    ck = tmp_path / "half.json"
    half, _ = _run("fvs", 1, 3, tmp_path / "c", node_budget=first.stats["nodes"] // 2,
                   checkpoint=str(ck))
    resumed, _ = _run("fvs", 1, 3, tmp_path / "c", resume=str(ck))
    resumed_same = ((out_a / "obstructions.g6").read_bytes()
                    == (tmp_path / "c" / "obstructions.g6").read_bytes()
                    and resumed.stats == first.stats)
    ok = same and not half.complete and resumed.complete and resumed_same
    record(10, ok, f"rerun identical={same}; stopped after {half.stats['nodes']} of "
                   f"{first.stats['nodes']} nodes, resumed identical={resumed_same}")
    assert ok


# -- 11 --------------------------------------------------------------------------

def test_criterion_11_stretch_targets_documented():
    record(11, True, "2-FVS (boundary 5) and 4-FES full sets are not reproduced at desk "
                     "scale; run with --run-stretch", status="SKIP")


@pytest.mark.stretch
def test_stretch_fvs2(tmp_path):
    report, _ = _run("fvs", 2, 4, tmp_path)
    f = FamilyId(Kind.FVS, 2)
    assert report.complete
    assert all(certify_obstruction(g, f) for g in report.obstructions)
    names = {to_graph6(g) for g in report.obstructions}
    assert to_graph6(complete_graph(5)) in names
