"""Breadth-first search for ∂-obstructions and everything built on it:
the node-level minimality pipeline, final obstruction derivation,
disconnected compositions, FES predictors and checkpoints."""

from __future__ import annotations

import json
import logging
import os
import time
import zlib
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import Callable, Iterable, Optional

from . import __version__
from .config import Config
from .congruence import FvsState, fes_direct_nonminimal, fvs_direct_nonminimal
from .graphcore import Graph, canonical_form, to_graph6
from .solvers import (MAX_CERTIFY_ORDER, FamilyId, Kind, certify_obstruction, fes_exact,
                      minimum_feedback_edge_sets)
from .testset import (MINIMAL, NONMINIMAL_CONGRUENCE, NONMINIMAL_DIRECT, NONMINIMAL_TESTSET,
                      MinimalityVerdict, TestSet, family_descriptor, random_distinguisher,
                      testset_verdict)
from .tparse import (TParse, canonic_extensions, free_extensions, one_step_boundary_minors,
                     realize)

log = logging.getLogger(__name__)

REPORT_SCHEMA = 1
CHECKPOINT_VERSION = 1

__all__ = [
    "MinimalityVerdict", "SearchNode", "ObstructionReport", "CheckpointError",
    "evaluate_node", "search", "derive_final", "compose_disconnected", "predict_fes_next",
    "checkpoint_save", "checkpoint_load", "audit_node_log",
]


class CheckpointError(ValueError):
    pass


@dataclass
class SearchNode:
    parse: TParse
    state: object
    verdict: MinimalityVerdict
    in_family: bool


# -- node evaluation -------------------------------------------------------------------

def _seed_for(seed: int, p: TParse, idx: int) -> int:
    return zlib.crc32(f"{seed}|{p}|{idx}".encode())


def evaluate_node(p: TParse, f: FamilyId, ts: TestSet, config: Config | None = None,
                  minors: list | None = None) -> SearchNode:
    """Run the four-stage pipeline on ``p``; the first conclusive stage wins."""
    budget = config.random_budget if config else 200
    len_max = config.extension_len if config else 3 * (p.t + 1)
    max_minors = config.stage3_max_minors if config else 64
    seed = config.seed if config else 0

    bg = realize(p)
    desc = family_descriptor(p, f, bg)
    inside = desc.in_family()
    direct = fvs_direct_nonminimal if f.kind is Kind.FVS else fes_direct_nonminimal
    if direct(bg):
        return SearchNode(p, desc, MinimalityVerdict(NONMINIMAL_DIRECT, 1), inside)

    minors = one_step_boundary_minors(p) if minors is None else minors
    descs = [family_descriptor(m, f) for m in minors]
    for m, d in zip(minors, descs):
        if d == desc:
            return SearchNode(p, desc, MinimalityVerdict(NONMINIMAL_CONGRUENCE, 2, witness=m),
                              inside)

    if minors and budget > 0 and len(minors) <= max_minors:
        found = {}
        for idx, (m, d) in enumerate(zip(minors, descs)):
            z = random_distinguisher(p, m, f, budget=budget, len_max=len_max,
                                     seed=_seed_for(seed, p, idx), descs=(desc, d))
            if z is None:
                break
            found[str(m)] = ("extension", " ".join(str(op) for op in z))
        else:
            return SearchNode(p, desc, MinimalityVerdict(MINIMAL, 3, distinguishers=found),
                              inside)

    return SearchNode(p, desc, testset_verdict(p, minors, f, ts), inside)


def audit_verdict(node: SearchNode, f: FamilyId, ts: TestSet) -> bool:
    """Recheck a stage-1/2 nonminimal verdict against the full testset."""
    full = testset_verdict(node.parse, one_step_boundary_minors(node.parse), f, ts)
    return full.status == NONMINIMAL_TESTSET


# -- search state & checkpoints -------------------------------------------------------

@dataclass
class _State:
    level: int
    current: list
    pos: int
    nxt: list
    seen: dict           # dedupe key -> None (insertion ordered)
    boundary: list       # ∂-obstruction parse strings
    stats: dict
    node_log: list       # (parse, status, stage, in_family)


def _fresh_stats():
    return {"nodes": 0, "expanded": 0, "by_status": {}, "by_stage": {}, "levels": {},
            "distinguisher_lengths": {}, "audits": 0, "audit_disagreements": 0,
            "stage3_skipped": 0}


def _keyjson(key):
    return [_keyjson(x) for x in key] if isinstance(key, tuple) else key


def _jsonkey(data):
    return tuple(_jsonkey(x) for x in data) if isinstance(data, list) else data


def checkpoint_save(path: str | os.PathLike, state: _State, config: Config):
    """Write the search state atomically as versioned JSON."""
    doc = {
        "format": "obstruct-checkpoint",
        "version": CHECKPOINT_VERSION,
        "config": _search_identity(config),
        "level": state.level,
        "current": state.current,
        "pos": state.pos,
        "next": state.nxt,
        "seen": [_keyjson(k) for k in state.seen],
        "boundary": state.boundary,
        "stats": state.stats,
        "node_log": state.node_log,
    }
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        json.dump(doc, fh)
    os.replace(tmp, path)


def checkpoint_load(path: str | os.PathLike, config: Config | None = None) -> _State:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != "obstruct-checkpoint":
        raise CheckpointError(f"{path} is not a checkpoint")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"checkpoint version {doc.get('version')} != {CHECKPOINT_VERSION}")
    needed = ("level", "current", "pos", "next", "seen", "boundary", "stats", "node_log")
    if any(k not in doc for k in needed):
        raise CheckpointError(f"checkpoint {path} is missing fields")
    if config is not None and doc["config"] != _search_identity(config):
        raise CheckpointError("checkpoint was written under a different configuration")
    return _State(doc["level"], doc["current"], doc["pos"], doc["next"],
                  {_jsonkey(k): None for k in doc["seen"]}, doc["boundary"], doc["stats"],
                  [tuple(x) for x in doc["node_log"]])


def _search_identity(config: Config) -> dict:
    echo = config.echo()
    for key in ("node_budget", "checkpoint_interval", "workers"):
        echo.pop(key, None)
    return echo


# -- report ----------------------------------------------------------------------------

@dataclass
class ObstructionReport:
    family: FamilyId
    t: int
    boundary_obstructions: list
    obstructions: list
    stats: dict
    config: dict
    complete: bool = True
    rejected: list = field(default_factory=list)
    elapsed: float = 0.0
    node_log: list = field(default_factory=list, repr=False)

    @property
    def connected(self) -> list:
        return [g for g in self.obstructions if g.is_connected()]

    def graph6_lines(self) -> list[str]:
        return [to_graph6(g) for g in self.obstructions]

    def to_json(self) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "tool_version": __version__,
            "family": str(self.family),
            "t": self.t,
            "boundary_size": self.t + 1,
            "complete": self.complete,
            "config": self.config,
            "envelope": (f"graphs of pathwidth <= {self.t}; obstructions of larger "
                         "pathwidth are outside this search"),
            "obstructions": [
                {"graph6": to_graph6(g), "order": g.order, "size": g.size,
                 "connected": g.is_connected()} for g in self.obstructions],
            "boundary_obstruction_count": len(self.boundary_obstructions),
            "rejected_candidates": self.rejected,
            "statistics": self.stats,
            "elapsed_seconds": round(self.elapsed, 3),
        }

    def write(self, out_dir: str | os.PathLike):
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "obstructions.g6"), "w") as fh:
            fh.writelines(line + "\n" for line in self.graph6_lines())
        with open(os.path.join(out_dir, "boundary_obstructions.tparse"), "w") as fh:
            fh.writelines(str(p) + "\n" for p in self.boundary_obstructions)
        with open(os.path.join(out_dir, "report.json"), "w") as fh:
            json.dump(self.to_json(), fh, indent=2, sort_keys=True)
            fh.write("\n")


# -- the search ------------------------------------------------------------------------

_WORKER: dict = {}


def _worker_init(family, boundary_size, cache_dir, config):
    _WORKER["ts"] = TestSet(boundary_size, family, cache_dir=cache_dir)
    _WORKER["f"] = family
    _WORKER["cfg"] = config


def _worker_eval(text: str):
    p = TParse.from_text(text, _WORKER["cfg"].t)
    node = evaluate_node(p, _WORKER["f"], _WORKER["ts"], _WORKER["cfg"])
    return _node_result(node)


def _node_result(node: SearchNode):
    v = node.verdict
    lengths = [len(z.split()) for kind, z in v.distinguishers.values() if kind == "extension"]
    return (v.status, v.stage, node.in_family, lengths)


def _dedupe_key(p: TParse, mode: str):
    if mode == "none":
        return str(p)
    return realize(p).canonical_key(labeled=(mode == "labeled"))


def _children(p: TParse, mode: str) -> list[TParse]:
    bg = realize(p)
    ops = canonic_extensions(p, bg) if mode == "none" else free_extensions(p, bg)
    return [p.extend(op) for op in ops]


def _audit_pick(seed: int, text: str, rate: float) -> bool:
    return rate > 0 and (zlib.crc32(f"audit|{seed}|{text}".encode()) % 10_000) < rate * 10_000


def search(config: Config, ts: TestSet | None = None,
           progress: Optional[Callable[[dict], None]] = None) -> ObstructionReport:
    """Explore minimal parses breadth-first and collect ∂-obstructions.

    Returns a report flagged incomplete when ``config.node_budget`` ran
    out; in that case a checkpoint has been written (``config.checkpoint``
    or ``<out>/checkpoint.json``) from which ``config.resume`` continues.
    """
    f = config.family
    t = config.t
    started = time.perf_counter()
    ts = ts if ts is not None else TestSet(t + 1, f, cache_dir=config.cache_dir)

    if config.resume:
        state = checkpoint_load(config.resume, config)
    else:
        root = TParse.initial(t)
        state = _State(0, [str(root)], 0, [], {_dedupe_key(root, config.dedupe): None}, [],
                       _fresh_stats(), [])

    ckpt_path = config.checkpoint or (os.path.join(config.out, "checkpoint.json")
                                      if config.out else None)
    evaluated_here = 0
    pool = None
    if config.workers > 1:
        pool = ProcessPoolExecutor(config.workers, initializer=_worker_init,
                                   initargs=(f, t + 1, config.cache_dir, config))
    complete = True
    try:
        while state.current:
            while state.pos < len(state.current):
                if config.node_budget and evaluated_here >= config.node_budget:
                    complete = False
                    break
                room = len(state.current) - state.pos
                if config.node_budget:
                    room = min(room, config.node_budget - evaluated_here)
                batch = state.current[state.pos:state.pos + min(room, 64 * config.workers)]
                if pool is not None:
                    results = list(pool.map(_worker_eval, batch, chunksize=4))
                else:
                    results = []
                    for text in batch:
                        node = evaluate_node(TParse.from_text(text, t), f, ts, config)
                        results.append(_node_result(node))
                for text, res in zip(batch, results):
                    _absorb(state, text, res, config, f, ts)
                state.pos += len(batch)
                evaluated_here += len(batch)
                if (config.checkpoint_interval and ckpt_path
                        and evaluated_here % config.checkpoint_interval < len(batch)):
                    checkpoint_save(ckpt_path, state, config)
                if progress:
                    progress({"level": state.level, "pos": state.pos,
                              "level_size": len(state.current), "nodes": state.stats["nodes"],
                              "boundary_obstructions": len(state.boundary)})
            if not complete:
                break
            state.current = state.nxt
            state.nxt = []
            state.pos = 0
            state.level += 1
    finally:
        if pool is not None:
            pool.shutdown()

    if not complete and ckpt_path:
        checkpoint_save(ckpt_path, state, config)

    bparses = [TParse.from_text(s, t) for s in state.boundary]
    finals, rejected = derive_final(bparses, f, with_rejected=True)
    return ObstructionReport(f, t, bparses, finals, state.stats, config.echo(), complete,
                             rejected, time.perf_counter() - started, state.node_log)


def _absorb(state: _State, text: str, res, config: Config, f: FamilyId, ts: TestSet):
    status, stage, inside, lengths = res
    stats = state.stats
    stats["nodes"] += 1
    stats["by_status"][status] = stats["by_status"].get(status, 0) + 1
    stats["by_stage"][str(stage)] = stats["by_stage"].get(str(stage), 0) + 1
    lv = stats["levels"].setdefault(str(state.level), {"evaluated": 0, "minimal": 0,
                                                        "boundary_obstructions": 0})
    lv["evaluated"] += 1
    for n in lengths:
        stats["distinguisher_lengths"][str(n)] = stats["distinguisher_lengths"].get(str(n), 0) + 1
    state.node_log.append((text, status, stage, inside))

    if status in (NONMINIMAL_DIRECT, NONMINIMAL_CONGRUENCE) and _audit_pick(
            config.seed, text, config.audit_rate):
        p = TParse.from_text(text, config.t)
        node = SearchNode(p, None, MinimalityVerdict(status, stage), inside)
        stats["audits"] += 1
        if not audit_verdict(node, f, ts):
            stats["audit_disagreements"] += 1
            log.error("audit disagreement at %s (%s)", text, status)

    if status != MINIMAL:
        return
    lv["minimal"] += 1
    if not inside:
        state.boundary.append(text)
        lv["boundary_obstructions"] += 1
        return
    stats["expanded"] += 1
    for child in _children(TParse.from_text(text, config.t), config.dedupe):
        key = _dedupe_key(child, config.dedupe)
        if key in state.seen:
            continue
        state.seen[key] = None
        state.nxt.append(str(child))


def audit_node_log(node_log: Iterable[tuple], t: int) -> dict:
    """Prefix and monotonicity audits over a node log."""
    entries = {text: (status, inside) for text, status, _stage, inside in node_log}
    prefix_failures = []
    monotone_failures = []
    for text, (status, inside) in entries.items():
        ops = text.split()
        if len(ops) <= t + 1:
            continue
        parent = " ".join(ops[:-1])
        pstatus, pinside = entries.get(parent, (None, None))
        if status == MINIMAL and pstatus != MINIMAL:
            prefix_failures.append(text)
        if inside and pinside is False:
            monotone_failures.append(text)
    return {"prefix_failures": prefix_failures, "monotone_failures": monotone_failures}


# -- final obstructions -----------------------------------------------------------------

def _quotient(g: Graph, merge: list[tuple[int, int]]) -> Graph:
    parent = list(range(g.order))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in merge:
        parent[find(u)] = find(v)
    roots = sorted({find(v) for v in range(g.order)})
    index = {r: i for i, r in enumerate(roots)}
    edges = {tuple(sorted((index[find(u)], index[find(v)]))) for u, v in g.iter_edges()}
    return Graph(len(roots), [e for e in edges if e[0] != e[1]])


def _drop_isolated(g: Graph) -> Graph:
    keep = [v for v in range(g.order) if g.adj[v]]
    return g if len(keep) == g.order else g.induced(keep)


def derive_final(boundary_obs: Iterable[TParse], f: FamilyId, with_rejected: bool = False):
    """Graphs obtained from ∂-obstructions by contracting any subset of
    boundary-boundary edges (isolated vertices dropped), kept only when
    certified, deduplicated and sorted by canonical form."""
    candidates: dict = {}
    for p in boundary_obs:
        bg = realize(p)
        bset = set(bg.boundary)
        g = bg.graph
        bb = [(u, v) for u, v in g.iter_edges() if u in bset and v in bset]
        for mask in range(1 << len(bb)):
            merged = [e for i, e in enumerate(bb) if mask >> i & 1]
            h = _drop_isolated(_quotient(g, merged))
            candidates.setdefault(canonical_form(h), h)
    kept, rejected = [], []
    for key in sorted(candidates):
        h = candidates[key]
        if h.order > MAX_CERTIFY_ORDER:
            rejected.append({"graph6": to_graph6(h), "reason": "too large to certify"})
            continue
        if certify_obstruction(h, f):
            kept.append(h)
        else:
            rejected.append({"graph6": to_graph6(h), "reason": "not certified"})
    for r in rejected:
        log.debug("dropped candidate %s (%s)", r["graph6"], r["reason"])
    return (kept, rejected) if with_rejected else kept


def _union(graphs: Iterable[Graph]) -> Graph:
    edges, n = [], 0
    for g in graphs:
        edges += [(u + n, v + n) for u, v in g.iter_edges()]
        n += g.order
    return Graph(n, edges)


def _partitions(total: int, max_part: int) -> Iterable[list[int]]:
    if total == 0:
        yield []
        return
    for part in range(min(total, max_part), 0, -1):
        for rest in _partitions(total - part, part):
            yield [part] + rest


def compose_disconnected(conn: dict[int, Iterable[Graph]], f: FamilyId) -> list[Graph]:
    """Disjoint unions of connected obstructions for smaller families whose
    parameters add up to ``k + 1``, kept when certified for ``f``."""
    pools = {j: list(gs) for j, gs in conn.items() if j < f.k}
    found: dict = {}
    for parts in _partitions(f.k + 1, f.k):
        if len(parts) < 2:
            continue
        groups = Counter(parts)
        choices = []
        for size, count in sorted(groups.items()):
            pool = pools.get(size - 1, [])
            choices.append(list(combinations_with_replacement(range(len(pool)), count))
                           if pool else [])
            choices[-1] = [[pool[i] for i in combo] for combo in choices[-1]]
        for pick in _product(choices):
            g = _union(x for group in pick for x in group)
            key = canonical_form(g)
            if key in found:
                continue
            if g.order <= MAX_CERTIFY_ORDER and certify_obstruction(g, f):
                found[key] = g
    return [found[key] for key in sorted(found)]


def _product(lists):
    if not lists:
        yield []
        return
    for head in lists[0]:
        for rest in _product(lists[1:]):
            yield [head] + rest


# -- FES predictors ------------------------------------------------------------------------

def _rule_subdivided_edge(g: Graph) -> Iterable[Graph]:
    for u, v in g.iter_edges():
        w = g.order
        yield Graph(g.order + 1, list(g.iter_edges()) + [(u, w), (v, w)])


def _rule_attached_triangle(g: Graph) -> Iterable[Graph]:
    for v in range(g.order):
        a, b = g.order, g.order + 1
        yield Graph(g.order + 2, list(g.iter_edges()) + [(v, a), (v, b), (a, b)])


def _rule_added_edge(g: Graph) -> Iterable[Graph]:
    fes_sets = minimum_feedback_edge_sets(g)
    forests = [Graph(g.order, (e for e in g.iter_edges() if e not in E)) for E in fes_sets]
    for u in range(g.order):
        for v in range(u + 1, g.order):
            if g.has_edge(u, v):
                continue
            if all(_tree_distance(h, u, v) >= 2 for h in forests):
                yield Graph(g.order, list(g.iter_edges()) + [(u, v)])


def _tree_distance(g: Graph, s: int, goal: int) -> float:
    dist = {s: 0}
    layer = [s]
    while layer:
        nxt = []
        for u in layer:
            for w in g.neighbors(u):
                if w not in dist:
                    dist[w] = dist[u] + 1
                    nxt.append(w)
        layer = nxt
    return dist.get(goal, float("inf"))


_RULES = (("subdivided-edge", _rule_subdivided_edge),
          ("attached-triangle", _rule_attached_triangle),
          ("added-edge", _rule_added_edge))


def predict_fes_next(obs: Iterable[Graph], with_rules: bool = False):
    """Candidates for the next FES family from connected obstructions,
    each re-certified; ``with_rules`` also returns which rules produced
    each survivor and the candidates that failed certification."""
    found: dict = {}
    rules: dict = {}
    failed: dict = {}
    for g in obs:
        target = FamilyId(Kind.FES, fes_exact(g))
        for name, rule in _RULES:
            for h in rule(g):
                key = canonical_form(h)
                if key in failed:
                    continue
                if key not in found:
                    if not certify_obstruction(h, target):
                        failed[key] = h
                        continue
                    found[key] = h
                rules.setdefault(key, set()).add(name)
    out = [found[key] for key in sorted(found)]
    if with_rules:
        return out, [sorted(rules[key]) for key in sorted(found)], \
            [failed[key] for key in sorted(failed)]
    return out
