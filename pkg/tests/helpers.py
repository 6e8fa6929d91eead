"""Shared generators for the test suite."""

from __future__ import annotations

import random

from obstruct.graphcore import Graph
from obstruct.tparse import TParse, canonic_extensions, realize


def random_graph(rng: random.Random, n: int, p: float = 0.4) -> Graph:
    return Graph(n, [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < p])


def random_canonic_parse(t: int, length: int, rng: random.Random) -> TParse:
    """Canonic t-parse with ``length`` operators in total (at least t+1)."""
    p = TParse.initial(t)
    while len(p.ops) < length:
        p = p.extend(rng.choice(canonic_extensions(p, realize(p))))
    return p


def relabeled(g: Graph, rng: random.Random) -> Graph:
    perm = list(range(g.order))
    rng.shuffle(perm)
    return g.relabel(perm)
