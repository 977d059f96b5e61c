"""Seeded random graph families used by the tests and the acceptance harness."""

from __future__ import annotations

import random
from typing import Optional

from .graph import Graph


def random_tree(n: int, rng: random.Random, max_degree: Optional[int] = None) -> Graph:
    """Random recursive tree; each new vertex attaches to an earlier one with spare degree."""
    edges = []
    deg = [0] * n
    for v in range(1, n):
        choices = [u for u in range(v) if max_degree is None or deg[u] < max_degree]
        u = rng.choice(choices)
        edges.append((u, v))
        deg[u] += 1
        deg[v] += 1
    return Graph.from_edges(n, edges)


def random_connected(n: int, extra: int, rng: random.Random, max_degree: int = 6) -> Graph:
    """Random spanning tree plus up to ``extra`` chords, respecting the degree cap.

    Vertex labels are shuffled so that the id order is unrelated to the tree
    structure.
    """
    tree = random_tree(n, rng, max_degree)
    label = list(range(n))
    rng.shuffle(label)
    edges = {tuple(sorted((label[u], label[v]))) for u, v in tree.edges()}
    deg = [0] * n
    for u, v in edges:
        deg[u] += 1
        deg[v] += 1
    attempts = 0
    added = 0
    while n >= 2 and added < extra and attempts < 50 * (extra + 1):
        attempts += 1
        u, v = sorted(rng.sample(range(n), 2))
        if (u, v) in edges or deg[u] >= max_degree or deg[v] >= max_degree:
            continue
        edges.add((u, v))
        deg[u] += 1
        deg[v] += 1
        added += 1
    return Graph.from_edges(n, sorted(edges))


def complete_binary_tree(depth: int) -> Graph:
    """Heap-indexed complete binary tree with 2^(depth+1) - 1 vertices; root is 0."""
    n = 2 ** (depth + 1) - 1
    return Graph.from_edges(n, [((v - 1) // 2, v) for v in range(1, n)])


def path_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def cycle_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def complete_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(u, v) for u in range(n) for v in range(u + 1, n)])
