"""
Seeded generators of random graphs and systems, and brute-force oracles.
"""
from itertools import combinations, permutations
import random

import sympy as sp

from coherent4odes.igraph import InteractionGraph, SignLabel
from coherent4odes.sysdsl import SystemDef, variable


def random_graph(rnd, max_n=5, labels='+-', density=None):
    """A random labelled graph; ``density`` defaults to a random sweep."""
    n = rnd.randint(1, max_n)
    if density is None:
        density = rnd.choice([0.15, 0.3, 0.5, 0.7, 0.9])
    edges = [(u, v, rnd.choice(labels))
             for u in range(1, n + 1) for v in range(1, n + 1)
             if u != v and rnd.random() < density]
    return InteractionGraph.from_edges(n, edges)


def random_graphs(seed, count, **kw):
    rnd = random.Random(seed)
    return [random_graph(rnd, **kw) for _ in range(count)]


def graph(n, *edges):
    """``graph(2, '1+2', '2-1')``"""
    return InteractionGraph.from_edges(
        n, [(int(e[0]), int(e[2]), e[1]) for e in edges])


def random_cooperative_system(rnd, max_n=4, offset=True):
    """
    ``x_i' = -a_i x_i + sum b_ij x_j + sum c_ij tanh(x_j) + e_i``
    with nonnegative ``b``, ``c`` and a dominant diagonal,
    so that the flow is monotone and has a global attractor.
    Without ``offset``, ``e`` is zero and the attractor is the origin.
    """
    n = rnd.randint(2, max_n)
    x = [variable(k) for k in range(1, n + 1)]
    fields = []
    for i in range(n):
        a = sp.Rational(rnd.randint(200, 300), 100)
        budget = a * sp.Rational(9, 10)
        others = [j for j in range(n) if j != i]
        rnd.shuffle(others)
        e = sp.Rational(rnd.randint(-100, 100), 100)
        terms = [-a * x[i], e if offset else sp.Integer(0)]
        for j in others:
            if rnd.random() < 0.4:
                continue
            kind = rnd.choice(['linear', 'tanh', 'both'])
            share = budget / len(others)
            if kind in ('linear', 'both'):
                terms.append(share * sp.Rational(rnd.randint(10, 50), 100)
                             * x[j])
            if kind in ('tanh', 'both'):
                terms.append(share * sp.Rational(rnd.randint(10, 50), 100)
                             * sp.tanh(x[j]))
        fields.append(sp.Add(*terms))
    return SystemDef(tuple(fields))


def random_change(rnd, n):
    from coherent4odes.cascade import ElementaryChange
    perm = list(range(1, n + 1))
    rnd.shuffle(perm)
    return ElementaryChange(tuple(perm),
                            tuple(rnd.choice((1, -1)) for _ in range(n)))


# oracles

def brute_force_loops(g, max_len=None):
    """Every simple loop as ``(vertices, sign)``, the smallest vertex first."""
    max_len = g.n if max_len is None else max_len
    ret = []
    for size in range(2, max_len + 1):
        for subset in combinations(g.vertices, size):
            first = subset[0]
            for rest in permutations(subset[1:]):
                cycle = (first,) + rest
                labels = [g.label(cycle[k], cycle[(k + 1) % size])
                          for k in range(size)]
                if None in labels:
                    continue
                sign = SignLabel.PLUS
                for label in labels:
                    sign = sign * label
                ret.append((cycle, sign))
    return ret


def _reachable(edges, start, undirected=False):
    seen = {start}
    todo = [start]
    while todo:
        u = todo.pop()
        for a, b in edges:
            for x, y in ((a, b), (b, a)) if undirected else ((a, b),):
                if x == u and y not in seen:
                    seen.add(y)
                    todo.append(y)
    return seen


def _on_loop(edges, e):
    return e[0] in _reachable(edges, e[1])


def _initial(g, vertices):
    return not any(u not in vertices and v in vertices
                   for u, v in g.edge_set())


def _connected(vertices, edges):
    return bool(vertices) \
        and _reachable(edges, min(vertices), True) == set(vertices)


def _maximal(candidates):
    return set(c for c in candidates
               if not any(c != d and c[0] <= d[0] and c[1] <= d[1]
                          for d in candidates))


def vertex_subsets(g):
    for size in range(1, g.n + 1):
        for subset in combinations(g.vertices, size):
            yield frozenset(subset)


def brute_force_fundamental(g):
    """
    Maximal connected primary initial subgraphs, as ``(vertices, edges)``.

    For each initial vertex set, the largest primary edge set is the set of
    internal edges lying on a loop of internal edges.
    """
    candidates = []
    for vertices in vertex_subsets(g):
        if not _initial(g, vertices):
            continue
        internal = [e for e in g.edge_set()
                    if e[0] in vertices and e[1] in vertices]
        edges = frozenset(e for e in internal if _on_loop(internal, e))
        if _connected(vertices, edges):
            candidates.append((vertices, edges))
    return _maximal(candidates)


def all_connected_primary_initial(g):
    """
    Every connected primary initial subgraph, trying every subset of the
    internal edges that lie on some internal loop (no other edge can
    belong to a primary subgraph).
    """
    candidates = []
    for vertices in vertex_subsets(g):
        if not _initial(g, vertices):
            continue
        internal = [e for e in g.edge_set()
                    if e[0] in vertices and e[1] in vertices]
        looped = sorted(e for e in internal if _on_loop(internal, e))
        for size in range(len(looped) + 1):
            for edges in combinations(looped, size):
                if all(_on_loop(edges, e) for e in edges) \
                and _connected(vertices, edges):
                    candidates.append((vertices, frozenset(edges)))
    return candidates


def exhaustive_fundamental(g):
    return _maximal(all_connected_primary_initial(g))
