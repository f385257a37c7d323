"""
Sign-labelled interaction graphs.

Vertices are the coordinates ``1..n``;
an edge ``(j, i)`` means that ``x_j`` influences ``F_i``,
and is labelled with the sign of ``dF_i/dx_j``.
"""
from collections import deque
from copy import deepcopy
from dataclasses import dataclass
from enum import Enum
import json
import logging
import operator

import networkx as nx

from .config import DEFAULT_SEED, Tolerances
from .sysdsl import Sign, sign_of_partial

LOG = logging.getLogger(__name__)


class LoopBudgetError(RuntimeError):
    """Raised when simple loop enumeration exceeds its budget."""


class SignLabel(Enum):
    PLUS = '+'
    MINUS = '-'
    THETA = '?'

    @classmethod
    def from_sign(cls, sign):
        if sign is Sign.ZERO:
            raise ValueError('A zero partial derivative is not an edge')
        return cls(sign.value)

    @classmethod
    def from_factor(cls, factor):
        return cls.PLUS if factor > 0 else cls.MINUS

    @property
    def factor(self):
        """+1 or -1, or None for THETA."""
        return {'+': 1, '-': -1}.get(self.value)

    def __mul__(self, other):
        if self is SignLabel.THETA or other is SignLabel.THETA:
            return SignLabel.THETA
        return SignLabel.from_factor(self.factor * other.factor)


class InteractionGraph(object):
    """
    A sign-labelled directed graph without self-edges.

    The structure is a dict in the graph JSON format::

        {"n": 2, "edges": [{"from": 2, "to": 1, "sign": "+"}]}

    Instances are never modified after construction.
    """

    def __init__(self, structure, check_structure=True):
        """
        DON'T USE THIS CONSTRUCTOR DIRECTLY.
        YOU SHOULD RATHER USE ONE OF THE from_* CLASS METHODS.
        """
        self._structure = structure
        if check_structure:
            self.check_structure(True)
        self._labels = dict(((e['from'], e['to']), SignLabel(e['sign']))
                            for e in structure['edges'])
        self._components = None

    @classmethod
    def from_str(cls, json_str):
        return cls(json.loads(json_str))

    @classmethod
    def from_file(cls, json_filelike):
        return cls(json.load(json_filelike))

    @classmethod
    def from_dict(cls, dictobj):
        return cls(deepcopy(dictobj))

    @classmethod
    def from_edges(cls, n, edges):
        """``edges`` is an iterable of ``(from, to, label)``;
        labels may be :class:`SignLabel` or their string values."""
        return cls({
            'n': n,
            'edges': [{'from': u, 'to': v, 'sign': SignLabel(label).value}
                      for u, v, label in edges],
        })

    def check_structure(self, raises=True):
        problems = []
        structure = self._structure
        n = structure.get('n') if isinstance(structure, dict) else None
        if type(n) is not int or n < 1:
            problems.append("Invalid vertex count %r" % (n,))
            n = None
        edges = structure.get('edges') if isinstance(structure, dict) else None
        if not isinstance(edges, list):
            problems.append("Edges must be a list")
            edges = []
        seen = set()
        for edge in edges:
            if not isinstance(edge, dict) \
            or set(edge) != {'from', 'to', 'sign'}:
                problems.append("Malformed edge %r" % (edge,))
                continue
            u, v = edge['from'], edge['to']
            if type(u) is not int or type(v) is not int \
            or n is not None and not (1 <= u <= n and 1 <= v <= n):
                problems.append("Edge %r->%r has a vertex out of range" % (u, v))
            if u == v:
                problems.append("Self-edge on vertex %r" % u)
            if (u, v) in seen:
                problems.append("Duplicate edge %r->%r" % (u, v))
            seen.add((u, v))
            if edge['sign'] not in ('+', '-', '?'):
                problems.append("Unsupported sign %r on edge %r->%r"
                                % (edge['sign'], u, v))
        if problems and raises:
            raise ValueError("\n".join(problems))
        return problems

    @property
    def n(self):
        return self._structure['n']

    @property
    def vertices(self):
        return range(1, self.n + 1)

    def label(self, u, v):
        """The label of edge ``u -> v``, or None if there is no such edge."""
        return self._labels.get((u, v))

    def edges(self):
        """Sorted list of ``(from, to, label)``."""
        return sorted((u, v, label) for (u, v), label in self._labels.items())

    def edge_set(self):
        return frozenset(self._labels)

    def successors(self, u):
        return sorted(v for (a, v) in self._labels if a == u)

    def predecessors(self, v):
        return sorted(u for (u, b) in self._labels if b == v)

    def to_networkx(self):
        ret = nx.DiGraph()
        ret.add_nodes_from(self.vertices)
        for u, v, label in self.edges():
            ret.add_edge(u, v, sign=label.value)
        return ret

    def export_as_dict(self):
        return {
            'n': self.n,
            'edges': [{'from': u, 'to': v, 'sign': label.value}
                      for u, v, label in self.edges()],
        }

    def export_as_string(self, *args, **kw):
        return json.dumps(self.export_as_dict(), *args, **kw)

    def export_to_file(self, fp, *args, **kw):
        return json.dump(self.export_as_dict(), fp, *args, **kw)

    def __eq__(self, other):
        return isinstance(other, InteractionGraph) \
            and self.n == other.n and self._labels == other._labels

    def __hash__(self):
        return hash((self.n, frozenset(self._labels.items())))

    def __repr__(self):
        return 'InteractionGraph(%d, %s)' % (self.n, ' '.join(
            '%d%s>%d' % (u, label.value, v) for u, v, label in self.edges()))


# building from a system

def analyze_edges(s, opts=None, seed=DEFAULT_SEED):
    """
    Sign verdicts of every nonzero off-diagonal partial derivative of ``s``,
    keyed by edge ``(j, i)``.
    """
    ret = {}
    for i in range(1, s.n + 1):
        for j in range(1, s.n + 1):
            if i == j:
                continue
            verdict = sign_of_partial(s, i, j, opts, seed)
            if verdict.sign is not Sign.ZERO:
                LOG.debug('edge %d->%d labelled %s (%s)',
                          j, i, verdict.sign.value, verdict.evidence)
                ret[(j, i)] = verdict
    return ret


def build_interaction_graph(s, opts=None, seed=DEFAULT_SEED, verdicts=None):
    """The interaction graph of ``s``.

    ``verdicts`` may be passed when :func:`analyze_edges` was already run.
    """
    if verdicts is None:
        verdicts = analyze_edges(s, opts, seed)
    return InteractionGraph.from_edges(
        s.n, [(j, i, SignLabel.from_sign(v.sign))
              for (j, i), v in sorted(verdicts.items())])


# strongly connected components

@dataclass(frozen=True)
class Condensation(object):
    """Components ordered by smallest vertex, and the DAG between them
    (as pairs of indices in ``components``)."""
    components: tuple
    edges: tuple

    def component_of(self, v):
        for k, component in enumerate(self.components):
            if v in component:
                return k
        raise KeyError(v)

    @property
    def sources(self):
        targets = set(b for _, b in self.edges)
        return [k for k in range(len(self.components)) if k not in targets]


def scc(g):
    if g._components is None:
        graph = g.to_networkx()
        components = sorted((frozenset(c) for c
                             in nx.strongly_connected_components(graph)),
                            key=min)
        dag = nx.condensation(graph, scc=components)
        g._components = Condensation(tuple(components),
                                     tuple(sorted(dag.edges())))
    return g._components


def loop_edges(g):
    """The edges lying on at least one loop."""
    cond = scc(g)
    ret = set()
    for component in cond.components:
        for u in component:
            for v in g.successors(u):
                if v in component:
                    ret.add((u, v))
    return frozenset(ret)


def directed_path(g, source, target, allowed=None):
    """
    Shortest path from ``source`` to ``target`` as a list of vertices,
    exploring successors in increasing order; None if there is none.
    """
    parents = {source: None}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        if u == target:
            path = [u]
            while parents[path[-1]] is not None:
                path.append(parents[path[-1]])
            return path[::-1]
        for v in g.successors(u):
            if v not in parents and (allowed is None or v in allowed):
                parents[v] = u
                queue.append(v)
    return None


# loops

@dataclass(frozen=True)
class Loop(object):
    """A simple directed loop, starting from its smallest vertex."""
    vertices: tuple
    labels: tuple

    @classmethod
    def from_vertices(cls, g, vertices):
        vertices = list(vertices)
        k = vertices.index(min(vertices))
        vertices = tuple(vertices[k:] + vertices[:k])
        labels = []
        for u, v in _pairs(vertices):
            label = g.label(u, v)
            if label is None:
                raise ValueError('%r is not a loop of %r' % (vertices, g))
            labels.append(label)
        return cls(vertices, tuple(labels))

    @property
    def edges(self):
        return list(_pairs(self.vertices))

    @property
    def sign(self):
        ret = SignLabel.PLUS
        for label in self.labels:
            ret = ret * label
        return ret

    def export_as_dict(self):
        return {
            'vertices': list(self.vertices),
            'edges': [{'from': u, 'to': v, 'sign': label.value}
                      for (u, v), label in zip(self.edges, self.labels)],
            'sign': self.sign.value,
        }

def _pairs(vertices):
    for k, u in enumerate(vertices):
        yield u, vertices[(k + 1) % len(vertices)]


def enumerate_simple_loops(g, max_len, budget=None):
    """
    Every simple loop of length at most ``max_len``, with its sign.

    Raise :class:`LoopBudgetError` rather than return a partial list
    when more than ``budget`` loops exist.
    """
    if max_len < 2:
        raise ValueError('max_len must be at least 2')
    if budget is None:
        budget = Tolerances().loop_budget
    ret = []
    for cycle in nx.simple_cycles(g.to_networkx(), length_bound=max_len):
        if len(ret) >= budget:
            raise LoopBudgetError('more than %d simple loops' % budget)
        ret.append(Loop.from_vertices(g, cycle))
    ret.sort(key=lambda loop: (len(loop.vertices), loop.vertices))
    return ret


def complete_loop(g, u, v):
    """The loop made of edge ``u -> v`` and a shortest path back to ``u``."""
    cond = scc(g)
    component = cond.components[cond.component_of(u)]
    path = directed_path(g, v, u, component)
    if path is None:
        raise ValueError('Edge %d->%d is not on a loop' % (u, v))
    return Loop.from_vertices(g, [u] + path[:-1])


# classification

class GraphClass(Enum):
    COOPERATIVE = 'cooperative'
    QUASICOOPERATIVE = 'quasicooperative'
    COHERENT = 'coherent'
    INCOHERENT = 'incoherent'


@dataclass(frozen=True)
class ClassVerdict(object):
    klass: GraphClass
    witness: Loop = None

    @property
    def is_coherent(self):
        return self.klass is not GraphClass.INCOHERENT

    def export_as_dict(self):
        ret = {'class': self.klass.value}
        if self.witness is not None:
            ret['witness'] = self.witness.export_as_dict()
        return ret


def is_positive(g):
    return all(label is SignLabel.PLUS for _, _, label in g.edges())


def is_quasipositive(g):
    return all(g.label(u, v) is SignLabel.PLUS for u, v in loop_edges(g))


def has_positive_loop_property(g):
    from .spin import SpinAssignment, find_consistent_spin
    return isinstance(find_consistent_spin(g), SpinAssignment)


def classify(g):
    """The most specific class of ``g``, with a witness loop if incoherent."""
    from .spin import FailureWitness, find_consistent_spin
    if is_positive(g):
        return ClassVerdict(GraphClass.COOPERATIVE)
    if is_quasipositive(g):
        return ClassVerdict(GraphClass.QUASICOOPERATIVE)
    result = find_consistent_spin(g)
    if isinstance(result, FailureWitness):
        LOG.debug('incoherent: %s loop %r', result.reason, result.loop)
        return ClassVerdict(GraphClass.INCOHERENT, result.loop)
    return ClassVerdict(GraphClass.COHERENT)


# subgraphs

@dataclass(frozen=True)
class Subgraph(object):
    """A vertex set and a set of ``(from, to)`` edges, labels inherited."""
    vertices: frozenset
    edges: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, 'vertices', frozenset(self.vertices))
        object.__setattr__(self, 'edges', frozenset(self.edges))

    @classmethod
    def full(cls, g, vertices):
        vertices = frozenset(vertices)
        return cls(vertices, frozenset((u, v) for u, v in g.edge_set()
                                       if u in vertices and v in vertices))

    def check(self, g):
        problems = []
        for v in self.vertices:
            if not 1 <= v <= g.n:
                problems.append("Vertex %r is not in the graph" % v)
        for u, v in self.edges:
            if u not in self.vertices or v not in self.vertices:
                problems.append("Edge %r->%r leaves the subgraph" % (u, v))
            if g.label(u, v) is None:
                problems.append("Edge %r->%r is not in the graph" % (u, v))
        if problems:
            raise ValueError("\n".join(problems))

    def export_as_dict(self, g):
        return {
            'vertices': sorted(self.vertices),
            'edges': [{'from': u, 'to': v, 'sign': g.label(u, v).value}
                      for u, v in sorted(self.edges)],
        }


@dataclass(frozen=True)
class SubgraphPredicates(object):
    full: bool
    initial: bool
    terminal: bool
    primary: bool
    connected: bool
    strongly_connected: bool


def induced_subgraph(g, vertices):
    return Subgraph.full(g, vertices)


def subgraph_predicates(g, s):
    s.check(g)
    inside = s.vertices
    local = nx.DiGraph()
    local.add_nodes_from(inside)
    local.add_edges_from(s.edges)
    components = list(nx.strongly_connected_components(local))
    component = dict((v, k) for k, c in enumerate(components) for v in c)
    return SubgraphPredicates(
        full=all((u, v) in s.edges for u, v in g.edge_set()
                 if u in inside and v in inside),
        initial=not any(u not in inside and v in inside
                        for u, v in g.edge_set()),
        terminal=not any(u in inside and v not in inside
                         for u, v in g.edge_set()),
        primary=all(component[u] == component[v] for u, v in s.edges),
        connected=bool(inside) and nx.is_weakly_connected(local),
        strongly_connected=bool(inside) and len(components) == 1,
    )


def fundamental_subgraphs(g):
    """The full subgraphs on the source components of the condensation."""
    cond = scc(g)
    return [Subgraph.full(g, cond.components[k]) for k in cond.sources]


def subgraph_as_graph(g, s):
    """``s`` as an InteractionGraph, its vertices renumbered in order."""
    order = sorted(s.vertices)
    index = dict((v, k) for k, v in enumerate(order, 1))
    return InteractionGraph.from_edges(
        len(order), [(index[u], index[v], g.label(u, v))
                     for u, v in sorted(s.edges)])


def graph_union(a, b):
    if a.n != b.n:
        raise ValueError('Graphs have different vertex counts')
    labels = dict(((u, v), label) for u, v, label in a.edges())
    for u, v, label in b.edges():
        if labels.setdefault((u, v), label) is not label:
            raise ValueError('Edge %d->%d has conflicting labels' % (u, v))
    return InteractionGraph.from_edges(
        a.n, [(u, v, label) for (u, v), label in sorted(labels.items())])


def is_isomorphic_to_subgraph(small, g, mapping, match=None):
    """
    Whether ``mapping`` (vertex of ``small`` -> vertex of ``g``)
    embeds ``small`` in ``g`` with the same labels.

    ``match(label, parent_label)`` replaces label identity when given.
    """
    if sorted(mapping) != list(small.vertices) \
    or len(set(mapping.values())) != len(mapping):
        return False
    if match is None:
        match = operator.is_
    for u, v, label in small.edges():
        parent = g.label(mapping[u], mapping[v])
        if parent is None or not match(label, parent):
            return False
    return True


def transport(g, change):
    """
    The interaction graph after the elementary change ``change``
    (``y_i = rho_i x_perm(i)``): edge ``(u, v)`` becomes
    ``(perm^-1(u), perm^-1(v))`` with label ``rho rho h``.
    """
    inverse = dict((k, i) for i, k in enumerate(change.perm, 1))
    edges = []
    for u, v, label in g.edges():
        i, k = inverse[u], inverse[v]
        flip = SignLabel.from_factor(change.rho[i - 1] * change.rho[k - 1])
        edges.append((i, k, label * flip))
    return InteractionGraph.from_edges(g.n, sorted(edges))
