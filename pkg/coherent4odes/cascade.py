"""
Elementary changes of variables and cascade decompositions.

An elementary change ``(perm, rho)`` maps ``x`` to ``y`` with
``y_i = rho_i * x_perm(i)``. A coherent system is turned by such a change
into a quasicooperative one whose coordinates are grouped in blocks,
each block depending only on itself and the blocks before it.
"""
from dataclasses import dataclass
import logging

import numpy as np
import sympy as sp

from .config import DEFAULT_SEED, Tolerances
from .igraph import GraphClass, InteractionGraph, SignLabel, Subgraph, \
    build_interaction_graph, classify, graph_union, is_isomorphic_to_subgraph, \
    scc, subgraph_as_graph, transport
from .spin import find_consistent_spin
from .sysdsl import DomainBox, FieldEvaluationError, SystemDef, differentiate, \
    eval_field, numeric_jacobian, variable, variables

LOG = logging.getLogger(__name__)


class IncoherentError(ValueError):
    """The system or graph has a negative or ambiguous loop."""

    def __init__(self, verdict):
        ValueError.__init__(self, 'incoherent: witness loop %r'
                                  % (verdict.witness.vertices,))
        self.verdict = verdict

    @property
    def witness(self):
        return self.verdict.witness


class BlockCouplingError(ValueError):
    """The first block of a decomposition depends on later coordinates."""


@dataclass(frozen=True)
class ElementaryChange(object):
    perm: tuple
    rho: tuple

    def __post_init__(self):
        object.__setattr__(self, 'perm', tuple(int(i) for i in self.perm))
        object.__setattr__(self, 'rho', tuple(int(r) for r in self.rho))
        n = len(self.perm)
        if sorted(self.perm) != list(range(1, n + 1)):
            raise ValueError('%r is not a permutation of 1..%d' % (self.perm, n))
        if len(self.rho) != n or any(r not in (1, -1) for r in self.rho):
            raise ValueError('rho must be %d signs, got %r' % (n, self.rho))

    @classmethod
    def identity(cls, n):
        return cls(tuple(range(1, n + 1)), (1,) * n)

    @classmethod
    def from_dict(cls, dictobj):
        return cls(tuple(dictobj['perm']), tuple(dictobj['rho']))

    @property
    def n(self):
        return len(self.perm)

    def is_identity(self):
        return self == ElementaryChange.identity(self.n)

    def inverse(self):
        inverse = [0] * self.n
        for i, k in enumerate(self.perm, 1):
            inverse[k - 1] = i
        return ElementaryChange(tuple(inverse),
                                tuple(self.rho[i - 1] for i in inverse))

    def then(self, other):
        """The change applying ``self`` first, then ``other``."""
        if other.n != self.n:
            raise ValueError('Changes have different dimensions')
        return ElementaryChange(
            tuple(self.perm[k - 1] for k in other.perm),
            tuple(r * self.rho[k - 1] for r, k in zip(other.rho, other.perm)))

    def compose(self, other):
        """``self o other``: apply ``other`` first."""
        return other.then(self)

    def forward(self, x):
        x = np.asarray(x, dtype=float)
        return np.array(self.rho) * x[..., np.array(self.perm) - 1]

    def backward(self, y):
        return self.inverse().forward(y)

    def matrix(self):
        ret = np.zeros((self.n, self.n))
        for i, (k, r) in enumerate(zip(self.perm, self.rho)):
            ret[i, k - 1] = r
        return ret

    def export_as_dict(self):
        return {'perm': list(self.perm), 'rho': list(self.rho)}


def apply_change(s, c):
    """
    The system ``G = L o F o L^-1`` in the new coordinates.

    The domain box follows: interval ``perm(i)``, reflected when
    ``rho_i = -1``, becomes interval ``i``.
    """
    if c.n != s.n:
        raise ValueError('Change of dimension %d applied to a system of '
                         'dimension %d' % (c.n, s.n))
    substitution = dict((variable(k), r * variable(i))
                        for i, (k, r) in enumerate(zip(c.perm, c.rho), 1))
    fields = tuple(r * s.fields[k - 1].xreplace(substitution)
                   for k, r in zip(c.perm, c.rho))
    bounds = tuple(s.domain.bounds[k - 1] if r == 1
                   else s.domain.bounds[k - 1].reflect()
                   for k, r in zip(c.perm, c.rho))
    return SystemDef(fields, DomainBox(bounds), s.params)


def _first_source(g, vertices):
    """Smallest-vertex source component of the graph induced on ``vertices``."""
    sub = Subgraph.full(g, vertices)
    order = sorted(vertices)
    local = subgraph_as_graph(g, sub)
    cond = scc(local)
    component = cond.components[cond.sources[0]]
    return sorted(order[v - 1] for v in component)


def plan_transform(g):
    """
    The change making ``g`` quasipositive, with the fundamental subgraph
    containing the smallest vertex moved to the first positions.

    Raise :class:`IncoherentError` if ``g`` is incoherent.
    """
    verdict = classify(g)
    if not verdict.is_coherent:
        raise IncoherentError(verdict)
    sigma = find_consistent_spin(g)
    first = _first_source(g, g.vertices)
    perm = first + [v for v in g.vertices if v not in first]
    LOG.debug('spin %r, first block %r', sigma.sigma, first)
    return ElementaryChange(tuple(perm), tuple(sigma[k] for k in perm))


@dataclass(frozen=True)
class CascadeDecomposition(object):
    """
    ``blocks`` are in the new coordinates, ``source_blocks`` hold the same
    vertices in the original ones; ``boundaries`` are the cumulative block
    ends, the first one being ``top_index``.

    ``source`` and ``system`` are None for a graph-only decomposition.
    """
    change: ElementaryChange
    graph: object
    blocks: tuple
    source_blocks: tuple
    classes: tuple
    klass: object
    source: SystemDef = None
    system: SystemDef = None

    @property
    def boundaries(self):
        ret = []
        for block in self.blocks:
            ret.append(block[-1])
        return tuple(ret)

    @property
    def top_index(self):
        return self.boundaries[0]

    @property
    def n(self):
        return self.change.n

    def export_as_dict(self):
        ret = self.change.export_as_dict()
        ret.update({
            'blocks': [list(block) for block in self.blocks],
            'source_blocks': [list(block) for block in self.source_blocks],
            'boundaries': list(self.boundaries),
            'n1': self.top_index,
            'classes': [verdict.klass.value for verdict in self.classes],
            'class': self.klass.klass.value,
            'graph': self.graph.export_as_dict(),
        })
        return ret


def decompose_graph(g):
    """The block structure of ``g`` (no system to transform)."""
    change = plan_transform(g)
    planned = transport(g, change)
    remaining = list(planned.vertices)
    order = []
    while remaining:
        block = _first_source(planned, remaining)
        order.append(block)
        remaining = [v for v in remaining if v not in block]
    change = change.then(ElementaryChange(
        tuple(v for block in order for v in block), (1,) * g.n))
    graph = transport(g, change)

    blocks = []
    start = 0
    for block in order:
        blocks.append(tuple(range(start + 1, start + len(block) + 1)))
        start += len(block)
    source_blocks = tuple(tuple(sorted(change.perm[i - 1] for i in block))
                          for block in blocks)
    classes = tuple(classify(subgraph_as_graph(graph, Subgraph.full(graph, block)))
                    for block in blocks)
    LOG.debug('blocks %r (source %r)', blocks, source_blocks)
    return CascadeDecomposition(change, graph, tuple(blocks), source_blocks,
                                classes, classify(graph))


def decompose(s, opts=None, seed=DEFAULT_SEED, graph=None):
    """
    Transform ``s`` into a quasicooperative cascade.

    Raise :class:`IncoherentError` if ``s`` is incoherent.
    """
    if graph is None:
        graph = build_interaction_graph(s, opts, seed)
    d = decompose_graph(graph)
    return CascadeDecomposition(d.change, d.graph, d.blocks, d.source_blocks,
                                d.classes, d.klass, s,
                                apply_change(s, d.change))


def verify_block_triangular(s, n1, opts=None, seed=DEFAULT_SEED):
    """
    Whether ``F_i`` does not depend on ``x_j`` for all ``i <= n1 < j``,
    checked symbolically then on numeric Jacobians.
    """
    if not 1 <= n1 < s.n:
        raise ValueError('n1 must satisfy 1 <= n1 < %d, got %r' % (s.n, n1))
    opts = opts or Tolerances()
    for i in range(1, n1 + 1):
        for j in range(n1 + 1, s.n + 1):
            if differentiate(s.fields[i - 1], j) != 0:
                LOG.debug('F%d depends on x%d', i, j)
                return False
    rng = np.random.default_rng(seed)
    box = np.array(s.domain.search_box(opts.search_radius))
    points = box[:, 0] + rng.uniform(size=(opts.jacobian_points, s.n)) \
        * (box[:, 1] - box[:, 0])
    for x in points:
        try:
            jac = numeric_jacobian(s, x, opts.fd_step)
        except FieldEvaluationError:
            LOG.debug('skipping %r: field undefined nearby', x)
            continue
        if np.max(np.abs(jac[:n1, n1:])) > opts.jacobian_tol:
            return False
    return True


def top_system(d):
    """The first block of the transformed system, on its own."""
    if d.system is None:
        raise ValueError('Graph-only decomposition has no top system')
    n1 = d.top_index
    allowed = set(variables(n1))
    fields = d.system.fields[:n1]
    for expr in fields:
        if not expr.free_symbols <= allowed:
            raise BlockCouplingError(
                'top block references %s'
                % sorted(map(str, expr.free_symbols - allowed)))
    return SystemDef(fields, d.system.domain.select(range(1, n1 + 1)),
                     d.system.params)


@dataclass(frozen=True)
class FibreSystemDef(object):
    """
    The remaining coordinates with the top block frozen at ``p``.

    ``inherited_class`` is the domain class of the parent,
    which the fibre domain also satisfies.
    """
    parent: SystemDef
    p: tuple
    reduced: SystemDef
    inherited_class: object

    @property
    def n1(self):
        return len(self.p)


def _literal(value):
    value = float(value)
    if value.is_integer():
        return sp.Integer(int(value))
    return sp.Float(value)


def fibre_system(d, p, opts=None):
    opts = opts or Tolerances()
    n1 = d.top_index
    if n1 >= d.n:
        raise ValueError('A single block cascade has no fibre')
    p = tuple(float(v) for v in p)
    if len(p) != n1:
        raise ValueError('Expected a point of dimension %d, got %d'
                         % (n1, len(p)))
    top = top_system(d)
    if not top.domain.contains(p):
        raise ValueError('%r is outside the top domain' % (p,))
    residual = np.max(np.abs(eval_field(top, p)))
    if residual > opts.eq_tol:
        raise ValueError('%r is not an equilibrium of the top system '
                         '(|F| = %g)' % (p, residual))
    substitution = dict((variable(k), _literal(v)) for k, v in enumerate(p, 1))
    substitution.update((variable(n1 + m), variable(m))
                        for m in range(1, d.n - n1 + 1))
    fields = tuple(expr.xreplace(substitution)
                   for expr in d.system.fields[n1:])
    reduced = SystemDef(fields,
                        d.system.domain.select(range(n1 + 1, d.n + 1)),
                        d.system.params)
    return FibreSystemDef(d.system, p, reduced, d.system.domain.domain_class)


def fibre_systems(d, opts=None, seed=DEFAULT_SEED):
    """
    Fibre systems over every equilibrium found for the top system;
    none for a single block cascade.
    """
    from .dynamics import find_equilibria
    if d.top_index >= d.n:
        return []
    top = top_system(d)
    return [fibre_system(d, p, opts) for p in find_equilibria(top, opts, seed)]


@dataclass(frozen=True)
class InheritanceReport(object):
    problems: tuple

    @property
    def ok(self):
        return not self.problems


_RANK = dict((klass, k) for k, klass in enumerate(GraphClass))


def _refines(label, parent):
    return label is parent or parent is SignLabel.THETA


def _shifted(g, n, offset):
    return InteractionGraph.from_edges(
        n, [(u + offset, v + offset, label) for u, v, label in g.edges()])


def check_inheritance(d, fibre=None, opts=None, seed=DEFAULT_SEED):
    """
    Check that the top system's graph is the full subgraph of the first
    block, and that the fibre graph embeds in the graph of the remaining
    blocks with an inherited class.

    A label THETA in the transformed graph may be refined
    in the smaller systems.
    """
    problems = []
    n1 = d.top_index
    top_graph = build_interaction_graph(top_system(d), opts, seed)
    block = subgraph_as_graph(d.graph, Subgraph.full(d.graph, range(1, n1 + 1)))
    identity = dict((v, v) for v in top_graph.vertices)
    if top_graph.edge_set() != block.edge_set() \
    or not is_isomorphic_to_subgraph(top_graph, block, identity, _refines):
        problems.append('top graph %r differs from first block %r'
                        % (top_graph, block))
    if classify(top_graph).klass is not GraphClass.COOPERATIVE:
        problems.append('top system is not cooperative')
    if fibre is not None:
        fibre_graph = build_interaction_graph(fibre.reduced, opts, seed)
        # top and fibre side by side, without the coupling edges
        diagonal = graph_union(_shifted(top_graph, d.n, 0),
                               _shifted(fibre_graph, d.n, n1))
        identity = dict((v, v) for v in diagonal.vertices)
        if not is_isomorphic_to_subgraph(diagonal, d.graph, identity,
                                         _refines):
            problems.append('fibre graph %r does not embed in %r'
                            % (fibre_graph, d.graph))
        rest = subgraph_as_graph(d.graph,
                                 Subgraph.full(d.graph, range(n1 + 1, d.n + 1)))
        if _RANK[classify(fibre_graph).klass] > _RANK[classify(rest).klass]:
            problems.append('fibre class is weaker than its parent')
    return InheritanceReport(tuple(problems))
