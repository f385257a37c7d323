"""
Spin assignments.

A spin assignment gives each vertex a sign +1 or -1.
It is consistent when ``h(u, v) = sigma(u) sigma(v)``
for every edge ``(u, v)`` lying on a loop;
a graph has one iff every loop is positive.
"""
from collections import deque
from dataclasses import dataclass
import logging

from .igraph import Loop, SignLabel, complete_loop, loop_edges, scc

LOG = logging.getLogger(__name__)


@dataclass(frozen=True)
class SpinAssignment(object):
    """``sigma[v - 1]`` is the spin of vertex ``v``."""
    sigma: tuple

    def __post_init__(self):
        object.__setattr__(self, 'sigma', tuple(int(s) for s in self.sigma))
        if any(s not in (1, -1) for s in self.sigma):
            raise ValueError('Spins must be +1 or -1, got %r' % (self.sigma,))

    def __getitem__(self, v):
        return self.sigma[v - 1]

    @property
    def n(self):
        return len(self.sigma)

    @classmethod
    def from_dict(cls, dictobj):
        sigma = dictobj['sigma']
        return cls(tuple(sigma[str(v)] for v in range(1, len(sigma) + 1)))

    def export_as_dict(self):
        return {'sigma': dict((str(v), s) for v, s in enumerate(self.sigma, 1))}


@dataclass(frozen=True)
class FailureWitness(object):
    """
    Why no consistent spin exists.

    ``reason`` is ``ambiguous`` (a loop edge has label THETA)
    or ``negative``; ``cycle`` is the undirected cycle of odd parity
    found while propagating spins (empty when ambiguous),
    and ``loop`` a directed loop whose sign is MINUS or THETA.
    """
    reason: str
    cycle: tuple
    loop: Loop

    def export_as_dict(self):
        return {
            'reason': self.reason,
            'cycle': list(self.cycle),
            'loop': self.loop.export_as_dict(),
        }


def _propagate(g, edges):
    """
    Propagate spins along ``edges`` taken as undirected.

    Return ``(sigma, None)`` or, on a parity conflict,
    ``(sigma_so_far, (parents, u, v))``.
    """
    neighbours = dict((v, []) for v in g.vertices)
    for u, v in edges:
        factor = g.label(u, v).factor
        neighbours[u].append((v, factor))
        neighbours[v].append((u, factor))
    sigma = {}
    parents = {}
    for root in g.vertices:
        if root in sigma:
            continue
        sigma[root] = 1
        parents[root] = None
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for v, factor in sorted(neighbours[u]):
                expected = sigma[u] * factor
                if v not in sigma:
                    sigma[v] = expected
                    parents[v] = u
                    queue.append(v)
                elif sigma[v] != expected:
                    return sigma, (parents, u, v)
    return sigma, None


def _odd_cycle(parents, u, v):
    def chain(x):
        ret = [x]
        while parents[ret[-1]] is not None:
            ret.append(parents[ret[-1]])
        return ret
    cu, cv = chain(u), chain(v)
    common = set(cu) & set(cv)
    cu = cu[:next(k for k, x in enumerate(cu) if x in common) + 1]
    cv = cv[:cv.index(cu[-1])]
    return tuple(cu + cv[::-1])


def _tree(g, root, component, reverse):
    """BFS tree paths and their label products, from or to ``root``."""
    paths = {root: [root]}
    products = {root: 1}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        nexts = g.predecessors(u) if reverse else g.successors(u)
        for v in nexts:
            if v in component and v not in paths:
                label = g.label(v, u) if reverse else g.label(u, v)
                products[v] = products[u] * label.factor
                paths[v] = paths[u] + [v]
                queue.append(v)
    return paths, products


def _negative_loop(g, component):
    """A negative simple loop inside a strong component with no consistent
    spin, found by closing forward and backward BFS tree paths."""
    root = min(component)
    forward, sf = _tree(g, root, component, False)
    backward, sb = _tree(g, root, component, True)
    walk = None
    for b in sorted(component):
        if sf[b] * sb[b] == -1:
            walk = forward[b] + backward[b][::-1][1:]
            break
    else:
        for u in sorted(component):
            for v in g.successors(u):
                if v in component and g.label(u, v).factor != sf[u] * sf[v]:
                    walk = forward[u] + backward[v][::-1]
                    break
            if walk is not None:
                break
    if walk is None:
        raise AssertionError('component %r has a consistent spin' % (component,))
    return _split_walk(g, walk)


def _split_walk(g, walk):
    """First negative simple loop of a negative closed walk
    (``walk[0] == walk[-1]``)."""
    stack = []
    position = {}
    for v in walk:
        if v in position:
            k = position[v]
            loop = Loop.from_vertices(g, stack[k:])
            if loop.sign is SignLabel.MINUS:
                return loop
            for w in stack[k + 1:]:
                del position[w]
            del stack[k + 1:]
        else:
            position[v] = len(stack)
            stack.append(v)
    raise AssertionError('closed walk %r has no negative loop' % (walk,))


def find_consistent_spin(g):
    """
    A consistent spin assignment of ``g``, or a :class:`FailureWitness`.

    Spins are propagated from the smallest vertex of each undirected
    component of the loop edges, which gets +1;
    vertices on no loop edge get +1.
    """
    edges = sorted(loop_edges(g))
    for u, v in edges:
        if g.label(u, v) is SignLabel.THETA:
            LOG.debug('loop edge %d->%d is ambiguous', u, v)
            return FailureWitness('ambiguous', (), complete_loop(g, u, v))
    sigma, conflict = _propagate(g, edges)
    if conflict is None:
        return SpinAssignment(tuple(sigma[v] for v in g.vertices))
    parents, u, v = conflict
    cycle = _odd_cycle(parents, u, v)
    cond = scc(g)
    component = cond.components[cond.component_of(u)]
    loop = _negative_loop(g, component)
    LOG.debug('parity conflict on %d-%d, odd cycle %r, loop %r',
              u, v, cycle, loop.vertices)
    return FailureWitness('negative', cycle, loop)


def verify_spin(g, sigma):
    for u, v in loop_edges(g):
        label = g.label(u, v)
        if label is SignLabel.THETA or label.factor != sigma[u] * sigma[v]:
            return False
    return True


def find_orthant_spin(g):
    """
    A spin consistent on every edge, or None.

    With such a spin ``K``, the flow preserves the order
    ``K_i (x_i - y_i) >= 0``.
    """
    if any(label is SignLabel.THETA for _, _, label in g.edges()):
        return None
    edges = sorted(g.edge_set())
    sigma, conflict = _propagate(g, edges)
    if conflict is not None:
        return None
    return SpinAssignment(tuple(sigma[v] for v in g.vertices))
