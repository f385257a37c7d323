"""
Which structural conclusions apply to a classified system.

Every result below concludes from the class of the interaction graph
and the shape of the domain box alone:

``equilibrium_attractors_coherent``
    a finitely transitive attracting set is an equilibrium,
    for a coherent system whose domain is open,
    or relatively open in a coordinate half-space;

``equilibrium_attractors_quasicooperative``
    same conclusion for a quasicooperative system whose points are all
    strongly accessible from above, or all from below;

``equilibrium_attractors_cooperative``
    same conclusion for a cooperative system whose points are each
    strongly accessible from above or from below;

``nowhere_dense_orbits``
    every orbit of a coherent system of dimension 2 or more is nowhere dense;

``global_stability``
    for a coherent system on an open domain with a global attractor,
    an equilibrium exists and, if unique, is globally asymptotically stable.
"""
from dataclasses import dataclass
import logging
import math

from .igraph import GraphClass
from .sysdsl import DomainClass

LOG = logging.getLogger(__name__)

_COHERENT = (GraphClass.COOPERATIVE, GraphClass.QUASICOOPERATIVE,
             GraphClass.COHERENT)
_QUASICOOPERATIVE = (GraphClass.COOPERATIVE, GraphClass.QUASICOOPERATIVE)


@dataclass(frozen=True)
class Guarantee(object):
    result: str
    holds: bool
    reason: str

    def export_as_dict(self):
        return {'result': self.result, 'holds': self.holds,
                'reason': self.reason}


def _closed_finite(bounds):
    """``(lower, upper)`` flags of closed finite endpoints."""
    return (bounds.lower_closed and not math.isinf(bounds.lower),
            bounds.upper_closed and not math.isinf(bounds.upper))


def all_accessible_from_above(domain):
    if domain.domain_class in (DomainClass.C1, DomainClass.C2):
        return True
    return not any(_closed_finite(b)[1] for b in domain.bounds)


def all_accessible_from_below(domain):
    if domain.domain_class in (DomainClass.C1, DomainClass.C2):
        return True
    return not any(_closed_finite(b)[0] for b in domain.bounds)


def each_accessible(domain):
    """Whether each point is strongly accessible from above or from below."""
    if domain.domain_class in (DomainClass.C1, DomainClass.C2):
        return True
    closed = [_closed_finite(b) for b in domain.bounds]
    if any(b.lower == b.upper for b in domain.bounds):
        return False
    return not any(closed[i][1] and closed[j][0]
                   for i in range(domain.n) for j in range(domain.n) if i != j)


def relatively_open(domain):
    """Open, or relatively open in a coordinate half-space."""
    return sum(sum(_closed_finite(b)) for b in domain.bounds) <= 1


def applicable_results(klass, domain):
    """
    One :class:`Guarantee` per result, for a system of class ``klass``
    (a :class:`~coherent4odes.igraph.GraphClass`) on ``domain``.
    """
    coherent = klass in _COHERENT
    quasi = klass in _QUASICOOPERATIVE
    cooperative = klass is GraphClass.COOPERATIVE
    ret = []

    def add(result, holds, reason):
        ret.append(Guarantee(result, bool(holds), reason))

    if not coherent:
        reason = 'system is not coherent'
    elif relatively_open(domain):
        reason = 'coherent on a relatively open domain'
    else:
        reason = 'domain has more than one closed endpoint'
    add('equilibrium_attractors_coherent',
        coherent and relatively_open(domain), reason)

    above = all_accessible_from_above(domain)
    below = all_accessible_from_below(domain)
    if not quasi:
        reason = 'system is not quasicooperative'
    elif above or below:
        reason = 'every point accessible from %s' % (
            'above' if above else 'below')
    else:
        reason = 'closed upper and lower endpoints'
    add('equilibrium_attractors_quasicooperative', quasi and (above or below),
        reason)

    each = each_accessible(domain)
    if not cooperative:
        reason = 'system is not cooperative'
    elif each:
        reason = 'each point accessible from above or below'
    else:
        reason = 'some point is accessible from neither side'
    add('equilibrium_attractors_cooperative', cooperative and each, reason)

    if not coherent:
        reason = 'system is not coherent'
    elif domain.n < 2:
        reason = 'dimension 1'
    else:
        reason = 'coherent of dimension %d' % domain.n
    add('nowhere_dense_orbits', coherent and domain.n >= 2, reason)

    if not coherent:
        reason = 'system is not coherent'
    elif domain.is_open:
        reason = 'coherent on an open domain, if a global attractor exists'
    else:
        reason = 'domain is not open'
    add('global_stability', coherent and domain.is_open, reason)

    LOG.debug('results for %s on %s: %r', klass.value,
              domain.domain_class.value, [g.result for g in ret if g.holds])
    return ret
