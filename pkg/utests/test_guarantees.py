from pytest import mark

from coherent4odes.guarantees import all_accessible_from_above, \
    all_accessible_from_below, applicable_results, each_accessible, \
    relatively_open
from coherent4odes.igraph import GraphClass
from coherent4odes.sysdsl import Bounds, DomainBox, DomainClass

INF = float('inf')

WHOLE = DomainBox.whole(2)
ORTHANT = DomainBox((Bounds(0.0, INF, True),) * 2)
HALF_SPACE = DomainBox((Bounds(0.0, INF, True), Bounds()))
OPEN_ORTHANT = DomainBox((Bounds(0.0, INF),) * 2)
SQUARE = DomainBox((Bounds(0.0, 1.0, True, True),) * 2)
OPEN_SQUARE = DomainBox((Bounds(0.0, 1.0),) * 2)
UPPER_CLOSED = DomainBox((Bounds(0.0, 1.0, False, True),) * 2)
POINT = DomainBox((Bounds(1.0, 1.0, True, True), Bounds()))
LINE = DomainBox((Bounds(0.0, INF, True),))


def results(klass, domain):
    return dict((g.result, g.holds) for g in applicable_results(klass, domain))


def test_domain_classes():
    assert DomainClass.C1 == WHOLE.domain_class
    assert DomainClass.C3 == ORTHANT.domain_class
    assert DomainClass.C2 == HALF_SPACE.domain_class
    assert DomainClass.C4 == SQUARE.domain_class
    assert DomainClass.C3 == LINE.domain_class


@mark.parametrize('domain, above, below, each', [
    (WHOLE, True, True, True),
    (HALF_SPACE, True, True, True),
    (ORTHANT, True, False, True),
    (OPEN_ORTHANT, True, True, True),
    (SQUARE, False, False, False),
    (OPEN_SQUARE, True, True, True),
    (UPPER_CLOSED, False, True, True),
    (POINT, False, False, False),
])
def test_accessibility(domain, above, below, each):
    assert above == all_accessible_from_above(domain)
    assert below == all_accessible_from_below(domain)
    assert each == each_accessible(domain)


@mark.parametrize('domain, expected', [
    (WHOLE, True),
    (OPEN_ORTHANT, True),
    (HALF_SPACE, True),
    (LINE, True),
    (ORTHANT, False),
    (SQUARE, False),
])
def test_relatively_open(domain, expected):
    assert expected == relatively_open(domain)


def test_coherent_on_whole_space():
    assert {
        'equilibrium_attractors_coherent': True,
        'equilibrium_attractors_quasicooperative': False,
        'equilibrium_attractors_cooperative': False,
        'nowhere_dense_orbits': True,
        'global_stability': True,
    } == results(GraphClass.COHERENT, WHOLE)


def test_cooperative_on_orthant():
    assert {
        'equilibrium_attractors_coherent': False,
        'equilibrium_attractors_quasicooperative': True,
        'equilibrium_attractors_cooperative': True,
        'nowhere_dense_orbits': True,
        'global_stability': False,
    } == results(GraphClass.COOPERATIVE, ORTHANT)


def test_cooperative_on_square():
    got = results(GraphClass.COOPERATIVE, SQUARE)
    assert not got['equilibrium_attractors_quasicooperative']
    assert not got['equilibrium_attractors_cooperative']
    assert got['nowhere_dense_orbits']


def test_quasicooperative_one_sided():
    got = results(GraphClass.QUASICOOPERATIVE, UPPER_CLOSED)
    assert got['equilibrium_attractors_quasicooperative']
    assert not got['equilibrium_attractors_cooperative']
    reasons = dict((g.result, g.reason)
                   for g in applicable_results(GraphClass.QUASICOOPERATIVE,
                                               UPPER_CLOSED))
    assert 'every point accessible from below' \
        == reasons['equilibrium_attractors_quasicooperative']


def test_incoherent_gets_nothing():
    guarantees = applicable_results(GraphClass.INCOHERENT, WHOLE)
    assert 5 == len(guarantees)
    assert not any(g.holds for g in guarantees)
    assert all('not' in g.reason for g in guarantees)


def test_dimension_one():
    got = results(GraphClass.COOPERATIVE, LINE)
    assert not got['nowhere_dense_orbits']
    assert got['equilibrium_attractors_coherent']


def test_export():
    g = applicable_results(GraphClass.COHERENT, WHOLE)[0]
    assert {'result': 'equilibrium_attractors_coherent', 'holds': True,
            'reason': 'coherent on a relatively open domain'} \
        == g.export_as_dict()
