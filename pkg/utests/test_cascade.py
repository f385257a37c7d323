import random

import numpy as np
import sympy as sp
from pytest import approx, mark, raises

from coherent4odes.cascade import BlockCouplingError, CascadeDecomposition, \
    ElementaryChange, IncoherentError, apply_change, check_inheritance, \
    decompose, decompose_graph, fibre_system, fibre_systems, plan_transform, \
    top_system, verify_block_triangular
from coherent4odes.config import Tolerances
from coherent4odes.dynamics import check_conjugacy, check_semiconjugacy
from coherent4odes.igraph import GraphClass, SignLabel, Subgraph, \
    build_interaction_graph, classify, subgraph_predicates
from coherent4odes.sysdsl import Bounds, DomainClass, SystemDef, eval_field, \
    parse_system, variable

from .generators import graph, random_change, random_cooperative_system

x1, x2, x3 = variable(1), variable(2), variable(3)
INF = float('inf')

BOTH_MINUS = SystemDef((-x1 - x2, -x1 - x2))
CHAIN = SystemDef((-x1, x1 - x2, x2 - x3))
TANH_CHAIN = SystemDef((-x1, sp.tanh(x1) - x2))
# x1 <-> x2 positive loop, x3 inhibits x1
THREE = SystemDef((-x1 + x2 - x3, x1 - x2, -x3))


def coherent_systems(seed, count):
    rnd = random.Random(seed)
    for _ in range(count):
        s = random_cooperative_system(rnd)
        yield apply_change(s, random_change(rnd, s.n))


# elementary changes

def test_identity_change():
    c = ElementaryChange.identity(3)
    assert c.is_identity()
    assert (1, 2, 3) == c.perm
    assert (1, 1, 1) == c.rho
    assert [[1, 0, 0], [0, 1, 0], [0, 0, 1]] == c.matrix().tolist()


@mark.parametrize('perm, rho', [
    ((1, 1), (1, 1)),
    ((1, 3), (1, 1)),
    ((1, 2), (1,)),
    ((1, 2), (1, 0)),
    ((2, 1), (2, -1)),
])
def test_invalid_change(perm, rho):
    with raises(ValueError):
        ElementaryChange(perm, rho)


def test_forward_backward():
    c = ElementaryChange((3, 1, 2), (-1, 1, -1))
    x = np.array([1.0, 2.0, 3.0])
    y = c.forward(x)
    assert [-3.0, 1.0, -2.0] == y.tolist()
    assert x.tolist() == c.backward(y).tolist()
    assert y.tolist() == c.matrix().dot(x).tolist()


def test_forward_many_points():
    c = ElementaryChange((2, 1), (1, -1))
    xs = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert [[2.0, -1.0], [4.0, -3.0]] == c.forward(xs).tolist()


def test_inverse_and_composition():
    rnd = random.Random(7)
    for _ in range(50):
        n = rnd.randint(1, 5)
        a, b = random_change(rnd, n), random_change(rnd, n)
        assert a.then(a.inverse()).is_identity()
        assert a.inverse().then(a).is_identity()
        x = np.array([rnd.uniform(-5, 5) for _ in range(n)])
        assert b.forward(a.forward(x)).tolist() == a.then(b).forward(x).tolist()
        assert a.then(b) == b.compose(a)
        assert np.array_equal(b.matrix().dot(a.matrix()), a.then(b).matrix())


def test_then_dimension_mismatch():
    with raises(ValueError):
        ElementaryChange.identity(2).then(ElementaryChange.identity(3))


def test_change_export():
    c = ElementaryChange((2, 1), (1, -1))
    assert {'perm': [2, 1], 'rho': [1, -1]} == c.export_as_dict()
    assert c == ElementaryChange.from_dict(c.export_as_dict())


# apply_change

def test_apply_identity():
    assert THREE == apply_change(THREE, ElementaryChange.identity(3))


def test_apply_sign_flip():
    g = apply_change(BOTH_MINUS, ElementaryChange((1, 2), (1, -1)))
    assert (-x1 + x2, x1 - x2) == g.fields
    expected = graph(2, '1+2', '2+1')
    assert expected.edge_set() == build_interaction_graph(g).edge_set()
    assert all(label is SignLabel.PLUS
               for _, _, label in build_interaction_graph(g).edges())


def test_apply_swap():
    s = SystemDef((-x1, x1 - x2))
    g = apply_change(s, ElementaryChange((2, 1), (1, 1)))
    assert (x2 - x1, -x2) == g.fields


def test_apply_dimension_mismatch():
    with raises(ValueError):
        apply_change(BOTH_MINUS, ElementaryChange.identity(3))


def test_apply_reflects_domain():
    s = parse_system("var x1 in [0, inf)\nvar x2 in [0, inf)\n"
                     "x1' = -x1 - x2\nx2' = -x1 - x2\n")
    assert DomainClass.C3 == s.domain.domain_class
    g = apply_change(s, ElementaryChange((1, 2), (1, -1)))
    assert Bounds(0.0, INF, True, False) == g.domain.bounds[0]
    assert Bounds(-INF, 0.0, False, True) == g.domain.bounds[1]
    assert DomainClass.OTHER == g.domain.domain_class


def test_apply_change_is_conjugacy():
    rnd = random.Random(3)
    for _ in range(20):
        s = random_cooperative_system(rnd)
        c = random_change(rnd, s.n)
        g = apply_change(s, c)
        for _ in range(5):
            x = np.array([rnd.uniform(-3, 3) for _ in range(s.n)])
            expected = c.forward(eval_field(s, x))
            assert np.allclose(expected, eval_field(g, c.forward(x)),
                               rtol=1e-12, atol=1e-12)


# plan_transform

def test_plan_cooperative_is_identity():
    assert plan_transform(graph(3, '1+2', '2+1', '2+3')).is_identity()


def test_plan_both_minus():
    c = plan_transform(graph(2, '1-2', '2-1'))
    assert (1, 2) == c.perm
    assert (1, -1) == c.rho


def test_plan_moves_source_first():
    c = plan_transform(graph(3, '3-1', '1+2', '2+1'))
    assert 3 == c.perm[0]
    assert (3, 1, 2) == c.perm
    assert (1, 1, 1) == c.rho


def test_plan_incoherent():
    with raises(IncoherentError) as info:
        plan_transform(graph(2, '1+2', '2-1'))
    assert GraphClass.INCOHERENT == info.value.verdict.klass
    assert {1, 2} == set(info.value.witness.vertices)


# decompose

@mark.parametrize('g, blocks, source_blocks', [
    (graph(3, '1+2', '2+3'), ((1,), (2,), (3,)), ((1,), (2,), (3,))),
    (graph(2, '1+2', '2+1'), ((1, 2),), ((1, 2),)),
    (graph(3, '3-1', '1+2', '2+1'), ((1,), (2, 3)), ((3,), (1, 2))),
    (graph(2, '1-2', '2-1'), ((1, 2),), ((1, 2),)),
    (graph(3), ((1,), (2,), (3,)), ((1,), (2,), (3,))),
])
def test_decompose_graph(g, blocks, source_blocks):
    d = decompose_graph(g)
    assert blocks == d.blocks
    assert source_blocks == d.source_blocks
    assert tuple(block[-1] for block in blocks) == d.boundaries
    assert blocks[0][-1] == d.top_index
    assert d.klass.klass in (GraphClass.COOPERATIVE,
                             GraphClass.QUASICOOPERATIVE)


def test_decompose_graph_incoherent():
    with raises(IncoherentError):
        decompose_graph(graph(3, '1+2', '2+3', '3-1'))


def test_decompose_three():
    d = decompose(THREE)
    assert ((1,), (2, 3)) == d.blocks
    assert ((3,), (1, 2)) == d.source_blocks
    assert 1 == d.top_index
    assert all(v.klass is GraphClass.COOPERATIVE for v in d.classes)
    assert GraphClass.QUASICOOPERATIVE == d.klass.klass
    assert (-x1, -x1 - x2 + x3, x2 - x3) == d.system.fields
    assert THREE == d.source


def test_decompose_export():
    dictobj = decompose(THREE).export_as_dict()
    assert [3, 1, 2] == dictobj['perm']
    assert [1, 1, 1] == dictobj['rho']
    assert [[1], [2, 3]] == dictobj['blocks']
    assert [[3], [1, 2]] == dictobj['source_blocks']
    assert 1 == dictobj['n1']
    assert ['cooperative', 'cooperative'] == dictobj['classes']
    assert 'quasicooperative' == dictobj['class']


def test_decompose_incoherent_system():
    s = SystemDef((x2, -x1))
    with raises(IncoherentError):
        decompose(s)


def test_first_block_is_fundamental():
    for s in coherent_systems(11, 30):
        d = decompose(s)
        block = Subgraph.full(d.graph, d.blocks[0])
        predicates = subgraph_predicates(d.graph, block)
        assert predicates.full
        assert predicates.initial
        assert predicates.primary
        assert predicates.connected
        assert GraphClass.COOPERATIVE == d.classes[0].klass


def test_decomposition_is_quasicooperative():
    for s in coherent_systems(12, 100):
        d = decompose(s)
        assert d.klass.klass in (GraphClass.COOPERATIVE,
                                 GraphClass.QUASICOOPERATIVE)
        # the graph of the transformed system is the transported graph
        rebuilt = build_interaction_graph(d.system)
        assert d.graph.edge_set() == rebuilt.edge_set()
        assert classify(rebuilt).klass in (GraphClass.COOPERATIVE,
                                           GraphClass.QUASICOOPERATIVE)


def test_blocks_are_lower_triangular():
    opts = Tolerances({'jacobian_points': 50})
    for s in coherent_systems(13, 20):
        d = decompose(s)
        for boundary in d.boundaries[:-1]:
            assert verify_block_triangular(d.system, boundary, opts)


# verify_block_triangular

@mark.parametrize('s, n1, expected', [
    (SystemDef((-x1, x1 - x2)), 1, True),
    (SystemDef((-x1 + x2, -x2)), 1, False),
    (CHAIN, 2, True),
    (CHAIN, 1, True),
    (SystemDef((-x1, -x2 + x3, x2 - x3)), 1, True),
    (SystemDef((-x1, -x2 + x3, x2 - x3)), 2, False),
    (SystemDef((-x1 + 0 * x2, x1 - x2)), 1, True),
])
def test_verify_block_triangular(s, n1, expected):
    assert expected == verify_block_triangular(s, n1)


@mark.parametrize('n1', [0, 2, 3])
def test_verify_block_triangular_range(n1):
    with raises(ValueError):
        verify_block_triangular(SystemDef((-x1, -x2)), n1)


# top and fibre systems

def test_top_chain():
    top = top_system(decompose(CHAIN))
    assert (-x1,) == top.fields
    assert 1 == top.n


def test_top_single_block():
    s = SystemDef((-x1 + x2, x1 - x2))
    assert s == top_system(decompose(s))


def test_top_three():
    top = top_system(decompose(THREE))
    assert (-x1,) == top.fields


def test_top_graph_only():
    with raises(ValueError):
        top_system(decompose_graph(graph(2, '1+2')))


def test_top_coupled_block():
    s = SystemDef((-x1 + x2, -x2))
    g = build_interaction_graph(s)
    wrong = CascadeDecomposition(ElementaryChange.identity(2), g,
                                 ((1,), (2,)), ((1,), (2,)), (), classify(g),
                                 s, s)
    with raises(BlockCouplingError):
        top_system(wrong)


def test_fibre_at_equilibrium():
    d = decompose(SystemDef((-x1, x1 - x2)))
    fibre = fibre_system(d, (0,))
    assert (-x1,) == fibre.reduced.fields
    assert (0.0,) == fibre.p
    assert 1 == fibre.n1
    assert DomainClass.C1 == fibre.inherited_class


def test_fibre_tanh():
    fibre = fibre_system(decompose(TANH_CHAIN), (0,))
    assert (-x1,) == fibre.reduced.fields


@mark.parametrize('s, p', [
    (SystemDef((-x1, x1 - x2)), (1,)),
    (SystemDef((-x1, x1 - x2)), (0, 0)),
    (SystemDef((-x1 + x2, x1 - x2)), (0, 0)),
])
def test_fibre_errors(s, p):
    with raises(ValueError):
        fibre_system(decompose(s), p)


def test_fibre_outside_domain():
    s = parse_system("var x1 in [1, 2]\nx1' = -x1\nx2' = x1 - x2\n")
    with raises(ValueError):
        fibre_system(decompose(s), (0,))


def test_fibre_matches_parent():
    s = SystemDef((1 - x1, sp.tanh(x1) * x2 - x2 + x3, x2 - 2 * x3 + x1))
    d = decompose(s)
    assert 1 == d.top_index
    fibre = fibre_system(d, (1,))
    rng = np.random.default_rng(5)
    for z in rng.uniform(-4, 4, size=(100, 2)):
        parent = eval_field(d.system, np.concatenate([[1.0], z]))
        assert np.allclose(parent[1:], eval_field(fibre.reduced, z),
                           rtol=1e-13, atol=1e-13)


def test_fibre_systems():
    d = decompose(THREE)
    fibre, = fibre_systems(d)
    assert fibre.p == approx((0,), abs=1e-9)
    assert 2 == fibre.reduced.n
    assert check_inheritance(d, fibre).ok
    assert [] == fibre_systems(decompose(SystemDef((-x1 + x2, x1 - 2 * x2))))


# inheritance

def test_inheritance_three():
    d = decompose(THREE)
    assert check_inheritance(d).ok
    assert check_inheritance(d, fibre_system(d, (0,))).ok


def test_inheritance_theta_edge_into_fibre():
    s = SystemDef((-x1, x1 * x2 - x2))
    d = decompose(s)
    assert SignLabel.THETA == d.graph.label(1, 2)
    fibre = fibre_system(d, (0,))
    assert (-x1,) == fibre.reduced.fields
    assert check_inheritance(d, fibre).ok


def test_inheritance_random():
    for s in coherent_systems(14, 10):
        d = decompose(s)
        assert check_inheritance(d).ok, check_inheritance(d).problems


# dynamics of the change

def test_conjugacy_random():
    for s in coherent_systems(15, 100):
        d = decompose(s)
        report = check_conjugacy(s, d.change, n_points=20)
        assert report.passed, report
        assert report.max_deviation <= 1e-6


def test_semiconjugacy_random():
    for s in coherent_systems(16, 100):
        report = check_semiconjugacy(s, decompose(s), n_points=20)
        assert report.passed, report


def test_semiconjugacy_chain():
    s = SystemDef((-x1, x1 - x2))
    report = check_semiconjugacy(s, decompose(s), n_points=5)
    assert report.passed
    assert report.max_deviation <= 1e-6


def test_semiconjugacy_single_block_is_exact():
    s = SystemDef((-x1 + x2, x1 - 2 * x2))
    report = check_semiconjugacy(s, decompose(s), n_points=3)
    assert report.passed
    assert 0.0 == report.max_deviation
