from fractions import Fraction

import pytest

from lowdepth import ir, poly, sexpr
from lowdepth.errors import BudgetExceeded, FieldUnordered, WellFormednessError
from lowdepth.fields import PrimeField, QQ
from lowdepth.hardpoly import HardParams, gen_hard, sigma_partition
from lowdepth.ir import Formula, OneLeaf, ProdGate, SumGate, VarLeaf

ONE = Fraction(1)


def F(root, commutative=True, field=QQ):
    return Formula(root=root, commutative=commutative, field=field)


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

def test_metrics_single_leaf():
    m = ir.metrics(F(VarLeaf(0)))
    assert (m.size, m.depth, m.syn_degree) == (1, 0, 1)
    assert m.sum_depth == 0 and m.product_depth == 0


def test_metrics_canonical_hard_formula():
    # size (2r)^k and depth 2k
    f = gen_hard(HardParams(k=2, r=3))
    m = ir.metrics(f)
    assert m.size == 36
    assert m.depth == 4
    assert m.syn_degree == 4


def test_metrics_sum_of_product():
    f = sexpr.parse("(+ x1 (* x2 x3))")
    m = ir.metrics(f)
    assert (m.size, m.depth, m.sum_depth, m.product_depth, m.syn_degree) == (3, 2, 1, 1, 2)


def test_metrics_table_recursion(corpus_both):
    # per-gate degrees satisfy the recursive definition; root is the max
    for f in corpus_both[:10]:
        table = ir.metrics_table(f)
        gates = ir.gates_preorder(f)
        memo = {id(n): table[i] for i, n in enumerate(gates)}
        for node in gates:
            m = memo[id(node)]
            if isinstance(node, VarLeaf):
                assert m.syn_degree == 1
            elif isinstance(node, OneLeaf):
                assert m.syn_degree == 0
            elif isinstance(node, SumGate):
                assert m.syn_degree == max(memo[id(ch)].syn_degree for _, ch in node.children)
            else:
                assert m.syn_degree == sum(memo[id(ch)].syn_degree for _, ch in node.children)
            assert m.depth >= max(m.sum_depth, m.product_depth)
            assert m.size >= 1
            assert m.syn_degree <= table[0].syn_degree


def test_metrics_roundtrip_invariant(corpus_both):
    for f in corpus_both[:8]:
        assert ir.metrics(sexpr.parse(sexpr.serialize(f))) == ir.metrics(f)


# ---------------------------------------------------------------------------
# predicates
# ---------------------------------------------------------------------------

def test_is_homogeneous_examples():
    assert ir.is_homogeneous(sexpr.parse("(+ (* x1 x2) (* x3 x4))"))
    assert not ir.is_homogeneous(sexpr.parse("(+ x1 (* x2 x3))"))


def test_is_homogeneous_hard_formula_matches_expansion(hard_instances):
    for _, m in hard_instances:
        assert ir.is_homogeneous(m)
        degrees = poly.expand(m).degrees_present()
        assert len(degrees) == 1


def test_is_skew_examples():
    assert ir.is_skew(sexpr.parse("(+ x1 (* x2 (+ x3 (* x4 x5))))"))
    assert not ir.is_skew(sexpr.parse("(* (+ x1 x2) (+ x3 x4))"))
    assert ir.is_skew(F(VarLeaf(3)))


def test_is_monotone_syntactic():
    assert ir.is_monotone(sexpr.parse("(+ (scale 2 x1) (* x2 x3))"))
    assert not ir.is_monotone(sexpr.parse("(+ x1 (scale -1 x2))"))
    fp = PrimeField(97)
    with pytest.raises(FieldUnordered):
        ir.is_monotone(F(VarLeaf(0), field=fp), mode="syntactic")


def test_is_monotone_semantic_cancellation():
    # x1*x2 - x1*x2 + x3: the product monomial cancels
    f = sexpr.parse("(+ (* x1 x2) (scale -1 (* x1 x2)) x3)")
    assert not ir.is_monotone(f, mode="semantic")
    assert ir.is_monotone(gen_hard(HardParams(k=2, r=2)), mode="semantic")


def test_is_set_multilinear():
    p = HardParams(k=1, r=2)
    f = gen_hard(p)
    assert ir.is_set_multilinear(f, sigma_partition(p))
    p2 = HardParams(k=2, r=2)
    assert ir.is_set_multilinear(gen_hard(p2), sigma_partition(p2))
    sq = F(ProdGate(((ONE, VarLeaf(0)), (ONE, VarLeaf(0)))))
    assert not ir.is_set_multilinear(sq, [{0}])


def test_syntactic_monotone_implies_semantic(corpus_both):
    for f in corpus_both[:10]:
        assert ir.is_monotone(f, mode="syntactic")
        assert ir.is_monotone(f, mode="semantic")


# ---------------------------------------------------------------------------
# parse trees
# ---------------------------------------------------------------------------

def test_parse_trees_comb():
    f = sexpr.parse("(+ x1 (* x2 (+ x3 (* x4 x5))))")
    trees = ir.enumerate_parse_trees(f)
    words = sorted(t[1] for t in trees)
    assert words == [(1,), (2, 3), (2, 4, 5)]


def test_parse_trees_single_product():
    f = sexpr.parse("(* x1 x2)")
    assert len(ir.enumerate_parse_trees(f)) == 1


def test_parse_trees_hard_count():
    # r^(d-1) monomials, all parse trees distinct
    f = gen_hard(HardParams(k=2, r=2))
    assert ir.count_parse_trees(f) == 8
    assert len(ir.enumerate_parse_trees(f)) == 8


def test_parse_tree_budget():
    f = gen_hard(HardParams(k=2, r=3))
    with pytest.raises(BudgetExceeded):
        ir.enumerate_parse_trees(f, budget=5)


def test_parse_tree_sum_matches_expand(corpus_both):
    for f in corpus_both[:12]:
        if ir.count_parse_trees(f) <= 10_000:
            assert poly.parse_tree_sum(f) == poly.expand(f)


# ---------------------------------------------------------------------------
# well-formedness
# ---------------------------------------------------------------------------

def test_validate_one_leaf_under_product():
    bad = F(ProdGate(((ONE, OneLeaf()), (ONE, VarLeaf(0)))))
    with pytest.raises(WellFormednessError):
        ir.validate(bad)


def test_validate_interior_constant_sum():
    inner = SumGate(((ONE, OneLeaf()), (ONE, OneLeaf())))
    bad = F(ProdGate(((ONE, inner), (ONE, VarLeaf(0)))))
    with pytest.raises(WellFormednessError):
        ir.validate(bad)
    # at the output gate the same sum is fine
    ir.validate(F(SumGate(((ONE, OneLeaf()), (ONE, OneLeaf())))))


def test_validate_zero_weight():
    bad = F(SumGate(((Fraction(0), VarLeaf(0)),)))
    with pytest.raises(WellFormednessError):
        ir.validate(bad)


def test_validate_empty_gate():
    with pytest.raises(WellFormednessError):
        ir.validate(F(SumGate(())))


def test_copy_tree_structural_equality(corpus_both):
    f = corpus_both[0]
    assert ir.copy_tree(f.root) == f.root
    assert ir.copy_tree(f.root) is not f.root
