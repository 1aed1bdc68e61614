from fractions import Fraction

import pytest

from lowdepth import hardpoly as hp
from lowdepth import ir, poly, transforms as tr
from lowdepth.errors import NotComputingH, ParamOutOfRange, UniverseTooLarge
from lowdepth.ir import Formula, ProdGate, SumGate, VarLeaf

ONE = Fraction(1)


def test_params_validation():
    with pytest.raises(ParamOutOfRange):
        hp.HardParams(k=0, r=2)
    with pytest.raises(ParamOutOfRange):
        hp.HardParams(k=1, r=1)
    p = hp.HardParams(k=3, r=2)
    assert p.degree == 8 and p.num_vars == 64


def test_encoding_bijection_roundtrip():
    for k in (1, 2, 3):
        for r in (2, 3):
            p = hp.HardParams(k=k, r=r)
            seen = set()
            sigmas = _words((1, 2), k)
            taus = _words(tuple(range(1, r + 1)), k)
            for sigma in sigmas:
                for tau in taus:
                    v = hp.encode_var(p, sigma, tau)
                    assert 0 <= v < p.num_vars
                    assert hp.decode_var(p, v) == (sigma, tau)
                    seen.add(v)
            assert len(seen) == p.num_vars


def _words(alphabet, length):
    out = [()]
    for _ in range(length):
        out = [w + (a,) for w in out for a in alphabet]
    return out


def test_gen_hard_smallest():
    p = hp.HardParams(k=1, r=2)
    f = hp.gen_hard(p)
    m = ir.metrics(f)
    assert (m.size, m.depth) == (4, 2)
    v = lambda s, t: hp.encode_var(p, (s,), (t,))
    expected = {
        tuple(sorted([(v(1, 1), 1), (v(2, 1), 1)])): ONE,
        tuple(sorted([(v(1, 2), 1), (v(2, 2), 1)])): ONE,
    }
    assert poly.expand(f).terms == expected


def test_gen_hard_shape_23():
    f = hp.gen_hard(hp.HardParams(k=2, r=3))
    m = ir.metrics(f)
    assert (m.size, m.depth) == (36, 4)
    # alternating + over x, sum fan-in r, product fan-in 2
    root = f.root
    assert isinstance(root, SumGate) and len(root.children) == 3
    for _, ch in root.children:
        assert isinstance(ch, ProdGate) and len(ch.children) == 2


def test_gen_hard_monomial_counts_desk_scale():
    for k in (1, 2, 3):
        for r in (2, 3):
            p = hp.HardParams(k=k, r=r)
            t = poly.expand(hp.gen_hard(p))
            assert t.num_terms() == hp.expected_monomials(p)
            assert all(c == ONE for c in t.terms.values())


def test_gen_hard_predicates():
    p = hp.HardParams(k=2, r=2)
    f = hp.gen_hard(p)
    assert ir.is_monotone(f)
    assert ir.is_homogeneous(f)
    assert ir.is_set_multilinear(f, hp.sigma_partition(p))
    # distinct variables on the leaves
    leaves = [n.var for n in ir.iter_postorder(f.root) if isinstance(n, VarLeaf)]
    assert len(leaves) == len(set(leaves)) == p.num_vars


def test_gen_hard_universe_bound():
    with pytest.raises(UniverseTooLarge):
        hp.gen_hard(hp.HardParams(k=3, r=3), universe_bound=100)


def test_subpolynomial_empty_prefix_is_whole():
    p = hp.HardParams(k=2, r=2)
    assert hp.subpolynomial(p, (), ()).root == hp.gen_hard(p).root


def test_subpolynomial_full_prefix_is_leaf():
    p = hp.HardParams(k=2, r=2)
    f = hp.subpolynomial(p, (1, 2), (2, 1))
    assert f.root == VarLeaf(hp.encode_var(p, (1, 2), (2, 1)))


def test_subpolynomial_isomorphic_to_smaller_instance():
    # length-1 prefix of the (2,2) instance matches the (1,2) instance
    # after renaming x[s', t'] -> x[u s', v t']
    p = hp.HardParams(k=2, r=2)
    small = hp.HardParams(k=1, r=2)
    for u, v in (((1,), (1,)), ((2,), (2,))):
        sub = hp.subpolynomial(p, u, v)
        renamed = {}
        for sp in _words((1, 2), 1):
            for tp in _words((1, 2), 1):
                renamed[hp.encode_var(small, sp, tp)] = hp.encode_var(p, u + sp, v + tp)

        def rename(node):
            if isinstance(node, VarLeaf):
                return VarLeaf(renamed[node.var])
            if ir.is_gate(node):
                kids = tuple((c, rename(ch)) for c, ch in node.children)
                return SumGate(kids) if isinstance(node, SumGate) else ProdGate(kids)
            return node

        lifted = Formula(rename(hp.gen_hard(small).root))
        assert poly.expand(lifted) == poly.expand(sub)
        assert poly.expand(sub).num_terms() == 2


def test_interleaved_address_reaches_labelled_leaf():
    # walking v1 u1 v2 u2 from the output gate lands on x[sigma, tau]
    p = hp.HardParams(k=2, r=3)
    f = hp.gen_hard(p)
    for sigma in _words((1, 2), 2):
        for tau in _words((1, 2, 3), 2):
            node = f.root
            for t, s in zip(tau, sigma):
                node = node.children[t - 1][1]  # sum gate: pick tau letter
                node = node.children[s - 1][1]  # product gate: pick sigma letter
            assert node == VarLeaf(hp.encode_var(p, sigma, tau))


def test_prefix_property_desk_scale():
    for k, r in ((1, 2), (2, 2), (2, 3), (3, 2)):
        ok, cx = hp.check_prefix_property(hp.HardParams(k=k, r=r))
        assert ok and cx is None


def test_prefix_property_mutated_counterexample():
    # relabel one leaf so tau alignment breaks inside some monomial
    p = hp.HardParams(k=2, r=2)
    f = hp.gen_hard(p)
    bad_leaf = hp.encode_var(p, (1, 1), (1, 1))
    # replace tau = (1,1) by (2,1): now its product partner under the same
    # first-level branch keeps tau starting with 1
    replacement = hp.encode_var(p, (1, 1), (2, 1))

    def mutate(node):
        if isinstance(node, VarLeaf):
            return VarLeaf(replacement) if node.var == bad_leaf else node
        if ir.is_gate(node):
            kids = tuple((c, mutate(ch)) for c, ch in node.children)
            return SumGate(kids) if isinstance(node, SumGate) else ProdGate(kids)
        return node

    mutated = Formula(mutate(f.root))
    ok, cx = hp.check_prefix_property(p, mutated)
    assert not ok
    assert cx is not None and cx["tau_lcp"] < cx["sigma_lcp"] + 1


def test_gate_counts_canonical():
    ok, cx = hp.check_gate_counts(hp.gen_hard(hp.HardParams(k=2, r=2)), hp.HardParams(k=2, r=2))
    assert ok and cx is None


def test_gate_counts_after_reduction():
    p = hp.HardParams(k=2, r=2)
    f = hp.gen_hard(p)
    fb = tr.binarize(f)
    m = ir.metrics(fb)
    out = tr.depth_reduce_main(fb, tr.auto_delta(m.size, m.syn_degree, m.sum_depth))
    assert ir.is_monotone(out)
    ok, cx = hp.check_gate_counts(out, p)
    assert ok and cx is None


def test_gate_counts_wrong_polynomial():
    p = hp.HardParams(k=1, r=2)
    with pytest.raises(NotComputingH):
        hp.check_gate_counts(hp.gen_hard(hp.HardParams(k=1, r=3)), p)


def test_lower_bound_params():
    p, coverage = hp.lower_bound_params(256, 4)
    assert (p.k, p.r) == (2, 8)
    assert coverage == Fraction(256, 256)
    p2, cov2 = hp.lower_bound_params(16, 4)
    assert (p2.k, p2.r) == (2, 2)
    assert cov2 <= 1
    with pytest.raises(ParamOutOfRange):
        hp.lower_bound_params(15, 4)  # d > sqrt(n)
    with pytest.raises(ParamOutOfRange):
        hp.lower_bound_params(1000, 6)  # not a power of two
