import random
from fractions import Fraction

import pytest

from lowdepth import ir, sexpr
from lowdepth.errors import FormulaSyntaxError, WellFormednessError
from lowdepth.fields import PrimeField, QQ
from lowdepth.hardpoly import HardParams, gen_hard
from lowdepth.ir import Formula, OneLeaf, ProdGate, SumGate, VarLeaf


def test_parse_basic():
    f = sexpr.parse("(+ x1 (* x2 x3))")
    m = ir.metrics(f)
    assert (m.size, m.depth) == (3, 2)
    assert f.commutative and f.field is QQ


def test_parse_one_under_product_rejected():
    with pytest.raises(WellFormednessError):
        sexpr.parse("(* 1 x1)")


def test_parse_scale():
    f = sexpr.parse("(+ (scale 2/3 x1) x2)")
    root = f.root
    assert isinstance(root, SumGate)
    assert root.children[0][0] == Fraction(2, 3)
    assert root.children[1][0] == Fraction(1)


def test_serialize_elides_unit_scalars():
    f = sexpr.parse("(+ (scale 1 x1) x2)")
    assert sexpr.serialize(f).splitlines()[-1] == "(+ x1 x2)"


def test_header_modes_and_fields():
    f = sexpr.parse("mode: noncommutative\nfield: Fp:97\n(* x2 x1)")
    assert not f.commutative
    assert isinstance(f.field, PrimeField) and f.field.p == 97
    text = sexpr.serialize(f)
    assert "mode: noncommutative" in text
    assert "field: Fp:97" in text
    assert sexpr.parse(text) == f


def test_noncommutative_child_order_preserved():
    f = sexpr.parse("mode: noncommutative\n(* x2 x1)")
    assert sexpr.serialize(f).splitlines()[-1] == "(* x2 x1)"
    g = sexpr.parse(sexpr.serialize(f))
    assert g.root == f.root


def test_two_index_variable_alias():
    f = sexpr.parse("(+ x_1_1 x_2_1)")
    a, b = (ch for _, ch in f.root.children)
    assert a == VarLeaf(sexpr.cantor_pair(1, 1))
    assert b == VarLeaf(sexpr.cantor_pair(2, 1))
    # serializer normalizes to plain ids, and that form round-trips
    assert "x_" not in sexpr.serialize(f)
    assert sexpr.parse(sexpr.serialize(f)) == f


def test_syntax_errors_positioned():
    with pytest.raises(FormulaSyntaxError):
        sexpr.parse("(+ x1")
    with pytest.raises(FormulaSyntaxError):
        sexpr.parse("(+ x1))")
    with pytest.raises(FormulaSyntaxError):
        sexpr.parse("(- x1 x2)")
    with pytest.raises(FormulaSyntaxError):
        sexpr.parse("(scale 2 x1)")  # scale must sit under a gate
    with pytest.raises(FormulaSyntaxError):
        sexpr.parse("(+ (scale 2 (scale 3 x1)))")  # no nesting
    with pytest.raises(FormulaSyntaxError):
        sexpr.parse("(+ y1 x2)")
    err = None
    try:
        sexpr.parse("(+ x1 @)")
    except FormulaSyntaxError as exc:
        err = exc
    assert err is not None and err.position is not None


def test_hard_formula_roundtrip():
    f = gen_hard(HardParams(k=2, r=2))
    assert sexpr.parse(sexpr.serialize(f)) == f


def _random_formula(rng: random.Random, commutative: bool) -> Formula:
    field = QQ

    def build(depth: int):
        if depth == 0 or rng.random() < 0.3:
            if rng.random() < 0.08:
                return OneLeaf()
            return VarLeaf(rng.randrange(20))
        kind = SumGate if rng.random() < 0.5 else ProdGate
        n = rng.randint(1, 4)
        children = []
        for _ in range(n):
            child = build(depth - 1)
            if kind is ProdGate and isinstance(child, OneLeaf):
                child = VarLeaf(rng.randrange(20))
            scalar = Fraction(rng.randint(1, 9), rng.randint(1, 9))
            if rng.random() < 0.3:
                scalar = -scalar
            children.append((scalar, child))
        if kind is SumGate and all(isinstance(ch, OneLeaf) for _, ch in children):
            children.append((Fraction(1), VarLeaf(rng.randrange(20))))
        return kind(tuple(children))

    root = build(4)
    if isinstance(root, OneLeaf):
        root = SumGate(((Fraction(1), root),))
    return Formula(root=root, commutative=commutative, field=field)


def test_roundtrip_random_corpus():
    # parse(serialize(F)) is structurally F on >= 1000 formulas, both modes
    rng = random.Random(2024)
    for i in range(1000):
        f = _random_formula(rng, commutative=(i % 2 == 0))
        ir.validate(f)
        g = sexpr.parse(sexpr.serialize(f))
        assert g == f, f"roundtrip failed at case {i}"


def test_deep_comb_roundtrip():
    # iterative parser and serializer cope with very deep nesting
    from lowdepth.bench import gen_comb

    f = gen_comb(4001)
    g = sexpr.parse(sexpr.serialize(f))
    assert ir.metrics(g) == ir.metrics(f)


def test_file_io(tmp_path):
    f = sexpr.parse("(+ x1 (scale -2/7 (* x2 x3)))")
    path = tmp_path / "f.frm"
    sexpr.write_file(str(path), f)
    text = path.read_bytes().decode()
    assert "\r" not in text and text.endswith("\n")
    assert sexpr.parse_file(str(path)) == f
