import pytest

from lowdepth import pit, poly, sexpr
from lowdepth.errors import ModeMismatch
from lowdepth.pit import PITConfig, check_witness, pit_equal


def test_self_comparison_any_seed():
    f = sexpr.parse("(+ x1 (* x2 x3))")
    for seed in range(5):
        assert pit_equal(f, f, PITConfig(trials=4, seed=seed)).verdict == "equal-probably"


def test_noncommutative_order_detected_across_seeds():
    a = sexpr.parse("mode: noncommutative\n(* x1 x2)")
    b = sexpr.parse("mode: noncommutative\n(* x2 x1)")
    for seed in range(20):
        res = pit_equal(a, b, PITConfig(trials=3, matrix_dim=3, seed=seed))
        assert res.verdict == "unequal"
        assert res.witness is not None
        assert check_witness(a, b, res.witness)


def test_scalar_witness_replay():
    a = sexpr.parse("(+ x1 x2)")
    b = sexpr.parse("(+ x1 (scale 2 x2))")
    res = pit_equal(a, b, PITConfig(trials=8, seed=3))
    assert res.verdict == "unequal"
    assert res.witness["kind"] == "scalar"
    assert check_witness(a, b, res.witness)


def test_commutative_reordering_passes():
    a = sexpr.parse("(* x1 x2)")
    b = sexpr.parse("(* x2 x1)")
    assert pit_equal(a, b, PITConfig(trials=6, seed=0)).verdict == "equal-probably"


def test_rational_scalars_reduce_mod_p():
    a = sexpr.parse("(+ (scale 1/2 x1) (scale 1/2 x1))")
    b = sexpr.parse("(+ x1)")
    assert pit_equal(a, b, PITConfig(trials=4, seed=0)).verdict == "equal-probably"


def test_mode_mismatch():
    a = sexpr.parse("(+ x1 x2)")
    b = sexpr.parse("mode: noncommutative\n(+ x1 x2)")
    with pytest.raises(ModeMismatch):
        pit_equal(a, b)


def test_matrix_dim_too_small_rejected():
    a = sexpr.parse("mode: noncommutative\n(* x1 x2 x3)")
    with pytest.raises(ValueError):
        pit_equal(a, a, PITConfig(matrix_dim=2))


def test_agrees_with_expansion_oracle(corpus_comm):
    for f in corpus_comm[:8]:
        from lowdepth.transforms import binarize

        g = binarize(f)
        assert poly.equal_expand(f, g)
        assert pit_equal(f, g, PITConfig(trials=5, seed=1)).verdict == "equal-probably"


def test_per_trial_error_bound_reported():
    f = sexpr.parse("(* x1 x2 x3)")
    res = pit_equal(f, f, PITConfig(trials=2, seed=0))
    assert res.per_trial_error is not None
    assert float(res.per_trial_error) < 1e-15  # d/p with p = 2^61 - 1


def test_prime_floor_enforced():
    f = sexpr.parse("(* x1 x2 x3 x4)")
    with pytest.raises(ValueError):
        pit_equal(f, f, PITConfig(trials=1, prime=17))  # 2*d*s = 32 > 17
    assert pit_equal(f, f, PITConfig(trials=1, prime=101)).equal


def test_native_prime_field_evaluation():
    # equality must be judged in the formula's own field: 50 + 50 = 3 mod 97
    a = sexpr.parse("field: Fp:97\n(+ (scale 50 x1) (scale 50 x1))")
    b = sexpr.parse("field: Fp:97\n(+ (scale 3 x1))")
    assert poly.equal_expand(a, b)
    res = pit_equal(a, b, PITConfig(trials=6, seed=0))
    assert res.verdict == "equal-probably"
    c = sexpr.parse("field: Fp:97\n(+ (scale 4 x1))")
    assert pit_equal(a, c, PITConfig(trials=6, seed=0)).verdict == "unequal"


def test_field_mismatch_rejected():
    a = sexpr.parse("(+ x1 x2)")
    b = sexpr.parse("field: Fp:97\n(+ x1 x2)")
    with pytest.raises(ModeMismatch):
        pit_equal(a, b)
