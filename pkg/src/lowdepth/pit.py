"""Randomized identity testing by evaluation over a prime field.

Commutative formulas are evaluated at uniformly random scalar points, so each
trial errs with probability at most d/p for syntactic degree d.  In the
non-commutative case variables are replaced by independent uniform m x m
matrices with m at least one more than the degree; matrices of that dimension
satisfy no identity of such low degree, so a mismatch witnesses inequality
while agreement over independent trials makes equality overwhelmingly likely.

An "unequal" verdict is certain and carries a witness that can be replayed;
"equal-probably" reports the per-trial error bound.

Rational formulas are reduced mod the configured prime (sound: a mismatch mod
p separates them over Q too).  Formulas over a prime field are evaluated in
their own field; their coefficients are already reduced, so lifting them to
integers mod a different prime would be meaningless.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .errors import ModeMismatch
from .fields import MERSENNE61, PrimeField
from . import ir

Matrix = tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class PITConfig:
    trials: int = 20
    prime: int = MERSENNE61
    matrix_dim: int | None = None  # default: max syntactic degree + 1
    seed: int = 0


@dataclass(frozen=True)
class PITResult:
    verdict: str  # "equal-probably" | "unequal"
    trials_run: int
    per_trial_error: Fraction | None  # scalar case only
    witness: dict | None

    @property
    def equal(self) -> bool:
        return self.verdict == "equal-probably"


def _trial_seed(seed: int, trial: int) -> int:
    return seed * 1_000_003 + trial


def eval_scalar(formula: ir.Formula, point: dict[int, int], p: int) -> int:
    """Evaluate the formula at a scalar point, all arithmetic mod p."""
    fp = PrimeField(p)

    def fn(node: ir.Node, vals: list) -> int:
        if isinstance(node, ir.VarLeaf):
            return point[node.var] % p
        if isinstance(node, ir.OneLeaf):
            return 1
        coeffs = [fp.normalize(c) for c, _ in node.children]
        if isinstance(node, ir.SumGate):
            return sum(c * v for c, v in zip(coeffs, vals)) % p
        acc = 1
        for c, v in zip(coeffs, vals):
            acc = acc * c % p * v % p
        return acc

    return ir.node_attribute(formula.root, fn)[id(formula.root)]  # type: ignore[return-value]


# -- matrix arithmetic -------------------------------------------------------

def _mat_identity(m: int) -> Matrix:
    return tuple(tuple(1 if i == j else 0 for j in range(m)) for i in range(m))


def _mat_random(rng: random.Random, m: int, p: int) -> Matrix:
    return tuple(tuple(rng.randrange(p) for _ in range(m)) for _ in range(m))


def _mat_add(a: Matrix, b: Matrix, p: int) -> Matrix:
    return tuple(tuple((x + y) % p for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def _mat_scale(c: int, a: Matrix, p: int) -> Matrix:
    if c == 1:
        return a
    return tuple(tuple(c * x % p for x in row) for row in a)

def _mat_mul(a: Matrix, b: Matrix, p: int) -> Matrix:
    cols = tuple(zip(*b))
    return tuple(
        tuple(sum(x * y for x, y in zip(row, col)) % p for col in cols) for row in a
    )


def eval_matrix(formula: ir.Formula, assignment: dict[int, Matrix], m: int, p: int) -> Matrix:
    """Evaluate with matrix-valued variables; products keep child order."""
    fp = PrimeField(p)
    ident = _mat_identity(m)

    def fn(node: ir.Node, vals: list) -> Matrix:
        if isinstance(node, ir.VarLeaf):
            return assignment[node.var]
        if isinstance(node, ir.OneLeaf):
            return ident
        coeffs = [fp.normalize(c) for c, _ in node.children]
        if isinstance(node, ir.SumGate):
            acc = None
            for c, v in zip(coeffs, vals):
                scaled = _mat_scale(c, v, p)
                acc = scaled if acc is None else _mat_add(acc, scaled, p)
            return acc
        acc = ident
        for c, v in zip(coeffs, vals):
            acc = _mat_mul(_mat_scale(c, acc, p), v, p)
        return acc

    return ir.node_attribute(formula.root, fn)[id(formula.root)]  # type: ignore[return-value]


def _point_for_trial(seed: int, variables: list[int], p: int) -> dict[int, int]:
    rng = random.Random(seed)
    return {v: rng.randrange(p) for v in variables}


def _matrices_for_trial(seed: int, variables: list[int], m: int, p: int) -> dict[int, Matrix]:
    rng = random.Random(seed)
    return {v: _mat_random(rng, m, p) for v in variables}


def pit_equal(a: ir.Formula, b: ir.Formula, cfg: PITConfig = PITConfig()) -> PITResult:
    """Randomized equality test; see the module docstring for guarantees."""
    if a.commutative != b.commutative:
        raise ModeMismatch("cannot compare formulas in different commutativity modes")
    if a.field != b.field:
        raise ModeMismatch(f"field mismatch: {a.field.name} vs {b.field.name}")
    # formulas over a prime field are evaluated in their own field; the
    # configured prime only applies to rational formulas, whose scalars embed
    # soundly mod any large p
    native = isinstance(a.field, PrimeField)
    p = a.field.p if native else cfg.prime
    ma = ir.metrics(a)
    mb = ir.metrics(b)
    d = max(ma.syn_degree, mb.syn_degree, 1)
    if native:
        if p <= 2 * d:
            raise ValueError(f"field {a.field.name} too small to test degree {d}")
    elif p <= 2 * d * max(ma.size, mb.size):
        raise ValueError(
            f"prime {p} below the heuristic floor 2 * degree * size = "
            f"{2 * d * max(ma.size, mb.size)}; error bounds would be weak"
        )
    vs = sorted(ir.variables(a) | ir.variables(b))

    if a.commutative:
        for t in range(cfg.trials):
            seed = _trial_seed(cfg.seed, t)
            point = _point_for_trial(seed, vs, p)
            va = eval_scalar(a, point, p)
            vb = eval_scalar(b, point, p)
            if va != vb:
                witness = {
                    "kind": "scalar",
                    "prime": p,
                    "trial": t,
                    "trial_seed": seed,
                    "point": {str(v): x for v, x in point.items()},
                    "lhs": va,
                    "rhs": vb,
                }
                return PITResult("unequal", t + 1, Fraction(d, p), witness)
        return PITResult("equal-probably", cfg.trials, Fraction(d, p), None)

    m = cfg.matrix_dim if cfg.matrix_dim is not None else d + 1
    if m < d + 1:
        raise ValueError(f"matrix dimension {m} below degree bound {d + 1}")
    for t in range(cfg.trials):
        seed = _trial_seed(cfg.seed, t)
        mats = _matrices_for_trial(seed, vs, m, p)
        va = eval_matrix(a, mats, m, p)
        vb = eval_matrix(b, mats, m, p)
        if va != vb:
            i, j = next(
                (i, j) for i in range(m) for j in range(m) if va[i][j] != vb[i][j]
            )
            witness = {
                "kind": "matrix",
                "prime": p,
                "trial": t,
                "trial_seed": seed,
                "dim": m,
                "entry": [i, j],
                "lhs": va[i][j],
                "rhs": vb[i][j],
            }
            return PITResult("unequal", t + 1, None, witness)
    return PITResult("equal-probably", cfg.trials, None, None)


def check_witness(a: ir.Formula, b: ir.Formula, witness: dict) -> bool:
    """Replay a recorded witness and confirm it still separates the formulas."""
    p = witness["prime"]
    vs = sorted(ir.variables(a) | ir.variables(b))
    if witness["kind"] == "scalar":
        point = _point_for_trial(witness["trial_seed"], vs, p)
        if {str(v): x for v, x in point.items()} != witness["point"]:
            return False
        va = eval_scalar(a, point, p)
        vb = eval_scalar(b, point, p)
        return va == witness["lhs"] and vb == witness["rhs"] and va != vb
    if witness["kind"] == "matrix":
        m = witness["dim"]
        mats = _matrices_for_trial(witness["trial_seed"], vs, m, p)
        va = eval_matrix(a, mats, m, p)
        vb = eval_matrix(b, mats, m, p)
        i, j = witness["entry"]
        return va[i][j] == witness["lhs"] and vb[i][j] == witness["rhs"] and va[i][j] != vb[i][j]
    raise ValueError(f"unknown witness kind {witness.get('kind')!r}")
