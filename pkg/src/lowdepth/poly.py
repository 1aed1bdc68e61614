"""Ground-truth semantics: exact sparse expansion of formulas.

A PolyTable maps monomial keys to non-zero coefficients.  In commutative mode
the key is a sorted tuple of (variable, exponent) pairs; in non-commutative
mode it is the word of variable ids in multiplication order.  The empty key
is the constant monomial.  Expansion is the oracle every rewriting pass is
checked against, so it is written for exactness first and speed second.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Iterable

from .errors import BudgetExceeded, ModeMismatch
from .fields import Field, Scalar
from . import ir

#: Default cap on expansion table entries (per table).
DEFAULT_EXPANSION_BUDGET = 10**6
#: Default cap on parse-tree enumeration.
DEFAULT_PARSE_TREE_BUDGET = 10**5

CommKey = tuple[tuple[int, int], ...]
Word = tuple[int, ...]
Key = tuple  # CommKey | Word, disambiguated by the table's mode


def word_to_comm_key(word: Word) -> CommKey:
    counts: dict[int, int] = {}
    for v in word:
        counts[v] = counts.get(v, 0) + 1
    return tuple(sorted(counts.items()))


def key_exponents(key: Key, commutative: bool) -> Iterable[tuple[int, int]]:
    """(variable, exponent) pairs of a monomial key, in either mode."""
    if commutative:
        return key  # already (var, exp) pairs
    return word_to_comm_key(key)


def key_total_degree(key: Key, commutative: bool) -> int:
    if commutative:
        return sum(e for _, e in key)
    return len(key)


def _mul_comm_keys(a: CommKey, b: CommKey) -> CommKey:
    counts = dict(a)
    for v, e in b:
        counts[v] = counts.get(v, 0) + e
    return tuple(sorted(counts.items()))


@dataclass
class PolyTable:
    """Sparse exact polynomial; zero coefficients are never stored."""

    commutative: bool
    field: Field
    terms: dict = dc_field(default_factory=dict)

    # -- constructors -------------------------------------------------------
    @classmethod
    def zero(cls, commutative: bool, field: Field) -> "PolyTable":
        return cls(commutative, field, {})

    @classmethod
    def const(cls, commutative: bool, field: Field, value: Scalar) -> "PolyTable":
        if field.is_zero(value):
            return cls.zero(commutative, field)
        return cls(commutative, field, {(): value})

    @classmethod
    def var(cls, commutative: bool, field: Field, v: int) -> "PolyTable":
        key = ((v, 1),) if commutative else (v,)
        return cls(commutative, field, {key: field.one()})

    # -- ring operations ----------------------------------------------------
    def add(self, other: "PolyTable") -> "PolyTable":
        self._check_compatible(other)
        f = self.field
        out = dict(self.terms)
        for key, coeff in other.terms.items():
            acc = f.add(out.get(key, f.zero()), coeff)
            if f.is_zero(acc):
                out.pop(key, None)
            else:
                out[key] = acc
        return PolyTable(self.commutative, f, out)

    def scale(self, scalar: Scalar) -> "PolyTable":
        f = self.field
        if f.is_zero(scalar):
            return PolyTable.zero(self.commutative, f)
        if f.is_one(scalar):
            return self
        return PolyTable(self.commutative, f, {k: f.mul(scalar, c) for k, c in self.terms.items()})

    def mul(self, other: "PolyTable", budget: int | None = None) -> "PolyTable":
        self._check_compatible(other)
        f = self.field
        out: dict = {}
        for ka, ca in self.terms.items():
            for kb, cb in other.terms.items():
                key = _mul_comm_keys(ka, kb) if self.commutative else ka + kb
                acc = f.add(out.get(key, f.zero()), f.mul(ca, cb))
                if f.is_zero(acc):
                    out.pop(key, None)
                else:
                    out[key] = acc
            if budget is not None and len(out) > budget:
                raise BudgetExceeded(f"expansion table grew past {budget} entries")
        return PolyTable(self.commutative, f, out)

    # -- queries ------------------------------------------------------------
    def support(self) -> frozenset:
        return frozenset(self.terms)

    def num_terms(self) -> int:
        return len(self.terms)

    def max_total_degree(self) -> int:
        if not self.terms:
            return 0
        return max(key_total_degree(k, self.commutative) for k in self.terms)

    def degrees_present(self) -> set[int]:
        return {key_total_degree(k, self.commutative) for k in self.terms}

    def _check_compatible(self, other: "PolyTable") -> None:
        if self.commutative != other.commutative:
            raise ModeMismatch("cannot combine commutative and non-commutative tables")
        if self.field != other.field:
            raise ModeMismatch(f"field mismatch: {self.field.name} vs {other.field.name}")

    def __eq__(self, other) -> bool:
        if not isinstance(other, PolyTable):
            return NotImplemented
        return (
            self.commutative == other.commutative
            and self.field == other.field
            and self.terms == other.terms
        )


# ---------------------------------------------------------------------------
# Expansion
# ---------------------------------------------------------------------------

def _expand_memo(formula: ir.Formula, budget: int | None) -> dict[int, PolyTable]:
    """Per-node tables keyed by id(node), bottom-up."""
    comm, f = formula.commutative, formula.field

    def fn(node: ir.Node, vals: list) -> PolyTable:
        if isinstance(node, ir.VarLeaf):
            return PolyTable.var(comm, f, node.var)
        if isinstance(node, ir.OneLeaf):
            return PolyTable.const(comm, f, f.one())
        if isinstance(node, ir.SumGate):
            acc = PolyTable.zero(comm, f)
            for (scalar, _), sub in zip(node.children, vals):
                acc = acc.add(sub.scale(scalar))
            _check_budget(acc, budget)
            return acc
        acc = PolyTable.const(comm, f, f.one())
        for (scalar, _), sub in zip(node.children, vals):
            acc = acc.mul(sub.scale(scalar), budget=budget)
        _check_budget(acc, budget)
        return acc

    return ir.node_attribute(formula.root, fn)  # type: ignore[return-value]


def expand(formula: ir.Formula, budget: int | None = DEFAULT_EXPANSION_BUDGET) -> PolyTable:
    """Exact polynomial of the formula in its own field and mode.

    Raises BudgetExceeded as soon as any intermediate table passes the budget.
    Distributes over the constructors: a sum gate adds scaled child tables, a
    product gate multiplies them in child order.
    """
    return _expand_memo(formula, budget)[id(formula.root)]


def _check_budget(table: PolyTable, budget: int | None) -> None:
    if budget is not None and table.num_terms() > budget:
        raise BudgetExceeded(f"expansion table grew past {budget} entries")


def equal_expand(a: ir.Formula, b: ir.Formula, budget: int | None = DEFAULT_EXPANSION_BUDGET) -> bool:
    """Exact table equality of two formulas in the same mode and field."""
    if a.commutative != b.commutative:
        raise ModeMismatch("cannot compare formulas in different commutativity modes")
    if a.field != b.field:
        raise ModeMismatch(f"field mismatch: {a.field.name} vs {b.field.name}")
    return expand(a, budget=budget) == expand(b, budget=budget)


def parse_tree_sum(formula: ir.Formula, budget: int = DEFAULT_PARSE_TREE_BUDGET) -> PolyTable:
    """Sum the per-parse-tree monomials into a table; must agree with expand."""
    comm, f = formula.commutative, formula.field
    out: dict = {}
    for coeff, word in ir.enumerate_parse_trees(formula, budget=budget):
        key = word_to_comm_key(word) if comm else word
        acc = f.add(out.get(key, f.zero()), coeff)
        if f.is_zero(acc):
            out.pop(key, None)
        else:
            out[key] = acc
    return PolyTable(comm, f, out)


def support_expand(formula: ir.Formula, budget: int | None = DEFAULT_EXPANSION_BUDGET) -> frozenset:
    """Support of the parse-tree sum with every scalar replaced by 1.

    With all-positive unit weights no cancellation can occur, so this is the
    set of monomials produced by at least one parse tree, computed without
    enumerating parse trees.
    """
    from .fields import QQ

    unit = QQ.one()

    def strip(node: ir.Node, vals: list) -> ir.Node:
        if isinstance(node, ir.SumGate):
            return ir.SumGate(tuple((unit, v) for v in vals))
        if isinstance(node, ir.ProdGate):
            return ir.ProdGate(tuple((unit, v) for v in vals))
        return node

    stripped = ir.node_attribute(formula.root, strip)[id(formula.root)]
    shadow = ir.Formula(stripped, commutative=formula.commutative, field=QQ)  # type: ignore[arg-type]
    return expand(shadow, budget=budget).support()


def is_monotone_semantic(formula: ir.Formula, budget: int | None = None) -> bool:
    """True iff every parse-tree monomial survives in the expanded polynomial."""
    budget = DEFAULT_EXPANSION_BUDGET if budget is None else budget
    actual = expand(formula, budget=budget).support()
    possible = support_expand(formula, budget=budget)
    # actual is always a subset of possible; monotone means nothing cancelled
    return actual == possible


def gate_monomial_counts(formula: ir.Formula, budget: int | None = DEFAULT_EXPANSION_BUDGET) -> dict[int, int]:
    """Non-zero monomial count of the polynomial at every gate.

    Keys are preorder gate ids (0 is the output gate).
    """
    memo = _expand_memo(formula, budget)
    return {
        i: memo[id(node)].num_terms()
        for i, node in enumerate(ir.gates_preorder(formula))
    }
