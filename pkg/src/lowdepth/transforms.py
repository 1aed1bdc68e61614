"""Rewriting passes over the formula IR.

Every pass is equivalence-preserving (exact expansion equality, word-for-word
in non-commutative mode) and preserves homogeneity, syntactic monotonicity,
and the commutativity mode whenever it claims to.  Inputs are never mutated;
outputs are fresh trees (they may share subtrees with the input, never with
themselves).

The passes:

* binarize / collapse        shape normalization (fan-in 2 / strict +,* alternation)
* bb_find_split, bb_decompose, depth_reduce_bb
                             split-at-heavy-gate reduction with near-linear size:
                             depth O(log s) at size s^(1+eps)
* select_frontier, skew_to_sigma_pi, depth_reduce_main
                             potential-guided reduction: product depth bounded by
                             ceil(log2 d) + ceil(sum_depth/delta), size by s*d^delta
* homogenize                 degree components of a fan-in-2 formula
* product_fanin_2            rebalance products to fan-in 2 at unchanged leaf count
* depth_reduce_homogeneous, depth_reduce_nearlinear, pipeline_inhom
                             compositions reaching depth O(log d)

There is no representation for the zero polynomial (edge weights are
non-zero, there is no zero leaf), so passes that can observe cancellation
propagate "zero" internally and only fail if the entire input vanishes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import (
    DuplicateLeafVariable,
    InternalInvariantError,
    NotSemanticallyHomogeneous,
    NotSkew,
    TooSmall,
)
from .fields import Field, Scalar
from .util import ceil_div, ceil_log2, deep
from . import ir
from .ir import (
    Formula,
    Node,
    OneLeaf,
    ProdGate,
    SumGate,
    VarLeaf,
    is_gate,
    is_leaf,
)


# ---------------------------------------------------------------------------
# Parameters
# ---------------------------------------------------------------------------

def bb_branch_param(epsilon: Fraction | int | str) -> int:
    """Branch parameter k for the split recursion: max(4, 2^ceil(4/eps))."""
    eps = Fraction(epsilon)
    if not 0 < eps <= 1:
        raise ValueError(f"epsilon must be in (0, 1], got {eps}")
    e = ceil_div(4 * eps.denominator, eps.numerator)
    return max(4, 2**e)


def auto_delta(size: int, degree: int, sum_depth: int = 1) -> int:
    """delta = ceil(log2 size / log2 degree), exactly in integer arithmetic.

    Degree <= 1 leaves no product structure to split on; the sum depth itself
    is then the only useful block length.
    """
    if degree <= 1:
        return max(1, sum_depth)
    j = 1
    while degree**j < size:
        j += 1
    return j


@dataclass(frozen=True)
class ReductionParams:
    """Everything the reduction passes are parameterized over."""

    delta: int = 1
    epsilon: Fraction = Fraction(1, 2)
    expansion_budget: int = 10**6
    parse_tree_budget: int = 10**5

    def __post_init__(self):
        if self.delta < 1:
            raise ValueError(f"delta must be >= 1, got {self.delta}")
        if not 0 < self.epsilon <= 1:
            raise ValueError(f"epsilon must be in (0, 1], got {self.epsilon}")

    @property
    def k_bb(self) -> int:
        return bb_branch_param(self.epsilon)


@dataclass(frozen=True)
class Potential:
    """Potential of a formula: phi1 tracks degree, phi2 sum depth per block."""

    phi1: int
    phi2: int

    @property
    def phi(self) -> int:
        return self.phi1 + self.phi2


def potential(formula: Formula, delta: int) -> Potential:
    m = ir.metrics(formula)
    return _potential_of(m.syn_degree, m.sum_depth, delta)


def _potential_of(degree: int, sum_depth: int, delta: int) -> Potential:
    if degree < 1:
        raise ValueError("potential needs syntactic degree >= 1")
    return Potential(phi1=ceil_log2(degree), phi2=ceil_div(sum_depth, delta))


# ---------------------------------------------------------------------------
# Node-level helpers
# ---------------------------------------------------------------------------

def _leaf_count(root: Node) -> dict[int, int]:
    return ir.node_attribute(
        root, lambda n, vals: 1 if is_leaf(n) else sum(vals)
    )  # type: ignore[return-value]


def _syn_degrees(root: Node) -> dict[int, int]:
    def fn(node: Node, vals: list) -> int:
        if isinstance(node, VarLeaf):
            return 1
        if isinstance(node, OneLeaf):
            return 0
        if isinstance(node, SumGate):
            return max(vals)
        return sum(vals)

    return ir.node_attribute(root, fn)  # type: ignore[return-value]


def _sum_depths(root: Node) -> dict[int, int]:
    def fn(node: Node, vals: list) -> int:
        if is_leaf(node):
            return 0
        return (1 if isinstance(node, SumGate) else 0) + max(vals)

    return ir.node_attribute(root, fn)  # type: ignore[return-value]


def scale_node(scalar: Scalar, node: Node, field: Field) -> Node:
    """Fold a scalar into a node.

    Sums rescale all edges, products rescale the first edge, leaves get a
    fan-in-1 sum wrapper (the only construction that may leave one behind).
    """
    if field.is_one(scalar):
        return node
    if isinstance(node, SumGate):
        return SumGate(tuple((field.mul(scalar, c), ch) for c, ch in node.children))
    if isinstance(node, ProdGate):
        (c0, ch0), rest = node.children[0], node.children[1:]
        return ProdGate(((field.mul(scalar, c0), ch0),) + rest)
    return SumGate(((scalar, node),))


def _as_constant(node: Node, field: Field) -> Scalar | None:
    """The scalar a constant-only node computes, or None for anything else."""
    if isinstance(node, OneLeaf):
        return field.one()
    if isinstance(node, SumGate) and all(isinstance(ch, OneLeaf) for _, ch in node.children):
        acc = field.zero()
        for c, _ in node.children:
            acc = field.add(acc, c)
        return acc
    return None


def _gate(kind_of: Node, edges: tuple) -> Node:
    return SumGate(edges) if isinstance(kind_of, SumGate) else ProdGate(edges)


def _merge_constant_edges(edges: list, field: Field) -> list:
    """Merge parallel constant leaves of one sum into a single edge.

    Needed so no rewrite output has a subtree computing only constants; sums
    commute, so the reordering is sound in both modes.
    """
    const_positions = [i for i, (_, ch) in enumerate(edges) if isinstance(ch, OneLeaf)]
    if len(const_positions) <= 1:
        return edges
    total = field.zero()
    for i in const_positions:
        total = field.add(total, edges[i][0])
    keep = [e for i, e in enumerate(edges) if i not in const_positions]
    if not field.is_zero(total):
        keep.insert(const_positions[0], (total, OneLeaf()))
    return keep


# ---------------------------------------------------------------------------
# binarize
# ---------------------------------------------------------------------------

def _balance_edges(kind, edges: list, one: Scalar):
    """Balanced binary combination of a list of edges into a single edge."""
    if len(edges) == 1:
        return edges[0]
    mid = len(edges) // 2
    left = _balance_edges(kind, edges[:mid], one)
    right = _balance_edges(kind, edges[mid:], one)
    return (one, kind((left, right)))


def _binarize_node(root: Node, field: Field) -> tuple[Scalar, Node]:
    """Bottom-up fan-in-2 normalization; returns a pending scalar and a node."""
    one = field.one()

    def fn(node: Node, vals: list) -> tuple[Scalar, Node]:
        if is_leaf(node):
            return (one, node)
        changed = False
        edges = []
        for (c, old), (cm, sub) in zip(node.children, vals):
            if sub is not old or not field.is_one(cm):
                changed = True
            edges.append((field.mul(c, cm), sub))
        if isinstance(node, SumGate):
            merged = _merge_constant_edges(edges, field)
            if merged is not edges:
                changed = True
                edges = merged
        if not edges:
            raise ValueError("formula computes the zero polynomial; cannot binarize")
        if len(edges) == 1:
            c, sub = edges[0]
            if not isinstance(sub, OneLeaf):
                return (c, sub)  # absorb the fan-in-1 gate into the parent edge
            return (one, SumGate(tuple(edges)))
        if len(edges) == 2:
            if not changed:
                return (one, node)
            return (one, _gate(node, tuple(edges)))
        kind = SumGate if isinstance(node, SumGate) else ProdGate
        return (one, _balance_edges(kind, edges, one)[1])

    scalar, out = ir.node_attribute(root, fn)[id(root)]  # type: ignore[misc]
    return scalar, out


def binarize(formula: Formula) -> Formula:
    """Equivalent formula with every gate at fan-in 2.

    Fan-in-1 gates are absorbed into the parent edge; wider gates split into
    balanced binary trees, preserving child order, degrees and signs, so
    homogeneity, monotonicity and the mode survive.  Leaf count never grows
    (it only shrinks when parallel constant leaves of one sum merge).  Two
    degenerate shapes keep a fan-in-1 sum at the root: a scaled bare leaf and
    a constant output.
    """
    scalar, out = _binarize_node(formula.root, formula.field)
    return formula.with_root(scale_node(scalar, out, formula.field))


# ---------------------------------------------------------------------------
# collapse
# ---------------------------------------------------------------------------

def collapse(formula: Formula) -> Formula:
    """Flatten same-kind nesting: no sum feeds a sum, no product a product.

    Edge scalars multiply through per field axioms; fan-in-1 gates are
    absorbed.  Output alternates gate kinds, so depth is at most
    2 * product_depth + 1.  Leaf count never grows.
    """
    field = formula.field
    one = field.one()

    def fn(node: Node, vals: list) -> tuple[Scalar, Node]:
        if is_leaf(node):
            return (one, node)
        edges = []
        for (c, _), (cm, sub) in zip(node.children, vals):
            c2 = field.mul(c, cm)
            if isinstance(node, SumGate) and isinstance(sub, SumGate):
                edges.extend((field.mul(c2, cc), g) for cc, g in sub.children)
            elif isinstance(node, ProdGate) and isinstance(sub, ProdGate):
                for i, (cc, g) in enumerate(sub.children):
                    edges.append((field.mul(c2, cc) if i == 0 else cc, g))
            else:
                edges.append((c2, sub))
        if isinstance(node, SumGate):
            edges = _merge_constant_edges(edges, field)
        if not edges:
            raise ValueError("formula computes the zero polynomial; cannot collapse")
        if len(edges) == 1 and not isinstance(edges[0][1], OneLeaf):
            return edges[0]
        return (one, _gate(node, tuple(edges)))

    scalar, out = ir.node_attribute(formula.root, fn)[id(formula.root)]  # type: ignore[misc]
    return formula.with_root(scale_node(scalar, out, field))


# ---------------------------------------------------------------------------
# Split-at-heavy-gate machinery
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BBSplit:
    """The unique split gate: subtree size >= s - s/k, both children below."""

    gate_id: int
    size_total: int
    size_alpha: int
    k: int


def _satisfies_split(sz: int, s: int, k: int) -> bool:
    # size >= s - s/k, exactly:  k*size >= (k-1)*s
    return k * sz >= (k - 1) * s


def bb_find_split(formula: Formula, k: int) -> BBSplit:
    """Scan all gates for the split predicate; exactly one must satisfy it.

    Raises TooSmall when size <= k (callers use the base case) and treats a
    duplicate hit as IR corruption.
    """
    if k < 4:
        raise ValueError(f"branch parameter k must be >= 4, got {k}")
    sizes = _leaf_count(formula.root)
    s = sizes[id(formula.root)]
    if s <= k:
        raise TooSmall(f"size {s} <= k = {k}")
    hits: list[tuple[int, int]] = []
    for gate_id, (node, _) in enumerate(ir.iter_preorder_positions(formula.root)):
        if not is_gate(node):
            continue
        if not _satisfies_split(sizes[id(node)], s, k):
            continue
        if any(_satisfies_split(sizes[id(ch)], s, k) for _, ch in node.children):
            continue
        hits.append((gate_id, sizes[id(node)]))
    if len(hits) != 1:
        raise InternalInvariantError(f"split gate must be unique, found {len(hits)}")
    gate_id, size_alpha = hits[0]
    return BBSplit(gate_id=gate_id, size_total=s, size_alpha=size_alpha, k=k)


def _walk_split(root: Node, sizes: dict[int, int], s: int, k: int) -> list[tuple[Node, int]]:
    """Path of (gate, child-index) pairs from the root down to the split gate.

    Exploits uniqueness: keep descending into the single child that still
    meets the threshold.  The split gate is the child indicated by the last
    pair, or the root itself when the path is empty.
    """
    path: list[tuple[Node, int]] = []
    cur = root
    while True:
        big = [
            i
            for i, (_, ch) in enumerate(cur.children)
            if _satisfies_split(sizes[id(ch)], s, k)
        ]
        if len(big) > 1:
            raise InternalInvariantError("two children above the split threshold")
        if not big:
            return path
        path.append((cur, big[0]))
        cur = cur.children[big[0]][1]


def _path_to(root: Node, target: Node) -> list[tuple[Node, int]]:
    """(gate, child-index) path from root to target, target excluded."""
    parent: dict[int, tuple[Node, int]] = {}
    stack = [root]
    found = root is target
    while stack:
        node = stack.pop()
        if node is target:
            found = True
        if is_gate(node):
            for i, (_, ch) in enumerate(node.children):
                parent[id(ch)] = (node, i)
                stack.append(ch)
    if not found and id(target) not in parent:
        raise InternalInvariantError("target gate not found in formula")
    path: list[tuple[Node, int]] = []
    cur = target
    while cur is not root:
        g, i = parent[id(cur)]
        path.append((g, i))
        cur = g
    path.reverse()
    return path


# constant-or-node values: None is the zero polynomial, (scalar, None) a
# constant, (scalar, node) a scaled subformula
PendingValue = "tuple[Scalar, Node | None] | None"


def _decompose_along(path: list[tuple[Node, int]], field: Field):
    """Split F = A * alpha * B + C along a root-to-alpha path.

    Returns (a_edges, b_edges, c_value, path_scalar): A collects the factors
    multiplying alpha on the left, top-down; B the right factors, bottom-up;
    C is F with alpha set to zero, as a pending value (None when it
    vanishes); the path scalar is the product of edge weights on the path.
    """
    one = field.one()
    ps = one
    a_edges: list = []
    b_groups: list[list] = []
    for g, i in path:
        ps = field.mul(ps, g.children[i][0])
        if isinstance(g, ProdGate):
            a_edges.extend(g.children[:i])
            b_groups.append(list(g.children[i + 1:]))
    b_edges: list = []
    for group in reversed(b_groups):
        b_edges.extend(group)

    c_val = None  # zero at alpha itself
    for g, i in reversed(path):
        cp = g.children[i][0]
        if isinstance(g, ProdGate):
            if c_val is None:
                continue  # zero factor kills the product
            cv, cn = c_val
            sc = field.mul(cp, cv)
            others = g.children[:i] + g.children[i + 1:]
            if cn is None:
                if len(others) == 1:
                    c_val = (field.mul(sc, others[0][0]), others[0][1])
                else:
                    c_val = (sc, ProdGate(others))
            else:
                edges = g.children[:i] + ((one, cn),) + g.children[i + 1:]
                c_val = (sc, ProdGate(edges))
        else:
            const = field.zero()
            node_parts: list = []
            for j, (cj, chj) in enumerate(g.children):
                if j == i:
                    if c_val is None:
                        continue
                    cv, cn = c_val
                    sc = field.mul(cj, cv)
                    if cn is None:
                        const = field.add(const, sc)
                    else:
                        node_parts.append((sc, cn))
                elif isinstance(chj, OneLeaf):
                    const = field.add(const, cj)
                else:
                    node_parts.append((cj, chj))
            if not node_parts:
                c_val = None if field.is_zero(const) else (const, None)
            else:
                if not field.is_zero(const):
                    node_parts.append((const, OneLeaf()))
                if len(node_parts) == 1 and not isinstance(node_parts[0][1], OneLeaf):
                    c_val = node_parts[0]
                else:
                    c_val = (one, SumGate(tuple(node_parts)))
    return a_edges, b_edges, c_val, ps


def _edges_to_node(edges: list, field: Field) -> tuple[Scalar, Node] | None:
    """Materialize an ordered factor list as a product edge; None when empty."""
    if not edges:
        return None
    if len(edges) == 1:
        return edges[0]
    return (field.one(), ProdGate(tuple(edges)))


def _pending_to_root(value, field: Field) -> Node | None:
    """Materialize a pending value as a standalone formula root."""
    if value is None:
        return None
    scalar, node = value
    if node is None:
        return SumGate(((scalar, OneLeaf()),))
    return scale_node(scalar, node, field)


def bb_decompose(formula: Formula, split: BBSplit | int):
    """Decompose at a gate: returns (A, B, C) with
    expand(F) = expand(A) * expand(F_alpha) * expand(B) + expand(C),
    the factors in exactly that order in non-commutative mode.

    Empty products are the constant-one formula; C is None when setting alpha
    to zero leaves nothing.  The path scalar is folded into A.
    """
    field = formula.field
    gate_id = split.gate_id if isinstance(split, BBSplit) else split
    nodes = ir.gates_preorder(formula)
    if not 0 <= gate_id < len(nodes):
        raise ValueError(f"gate id {gate_id} out of range")
    alpha = nodes[gate_id]
    path = _path_to(formula.root, alpha)
    a_edges, b_edges, c_val, ps = _decompose_along(path, field)

    def materialize(edges: list, pending: Scalar) -> Formula:
        made = _edges_to_node(list(edges), field)
        if made is None:
            root: Node = OneLeaf() if field.is_one(pending) else SumGate(((pending, OneLeaf()),))
            return formula.with_root(root)
        c, node = made
        return formula.with_root(scale_node(field.mul(pending, c), node, field))

    a = materialize(a_edges, ps)
    b = materialize(b_edges, field.one())
    c_root = _pending_to_root(c_val, field)
    c = formula.with_root(c_root) if c_root is not None else None
    return a, b, c


@deep
def depth_reduce_bb(formula: Formula, epsilon: Fraction | int | str = Fraction(1, 2)) -> Formula:
    """Depth O(log s) at size about s^(1+eps), fan-in 2 throughout.

    Recursively splits at the unique heavy gate alpha: with F = A*alpha*B + C
    and alpha = beta op gamma, the output combines the recursively reduced
    pieces as ((A' x (beta' op gamma')) x B') + C'.  Formulas of size at most
    the branch parameter k = max(4, 2^ceil(4/eps)) are returned unchanged.
    Homogeneity, monotonicity, mode, and the syntactic degree bound are
    preserved.
    """
    eps = Fraction(epsilon)
    k = bb_branch_param(eps)
    field = formula.field
    one = field.one()
    start = binarize(formula)

    def reduce_node(node: Node) -> Node:
        sizes = _leaf_count(node)
        s = sizes[id(node)]
        if s <= k:
            return node
        path = _walk_split(node, sizes, s, k)
        alpha = node if not path else path[-1][0].children[path[-1][1]][1]
        if not is_gate(alpha) or len(alpha.children) != 2:
            raise InternalInvariantError("split walk must end on a fan-in-2 gate")
        a_edges, b_edges, c_val, ps = _decompose_along(path, field)

        (cb, beta), (cg, gamma) = alpha.children
        core: Node = _gate(alpha, ((cb, reduce_node(beta)), (cg, reduce_node(gamma))))

        def reduce_part(edges: list) -> tuple[Scalar, Node] | None:
            made = _edges_to_node(edges, field)
            if made is None:
                return None
            c, sub = made
            c2, sub2 = _binarize_node(sub, field)
            return (field.mul(c, c2), reduce_node(sub2))

        left = reduce_part(a_edges)
        right = reduce_part(b_edges)
        sc = ps
        body = core
        if left is not None:
            sc = field.mul(sc, left[0])
            body = ProdGate(((one, left[1]), (one, body)))
        if right is not None:
            sc = field.mul(sc, right[0])
            body = ProdGate(((one, body), (one, right[1])))
        if c_val is None:
            return scale_node(sc, body, field)
        cv, cn = c_val
        if cn is None:
            return SumGate(((sc, body), (cv, OneLeaf())))
        cc, c_bin = _binarize_node(cn, field)
        return SumGate(((sc, body), (field.mul(cv, cc), reduce_node(c_bin))))

    return formula.with_root(reduce_node(start.root))


# ---------------------------------------------------------------------------
# Potential-guided reduction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FrontierSet:
    """Maximal gates where the potential strictly drops below the root's."""

    gate_ids: frozenset[int]
    delta: int
    phi_root: int


def _phi_map(root: Node, delta: int) -> dict[int, int]:
    degrees = _syn_degrees(root)
    sdepths = _sum_depths(root)
    out: dict[int, int] = {}
    for nid, d in degrees.items():
        if d >= 1:
            out[nid] = _potential_of(d, sdepths[nid], delta).phi
    return out


def _frontier_nodes(root: Node, delta: int, phi: dict[int, int]) -> list[Node]:
    """Frontier positions; assumes the root's potential is at least 1."""
    phi_root = phi[id(root)]
    frontier: list[Node] = []
    stack: list[Node] = [root]
    while stack:
        node = stack.pop()
        if not is_gate(node):
            continue
        for _, ch in reversed(node.children):
            if isinstance(ch, OneLeaf):
                continue  # stays a constant leaf of the residual comb
            p = phi.get(id(ch))
            if p is None:
                raise InternalInvariantError("potential undefined below the frontier")
            if p > phi_root:
                raise InternalInvariantError("potential must not grow downward")
            if p < phi_root:
                frontier.append(ch)
            else:
                stack.append(ch)
    return frontier


def select_frontier(formula: Formula, delta: int) -> FrontierSet:
    """Gate ids (preorder) of the potential frontier.

    Asserts what makes the frontier useful: replacing the members by fresh
    leaves must leave a skew formula of sum depth at most delta.
    """
    if delta < 1:
        raise ValueError(f"delta must be >= 1, got {delta}")
    root = formula.root
    phi = _phi_map(root, delta)
    if id(root) not in phi or phi[id(root)] == 0:
        return FrontierSet(frozenset(), delta, phi.get(id(root), 0))
    members = {id(n) for n in _frontier_nodes(root, delta, phi)}
    ids = frozenset(
        gate_id
        for gate_id, (node, _) in enumerate(ir.iter_preorder_positions(root))
        if id(node) in members
    )
    residual = frontier_residual(formula, ids)
    if not ir.is_skew(residual):
        raise InternalInvariantError("frontier residual is not skew")
    if ir.metrics(residual).sum_depth > delta:
        raise InternalInvariantError("frontier residual exceeds sum depth delta")
    return FrontierSet(gate_ids=ids, delta=delta, phi_root=phi[id(root)])


def frontier_residual(formula: Formula, gate_ids: frozenset[int]) -> Formula:
    """The formula with the given gates replaced by fresh placeholder leaves."""
    from .util import run_deep

    fresh = ir.FreshVars()
    nodes = ir.gates_preorder(formula)
    replaced = {id(nodes[g]) for g in gate_ids}

    def build(node: Node) -> Node:
        if id(node) in replaced:
            return VarLeaf(fresh.take())
        if not is_gate(node):
            return node
        return _gate(node, tuple((c, build(ch)) for c, ch in node.children))

    return formula.with_root(run_deep(build, formula.root))


_FACTOR, _CONSTANT, _INTERIOR = 0, 1, 2


def _sigma_pi_terms(root: Node, classify, field: Field, strict_skew: bool):
    """Distribute a comb-shaped region into sum-of-products terms.

    classify maps a node to factor (region boundary), constant (a 1-leaf), or
    interior.  Returns merged (coefficient, factor-position-tuple) terms with
    zero coefficients dropped; the coefficient collects every edge scalar met
    on the way and factor order follows the tree.  In strict mode a product
    with two interior children raises NotSkew.
    """
    one = field.one()

    def edge_terms(scalar: Scalar, child: Node, memo) -> list:
        cls = classify(child)
        if cls == _FACTOR:
            return [(scalar, (child,))]
        if cls == _CONSTANT:
            return [(scalar, ())]
        return [(field.mul(scalar, c), fs) for c, fs in memo[id(child)]]

    memo: dict[int, list] = {}
    stack: list[tuple[Node, bool]] = [(root, False)]
    seen: set[int] = set()
    while stack:
        node, expanded = stack.pop()
        if not expanded:
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            if is_gate(node):
                for _, ch in node.children:
                    if classify(ch) == _INTERIOR and id(ch) not in seen:
                        stack.append((ch, False))
            continue
        if not is_gate(node):
            memo[id(node)] = [(one, (node,))]  # a bare-leaf region
            continue
        if isinstance(node, SumGate):
            out: list = []
            for c, ch in node.children:
                out.extend(edge_terms(c, ch, memo))
            memo[id(node)] = out
        else:
            interior_children = sum(
                1 for _, ch in node.children if classify(ch) == _INTERIOR
            )
            if strict_skew and interior_children > 1:
                raise NotSkew("product gate with two non-leaf children")
            acc: list = [(one, ())]
            for c, ch in node.children:
                branch = edge_terms(c, ch, memo)
                acc = [
                    (field.mul(c0, c1), f0 + f1)
                    for c0, f0 in acc
                    for c1, f1 in branch
                ]
            memo[id(node)] = acc

    merged: dict[tuple, list] = {}
    for c, fs in memo[id(root)]:
        key = tuple(id(f) for f in fs)
        slot = merged.get(key)
        if slot is None:
            merged[key] = [c, fs]
        else:
            slot[0] = field.add(slot[0], c)
    return [(c, fs) for c, fs in merged.values() if not field.is_zero(c)]


def skew_to_sigma_pi(g: Formula) -> Formula:
    """Rewrite a skew fan-in-2 formula with distinct leaf variables as a
    depth-2 sum of products computing the same polynomial.

    The output has at most 2^sum_depth product terms; every non-duplicable
    leaf (a +-leaf, or a x-leaf whose sibling is a leaf) occurs in exactly one
    term, every other leaf in at most 2^sum_depth.  Factor order inside each
    term follows the input, so non-commutative values are preserved.
    """
    root = g.root
    field = g.field
    if is_leaf(root):
        return g
    if ir.max_fanin(g) > 2:
        raise ValueError("skew rewrite needs fan-in 2")
    if not ir.is_skew(g):
        raise NotSkew("input has a product gate with two non-leaf children")
    seen_vars: set[int] = set()
    for node in ir.iter_postorder(root):
        if isinstance(node, VarLeaf):
            if node.var in seen_vars:
                raise DuplicateLeafVariable(f"variable x{node.var} labels two leaves")
            seen_vars.add(node.var)

    def classify(node: Node) -> int:
        if isinstance(node, VarLeaf):
            return _FACTOR
        if isinstance(node, OneLeaf):
            return _CONSTANT
        return _INTERIOR

    terms = _sigma_pi_terms(root, classify, field, strict_skew=True)
    delta = ir.metrics(g).sum_depth
    if len(terms) > 2**delta:
        raise InternalInvariantError("term count exceeded 2^sum_depth")
    summands: list = []
    for c, fs in terms:
        if not fs:
            summands.append((c, OneLeaf()))
        elif len(fs) == 1:
            summands.append((c, VarLeaf(fs[0].var)))
        else:
            summands.append(
                (c, ProdGate(tuple((field.one(), VarLeaf(f.var)) for f in fs)))
            )
    return g.with_root(SumGate(tuple(summands)))


@deep
def depth_reduce_main(formula: Formula, delta: int) -> Formula:
    """Potential-guided parallelization of a fan-in-2 formula.

    Output product depth is at most ceil(log2 d) + ceil(sum_depth/delta) and
    leaf count at most size * d^delta; both are asserted per run, as is that
    the syntactic degree never grows.  Homogeneity, monotonicity and the mode
    are preserved.  Output gates have arbitrary fan-in; collapse afterwards
    for the alternating form of depth <= 2 * product_depth + 1.
    """
    delta = int(delta)
    if delta < 1:
        raise ValueError(f"delta must be >= 1, got {delta}")
    if ir.max_fanin(formula) > 2:
        raise ValueError("depth_reduce_main needs a fan-in-2 input; binarize first")
    field = formula.field
    m_in = ir.metrics(formula)
    if m_in.syn_degree == 0:
        return formula  # constant output gate, already depth <= 1
    # the potential is intrinsic to a subtree, so one global map serves
    # every recursion level
    phi = _phi_map(formula.root, delta)

    def reduce_node(node: Node) -> Node | None:
        if is_leaf(node):
            return node
        if id(node) not in phi:
            return node  # degree-0 gate; only legal at the output
        phi_root = phi[id(node)]
        if phi_root == 0:
            return node
        frontier = _frontier_nodes(node, delta, phi)
        frontier_ids = {id(n) for n in frontier}
        reduced: dict[int, Node | None] = {id(n): reduce_node(n) for n in frontier}

        def classify(n: Node) -> int:
            if id(n) in frontier_ids:
                return _FACTOR
            if isinstance(n, OneLeaf):
                return _CONSTANT
            return _INTERIOR

        terms = _sigma_pi_terms(node, classify, field, strict_skew=False)
        used: dict[int, int] = {}
        summands: list = []
        const_acc = field.zero()
        have_const = False
        for c, fs in terms:
            coef = c
            parts: list[Node] = []
            dead = False
            for f in fs:
                r = reduced[id(f)]
                if r is None:
                    dead = True  # a vanished factor kills the term
                    break
                rc = _as_constant(r, field)
                if rc is not None:
                    coef = field.mul(coef, rc)
                    continue
                used[id(f)] = used.get(id(f), 0) + 1
                parts.append(ir.copy_tree(r) if used[id(f)] > 1 else r)
            if dead:
                continue
            if not parts:
                const_acc = field.add(const_acc, coef)
                have_const = True
            elif len(parts) == 1:
                summands.append((coef, parts[0]))
            else:
                summands.append(
                    (coef, ProdGate(tuple((field.one(), p) for p in parts)))
                )
        if have_const and not field.is_zero(const_acc):
            summands.append((const_acc, OneLeaf()))
        if not summands:
            return None
        if len(summands) == 1 and not isinstance(summands[0][1], OneLeaf):
            c, sub = summands[0]
            return scale_node(c, sub, field)
        return SumGate(tuple(summands))

    out_root = reduce_node(formula.root)
    if out_root is None:
        raise ValueError("formula computes the zero polynomial; no formula represents it")
    out = formula.with_root(out_root)

    m_out = ir.metrics(out)
    phi_bound = _potential_of(m_in.syn_degree, m_in.sum_depth, delta).phi
    if m_out.product_depth > phi_bound:
        raise InternalInvariantError(
            f"product depth {m_out.product_depth} above potential bound {phi_bound}"
        )
    if m_out.size > m_in.size * m_in.syn_degree**delta:
        raise InternalInvariantError(
            f"size {m_out.size} above bound {m_in.size} * {m_in.syn_degree}^{delta}"
        )
    if m_out.syn_degree > m_in.syn_degree:
        raise InternalInvariantError("syntactic degree grew")
    return out


# ---------------------------------------------------------------------------
# Degree components
# ---------------------------------------------------------------------------

@deep
def homogenize(formula: Formula, target_d: int) -> list[Formula | None]:
    """Degree components 0..target_d of a fan-in-2 formula.

    Component i is a homogeneous formula of syntactic degree exactly i, or
    None when no parse tree contributes that degree; the present components
    sum to the input polynomial whenever target_d covers its degree.  Sums
    split componentwise; products convolve the components of their children
    (left factors stay left, so non-commutative values survive).  Product
    depth never grows and the total leaf count obeys the hard bound
    size * C(product_depth + target_d + 1, target_d).
    """
    if target_d < 0:
        raise ValueError("target degree must be >= 0")
    if ir.max_fanin(formula) > 2:
        raise ValueError("homogenize needs a fan-in-2 input; binarize first")
    field = formula.field
    one = field.one()
    m_in = ir.metrics(formula)

    # component values: None (absent), ("s", scalar), or a Node
    memo: dict[tuple[int, int], object] = {}

    def comp(node: Node, i: int):
        key = (id(node), i)
        if key not in memo:
            memo[key] = _comp_raw(node, i)
        return memo[key]

    def _comp_raw(node: Node, i: int):
        if isinstance(node, VarLeaf):
            return node if i == 1 else None
        if isinstance(node, OneLeaf):
            return ("s", one) if i == 0 else None
        if isinstance(node, SumGate):
            if i == 0:
                acc = field.zero()
                seen = False
                for c, ch in node.children:
                    sub = comp(ch, 0)
                    if sub is None:
                        continue
                    seen = True
                    acc = field.add(acc, field.mul(c, sub[1]))
                if not seen or field.is_zero(acc):
                    return None
                return ("s", acc)
            parts = []
            for c, ch in node.children:
                sub = comp(ch, i)
                if sub is not None:
                    parts.append((c, sub))
            return _assemble_sum(parts)
        (cl, left), (cr, right) = node.children
        coef = field.mul(cl, cr)
        if i == 0:
            a = comp(left, 0)
            b = comp(right, 0)
            if a is None or b is None:
                return None
            val = field.mul(coef, field.mul(a[1], b[1]))
            return None if field.is_zero(val) else ("s", val)
        parts = []
        for j in range(i + 1):
            a = comp(left, j)
            b = comp(right, i - j)
            if a is None or b is None:
                continue
            if j == 0:
                parts.append((field.mul(coef, a[1]), b))
            elif j == i:
                parts.append((field.mul(coef, b[1]), a))
            else:
                parts.append((coef, ProdGate(((one, a), (one, b)))))
        return _assemble_sum(parts)

    def _assemble_sum(parts: list):
        if not parts:
            return None
        if len(parts) == 1:
            c, node = parts[0]
            return scale_node(c, node, field)
        return SumGate(tuple(parts))

    components: list[Formula | None] = []
    for i in range(target_d + 1):
        val = comp(formula.root, i)
        if val is None:
            components.append(None)
        elif isinstance(val, tuple):
            components.append(formula.with_root(SumGate(((val[1], OneLeaf()),))))
        else:
            components.append(formula.with_root(ir.tree_materialize(val)))

    total = 0
    for i, comp_f in enumerate(components):
        if comp_f is None:
            continue
        m = ir.metrics(comp_f)
        total += m.size
        if i > 0 and m.syn_degree != i:
            raise InternalInvariantError(f"component {i} has degree {m.syn_degree}")
        if not ir.is_homogeneous(comp_f):
            raise InternalInvariantError(f"component {i} is not homogeneous")
        if m.product_depth > m_in.product_depth:
            raise InternalInvariantError("component product depth grew")
    bound = m_in.size * math.comb(m_in.product_depth + target_d + 1, target_d)
    if total > bound:
        raise InternalInvariantError(f"total component size {total} above bound {bound}")
    return components


# ---------------------------------------------------------------------------
# Product fan-in 2
# ---------------------------------------------------------------------------

@deep
def product_fanin_2(formula: Formula) -> Formula:
    """Equivalent formula whose product gates all have fan-in 2.

    A wide product splits into left group / middle child / right group at the
    first child prefix reaching half the degree, keeping factor order; sums
    keep their fan-in.  Leaf count never grows; depth grows by at most a
    factor of 2 plus O(log d).  Homogeneity and monotonicity survive.
    """
    field = formula.field
    one = field.one()
    degrees = _syn_degrees(formula.root)

    def go(node: Node) -> tuple[Scalar, Node]:
        if is_leaf(node):
            return (one, node)
        if isinstance(node, SumGate):
            edges = []
            for c, ch in node.children:
                cm, sub = go(ch)
                edges.append((field.mul(c, cm), sub))
            if len(edges) == 1 and not isinstance(edges[0][1], OneLeaf):
                return edges[0]
            return (one, SumGate(tuple(edges)))
        return go_prod(list(node.children))

    def go_prod(edges: list) -> tuple[Scalar, Node]:
        if len(edges) == 1:
            c, ch = edges[0]
            cm, sub = go(ch)
            return (field.mul(c, cm), sub)
        if len(edges) == 2:
            out = []
            for c, ch in edges:
                cm, sub = go(ch)
                out.append((field.mul(c, cm), sub))
            return (one, ProdGate(tuple(out)))
        degs = [degrees[id(ch)] for _, ch in edges]
        d = sum(degs)
        prefix = 0
        m = len(edges)
        for j, dj in enumerate(degs, start=1):
            prefix += dj
            if 2 * prefix >= d:
                m = j
                break
        groups = [edges[: m - 1], [edges[m - 1]], edges[m:]]
        sc = one
        body: Node | None = None
        for grp in groups:
            if not grp:
                continue
            c, sub = go_prod(grp)
            sc = field.mul(sc, c)
            body = sub if body is None else ProdGate(((one, body), (one, sub)))
        return (sc, body)  # type: ignore[return-value]

    scalar, out_root = go(formula.root)
    out = formula.with_root(scale_node(scalar, out_root, field))
    for node in ir.iter_postorder(out.root):
        if isinstance(node, ProdGate) and len(node.children) != 2:
            raise InternalInvariantError("product gate with fan-in != 2 in output")
    if ir.metrics(out).size > ir.metrics(formula).size:
        raise InternalInvariantError("leaf count grew in product_fanin_2")
    return out


# ---------------------------------------------------------------------------
# Compositions
# ---------------------------------------------------------------------------

@deep
def depth_reduce_homogeneous(formula: Formula) -> Formula:
    """Full reduction to depth O(log d): binarize, split-reduce at eps = 1/2,
    potential-reduce at delta = ceil(log2 size' / log2 d), then collapse.

    Size is hard-bounded by (post-split size)^2 * d.
    """
    d = ir.syn_degree(formula)
    f1 = depth_reduce_bb(formula, Fraction(1, 2))
    m1 = ir.metrics(f1)
    delta = auto_delta(m1.size, d, m1.sum_depth)
    out = collapse(depth_reduce_main(f1, delta))
    if d >= 1 and ir.metrics(out).size > m1.size * m1.size * max(d, 1):
        raise InternalInvariantError("size above the s'^2 * d bound")
    return out


@deep
def depth_reduce_nearlinear(formula: Formula, epsilon: Fraction | int | str = Fraction(1, 2)) -> Formula:
    """Depth O(log d) at near-linear size s^(1+eps).

    When d^(4/eps) >= s the split reduction alone already fits the budget and
    its output is returned as-is; otherwise split-reduce at eps/2 and then
    potential-reduce at delta = floor(eps * log2 s / (2 log2 d)), which the
    branch condition forces to be >= 2.
    """
    eps = Fraction(epsilon)
    if not 0 < eps <= 1:
        raise ValueError(f"epsilon must be in (0, 1], got {eps}")
    s = ir.size(formula)
    d = ir.syn_degree(formula)
    if d <= 1:
        # no product structure: split-reduce, then flatten the sums
        f1 = depth_reduce_bb(formula, eps)
        m1 = ir.metrics(f1)
        f2 = depth_reduce_main(f1, auto_delta(m1.size, d, m1.sum_depth))
        return collapse(f2)
    # branch test d^(4/eps) >= s, exactly: with eps = p/q it is d^(4q) >= s^p
    if d ** (4 * eps.denominator) >= s**eps.numerator:
        return depth_reduce_bb(formula, eps)
    f1 = depth_reduce_bb(formula, eps / 2)
    delta = _floor_ratio_log(eps, s, d)
    if delta < 2:
        raise InternalInvariantError("branch condition must force delta >= 2")
    return collapse(depth_reduce_main(f1, delta))


def _floor_ratio_log(eps: Fraction, s: int, d: int) -> int:
    """floor(eps * log2 s / (2 * log2 d)) in exact integer arithmetic.

    j <= eps*log2(s)/(2*log2(d))  iff  d^(2*j*q) <= s^p  for eps = p/q.
    """
    p, q = eps.numerator, eps.denominator
    rhs = s**p
    j = 0
    while d ** (2 * (j + 1) * q) <= rhs:
        j += 1
    return j


@deep
def pipeline_inhom(formula: Formula, budget: int | None = None) -> Formula:
    """Depth O(log d) for a possibly inhomogeneous formula computing a
    homogeneous polynomial: binarize, split-reduce, take the degree-d
    component, potential-reduce, collapse.

    The input is checked semantically (by expansion, within budget): all
    monomials must share one degree d >= 1.
    """
    from . import poly

    table = poly.expand(
        formula, budget=budget if budget is not None else poly.DEFAULT_EXPANSION_BUDGET
    )
    degrees = table.degrees_present()
    if not degrees:
        raise ValueError("formula computes the zero polynomial")
    if len(degrees) > 1:
        raise NotSemanticallyHomogeneous(f"expansion mixes degrees {sorted(degrees)}")
    (d,) = degrees
    if d < 1:
        raise ValueError("pipeline needs degree >= 1; the input is a constant")
    f1 = depth_reduce_bb(formula, Fraction(1, 2))
    comps = homogenize(f1, d)
    comp_d = comps[d]
    if comp_d is None:
        raise InternalInvariantError("degree component missing for the output degree")
    comp_b = binarize(comp_d)
    m = ir.metrics(comp_b)
    delta = auto_delta(m.size, d, m.sum_depth)
    out = collapse(depth_reduce_main(comp_b, delta))
    if not ir.is_homogeneous(out):
        raise InternalInvariantError("pipeline output is not homogeneous")
    return out
