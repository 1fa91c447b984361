"""Decision procedure for counting normal forms over unary signatures.

A model is abstracted element by element into a "full type": the 1-type of
the element, of its predecessor and successor, and two capped multisets of
the 1-types strictly below and strictly above (excluding the neighbours).
Multiset counts saturate at the formula height c; a node is locally
consistent ("compatible") when the universal matrix holds against every
recorded neighbour class and the counted witnesses satisfy every counting
conjunct.  Satisfiability is equivalent to a path from a source-shaped node
(no predecessor, nothing below) to a target-shaped node (no successor,
nothing above) through compatible nodes, which a breadth-first search finds
together with a witness model.
"""

import itertools
from dataclasses import dataclass

from . import formula as F
from .normal_form import counting_nf_formula
from .structure import (
    ORD_GT, ORD_LT, ORD_PRED, ORD_SUCC, THETA_EQ, OneType, Structure,
    eval_qf_order_types,
)

INF = float("inf")


class OrderSolverError(ValueError):
    pass


def cut(cap, value):
    return INF if value > cap else value


@dataclass(frozen=True)
class CMultiset:
    """Multiset of 1-types with counts in {0..cap} + infinity; unions
    saturate at the cap."""

    cap: int
    items: tuple   # sorted ((OneType, count)), counts > 0

    @staticmethod
    def empty(cap):
        return CMultiset(cap, ())

    @staticmethod
    def singleton(cap, pi):
        return CMultiset(cap, ((pi, 1),))

    @staticmethod
    def from_counts(cap, counts):
        items = tuple(sorted((pi, cut(cap, v)) for pi, v in counts.items() if v > 0))
        return CMultiset(cap, items)

    def get(self, pi):
        for p, v in self.items:
            if p == pi:
                return v
        return 0

    def counts(self):
        return dict(self.items)

    @property
    def is_empty(self):
        return not self.items

    @property
    def is_singleton(self):
        return len(self.items) == 1 and self.items[0][1] == 1

    def types(self):
        return [p for p, _ in self.items]

    def total(self):
        t = 0
        for _, v in self.items:
            t += v
        return cut(self.cap, t)

    def munion(self, other):
        if self.cap != other.cap:
            raise OrderSolverError("multiset cap mismatch")
        counts = self.counts()
        for p, v in other.items:
            counts[p] = cut(self.cap, counts.get(p, 0) + v)
        return CMultiset.from_counts(self.cap, counts)

    def add(self, pi, k=1):
        counts = self.counts()
        counts[pi] = cut(self.cap, counts.get(pi, 0) + k)
        return CMultiset.from_counts(self.cap, counts)

    def subset_of(self, other):
        return all(other.get(p) >= v for p, v in self.items)

    def sort_key(self):
        return tuple((p, v if v is not INF else INF) for p, v in self.items)


def munion(f, g):
    return f.munion(g)


@dataclass(frozen=True)
class FullType:
    """Per-element summary: predecessor, self, successor (singletons or
    empty), and the capped multisets strictly below and above."""

    pred: CMultiset
    self_: CMultiset
    succ: CMultiset
    below: CMultiset
    above: CMultiset

    def __post_init__(self):
        if not self.self_.is_singleton:
            raise OrderSolverError("the self component must be a singleton")
        for ms in (self.pred, self.succ):
            if not (ms.is_empty or ms.is_singleton):
                raise OrderSolverError("pred/succ must be singletons or empty")

    @property
    def cap(self):
        return self.self_.cap

    @property
    def pi(self):
        return self.self_.items[0][0]

    @property
    def is_source(self):
        return self.pred.is_empty and self.below.is_empty

    @property
    def is_target(self):
        return self.succ.is_empty and self.above.is_empty

    def sort_key(self):
        return tuple(ms.sort_key() for ms in
                     (self.pred, self.self_, self.succ, self.below, self.above))


def full_type(structure, a, c):
    """The full type of element a with counts capped at c.  Requires a
    signature without binary predicates."""
    if structure.sig.binary:
        raise OrderSolverError("full types are defined over unary signatures")
    from .structure import tp1

    n = structure.n
    pi = lambda e: tp1(structure, e)
    pred = (CMultiset.singleton(c, pi(a - 1)) if a > 0 else CMultiset.empty(c))
    succ = (CMultiset.singleton(c, pi(a + 1)) if a < n - 1 else CMultiset.empty(c))
    below = {}
    for e in range(0, a - 1):
        below[pi(e)] = below.get(pi(e), 0) + 1
    above = {}
    for e in range(a + 2, n):
        above[pi(e)] = above.get(pi(e), 0) + 1
    return FullType(
        pred,
        CMultiset.singleton(c, pi(a)),
        succ,
        CMultiset.from_counts(c, below),
        CMultiset.from_counts(c, above),
    )


# The theta under which a component's members relate to the element: members
# of `below` sit strictly under x beyond the predecessor, so the pair (x, y)
# satisfies y < x without adjacency, and symmetrically for `above`.
_COMPONENT_THETA = (
    ("pred", ORD_PRED),
    ("succ", ORD_SUCC),
    ("below", ORD_GT),
    ("above", ORD_LT),
)


def witness_count(sigma, chi_h, direction, bound, sig):
    """Count (capped) how many partners of an element with this full type
    satisfy chi_h, split over the five relative positions, and compare the
    total against the conjunct's bound."""
    c = sigma.cap
    pi = sigma.pi
    total = 0
    if eval_qf_order_types(chi_h, pi, pi, THETA_EQ, sig):
        total += 1
    for ms, theta in ((sigma.pred, ORD_PRED), (sigma.succ, ORD_SUCC)):
        if not ms.is_empty:
            (p, _), = ms.items
            if eval_qf_order_types(chi_h, pi, p, theta, sig):
                total += 1
    for name, theta in (("below", ORD_GT), ("above", ORD_LT)):
        ms = getattr(sigma, name)
        part = 0
        for p, v in ms.items:
            if eval_qf_order_types(chi_h, pi, p, theta, sig):
                part += v
        total += cut(c, part)
    total = cut(c, total)
    if direction == "<=":
        ok = total <= bound
    elif direction == ">=":
        ok = total >= bound
    else:
        raise OrderSolverError(f"bad direction {direction!r}")
    return total, ok


def compatible(sigma, nf):
    """Local consistency of a full type against a counting normal form:
    the matrix holds at the element itself and against every recorded
    neighbour class, and every counting conjunct's witness count fits."""
    sig = nf.signature
    pi = sigma.pi
    if not eval_qf_order_types(nf.chi, pi, pi, THETA_EQ, sig):
        return False
    for name, theta in _COMPONENT_THETA:
        ms = getattr(sigma, "self_" if name == "self" else name)
        for p, _ in ms.items:
            if not eval_qf_order_types(nf.chi, pi, p, theta, sig):
                return False
    for conj in nf.conjuncts:
        _, ok = witness_count(sigma, conj.chi, conj.direction, conj.bound, sig)
        if not ok:
            return False
    return True


def edge(sigma, sigma2):
    """Moving from an element to its successor: the new node keeps the old
    self as predecessor and the old successor as self; the old predecessor
    joins `below`; the old `above` splits into the new successor and the new
    `above`."""
    if sigma.cap != sigma2.cap:
        return False
    if sigma2.pred != sigma.self_ or sigma2.self_ != sigma.succ:
        return False
    if sigma2.below != sigma.below.munion(sigma.pred):
        return False
    return sigma.above == sigma2.above.munion(sigma2.succ)


def successors(sigma):
    """All graph successors of a node, in canonical order.  The only
    nondeterminism is how `above` splits into the new successor singleton
    and the rest; a saturated count splits into both a saturated and an
    exactly-cap remainder."""
    if sigma.succ.is_empty:
        return []
    c = sigma.cap
    pred2 = sigma.self_
    self2 = sigma.succ
    below2 = sigma.below.munion(sigma.pred)
    out = []
    if sigma.above.is_empty:
        out.append(FullType(pred2, self2, CMultiset.empty(c), below2,
                            CMultiset.empty(c)))
        return out
    for p, v in sigma.above.items:
        succ2 = CMultiset.singleton(c, p)
        rests = [INF, c] if v == INF else [v - 1]
        for rest in rests:
            counts = sigma.above.counts()
            if rest == 0:
                del counts[p]
            else:
                counts[p] = rest
            out.append(FullType(pred2, self2, succ2, below2,
                                CMultiset.from_counts(c, counts)))
    out.sort(key=FullType.sort_key)
    return out


class _Budget(Exception):
    pass


def _source_nodes(nf, pool, budget):
    """Compatible source-shaped nodes, lazily, in canonical order.  The
    `above` multiset ranges over types that can coexist above the element at
    all (the matrix already rules out the rest)."""
    sig = nf.signature
    c = nf.height
    empty = CMultiset.empty(c)
    for pi in pool:
        allowed = [p for p in pool
                   if eval_qf_order_types(nf.chi, pi, p, ORD_LT, sig)]
        succ_options = [empty] + [CMultiset.singleton(c, p) for p in pool]
        value_range = list(range(0, c + 1)) + [INF]
        for succ in succ_options:
            for combo in itertools.product(value_range, repeat=len(allowed)):
                if budget is not None:
                    budget[0] -= 1
                    if budget[0] < 0:
                        raise _Budget()
                counts = {p: v for p, v in zip(allowed, combo) if v != 0}
                node = FullType(empty, CMultiset.singleton(c, pi), succ,
                                empty, CMultiset.from_counts(c, counts))
                if compatible(node, nf):
                    yield node


def solve(nf, max_nodes=None):
    """Breadth-first reachability from compatible sources to targets.

    Returns Verdict.sat with the extracted model (and the node path in
    details['path']), Verdict.unsat when the finite compatible subgraph was
    exhausted, or Verdict.unknown when max_nodes was hit.  Without a cap the
    search is complete: the node space is finite.
    """
    sig = nf.signature
    if sig.binary:
        raise OrderSolverError("the order solver handles unary signatures only")
    pool = sorted(OneType(u, 0) for u in range(1 << len(sig.unary)))

    parents = {}
    frontier = []
    explored = 0
    budget = None if max_nodes is None else [max_nodes * 64]
    try:
        for node in _source_nodes(nf, pool, budget):
            if node in parents:
                continue
            parents[node] = None
            explored += 1
            if node.is_target:
                return _finish(nf, parents, node)
            frontier.append(node)
            if max_nodes is not None and explored > max_nodes:
                return F.Verdict.unknown("node cap exceeded while enumerating sources")
    except _Budget:
        return F.Verdict.unknown("source enumeration budget exceeded")
    frontier.sort(key=FullType.sort_key)

    while frontier:
        nxt = []
        for node in frontier:
            for node2 in successors(node):
                if node2 in parents or not compatible(node2, nf):
                    continue
                parents[node2] = node
                explored += 1
                if max_nodes is not None and explored > max_nodes:
                    return F.Verdict.unknown("node cap exceeded")
                if node2.is_target:
                    return _finish(nf, parents, node2)
                nxt.append(node2)
        nxt.sort(key=FullType.sort_key)
        frontier = nxt
    return F.Verdict.unsat(explored=explored)


def _finish(nf, parents, target):
    path = [target]
    while parents[path[-1]] is not None:
        path.append(parents[path[-1]])
    path.reverse()
    model = model_from_path(nf.signature, path)
    if not F.check(model, counting_nf_formula(nf)):
        raise AssertionError("extracted model failed verification")
    return F.Verdict.sat(model, path=tuple(path))


def model_from_path(sig, path):
    """Rebuild a structure from a node path: unary predicates come from the
    self components, order and successor from the positions."""
    unary = []
    for node in path:
        mask = node.pi.unary_mask
        unary.append({name for b, name in enumerate(sig.unary) if (mask >> b) & 1})
    return Structure.make(sig, len(path), unary, {})
