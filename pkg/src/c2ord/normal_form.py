"""Normal forms consumed by the two solver pipelines.

CountingNF is the shape  forall x forall y. chi  /\  AND_h forall x
exists[<=/>= C_h] y. chi_h  with quantifier-free matrices, used by the
order solver over unary signatures.  FunctionalNF is the shape  forall x
forall y.(alpha \/ x=y)  /\  AND_h forall x exists[=1] y.(f_h(x,y) /\ x!=y)
with fresh witness ("message") predicates, used by the frame pipeline.

Both transformations are Scott-style renamings: the input is brought to
negation normal form (counting quantifiers have counting duals, so this
needs no new predicates), every quantified subformula is replaced by a fresh
unary predicate with a one-directional definition, and the definitions are
compiled into the target shape.  CountingNF output is equisatisfiable with
the input over models of size >= its height; FunctionalNF output over models
of size > 1.  Callers cover the small sizes with the brute-force oracle.
"""

from dataclasses import dataclass

from . import formula as F
from .formula import (
    And, Count, EqAtom, Fls, Forall, Implies, Not, Or, Tru, UnaryAtom,
    BinaryAtom, conj, disj,
)


class NormalFormError(F.FormulaError):
    pass


@dataclass(frozen=True)
class CountingConjunct:
    direction: str   # '<=' or '>='
    bound: int       # >= 1
    chi: F.Node      # quantifier-free over x, y

    def __post_init__(self):
        if self.direction not in ("<=", ">="):
            raise NormalFormError(f"bad direction {self.direction!r}")
        if self.bound < 1:
            raise NormalFormError("counting bounds are positive")


@dataclass(frozen=True)
class CountingNF:
    signature: F.Signature
    chi: F.Node
    conjuncts: tuple

    @property
    def height(self):
        return max([1] + [c.bound for c in self.conjuncts])


@dataclass(frozen=True)
class FunctionalNF:
    signature: F.Signature
    alpha: F.Node
    witnesses: tuple

    def __post_init__(self):
        for f in self.witnesses:
            if f not in self.signature.message:
                raise NormalFormError(f"witness {f!r} is not a message predicate")


def counting_nf_formula(nf):
    parts = [Forall("x", Forall("y", nf.chi))]
    for c in nf.conjuncts:
        parts.append(Forall("x", Count("y", c.direction, c.bound, c.chi)))
    return F.Formula(nf.signature, conj(*parts))


def functional_nf_formula(nf):
    parts = [Forall("x", Forall("y", Or((nf.alpha, EqAtom("x", "y")))))]
    for f in nf.witnesses:
        parts.append(
            Forall("x", Count("y", "=", 1,
                              And((BinaryAtom(f, "x", "y"), Not(EqAtom("x", "y"))))))
        )
    return F.Formula(nf.signature, conj(*parts))


# --- variable utilities -------------------------------------------------------

def subst_vars(node, mapping):
    """Rename variables inside a quantifier-free formula."""
    if isinstance(node, (Tru, Fls)):
        return node
    if isinstance(node, UnaryAtom):
        return UnaryAtom(node.pred, mapping.get(node.var, node.var))
    if isinstance(node, BinaryAtom):
        return BinaryAtom(node.pred, mapping.get(node.left, node.left),
                          mapping.get(node.right, node.right))
    if isinstance(node, (EqAtom, F.LessAtom, F.SuccAtom)):
        return type(node)(mapping.get(node.left, node.left),
                          mapping.get(node.right, node.right))
    if isinstance(node, Not):
        return Not(subst_vars(node.sub, mapping))
    if isinstance(node, And):
        return And(tuple(subst_vars(p, mapping) for p in node.parts))
    if isinstance(node, Or):
        return Or(tuple(subst_vars(p, mapping) for p in node.parts))
    if isinstance(node, Implies):
        return Implies(subst_vars(node.lhs, mapping), subst_vars(node.rhs, mapping))
    raise NormalFormError(f"not quantifier-free: {node!r}")


def _free_vars(node, bound=frozenset()):
    if isinstance(node, (Forall, Count)):
        return _free_vars(node.body, bound | {node.var})
    out = set(v for v in F._vars_of(node) if v not in bound)
    for name in ("sub", "lhs", "rhs"):
        child = getattr(node, name, None)
        if child is not None:
            out |= _free_vars(child, bound)
    for child in getattr(node, "parts", ()):
        out |= _free_vars(child, bound)
    return out


# --- negation normal form -----------------------------------------------------

def nnf(node, negate=False):
    """Push negations to atoms; counting quantifiers absorb negation by
    flipping to the dual comparison, so all quantifiers end up positive."""
    if isinstance(node, Tru):
        return Fls() if negate else node
    if isinstance(node, Fls):
        return Tru() if negate else node
    if isinstance(node, (UnaryAtom, BinaryAtom, EqAtom, F.LessAtom, F.SuccAtom)):
        return Not(node) if negate else node
    if isinstance(node, Not):
        return nnf(node.sub, not negate)
    if isinstance(node, And):
        parts = tuple(nnf(p, negate) for p in node.parts)
        return Or(parts) if negate else And(parts)
    if isinstance(node, Or):
        parts = tuple(nnf(p, negate) for p in node.parts)
        return And(parts) if negate else Or(parts)
    if isinstance(node, Implies):
        if negate:
            return And((nnf(node.lhs), nnf(node.rhs, True)))
        return Or((nnf(node.lhs, True), nnf(node.rhs)))
    if isinstance(node, Forall):
        if negate:
            return Count(node.var, ">=", 1, nnf(node.body, True))
        return Forall(node.var, nnf(node.body))
    if isinstance(node, Count):
        body = nnf(node.body)
        cmp, k = node.cmp, node.bound
        if cmp == "<":
            cmp, k = "<=", k - 1
            if k < 0:
                return Tru() if negate else Fls()
        elif cmp == ">":
            cmp, k = ">=", k + 1
        if not negate:
            return Count(node.var, cmp, k, body)
        if cmp == ">=":
            # not (>= k)  ==  <= k-1
            return Fls() if k == 0 else Count(node.var, "<=", k - 1, body)
        if cmp == "<=":
            return Count(node.var, ">=", k + 1, body)
        # not (= k)  ==  <= k-1  or  >= k+1
        low = Count(node.var, "<=", k - 1, body) if k >= 1 else Fls()
        return disj(low, Count(node.var, ">=", k + 1, body))
    raise NormalFormError(f"cannot normalize {node!r}")


# --- the shared Scott core ----------------------------------------------------

class _Fresh:
    def __init__(self, taken):
        self.taken = set(taken)
        self.i = 0

    def name(self):
        while True:
            self.i += 1
            cand = f"_nf{self.i}"
            if cand not in self.taken:
                self.taken.add(cand)
                return cand


def _scott_core(root, fresh):
    """Replace every quantified subformula by a fresh unary predicate.

    root must be in NNF, so one-directional definitions suffice.  Returns
    (matrix, counting, new_unary): matrix entries are quantifier-free
    constraints to be enforced at *every* pair (x = y included); counting
    entries are (guard_pred, cmp, bound, body) meaning
    forall x. guard(x) -> exists[cmp bound] y. body(x, y).
    """
    matrix = []
    counting = []
    new_unary = []

    def go(node, avail):
        if isinstance(node, (Tru, Fls, UnaryAtom, BinaryAtom, EqAtom,
                             F.LessAtom, F.SuccAtom)):
            return node
        if isinstance(node, Not):
            return node  # NNF: negations sit on atoms
        if isinstance(node, And):
            return And(tuple(go(p, avail) for p in node.parts))
        if isinstance(node, Or):
            return Or(tuple(go(p, avail) for p in node.parts))
        if isinstance(node, (Forall, Count)):
            v = node.var
            body = go(node.body, v)
            free = bool(_free_vars(body) - {v})
            a = fresh.name()
            new_unary.append(a)
            if free:
                u = "y" if v == "x" else "x"
            else:
                # closed subformula: the fresh predicate is forced constant
                u = v
                matrix.append(Implies(UnaryAtom(a, "x"), UnaryAtom(a, "y")))
                matrix.append(Implies(UnaryAtom(a, "y"), UnaryAtom(a, "x")))
            if isinstance(node, Forall):
                oriented = (subst_vars(body, {"x": "y", "y": "x"})
                            if u == "y" else body)
                matrix.append(Implies(UnaryAtom(a, "x"), oriented))
            else:
                cmp, k = node.cmp, node.bound
                if cmp == "<":
                    cmp, k = "<=", k - 1
                elif cmp == ">":
                    cmp, k = ">=", k + 1
                oriented = (subst_vars(body, {"x": "y", "y": "x"})
                            if u == "y" else body)
                counting.append((a, cmp, k, oriented))
            return UnaryAtom(a, u if free else avail)
        raise NormalFormError(f"cannot transform {node!r}")

    matrix.append(go(root, "x"))
    return matrix, counting, new_unary


def _scott(root, fresh):
    matrix, counting, new_unary = _scott_core(nnf(root), fresh)
    return matrix, counting, new_unary


# --- counting normal form -----------------------------------------------------

def _match_counting_nf(phi):
    chi_parts = []
    conjs = []
    parts = phi.root.parts if isinstance(phi.root, And) else (phi.root,)
    for part in parts:
        if isinstance(part, Tru):
            continue
        if (isinstance(part, Forall) and isinstance(part.body, Forall)
                and part.var != part.body.var and _is_qf(part.body.body)):
            chi_parts.append(part.body.body)
            continue
        if (isinstance(part, Forall) and isinstance(part.body, Count)
                and part.var != part.body.var and _is_qf(part.body.body)):
            u, inner = part.var, part.body
            chi_h = inner.body if u == "x" else subst_vars(
                inner.body, {"x": "y", "y": "x"})
            cmp, k = inner.cmp, inner.bound
            if cmp == "<":
                cmp, k = "<=", k - 1
            elif cmp == ">":
                cmp, k = ">=", k + 1
            if k < 0:  # exists[< 0]: unsatisfiable
                chi_parts.append(Fls())
                continue
            if cmp == ">=" and k == 0:
                continue
            if k == 0:  # <= 0 or = 0: fold as a universal constraint
                chi_parts.append(Not(chi_h))
                continue
            if cmp == "=":
                conjs.append(CountingConjunct("<=", k, chi_h))
                conjs.append(CountingConjunct(">=", k, chi_h))
            else:
                conjs.append(CountingConjunct(cmp, k, chi_h))
            continue
        return None
    return CountingNF(phi.signature, conj(*chi_parts), tuple(conjs))


def _is_qf(node):
    return not any(isinstance(nd, (Forall, Count)) for nd in F.walk(node))


def to_counting_nf(phi):
    """Bring a sentence over a unary signature (plus order and successor) to
    counting normal form.  The result is equisatisfiable with the input over
    models of cardinality >= its height; callers handle smaller models with
    the brute-force oracle.
    """
    if phi.signature.binary:
        raise NormalFormError(
            "counting normal form requires a signature without binary predicates")
    direct = _match_counting_nf(phi)
    if direct is not None:
        return direct

    fresh = _Fresh(set(phi.signature.unary))
    matrix, counting, new_unary = _scott(phi.root, fresh)
    conjs = []
    for (a, cmp, k, body) in counting:
        guard = UnaryAtom(a, "x")
        if cmp == "<=":
            if k <= 0:
                matrix.append(Implies(guard, Not(body)))
            else:
                conjs.append(CountingConjunct("<=", k, And((guard, body))))
        elif cmp == ">=":
            if k >= 1:
                conjs.append(CountingConjunct(
                    ">=", k, Or((And((guard, body)), Not(guard)))))
        else:  # '='
            if k <= 0:
                matrix.append(Implies(guard, Not(body)))
            else:
                conjs.append(CountingConjunct("<=", k, And((guard, body))))
                conjs.append(CountingConjunct(
                    ">=", k, Or((And((guard, body)), Not(guard)))))
    sig2 = phi.signature.extend(unary=new_unary)
    return CountingNF(sig2, conj(*matrix), tuple(conjs))


# --- functional normal form ---------------------------------------------------

def _match_functional_nf(phi):
    alpha_parts = []
    witnesses = []
    parts = phi.root.parts if isinstance(phi.root, And) else (phi.root,)
    for part in parts:
        if (isinstance(part, Forall) and isinstance(part.body, Forall)
                and part.var != part.body.var and _is_qf(part.body.body)):
            qf = part.body.body
            split = _strip_eq_disjunct(qf)
            if split is not None:
                alpha_parts.append(split)
            else:
                alpha_parts.append(qf)
                alpha_parts.append(subst_vars(qf, {"y": "x"}))
            continue
        w = _match_witness_conjunct(part)
        if w is not None:
            witnesses.append(w)
            continue
        return None
    if len(set(witnesses)) != len(witnesses):
        return None
    sig = phi.signature
    for f in witnesses:
        if f not in sig.binary:
            return None
    sig2 = F.Signature(sig.unary, sig.binary, tuple(witnesses),
                       sig.has_order, sig.has_succ)
    return FunctionalNF(sig2, conj(*alpha_parts), tuple(witnesses))


def _strip_eq_disjunct(qf):
    if not isinstance(qf, Or):
        return None
    rest = [p for p in qf.parts
            if not (isinstance(p, EqAtom) and p.left != p.right)]
    if len(rest) == len(qf.parts):
        return None
    return disj(*rest)


def _match_witness_conjunct(part):
    if not (isinstance(part, Forall) and part.var == "x"
            and isinstance(part.body, Count)):
        return None
    cnt = part.body
    if not (cnt.var == "y" and cnt.cmp == "=" and cnt.bound == 1
            and isinstance(cnt.body, And) and len(cnt.body.parts) == 2):
        return None
    a, b = cnt.body.parts
    if isinstance(b, BinaryAtom):
        a, b = b, a
    if not (isinstance(a, BinaryAtom) and (a.left, a.right) == ("x", "y")):
        return None
    if not (isinstance(b, Not) and isinstance(b.sub, EqAtom)
            and b.sub.left != b.sub.right):
        return None
    return a.pred


def to_functional_nf(phi):
    """Bring any sentence to functional normal form: a universal matrix plus
    exactly-one witness conjuncts over fresh message predicates.  The result
    is equisatisfiable with the input on structures of cardinality > 1 (the
    1-element case is the caller's separate corner check); the blowup is
    linear in the counting bounds.
    """
    direct = _match_functional_nf(phi)
    if direct is not None:
        return direct

    sig = phi.signature
    fresh = _Fresh(set(sig.unary) | set(sig.binary))
    matrix, counting, new_unary = _scott(phi.root, fresh)

    alpha_parts = []
    for psi in matrix:
        alpha_parts.append(psi)
        alpha_parts.append(subst_vars(psi, {"y": "x"}))

    pools = []
    for (a, cmp, k, body) in counting:
        guard_a = UnaryAtom(a, "x")
        s = fresh.name()
        new_unary.append(s)
        self_case = subst_vars(body, {"y": "x"})
        alpha_parts.append(Implies(UnaryAtom(s, "x"), self_case))
        alpha_parts.append(Implies(self_case, UnaryAtom(s, "x")))
        pool = []
        if k >= 1:
            pool = [fresh.name() for _ in range(k)]
            pools.extend(pool)
        for self_true in (True, False):
            guard = And((guard_a, UnaryAtom(s, "x") if self_true
                         else Not(UnaryAtom(s, "x"))))
            kk = k - 1 if self_true else k
            if cmp in (">=", "=") and kk >= 1:
                for i in range(kk):
                    alpha_parts.append(Implies(
                        guard, Implies(BinaryAtom(pool[i], "x", "y"), body)))
                for i in range(kk):
                    for j in range(i + 1, kk):
                        alpha_parts.append(Implies(guard, Not(And((
                            BinaryAtom(pool[i], "x", "y"),
                            BinaryAtom(pool[j], "x", "y"),
                        )))))
            if cmp in ("<=", "="):
                if kk >= 1:
                    alpha_parts.append(Implies(guard, Implies(
                        body,
                        disj(*[BinaryAtom(pool[i], "x", "y") for i in range(kk)]),
                    )))
                elif kk == 0:
                    alpha_parts.append(Implies(guard, Not(body)))
                else:  # kk == -1: the self witness alone already overshoots
                    alpha_parts.append(Not(guard))

    sig2 = F.Signature(
        sig.unary + tuple(new_unary),
        sig.binary + tuple(pools),
        tuple(pools),
        sig.has_order,
        sig.has_succ,
    )
    return FunctionalNF(sig2, conj(*alpha_parts), tuple(pools))
