"""Finite ordered structures and their type machinery.

Elements of a structure are the indices 0..n-1; the order relation is the
index order and the successor relation joins consecutive indices, so neither
is stored.  Non-distinguished binary predicates are stored as explicit pair
tables (self pairs allowed; in types they surface as reflexive flags of the
1-types rather than inside 2-types).

The module also implements the classification of 2-types (message, essential,
silent), star types, the normality conditions for structures, and the
normalization procedure that turns any model of a functional-form sentence
into a normal one over a slightly extended signature.
"""

import json
from dataclasses import dataclass

from . import formula as F
from . import _kernel

ORD_SUCC = "succ"   # x < y, adjacent
ORD_LT = "lt"       # x < y, not adjacent
ORD_PRED = "pred"   # y < x, adjacent
ORD_GT = "gt"       # y < x, not adjacent
_ORDERS = (ORD_SUCC, ORD_LT, ORD_PRED, ORD_GT)
_MIRROR = {ORD_SUCC: ORD_PRED, ORD_PRED: ORD_SUCC, ORD_LT: ORD_GT, ORD_GT: ORD_LT}

# classification labels for directed 2-types
INVERTIBLE_MESSAGE = "invertible-message"
MESSAGE = "message"
INVERTIBLE_ESSENTIAL = "invertible-essential"
ESSENTIAL = "essential"
INVERSE_ONLY = "inverse-only"
SILENT = "silent"


class StructureError(ValueError):
    pass


class StarTypeError(StructureError):
    def __init__(self, condition, message):
        super().__init__(f"star type condition ({condition}) violated: {message}")
        self.condition = condition


class NormalizeError(StructureError):
    pass


@dataclass(frozen=True)
class Structure:
    """A finite ordered structure; immutable once built."""

    sig: F.Signature
    n: int
    unary: tuple          # per element: frozenset of unary predicate names
    binary: object        # mapping pred -> frozenset of (i, j) pairs

    @staticmethod
    def make(sig, n, unary, binary=None):
        if n < 1:
            raise StructureError("structures are nonempty")
        uni = tuple(frozenset(u) for u in unary)
        if len(uni) != n:
            raise StructureError("unary labelling length differs from n")
        declared_u = set(sig.unary)
        for labels in uni:
            for p in labels:
                if p not in declared_u:
                    raise StructureError(f"undeclared unary predicate {p!r}")
        table = {}
        for name, pairs in (binary or {}).items():
            if name not in sig.binary:
                raise StructureError(f"undeclared binary predicate {name!r}")
            for (i, j) in pairs:
                if not (0 <= i < n and 0 <= j < n):
                    raise StructureError(f"pair {(i, j)} out of range")
            table[name] = frozenset(pairs)
        for name in sig.binary:
            table.setdefault(name, frozenset())
        return Structure(sig, n, uni, _FrozenDict(table))

    @staticmethod
    def from_kernel_tables(sig, n, unary_masks, binary_bytes):
        unary = [
            frozenset(p for b, p in enumerate(sig.unary) if (unary_masks[i] >> b) & 1)
            for i in range(n)
        ]
        binary = {}
        for p, name in enumerate(sig.binary):
            base = p * n * n
            binary[name] = {
                (i, j)
                for i in range(n)
                for j in range(n)
                if binary_bytes[base + i * n + j]
            }
        return Structure.make(sig, n, unary, binary)

    def has(self, pred, i, j=None):
        if j is None:
            return pred in self.unary[i]
        return (i, j) in self.binary[pred]

    def kernel_tables(self):
        return _kernel.structure_tables(self)

    def restrict(self, sig):
        """Drop predicates not present in the smaller signature."""
        unary = [frozenset(p for p in labels if p in sig.unary) for labels in self.unary]
        binary = {name: self.binary[name] for name in sig.binary}
        return Structure.make(sig, self.n, unary, binary)

    def to_doc(self):
        return {
            "n": self.n,
            "signature": {
                "unary": list(self.sig.unary),
                "binary": list(self.sig.binary),
                "message": list(self.sig.message),
                "order": self.sig.has_order,
                "succ": self.sig.has_succ,
            },
            "unary": [sorted(labels) for labels in self.unary],
            "binary": sorted(
                [name, i + 1, j + 1]
                for name in self.sig.binary
                for (i, j) in self.binary[name]
            ),
        }

    @staticmethod
    def from_doc(doc):
        s = doc["signature"]
        sig = F.Signature(
            tuple(s["unary"]), tuple(s["binary"]), tuple(s["message"]),
            s.get("order", True), s.get("succ", True),
        )
        binary = {}
        for name, i, j in doc["binary"]:
            binary.setdefault(name, set()).add((i - 1, j - 1))
        return Structure.make(sig, doc["n"], doc["unary"], binary)

    def to_json(self):
        return json.dumps(self.to_doc(), sort_keys=True, indent=1) + "\n"

    @staticmethod
    def from_json(text):
        return Structure.from_doc(json.loads(text))


class _FrozenDict(dict):
    """Hashable read-only dict; keeps Structure usable as a dataclass field."""

    def __hash__(self):
        return hash(frozenset((k, v) for k, v in self.items()))

    def __setitem__(self, *a):
        raise TypeError("structure tables are immutable")


# --- 1-types and 2-types ------------------------------------------------------

@dataclass(frozen=True, order=True)
class OneType:
    """Maximal conjunction of (negated) atoms in one variable: the unary
    predicates plus the reflexive flags of the binary predicates."""

    unary_mask: int
    refl_mask: int

    def render(self, sig):
        pos = [sig.unary[b] for b in range(len(sig.unary)) if (self.unary_mask >> b) & 1]
        refl = [sig.binary[b] for b in range(len(sig.binary)) if (self.refl_mask >> b) & 1]
        return "{" + ",".join(pos + [r + "(self)" for r in refl]) + "}"


@dataclass(frozen=True, order=True)
class TwoType:
    """Maximal conjunction over two distinct variables: both 1-types, the
    forward/backward binary atoms, and one of the four order configurations.
    Order consistency (successor implies order) is built into the encoding."""

    tp1: OneType
    tp2: OneType
    fwd: int
    bwd: int
    order: str

    def __post_init__(self):
        if self.order not in _ORDERS:
            raise StructureError(f"bad order component {self.order!r}")

    def invert(self):
        return TwoType(self.tp2, self.tp1, self.bwd, self.fwd, _MIRROR[self.order])

    @property
    def x_less_y(self):
        return self.order in (ORD_SUCC, ORD_LT)

    @property
    def adjacent(self):
        return self.order in (ORD_SUCC, ORD_PRED)

    def render(self, sig):
        f = [sig.binary[b] for b in range(len(sig.binary)) if (self.fwd >> b) & 1]
        b = [sig.binary[b] for b in range(len(sig.binary)) if (self.bwd >> b) & 1]
        return (f"<{self.tp1.render(sig)} {self.order} {self.tp2.render(sig)}"
                f" fwd={','.join(f) or '-'} bwd={','.join(b) or '-'}>")


def unary_mask(sig, labels):
    m = 0
    for b, name in enumerate(sig.unary):
        if name in labels:
            m |= 1 << b
    return m


def message_mask(sig):
    m = 0
    for b, name in enumerate(sig.binary):
        if name in sig.message:
            m |= 1 << b
    return m


def tp1(structure, a):
    """The 1-type realised by element a."""
    sig = structure.sig
    refl = 0
    for b, name in enumerate(sig.binary):
        if (a, a) in structure.binary[name]:
            refl |= 1 << b
    return OneType(unary_mask(sig, structure.unary[a]), refl)


def tp2(structure, a, b):
    """The 2-type realised by the ordered pair (a, b); requires a != b."""
    if a == b:
        raise StructureError("2-types connect distinct elements")
    sig = structure.sig
    fwd = bwd = 0
    for bit, name in enumerate(sig.binary):
        if (a, b) in structure.binary[name]:
            fwd |= 1 << bit
        if (b, a) in structure.binary[name]:
            bwd |= 1 << bit
    if a < b:
        order = ORD_SUCC if b == a + 1 else ORD_LT
    else:
        order = ORD_PRED if a == b + 1 else ORD_GT
    return TwoType(tp1(structure, a), tp1(structure, b), fwd, bwd, order)


def invert(tau):
    return tau.invert()


def all_one_types(sig):
    return [
        OneType(u, r)
        for u in range(1 << len(sig.unary))
        for r in range(1 << len(sig.binary))
    ]


def royal_types(structure):
    """1-types with exactly one realisation."""
    seen = {}
    for a in range(structure.n):
        seen[tp1(structure, a)] = seen.get(tp1(structure, a), 0) + 1
    return frozenset(t for t, c in seen.items() if c == 1)


def kings(structure):
    royal = royal_types(structure)
    return [a for a in range(structure.n) if tp1(structure, a) in royal]


# --- classification -----------------------------------------------------------

def is_message_type(tau, sig):
    return bool(tau.fwd & message_mask(sig))


def is_essential_type(tau, kings_set, sig):
    return is_message_type(tau, sig) or tau.tp2 in kings_set


def is_silent_type(tau, kings_set, sig):
    return not is_essential_type(tau, kings_set, sig) and not is_essential_type(
        tau.invert(), kings_set, sig
    )


def classify(tau, kings_set, sig):
    """Directed classification of a 2-type against a royal-type set.

    The label INVERSE_ONLY covers types that are not essential themselves but
    whose inverse is (so they are not silent either).
    """
    inv = tau.invert()
    if is_message_type(tau, sig):
        return INVERTIBLE_MESSAGE if is_message_type(inv, sig) else MESSAGE
    if is_essential_type(tau, kings_set, sig):
        return (
            INVERTIBLE_ESSENTIAL
            if is_essential_type(inv, kings_set, sig)
            else ESSENTIAL
        )
    if is_essential_type(inv, kings_set, sig):
        return INVERSE_ONLY
    return SILENT


# --- quantifier-free evaluation under types ----------------------------------

def eval_qf_two_type(node, tau, sig):
    """Truth of a quantifier-free formula in x, y under a 2-type."""
    uidx = {name: b for b, name in enumerate(sig.unary)}
    bidx = {name: b for b, name in enumerate(sig.binary)}

    def go(nd):
        if isinstance(nd, F.Tru):
            return True
        if isinstance(nd, F.Fls):
            return False
        if isinstance(nd, F.UnaryAtom):
            t = tau.tp1 if nd.var == "x" else tau.tp2
            return bool((t.unary_mask >> uidx[nd.pred]) & 1)
        if isinstance(nd, F.BinaryAtom):
            bit = bidx[nd.pred]
            if nd.left == nd.right:
                t = tau.tp1 if nd.left == "x" else tau.tp2
                return bool((t.refl_mask >> bit) & 1)
            mask = tau.fwd if (nd.left, nd.right) == ("x", "y") else tau.bwd
            return bool((mask >> bit) & 1)
        if isinstance(nd, F.EqAtom):
            return nd.left == nd.right
        if isinstance(nd, F.LessAtom):
            if nd.left == nd.right:
                return False
            return tau.x_less_y if (nd.left, nd.right) == ("x", "y") else not tau.x_less_y
        if isinstance(nd, F.SuccAtom):
            if nd.left == nd.right:
                return False
            if (nd.left, nd.right) == ("x", "y"):
                return tau.order == ORD_SUCC
            return tau.order == ORD_PRED
        if isinstance(nd, F.Not):
            return not go(nd.sub)
        if isinstance(nd, F.And):
            return all(go(p) for p in nd.parts)
        if isinstance(nd, F.Or):
            return any(go(p) for p in nd.parts)
        if isinstance(nd, F.Implies):
            return (not go(nd.lhs)) or go(nd.rhs)
        raise StructureError(f"not quantifier-free: {nd!r}")

    return go(node)


THETA_EQ = "eq"


def eval_qf_order_types(node, pi_x, pi_y, theta, sig):
    """Truth of a quantifier-free formula under a pair of 1-types and one of
    the five order configurations (theta: 'eq', 'pred', 'succ', 'lt', 'gt').

    Only unary signatures are supported; 'pred' means y is the predecessor
    of x, 'lt' that y is strictly below x's predecessor is *not* implied --
    'lt'/'gt' simply mean non-adjacent strict order.
    """
    uidx = {name: b for b, name in enumerate(sig.unary)}

    def go(nd):
        if isinstance(nd, F.Tru):
            return True
        if isinstance(nd, F.Fls):
            return False
        if isinstance(nd, F.UnaryAtom):
            t = pi_x if nd.var == "x" else pi_y
            return bool((t.unary_mask >> uidx[nd.pred]) & 1)
        if isinstance(nd, F.BinaryAtom):
            raise StructureError("binary atom in a unary-signature context")
        if isinstance(nd, F.EqAtom):
            if nd.left == nd.right:
                return True
            return theta == THETA_EQ
        if isinstance(nd, F.LessAtom):
            if nd.left == nd.right or theta == THETA_EQ:
                return False
            x_less = theta in (ORD_SUCC, ORD_LT)
            return x_less if (nd.left, nd.right) == ("x", "y") else not x_less
        if isinstance(nd, F.SuccAtom):
            if nd.left == nd.right or theta == THETA_EQ:
                return False
            if (nd.left, nd.right) == ("x", "y"):
                return theta == ORD_SUCC
            return theta == ORD_PRED
        if isinstance(nd, F.Not):
            return not go(nd.sub)
        if isinstance(nd, F.And):
            return all(go(p) for p in nd.parts)
        if isinstance(nd, F.Or):
            return any(go(p) for p in nd.parts)
        if isinstance(nd, F.Implies):
            return (not go(nd.lhs)) or go(nd.rhs)
        raise StructureError(f"not quantifier-free: {nd!r}")

    return go(node)


# --- star types ----------------------------------------------------------------

@dataclass(frozen=True)
class StarType:
    """A 1-type plus the essential 2-types an element emits.  The same class
    represents partial star types (arbitrary subsets of the emissions)."""

    pi: OneType
    types: frozenset

    def sort_key(self):
        return (self.pi, tuple(sorted(self.types)))

    def up(self):
        """Emissions toward smaller elements (y < x in the 2-type)."""
        return frozenset(t for t in self.types if not t.x_less_y)

    def down(self):
        """Emissions toward larger elements (x < y)."""
        return frozenset(t for t in self.types if t.x_less_y)

    def down_part(self):
        return StarType(self.pi, self.down())

    def minus(self, tau):
        return StarType(self.pi, self.types - {tau})

    def minus_set(self, taus):
        return StarType(self.pi, self.types - frozenset(taus))

    def succ_type(self):
        for t in self.types:
            if t.order == ORD_SUCC:
                return t
        return None

    @property
    def is_empty(self):
        return not self.types

    def render(self, sig):
        return f"({self.pi.render(sig)}; {[t.render(sig) for t in sorted(self.types)]})"


def validate_star(pi, types, kings_set, sig):
    """The four star-type conditions; returns None or (index, message)."""
    for tau in types:
        if not is_essential_type(tau, kings_set, sig):
            return 0, f"non-essential member {tau}"
    seen = {}
    mmask = message_mask(sig)
    for tau in types:
        for b in range(len(sig.binary)):
            if (tau.fwd >> b) & 1 and (mmask >> b) & 1:
                if b in seen and seen[b] != tau:
                    return 1, f"two distinct emissions of message predicate bit {b}"
                seen[b] = tau
    for tau in types:
        if tau.tp1 != pi:
            return 2, f"member with origin {tau.tp1} instead of {pi}"
    for kappa in kings_set:
        if kappa == pi:
            continue
        hits = [t for t in types if t.tp2 == kappa]
        if len(hits) != 1:
            return 3, f"{len(hits)} emissions to royal type {kappa}"
    if pi in kings_set:
        if any(t.tp2 == pi for t in types):
            return 4, "king emitting to its own royal type"
    return None


def star_type(structure, a, kings_set=None):
    """The star type realised by element a: its 1-type plus every essential
    type originating in a.  Raises StarTypeError when the result violates a
    star-type condition (possible in non-normal structures)."""
    if kings_set is None:
        kings_set = royal_types(structure)
    pi = tp1(structure, a)
    types = frozenset(
        tp2(structure, a, b)
        for b in range(structure.n)
        if b != a and is_essential_type(tp2(structure, a, b), kings_set, structure.sig)
    )
    bad = validate_star(pi, types, kings_set, structure.sig)
    if bad is not None:
        raise StarTypeError(*bad)
    return StarType(pi, types)


def partial_star_types(star_types):
    """All subsets of the given star types' emission sets, deduplicated."""
    out = set()
    for st in star_types:
        members = sorted(st.types)
        for mask in range(1 << len(members)):
            out.add(StarType(st.pi, frozenset(
                members[i] for i in range(len(members)) if (mask >> i) & 1
            )))
    return frozenset(out)


# --- normal structures ----------------------------------------------------------

@dataclass(frozen=True)
class NormalityReport:
    conditions: tuple   # four (passed, witness) pairs, index 0 -> condition 1

    @property
    def passed(self):
        return all(ok for ok, _ in self.conditions)

    def failures(self):
        return [i + 1 for i, (ok, _) in enumerate(self.conditions) if not ok]


def is_normal(structure):
    """Check the four normality conditions, with a witness per failure:

    1. the least and greatest elements are kings;
    2. every non-royal pair e1 < e2 has a silently joined twin pair;
    3. every element emits every message predicate exactly once;
    4. adjacent elements are joined by invertible essential types.
    """
    sig = structure.sig
    n = structure.n
    royal = royal_types(structure)
    king_elems = set(kings(structure))

    c1_w = None
    for e in (0, n - 1):
        if e not in king_elems:
            c1_w = e
            break

    c2_w = None
    non_royal = [a for a in range(n) if a not in king_elems]
    for a in non_royal:
        for b in non_royal:
            if a >= b:
                continue
            ta, tb = tp1(structure, a), tp1(structure, b)
            found = False
            for a2 in range(n):
                if tp1(structure, a2) != ta:
                    continue
                for b2 in range(a2 + 1, n):
                    if tp1(structure, b2) != tb:
                        continue
                    if is_silent_type(tp2(structure, a2, b2), royal, sig):
                        found = True
                        break
                if found:
                    break
            if not found:
                c2_w = (a, b)
                break
        if c2_w:
            break

    c3_w = None
    for a in range(n):
        for f in sig.message:
            cnt = sum(1 for b in range(n) if (a, b) in structure.binary[f])
            if cnt != 1:
                c3_w = (a, f, cnt)
                break
        if c3_w:
            break

    c4_w = None
    for a in range(n - 1):
        tau = tp2(structure, a, a + 1)
        if classify(tau, royal, sig) not in (INVERTIBLE_MESSAGE, INVERTIBLE_ESSENTIAL):
            c4_w = (a, a + 1)
            break

    return NormalityReport((
        (c1_w is None, c1_w),
        (c2_w is None, c2_w),
        (c3_w is None, c3_w),
        (c4_w is None, c4_w),
    ))


@dataclass(frozen=True)
class NormalizeResult:
    structure: Structure
    signature: F.Signature
    new_kings_per_step: tuple
    messages_added: tuple


def _fresh_names(base, count, taken):
    names = []
    i = 0
    while len(names) < count:
        cand = f"{base}{i}" if (count > 1 or f"{base}" in taken or i > 0) else base
        if cand not in taken:
            names.append(cand)
            taken.add(cand)
        i += 1
    return names


def normalize(structure, nf):
    """Turn a model of a functional-form sentence into a normal structure.

    Adds two fresh message predicates joining consecutive elements (with a
    wrap-around edge so each element emits each exactly once), crowns the
    endpoints, and repeatedly crowns the small/large realisers of incorrect
    non-royal type pairs; crowned elements are distinguished by a binary
    counter over fresh unary predicates.  The input model must satisfy the
    sentence and have at least two elements.
    """
    from .normal_form import functional_nf_formula

    if structure.n < 2:
        raise NormalizeError("normalization needs at least 2 elements")
    phi0 = functional_nf_formula(nf)
    if not F.check(structure, phi0.over(structure.sig) if structure.sig != phi0.signature else phi0):
        raise NormalizeError("input structure does not satisfy the sentence")

    sig = structure.sig
    n = structure.n
    taken = set(sig.unary) | set(sig.binary)

    # message self-loops would break the exact-emission count; they are safe
    # to erase when alpha never mentions a reflexive message atom
    binary = {name: set(pairs) for name, pairs in structure.binary.items()}
    refl_mentioned = {
        nd.pred
        for nd in F.walk(nf.alpha)
        if isinstance(nd, F.BinaryAtom) and nd.left == nd.right
    }
    for f in sig.message:
        loops = [(i, j) for (i, j) in binary[f] if i == j]
        if loops and f not in refl_mentioned:
            binary[f] -= set(loops)

    fb, ff = _fresh_names("_fb", 1, taken) + _fresh_names("_ff", 1, taken)
    binary[ff] = {(i, i + 1) for i in range(n - 1)} | {(n - 1, 0)}
    binary[fb] = {(i + 1, i) for i in range(n - 1)} | {(0, n - 1)}

    kmin, kmax = _fresh_names("_kmin", 1, taken) + _fresh_names("_kmax", 1, taken)
    unary = [set(u) for u in structure.unary]
    unary[0].add(kmin)
    unary[n - 1].add(kmax)

    m_total = len(sig.message) + 2
    window = 2 * m_total + 1
    tags = {}
    next_tag = 1

    def cur_type(e):
        refl = frozenset(f for f in binary if (e, e) in binary[f])
        return (frozenset(unary[e]), refl, tags.get(e, 0))

    def type_key(t):
        return (tuple(sorted(t[0])), tuple(sorted(t[1])), t[2])

    def royal_now():
        counts = {}
        for e in range(n):
            counts[cur_type(e)] = counts.get(cur_type(e), 0) + 1
        return {t for t, c in counts.items() if c == 1}

    royal0 = royal_now()
    realized0 = {cur_type(e) for e in range(n)}
    pairs = sorted(
        ((p, q) for p in realized0 - royal0 for q in realized0 - royal0),
        key=lambda pq: (type_key(pq[0]), type_key(pq[1])),
    )
    pairs = list(pairs)
    new_kings_per_step = []

    def realizers(t):
        return [e for e in range(n) if cur_type(e) == t]

    def incorrect(p, q):
        rp, rq = realizers(p), realizers(q)
        s_set = rp[: min(len(rp), window)]
        l_set = rq[-min(len(rq), window):] if rq else []
        if len(s_set) != window or len(l_set) != window:
            return True
        return not (max(s_set) < min(l_set))

    while True:
        pick = None
        for pq in pairs:
            if incorrect(*pq):
                pick = pq
                break
        if pick is None:
            break
        p, q = pick
        rp, rq = realizers(p), realizers(q)
        to_crown = set(rp[: min(len(rp), window)]) | set(rq[-min(len(rq), window):])
        to_crown = {e for e in to_crown if tags.get(e, 0) == 0}
        for e in sorted(to_crown):
            tags[e] = next_tag
            next_tag += 1
        new_kings_per_step.append(len(to_crown))
        pairs.remove(pick)

    bits = max(next_tag - 1, 0).bit_length()
    tag_preds = _fresh_names("_kb", bits, taken) if bits else []
    for e, t in tags.items():
        for b in range(bits):
            if (t >> b) & 1:
                unary[e].add(tag_preds[b])

    sig2 = F.Signature(
        sig.unary + (kmin, kmax) + tuple(tag_preds),
        sig.binary + (fb, ff),
        sig.message + (fb, ff),
        sig.has_order,
        sig.has_succ,
    )
    out = Structure.make(sig2, n, unary, binary)

    report = is_normal(out)
    if not report.passed:
        raise NormalizeError(f"normalization failed conditions {report.failures()}")
    if not F.check(out, phi0.over(sig2)):
        raise NormalizeError("normalization broke the sentence")
    return NormalizeResult(out, sig2, tuple(new_kings_per_step), (fb, ff))
