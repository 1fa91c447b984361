"""Multicounter automata: semantics, bounded emptiness, and the reduction
from emptiness to finite satisfiability of the ordered two-variable logic
with one extra binary predicate.

Counters can be incremented and decremented but never tested for zero during
the run; acceptance requires the designated subset R of counters to be zero.
Exact emptiness is equivalent to reachability in vector addition systems and
far beyond desk scale, so the search here is bounded: "empty" is reported
only when the full reachable configuration space was explored without any
counter ever needing to exceed the cap.
"""

import json
from dataclasses import dataclass

from . import formula as F
from .formula import (
    And, BinaryAtom, Count, EqAtom, Forall, Implies, LessAtom, Not, Or,
    SuccAtom, UnaryAtom, conj, disj,
)


class McaError(ValueError):
    pass


@dataclass(frozen=True)
class Transition:
    src: str
    op: str          # 'inc' | 'dec' | 'skip'
    counter: object  # counter name, or None for skip
    dst: str

    def __post_init__(self):
        if self.op not in ("inc", "dec", "skip"):
            raise McaError(f"bad operation {self.op!r}")
        if (self.counter is None) != (self.op == "skip"):
            raise McaError("counter argument required iff op is inc/dec")


@dataclass(frozen=True)
class Mca:
    states: tuple
    counters: tuple
    zero_tested: frozenset   # R: counters required to be zero at acceptance
    delta: tuple
    initial: str
    accepting: frozenset

    def __post_init__(self):
        if self.initial not in self.states:
            raise McaError("initial state not declared")
        for q in self.accepting:
            if q not in self.states:
                raise McaError(f"accepting state {q!r} not declared")
        for c in self.zero_tested:
            if c not in self.counters:
                raise McaError(f"zero-tested counter {c!r} not declared")
        for t in self.delta:
            if t.src not in self.states or t.dst not in self.states:
                raise McaError(f"transition endpoint missing: {t}")
            if t.counter is not None and t.counter not in self.counters:
                raise McaError(f"transition counter missing: {t}")

    @property
    def reduced(self):
        return (not any(t.op == "skip" for t in self.delta)
                and self.zero_tested == frozenset(self.counters))

    def to_doc(self):
        return {
            "states": list(self.states),
            "counters": list(self.counters),
            "R": sorted(self.zero_tested),
            "delta": [
                [t.src, t.op, t.dst] if t.op == "skip"
                else [t.src, t.op, t.counter, t.dst]
                for t in self.delta
            ],
            "initial": self.initial,
            "accepting": sorted(self.accepting),
        }

    @staticmethod
    def from_doc(doc):
        delta = []
        for row in doc["delta"]:
            if len(row) == 3:
                delta.append(Transition(row[0], row[1], None, row[2]))
            else:
                delta.append(Transition(row[0], row[1], row[2], row[3]))
        return Mca(
            tuple(doc["states"]),
            tuple(doc["counters"]),
            frozenset(doc["R"]),
            tuple(delta),
            doc["initial"],
            frozenset(doc["accepting"]),
        )

    def to_json(self):
        return json.dumps(self.to_doc(), sort_keys=True, indent=1) + "\n"

    @staticmethod
    def from_json(text):
        return Mca.from_doc(json.loads(text))


@dataclass(frozen=True)
class McaConfiguration:
    state: str
    counters: tuple   # counts aligned with Mca.counters

    def value(self, mca, c):
        return self.counters[mca.counters.index(c)]


def initial_configuration(mca):
    return McaConfiguration(mca.initial, (0,) * len(mca.counters))


def is_accepting(mca, conf):
    if conf.state not in mca.accepting:
        return False
    return all(
        conf.counters[i] == 0
        for i, c in enumerate(mca.counters)
        if c in mca.zero_tested
    )


def apply(mca, conf, trans):
    """Fire one transition; decrements require a positive counter."""
    if trans not in mca.delta:
        raise McaError("transition not in the automaton")
    if trans.src != conf.state:
        raise McaError(f"transition source {trans.src!r} != state {conf.state!r}")
    counts = list(conf.counters)
    if trans.op != "skip":
        i = mca.counters.index(trans.counter)
        if trans.op == "inc":
            counts[i] += 1
        else:
            if counts[i] <= 0:
                raise McaError(f"decrement of zero counter {trans.counter!r}")
            counts[i] -= 1
    return McaConfiguration(trans.dst, tuple(counts))


@dataclass(frozen=True)
class EmptinessResult:
    verdict: str            # 'nonempty' | 'empty' | 'unknown'
    run: tuple = ()         # conf, trans, conf, ..., conf when nonempty
    explored: int = 0
    saturated: bool = False

    @property
    def nonempty(self):
        return self.verdict == "nonempty"


def bounded_emptiness(mca, counter_cap, step_cap):
    """Breadth-first search of the configuration space.

    Returns the shortest accepting run when one exists within the caps.
    "empty" is sound: it is reported only when the reachable space was
    exhausted with no counter ever needing to exceed counter_cap and no
    frontier left when step_cap ran out.
    """
    if counter_cap < 1 or step_cap < 1:
        raise McaError("caps must be at least 1")
    start = initial_configuration(mca)
    order = {t: i for i, t in enumerate(mca.delta)}
    parents = {start: None}
    frontier = [start]
    saturated = False
    explored = 1

    def finish(conf):
        steps = []
        cur = conf
        while parents[cur] is not None:
            prev, trans = parents[cur]
            steps.append((trans, cur))
            cur = prev
        run = [cur]
        for trans, c in reversed(steps):
            run.extend((trans, c))
        return EmptinessResult("nonempty", tuple(run), explored, saturated)

    if is_accepting(mca, start):
        return finish(start)

    for _ in range(step_cap):
        if not frontier:
            break
        nxt = []
        for conf in sorted(frontier, key=lambda c: (c.state, c.counters)):
            for trans in sorted((t for t in mca.delta if t.src == conf.state),
                                key=order.get):
                if trans.op == "dec" and conf.value(mca, trans.counter) == 0:
                    continue
                new = apply(mca, conf, trans)
                if any(v > counter_cap for v in new.counters):
                    saturated = True
                    continue
                if new in parents:
                    continue
                parents[new] = (conf, trans)
                explored += 1
                if is_accepting(mca, new):
                    return finish(new)
                nxt.append(new)
        frontier = nxt

    if frontier or saturated:
        return EmptinessResult("unknown", (), explored, saturated)
    return EmptinessResult("empty", (), explored, False)


def replay(mca, run):
    """Validate a run: replays every transition and checks acceptance."""
    if not run:
        return False
    conf = run[0]
    if conf != initial_configuration(mca):
        return False
    for i in range(1, len(run), 2):
        try:
            conf = apply(mca, conf, run[i])
        except McaError:
            return False
        if conf != run[i + 1]:
            return False
    return is_accepting(mca, conf)


# --- the satisfiability reduction ----------------------------------------------

def mca_signature(mca):
    unary = tuple(f"q_{q}" for q in mca.states)
    unary += tuple(f"inc_{c}" for c in mca.counters)
    unary += tuple(f"dec_{c}" for c in mca.counters)
    unary += ("min", "max")
    return F.Signature(unary, ("s",), (), True, True)


def formula_from_mca(mca):
    """The twelve-conjunct sentence that is finitely satisfiable iff the
    reduced automaton has an accepting run.

    Models encode runs: each element is one configuration, labelled by its
    state and by the counter operation fired there; the extra binary
    predicate s matches each increment with the decrement that consumes it.
    """
    if not mca.reduced:
        raise McaError("the reduction requires a reduced automaton (no skip, R = C)")
    sig = mca_signature(mca)
    Q = mca.states
    C = mca.counters

    def q(name, v):
        return UnaryAtom(f"q_{name}", v)

    def inc(c, v):
        return UnaryAtom(f"inc_{c}", v)

    def dec(c, v):
        return UnaryAtom(f"dec_{c}", v)

    mn = lambda v: UnaryAtom("min", v)
    mx = lambda v: UnaryAtom("max", v)

    c1 = And((Count("x", "=", 1, mn("x")), Count("x", "=", 1, mx("x"))))
    c2 = Forall("x", Forall("y", And((
        Implies(mn("x"), Or((LessAtom("x", "y"), EqAtom("x", "y")))),
        Implies(mx("x"), Or((LessAtom("y", "x"), EqAtom("y", "x")))),
    ))))
    c3 = Forall("x", And(
        (disj(*[q(s, "x") for s in Q]),)
        + tuple(
            Implies(q(s, "x"), conj(*[Not(q(s2, "x")) for s2 in Q if s2 != s]))
            for s in Q
        )
    ))
    c4 = Forall("x", And((
        Implies(mn("x"), q(mca.initial, "x")),
        Implies(mx("x"), disj(*[q(s, "x") for s in sorted(mca.accepting)])),
    )))
    c5 = Forall("x", Forall("y", Implies(
        SuccAtom("x", "y"),
        disj(*(
            [And((q(t.src, "x"), inc(t.counter, "x"), q(t.dst, "y")))
             for t in mca.delta if t.op == "inc"]
            + [And((q(t.src, "x"), dec(t.counter, "x"), q(t.dst, "y")))
               for t in mca.delta if t.op == "dec"]
        )),
    )))
    c6 = Forall("x", Implies(Not(mx("x")),
                             disj(*[Or((inc(c, "x"), dec(c, "x"))) for c in C])))
    c7 = Forall("x", conj(*[
        Implies(inc(c, "x"), conj(*(
            [Not(dec(c, "x"))]
            + [And((Not(dec(c2, "x")), Not(inc(c2, "x")))) for c2 in C if c2 != c]
        )))
        for c in C
    ]))
    c8 = Forall("x", conj(*[
        Implies(dec(c, "x"), conj(*(
            [Not(inc(c, "x"))]
            + [And((Not(inc(c2, "x")), Not(dec(c2, "x")))) for c2 in C if c2 != c]
        )))
        for c in C
    ]))
    c9 = Forall("x", Implies(mx("x"), conj(*[
        And((Not(inc(c, "x")), Not(dec(c, "x")))) for c in C
    ])))
    c10 = Forall("x", Forall("y", Implies(
        BinaryAtom("s", "x", "y"),
        disj(*[And((inc(c, "x"), dec(c, "y"))) for c in C]),
    )))
    c11 = Forall("x", Forall("y", Implies(BinaryAtom("s", "x", "y"),
                                          LessAtom("x", "y"))))
    c12 = Forall("x", Or((
        mx("x"),
        Count("y", "=", 1, Or((BinaryAtom("s", "x", "y"),
                               BinaryAtom("s", "y", "x")))),
    )))
    return F.Formula(sig, And((c1, c2, c3, c4, c5, c6, c7, c8, c9, c10, c11, c12)))


def model_from_run(mca, run):
    """The run-encoding structure used in the correctness argument: one
    element per configuration, s joining each increment to the decrement
    that first returns the counter to its pre-increment value."""
    from .structure import Structure

    sig = mca_signature(mca)
    confs = run[0::2]
    trans = run[1::2]
    n = len(confs)
    unary = [set() for _ in range(n)]
    unary[0].add("min")
    unary[n - 1].add("max")
    for i, conf in enumerate(confs):
        unary[i].add(f"q_{conf.state}")
    for i, t in enumerate(trans):
        unary[i].add(f"{t.op}_{t.counter}")
    s_pairs = set()
    for i, t in enumerate(trans):
        if t.op != "inc":
            continue
        c = t.counter
        before = confs[i].value(mca, c)
        for j in range(i + 1, len(trans)):
            if (trans[j].op == "dec" and trans[j].counter == c
                    and confs[j + 1].value(mca, c) == before):
                s_pairs.add((i, j))
                break
    return Structure.make(sig, n, unary, {"s": s_pairs})
