"""Two-variable counting logic over finite linear orders: syntax and semantics.

Sentences use only the variables x and y.  Atoms are unary predicates P(v),
non-distinguished binary predicates r(v,v'), equality, the order v < v' and
the induced successor succ(v,v').  Quantifiers are forall and the counting
forms exists[OP k] with OP in {=, <=, >=, <, >}; plain exists is sugar for
exists[>= 1].

Everything in this module is immutable, and evaluation (check) is exact
brute force over a given finite structure: it is the oracle against which
the solver pipelines are validated.
"""

from dataclasses import dataclass, field

from . import _kernel


class FormulaError(ValueError):
    pass


class SignatureError(FormulaError):
    pass


class ParseError(FormulaError):
    def __init__(self, message, line, col):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


_RESERVED = {"succ", "true", "false", "forall", "exists",
             "unary", "binary", "message", "order"}


@dataclass(frozen=True)
class Signature:
    """Predicate declarations: unary, non-distinguished binary, and the
    message subsequence of the binary predicates.  The distinguished order
    and successor are flagged, never named members of `binary`."""

    unary: tuple = ()
    binary: tuple = ()
    message: tuple = ()
    has_order: bool = True
    has_succ: bool = True

    def __post_init__(self):
        names = list(self.unary) + list(self.binary)
        if len(set(names)) != len(names):
            raise SignatureError("duplicate predicate name")
        for name in names:
            if name in _RESERVED or "<" in name:
                raise SignatureError(f"reserved predicate name {name!r}")
        bset = set(self.binary)
        for name in self.message:
            if name not in bset:
                raise SignatureError(f"message predicate {name!r} not declared binary")
        if len(set(self.message)) != len(self.message):
            raise SignatureError("duplicate message predicate")

    def extend(self, unary=(), binary=(), message=()):
        """A new signature with extra predicates appended."""
        return Signature(
            self.unary + tuple(unary),
            self.binary + tuple(binary),
            self.message + tuple(message),
            self.has_order,
            self.has_succ,
        )


# --- AST -------------------------------------------------------------------

class Node:
    __slots__ = ()


@dataclass(frozen=True)
class Tru(Node):
    pass


@dataclass(frozen=True)
class Fls(Node):
    pass


@dataclass(frozen=True)
class UnaryAtom(Node):
    pred: str
    var: str


@dataclass(frozen=True)
class BinaryAtom(Node):
    pred: str
    left: str
    right: str


@dataclass(frozen=True)
class EqAtom(Node):
    left: str
    right: str


@dataclass(frozen=True)
class LessAtom(Node):
    left: str
    right: str


@dataclass(frozen=True)
class SuccAtom(Node):
    left: str
    right: str


@dataclass(frozen=True)
class Not(Node):
    sub: Node


@dataclass(frozen=True)
class And(Node):
    parts: tuple


@dataclass(frozen=True)
class Or(Node):
    parts: tuple


@dataclass(frozen=True)
class Implies(Node):
    lhs: Node
    rhs: Node


@dataclass(frozen=True)
class Forall(Node):
    var: str
    body: Node


@dataclass(frozen=True)
class Count(Node):
    """Counting quantifier exists[cmp bound] var. body; plain exists is
    Count('>=', 1, ...)."""

    var: str
    cmp: str
    bound: int
    body: Node

    def __post_init__(self):
        if self.cmp not in ("<=", ">=", "=", "<", ">"):
            raise FormulaError(f"bad counting comparison {self.cmp!r}")
        if self.bound < 0:
            raise FormulaError("negative counting bound")


def conj(*parts):
    parts = tuple(parts)
    if not parts:
        return Tru()
    return parts[0] if len(parts) == 1 else And(parts)


def disj(*parts):
    parts = tuple(parts)
    if not parts:
        return Fls()
    return parts[0] if len(parts) == 1 else Or(parts)


def exists(var, body):
    return Count(var, ">=", 1, body)


def walk(node):
    yield node
    for name in ("sub", "body", "lhs", "rhs"):
        child = getattr(node, name, None)
        if child is not None:
            yield from walk(child)
    for child in getattr(node, "parts", ()):
        yield from walk(child)


@dataclass(frozen=True)
class Formula:
    """A sentence together with its signature."""

    signature: Signature
    root: Node

    def __post_init__(self):
        _validate(self.root, self.signature)

    def over(self, signature):
        """The same sentence reinterpreted over a larger signature."""
        return Formula(signature, self.root)


def _validate(root, sig):
    unary = set(sig.unary)
    binary = set(sig.binary)
    for node in walk(root):
        for v in _vars_of(node):
            if v not in ("x", "y"):
                raise FormulaError(f"third variable {v!r}: only x and y are allowed")
        if isinstance(node, UnaryAtom) and node.pred not in unary:
            raise FormulaError(f"undeclared unary predicate {node.pred!r}")
        if isinstance(node, BinaryAtom) and node.pred not in binary:
            raise FormulaError(f"undeclared binary predicate {node.pred!r}")
        if isinstance(node, LessAtom) and not sig.has_order:
            raise FormulaError("order atom used but '<' not in signature")
        if isinstance(node, SuccAtom) and not sig.has_succ:
            raise FormulaError("successor atom used but '+1' not in signature")


def _vars_of(node):
    if isinstance(node, UnaryAtom):
        return (node.var,)
    if isinstance(node, (BinaryAtom, EqAtom, LessAtom, SuccAtom)):
        return (node.left, node.right)
    if isinstance(node, (Forall, Count)):
        return (node.var,)
    return ()


# --- Verdicts ---------------------------------------------------------------

@dataclass(frozen=True)
class Verdict:
    """Outcome of a satisfiability search: sat (with witness), unsat, or
    unknown (with reason).  Extra search data travels in `details`."""

    kind: str
    model: object = None
    reason: str = ""
    details: dict = field(default_factory=dict, compare=False)

    @staticmethod
    def sat(model, **details):
        return Verdict("sat", model=model, details=details)

    @staticmethod
    def unsat(**details):
        return Verdict("unsat", details=details)

    @staticmethod
    def unknown(reason, **details):
        return Verdict("unknown", reason=reason, details=details)

    @property
    def is_sat(self):
        return self.kind == "sat"

    @property
    def is_unsat(self):
        return self.kind == "unsat"

    @property
    def is_unknown(self):
        return self.kind == "unknown"


# --- Parser -----------------------------------------------------------------

_SYMBOLS = ("->", "(", ")", "[", "]", ".", ",", ";", "=", "<", ">", "&", "|", "!")


def _tokenize(text):
    tokens = []
    line, col = 1, 1
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "#":
            while i < len(text) and text[i] != "\n":
                i += 1
            continue
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("<=", i) or text.startswith(">=", i) or text.startswith("->", i):
            tokens.append((text[i : i + 2], line, col))
            i += 2
            col += 2
            continue
        if ch in "()[].,;=<>&|!":
            tokens.append((ch, line, col))
            i += 1
            col += 1
            continue
        if ch.isdigit():
            j = i
            while j < len(text) and text[j].isdigit():
                j += 1
            tokens.append((text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append((text[i:j], line, col))
            col += j - i
            i = j
            continue
        raise ParseError(f"unexpected character {ch!r}", line, col)
    tokens.append(("<eof>", line, col))
    return tokens


class _Parser:
    def __init__(self, text, signature=None):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.signature = signature

    def peek(self):
        return self.tokens[self.pos][0]

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, text):
        tok, line, col = self.next()
        if tok != text:
            raise ParseError(f"expected {text!r}, found {tok!r}", line, col)

    def error(self, message):
        _, line, col = self.tokens[self.pos]
        raise ParseError(message, line, col)

    def parse(self):
        if self.peek() in ("unary", "binary", "message", "order") or (
            self.peek() == "succ" and self.tokens[self.pos + 1][0] != "("
        ):
            self.signature = self._header()
        root = self._implies()
        if self.peek() != "<eof>":
            self.error(f"unexpected trailing input {self.peek()!r}")
        if self.signature is None:
            self.signature = _infer_signature(root)
        phi = Formula(self.signature, root)
        _check_sentence(root)
        return phi

    def _header(self):
        unary, binary, message = [], [], []
        has_order = False
        has_succ = False
        while True:
            tok = self.peek()
            if tok == "unary":
                self.next()
                unary.extend(self._names())
            elif tok == "binary":
                self.next()
                binary.extend(self._names())
            elif tok == "message":
                self.next()
                message.extend(self._names())
            elif tok == "order":
                self.next()
                has_order = True
            elif tok == "succ" and self.tokens[self.pos + 1][0] == ";":
                self.next()
                has_succ = True
            else:
                break
            self.expect(";")
        try:
            return Signature(tuple(unary), tuple(binary), tuple(message),
                             has_order, has_succ)
        except SignatureError as exc:
            self.error(str(exc))

    def _names(self):
        names = []
        while self.peek() not in (";", "<eof>"):
            tok, line, col = self.next()
            if not (tok[0].isalpha() or tok[0] == "_"):
                raise ParseError(f"bad predicate name {tok!r}", line, col)
            names.append(tok)
        return names

    def _implies(self):
        lhs = self._or()
        if self.peek() == "->":
            self.next()
            return Implies(lhs, self._implies())
        return lhs

    def _or(self):
        parts = [self._and()]
        while self.peek() == "|":
            self.next()
            parts.append(self._and())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def _and(self):
        parts = [self._unary()]
        while self.peek() == "&":
            self.next()
            parts.append(self._unary())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def _unary(self):
        tok = self.peek()
        if tok == "!":
            self.next()
            return Not(self._unary())
        if tok == "forall":
            self.next()
            var = self._variable()
            self.expect(".")
            return Forall(var, self._implies())
        if tok == "exists":
            self.next()
            cmp, bound = ">=", 1
            if self.peek() == "[":
                self.next()
                cmp_tok, line, col = self.next()
                if cmp_tok not in ("=", "<=", ">=", "<", ">"):
                    raise ParseError(f"bad counting operator {cmp_tok!r}", line, col)
                num, line, col = self.next()
                if not num.isdigit():
                    raise ParseError(f"expected a number, found {num!r}", line, col)
                cmp, bound = cmp_tok, int(num)
                self.expect("]")
            var = self._variable()
            self.expect(".")
            return Count(var, cmp, bound, self._implies())
        return self._atom()

    def _variable(self):
        tok, line, col = self.next()
        if tok in ("x", "y"):
            return tok
        if tok.isidentifier():
            raise ParseError(f"third variable {tok!r}: only x and y are allowed",
                             line, col)
        raise ParseError(f"expected a variable, found {tok!r}", line, col)

    def _atom(self):
        tok, line, col = self.next()
        if tok == "(":
            inner = self._implies()
            self.expect(")")
            return inner
        if tok == "true":
            return Tru()
        if tok == "false":
            return Fls()
        if tok in ("x", "y"):
            op, oline, ocol = self.next()
            if op not in ("=", "<"):
                raise ParseError(f"expected '=' or '<', found {op!r}", oline, ocol)
            rhs = self._variable()
            return EqAtom(tok, rhs) if op == "=" else LessAtom(tok, rhs)
        if tok == "succ":
            self.expect("(")
            left = self._variable()
            self.expect(",")
            right = self._variable()
            self.expect(")")
            return SuccAtom(left, right)
        if tok[0].isalpha() or tok[0] == "_":
            self.expect("(")
            left = self._variable()
            if self.peek() == ",":
                self.next()
                right = self._variable()
                self.expect(")")
                if self.signature is not None and tok not in self.signature.binary:
                    raise ParseError(f"undeclared binary predicate {tok!r}", line, col)
                return BinaryAtom(tok, left, right)
            self.expect(")")
            if self.signature is not None and tok not in self.signature.unary:
                raise ParseError(f"undeclared unary predicate {tok!r}", line, col)
            return UnaryAtom(tok, left)
        raise ParseError(f"unexpected token {tok!r}", line, col)


def _check_sentence(root, bound=frozenset()):
    if isinstance(root, (Forall, Count)):
        _check_sentence(root.body, bound | {root.var})
        return
    for v in _vars_of(root):
        if v not in bound:
            raise FormulaError(f"free variable {v!r}: sentences only")
    for name in ("sub", "lhs", "rhs"):
        child = getattr(root, name, None)
        if child is not None:
            _check_sentence(child, bound)
    for child in getattr(root, "parts", ()):
        _check_sentence(child, bound)


def _infer_signature(root):
    unary, binary = [], []
    for node in walk(root):
        if isinstance(node, UnaryAtom) and node.pred not in unary:
            unary.append(node.pred)
        elif isinstance(node, BinaryAtom) and node.pred not in binary:
            binary.append(node.pred)
    return Signature(tuple(sorted(unary)), tuple(sorted(binary)), (), True, True)


def parse(text, signature=None):
    """Parse formula source (optionally preceded by a signature header).

    Without a header the signature may be passed explicitly or is inferred
    from the atoms.  Errors carry line and column positions.
    """
    return _Parser(text, signature).parse()


# --- Pretty printer ---------------------------------------------------------

_PREC_IMPLIES, _PREC_OR, _PREC_AND, _PREC_UNARY = 0, 1, 2, 3


def _print_node(node, prec):
    if isinstance(node, Tru):
        return "true"
    if isinstance(node, Fls):
        return "false"
    if isinstance(node, UnaryAtom):
        return f"{node.pred}({node.var})"
    if isinstance(node, BinaryAtom):
        return f"{node.pred}({node.left},{node.right})"
    if isinstance(node, EqAtom):
        return f"{node.left} = {node.right}"
    if isinstance(node, LessAtom):
        return f"{node.left} < {node.right}"
    if isinstance(node, SuccAtom):
        return f"succ({node.left},{node.right})"
    if isinstance(node, Not):
        return "!" + _print_node(node.sub, _PREC_UNARY)
    if isinstance(node, And):
        body = " & ".join(_print_node(p, _PREC_AND) for p in node.parts)
        return f"({body})" if prec > _PREC_AND else body
    if isinstance(node, Or):
        body = " | ".join(_print_node(p, _PREC_OR) for p in node.parts)
        return f"({body})" if prec > _PREC_OR else body
    if isinstance(node, Implies):
        body = (_print_node(node.lhs, _PREC_OR + 1) + " -> "
                + _print_node(node.rhs, _PREC_IMPLIES))
        return f"({body})" if prec > _PREC_IMPLIES else body
    if isinstance(node, Forall):
        body = f"forall {node.var}. " + _print_node(node.body, _PREC_IMPLIES)
        return f"({body})" if prec > _PREC_IMPLIES else body
    if isinstance(node, Count):
        head = (f"exists {node.var}. " if (node.cmp, node.bound) == (">=", 1)
                else f"exists[{node.cmp} {node.bound}] {node.var}. ")
        body = head + _print_node(node.body, _PREC_IMPLIES)
        return f"({body})" if prec > _PREC_IMPLIES else body
    raise FormulaError(f"cannot print {node!r}")


def print_header(sig):
    parts = []
    if sig.unary:
        parts.append("unary " + " ".join(sig.unary) + ";")
    if sig.binary:
        parts.append("binary " + " ".join(sig.binary) + ";")
    if sig.message:
        parts.append("message " + " ".join(sig.message) + ";")
    if sig.has_order:
        parts.append("order;")
    if sig.has_succ:
        parts.append("succ;")
    return "\n".join(parts)


def to_text(phi, include_header=True):
    """Render a formula in the concrete grammar; parse() round-trips it."""
    body = _print_node(phi.root, _PREC_IMPLIES)
    if not include_header:
        return body
    header = print_header(phi.signature)
    return f"{header}\n{body}\n" if header else body + "\n"


# --- Semantics ---------------------------------------------------------------

def check(structure, phi):
    """Exact model checking: does the structure satisfy the sentence?

    Counting quantifiers are evaluated by literally counting satisfying
    partners.  Signatures must agree.
    """
    if structure.sig != phi.signature:
        raise SignatureError("signature mismatch between structure and formula")
    prog = _kernel.compile_formula(phi)
    n, unary, binary = _kernel.structure_tables(structure)
    return _kernel.check(prog, n, unary, binary)


def find_model_bounded(phi, n_max, budget=None):
    """Search all structures of size 1..n_max over phi's signature.

    Returns Verdict.sat with the lexicographically least model (bit order:
    size, unary labelling, binary tables), or Verdict.unknown; never unsat.
    The optional budget caps search effort (pruning-step count per size).
    """
    from .structure import Structure

    if n_max < 1:
        raise FormulaError("n_max must be at least 1")
    prog = _kernel.compile_formula(phi)
    for n in range(1, n_max + 1):
        status, unary, binary = _kernel.find_model(prog, n, budget)
        if status == _kernel.FOUND:
            model = Structure.from_kernel_tables(phi.signature, n, unary, binary)
            return Verdict.sat(model)
        if status == _kernel.BUDGET:
            return Verdict.unknown(f"search budget exhausted at size {n}")
    return Verdict.unknown(f"no model of size <= {n_max}")


def successor_axiom(s):
    """The sentence whose finite models are exactly those where the binary
    predicate s is the induced successor of the order.

    Three conjuncts: s is a subrelation of <; every non-greatest element has
    exactly one s-successor; every non-least element has exactly one
    s-predecessor.
    """
    sig = Signature(unary=(), binary=(s,), message=(), has_order=True, has_succ=False)
    c1 = Forall("x", Forall("y", Implies(BinaryAtom(s, "x", "y"), LessAtom("x", "y"))))
    c2 = Forall(
        "x",
        Or((
            Forall("y", Or((LessAtom("y", "x"), EqAtom("y", "x")))),
            Count("y", "=", 1, BinaryAtom(s, "x", "y")),
        )),
    )
    c3 = Forall(
        "y",
        Or((
            Forall("x", Or((LessAtom("y", "x"), EqAtom("y", "x")))),
            Count("x", "=", 1, BinaryAtom(s, "x", "y")),
        )),
    )
    return Formula(sig, And((c1, c2, c3)))
