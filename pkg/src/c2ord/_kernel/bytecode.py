"""Flat instruction programs for the structure-evaluation kernels.

Formulas are compiled once into a postorder array of instructions; both the
compiled kernel and the pure-Python twin interpret the same program format,
so they can be compared bit for bit.

Instruction layout (opcode, a, b, c, d):

    TRUE / FALSE                    no operands
    UNARY    a=pred b=var
    BINARY   a=pred b=var1 c=var2
    EQ/LESS/SUCC  a=var1 b=var2
    NOT      a=child
    AND/OR   a=kids-start b=kids-count
    IMPLIES  a=lhs b=rhs
    FORALL   a=var b=child
    COUNT    a=var b=child c=cmp d=bound   (cmp: 0 '<=', 1 '>=', 2 '=')

Variables are encoded as 0 (x) and 1 (y).  The distinguished order and
successor relations are never stored in structure tables; they are derived
from element indices.
"""

from dataclasses import dataclass

OP_TRUE = 0
OP_FALSE = 1
OP_UNARY = 2
OP_BINARY = 3
OP_EQ = 4
OP_LESS = 5
OP_SUCC = 6
OP_NOT = 7
OP_AND = 8
OP_OR = 9
OP_IMPLIES = 10
OP_FORALL = 11
OP_COUNT = 12

CMP_LE = 0
CMP_GE = 1
CMP_EQ = 2

MAX_N = 20
MAX_PREDS = 60
MAX_BOUND = 2**60


class CompileError(ValueError):
    pass


@dataclass(frozen=True)
class Program:
    """A compiled sentence: postorder ops, root last."""

    ops: tuple
    kids: tuple
    n_unary: int
    n_binary: int

    @property
    def root(self):
        return len(self.ops) - 1


def compile_formula(phi):
    """Compile a Formula (see c2ord.formula) into a Program.

    Raises CompileError on free variables or out-of-range counting bounds.
    """
    from .. import formula as F

    sig = phi.signature
    unary_index = {name: i for i, name in enumerate(sig.unary)}
    binary_index = {name: i for i, name in enumerate(sig.binary)}
    if len(unary_index) > MAX_PREDS or len(binary_index) > MAX_PREDS:
        raise CompileError("signature too large for the kernel")

    ops = []
    kids = []

    def var_code(v, bound):
        if v not in ("x", "y"):
            raise CompileError(f"unknown variable {v!r}")
        if v not in bound:
            raise CompileError(f"free variable {v!r}: only sentences can be evaluated")
        return 0 if v == "x" else 1

    def emit(op, a=0, b=0, c=0, d=0):
        ops.append((op, a, b, c, d))
        return len(ops) - 1

    def go(node, bound):
        if isinstance(node, F.Tru):
            return emit(OP_TRUE)
        if isinstance(node, F.Fls):
            return emit(OP_FALSE)
        if isinstance(node, F.UnaryAtom):
            return emit(OP_UNARY, unary_index[node.pred], var_code(node.var, bound))
        if isinstance(node, F.BinaryAtom):
            return emit(
                OP_BINARY,
                binary_index[node.pred],
                var_code(node.left, bound),
                var_code(node.right, bound),
            )
        if isinstance(node, F.EqAtom):
            return emit(OP_EQ, var_code(node.left, bound), var_code(node.right, bound))
        if isinstance(node, F.LessAtom):
            return emit(OP_LESS, var_code(node.left, bound), var_code(node.right, bound))
        if isinstance(node, F.SuccAtom):
            return emit(OP_SUCC, var_code(node.left, bound), var_code(node.right, bound))
        if isinstance(node, F.Not):
            return emit(OP_NOT, go(node.sub, bound))
        if isinstance(node, (F.And, F.Or)):
            idxs = [go(p, bound) for p in node.parts]
            start = len(kids)
            kids.extend(idxs)
            op = OP_AND if isinstance(node, F.And) else OP_OR
            return emit(op, start, len(idxs))
        if isinstance(node, F.Implies):
            lhs = go(node.lhs, bound)
            rhs = go(node.rhs, bound)
            return emit(OP_IMPLIES, lhs, rhs)
        if isinstance(node, F.Forall):
            child = go(node.body, bound | {node.var})
            return emit(OP_FORALL, 0 if node.var == "x" else 1, child)
        if isinstance(node, F.Count):
            child = go(node.body, bound | {node.var})
            cmp_code, bnd = _normalize_count(node.cmp, node.bound)
            if bnd is False:
                return emit(OP_FALSE)
            if bnd is True:
                return emit(OP_TRUE)
            if bnd > MAX_BOUND:
                raise CompileError(f"counting bound {node.bound} exceeds kernel range")
            return emit(OP_COUNT, 0 if node.var == "x" else 1, child, cmp_code, bnd)
        raise CompileError(f"cannot compile node {node!r}")

    go(phi.root, frozenset())
    return Program(tuple(ops), tuple(kids), len(sig.unary), len(sig.binary))


def _normalize_count(cmp, bound):
    """Map the five comparison forms onto <=, >= and = with adjusted bounds.

    Returns (cmp_code, bound), or (None, True/False) for trivial cases.
    """
    if bound < 0:
        raise CompileError("negative counting bound")
    if cmp == "<":
        cmp, bound = "<=", bound - 1
    elif cmp == ">":
        cmp, bound = ">=", bound + 1
    if cmp == "<=":
        if bound < 0:
            return None, False
        return CMP_LE, bound
    if cmp == ">=":
        if bound == 0:
            return None, True
        return CMP_GE, bound
    if cmp == "=":
        return CMP_EQ, bound
    raise CompileError(f"unknown counting comparison {cmp!r}")


def structure_tables(structure):
    """Encode a structure for the kernels.

    Returns (n, unary_masks, binary_bytes) where unary_masks[i] has bit p set
    iff unary predicate p holds at element i, and binary_bytes is the
    row-major concatenation of the n*n tables of the non-distinguished binary
    predicates in declaration order (self pairs included).
    """
    sig = structure.sig
    n = structure.n
    if n > MAX_N:
        raise CompileError(f"structure size {n} exceeds kernel limit {MAX_N}")
    unary_pos = {name: i for i, name in enumerate(sig.unary)}
    masks = []
    for i in range(n):
        m = 0
        for name in structure.unary[i]:
            m |= 1 << unary_pos[name]
        masks.append(m)
    table = bytearray(len(sig.binary) * n * n)
    for p, name in enumerate(sig.binary):
        base = p * n * n
        for (i, j) in structure.binary.get(name, ()):
            table[base + i * n + j] = 1
    return n, masks, bytes(table)
