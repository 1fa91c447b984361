"""Pure-Python twin of the compiled evaluation kernel.

Selected at import time when the extension is unavailable (or when
C2ORD_FORCE_FALLBACK is set).  Semantics must match _speedups exactly; the
test suite compares the two backends instruction for instruction.
"""

from .bytecode import (
    CMP_EQ,
    CMP_GE,
    CMP_LE,
    OP_AND,
    OP_BINARY,
    OP_COUNT,
    OP_EQ,
    OP_FALSE,
    OP_FORALL,
    OP_IMPLIES,
    OP_LESS,
    OP_NOT,
    OP_OR,
    OP_SUCC,
    OP_TRUE,
    OP_UNARY,
)

FOUND = 1
EXHAUSTED = 0
BUDGET = 2

TRI_FALSE = 0
TRI_TRUE = 1
TRI_UNKNOWN = 2


def _eval(prog, idx, n, unary, binary, a, b):
    op, p, q, r, s = prog.ops[idx]
    if op == OP_TRUE:
        return True
    if op == OP_FALSE:
        return False
    if op == OP_UNARY:
        e = a if q == 0 else b
        return bool((unary[e] >> p) & 1)
    if op == OP_BINARY:
        i = a if q == 0 else b
        j = a if r == 0 else b
        return binary[p * n * n + i * n + j] != 0
    if op == OP_EQ:
        return (a if p == 0 else b) == (a if q == 0 else b)
    if op == OP_LESS:
        return (a if p == 0 else b) < (a if q == 0 else b)
    if op == OP_SUCC:
        return (a if q == 0 else b) == (a if p == 0 else b) + 1
    if op == OP_NOT:
        return not _eval(prog, p, n, unary, binary, a, b)
    if op == OP_AND:
        return all(
            _eval(prog, prog.kids[p + i], n, unary, binary, a, b) for i in range(q)
        )
    if op == OP_OR:
        return any(
            _eval(prog, prog.kids[p + i], n, unary, binary, a, b) for i in range(q)
        )
    if op == OP_IMPLIES:
        if not _eval(prog, p, n, unary, binary, a, b):
            return True
        return _eval(prog, q, n, unary, binary, a, b)
    if op == OP_FORALL:
        for v in range(n):
            aa, bb = (v, b) if p == 0 else (a, v)
            if not _eval(prog, q, n, unary, binary, aa, bb):
                return False
        return True
    if op == OP_COUNT:
        k = min(s, n + 1)
        cnt = 0
        for v in range(n):
            aa, bb = (v, b) if p == 0 else (a, v)
            if _eval(prog, q, n, unary, binary, aa, bb):
                cnt += 1
                if r == CMP_GE and cnt >= k:
                    return True
                if r != CMP_GE and cnt > k:
                    return False
        if r == CMP_GE:
            return cnt >= k
        if r == CMP_LE:
            return cnt <= k
        return cnt == k
    raise AssertionError(f"bad opcode {op}")


def check(prog, n, unary, binary):
    """Evaluate a compiled sentence over an explicit structure."""
    return _eval(prog, prog.root, n, unary, binary, -1, -1)


def _eval3(prog, idx, n, unary, uknown, binary, bknown, a, b):
    op, p, q, r, s = prog.ops[idx]
    if op == OP_TRUE:
        return TRI_TRUE
    if op == OP_FALSE:
        return TRI_FALSE
    if op == OP_UNARY:
        e = a if q == 0 else b
        if not (uknown[e] >> p) & 1:
            return TRI_UNKNOWN
        return (unary[e] >> p) & 1
    if op == OP_BINARY:
        i = a if q == 0 else b
        j = a if r == 0 else b
        pos = p * n * n + i * n + j
        if not bknown[pos]:
            return TRI_UNKNOWN
        return 1 if binary[pos] else 0
    if op == OP_EQ:
        return 1 if (a if p == 0 else b) == (a if q == 0 else b) else 0
    if op == OP_LESS:
        return 1 if (a if p == 0 else b) < (a if q == 0 else b) else 0
    if op == OP_SUCC:
        return 1 if (a if q == 0 else b) == (a if p == 0 else b) + 1 else 0
    if op == OP_NOT:
        v = _eval3(prog, p, n, unary, uknown, binary, bknown, a, b)
        return v if v == TRI_UNKNOWN else 1 - v
    if op == OP_AND or op == OP_FORALL or op == OP_OR or op == OP_IMPLIES:
        if op == OP_AND:
            vals = (
                _eval3(prog, prog.kids[p + i], n, unary, uknown, binary, bknown, a, b)
                for i in range(q)
            )
            neutral, killer = TRI_TRUE, TRI_FALSE
        elif op == OP_OR:
            vals = (
                _eval3(prog, prog.kids[p + i], n, unary, uknown, binary, bknown, a, b)
                for i in range(q)
            )
            neutral, killer = TRI_FALSE, TRI_TRUE
        elif op == OP_FORALL:
            vals = (
                _eval3(
                    prog, q, n, unary, uknown, binary, bknown,
                    *((v, b) if p == 0 else (a, v)),
                )
                for v in range(n)
            )
            neutral, killer = TRI_TRUE, TRI_FALSE
        else:  # IMPLIES == OR(NOT lhs, rhs)
            lv = _eval3(prog, p, n, unary, uknown, binary, bknown, a, b)
            lv = lv if lv == TRI_UNKNOWN else 1 - lv
            rv = _eval3(prog, q, n, unary, uknown, binary, bknown, a, b)
            vals = (lv, rv)
            neutral, killer = TRI_FALSE, TRI_TRUE
        seen_unknown = False
        for v in vals:
            if v == killer:
                return killer
            if v == TRI_UNKNOWN:
                seen_unknown = True
        return TRI_UNKNOWN if seen_unknown else neutral
    if op == OP_COUNT:
        k = min(s, n + 1)
        cnt_true = 0
        cnt_unknown = 0
        for v in range(n):
            aa, bb = (v, b) if p == 0 else (a, v)
            tv = _eval3(prog, q, n, unary, uknown, binary, bknown, aa, bb)
            if tv == TRI_TRUE:
                cnt_true += 1
            elif tv == TRI_UNKNOWN:
                cnt_unknown += 1
        lo, hi = cnt_true, cnt_true + cnt_unknown
        if r == CMP_GE:
            if lo >= k:
                return TRI_TRUE
            if hi < k:
                return TRI_FALSE
            return TRI_UNKNOWN
        if r == CMP_LE:
            if hi <= k:
                return TRI_TRUE
            if lo > k:
                return TRI_FALSE
            return TRI_UNKNOWN
        if lo > k or hi < k:
            return TRI_FALSE
        if lo == k and hi == k:
            return TRI_TRUE
        return TRI_UNKNOWN
    raise AssertionError(f"bad opcode {op}")


def check3(prog, n, unary, uknown, binary, bknown):
    """Three-valued evaluation over a partially determined structure."""
    return _eval3(prog, prog.root, n, unary, uknown, binary, bknown, -1, -1)


def find_model(prog, n, budget=None):
    """Depth-first search for the lexicographically least model of size n.

    Bit order: unary flags element-major/predicate-minor, then binary tables
    predicate-major in row-major pair order; absent (0) sorts before present.
    Subtrees are pruned when the partial assignment already falsifies the
    sentence, which never skips a model.

    Returns (status, unary_masks, binary_bytes); status is FOUND, EXHAUSTED
    or BUDGET.
    """
    nu, nb = prog.n_unary, prog.n_binary
    total_bits = n * nu + nb * n * n
    unary = [0] * n
    uknown = [0] * n
    binary = bytearray(nb * n * n)
    bknown = bytearray(nb * n * n)
    spent = 0

    def set_bit(pos, value):
        if pos < n * nu:
            e, p = divmod(pos, nu)
            if value:
                unary[e] |= 1 << p
            else:
                unary[e] &= ~(1 << p)
            uknown[e] |= 1 << p
        else:
            off = pos - n * nu
            binary[off] = 1 if value else 0
            bknown[off] = 1

    def clear_bit(pos):
        if pos < n * nu:
            e, p = divmod(pos, nu)
            uknown[e] &= ~(1 << p)
        else:
            bknown[pos - n * nu] = 0

    def dfs(pos):
        nonlocal spent
        if budget is not None and spent >= budget:
            return BUDGET
        spent += 1
        v = check3(prog, n, unary, uknown, binary, bknown)
        if v == TRI_FALSE:
            return EXHAUSTED
        if pos == total_bits:
            return FOUND if v == TRI_TRUE else EXHAUSTED
        for value in (0, 1):
            set_bit(pos, value)
            st = dfs(pos + 1)
            if st != EXHAUSTED:
                return st
            clear_bit(pos)
        return EXHAUSTED

    st = dfs(0)
    if st == FOUND:
        return FOUND, unary, bytes(binary)
    return st, None, None


def sweep_succ_equiv(prog, n, s_index, unary_masks_list):
    """Exhaustive agreement sweep for the successor-defining sentence.

    For every table of the binary predicate s_index (all 2^(n*n) of them) and
    every unary labelling in unary_masks_list, compares check() with the
    direct test "s equals the induced successor relation" (computed from the
    table alone, independently of the evaluator).

    Returns (checked, counterexample) where counterexample is None or a
    (unary_masks, binary_bytes) pair.
    """
    nn = n * n
    succ_positions = [i * n + (i + 1) for i in range(n - 1)]
    binary = bytearray(prog.n_binary * nn)
    base = s_index * nn
    checked = 0
    for code in range(1 << nn):
        for pos in range(nn):
            binary[base + pos] = (code >> pos) & 1
        is_succ = all(binary[base + p] for p in succ_positions) and (
            sum(binary[base : base + nn]) == n - 1
        )
        for masks in unary_masks_list:
            ok = check(prog, n, masks, binary)
            checked += 1
            if ok != is_succ:
                return checked, (list(masks), bytes(binary))
    return checked, None
