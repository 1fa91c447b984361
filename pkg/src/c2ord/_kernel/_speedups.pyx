# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled evaluation kernel.

Mirrors fallback.py exactly; see that module for the semantics.  The hot
paths are brute-force model search and the exhaustive agreement sweep, both
of which run entirely at C level once a program has been loaded.
"""

from libc.stdlib cimport calloc, free, malloc
from libc.stdint cimport int64_t, uint64_t

DEF OP_TRUE = 0
DEF OP_FALSE = 1
DEF OP_UNARY = 2
DEF OP_BINARY = 3
DEF OP_EQ = 4
DEF OP_LESS = 5
DEF OP_SUCC = 6
DEF OP_NOT = 7
DEF OP_AND = 8
DEF OP_OR = 9
DEF OP_IMPLIES = 10
DEF OP_FORALL = 11
DEF OP_COUNT = 12

DEF CMP_LE = 0
DEF CMP_GE = 1
DEF CMP_EQ = 2

FOUND = 1
EXHAUSTED = 0
BUDGET = 2

TRI_FALSE = 0
TRI_TRUE = 1
TRI_UNKNOWN = 2


cdef struct Prog:
    int nops
    int64_t *op
    int64_t *a
    int64_t *b
    int64_t *c
    int64_t *d
    int64_t *kids
    int n_unary
    int n_binary
    int root


cdef int _load(object prog, Prog *P) except -1:
    cdef int i
    ops = prog.ops
    kids = prog.kids
    P.nops = len(ops)
    P.op = <int64_t *> malloc(P.nops * 5 * sizeof(int64_t))
    if P.op == NULL:
        raise MemoryError()
    P.a = P.op + P.nops
    P.b = P.op + 2 * P.nops
    P.c = P.op + 3 * P.nops
    P.d = P.op + 4 * P.nops
    for i in range(P.nops):
        row = ops[i]
        P.op[i] = row[0]
        P.a[i] = row[1]
        P.b[i] = row[2]
        P.c[i] = row[3]
        P.d[i] = row[4]
    P.kids = <int64_t *> malloc((len(kids) + 1) * sizeof(int64_t))
    if P.kids == NULL:
        free(P.op)
        P.op = NULL
        raise MemoryError()
    for i in range(len(kids)):
        P.kids[i] = kids[i]
    P.n_unary = prog.n_unary
    P.n_binary = prog.n_binary
    P.root = P.nops - 1
    return 0


cdef void _unload(Prog *P):
    if P.op != NULL:
        free(P.op)
        P.op = NULL
    if P.kids != NULL:
        free(P.kids)
        P.kids = NULL


cdef int _eval(Prog *P, int idx, int n, uint64_t *unary,
               unsigned char *binary, int a, int b) noexcept nogil:
    cdef int op = <int> P.op[idx]
    cdef int p = <int> P.a[idx]
    cdef int q = <int> P.b[idx]
    cdef int r = <int> P.c[idx]
    cdef int64_t s = P.d[idx]
    cdef int i, j, v, aa, bb, cnt
    cdef int64_t k
    if op == OP_TRUE:
        return 1
    if op == OP_FALSE:
        return 0
    if op == OP_UNARY:
        i = a if q == 0 else b
        return <int> ((unary[i] >> p) & 1)
    if op == OP_BINARY:
        i = a if q == 0 else b
        j = a if r == 0 else b
        return 1 if binary[p * n * n + i * n + j] != 0 else 0
    if op == OP_EQ:
        return 1 if (a if p == 0 else b) == (a if q == 0 else b) else 0
    if op == OP_LESS:
        return 1 if (a if p == 0 else b) < (a if q == 0 else b) else 0
    if op == OP_SUCC:
        return 1 if (a if q == 0 else b) == (a if p == 0 else b) + 1 else 0
    if op == OP_NOT:
        return 1 - _eval(P, p, n, unary, binary, a, b)
    if op == OP_AND:
        for i in range(q):
            if not _eval(P, <int> P.kids[p + i], n, unary, binary, a, b):
                return 0
        return 1
    if op == OP_OR:
        for i in range(q):
            if _eval(P, <int> P.kids[p + i], n, unary, binary, a, b):
                return 1
        return 0
    if op == OP_IMPLIES:
        if not _eval(P, p, n, unary, binary, a, b):
            return 1
        return _eval(P, q, n, unary, binary, a, b)
    if op == OP_FORALL:
        for v in range(n):
            if p == 0:
                aa = v; bb = b
            else:
                aa = a; bb = v
            if not _eval(P, q, n, unary, binary, aa, bb):
                return 0
        return 1
    # OP_COUNT
    k = s if s < n + 1 else n + 1
    cnt = 0
    for v in range(n):
        if p == 0:
            aa = v; bb = b
        else:
            aa = a; bb = v
        if _eval(P, q, n, unary, binary, aa, bb):
            cnt += 1
            if r == CMP_GE and cnt >= k:
                return 1
            if r != CMP_GE and cnt > k:
                return 0
    if r == CMP_GE:
        return 1 if cnt >= k else 0
    if r == CMP_LE:
        return 1 if cnt <= k else 0
    return 1 if cnt == k else 0


cdef int _eval3(Prog *P, int idx, int n, uint64_t *unary, uint64_t *uknown,
                unsigned char *binary, unsigned char *bknown,
                int a, int b) noexcept nogil:
    cdef int op = <int> P.op[idx]
    cdef int p = <int> P.a[idx]
    cdef int q = <int> P.b[idx]
    cdef int r = <int> P.c[idx]
    cdef int64_t s = P.d[idx]
    cdef int i, j, v, aa, bb, pos, tv, lv, rv
    cdef int seen_unknown, cnt_true, cnt_unknown
    cdef int64_t k, lo, hi
    if op == OP_TRUE:
        return 1
    if op == OP_FALSE:
        return 0
    if op == OP_UNARY:
        i = a if q == 0 else b
        if not (uknown[i] >> p) & 1:
            return 2
        return <int> ((unary[i] >> p) & 1)
    if op == OP_BINARY:
        i = a if q == 0 else b
        j = a if r == 0 else b
        pos = p * n * n + i * n + j
        if not bknown[pos]:
            return 2
        return 1 if binary[pos] else 0
    if op == OP_EQ:
        return 1 if (a if p == 0 else b) == (a if q == 0 else b) else 0
    if op == OP_LESS:
        return 1 if (a if p == 0 else b) < (a if q == 0 else b) else 0
    if op == OP_SUCC:
        return 1 if (a if q == 0 else b) == (a if p == 0 else b) + 1 else 0
    if op == OP_NOT:
        tv = _eval3(P, p, n, unary, uknown, binary, bknown, a, b)
        return tv if tv == 2 else 1 - tv
    if op == OP_AND:
        seen_unknown = 0
        for i in range(q):
            tv = _eval3(P, <int> P.kids[p + i], n, unary, uknown, binary, bknown, a, b)
            if tv == 0:
                return 0
            if tv == 2:
                seen_unknown = 1
        return 2 if seen_unknown else 1
    if op == OP_OR:
        seen_unknown = 0
        for i in range(q):
            tv = _eval3(P, <int> P.kids[p + i], n, unary, uknown, binary, bknown, a, b)
            if tv == 1:
                return 1
            if tv == 2:
                seen_unknown = 1
        return 2 if seen_unknown else 0
    if op == OP_IMPLIES:
        lv = _eval3(P, p, n, unary, uknown, binary, bknown, a, b)
        if lv != 2:
            lv = 1 - lv
        if lv == 1:
            return 1
        rv = _eval3(P, q, n, unary, uknown, binary, bknown, a, b)
        if rv == 1:
            return 1
        if lv == 2 or rv == 2:
            return 2
        return 0
    if op == OP_FORALL:
        seen_unknown = 0
        for v in range(n):
            if p == 0:
                aa = v; bb = b
            else:
                aa = a; bb = v
            tv = _eval3(P, q, n, unary, uknown, binary, bknown, aa, bb)
            if tv == 0:
                return 0
            if tv == 2:
                seen_unknown = 1
        return 2 if seen_unknown else 1
    # OP_COUNT
    k = s if s < n + 1 else n + 1
    cnt_true = 0
    cnt_unknown = 0
    for v in range(n):
        if p == 0:
            aa = v; bb = b
        else:
            aa = a; bb = v
        tv = _eval3(P, q, n, unary, uknown, binary, bknown, aa, bb)
        if tv == 1:
            cnt_true += 1
        elif tv == 2:
            cnt_unknown += 1
    lo = cnt_true
    hi = cnt_true + cnt_unknown
    if r == CMP_GE:
        if lo >= k:
            return 1
        if hi < k:
            return 0
        return 2
    if r == CMP_LE:
        if hi <= k:
            return 1
        if lo > k:
            return 0
        return 2
    if lo > k or hi < k:
        return 0
    if lo == k and hi == k:
        return 1
    return 2


def check(prog, int n, unary, binary):
    """Evaluate a compiled sentence over an explicit structure."""
    cdef Prog P
    P.op = NULL
    P.kids = NULL
    _load(prog, &P)
    cdef uint64_t *um = <uint64_t *> malloc(max(n, 1) * sizeof(uint64_t))
    cdef int i
    cdef int result
    cdef const unsigned char[:] bview = binary if len(binary) else b"\x00"
    try:
        if um == NULL:
            raise MemoryError()
        for i in range(n):
            um[i] = unary[i]
        result = _eval(&P, P.root, n, um, <unsigned char *> &bview[0], -1, -1)
    finally:
        if um != NULL:
            free(um)
        _unload(&P)
    return bool(result)


def check3(prog, int n, unary, uknown, binary, bknown):
    """Three-valued evaluation over a partially determined structure."""
    cdef Prog P
    P.op = NULL
    P.kids = NULL
    _load(prog, &P)
    cdef uint64_t *um = <uint64_t *> malloc(2 * max(n, 1) * sizeof(uint64_t))
    cdef int i, result
    cdef const unsigned char[:] bview = binary if len(binary) else b"\x00"
    cdef const unsigned char[:] kview = bknown if len(bknown) else b"\x00"
    try:
        if um == NULL:
            raise MemoryError()
        for i in range(n):
            um[i] = unary[i]
            um[n + i] = uknown[i]
        result = _eval3(&P, P.root, n, um, um + n,
                        <unsigned char *> &bview[0],
                        <unsigned char *> &kview[0], -1, -1)
    finally:
        if um != NULL:
            free(um)
        _unload(&P)
    return result


cdef struct Search:
    Prog *P
    int n
    int nu
    int nb
    int total_bits
    uint64_t *unary
    uint64_t *uknown
    unsigned char *binary
    unsigned char *bknown
    int64_t budget
    int64_t spent


cdef int _dfs(Search *S, int pos) noexcept nogil:
    cdef int v, value, st, e, p, off
    if S.budget >= 0 and S.spent >= S.budget:
        return 2
    S.spent += 1
    v = _eval3(S.P, S.P.root, S.n, S.unary, S.uknown, S.binary, S.bknown, -1, -1)
    if v == 0:
        return 0
    if pos == S.total_bits:
        return 1 if v == 1 else 0
    for value in range(2):
        if pos < S.n * S.nu:
            e = pos // S.nu
            p = pos % S.nu
            if value:
                S.unary[e] |= (<uint64_t> 1) << p
            else:
                S.unary[e] &= ~((<uint64_t> 1) << p)
            S.uknown[e] |= (<uint64_t> 1) << p
        else:
            off = pos - S.n * S.nu
            S.binary[off] = value
            S.bknown[off] = 1
        st = _dfs(S, pos + 1)
        if st != 0:
            return st
        if pos < S.n * S.nu:
            e = pos // S.nu
            p = pos % S.nu
            S.uknown[e] &= ~((<uint64_t> 1) << p)
        else:
            S.bknown[pos - S.n * S.nu] = 0
    return 0


def find_model(prog, int n, budget=None):
    """DFS for the lexicographically least model of size n (see fallback)."""
    cdef Prog P
    P.op = NULL
    P.kids = NULL
    _load(prog, &P)
    cdef Search S
    cdef int nn = n * n
    cdef int st, i
    S.P = &P
    S.n = n
    S.nu = P.n_unary
    S.nb = P.n_binary
    S.total_bits = n * S.nu + S.nb * nn
    S.unary = <uint64_t *> calloc(max(n, 1), sizeof(uint64_t))
    S.uknown = <uint64_t *> calloc(max(n, 1), sizeof(uint64_t))
    S.binary = <unsigned char *> calloc(max(S.nb * nn, 1), 1)
    S.bknown = <unsigned char *> calloc(max(S.nb * nn, 1), 1)
    S.budget = -1 if budget is None else <int64_t> budget
    S.spent = 0
    try:
        if S.unary == NULL or S.uknown == NULL or S.binary == NULL or S.bknown == NULL:
            raise MemoryError()
        st = _dfs(&S, 0)
        if st == 1:
            masks = [int(S.unary[i]) for i in range(n)]
            table = bytes([S.binary[i] for i in range(S.nb * nn)])
            return FOUND, masks, table
        return (BUDGET if st == 2 else EXHAUSTED), None, None
    finally:
        if S.unary != NULL:
            free(S.unary)
        if S.uknown != NULL:
            free(S.uknown)
        if S.binary != NULL:
            free(S.binary)
        if S.bknown != NULL:
            free(S.bknown)
        _unload(&P)


def sweep_succ_equiv(prog, int n, int s_index, unary_masks_list):
    """Exhaustive successor-agreement sweep (see fallback for the contract)."""
    cdef Prog P
    P.op = NULL
    P.kids = NULL
    _load(prog, &P)
    cdef int nn = n * n
    cdef int nb = prog.n_binary
    cdef int nmasks = len(unary_masks_list)
    cdef unsigned char *binary = <unsigned char *> calloc(max(nb * nn, 1), 1)
    cdef uint64_t *masks = <uint64_t *> malloc(max(nmasks * max(n, 1), 1) * sizeof(uint64_t))
    cdef int64_t checked = 0
    cdef uint64_t code, top
    cdef int pos, i, m, ok, is_succ, popcnt
    cdef int base = s_index * nn
    fail = None
    try:
        if binary == NULL or masks == NULL:
            raise MemoryError()
        for m in range(nmasks):
            row = unary_masks_list[m]
            for i in range(n):
                masks[m * n + i] = row[i]
        top = (<uint64_t> 1) << nn
        code = 0
        while code < top:
            popcnt = 0
            for pos in range(nn):
                binary[base + pos] = <unsigned char> ((code >> pos) & 1)
                popcnt += binary[base + pos]
            is_succ = 1 if popcnt == n - 1 else 0
            if is_succ:
                for i in range(n - 1):
                    if not binary[base + i * n + (i + 1)]:
                        is_succ = 0
                        break
            for m in range(nmasks):
                ok = _eval(&P, P.root, n, masks + m * n, binary, -1, -1)
                checked += 1
                if ok != is_succ:
                    fail = (
                        [int(masks[m * n + i]) for i in range(n)],
                        bytes([binary[i] for i in range(nb * nn)]),
                    )
                    return int(checked), fail
            code += 1
        return int(checked), None
    finally:
        if binary != NULL:
            free(binary)
        if masks != NULL:
            free(masks)
