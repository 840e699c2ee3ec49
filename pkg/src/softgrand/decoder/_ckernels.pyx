# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled decoding kernels.

Same contract as :mod:`softgrand.decoder._pykernels`; the two must agree on
every returned field, including the operation counters.
"""
import numpy as np

from libc.stdint cimport int64_t, uint64_t, uint8_t
from libc.stdlib cimport free, malloc, realloc
from libc.string cimport memcpy, memset

from softgrand.errors import ConfigurationError
from softgrand.decoder.sources import MAX_DP_CELLS

NAME = "cython"


cdef extern from *:
    int __builtin_ctzll(unsigned long long x) nogil


cdef inline int64_t _charge(const uint64_t* syn, Py_ssize_t W, const int64_t* rwc,
                            Py_ssize_t r) noexcept nogil:
    cdef Py_ssize_t t
    for t in range(W):
        if syn[t]:
            return rwc[64 * t + __builtin_ctzll(syn[t])]
    return rwc[r - 1] if r > 0 else 0


cdef inline bint _is_zero(const uint64_t* syn, Py_ssize_t W) noexcept nogil:
    cdef Py_ssize_t t
    for t in range(W):
        if syn[t]:
            return False
    return True


cdef inline void _xor(uint64_t* dst, const uint64_t* src, Py_ssize_t W) noexcept nogil:
    cdef Py_ssize_t t
    for t in range(W):
        dst[t] ^= src[t]


cdef object _unpack(const uint64_t* pat, Py_ssize_t m):
    out = np.zeros(m, dtype=np.uint8)
    cdef uint8_t[::1] view = out
    cdef Py_ssize_t i
    for i in range(m):
        if (pat[i >> 6] >> (i & 63)) & 1:
            view[i] = 1
    return out


cdef class DPTable:
    """Subset-sum table stored column by column; filled lazily and reusable."""

    cdef public tuple weights
    cdef public Py_ssize_t capacity
    cdef public Py_ssize_t filled
    cdef public long long cells_filled
    cdef uint8_t[:, ::1] cells
    cdef int64_t[::1] w

    def __init__(self, weights, Py_ssize_t capacity):
        self.weights = tuple(int(x) for x in weights)
        if any(x < 1 for x in self.weights):
            raise ConfigurationError("weights must be positive integers")
        if capacity < 0:
            raise ValueError("capacity must be >= 0")
        if len(self.weights) * (capacity + 1) > MAX_DP_CELLS:
            raise ConfigurationError(f"s_max={capacity} exceeds the DP table capacity for n={len(self.weights)}")
        self.capacity = capacity
        self.w = np.asarray(self.weights, dtype=np.int64)
        self.cells = np.zeros((capacity + 1, len(self.weights)), dtype=np.uint8)
        self.filled = 1
        self.cells_filled = 0

    cdef void fill(self, Py_ssize_t s) noexcept nogil:
        cdef Py_ssize_t n = self.w.shape[0]
        cdef Py_ssize_t t, i
        cdef int64_t wi
        cdef uint8_t bit, prev
        while self.filled <= s:
            t = self.filled
            prev = 0
            for i in range(n):
                wi = self.w[i]
                bit = prev or wi == t
                if not bit and t - wi >= 0 and i > 0:
                    bit = self.cells[t - wi, i - 1]
                self.cells[t, i] = bit
                prev = bit
            self.filled += 1
            self.cells_filled += n

    def lookup(self, Py_ssize_t i, Py_ssize_t s):
        self.fill(s)
        return bool(self.cells[s, i])


def new_table(weights, Py_ssize_t capacity):
    return DPTable(weights, capacity)


def dsgrand(const uint64_t[:, ::1] cols, const uint64_t[::1] s0, const int64_t[::1] w,
            Py_ssize_t smax, long long budget, const int64_t[::1] rwc, DPTable table=None):
    cdef Py_ssize_t n = cols.shape[0]
    cdef Py_ssize_t W = cols.shape[1]
    cdef Py_ssize_t PW = (n + 63) // 64
    cdef Py_ssize_t r = rwc.shape[0]
    if w.shape[0] != n:
        raise ValueError("weights and columns disagree on n")
    if table is None:
        table = DPTable(np.asarray(w), smax)
    elif table.w.shape[0] != n or table.capacity < smax:
        raise ValueError("DP table does not match this block")
    cdef long long cells0 = table.cells_filled
    cdef Py_ssize_t cap = n + 2
    cdef Py_ssize_t* fi = <Py_ssize_t*> malloc(cap * sizeof(Py_ssize_t))
    cdef int64_t* fj = <int64_t*> malloc(cap * sizeof(int64_t))
    cdef int64_t* fd = <int64_t*> malloc(cap * sizeof(int64_t))
    cdef uint64_t* pat = <uint64_t*> malloc(cap * PW * sizeof(uint64_t) + 8)
    cdef uint64_t* syn = <uint64_t*> malloc(cap * W * sizeof(uint64_t) + 8)
    cdef uint64_t* base = <uint64_t*> malloc(W * sizeof(uint64_t) + 8)
    if not (fi and fj and fd and pat and syn and base):
        free(fi); free(fj); free(fd); free(pat); free(syn); free(base)
        raise MemoryError()

    cdef long long n_p = 1, comparisons = 0, copies = 0
    cdef Py_ssize_t max_stack = 0, top = 0, t, i, s = 0
    cdef int64_t j, d, wi
    cdef int64_t bitops = 0
    cdef bint found = False, ex, inc, done = False
    cdef int64_t score = -1
    cdef Py_ssize_t hit = -1
    cdef uint64_t* ps
    cdef uint64_t* ss
    cdef Py_ssize_t r_
    cdef const int64_t* rp = &rwc[0] if r > 0 else NULL

    for t in range(W):
        base[t] = s0[t]
    with nogil:
        bitops = _charge(base, W, rp, r)
        if _is_zero(base, W):
            found = True
            score = 0
            done = True
        while not done:
            if top == 0:
                # advance to the next reachable score
                while True:
                    s += 1
                    if s > smax:
                        done = True
                        break
                    table.fill(s)
                    if table.cells[s, n - 1]:
                        break
                if done:
                    break
                memset(pat, 0, PW * sizeof(uint64_t))
                pat[(n - 1) >> 6] = (<uint64_t> 1) << ((n - 1) & 63)
                for t in range(W):
                    syn[t] = base[t] ^ cols[n - 1, t]
                fi[0] = n - 1
                fj[0] = s
                fd[0] = s - w[n - 1]
                top = 1
                if top > max_stack:
                    max_stack = top
            top -= 1
            t = top
            i = fi[t]
            j = fj[t]
            d = fd[t]
            comparisons += 1
            if d == 0:
                if n_p >= budget:
                    break
                n_p += 1
                ss = syn + t * W
                bitops += _charge(ss, W, rp, r)
                if _is_zero(ss, W):
                    found = True
                    score = s
                    hit = t
                    break
            if i == 0:
                continue
            wi = w[i]
            comparisons += 1
            ex = table.cells[j, i - 1]
            inc = False
            if j - wi >= 0:
                comparisons += 1
                inc = table.cells[j - wi, i - 1]
            ps = pat + t * PW
            ss = syn + t * W
            if ex and inc:
                copies += 1
                memcpy(pat + (t + 1) * PW, ps, PW * sizeof(uint64_t))
                memcpy(syn + (t + 1) * W, ss, W * sizeof(uint64_t))
            if ex:
                ps[i >> 6] ^= (<uint64_t> 1) << (i & 63)
                ps[(i - 1) >> 6] ^= (<uint64_t> 1) << ((i - 1) & 63)
                for r_ in range(W):
                    ss[r_] ^= cols[i, r_] ^ cols[i - 1, r_]
                fi[t] = i - 1
                fj[t] = j
                fd[t] = d + wi - w[i - 1]
                top = t + 1
            if inc:
                if ex:
                    t += 1
                    ps = pat + t * PW
                    ss = syn + t * W
                ps[(i - 1) >> 6] |= (<uint64_t> 1) << ((i - 1) & 63)
                for r_ in range(W):
                    ss[r_] ^= cols[i - 1, r_]
                fi[t] = i - 1
                fj[t] = j - wi
                fd[t] = d - w[i - 1]
                top = t + 1
            if top > max_stack:
                max_stack = top

    if found and hit >= 0:
        pattern = _unpack(pat + hit * PW, n)
    else:
        pattern = np.zeros(n, dtype=np.uint8)
    free(fi); free(fj); free(fd); free(pat); free(syn); free(base)
    return (bool(found), int(n_p), (int(score) if found else None), pattern, int(bitops),
            int(comparisons), int(copies), int(max_stack), int(table.cells_filled - cells0))


cdef struct Pool:
    Py_ssize_t size
    Py_ssize_t cap
    double* score
    int64_t* seq
    Py_ssize_t* last
    uint64_t* pat
    uint64_t* syn
    Py_ssize_t* free_ids
    Py_ssize_t n_free


cdef int _pool_grow(Pool* p, Py_ssize_t PW, Py_ssize_t W) noexcept nogil:
    cdef Py_ssize_t cap = p.cap * 2 if p.cap else 64
    cdef void* a = realloc(p.score, cap * sizeof(double))
    if not a:
        return -1
    p.score = <double*> a
    a = realloc(p.seq, cap * sizeof(int64_t))
    if not a:
        return -1
    p.seq = <int64_t*> a
    a = realloc(p.last, cap * sizeof(Py_ssize_t))
    if not a:
        return -1
    p.last = <Py_ssize_t*> a
    a = realloc(p.pat, cap * PW * sizeof(uint64_t) + 8)
    if not a:
        return -1
    p.pat = <uint64_t*> a
    a = realloc(p.syn, cap * W * sizeof(uint64_t) + 8)
    if not a:
        return -1
    p.syn = <uint64_t*> a
    a = realloc(p.free_ids, cap * sizeof(Py_ssize_t))
    if not a:
        return -1
    p.free_ids = <Py_ssize_t*> a
    p.cap = cap
    return 0


cdef inline Py_ssize_t _pool_alloc(Pool* p, Py_ssize_t PW, Py_ssize_t W) noexcept nogil:
    if p.n_free:
        p.n_free -= 1
        return p.free_ids[p.n_free]
    if p.size == p.cap:
        if _pool_grow(p, PW, W) < 0:
            return -1
    p.size += 1
    return p.size - 1


cdef inline bint _less(Pool* p, Py_ssize_t a, Py_ssize_t b, long long* comparisons) noexcept nogil:
    comparisons[0] += 1
    return p.score[a] < p.score[b] or (p.score[a] == p.score[b] and p.seq[a] < p.seq[b])


cdef struct Heap:
    Py_ssize_t size
    Py_ssize_t cap
    Py_ssize_t* ids


cdef int _heap_push(Heap* h, Pool* p, Py_ssize_t node, long long* comparisons) noexcept nogil:
    cdef Py_ssize_t k, parent, cap
    cdef void* a
    if h.size == h.cap:
        cap = h.cap * 2 if h.cap else 64
        a = realloc(h.ids, cap * sizeof(Py_ssize_t))
        if not a:
            return -1
        h.ids = <Py_ssize_t*> a
        h.cap = cap
    k = h.size
    h.size += 1
    while k > 0:
        parent = (k - 1) >> 1
        if _less(p, node, h.ids[parent], comparisons):
            h.ids[k] = h.ids[parent]
            k = parent
        else:
            break
    h.ids[k] = node
    return 0


cdef Py_ssize_t _heap_pop(Heap* h, Pool* p, long long* comparisons) noexcept nogil:
    cdef Py_ssize_t top = h.ids[0]
    cdef Py_ssize_t last, k, child
    h.size -= 1
    last = h.ids[h.size]
    if h.size:
        k = 0
        while True:
            child = 2 * k + 1
            if child >= h.size:
                break
            if child + 1 < h.size and _less(p, h.ids[child + 1], h.ids[child], comparisons):
                child += 1
            if _less(p, h.ids[child], last, comparisons):
                h.ids[k] = h.ids[child]
                k = child
            else:
                break
        h.ids[k] = last
    return top


def sgrand(const uint64_t[:, ::1] cols, const uint64_t[::1] s0, const double[::1] rel,
           double smax, long long budget, const int64_t[::1] rwc):
    cdef Py_ssize_t n = cols.shape[0]
    cdef Py_ssize_t W = cols.shape[1]
    cdef Py_ssize_t PW = (n + 63) // 64
    cdef Py_ssize_t r = rwc.shape[0]
    if rel.shape[0] != n:
        raise ValueError("reliabilities and columns disagree on n")
    cdef Pool pool
    cdef Heap heap
    memset(&pool, 0, sizeof(Pool))
    memset(&heap, 0, sizeof(Heap))
    cdef uint64_t* base = <uint64_t*> malloc(W * sizeof(uint64_t) + 8)
    if not base:
        raise MemoryError()
    cdef long long n_p = 1, comparisons = 0, copies = 0
    cdef int64_t bitops = 0, seq = 0
    cdef Py_ssize_t max_stack = 0, node, ext, pending = -1, j, t
    cdef bint found = False, failed = False
    cdef double score = 0.0
    cdef uint64_t* ps
    cdef uint64_t* ss
    cdef uint64_t* qs
    cdef const int64_t* rp = &rwc[0] if r > 0 else NULL

    for t in range(W):
        base[t] = s0[t]
    with nogil:
        bitops = _charge(base, W, rp, r)
        if _is_zero(base, W):
            found = True
        elif n > 0:
            node = _pool_alloc(&pool, PW, W)
            if node < 0:
                failed = True
            else:
                ps = pool.pat + node * PW
                memset(ps, 0, PW * sizeof(uint64_t))
                ps[0] = 1
                ss = pool.syn + node * W
                for t in range(W):
                    ss[t] = base[t] ^ cols[0, t]
                pool.score[node] = rel[0]
                pool.seq[node] = seq
                seq += 1
                pool.last[node] = 0
                if _heap_push(&heap, &pool, node, &comparisons) < 0:
                    failed = True
                if heap.size > max_stack:
                    max_stack = heap.size
        while not found and not failed:
            if pending >= 0:
                j = pool.last[pending]
                if j < n - 1:
                    copies += 1
                    ext = _pool_alloc(&pool, PW, W)
                    if ext < 0:
                        failed = True
                        break
                    ps = pool.pat + pending * PW
                    ss = pool.syn + pending * W
                    memcpy(pool.pat + ext * PW, ps, PW * sizeof(uint64_t))
                    memcpy(pool.syn + ext * W, ss, W * sizeof(uint64_t))
                    qs = pool.pat + ext * PW
                    qs[(j + 1) >> 6] |= (<uint64_t> 1) << ((j + 1) & 63)
                    qs = pool.syn + ext * W
                    for t in range(W):
                        qs[t] ^= cols[j + 1, t]
                    pool.score[ext] = pool.score[pending] + rel[j + 1]
                    pool.seq[ext] = seq
                    seq += 1
                    pool.last[ext] = j + 1
                    if _heap_push(&heap, &pool, ext, &comparisons) < 0:
                        failed = True
                        break
                    if heap.size > max_stack:
                        max_stack = heap.size
                    # shift reuses the popped node
                    ps[j >> 6] ^= (<uint64_t> 1) << (j & 63)
                    ps[(j + 1) >> 6] |= (<uint64_t> 1) << ((j + 1) & 63)
                    for t in range(W):
                        ss[t] ^= cols[j, t] ^ cols[j + 1, t]
                    pool.score[pending] = (pool.score[pending] - rel[j]) + rel[j + 1]
                    pool.seq[pending] = seq
                    seq += 1
                    pool.last[pending] = j + 1
                    if _heap_push(&heap, &pool, pending, &comparisons) < 0:
                        failed = True
                        break
                    if heap.size > max_stack:
                        max_stack = heap.size
                else:
                    pool.free_ids[pool.n_free] = pending
                    pool.n_free += 1
                pending = -1
            if heap.size == 0:
                break
            node = _heap_pop(&heap, &pool, &comparisons)
            pending = node
            if pool.score[node] > smax:
                break
            if n_p >= budget:
                break
            n_p += 1
            ss = pool.syn + node * W
            bitops += _charge(ss, W, rp, r)
            if _is_zero(ss, W):
                found = True
                score = pool.score[node]

    if failed:
        free(pool.score); free(pool.seq); free(pool.last); free(pool.pat); free(pool.syn)
        free(pool.free_ids); free(heap.ids); free(base)
        raise MemoryError()
    if found and pending >= 0:
        pattern = _unpack(pool.pat + pending * PW, n)
    else:
        pattern = np.zeros(n, dtype=np.uint8)
    free(pool.score); free(pool.seq); free(pool.last); free(pool.pat); free(pool.syn)
    free(pool.free_ids); free(heap.ids); free(base)
    return (bool(found), int(n_p), (float(score) if found else None), pattern, int(bitops),
            int(comparisons), int(copies), int(max_stack), 0)


def combos(const uint64_t[:, ::1] cols, const uint64_t[::1] s0, Py_ssize_t max_weight,
           long long budget, const int64_t[::1] rwc):
    cdef Py_ssize_t m = cols.shape[0]
    cdef Py_ssize_t W = cols.shape[1]
    cdef Py_ssize_t r = rwc.shape[0]
    if max_weight > m:
        max_weight = m
    cdef Py_ssize_t* c = <Py_ssize_t*> malloc((m + 1) * sizeof(Py_ssize_t))
    # pre[t] = s0 ^ cols[c[0]] ^ ... ^ cols[c[t-1]]
    cdef uint64_t* pre = <uint64_t*> malloc((m + 2) * W * sizeof(uint64_t) + 8)
    if not c or not pre:
        free(c); free(pre)
        raise MemoryError()
    cdef long long n_p = 1
    cdef int64_t bitops = 0
    cdef Py_ssize_t wt = 0, t, u, x
    cdef bint found = False, stop = False
    cdef uint64_t* top
    cdef const int64_t* rp = &rwc[0] if r > 0 else NULL

    for x in range(W):
        pre[x] = s0[x]
    with nogil:
        bitops = _charge(pre, W, rp, r)
        if _is_zero(pre, W):
            found = True
        while not found and not stop and wt < max_weight:
            wt += 1
            for t in range(wt):
                c[t] = t
            t = 0
            while True:
                # rebuild prefixes from position t
                for u in range(t, wt):
                    for x in range(W):
                        pre[(u + 1) * W + x] = pre[u * W + x] ^ cols[c[u], x]
                if n_p >= budget:
                    stop = True
                    break
                n_p += 1
                top = pre + wt * W
                bitops += _charge(top, W, rp, r)
                if _is_zero(top, W):
                    found = True
                    break
                t = wt - 1
                while t >= 0 and c[t] == m - wt + t:
                    t -= 1
                if t < 0:
                    break
                c[t] += 1
                for u in range(t + 1, wt):
                    c[u] = c[u - 1] + 1

    pattern = np.zeros(m, dtype=np.uint8)
    if found and wt > 0 and n_p > 1:
        for t in range(wt):
            pattern[c[t]] = 1
    free(c); free(pre)
    if not found:
        score = None
    elif n_p == 1:
        score = 0
    else:
        score = int(wt)
    return (bool(found), int(n_p), score, pattern, int(bitops), 0, 0, 0, 0)
