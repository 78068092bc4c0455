# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled dense mod-p kernels. Same contract as pykernel."""

from libc.stdlib cimport malloc, free

BACKEND = "c"


cdef long long inv_mod(long long x, long long p):
    # Fermat, p prime
    cdef long long result = 1
    cdef long long base = x % p
    cdef long long e = p - 2
    while e > 0:
        if e & 1:
            result = (result * base) % p
        base = (base * base) % p
        e >>= 1
    return result


def matmul_mod(a, b, long long p):
    cdef Py_ssize_t n = len(a)
    cdef Py_ssize_t k = len(a[0]) if n else 0
    cdef Py_ssize_t m = len(b[0]) if len(b) else 0
    cdef Py_ssize_t i, j, t
    cdef long long x
    if n == 0 or m == 0:
        return [[0] * m for _ in range(n)]
    cdef long long *bf = <long long *> malloc(k * m * sizeof(long long))
    cdef long long *row = <long long *> malloc(m * sizeof(long long))
    if bf == NULL or row == NULL:
        if bf != NULL:
            free(bf)
        if row != NULL:
            free(row)
        raise MemoryError()
    for t in range(k):
        bt = b[t]
        for j in range(m):
            bf[t * m + j] = bt[j]
    out = []
    try:
        for i in range(n):
            ai = a[i]
            for j in range(m):
                row[j] = 0
            for t in range(k):
                x = ai[t]
                if x:
                    for j in range(m):
                        row[j] = (row[j] + x * bf[t * m + j]) % p
            out.append([row[j] for j in range(m)])
    finally:
        free(bf)
        free(row)
    return out


def rref_mod(a, long long p):
    cdef Py_ssize_t n = len(a)
    cdef Py_ssize_t m = len(a[0]) if n else 0
    cdef Py_ssize_t i, j, col, rowi, piv
    cdef long long c, inv
    pivots = []
    if n == 0:
        return [], [], pivots
    cdef long long *r = <long long *> malloc(n * m * sizeof(long long))
    cdef long long *t = <long long *> malloc(n * n * sizeof(long long))
    if r == NULL or t == NULL:
        if r != NULL:
            free(r)
        if t != NULL:
            free(t)
        raise MemoryError()
    try:
        for i in range(n):
            ai = a[i]
            for j in range(m):
                r[i * m + j] = ai[j]
            for j in range(n):
                t[i * n + j] = 1 if i == j else 0
        rowi = 0
        for col in range(m):
            if rowi >= n:
                break
            piv = -1
            for i in range(rowi, n):
                if r[i * m + col]:
                    piv = i
                    break
            if piv < 0:
                continue
            if piv != rowi:
                for j in range(m):
                    r[rowi * m + j], r[piv * m + j] = r[piv * m + j], r[rowi * m + j]
                for j in range(n):
                    t[rowi * n + j], t[piv * n + j] = t[piv * n + j], t[rowi * n + j]
            inv = inv_mod(r[rowi * m + col], p)
            for j in range(m):
                r[rowi * m + j] = (r[rowi * m + j] * inv) % p
            for j in range(n):
                t[rowi * n + j] = (t[rowi * n + j] * inv) % p
            for i in range(n):
                if i != rowi and r[i * m + col]:
                    c = r[i * m + col]
                    for j in range(m):
                        r[i * m + j] = (r[i * m + j] - c * r[rowi * m + j]) % p
                        if r[i * m + j] < 0:
                            r[i * m + j] += p
                    for j in range(n):
                        t[i * n + j] = (t[i * n + j] - c * t[rowi * n + j]) % p
                        if t[i * n + j] < 0:
                            t[i * n + j] += p
            pivots.append(col)
            rowi += 1
        rout = [[r[i * m + j] for j in range(m)] for i in range(n)]
        tout = [[t[i * n + j] for j in range(n)] for i in range(n)]
    finally:
        free(r)
        free(t)
    return rout, tout, pivots
