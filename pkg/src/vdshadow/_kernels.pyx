# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled tableau kernels. Mirrors ``_pykernels`` exactly."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t, uint8_t

cnp.import_array()

cdef uint64_t EVEN = 0x5555555555555555ULL


cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil


cdef inline int popc(uint64_t v) nogil:
    return __builtin_popcountll(v)


cdef inline int sym_inner(uint64_t v, uint64_t w) nogil:
    cdef uint64_t vx = v & EVEN, vz = (v >> 1) & EVEN
    cdef uint64_t wx = w & EVEN, wz = (w >> 1) & EVEN
    return popc((vx & wz) ^ (vz & wx)) & 1


cdef inline uint64_t transvect(uint64_t h, uint64_t v) nogil:
    if sym_inner(v, h):
        return v ^ h
    return v


cdef inline uint64_t pair(uint64_t v, int i) nogil:
    return (v >> i) & 3


cdef void find_transvection(uint64_t x, uint64_t y, int nn,
                            uint64_t* h0, uint64_t* h1) noexcept nogil:
    cdef int i
    cdef uint64_t z = 0, zp
    h0[0] = 0
    h1[0] = 0
    if x == y:
        return
    if sym_inner(x, y):
        h0[0] = x ^ y
        return
    for i in range(0, nn, 2):
        if pair(x, i) and pair(y, i):
            zp = pair(x, i) ^ pair(y, i)
            if zp == 0:
                zp = 2
                if ((x >> i) & 1) != ((x >> (i + 1)) & 1):
                    zp = 3
            z = zp << i
            h0[0] = x ^ z
            h1[0] = y ^ z
            return
    for i in range(0, nn, 2):
        if pair(x, i) and not pair(y, i):
            if ((x >> i) & 1) == ((x >> (i + 1)) & 1):
                z |= (<uint64_t>2) << i
            else:
                # swap the two bits of the pair
                z |= (((x >> (i + 1)) & 1) | (((x >> i) & 1) << 1)) << i
            break
    for i in range(0, nn, 2):
        if not pair(x, i) and pair(y, i):
            if ((y >> i) & 1) == ((y >> (i + 1)) & 1):
                z |= (<uint64_t>2) << i
            else:
                z |= (((y >> (i + 1)) & 1) | (((y >> i) & 1) << 1)) << i
            break
    h0[0] = x ^ z
    h1[0] = y ^ z


cdef void symplectic_rows(const int64_t[:] ks, const uint8_t[:, :] bits, int n,
                          uint64_t* g) noexcept nogil:
    cdef int m, s, nn, j, r
    cdef uint64_t f1, e1 = 1, eprime, t0, t1, h0, row
    for m in range(n - 1, -1, -1):
        s = n - m
        nn = 2 * s
        if s == 1:
            g[0] = 1
            g[1] = 2
        else:
            for r in range(nn - 1, 1, -1):
                g[r] = g[r - 2] << 2
            g[0] = 1
            g[1] = 2
        f1 = <uint64_t>ks[m]
        find_transvection(e1, f1, nn, &t0, &t1)
        eprime = 1
        for j in range(2, nn):
            if bits[m, j - 1]:
                eprime |= (<uint64_t>1) << j
        h0 = transvect(t1, transvect(t0, eprime))
        if bits[m, 0]:
            f1 = 0
        for r in range(nn):
            row = g[r]
            row = transvect(t0, row)
            row = transvect(t1, row)
            row = transvect(h0, row)
            row = transvect(f1, row)
            g[r] = row


def random_symplectic_batch(ks, bits):
    cdef const int64_t[:, :] kv = np.ascontiguousarray(ks, dtype=np.int64)
    cdef const uint8_t[:, :, :] bv = np.ascontiguousarray(bits, dtype=np.uint8)
    cdef Py_ssize_t S = kv.shape[0], s
    cdef int n = kv.shape[1], r, c
    cdef uint64_t g[32]
    out = np.empty((S, 2 * n, 2 * n), dtype=np.uint8)
    cdef uint8_t[:, :, :] ov = out
    with nogil:
        for s in range(S):
            symplectic_rows(kv[s], bv[s], n, g)
            for r in range(2 * n):
                for c in range(2 * n):
                    ov[s, r, c] = (g[r] >> c) & 1
    return out


cdef void pauli_apply(uint64_t xm, uint64_t zm, int sign, double complex* src,
                      double complex* dst, int d) noexcept nogil:
    cdef int w = popc(xm & zm) & 3
    cdef double complex phase
    cdef int k
    if w == 0:
        phase = 1
    elif w == 1:
        phase = 1j
    elif w == 2:
        phase = -1
    else:
        phase = -1j
    if sign:
        phase = -phase
    for k in range(d):
        if popc(zm & <uint64_t>k) & 1:
            dst[k ^ xm] = -phase * src[k]
        else:
            dst[k ^ xm] = phase * src[k]


def tableau_to_unitary_batch(tab, signs):
    cdef const uint8_t[:, :, :] tv = np.ascontiguousarray(tab, dtype=np.uint8)
    cdef const uint8_t[:, :] sv = np.ascontiguousarray(signs, dtype=np.uint8)
    cdef Py_ssize_t S = tv.shape[0], s
    cdef int nn = tv.shape[1], n = nn // 2, d = 1 << n
    cdef int q, r, k, j
    cdef uint64_t xm[16]
    cdef uint64_t zm[16]
    cdef uint64_t xz[16]
    cdef uint64_t zz[16]
    cdef double nrm, mag
    cdef double complex ph
    seed = np.exp(1j * 0.6180339887 * np.arange(1, d + 1)) * (1.0 + 0.1 * np.arange(d))
    cdef double complex[:] seedv = seed
    psi_a = np.empty(d, dtype=np.complex128)
    psi_b = np.empty(d, dtype=np.complex128)
    cdef double complex[:] pa = psi_a
    cdef double complex[:] pb = psi_b
    out = np.empty((S, d, d), dtype=np.complex128)
    # column-major scratch so each column is contiguous
    colbuf = np.empty((d, d), dtype=np.complex128)
    cdef double complex[:, :] cb = colbuf
    cdef double complex[:, :, :] ov = out
    with nogil:
        for s in range(S):
            for q in range(n):
                xm[q] = 0
                zm[q] = 0
                xz[q] = 0
                zz[q] = 0
                for r in range(n):
                    if tv[s, 2 * q, 2 * r]:
                        xm[q] |= (<uint64_t>1) << r
                    if tv[s, 2 * q, 2 * r + 1]:
                        zm[q] |= (<uint64_t>1) << r
                    if tv[s, 2 * q + 1, 2 * r]:
                        xz[q] |= (<uint64_t>1) << r
                    if tv[s, 2 * q + 1, 2 * r + 1]:
                        zz[q] |= (<uint64_t>1) << r
            for k in range(d):
                pa[k] = seedv[k]
            for q in range(n):
                pauli_apply(xz[q], zz[q], sv[s, 2 * q + 1], &pa[0], &pb[0], d)
                for k in range(d):
                    pa[k] = 0.5 * (pa[k] + pb[k])
            j = 0
            for k in range(d):
                if abs(pa[k]) > 1e-9:
                    j = k
                    break
            mag = abs(pa[j])
            ph = mag / pa[j]
            nrm = 0
            for k in range(d):
                pa[k] = pa[k] * ph
                nrm += pa[k].real * pa[k].real + pa[k].imag * pa[k].imag
            nrm = nrm ** 0.5
            for k in range(d):
                cb[0, k] = pa[k] / nrm
            for k in range(1, d):
                q = 0
                while not ((k >> q) & 1):
                    q += 1
                pauli_apply(xm[q], zm[q], sv[s, 2 * q], &cb[k & (k - 1), 0], &cb[k, 0], d)
            for k in range(d):
                for r in range(d):
                    ov[s, r, k] = cb[k, r]
    return out
