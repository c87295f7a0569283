# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled backend for the hot kernels.

Bit-identical to ``_pykernels``; see that module for the contracts.  The
Monte Carlo inner loops (sampling, syndrome extraction, fixed-point
inference, defect matching) run here as plain C loops.
"""

import numpy as np

cimport numpy as cnp
from libc.stdint cimport int32_t, int64_t, uint8_t, uint32_t, uint64_t

cnp.import_array()

MATCH_DP_MAX = 22

cdef uint32_t M0 = 0xD2511F53u
cdef uint32_t M1 = 0xCD9E8D57u
cdef uint32_t W0 = 0x9E3779B9u
cdef uint32_t W1 = 0xBB67AE85u
cdef uint64_t MASK32 = 0xFFFFFFFFu

TRANSFER_SQNL = 0
TRANSFER_RELU = 1


cdef inline void _philox_block(uint32_t* c, uint32_t k0, uint32_t k1) noexcept nogil:
    cdef int rnd
    cdef uint64_t p0, p1
    cdef uint32_t t0, t1, t2, t3
    for rnd in range(10):
        p0 = (<uint64_t> c[0]) * M0
        p1 = (<uint64_t> c[2]) * M1
        t0 = (<uint32_t> (p1 >> 32)) ^ c[1] ^ k0
        t1 = <uint32_t> p1
        t2 = (<uint32_t> (p0 >> 32)) ^ c[3] ^ k1
        t3 = <uint32_t> p0
        c[0] = t0
        c[1] = t1
        c[2] = t2
        c[3] = t3
        k0 = k0 + W0
        k1 = k1 + W1


def philox4x32(ctr, key):
    """(n, 4) uint32 counters -> (n, 4) uint32 outputs, 10 rounds."""
    cdef cnp.ndarray[uint32_t, ndim=2] c = np.ascontiguousarray(ctr, dtype=np.uint32)
    cdef cnp.ndarray[uint32_t, ndim=2] out = np.empty_like(c)
    cdef uint32_t k0 = <uint32_t> (int(key[0]) & 0xFFFFFFFF)
    cdef uint32_t k1 = <uint32_t> (int(key[1]) & 0xFFFFFFFF)
    cdef Py_ssize_t i, n = c.shape[0]
    cdef uint32_t buf[4]
    for i in range(n):
        buf[0] = c[i, 0]
        buf[1] = c[i, 1]
        buf[2] = c[i, 2]
        buf[3] = c[i, 3]
        _philox_block(buf, k0, k1)
        out[i, 0] = buf[0]
        out[i, 1] = buf[1]
        out[i, 2] = buf[2]
        out[i, 3] = buf[3]
    return out


def sample_pauli_bits(int n_data, double p, object seed, object stream,
                      object shot0, int n_shots):
    """Depolarizing error planes; see the numpy backend for the contract."""
    cdef cnp.ndarray[uint8_t, ndim=2] x = np.empty((n_shots, n_data), dtype=np.uint8)
    cdef cnp.ndarray[uint8_t, ndim=2] z = np.empty((n_shots, n_data), dtype=np.uint8)
    cdef uint64_t thr = <uint64_t> int(round(p * 4294967296.0))
    cdef uint64_t t1 = thr // 3
    cdef uint64_t t2 = (2 * thr) // 3
    cdef uint64_t seed_i = <uint64_t> (int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef uint32_t k0 = <uint32_t> (seed_i & 0xFFFFFFFF)
    cdef uint32_t k1 = <uint32_t> (seed_i >> 32)
    cdef uint32_t stream_w = <uint32_t> (int(stream) & 0xFFFFFFFF)
    cdef uint64_t shot_base = <uint64_t> int(shot0)
    cdef Py_ssize_t s, q
    cdef int blk, w
    cdef uint64_t shot, u
    cdef uint32_t buf[4]
    with nogil:
        for s in range(n_shots):
            shot = shot_base + <uint64_t> s
            q = 0
            blk = 0
            while q < n_data:
                buf[0] = <uint32_t> (shot & MASK32)
                buf[1] = <uint32_t> (shot >> 32)
                buf[2] = <uint32_t> blk
                buf[3] = stream_w
                _philox_block(buf, k0, k1)
                for w in range(4):
                    if q >= n_data:
                        break
                    u = <uint64_t> buf[w]
                    if u < thr:
                        x[s, q] = 1 if u < t2 else 0
                        z[s, q] = 1 if u >= t1 else 0
                    else:
                        x[s, q] = 0
                        z[s, q] = 0
                    q += 1
                blk += 1
    return x, z


def syndrome_bits(x_bits, z_bits, hx, hz):
    """Parity extraction via adjacency lists; X-ancilla bits come first."""
    cdef cnp.ndarray[uint8_t, ndim=2] x = np.ascontiguousarray(np.atleast_2d(x_bits), dtype=np.uint8)
    cdef cnp.ndarray[uint8_t, ndim=2] z = np.ascontiguousarray(np.atleast_2d(z_bits), dtype=np.uint8)
    cdef cnp.ndarray[uint8_t, ndim=2] hxm = np.ascontiguousarray(hx, dtype=np.uint8)
    cdef cnp.ndarray[uint8_t, ndim=2] hzm = np.ascontiguousarray(hz, dtype=np.uint8)
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t n_data = x.shape[1]
    cdef Py_ssize_t nax = hxm.shape[0]
    cdef Py_ssize_t naz = hzm.shape[0]
    cdef cnp.ndarray[uint8_t, ndim=2] out = np.zeros((n, nax + naz), dtype=np.uint8)

    # flatten adjacency to (index, offset) lists once per call
    idx_x, off_x = _adj_lists(hxm)
    idx_z, off_z = _adj_lists(hzm)
    cdef cnp.ndarray[int32_t, ndim=1] ix = idx_x
    cdef cnp.ndarray[int32_t, ndim=1] ox = off_x
    cdef cnp.ndarray[int32_t, ndim=1] iz = idx_z
    cdef cnp.ndarray[int32_t, ndim=1] oz = off_z

    cdef Py_ssize_t s, a, j
    cdef uint8_t acc
    with nogil:
        for s in range(n):
            for a in range(nax):
                acc = 0
                for j in range(ox[a], ox[a + 1]):
                    acc ^= z[s, ix[j]]
                out[s, a] = acc
            for a in range(naz):
                acc = 0
                for j in range(oz[a], oz[a + 1]):
                    acc ^= x[s, iz[j]]
                out[s, nax + a] = acc
    return out


def _adj_lists(mat):
    rows, cols = np.nonzero(mat)
    order = np.lexsort((cols, rows))
    idx = cols[order].astype(np.int32)
    counts = np.bincount(rows, minlength=mat.shape[0])
    off = np.zeros(mat.shape[0] + 1, dtype=np.int32)
    np.cumsum(counts, out=off[1:])
    return np.ascontiguousarray(idx), np.ascontiguousarray(off)


def gf2_matmul(bits, mat):
    """(n, k) @ (k, m) over GF(2)."""
    cdef cnp.ndarray[uint8_t, ndim=2] b = np.ascontiguousarray(np.atleast_2d(bits), dtype=np.uint8)
    cdef cnp.ndarray[uint8_t, ndim=2] m = np.ascontiguousarray(mat, dtype=np.uint8)
    cdef Py_ssize_t n = b.shape[0]
    cdef Py_ssize_t k = b.shape[1]
    cdef Py_ssize_t cols = m.shape[1]
    cdef cnp.ndarray[uint8_t, ndim=2] out = np.zeros((n, cols), dtype=np.uint8)
    cdef Py_ssize_t i, j, c
    with nogil:
        for i in range(n):
            for j in range(k):
                if b[i, j]:
                    for c in range(cols):
                        out[i, c] ^= m[j, c]
    return out


cdef inline int64_t _sqnl_fixed_scalar(int64_t acc, int frac, int bits) noexcept nogil:
    cdef int64_t one = (<int64_t> 1) << frac
    cdef int64_t maxq = ((<int64_t> 1) << (bits - 1)) - 1
    cdef int64_t minq = -((<int64_t> 1) << (bits - 1))
    cdef int shift = 2 * frac - (bits - 1)
    cdef int64_t n, y
    if acc >= one:
        return maxq
    if acc <= -one:
        return minq
    n = (acc << 1) * one - acc * (acc if acc >= 0 else -acc)
    y = n >> shift
    if y > maxq:
        y = maxq
    if y < minq:
        y = minq
    return y


cdef inline int64_t _relu_fixed_scalar(int64_t acc, int frac, int bits) noexcept nogil:
    cdef int64_t maxq = ((<int64_t> 1) << (bits - 1)) - 1
    cdef int64_t y
    if acc <= 0:
        return 0
    y = acc >> (frac - (bits - 1))
    return maxq if y > maxq else y


def fixed_forward_bits(syn, w1, b1, w2, b2, wout, bout,
                       int wfrac, int abits, int transfer):
    """Integer-exact forward pass; see the numpy backend for the contract."""
    cdef cnp.ndarray[uint8_t, ndim=2] x = np.ascontiguousarray(np.atleast_2d(syn), dtype=np.uint8)
    cdef cnp.ndarray[int64_t, ndim=2] w1m = np.ascontiguousarray(w1, dtype=np.int64)
    cdef cnp.ndarray[int64_t, ndim=1] b1v = np.ascontiguousarray(b1, dtype=np.int64)
    cdef cnp.ndarray[int64_t, ndim=2] w2m = np.ascontiguousarray(w2, dtype=np.int64)
    cdef cnp.ndarray[int64_t, ndim=1] b2v = np.ascontiguousarray(b2, dtype=np.int64)
    cdef cnp.ndarray[int64_t, ndim=2] wo = np.ascontiguousarray(wout, dtype=np.int64)
    cdef cnp.ndarray[int64_t, ndim=1] bo = np.ascontiguousarray(bout, dtype=np.int64)
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t n_in = x.shape[1]
    cdef Py_ssize_t n1 = w1m.shape[0]
    cdef Py_ssize_t n2 = w2m.shape[0]
    cdef cnp.ndarray[uint8_t, ndim=2] out = np.empty((n, 2), dtype=np.uint8)
    cdef cnp.ndarray[int64_t, ndim=1] y1 = np.empty(n1, dtype=np.int64)
    cdef cnp.ndarray[int64_t, ndim=1] y2 = np.empty(n2, dtype=np.int64)
    cdef Py_ssize_t s, j, i, o
    cdef int64_t acc
    cdef int frac2 = wfrac + abits - 1
    cdef bint sqnl = transfer == 0
    if transfer not in (0, 1):
        raise ValueError(f"fixed-point transfer id {transfer} unsupported")
    with nogil:
        for s in range(n):
            for j in range(n1):
                acc = b1v[j]
                for i in range(n_in):
                    if x[s, i]:
                        acc += w1m[j, i]
                y1[j] = _sqnl_fixed_scalar(acc, wfrac, abits) if sqnl \
                    else _relu_fixed_scalar(acc, wfrac, abits)
            for j in range(n2):
                acc = b2v[j] << (abits - 1)
                for i in range(n1):
                    acc += w2m[j, i] * y1[i]
                y2[j] = _sqnl_fixed_scalar(acc, frac2, abits) if sqnl \
                    else _relu_fixed_scalar(acc, frac2, abits)
            for o in range(2):
                acc = bo[o] << (abits - 1)
                for i in range(n2):
                    acc += wo[o, i] * y2[i]
                out[s, o] = 1 if acc > 0 else 0
    return out


def match_defects(dist, bnd):
    """Exact min-weight matching with boundary; subset DP, pinned ties."""
    cdef cnp.ndarray[int64_t, ndim=2] d = np.ascontiguousarray(dist, dtype=np.int64)
    cdef cnp.ndarray[int64_t, ndim=1] b = np.ascontiguousarray(bnd, dtype=np.int64)
    cdef int k = b.shape[0]
    if k == 0:
        return np.empty(0, dtype=np.int32)
    if k > MATCH_DP_MAX:
        raise ValueError(f"defect count {k} exceeds DP cap {MATCH_DP_MAX}")
    cdef uint64_t size = (<uint64_t> 1) << k
    cdef cnp.ndarray[int64_t, ndim=1] f = np.empty(size, dtype=np.int64)
    cdef cnp.ndarray[int32_t, ndim=1] choice = np.empty(size, dtype=np.int32)
    cdef cnp.ndarray[int32_t, ndim=1] pair = np.full(k, -1, dtype=np.int32)
    cdef uint64_t mask, rest, v_mask
    cdef int u, v, best_v
    cdef int64_t best, cand
    with nogil:
        f[0] = 0
        for mask in range(1, size):
            u = _lowest_bit(mask)
            rest = mask ^ ((<uint64_t> 1) << u)
            best = b[u] + f[rest]
            best_v = -1
            v_mask = rest
            while v_mask:
                v = _lowest_bit(v_mask)
                v_mask &= v_mask - 1
                cand = d[u, v] + f[rest ^ ((<uint64_t> 1) << v)]
                if cand < best:
                    best = cand
                    best_v = v
            f[mask] = best
            choice[mask] = best_v
        mask = size - 1
        while mask:
            u = _lowest_bit(mask)
            v = choice[mask]
            if v < 0:
                pair[u] = -1
                mask ^= (<uint64_t> 1) << u
            else:
                pair[u] = v
                pair[v] = u
                mask ^= ((<uint64_t> 1) << u) | ((<uint64_t> 1) << v)
    return pair


cdef uint64_t DEBRUIJN = 0x03F79D71B4CB0A89u
cdef int DEBRUIJN_TAB[64]


def _init_debruijn():
    cdef int i
    cdef uint64_t bit
    for i in range(64):
        bit = (<uint64_t> 1) << i
        DEBRUIJN_TAB[(bit * DEBRUIJN) >> 58] = i


_init_debruijn()


cdef inline int _lowest_bit(uint64_t mask) noexcept nogil:
    return DEBRUIJN_TAB[(((mask & (0 - mask)) * DEBRUIJN) >> 58)]
