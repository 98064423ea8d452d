# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled training kernels.

Mirrors embkit.kernels.pure function for function: identical signatures,
identical PRNG consumption and update order.  The main loops run without the
GIL so corpus shards can be trained on real OS threads.
"""

import numpy as np

from libc.math cimport exp, sqrt
from libc.stdint cimport int32_t, int64_t, uint64_t

cdef double LR_FLOOR = 1e-4
cdef double SIGMOID_CLAMP = 30.0
cdef double INV_2POW53 = 1.0 / 9007199254740992.0


cdef inline uint64_t _next(uint64_t* state) noexcept nogil:
    state[0] = state[0] + <uint64_t>0x9E3779B97F4A7C15UL
    cdef uint64_t z = state[0]
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9UL
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EBUL
    return z ^ (z >> 31)


cdef inline double _uniform(uint64_t* state) noexcept nogil:
    return <double>(_next(state) >> 11) * INV_2POW53


cdef inline double _sigmoid(double x) noexcept nogil:
    if x >= SIGMOID_CLAMP:
        return 1.0
    if x <= -SIGMOID_CLAMP:
        return 0.0
    return 1.0 / (1.0 + exp(-x))


cdef inline int _draw(const double* cdf, int n, double total_mass,
                      uint64_t* state) noexcept nogil:
    cdef double u = _uniform(state) * total_mass
    cdef int lo = 0, hi = n, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if cdf[mid] <= u:
            lo = mid + 1
        else:
            hi = mid
    if lo > n - 1:
        lo = n - 1
    return lo


cdef inline int _subsample_line(const int32_t* tokens, int start, int end,
                                const double* drop_prob, int32_t* kept,
                                uint64_t* state) noexcept nogil:
    cdef int n = 0, t
    cdef int32_t w
    for t in range(start, end):
        w = tokens[t]
        if drop_prob[w] > 0.0 and _uniform(state) < drop_prob[w]:
            continue
        kept[n] = w
        n += 1
    return n


cdef inline void _train_samples(float* h, float[:, ::1] syn1, int positive,
                                const double* cdf, int vocab_size,
                                double total_mass, int negatives, double lr,
                                float* neu1e, int dim,
                                uint64_t* state) noexcept nogil:
    cdef int k, d, target
    cdef double f
    cdef float gf
    cdef float* row
    for d in range(dim):
        neu1e[d] = 0.0
    for k in range(negatives + 1):
        if k == 0:
            target = positive
        else:
            target = _draw(cdf, vocab_size, total_mass, state)
            if target == positive:
                continue
        row = &syn1[target, 0]
        f = 0.0
        for d in range(dim):
            f += row[d] * h[d]
        gf = <float>(((1.0 if k == 0 else 0.0) - _sigmoid(f)) * lr)
        for d in range(dim):
            neu1e[d] += gf * row[d]
        for d in range(dim):
            row[d] += gf * h[d]


cdef int64_t _max_line(int64_t[::1] offsets) noexcept:
    cdef int64_t best = 1, li
    for li in range(offsets.shape[0] - 1):
        if offsets[li + 1] - offsets[li] > best:
            best = offsets[li + 1] - offsets[li]
    return best


def sgns_epoch(int32_t[::1] tokens, int64_t[::1] offsets,
               float[:, ::1] syn0, float[:, ::1] syn1,
               double[::1] neg_cdf, double[::1] drop_prob,
               int window, int negatives, double lr0,
               long long total_tokens, long long processed, state):
    cdef uint64_t rng = <uint64_t>(<unsigned long long>state)
    cdef int dim = syn0.shape[1]
    cdef int vocab_size = neg_cdf.shape[0]
    cdef double total_mass = neg_cdf[vocab_size - 1]
    cdef double lr_min = lr0 * LR_FLOOR, lr
    cdef long long done = processed
    cdef int li, n, pos, j, d, lo, hi, center, radius
    cdef int n_lines = offsets.shape[0] - 1
    cdef int32_t[::1] kept_mv = np.empty(_max_line(offsets), dtype=np.int32)
    cdef float[::1] neu1e_mv = np.empty(dim, dtype=np.float32)
    cdef int32_t* kept = &kept_mv[0]
    cdef float* neu1e = &neu1e_mv[0]
    with nogil:
        for li in range(n_lines):
            lr = lr0 * (1.0 - <double>done / <double>total_tokens)
            if lr < lr_min:
                lr = lr_min
            n = _subsample_line(&tokens[0] if tokens.shape[0] else NULL,
                                <int>offsets[li], <int>offsets[li + 1],
                                &drop_prob[0], kept, &rng)
            for pos in range(n):
                radius = 1 + <int>(_next(&rng) % <uint64_t>window)
                center = kept[pos]
                lo = pos - radius
                if lo < 0:
                    lo = 0
                hi = pos + radius + 1
                if hi > n:
                    hi = n
                for j in range(lo, hi):
                    if j == pos:
                        continue
                    _train_samples(&syn0[center, 0], syn1, kept[j], &neg_cdf[0],
                                   vocab_size, total_mass, negatives, lr,
                                   neu1e, dim, &rng)
                    for d in range(dim):
                        syn0[center, d] += neu1e[d]
            done += offsets[li + 1] - offsets[li]
    return int(done)


def cbow_epoch(int32_t[::1] tokens, int64_t[::1] offsets,
               float[:, ::1] syn0, float[:, ::1] syn1,
               double[::1] neg_cdf, double[::1] drop_prob,
               int window, int negatives, double lr0,
               long long total_tokens, long long processed, state):
    cdef uint64_t rng = <uint64_t>(<unsigned long long>state)
    cdef int dim = syn0.shape[1]
    cdef int vocab_size = neg_cdf.shape[0]
    cdef double total_mass = neg_cdf[vocab_size - 1]
    cdef double lr_min = lr0 * LR_FLOOR, lr
    cdef long long done = processed
    cdef int li, n, pos, j, d, lo, hi, cw, radius
    cdef int n_lines = offsets.shape[0] - 1
    cdef int32_t[::1] kept_mv = np.empty(_max_line(offsets), dtype=np.int32)
    cdef float[::1] neu1e_mv = np.empty(dim, dtype=np.float32)
    cdef float[::1] h_mv = np.empty(dim, dtype=np.float32)
    cdef int32_t* kept = &kept_mv[0]
    cdef float* neu1e = &neu1e_mv[0]
    cdef float* h = &h_mv[0]
    with nogil:
        for li in range(n_lines):
            lr = lr0 * (1.0 - <double>done / <double>total_tokens)
            if lr < lr_min:
                lr = lr_min
            n = _subsample_line(&tokens[0] if tokens.shape[0] else NULL,
                                <int>offsets[li], <int>offsets[li + 1],
                                &drop_prob[0], kept, &rng)
            for pos in range(n):
                radius = 1 + <int>(_next(&rng) % <uint64_t>window)
                lo = pos - radius
                if lo < 0:
                    lo = 0
                hi = pos + radius + 1
                if hi > n:
                    hi = n
                cw = hi - lo - 1
                if cw <= 0:
                    continue
                for d in range(dim):
                    h[d] = 0.0
                for j in range(lo, hi):
                    if j == pos:
                        continue
                    for d in range(dim):
                        h[d] += syn0[kept[j], d]
                for d in range(dim):
                    h[d] /= <float>cw
                _train_samples(h, syn1, kept[pos], &neg_cdf[0], vocab_size,
                               total_mass, negatives, lr, neu1e, dim, &rng)
                for j in range(lo, hi):
                    if j == pos:
                        continue
                    for d in range(dim):
                        syn0[kept[j], d] += neu1e[d]
            done += offsets[li + 1] - offsets[li]
    return int(done)


def subword_epoch(int32_t[::1] tokens, int64_t[::1] offsets,
                  float[:, ::1] syn0, float[:, ::1] bucket_vecs,
                  float[:, ::1] syn1,
                  int32_t[::1] ngram_ids, int64_t[::1] ngram_offsets,
                  double[::1] neg_cdf, double[::1] drop_prob,
                  int window, int negatives, double lr0,
                  long long total_tokens, long long processed, state):
    cdef uint64_t rng = <uint64_t>(<unsigned long long>state)
    cdef int dim = syn0.shape[1]
    cdef int vocab_size = neg_cdf.shape[0]
    cdef double total_mass = neg_cdf[vocab_size - 1]
    cdef double lr_min = lr0 * LR_FLOOR, lr
    cdef long long done = processed
    cdef int li, n, pos, j, d, lo, hi, center, g, radius
    cdef int64_t gs, ge, gi
    cdef int n_lines = offsets.shape[0] - 1
    cdef int32_t[::1] kept_mv = np.empty(_max_line(offsets), dtype=np.int32)
    cdef float[::1] neu1e_mv = np.empty(dim, dtype=np.float32)
    cdef float[::1] h_mv = np.empty(dim, dtype=np.float32)
    cdef int32_t* kept = &kept_mv[0]
    cdef float* neu1e = &neu1e_mv[0]
    cdef float* h = &h_mv[0]
    with nogil:
        for li in range(n_lines):
            lr = lr0 * (1.0 - <double>done / <double>total_tokens)
            if lr < lr_min:
                lr = lr_min
            n = _subsample_line(&tokens[0] if tokens.shape[0] else NULL,
                                <int>offsets[li], <int>offsets[li + 1],
                                &drop_prob[0], kept, &rng)
            for pos in range(n):
                radius = 1 + <int>(_next(&rng) % <uint64_t>window)
                center = kept[pos]
                gs = ngram_offsets[center]
                ge = ngram_offsets[center + 1]
                for d in range(dim):
                    h[d] = syn0[center, d]
                for gi in range(gs, ge):
                    g = ngram_ids[gi]
                    for d in range(dim):
                        h[d] += bucket_vecs[g, d]
                for d in range(dim):
                    h[d] /= <float>(1 + ge - gs)
                lo = pos - radius
                if lo < 0:
                    lo = 0
                hi = pos + radius + 1
                if hi > n:
                    hi = n
                for j in range(lo, hi):
                    if j == pos:
                        continue
                    _train_samples(h, syn1, kept[j], &neg_cdf[0], vocab_size,
                                   total_mass, negatives, lr, neu1e, dim, &rng)
                    for d in range(dim):
                        syn0[center, d] += neu1e[d]
                    for gi in range(gs, ge):
                        g = ngram_ids[gi]
                        for d in range(dim):
                            bucket_vecs[g, d] += neu1e[d]
            done += offsets[li + 1] - offsets[li]
    return int(done)


def glove_epoch(int64_t[::1] order, int32_t[::1] ii, int32_t[::1] jj,
                double[::1] logx, double[::1] fweight,
                double[:, ::1] w, double[:, ::1] wc,
                double[::1] b, double[::1] bc,
                double[:, ::1] gw, double[:, ::1] gwc,
                double[::1] gb, double[::1] gbc, double lr):
    cdef double loss = 0.0, diff, fw, fdiff, grad_w, grad_c
    cdef int dim = w.shape[1]
    cdef int64_t k, idx
    cdef int i, j, d
    cdef int64_t n = order.shape[0]
    with nogil:
        for k in range(n):
            idx = order[k]
            i = ii[idx]
            j = jj[idx]
            fw = fweight[idx]
            diff = b[i] + bc[j] - logx[idx]
            for d in range(dim):
                diff += w[i, d] * wc[j, d]
            loss += fw * diff * diff
            fdiff = fw * diff
            for d in range(dim):
                grad_w = fdiff * wc[j, d]
                grad_c = fdiff * w[i, d]
                w[i, d] -= lr * grad_w / sqrt(gw[i, d])
                wc[j, d] -= lr * grad_c / sqrt(gwc[j, d])
                gw[i, d] += grad_w * grad_w
                gwc[j, d] += grad_c * grad_c
            b[i] -= lr * fdiff / sqrt(gb[i])
            bc[j] -= lr * fdiff / sqrt(gbc[j])
            gb[i] += fdiff * fdiff
            gbc[j] += fdiff * fdiff
    return loss
