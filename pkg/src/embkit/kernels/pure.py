"""Pure-numpy training kernels (fallback when the compiled module is absent).

The update order and PRNG consumption match the compiled kernels exactly, so
the two backends walk identical sample sequences.  Floating-point reduction
order inside dot products may differ between numpy and the C loops, so each
backend is deterministic on its own but the two are not bit-identical.
"""

from __future__ import annotations

import math

import numpy as np

MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

LR_FLOOR = 1e-4  # final rate as a fraction of the initial rate
SIGMOID_CLAMP = 30.0


def _next(state: int) -> tuple:
    state = (state + _GAMMA) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return state, z ^ (z >> 31)


def _sigmoid(x: float) -> float:
    if x >= SIGMOID_CLAMP:
        return 1.0
    if x <= -SIGMOID_CLAMP:
        return 0.0
    return 1.0 / (1.0 + math.exp(-x))


def _subsample_line(tokens, start, end, drop_prob, state):
    kept = []
    for t in tokens[start:end]:
        t = int(t)
        dp = drop_prob[t]
        if dp > 0.0:
            state, z = _next(state)
            if (z >> 11) * (1.0 / 9007199254740992.0) < dp:
                continue
        kept.append(t)
    return kept, state


def _draw(neg_cdf, total_mass, state):
    state, z = _next(state)
    u = (z >> 11) * (1.0 / 9007199254740992.0) * total_mass
    idx = int(np.searchsorted(neg_cdf, u, side="right"))
    return min(idx, len(neg_cdf) - 1), state


def _train_samples(h, syn1, positive, neg_cdf, total_mass, negatives, lr, state):
    """One positive plus up to ``negatives`` noise samples against input ``h``.

    Returns the accumulated gradient for the input side; output rows are
    updated in place.  Negative draws that collide with the positive word are
    skipped, not redrawn.
    """
    neu1e = np.zeros(h.shape[0], dtype=np.float32)
    target = positive
    for k in range(negatives + 1):
        if k > 0:
            target, state = _draw(neg_cdf, total_mass, state)
            if target == positive:
                continue
        label = 1.0 if k == 0 else 0.0
        row = syn1[target]
        g = (label - _sigmoid(float(np.dot(row, h)))) * lr
        neu1e += np.float32(g) * row
        syn1[target] += np.float32(g) * h
    return neu1e, state


def sgns_epoch(
    tokens,
    offsets,
    syn0,
    syn1,
    neg_cdf,
    drop_prob,
    window,
    negatives,
    lr0,
    total_tokens,
    processed,
    state,
):
    """One SkipGram/negative-sampling pass over the lines in ``offsets``.

    ``tokens`` is the id-encoded corpus, ``offsets`` the line boundaries.
    Returns the updated processed-token count for the learning-rate schedule.
    """
    total_mass = float(neg_cdf[-1])
    lr_min = lr0 * LR_FLOOR
    state &= MASK64
    for li in range(len(offsets) - 1):
        lr = max(lr0 * (1.0 - processed / total_tokens), lr_min)
        start, end = int(offsets[li]), int(offsets[li + 1])
        kept, state = _subsample_line(tokens, start, end, drop_prob, state)
        n = len(kept)
        for pos in range(n):
            state, z = _next(state)
            radius = 1 + z % window
            center = kept[pos]
            h = syn0[center]
            for j in range(max(0, pos - radius), min(n, pos + radius + 1)):
                if j == pos:
                    continue
                neu1e, state = _train_samples(
                    h, syn1, kept[j], neg_cdf, total_mass, negatives, lr, state
                )
                h += neu1e
        processed += end - start
    return processed


def cbow_epoch(
    tokens,
    offsets,
    syn0,
    syn1,
    neg_cdf,
    drop_prob,
    window,
    negatives,
    lr0,
    total_tokens,
    processed,
    state,
):
    """One CBOW pass: mean-of-context input predicts the center word.

    The accumulated input gradient is added in full to every context row.
    """
    total_mass = float(neg_cdf[-1])
    lr_min = lr0 * LR_FLOOR
    state &= MASK64
    for li in range(len(offsets) - 1):
        lr = max(lr0 * (1.0 - processed / total_tokens), lr_min)
        start, end = int(offsets[li]), int(offsets[li + 1])
        kept, state = _subsample_line(tokens, start, end, drop_prob, state)
        n = len(kept)
        for pos in range(n):
            state, z = _next(state)
            radius = 1 + z % window
            context = [
                kept[j]
                for j in range(max(0, pos - radius), min(n, pos + radius + 1))
                if j != pos
            ]
            if not context:
                continue
            h = syn0[context].mean(axis=0)
            neu1e, state = _train_samples(
                h, syn1, kept[pos], neg_cdf, total_mass, negatives, lr, state
            )
            for c in context:
                syn0[c] += neu1e
        processed += end - start
    return processed


def subword_epoch(
    tokens,
    offsets,
    syn0,
    bucket_vecs,
    syn1,
    ngram_ids,
    ngram_offsets,
    neg_cdf,
    drop_prob,
    window,
    negatives,
    lr0,
    total_tokens,
    processed,
    state,
):
    """SkipGram pass with subword composition of the center input vector.

    The input is the mean of the word row and its n-gram bucket rows; the
    accumulated gradient is added in full to each of those rows.
    """
    total_mass = float(neg_cdf[-1])
    lr_min = lr0 * LR_FLOOR
    state &= MASK64
    for li in range(len(offsets) - 1):
        lr = max(lr0 * (1.0 - processed / total_tokens), lr_min)
        start, end = int(offsets[li]), int(offsets[li + 1])
        kept, state = _subsample_line(tokens, start, end, drop_prob, state)
        n = len(kept)
        for pos in range(n):
            state, z = _next(state)
            radius = 1 + z % window
            center = kept[pos]
            grams = ngram_ids[ngram_offsets[center] : ngram_offsets[center + 1]]
            h = (syn0[center] + bucket_vecs[grams].sum(axis=0)) / np.float32(
                1 + len(grams)
            )
            for j in range(max(0, pos - radius), min(n, pos + radius + 1)):
                if j == pos:
                    continue
                neu1e, state = _train_samples(
                    h, syn1, kept[j], neg_cdf, total_mass, negatives, lr, state
                )
                syn0[center] += neu1e
                for b in grams:
                    bucket_vecs[b] += neu1e
        processed += end - start
    return processed


def glove_epoch(order, ii, jj, logx, fweight, w, wc, b, bc, gw, gwc, gb, gbc, lr):
    """One AdaGrad pass over the co-occurrence entries in ``order``.

    Returns the weighted squared-error loss summed over the entries.
    """
    loss = 0.0
    for k in order:
        i = int(ii[k])
        j = int(jj[k])
        fw = float(fweight[k])
        diff = float(np.dot(w[i], wc[j])) + b[i] + bc[j] - logx[k]
        loss += fw * diff * diff
        fdiff = fw * diff
        grad_w = fdiff * wc[j]
        grad_c = fdiff * w[i]
        w[i] -= lr * grad_w / np.sqrt(gw[i])
        wc[j] -= lr * grad_c / np.sqrt(gwc[j])
        gw[i] += grad_w * grad_w
        gwc[j] += grad_c * grad_c
        b[i] -= lr * fdiff / math.sqrt(gb[i])
        bc[j] -= lr * fdiff / math.sqrt(gbc[j])
        gb[i] += fdiff * fdiff
        gbc[j] += fdiff * fdiff
    return loss
