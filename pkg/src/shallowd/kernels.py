"""Hot inner loops, each in a numba and a pure-numpy flavour.

Set ``SHALLOWD_DISABLE_JIT=1`` to run the numpy versions (also used when
numba is not importable). Both flavours compute the same quantities; the
tests check them against each other.

Convolution forward passes are not here: they are a single matrix product
and numpy's BLAS call already beats a hand loop.
"""

import os
import types

import numpy as np

try:
    import numba as nb

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

JIT_DISABLED = (not HAVE_NUMBA) or os.environ.get("SHALLOWD_DISABLE_JIT", "0") not in ("", "0")


def njit(*args, **kwargs):
    kwargs.setdefault("cache", True)
    kwargs.setdefault("nogil", True)
    if HAVE_NUMBA:
        return nb.njit(*args, **kwargs)
    return lambda func: func


def _logsumexp_np(a, axis):
    m = np.max(a, axis=axis, keepdims=True)
    out = m + np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True))
    return np.squeeze(out, axis=axis)


# --- CRF lattice ---------------------------------------------------------------


def crf_forward_np(emit, trans, start, end):
    """Log forward table and log partition for a linear chain."""
    n, k = emit.shape
    alpha = np.empty((n, k))
    alpha[0] = start + emit[0]
    for t in range(1, n):
        alpha[t] = _logsumexp_np(alpha[t - 1][:, None] + trans, 0) + emit[t]
    log_z = _logsumexp_np(alpha[-1] + end, 0)
    return alpha, float(log_z)


def crf_backward_np(emit, trans, end):
    n, k = emit.shape
    beta = np.empty((n, k))
    beta[-1] = end
    for t in range(n - 2, -1, -1):
        beta[t] = _logsumexp_np(trans + (emit[t + 1] + beta[t + 1])[None, :], 1)
    return beta


def crf_viterbi_np(emit, trans, start, end):
    n, k = emit.shape
    delta = start + emit[0]
    back = np.zeros((n, k), dtype=np.int64)
    for t in range(1, n):
        cand = delta[:, None] + trans
        back[t] = np.argmax(cand, axis=0)
        delta = cand[back[t], np.arange(k)] + emit[t]
    final = delta + end
    path = np.empty(n, dtype=np.int64)
    path[-1] = int(np.argmax(final))
    score = float(final[path[-1]])
    for t in range(n - 1, 0, -1):
        path[t - 1] = back[t, path[t]]
    return path, score


@njit
def _lse_vec(v):
    m = v[0]
    for i in range(1, v.shape[0]):
        if v[i] > m:
            m = v[i]
    if m == -np.inf:
        return m
    s = 0.0
    for i in range(v.shape[0]):
        s += np.exp(v[i] - m)
    return m + np.log(s)


@njit
def _crf_forward_nb(emit, trans, start, end):
    n, k = emit.shape
    alpha = np.empty((n, k))
    tmp = np.empty(k)
    for j in range(k):
        alpha[0, j] = start[j] + emit[0, j]
    for t in range(1, n):
        for j in range(k):
            for i in range(k):
                tmp[i] = alpha[t - 1, i] + trans[i, j]
            alpha[t, j] = _lse_vec(tmp) + emit[t, j]
    for j in range(k):
        tmp[j] = alpha[n - 1, j] + end[j]
    return alpha, _lse_vec(tmp)


@njit
def _crf_backward_nb(emit, trans, end):
    n, k = emit.shape
    beta = np.empty((n, k))
    tmp = np.empty(k)
    for i in range(k):
        beta[n - 1, i] = end[i]
    for t in range(n - 2, -1, -1):
        for i in range(k):
            for j in range(k):
                tmp[j] = trans[i, j] + emit[t + 1, j] + beta[t + 1, j]
            beta[t, i] = _lse_vec(tmp)
    return beta


@njit
def _crf_viterbi_nb(emit, trans, start, end):
    n, k = emit.shape
    delta = np.empty(k)
    new = np.empty(k)
    back = np.zeros((n, k), dtype=np.int64)
    for j in range(k):
        delta[j] = start[j] + emit[0, j]
    for t in range(1, n):
        for j in range(k):
            best = 0
            best_val = delta[0] + trans[0, j]
            for i in range(1, k):
                v = delta[i] + trans[i, j]
                if v > best_val:
                    best_val = v
                    best = i
            back[t, j] = best
            new[j] = best_val + emit[t, j]
        delta[:] = new
    path = np.empty(n, dtype=np.int64)
    best = 0
    best_val = delta[0] + end[0]
    for j in range(1, k):
        v = delta[j] + end[j]
        if v > best_val:
            best_val = v
            best = j
    path[n - 1] = best
    for t in range(n - 1, 0, -1):
        path[t - 1] = back[t, path[t]]
    return path, best_val


def _crf_forward_jit(emit, trans, start, end):
    alpha, log_z = _crf_forward_nb(emit, trans, start, end)
    return alpha, float(log_z)


def _crf_viterbi_jit(emit, trans, start, end):
    path, score = _crf_viterbi_nb(emit, trans, start, end)
    return path, float(score)


# --- embedding / pooling gradients ------------------------------------------------


def scatter_add_rows_np(target, idx, rows):
    np.add.at(target, idx, rows)


@njit
def scatter_add_rows_nb(target, idx, rows):
    for r in range(idx.shape[0]):
        i = idx[r]
        for c in range(rows.shape[1]):
            target[i, c] += rows[r, c]


def pool_backward_np(q, filters, argmax, gpre, dfilters, dq):
    """Route pooled gradients back through one example's narrow convolution.

    ``gpre[f]`` is the gradient at filter ``f``'s pre-activation at its
    pooled position ``argmax[f]``; only that window receives gradient.
    Accumulates into ``dfilters`` (n_f, w, d) and ``dq`` (l, d).
    """
    w = filters.shape[1]
    win = argmax[:, None] + np.arange(w)[None, :]
    dfilters += gpre[:, None, None] * q[win]
    np.add.at(dq, win.ravel(), (gpre[:, None, None] * filters).reshape(-1, q.shape[1]))


@njit
def pool_backward_nb(q, filters, argmax, gpre, dfilters, dq):
    nf, w, d = filters.shape
    for f in range(nf):
        g = gpre[f]
        if g == 0.0:
            continue
        p = argmax[f]
        for k in range(w):
            for c in range(d):
                dfilters[f, k, c] += g * q[p + k, c]
                dq[p + k, c] += g * filters[f, k, c]


numpy_impl = types.SimpleNamespace(
    name="numpy",
    crf_forward=crf_forward_np,
    crf_backward=crf_backward_np,
    crf_viterbi=crf_viterbi_np,
    scatter_add_rows=scatter_add_rows_np,
    pool_backward=pool_backward_np,
)

jit_impl = types.SimpleNamespace(
    name="numba" if HAVE_NUMBA else "numpy",
    crf_forward=_crf_forward_jit,
    crf_backward=_crf_backward_nb,
    crf_viterbi=_crf_viterbi_jit,
    scatter_add_rows=scatter_add_rows_nb,
    pool_backward=pool_backward_nb,
)

active = numpy_impl if JIT_DISABLED else jit_impl
BACKEND = active.name

crf_forward = active.crf_forward
crf_backward = active.crf_backward
crf_viterbi = active.crf_viterbi
scatter_add_rows = active.scatter_add_rows
pool_backward = active.pool_backward
