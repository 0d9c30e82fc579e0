import numpy as np
import pytest

from shallowd import kernels
from shallowd.kernels import jit_impl, numpy_impl

SEEDS = range(12)


def lattice(seed):
    rng = np.random.default_rng(seed)
    n, k = int(rng.integers(1, 7)), int(rng.integers(2, 5))
    return rng.normal(size=(n, k)), rng.normal(size=(k, k)), rng.normal(size=k), rng.normal(size=k)


@pytest.mark.parametrize("seed", SEEDS)
def test_crf_kernels_agree(seed):
    emit, trans, start, end = lattice(seed)
    a_np, z_np = numpy_impl.crf_forward(emit, trans, start, end)
    a_jit, z_jit = jit_impl.crf_forward(emit, trans, start, end)
    assert np.allclose(a_np, a_jit, atol=1e-12) and z_np == pytest.approx(z_jit, abs=1e-12)
    assert np.allclose(numpy_impl.crf_backward(emit, trans, end), jit_impl.crf_backward(emit, trans, end),
                       atol=1e-12)
    p_np, s_np = numpy_impl.crf_viterbi(emit, trans, start, end)
    p_jit, s_jit = jit_impl.crf_viterbi(emit, trans, start, end)
    assert list(p_np) == list(p_jit) and s_np == pytest.approx(s_jit, abs=1e-12)


def test_viterbi_ties_pick_first_label_in_both():
    emit = np.zeros((3, 3))
    trans = np.zeros((3, 3))
    for impl in (numpy_impl, jit_impl):
        path, _ = impl.crf_viterbi(emit, trans, np.zeros(3), np.zeros(3))
        assert list(path) == [0, 0, 0]


@pytest.mark.parametrize("seed", SEEDS)
def test_gradient_kernels_agree(seed):
    rng = np.random.default_rng(seed)
    l, d, nf, w = 9, 4, 3, int(rng.integers(1, 4))
    q = rng.normal(size=(l, d))
    filters = rng.normal(size=(nf, w, d))
    argmax = rng.integers(0, l - w + 1, size=nf)
    gpre = rng.normal(size=nf)
    out = []
    for impl in (numpy_impl, jit_impl):
        dh, dq = np.zeros_like(filters), np.zeros_like(q)
        impl.pool_backward(q, filters, argmax, gpre, dh, dq)
        out.append((dh, dq))
    assert np.allclose(out[0][0], out[1][0]) and np.allclose(out[0][1], out[1][1])

    idx = rng.integers(0, 5, size=20)
    rows = rng.normal(size=(20, d))
    t_np, t_jit = np.zeros((5, d)), np.zeros((5, d))
    numpy_impl.scatter_add_rows(t_np, idx, rows)
    jit_impl.scatter_add_rows(t_jit, idx, rows)
    assert np.allclose(t_np, t_jit)


def test_active_backend_is_consistent():
    assert kernels.BACKEND in ("numba", "numpy")
    assert kernels.crf_forward is kernels.active.crf_forward
