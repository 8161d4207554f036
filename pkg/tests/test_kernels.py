"""The compiled SGD steps agree with the reference gradient + update path."""
import numpy as np
import pytest

from authorid import _kernels
from authorid.objectives import (
    N_INFO,
    EmbeddingModel,
    PaperInstance,
    apply_update,
    hinge_loss,
    nce_log_prob,
    net_gradients,
    paper_repr,
    task_gradients,
)
from authorid.sampling import TaskTriple
from authorid.trainer import PackedInstances


def fixture(r, D=8, n=24):
    m = EmbeddingModel(r.normal(0, 0.5, (n, D)), r.uniform(0.2, 1.5, N_INFO),
                       r.normal(0, 0.3, 3), ["a", "b", "c"])
    pool = r.permutation(np.arange(2, n))
    groups = (pool[:3], pool[3:5], pool[5:6], np.array([], dtype=np.int64))
    return m, PaperInstance(-1, groups, frozenset({0}))


@pytest.mark.parametrize("seed", range(30))
def test_task_step_matches_reference(seed):
    r = np.random.default_rng(seed)
    m, inst = fixture(r)
    lr, lam, margin = 0.05, 0.01, float(r.choice([0.1, 1.0, 5.0]))
    ref = m.copy()
    g = task_gradients(TaskTriple(0, -1, 0, 1), inst, ref, margin)
    vp = paper_repr(inst, ref)
    want_loss = hinge_loss(ref.U[0] @ vp, ref.U[1] @ vp, margin)
    apply_update(ref, g, lr, lam, "descent")

    packed = PackedInstances.build([inst])
    D = m.dim
    loss = _kernels.task_step(m.U, m.w, packed.x_ptr, packed.x_idx, 0, 0, 1, lr, lam, margin,
                              np.empty((N_INFO, D)), np.empty(D), np.empty(D))
    assert loss == pytest.approx(want_loss, rel=1e-12, abs=1e-15)
    np.testing.assert_allclose(m.U, ref.U, rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(m.w, ref.w, rtol=1e-12, atol=1e-15)


@pytest.mark.parametrize("seed", range(30))
def test_net_step_matches_reference(seed):
    r = np.random.default_rng(100 + seed)
    m, _ = fixture(r)
    negs = r.choice(np.arange(2, m.n_nodes), size=5, replace=False)
    lr, lam, rr = 0.05, 0.01, int(r.integers(3))
    ref = m.copy()
    want = -nce_log_prob(0, 1, negs, rr, ref)
    apply_update(ref, net_gradients(0, 1, negs, rr, ref), lr, lam, "ascent")

    D = m.dim
    got = _kernels.net_step(m.U, m.b, rr, 0, 1, negs, lr, lam, np.empty(D), np.empty(D),
                            np.empty(len(negs)))
    assert got == pytest.approx(want, rel=1e-12)
    np.testing.assert_allclose(m.U, ref.U, rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(m.b, ref.b, rtol=1e-12, atol=1e-15)


def test_task_step_leaves_biases_and_net_step_leaves_w():
    r = np.random.default_rng(0)
    m, inst = fixture(r)
    packed = PackedInstances.build([inst])
    b0, w0 = m.b.copy(), m.w.copy()
    _kernels.task_step(m.U, m.w, packed.x_ptr, packed.x_idx, 0, 0, 1, 0.1, 0.0, 50.0,
                       np.empty((N_INFO, 8)), np.empty(8), np.empty(8))
    np.testing.assert_array_equal(m.b, b0)
    w1 = m.w.copy()
    assert not np.array_equal(w1, w0)
    _kernels.net_step(m.U, m.b, 0, 0, 1, np.array([5, 6]), 0.1, 0.0,
                      np.empty(8), np.empty(8), np.empty(2))
    np.testing.assert_array_equal(m.w, w1)
