import numpy as np
import pytest

from cssgr import graph, state_space as ss
from cssgr import tensor as T
from cssgr.config import RunConfig
from cssgr.data import make_batch
from cssgr.gradcheck import random_samples
from cssgr.model import CSSGRModel, gnn_only_states
from oracles import mean_loop


def ssm_params(rng, d, A=None, B=None):
    p = ss.init_ssm_params(rng, d)
    if A is not None:
        p["ssm.A"].data = A
    if B is not None:
        p["ssm.B"].data = B
    return p


def test_pool_examples():
    v = np.array([0.5, -2.0, 3.0])
    assert np.array_equal(ss.pool(T.Tensor(np.stack([v] * 4))).data, v)
    assert np.array_equal(ss.pool(T.Tensor(np.stack([v, -v]))).data, np.zeros(3))


def test_pool_matches_loop_on_random_instances():
    rng = np.random.default_rng(0)
    for _ in range(100):
        h = rng.standard_normal((5, 4))
        assert np.max(np.abs(ss.pool(T.Tensor(h)).data - mean_loop(h.tolist()))) <= 1e-15


def test_pool_ignores_padding_and_rejects_empty():
    h = np.array([[[1.0, 2.0], [3.0, 4.0], [100.0, 100.0]]])
    out = ss.pool(T.Tensor(h), np.array([[True, True, False]])).data
    assert out.tolist() == [[2.0, 3.0]]
    with pytest.raises(ValueError):
        ss.pool(T.Tensor(np.zeros((0, 3))))


def test_ssm_step_examples():
    rng = np.random.default_rng(1)
    d = 4
    z = rng.standard_normal(d)
    s = rng.standard_normal(d)
    p = ssm_params(rng, d, A=np.zeros((d, d)), B=np.eye(d))
    out = ss.ssm_step(ss.SsmState(T.Tensor(s)), T.Tensor(z), p)
    assert np.array_equal(out.s.data, z) and out.step_index == 1
    p = ssm_params(rng, d, B=np.zeros((d, d)))
    out = ss.ssm_step(ss.SsmState(T.Tensor(s), 3), T.Tensor(z), p)
    assert np.allclose(out.s.data, p["ssm.A"].data @ s, rtol=0, atol=1e-15)
    assert np.allclose(out.readout.data, p["ssm.C"].data @ out.s.data, rtol=0, atol=1e-15)
    assert out.step_index == 4


def _rollout(p, zs):
    st = ss.SsmState(T.Tensor(np.zeros(zs.shape[1])))
    for z in zs:
        st = ss.ssm_step(st, T.Tensor(z), p)
    return st.s.data


def test_superposition():
    rng = np.random.default_rng(2)
    p = ssm_params(rng, 6)
    for _ in range(20):
        z, w = rng.standard_normal((2, 7, 6))
        a, b = rng.standard_normal(2)
        lhs = _rollout(p, a * z + b * w)
        rhs = a * _rollout(p, z) + b * _rollout(p, w)
        assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(1.0, np.max(np.abs(rhs)))


def test_init_spectral_norm_guard():
    for seed in range(10):
        A = ss.init_ssm_params(np.random.default_rng(seed), 16)["ssm.A"].data
        assert np.linalg.norm(A, 2) <= 0.9 + 1e-12


def test_bounded_rollouts():
    rng = np.random.default_rng(3)
    for _ in range(100):
        p = ssm_params(rng, 8)
        rho = np.linalg.norm(p["ssm.A"].data, 2)
        zs = rng.uniform(-1, 1, size=(50, 8))
        bound = np.linalg.norm(p["ssm.B"].data, 2) * np.max(np.linalg.norm(zs, axis=1)) / (1 - rho)
        st = ss.SsmState(T.Tensor(np.zeros(8)))
        for z in zs:
            st = ss.ssm_step(st, T.Tensor(z), p)
            assert np.linalg.norm(st.s.data) <= bound + 1e-9


def test_fuse_examples():
    rng = np.random.default_rng(4)
    h = rng.standard_normal((3, 2))
    s = rng.standard_normal(2)
    assert np.array_equal(ss.fuse(T.Tensor(h), T.Tensor(s), T.Tensor(0.0)).data, h)
    assert np.array_equal(ss.fuse(T.Tensor(h), T.Tensor(np.zeros(2)), T.Tensor(1.0)).data, h)
    out = ss.fuse(T.Tensor([[1.0, 1.0]]), T.Tensor([0.5, -0.5]), T.Tensor(2.0)).data
    assert out.tolist() == [[2.0, 0.0]]


def test_fuse_commutes_with_permutation():
    rng = np.random.default_rng(5)
    h, s = rng.standard_normal((6, 3)), rng.standard_normal(3)
    perm = rng.permutation(6)
    a = ss.fuse(T.Tensor(h), T.Tensor(s), T.Tensor(0.7)).data
    b = ss.fuse(T.Tensor(h[perm]), T.Tensor(s), T.Tensor(0.7)).data
    assert np.array_equal(a[perm], b)


def test_degenerate_reasoning_is_one_gnn_layer():
    rng = np.random.default_rng(6)
    d = 5
    nodes = T.Tensor(np.abs(rng.standard_normal((6, d))))
    p = graph.init_gnn_params(rng, d, 1)
    p.update(ssm_params(rng, d, A=np.zeros((d, d)), B=np.zeros((d, d))))
    h, s = ss.run_reasoning(nodes, p, L=1)
    ref = graph.message_passing_layer(nodes, graph.build_adjacency(nodes), p)
    assert np.array_equal(h.data, ref.data) and np.array_equal(s.data, np.zeros(d))


def test_trace_records_each_layer():
    rng = np.random.default_rng(7)
    nodes = T.Tensor(np.abs(rng.standard_normal((5, 4))))
    p = graph.init_gnn_params(rng, 4, 3)
    p.update(ss.init_ssm_params(rng, 4))
    trace = ss.ReasoningTrace()
    ss.run_reasoning(nodes, p, L=3, trace=trace)
    assert len(trace.adjacencies) == len(trace.states) == len(trace.readouts) == 3


def test_static_adjacency_keeps_initial_graph():
    rng = np.random.default_rng(8)
    nodes = T.Tensor(rng.standard_normal((6, 4)))
    p = graph.init_gnn_params(rng, 4, 3, )
    p.update(ss.init_ssm_params(rng, 4))
    trace = ss.ReasoningTrace()
    ss.run_reasoning(nodes, p, L=3, tau=0.0, mode="static_adjacency", trace=trace)
    assert all(np.array_equal(a, trace.adjacencies[0]) for a in trace.adjacencies)


def test_no_ssm_uses_aggregator():
    rng = np.random.default_rng(9)
    nodes = T.Tensor(np.abs(rng.standard_normal((4, 3))))
    p = graph.init_gnn_params(rng, 3, 1)
    p.update(ss.init_aggregator_params(rng, 3))
    _, s = ss.run_reasoning(nodes, p, L=1, mode="no_ssm")
    h1 = graph.message_passing_layer(nodes, graph.build_adjacency(nodes), p)
    assert np.array_equal(s.data, ss.aggregate(ss.pool(h1), p).data)


def test_divergence_is_reported():
    rng = np.random.default_rng(10)
    nodes = T.Tensor(np.abs(rng.standard_normal((4, 3))))
    p = graph.init_gnn_params(rng, 3, 1)
    p.update(ssm_params(rng, 3, B=np.eye(3) * 1e9))
    p["gnn.0.W2"].data = np.eye(3)
    with pytest.raises(ss.StateDivergence):
        ss.run_reasoning(nodes, p, L=1)


@pytest.mark.parametrize("mode", ["full", "no_ssm", "no_graph", "static_adjacency"])
def test_gamma_zero_bit_matches_pure_gnn(mode):
    cfg = RunConfig(d=8, L=2, vocab_size=12, max_len=6, d_raw=3, mode=mode, seed=3)
    batch = make_batch(random_samples(np.random.default_rng(0), cfg, count=3))
    model = CSSGRModel(cfg)
    with T.no_grad():
        h, _, _ = model.reason(batch)
    assert h.data.tobytes() == gnn_only_states(cfg, batch).tobytes()
