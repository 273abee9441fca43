import numpy as np
import pytest

from cssgr import encoders
from cssgr import tensor as T
from cssgr.data import Sample
from oracles import central_diff, rel_err


@pytest.fixture
def params():
    rng = np.random.default_rng(0)
    p = encoders.init_text_params(rng, 20, 6)
    p.update(encoders.init_visual_params(rng, 4, 6))
    # a nonzero bias keeps relu inputs clear of the kink in the gradchecks
    p["text.b"].data = np.full(6, 0.3)
    p["visual.b"].data = np.full(6, 0.3)
    return p


def test_repeated_segment_equals_single(params):
    seg = [4, 9, 11]
    once = encoders.encode_text(seg, params).data
    assert np.max(np.abs(encoders.encode_text(seg * 3, params).data - once)) <= 1e-15


def test_distinct_segments_differ():
    rng = np.random.default_rng(1)
    p = encoders.init_text_params(rng, 64, 32)
    p["text.b"].data = np.full(32, 0.1)
    equal = 0
    for _ in range(100):
        a = rng.integers(3, 64, size=3)
        b = rng.integers(3, 64, size=3)
        if sorted(a) == sorted(b):
            continue
        equal += np.array_equal(encoders.encode_text(a, p).data, encoders.encode_text(b, p).data)
    assert equal == 0


def test_text_errors(params):
    with pytest.raises(ValueError):
        encoders.encode_text([], params)
    with pytest.raises(ValueError):
        encoders.encode_text([3, 20], params)


def test_text_embedding_gradcheck(params):
    rng = np.random.default_rng(2)
    w = rng.standard_normal(6)
    seg = [1, 5, 5, 17]

    def loss():
        return T.sum(T.mul(encoders.encode_text(seg, params), w))

    T.backward(loss())
    for name in ("text.embed", "text.W", "text.b"):
        with T.no_grad():
            num = central_diff(lambda: loss().item(), params[name].data)
        assert rel_err(params[name].grad, num) < 1e-5, name


def test_visual_zero_input_zero_bias():
    p = encoders.init_visual_params(np.random.default_rng(3), 4, 6)
    assert np.array_equal(encoders.encode_visual(np.zeros(4), p).data, np.zeros(6))


def test_visual_preactivation_scales_linearly():
    p = encoders.init_visual_params(np.random.default_rng(4), 4, 6)
    x = np.random.default_rng(5).standard_normal(4)
    W = p["visual.W"].data
    a, b = encoders.encode_visual(x, p).data, encoders.encode_visual(2 * x, p).data
    assert np.allclose(b, 2 * a, rtol=0, atol=1e-15)
    assert np.allclose(np.maximum(2 * (W @ x), 0), b, rtol=0, atol=1e-15)


def test_visual_wrong_length(params):
    with pytest.raises(ValueError):
        encoders.encode_visual(np.zeros(5), params)


def test_visual_gradcheck(params):
    rng = np.random.default_rng(6)
    x = rng.standard_normal(4)
    w = rng.standard_normal(6)

    def loss():
        return T.sum(T.mul(encoders.encode_visual(x, params), w))

    T.backward(loss())
    for name in ("visual.W", "visual.b"):
        with T.no_grad():
            num = central_diff(lambda: loss().item(), params[name].data)
        assert rel_err(params[name].grad, num) < 1e-5, name


def _sample(rng, m=2, n=3):
    text = [list(rng.integers(3, 20, size=int(rng.integers(1, 4)))) for _ in range(m)]
    vis = [list(rng.standard_normal(4)) for _ in range(n)]
    return Sample(text, vis, [3], "s")


def test_build_nodes_layout(params):
    s = _sample(np.random.default_rng(7))
    ns = encoders.build_nodes(s, params)
    assert ns.embeddings.shape == (5, 6)
    assert ns.modality_tags == ["T", "T", "V", "V", "V"]
    for i, seg in enumerate(s.text_segments):
        # padding changes summation order only, so allow a few ulps
        assert np.allclose(ns.embeddings.data[i], encoders.encode_text(seg, params).data, rtol=0, atol=1e-15)
    for j, v in enumerate(s.visual_segments):
        assert np.allclose(ns.embeddings.data[2 + j], encoders.encode_visual(v, params).data, rtol=0, atol=1e-15)


def test_build_nodes_visual_permutation(params):
    rng = np.random.default_rng(8)
    s = _sample(rng)
    perm = [2, 0, 1]
    s2 = Sample(s.text_segments, [s.visual_segments[k] for k in perm], s.reference_summary)
    a = encoders.build_nodes(s, params).embeddings.data
    b = encoders.build_nodes(s2, params).embeddings.data
    assert np.array_equal(b[:2], a[:2])
    assert np.array_equal(b[2:], a[2:][perm])


def test_build_nodes_propagates_errors(params):
    s = Sample([[3, 25]], [[0.0] * 4], [3])
    with pytest.raises(ValueError):
        encoders.build_nodes(s, params)
    s = Sample([[3]], [[0.0] * 3], [3])
    with pytest.raises(ValueError):
        encoders.build_nodes(s, params)


def test_outputs_finite_on_extreme_inputs(params):
    v = encoders.encode_visual(np.full(4, 1e150), params).data
    assert np.all(np.isfinite(v))
