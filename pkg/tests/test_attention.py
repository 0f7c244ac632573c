import math

import numpy as np
import pytest

from mapfkit.attention import (
    AgentNetwork,
    EncoderConfig,
    HeadConfig,
    attention_dump,
    attention_focus_layer,
    embed,
    encode,
    encode_backward,
    encode_with_attention,
    init_encoder,
    init_heads,
    policy_head_forward,
    self_attention_layer,
    softmax,
)
from mapfkit.gradcheck import finite_diff_gradcheck, relative_error

RNG = np.random.default_rng(0)


def _loop_focus(U, ego, Wq, Wk):
    d = U.shape[1]
    q = U[ego] @ Wq
    s = np.array([q @ (u @ Wk) / math.sqrt(d) for u in U])
    a = np.exp(s - s.max())
    a /= a.sum()
    return np.array([a[i] * U[i] for i in range(len(U))]), a


def _loop_self(U, Wq, Wk, Wv, scale):
    heads = Wq.shape[0]
    n = len(U)
    outs = []
    for h in range(heads):
        Z = np.zeros((n, Wq.shape[2]))
        for i in range(n):
            s = np.array([(U[i] @ Wq[h]) @ (U[j] @ Wk[h]) / scale for j in range(n)])
            b = np.exp(s - s.max())
            b /= b.sum()
            Z[i] = sum(b[j] * (U[j] @ Wv[h]) for j in range(n))
        outs.append(Z)
    return np.concatenate(outs, axis=1)


def test_focus_matches_loop_and_rescales_only():
    U = RNG.standard_normal((6, 8))
    Wq, Wk = RNG.standard_normal((8, 8)), RNG.standard_normal((8, 8))
    out, alpha = attention_focus_layer(U, 2, Wq, Wk)
    ref_out, ref_alpha = _loop_focus(U, 2, Wq, Wk)
    np.testing.assert_allclose(out, ref_out, atol=1e-13)
    np.testing.assert_allclose(alpha, ref_alpha, atol=1e-13)
    assert abs(alpha.sum() - 1) < 1e-12
    for u, v in zip(U, out):
        cos = u @ v / (np.linalg.norm(u) * np.linalg.norm(v))
        assert abs(cos - 1) < 1e-12


@pytest.mark.parametrize("heads", [1, 2, 8])
@pytest.mark.parametrize("per_head", [True, False])
def test_self_attention_matches_loop(heads, per_head):
    d = 8
    U = RNG.standard_normal((5, d))
    W = [RNG.standard_normal((heads, d, d // heads)) for _ in range(3)]
    Z, beta = self_attention_layer(U, *W, per_head_scale=per_head)
    scale = math.sqrt(d // heads if per_head else d)
    np.testing.assert_allclose(Z, _loop_self(U, *W, scale), atol=1e-12)
    assert beta.shape == (heads, 5, 5)
    assert np.max(np.abs(beta.sum(axis=-1) - 1)) < 1e-12


def test_uniform_scores_give_uniform_weights():
    U = np.ones((4, 8))
    _, alpha = attention_focus_layer(U, 0, np.zeros((8, 8)), np.zeros((8, 8)))
    np.testing.assert_allclose(alpha, 0.25)


def test_softmax_stable():
    p = softmax(np.array([1000.0, 1000.0, -1000.0]))
    np.testing.assert_allclose(p, [0.5, 0.5, 0.0])


def test_embed_dimension_check():
    with pytest.raises(ValueError):
        embed(np.ones((3, 4)), np.ones((5, 8)))


def test_config_validation():
    with pytest.raises(ValueError):
        EncoderConfig(d=10, heads=4)


def test_encoder_output_and_weights():
    cfg = EncoderConfig(input_dim=5, d=8, heads=2)
    params = init_encoder(cfg, 1)
    X = RNG.standard_normal((7, 5))
    trace = encode_with_attention(X, 5, params, cfg)
    assert trace.output.shape == (8,)
    assert len(trace.alphas) == 2 and len(trace.betas) == 2
    for a in trace.alphas:
        assert abs(a.sum() - 1) < 1e-12
    np.testing.assert_array_equal(encode(X, 5, params, cfg), trace.output)
    dump = attention_dump(trace)
    assert set(dump) == {"alpha", "beta", "output"}
    with pytest.raises(IndexError):
        encode(X, 7, params, cfg)


def _gradcheck(cfg, seed=0, corrupt=1.0):
    params = init_encoder(cfg, seed)
    X = np.random.default_rng(seed + 10).standard_normal((4, cfg.input_dim))
    ego = 2

    def forward(p):
        return encode(X, ego, p, cfg)

    def backward(p, probe):
        g = encode_backward(X, ego, p, cfg, probe)
        return {k: v * corrupt for k, v in g.items()}

    return finite_diff_gradcheck(forward, backward, params, seed=seed)


@pytest.mark.parametrize("heads", [1, 2, 8])
def test_encoder_gradcheck(heads):
    assert _gradcheck(EncoderConfig(input_dim=5, d=8, heads=heads)) < 1e-5


def test_encoder_gradcheck_sqrt_d_scaling():
    assert _gradcheck(EncoderConfig(input_dim=9, d=8, heads=2, per_head_scale=False)) < 1e-5


def test_encoder_gradcheck_residual_layer_norm():
    # layer norm produces a few near-zero gradient entries; compare loosely there
    err = _gradcheck(EncoderConfig(input_dim=5, d=8, heads=2, residual=True, layer_norm=True))
    assert err < 1e-3


def test_gradcheck_detects_corruption():
    assert _gradcheck(EncoderConfig(input_dim=5, d=8, heads=2), corrupt=1.1) > 0.05


def test_gradcheck_requires_float64():
    with pytest.raises(TypeError):
        finite_diff_gradcheck(lambda p: p["w"], lambda p, g: {"w": g}, {"w": np.ones(3, dtype=np.float32)})


def test_relative_error_floor():
    assert relative_error(np.array([1e-9]), np.array([0.0]))[0] == pytest.approx(1e-3)
    assert relative_error(np.array([2.0]), np.array([1.0]))[0] == 0.5


def test_policy_head_outputs():
    cfg = HeadConfig(input_dim=8 + 8 + 4 * 5 * 5 + 3, hidden=8)
    params = init_heads(cfg, 3)
    out = policy_head_forward(RNG.standard_normal(8), RNG.standard_normal(8),
                              np.zeros((4, 5, 5)), (1.0, 0.0, 2.0), params)
    assert out.policy.shape == (5,) and abs(out.policy.sum() - 1) < 1e-12
    assert np.all(out.policy > 0)
    assert 0.0 <= out.blocking <= 1.0
    assert np.isfinite(out.value)
    again = policy_head_forward(RNG.standard_normal(8), RNG.standard_normal(8),
                                np.zeros((4, 5, 5)), (1.0, 0.0, 2.0), params, out.state)
    assert again.state[0].shape == (8,)
    with pytest.raises(ValueError):
        policy_head_forward(np.ones(3), np.ones(8), np.zeros((4, 5, 5)), (0, 0, 0), params)


def test_agent_network_runs_on_bundle():
    from mapfkit.env import reset
    from mapfkit.grid import RoomGenParams, generate_room_map
    from mapfkit.observation import observe
    from mapfkit.skeleton import extract_graph

    g = generate_room_map(16, 16, RoomGenParams(seed=1))
    cells = g.free_cells()
    state = reset(g, [cells[0], cells[5]], [cells[-1], cells[-7]])
    bundle = observe(state, extract_graph(g).nodes, 1)
    net = AgentNetwork(d=8, heads=2, seed=4)
    out = net.forward(bundle)
    assert abs(out.policy.sum() - 1) < 1e-12
    assert np.array_equal(net.forward(bundle).policy, out.policy)
