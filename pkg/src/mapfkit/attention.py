"""Small numpy graph encoder with an explicit backward pass.

Row-vector convention throughout: ``U = X @ W + b``. The encoder is

    embed -> n_focus attention-focusing layers -> n_self self-attention layers
    -> row of the ego node

An attention-focusing layer scores every node against the ego node's query
and *rescales* each embedding by its softmax weight (``u'_i = alpha_i u_i``);
rows are never mixed. Self-attention is standard multi-head scaled
dot-product attention whose head outputs are concatenated back to ``d``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

Params = dict[str, np.ndarray]


@dataclass(frozen=True)
class EncoderConfig:
    input_dim: int = 5
    d: int = 8
    n_focus: int = 2
    n_self: int = 2
    heads: int = 8
    # False: divide scores by sqrt(d) inside every head instead of sqrt(d/heads)
    per_head_scale: bool = True
    residual: bool = False
    layer_norm: bool = False

    def __post_init__(self):
        if self.d <= 0 or self.heads <= 0 or self.d % self.heads:
            raise ValueError(f"d={self.d} must be a positive multiple of heads={self.heads}")
        if self.input_dim <= 0 or self.n_focus < 0 or self.n_self < 0:
            raise ValueError("input_dim must be positive and layer counts non-negative")

    @property
    def head_dim(self) -> int:
        return self.d // self.heads


# Production-size settings; tests run at d=8.
FULL_STATIC_ENCODER = EncoderConfig(input_dim=5, d=512, heads=8)
FULL_INTENT_ENCODER = EncoderConfig(input_dim=9, d=512, heads=8)


def _uniform(rng: np.random.Generator, fan_in: int, shape) -> np.ndarray:
    bound = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def init_encoder(cfg: EncoderConfig, seed: int = 0) -> Params:
    rng = np.random.default_rng(seed)
    d, hd = cfg.d, cfg.head_dim
    p: Params = {
        "embed.W": _uniform(rng, cfg.input_dim, (cfg.input_dim, d)),
        "embed.b": _uniform(rng, cfg.input_dim, (d,)),
    }
    for layer in range(cfg.n_focus):
        p[f"focus{layer}.Wq"] = _uniform(rng, d, (d, d))
        p[f"focus{layer}.Wk"] = _uniform(rng, d, (d, d))
    for layer in range(cfg.n_self):
        for name in ("Wq", "Wk", "Wv"):
            p[f"self{layer}.{name}"] = _uniform(rng, d, (cfg.heads, d, hd))
    return p


def softmax(s: np.ndarray, axis: int = -1) -> np.ndarray:
    e = np.exp(s - s.max(axis=axis, keepdims=True))
    return e / e.sum(axis=axis, keepdims=True)


def embed(features, W: np.ndarray, b: np.ndarray | None = None) -> np.ndarray:
    X = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if X.shape[1] != W.shape[0]:
        raise ValueError(f"feature dimension {X.shape[1]} does not match embedding input {W.shape[0]}")
    U = X @ W
    return U if b is None else U + b


# -- attention focusing ------------------------------------------------------

def _focus_forward(U, ego, Wq, Wk):
    scale = math.sqrt(U.shape[1])
    q = U[ego] @ Wq
    K = U @ Wk
    alpha = softmax(K @ q / scale)
    return alpha[:, None] * U, alpha, (U, ego, Wq, Wk, q, K, alpha, scale)


def _focus_backward(dout, cache):
    U, ego, Wq, Wk, q, K, alpha, scale = cache
    dalpha = (dout * U).sum(axis=1)
    dU = alpha[:, None] * dout
    ds = alpha * (dalpha - alpha @ dalpha)
    dq = K.T @ ds / scale
    dK = np.outer(ds, q) / scale
    dWk = U.T @ dK
    dU += dK @ Wk.T
    dWq = np.outer(U[ego], dq)
    dU[ego] += Wq @ dq
    return dU, dWq, dWk


def attention_focus_layer(U: np.ndarray, ego_index: int, Wq: np.ndarray, Wk: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Returns the rescaled rows and the ego attention weights."""
    U = np.asarray(U, dtype=np.float64)
    if not 0 <= ego_index < len(U):
        raise IndexError(f"ego index {ego_index} outside {len(U)} rows")
    out, alpha, _ = _focus_forward(U, ego_index, Wq, Wk)
    return out, alpha


# -- multi-head self-attention ----------------------------------------------

def _self_forward(U, Wq, Wk, Wv, per_head_scale):
    heads, d, hd = Wq.shape
    scale = math.sqrt(hd if per_head_scale else d)
    Q = np.einsum("nd,hde->hne", U, Wq)
    K = np.einsum("nd,hde->hne", U, Wk)
    V = np.einsum("nd,hde->hne", U, Wv)
    beta = softmax(Q @ K.transpose(0, 2, 1) / scale, axis=-1)
    Zh = beta @ V
    Z = Zh.transpose(1, 0, 2).reshape(len(U), heads * hd)
    return Z, beta, (U, Wq, Wk, Wv, Q, K, V, beta, scale)


def _self_backward(dZ, cache):
    U, Wq, Wk, Wv, Q, K, V, beta, scale = cache
    heads, _, hd = Wq.shape
    dZh = dZ.reshape(len(U), heads, hd).transpose(1, 0, 2)
    dbeta = dZh @ V.transpose(0, 2, 1)
    dV = beta.transpose(0, 2, 1) @ dZh
    dS = beta * (dbeta - (beta * dbeta).sum(axis=-1, keepdims=True)) / scale
    dQ = dS @ K
    dK = dS.transpose(0, 2, 1) @ Q
    dWq = np.einsum("nd,hne->hde", U, dQ)
    dWk = np.einsum("nd,hne->hde", U, dK)
    dWv = np.einsum("nd,hne->hde", U, dV)
    dU = (
        np.einsum("hne,hde->nd", dQ, Wq)
        + np.einsum("hne,hde->nd", dK, Wk)
        + np.einsum("hne,hde->nd", dV, Wv)
    )
    return dU, dWq, dWk, dWv


def self_attention_layer(U: np.ndarray, Wq: np.ndarray, Wk: np.ndarray, Wv: np.ndarray,
                         per_head_scale: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Returns Z (n x d) and the attention weights (heads x n x n).

    Projections are stacked per head with shape ``(heads, d, d/heads)``.
    """
    Z, beta, _ = _self_forward(np.asarray(U, dtype=np.float64), Wq, Wk, Wv, per_head_scale)
    return Z, beta


def _ln_forward(X, eps=1e-5):
    mu = X.mean(axis=1, keepdims=True)
    inv = 1.0 / np.sqrt(X.var(axis=1, keepdims=True) + eps)
    Y = (X - mu) * inv
    return Y, (Y, inv)


def _ln_backward(dY, cache):
    Y, inv = cache
    d = Y.shape[1]
    return inv / d * (d * dY - dY.sum(axis=1, keepdims=True) - Y * (dY * Y).sum(axis=1, keepdims=True))


# -- full encoder --------------------------------------------------------------

@dataclass
class EncoderTrace:
    output: np.ndarray
    alphas: list[np.ndarray]
    betas: list[np.ndarray]
    caches: list


def _encode(X, ego, params: Params, cfg: EncoderConfig) -> EncoderTrace:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if not 0 <= ego < len(X):
        raise IndexError(f"ego index {ego} outside {len(X)} rows")
    U = embed(X, params["embed.W"], params["embed.b"])
    caches: list = [("embed", X)]
    alphas, betas = [], []
    for layer in range(cfg.n_focus):
        U, alpha, cache = _focus_forward(U, ego, params[f"focus{layer}.Wq"], params[f"focus{layer}.Wk"])
        alphas.append(alpha)
        caches.append(("focus", layer, cache))
    for layer in range(cfg.n_self):
        Z, beta, cache = _self_forward(
            U, params[f"self{layer}.Wq"], params[f"self{layer}.Wk"], params[f"self{layer}.Wv"], cfg.per_head_scale
        )
        betas.append(beta)
        caches.append(("self", layer, cache))
        if cfg.residual:
            Z = Z + U
        if cfg.layer_norm:
            Z, ln = _ln_forward(Z)
            caches.append(("ln", layer, ln))
        U = Z
    return EncoderTrace(U[ego].copy(), alphas, betas, caches)


def encode(features, ego_index: int, params: Params, cfg: EncoderConfig) -> np.ndarray:
    """The ego node's final d-dimensional feature."""
    return _encode(features, ego_index, params, cfg).output


def encode_with_attention(features, ego_index: int, params: Params, cfg: EncoderConfig) -> EncoderTrace:
    return _encode(features, ego_index, params, cfg)


def encode_backward(features, ego_index: int, params: Params, cfg: EncoderConfig, grad_out) -> Params:
    """Gradient of ``grad_out . encode(...)`` with respect to every parameter."""
    trace = _encode(features, ego_index, params, cfg)
    n = len(trace.caches[0][1])
    dU = np.zeros((n, cfg.d))
    dU[ego_index] = grad_out
    grads: Params = {}
    for entry in reversed(trace.caches[1:]):
        kind, layer, cache = entry
        if kind == "ln":
            dU = _ln_backward(dU, cache)
        elif kind == "self":
            dZ = dU
            dU, dWq, dWk, dWv = _self_backward(dZ, cache)
            if cfg.residual:
                dU = dU + dZ
            grads[f"self{layer}.Wq"], grads[f"self{layer}.Wk"], grads[f"self{layer}.Wv"] = dWq, dWk, dWv
        else:
            dU, dWq, dWk = _focus_backward(dU, cache)
            grads[f"focus{layer}.Wq"], grads[f"focus{layer}.Wk"] = dWq, dWk
    X = trace.caches[0][1]
    grads["embed.W"] = X.T @ dU
    grads["embed.b"] = dU.sum(axis=0)
    return grads


def attention_dump(trace: EncoderTrace) -> dict:
    return {
        "alpha": [a.tolist() for a in trace.alphas],
        "beta": [b.tolist() for b in trace.betas],
        "output": trace.output.tolist(),
    }


# -- downstream heads ------------------------------------------------------------

@dataclass(frozen=True)
class HeadConfig:
    input_dim: int
    hidden: int = 8
    n_actions: int = 5


def init_heads(cfg: HeadConfig, seed: int = 0) -> Params:
    rng = np.random.default_rng(seed)
    h = cfg.hidden
    return {
        "in.W": _uniform(rng, cfg.input_dim, (cfg.input_dim, h)),
        "in.b": _uniform(rng, cfg.input_dim, (h,)),
        "res.W1": _uniform(rng, h, (h, h)),
        "res.b1": _uniform(rng, h, (h,)),
        "res.W2": _uniform(rng, h, (h, h)),
        "res.b2": _uniform(rng, h, (h,)),
        "lstm.W": _uniform(rng, 2 * h, (2 * h, 4 * h)),
        "lstm.b": _uniform(rng, 2 * h, (4 * h,)),
        "policy.W": _uniform(rng, h, (h, cfg.n_actions)),
        "policy.b": _uniform(rng, h, (cfg.n_actions,)),
        "value.W": _uniform(rng, h, (h, 1)),
        "value.b": _uniform(rng, h, (1,)),
        "blocking.W": _uniform(rng, h, (h, 1)),
        "blocking.b": _uniform(rng, h, (1,)),
    }


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


@dataclass(frozen=True)
class HeadOutput:
    policy: np.ndarray
    value: float
    blocking: float
    state: tuple[np.ndarray, np.ndarray]
    logits: np.ndarray


def zero_state(hidden: int) -> tuple[np.ndarray, np.ndarray]:
    return np.zeros(hidden), np.zeros(hidden)


def policy_head_forward(static_feat, intent_feat, local_feat, goal_vec, params: Params,
                        state: tuple[np.ndarray, np.ndarray] | None = None) -> HeadOutput:
    """Concatenate features -> residual block -> LSTM cell -> three outputs."""
    x = np.concatenate([np.ravel(np.asarray(v, dtype=np.float64))
                        for v in (static_feat, intent_feat, local_feat, goal_vec)])
    W = params["in.W"]
    if x.shape[0] != W.shape[0]:
        raise ValueError(f"concatenated features have {x.shape[0]} entries, head expects {W.shape[0]}")
    hidden = W.shape[1]
    h_prev, c_prev = state if state is not None else zero_state(hidden)

    x = x @ W + params["in.b"]
    r = np.maximum(x @ params["res.W1"] + params["res.b1"], 0.0) @ params["res.W2"] + params["res.b2"]
    x = np.maximum(x + r, 0.0)

    gates = np.concatenate([x, h_prev]) @ params["lstm.W"] + params["lstm.b"]
    i, f, g, o = np.split(gates, 4)
    c = _sigmoid(f) * c_prev + _sigmoid(i) * np.tanh(g)
    h = _sigmoid(o) * np.tanh(c)

    logits = h @ params["policy.W"] + params["policy.b"]
    policy = softmax(logits)
    value = float((h @ params["value.W"] + params["value.b"])[0])
    blocking = float(_sigmoid(h @ params["blocking.W"] + params["blocking.b"])[0])
    return HeadOutput(policy, value, blocking, (h, c), logits)


class AgentNetwork:
    """Two graph encoders feeding the recurrent policy/value/blocking heads.

    The local FOV tensor is flattened as-is; the convolutional stack that
    would normally compress it is not modelled here.
    """

    def __init__(self, d: int = 8, heads: int = 2, n_focus: int = 2, n_self: int = 2,
                 fov: int = 11, seed: int = 0):
        self.static_cfg = EncoderConfig(5, d, n_focus, n_self, heads)
        self.intent_cfg = EncoderConfig(9, d, n_focus, n_self, heads)
        self.static_params = init_encoder(self.static_cfg, seed)
        self.intent_params = init_encoder(self.intent_cfg, seed + 1)
        self.head_cfg = HeadConfig(input_dim=2 * d + 4 * fov * fov + 3, hidden=d)
        self.head_params = init_heads(self.head_cfg, seed + 2)

    def forward(self, bundle, state=None) -> HeadOutput:
        s = encode(bundle.static_graph.rows, bundle.static_graph.ego_index, self.static_params, self.static_cfg)
        z = encode(bundle.intent_graph.rows, bundle.ego_id, self.intent_params, self.intent_cfg)
        return policy_head_forward(s, z, bundle.local.channels, bundle.local.goal_vec, self.head_params, state)
