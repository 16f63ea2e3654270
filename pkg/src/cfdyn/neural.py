"""Small differentiable recurrent models with hand-written backpropagation through time.

Arrays are batch-first: hidden states ``(B, D_h)``, trajectories
``(B, T, D_y)``. Every model keeps its parameters in a plain ``dict`` of
float64 arrays so the optimizer, the checkpoint writer and the
finite-difference oracle can treat all models alike.

Rollout convention: ``rollout(h, y, n)`` starts from a state ``h`` and the
input ``y`` observed at the same step, and returns the ``n`` predictions for
the following steps.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

CHECKPOINT_FORMAT = "cfdyn-checkpoint-v1"


class DivergenceError(RuntimeError):
    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _uniform(rng, shape, bound):
    return rng.uniform(-bound, bound, size=shape)


def _zeros_like(params):
    return {k: np.zeros_like(v) for k, v in params.items()}


def _as_batch(x, dim):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[-1] != dim:
        raise ValueError(f"dimension mismatch: expected trailing size {dim}, got {x.shape}")
    return x


def _check_finite(arr, step):
    if not np.all(np.isfinite(arr)):
        raise DivergenceError(f"diverged at step {step}", step)


@dataclass(frozen=True)
class GruModel:
    """Gated recurrent unit with a linear readout.

    Gate layout along the last weight axis is ``[update, reset, candidate]``:

        z  = sigmoid(u Wx_z + h Wh_z + b_z)
        r  = sigmoid(u Wx_r + h Wh_r + b_r)
        n  = tanh(u Wx_n + r * (h Wh_n) + b_n)
        h' = (1 - z) * n + z * h
        y  = h C + c
    """

    hidden_dim: int
    io_dim: int
    params: dict = field(repr=False)
    readout_bias: bool = True

    kind = "gru"

    @classmethod
    def init(cls, hidden_dim, io_dim=1, rng=None, readout_bias=True):
        rng = np.random.default_rng(rng)
        bound = 1.0 / np.sqrt(hidden_dim)
        params = {
            "Wx": _uniform(rng, (io_dim, 3 * hidden_dim), bound),
            "Wh": _uniform(rng, (hidden_dim, 3 * hidden_dim), bound),
            "b": _uniform(rng, (3 * hidden_dim,), bound),
            "C": _uniform(rng, (hidden_dim, io_dim), bound),
        }
        if readout_bias:
            params["c"] = _uniform(rng, (io_dim,), bound)
        return cls(hidden_dim, io_dim, params, readout_bias)

    @classmethod
    def zeros(cls, hidden_dim, io_dim=1, readout_bias=True):
        m = cls.init(hidden_dim, io_dim, 0, readout_bias)
        return replace(m, params=_zeros_like(m.params))

    def with_params(self, params):
        return replace(self, params=params)

    def readout(self, h):
        y = h @ self.params["C"]
        if self.readout_bias:
            y = y + self.params["c"]
        return y

    def _step(self, h, u):
        p, H = self.params, self.hidden_dim
        gx = u @ p["Wx"] + p["b"]
        gh = h @ p["Wh"]
        z = sigmoid(gx[:, :H] + gh[:, :H])
        r = sigmoid(gx[:, H:2 * H] + gh[:, H:2 * H])
        hn = gh[:, 2 * H:]
        n = np.tanh(gx[:, 2 * H:] + r * hn)
        h_new = n + z * (h - n)
        return h_new, (h, u, z, r, n, hn)

    def _step_back(self, cache, g):
        """Backpropagate one step; returns ``(dh, du, d_gx, d_gh)``.

        Weight gradients are left to the caller, which accumulates them for a
        whole sequence with one matrix product.
        """
        h, u, z, r, n, hn = cache
        p, H = self.params, self.hidden_dim
        dan = g * (1.0 - z) * (1.0 - n * n)
        daz = g * (h - n) * z * (1.0 - z)
        dgx = np.empty((g.shape[0], 3 * H))
        dgx[:, :H] = daz
        dgx[:, H:2 * H] = dan * hn * r * (1.0 - r)
        dgx[:, 2 * H:] = dan
        dgh = dgx.copy()
        dgh[:, 2 * H:] *= r
        dh = g * z + dgh @ p["Wh"].T
        du = dgx @ p["Wx"].T
        return dh, du, dgx, dgh

    def _accumulate(self, grads, caches, dgxs, dghs):
        hs = np.concatenate([c[0] for c in caches])
        us = np.concatenate([c[1] for c in caches])
        dgx = np.concatenate(dgxs)
        grads["Wx"] += us.T @ dgx
        grads["b"] += dgx.sum(axis=0)
        grads["Wh"] += hs.T @ np.concatenate(dghs)

    def step(self, h, y):
        """One transition ``h' = f(h, y)`` for a single vector or a batch."""
        single = np.ndim(h) == 1
        h = _as_batch(h, self.hidden_dim)
        y = _as_batch(y, self.io_dim)
        out = self._step(h, y)[0]
        return out[0] if single else out

    def zero_state(self, batch=1):
        return np.zeros((batch, self.hidden_dim))

    # -- teacher-forced warmup ------------------------------------------------
    def warmup_forward(self, obs):
        """Feed observations ``(B, R, D_y)`` from ``h_0 = 0``; returns ``h_R`` and a tape."""
        obs = np.asarray(obs, dtype=float)
        h = self.zero_state(obs.shape[0])
        tape = []
        for t in range(obs.shape[1]):
            h, cache = self._step(h, obs[:, t])
            tape.append(cache)
        return h, tape

    def warmup_backward(self, tape, dh, grads):
        if not tape:
            return dh
        dgxs, dghs = [], []
        for cache in reversed(tape):
            dh, _, dgx, dgh = self._step_back(cache, dh)
            dgxs.append(dgx)
            dghs.append(dgh)
        self._accumulate(grads, tape[::-1], dgxs, dghs)
        return dh

    # -- closed-loop rollout --------------------------------------------------
    def rollout_forward(self, h0, y0, n_steps):
        if n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        h = _as_batch(h0, self.hidden_dim)
        u = _as_batch(y0, self.io_dim)
        ys, tape = [], []
        for t in range(n_steps):
            h, cache = self._step(h, u)
            u = self.readout(h)
            _check_finite(u, t + 1)
            ys.append(u)
            tape.append((cache, h))
        return np.stack(ys, axis=1), tape

    def rollout_backward(self, tape, dY, grads):
        """Accumulate parameter gradients; returns ``(dh0, dy0)``."""
        p = self.params
        C = p["C"]
        dh = np.zeros((dY.shape[0], self.hidden_dim))
        du = np.zeros((dY.shape[0], self.io_dim))
        dys, dgxs, dghs = [], [], []
        for t in range(len(tape) - 1, -1, -1):
            cache, _ = tape[t]
            dy = dY[:, t] + du
            dys.append(dy)
            dh, du, dgx, dgh = self._step_back(cache, dh + dy @ C.T)
            dgxs.append(dgx)
            dghs.append(dgh)
        outs = np.concatenate([h for _, h in reversed(tape)])
        dy_all = np.concatenate(dys)
        grads["C"] += outs.T @ dy_all
        if self.readout_bias:
            grads["c"] += dy_all.sum(axis=0)
        self._accumulate(grads, [c for c, _ in reversed(tape)], dgxs, dghs)
        return dh, du


@dataclass(frozen=True)
class EulerMlpModel:
    """Autonomous latent dynamics ``h' = h + dt * f(h)`` with ``f`` a tanh MLP.

    ``f = W3 tanh(W2 tanh(W1 h + b1) + b2) + b3``; the readout is fixed to the
    first ``io_dim`` latent coordinates.
    """

    hidden_dim: int
    io_dim: int
    width: int
    step_size: float
    params: dict = field(repr=False)

    kind = "rnn"

    def __post_init__(self):
        if not self.step_size > 0:
            raise ValueError("step_size must be positive")
        if self.io_dim > self.hidden_dim:
            raise ValueError("latent state must be at least as large as the output")

    @classmethod
    def init(cls, hidden_dim, io_dim=1, width=500, step_size=0.05, rng=None):
        rng = np.random.default_rng(rng)
        b_in, b_w = 1.0 / np.sqrt(hidden_dim), 1.0 / np.sqrt(width)
        params = {
            "W1": _uniform(rng, (hidden_dim, width), b_in),
            "b1": _uniform(rng, (width,), b_in),
            "W2": _uniform(rng, (width, width), b_w),
            "b2": _uniform(rng, (width,), b_w),
            "W3": _uniform(rng, (width, hidden_dim), b_w),
            "b3": _uniform(rng, (hidden_dim,), b_w),
        }
        return cls(hidden_dim, io_dim, width, float(step_size), params)

    def with_params(self, params):
        return replace(self, params=params)

    def readout(self, h):
        return h[:, : self.io_dim]

    def _step(self, h):
        p = self.params
        s1 = np.tanh(h @ p["W1"] + p["b1"])
        s2 = np.tanh(s1 @ p["W2"] + p["b2"])
        return h + self.step_size * (s2 @ p["W3"] + p["b3"]), (h, s1, s2)

    def _step_back(self, cache, g):
        """Backpropagate one step; returns ``(dh, da1, da2)`` and leaves weights to the caller."""
        h, s1, s2 = cache
        p = self.params
        da2 = (self.step_size * g @ p["W3"].T) * (1.0 - s2 * s2)
        da1 = (da2 @ p["W2"].T) * (1.0 - s1 * s1)
        return g + da1 @ p["W1"].T, da1, da2

    def step(self, h, y=None):
        single = np.ndim(h) == 1
        out = self._step(_as_batch(h, self.hidden_dim))[0]
        return out[0] if single else out

    def rollout_forward(self, h0, y0, n_steps):
        if n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        h = _as_batch(h0, self.hidden_dim)
        ys, tape = [], []
        for t in range(n_steps):
            h, cache = self._step(h)
            _check_finite(h, t + 1)
            ys.append(self.readout(h))
            tape.append(cache)
        return np.stack(ys, axis=1), tape

    def rollout_backward(self, tape, dY, grads):
        dh = np.zeros((dY.shape[0], self.hidden_dim))
        gs, d1s, d2s = [], [], []
        for t in range(len(tape) - 1, -1, -1):
            dh = dh.copy()
            dh[:, : self.io_dim] += dY[:, t]
            gs.append(dh)
            dh, da1, da2 = self._step_back(tape[t], dh)
            d1s.append(da1)
            d2s.append(da2)
        # one stacked product per weight instead of one per time step
        rev = tape[::-1]
        hs, s1, s2 = (np.concatenate([c[i] for c in rev]) for i in range(3))
        df = self.step_size * np.concatenate(gs)
        da1, da2 = np.concatenate(d1s), np.concatenate(d2s)
        grads["W3"] += s2.T @ df
        grads["b3"] += df.sum(axis=0)
        grads["W2"] += s1.T @ da2
        grads["b2"] += da2.sum(axis=0)
        grads["W1"] += hs.T @ da1
        grads["b1"] += da1.sum(axis=0)
        return dh, np.zeros((dY.shape[0], self.io_dim))


@dataclass(frozen=True)
class RecognitionNet:
    """MLP mapping the first ``length`` observations to a latent state in (-1, 1)."""

    length: int
    io_dim: int
    latent_dim: int
    width: int
    params: dict = field(repr=False)

    @classmethod
    def init(cls, length, latent_dim, io_dim=1, width=100, rng=None):
        rng = np.random.default_rng(rng)
        n_in = length * io_dim
        b_in, b_w = 1.0 / np.sqrt(n_in), 1.0 / np.sqrt(width)
        params = {
            "V1": _uniform(rng, (n_in, width), b_in),
            "e1": _uniform(rng, (width,), b_in),
            "V2": _uniform(rng, (width, width), b_w),
            "e2": _uniform(rng, (width,), b_w),
            "V3": _uniform(rng, (width, latent_dim), b_w),
            "e3": _uniform(rng, (latent_dim,), b_w),
        }
        return cls(length, io_dim, latent_dim, width, params)

    def with_params(self, params):
        return replace(self, params=params)

    def forward(self, obs):
        obs = np.asarray(obs, dtype=float)
        if obs.ndim == 2:
            obs = obs[None]
        if obs.shape[1:] != (self.length, self.io_dim):
            raise ValueError(f"recognition expects {self.length} observations of dim {self.io_dim}, got {obs.shape[1:]}")
        p = self.params
        x = obs.reshape(obs.shape[0], -1)
        s1 = np.tanh(x @ p["V1"] + p["e1"])
        s2 = np.tanh(s1 @ p["V2"] + p["e2"])
        h = np.tanh(s2 @ p["V3"] + p["e3"])
        return h, (x, s1, s2, h)

    def backward(self, cache, dh, grads):
        x, s1, s2, h = cache
        p = self.params
        da3 = dh * (1.0 - h * h)
        grads["V3"] += s2.T @ da3
        grads["e3"] += da3.sum(axis=0)
        da2 = (da3 @ p["V3"].T) * (1.0 - s2 * s2)
        grads["V2"] += s1.T @ da2
        grads["e2"] += da2.sum(axis=0)
        da1 = (da2 @ p["V2"].T) * (1.0 - s1 * s1)
        grads["V1"] += x.T @ da1
        grads["e1"] += da1.sum(axis=0)


def gru_step(model: GruModel, h, y):
    return model.step(h, y)


def rollout(model, h_init, y_init, n_steps):
    """Closed-loop ``n_steps`` predictions, shape ``(n_steps, D_y)`` for a single state."""
    single = np.ndim(h_init) == 1
    ys, _ = model.rollout_forward(h_init, y_init if y_init is not None else np.zeros(model.io_dim), n_steps)
    return ys[0] if single else ys


def warmup(model: GruModel, observations):
    """Teacher-forced hidden state after consuming ``observations`` (``(R, D_y)``)."""
    obs = np.asarray(observations, dtype=float).reshape(-1, model.io_dim)
    h, _ = model.warmup_forward(obs[None])
    return h[0]


def recognize(net: RecognitionNet, observations):
    return net.forward(np.asarray(observations, dtype=float).reshape(net.length, net.io_dim))[0][0]


def rmse_loss(pred, target):
    """Pooled RMSE and its gradient with respect to ``pred``."""
    diff = pred - target
    value = float(np.sqrt(np.mean(diff * diff)))
    if not np.isfinite(value):
        raise DivergenceError("non-finite loss")
    grad = diff / (diff.size * value) if value > 0 else np.zeros_like(diff)
    return value, grad


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    @classmethod
    def for_params(cls, params, lr=1e-3, **kw):
        return cls(lr=lr, m=_zeros_like(params), v=_zeros_like(params), **kw)


def adam_step(state: AdamState, params: dict, grads: dict, lr=None):
    """Bias-corrected Adam update; returns ``(new_params, new_state)``."""
    if params.keys() != grads.keys():
        raise ValueError("parameter and gradient keys differ")
    lr = state.lr if lr is None else lr
    t = state.step + 1
    new_p, new_m, new_v = {}, {}, {}
    for k, p in params.items():
        g = grads[k]
        if g.shape != p.shape:
            raise ValueError(f"gradient shape mismatch for {k}: {g.shape} vs {p.shape}")
        m = state.beta1 * state.m[k] + (1 - state.beta1) * g
        v = state.beta2 * state.v[k] + (1 - state.beta2) * g * g
        m_hat = m / (1 - state.beta1**t)
        v_hat = v / (1 - state.beta2**t)
        new_p[k] = p - lr * m_hat / (np.sqrt(v_hat) + state.eps)
        new_m[k], new_v[k] = m, v
    return new_p, replace(state, step=t, m=new_m, v=new_v)


def clip_gradients(grads: dict, max_norm: float | None):
    if not max_norm:
        return grads
    norm = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if norm <= max_norm:
        return grads
    return {k: g * (max_norm / norm) for k, g in grads.items()}


def numerical_gradient(loss_fn, params: dict, eps=1e-5):
    """Central finite differences of ``loss_fn(params)`` for every parameter entry."""
    grads = {}
    for name, value in params.items():
        g = np.zeros_like(value)
        for idx in np.ndindex(value.shape):
            plus = {k: v.copy() for k, v in params.items()}
            minus = {k: v.copy() for k, v in params.items()}
            plus[name][idx] += eps
            minus[name][idx] -= eps
            g[idx] = (loss_fn(plus) - loss_fn(minus)) / (2 * eps)
        grads[name] = g
    return grads


def _pack(params):
    return {k: {"shape": list(v.shape), "data": v.ravel().tolist()} for k, v in params.items()}


def _unpack(blob):
    return {k: np.array(v["data"], dtype=float).reshape(v["shape"]) for k, v in blob.items()}


def model_to_dict(model) -> dict:
    if isinstance(model, GruModel):
        meta = {"type": "gru", "hidden_dim": model.hidden_dim, "io_dim": model.io_dim, "readout_bias": model.readout_bias}
    elif isinstance(model, EulerMlpModel):
        meta = {"type": "euler_mlp", "hidden_dim": model.hidden_dim, "io_dim": model.io_dim,
                "width": model.width, "step_size": model.step_size}
    elif isinstance(model, RecognitionNet):
        meta = {"type": "recognition", "length": model.length, "io_dim": model.io_dim,
                "latent_dim": model.latent_dim, "width": model.width}
    else:
        raise TypeError(f"cannot serialise {type(model).__name__}")
    return {**meta, "params": _pack(model.params)}


def model_from_dict(blob: dict):
    params = _unpack(blob["params"])
    kind = blob["type"]
    if kind == "gru":
        return GruModel(blob["hidden_dim"], blob["io_dim"], params, blob["readout_bias"])
    if kind == "euler_mlp":
        return EulerMlpModel(blob["hidden_dim"], blob["io_dim"], blob["width"], blob["step_size"], params)
    if kind == "recognition":
        return RecognitionNet(blob["length"], blob["io_dim"], blob["latent_dim"], blob["width"], params)
    raise ValueError(f"unknown model type {kind!r}")


def save_checkpoint(path, models: dict, extra: dict | None = None):
    blob = {"format": CHECKPOINT_FORMAT, "models": {k: model_to_dict(m) for k, m in models.items() if m is not None}}
    if extra:
        blob["extra"] = extra
    with open(path, "w") as fh:
        json.dump(blob, fh)


def load_checkpoint(path):
    with open(path) as fh:
        blob = json.load(fh)
    if blob.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"unsupported checkpoint format {blob.get('format')!r}")
    return {k: model_from_dict(v) for k, v in blob["models"].items()}, blob.get("extra", {})
