"""Two stacked gated recurrent layers with a linear head, trained from
scratch with Adam on a root-mean-square loss.

Gate convention per layer, with zero initial hidden state:

    z_t = sigmoid(x_t Wz + h_{t-1} Uz + bz)          update gate
    r_t = sigmoid(x_t Wr + h_{t-1} Ur + br)          reset gate
    n_t = tanh(x_t Wn + (r_t * h_{t-1}) Un + bn)     candidate state
    h_t = z_t * h_{t-1} + (1 - z_t) * n_t

Weights for the three gates are packed as (z | r | n) column blocks.
Gradients come from explicit backpropagation through time; see
``GruLayer.backward`` for the step-by-step chain rule.
"""
from __future__ import annotations

import json
import math

import numpy as np


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


class GruLayer:
    """One recurrent layer operating on (batch, steps, in_dim) sequences."""

    def __init__(self, in_dim: int, hidden: int, rng: np.random.Generator,
                 dtype=np.float64):
        self.in_dim = in_dim
        self.hidden = hidden
        bound_in = 1.0 / math.sqrt(in_dim)
        bound_h = 1.0 / math.sqrt(hidden)
        self.w = rng.uniform(-bound_in, bound_in, size=(in_dim, 3 * hidden)).astype(dtype)
        self.u_zr = rng.uniform(-bound_h, bound_h, size=(hidden, 2 * hidden)).astype(dtype)
        self.u_n = rng.uniform(-bound_h, bound_h, size=(hidden, hidden)).astype(dtype)
        self.b = np.zeros(3 * hidden, dtype=dtype)

    def forward(self, x: np.ndarray):
        """Run the recurrence; returns hidden states (steps+1, batch, hidden)
        and the cache consumed by ``backward``."""
        batch, steps, _ = x.shape
        hh = self.hidden
        h = np.zeros((steps + 1, batch, hh), dtype=self.w.dtype)
        zs = np.empty((steps, batch, hh), dtype=self.w.dtype)
        rs = np.empty_like(zs)
        ns = np.empty_like(zs)
        pre_x = x @ self.w + self.b  # input part of all three gates, all steps
        for t in range(steps):
            px = pre_x[:, t, :]
            zr = _sigmoid(px[:, : 2 * hh] + h[t] @ self.u_zr)
            z = zr[:, :hh]
            r = zr[:, hh:]
            n = np.tanh(px[:, 2 * hh :] + (r * h[t]) @ self.u_n)
            h[t + 1] = z * h[t] + (1.0 - z) * n
            zs[t] = z
            rs[t] = r
            ns[t] = n
        return h, (x, h, zs, rs, ns)

    def backward(self, cache, dh_steps: np.ndarray | None = None,
                 dh_last: np.ndarray | None = None):
        """Backpropagate through time.

        ``dh_steps`` is an optional (batch, steps, hidden) gradient injected
        into every step's hidden state (used when a later layer consumes the
        whole sequence); ``dh_last`` is injected into the final state only.
        Returns (parameter gradients, gradient w.r.t. the input sequence).
        """
        x, h, zs, rs, ns = cache
        batch, steps, _ = x.shape
        hh = self.hidden
        dw = np.zeros_like(self.w)
        du_zr = np.zeros_like(self.u_zr)
        du_n = np.zeros_like(self.u_n)
        db = np.zeros_like(self.b)
        dx = np.empty_like(x)
        carry = np.zeros((batch, hh), dtype=self.w.dtype)
        if dh_last is not None:
            carry = carry + dh_last
        for t in range(steps - 1, -1, -1):
            dh = carry if dh_steps is None else carry + dh_steps[:, t, :]
            z, r, n, h_prev = zs[t], rs[t], ns[t], h[t]
            # h_t = z*h_prev + (1-z)*n
            dn = dh * (1.0 - z)
            dz = dh * (h_prev - n)
            # n = tanh(a_n), a_n = x Wn + (r*h_prev) Un + bn
            da_n = dn * (1.0 - n * n)
            d_rh = da_n @ self.u_n.T
            dr = d_rh * h_prev
            # z, r = sigmoid(a), a = x W + h_prev U + b
            da_z = dz * z * (1.0 - z)
            da_r = dr * r * (1.0 - r)
            da_zr = np.concatenate([da_z, da_r], axis=1)
            xt = x[:, t, :]
            dw[:, : 2 * hh] += xt.T @ da_zr
            dw[:, 2 * hh :] += xt.T @ da_n
            db[: 2 * hh] += da_zr.sum(axis=0)
            db[2 * hh :] += da_n.sum(axis=0)
            du_zr += h_prev.T @ da_zr
            du_n += (r * h_prev).T @ da_n
            dx[:, t, :] = da_zr @ self.w[:, : 2 * hh].T + da_n @ self.w[:, 2 * hh :].T
            carry = dh * z + d_rh * r + da_zr @ self.u_zr.T
        return {"w": dw, "u_zr": du_zr, "u_n": du_n, "b": db}, dx


class GruModel:
    """Two stacked recurrent layers followed by a linear output layer.

    The head maps the final hidden state of the second layer to the output
    vector. Weight init is uniform in +-1/sqrt(fan_in), seeded.
    """

    def __init__(self, input_dim: int = 4, hidden: int = 128,
                 output_dim: int | None = None, seed: int = 0, dtype=np.float64):
        output_dim = input_dim if output_dim is None else output_dim
        rng = np.random.default_rng(seed)
        self.input_dim = input_dim
        self.hidden = hidden
        self.output_dim = output_dim
        self.layer1 = GruLayer(input_dim, hidden, rng, dtype)
        self.layer2 = GruLayer(hidden, hidden, rng, dtype)
        bound = 1.0 / math.sqrt(hidden)
        self.w_out = rng.uniform(-bound, bound, size=(hidden, output_dim)).astype(dtype)
        self.b_out = np.zeros(output_dim, dtype=dtype)

    @property
    def dtype(self):
        return self.w_out.dtype

    def forward(self, x: np.ndarray):
        """x: (batch, steps, input_dim) -> (output (batch, output_dim), cache)."""
        x = np.ascontiguousarray(x, dtype=self.dtype)
        h1, c1 = self.layer1.forward(x)
        h1_seq = np.ascontiguousarray(np.swapaxes(h1[1:], 0, 1))
        h2, c2 = self.layer2.forward(h1_seq)
        y = h2[-1] @ self.w_out + self.b_out
        return y, (c1, c2, h2[-1])

    def backward(self, cache, dy: np.ndarray) -> dict[str, np.ndarray]:
        """Gradients of a scalar loss w.r.t. every parameter, given dloss/dy."""
        c1, c2, h2_last = cache
        dy = dy.astype(self.dtype, copy=False)
        grads = {
            "head.w": h2_last.T @ dy,
            "head.b": dy.sum(axis=0),
        }
        dh2_last = dy @ self.w_out.T
        g2, dh1_seq = self.layer2.backward(c2, dh_steps=None, dh_last=dh2_last)
        g1, _ = self.layer1.backward(c1, dh_steps=dh1_seq, dh_last=None)
        for k, v in g1.items():
            grads[f"l1.{k}"] = v
        for k, v in g2.items():
            grads[f"l2.{k}"] = v
        return grads

    def parameters(self) -> dict[str, np.ndarray]:
        """Live views of every parameter array, keyed by a stable name."""
        return {
            "l1.w": self.layer1.w,
            "l1.u_zr": self.layer1.u_zr,
            "l1.u_n": self.layer1.u_n,
            "l1.b": self.layer1.b,
            "l2.w": self.layer2.w,
            "l2.u_zr": self.layer2.u_zr,
            "l2.u_n": self.layer2.u_n,
            "l2.b": self.layer2.b,
            "head.w": self.w_out,
            "head.b": self.b_out,
        }

    def set_parameters(self, values: dict[str, np.ndarray]) -> None:
        params = self.parameters()
        if set(values) != set(params):
            raise ValueError("parameter name mismatch")
        for name, arr in values.items():
            if params[name].shape != arr.shape:
                raise ValueError(f"shape mismatch for {name}")
            params[name][...] = arr


def rmse_loss(pred: np.ndarray, target: np.ndarray):
    """Root-mean-square error over all elements, plus d(loss)/d(pred).

    At exactly zero error the square root is not differentiable; the
    subgradient 0 is used, which leaves the minimizer unchanged.
    """
    err = pred - target
    mse = float(np.mean(err * err))
    loss = math.sqrt(mse)
    if loss < 1e-12:
        return loss, np.zeros_like(pred)
    return loss, err / (err.size * loss)


class Adam:
    """Adam optimizer over a named parameter dict, updating in place."""

    def __init__(self, params: dict[str, np.ndarray], lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for k, p in params.items():
            g = grads[k]
            m = self.m[k]
            v = self.v[k]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------
def save_model(model: GruModel, path: str, extra: dict | None = None) -> None:
    """Write a checkpoint: one array per parameter plus a JSON metadata entry.

    Keys: ``meta`` holds a JSON string with input_dim/hidden/output_dim/dtype
    and any ``extra`` dict (e.g. the prediction window configuration);
    ``param:<name>`` holds each parameter array verbatim, so a round trip is
    bit-exact.
    """
    meta = {
        "input_dim": model.input_dim,
        "hidden": model.hidden,
        "output_dim": model.output_dim,
        "dtype": np.dtype(model.dtype).name,
        "extra": extra or {},
    }
    arrays = {f"param:{k}": v for k, v in model.parameters().items()}
    arrays["meta"] = np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8)
    np.savez(path, **arrays)


def load_model(path: str) -> tuple[GruModel, dict]:
    """Read a checkpoint written by ``save_model``; returns (model, extra)."""
    with np.load(path) as data:
        meta = json.loads(bytes(data["meta"]).decode())
        model = GruModel(
            input_dim=meta["input_dim"],
            hidden=meta["hidden"],
            output_dim=meta["output_dim"],
            seed=0,
            dtype=np.dtype(meta["dtype"]),
        )
        model.set_parameters(
            {k[len("param:"):]: data[k] for k in data.files if k.startswith("param:")}
        )
    return model, meta["extra"]
