"""Small dense networks with exact reverse-mode gradients and Adam.

Everything is float64; weight init is uniform in +-1/sqrt(fan_in) drawn from
a SplitMix64 stream, so a net is reproducible from its construction seed.
The arithmetic itself lives in `tanklab.backends` (compiled core or numpy).
"""

from __future__ import annotations

import json

import numpy as np

from . import backends
from .rng import SplitMix64

FORMAT_VERSION = 1


class Mlp:
    """Dense ReLU network; identity on the output layer."""

    def __init__(self, sizes, ws, bs):
        self.sizes = tuple(int(s) for s in sizes)
        self.ws = ws
        self.bs = bs

    @classmethod
    def initialized(cls, sizes, rng: SplitMix64) -> "Mlp":
        ws, bs = [], []
        for n_in, n_out in zip(sizes, sizes[1:]):
            bound = 1.0 / np.sqrt(n_in)
            ws.append((rng.uniforms(n_in * n_out).reshape(n_in, n_out) * 2.0 - 1.0) * bound)
            bs.append((rng.uniforms(n_out) * 2.0 - 1.0) * bound)
        return cls(sizes, ws, bs)

    @property
    def n_inputs(self) -> int:
        return self.sizes[0]

    @property
    def n_outputs(self) -> int:
        return self.sizes[-1]

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Evaluate the net; accepts (n_in,) or (batch, n_in)."""
        squeeze = x.ndim == 1
        if squeeze:
            x = x.reshape(1, -1)
        if x.shape[1] != self.n_inputs:
            raise ValueError(f"expected input size {self.n_inputs}, got {x.shape[1]}")
        y, _ = backends.mlp_forward(self.ws, self.bs, x)
        return y[0] if squeeze else y

    def forward_cached(self, x: np.ndarray):
        """Batched forward returning (y, cache) for a later `backward`."""
        if x.ndim != 2 or x.shape[1] != self.n_inputs:
            raise ValueError(f"expected (batch, {self.n_inputs}) input, got {x.shape}")
        return backends.mlp_forward(self.ws, self.bs, x)

    def backward(self, cache, dy, need_input_grad=False, need_param_grads=True):
        """Gradients of <output, dy> w.r.t. parameters (and input if asked).

        Returns (grads, dx) where grads is the flat [dw0, db0, dw1, ...] list
        aligned with `parameters()`, or None when not requested.
        """
        if dy.shape[1] != self.n_outputs:
            raise ValueError(f"expected output grad size {self.n_outputs}, got {dy.shape[1]}")
        dws, dbs, dx = backends.mlp_backward(
            self.ws, self.bs, cache, dy, need_input_grad, need_param_grads
        )
        if dws is None:
            return None, dx
        grads = []
        for dw, db in zip(dws, dbs):
            grads.append(dw)
            grads.append(db)
        return grads, dx

    def parameters(self) -> list[np.ndarray]:
        """Flat parameter list [w0, b0, w1, b1, ...]; arrays are live views."""
        out = []
        for w, b in zip(self.ws, self.bs):
            out.append(w)
            out.append(b)
        return out

    def copy(self) -> "Mlp":
        return Mlp(self.sizes, [w.copy() for w in self.ws], [b.copy() for b in self.bs])

    def to_doc(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "sizes": list(self.sizes),
            "weights": [w.ravel().tolist() for w in self.ws],
            "biases": [b.tolist() for b in self.bs],
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "Mlp":
        if doc.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported network format: {doc.get('format_version')!r}")
        sizes = doc["sizes"]
        ws, bs = [], []
        for i, (n_in, n_out) in enumerate(zip(sizes, sizes[1:])):
            ws.append(np.array(doc["weights"][i]).reshape(n_in, n_out))
            bs.append(np.array(doc["biases"][i]))
        return cls(sizes, ws, bs)

    def to_json(self) -> str:
        return json.dumps(self.to_doc(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Mlp":
        return cls.from_doc(json.loads(text))


class AdamState:
    """Per-parameter Adam moments for one network (or any array list)."""

    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.ms = [np.zeros_like(p) for p in params]
        self.vs = [np.zeros_like(p) for p in params]
        self.t = 0
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps

    def step(self, params, grads):
        """One Adam update, in place on `params`."""
        if len(params) != len(self.ms):
            raise ValueError("parameter/moment count mismatch")
        self.t += 1
        backends.adam_step(
            params, grads, self.ms, self.vs, self.t,
            self.lr, self.beta1, self.beta2, self.eps,
        )

    def to_doc(self) -> dict:
        return {
            "t": self.t,
            "lr": self.lr,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "eps": self.eps,
            "ms": [m.ravel().tolist() for m in self.ms],
            "vs": [v.ravel().tolist() for v in self.vs],
        }

    def load_doc(self, doc: dict):
        self.t = doc["t"]
        self.lr = doc["lr"]
        self.beta1 = doc["beta1"]
        self.beta2 = doc["beta2"]
        self.eps = doc["eps"]
        for m, flat in zip(self.ms, doc["ms"]):
            m[...] = np.array(flat).reshape(m.shape)
        for v, flat in zip(self.vs, doc["vs"]):
            v[...] = np.array(flat).reshape(v.shape)


def adam_step(params, grads, state: AdamState):
    """Functional-style wrapper kept for symmetry with the backend kernels."""
    state.step(params, grads)
    return params, state
