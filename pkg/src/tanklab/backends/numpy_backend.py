"""Pure-numpy implementation of the network kernels.

Reference semantics for the compiled core in `_core.pyx`; both backends must
agree to floating-point noise (see tests/test_backends.py). Layers are dense
with ReLU on all but the last; weights are (n_in, n_out) row-major.
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"


def mlp_forward(ws, bs, x):
    """Forward pass. Returns (y, acts) with acts[i] the input to layer i."""
    acts = [x]
    h = x
    last = len(ws) - 1
    for i, (w, b) in enumerate(zip(ws, bs)):
        h = h @ w + b
        if i != last:
            np.maximum(h, 0.0, out=h)
            acts.append(h)
    return h, acts


def mlp_backward(ws, bs, acts, dy, need_input_grad=False, need_param_grads=True):
    """Reverse pass for d<y, dy>/dparams (and optionally d/dx).

    `acts` must come from `mlp_forward` on the same parameters. Returns
    (dws, dbs, dx); dws/dbs are None when param grads are not requested,
    dx is None unless requested.
    """
    n = len(ws)
    dws = [None] * n if need_param_grads else None
    dbs = [None] * n if need_param_grads else None
    d = dy
    for i in range(n - 1, -1, -1):
        if need_param_grads:
            dws[i] = acts[i].T @ d
            dbs[i] = d.sum(axis=0)
        if i > 0:
            d = d @ ws[i].T
            d *= acts[i] > 0.0
        elif need_input_grad:
            d = d @ ws[i].T
    dx = d if need_input_grad else None
    return dws, dbs, dx


def adam_step(params, grads, ms, vs, t, lr, beta1, beta2, eps):
    """In-place Adam update with bias correction; `t` is the 1-based step."""
    c1 = 1.0 - beta1 ** t
    c2 = 1.0 - beta2 ** t
    scale = lr / c1
    for p, g, m, v in zip(params, grads, ms, vs):
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * np.square(g)
        p -= scale * m / (np.sqrt(v / c2) + eps)


def soft_update(targets, onlines, tau):
    """targets <- tau*onlines + (1-tau)*targets, in place."""
    for t_arr, o_arr in zip(targets, onlines):
        t_arr *= 1.0 - tau
        t_arr += tau * o_arr
