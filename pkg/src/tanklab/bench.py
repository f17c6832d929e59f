"""Benchmark the kernel backends against each other.

Times the operations that dominate training: dense forward/backward at the
deployed sizes, Adam, target blending, and a composite mimicking one full
agent update. Run via `tanklab bench` or `python benchmarks/bench_backends.py`.
"""

from __future__ import annotations

import time

import numpy as np

from .backends import available_backends, get_backend
from .rng import SplitMix64


def _make_net(sizes, rng):
    ws, bs = [], []
    for n_in, n_out in zip(sizes, sizes[1:]):
        ws.append(rng.uniforms(n_in * n_out).reshape(n_in, n_out) - 0.5)
        bs.append(rng.uniforms(n_out) - 0.5)
    return ws, bs


def _time(fn, repeats):
    fn()  # warm up
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - t0) / repeats


def run_benchmark(repeats: int = 200, batch_size: int = 256) -> dict:
    """Prints a per-backend timing table; returns {backend: {op: seconds}}."""
    rng = SplitMix64(7)
    sizes = (17, 64, 64, 1)
    ws, bs = _make_net(sizes, rng)
    x = rng.uniforms(batch_size * sizes[0]).reshape(batch_size, sizes[0]) - 0.5
    x1 = x[:1].copy()
    results: dict[str, dict[str, float]] = {}

    for name in available_backends():
        backend = get_backend(name)
        ms = [np.zeros_like(w) for w in ws]
        vs = [np.zeros_like(w) for w in ws]
        params = [w.copy() for w in ws]
        grads = [w * 1e-3 for w in ws]
        targets = [w.copy() for w in ws]
        _, acts = backend.mlp_forward(ws, bs, x)
        dy = np.full((batch_size, sizes[-1]), 1.0 / batch_size)

        timings = {
            f"forward b{batch_size}": _time(lambda: backend.mlp_forward(ws, bs, x), repeats),
            "forward b1": _time(lambda: backend.mlp_forward(ws, bs, x1), repeats),
            f"backward b{batch_size}": _time(
                lambda: backend.mlp_backward(ws, bs, acts, dy, True, True), repeats
            ),
            "adam": _time(
                lambda: backend.adam_step(params, grads, ms, vs, 5, 3e-4, 0.9, 0.999, 1e-8),
                repeats,
            ),
            "soft_update": _time(lambda: backend.soft_update(targets, params, 0.005), repeats),
        }
        timings["composite update"] = _composite_time(backend, ws, bs, x, dy, repeats)
        results[name] = timings

    ops = list(next(iter(results.values())))
    width = max(len(op) for op in ops) + 2
    header = "op".ljust(width) + "".join(f"{n:>14}" for n in results)
    print(header)
    print("-" * len(header))
    for op in ops:
        row = op.ljust(width)
        for name in results:
            row += f"{results[name][op] * 1e6:>12.1f}us"
        print(row)
    if "cython" in results and "numpy" in results:
        ratio = results["numpy"]["composite update"] / results["cython"]["composite update"]
        print(f"\ncomposite update speedup (numpy/cython): {ratio:.2f}x")
    return results


def _composite_time(backend, ws, bs, x, dy, repeats):
    """Roughly one agent update: 8 forwards, 3 full + 2 input-grad backwards, 3 adams."""
    ms = [np.zeros_like(w) for w in ws]
    vs = [np.zeros_like(w) for w in ws]
    params = [w.copy() for w in ws]
    targets = [w.copy() for w in ws]

    def one():
        for _ in range(8):
            _, acts = backend.mlp_forward(ws, bs, x)
        for _ in range(3):
            dws, dbs, _ = backend.mlp_backward(ws, bs, acts, dy, False, True)
        for _ in range(2):
            backend.mlp_backward(ws, bs, acts, dy, True, False)
        for _ in range(3):
            backend.adam_step(params, dws, ms, vs, 5, 3e-4, 0.9, 0.999, 1e-8)
        backend.soft_update(targets, params, 0.005)

    return _time(one, max(1, repeats // 4))
