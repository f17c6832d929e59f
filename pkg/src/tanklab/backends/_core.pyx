# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled network kernels: BLAS-backed dense layers with fused bias/ReLU,
plus flat-loop Adam and target blending. Mirrors numpy_backend exactly."""

import numpy as np

from libc.math cimport sqrt
from scipy.linalg.cython_blas cimport dgemm

NAME = "cython"


cdef void _matmul(bint ta, bint tb,
                  double[:, ::1] a, double[:, ::1] b, double[:, ::1] c,
                  double beta) noexcept nogil:
    # c = op(a) @ op(b) for row-major buffers, via the column-major transpose trick.
    cdef int m = a.shape[1] if ta else a.shape[0]
    cdef int k = a.shape[0] if ta else a.shape[1]
    cdef int n = b.shape[0] if tb else b.shape[1]
    cdef int lda = <int> a.shape[1]
    cdef int ldb = <int> b.shape[1]
    cdef int ldc = <int> c.shape[1]
    cdef double alpha = 1.0
    cdef char fa = b'T' if ta else b'N'
    cdef char fb = b'T' if tb else b'N'
    dgemm(&fb, &fa, &n, &m, &k, &alpha, &b[0, 0], &ldb, &a[0, 0], &lda,
          &beta, &c[0, 0], &ldc)


def matmul(bint ta, bint tb, double[:, ::1] a, double[:, ::1] b,
           double[:, ::1] out, double beta=0.0):
    """out = op(a) @ op(b) (+ beta*out); exposed for tests and benchmarks."""
    _matmul(ta, tb, a, b, out, beta)


def mlp_forward(list ws, list bs, object x):
    """Forward pass. Returns (y, acts) with acts[i] the input to layer i."""
    cdef double[:, ::1] hv, ov, wv
    cdef double[::1] bv
    cdef Py_ssize_t r, cidx, rows, cols
    cdef Py_ssize_t i, last = len(ws) - 1
    cdef bint relu
    h = np.ascontiguousarray(x, dtype=np.float64)
    acts = [h]
    for i in range(len(ws)):
        wv = ws[i]
        bv = bs[i]
        hv = h
        out = np.empty((hv.shape[0], wv.shape[1]))
        ov = out
        _matmul(False, False, hv, wv, ov, 0.0)
        rows = ov.shape[0]
        cols = ov.shape[1]
        relu = i != last
        with nogil:
            if relu:
                for r in range(rows):
                    for cidx in range(cols):
                        ov[r, cidx] = max(ov[r, cidx] + bv[cidx], 0.0)
            else:
                for r in range(rows):
                    for cidx in range(cols):
                        ov[r, cidx] += bv[cidx]
        h = out
        if relu:
            acts.append(h)
    return h, acts


def mlp_backward(list ws, list bs, list acts, object dy,
                 bint need_input_grad=False, bint need_param_grads=True):
    """Reverse pass matching numpy_backend.mlp_backward."""
    cdef double[:, ::1] dv, dxv, actv, dwv, wv
    cdef double[::1] dbv
    cdef Py_ssize_t r, cidx, rows, cols
    cdef Py_ssize_t i, n = len(ws)
    d = np.ascontiguousarray(dy, dtype=np.float64)
    dws = [None] * n if need_param_grads else None
    dbs = [None] * n if need_param_grads else None
    for i in range(n - 1, -1, -1):
        act = acts[i]
        actv = act
        wv = ws[i]
        dv = d
        if need_param_grads:
            dw = np.empty((actv.shape[1], dv.shape[1]))
            dwv = dw
            _matmul(True, False, actv, dv, dwv, 0.0)
            db = np.empty(dv.shape[1])
            dbv = db
            rows = dv.shape[0]
            cols = dv.shape[1]
            with nogil:
                for cidx in range(cols):
                    dbv[cidx] = 0.0
                for r in range(rows):
                    for cidx in range(cols):
                        dbv[cidx] += dv[r, cidx]
            dws[i] = dw
            dbs[i] = db
        if i > 0 or need_input_grad:
            dx = np.empty((dv.shape[0], wv.shape[0]))
            dxv = dx
            _matmul(False, True, dv, wv, dxv, 0.0)
            if i > 0:
                rows = dxv.shape[0]
                cols = dxv.shape[1]
                with nogil:
                    for r in range(rows):
                        for cidx in range(cols):
                            dxv[r, cidx] *= <double> (actv[r, cidx] > 0.0)
            d = dx
    return dws, dbs, (d if need_input_grad else None)


def adam_step(list params, list grads, list ms, list vs, long t,
              double lr, double beta1, double beta2, double eps):
    """In-place Adam update with bias correction; `t` is the 1-based step."""
    cdef double c1 = 1.0 - beta1 ** t
    cdef double c2 = 1.0 - beta2 ** t
    cdef double scale = lr / c1
    cdef double inv_c2 = 1.0 / c2
    cdef double[::1] p, g, m, v
    cdef Py_ssize_t i, j, size
    cdef double gj
    for i in range(len(params)):
        p = np.ravel(params[i])
        g = np.ravel(grads[i])
        m = np.ravel(ms[i])
        v = np.ravel(vs[i])
        size = p.shape[0]
        with nogil:
            for j in range(size):
                gj = g[j]
                m[j] = beta1 * m[j] + (1.0 - beta1) * gj
                v[j] = beta2 * v[j] + (1.0 - beta2) * gj * gj
                p[j] -= scale * m[j] / (sqrt(v[j] * inv_c2) + eps)


def soft_update(list targets, list onlines, double tau):
    """targets <- tau*onlines + (1-tau)*targets, in place."""
    cdef double[::1] t_arr, o_arr
    cdef Py_ssize_t i, j, size
    cdef double keep = 1.0 - tau
    for i in range(len(targets)):
        t_arr = np.ravel(targets[i])
        o_arr = np.ravel(onlines[i])
        size = t_arr.shape[0]
        with nogil:
            for j in range(size):
                t_arr[j] = keep * t_arr[j] + tau * o_arr[j]

