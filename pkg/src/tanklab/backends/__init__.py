"""Kernel backend selection.

The hot kernels (dense forward/backward, Adam, target blending) exist twice:
a Cython extension (`tanklab.backends._core`) and a numpy fallback with
identical semantics. The compiled core is preferred when importable; set
TANKLAB_BACKEND=numpy or TANKLAB_BACKEND=cython to force one. Results are
deterministic within a backend; the two backends agree only to rounding.
"""

from __future__ import annotations

import os

from . import numpy_backend

_requested = os.environ.get("TANKLAB_BACKEND", "auto").lower()

if _requested not in ("auto", "cython", "numpy"):
    raise ValueError(
        f"TANKLAB_BACKEND must be auto, cython or numpy, got {_requested!r}"
    )

_impl = None
if _requested in ("auto", "cython"):
    try:
        from . import _core as _impl  # type: ignore[attr-defined]
    except ImportError:
        if _requested == "cython":
            raise
if _impl is None:
    _impl = numpy_backend

BACKEND_NAME: str = _impl.NAME

mlp_forward = _impl.mlp_forward
mlp_backward = _impl.mlp_backward
adam_step = _impl.adam_step
soft_update = _impl.soft_update


def get_backend(name: str):
    """Fetch a backend module by name (used by the benchmark and parity tests)."""
    if name == "numpy":
        return numpy_backend
    if name == "cython":
        from . import _core  # type: ignore[attr-defined]

        return _core
    raise ValueError(f"unknown backend {name!r}")


def available_backends() -> list[str]:
    names = ["numpy"]
    try:
        from . import _core  # noqa: F401
    except ImportError:
        pass
    else:
        names.append("cython")
    return names
