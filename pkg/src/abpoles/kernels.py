"""Element kernels: compiled extension when built, numpy fallback otherwise.

Set ``ABPOLES_PURE_PYTHON=1`` to force the fallback.
"""
from __future__ import annotations

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("ABPOLES_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled  # type: ignore[attr-defined]
    except ImportError:  # extension not built
        _compiled = None
    if _compiled is not None:
        _impl = _compiled
        BACKEND = "cython"


def get_backend(name: str | None = None):
    """Return the kernel module for ``name`` ('cython', 'python' or None for the default)."""
    if name is None:
        return _impl
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels  # type: ignore[attr-defined]

        return _kernels
    raise ValueError(f"unknown backend {name!r}")


def p1_elements(P, backend: str | None = None):
    return get_backend(backend).p1_elements(P)


def magnetic_elements(P, poles, rho, pole_local, qb, qw, sb, sw, backend: str | None = None):
    return get_backend(backend).magnetic_elements(P, poles, rho, pole_local, qb, qw, sb, sw)
