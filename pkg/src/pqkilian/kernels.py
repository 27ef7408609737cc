"""Hot measurement loops, compiled when the extension is available.

Set ``PQKILIAN_PURE_PYTHON=1`` to force the NumPy implementation.
"""
from __future__ import annotations

import os

import numpy as np

from . import _pykernels
from .errors import NumericalDegeneracy

_impl = _pykernels
BACKEND = "python"
if os.environ.get("PQKILIAN_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]
        BACKEND = "compiled"
    except ImportError:
        pass


def backend(name: str | None = None):
    """Return the kernel module for ``name`` ('compiled' or 'python'), default current."""
    if name is None:
        return _impl
    if name == "python":
        return _pykernels
    if name == "compiled":
        from . import _ckernels
        return _ckernels
    raise ValueError(name)


def dense_alternate(PA, PB, v, uniforms, impl=None):
    impl = impl or _impl
    bits, out, status = impl.dense_alternate(
        np.ascontiguousarray(PA, dtype=complex), np.ascontiguousarray(PB, dtype=complex),
        np.asarray(v, dtype=complex), np.ascontiguousarray(uniforms, dtype=float))
    if status >= 0:
        raise NumericalDegeneracy(f"degenerate branch selected at step {status}")
    return np.asarray(bits), np.asarray(out)


def workspace_alternate(G, u, X, d, n_pairs, stop_on_plus, uniforms, impl=None):
    """Alternate a block-diagonal CSR projector with ``|u><u| (x) I_d``.

    Returns ``(bits, X_out)``.
    """
    impl = impl or _impl
    bits, out, steps, status = impl.workspace_alternate(
        np.ascontiguousarray(G.indptr, dtype=np.int64),
        np.ascontiguousarray(G.indices, dtype=np.int64),
        np.ascontiguousarray(G.data, dtype=complex),
        np.ascontiguousarray(u, dtype=complex),
        np.asarray(X, dtype=complex), int(d), int(n_pairs), bool(stop_on_plus),
        np.ascontiguousarray(uniforms, dtype=float))
    if status >= 0:
        raise NumericalDegeneracy(f"degenerate branch selected at step {status}")
    return np.asarray(bits)[:steps], np.asarray(out)
