"""NumPy reference implementations of the measurement kernels.

Both kernels consume pre-drawn uniforms, one per measurement, so the
compiled and reference versions produce identical outcome strings.
"""
from __future__ import annotations

import math

import numpy as np
import scipy.sparse as sp

DEGENERATE = 1e-12


def dense_alternate(PA, PB, v, uniforms):
    """Alternate {PA, I-PA}, {PB, I-PB}, ... one step per uniform.

    Returns ``(bits, v_out, status)``; status is -1 on success or the step
    index at which a branch of probability < 1e-12 was selected.
    """
    v = np.array(v, dtype=complex)
    T = len(uniforms)
    bits = np.zeros(T, dtype=np.int8)
    for i in range(T):
        P = PA if i % 2 == 0 else PB
        y = P @ v
        p1 = min(max(float(np.vdot(y, y).real), 0.0), 1.0)
        if uniforms[i] < p1:
            bits[i] = 1
            if p1 < DEGENERATE:
                return bits, v, i
            v = y / math.sqrt(p1)
        else:
            if 1.0 - p1 < DEGENERATE:
                return bits, v, i
            v = (v - y) / math.sqrt(1.0 - p1)
    return bits, v, -1


def workspace_alternate(indptr, indices, data, u, X, d, n_pairs, stop_on_plus, uniforms):
    """Alternate the block projector G and ``|u><u| (x) I_d`` for up to n_pairs pairs.

    ``X`` has ``len(u) * d`` entries (branch-major).  G is block diagonal and
    given in CSR form.  With ``stop_on_plus`` the loop ends after the first
    pair whose second outcome is 1.  Returns ``(bits, X_out, steps, status)``.
    """
    K = len(X)
    G = sp.csr_matrix((data, indices, indptr), shape=(K, K))
    nb = len(u)
    uc = np.conj(u)
    X = np.array(X, dtype=complex)
    bits = np.zeros(2 * n_pairs, dtype=np.int8)
    steps = 0
    for k in range(n_pairs):
        y = G @ X
        p1 = min(max(float(np.vdot(y, y).real), 0.0), 1.0)
        if uniforms[steps] < p1:
            bits[steps] = 1
            if p1 < DEGENERATE:
                return bits, X, steps, steps
            X = y / math.sqrt(p1)
        else:
            if 1.0 - p1 < DEGENERATE:
                return bits, X, steps, steps
            X = (X - y) / math.sqrt(1.0 - p1)
        steps += 1
        phi = uc @ X.reshape(nb, d)
        p1 = min(max(float(np.vdot(phi, phi).real), 0.0), 1.0)
        y = np.outer(u, phi).ravel()
        if uniforms[steps] < p1:
            bits[steps] = 1
            if p1 < DEGENERATE:
                return bits, X, steps, steps
            X = y / math.sqrt(p1)
        else:
            if 1.0 - p1 < DEGENERATE:
                return bits, X, steps, steps
            X = (X - y) / math.sqrt(1.0 - p1)
        steps += 1
        if stop_on_plus and bits[steps - 1] == 1:
            break
    return bits[:steps], X, steps, -1
