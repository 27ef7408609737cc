"""Alternating binary measurements and their classical companion law.

``MWDist(p, T)`` is the Markov chain with ``b_0 = 1`` in which every
subsequent bit repeats its predecessor with probability ``p``.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import stats

from .. import kernels
from ..rng import as_generator
from .core import StateVector, StructuredProjector, measure_binary


def mwdist_sample(p: float, T: int, rng=None) -> np.ndarray:
    """Bits ``b_1..b_T`` of MWDist(p, T); the implicit ``b_0 = 1`` is not returned."""
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    g = as_generator(rng)
    flips = (g.random(T) >= p).astype(np.int64)
    return (1 - np.cumsum(flips) % 2).astype(np.int8)


def nreps(bits: Sequence[int]) -> Fraction:
    """Fraction of consecutive equal pairs in ``b_0, ..., b_n``."""
    b = list(bits)
    n = len(b) - 1
    if n < 1:
        raise ValueError("need at least two bits")
    return Fraction(sum(b[j - 1] == b[j] for j in range(1, n + 1)), n)


def count_repeats(bits: np.ndarray, first: int = 1) -> int:
    b = np.concatenate(([first], np.asarray(bits)))
    return int(np.count_nonzero(b[1:] == b[:-1]))


def alternating_outcomes(A: StructuredProjector, B: StructuredProjector, psi, T: int, rng=None,
                         check: bool = True):
    """Measure A, B, A, B, ... for T steps starting from ``psi`` in image(B).

    Returns ``(bits, state)``.  Dense projectors use the compiled kernel when
    available; other forms step through ``measure_binary``.
    """
    g = as_generator(rng)
    v = psi.data if isinstance(psi, StateVector) else np.asarray(psi, dtype=complex)
    if check and np.linalg.norm(B.apply(v) - v) > 1e-8:
        raise ValueError("initial state is not in the image of B")
    uniforms = g.random(T)
    if A.kind == "matrix" and B.kind == "matrix" and not _sparse(A) and not _sparse(B):
        bits, out = kernels.dense_alternate(np.ascontiguousarray(A.matrix),
                                            np.ascontiguousarray(B.matrix), v, uniforms)
    else:
        out = v.copy()
        bits = np.empty(T, dtype=np.int8)
        for i in range(T):
            bits[i], out = measure_binary(A if i % 2 == 0 else B, out, u=uniforms[i])
    if isinstance(psi, StateVector):
        psi.data[:] = out
        return bits, psi
    return bits, out


def _sparse(P: StructuredProjector) -> bool:
    import scipy.sparse as sp
    return sp.issparse(P.matrix)


def mixture_repeat_pmf(weights: Sequence[float], ps: Sequence[float], T: int) -> np.ndarray:
    """Law of the repeat count under "pick j w.p. weights[j], then MWDist(p_j, T)"."""
    k = np.arange(T + 1)
    pmf = np.zeros(T + 1)
    for w, p in zip(weights, ps):
        pmf += w * stats.binom.pmf(k, T, p)
    return pmf


def chi2_against(counts: np.ndarray, pmf: np.ndarray, min_expected: float = 5.0):
    """Pearson test of observed counts against ``pmf``, pooling sparse bins."""
    n = counts.sum()
    exp = pmf * n
    obs_b, exp_b = [], []
    o = e = 0.0
    for ci, ei in zip(counts, exp):
        o += ci
        e += ei
        if e >= min_expected:
            obs_b.append(o)
            exp_b.append(e)
            o = e = 0.0
    if e > 0 or o > 0:
        if exp_b:
            obs_b[-1] += o
            exp_b[-1] += e
        else:
            obs_b.append(o)
            exp_b.append(e)
    obs_b, exp_b = np.array(obs_b), np.array(exp_b)
    if len(obs_b) < 2:
        return 0.0, 1.0, 0
    exp_b *= obs_b.sum() / exp_b.sum()
    stat = float(((obs_b - exp_b) ** 2 / exp_b).sum())
    dof = len(obs_b) - 1
    return stat, float(stats.chi2.sf(stat, dof)), dof
