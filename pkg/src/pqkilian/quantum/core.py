"""States, structured projectors and binary projective measurements."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from ..errors import NumericalDegeneracy, PostSelectionFailed, RegisterCapExceeded
from ..rng import as_generator

DEFAULT_CAP = 1 << 18
DEGENERATE = 1e-12
NORM_TOL = 1e-9
DENSE_SPAN_CAP = 1 << 10


@dataclass(frozen=True)
class RegisterLayout:
    """Ordered named tensor factors; the first factor is most significant."""

    factors: tuple  # ((name, dim), ...)
    cap: int = DEFAULT_CAP

    def __post_init__(self):
        if any(d < 1 for _, d in self.factors):
            raise ValueError("register dimensions must be positive")
        if self.dim > self.cap:
            raise RegisterCapExceeded(f"dimension {self.dim} exceeds cap {self.cap}")

    @classmethod
    def of(cls, cap: int = DEFAULT_CAP, **dims) -> "RegisterLayout":
        return cls(tuple(dims.items()), cap)

    @property
    def dim(self) -> int:
        return math.prod(d for _, d in self.factors)

    @property
    def shape(self) -> tuple:
        return tuple(d for _, d in self.factors)

    @property
    def names(self) -> tuple:
        return tuple(n for n, _ in self.factors)

    def index(self, **labels) -> int:
        return int(np.ravel_multi_index(tuple(labels[n] for n in self.names), self.shape))

    def labels(self) -> np.ndarray:
        """Array of shape (D, #factors): the basis label of every index."""
        return np.stack(np.unravel_index(np.arange(self.dim), self.shape), axis=1)


class StateVector:
    """Normalised pure state; single owner, updated in place by measurements."""

    def __init__(self, amplitudes, layout: RegisterLayout | None = None, check: bool = True):
        a = np.asarray(amplitudes, dtype=complex).ravel().copy()
        if layout is None:
            layout = RegisterLayout((("q", a.size),), max(DEFAULT_CAP, a.size))
        if layout.dim != a.size:
            raise ValueError("amplitude count does not match the layout")
        if check and abs(np.linalg.norm(a) - 1) > NORM_TOL:
            raise ValueError("state is not normalised")
        self.data = a
        self.layout = layout

    @classmethod
    def basis(cls, dim: int, index: int = 0, layout: RegisterLayout | None = None):
        a = np.zeros(dim if layout is None else layout.dim, dtype=complex)
        a[index] = 1
        return cls(a, layout)

    @property
    def dim(self) -> int:
        return self.data.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.data))

    def copy(self) -> "StateVector":
        return StateVector(self.data, self.layout, check=False)

    def density(self) -> "DensityOp":
        return DensityOp(np.outer(self.data, self.data.conj()))


class DensityOp:
    """Dense density matrix, for oracle computations at D <= 2^8."""

    CAP = 1 << 8

    def __init__(self, matrix, tol: float = 1e-9):
        m = np.asarray(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("density matrix must be square")
        if m.shape[0] > self.CAP:
            raise RegisterCapExceeded("density oracle is limited to D <= 256")
        if abs(np.trace(m).real - 1) > tol or np.abs(m - m.conj().T).max() > tol:
            raise ValueError("not a unit-trace Hermitian matrix")
        if np.linalg.eigvalsh((m + m.conj().T) / 2).min() < -tol:
            raise ValueError("density matrix is not positive semidefinite")
        self.matrix = m

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def mixture(cls, weights, vectors) -> "DensityOp":
        return cls(sum(w * np.outer(v, np.conj(v)) for w, v in zip(weights, vectors)))


# ---------------------------------------------------------------- operators

class Unitary:
    """Applicable unitary: explicit matrix or a pair of callables."""

    def __init__(self, matrix=None, apply: Callable | None = None,
                 apply_dagger: Callable | None = None, dim: int | None = None):
        if matrix is not None:
            m = matrix if sp.issparse(matrix) else np.asarray(matrix, dtype=complex)
            self.matrix = m
            self.dim = m.shape[0]
            mh = m.conj().T
            self._apply = lambda v: m @ v
            self._dagger = lambda v: mh @ v
        else:
            self.matrix = None
            self.dim = dim
            self._apply, self._dagger = apply, apply_dagger

    def apply(self, v):
        return self._apply(v)

    def apply_dagger(self, v):
        return self._dagger(v)

    def to_dense(self) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix.toarray() if sp.issparse(self.matrix) else np.array(self.matrix)
        return np.column_stack([self.apply(e) for e in np.eye(self.dim, dtype=complex)])


class StructuredProjector:
    """Projector applied without materialising it when D is large.

    Three forms:

    * ``StructuredProjector.from_matrix(P)``: explicit (sparse or dense) matrix
    * ``StructuredProjector.from_predicate(mask)``: diagonal 0/1 over basis labels
    * ``StructuredProjector.conjugated(U, mask)``: ``U^dagger diag(mask) U``
    * ``StructuredProjector.onto(vectors)``: dense when small, low rank otherwise
    """

    def __init__(self, dim: int, apply: Callable, kind: str, matrix=None, mask=None, unitary=None):
        self.dim = dim
        self._apply = apply
        self.kind = kind
        self.matrix = matrix
        self.mask = mask
        self.unitary = unitary

    def apply(self, v):
        return self._apply(v)

    __call__ = apply

    @classmethod
    def from_matrix(cls, matrix) -> "StructuredProjector":
        m = matrix.tocsr() if sp.issparse(matrix) else np.asarray(matrix, dtype=complex)
        return cls(m.shape[0], lambda v: m @ v, "matrix", matrix=m)

    @classmethod
    def from_predicate(cls, mask) -> "StructuredProjector":
        mask = np.asarray(mask, dtype=bool)
        fmask = mask.astype(float)
        return cls(mask.size, lambda v: fmask * v if v.ndim == 1 else fmask[:, None] * v,
                   "predicate", mask=mask)

    @classmethod
    def from_labels(cls, layout: RegisterLayout, predicate: Callable) -> "StructuredProjector":
        labels = layout.labels()
        names = layout.names
        mask = np.array([bool(predicate(dict(zip(names, row)))) for row in labels])
        return cls.from_predicate(mask)

    @classmethod
    def conjugated(cls, unitary: Unitary, mask) -> "StructuredProjector":
        mask = np.asarray(mask, dtype=bool)
        f = mask.astype(float)

        def apply(v):
            w = unitary.apply(v)
            w = f * w if w.ndim == 1 else f[:, None] * w
            return unitary.apply_dagger(w)

        return cls(mask.size, apply, "conjugated", mask=mask, unitary=unitary)

    @classmethod
    def identity(cls, dim: int) -> "StructuredProjector":
        return cls.from_predicate(np.ones(dim, dtype=bool))

    @classmethod
    def zero(cls, dim: int) -> "StructuredProjector":
        return cls.from_predicate(np.zeros(dim, dtype=bool))

    @classmethod
    def onto(cls, vectors) -> "StructuredProjector":
        """Projector onto the span of the given (orthonormalised) vectors."""
        v = np.atleast_2d(np.asarray(vectors, dtype=complex))
        q, _ = np.linalg.qr(v.T)
        if q.shape[0] <= DENSE_SPAN_CAP:
            return cls.from_matrix(q @ q.conj().T)
        qh = q.conj().T
        return cls(q.shape[0], lambda x: q @ (qh @ x), "span")

    def complement(self) -> "StructuredProjector":
        return StructuredProjector(self.dim, lambda v: v - self.apply(v), "complement")

    def to_dense(self) -> np.ndarray:
        if self.kind == "matrix":
            m = self.matrix
            return m.toarray() if sp.issparse(m) else np.array(m)
        if self.kind == "predicate":
            return np.diag(self.mask.astype(complex))
        return self.apply(np.eye(self.dim, dtype=complex))

    def residuals(self, rng=None, probes: int = 100) -> tuple[float, float]:
        """Worst idempotence and Hermiticity residuals over random probes."""
        g = as_generator(rng)
        idem = herm = 0.0
        for _ in range(probes):
            a = g.normal(size=self.dim) + 1j * g.normal(size=self.dim)
            b = g.normal(size=self.dim) + 1j * g.normal(size=self.dim)
            a /= np.linalg.norm(a)
            b /= np.linalg.norm(b)
            pa = self.apply(a)
            idem = max(idem, float(np.linalg.norm(self.apply(pa) - pa)))
            herm = max(herm, abs(np.vdot(b, pa) - np.vdot(self.apply(b), a)))
        return idem, herm


# ------------------------------------------------------------- measurement

def _vec(psi):
    return psi.data if isinstance(psi, StateVector) else np.asarray(psi, dtype=complex)


def measure_binary(proj: StructuredProjector, psi, rng=None, u: float | None = None):
    """Measure ``{proj, I - proj}``.  Returns ``(bit, post-state)``.

    ``psi`` is updated in place when it is a StateVector; the same object is
    returned.  Plain arrays are returned as new arrays.
    """
    v = _vec(psi)
    pv = proj.apply(v)
    p1 = float(np.vdot(pv, pv).real)
    p1 = min(max(p1, 0.0), 1.0)
    if u is None:
        u = as_generator(rng).random()
    bit = int(u < p1)
    prob = p1 if bit else 1.0 - p1
    if prob < DEGENERATE:
        raise NumericalDegeneracy(f"selected branch has probability {prob:.3e}")
    out = (pv if bit else v - pv) / math.sqrt(prob)
    if isinstance(psi, StateVector):
        psi.data[:] = out
        return bit, psi
    return bit, out


def mixm(family: Sequence[StructuredProjector], psi, rng=None):
    """Pick ``r`` uniformly from the family, then measure ``Pi_r``."""
    if len(family) < 1:
        raise ValueError("empty measurement family")
    g = as_generator(rng)
    r = int(g.integers(len(family)))
    bit, post = measure_binary(family[r], psi, g)
    return r, bit, post


def post_select(proj: StructuredProjector, rho: DensityOp) -> DensityOp:
    P = proj.to_dense()
    m = P @ rho.matrix @ P
    tr = np.trace(m).real
    if tr < DEGENERATE:
        raise PostSelectionFailed("post-selected branch has zero weight")
    return DensityOp(m / tr, tol=1e-7)


def trace_distance(a, b) -> float:
    ma = a.matrix if isinstance(a, DensityOp) else a
    mb = b.matrix if isinstance(b, DensityOp) else b
    return 0.5 * float(np.abs(np.linalg.eigvalsh(ma - mb)).sum())


def gentle_check(proj: StructuredProjector, rho: DensityOp) -> tuple[float, float]:
    """Return ``(delta, d(rho, rho'))`` with ``delta = 1 - Tr(P rho)``."""
    P = proj.to_dense()
    delta = max(0.0, 1.0 - float(np.trace(P @ rho.matrix).real))
    return delta, trace_distance(rho, post_select(proj, rho))


def binary_channel(proj: StructuredProjector, rho: DensityOp):
    """Exact outcome probabilities and normalised branch states of {P, I-P}."""
    P = proj.to_dense()
    Q = np.eye(P.shape[0]) - P
    out = []
    for M in (Q, P):
        m = M @ rho.matrix @ M
        tr = float(np.trace(m).real)
        out.append((tr, m / tr if tr > DEGENERATE else None))
    return out


def random_projector(dim: int, rank: int, rng=None) -> np.ndarray:
    g = as_generator(rng)
    a = g.normal(size=(dim, rank)) + 1j * g.normal(size=(dim, rank))
    q, _ = np.linalg.qr(a)
    return q @ q.conj().T


def random_state(dim: int, rng=None) -> np.ndarray:
    g = as_generator(rng)
    a = g.normal(size=dim) + 1j * g.normal(size=dim)
    return a / np.linalg.norm(a)
