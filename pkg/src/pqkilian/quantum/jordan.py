"""Common invariant decomposition of two projectors into 1- and 2-dim blocks.

Each block ``S_j`` carries an eigenvalue ``p_j`` and vectors ``v1, v0``
(image / kernel of A) and ``w1, w0`` (image / kernel of B) related by::

    v1 = sqrt(p) w1 + sqrt(1-p) w0
    w1 = sqrt(p) v1 + sqrt(1-p) v0

One-dimensional blocks get ``p = 1`` when A and B act identically on them
(both identity or both zero) and ``p = 0`` otherwise; absent vectors are
``None``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DecompositionFailed
from .core import StructuredProjector

MERGE_TOL = 1e-7
DENSE_CAP = 1 << 10


@dataclass
class JordanSubspace:
    p: float
    v1: np.ndarray | None
    v0: np.ndarray | None
    w1: np.ndarray | None
    w0: np.ndarray | None

    @property
    def dim(self) -> int:
        return 2 if (self.v1 is not None and self.v0 is not None) else 1

    def basis(self) -> np.ndarray:
        vs = [v for v in (self.v1, self.v0) if v is not None]
        if not vs:
            vs = [v for v in (self.w1, self.w0) if v is not None]
        return np.column_stack(vs)

    def projector(self) -> np.ndarray:
        b = self.basis()
        return b @ b.conj().T


@dataclass
class JordanDecomposition:
    subspaces: list
    residuals: dict

    def __iter__(self):
        return iter(self.subspaces)

    def __len__(self):
        return len(self.subspaces)

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([s.p for s in self.subspaces])


def _dense(P) -> np.ndarray:
    if isinstance(P, StructuredProjector):
        return P.to_dense()
    return np.asarray(P, dtype=complex)


def _image_basis(P: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    vals, vecs = np.linalg.eigh((P + P.conj().T) / 2)
    return vecs[:, vals > 0.5], vecs[:, vals <= 0.5]


def _cluster(vals: np.ndarray, vecs: np.ndarray, tol: float):
    """Merge eigenvalues within ``tol``; re-orthonormalise each cluster."""
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    groups, start = [], 0
    for i in range(1, len(vals) + 1):
        if i == len(vals) or vals[i] - vals[i - 1] > tol:
            q, _ = np.linalg.qr(vecs[:, start:i])
            groups.append((float(np.mean(vals[start:i])), q))
            start = i
    return groups


def jordan_decompose(A, B, layout=None, tol: float = 1e-8) -> JordanDecomposition:
    PA, PB = _dense(A), _dense(B)
    D = PA.shape[0]
    if D > DENSE_CAP:
        raise DecompositionFailed(f"dense decomposition limited to D <= {DENSE_CAP}")
    QA, _ = _image_basis(PA)
    subs: list[JordanSubspace] = []
    edge = 1e-9

    if QA.shape[1]:
        M = QA.conj().T @ PB @ QA
        vals, ys = np.linalg.eigh((M + M.conj().T) / 2)
        vals = np.clip(vals, 0.0, 1.0)
        for p, block in _cluster(vals, ys, MERGE_TOL):
            for y in block.T:
                v1 = QA @ y
                if p >= 1 - edge:
                    subs.append(JordanSubspace(1.0, v1, None, v1, None))
                elif p <= edge:
                    subs.append(JordanSubspace(0.0, v1, None, None, v1))
                else:
                    w1 = PB @ v1
                    w1 /= np.linalg.norm(w1)
                    # fix the phase of w1 so that <v1|w1> = sqrt(p) > 0
                    ph = np.vdot(w1, v1)
                    w1 *= ph / abs(ph)
                    s, c = np.sqrt(p), np.sqrt(1 - p)
                    w0 = (v1 - s * w1) / c
                    v0 = (w1 - s * v1) / c
                    subs.append(JordanSubspace(p, v1, v0, w1, w0))

    # remainder lies in ker(A); split it by B
    used = np.column_stack([s.basis() for s in subs]) if subs else np.zeros((D, 0), complex)
    if used.shape[1] < D:
        if used.shape[1]:
            q, _ = np.linalg.qr(used, mode="complete")
            rest = q[:, used.shape[1]:]
        else:
            rest = np.eye(D, dtype=complex)
        Mb = rest.conj().T @ PB @ rest
        vals, ys = np.linalg.eigh((Mb + Mb.conj().T) / 2)
        for val, y in zip(vals, ys.T):
            u = rest @ y
            if val > 0.5:
                subs.append(JordanSubspace(0.0, None, u, u, None))
            else:
                subs.append(JordanSubspace(1.0, None, u, None, u))

    dec = JordanDecomposition(subs, {})
    dec.residuals = jordan_residuals(PA, PB, dec)
    worst = max(dec.residuals.values()) if dec.residuals else 0.0
    if worst > tol:
        raise DecompositionFailed(f"Jordan residual {worst:.2e} exceeds {tol:.0e}", dec.residuals)
    return dec


def jordan_residuals(PA: np.ndarray, PB: np.ndarray, dec: JordanDecomposition) -> dict:
    D = PA.shape[0]
    total = np.zeros((D, D), dtype=complex)
    comm = image = overlap = phase = 0.0
    for s in dec:
        P = s.projector()
        total += P
        comm = max(comm, np.abs(P @ PA - PA @ P).max(), np.abs(P @ PB - PB @ P).max())
        for v, M, want in ((s.v1, PA, 1), (s.v0, PA, 0), (s.w1, PB, 1), (s.w0, PB, 0)):
            if v is not None:
                image = max(image, np.abs(M @ v - want * v).max())
        if s.dim == 2:
            overlap = max(overlap, abs(abs(np.vdot(s.v1, s.w1)) ** 2 - s.p))
            sp_, c = np.sqrt(s.p), np.sqrt(1 - s.p)
            phase = max(phase,
                        np.abs(s.v1 - (sp_ * s.w1 + c * s.w0)).max(),
                        np.abs(s.w1 - (sp_ * s.v1 + c * s.v0)).max())
    return {
        "reconstruction": float(np.abs(total - np.eye(D)).max()),
        "commutation": float(comm),
        "image": float(image),
        "eigenvalue": float(overlap),
        "phase": float(phase),
    }
