"""State repair after a projective disturbance.

The acceptance projector ``A_p`` lives on the game register plus the full
estimation workspace, which is far too large to hold.  Its compression to
``H (x) |0>`` is ``chi diag(F) chi^dagger`` (``F_j`` = probability that
Bin(2t, p_j) lands in the window), and the Jordan blocks of ``(A_p, B_k)``
that meet image(B_k) are indexed by the eigenvectors ``xi_m`` of that
operator restricted to image(Pi_k).  Inside block m the alternating
measurements act through the 2x2 overlaps ``sqrt(mu_m)``,
``sqrt(1 - mu_m)``, so only one complex amplitude per block is tracked.  The
final "apply U_M and discard W" step is a conditioned draw from the
spectral ValEst sampler.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import InvalidParameter
from ..quantum.core import StateVector, StructuredProjector, measure_binary
from ..rng import as_generator
from .valest import ValEst, ValEstOutcome

# block sides: image of B, kernel of B (inside the block), image of A, kernel of A
B1, B0, A1, A0 = range(4)


@dataclass
class RepairOutcome:
    state: np.ndarray
    count: int
    repaired: bool
    final: ValEstOutcome | None = None


def _project_basis(P: np.ndarray, tol: float = 0.5) -> np.ndarray:
    w, V = np.linalg.eigh((P + P.conj().T) / 2)
    return V[:, w > tol]


def _step(amp: np.ndarray, side: int, mu: np.ndarray, to_a: bool):
    """Amplitudes on the two outcomes of the next measurement."""
    s, c = np.sqrt(mu), np.sqrt(1 - mu)
    if to_a:
        if side == B1:
            return amp * s, amp * c
        return amp * c, -amp * s
    if side == A1:
        return amp * s, amp * c
    return amp * c, -amp * s


def repair(M: ValEst, P: Sequence[np.ndarray], T: int, k: int, p: float, state, rng=None,
           tol: float = 1e-8) -> RepairOutcome:
    """Run the repair loop for outcome ``k`` of ``P`` and target estimate ``p``.

    ``state`` must lie in the image of ``P[k]``.  The returned count is the
    number of A/B measurements performed.
    """
    if T < 0:
        raise InvalidParameter("T must be non-negative")
    g = as_generator(rng)
    v = state.data if isinstance(state, StateVector) else np.asarray(state, dtype=complex)
    v = v / np.linalg.norm(v)
    Pk = np.asarray(P[k], dtype=complex)
    if np.linalg.norm(Pk @ v - v) > 1e-6:
        raise InvalidParameter("state is not in the image of the selected outcome projector")
    Q = _project_basis(Pk)
    Aop = M.acceptance_operator(p)
    mu, V = np.linalg.eigh(Q.conj().T @ Aop @ Q)
    mu = np.clip(mu, 0.0, 1.0)
    xi = Q @ V
    amp = xi.conj().T @ v
    side = B1

    def measure(to_a: bool) -> int:
        nonlocal amp, side
        one, zero = _step(amp, side, mu, to_a)
        p1 = min(max(float(np.vdot(one, one).real), 0.0), 1.0)
        bit = int(g.random() < p1)
        amp = one if bit else zero
        amp = amp / np.linalg.norm(amp)
        side = (A1 if bit else A0) if to_a else (B1 if bit else B0)
        return bit

    count = 1
    ok = measure(True) == 1
    rounds = 0
    while not ok and rounds < T:
        measure(False)
        count += 2
        ok = measure(True) == 1
        rounds += 1

    if ok:
        coef = np.where(mu > tol, amp / np.sqrt(np.where(mu > tol, mu, 1)), 0)
    else:
        coef = np.where(1 - mu > tol, amp / np.sqrt(np.where(1 - mu > tol, 1 - mu, 1)), 0)
    target = xi @ coef
    final = M.sample(target, g, condition=(p, ok))
    return RepairOutcome(final.state, count, ok, final)


def repair_projective(A: StructuredProjector, B: StructuredProjector, T: int, state, rng=None):
    """Repair with explicit projectors: measure A; then up to T rounds of (B, A).

    Stops at the first ``A -> 1``.  Returns ``(state, count, repaired)``.
    """
    g = as_generator(rng)
    v = state.data if isinstance(state, StateVector) else np.asarray(state, dtype=complex)
    bit, v = measure_binary(A, v, g)
    count = 1
    rounds = 0
    while bit == 0 and rounds < T:
        _, v = measure_binary(B, v, g)
        bit, v = measure_binary(A, v, g)
        count += 2
        rounds += 1
    return v, count, bool(bit)


@dataclass
class RepairExptRecord:
    p: float
    k: int
    count: int
    repaired: bool
    p_after: float
    question: int | None = None


def repair_experiment(M: ValEst, P: Sequence[np.ndarray], T: int, state, rng=None,
                      question: int | None = None) -> RepairExptRecord:
    """Measure, damage with ``P``, repair, then measure again."""
    g = as_generator(rng)
    first = M.measure(state, g)
    v = first.state
    probs = [float(np.vdot(Pk @ v, Pk @ v).real) for Pk in P]
    probs = np.clip(probs, 0, None)
    k = int(g.choice(len(P), p=np.asarray(probs) / sum(probs)))
    v = P[k] @ v
    v = v / np.linalg.norm(v)
    rep = repair(M, P, T, k, first.estimate, v, g)
    second = M.measure(rep.state, g)
    return RepairExptRecord(first.estimate, k, rep.count, rep.repaired, second.estimate, question)


def win_measurement(model, r: int) -> list[np.ndarray]:
    """The two-outcome measurement ``(I - Pi_{f,r}, Pi_{f,r})``."""
    P1 = model.win_projectors[r]
    return [np.eye(model.dim) - P1, P1]
