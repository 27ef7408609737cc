"""Single-round games, quantum strategies and the derived operators.

A strategy acts on ``H = Z (x) I`` with the answer register ``Z`` as the
most significant factor.  For question ``r`` the player applies ``U_r``, the
referee measures whether ``Z`` holds a winning answer and the player undoes
``U_r``; the net effect is the projective measurement

    Pi_{f,r} = U_r^dagger (mask_r (x) I) U_r.

``value_operator = mean_r Pi_{f,r}`` so that ``Val(rho) = Tr(value_operator rho)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.sparse as sp

from ..errors import RegisterCapExceeded
from ..quantum.core import DensityOp, RegisterLayout, StateVector

ORACLE_CAP = 1 << 12


@dataclass(frozen=True)
class Game:
    num_questions: int
    answer_dim: int
    win: Callable[[int, int], bool]

    def __post_init__(self):
        if not 1 <= self.num_questions <= 1 << 10:
            raise ValueError("question set must have between 1 and 1024 elements")

    def accept_mask(self, r: int) -> np.ndarray:
        return np.array([bool(self.win(r, z)) for z in range(self.answer_dim)])


class Strategy:
    """Unitaries ``U_r`` on ``Z (x) I`` plus an initial state."""

    game: Game
    internal_dim: int

    @property
    def dim(self) -> int:
        return self.game.answer_dim * self.internal_dim

    def layout(self) -> RegisterLayout:
        return RegisterLayout((("Z", self.game.answer_dim), ("I", self.internal_dim)))

    def unitary(self, r: int) -> np.ndarray:
        raise NotImplementedError

    def initial_state(self) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[0] = 1
        return v


class GameModel:
    """Caches the operators every rewinding routine needs for one (game, strategy)."""

    def __init__(self, strategy: Strategy):
        self.strategy = strategy
        self.game = strategy.game
        self.dim = strategy.dim
        if self.dim > ORACLE_CAP:
            raise RegisterCapExceeded(f"strategy dimension {self.dim} exceeds {ORACLE_CAP}")
        self.nq = self.game.num_questions
        di = strategy.internal_dim
        self._unitaries = [np.asarray(strategy.unitary(r), dtype=complex) for r in range(self.nq)]
        self.masks = [np.repeat(self.game.accept_mask(r), di) for r in range(self.nq)]
        self.win_projectors = [
            U.conj().T @ (self.masks[r][:, None] * U) for r, U in enumerate(self._unitaries)
        ]

    def unitary(self, r: int) -> np.ndarray:
        return self._unitaries[r]

    @cached_property
    def value_operator(self) -> np.ndarray:
        A = sum(self.win_projectors) / self.nq
        return (A + A.conj().T) / 2

    @cached_property
    def spectrum(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues ``a_j`` (clipped to [0,1]) and eigenvectors of the value operator."""
        a, chi = np.linalg.eigh(self.value_operator)
        return np.clip(a, 0.0, 1.0), chi

    @cached_property
    def workspace(self) -> tuple[sp.csr_matrix, np.ndarray]:
        """Block projector over branches (top, bottom, r...) and the vector u.

        The (R', R) workspace starts in ``1/2|T,0> + 1/2|B,0> + sum_r |r,r>/sqrt(2|R|)``
        and every operator of the estimation loop preserves the span of these
        ``|R| + 2`` basis pairs, so only that span is stored.
        """
        d = self.dim
        blocks = [sp.identity(d, dtype=complex, format="csr"), sp.csr_matrix((d, d), dtype=complex)]
        for P in self.win_projectors:
            Pc = P.copy()
            Pc[np.abs(Pc) < 1e-15] = 0
            blocks.append(sp.csr_matrix(Pc))
        G = sp.block_diag(blocks, format="csr")
        G.sort_indices()
        u = np.concatenate(([0.5, 0.5], np.full(self.nq, 1 / np.sqrt(2 * self.nq)))).astype(complex)
        return G, u

    def branch_projector(self, c: int) -> np.ndarray:
        if c == 0:
            return np.eye(self.dim, dtype=complex)
        if c == 1:
            return np.zeros((self.dim, self.dim), dtype=complex)
        return self.win_projectors[c - 2]

    def exact_value(self, state) -> float:
        return exact_value(self, state)


def exact_value(model: GameModel, state) -> float:
    """``Val(S, rho) = mean_r ||Pi_{f,r} psi||^2`` (or the trace form for mixed states)."""
    if isinstance(state, DensityOp):
        return float(np.trace(model.value_operator @ state.matrix).real)
    v = state.data if isinstance(state, StateVector) else np.asarray(state, dtype=complex)
    if v.ndim == 2:
        return float(np.trace(model.value_operator @ v).real)
    return float(np.vdot(v, model.value_operator @ v).real)


# ---------------------------------------------------------------- strategies

def _x_on_answer(answer_dim: int, internal_dim: int, shift: int) -> np.ndarray:
    perm = np.roll(np.eye(answer_dim), shift, axis=0)
    return np.kron(perm, np.eye(internal_dim))


class RankOneStrategy(Strategy):
    """Answer bit = outcome of the rank-one projector onto sqrt(eps)|0> + sqrt(1-eps)|r+1>.

    Internal register has dimension ``|R| + 1``; the initial state is
    ``|Z=0>|0>`` whose value is exactly ``eps``.
    """

    def __init__(self, num_questions: int, eps: float, game: Game | None = None):
        if not 0 <= eps <= 1:
            raise ValueError("eps must lie in [0, 1]")
        self.eps = eps
        self.game = game or Game(num_questions, 2, lambda r, z: z == 1)
        self.internal_dim = num_questions + 1

    def phi(self, r: int) -> np.ndarray:
        v = np.zeros(self.internal_dim, dtype=complex)
        v[0] = np.sqrt(self.eps)
        v[r + 1] = np.sqrt(1 - self.eps)
        return v

    def rank_one(self, r: int) -> np.ndarray:
        v = self.phi(r)
        return np.outer(v, v.conj())

    def unitary(self, r):
        P = self.rank_one(r)
        X = np.array([[0, 1], [1, 0]])
        return np.kron(X, P) + np.kron(np.eye(2), np.eye(self.internal_dim) - P)


class FixedAnswerStrategy(Strategy):
    """Ignores the question and always writes answer ``z``."""

    def __init__(self, game: Game, z: int, internal_dim: int = 1):
        self.game = game
        self.z = z
        self.internal_dim = internal_dim

    def unitary(self, r):
        return _x_on_answer(self.game.answer_dim, self.internal_dim, self.z)


class UniformAnswerStrategy(Strategy):
    """Prepares the uniform superposition over answers (Fourier transform on Z)."""

    def __init__(self, game: Game):
        self.game = game
        self.internal_dim = 1

    def unitary(self, r):
        n = self.game.answer_dim
        k = np.arange(n)
        return np.exp(2j * np.pi * np.outer(k, k) / n) / np.sqrt(n)


class SubsetStrategy(Strategy):
    """Classical strategy that answers correctly exactly on a fixed question subset."""

    def __init__(self, game: Game, good: set, right: Callable[[int], int], wrong: Callable[[int], int]):
        self.game = game
        self.good = set(good)
        self.right, self.wrong = right, wrong
        self.internal_dim = 1

    def unitary(self, r):
        z = self.right(r) if r in self.good else self.wrong(r)
        return _x_on_answer(self.game.answer_dim, 1, z)
