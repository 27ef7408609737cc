"""Sequential repetition of a single-round game, with and without repair."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import InvalidParameter
from ..rng import as_generator
from .game import GameModel
from .repair import repair, win_measurement
from .valest import ValEst, ValEstParams

DEFAULT_C = 64


@dataclass(frozen=True)
class PlayParams:
    n: int
    eta0: float
    c: float = DEFAULT_C

    def __post_init__(self):
        if self.n < 1 or not 0 < self.eta0 <= 1:
            raise InvalidParameter("need n >= 1 and eta0 in (0, 1]")

    @property
    def eps(self) -> float:
        return self.eta0 / (2 * self.n + 2)

    @property
    def delta(self) -> float:
        return self.eta0 ** 2 / (self.c * self.n ** 2)

    @property
    def T(self) -> int:
        return math.ceil(1 / math.sqrt(self.delta))

    def valest(self) -> ValEstParams:
        return ValEstParams(self.eps, self.delta)


class Referee:
    """Asks questions and measures only whether the answer register wins."""

    def __init__(self, model: GameModel, questions: Sequence[int] | None = None):
        self.model = model
        self.questions = None if questions is None else list(questions)

    def ask(self, i: int, rng) -> int:
        if self.questions is not None:
            return int(self.questions[i])
        return int(rng.integers(self.model.nq))

    def judge(self, r: int, v: np.ndarray, rng) -> tuple[int, np.ndarray]:
        mask = self.model.masks[r]
        win = np.where(mask, v, 0)
        p1 = min(max(float(np.vdot(win, win).real), 0.0), 1.0)
        b = int(rng.random() < p1)
        out = win if b else v - win
        return b, out / np.linalg.norm(out)


class CollectingReferee(Referee):
    """Also measures the answer register on a win and records new (r, z) pairs."""

    def __init__(self, model: GameModel, questions: Sequence[int]):
        super().__init__(model, questions)
        self.W: dict[int, int] = {}

    def judge(self, r, v, rng):
        b, v = super().judge(r, v, rng)
        if b:
            blocks = v.reshape(self.model.game.answer_dim, -1)
            w = np.einsum("ij,ij->i", blocks.conj(), blocks).real
            z = int(rng.choice(len(w), p=w / w.sum()))
            out = np.zeros_like(blocks)
            out[z] = blocks[z] / math.sqrt(w[z])
            v = out.ravel()
            self.W.setdefault(r, z)
        return b, v


@dataclass
class PlayRecord:
    bits: list = field(default_factory=list)
    estimates: list = field(default_factory=list)
    questions: list = field(default_factory=list)
    repair_counts: list = field(default_factory=list)
    repaired: list = field(default_factory=list)

    @property
    def wins(self) -> int:
        return int(sum(self.bits))


def repeated_play(model: GameModel, state, n: int, eta0: float, referee: Referee | None = None,
                  rng=None, c: float = DEFAULT_C, valest_method: str = "spectral") -> PlayRecord:
    """Estimate, answer, uncompute, repair; ``n`` times on one copy of the state."""
    g = as_generator(rng)
    params = PlayParams(n, eta0, c)
    M = ValEst(model, params.valest(), valest_method)
    referee = referee or Referee(model)
    v = np.asarray(state, dtype=complex)
    v = v / np.linalg.norm(v)
    rec = PlayRecord()
    for i in range(n):
        est = M.measure(v, g)
        v = est.state
        r = referee.ask(i, g)
        U = model.unitary(r)
        b, v = referee.judge(r, U @ v, g)
        v = U.conj().T @ v
        rep = repair(M, win_measurement(model, r), params.T, b, est.estimate, v, g)
        v = rep.state
        rec.bits.append(b)
        rec.estimates.append(est.estimate)
        rec.questions.append(r)
        rec.repair_counts.append(rep.count)
        rec.repaired.append(rep.repaired)
    return rec


def naive_play(model: GameModel, state, n: int, referee: Referee | None = None, rng=None,
               distinct: bool = True) -> PlayRecord:
    """Answer every question directly on the disturbed state, without repair."""
    g = as_generator(rng)
    if referee is None:
        qs = g.permutation(model.nq)[:n] if distinct and n <= model.nq else None
        referee = Referee(model, qs)
    v = np.asarray(state, dtype=complex)
    v = v / np.linalg.norm(v)
    rec = PlayRecord()
    for i in range(n):
        r = referee.ask(i, g)
        U = model.unitary(r)
        b, v = referee.judge(r, U @ v, g)
        v = U.conj().T @ v
        rec.bits.append(b)
        rec.questions.append(r)
    return rec


def naive_bound(eps: float) -> float:
    """Expected total wins of the unrepaired player against the rank-one family."""
    return 1 / (2 - 2 * eps)


def fork(model: GameModel, questions: Sequence[int], state, eta0: float, rng=None,
         c: float = DEFAULT_C, valest_method: str = "spectral") -> list[tuple[int, int]]:
    """Play against the collecting referee; return the accepting pairs it kept."""
    questions = [int(r) for r in questions]
    ref = CollectingReferee(model, questions)
    repeated_play(model, state, len(questions), eta0, ref, rng, c, valest_method)
    W = sorted(ref.W.items())
    check_fork_output(model, questions, W)
    return W


def check_fork_output(model: GameModel, questions: Sequence[int], W) -> None:
    seen = set()
    allowed = set(questions)
    for r, z in W:
        assert model.game.win(r, z), f"pair ({r}, {z}) does not win"
        assert r not in seen, f"question {r} appears twice"
        assert r in allowed, f"question {r} was never asked"
        seen.add(r)
