"""A toy k-special-sound sigma protocol and its forking extractor.

The witness ``w`` is the constant term of a secret degree-(k-1) polynomial
over Z_q; the first message commits to the other coefficients in the
order-q subgroup of Z_p^*, a challenge is an evaluation point and the
response is the evaluation.  Any k accepting transcripts with distinct
challenges interpolate ``w``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from ..errors import InvalidParameter
from ..rng import as_generator
from .game import FixedAnswerStrategy, Game, GameModel, Strategy, SubsetStrategy, RankOneStrategy
from .play import DEFAULT_C, fork

P, Q, GEN = 167, 83, 4


@dataclass(frozen=True)
class SigmaStatement:
    x: int
    k: int
    num_challenges: int

    def __post_init__(self):
        if not 1 <= self.num_challenges < Q:
            raise InvalidParameter(f"challenge set must have between 1 and {Q - 1} elements")
        if self.k < 1:
            raise InvalidParameter("k must be positive")


def keygen(rng=None) -> tuple[int, int]:
    g = as_generator(rng)
    w = int(g.integers(Q))
    return pow(GEN, w, P), w


def challenge_point(r: int) -> int:
    return r + 1


def commit(k: int, rng=None) -> tuple[tuple[int, ...], tuple[int, ...]]:
    g = as_generator(rng)
    coeffs = tuple(int(c) for c in g.integers(Q, size=k - 1))
    return tuple(pow(GEN, c, P) for c in coeffs), coeffs


def respond(w: int, coeffs: Sequence[int], r: int) -> int:
    rho = challenge_point(r)
    return (w + sum(c * pow(rho, i + 1, Q) for i, c in enumerate(coeffs))) % Q


def verify(x: int, a: Sequence[int], r: int, z: int) -> bool:
    rho = challenge_point(r)
    rhs = x
    for i, ai in enumerate(a):
        rhs = rhs * pow(ai, pow(rho, i + 1, Q), P) % P
    return pow(GEN, z % Q, P) == rhs


def interpolate(pairs: Sequence[tuple[int, int]]) -> int:
    """Value at 0 of the polynomial through ``(challenge_point(r), z)``."""
    pts = [(challenge_point(r) % Q, z % Q) for r, z in pairs]
    if len({x for x, _ in pts}) != len(pts):
        raise InvalidParameter("challenges must be distinct")
    acc = 0
    for i, (xi, yi) in enumerate(pts):
        num = den = 1
        for j, (xj, _) in enumerate(pts):
            if j != i:
                num = num * (-xj) % Q
                den = den * (xi - xj) % Q
        acc = (acc + yi * num * pow(den, -1, Q)) % Q
    return acc


def special_extract(x: int, pairs: Sequence[tuple[int, int]], k: int) -> int | None:
    if len(pairs) < k:
        return None
    w = interpolate(list(pairs)[:k])
    return w if pow(GEN, w, P) == x else None


@dataclass
class ToyProver:
    """Quantum prover whose answer qubit selects the correct or a wrong response.

    ``kind`` is ``honest`` (always correct), ``rank_one`` (rank-one family,
    value ``eps``) or ``subset`` (classical, correct only on ``good``).
    """

    statement: SigmaStatement
    w: int | None
    kind: str = "honest"
    eps: float = 1.0
    good: frozenset = frozenset()
    rng: object = None
    a: tuple = field(init=False)
    coeffs: tuple = field(init=False)

    def __post_init__(self):
        g = as_generator(self.rng)
        self.a, self.coeffs = commit(self.statement.k, g)
        if self.w is None:
            self.w = int(g.integers(Q))
        self._correct = [respond(self.w, self.coeffs, r) for r in range(self.statement.num_challenges)]

    def response(self, r: int, z: int) -> int:
        return self._correct[r] if z == 1 else (self._correct[r] + 1) % Q

    def game(self) -> Game:
        x, a = self.statement.x, self.a
        table = {(r, z): verify(x, a, r, self.response(r, z))
                 for r in range(self.statement.num_challenges) for z in (0, 1)}
        return Game(self.statement.num_challenges, 2, lambda r, z: table[(r, z)])

    def strategy(self) -> Strategy:
        game = self.game()
        if self.kind == "honest":
            return FixedAnswerStrategy(game, 1)
        if self.kind == "rank_one":
            return RankOneStrategy(self.statement.num_challenges, self.eps, game)
        if self.kind == "subset":
            return SubsetStrategy(game, set(self.good), lambda r: 1, lambda r: 0)
        raise InvalidParameter(f"unknown prover kind {self.kind!r}")

    def model(self) -> GameModel:
        return GameModel(self.strategy())


@dataclass
class SigmaExtraction:
    witness: int | None
    W: list
    n: int
    eta0: float


def special_sound_extract(prover: ToyProver, x: int, k: int, eps: float, rng=None,
                          eta0: float | None = None, c: float = DEFAULT_C,
                          model: GameModel | None = None) -> SigmaExtraction:
    """Fork on ``n = ceil(8k/eps)`` random challenges; interpolate if ``|W| >= k``."""
    if not 0 < eps <= 1:
        raise InvalidParameter("eps must lie in (0, 1]")
    g = as_generator(rng)
    n = math.ceil(8 * k / eps)
    eta0 = eps / 2 if eta0 is None else eta0
    model = model or prover.model()
    rs = g.integers(prover.statement.num_challenges, size=n)
    W = fork(model, rs, model.strategy.initial_state(), eta0, g, c)
    pairs = [(r, prover.response(r, z)) for r, z in W]
    for r, z in pairs:
        assert verify(x, prover.a, r, z)
    return SigmaExtraction(special_extract(x, pairs, k), pairs, n, eta0)
