"""Classical rewinding extractor for the four-message argument.

A prover oracle is resettable: after ``first_round(ck)`` returns the
commitment and an opaque state, ``respond(state, r)`` may be called any
number of times and depends only on ``(state, r)`` and the oracle seed.
"""
from __future__ import annotations

import hashlib
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from . import commitment as vc
from . import pcp
from .commitment import Commitment, CommitmentKey
from .errors import InvalidParameter
from .protocol import Response, Transcript, VerifierSession, verify_transcript
from .rng import Drbg, as_drbg

TOO_FEW = "too-few-transcripts"
INCONSISTENT = "inconsistent"
PCP_FAILED = "pcp-extract-failed"


# ------------------------------------------------------------------ oracles

class ClassicalProverOracle:
    """Base class.  Subclasses override ``first_round`` and ``respond``."""

    name = "abstract"

    def first_round(self, ck: CommitmentKey):
        raise NotImplementedError

    def respond(self, state, r: bytes) -> Response:
        raise NotImplementedError


@dataclass
class _Committed:
    ck: CommitmentKey
    symbols: tuple
    aux: vc.MerkleAux


def _coin(seed: int, r: bytes) -> float:
    d = hashlib.blake2b(r, key=seed.to_bytes(8, "big"), digest_size=8).digest()
    return int.from_bytes(d, "big") / 2.0**64


class CommittedAssignmentOracle(ClassicalProverOracle):
    """Commits to a fixed assignment and answers every query honestly about it."""

    name = "committed"

    def __init__(self, x: pcp.CSPInstance, assignment: Sequence[int]):
        self.x = x
        self.assignment = tuple(int(a) for a in assignment)

    def first_round(self, ck):
        cm, aux = vc.vc_commit(ck, self.assignment)
        return cm, _Committed(ck, self.assignment, aux)

    def _honest(self, st: _Committed, r: bytes) -> Response:
        q = pcp.pcp_queries(self.x, r)
        proof = vc.vc_open(st.ck, st.aux, q) if q else None
        return Response(tuple(st.symbols[i] for i in q), proof)

    def respond(self, state, r):
        return self._honest(state, r)


class HonestOracle(CommittedAssignmentOracle):
    name = "honest"

    def __init__(self, x: pcp.CSPInstance, w: Sequence[int]):
        super().__init__(x, pcp.pcp_prove(x, w).symbols)


class ThrottledOracle(CommittedAssignmentOracle):
    """Honest on a pseudo-random ``rate`` fraction of challenges, garbage elsewhere."""

    name = "throttled"

    def __init__(self, x, w, rate: float, seed: int = 0):
        super().__init__(x, w)
        self.rate = rate
        self.seed = seed

    def respond(self, state, r):
        if _coin(self.seed, r) < self.rate:
            return self._honest(state, r)
        return _garbage(self.x, state.ck, self.seed, r)


class FirstBitZeroOracle(CommittedAssignmentOracle):
    name = "first-bit-zero"

    def respond(self, state, r):
        if r[0] >> 7 == 0:
            return self._honest(state, r)
        return _garbage(self.x, state.ck, 0, r)


class GarbageOracle(ClassicalProverOracle):
    name = "garbage"

    def __init__(self, x: pcp.CSPInstance, seed: int = 0):
        self.x = x
        self.seed = seed

    def first_round(self, ck):
        root = Drbg(self.seed).fork("root").read(ck.family.output_bytes)
        return Commitment(root), ck

    def respond(self, state, r):
        return _garbage(self.x, state, self.seed, r)


def _garbage(x: pcp.CSPInstance, ck: CommitmentKey, seed: int, r: bytes) -> Response:
    g = Drbg(seed).fork(b"garbage" + r)
    q = pcp.pcp_queries(x, r)
    answers = tuple(g.randbelow(x.alphabet_size) for _ in q)
    if not q:
        return Response(answers, None)
    nodes = tuple((lv, pos, g.read(ck.family.output_bytes))
                  for lv, pos in vc.required_nodes(ck.length, q))
    return Response(answers, vc.OpeningProof(ck.length, q, nodes))


def make_oracle(name: str, x: pcp.CSPInstance, seed: int = 0) -> ClassicalProverOracle:
    """Build an adversary from a spec string such as ``throttled:0.3``."""
    kind, _, arg = name.partition(":")
    if kind == "garbage":
        return GarbageOracle(x, seed)
    if kind == "best-effort":
        return CommittedAssignmentOracle(x, pcp.hill_climb(x, seed))
    if x.planted is None:
        raise InvalidParameter(f"adversary {kind!r} needs a planted witness")
    if kind == "honest":
        return HonestOracle(x, x.planted)
    if kind == "throttled":
        return ThrottledOracle(x, x.planted, float(arg or 0.3), seed)
    if kind == "first-bit-zero":
        return FirstBitZeroOracle(x, x.planted)
    if kind == "corrupt":
        # planted witness with the first j variables shifted by one colour
        j = int(arg or 1)
        a = list(x.planted)
        for i in range(min(j, len(a))):
            a[i] = (a[i] + 1) % x.alphabet_size
        return CommittedAssignmentOracle(x, a)
    raise InvalidParameter(f"unknown adversary {name!r}")


ADVERSARIES = ("honest", "throttled:<rate>", "first-bit-zero", "garbage", "best-effort",
               "corrupt:<j>")


# ---------------------------------------------------------------- extractor

@dataclass(frozen=True)
class ExtractionBudget:
    n: int
    k_target: int
    epsilon: float

    @classmethod
    def for_instance(cls, x: pcp.CSPInstance, epsilon: float) -> "ExtractionBudget":
        if not 0 < epsilon <= 1:
            raise InvalidParameter("epsilon must lie in (0, 1]")
        c = x.num_vars * math.log(2 * x.alphabet_size)
        return cls(math.ceil(60 * c / epsilon), math.ceil(6 * c), epsilon)


@dataclass(frozen=True)
class Accepted:
    r: bytes
    queries: tuple
    answers: tuple


@dataclass
class ExtractionResult:
    witness: tuple | None
    reason: str | None
    k: int
    n: int
    pi: tuple | None = None
    accepted: list = field(default_factory=list, repr=False)


def record_transcripts(oracle: ClassicalProverOracle, x: pcp.CSPInstance,
                       prefix: tuple, challenges: Iterable[bytes]) -> list[Accepted]:
    """Query the oracle on every challenge; keep the first accepting answer per distinct r."""
    ck, cm, state = prefix
    seen = set()
    out = []
    for r in challenges:
        if r in seen:
            continue
        z = oracle.respond(state, r)
        if verify_transcript(x, Transcript(ck, cm, r, z)):
            seen.add(r)
            out.append(Accepted(r, pcp.pcp_queries(x, r), tuple(z.answers)))
    return out


def assemble_pcp(length: int, opened: Iterable[tuple[Sequence[int], Sequence[int]]]):
    """Merge ``(Q, answers)`` pairs into a proof string; None on a conflict."""
    pi = [0] * length
    fixed = {}
    for q, ans in opened:
        for i, a in zip(q, ans):
            if fixed.setdefault(i, a) != a:
                return None
            pi[i] = a
    return tuple(pi)


def extract_witness(oracle: ClassicalProverOracle, x: pcp.CSPInstance, epsilon: float,
                    rng: Drbg | int | None = None, security_param: int = 128,
                    family=None) -> ExtractionResult:
    rng = as_drbg(rng)
    budget = ExtractionBudget.for_instance(x, epsilon)
    vs = VerifierSession(x, security_param, family)
    ck = vs.emit_key(rng.fork("ck"))
    cm, state = oracle.first_round(ck)
    coins = rng.fork("challenges")
    challenges = [pcp.random_challenge(x, coins) for _ in range(budget.n)]
    acc = record_transcripts(oracle, x, (ck, cm, state), challenges)
    k = len(acc)
    if k < budget.k_target:
        return ExtractionResult(None, TOO_FEW, k, budget.n, accepted=acc)
    pi = assemble_pcp(x.num_vars, ((a.queries, a.answers) for a in acc))
    if pi is None:
        return ExtractionResult(None, INCONSISTENT, k, budget.n, accepted=acc)
    w = pcp.pcp_extract(x, pi)
    return ExtractionResult(w, None if w is not None else PCP_FAILED, k, budget.n, pi, acc)


def summarize(results: Sequence[ExtractionResult]) -> dict:
    hist = Counter(r.reason for r in results if r.reason is not None)
    n = len(results)
    return {
        "runs": n,
        "success_rate": sum(r.witness is not None for r in results) / n if n else 0.0,
        "abort_histogram": dict(sorted(hist.items())),
        "mean_k": sum(r.k for r in results) / n if n else 0.0,
    }
