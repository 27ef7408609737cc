"""Amplified constraint-satisfaction PCP.

The proof string is the assignment itself.  A challenge ``r`` of ``rc`` bits
is split into ``k`` big-endian blocks of ``block_bits`` bits; block ``i``
selects constraint ``int(block_i) mod m``.  The verifier reads the variables
of the selected constraints and accepts iff all of them are satisfied.

``block_bits`` is ``ceil(log2 m) + bias_bits`` rounded up to whole bytes, so
the statistical distance of each block from uniform on ``[m]`` is below
``m / 2^block_bits <= 2^-bias_bits``.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from functools import cached_property
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import InvalidParameter, InvalidRandomness, NotAWitness
from .rng import Drbg, as_drbg


@dataclass(frozen=True)
class Constraint:
    vars: tuple
    allowed: frozenset

    def satisfied(self, values: Sequence[int]) -> bool:
        return tuple(values) in self.allowed


@dataclass(frozen=True)
class CSPInstance:
    num_vars: int
    alphabet_size: int
    constraints: tuple
    planted: tuple | None = None
    gap: Fraction = Fraction(0)
    k: int = 1
    bias_bits: int = 32

    def __post_init__(self):
        if self.num_vars < 1 or self.alphabet_size < 1 or self.k < 1:
            raise InvalidParameter("num_vars, alphabet_size and k must be positive")
        for c in self.constraints:
            if any(v < 0 or v >= self.num_vars for v in c.vars):
                raise InvalidParameter(f"constraint {c.vars} references a missing variable")
        if self.planted is not None and violated(self, self.planted):
            raise InvalidParameter("planted assignment does not satisfy the instance")

    @cached_property
    def params(self) -> "PCPParams":
        return pcp_params(self)


@dataclass(frozen=True)
class PCPParams:
    alphabet_size: int
    alphabet_bits: int
    proof_length: int
    randomness_bits: int
    query_count: int
    block_bits: int
    soundness_error: Fraction
    knowledge_error: Fraction


@dataclass(frozen=True)
class PCPString:
    symbols: tuple

    def __len__(self):
        return len(self.symbols)

    def __getitem__(self, i):
        return self.symbols[i]


def pcp_params(x: CSPInstance) -> PCPParams:
    m = max(1, len(x.constraints))
    arity = max((len(c.vars) for c in x.constraints), default=0)
    block = 8 * math.ceil((max(1, (m - 1).bit_length()) + x.bias_bits) / 8)
    err = (1 - Fraction(x.gap)) ** x.k if x.constraints else Fraction(1)
    return PCPParams(
        alphabet_size=x.alphabet_size,
        alphabet_bits=max(1, (x.alphabet_size - 1).bit_length()),
        proof_length=x.num_vars,
        randomness_bits=x.k * block,
        query_count=min(x.num_vars, x.k * arity),
        block_bits=block,
        soundness_error=err,
        knowledge_error=err,
    )


def violated(x: CSPInstance, assignment: Sequence[int]) -> int:
    return sum(not c.satisfied([assignment[v] for v in c.vars]) for c in x.constraints)


def _as_int(x: CSPInstance, r) -> int:
    rc = x.params.randomness_bits
    if isinstance(r, (bytes, bytearray)):
        if len(r) * 8 != rc:
            raise InvalidRandomness(f"challenge must be {rc // 8} bytes, got {len(r)}")
        return int.from_bytes(r, "big")
    if isinstance(r, (int, np.integer)) and not isinstance(r, bool):
        if not 0 <= int(r) < 1 << rc:
            raise InvalidRandomness(f"challenge must be an {rc}-bit integer")
        return int(r)
    raise InvalidRandomness("challenge must be bytes or int")


def selected_constraints(x: CSPInstance, r) -> list[int]:
    p = x.params
    v = _as_int(x, r)
    m = len(x.constraints)
    if m == 0:
        return []
    mask = (1 << p.block_bits) - 1
    out = []
    for i in range(x.k):
        shift = (x.k - 1 - i) * p.block_bits
        out.append(((v >> shift) & mask) % m)
    return out


def pcp_queries(x: CSPInstance, r) -> tuple[int, ...]:
    q = set()
    for ci in selected_constraints(x, r):
        q.update(x.constraints[ci].vars)
    return tuple(sorted(q))


def pcp_decide(x: CSPInstance, r, answers: Mapping[int, int]) -> int:
    try:
        chosen = selected_constraints(x, r)
    except InvalidRandomness:
        return 0
    q = set()
    for ci in chosen:
        q.update(x.constraints[ci].vars)
    if set(answers) != q:
        return 0
    for ci in chosen:
        c = x.constraints[ci]
        if not c.satisfied([answers[v] for v in c.vars]):
            return 0
    return 1


def pcp_prove(x: CSPInstance, w: Sequence[int]) -> PCPString:
    w = tuple(int(a) for a in w)
    if len(w) != x.num_vars or any(not 0 <= a < x.alphabet_size for a in w):
        raise NotAWitness("assignment has the wrong shape")
    if violated(x, w):
        raise NotAWitness(f"assignment violates {violated(x, w)} constraint(s)")
    return PCPString(w)


def pcp_extract(x: CSPInstance, pi: PCPString | Sequence[int] | None):
    if pi is None:
        return None
    w = tuple(pi.symbols if isinstance(pi, PCPString) else pi)
    if len(w) != x.num_vars or any(not 0 <= a < x.alphabet_size for a in w):
        return None
    return None if violated(x, w) else w


def block_weights(x: CSPInstance) -> list[int]:
    """Number of block values mapping to each constraint index."""
    m = len(x.constraints)
    size = 1 << x.params.block_bits
    base, extra = divmod(size, m)
    return [base + (1 if c < extra else 0) for c in range(m)]


def pcp_win_rate(x: CSPInstance, pi: PCPString | Sequence[int]) -> Fraction:
    """Exact fraction of challenges in {0,1}^rc that accept ``pi``.

    Blocks are independent, so the number of accepting challenges factors as
    ``(sum_c weight_c * sat_c)^k``; this counts every challenge exactly once.
    """
    if not x.constraints:
        return Fraction(1)
    w = tuple(pi.symbols if isinstance(pi, PCPString) else pi)
    weights = block_weights(x)
    good = sum(wt for wt, c in zip(weights, x.constraints)
               if c.satisfied([w[v] for v in c.vars]))
    return Fraction(good, 1 << x.params.block_bits) ** x.k


def random_challenge(x: CSPInstance, rng: Drbg | int | None) -> bytes:
    return as_drbg(rng).read(x.params.randomness_bits // 8)


# ---------------------------------------------------------------- instances

def to_json(x: CSPInstance) -> dict:
    return {
        "num_vars": x.num_vars,
        "alphabet_size": x.alphabet_size,
        "constraints": [
            {"vars": list(c.vars), "allowed": sorted(list(t) for t in c.allowed)}
            for c in x.constraints
        ],
        "planted": None if x.planted is None else list(x.planted),
        "gap": str(Fraction(x.gap)),
        "k": x.k,
        "bias_bits": x.bias_bits,
    }


def from_json(d: dict) -> CSPInstance:
    cons = tuple(
        Constraint(tuple(int(v) for v in c["vars"]), frozenset(tuple(t) for t in c["allowed"]))
        for c in d["constraints"]
    )
    return CSPInstance(
        num_vars=int(d["num_vars"]),
        alphabet_size=int(d["alphabet_size"]),
        constraints=cons,
        planted=None if d.get("planted") is None else tuple(int(a) for a in d["planted"]),
        gap=Fraction(str(d.get("gap", 0))),
        k=int(d.get("k", 1)),
        bias_bits=int(d.get("bias_bits", 32)),
    )


def load_instance(path: str | Path) -> CSPInstance:
    return from_json(json.loads(Path(path).read_text()))


def save_instance(x: CSPInstance, path: str | Path) -> None:
    Path(path).write_text(json.dumps(to_json(x), indent=1) + "\n")


def with_params(x: CSPInstance, **kw) -> CSPInstance:
    d = dict(num_vars=x.num_vars, alphabet_size=x.alphabet_size, constraints=x.constraints,
             planted=x.planted, gap=x.gap, k=x.k, bias_bits=x.bias_bits)
    d.update(kw)
    return CSPInstance(**d)


def _neq(q: int) -> frozenset:
    return frozenset((a, b) for a in range(q) for b in range(q) if a != b)


def _nae(q: int) -> frozenset:
    return frozenset(t for t in itertools.product(range(q), repeat=3) if len(set(t)) > 1)


def coloring_instance(num_vars: int, edges, colors: int = 3, planted=None, **kw) -> CSPInstance:
    rel = _neq(colors)
    cons = tuple(Constraint((int(a), int(b)), rel) for a, b in edges)
    return CSPInstance(num_vars, colors, cons, planted, **kw)


def planted_coloring(num_vars: int, num_edges: int, rng, colors: int = 3, **kw) -> CSPInstance:
    """Random graph whose edges all respect a hidden uniform coloring."""
    g = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    while True:
        planted = g.integers(0, colors, size=num_vars)
        if len(set(planted.tolist())) == min(colors, num_vars):
            break
    edges = []
    while len(edges) < num_edges:
        a, b = g.integers(0, num_vars, size=2)
        if planted[a] != planted[b]:
            edges.append((int(a), int(b)))
    return coloring_instance(num_vars, edges, colors, tuple(int(c) for c in planted), **kw)


def planted_nae(num_vars: int, num_clauses: int, rng, **kw) -> CSPInstance:
    """Random not-all-equal 3-SAT (binary alphabet) with a planted solution."""
    g = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    planted = g.integers(0, 2, size=num_vars)
    rel = _nae(2)
    cons = []
    while len(cons) < num_clauses:
        vs = tuple(int(v) for v in g.choice(num_vars, size=3, replace=False))
        if len({int(planted[v]) for v in vs}) > 1:
            cons.append(Constraint(vs, rel))
    return CSPInstance(num_vars, 2, tuple(cons), tuple(int(a) for a in planted), **kw)


def exhaustive_gap(x: CSPInstance) -> Fraction:
    """min over all assignments of the violated fraction (``|Sigma|^ell`` work)."""
    m = len(x.constraints)
    if m == 0:
        return Fraction(0)
    n, q = x.num_vars, x.alphabet_size
    if q ** n > 5_000_000:
        raise InvalidParameter("instance too large for exhaustive gap search")
    grid = np.array(list(itertools.product(range(q), repeat=n)), dtype=np.int64)
    bad = np.zeros(len(grid), dtype=np.int64)
    for c in x.constraints:
        cols = grid[:, list(c.vars)]
        ok = np.zeros(len(grid), dtype=bool)
        for t in c.allowed:
            ok |= np.all(cols == np.array(t), axis=1)
        bad += ~ok
    return Fraction(int(bad.min()), m)


def default_k(gap: Fraction, target_log2: int = 10) -> int:
    """Smallest k with (1 - gap)^k <= 2^-target_log2."""
    gap = Fraction(gap)
    if gap <= 0:
        raise InvalidParameter("gap must be positive")
    if gap >= 1:
        return 1
    return math.ceil(target_log2 * math.log(2) / -math.log1p(-float(gap)))


def hill_climb(x: CSPInstance, rng, restarts: int = 20, steps: int = 2000) -> tuple[int, ...]:
    """Assignment with few violated constraints found by local search."""
    g = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    touching = [[] for _ in range(x.num_vars)]
    for c in x.constraints:
        for v in set(c.vars):
            touching[v].append(c)

    def local(a, i):
        return sum(not c.satisfied([a[v] for v in c.vars]) for c in touching[i])

    best, best_bad = None, None
    for _ in range(restarts):
        a = [int(v) for v in g.integers(0, x.alphabet_size, size=x.num_vars)]
        bad = violated(x, a)
        moves = g.integers(x.num_vars, size=steps).tolist()
        values = g.integers(x.alphabet_size, size=steps).tolist()
        for i, new in zip(moves, values):
            if bad == 0:
                break
            old = a[i]
            before = local(a, i)
            a[i] = new
            delta = local(a, i) - before
            if delta <= 0:
                bad += delta
            else:
                a[i] = old
        if best_bad is None or bad < best_bad:
            best, best_bad = tuple(a), bad
    return best
