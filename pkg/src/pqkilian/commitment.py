"""Keyed 2-to-1 hash families and the Merkle vector commitment.

Wire format of an opening proof (all integers big-endian)::

    u32 ell | u32 |Q| | |Q| x u32 index | node*

    node = u8 level | u32 position | digest (output_bits / 8 bytes)

Level 0 holds leaf digests, level ``height`` would be the root.  Nodes are
sorted by ``(level, position)`` and each appears once.  Only nodes that the
verifier cannot recompute from the opened leaves are sent; nodes whose whole
subtree lies in the zero padding are recomputed by the verifier and never
sent.

Indices are 0-based.  Leaves are hashed as ``h(0x00 || symbol)`` and inner
nodes as ``h(0x01 || left || right)``.
"""
from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import InvalidParameter, InvalidQuery, LengthMismatch
from .rng import Drbg, as_drbg

LEAF = 0x00
INNER = 0x01


class HashFamily:
    """Keyed compressing hash ``{0,1}^n -> {0,1}^(n/2)``.

    Subclasses implement ``_digest(key, domain, data)``; ``data`` is always
    ``input_bits / 8`` bytes.
    """

    name = "abstract"
    security_param: int
    input_bits: int

    @property
    def output_bits(self) -> int:
        return self.input_bits // 2

    @property
    def input_bytes(self) -> int:
        return self.input_bits // 8

    @property
    def output_bytes(self) -> int:
        return self.output_bits // 8

    @property
    def key_bytes(self) -> int:
        return self.input_bits // 8

    def eval(self, key: bytes, data: bytes, domain: int = LEAF) -> bytes:
        if len(data) != self.input_bytes:
            raise LengthMismatch(f"expected {self.input_bytes} input bytes, got {len(data)}")
        return self._digest(key, domain, data)

    def _digest(self, key: bytes, domain: int, data: bytes) -> bytes:
        raise NotImplementedError

    def describe(self) -> dict:
        return {"family": self.name, "lambda": self.security_param, "input_bits": self.input_bits}


class Blake2Family(HashFamily):
    """Keyed BLAKE2b with ``n = 4 lambda`` input bits and ``2 lambda`` output bits."""

    name = "blake2b"

    def __init__(self, security_param: int = 128):
        if security_param % 4 or not 8 <= security_param <= 128:
            raise InvalidParameter("lambda must be a multiple of 4 in [8, 128]")
        self.security_param = security_param
        self.input_bits = 4 * security_param

    def _digest(self, key, domain, data):
        h = hashlib.blake2b(bytes([domain]) + data, key=key, digest_size=self.output_bytes)
        return h.digest()


class XorRotateFamily(HashFamily):
    """Toy family on ``n``-bit inputs, n in {8, 16, ..., 64}.

    With ``w = n/2``, input ``x = hi || lo`` and key ``k = k_hi || k_lo``::

        h_k(x) = rotl_w(hi ^ k_hi, 3) ^ lo ^ k_lo ^ (domain * C_w)

    where ``C_w`` is the low ``w`` bits of 0x9E3779B9.  For fixed ``lo`` the
    map ``hi -> h`` is a bijection, so every digest has exactly ``2^w``
    preimages and collisions can be written down directly.  Never use this
    outside experiments.
    """

    name = "xor-rotate"
    ROT = 3
    GOLDEN = 0x9E3779B9

    def __init__(self, input_bits: int = 16, security_param: int = 16):
        if input_bits % 16 or not 16 <= input_bits <= 64:
            raise InvalidParameter("toy family input_bits must be 16, 32, 48 or 64")
        self.input_bits = input_bits
        self.security_param = security_param

    @property
    def width(self) -> int:
        return self.input_bits // 2

    def word(self, key: int, x: int, domain: int = LEAF) -> int:
        w = self.width
        mask = (1 << w) - 1
        hi, lo = x >> w, x & mask
        khi, klo = key >> w, key & mask
        v = hi ^ khi
        rot = ((v << self.ROT) | (v >> (w - self.ROT))) & mask
        return rot ^ lo ^ klo ^ ((self.GOLDEN & mask) * domain)

    def _digest(self, key, domain, data):
        out = self.word(int.from_bytes(key, "big"), int.from_bytes(data, "big"), domain)
        return out.to_bytes(self.output_bytes, "big")

    def collision(self, key: int, x: int, hi2: int) -> int:
        """Return ``x2`` with ``hi(x2) = hi2`` and ``h(x2) = h(x)``."""
        w = self.width
        mask = (1 << w) - 1
        target = self.word(key, x)
        lo2 = self.word(key, (hi2 & mask) << w) ^ target
        return ((hi2 & mask) << w) | lo2


def family_from_description(desc: dict) -> HashFamily:
    if desc["family"] == Blake2Family.name:
        return Blake2Family(desc["lambda"])
    if desc["family"] == XorRotateFamily.name:
        return XorRotateFamily(desc["input_bits"], desc["lambda"])
    raise InvalidParameter(f"unknown hash family {desc['family']!r}")


@dataclass(frozen=True)
class CommitmentKey:
    length: int
    family: HashFamily = field(compare=False)
    hash_key: bytes

    @property
    def alphabet_width(self) -> int:
        return self.family.input_bits

    @property
    def height(self) -> int:
        return tree_height(self.length)

    def __eq__(self, other):
        return (
            isinstance(other, CommitmentKey)
            and self.length == other.length
            and self.hash_key == other.hash_key
            and self.family.describe() == other.family.describe()
        )

    def __hash__(self):
        return hash((self.length, self.hash_key))


@dataclass(frozen=True)
class Commitment:
    root: bytes


@dataclass(frozen=True)
class MerkleAux:
    message: tuple
    levels: tuple  # levels[0] = leaf digests (padded), levels[-1] = (root,)


@dataclass(frozen=True)
class OpeningProof:
    length: int
    indices: tuple
    nodes: tuple  # ((level, position, digest), ...)

    def to_bytes(self) -> bytes:
        out = [struct.pack(">II", self.length, len(self.indices))]
        out += [struct.pack(">I", i) for i in self.indices]
        for level, pos, digest in self.nodes:
            out.append(struct.pack(">BI", level, pos) + digest)
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data: bytes, digest_bytes: int) -> "OpeningProof":
        if len(data) < 8:
            raise ValueError("truncated proof header")
        length, nq = struct.unpack_from(">II", data, 0)
        off = 8
        if len(data) < off + 4 * nq:
            raise ValueError("truncated index list")
        indices = struct.unpack_from(f">{nq}I", data, off)
        off += 4 * nq
        step = 5 + digest_bytes
        rest = len(data) - off
        if rest % step:
            raise ValueError("trailing bytes in proof")
        nodes = []
        for j in range(rest // step):
            level, pos = struct.unpack_from(">BI", data, off)
            nodes.append((level, pos, bytes(data[off + 5: off + step])))
            off += step
        return cls(length, tuple(indices), tuple(nodes))


def tree_height(length: int) -> int:
    return max(0, (length - 1).bit_length())


def vc_gen(security_param: int, length: int, family: HashFamily | None = None,
           rng: Drbg | int | None = None) -> CommitmentKey:
    """Sample a commitment key; the hash key is the next ``n`` bits of ``rng``."""
    if length < 1:
        raise InvalidParameter("vector length must be at least 1")
    if family is None:
        family = Blake2Family(security_param)
    key = as_drbg(rng).read(family.key_bytes)
    return CommitmentKey(length, family, key)


def encode_symbol(ck: CommitmentKey, value: int | bytes) -> bytes:
    nb = ck.family.input_bytes
    if isinstance(value, (bytes, bytearray)):
        if len(value) != nb:
            raise LengthMismatch(f"symbol must be {nb} bytes")
        return bytes(value)
    if value < 0 or value >= 1 << ck.alphabet_width:
        raise InvalidParameter("symbol out of range")
    return int(value).to_bytes(nb, "big")


def _zero_ladder(ck: CommitmentKey) -> list[bytes]:
    fam, key = ck.family, ck.hash_key
    z = [fam.eval(key, bytes(fam.input_bytes), LEAF)]
    for _ in range(ck.height):
        z.append(fam.eval(key, z[-1] + z[-1], INNER))
    return z


def vc_commit(ck: CommitmentKey, message: Sequence[int | bytes]) -> tuple[Commitment, MerkleAux]:
    if len(message) != ck.length:
        raise LengthMismatch(f"message has {len(message)} symbols, key expects {ck.length}")
    fam, key = ck.family, ck.hash_key
    leaves = [fam.eval(key, encode_symbol(ck, m), LEAF) for m in message]
    size = 1 << ck.height
    if size > len(leaves):
        pad = fam.eval(key, bytes(fam.input_bytes), LEAF)
        leaves += [pad] * (size - len(leaves))
    levels = [tuple(leaves)]
    cur = leaves
    while len(cur) > 1:
        cur = [fam.eval(key, cur[i] + cur[i + 1], INNER) for i in range(0, len(cur), 2)]
        levels.append(tuple(cur))
    return Commitment(levels[-1][0]), MerkleAux(tuple(message), tuple(levels))


def _check_query(length: int, indices: Iterable[int]) -> tuple[int, ...]:
    q = tuple(sorted(set(int(i) for i in indices)))
    if not q:
        raise InvalidQuery("empty query set")
    if q[0] < 0 or q[-1] >= length:
        raise InvalidQuery(f"index out of range for length {length}")
    return q


def required_nodes(length: int, indices: Sequence[int]) -> list[tuple[int, int]]:
    """Coordinates a proof for ``indices`` must carry, sorted by (level, position)."""
    height = tree_height(length)
    known = set(indices)
    need = []
    for level in range(height):
        span = 1 << level  # leaves under one node at this level
        parents = set()
        for pos in sorted(known):
            sib = pos ^ 1
            if sib not in known and sib * span < length:
                need.append((level, sib))
            parents.add(pos >> 1)
        known = parents
    need.sort()
    return need


def vc_open(ck: CommitmentKey, aux: MerkleAux, indices: Iterable[int]) -> OpeningProof:
    q = _check_query(ck.length, indices)
    nodes = tuple((lv, pos, aux.levels[lv][pos]) for lv, pos in required_nodes(ck.length, q))
    return OpeningProof(ck.length, q, nodes)


def _verify(ck: CommitmentKey, cm: Commitment, indices, values, pf: OpeningProof) -> bool:
    q = tuple(int(i) for i in indices)
    if len(q) == 0 or list(q) != sorted(set(q)) or q[0] < 0 or q[-1] >= ck.length:
        return False
    if pf.length != ck.length or tuple(pf.indices) != q or len(values) != len(q):
        return False
    fam, key = ck.family, ck.hash_key
    if len(cm.root) != fam.output_bytes:
        return False
    need = required_nodes(ck.length, q)
    if [(lv, pos) for lv, pos, _ in pf.nodes] != need:
        return False
    given = {(lv, pos): d for lv, pos, d in pf.nodes}
    if any(len(d) != fam.output_bytes for d in given.values()):
        return False
    zeros = _zero_ladder(ck)
    cur = {i: fam.eval(key, encode_symbol(ck, v), LEAF) for i, v in zip(q, values)}
    for level in range(ck.height):
        span = 1 << level
        nxt = {}
        for pos in sorted(cur):
            parent = pos >> 1
            if parent in nxt:
                continue
            sib = pos ^ 1
            if sib in cur:
                sd = cur[sib]
            elif sib * span >= ck.length:
                sd = zeros[level]
            else:
                sd = given[(level, sib)]
            left, right = (cur[pos], sd) if pos % 2 == 0 else (sd, cur[pos])
            nxt[parent] = fam.eval(key, left + right, INNER)
        cur = nxt
    return len(cur) == 1 and cur.get(0) == cm.root


def vc_verify(ck: CommitmentKey, cm: Commitment, indices, values, pf) -> int:
    """Return 1 iff the opening is valid; never raises."""
    try:
        if isinstance(pf, (bytes, bytearray)):
            pf = OpeningProof.from_bytes(bytes(pf), ck.family.output_bytes)
        return int(_verify(ck, cm, indices, values, pf))
    except Exception:
        return 0
