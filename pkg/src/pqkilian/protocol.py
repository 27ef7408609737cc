"""Four-message succinct argument: PCP + Merkle commitment.

Message flow (V = verifier, P = prover)::

    V -> P  0x01  commitment key ck
    P -> V  0x02  commitment cm (Merkle root of the PCP string)
    V -> P  0x03  PCP challenge r
    P -> V  0x04  z = (answers on Q(r), opening proof)

Every message travels in a frame ``u8 tag | u32 length | payload``.
Payloads:

* ck: ``u32 ell | u8 family | u16 lambda | u16 input_bits | key``
  (family 1 = blake2b, 2 = xor-rotate)
* cm: root digest
* r: ``rc / 8`` challenge bytes
* z: ``u32 |Q| | |Q| symbols of input_bits / 8 bytes | opening proof``

A transcript is the concatenation of the four frames.
"""
from __future__ import annotations

import enum
import io
import json
import struct
from dataclasses import dataclass
from typing import BinaryIO, Sequence

from . import commitment as vc
from . import pcp
from .commitment import Blake2Family, Commitment, CommitmentKey, HashFamily, OpeningProof, XorRotateFamily
from .errors import InvalidParameter, ProtocolError
from .rng import Drbg, as_drbg

TAG_CK, TAG_CM, TAG_R, TAG_Z = 1, 2, 3, 4
MAX_FRAME = 1 << 26
_FAMILY_IDS = {Blake2Family.name: 1, XorRotateFamily.name: 2}


# ------------------------------------------------------------------ framing

def encode_frame(tag: int, payload: bytes) -> bytes:
    if tag not in (TAG_CK, TAG_CM, TAG_R, TAG_Z):
        raise ProtocolError(f"unknown message tag {tag}")
    return struct.pack(">BI", tag, len(payload)) + payload


def read_frame(stream: BinaryIO) -> tuple[int, bytes]:
    head = _read_exact(stream, 5)
    tag, n = struct.unpack(">BI", head)
    if tag not in (TAG_CK, TAG_CM, TAG_R, TAG_Z):
        raise ProtocolError(f"unknown message tag {tag}")
    if n > MAX_FRAME:
        raise ProtocolError("frame too large")
    return tag, _read_exact(stream, n)


def _read_exact(stream: BinaryIO, n: int) -> bytes:
    buf = b""
    while len(buf) < n:
        chunk = stream.read(n - len(buf))
        if not chunk:
            raise ProtocolError("connection closed mid-frame")
        buf += chunk
    return buf


def encode_key(ck: CommitmentKey) -> bytes:
    fam = ck.family
    return struct.pack(">IBHH", ck.length, _FAMILY_IDS[fam.name], fam.security_param,
                       fam.input_bits) + ck.hash_key


def decode_key(data: bytes) -> CommitmentKey:
    try:
        length, fid, lam, nbits = struct.unpack_from(">IBHH", data, 0)
    except struct.error as e:
        raise ProtocolError("truncated commitment key") from e
    try:
        if fid == 1:
            fam: HashFamily = Blake2Family(lam)
        elif fid == 2:
            fam = XorRotateFamily(nbits, lam)
        else:
            raise ProtocolError(f"unknown hash family id {fid}")
    except InvalidParameter as e:
        raise ProtocolError(f"bad commitment key parameters: {e}") from e
    if fam.input_bits != nbits or len(data) != 9 + fam.key_bytes:
        raise ProtocolError("commitment key has inconsistent size")
    if length < 1:
        raise ProtocolError("commitment key with zero length")
    return CommitmentKey(length, fam, bytes(data[9:]))


@dataclass(frozen=True)
class Response:
    answers: tuple  # symbols, in increasing index order of Q
    proof: OpeningProof | None

    def encode(self, ck: CommitmentKey) -> bytes:
        body = struct.pack(">I", len(self.answers))
        body += b"".join(vc.encode_symbol(ck, a) for a in self.answers)
        if self.proof is not None:
            body += self.proof.to_bytes()
        return body

    @classmethod
    def decode(cls, ck: CommitmentKey, data: bytes) -> "Response":
        nb = ck.family.input_bytes
        if len(data) < 4:
            raise ProtocolError("truncated response")
        (nq,) = struct.unpack_from(">I", data, 0)
        end = 4 + nq * nb
        if len(data) < end:
            raise ProtocolError("truncated answers")
        answers = tuple(int.from_bytes(data[4 + i * nb: 4 + (i + 1) * nb], "big") for i in range(nq))
        rest = data[end:]
        try:
            proof = OpeningProof.from_bytes(rest, ck.family.output_bytes) if rest else None
        except ValueError as e:
            raise ProtocolError(f"malformed opening proof: {e}") from e
        return cls(answers, proof)


# --------------------------------------------------------------- transcripts

@dataclass(frozen=True)
class Transcript:
    ck: CommitmentKey
    cm: Commitment
    r: bytes
    z: Response

    def frames(self) -> list[bytes]:
        return [
            encode_frame(TAG_CK, encode_key(self.ck)),
            encode_frame(TAG_CM, self.cm.root),
            encode_frame(TAG_R, self.r),
            encode_frame(TAG_Z, self.z.encode(self.ck)),
        ]

    def to_bytes(self) -> bytes:
        return b"".join(self.frames())

    @classmethod
    def from_bytes(cls, data: bytes) -> "Transcript":
        s = io.BytesIO(data)
        parts = {}
        for want in (TAG_CK, TAG_CM, TAG_R, TAG_Z):
            tag, payload = read_frame(s)
            if tag != want:
                raise ProtocolError(f"expected tag {want}, found {tag}")
            parts[tag] = payload
        if s.read(1):
            raise ProtocolError("trailing bytes after transcript")
        ck = decode_key(parts[TAG_CK])
        return cls(ck, Commitment(parts[TAG_CM]), parts[TAG_R], Response.decode(ck, parts[TAG_Z]))

    def to_json(self, x: pcp.CSPInstance | None = None) -> dict:
        q = list(pcp.pcp_queries(x, self.r)) if x is not None else None
        answers = (dict(zip(map(str, q), self.z.answers))
                   if q is not None and len(q) == len(self.z.answers) else list(self.z.answers))
        return {
            "ck": {"length": self.ck.length, **self.ck.family.describe(),
                   "hash_key": self.ck.hash_key.hex()},
            "cm": self.cm.root.hex(),
            "r": self.r.hex(),
            "z": {
                "answers": answers,
                "proof": None if self.z.proof is None else {
                    "length": self.z.proof.length,
                    "indices": list(self.z.proof.indices),
                    "nodes": [[lv, pos, d.hex()] for lv, pos, d in self.z.proof.nodes],
                },
            },
            "size": transcript_size(self),
        }


def transcript_size(tau: Transcript) -> int:
    return len(tau.to_bytes())


def verify_transcript(x: pcp.CSPInstance, tau: Transcript) -> int:
    """Public verification; a pure function of the instance and transcript."""
    try:
        if tau.ck.length != x.num_vars:
            return 0
        q = pcp.pcp_queries(x, tau.r)
        if len(tau.z.answers) != len(q):
            return 0
        answers = dict(zip(q, tau.z.answers))
        if not pcp.pcp_decide(x, tau.r, answers):
            return 0
        if not q:
            return int(tau.z.proof is None)
        return vc.vc_verify(tau.ck, tau.cm, q, list(tau.z.answers), tau.z.proof)
    except Exception:
        return 0


# ------------------------------------------------------------------ sessions

class Phase(enum.Enum):
    AWAITING_CK = "awaiting-ck"
    AWAITING_CM = "awaiting-cm"
    COMMITTED = "committed"
    CHALLENGED = "challenged"
    DONE = "done"
    POISONED = "poisoned"


class _Session:
    phase: Phase

    def _expect(self, *phases: Phase) -> None:
        if self.phase not in phases:
            got = self.phase
            self.phase = Phase.POISONED
            raise ProtocolError(f"{type(self).__name__}: message not allowed in phase {got.value}")

    def _fail(self, msg: str) -> None:
        self.phase = Phase.POISONED
        raise ProtocolError(msg)


class VerifierSession(_Session):
    def __init__(self, x: pcp.CSPInstance, security_param: int = 128,
                 family: HashFamily | None = None):
        self.x = x
        self.security_param = security_param
        self.family = family
        self.ck: CommitmentKey | None = None
        self.cm: Commitment | None = None
        self.r: bytes | None = None
        self.transcript: Transcript | None = None
        self.verdict: int | None = None
        self.phase = Phase.AWAITING_CK

    def emit_key(self, rng) -> CommitmentKey:
        self._expect(Phase.AWAITING_CK)
        self.ck = vc.vc_gen(self.security_param, self.x.num_vars, self.family, rng)
        self.phase = Phase.AWAITING_CM
        return self.ck

    def receive_commitment(self, cm: Commitment) -> None:
        self._expect(Phase.AWAITING_CM)
        if len(cm.root) != self.ck.family.output_bytes:
            self._fail("commitment has the wrong length")
        self.cm = cm
        self.phase = Phase.COMMITTED

    def emit_challenge(self, rng) -> bytes:
        self._expect(Phase.COMMITTED)
        self.r = pcp.random_challenge(self.x, rng)
        self.phase = Phase.CHALLENGED
        return self.r

    def receive_response(self, z: Response) -> int:
        self._expect(Phase.CHALLENGED)
        self.transcript = Transcript(self.ck, self.cm, self.r, z)
        self.verdict = verify_transcript(self.x, self.transcript)
        self.phase = Phase.DONE
        return self.verdict

    # wire-level
    def handle(self, tag: int, payload: bytes):
        if tag == TAG_CM:
            self.receive_commitment(Commitment(payload))
        elif tag == TAG_Z:
            if self.ck is None:
                self._fail("response before key")
            try:
                z = Response.decode(self.ck, payload)
            except ProtocolError:
                self.phase = Phase.POISONED
                raise
            return self.receive_response(z)
        else:
            self._fail(f"verifier cannot receive tag {tag}")
        return None


class ProverSession(_Session):
    def __init__(self, x: pcp.CSPInstance, w: Sequence[int]):
        self.x = x
        self.pi = pcp.pcp_prove(x, w)
        self.ck: CommitmentKey | None = None
        self.cm: Commitment | None = None
        self.aux: vc.MerkleAux | None = None
        self.r: bytes | None = None
        self.phase = Phase.AWAITING_CK

    def receive_key(self, ck: CommitmentKey) -> None:
        self._expect(Phase.AWAITING_CK)
        if ck.length != self.x.num_vars:
            self._fail("commitment key length does not match the proof length")
        self.ck = ck
        self.phase = Phase.AWAITING_CM

    def emit_commitment(self) -> Commitment:
        self._expect(Phase.AWAITING_CM)
        self.cm, self.aux = vc.vc_commit(self.ck, self.pi.symbols)
        self.phase = Phase.COMMITTED
        return self.cm

    def receive_challenge(self, r: bytes) -> None:
        self._expect(Phase.COMMITTED)
        try:
            pcp.pcp_queries(self.x, r)
        except Exception as e:
            self._fail(f"bad challenge: {e}")
        self.r = bytes(r)
        self.phase = Phase.CHALLENGED

    def emit_response(self) -> Response:
        self._expect(Phase.CHALLENGED)
        q = pcp.pcp_queries(self.x, self.r)
        answers = tuple(self.pi[i] for i in q)
        proof = vc.vc_open(self.ck, self.aux, q) if q else None
        self.phase = Phase.DONE
        return Response(answers, proof)

    def handle(self, tag: int, payload: bytes):
        if tag == TAG_CK:
            try:
                ck = decode_key(payload)
            except (ProtocolError, InvalidParameter) as e:
                self._fail(str(e))
            self.receive_key(ck)
            return TAG_CM, self.emit_commitment().root
        if tag == TAG_R:
            self.receive_challenge(payload)
            return TAG_Z, self.emit_response().encode(self.ck)
        self._fail(f"prover cannot receive tag {tag}")


# ---------------------------------------------------------- functional API

def verifier_msg1(security_param: int, x: pcp.CSPInstance, rng, family: HashFamily | None = None):
    s = VerifierSession(x, security_param, family)
    return s.emit_key(rng), s


def prover_msg2(x: pcp.CSPInstance, w: Sequence[int], ck: CommitmentKey):
    s = ProverSession(x, w)
    s.receive_key(ck)
    return s.emit_commitment(), s


def verifier_msg3(session: VerifierSession, rng, cm: Commitment | None = None) -> bytes:
    if cm is not None:
        session.receive_commitment(cm)
    return session.emit_challenge(rng)


def prover_msg4(session: ProverSession, r: bytes) -> Response:
    session.receive_challenge(r)
    return session.emit_response()


def run_honest(x: pcp.CSPInstance, w: Sequence[int], rng: Drbg | int | None = None,
               security_param: int = 128, family: HashFamily | None = None) -> tuple[int, Transcript]:
    rng = as_drbg(rng)
    ck, vs = verifier_msg1(security_param, x, rng.fork("ck"), family)
    cm, ps = prover_msg2(x, w, ck)
    r = verifier_msg3(vs, rng.fork("r"), cm)
    z = prover_msg4(ps, r)
    return vs.receive_response(z), vs.transcript


def load_transcript(path) -> Transcript:
    with open(path, "rb") as fh:
        return Transcript.from_bytes(fh.read())


def dump_json(tau: Transcript, x: pcp.CSPInstance | None = None) -> str:
    return json.dumps(tau.to_json(x), indent=1)
