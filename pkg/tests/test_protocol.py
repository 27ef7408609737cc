import io
import itertools
import socket
import struct
import threading

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pqkilian import pcp
from pqkilian.cli import run_verifier, serve_prover
from pqkilian.commitment import Blake2Family, XorRotateFamily
from pqkilian.errors import ProtocolError
from pqkilian.experiments.scenarios import load_named_instance
from pqkilian.protocol import (TAG_CK, TAG_CM, Phase, ProverSession, Response, Transcript,
                               VerifierSession, decode_key, encode_frame, encode_key, read_frame,
                               run_honest, transcript_size, verify_transcript)
from pqkilian.rng import Drbg

X = load_named_instance("planted6_coloring")
W = tuple(X.planted)


@pytest.fixture(scope="module")
def honest():
    verdict, tau = run_honest(X, W, rng=5)
    assert verdict == 1
    return tau


def test_frame_roundtrip_and_errors():
    s = io.BytesIO(encode_frame(TAG_CM, b"abc") + encode_frame(TAG_CK, b""))
    assert read_frame(s) == (TAG_CM, b"abc")
    assert read_frame(s) == (TAG_CK, b"")
    with pytest.raises(ProtocolError):
        read_frame(s)
    with pytest.raises(ProtocolError):
        encode_frame(9, b"")
    with pytest.raises(ProtocolError):
        read_frame(io.BytesIO(b"\x07\x00\x00\x00\x00"))
    with pytest.raises(ProtocolError):
        read_frame(io.BytesIO(struct.pack(">BI", TAG_CM, 1 << 30)))
    with pytest.raises(ProtocolError):
        read_frame(io.BytesIO(struct.pack(">BI", TAG_CM, 4) + b"ab"))


@pytest.mark.parametrize("fam", [Blake2Family(128), Blake2Family(64), XorRotateFamily(64)])
def test_key_encoding_roundtrip(fam):
    from pqkilian.commitment import vc_gen
    ck = vc_gen(fam.security_param, 17, fam, rng=1)
    assert decode_key(encode_key(ck)) == ck
    with pytest.raises(ProtocolError):
        decode_key(encode_key(ck)[:-1])


def test_transcript_roundtrip(honest):
    raw = honest.to_bytes()
    back = Transcript.from_bytes(raw)
    assert back == honest
    assert verify_transcript(X, back) == 1
    assert transcript_size(honest) == len(raw)
    assert honest.to_json(X)["size"] == len(raw)
    with pytest.raises(ProtocolError):
        Transcript.from_bytes(raw + b"\x00")


def test_honest_run_is_deterministic():
    a = run_honest(X, W, rng=11)[1]
    b = run_honest(X, W, rng=11)[1]
    c = run_honest(X, W, rng=12)[1]
    assert a.to_bytes() == b.to_bytes() != c.to_bytes()


def test_verify_rejects_wrong_instance(honest):
    other = pcp.planted_coloring(X.num_vars, 2 * X.num_vars, 99, k=X.k)
    assert verify_transcript(other, honest) in (0, 1)
    assert verify_transcript(load_named_instance("k4_coloring"), honest) == 0


def _frame_spans(raw):
    s = io.BytesIO(raw)
    spans = []
    while s.tell() < len(raw):
        start = s.tell()
        tag, _ = read_frame(s)
        spans.append((tag, start, s.tell()))
    return spans


@settings(max_examples=150, deadline=None)
@given(st.data())
def test_bit_flip_outside_challenge_rejected(honest, data):
    raw = bytearray(honest.to_bytes())
    # a flip inside r may leave the query set unchanged, so r is excluded
    spans = [(a, b) for tag, a, b in _frame_spans(bytes(raw)) if tag != 3]
    a, b = data.draw(st.sampled_from(spans))
    pos = data.draw(st.integers(a * 8, b * 8 - 1))
    raw[pos // 8] ^= 1 << (pos % 8)
    try:
        tau = Transcript.from_bytes(bytes(raw))
    except ProtocolError:
        return
    assert verify_transcript(X, tau) == 0


def test_response_for_wrong_challenge_rejected():
    _, t1 = run_honest(X, W, rng=1)
    _, t2 = run_honest(X, W, rng=2)
    mixed = Transcript(t1.ck, t1.cm, t2.r, t1.z)
    assert verify_transcript(X, mixed) == 0
    assert verify_transcript(X, Transcript(t1.ck, t1.cm, t1.r, Response(t1.z.answers, None))) == 0


# ------------------------------------------------------------ message order

def _steps(vs, ps, rng):
    """Each step produces one message and delivers it to the other party."""
    return {
        "ck": lambda: ps.receive_key(vs.emit_key(rng.fork("ck"))),
        "cm": lambda: vs.receive_commitment(ps.emit_commitment()),
        "r": lambda: ps.receive_challenge(vs.emit_challenge(rng.fork("r"))),
        "z": lambda: vs.receive_response(ps.emit_response()),
    }


@pytest.mark.parametrize("order", list(itertools.permutations(["ck", "cm", "r", "z"])))
def test_only_the_protocol_order_completes(order):
    vs, ps = VerifierSession(X), ProverSession(X, W)
    steps = _steps(vs, ps, Drbg(3))
    failed = False
    for name in order:
        try:
            steps[name]()
        except ProtocolError:
            failed = True
            break
    if order == ("ck", "cm", "r", "z"):
        assert not failed and vs.verdict == 1 and vs.phase is Phase.DONE
        return
    assert failed
    assert Phase.POISONED in (vs.phase, ps.phase)
    # a poisoned session refuses everything afterwards
    poisoned = vs if vs.phase is Phase.POISONED else ps
    for name in ("ck", "cm", "r", "z"):
        with pytest.raises(ProtocolError):
            steps[name]()
    assert poisoned.phase is Phase.POISONED
    assert vs.verdict is None


def test_wire_handlers_reject_unexpected_tags():
    ps = ProverSession(X, W)
    with pytest.raises(ProtocolError):
        ps.handle(TAG_CM, b"")
    assert ps.phase is Phase.POISONED
    vs = VerifierSession(X)
    with pytest.raises(ProtocolError):
        vs.handle(TAG_CK, b"")
    assert vs.phase is Phase.POISONED


def test_prover_rejects_key_of_wrong_length():
    from pqkilian.commitment import vc_gen
    ps = ProverSession(X, W)
    with pytest.raises(ProtocolError):
        ps.receive_key(vc_gen(128, X.num_vars + 1, rng=0))
    assert ps.phase is Phase.POISONED


# ------------------------------------------------------------------ TCP

@pytest.mark.parametrize("fam", [Blake2Family(128), XorRotateFamily(64)])
def test_tcp_loopback(fam):
    with socket.create_server(("127.0.0.1", 0)) as srv:
        port = srv.getsockname()[1]
        errors = []

        def prover():
            conn, _ = srv.accept()
            with conn:
                try:
                    serve_prover(X, W, conn)
                except Exception as e:  # surfaced below
                    errors.append(e)

        th = threading.Thread(target=prover)
        th.start()
        with socket.create_connection(("127.0.0.1", port), timeout=10) as sock:
            verdict, tau = run_verifier(X, sock, Drbg(21), fam.security_param, fam)
        th.join(10)
    assert not errors
    assert verdict == 1
    local = run_honest(X, W, Drbg(21), fam.security_param, fam)[1]
    assert tau.to_bytes() == local.to_bytes()
