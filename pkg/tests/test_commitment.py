import hashlib

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pqkilian.commitment import (INNER, LEAF, Blake2Family, Commitment, OpeningProof,
                                 XorRotateFamily, required_nodes, tree_height, vc_commit, vc_gen,
                                 vc_open, vc_verify)
from pqkilian.errors import InvalidParameter, InvalidQuery, LengthMismatch


def naive_root(key: bytes, symbols, lam: int) -> bytes:
    """Independent recursive root over the zero-padded leaf list."""
    nb, out = lam // 2, lam // 4

    def h(domain, data):
        return hashlib.blake2b(bytes([domain]) + data, key=key, digest_size=out).digest()

    size = 1
    while size < len(symbols):
        size *= 2
    leaves = [h(LEAF, s.to_bytes(nb, "big")) for s in symbols]
    leaves += [h(LEAF, bytes(nb))] * (size - len(symbols))

    def node(lo, hi):
        if hi - lo == 1:
            return leaves[lo]
        mid = (lo + hi) // 2
        return h(INNER, node(lo, mid) + node(mid, hi))

    return node(0, size)


@st.composite
def message_and_query(draw, max_len=40):
    n = draw(st.integers(1, max_len))
    msg = draw(st.lists(st.integers(0, 2**32 - 1), min_size=n, max_size=n))
    q = draw(st.sets(st.integers(0, n - 1), min_size=1, max_size=n))
    return msg, sorted(q)


@settings(max_examples=60, deadline=None)
@given(message_and_query(), st.integers(0, 2**16))
def test_root_matches_naive_tree(mq, seed):
    msg, _ = mq
    ck = vc_gen(32, len(msg), rng=seed)
    cm, _ = vc_commit(ck, msg)
    assert cm.root == naive_root(ck.hash_key, msg, 32)


@settings(max_examples=80, deadline=None)
@given(message_and_query(), st.integers(0, 2**16))
def test_completeness(mq, seed):
    msg, q = mq
    ck = vc_gen(32, len(msg), rng=seed)
    cm, aux = vc_commit(ck, msg)
    pf = vc_open(ck, aux, q)
    assert vc_verify(ck, cm, q, [msg[i] for i in q], pf) == 1
    assert vc_verify(ck, cm, q, [msg[i] for i in q], pf.to_bytes()) == 1


@settings(max_examples=40, deadline=None)
@given(message_and_query(max_len=24), st.integers(0, 2**16), st.data())
def test_single_bit_tamper_rejected(mq, seed, data):
    msg, q = mq
    ck = vc_gen(32, len(msg), rng=seed)
    cm, aux = vc_commit(ck, msg)
    pf = vc_open(ck, aux, q)
    vals = [msg[i] for i in q]

    j = data.draw(st.integers(0, len(vals) - 1))
    bit = data.draw(st.integers(0, 31))
    bad = list(vals)
    bad[j] ^= 1 << bit
    assert vc_verify(ck, cm, q, bad, pf) == 0

    raw = bytearray(pf.to_bytes())
    pos = data.draw(st.integers(0, len(raw) * 8 - 1))
    raw[pos // 8] ^= 1 << (pos % 8)
    assert vc_verify(ck, cm, q, vals, bytes(raw)) == 0

    root = bytearray(cm.root)
    pos = data.draw(st.integers(0, len(root) * 8 - 1))
    root[pos // 8] ^= 1 << (pos % 8)
    assert vc_verify(ck, Commitment(bytes(root)), q, vals, pf) == 0


def test_length_one_has_empty_proof():
    ck = vc_gen(32, 1, rng=3)
    cm, aux = vc_commit(ck, [7])
    pf = vc_open(ck, aux, [0])
    assert pf.nodes == ()
    assert cm.root == naive_root(ck.hash_key, [7], 32)
    assert vc_verify(ck, cm, [0], [7], pf) == 1
    assert vc_verify(ck, cm, [0], [8], pf) == 0


def test_proof_omits_padding_and_is_no_larger_than_paths():
    for length in (5, 6, 7, 9, 33, 100):
        for q in ([0], [length - 1], list(range(0, length, 3))):
            need = required_nodes(length, q)
            assert len(need) <= len(q) * tree_height(length)
            for level, pos in need:
                assert pos * (1 << level) < length


def test_single_path_has_height_nodes_for_powers_of_two():
    assert len(required_nodes(16, [5])) == 4
    assert required_nodes(16, list(range(16))) == []


def test_wrong_length_and_bad_query():
    ck = vc_gen(32, 4, rng=0)
    with pytest.raises(LengthMismatch):
        vc_commit(ck, [1, 2, 3])
    _, aux = vc_commit(ck, [1, 2, 3, 4])
    with pytest.raises(InvalidQuery):
        vc_open(ck, aux, [4])
    with pytest.raises(InvalidQuery):
        vc_open(ck, aux, [])
    with pytest.raises(InvalidParameter):
        vc_gen(32, 0)
    with pytest.raises(InvalidParameter):
        vc_commit(ck, [1, 2, 3, 2**128])


def test_wrong_index_list_rejected():
    ck = vc_gen(32, 8, rng=1)
    msg = list(range(8))
    cm, aux = vc_commit(ck, msg)
    pf = vc_open(ck, aux, [2, 5])
    assert vc_verify(ck, cm, [2, 6], [2, 6], pf) == 0
    assert vc_verify(ck, cm, [5, 2], [5, 2], pf) == 0
    assert vc_verify(ck, cm, [2, 5], [2, 5], OpeningProof(8, (2, 5), pf.nodes[:-1])) == 0


def test_keys_are_deterministic_and_sized():
    a, b = vc_gen(128, 10, rng=42), vc_gen(128, 10, rng=42)
    assert a == b and len(a.hash_key) == 64
    assert Blake2Family(128).output_bytes == 32


def test_xor_rotate_is_bijective_in_high_half():
    fam = XorRotateFamily(16)
    key, lo = 0xBEEF, 0x3C
    outs = {fam.word(key, (hi << 8) | lo) for hi in range(256)}
    assert len(outs) == 256


@settings(max_examples=100)
@given(st.integers(0, 2**32 - 1), st.integers(0, 2**32 - 1), st.integers(0, 2**16 - 1),
       st.sampled_from([16, 32, 48, 64]))
def test_xor_rotate_collision(key, x, hi2, n):
    fam = XorRotateFamily(n)
    mask = (1 << n) - 1
    key, x = key & mask, x & mask
    x2 = fam.collision(key, x, hi2)
    assert fam.word(key, x2) == fam.word(key, x)
    assert x2 >> fam.width == hi2 & ((1 << fam.width) - 1)


def test_xor_rotate_rejects_bad_width():
    with pytest.raises(InvalidParameter):
        XorRotateFamily(12)
