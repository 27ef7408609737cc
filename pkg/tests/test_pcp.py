import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pqkilian import pcp
from pqkilian.errors import InvalidRandomness, NotAWitness
from pqkilian.experiments.scenarios import load_named_instance


def k4(**kw):
    return pcp.with_params(load_named_instance("k4_coloring"), **kw)


def brute_win_rate(x, pi):
    rc = x.params.randomness_bits
    ok = 0
    for r in range(1 << rc):
        q = pcp.pcp_queries(x, r)
        ok += pcp.pcp_decide(x, r, {i: pi[i] for i in q})
    return Fraction(ok, 1 << rc)


@pytest.mark.parametrize("k", [1, 2])
def test_win_rate_matches_enumeration(k):
    x = k4(k=k, bias_bits=0)
    assert x.params.block_bits == 8
    for pi in [(0, 1, 2, 0), (0, 0, 0, 0), (0, 1, 2, 1), (2, 1, 0, 1)]:
        assert pcp.pcp_win_rate(x, pi) == brute_win_rate(x, pi)


def test_block_bits_rounding():
    x = k4()
    # m = 6 constraints: 3 index bits plus 32 bias bits, rounded to 40
    assert x.params.block_bits == 40
    assert x.params.randomness_bits == 40 * x.k
    assert pcp.block_weights(k4(bias_bits=0)) == [43, 43, 43, 43, 42, 42]


def test_gap_and_default_k():
    x = load_named_instance("k4_coloring")
    assert pcp.exhaustive_gap(x) == Fraction(1, 6)
    assert pcp.default_k(Fraction(1, 6)) == 39 == x.k
    assert pcp.default_k(Fraction(1, 10)) == 66
    assert pcp.default_k(Fraction(1)) == 1
    assert (1 - 1 / 6) ** 39 <= 2 ** -10 < (1 - 1 / 6) ** 38


def test_soundness_error_bounds_every_assignment():
    x = k4(k=3)
    bound = x.params.soundness_error
    slack = Fraction(6, 2 ** x.params.block_bits) * x.k  # block bias
    for pi in itertools.product(range(3), repeat=4):
        assert pcp.pcp_win_rate(x, pi) <= bound + slack


def test_prove_and_extract_roundtrip():
    x = load_named_instance("planted6_coloring")
    pi = pcp.pcp_prove(x, x.planted)
    assert pcp.pcp_extract(x, pi) == tuple(x.planted)
    assert pcp.pcp_win_rate(x, pi) == 1
    with pytest.raises(NotAWitness):
        pcp.pcp_prove(load_named_instance("k4_coloring"), (0, 1, 2, 0))
    assert pcp.pcp_extract(x, None) is None
    assert pcp.pcp_extract(x, (0,) * x.num_vars) is None


@settings(max_examples=50, deadline=None)
@given(st.binary(min_size=20, max_size=20))
def test_honest_answers_always_accepted(r):
    x = load_named_instance("planted8_nae")
    r = r[: x.params.randomness_bits // 8]
    r = r + bytes(x.params.randomness_bits // 8 - len(r))
    q = pcp.pcp_queries(x, r)
    assert pcp.pcp_decide(x, r, {i: x.planted[i] for i in q}) == 1
    assert len(q) <= x.params.query_count


def test_bad_randomness():
    x = k4()
    with pytest.raises(InvalidRandomness):
        pcp.pcp_queries(x, b"\x00")
    assert pcp.pcp_decide(x, b"\x00", {}) == 0
    r = bytes(x.params.randomness_bits // 8)
    q = pcp.pcp_queries(x, r)
    assert pcp.pcp_decide(x, r, {i: 0 for i in q[:-1]}) == 0


def test_json_roundtrip(tmp_path):
    x = load_named_instance("wheel5_coloring")
    pcp.save_instance(x, tmp_path / "w.json")
    assert pcp.load_instance(tmp_path / "w.json") == x
    assert x.k == 66 and x.gap == Fraction(1, 10)


def test_planted_generators_are_satisfiable():
    a = pcp.planted_coloring(30, 60, 5)
    b = pcp.planted_nae(12, 20, 5)
    assert pcp.violated(a, a.planted) == 0
    assert pcp.violated(b, b.planted) == 0
    assert pcp.planted_coloring(30, 60, 5) == a
