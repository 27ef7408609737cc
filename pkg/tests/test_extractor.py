import math

import pytest

from pqkilian import pcp
from pqkilian.errors import InvalidParameter
from pqkilian.experiments.scenarios import load_named_instance
from pqkilian.extractor import (ExtractionBudget, assemble_pcp, extract_witness, make_oracle,
                                summarize)
from pqkilian.protocol import Transcript, VerifierSession, verify_transcript
from pqkilian.rng import Drbg

P6 = load_named_instance("planted6_coloring")
K4 = load_named_instance("k4_coloring")


def test_budget_for_planted6():
    b = ExtractionBudget.for_instance(P6, 0.3)
    c = 6 * math.log(6)
    assert (b.n, b.k_target) == (math.ceil(60 * c / 0.3), math.ceil(6 * c)) == (2151, 65)
    with pytest.raises(InvalidParameter):
        ExtractionBudget.for_instance(P6, 0)


def test_assemble_pcp():
    assert assemble_pcp(4, [((0, 2), (1, 2)), ((2, 3), (2, 0))]) == (1, 0, 2, 0)
    assert assemble_pcp(4, [((0, 2), (1, 2)), ((2,), (1,))]) is None


@pytest.mark.parametrize("seed", range(3))
def test_honest_prover_yields_witness(seed):
    res = extract_witness(make_oracle("honest", P6), P6, 0.3, Drbg(seed))
    assert res.witness is not None and pcp.violated(P6, res.witness) == 0
    assert res.k >= 65


def test_throttled_prover_usually_extracts():
    res = [extract_witness(make_oracle("throttled:0.3", P6, s), P6, 0.3, Drbg(s)) for s in range(6)]
    assert all(r.witness is None or pcp.violated(P6, r.witness) == 0 for r in res)
    assert summarize(res)["success_rate"] >= 0.3 / 8


@pytest.mark.parametrize("adv", ["garbage", "best-effort"])
def test_unsatisfiable_instance_gives_no_witness(adv):
    for s in range(3):
        res = extract_witness(make_oracle(adv, K4, s), K4, 0.3, Drbg(s))
        assert res.witness is None and res.reason is not None


def test_oracle_answers_verify_when_honest():
    oracle = make_oracle("honest", P6)
    vs = VerifierSession(P6)
    ck = vs.emit_key(Drbg(0))
    cm, state = oracle.first_round(ck)
    r = pcp.random_challenge(P6, Drbg(1))
    assert verify_transcript(P6, Transcript(ck, cm, r, oracle.respond(state, r))) == 1


def test_unknown_adversary():
    with pytest.raises(InvalidParameter):
        make_oracle("nope", P6)
    with pytest.raises(InvalidParameter):
        make_oracle("honest", K4)


def test_summary_histogram():
    res = [extract_witness(make_oracle("garbage", K4, s), K4, 0.5, Drbg(s)) for s in range(2)]
    s = summarize(res)
    assert s["runs"] == 2 and s["success_rate"] == 0
    assert sum(s["abort_histogram"].values()) == 2
