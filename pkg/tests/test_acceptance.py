"""Acceptance criteria 1-10 at full scale.

Each test prints one ``CRITERION n: PASS|FAIL`` line (visible under ``-s``
and in ``-v`` output through the terminal summary) and then asserts.
Scenario-backed criteria go through the same runner as ``pqkilian run``.
Run alone with ``pytest tests/test_acceptance.py -v -s``; the whole file
takes about six minutes on one core.
"""
import time

import numpy as np
import pytest

from pqkilian.commitment import Commitment, vc_commit, vc_gen, vc_open, vc_verify
from pqkilian.experiments import make_config, recheck, run

RESULTS: dict[int, bool] = {}


def report(capsys, n: int, ok: bool, detail: str) -> None:
    RESULTS[n] = ok
    with capsys.disabled():
        print(f"\nCRITERION {n}: {'PASS' if ok else 'FAIL'}  {detail}")


def scenario(name: str) -> dict:
    rep = run(make_config(name))
    assert recheck(rep) == rep["checks"]
    return rep


def failing(rep: dict) -> list[str]:
    return [c["name"] for c in rep["checks"] if not c["passed"]]


def summary(rep: dict) -> str:
    bad = failing(rep)
    return f"{rep['scenario']} {rep['wall_clock_s']:.1f}s" + (f" failing={bad}" if bad else "")


def flip(b: bytes, pos: int) -> bytes:
    out = bytearray(b)
    out[pos // 8] ^= 1 << (pos % 8)
    return bytes(out)


def test_criterion_01_merkle(capsys):
    g = np.random.default_rng(1)
    complete = tampered_ok = 0
    trials = 1000
    t0 = time.perf_counter()
    for i in range(trials):
        m = int(g.integers(1, 129))
        ck = vc_gen(128, m, rng=i)
        msg = [int.from_bytes(g.bytes(32), "big") for _ in range(m)]
        q = sorted(set(g.integers(0, m, size=int(g.integers(1, min(m, 8) + 1))).tolist()))
        cm, aux = vc_commit(ck, msg)
        pf = vc_open(ck, aux, q)
        vals = [msg[j] for j in q]
        complete += vc_verify(ck, cm, q, vals, pf) == 1

        bad = list(vals)
        j = int(g.integers(len(bad)))
        bad[j] ^= 1 << int(g.integers(256))
        raw = pf.to_bytes()
        rejects = [
            vc_verify(ck, cm, q, bad, pf) == 0,
            vc_verify(ck, cm, q, vals, flip(raw, int(g.integers(len(raw) * 8)))) == 0,
            vc_verify(ck, Commitment(flip(cm.root, int(g.integers(len(cm.root) * 8)))),
                      q, vals, pf) == 0,
        ]
        tampered_ok += all(rejects)
    elapsed = time.perf_counter() - t0
    ok = complete == trials and tampered_ok == trials and elapsed < 5
    report(capsys, 1, ok, f"complete {complete}/{trials}, tamper rejected {tampered_ok}/{trials}, "
                          f"{elapsed:.2f}s")
    assert ok


def test_criterion_02_jordan(capsys):
    rep = scenario("jordan")
    ok = rep["passed"] and len(rep["raw"]) == 100 and "phase" in rep["aggregate"]["worst"]
    report(capsys, 2, ok, summary(rep) + f" worst={rep['aggregate']['worst']}")
    assert ok


def test_criterion_03_alternating(capsys):
    rep = scenario("alternating")
    trials = [s["trials"] for s in rep["aggregate"]["states"]]
    ok = rep["passed"] and trials == [1000] * 5 and rep["wall_clock_s"] < 120
    report(capsys, 3, ok, summary(rep) + " p=" +
           ",".join(f"{s['p_value']:.3f}" for s in rep["aggregate"]["states"]))
    assert ok


def test_criterion_04_valest(capsys):
    rep = scenario("valest")
    ok = rep["passed"] and len(rep["raw"]) == 1000
    report(capsys, 4, ok, summary(rep))
    assert ok


def test_criterion_05_repair(capsys):
    rep = scenario("repair")
    ok = rep["passed"] and len(rep["raw"]) == 200 and rep["wall_clock_s"] < 600
    report(capsys, 5, ok, summary(rep))
    assert ok


def test_criterion_06_rank_one(capsys):
    rep = scenario("rank_one")
    agg = rep["aggregate"]
    ok = rep["passed"] and len(rep["raw"]) == 200 and rep["wall_clock_s"] < 900
    report(capsys, 6, ok, summary(rep) + f" naive={agg['naive_wins']['mean']:.3f} "
                                         f"repaired={agg['repaired_wins']['mean']:.3f}")
    assert ok


def test_criterion_07_fork(capsys):
    rep = scenario("fork")
    ok = rep["passed"]
    report(capsys, 7, ok, summary(rep))
    assert ok


def test_criterion_08_collapse(capsys):
    rep = scenario("collapse")
    trials = sum(r["trials"] for r in rep["raw"])
    ok = rep["passed"] and trials == 10_000
    report(capsys, 8, ok, summary(rep) + f" trials={trials}")
    assert ok


def kilian_report():
    if not hasattr(kilian_report, "cache"):
        kilian_report.cache = scenario("kilian_e2e")
    return kilian_report.cache


KILIAN_9 = {"honest transcripts accept", "witness recovery rate",
            "false witnesses on unsatisfiable instance",
            "pcp_win_rate(pi) >= k/(2n) for every assembled pi"}


def test_criterion_09_extractor(capsys):
    rep = kilian_report()
    checks = {c["name"]: c for c in rep["checks"]}
    ok = len(rep["raw"]) == 500 and all(checks[n]["passed"] for n in KILIAN_9)
    rate = checks["witness recovery rate"]["value"]
    report(capsys, 9, ok, f"kilian_e2e {rep['wall_clock_s']:.1f}s recovery={rate:.3f} "
                          f"honest_runs={rep['aggregate']['honest_runs']}")
    assert ok


def test_criterion_10_succinctness(capsys):
    rep = kilian_report()
    checks = {c["name"]: c for c in rep["checks"]}
    fit = rep["aggregate"]["succinctness"]
    ok = checks["succinctness fit R^2"]["passed"] and \
        checks["bytes / full pi at the largest length"]["passed"]
    report(capsys, 10, ok, f"R2={fit['r2']:.4f} ratio@4096={fit['curve']['4096']['ratio']:.4f}")
    assert ok


@pytest.fixture(scope="module", autouse=True)
def print_table(request):
    yield
    tr = request.config.pluginmanager.get_plugin("terminalreporter")
    if tr is not None and RESULTS:
        tr.write_line("")
        for n in sorted(RESULTS):
            tr.write_line(f"CRITERION {n}: {'PASS' if RESULTS[n] else 'FAIL'}")
