"""Desk-scale scenarios.

Every scenario is a pair of pure functions: ``run(params, seed)`` returns a
JSON-safe record that depends only on its arguments, and
``aggregate(params, records)`` recomputes the summary and the checks from
those records alone.
"""
from __future__ import annotations

import json
import math
import zlib
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Callable

import numpy as np

from .. import pcp
from ..commitment import Blake2Family, XorRotateFamily
from ..errors import NotACollision
from ..extractor import extract_witness, make_oracle
from ..protocol import run_honest
from ..quantum.alternating import (alternating_outcomes, chi2_against, count_repeats,
                                   mixture_repeat_pmf)
from ..quantum.core import StructuredProjector, random_projector, random_state
from ..quantum.jordan import jordan_decompose
from ..rewinding import (FixedAnswerStrategy, Game, GameModel, ToyProver, ValEst, ValEstParams,
                         RankOneStrategy, fork, naive_bound, naive_play, repair_experiment,
                         repair_projective, repeated_play, special_sound_extract,
                         win_measurement)
from ..rewinding.play import DEFAULT_C
from ..rewinding.sigma import SigmaStatement, interpolate, keygen, respond
from ..rng import Drbg
from .stats import (Check, always, at_least, at_most, close_to, describe, frequency_at_most,
                    frequency_close_to, within)


@dataclass(frozen=True)
class Scenario:
    name: str
    summary: str
    defaults: dict
    seeds: str
    run: Callable[[dict, int], dict]
    aggregate: Callable[[dict, list], tuple[dict, list[Check]]]
    schema: dict = field(default_factory=dict)


REGISTRY: dict[str, Scenario] = {}


def scenario(name: str, summary: str, seeds: str, **defaults):
    def wrap(pair):
        run, agg = pair
        REGISTRY[name] = Scenario(name, summary, defaults, seeds, run, agg,
                                  {k: type(v) for k, v in defaults.items()})
        return pair
    return wrap


def generator(name: str, seed: int, *tags: int) -> np.random.Generator:
    """Independent stream per (scenario, seed, tag)."""
    return np.random.default_rng([zlib.crc32(name.encode()), seed, *tags])


def column(records: list, key: str) -> list:
    return [r[key] for r in records]


# ------------------------------------------------------------------ models

@lru_cache(maxsize=32)
def rank_one_model(questions: int, eps: float) -> GameModel:
    return GameModel(RankOneStrategy(questions, eps))


@lru_cache(maxsize=4)
def always_win_model(questions: int) -> GameModel:
    game = Game(questions, 2, lambda r, z: z == 1)
    return GameModel(FixedAnswerStrategy(game, 1))


def load_named_instance(name: str) -> pcp.CSPInstance:
    """A bundled instance by stem (``k4_coloring``) or a path to a JSON file."""
    p = Path(name)
    if p.suffix == ".json" and p.exists():
        return pcp.load_instance(p)
    res = resources.files("pqkilian") / "data" / f"{name}.json"
    return pcp.from_json(json.loads(res.read_text()))


_instance = lru_cache(maxsize=16)(load_named_instance)


@lru_cache(maxsize=8)
def succinct_instance(length: int, k: int) -> pcp.CSPInstance:
    return pcp.planted_coloring(length, 2 * length, np.random.default_rng(length), k=k)


# ------------------------------------------------------------------ rank_one

def _rank_one_run(p: dict, seed: int) -> dict:
    model = rank_one_model(p["questions"], p["eps"])
    psi = model.strategy.initial_state()
    rep = repeated_play(model, psi, p["n"], p["eta0"], rng=generator("rank_one", seed, 0),
                        c=p["c"], valest_method=p["valest_method"])
    naive = naive_play(model, psi, p["n"], rng=generator("rank_one", seed, 1))
    small = rank_one_model(p["naive_questions"], p["naive_eps"])
    naive_small = naive_play(small, small.strategy.initial_state(), p["naive_rounds"],
                             rng=generator("rank_one", seed, 2))
    full = rank_one_model(p["questions"], 1.0)
    trivial = naive_play(full, full.strategy.initial_state(), p["questions"],
                         rng=generator("rank_one", seed, 3))
    est = rep.estimates
    eps = p["eta0"] / (2 * p["n"] + 2)
    drops = [int(b < a - 2 * eps) for a, b in zip(est, est[1:])]
    return {
        "repaired_wins": rep.wins,
        "repaired_bits": rep.bits,
        "estimates": est,
        "repair_counts": rep.repair_counts,
        "estimate_drops": drops,
        "naive_wins": naive.wins,
        "naive_small_wins": naive_small.wins,
        "trivial_wins": trivial.wins,
    }


def _rank_one_aggregate(p: dict, records: list):
    val = rank_one_model(p["questions"], p["eps"]).exact_value(
        rank_one_model(p["questions"], p["eps"]).strategy.initial_state())
    n, eta0 = p["n"], p["eta0"]
    delta = eta0 ** 2 / (p["c"] * n ** 2)
    T = math.ceil(1 / math.sqrt(delta))
    drops = [d for r in records for d in r["estimate_drops"]]
    checks = [
        at_most("naive wins (eps, |R|)", column(records, "naive_wins"), naive_bound(p["eps"]), "bound"),
        at_most("naive wins (naive_eps, naive_questions)", column(records, "naive_small_wins"),
                naive_bound(p["naive_eps"]), "bound"),
        at_least("repaired wins", column(records, "repaired_wins"), n * (val - eta0), "derived"),
        always("eps = 1 wins every round",
               [r["trivial_wins"] == p["questions"] for r in records], "sanity"),
        frequency_at_most("consecutive estimate drop > 2 eps", drops,
                          2 * (delta + 1 / T) + 4 * math.sqrt(delta), "bound"),
    ]
    agg = {
        "exact_value": val,
        "repaired_wins": describe(column(records, "repaired_wins")),
        "naive_wins": describe(column(records, "naive_wins")),
        "naive_small_wins": describe(column(records, "naive_small_wins")),
        "repair_count": describe([c for r in records for c in r["repair_counts"]]),
        "naive_bound": naive_bound(p["eps"]),
        "naive_small_bound": naive_bound(p["naive_eps"]),
        "repaired_bound": n * (val - eta0),
    }
    return agg, checks


scenario("rank_one", "Rank-one family: naive repetition vs repaired repetition", "0..199",
         questions=16, eps=0.5, n=8, eta0=0.25, c=float(DEFAULT_C), valest_method="spectral",
         naive_questions=64, naive_eps=0.1, naive_rounds=64)((_rank_one_run, _rank_one_aggregate))


# ------------------------------------------------------------------ collapse

def collision_pair(input_bits: int, rng: np.random.Generator) -> tuple[int, int, int]:
    fam = XorRotateFamily(input_bits)
    key = int(rng.integers(1 << input_bits))
    x = int(rng.integers(1 << input_bits))
    hi = x >> fam.width
    hi2 = (hi + 1 + int(rng.integers((1 << fam.width) - 1))) % (1 << fam.width)
    return key, x, fam.collision(key, x, hi2)


def collapse_state(input_bits: int, key: int, x: int, x2: int) -> np.ndarray:
    fam = XorRotateFamily(input_bits)
    if x == x2 or fam.word(key, x) != fam.word(key, x2):
        raise NotACollision(f"({x}, {x2}) is not a collision under key {key}")
    psi = np.zeros(1 << input_bits, dtype=complex)
    psi[[x, x2]] = 1 / math.sqrt(2)
    return psi


def collapse_trial(psi: np.ndarray, target: StructuredProjector, measured: bool,
                   g: np.random.Generator) -> int:
    v = psi
    if measured:
        probs = np.abs(v) ** 2
        i = int(g.choice(len(v), p=probs / probs.sum()))
        v = np.zeros_like(psi)
        v[i] = 1
    pv = target.apply(v)
    return int(g.random() < float(np.vdot(pv, pv).real))


def _collapse_run(p: dict, seed: int) -> dict:
    g = generator("collapse", seed)
    key, x, x2 = collision_pair(p["input_bits"], g)
    psi = collapse_state(p["input_bits"], key, x, x2)
    target = StructuredProjector.onto([psi])
    ones0 = sum(collapse_trial(psi, target, False, g) for _ in range(p["trials"]))
    ones1 = sum(collapse_trial(psi, target, True, g) for _ in range(p["trials"]))
    try:
        collapse_state(p["input_bits"], key, x, x)
        degenerate_rejected = False
    except NotACollision:
        degenerate_rejected = True
    return {"key": key, "x": x, "x2": x2, "trials": p["trials"], "ones_unmeasured": ones0,
            "ones_measured": ones1, "degenerate_rejected": degenerate_rejected}


def _collapse_aggregate(p: dict, records: list):
    n = sum(column(records, "trials"))
    p0 = sum(column(records, "ones_unmeasured")) / n
    p1 = sum(column(records, "ones_measured")) / n
    checks = [
        Check("Pr[1 | unmeasured] = 1", p0, 1.0, 0.0, "==", p0 == 1.0, "bound"),
        within("Pr[1 | measured] in [0.48, 0.52]", p1, 0.48, 0.52, "bound"),
        always("x = x' rejected", column(records, "degenerate_rejected"), "sanity"),
    ]
    return {"trials": n, "pr_unmeasured": p0, "pr_measured": p1,
            "se_measured": math.sqrt(0.25 / n)}, checks


scenario("collapse", "Collapsing experiment on a toy hash with a known collision", "0..9",
         input_bits=16, trials=1000)((_collapse_run, _collapse_aggregate))


# ------------------------------------------------------------------ valest

def _valest_run(p: dict, seed: int) -> dict:
    g = generator("valest", seed)
    model = rank_one_model(p["questions"], p["game_eps"])
    params = ValEstParams(p["eps"], p["delta"])
    M = ValEst(model, params, p["method"])
    psi = model.strategy.initial_state()
    first = M.measure(psi, g)
    second = M.measure(first.state, g)
    aw = always_win_model(p["questions"])
    Maw = ValEst(aw, params, p["method"])
    out = Maw.measure(aw.strategy.initial_state(), g)
    return {
        "estimate": first.estimate,
        "estimate_again": second.estimate,
        "value_after": model.exact_value(first.state),
        "on_grid": abs((first.estimate + 0.5) * params.t - first.repeats) < 1e-6,
        "always_win_estimate": out.estimate,
        "always_win_value_after": aw.exact_value(out.state),
    }


def _valest_aggregate(p: dict, records: list):
    model = rank_one_model(p["questions"], p["game_eps"])
    val = model.exact_value(model.strategy.initial_state())
    disagree = [abs(r["estimate"] - r["estimate_again"]) > p["eps"] for r in records]
    checks = [
        close_to("E[estimate] = exact value", column(records, "estimate"), val, "bound"),
        frequency_at_most("sequential disagreement > eps", disagree, p["delta"], "bound"),
        frequency_at_most("sequential disagreement > 2 eps",
                          [abs(r["estimate"] - r["estimate_again"]) > 2 * p["eps"] for r in records],
                          p["delta"], "derived"),
        at_least("value after >= value before - delta", column(records, "value_after"),
                 val - p["delta"], "bound"),
        always("estimate on the 1/t grid", column(records, "on_grid"), "sanity"),
        close_to("always-win E[estimate] = 1", column(records, "always_win_estimate"), 1.0,
                 "sanity"),
        always("always-win value stays 1",
               [abs(v - 1) < 1e-9 for v in column(records, "always_win_value_after")], "sanity"),
    ]
    agg = {
        "exact_value": val,
        "t": ValEstParams(p["eps"], p["delta"]).t,
        "estimate": describe(column(records, "estimate")),
        "value_after": describe(column(records, "value_after")),
        "disagreement_rate": float(np.mean(disagree)),
        "always_win_estimate": describe(column(records, "always_win_estimate")),
    }
    return agg, checks


scenario("valest", "Value-estimation checks against the exact value oracle", "0..999",
         questions=16, game_eps=0.5, eps=0.1, delta=0.05,
         method="direct")((_valest_run, _valest_aggregate))


# ------------------------------------------------------------------ repair

def qubit_failure(p: float, T: int) -> float:
    """Exact chance that B, A, (B, A)^(T-1) never returns A -> 1 from |0>."""
    q = 2 * p * (1 - p)
    return q * (1 - q) ** (T - 1)


def stress_overlap(T: int) -> float:
    """The p with 2p(1-p) = 1/T, where the failure probability peaks."""
    return (1 - math.sqrt(1 - 2 / T)) / 2


def qubit_repair(T: int, g: np.random.Generator) -> tuple[int, bool]:
    p = stress_overlap(T)
    psi = np.array([1, 0], dtype=complex)
    phi = np.array([math.sqrt(p), math.sqrt(1 - p)], dtype=complex)
    A = StructuredProjector.onto([psi])
    B = StructuredProjector.onto([phi])
    b = int(g.random() < p)
    v = phi if b else np.array([math.sqrt(1 - p), -math.sqrt(p)], dtype=complex)
    Bk = B if b else B.complement()
    _, count, ok = repair_projective(A, Bk, T - 1, v, g)
    return count + 1, ok


def _repair_run(p: dict, seed: int) -> dict:
    g = generator("repair", seed)
    model = rank_one_model(p["questions"], p["game_eps"])
    M = ValEst(model, ValEstParams(p["eps"], p["delta"]), "spectral")
    r = int(g.integers(p["questions"]))
    rec = repair_experiment(M, win_measurement(model, r), p["T"],
                            model.strategy.initial_state(), g, question=r)
    qubit = {}
    for T in p["qubit_T"]:
        runs = [qubit_repair(T, g) for _ in range(p["qubit_trials"])]
        qubit[str(T)] = [sum(c for c, _ in runs), sum(not ok for _, ok in runs)]
    psi = np.array([1, 0], dtype=complex)
    A = StructuredProjector.onto([psi])
    _, count0, _ = repair_projective(A, A, p["T"], psi, g)
    return {
        "question": r, "p": rec.p, "p_after": rec.p_after, "k": rec.k, "count": rec.count,
        "repaired": rec.repaired, "qubit": qubit,
        "unperturbed_count": count0,
    }


def _repair_aggregate(p: dict, records: list):
    N, T, delta, eps = 2, p["T"], p["delta"], p["eps"]
    drift = [abs(r["p_after"] - r["p"]) > 2 * eps for r in records]
    checks = [
        frequency_at_most("Pr[|p' - p| > 2 eps]", drift,
                          N * (delta + 1 / T) + 4 * math.sqrt(delta), "bound"),
        at_most("E[measurement count]", column(records, "count"),
                N + 4 * T * math.sqrt(delta) + 1, "bound"),
        always("unperturbed state repairs in one measurement",
               [r["unperturbed_count"] == 1 for r in records], "sanity"),
    ]
    qubit = {}
    for Tq in p["qubit_T"]:
        failed = sum(r["qubit"][str(Tq)][1] for r in records)
        total = p["qubit_trials"] * len(records)
        fails = [1] * failed + [0] * (total - failed)
        exact = qubit_failure(stress_overlap(Tq), Tq)
        checks.append(frequency_at_most(f"qubit failure, T = {Tq}", fails, 1 / Tq, "bound"))
        checks.append(frequency_close_to(f"qubit failure matches exact law, T = {Tq}", fails, exact))
        qubit[str(Tq)] = {"failure_rate": float(np.mean(fails)), "exact": exact,
                          "overlap": stress_overlap(Tq)}
    agg = {"drift_rate": float(np.mean(drift)), "count": describe(column(records, "count")),
           "repaired_rate": float(np.mean(column(records, "repaired"))),
           "drift_bound": N * (delta + 1 / T) + 4 * math.sqrt(delta),
           "count_bound": N + 4 * T * math.sqrt(delta) + 1, "qubit": qubit}
    return agg, checks


scenario("repair", "Repair experiment on a two-outcome disturbance", "0..199",
         questions=16, game_eps=0.5, eps=0.1, delta=0.001, T=16,
         qubit_T=[4, 16, 64], qubit_trials=25)((_repair_run, _repair_aggregate))


# ------------------------------------------------------------------ fork

def _fork_run(p: dict, seed: int) -> dict:
    g = generator("fork", seed)
    x, w = keygen(g)
    st = SigmaStatement(x, p["k"], p["questions"])
    prover = ToyProver(st, w, "rank_one", p["eps"], rng=g)
    model = prover.model()
    psi = model.strategy.initial_state()
    eta = model.exact_value(psi)
    rs = [int(r) for r in g.integers(p["questions"], size=p["n"])]
    try:
        W = fork(model, rs, psi, p["eta0"], g, p["c"])
        structural = True
    except AssertionError:
        W, structural = [], False
    honest = ToyProver(st, w, "honest", rng=g).model()
    Wh = fork(honest, rs, honest.strategy.initial_state(), p["eta0"], g, p["c"])
    W1 = fork(model, rs[:1], psi, p["eta0"], g, p["c"])
    return {"eta": eta, "questions": rs, "W": [list(t) for t in W], "size": len(W),
            "structural": structural, "honest_size": len(Wh), "distinct": len(set(rs)),
            "single": len(W1)}


def _fork_aggregate(p: dict, records: list):
    n, R = p["n"], p["questions"]
    eta = float(np.mean(column(records, "eta")))
    checks = [
        at_least("E|W|", column(records, "size"), n * (eta - p["eta0"]) - n * n / R, "bound"),
        always("structural properties", column(records, "structural"), "bound"),
        always("honest prover keeps every distinct question",
               [r["honest_size"] == r["distinct"] for r in records], "sanity"),
        at_least("n = 1: Pr[|W| = 1]", column(records, "single"),
                 eta - p["eta0"] - 1 / R, "derived"),
    ]
    agg = {"eta": eta, "size": describe(column(records, "size")),
           "bound": n * (eta - p["eta0"]) - n * n / R,
           "honest_size": describe(column(records, "honest_size")),
           "single": describe(column(records, "single"))}
    return agg, checks


scenario("fork", "Forking lemma on the toy sigma protocol", "0..199",
         questions=64, n=8, k=3, eps=0.5, eta0=0.25,
         c=float(DEFAULT_C))((_fork_run, _fork_aggregate))


# ------------------------------------------------------------------ sigma

def _sigma_run(p: dict, seed: int) -> dict:
    g = generator("sigma", seed)
    x, w = keygen(g)
    st = SigmaStatement(x, p["k"], p["questions"])
    out = {}
    for kind in ("honest", "rank_one"):
        prover = ToyProver(st, w, kind, p["eps"] if kind == "rank_one" else 1.0, rng=g)
        eps = 1.0 if kind == "honest" else p["eps"]
        res = special_sound_extract(prover, x, p["k"], eps, g)
        out[kind] = res.witness == w
    good = frozenset(int(r) for r in g.choice(p["questions"], size=p["k"] - 1, replace=False))
    sub = ToyProver(st, w, "subset", good=good, rng=g)
    res = special_sound_extract(sub, x, p["k"], p["eps"], g)
    coeffs = [int(c) for c in g.integers(83, size=p["k"] - 1)]
    pts = [int(r) for r in g.choice(p["questions"], size=p["k"], replace=False)]
    interp = interpolate([(r, respond(w, coeffs, r)) for r in pts]) == w
    return {"honest": out["honest"], "rank_one": out["rank_one"],
            "subset_none": res.witness is None, "interpolation": interp}


def _sigma_aggregate(p: dict, records: list):
    checks = [
        at_least("honest extraction rate", column(records, "honest"), p["eps"] / 8, "derived"),
        at_least("rank-one prover extraction rate", column(records, "rank_one"), p["eps"] / 8, "derived"),
        always("k - 1 good challenges never yield a witness", column(records, "subset_none"),
               "sanity"),
        always("k transcripts interpolate the witness", column(records, "interpolation"),
               "sanity"),
    ]
    agg = {key: float(np.mean(column(records, key)))
           for key in ("honest", "rank_one", "subset_none", "interpolation")}
    return agg, checks


scenario("sigma", "Special-sound extraction through the forking lemma", "0..49",
         questions=64, k=3, eps=0.5)((_sigma_run, _sigma_aggregate))


# ------------------------------------------------------------------ jordan

def _jordan_run(p: dict, seed: int) -> dict:
    g = generator("jordan", seed)
    D = int(g.integers(2, p["max_dim"] + 1))
    ra, rb = int(g.integers(0, D + 1)), int(g.integers(0, D + 1))
    PA, PB = random_projector(D, ra, g), random_projector(D, rb, g)
    dec = jordan_decompose(PA, PB)
    return {"dim": D, "rank_a": ra, "rank_b": rb, "blocks": len(dec),
            "residuals": {k: float(v) for k, v in dec.residuals.items()}}


def _jordan_aggregate(p: dict, records: list):
    keys = sorted(records[0]["residuals"]) if records else []
    worst = {k: max(r["residuals"][k] for r in records) for k in keys}
    checks = [Check(f"max {k} residual", v, p["tol"], 0.0, "<=", v <= p["tol"], "bound")
              for k, v in worst.items()]
    return {"worst": worst, "dims": describe(column(records, "dim"))}, checks


scenario("jordan", "Jordan decomposition residuals on random projector pairs", "0..99",
         max_dim=32, tol=1e-8)((_jordan_run, _jordan_aggregate))


# ------------------------------------------------------------------ alternating

@lru_cache(maxsize=4)
def alternating_setup(dim: int, rank_a: int, rank_b: int, seed: int):
    """Projector pair and five states in image(B) with their oracle laws."""
    g = np.random.default_rng(seed)
    PA, PB = random_projector(dim, rank_a, g), random_projector(dim, rank_b, g)
    dec = jordan_decompose(PA, PB)
    # two-dimensional blocks first so the basis states below have 0 < p < 1
    blocks = sorted((s for s in dec if s.w1 is not None), key=lambda s: (s.dim != 2, s.p))
    inner = sum(s.dim == 2 for s in blocks)
    if inner < 2:
        raise ValueError("projector pair has fewer than two two-dimensional blocks")
    w1 = np.column_stack([s.w1 for s in blocks])
    ps = np.array([s.p for s in blocks])
    coeffs = [
        np.eye(len(blocks))[0],
        np.eye(len(blocks))[inner - 1],
        (np.eye(len(blocks))[0] + np.eye(len(blocks))[inner // 2]) / math.sqrt(2),
        np.full(len(blocks), 1 / math.sqrt(len(blocks))),
        random_state(len(blocks), g),
    ]
    states = [w1 @ c for c in coeffs]
    weights = [np.abs(c) ** 2 for c in coeffs]
    return StructuredProjector.from_matrix(PA), StructuredProjector.from_matrix(PB), states, weights, ps


def _alternating_run(p: dict, seed: int) -> dict:
    A, B, states, _, _ = alternating_setup(p["dim"], p["rank_a"], p["rank_b"], p["setup_seed"])
    out = []
    for i, psi in enumerate(states):
        g = generator("alternating", seed, i)
        reps = []
        for _ in range(p["trials"]):
            bits, _ = alternating_outcomes(A, B, psi.copy(), p["T"], g, check=False)
            reps.append(count_repeats(bits))
        out.append(reps)
    return {"repeats": out}


def _alternating_aggregate(p: dict, records: list):
    _, _, states, weights, ps = alternating_setup(p["dim"], p["rank_a"], p["rank_b"],
                                                  p["setup_seed"])
    checks, stats = [], []
    for i in range(len(states)):
        reps = np.array([x for r in records for x in r["repeats"][i]])
        counts = np.bincount(reps, minlength=p["T"] + 1)
        pmf = mixture_repeat_pmf(weights[i], ps, p["T"])
        chi2, pval, dof = chi2_against(counts, pmf)
        stats.append({"trials": int(reps.size), "chi2": float(chi2), "dof": dof, "p_value": float(pval),
                      "mean": float(reps.mean()), "oracle_mean": float(pmf @ np.arange(p["T"] + 1))})
        checks.append(Check(f"state {i}: chi-square p-value", float(pval), p["alpha"], 0.0, ">=",
                            bool(pval >= p["alpha"]), "bound"))
    return {"states": stats, "eigenvalues": [float(x) for x in ps]}, checks


scenario("alternating", "Alternating measurements against the classical companion law", "0..9",
         dim=16, rank_a=6, rank_b=8, setup_seed=2024, T=200, trials=100,
         alpha=0.01)((_alternating_run, _alternating_aggregate))


# ------------------------------------------------------------------ kilian end to end

def _kilian_run(p: dict, seed: int) -> dict:
    x = _instance(p["instance"])
    honest = []
    for j in range(p["honest_per_seed"]):
        verdict, _ = run_honest(x, x.planted, Drbg(seed, b"e2e.honest%d" % j), p["lambda"])
        honest.append(int(verdict))
    oracle = make_oracle(p["adversary"], x, seed)
    res = extract_witness(oracle, x, p["epsilon"], Drbg(seed, b"e2e.extract"), p["lambda"])
    rec = {"honest": honest, "success": res.witness is not None and pcp.violated(x, res.witness) == 0,
           "reason": res.reason, "k": res.k, "n": res.n, "pi_ok": [], "false_witness": 0}
    if res.pi is not None:
        rec["pi_ok"].append(pcp.pcp_win_rate(x, res.pi) >= res.k / (2 * res.n))
    u = _instance(p["unsat_instance"])
    for adv in p["unsat_adversaries"]:
        r = extract_witness(make_oracle(adv, u, seed), u, p["epsilon"],
                            Drbg(seed, b"e2e.unsat"), p["lambda"])
        if r.witness is not None:
            rec["false_witness"] += 1
        if r.pi is not None:
            rec["pi_ok"].append(pcp.pcp_win_rate(u, r.pi) >= r.k / (2 * r.n))
    if seed % p["succinct_every"] == 0:
        sizes = []
        for length in p["succinct_lengths"]:
            xs = succinct_instance(length, p["succinct_k"])
            _, tau = run_honest(xs, xs.planted, Drbg(seed, b"e2e.size"), p["lambda"])
            sizes.append([length, len(tau.to_bytes()), len(pcp.pcp_queries(xs, tau.r)),
                          xs.params.query_count])
        rec["sizes"] = sizes
    return rec


def symbol_bytes(security_param: int) -> int:
    return Blake2Family(security_param).output_bytes


def succinctness_fit(points: list, security_param: int) -> dict:
    """Fit mean bytes per length against ``qc * log2(len) * h``, plus the ratio to full pi.

    ``points`` are ``[length, bytes, distinct queries, qc]``.  Individual
    transcripts scatter with the overlap of their authentication paths, so
    the curve is fitted through the per-length means.
    """
    h = symbol_bytes(security_param)
    lengths = sorted({pt[0] for pt in points})
    curve = {}
    for length in lengths:
        sizes = [b for ln, b, _, _ in points if ln == length]
        qc = next(q for ln, _, _, q in points if ln == length)
        curve[str(length)] = {"bytes": float(np.mean(sizes)), "se": describe(sizes)["se"],
                              "qc": qc, "full_pi": length * h,
                              "ratio": float(np.mean(sizes)) / (length * h)}
    if len(lengths) < 3:
        return {"a": float("nan"), "b": float("nan"), "r2": float("nan"), "curve": curve}
    xs = np.array([curve[str(ln)]["qc"] * math.log2(ln) * h for ln in lengths], dtype=float)
    ys = np.array([curve[str(ln)]["bytes"] for ln in lengths])
    a, b = np.polyfit(xs, ys, 1)
    resid = ys - (a * xs + b)
    r2 = 1 - float(resid @ resid) / float(((ys - ys.mean()) ** 2).sum())
    return {"a": float(a), "b": float(b), "r2": r2, "curve": curve}


def _kilian_aggregate(p: dict, records: list):
    eps = p["epsilon"]
    points = [pt for r in records for pt in r.get("sizes", [])]
    fit = succinctness_fit(points, p["lambda"])
    top = fit["curve"].get(str(max(p["succinct_lengths"])), {}).get("ratio", float("nan"))
    checks = [
        always("honest transcripts accept", [b == 1 for r in records for b in r["honest"]],
               "sanity"),
        at_least("witness recovery rate", column(records, "success"), eps / 8, "derived"),
        Check("false witnesses on unsatisfiable instance", sum(column(records, "false_witness")),
              0, 0.0, "==", sum(column(records, "false_witness")) == 0, "bound"),
        always("pcp_win_rate(pi) >= k/(2n) for every assembled pi",
               [ok for r in records for ok in r["pi_ok"]], "bound"),
        Check("succinctness fit R^2", fit["r2"], 0.99, 0.0, ">=", bool(fit["r2"] >= 0.99),
              "derived"),
        Check("bytes / full pi at the largest length", top, 0.05, 0.0, "<=", bool(top < 0.05),
              "derived"),
    ]
    reasons: dict = {}
    for r in records:
        if r["reason"]:
            reasons[r["reason"]] = reasons.get(r["reason"], 0) + 1
    agg = {"success": describe(column(records, "success")), "abort_histogram": reasons,
           "mean_k": float(np.mean(column(records, "k"))) if records else 0.0,
           "honest_runs": sum(len(r["honest"]) for r in records), "succinctness": fit}
    return agg, checks


scenario("kilian_e2e", "Kilian argument: honest runs, extractor and transcript sizes", "0..499",
         instance="planted6_coloring", adversary="throttled:0.3", epsilon=0.3,
         unsat_instance="k4_coloring", unsat_adversaries=["garbage", "best-effort"],
         honest_per_seed=2, succinct_lengths=[64, 256, 1024, 4096], succinct_k=4,
         succinct_every=5, **{"lambda": 128})((_kilian_run, _kilian_aggregate))
