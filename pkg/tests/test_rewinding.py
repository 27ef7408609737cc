import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from pqkilian.errors import InvalidParameter, RegisterCapExceeded
from pqkilian.quantum.alternating import chi2_against
from pqkilian.quantum.core import StructuredProjector, random_state
from pqkilian.rewinding import (FixedAnswerStrategy, Game, GameModel, PlayParams, SubsetStrategy,
                                UniformAnswerStrategy, ValEst, ValEstParams, RankOneStrategy,
                                exact_value, fork, naive_bound, naive_play, repair,
                                repair_experiment, repair_projective, repeated_play,
                                win_measurement)
from pqkilian.rewinding.play import check_fork_output
from pqkilian.rewinding.repair import _project_basis


def rank_one(nq=8, eps=0.5):
    return GameModel(RankOneStrategy(nq, eps))


def repeat_pmf(M: ValEst, state) -> np.ndarray:
    w, p = M.law(state)
    n = 2 * M.t
    k = np.arange(n + 1)
    return sum(wj * stats.binom.pmf(k, n, pj) for wj, pj in zip(w, p))


# ------------------------------------------------------------ exact value

def test_exact_value_examples():
    game = Game(6, 3, lambda r, z: z == 2)
    fixed = GameModel(FixedAnswerStrategy(game, 2))
    assert exact_value(fixed, fixed.strategy.initial_state()) == pytest.approx(1)
    m = rank_one(16, 0.3)
    assert m.exact_value(m.strategy.initial_state()) == pytest.approx(0.3)
    game = Game(5, 4, lambda r, z: (r + z) % 4 == 0 or z == 1)
    frac = np.mean([game.win(r, z) for r in range(5) for z in range(4)])
    u = GameModel(UniformAnswerStrategy(game))
    assert u.exact_value(u.strategy.initial_state()) == pytest.approx(frac)


def test_value_operator_spectrum_in_unit_interval():
    a, chi = rank_one(8, 0.4).spectrum
    assert a.min() >= 0 and a.max() <= 1
    assert np.allclose(chi.conj().T @ chi, np.eye(len(a)))


def test_subset_strategy_value():
    game = Game(10, 2, lambda r, z: z == 1)
    m = GameModel(SubsetStrategy(game, {1, 4, 7}, lambda r: 1, lambda r: 0))
    assert m.exact_value(m.strategy.initial_state()) == pytest.approx(0.3)


def test_register_cap():
    with pytest.raises(RegisterCapExceeded):
        GameModel(RankOneStrategy(1024, 0.5).__class__(1024, 0.5, Game(1024, 8, lambda r, z: 1)))


# ------------------------------------------------------------ ValEst

def test_t_values():
    assert ValEstParams(0.1, 0.05).t == 369
    assert ValEstParams(0.1, 0.001).t == 761
    assert ValEstParams(0.9, 0.9).t >= 1
    with pytest.raises(InvalidParameter):
        ValEstParams(0, 0.5)


def test_window_is_closed():
    p = ValEstParams(0.1, 0.05)
    lo, hi = p.window(0.5)
    assert p.estimate(lo) >= 0.4 > p.estimate(lo - 1)
    assert p.estimate(hi) <= 0.6 < p.estimate(hi + 1)


@pytest.mark.parametrize("method", ["direct", "spectral"])
def test_repeat_count_matches_exact_law(method):
    m = rank_one(6, 0.45)
    M = ValEst(m, ValEstParams(0.25, 0.2), method)
    g = np.random.default_rng(7)
    psi = random_state(m.dim, g)
    runs = 1500 if method == "direct" else 4000
    counts = np.bincount([M.measure(psi, g).repeats for _ in range(runs)], minlength=2 * M.t + 1)
    _, pval, _ = chi2_against(counts, repeat_pmf(M, psi))
    assert pval > 1e-3


def test_direct_and_spectral_agree_on_sequential_use():
    m = rank_one(6, 0.45)
    params = ValEstParams(0.25, 0.2)
    g = np.random.default_rng(8)
    psi = random_state(m.dim, g)
    out = {}
    for method in ("direct", "spectral"):
        M = ValEst(m, params, method)
        diffs, vals = [], []
        for _ in range(1500):
            a = M.measure(psi, g)
            b = M.measure(a.state, g)
            diffs.append(b.estimate - a.estimate)
            vals.append(m.exact_value(a.state))
        out[method] = (np.array(diffs), np.array(vals))
    ks = stats.ks_2samp(out["direct"][0], out["spectral"][0])
    assert ks.pvalue > 1e-3
    d, s = out["direct"][1], out["spectral"][1]
    assert abs(d.mean() - s.mean()) < 3 * math.hypot(d.std() / math.sqrt(len(d)), s.std() / math.sqrt(len(s)))


def test_expectation_equals_value():
    m = rank_one(8, 0.5)
    M = ValEst(m, ValEstParams(0.1, 0.05), "spectral")
    g = np.random.default_rng(9)
    psi = random_state(m.dim, g)
    est = [M.measure(psi, g).estimate for _ in range(4000)]
    se = np.std(est) / math.sqrt(len(est))
    assert abs(np.mean(est) - m.exact_value(psi)) < 3 * se


def test_always_win_estimate_and_post_state():
    game = Game(8, 2, lambda r, z: z == 1)
    m = GameModel(FixedAnswerStrategy(game, 1))
    M = ValEst(m, ValEstParams(0.1, 0.05), "direct")
    g = np.random.default_rng(10)
    outs = [M.measure(m.strategy.initial_state(), g) for _ in range(200)]
    assert all(m.exact_value(o.state) == pytest.approx(1) for o in outs)
    est = [o.estimate for o in outs]
    assert abs(np.mean(est) - 1) < 3 * np.std(est) / math.sqrt(len(est))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31))
def test_estimates_on_grid_and_states_normalised(seed):
    m = rank_one(4, 0.6)
    M = ValEst(m, ValEstParams(0.2, 0.1), "spectral")
    g = np.random.default_rng(seed)
    o = M.measure(random_state(m.dim, g), g)
    assert 0 <= o.repeats <= 2 * M.t
    assert (o.estimate + 0.5) * M.t == pytest.approx(o.repeats)
    assert np.linalg.norm(o.state) == pytest.approx(1)


def test_eigenstate_estimate_concentrates():
    m = rank_one(8, 0.5)
    a, chi = m.spectrum
    M = ValEst(m, ValEstParams(0.1, 0.01), "spectral")
    g = np.random.default_rng(11)
    j = int(np.argmax(a))
    far = sum(abs(M.measure(chi[:, j], g).estimate - a[j]) > 0.1 for _ in range(500))
    assert far / 500 <= 0.01 + 3 * math.sqrt(0.01 * 0.99 / 500)


# ------------------------------------------------------------ repair

def test_repair_unperturbed_state_takes_one_measurement():
    psi = np.array([1, 0], dtype=complex)
    A = StructuredProjector.onto([psi])
    _, count, ok = repair_projective(A, A, 10, psi, np.random.default_rng(0))
    assert count == 1 and ok


def test_repair_requires_image_of_outcome():
    m = rank_one(4, 0.5)
    M = ValEst(m, ValEstParams(0.2, 0.1))
    P = win_measurement(m, 0)
    v = random_state(m.dim, np.random.default_rng(1))
    with pytest.raises(InvalidParameter):
        repair(M, P, 4, 1, 0.5, v)


def test_repair_returns_normalised_state_and_bounded_count():
    m = rank_one(8, 0.5)
    M = ValEst(m, ValEstParams(0.1, 0.01))
    g = np.random.default_rng(2)
    counts = []
    for _ in range(100):
        rec = repair_experiment(M, win_measurement(m, int(g.integers(8))), 8,
                                m.strategy.initial_state(), g)
        assert rec.count % 2 == 1 and rec.count <= 2 * 8 + 1
        counts.append(rec.count)
    assert np.mean(counts) <= 2 + 4 * 8 * math.sqrt(0.01) + 1


def test_qubit_repair_failure_law():
    p, T = 0.2, 5
    psi = np.array([1, 0], dtype=complex)
    phi = np.array([math.sqrt(p), math.sqrt(1 - p)], dtype=complex)
    A, B = StructuredProjector.onto([psi]), StructuredProjector.onto([phi])
    g = np.random.default_rng(3)
    fails = 0
    n = 4000
    for _ in range(n):
        _, _, ok = repair_projective(A, B, T - 1, phi, g)
        fails += not ok
    q = 2 * p * (1 - p)
    # from the image of B the first A fails with probability 1 - p
    exact = (1 - p) * (1 - q) ** (T - 1)
    assert abs(fails / n - exact) < 3 * math.sqrt(exact * (1 - exact) / n)


def test_project_basis_rank():
    P = win_measurement(rank_one(4, 0.5), 2)[1]
    assert _project_basis(P).shape[1] == round(np.trace(P).real)


# ------------------------------------------------------------ play and fork

def test_play_params():
    pp = PlayParams(8, 0.25)
    assert pp.eps == pytest.approx(0.25 / 18)
    assert pp.delta == pytest.approx(0.0625 / (64 * 64))
    assert pp.T == math.ceil(1 / math.sqrt(pp.delta))


def test_naive_bound_and_trivial_game():
    assert naive_bound(0.1) == pytest.approx(1 / 1.8)
    m = rank_one(8, 1.0)
    rec = naive_play(m, m.strategy.initial_state(), 8, rng=0)
    assert rec.wins == 8 and sorted(rec.questions) == list(range(8))


def test_repeated_play_on_always_win_game():
    game = Game(8, 2, lambda r, z: z == 1)
    m = GameModel(FixedAnswerStrategy(game, 1))
    rec = repeated_play(m, m.strategy.initial_state(), 4, 0.5, rng=1)
    assert rec.wins == 4 and all(rec.repaired)


def test_fork_structure_and_honest_prover():
    game = Game(16, 2, lambda r, z: z == 1)
    honest = GameModel(FixedAnswerStrategy(game, 1))
    qs = [3, 5, 3, 9]
    W = fork(honest, qs, honest.strategy.initial_state(), 0.25, rng=2)
    assert W == [(3, 1), (5, 1), (9, 1)]
    m = rank_one(16, 0.5)
    W = fork(m, qs, m.strategy.initial_state(), 0.25, rng=3)
    check_fork_output(m, qs, W)
    assert [r for r, _ in W] == sorted({r for r, _ in W})


def test_check_fork_output_rejects_bad_sets():
    m = rank_one(8, 0.5)
    with pytest.raises(AssertionError):
        check_fork_output(m, [1, 2], [(1, 0)])
    with pytest.raises(AssertionError):
        check_fork_output(m, [1, 2], [(1, 1), (1, 1)])
    with pytest.raises(AssertionError):
        check_fork_output(m, [1, 2], [(3, 1)])
