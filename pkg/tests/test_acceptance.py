"""Acceptance criteria 1-8. Each test prints one PASS/FAIL line in the run summary."""

import contextlib
import random
import subprocess
import sys
import time

import pytest

from belief_cases import CASES
from conftest import ACCEPTANCE_RESULTS, CONFIGS
from gamegen import nontrivial_court_games, random_game, tractable_games
from stats_oracle import fisher_oracle
from test_belief import run_case
from verdictgame.config import read_config
from verdictgame.core import GUILTY, HUMAN, MACHINE, NON_GUILTY, Player, Verdict, builtin_game, initial_state
from verdictgame.harness import MatchRecord, compare_arms, experiment_from_config, load, persist, rerun, run_experiment
from verdictgame.solvers import ismcts, mcts, solve_backward_induction, solve_bruteforce, update_belief
from verdictgame.stats import fisher_exact

pytestmark = pytest.mark.acceptance


@contextlib.contextmanager
def criterion(number: int, title: str):
    detail: dict = {}
    start = time.perf_counter()
    passed = False
    try:
        yield detail
        passed = True
    finally:
        detail["time"] = f"{time.perf_counter() - start:.1f}s"
        text = ", ".join(f"{k}={v}" for k, v in detail.items())
        ACCEPTANCE_RESULTS.append((number, title, passed, text))


def test_1_backward_induction_matches_bruteforce():
    with criterion(1, "backward induction equals exhaustive oracle") as info:
        rng = random.Random(2024)
        games = agree = deep = 0
        # menus of up to 3 moves per context, d <= 3, automata with <= 5 states
        for spec, brute in tractable_games(rng, 240, profile_cap=20_000):
            games += 1
            deep += spec.d == 3
            agree += solve_backward_induction(spec).values == brute.values
        court_rng = random.Random(7)
        for _ in range(60):
            spec = random_game(court_rng, court=True, max_d=2, max_menu=2)
            games += 1
            agree += solve_backward_induction(spec).values == solve_bruteforce(spec).values
        info.update(games=games, agree=agree, depth3=deep)
        assert games >= 200 and agree == games


def test_2_court_is_zero_sum():
    with criterion(2, "court utilities are zero-sum") as info:
        spec = builtin_game("court")
        u = {(p, v): spec.u(p, "-", "-", v) for p in Player for v in Verdict}
        assert u[(Player.X, Verdict.ZERO)] == -1 and u[(Player.X, Verdict.ONE)] == 1
        assert u[(Player.X, Verdict.CONT)] == -1
        for v in Verdict:
            assert u[(Player.X, v)] + u[(Player.Y, v)] == 0
        info["verdicts"] = 3


INTERROGATION_UTILITIES = {
    # (player, t_Y): (Zero, One, Cont)
    (Player.X, NON_GUILTY): (1, -1, 0),
    (Player.X, GUILTY): (-1, 1, 0),
    (Player.Y, NON_GUILTY): (1, -1, 1),
    (Player.Y, GUILTY): (1, -1, 1),
}


def test_3_interrogation_and_turing_tables():
    with criterion(3, "interrogation table and Turing relabeling") as info:
        inter, turing = builtin_game("interrogation"), builtin_game("turing")
        relabel = {NON_GUILTY: HUMAN, GUILTY: MACHINE}
        checked = 0
        for (player, t_y), row in INTERROGATION_UTILITIES.items():
            for verdict, expected in zip((Verdict.ZERO, Verdict.ONE, Verdict.CONT), row):
                assert inter.u(player, "-", t_y, verdict) == expected
                assert turing.u(player, "-", relabel[t_y], verdict) == expected
                checked += 1
        assert set(turing.types_y) == {HUMAN, MACHINE}
        info["entries"] = checked


def test_4_mcts_converges_and_ismcts_matches():
    with criterion(4, "UCT finds SPE root moves; point-mass ISMCTS equals UCT") as info:
        games = list(nontrivial_court_games(random.Random(2024), 20))
        hits = same = 0
        for i, (spec, optimal) in enumerate(games):
            root = initial_state(spec)
            uct = mcts(spec, root, 10_000, seed=i)
            hits += uct.chosen in optimal
            same += ismcts(spec, root, {"-": 1.0}, 10_000, seed=i) == uct
        info.update(optimal=f"{hits}/20", ismcts_equal=f"{same}/20")
        assert hits >= 19 and same == 20


def test_5_fisher_reproduces_reference_statistic():
    with criterion(5, "exact test on 64/100 vs 27/100") as info:
        oracle = float(fisher_oracle(64, 100, 27, 100))
        p = fisher_exact(64, 100, 27, 100)
        info["p"] = f"{p:.6e}"
        assert p < 1e-5
        assert abs(p - oracle) <= 1e-10 * oracle


def test_6_strategic_beats_naive_on_benchmark():
    with criterion(6, "strategic beats naive on the synthetic benchmark") as info:
        result = run_experiment(experiment_from_config(read_config(CONFIGS / "benchmark.yaml")))
        naive, strategic = result.summaries["naive"], result.summaries["strategic"]
        p = compare_arms(strategic, naive)
        info.update(naive=naive.wins, strategic=strategic.wins, p=f"{p:.3g}")
        assert naive.n == strategic.n == 100
        assert strategic.wins > naive.wins and p < 0.01


def replicate_in_subprocess(path):
    cmd = [sys.executable, "-m", "verdictgame.cli", "replicate-court", "--out", str(path)]
    subprocess.run(cmd, check=True, capture_output=True)
    return [r.canonical() for r in load(path)]


def test_7_records_replay_bit_for_bit(tmp_path):
    with criterion(7, "persisted records replay exactly") as info:
        path = tmp_path / "bench.jsonl"
        persist(run_experiment(experiment_from_config(read_config(CONFIGS / "benchmark.yaml"))).records, path)
        records = load(path)
        replayed = sum(rerun(r).canonical() == r.canonical() for r in records)
        first = replicate_in_subprocess(tmp_path / "a.jsonl")
        second = replicate_in_subprocess(tmp_path / "b.jsonl")
        llm_replayed = sum(rerun(MatchRecord.from_dict(r)).canonical() == r for r in first[:10])
        info.update(replayed=f"{replayed}/{len(records)}", court_runs_equal=first == second,
                    court_replayed=f"{llm_replayed}/10")
        assert replayed == len(records) and first == second and len(first) == 200 and llm_replayed == 10


def test_8_belief_updates():
    with criterion(8, "Bayes updates on fixture cases") as info:
        worst = 0.0
        for game, prior, policy, observed, expected in CASES:
            post = run_case(game, prior, policy, observed)
            worst = max(worst, *(abs(post[t] - float(p)) for t, p in expected.items()))
            assert abs(sum(post.values()) - 1) <= 1e-12
        rng = random.Random(0)
        spec = builtin_game("interrogation")
        for _ in range(2000):
            p = rng.random()
            belief = {NON_GUILTY: p, GUILTY: 1 - p}
            policy = {NON_GUILTY: {("m",): rng.random()}, GUILTY: {("m",): rng.random()}}
            post = update_belief(belief, spec, ("m",), policy)
            assert abs(sum(post.values()) - 1) <= 1e-12
        info.update(cases=len(CASES), max_error=f"{worst:.1e}")
        assert len(CASES) == 10 and worst <= 1e-12
