import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import CONFIGS, menu, slip_game, tiny_court
from gamegen import random_game, tractable_games
from verdictgame.classifiers import ConstantClassifier
from verdictgame.config import load_game
from verdictgame.core import Player, Verdict, builtin_game, initial_state, legal_moves, play_x, reply
from verdictgame.solvers import (
    NO_PURE_PBE,
    DecisionPoint,
    NodeBudgetExceeded,
    ProfileCapExceeded,
    SolverError,
    solve_backward_induction,
    solve_bruteforce,
)


def reference_values(spec, state=None):
    """Plain recursive backward induction, first best move on ties."""
    state = state or initial_state(spec)
    if spec.is_terminal(state):
        return {p: spec.u(p, "-", "-", state.last_verdict) for p in Player}
    mover = state.mover
    best = None
    for move in legal_moves(spec, state, mover, "-"):
        nxt = play_x(spec, state, move) if mover is Player.X else reply(spec, state, move)
        vals = reference_values(spec, nxt)
        if best is None or vals[mover] > best[mover]:
            best = vals
    return best


def test_four_leaf_court_game():
    # leaves (q, a) -> verdict: only (q2, a1) convicts
    leaves = {("q1", "a1"): -1, ("q1", "a2"): -1, ("q2", "a1"): 1, ("q2", "a2"): -1}
    # Y minimizes X's payoff (zero-sum), X maximizes; first entry on ties
    by_q = {q: min(leaves[(q, a)] for a in ("a1", "a2")) for q in ("q1", "q2")}
    expected = max(by_q.values())
    res = solve_backward_induction(tiny_court(d=1))
    assert res.values[Player.X] == expected == -1
    assert res.values[Player.Y] == 1
    assert res.node_count == 7
    root = initial_state(tiny_court(d=1))
    assert res.action(root, Player.X, "-") == ("q1",)


def test_x_presses_when_y_cannot_dodge():
    spec = tiny_court(d=1, y_menu=menu("a1", "a2", after={"q2": ["a1"]}))
    res = solve_backward_induction(spec)
    assert res.values[Player.X] == 1
    assert res.action(initial_state(spec), Player.X, "-") == ("q2",)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_matches_reference_oracle(d):
    spec = tiny_court(d=d, y_menu=menu("a1", "a2", after={"q2": ["a1", "a2"]}))
    assert solve_backward_induction(spec).values == reference_values(spec)


def test_constant_cont_judge_gives_cont_payoff():
    spec = tiny_court(d=2).with_(classifier=ConstantClassifier(Verdict.CONT))
    res = solve_backward_induction(spec)
    assert res.values == {Player.X: -1, Player.Y: 1}


def test_court_values_are_zero_sum():
    rng = random.Random(3)
    for _ in range(30):
        res = solve_backward_induction(random_game(rng, court=True))
        assert res.values[Player.X] + res.values[Player.Y] == 0


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_backward_induction_equals_bruteforce(seed):
    spec = random_game(random.Random(seed), max_d=2, max_menu=2)
    assert solve_backward_induction(spec).values == solve_bruteforce(spec).values


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_no_profitable_one_step_deviation(seed):
    spec = random_game(random.Random(seed), max_d=2, max_menu=3)
    res = solve_backward_induction(spec)
    for point, chosen in res.policy.items():
        state, mover = point.state, point.mover
        value_of = {}
        for move in legal_moves(spec, state, mover, "-"):
            nxt = play_x(spec, state, move) if mover is Player.X else reply(spec, state, move)
            value_of[move] = reference_values(spec, nxt)[mover]
        assert value_of[chosen] == max(value_of.values())


def test_policy_covers_every_decision_point():
    spec = tiny_court(d=2)
    res = solve_backward_induction(spec)
    assert all(isinstance(k, DecisionPoint) for k in res.policy)
    assert DecisionPoint(initial_state(spec), Player.X, "-") in res.policy


def test_node_budget():
    with pytest.raises(NodeBudgetExceeded):
        solve_backward_induction(tiny_court(d=3), node_budget=10)


def test_rejects_bayesian_and_nondeterministic_games():
    with pytest.raises(SolverError):
        solve_backward_induction(slip_game())

    class Coin:
        deterministic = False

        def classify(self, state):
            return Verdict.CONT

    with pytest.raises(SolverError):
        solve_backward_induction(tiny_court().with_(classifier=Coin()))


def test_slip_game_with_only_chat():
    spec = slip_game(x_moves=("chat",))
    res = solve_bruteforce(spec)
    assert res.found
    assert res.values[Player.X] == 0
    opened = play_x(spec, initial_state(spec), ("chat",))
    assert res.action(opened, Player.Y, "Guilty") == ("deny",)
    for t in spec.types_y:
        assert res.type_values[("-", t)][Player.Y] == 1  # verdict Zero for both types


def test_slip_game_prefers_press():
    # chat: both deny -> Zero, X gets 0.5*1 + 0.5*(-1) = 0
    # press: innocent alibi -> Zero (+1), guilty stammers -> Cont (0); EV 0.5
    spec = slip_game()
    res = solve_bruteforce(spec)
    assert res.values[Player.X] == 0.5
    root = initial_state(spec)
    assert res.action(root, Player.X, "-") == ("press",)
    assert res.action(play_x(spec, root, ("press",)), Player.Y, "Guilty") == ("stammer",)


def test_slip_game_config_matches():
    res = solve_bruteforce(load_game(CONFIGS / "slip.yaml"))
    assert res.values[Player.X] == 0.5


def test_no_pure_pbe_reported():
    # after l: X plays h -> the guilty type exits with r -> only innocents say l -> X prefers t,
    # and symmetrically for t; if everyone exits, some type gains by saying l
    res = solve_bruteforce(load_game(CONFIGS / "no_pure_pbe.yaml"))
    assert res.status == NO_PURE_PBE and not res.found


def test_beliefs_are_bayes_consistent():
    res = solve_bruteforce(slip_game())
    for belief in res.beliefs.values():
        assert sum(belief.values()) == pytest.approx(1, abs=1e-12)


def test_profile_cap():
    spec = builtin_game(
        "court", d=3, menus={Player.X: menu("a", "b", "c"), Player.Y: menu("x", "y", "z")},
        classifier=ConstantClassifier(Verdict.CONT),
    )
    with pytest.raises(ProfileCapExceeded):
        solve_bruteforce(spec, profile_cap=1000)


def test_tractable_generator_respects_cap():
    for spec, res in tractable_games(random.Random(0), 5, profile_cap=500):
        assert res.found
