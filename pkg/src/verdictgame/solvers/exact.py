"""Exact solvers: backward induction and an exhaustive pure-profile oracle."""

from __future__ import annotations

import itertools
import math

from ..core import ConversationState, GameSpec, Player, Utterance, Verdict, initial_state, legal_moves
from .common import (
    NO_PURE_PBE,
    DecisionPoint,
    NodeBudgetExceeded,
    ProfileCapExceeded,
    SolveResult,
    SolverError,
    require_deterministic_judge,
    step,
)

DEFAULT_NODE_BUDGET = 1_000_000
DEFAULT_PROFILE_CAP = 1_000_000
_TOL = 1e-12


def solve_backward_induction(
    spec: GameSpec, root: ConversationState | None = None, node_budget: int = DEFAULT_NODE_BUDGET
) -> SolveResult:
    """Subgame-perfect play by general-sum backward induction.

    Each mover maximizes their own continuation payoff; ties go to the earlier
    menu entry. On zero-sum games this is minimax.
    """
    require_deterministic_judge(spec)
    if not spec.complete_information:
        raise SolverError("backward induction needs complete information; use solve_bruteforce")
    tx, ty = spec.types_x[0], spec.types_y[0]
    policy: dict[DecisionPoint, Utterance] = {}
    count = 0

    def value(state: ConversationState) -> dict[Player, float]:
        nonlocal count
        count += 1
        if count > node_budget:
            raise NodeBudgetExceeded(f"more than {node_budget} nodes")
        if spec.is_terminal(state):
            v = state.last_verdict
            return {p: spec.u(p, tx, ty, v) for p in Player}
        mover = state.mover
        mover_type = tx if mover is Player.X else ty
        best_val, best_move = None, None
        for move in legal_moves(spec, state, mover, mover_type):
            val = value(step(spec, state, move))
            if best_val is None or val[mover] > best_val[mover]:
                best_val, best_move = val, move
        policy[DecisionPoint(state, mover, mover_type)] = best_move
        return best_val

    root = root if root is not None else initial_state(spec)
    values = value(root)
    return SolveResult(values, policy, count, type_values={(tx, ty): values}, engine="backward_induction")


def _public_tree(spec: GameSpec, root: ConversationState, tx: str, node_budget: int):
    """All public histories reachable when Y may use any type's menu.

    Returns nodes in pre-order, each with its per-type action lists and the
    child reached by each action.
    """
    nodes: list[ConversationState] = []
    actions: dict[ConversationState, dict[str, list[Utterance]]] = {}
    children: dict[tuple[ConversationState, Utterance], ConversationState] = {}
    stack = [root]
    while stack:
        state = stack.pop()
        nodes.append(state)
        if len(nodes) > node_budget:
            raise NodeBudgetExceeded(f"more than {node_budget} nodes")
        if spec.is_terminal(state):
            continue
        if state.mover is Player.X:
            per_type = {tx: legal_moves(spec, state, Player.X, tx)}
        else:
            per_type = {t: legal_moves(spec, state, Player.Y, t) for t in spec.types_y}
        actions[state] = per_type
        union = list(dict.fromkeys(m for ms in per_type.values() for m in ms))
        for move in reversed(union):
            child = step(spec, state, move)
            children[(state, move)] = child
            stack.append(child)
    return nodes, actions, children


def solve_bruteforce(
    spec: GameSpec,
    profile_cap: int = DEFAULT_PROFILE_CAP,
    root: ConversationState | None = None,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> SolveResult:
    """Exhaustive search over pure strategy profiles.

    A profile qualifies when no single-node deviation helps the deviator,
    with X's expectations taken under Bayes-consistent beliefs (the prior
    when the history is off-path). Among qualifying profiles the one that
    picks the first best menu entry everywhere is preferred, which on
    complete-information games singles out the backward-induction profile.
    Returns status ``no pure PBE`` when nothing qualifies.
    """
    require_deterministic_judge(spec)
    if len(spec.types_x) != 1:
        raise SolverError("exact Bayesian solving supports private Y types only")
    tx = spec.types_x[0]
    types = spec.types_y
    root = root if root is not None else initial_state(spec)
    nodes, actions, children = _public_tree(spec, root, tx, node_budget)

    # decision variables: X per public X-node, Y per (Y-node, type)
    variables: list[tuple[ConversationState, str]] = []
    for state in nodes:
        if state in actions:
            variables.extend((state, t) for t in actions[state])
    n_profiles = math.prod(len(actions[s][t]) for s, t in variables)
    if n_profiles > profile_cap:
        raise ProfileCapExceeded(f"{n_profiles} pure profiles exceed the cap of {profile_cap}")

    # Y decisions on the path to each X node, for Bayes' rule
    y_path: dict[ConversationState, list[tuple[ConversationState, Utterance]]] = {root: []}
    for state in nodes:
        if state in actions:
            for move in dict.fromkeys(m for ms in actions[state].values() for m in ms):
                child = children[(state, move)]
                extra = [(state, move)] if state.mover is Player.Y else []
                y_path[child] = y_path[state] + extra
    bottom_up = list(reversed(nodes))
    u = {(p, t, v): spec.u(p, tx, t, v) for p in Player for t in types for v in Verdict}

    fallback = None
    for choice in itertools.product(*(actions[s][t] for s, t in variables)):
        profile = dict(zip(variables, choice))
        term = {}
        for t in types:
            for state in bottom_up:
                if state not in actions:
                    term[(t, state)] = state.last_verdict
                else:
                    who = tx if state.mover is Player.X else t
                    term[(t, state)] = term[(t, children[(state, profile[(state, who)])])]
        ok, canonical, beliefs = _check_profile(
            spec, profile, actions, children, term, y_path, u, tx, types
        )
        if not ok:
            continue
        if canonical:
            return _result(spec, root, profile, term, beliefs, u, tx, types, len(nodes))
        if fallback is None:
            fallback = (profile, term, beliefs)
    if fallback is not None:
        return _result(spec, root, *fallback, u, tx, types, len(nodes))
    return SolveResult({}, {}, len(nodes), status=NO_PURE_PBE, engine="bruteforce")


def _check_profile(spec, profile, actions, children, term, y_path, u, tx, types):
    canonical = True
    beliefs = {}
    for state, per_type in actions.items():
        if state.mover is Player.X:
            lik = {
                t: spec.prior_y.get(t, 0.0) * all(profile[(ys, t)] == ym for ys, ym in y_path[state])
                for t in types
            }
            total = sum(lik.values())
            mu = {t: w / total for t, w in lik.items()} if total > 0 else dict(spec.prior_y)
            beliefs[state] = mu
            evs = [
                sum(mu.get(t, 0.0) * u[(Player.X, t, term[(t, children[(state, a)])])] for t in types)
                for a in per_type[tx]
            ]
            chosen = per_type[tx].index(profile[(state, tx)])
            ok, first = _judge_choice(evs, chosen)
        else:
            ok, first = True, True
            for t, moves in per_type.items():
                vals = [u[(Player.Y, t, term[(t, children[(state, a)])])] for a in moves]
                ok_t, first_t = _judge_choice(vals, moves.index(profile[(state, t)]))
                ok, first = ok and ok_t, first and first_t
        if not ok:
            return False, False, beliefs
        canonical = canonical and first
    return True, canonical, beliefs


def _judge_choice(vals: list[float], chosen: int) -> tuple[bool, bool]:
    best = max(vals)
    optimal = vals[chosen] >= best - _TOL
    first = optimal and all(v < best - _TOL for v in vals[:chosen])
    return optimal, first


def _result(spec, root, profile, term, beliefs, u, tx, types, node_count) -> SolveResult:
    policy = {}
    for (state, who), move in profile.items():
        mover = state.mover
        policy[DecisionPoint(state, mover, who)] = move
    type_values = {(tx, t): {p: u[(p, t, term[(t, root)])] for p in Player} for t in types}
    values = {
        p: sum(spec.prior_y.get(t, 0.0) * type_values[(tx, t)][p] for t in types) for p in Player
    }
    return SolveResult(values, policy, node_count, type_values, beliefs, engine="bruteforce")
