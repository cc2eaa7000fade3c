"""UCT and single-observer information-set MCTS.

Both searches share one engine. Tree nodes are keyed by the public history;
Y nodes are additionally keyed by Y's type, since Y knows it. Each iteration
of the information-set variant first draws Y's type from X's belief and keeps
it for the whole iteration, so X nodes pool statistics across those draws.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Mapping

from ..core import ConversationState, GameSpec, Player, Utterance, legal_moves
from .belief import check_belief
from .common import SolverError, require_deterministic_judge, step

DEFAULT_EXPLORATION = math.sqrt(2)


@dataclass
class _Node:
    mover: Player
    actions: list[Utterance]
    visits: list[int] = field(default_factory=list)
    totals: list[float] = field(default_factory=list)
    n: int = 0

    def __post_init__(self) -> None:
        self.visits = [0] * len(self.actions)
        self.totals = [0.0] * len(self.actions)

    def select(self, c: float) -> int:
        for i, v in enumerate(self.visits):
            if v == 0:
                return i
        log_n = math.log(self.n)
        scores = [w / v + c * math.sqrt(log_n / v) for w, v in zip(self.totals, self.visits)]
        return scores.index(max(scores))


@dataclass(frozen=True)
class ActionStats:
    action: Utterance
    visits: int
    mean: float


@dataclass(frozen=True)
class SearchResult:
    chosen: Utterance
    root_stats: tuple[ActionStats, ...]
    iterations: int

    def __iter__(self):
        # allows ``chosen, stats = mcts(...)``
        yield self.chosen
        yield self.root_stats


def _search(
    spec: GameSpec,
    root: ConversationState,
    belief: Mapping[str, float],
    x_type: str,
    iterations: int,
    c: float,
    seed: int,
) -> SearchResult:
    require_deterministic_judge(spec)
    if iterations < 1:
        raise SolverError("iterations must be >= 1")
    if spec.is_terminal(root):
        raise SolverError("cannot search from a terminal state")
    rollout_rng = random.Random(seed)
    det_rng = random.Random(f"{seed}:determinize")
    support = [(t, p) for t, p in belief.items() if p > 0]
    types, weights = [t for t, _ in support], [p for _, p in support]

    tree: dict[tuple[ConversationState, str | None], _Node] = {}

    def node_for(state: ConversationState, t_y: str) -> tuple[_Node, str]:
        who = x_type if state.mover is Player.X else t_y
        key = (state, None if state.mover is Player.X else t_y)
        node = tree.get(key)
        if node is None:
            node = tree[key] = _Node(state.mover, legal_moves(spec, state, state.mover, who))
        return node, who

    root_node, _ = node_for(root, types[0])
    for _ in range(iterations):
        t_y = types[0] if len(types) == 1 else det_rng.choices(types, weights)[0]
        state, path = root, []
        # selection and expansion: stop after the first never-tried edge
        while not spec.is_terminal(state):
            node, _ = node_for(state, t_y)
            i = node.select(c)
            fresh = node.visits[i] == 0
            path.append((node, i))
            state = step(spec, state, node.actions[i])
            if fresh:
                break
        # uniform random rollout
        while not spec.is_terminal(state):
            who = x_type if state.mover is Player.X else t_y
            state = step(spec, state, rollout_rng.choice(legal_moves(spec, state, state.mover, who)))
        verdict = state.last_verdict
        reward = {p: spec.u(p, x_type, t_y, verdict) for p in Player}
        for node, i in path:
            node.visits[i] += 1
            node.totals[i] += reward[node.mover]
            node.n += 1

    stats = tuple(
        ActionStats(a, v, w / v if v else 0.0)
        for a, v, w in zip(root_node.actions, root_node.visits, root_node.totals)
    )
    best = max(range(len(stats)), key=lambda i: (stats[i].visits, -i))
    return SearchResult(stats[best].action, stats, iterations)


def mcts(
    spec: GameSpec,
    root: ConversationState,
    iterations: int,
    exploration_c: float = DEFAULT_EXPLORATION,
    seed: int = 0,
) -> SearchResult:
    """UCT for complete-information games; returns the most-visited root move."""
    if not spec.complete_information:
        raise SolverError("mcts needs complete information; use ismcts")
    return _search(spec, root, {spec.types_y[0]: 1.0}, spec.types_x[0], iterations, exploration_c, seed)


def ismcts(
    spec: GameSpec,
    root: ConversationState,
    belief: Mapping[str, float],
    iterations: int,
    exploration_c: float = DEFAULT_EXPLORATION,
    seed: int = 0,
    perspective: Player = Player.X,
    x_type: str | None = None,
) -> SearchResult:
    """Information-set MCTS for X facing a Y of unknown type."""
    if perspective is not Player.X:
        raise SolverError("only X's perspective is supported")
    if root.mover is not Player.X:
        raise SolverError("X must be to move at the root")
    check_belief(belief, spec.types_y)
    return _search(spec, root, belief, x_type or spec.types_x[0], iterations, exploration_c, seed)
