"""Bayesian beliefs over Y's private type."""

from __future__ import annotations

from dataclasses import replace
from typing import Callable, Mapping

from ..core import PROB_TOL, ConversationState, GameSpec, Player, Utterance, legal_moves
from .common import SolverError

Belief = dict[str, float]
YPolicy = Mapping[str, Mapping[Utterance, float]]


def check_belief(belief: Mapping[str, float], types: tuple[str, ...] | None = None) -> None:
    if any(p < 0 for p in belief.values()):
        raise SolverError("belief has negative mass")
    if abs(sum(belief.values()) - 1.0) > PROB_TOL:
        raise SolverError("belief does not sum to 1")
    if types is not None and any(p > 0 and t not in types for t, p in belief.items()):
        raise SolverError("belief puts mass on unknown types")


def update_belief(
    belief: Mapping[str, float], spec: GameSpec, observed_y_move: Utterance, assumed_y_policy: YPolicy
) -> Belief:
    """Posterior over Y's type after seeing ``observed_y_move``.

    If no type could have produced the move, the game's prior is returned.
    """
    check_belief(belief)
    for t, dist in assumed_y_policy.items():
        if any(p < 0 for p in dist.values()):
            raise SolverError(f"negative probability in assumed policy for {t!r}")
    joint = {t: w * assumed_y_policy.get(t, {}).get(observed_y_move, 0.0) for t, w in belief.items()}
    total = sum(joint.values())
    if total <= 0:
        return dict(spec.prior_y)
    post = {t: w / total for t, w in joint.items()}
    # keep point masses exact
    if sum(1 for w in post.values() if w > 0) == 1:
        post = {t: float(w > 0) for t, w in post.items()}
    return post


def uniform_menu_policy(spec: GameSpec, state: ConversationState) -> dict[str, dict[Utterance, float]]:
    """Each type picks uniformly from its own menu (the naive-opponent model)."""
    out = {}
    for t in spec.types_y:
        moves = legal_moves(spec, state, Player.Y, t)
        out[t] = {m: 1 / len(moves) for m in moves}
    return out


def belief_from_history(
    spec: GameSpec,
    state: ConversationState,
    policy: Callable[[GameSpec, ConversationState], YPolicy] = uniform_menu_policy,
) -> Belief:
    """Filter the prior through every Y reply observed in ``state``."""
    belief = dict(spec.prior_y)
    for k, stage in enumerate(state.stages):
        opened = replace(state.prefix(k), pending=stage.x_move)
        belief = update_belief(belief, spec, stage.y_move, policy(spec, opened))
    return belief
