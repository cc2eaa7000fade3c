from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, NamedTuple

from ..core import (
    ConversationState,
    GameSpec,
    Player,
    Utterance,
    VerdictGameError,
    play_x,
    render,
    reply,
    serialize,
)

OK = "ok"
NO_PURE_PBE = "no pure PBE"


class SolverError(VerdictGameError):
    """A solver precondition does not hold."""


class NodeBudgetExceeded(SolverError):
    pass


class ProfileCapExceeded(SolverError):
    pass


class DecisionPoint(NamedTuple):
    state: ConversationState
    mover: Player
    mover_type: str


@dataclass
class SolveResult:
    values: dict[Player, float]
    policy: dict[DecisionPoint, Utterance]
    node_count: int
    type_values: dict[tuple[str, str], dict[Player, float]] = field(default_factory=dict)
    beliefs: dict[ConversationState, dict[str, float]] = field(default_factory=dict)
    status: str = OK
    engine: str = ""

    @property
    def found(self) -> bool:
        return self.status == OK

    def action(self, state: ConversationState, mover: Player, mover_type: str) -> Utterance:
        return self.policy[DecisionPoint(state, mover, mover_type)]

    def report(self) -> dict[str, Any]:
        """Plain-data report for the CLI ``solve`` command."""
        return {
            "engine": self.engine,
            "status": self.status,
            "node_count": self.node_count,
            "values": {p.value: v for p, v in self.values.items()},
            "type_values": [
                {"t_x": tx, "t_y": ty, **{p.value: v for p, v in vals.items()}}
                for (tx, ty), vals in self.type_values.items()
            ],
            "policy": [
                {
                    "history": serialize(dp.state),
                    "mover": dp.mover.value,
                    "type": dp.mover_type,
                    "action": render(move),
                }
                for dp, move in self.policy.items()
            ],
        }


def step(spec: GameSpec, state: ConversationState, move: Utterance) -> ConversationState:
    """Apply the mover's utterance; Y's reply also asks the judge."""
    if state.pending is None:
        return play_x(spec, state, move)
    return reply(spec, state, move)


def require_deterministic_judge(spec: GameSpec) -> None:
    if spec.classifier is None:
        raise SolverError("solvers need a classifier")
    if not getattr(spec.classifier, "deterministic", False):
        raise SolverError("solvers require a deterministic classifier")
    if spec.free_text:
        raise SolverError("solvers need finite menus, not free text")
