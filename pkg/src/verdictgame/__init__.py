"""Verdict games: two-player conversation games judged stage by stage."""

from .core import (
    ConfigError,
    ConversationState,
    GameSpec,
    MenuTable,
    Player,
    Stage,
    UtilityTable,
    Verdict,
    apply_stage,
    builtin_game,
    initial_state,
    legal_moves,
    parse,
    payoff,
    serialize,
    utterance,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ConversationState",
    "GameSpec",
    "MenuTable",
    "Player",
    "Stage",
    "UtilityTable",
    "Verdict",
    "apply_stage",
    "builtin_game",
    "initial_state",
    "legal_moves",
    "parse",
    "payoff",
    "serialize",
    "utterance",
]
