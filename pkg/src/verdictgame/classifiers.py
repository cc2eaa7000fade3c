"""Non-strategic judges mapping a conversation to a verdict.

Reference judges read the conversation as a stream of (token, speaker)
events, so their output does not depend on how the transcript is rendered.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Hashable, Iterable, Mapping

from .core import ConfigError, ConversationState, Verdict, VerdictGameError

WILDCARD = "*"
SPEAKERS = ("S", "X", "Y")


class EmptyConversationError(VerdictGameError):
    """The judge was asked about a conversation with no completed stage."""


def _require_stage(state: ConversationState) -> None:
    if not state.stages:
        raise EmptyConversationError("classification needs at least one completed stage")


@dataclass(frozen=True)
class ConstantClassifier:
    verdict: Verdict = Verdict.CONT
    deterministic: bool = field(default=True, init=False)

    def classify(self, state: ConversationState) -> Verdict:
        _require_stage(state)
        return self.verdict


@dataclass(frozen=True)
class AutomatonClassifier:
    """Deterministic automaton over (token, speaker) events.

    Transitions are looked up as (state, token, speaker), then with the speaker
    and then the token replaced by ``*``; anything unmatched is a self-loop,
    which makes the transition function total. Seed tokens use speaker ``S``.
    """

    start: Hashable
    transitions: Mapping[tuple[Hashable, str, str], Hashable]
    output: Mapping[Hashable, Verdict]
    deterministic: bool = field(default=True, init=False)

    def __post_init__(self) -> None:
        states = {self.start, *self.transitions.values(), *(k[0] for k in self.transitions)}
        missing = states - set(self.output)
        if missing:
            raise ConfigError(f"automaton output undefined for states {sorted(map(str, missing))}")

    @property
    def states(self) -> set[Hashable]:
        return set(self.output)

    def step(self, q: Hashable, token: str, speaker: str) -> Hashable:
        for key in ((q, token, speaker), (q, token, WILDCARD), (q, WILDCARD, speaker), (q, WILDCARD, WILDCARD)):
            if key in self.transitions:
                return self.transitions[key]
        return q

    def run(self, events: Iterable[tuple[str, str]]) -> Hashable:
        q = self.start
        for token, speaker in events:
            q = self.step(q, token, speaker)
        return q

    def classify(self, state: ConversationState) -> Verdict:
        _require_stage(state)
        return self.output[self.run(state.prefix(state.t).events())]


GUILTY_FIRST = "guilty_first"
INNOCENT_FIRST = "innocent_first"


@dataclass(frozen=True)
class KeywordClassifier:
    """Trigger-set judge.

    A trigger fires once every token in its set has been said by anyone in the
    conversation. A guilty trigger yields ``One``, an innocent one ``Zero``;
    ``precedence`` decides when both fire.
    """

    guilty_triggers: tuple[frozenset[str], ...] = ()
    innocent_triggers: tuple[frozenset[str], ...] = ()
    precedence: str = GUILTY_FIRST
    default: Verdict = Verdict.CONT
    deterministic: bool = field(default=True, init=False)

    def __post_init__(self) -> None:
        if self.precedence not in (GUILTY_FIRST, INNOCENT_FIRST):
            raise ConfigError(f"unknown precedence {self.precedence!r}")

    def classify(self, state: ConversationState) -> Verdict:
        _require_stage(state)
        said = {tok for tok, _ in state.prefix(state.t).events()}
        guilty = any(trig <= said for trig in self.guilty_triggers)
        innocent = any(trig <= said for trig in self.innocent_triggers)
        if guilty and innocent:
            return Verdict.ONE if self.precedence == GUILTY_FIRST else Verdict.ZERO
        if guilty:
            return Verdict.ONE
        if innocent:
            return Verdict.ZERO
        return self.default


def classify(classifier: Any, state: ConversationState) -> Verdict:
    return classifier.classify(state)


def classify_prefixes(classifier: Any, state: ConversationState) -> list[Verdict]:
    """Verdict after each completed-stage prefix of ``state``."""
    _require_stage(state)
    return [classifier.classify(state.prefix(k)) for k in range(1, state.t + 1)]


def from_config(cfg: Mapping[str, Any]) -> Any:
    """Build a reference classifier from its config mapping.

    ``llm`` judges are built by :mod:`verdictgame.llm` and rejected here.
    """
    kind = cfg.get("kind")
    if kind == "constant":
        return ConstantClassifier(Verdict.parse(cfg.get("verdict", "Cont")))
    if kind == "automaton":
        transitions = {}
        for row in cfg.get("transitions", []):
            speaker = str(row.get("speaker", WILDCARD))
            if speaker not in (*SPEAKERS, WILDCARD):
                raise ConfigError(f"unknown speaker {speaker!r}")
            transitions[(row["from"], str(row.get("token", WILDCARD)), speaker)] = row["to"]
        output = {q: Verdict.parse(v) for q, v in cfg.get("output", {}).items()}
        return AutomatonClassifier(cfg["start"], transitions, output)
    if kind == "keyword":
        def triggers(key: str) -> tuple[frozenset[str], ...]:
            return tuple(frozenset([t] if isinstance(t, str) else t) for t in cfg.get(key, []))

        return KeywordClassifier(
            triggers("guilty"),
            triggers("innocent"),
            cfg.get("precedence", GUILTY_FIRST),
            Verdict.parse(cfg.get("default", "Cont")),
        )
    raise ConfigError(f"unknown classifier kind {kind!r}")


def to_config(classifier: Any) -> dict[str, Any]:
    if isinstance(classifier, ConstantClassifier):
        return {"kind": "constant", "verdict": classifier.verdict.value}
    if isinstance(classifier, AutomatonClassifier):
        return {
            "kind": "automaton",
            "start": classifier.start,
            "transitions": [
                {"from": q, "token": tok, "speaker": sp, "to": dst}
                for (q, tok, sp), dst in classifier.transitions.items()
            ],
            "output": {q: v.value for q, v in classifier.output.items()},
        }
    if isinstance(classifier, KeywordClassifier):
        return {
            "kind": "keyword",
            "guilty": [sorted(t) for t in classifier.guilty_triggers],
            "innocent": [sorted(t) for t in classifier.innocent_triggers],
            "precedence": classifier.precedence,
            "default": classifier.default.value,
        }
    raise ConfigError(f"cannot encode classifier {type(classifier).__name__}")
