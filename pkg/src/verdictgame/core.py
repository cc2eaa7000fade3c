"""Verdict-game formalism: states, legal moves, stage transitions and payoffs.

A game alternates stages. In each stage X appends an utterance, Y replies,
and the judge classifies the completed conversation as ``Zero``, ``One`` or
``Cont``. The game ends on the first conclusive verdict or after ``d`` stages.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Iterable, Mapping, Protocol, Sequence

Token = str
Utterance = tuple[Token, ...]

PROB_TOL = 1e-12
RESERVED_CHARS = frozenset("#@")


class VerdictGameError(Exception):
    """Base class for engine errors."""


class ConfigError(VerdictGameError):
    """A game, menu or classifier configuration is unusable."""


class GameOverError(VerdictGameError):
    """A move or query was issued against a terminal state."""


class IllegalMoveError(VerdictGameError):
    """A move violates the length cap, the alphabet or the menu."""


class WrongMoverError(VerdictGameError):
    """A move was issued out of turn."""


class Player(str, Enum):
    X = "X"
    Y = "Y"

    @property
    def other(self) -> Player:
        return Player.Y if self is Player.X else Player.X


class Verdict(str, Enum):
    ZERO = "Zero"
    ONE = "One"
    CONT = "Cont"

    @property
    def conclusive(self) -> bool:
        return self is not Verdict.CONT

    @classmethod
    def parse(cls, value: Any) -> Verdict:
        if isinstance(value, Verdict):
            return value
        key = str(value).strip().lower()
        aliases = {"0": cls.ZERO, "zero": cls.ZERO, "1": cls.ONE, "one": cls.ONE, "cont": cls.CONT}
        if key not in aliases:
            raise ConfigError(f"unknown verdict {value!r}")
        return aliases[key]


class Classifier(Protocol):
    """Anything that maps a conversation with at least one stage to a verdict."""

    deterministic: bool

    def classify(self, state: ConversationState) -> Verdict: ...


def utterance(text: str | Iterable[str]) -> Utterance:
    """Build an utterance from whitespace-separated text or a token sequence."""
    tokens = tuple(text.split()) if isinstance(text, str) else tuple(text)
    for tok in tokens:
        check_token(tok)
    return tokens


def check_token(tok: str) -> None:
    if not tok or any(ch.isspace() for ch in tok) or RESERVED_CHARS & set(tok):
        raise IllegalMoveError(f"invalid token {tok!r}")


def render(utt: Utterance) -> str:
    return " ".join(utt)


@dataclass(frozen=True)
class Stage:
    x_move: Utterance
    y_move: Utterance


@dataclass(frozen=True)
class ConversationState:
    """Conversation so far: seed text, completed stages and their verdicts.

    ``pending`` holds X's move while Y's reply is outstanding. The judge only
    ever sees completed stages.
    """

    seed: Utterance = ()
    stages: tuple[Stage, ...] = ()
    verdicts: tuple[Verdict, ...] = ()
    pending: Utterance | None = None

    def __post_init__(self) -> None:
        if len(self.verdicts) != len(self.stages):
            raise ValueError("one verdict per completed stage")
        if any(v.conclusive for v in self.verdicts[:-1]):
            raise ValueError("only the last verdict may be conclusive")

    @property
    def t(self) -> int:
        return len(self.stages)

    @property
    def last_verdict(self) -> Verdict | None:
        return self.verdicts[-1] if self.verdicts else None

    @property
    def mover(self) -> Player:
        return Player.X if self.pending is None else Player.Y

    def is_terminal(self, d: int) -> bool:
        last = self.last_verdict
        return last is not None and (last.conclusive or self.t >= d)

    def events(self) -> list[tuple[Token, str]]:
        """Flatten into (token, speaker) events; seed tokens carry speaker ``S``."""
        out: list[tuple[Token, str]] = [(tok, "S") for tok in self.seed]
        for stage in self.stages:
            out.extend((tok, "X") for tok in stage.x_move)
            out.extend((tok, "Y") for tok in stage.y_move)
        return out

    def prefix(self, n_stages: int) -> ConversationState:
        return ConversationState(self.seed, self.stages[:n_stages], self.verdicts[:n_stages])


@dataclass(frozen=True)
class MenuTable:
    """Finite move menu for one player, optionally keyed on context.

    ``after`` is keyed on the opponent's most recent move (for X the previous
    Y reply, for Y the pending X move); ``by_type`` overrides per private type.
    Lookup order: type+after, type default, after, default.
    """

    default: tuple[Utterance, ...] = ()
    after: Mapping[Utterance, tuple[Utterance, ...]] = field(default_factory=dict)
    by_type: Mapping[str, MenuTable] = field(default_factory=dict)

    def lookup(self, mover_type: str | None, prev: Utterance | None) -> tuple[Utterance, ...]:
        layers = []
        if mover_type is not None and mover_type in self.by_type:
            layers.append(self.by_type[mover_type])
        layers.append(self)
        for layer in layers:
            if prev is not None and prev in layer.after:
                return layer.after[prev]
            if layer.default:
                return layer.default
        return ()

    def all_moves(self) -> list[Utterance]:
        seen: dict[Utterance, None] = dict.fromkeys(self.default)
        for moves in self.after.values():
            seen.update(dict.fromkeys(moves))
        for sub in self.by_type.values():
            seen.update(dict.fromkeys(sub.all_moves()))
        return list(seen)


UtilityKey = tuple[Player, str, str, Verdict]


@dataclass(frozen=True)
class UtilityTable:
    entries: Mapping[UtilityKey, float]

    def value(self, player: Player, t_x: str, t_y: str, verdict: Verdict) -> float:
        try:
            return self.entries[(player, t_x, t_y, verdict)]
        except KeyError:
            raise ConfigError(f"no utility entry for {(player.value, t_x, t_y, verdict.value)}") from None

    def check_total(self, types_x: Sequence[str], types_y: Sequence[str]) -> None:
        for p in Player:
            for tx in types_x:
                for ty in types_y:
                    for v in Verdict:
                        val = self.value(p, tx, ty, v)
                        if val != val or val in (float("inf"), float("-inf")):
                            raise ConfigError(f"non-finite utility at {(p.value, tx, ty, v.value)}")

    def relabel(self, x_map: Mapping[str, str], y_map: Mapping[str, str]) -> UtilityTable:
        return UtilityTable(
            {(p, x_map.get(tx, tx), y_map.get(ty, ty), v): val for (p, tx, ty, v), val in self.entries.items()}
        )


@dataclass(frozen=True)
class GameSpec:
    """Full parametrization of a verdict game.

    ``alphabet`` may be ``None`` in free-text mode, where legality reduces to
    the length cap ``l``.
    """

    types_x: tuple[str, ...]
    types_y: tuple[str, ...]
    utilities: UtilityTable
    l: int
    d: int
    alphabet: frozenset[Token] | None = None
    prior_x: Mapping[str, float] = field(default_factory=dict)
    prior_y: Mapping[str, float] = field(default_factory=dict)
    menus: Mapping[Player, MenuTable] = field(default_factory=dict)
    classifier: Classifier | None = None
    classifier_id: str | None = None
    seed_text: Utterance = ()
    free_text: bool = False
    name: str = "custom"

    def __post_init__(self) -> None:
        if self.d < 1:
            raise ConfigError("d must be >= 1")
        if self.l < 1:
            raise ConfigError("l must be >= 1")
        if not self.types_x or not self.types_y:
            raise ConfigError("type sets must be non-empty")
        # frozen: fill default priors through object.__setattr__
        if not self.prior_x:
            object.__setattr__(self, "prior_x", {t: 1 / len(self.types_x) for t in self.types_x})
        if not self.prior_y:
            object.__setattr__(self, "prior_y", {t: 1 / len(self.types_y) for t in self.types_y})
        for label, prior, types in (("X", self.prior_x, self.types_x), ("Y", self.prior_y, self.types_y)):
            if set(prior) - set(types):
                raise ConfigError(f"prior over T_{label} names unknown types")
            if any(p < 0 for p in prior.values()) or abs(sum(prior.values()) - 1.0) > PROB_TOL:
                raise ConfigError(f"prior over T_{label} must be a distribution")
        self.utilities.check_total(self.types_x, self.types_y)
        for table in self.menus.values():
            for move in table.all_moves():
                self.check_utterance(move)

    @property
    def complete_information(self) -> bool:
        return len(self.types_x) == 1 and len(self.types_y) == 1

    def with_(self, **changes: Any) -> GameSpec:
        return replace(self, **changes)

    def check_utterance(self, move: Utterance) -> None:
        if not 1 <= len(move) <= self.l:
            raise IllegalMoveError(f"utterance length {len(move)} outside [1, {self.l}]")
        for tok in move:
            check_token(tok)
            if self.alphabet is not None and tok not in self.alphabet:
                raise IllegalMoveError(f"token {tok!r} not in alphabet")

    def is_terminal(self, state: ConversationState) -> bool:
        return state.is_terminal(self.d)

    def u(self, player: Player, t_x: str, t_y: str, verdict: Verdict) -> float:
        return self.utilities.value(player, t_x, t_y, verdict)

    def desired_verdict(self, player: Player, t_x: str, t_y: str) -> Verdict:
        """The conclusive verdict with the higher payoff for ``player`` (ties go to One)."""
        zero = self.u(player, t_x, t_y, Verdict.ZERO)
        one = self.u(player, t_x, t_y, Verdict.ONE)
        return Verdict.ONE if one >= zero else Verdict.ZERO

    def judge(self, state: ConversationState) -> Verdict:
        if self.classifier is None:
            raise ConfigError("no classifier attached to the game")
        return self.classifier.classify(state)


def legal_moves(
    spec: GameSpec, state: ConversationState, mover: Player, mover_type: str | None = None
) -> list[Utterance]:
    """Menu of legal utterances for ``mover`` in ``state``, in menu order."""
    if spec.is_terminal(state):
        raise GameOverError("game over")
    if mover is not state.mover:
        raise WrongMoverError(f"{state.mover.value} is to move, not {mover.value}")
    if spec.free_text:
        raise ConfigError("free-text games have no menus")
    table = spec.menus.get(mover)
    if table is None:
        raise ConfigError(f"no menu configured for {mover.value}")
    if mover is Player.X:
        prev = state.stages[-1].y_move if state.stages else None
    else:
        prev = state.pending
    moves = table.lookup(mover_type, prev)
    if not moves:
        raise ConfigError(f"empty menu for {mover.value} (type={mover_type}, after={prev})")
    return list(moves)


def _check_move(spec: GameSpec, state: ConversationState, mover: Player, move: Utterance) -> None:
    spec.check_utterance(move)
    if spec.free_text:
        return
    table = spec.menus.get(mover)
    if table is None:
        raise ConfigError(f"no menu configured for {mover.value}")
    prev = state.pending if mover is Player.Y else (state.stages[-1].y_move if state.stages else None)
    types = spec.types_x if mover is Player.X else spec.types_y
    allowed = {m for t in types for m in table.lookup(t, prev)}
    if move not in allowed:
        raise IllegalMoveError(f"{render(move)!r} is not on {mover.value}'s menu here")


def play_x(spec: GameSpec, state: ConversationState, x_move: Utterance) -> ConversationState:
    """Open a stage with X's utterance."""
    if spec.is_terminal(state):
        raise GameOverError("game over")
    if state.pending is not None:
        raise WrongMoverError("Y must reply before X moves again")
    _check_move(spec, state, Player.X, x_move)
    return replace(state, pending=x_move)


def complete_stage(
    spec: GameSpec, state: ConversationState, y_move: Utterance, verdict: Verdict
) -> ConversationState:
    """Close the open stage with Y's reply and the judge's verdict on it."""
    if state.pending is None:
        raise WrongMoverError("X has not opened the stage")
    _check_move(spec, state, Player.Y, y_move)
    return ConversationState(
        seed=state.seed,
        stages=state.stages + (Stage(state.pending, y_move),),
        verdicts=state.verdicts + (verdict,),
    )


def reply(spec: GameSpec, state: ConversationState, y_move: Utterance) -> ConversationState:
    """Close the open stage, asking the game's classifier for the verdict."""
    if state.pending is None:
        raise WrongMoverError("X has not opened the stage")
    spec.check_utterance(y_move)
    closed = ConversationState(state.seed, state.stages + (Stage(state.pending, y_move),), state.verdicts + (Verdict.CONT,))
    return complete_stage(spec, state, y_move, spec.judge(closed))


def apply_stage(
    spec: GameSpec, state: ConversationState, x_move: Utterance, y_move: Utterance, verdict: Verdict
) -> ConversationState:
    if state.pending is not None:
        raise WrongMoverError("a stage is already open; X cannot move")
    return complete_stage(spec, play_x(spec, state, x_move), y_move, verdict)


def initial_state(spec: GameSpec) -> ConversationState:
    return ConversationState(seed=spec.seed_text)


def payoff(spec: GameSpec, player: Player, t_x: str, t_y: str, terminal_verdict: Verdict) -> float:
    return spec.u(player, t_x, t_y, terminal_verdict)


# --- serialization -------------------------------------------------------

DELIMITERS = "delimiters"
SPEAKER_LABELS = "speaker_labels"


def serialize(state: ConversationState, style: str = DELIMITERS) -> str:
    if style == DELIMITERS:
        parts = [render(state.seed)]
        for st in state.stages:
            parts.append(f"#{render(st.x_move)}@{render(st.y_move)}")
        if state.pending is not None:
            parts.append(f"#{render(state.pending)}")
        return "".join(parts)
    if style == SPEAKER_LABELS:
        lines = [f"S: {render(state.seed)}"] if state.seed else []
        for st in state.stages:
            lines += [f"X: {render(st.x_move)}", f"Y: {render(st.y_move)}"]
        if state.pending is not None:
            lines.append(f"X: {render(state.pending)}")
        return "\n".join(lines)
    raise ValueError(f"unknown serialization style {style!r}")


def parse(text: str, style: str = DELIMITERS, classifier: Classifier | None = None) -> ConversationState:
    """Inverse of :func:`serialize`.

    Verdicts are not part of the text; they are recomputed with ``classifier``
    when given, otherwise every stage is marked ``Cont``.
    """
    seed: Utterance = ()
    moves: list[Utterance] = []
    if style == DELIMITERS:
        head, *chunks = text.split("#")
        seed = utterance(head)
        for i, chunk in enumerate(chunks):
            if "@" in chunk:
                x, y = chunk.split("@")
                moves += [utterance(x), utterance(y)]
            elif i == len(chunks) - 1:
                moves.append(utterance(chunk))
            else:
                raise ValueError(f"stage {i + 1} lacks Y's reply")
    elif style == SPEAKER_LABELS:
        lines = text.split("\n") if text else []
        if lines and lines[0].startswith("S: "):
            seed = utterance(lines.pop(0)[3:])
        for i, line in enumerate(lines):
            expect = "X: " if i % 2 == 0 else "Y: "
            if not line.startswith(expect):
                raise ValueError(f"line {i + 1}: expected {expect.strip()!r} prefix")
            moves.append(utterance(line[3:]))
    else:
        raise ValueError(f"unknown serialization style {style!r}")
    if any(not m for m in moves):
        raise ValueError("empty utterance")
    stages = tuple(Stage(moves[i], moves[i + 1]) for i in range(0, len(moves) - 1, 2))
    pending = moves[-1] if len(moves) % 2 else None
    state = ConversationState(seed, stages, (Verdict.CONT,) * len(stages), pending)
    if classifier is not None and stages:
        verdicts = tuple(classifier.classify(state.prefix(k)) for k in range(1, len(stages) + 1))
        state = ConversationState(seed, stages, verdicts, pending)
    return state


# --- builtin games -------------------------------------------------------

SINGLE = "-"
NON_GUILTY, GUILTY = "Non-Guilty", "Guilty"
HUMAN, MACHINE = "Human", "Machine"


def _court_table() -> UtilityTable:
    x = {Verdict.ZERO: -1.0, Verdict.ONE: 1.0, Verdict.CONT: -1.0}
    y = {Verdict.ZERO: 1.0, Verdict.ONE: -1.0, Verdict.CONT: 1.0}
    entries = {(Player.X, SINGLE, SINGLE, v): x[v] for v in Verdict}
    entries.update({(Player.Y, SINGLE, SINGLE, v): y[v] for v in Verdict})
    return UtilityTable(entries)


def _interrogation_table() -> UtilityTable:
    rows = {
        (Player.X, NON_GUILTY): (1.0, -1.0, 0.0),
        (Player.X, GUILTY): (-1.0, 1.0, 0.0),
        (Player.Y, NON_GUILTY): (1.0, -1.0, 1.0),
        (Player.Y, GUILTY): (1.0, -1.0, 1.0),
    }
    entries = {}
    for (player, t_y), vals in rows.items():
        for v, val in zip((Verdict.ZERO, Verdict.ONE, Verdict.CONT), vals):
            entries[(player, SINGLE, t_y, v)] = val
    return UtilityTable(entries)


def builtin_game(name: str, *, l: int = 1, d: int = 1, **overrides: Any) -> GameSpec:
    """Court, interrogation or Turing-test game with the canonical utility table.

    Menus and classifier are left empty for the caller to fill in.
    """
    if name == "court":
        spec = GameSpec((SINGLE,), (SINGLE,), _court_table(), l=l, d=d, name="court")
    elif name == "interrogation":
        spec = GameSpec((SINGLE,), (NON_GUILTY, GUILTY), _interrogation_table(), l=l, d=d, name="interrogation")
    elif name == "turing":
        table = _interrogation_table().relabel({}, {NON_GUILTY: HUMAN, GUILTY: MACHINE})
        spec = GameSpec((SINGLE,), (HUMAN, MACHINE), table, l=l, d=d, name="turing")
    else:
        raise ConfigError(f"unknown builtin game {name!r}")
    return spec.with_(**overrides) if overrides else spec
