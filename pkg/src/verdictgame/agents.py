"""Playable policies: naive, strategic introspection, solver-backed, scripted, human."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace
from typing import Any, Callable, Mapping, Sequence

from .core import (
    ConfigError,
    ConversationState,
    GameSpec,
    Player,
    Utterance,
    Verdict,
    VerdictGameError,
    legal_moves,
    render,
    utterance,
)
from .solvers import DecisionPoint, SolverError, ismcts, mcts, solve_backward_induction, solve_bruteforce, step

KINDS = ("naive", "strategic", "solver", "scripted", "human")
ENGINES = ("exact", "mcts", "ismcts")


class AgentError(VerdictGameError):
    pass


class ScriptExhausted(AgentError):
    pass


class AbortGame(AgentError):
    """The human asked to stop or closed the input stream."""


@dataclass
class MoveContext:
    spec: GameSpec
    state: ConversationState
    mover: Player
    mover_type: str
    rng: random.Random
    belief: Mapping[str, float] | None = None
    # free-text sampler standing in for the menu (an LLM player in practice)
    generator: Callable[[MoveContext], Utterance] | None = None
    opponent_type: str | None = None

    def child(self, state: ConversationState, mover_type: str, generator=None) -> MoveContext:
        return replace(self, state=state, mover=state.mover, mover_type=mover_type, generator=generator)


Policy = Callable[[MoveContext], Utterance]


@dataclass(frozen=True)
class AgentConfig:
    kind: str
    breadth: int = 10
    depth: int = 1
    rollouts_per_candidate: int = 1
    engine: str = "exact"
    budget: int = 1000
    exploration: float = math.sqrt(2)
    script: tuple[Utterance, ...] = ()
    opponent_model: str = "naive"
    persona: str | None = None
    name: str = ""

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"unknown agent kind {self.kind!r}")
        if self.kind == "strategic" and self.breadth < 1:
            raise ConfigError("strategic agents need breadth >= 1")
        if self.depth < 0 or self.rollouts_per_candidate < 1:
            raise ConfigError("depth must be >= 0 and rollouts_per_candidate >= 1")
        if self.kind == "scripted" and not self.script:
            raise ConfigError("scripted agents need a move list")
        if self.kind == "solver" and self.engine not in ENGINES:
            raise ConfigError(f"unknown engine {self.engine!r}")

    @property
    def label(self) -> str:
        return self.name or self.kind

    @classmethod
    def from_dict(cls, cfg: Mapping[str, Any]) -> AgentConfig:
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(cfg) - known
        if unknown:
            raise ConfigError(f"unknown agent fields {sorted(unknown)}")
        data = dict(cfg)
        if "script" in data:
            data["script"] = tuple(utterance(m) for m in data["script"])
        return cls(**data)

    def to_dict(self) -> dict[str, Any]:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        out["script"] = [render(m) for m in self.script]
        return out


def _types(ctx: MoveContext) -> tuple[str, str]:
    """(t_x, t_y) for one simulated world, drawing the opponent's type if unknown."""
    spec = ctx.spec
    if ctx.opponent_type is not None:
        other = ctx.opponent_type
    elif ctx.mover is Player.X:
        dist = ctx.belief or spec.prior_y
        other = _draw(ctx.rng, dist)
    else:
        other = _draw(ctx.rng, spec.prior_x)
    return (ctx.mover_type, other) if ctx.mover is Player.X else (other, ctx.mover_type)


def _draw(rng: random.Random, dist: Mapping[str, float]) -> str:
    support = [(t, p) for t, p in dist.items() if p > 0]
    if len(support) == 1:
        return support[0][0]
    return rng.choices([t for t, _ in support], [p for _, p in support])[0]


def naive_move(ctx: MoveContext) -> Utterance:
    """Uniform draw from the menu, or one free-text sample."""
    if ctx.spec.free_text:
        if ctx.generator is None:
            raise AgentError("free-text game but no generator attached")
        return ctx.generator(ctx)
    moves = legal_moves(ctx.spec, ctx.state, ctx.mover, ctx.mover_type)
    if not moves:
        raise AgentError("no legal moves")
    return ctx.rng.choice(moves)


def _candidates(ctx: MoveContext, breadth: int) -> list[Utterance]:
    if ctx.spec.free_text:
        return [naive_move(ctx) for _ in range(breadth)]
    moves = legal_moves(ctx.spec, ctx.state, ctx.mover, ctx.mover_type)
    if breadth >= len(moves):
        return moves
    # successive draws without replacement; the first equals naive_move's draw
    pool, picked = list(moves), []
    for _ in range(breadth):
        m = ctx.rng.choice(pool)
        pool.remove(m)
        picked.append(m)
    return picked


def _simulate(
    ctx: MoveContext, candidate: Utterance, depth: int, self_model: Policy, opponent: Policy,
    opponent_generator=None,
) -> float:
    spec, me = ctx.spec, ctx.mover
    t_x, t_y = _types(ctx)
    horizon = ctx.state.t + depth
    state = ctx.state
    if depth > 0:
        state = step(spec, state, candidate)
        while not spec.is_terminal(state) and (state.t < horizon or state.pending is not None):
            mover = state.mover
            mover_type = t_x if mover is Player.X else t_y
            if mover is me:
                sub = ctx.child(state, mover_type, ctx.generator)
                move = self_model(sub)
            else:
                sub = ctx.child(state, mover_type, opponent_generator)
                sub.opponent_type = t_y if mover is Player.X else t_x
                move = opponent(sub)
            state = step(spec, state, move)
    verdict = state.last_verdict if spec.is_terminal(state) else Verdict.CONT
    return spec.u(me, t_x, t_y, verdict)


def strategic_move(
    ctx: MoveContext,
    breadth: int = 10,
    depth: int = 1,
    rollouts_per_candidate: int = 1,
    opponent: Policy = naive_move,
    self_model: Policy = naive_move,
    opponent_generator: Callable[[MoveContext], Utterance] | None = None,
) -> Utterance:
    """Shallow introspection: score ``breadth`` candidates by simulated play.

    Each candidate is followed by ``depth`` stages (the current one included)
    with the opponent drawn from ``opponent`` and later own moves from
    ``self_model``. A candidate scores the mover's mean utility over
    ``rollouts_per_candidate`` runs, where an unfinished run counts as
    ``Cont``. The first best-scoring candidate wins.
    """
    candidates = _candidates(ctx, breadth)
    if not candidates:
        raise AgentError("no candidates")
    best, best_score = None, -math.inf
    for cand in candidates:
        score = sum(
            _simulate(ctx, cand, depth, self_model, opponent, opponent_generator)
            for _ in range(rollouts_per_candidate)
        ) / rollouts_per_candidate
        if score > best_score:
            best, best_score = cand, score
    return best


def scripted_move(ctx: MoveContext, script: Sequence[Utterance]) -> Utterance:
    """The script entry for this player's next turn (one turn per stage)."""
    turn = ctx.state.t
    if turn >= len(script):
        raise ScriptExhausted(f"script has {len(script)} moves; turn {turn + 1} requested")
    return script[turn]


class SolverPolicy:
    """Solver-backed move selection; the exact engine caches one equilibrium per game."""

    def __init__(self, engine: str = "exact", budget: int = 1000, exploration: float = math.sqrt(2)):
        if engine not in ENGINES:
            raise ConfigError(f"unknown engine {engine!r}")
        self.engine, self.budget, self.exploration = engine, budget, exploration
        self._solved: dict[int, Any] = {}

    def _equilibrium(self, spec: GameSpec):
        key = id(spec)
        if key not in self._solved:
            if spec.complete_information:
                res = solve_backward_induction(spec, node_budget=max(self.budget, 1))
            else:
                res = solve_bruteforce(spec, node_budget=max(self.budget, 1))
                if not res.found:
                    raise SolverError("no pure PBE")
            self._solved[key] = (spec, res)
        return self._solved[key][1]

    def __call__(self, ctx: MoveContext) -> Utterance:
        spec = ctx.spec
        if self.engine == "exact":
            res = self._equilibrium(spec)
            return res.policy[DecisionPoint(ctx.state, ctx.mover, ctx.mover_type)]
        seed = ctx.rng.randrange(2**31)
        if ctx.mover is Player.Y or spec.complete_information:
            # Y knows both types when X's type set is a singleton
            t_y = ctx.mover_type if ctx.mover is Player.Y else spec.types_y[0]
            known = spec.with_(types_y=(t_y,), prior_y={t_y: 1.0}) if not spec.complete_information else spec
            if self.engine == "ismcts" and ctx.mover is Player.X:
                return ismcts(known, ctx.state, {t_y: 1.0}, self.budget, self.exploration, seed).chosen
            return mcts(known, ctx.state, self.budget, self.exploration, seed).chosen
        if self.engine == "mcts":
            raise SolverError("mcts needs complete information; use ismcts")
        belief = ctx.belief or spec.prior_y
        return ismcts(spec, ctx.state, belief, self.budget, self.exploration, seed, x_type=ctx.mover_type).chosen


def solver_move(ctx: MoveContext, engine: str = "exact", budget: int = 1000) -> Utterance:
    return SolverPolicy(engine, budget)(ctx)


@dataclass
class HumanPolicy:
    """Terminal player: menu index or literal text; ``quit`` or EOF aborts."""

    read: Callable[[str], str] = input
    write: Callable[[str], None] = print

    def __call__(self, ctx: MoveContext) -> Utterance:
        menu = None if ctx.spec.free_text else legal_moves(ctx.spec, ctx.state, ctx.mover, ctx.mover_type)
        if menu:
            for i, m in enumerate(menu, 1):
                self.write(f"  [{i}] {render(m)}")
        while True:
            try:
                line = self.read(f"{ctx.mover.value}> ").strip()
            except EOFError:
                raise AbortGame("end of input") from None
            if line.lower() in ("quit", "exit"):
                raise AbortGame("quit")
            if menu is None:
                try:
                    move = utterance(line)[: ctx.spec.l]
                except VerdictGameError:
                    move = ()
                if move:
                    return move
                self.write("enter a non-empty line without '#' or '@'")
                continue
            if line.isdigit() and 1 <= int(line) <= len(menu):
                return menu[int(line) - 1]
            by_text = [m for m in menu if render(m) == line]
            if by_text:
                return by_text[0]
            self.write(f"choose 1-{len(menu)}")


@dataclass
class Agent:
    config: AgentConfig
    policy: Policy
    generator: Callable[[MoveContext], Utterance] | None = None
    deterministic: bool = True

    def move(self, ctx: MoveContext) -> Utterance:
        if self.generator is not None and ctx.generator is None:
            ctx = replace(ctx, generator=self.generator)
        return self.policy(ctx)


def make_agent(
    config: AgentConfig,
    generator: Callable[[MoveContext], Utterance] | None = None,
    opponent_generator: Callable[[MoveContext], Utterance] | None = None,
    human: HumanPolicy | None = None,
) -> Agent:
    """Bind an :class:`AgentConfig` to a callable policy."""
    kind = config.kind
    if kind == "naive":
        policy: Policy = naive_move
    elif kind == "strategic":
        solver = SolverPolicy("exact", budget=10**6)
        model = naive_move if config.opponent_model == "naive" else solver

        def policy(ctx: MoveContext) -> Utterance:
            return strategic_move(
                ctx, config.breadth, config.depth, config.rollouts_per_candidate,
                opponent=model, self_model=naive_move, opponent_generator=opponent_generator,
            )
    elif kind == "solver":
        policy = SolverPolicy(config.engine, config.budget, config.exploration)
    elif kind == "scripted":
        def policy(ctx: MoveContext) -> Utterance:
            return scripted_move(ctx, config.script)
    else:
        policy = human or HumanPolicy()
    return Agent(config, policy, generator, deterministic=kind != "human")
