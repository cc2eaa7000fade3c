"""Seeded match batches, per-arm summaries and record persistence.

Match ``i`` of every arm is played with seed ``base_seed + i``; inside a match
the type draw and each player's moves use separate streams derived from that
seed, so arms share the same chance events where their play allows it.
"""

from __future__ import annotations

import hashlib
import json
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping

from . import llm
from .agents import AbortGame, Agent, AgentConfig, MoveContext, make_agent
from .config import game_from_config
from .core import (
    ConfigError,
    GameSpec,
    Player,
    Verdict,
    VerdictGameError,
    apply_stage,
    initial_state,
    play_x,
    render,
    reply,
    utterance,
)
from .solvers import belief_from_history
from .stats import FISHER, p_value

RECORD_VERSION = 1
WIN, LOSS, NON_CONCLUSIVE, FAILED = "win", "loss", "non_conclusive", "failed"


class RecordFormatError(VerdictGameError):
    pass


def config_digest(data: Mapping[str, Any]) -> str:
    return hashlib.sha256(json.dumps(data, sort_keys=True, default=str).encode()).hexdigest()[:16]


@dataclass
class MatchRecord:
    """One played game.

    ``timing`` is the only field that varies between identical runs; it is
    left out of :meth:`canonical`.
    """

    arm: str
    index: int
    seed: int
    types: dict[str, str]
    agents: dict[str, str]
    stages: list[list[str]] = field(default_factory=list)
    verdicts: list[str] = field(default_factory=list)
    terminal_verdict: str | None = None
    payoffs: dict[str, float] = field(default_factory=dict)
    outcome: str = NON_CONCLUSIVE
    status: str = "ok"
    reason: str | None = None
    deterministic: bool = True
    audit: list[dict[str, Any]] = field(default_factory=list)
    config_digest: str = ""
    config: dict[str, Any] | None = None
    record_version: int = RECORD_VERSION
    timing: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def canonical(self) -> dict[str, Any]:
        out = self.to_dict()
        out.pop("timing")
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> MatchRecord:
        if data.get("record_version") != RECORD_VERSION:
            raise RecordFormatError(f"unsupported record_version {data.get('record_version')!r}")
        return cls(**data)


@dataclass(frozen=True)
class ArmSummary:
    arm: str
    wins: int = 0
    losses: int = 0
    non_conclusive: int = 0
    excluded: int = 0

    @property
    def n(self) -> int:
        return self.wins + self.losses + self.non_conclusive

    @property
    def n_matches(self) -> int:
        return self.n + self.excluded

    @property
    def win_rate(self) -> float:
        return self.wins / self.n if self.n else float("nan")


def _draw(rng: random.Random, dist: Mapping[str, float]) -> str:
    support = [(t, p) for t, p in dist.items() if p > 0]
    if len(support) == 1:
        return support[0][0]
    return rng.choices([t for t, _ in support], [p for _, p in support])[0]


def run_match(
    spec: GameSpec,
    agent_x: Agent,
    agent_y: Agent,
    seed: int,
    *,
    arm: str = "",
    index: int = 0,
    on_stage: Callable[[Any], None] | None = None,
) -> MatchRecord:
    """Play one game: X moves, Y replies, the judge rules, until a verdict or ``d`` stages."""
    started = time.perf_counter()
    type_rng = random.Random(f"{seed}:types")
    t_x, t_y = _draw(type_rng, spec.prior_x), _draw(type_rng, spec.prior_y)
    rng_x, rng_y = random.Random(f"{seed}:X"), random.Random(f"{seed}:Y")
    rec = MatchRecord(
        arm=arm, index=index, seed=seed, types={"X": t_x, "Y": t_y},
        agents={"X": agent_x.config.label, "Y": agent_y.config.label},
        deterministic=bool(
            agent_x.deterministic and agent_y.deterministic
            and getattr(spec.classifier, "deterministic", False)
        ),
    )
    state = initial_state(spec)
    bayesian = not spec.complete_information and not spec.free_text
    with llm.audit_scope() as audit:
        try:
            while not spec.is_terminal(state):
                belief = belief_from_history(spec, state) if bayesian else None
                known_y = t_y if len(spec.types_y) == 1 else None
                ctx = MoveContext(spec, state, Player.X, t_x, rng_x, belief, opponent_type=known_y)
                state = play_x(spec, state, agent_x.move(ctx))
                known_x = t_x if len(spec.types_x) == 1 else None
                ctx = MoveContext(spec, state, Player.Y, t_y, rng_y, opponent_type=known_x)
                state = reply(spec, state, agent_y.move(ctx))
                if on_stage is not None:
                    on_stage(state)
        except AbortGame:
            raise
        except VerdictGameError as exc:
            rec.status, rec.outcome = "failed", FAILED
            rec.reason = f"{type(exc).__name__}: {exc}"
        rec.audit = list(audit)
    rec.stages = [[render(s.x_move), render(s.y_move)] for s in state.stages]
    rec.verdicts = [v.value for v in state.verdicts]
    if rec.status == "ok":
        verdict = state.last_verdict
        rec.terminal_verdict = verdict.value
        rec.payoffs = {p.value: spec.u(p, t_x, t_y, verdict) for p in Player}
        if not verdict.conclusive:
            rec.outcome = NON_CONCLUSIVE
        else:
            rec.outcome = WIN if verdict is spec.desired_verdict(Player.X, t_x, t_y) else LOSS
    rec.timing = {"wall_time": time.perf_counter() - started}
    return rec


AgentFactory = Callable[[AgentConfig, Player, AgentConfig], Agent]


@dataclass
class ExperimentConfig:
    game: GameSpec
    agent_y: AgentConfig
    arms: dict[str, AgentConfig]
    n_matches: int
    base_seed: int = 0
    workers: int = 1
    agent_factory: AgentFactory | None = None
    raw: dict[str, Any] | None = None

    def __post_init__(self) -> None:
        if self.n_matches < 1:
            raise ConfigError("n_matches must be >= 1")
        if not self.arms:
            raise ConfigError("at least one arm is required")

    def build(self, cfg: AgentConfig, player: Player, opponent: AgentConfig) -> Agent:
        if self.agent_factory is not None:
            return self.agent_factory(cfg, player, opponent)
        return make_agent(cfg)


@dataclass
class ExperimentResult:
    summaries: dict[str, ArmSummary]
    records: list[MatchRecord]
    p_values: dict[tuple[str, str], float]


def summarize(records: Iterable[MatchRecord]) -> dict[str, ArmSummary]:
    counts: dict[str, dict[str, int]] = {}
    for rec in records:
        c = counts.setdefault(rec.arm, {WIN: 0, LOSS: 0, NON_CONCLUSIVE: 0, FAILED: 0})
        c[rec.outcome] += 1
    return {
        arm: ArmSummary(arm, c[WIN], c[LOSS], c[NON_CONCLUSIVE], c[FAILED]) for arm, c in counts.items()
    }


def compare_arms(a: ArmSummary, b: ArmSummary, test: str = FISHER) -> float:
    if a.n < 1 or b.n < 1:
        raise ValueError("both arms need at least one completed match")
    return p_value(a.wins, a.n, b.wins, b.n, test)


def pairwise_p_values(summaries: Mapping[str, ArmSummary], test: str = FISHER) -> dict[tuple[str, str], float]:
    names = list(summaries)
    out = {}
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            if summaries[a].n and summaries[b].n:
                out[(a, b)] = compare_arms(summaries[a], summaries[b], test)
    return out


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    digest = config_digest(cfg.raw) if cfg.raw is not None else ""
    jobs = []
    for arm, x_cfg in cfg.arms.items():
        agent_x = cfg.build(x_cfg, Player.X, cfg.agent_y)
        agent_y = cfg.build(cfg.agent_y, Player.Y, x_cfg)
        jobs += [(arm, i, agent_x, agent_y) for i in range(cfg.n_matches)]

    def play(job) -> MatchRecord:
        arm, i, ax, ay = job
        rec = run_match(cfg.game, ax, ay, cfg.base_seed + i, arm=arm, index=i)
        rec.config_digest, rec.config = digest, cfg.raw
        return rec

    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            records = list(pool.map(play, jobs))
    else:
        records = [play(j) for j in jobs]
    arm_order = {arm: k for k, arm in enumerate(cfg.arms)}
    records.sort(key=lambda r: (arm_order[r.arm], r.index))
    summaries = summarize(records)
    return ExperimentResult(summaries, records, pairwise_p_values(summaries))


def format_summary(summaries: Mapping[str, ArmSummary], p_values: Mapping[tuple[str, str], float]) -> str:
    lines = [f"{'arm':<14}{'n':>5}{'wins':>6}{'losses':>8}{'non_concl':>11}{'excluded':>10}{'win_rate':>10}"]
    for s in summaries.values():
        lines.append(
            f"{s.arm:<14}{s.n:>5}{s.wins:>6}{s.losses:>8}{s.non_conclusive:>11}{s.excluded:>10}{s.win_rate:>10.3f}"
        )
    for (a, b), p in p_values.items():
        lines.append(f"fisher_exact p({a} vs {b}) = {p:.6g}")
    return "\n".join(lines)


# --- persistence -------------------------------------------------------------


def persist(records: Iterable[MatchRecord], path: str | Path) -> None:
    """Append records as JSON lines."""
    with open(path, "a") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_dict(), sort_keys=True) + "\n")


def load(path: str | Path) -> list[MatchRecord]:
    records = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                records.append(MatchRecord.from_dict(json.loads(line)))
            except (ValueError, TypeError, RecordFormatError) as exc:
                raise RecordFormatError(f"line {lineno}: {exc}") from None
    return records


# --- config and replay -------------------------------------------------------


@dataclass
class LLMSetup:
    client: llm.ChatClient
    prompts: dict[str, Any]
    model_id: str

    def judge(self, _cfg: Mapping[str, Any]) -> llm.LLMJudge:
        return llm.LLMJudge(
            self.client, self.prompts["case_context"], self.prompts["judge"], self.model_id,
            self.prompts.get("judge_strict", ""),
        )

    def player(self, persona: str | None) -> llm.LLMPlayer:
        if persona is None or persona not in self.prompts:
            raise ConfigError(f"unknown persona {persona!r}")
        return llm.LLMPlayer(self.client, self.prompts[persona], self.model_id, self.prompts["case_context"])


def llm_setup(data: Mapping[str, Any], backend: str | None = None) -> LLMSetup | None:
    section = data.get("llm")
    if section is None:
        return None
    backend = backend or section.get("backend", "mock")
    client = llm.make_client(backend, fixture=section.get("fixture"), base_url=section.get("base_url"))
    return LLMSetup(client, llm.load_prompts(section.get("prompts")), section.get("model", llm.DEFAULT_MODEL))


def experiment_from_config(
    data: Mapping[str, Any], backend: str | None = None, seed: int | None = None
) -> ExperimentConfig:
    setup = llm_setup(data, backend)
    game = game_from_config(data, setup.judge if setup else None)
    exp = data.get("experiment")
    if not isinstance(exp, Mapping):
        raise ConfigError("config lacks an 'experiment' section")
    arms_cfg = exp.get("arms") or ({"main": exp["agent_X"]} if "agent_X" in exp else {})
    arms = {name: AgentConfig.from_dict({"name": name, **c}) for name, c in arms_cfg.items()}
    agent_y = AgentConfig.from_dict(exp.get("agent_Y") or {"kind": "naive"})

    def factory(cfg: AgentConfig, player: Player, opponent: AgentConfig) -> Agent:
        if game.free_text:
            if setup is None:
                raise ConfigError("free-text games need an 'llm' section")
            return make_agent(cfg, setup.player(cfg.persona), setup.player(opponent.persona))
        return make_agent(cfg)

    raw = dict(data)
    if seed is not None:
        raw = {**raw, "experiment": {**exp, "base_seed": seed}}
    return ExperimentConfig(
        game=game,
        agent_y=agent_y,
        arms=arms,
        n_matches=int(exp.get("n_matches", 1)),
        base_seed=int(seed if seed is not None else exp.get("base_seed", 0)),
        workers=int(exp.get("workers", 1)),
        agent_factory=factory,
        raw=raw,
    )


def replay_mismatches(record: MatchRecord, spec: GameSpec) -> list[str]:
    """Re-judge the recorded moves and list every disagreement with the record."""
    problems = []
    state = initial_state(spec)
    try:
        for k, (x, y) in enumerate(record.stages):
            pending = play_x(spec, state, utterance(x))
            judged = reply(spec, pending, utterance(y))
            recorded = Verdict.parse(record.verdicts[k]) if k < len(record.verdicts) else None
            if judged.last_verdict is not recorded:
                problems.append(
                    f"{record.arm}#{record.index} stage {k + 1}: recorded {recorded and recorded.value}, "
                    f"replay gives {judged.last_verdict.value}"
                )
            state = apply_stage(spec, state, utterance(x), utterance(y), recorded or judged.last_verdict)
    except VerdictGameError as exc:
        problems.append(f"{record.arm}#{record.index}: replay failed: {exc}")
    return problems


def rerun(record: MatchRecord, backend: str | None = None) -> MatchRecord:
    """Play ``record``'s match again from its embedded config and seed."""
    if record.config is None:
        raise RecordFormatError("record carries no config to replay")
    cfg = experiment_from_config(record.config, backend)
    x_cfg = cfg.arms[record.arm]
    agent_x = cfg.build(x_cfg, Player.X, cfg.agent_y)
    agent_y = cfg.build(cfg.agent_y, Player.Y, x_cfg)
    rec = run_match(cfg.game, agent_x, agent_y, record.seed, arm=record.arm, index=record.index)
    rec.config_digest, rec.config = record.config_digest, record.config
    return rec
