"""Command-line entry point: ``verdictgame {solve,simulate,play,analyze,replicate-court}``.

Exit codes: 0 success, 1 usage or config error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

import yaml

from . import harness
from .agents import AbortGame, AgentConfig, HumanPolicy, make_agent
from .config import game_from_config, read_config
from .core import ConfigError, Player, VerdictGameError, initial_state, render
from .solvers import NO_PURE_PBE, SolverError, ismcts, mcts, solve_backward_induction, solve_bruteforce

log = logging.getLogger("verdictgame")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


def _write(path: str | None, text: str) -> None:
    if path:
        Path(path).write_text(text)


def cmd_solve(args: argparse.Namespace) -> int:
    data = read_config(args.config)
    setup = harness.llm_setup(data, args.backend)
    spec = game_from_config(data, setup.judge if setup else None)
    opts = data.get("solve") or {}
    engine = args.engine or opts.get("engine", "exact")
    seed = args.seed if args.seed is not None else int(opts.get("seed", 0))
    iterations = args.iterations or int(opts.get("iterations", 1000))
    root = initial_state(spec)
    if engine in ("exact", "bruteforce"):
        if engine == "exact" and spec.complete_information:
            res = solve_backward_induction(spec, node_budget=int(opts.get("node_budget", 10**6)))
        else:
            res = solve_bruteforce(spec, profile_cap=int(opts.get("profile_cap", 10**6)))
        report = res.report()
        _write(args.out, json.dumps(report, indent=2))
        if res.status == NO_PURE_PBE:
            print(NO_PURE_PBE)
            return EXIT_RUNTIME
        for player, value in res.values.items():
            print(f"value {player.value}: {value:g}")
        return EXIT_OK
    if engine == "mcts":
        out = mcts(spec, root, iterations, seed=seed)
    elif engine == "ismcts":
        out = ismcts(spec, root, dict(spec.prior_y), iterations, seed=seed)
    else:
        raise ConfigError(f"unknown engine {engine!r}")
    report = {
        "engine": engine,
        "iterations": iterations,
        "seed": seed,
        "chosen": render(out.chosen),
        "root_stats": [{"action": render(s.action), "visits": s.visits, "mean": s.mean} for s in out.root_stats],
    }
    _write(args.out, json.dumps(report, indent=2))
    print(f"chosen: {render(out.chosen)}")
    for s in out.root_stats:
        print(f"  {render(s.action):<30} visits={s.visits:<7} mean={s.mean:+.4f}")
    return EXIT_OK


def _run_and_report(data: dict[str, Any], args: argparse.Namespace) -> int:
    cfg = harness.experiment_from_config(data, args.backend, args.seed)
    result = harness.run_experiment(cfg)
    text = harness.format_summary(result.summaries, result.p_values)
    print(text)
    if args.out:
        out = Path(args.out)
        if out.exists():
            out.unlink()
        harness.persist(result.records, out)
        Path(f"{out}.summary.txt").write_text(text + "\n")
    failed = [r for r in result.records if r.status != "ok"]
    for rec in failed:
        log.warning("match %s#%d excluded: %s", rec.arm, rec.index, rec.reason)
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    return _run_and_report(read_config(args.config), args)


def cmd_replicate_court(args: argparse.Namespace) -> int:
    if args.config:
        data = read_config(args.config)
    else:
        text = resources.files("verdictgame").joinpath("fixtures/court/replicate_court.yaml").read_text()
        data = yaml.safe_load(text)
    if args.n is not None:
        data["experiment"]["n_matches"] = args.n
    return _run_and_report(data, args)


def cmd_play(args: argparse.Namespace, read=input, write=print) -> int:
    data = read_config(args.config)
    cfg = harness.experiment_from_config(data, args.backend, args.seed)
    x_cfg = next(iter(cfg.arms.values()))
    human = HumanPolicy(read, write)
    if "human" not in (x_cfg.kind, cfg.agent_y.kind):
        raise ConfigError("play needs one agent of kind 'human'")

    def build(c: AgentConfig, player: Player, other: AgentConfig):
        return make_agent(c, human=human) if c.kind == "human" else cfg.build(c, player, other)

    agent_x, agent_y = build(x_cfg, Player.X, cfg.agent_y), build(cfg.agent_y, Player.Y, x_cfg)

    def show(state) -> None:
        st = state.stages[-1]
        write(f"X: {render(st.x_move)}")
        write(f"Y: {render(st.y_move)}")
        write(f"   judge: {state.last_verdict.value}")

    try:
        rec = harness.run_match(cfg.game, agent_x, agent_y, cfg.base_seed, arm=x_cfg.label, on_stage=show)
    except AbortGame as exc:
        write(f"aborted ({exc})")
        return EXIT_OK
    if rec.status != "ok":
        write(f"match failed: {rec.reason}")
        return EXIT_RUNTIME
    write(f"verdict: {rec.terminal_verdict}")
    write("payoffs: " + ", ".join(f"{p}={v:g}" for p, v in rec.payoffs.items()))
    return EXIT_OK


def cmd_analyze(args: argparse.Namespace) -> int:
    records = harness.load(args.records)
    summaries = harness.summarize(records)
    print(harness.format_summary(summaries, harness.pairwise_p_values(summaries)))
    warnings = 0
    specs: dict[str, Any] = {}
    for rec in records:
        if not rec.deterministic or rec.config is None or rec.status != "ok":
            continue
        if rec.config_digest not in specs:
            cfg = harness.experiment_from_config(rec.config, args.backend)
            specs[rec.config_digest] = cfg.game
        for problem in harness.replay_mismatches(rec, specs[rec.config_digest]):
            print(f"WARNING replay mismatch: {problem}", file=sys.stderr)
            warnings += 1
    if warnings:
        print(f"{warnings} replay mismatch(es)", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="verdictgame", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, config_required: bool = True) -> None:
        p.add_argument("--config", required=config_required)
        p.add_argument("--out")
        p.add_argument("--seed", type=int)
        p.add_argument("--backend", choices=("mock", "live"))
        p.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS)

    p = sub.add_parser("solve", help="solve a game exactly or by search")
    common(p)
    p.add_argument("--engine", choices=("exact", "bruteforce", "mcts", "ismcts"))
    p.add_argument("--iterations", type=int)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("simulate", help="run an experiment config")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("play", help="play interactively against a configured agent")
    common(p)
    p.set_defaults(func=cmd_play)

    p = sub.add_parser("analyze", help="recompute summaries from a records file")
    p.add_argument("records")
    p.add_argument("--backend", choices=("mock", "live"))
    p.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("replicate-court", help="strategic vs naive prosecutor, court fixtures")
    common(p, config_required=False)
    p.add_argument("--n", type=int, help="matches per arm (default 100)")
    p.set_defaults(func=cmd_replicate_court)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename or exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, yaml.YAMLError, KeyError, ValueError) as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SolverError, VerdictGameError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
