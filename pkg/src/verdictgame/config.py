"""YAML/JSON config files for games and classifiers.

Schema (``spec_version: 1``)::

    game:
      builtin: court | interrogation | turing     # optional base table
      types: {X: [...], Y: [...]}                  # required without builtin
      prior: {Y: {Guilty: 0.5, Non-Guilty: 0.5}}   # default uniform
      utilities: [{player, t_x, t_y, verdict, value}, ...]
      l: 1
      d: 2
      alphabet: [...]        # default: tokens appearing in menus and seed
      seed_text: ""
      free_text: false
      menus:
        X: {default: [...], after: {<move>: [...]}, by_type: {<type>: {...}}}
        Y: {...}
      classifier: <id>
    classifiers:
      <id>: {kind: constant | automaton | keyword | llm, ...}
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Callable, Mapping

import yaml

from . import classifiers as clf
from .core import (
    ConfigError,
    GameSpec,
    MenuTable,
    Player,
    UtilityTable,
    Verdict,
    builtin_game,
    render,
    utterance,
)

SPEC_VERSION = 1

ClassifierFactory = Callable[[Mapping[str, Any]], Any]


def read_config(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    text = path.read_text()
    data = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    version = data.get("spec_version", SPEC_VERSION)
    if version != SPEC_VERSION:
        raise ConfigError(f"{path}: unsupported spec_version {version}")
    return data


def _menu_from(cfg: Mapping[str, Any] | list | None) -> MenuTable:
    if cfg is None:
        return MenuTable()
    if isinstance(cfg, list):
        return MenuTable(tuple(utterance(m) for m in cfg))
    return MenuTable(
        default=tuple(utterance(m) for m in cfg.get("default", [])),
        after={utterance(k): tuple(utterance(m) for m in v) for k, v in cfg.get("after", {}).items()},
        by_type={t: _menu_from(sub) for t, sub in cfg.get("by_type", {}).items()},
    )


def _menu_to(table: MenuTable) -> dict[str, Any]:
    out: dict[str, Any] = {"default": [render(m) for m in table.default]}
    if table.after:
        out["after"] = {render(k): [render(m) for m in v] for k, v in table.after.items()}
    if table.by_type:
        out["by_type"] = {t: _menu_to(sub) for t, sub in table.by_type.items()}
    return out


def build_classifier(cfg: Mapping[str, Any], llm_factory: ClassifierFactory | None = None) -> Any:
    if cfg.get("kind") == "llm":
        if llm_factory is None:
            raise ConfigError("llm judge requested but no LLM backend configured")
        return llm_factory(cfg)
    return clf.from_config(cfg)


def game_from_config(data: Mapping[str, Any], llm_factory: ClassifierFactory | None = None) -> GameSpec:
    g = data.get("game")
    if not isinstance(g, Mapping):
        raise ConfigError("config lacks a 'game' section")
    try:
        l, d = int(g.get("l", 1)), int(g.get("d", 1))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad l/d: {exc}") from None

    if "builtin" in g:
        base = builtin_game(g["builtin"], l=l, d=d)
        types_x, types_y, table = base.types_x, base.types_y, base.utilities
    else:
        types = g.get("types") or {}
        types_x, types_y = tuple(types.get("X", ["-"])), tuple(types.get("Y", ["-"]))
        table = UtilityTable({})
    if "types" in g and "builtin" in g:
        raise ConfigError("'types' cannot override a builtin game")
    if "utilities" in g:
        entries = dict(table.entries)
        for row in g["utilities"]:
            key = (Player(row["player"]), str(row.get("t_x", "-")), str(row.get("t_y", "-")), Verdict.parse(row["verdict"]))
            entries[key] = float(row["value"])
        table = UtilityTable(entries)

    menus = {Player(p): _menu_from(m) for p, m in (g.get("menus") or {}).items()}
    seed_text = utterance(g.get("seed_text", "") or "")
    free_text = bool(g.get("free_text", False))
    if "alphabet" in g:
        alphabet = frozenset(g["alphabet"])
    elif free_text:
        alphabet = None
    else:
        alphabet = frozenset(tok for t in menus.values() for m in t.all_moves() for tok in m) | set(seed_text)

    classifier, classifier_id = None, g.get("classifier")
    if classifier_id is not None:
        registry = data.get("classifiers") or {}
        if isinstance(classifier_id, Mapping):
            classifier, classifier_id = build_classifier(classifier_id, llm_factory), "inline"
        elif classifier_id in registry:
            classifier = build_classifier(registry[classifier_id], llm_factory)
        else:
            raise ConfigError(f"classifier id {classifier_id!r} not defined")

    prior = g.get("prior") or {}
    return GameSpec(
        types_x=types_x,
        types_y=types_y,
        utilities=table,
        l=l,
        d=d,
        alphabet=alphabet,
        prior_x={str(k): float(v) for k, v in (prior.get("X") or {}).items()},
        prior_y={str(k): float(v) for k, v in (prior.get("Y") or {}).items()},
        menus=menus,
        classifier=classifier,
        classifier_id=classifier_id,
        seed_text=seed_text,
        free_text=free_text,
        name=str(g.get("name", g.get("builtin", "custom"))),
    )


def load_game(path: str | Path, llm_factory: ClassifierFactory | None = None) -> GameSpec:
    return game_from_config(read_config(path), llm_factory)


def game_to_config(spec: GameSpec) -> dict[str, Any]:
    """Encode ``spec`` (with a reference classifier) back into the config schema."""
    game: dict[str, Any] = {
        "name": spec.name,
        "types": {"X": list(spec.types_x), "Y": list(spec.types_y)},
        "prior": {"X": dict(spec.prior_x), "Y": dict(spec.prior_y)},
        "utilities": [
            {"player": p.value, "t_x": tx, "t_y": ty, "verdict": v.value, "value": val}
            for (p, tx, ty, v), val in spec.utilities.entries.items()
        ],
        "l": spec.l,
        "d": spec.d,
        "seed_text": render(spec.seed_text),
        "free_text": spec.free_text,
        "menus": {p.value: _menu_to(t) for p, t in spec.menus.items()},
    }
    if spec.alphabet is not None:
        game["alphabet"] = sorted(spec.alphabet)
    out: dict[str, Any] = {"spec_version": SPEC_VERSION, "game": game}
    if spec.classifier is not None:
        cid = spec.classifier_id or "judge"
        game["classifier"] = cid
        out["classifiers"] = {cid: clf.to_config(spec.classifier)}
    return out


def dump_game(spec: GameSpec, path: str | Path) -> None:
    Path(path).write_text(yaml.safe_dump(game_to_config(spec), sort_keys=False))
