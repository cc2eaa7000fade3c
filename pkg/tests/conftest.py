from __future__ import annotations

import sys
from pathlib import Path

import pytest

from verdictgame.classifiers import AutomatonClassifier, KeywordClassifier
from verdictgame.core import MenuTable, Player, Verdict, builtin_game, utterance

sys.path.insert(0, str(Path(__file__).parent))

ROOT = Path(__file__).resolve().parent.parent
CONFIGS = ROOT / "configs"


def menu(*moves: str, after: dict[str, list[str]] | None = None, by_type=None) -> MenuTable:
    return MenuTable(
        default=tuple(utterance(m) for m in moves),
        after={utterance(k): tuple(utterance(m) for m in v) for k, v in (after or {}).items()},
        by_type=by_type or {},
    )


def q2_a1_automaton() -> AutomatonClassifier:
    """One exactly when Y answers a1 to q2 in the same stage."""
    return AutomatonClassifier(
        "idle",
        {("idle", "q2", "X"): "pressed", ("pressed", "a1", "Y"): "convicted", ("pressed", "*", "Y"): "idle"},
        {"idle": Verdict.CONT, "pressed": Verdict.CONT, "convicted": Verdict.ONE},
    )


def confess_automaton() -> AutomatonClassifier:
    return AutomatonClassifier(
        "open", {("open", "confess", "Y"): "closed"}, {"open": Verdict.CONT, "closed": Verdict.ONE}
    )


def tiny_court(d: int = 1, y_menu: MenuTable | None = None):
    menus = {Player.X: menu("q1", "q2"), Player.Y: y_menu or menu("a1", "a2")}
    return builtin_game("court", d=d, menus=menus, classifier=q2_a1_automaton())


def slip_game(x_moves=("chat", "press")):
    """Interrogation where only a guilty suspect can slip."""
    y = MenuTable(by_type={
        "Non-Guilty": menu(after={"chat": ["deny"], "press": ["alibi"]}),
        "Guilty": menu(after={"chat": ["deny", "slip"], "press": ["stammer", "slip"]}),
    })
    clf = KeywordClassifier((frozenset({"slip"}),), (frozenset({"deny"}), frozenset({"alibi"})))
    return builtin_game("interrogation", menus={Player.X: menu(*x_moves), Player.Y: y}, classifier=clf)


@pytest.fixture
def configs_dir() -> Path:
    return CONFIGS


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE_RESULTS: list[tuple[int, str, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(ACCEPTANCE_RESULTS):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {number}: {title} ({detail})")
