"""Random small verdict games for property and oracle tests."""

from __future__ import annotations

import random

from verdictgame.classifiers import AutomatonClassifier
from verdictgame.core import GameSpec, MenuTable, Player, UtilityTable, Verdict, builtin_game

SPEAKERS = ("X", "Y")


def random_automaton(rng: random.Random, alphabet: list[str], max_states: int = 5) -> AutomatonClassifier:
    n = rng.randint(1, max_states)
    transitions = {
        (q, tok, sp): rng.randrange(n) for q in range(n) for tok in alphabet for sp in SPEAKERS
    }
    # bias towards Cont so that deeper trees actually occur
    output = {q: rng.choice([Verdict.CONT, Verdict.CONT, Verdict.ZERO, Verdict.ONE]) for q in range(n)}
    output[0] = Verdict.CONT
    return AutomatonClassifier(0, transitions, output)


def random_menus(rng: random.Random, max_menu: int = 3) -> tuple[dict[Player, MenuTable], list[str]]:
    xs = [(f"q{i}",) for i in range(rng.randint(1, max_menu))]
    ys = [(f"a{i}",) for i in range(max_menu)]
    y_after = {x: tuple(rng.sample(ys, rng.randint(1, max_menu))) for x in xs}
    x_after = {y: tuple(rng.sample(xs, rng.randint(1, len(xs)))) for y in ys if rng.random() < 0.5}
    menus = {
        Player.X: MenuTable(default=tuple(xs), after=x_after),
        Player.Y: MenuTable(default=tuple(ys[:1]), after=y_after),
    }
    alphabet = [m[0] for m in xs + ys]
    return menus, alphabet


def random_utilities(rng: random.Random) -> UtilityTable:
    return UtilityTable({(p, "-", "-", v): float(rng.randint(-2, 2)) for p in Player for v in Verdict})


def random_game(rng: random.Random, max_d: int = 3, max_menu: int = 3, court: bool = False) -> GameSpec:
    menus, alphabet = random_menus(rng, max_menu)
    clf = random_automaton(rng, alphabet)
    d = rng.randint(1, max_d)
    if court:
        return builtin_game("court", d=d, menus=menus, classifier=clf, alphabet=frozenset(alphabet))
    return GameSpec(("-",), ("-",), random_utilities(rng), l=1, d=d, alphabet=frozenset(alphabet),
                    menus=menus, classifier=clf)


def tractable_games(rng: random.Random, n: int, profile_cap: int = 20_000, **kw):
    """Yield ``n`` (spec, bruteforce result) pairs, redrawing games over the profile cap."""
    from verdictgame.solvers import ProfileCapExceeded, solve_bruteforce

    made = 0
    while made < n:
        spec = random_game(rng, **kw)
        try:
            res = solve_bruteforce(spec, profile_cap=profile_cap)
        except ProfileCapExceeded:
            continue
        made += 1
        yield spec, res


def optimal_root_moves(spec: GameSpec) -> tuple[float, list]:
    """Root value for X and every root move whose subgame value attains it."""
    from verdictgame.core import initial_state, legal_moves, play_x
    from verdictgame.solvers import solve_backward_induction

    root = initial_state(spec)
    value = solve_backward_induction(spec).values[Player.X]
    best = [
        m for m in legal_moves(spec, root, Player.X, "-")
        if solve_backward_induction(spec, root=play_x(spec, root, m)).values[Player.X] == value
    ]
    return value, best


def nontrivial_court_games(rng: random.Random, n: int, **kw):
    """Court games where some root move is strictly worse than the best one."""
    from verdictgame.core import initial_state, legal_moves

    made = 0
    while made < n:
        spec = random_game(rng, court=True, **kw)
        _, best = optimal_root_moves(spec)
        if len(best) < len(legal_moves(spec, initial_state(spec), Player.X, "-")):
            made += 1
            yield spec, best
