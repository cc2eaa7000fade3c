from .belief import Belief, belief_from_history, check_belief, uniform_menu_policy, update_belief
from .common import (
    NO_PURE_PBE,
    DecisionPoint,
    NodeBudgetExceeded,
    ProfileCapExceeded,
    SolveResult,
    SolverError,
    step,
)
from .exact import solve_backward_induction, solve_bruteforce
from .search import ActionStats, SearchResult, ismcts, mcts

__all__ = [
    "ActionStats",
    "Belief",
    "DecisionPoint",
    "NO_PURE_PBE",
    "NodeBudgetExceeded",
    "ProfileCapExceeded",
    "SearchResult",
    "SolveResult",
    "SolverError",
    "belief_from_history",
    "check_belief",
    "ismcts",
    "mcts",
    "solve_backward_induction",
    "solve_bruteforce",
    "step",
    "uniform_menu_policy",
    "update_belief",
]
