"""Warm-starting exact bipartite matching solvers with learned dual prices."""

from dualwarm.bmatching import BInstance, solve_mwbm
from dualwarm.feasibility import project_b_duals, project_duals
from dualwarm.graph import (
    BipartiteInstance,
    DualVector,
    InfeasibleDualError,
    InfeasibleInstanceError,
    Matching,
)
from dualwarm.hungarian import solve_mwpm
from dualwarm.learning import erm_median, optimal_dual

__all__ = [
    "BInstance",
    "BipartiteInstance",
    "DualVector",
    "InfeasibleDualError",
    "InfeasibleInstanceError",
    "Matching",
    "erm_median",
    "optimal_dual",
    "project_b_duals",
    "project_duals",
    "solve_mwbm",
    "solve_mwpm",
]
