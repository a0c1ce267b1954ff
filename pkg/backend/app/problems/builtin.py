"""
Built-in test problems used by the shipped experiments.
"""

from typing import Dict, Callable
import numpy as np

from app.core.exceptions import DomainError
from app.problems.core import LinearConstraint, Problem
from app.problems.objectives import QuadraticObjective, RankOneSquaredObjective


def toy_problem(m: float = 5.0, n: float = 10.0, e: float = 6.0, rho: float = 1.0) -> Problem:
    """
    min (m x1 + n x2 + e x3)^2  s.t.  m x1 - n x2 + e x3 = 0.
    
    Solution set {(x1, 0, -m x1 / e)}, minimum-norm solution 0, multiplier 0.
    """
    if 0.0 in (m, n, e):
        raise DomainError("toy problem requires nonzero m, n, e")
    objective = RankOneSquaredObjective([m, n, e])
    constraint = LinearConstraint([[m, -n, e]], [0.0])
    return Problem(objective, constraint, rho=rho,
                   known_saddle=(np.zeros(3), np.zeros(1)),
                   name=f"toy(m={m:g},n={n:g},e={e:g})")


def kkt_example(rho: float = 1.0) -> Problem:
    """min 0.5||x||^2 s.t. x1 + x2 = 2; saddle point ((1, 1), -1)"""
    objective = QuadraticObjective(np.eye(2))
    constraint = LinearConstraint([[1.0, 1.0]], [2.0])
    return Problem(objective, constraint, rho=rho,
                   known_saddle=(np.ones(2), -np.ones(1)),
                   name="kkt_example")


BUILTIN_PROBLEMS: Dict[str, Callable[..., Problem]] = {
    "toy": toy_problem,
    "kkt_example": kkt_example,
}
