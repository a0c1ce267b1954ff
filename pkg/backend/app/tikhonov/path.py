"""
Tikhonov path x_eps = argmin L_rho(x, lam*) + (eps/2)||x||^2.

Optimality: grad_x L_rho(x_eps, lam*) + eps x_eps = 0. Monotonicity of
grad_x L_rho(., lam*) gives ||x_eps|| <= ||x*|| for every eps > 0, and
x_eps -> x* (the minimum-norm solution) as eps -> 0.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence
import numpy as np
from scipy import linalg

from app.core.exceptions import ConvergenceError, DomainError
from app.core.logging import setup_logger
from app.problems.core import Problem, grad_x_aug_lagrangian, minimum_norm_solution

logger = setup_logger(__name__)

MIN_EPS = 1e-12
RESIDUAL_TOL = 1e-8
MAX_ITERATIONS = 1_000_000
NORM_SLACK = 1e-10


@dataclass(frozen=True)
class PathPoint:
    eps: float
    x_eps: np.ndarray
    residual: float
    
    @property
    def norm(self) -> float:
        return float(linalg.norm(self.x_eps))


def _residual(p: Problem, lam_star: np.ndarray, eps: float, x: np.ndarray) -> float:
    return float(linalg.norm(grad_x_aug_lagrangian(p, x, lam_star) + eps * x))


def tikhonov_point(p: Problem, lam_star: np.ndarray, eps: float,
                   x_start: Optional[np.ndarray] = None) -> PathPoint:
    """
    Solve grad_x L_rho(x, lam*) + eps x = 0.
    
    Quadratic variants: Cholesky solve of (H + rho A^T A + eps I) x = -(q + A^T lam* - rho A^T b).
    Callback variants: gradient descent with step 1 / (L_f + rho ||A||^2 + eps).
    """
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps}")
    if eps < MIN_EPS:
        raise DomainError(f"eps={eps:g} below the conditioning floor {MIN_EPS:g}")
    lam_star = p.check_lam(lam_star)
    A, b, rho = p.A, p.b, p.rho
    objective = p.objective
    
    if objective.is_quadratic:
        H = objective.hessian() + rho * (A.T @ A) + eps * np.eye(p.n)
        rhs = -(objective.linear_term() + A.T @ lam_star - rho * (A.T @ b))
        factor = linalg.cho_factor(H)
        x = linalg.cho_solve(factor, rhs)
        # one refinement step keeps the residual at round-off level
        x = x + linalg.cho_solve(factor, rhs - H @ x)
        return PathPoint(float(eps), x, _residual(p, lam_star, eps, x))
    
    lipschitz = getattr(objective, "lipschitz", None)
    if lipschitz is None:
        raise DomainError("callback objective needs a declared Lipschitz bound for the Tikhonov path")
    step = 1.0 / (lipschitz + rho * linalg.norm(A, 2) ** 2 + eps)
    x = np.zeros(p.n) if x_start is None else p.check_x(x_start).copy()
    for iteration in range(MAX_ITERATIONS):
        g = grad_x_aug_lagrangian(p, x, lam_star) + eps * x
        residual = float(linalg.norm(g))
        if residual <= RESIDUAL_TOL:
            logger.debug(f"Tikhonov point eps={eps:g} converged in {iteration} iterations")
            return PathPoint(float(eps), x, residual)
        x = x - step * g
    raise ConvergenceError(f"gradient descent for eps={eps:g} did not converge in {MAX_ITERATIONS} iterations")


def path_scan(p: Problem, lam_star: Optional[np.ndarray], eps_grid: Sequence[float]) -> List[PathPoint]:
    """
    Tikhonov points along a strictly decreasing eps grid, anchored at the
    least-norm multiplier when lam_star is None. Invariant violations are logged.
    """
    grid = [float(e) for e in eps_grid]
    if any(e <= 0 for e in grid):
        raise DomainError("eps grid must be positive")
    if any(b >= a for a, b in zip(grid, grid[1:])):
        raise DomainError("eps grid must be strictly decreasing")
    if not grid:
        return []
    
    saddle = minimum_norm_solution(p)
    lam = saddle.lam if lam_star is None else p.check_lam(lam_star)
    x_star_norm = float(linalg.norm(saddle.x))
    
    points: List[PathPoint] = []
    previous_error = np.inf
    for eps in grid:
        start = points[-1].x_eps if points else None
        point = tikhonov_point(p, lam, eps, x_start=start)
        points.append(point)
        if point.residual > RESIDUAL_TOL:
            logger.warning(f"eps={eps:g}: residual {point.residual:.3e} above {RESIDUAL_TOL:g}")
        if point.norm > x_star_norm + NORM_SLACK:
            logger.warning(f"eps={eps:g}: ||x_eps||={point.norm:.12g} exceeds ||x*||={x_star_norm:.12g}")
        error = float(linalg.norm(point.x_eps - saddle.x))
        if p.objective.is_quadratic and error > previous_error + NORM_SLACK:
            logger.warning(f"eps={eps:g}: distance to x* increased along the path")
        previous_error = error
    logger.info(f"Tikhonov path: {len(points)} points, final eps={grid[-1]:g}")
    return points
