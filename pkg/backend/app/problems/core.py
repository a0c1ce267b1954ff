"""
Linear-equality-constrained convex problem: min f(x) s.t. Ax = b.
Augmented Lagrangian L_rho(x, lam) = f(x) + <lam, Ax - b> + (rho/2)||Ax - b||^2,
its gradients, feasibility and gap metrics, and the minimum-norm solution oracle.
"""

from dataclasses import dataclass
from typing import Optional, Tuple
import numpy as np
from scipy import linalg

from app.core.exceptions import (
    DimensionError,
    DomainError,
    SaddlePointError,
    UnboundedProblemError,
    ensure_finite,
)
from app.core.logging import setup_logger
from app.problems.objectives import ConvexObjective

logger = setup_logger(__name__)


class LinearConstraint:
    """Ax = b with A dense (m x n)"""
    
    def __init__(self, A, b):
        A = np.array(A, dtype=float, ndmin=2)
        b = np.array(b, dtype=float).reshape(-1)
        if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
            raise DimensionError(f"A must be a non-empty matrix, got shape {A.shape}")
        if b.shape != (A.shape[0],):
            raise DimensionError(f"b must have length {A.shape[0]}, got {b.shape}")
        if not np.any(A):
            raise DomainError("A must have at least one nonzero entry")
        ensure_finite(A, "A")
        ensure_finite(b, "b")
        A.setflags(write=False)
        b.setflags(write=False)
        self.A = A
        self.b = b
    
    @property
    def m(self) -> int:
        return self.A.shape[0]
    
    @property
    def n(self) -> int:
        return self.A.shape[1]
    
    def residual(self, x: np.ndarray) -> np.ndarray:
        return self.A @ x - self.b


@dataclass(frozen=True)
class SaddlePoint:
    """Primal-dual optimal pair (x*, lam*)"""
    x: np.ndarray
    lam: np.ndarray


class Problem:
    """
    Objective, constraint and penalty rho, with an optional known saddle point.
    
    A declared saddle point is validated on construction:
    ||grad f(x*) + A^T lam*|| <= 1e-8 and ||A x* - b|| <= 1e-10.
    """
    
    STATIONARITY_TOL = 1e-8
    FEASIBILITY_TOL = 1e-10
    
    def __init__(self, objective: ConvexObjective, constraint: LinearConstraint,
                 rho: float = 1.0, known_saddle: Optional[Tuple] = None,
                 name: str = "problem"):
        if objective.dim != constraint.n:
            raise DimensionError(
                f"objective dimension {objective.dim} != constraint columns {constraint.n}"
            )
        if rho < 0 or not np.isfinite(rho):
            raise DomainError(f"rho must be a finite nonnegative number, got {rho}")
        self.objective = objective
        self.constraint = constraint
        self.rho = float(rho)
        self.name = name
        self.known_saddle: Optional[SaddlePoint] = None
        if known_saddle is not None:
            x_star, lam_star = known_saddle
            self.known_saddle = self._validate_saddle(x_star, lam_star)
    
    @property
    def n(self) -> int:
        return self.constraint.n
    
    @property
    def m(self) -> int:
        return self.constraint.m
    
    @property
    def A(self) -> np.ndarray:
        return self.constraint.A
    
    @property
    def b(self) -> np.ndarray:
        return self.constraint.b
    
    def _validate_saddle(self, x_star, lam_star) -> SaddlePoint:
        x_star = self.check_x(x_star)
        lam_star = self.check_lam(lam_star)
        stationarity = linalg.norm(self.objective.gradient(x_star) + self.A.T @ lam_star)
        feasibility = linalg.norm(self.constraint.residual(x_star))
        if stationarity > self.STATIONARITY_TOL or feasibility > self.FEASIBILITY_TOL:
            raise SaddlePointError(
                f"declared saddle point fails KKT: stationarity={stationarity:.3e}, "
                f"feasibility={feasibility:.3e}"
            )
        x_star.setflags(write=False)
        lam_star.setflags(write=False)
        return SaddlePoint(x=x_star, lam=lam_star)
    
    def check_x(self, x) -> np.ndarray:
        x = np.array(x, dtype=float).reshape(-1)
        if x.shape != (self.n,):
            raise DimensionError(f"expected x of length {self.n}, got {x.shape}")
        return x
    
    def check_lam(self, lam) -> np.ndarray:
        lam = np.array(lam, dtype=float).reshape(-1)
        if lam.shape != (self.m,):
            raise DimensionError(f"expected lambda of length {self.m}, got {lam.shape}")
        return lam
    
    def with_saddle(self, x_star, lam_star) -> "Problem":
        """Copy of this problem carrying the given saddle point"""
        return Problem(self.objective, self.constraint, self.rho,
                       known_saddle=(x_star, lam_star), name=self.name)


def objective_gradient(p: Problem, x: np.ndarray) -> np.ndarray:
    """grad f(x) for any objective variant"""
    return p.objective.gradient(p.check_x(x))


def grad_x_aug_lagrangian(p: Problem, x: np.ndarray, lam: np.ndarray,
                          validate: bool = True) -> np.ndarray:
    """
    grad_x L_rho(x, lam) = grad f(x) + A^T lam + rho A^T (Ax - b)
    
    validate=False skips the dimension checks (right-hand side evaluation).
    """
    if validate:
        x = p.check_x(x)
        lam = p.check_lam(lam)
    return p.objective.gradient(x) + p.A.T @ (lam + p.rho * p.constraint.residual(x))


def grad_lam_aug_lagrangian(p: Problem, x: np.ndarray, validate: bool = True) -> np.ndarray:
    """grad_lam L_rho(x, lam) = Ax - b (L_rho is affine in lam)"""
    return p.constraint.residual(p.check_x(x) if validate else x)


def aug_lagrangian_value(p: Problem, x: np.ndarray, lam: np.ndarray) -> float:
    x = p.check_x(x)
    lam = p.check_lam(lam)
    r = p.constraint.residual(x)
    return float(p.objective.value(x) + lam @ r + 0.5 * p.rho * (r @ r))


def feasibility(p: Problem, x: np.ndarray) -> float:
    """||Ax - b||"""
    return float(linalg.norm(p.constraint.residual(p.check_x(x))))


def _require_saddle(p: Problem) -> SaddlePoint:
    if p.known_saddle is None:
        raise SaddlePointError(f"problem '{p.name}' has no known saddle point")
    return p.known_saddle


def primal_dual_gap(p: Problem, x: np.ndarray, lam_ref: Optional[np.ndarray] = None) -> float:
    """L_rho(x, lam*) - L_rho(x*, lam*); lam_ref defaults to the known lam*"""
    saddle = _require_saddle(p)
    lam = saddle.lam if lam_ref is None else lam_ref
    return aug_lagrangian_value(p, x, lam) - aug_lagrangian_value(p, saddle.x, lam)


def objective_residual(p: Problem, x: np.ndarray) -> float:
    """|f(x) - f(x*)|"""
    saddle = _require_saddle(p)
    return abs(p.objective.value(p.check_x(x)) - p.objective.value(saddle.x))


def minimum_norm_solution(p: Problem) -> SaddlePoint:
    """
    Least-norm primal solution and least-norm multiplier.
    
    For quadratic variants the KKT system
        [H  A^T] [x  ]   [-q]
        [A   0 ] [lam] = [ b]
    is solved in the least-squares sense. The primal solution set is
    x_p + (null(H) ∩ null(A)) and the dual set is lam_p + null(A^T), so both
    least-norm elements are orthogonal projections of a particular solution.
    Callback objectives fall back to the declared saddle point.
    
    Raises:
        UnboundedProblemError: KKT system inconsistent (unbounded below or infeasible)
        SaddlePointError: callback objective without a declared saddle point
    """
    objective = p.objective
    if not objective.is_quadratic:
        saddle = _require_saddle(p)
        logger.info(f"{p.name}: callback objective, using declared saddle point")
        return saddle
    
    n, m = p.n, p.m
    if n > 2000 or m > 2000:
        raise DomainError(f"dense KKT oracle limited to n, m <= 2000 (got n={n}, m={m})")
    
    H = objective.hessian()
    q = objective.linear_term()
    A, b = p.A, p.b
    K = np.block([[H, A.T], [A, np.zeros((m, m))]])
    rhs = np.concatenate([-q, b])
    sol, _, _, _ = linalg.lstsq(K, rhs)
    
    scale = max(1.0, linalg.norm(K, 2) * linalg.norm(sol), linalg.norm(rhs))
    residual = linalg.norm(K @ sol - rhs)
    if residual > 1e-8 * scale:
        raise UnboundedProblemError(
            f"{p.name}: KKT system is inconsistent (residual {residual:.3e}); "
            "objective unbounded below on the feasible set or constraints infeasible"
        )
    
    x_p, lam_p = sol[:n], sol[n:]
    primal_null = linalg.null_space(np.vstack([H, A]))
    x_star = x_p - primal_null @ (primal_null.T @ x_p)
    dual_null = linalg.null_space(A.T)
    lam_star = lam_p - dual_null @ (dual_null.T @ lam_p)
    
    logger.debug(f"{p.name}: min-norm solution ||x*||={linalg.norm(x_star):.6g}, "
                 f"primal null dim={primal_null.shape[1]}, dual null dim={dual_null.shape[1]}")
    
    # Re-validate through the Problem invariants
    return p.with_saddle(x_star, lam_star).known_saddle
