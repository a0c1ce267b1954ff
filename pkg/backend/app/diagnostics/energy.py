"""
Lyapunov energies along primal-dual trajectories.

E_mu(t) = t^2 xi(t) (L_rho(x_hat, mu) - L_rho(x*, mu))
        + 1/2 ||(2 alpha/3)(x - x*) + t x'||^2   + alpha(alpha-3)/9 ||x - x*||^2
        + 1/2 ||(2 alpha/3)(lam - mu) + t lam'||^2 + alpha(alpha-3)/9 ||lam - mu||^2

E^eps_mu(t) = E_mu(t) + t^2 xi(t) eps(t) / 2 ||x||^2
"""

from dataclasses import dataclass
from typing import Optional
import numpy as np

from app.core.exceptions import DimensionError, DomainError
from app.core.logging import setup_logger
from app.dynamics.schedule import CoefficientSchedule, SystemKind, beta_of_t
from app.dynamics.system import PhaseVector, extrapolated_points
from app.problems.core import Problem, aug_lagrangian_value, grad_x_aug_lagrangian, minimum_norm_solution

logger = setup_logger(__name__)


@dataclass(frozen=True)
class EnergyParams:
    """Anchor (x*, mu) and the schedule the trajectory was produced with"""
    mu: np.ndarray
    x_star: np.ndarray
    schedule: CoefficientSchedule
    
    def __post_init__(self):
        object.__setattr__(self, "mu", np.asarray(self.mu, dtype=float).reshape(-1))
        object.__setattr__(self, "x_star", np.asarray(self.x_star, dtype=float).reshape(-1))
        if self.schedule.alpha <= 3:
            logger.warning(
                f"alpha={self.schedule.alpha} <= 3: energy quadratic weights are not sign-definite"
            )
    
    @classmethod
    def from_problem(cls, p: Problem, schedule: CoefficientSchedule,
                     system: SystemKind = SystemKind.IHDTR,
                     mu: Optional[np.ndarray] = None) -> "EnergyParams":
        """Anchor at the minimum-norm solution; mu defaults to its multiplier"""
        saddle = minimum_norm_solution(p)
        return cls(mu=saddle.lam if mu is None else mu, x_star=saddle.x,
                   schedule=schedule.for_system(system))
    
    @property
    def weight_cross(self) -> float:
        """2 alpha / 3"""
        return 2.0 * self.schedule.alpha / 3.0
    
    @property
    def weight_anchor(self) -> float:
        """alpha (alpha - 3) / 9"""
        alpha = self.schedule.alpha
        return alpha * (alpha - 3.0) / 9.0


def _check(params: EnergyParams, p: Problem, Z: PhaseVector) -> None:
    if params.x_star.shape != (p.n,) or params.mu.shape != (p.m,):
        raise DimensionError("energy anchor dimensions do not match the problem")
    if Z.n != p.n or Z.m != p.m:
        raise DimensionError("phase vector dimensions do not match the problem")


def _gap_at_xhat(params: EnergyParams, p: Problem, t: float, Z: PhaseVector) -> float:
    x_hat, _, _ = extrapolated_points(params.schedule, t, Z)
    return aug_lagrangian_value(p, x_hat, params.mu) - aug_lagrangian_value(p, params.x_star, params.mu)


def energy_E_mu(params: EnergyParams, p: Problem, t: float, Z: PhaseVector) -> float:
    _check(params, p, Z)
    s = params.schedule
    c, k = params.weight_cross, params.weight_anchor
    dx = Z.x - params.x_star
    dlam = Z.lam - params.mu
    u = c * dx + t * Z.vx
    w = c * dlam + t * Z.vlam
    return float(
        t * t * s.xi.value(t) * _gap_at_xhat(params, p, t, Z)
        + 0.5 * (u @ u) + k * (dx @ dx)
        + 0.5 * (w @ w) + k * (dlam @ dlam)
    )


def tikhonov_term(params: EnergyParams, t: float, Z: PhaseVector) -> float:
    s = params.schedule
    return 0.5 * t * t * s.xi.value(t) * s.eps.value(t) * float(Z.x @ Z.x)


def energy_E_eps(params: EnergyParams, p: Problem, t: float, Z: PhaseVector) -> float:
    base = energy_E_mu(params, p, t, Z)
    if params.schedule.eps.is_zero:
        return base
    return base + tikhonov_term(params, t, Z)


def energy_derivative_analytic(params: EnergyParams, p: Problem, t: float, Z: PhaseVector,
                               rhs_value: PhaseVector, include_tikhonov: bool = True) -> float:
    """
    dE/dt by the chain rule, with Z' = rhs_value = (x', lam', x'', lam'').
    
    Adds the derivative of the Tikhonov term when include_tikhonov is set and
    eps is not identically zero (then the result is dE^eps/dt).
    """
    _check(params, p, Z)
    s = params.schedule
    try:
        xi, xi_dot = s.xi.value(t), s.xi.derivative(t)
        eps, eps_dot = s.eps.value(t), s.eps.derivative(t)
    except NotImplementedError as exc:
        raise DomainError("schedule families must provide analytic derivatives") from exc
    beta_t, beta_dot = beta_of_t(s, t)
    c, k = params.weight_cross, params.weight_anchor
    
    vx, vlam = rhs_value.x, rhs_value.lam
    ax, alam = rhs_value.vx, rhs_value.vlam
    dx = Z.x - params.x_star
    dlam = Z.lam - params.mu
    u = c * dx + t * Z.vx
    w = c * dlam + t * Z.vlam
    
    x_hat = Z.x + beta_t * Z.vx
    x_hat_dot = vx + beta_dot * Z.vx + beta_t * ax
    gap = _gap_at_xhat(params, p, t, Z)
    gap_dot = float(grad_x_aug_lagrangian(p, x_hat, params.mu) @ x_hat_dot)
    
    d_energy = (
        (2.0 * t * xi + t * t * xi_dot) * gap
        + t * t * xi * gap_dot
        + float(u @ ((c + 1.0) * vx + t * ax)) + 2.0 * k * float(dx @ vx)
        + float(w @ ((c + 1.0) * vlam + t * alam)) + 2.0 * k * float(dlam @ vlam)
    )
    if include_tikhonov and not s.eps.is_zero:
        norm_sq = float(Z.x @ Z.x)
        d_energy += 0.5 * (2.0 * t * xi * eps + t * t * xi_dot * eps + t * t * xi * eps_dot) * norm_sq
        d_energy += t * t * xi * eps * float(Z.x @ vx)
    return float(d_energy)
