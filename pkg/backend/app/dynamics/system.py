"""
Right-hand side F(t, Z) of the first-order reformulation Z' = F(t, Z),
Z = (x, lam, x', lam'), for the IHD, IHDTR and Baseline flows:

    x''   = -(alpha/t) x'   - xi(t) [grad_x L_rho(x_hat, lam_bar) + eps(t) x]
    lam'' = -(alpha/t) lam' + xi(t) [(A x_bar - b) + eta(t) A x'
                                     - (3/2alpha) t xi(t) beta(t) A (grad_x L_rho(x_hat, lam_bar) + eps(t) x)]

with x_hat = x + beta(t) x', (x_bar, lam_bar) = (x, lam) + (3/2alpha) t (x', lam').
"""

from dataclasses import dataclass
from typing import Callable, Tuple
import numpy as np

from app.core.exceptions import DimensionError, NonFiniteError
from app.dynamics.schedule import (
    CoefficientSchedule,
    Coefficients,
    SystemKind,
    coefficients_at,
)
from app.problems.core import Problem, grad_lam_aug_lagrangian, grad_x_aug_lagrangian

FlatRHS = Callable[[float, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class PhaseVector:
    """Z = (x, lam, x', lam')"""
    x: np.ndarray
    lam: np.ndarray
    vx: np.ndarray
    vlam: np.ndarray
    
    def __post_init__(self):
        for name in ("x", "lam", "vx", "vlam"):
            value = np.asarray(getattr(self, name), dtype=float).reshape(-1)
            if not np.all(np.isfinite(value)):
                raise NonFiniteError(f"phase vector component {name} is not finite")
            object.__setattr__(self, name, value)
        if self.x.shape != self.vx.shape or self.lam.shape != self.vlam.shape:
            raise DimensionError("position and velocity blocks must have equal lengths")
    
    @property
    def n(self) -> int:
        return self.x.size
    
    @property
    def m(self) -> int:
        return self.lam.size
    
    def pack(self) -> np.ndarray:
        return np.concatenate([self.x, self.lam, self.vx, self.vlam])
    
    @classmethod
    def unpack(cls, z: np.ndarray, n: int, m: int) -> "PhaseVector":
        z = np.asarray(z, dtype=float)
        if z.shape != (2 * (n + m),):
            raise DimensionError(f"flat state has shape {z.shape}, expected ({2 * (n + m)},)")
        return cls(z[:n], z[n:n + m], z[n + m:2 * n + m], z[2 * n + m:])
    
    @classmethod
    def at_rest(cls, x, lam) -> "PhaseVector":
        x = np.asarray(x, dtype=float)
        lam = np.asarray(lam, dtype=float)
        return cls(x, lam, np.zeros_like(x), np.zeros_like(lam))


def _extrapolate(c: Coefficients, x: np.ndarray, lam: np.ndarray, vx: np.ndarray,
                 vlam: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    return x + c.beta * vx, x + c.theta * vx, lam + c.theta * vlam


def extrapolated_points(s: CoefficientSchedule, t: float,
                        Z: PhaseVector) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(x_hat, x_bar, lam_bar)"""
    return _extrapolate(coefficients_at(s, t), Z.x, Z.lam, Z.vx, Z.vlam)


def _accelerations(s: CoefficientSchedule, p: Problem, t: float, x: np.ndarray,
                   lam: np.ndarray, vx: np.ndarray, vlam: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    c = coefficients_at(s, t)
    x_hat, x_bar, lam_bar = _extrapolate(c, x, lam, vx, vlam)
    
    g = grad_x_aug_lagrangian(p, x_hat, lam_bar, validate=False)
    if c.eps != 0.0:
        g = g + c.eps * x
    
    ax = -c.damping * vx - c.xi * g
    alam = -c.damping * vlam + c.xi * (
        grad_lam_aug_lagrangian(p, x_bar, validate=False)
        + p.A @ (c.eta * vx - (c.theta * c.xi * c.beta) * g)
    )
    return ax, alam


def rhs(s: CoefficientSchedule, p: Problem, system: SystemKind, t: float,
        Z: PhaseVector) -> PhaseVector:
    """F(t, Z) as a phase-vector derivative (x', lam', x'', lam'')"""
    if Z.n != p.n or Z.m != p.m:
        raise DimensionError(f"state dimensions ({Z.n}, {Z.m}) do not match problem ({p.n}, {p.m})")
    ax, alam = _accelerations(s.for_system(system), p, t, Z.x, Z.lam, Z.vx, Z.vlam)
    if not (np.all(np.isfinite(ax)) and np.all(np.isfinite(alam))):
        raise NonFiniteError(f"right-hand side is not finite at t={t}")
    return PhaseVector(Z.vx, Z.vlam, ax, alam)


def make_rhs(s: CoefficientSchedule, p: Problem, system: SystemKind) -> FlatRHS:
    """
    Flat-array form f(t, z) of F for the integrators.
    
    Finiteness of the result is left to the integrator.
    """
    effective = s.for_system(system)
    n, m = p.n, p.m
    lam_end, vx_end, total = n + m, 2 * n + m, 2 * (n + m)
    
    def f(t: float, z: np.ndarray) -> np.ndarray:
        if z.shape != (total,):
            raise DimensionError(f"flat state has shape {z.shape}, expected ({total},)")
        vx, vlam = z[lam_end:vx_end], z[vx_end:]
        ax, alam = _accelerations(effective, p, t, z[:n], z[n:lam_end], vx, vlam)
        return np.concatenate([vx, vlam, ax, alam])
    
    return f
