"""
Coefficient families for the primal-dual flows.

beta(t) = gamma + beta_shift / t   (implicit Hessian damping offset)
xi(t)                                (time scaling of the gradient field)
eps(t)                               (Tikhonov regularization, nonincreasing, -> 0)
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, NamedTuple, Tuple
import math
import numpy as np

from app.core.exceptions import DomainError, NonFiniteError
from app.core.logging import setup_logger

logger = setup_logger(__name__)

ScalarFn = Callable[[float], float]

DERIVATIVE_RTOL = 1e-6


class SystemKind(str, Enum):
    """Which flow to integrate"""
    IHD = "ihd"
    IHDTR = "ihdtr"
    BASELINE = "baseline"


def _check_derivative(name: str, value_fn: ScalarFn, derivative_fn: ScalarFn,
                      t_grid: np.ndarray) -> None:
    """Compare an analytic derivative with central differences on t_grid"""
    for t in t_grid:
        h = 1e-5 * t
        fd = (value_fn(t + h) - value_fn(t - h)) / (2.0 * h)
        exact = derivative_fn(t)
        scale = max(abs(exact), abs(fd), abs(value_fn(t)) / t, 1e-12)
        if abs(fd - exact) > DERIVATIVE_RTOL * scale:
            raise DomainError(
                f"{name}: derivative mismatch at t={t:.6g} (analytic {exact:.6e}, "
                f"finite difference {fd:.6e})"
            )


# Scaling families ---------------------------------------------------------------

class ScalingFamily:
    """xi: [t0, inf) -> (0, inf) with analytic derivative"""
    
    def value(self, t: float) -> float:
        raise NotImplementedError
    
    def derivative(self, t: float) -> float:
        raise NotImplementedError
    
    def validate(self, t0: float) -> None:
        pass


@dataclass(frozen=True)
class PowerLawScaling(ScalingFamily):
    """xi(t) = c * t**p"""
    c: float = 1.0
    p: float = 0.0
    
    def __post_init__(self):
        if not self.c > 0:
            raise DomainError(f"power-law scaling needs c > 0, got {self.c}")
    
    def value(self, t: float) -> float:
        if self.p == 0.0:
            return self.c
        return self.c * t ** self.p
    
    def derivative(self, t: float) -> float:
        if self.p == 0.0:
            return 0.0
        return self.c * self.p * t ** (self.p - 1.0)


@dataclass(frozen=True)
class CustomScaling(ScalingFamily):
    value_fn: ScalarFn
    derivative_fn: ScalarFn
    
    def value(self, t: float) -> float:
        return float(self.value_fn(t))
    
    def derivative(self, t: float) -> float:
        return float(self.derivative_fn(t))
    
    def validate(self, t0: float) -> None:
        grid = np.geomspace(t0 * 1.01, t0 * 1e4, 25)
        values = [self.value(t) for t in grid]
        if min(values) <= 0:
            raise DomainError("custom scaling must be positive on [t0, inf)")
        _check_derivative("custom scaling", self.value, self.derivative, grid)


# Tikhonov families --------------------------------------------------------------

class TikhonovFamily:
    """eps: [t0, inf) -> R+, nonincreasing with eps(t) -> 0"""
    
    is_zero = False
    
    def value(self, t: float) -> float:
        raise NotImplementedError
    
    def derivative(self, t: float) -> float:
        raise NotImplementedError
    
    def validate(self, t0: float) -> None:
        pass


@dataclass(frozen=True)
class ZeroTikhonov(TikhonovFamily):
    is_zero = True
    
    def value(self, t: float) -> float:
        return 0.0
    
    def derivative(self, t: float) -> float:
        return 0.0


@dataclass(frozen=True)
class InversePowerTikhonov(TikhonovFamily):
    """eps(t) = a / t**r"""
    a: float = 1.0
    r: float = 1.5
    
    def __post_init__(self):
        if not self.a > 0:
            raise DomainError(f"inverse-power Tikhonov needs a > 0, got {self.a}")
        if self.r < 0:
            raise DomainError(f"inverse-power Tikhonov needs r >= 0, got {self.r}")
        if self.r < 1:
            logger.warning(f"Tikhonov exponent r={self.r} < 1 lies outside the usual a/t^r family")
    
    def value(self, t: float) -> float:
        return self.a * t ** (-self.r)
    
    def derivative(self, t: float) -> float:
        return -self.r * self.a * t ** (-self.r - 1.0)


@dataclass(frozen=True)
class CustomTikhonov(TikhonovFamily):
    value_fn: ScalarFn
    derivative_fn: ScalarFn
    nonincreasing: bool = True
    
    def __post_init__(self):
        if not self.nonincreasing:
            raise DomainError("Tikhonov coefficient must be nonincreasing")
    
    def value(self, t: float) -> float:
        return float(self.value_fn(t))
    
    def derivative(self, t: float) -> float:
        return float(self.derivative_fn(t))
    
    def validate(self, t0: float) -> None:
        grid = np.geomspace(t0 * 1.01, t0 * 1e4, 25)
        if any(self.value(t) < 0 for t in grid):
            raise DomainError("custom Tikhonov coefficient must be nonnegative")
        if any(self.derivative(t) > 1e-14 for t in grid):
            raise DomainError("custom Tikhonov coefficient must be nonincreasing")
        _check_derivative("custom Tikhonov", self.value, self.derivative, grid)


# Schedule -----------------------------------------------------------------------

@dataclass(frozen=True)
class CoefficientSchedule:
    """
    alpha: viscous damping numerator (alpha/t)
    gamma, beta_shift: beta(t) = gamma + beta_shift / t
    xi, eps: scaling and Tikhonov families
    t0: initial time
    """
    alpha: float
    gamma: float = 0.0
    beta_shift: float = 0.0
    xi: ScalingFamily = field(default_factory=PowerLawScaling)
    eps: TikhonovFamily = field(default_factory=ZeroTikhonov)
    t0: float = 1.0
    
    def __post_init__(self):
        if not self.alpha > 0:
            raise DomainError(f"alpha must be positive, got {self.alpha}")
        if not self.t0 > 0:
            raise DomainError(f"t0 must be positive, got {self.t0}")
        if self.gamma < 0:
            raise DomainError(f"gamma must be nonnegative, got {self.gamma}")
        if self.gamma == 0 and self.beta_shift < 0:
            raise DomainError("gamma = 0 requires beta_shift >= 0")
        self.xi.validate(self.t0)
        self.eps.validate(self.t0)
    
    def for_system(self, system: SystemKind) -> "CoefficientSchedule":
        """Schedule actually used by a system: IHD drops eps, Baseline also drops beta(t)"""
        system = SystemKind(system)
        if system is SystemKind.IHDTR:
            return self
        if system is SystemKind.IHD:
            if self.eps.is_zero:
                return self
            return replace(self, eps=ZeroTikhonov())
        if self.eps.is_zero and self.gamma == 0 and self.beta_shift == 0:
            return self
        return replace(self, gamma=0.0, beta_shift=0.0, eps=ZeroTikhonov())
    
    def check_time(self, t: float) -> float:
        if not math.isfinite(t):
            raise NonFiniteError(f"time {t} is not finite")
        if t < self.t0:
            raise DomainError(f"t={t} precedes t0={self.t0}")
        return t


def beta_of_t(s: CoefficientSchedule, t: float) -> Tuple[float, float]:
    """(beta(t), beta'(t)) = (gamma + beta/t, -beta/t^2)"""
    s.check_time(t)
    return s.gamma + s.beta_shift / t, -s.beta_shift / (t * t)


def eta_of_t(s: CoefficientSchedule, t: float) -> float:
    """eta(t) = (1 / 2 alpha) * (-alpha beta(t) + 3 t beta'(t))"""
    return coefficients_at(s, t).eta


def extrapolation_factor(s: CoefficientSchedule, t: float) -> float:
    """3 t / (2 alpha)"""
    return 3.0 * t / (2.0 * s.alpha)


class Coefficients(NamedTuple):
    """Time-dependent coefficients of the flows at one instant"""
    beta: float
    eta: float
    theta: float
    xi: float
    eps: float
    damping: float


def coefficients_at(s: CoefficientSchedule, t: float) -> Coefficients:
    beta_t, beta_dot = beta_of_t(s, t)
    return Coefficients(
        beta=beta_t,
        eta=(-s.alpha * beta_t + 3.0 * t * beta_dot) / (2.0 * s.alpha),
        theta=extrapolation_factor(s, t),
        xi=s.xi.value(t),
        eps=s.eps.value(t),
        damping=s.alpha / t,
    )
