"""
Explicit Runge-Kutta integrators for Z' = F(t, Z).

AdaptiveBS23: Bogacki-Shampine 3(2) pair with FSAL (the pair behind MATLAB's ode23).
FixedRK4: classic fourth-order method with a fixed step, used for cross-validation.
Output is sampled on a regular grid by cubic Hermite interpolation between steps.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple, Union
import math
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.integrate import solve_ivp

from app.core.config import get_settings
from app.core.exceptions import (
    DomainError,
    InsufficientDataError,
    IntegrationError,
    NonFiniteError,
    StepUnderflowError,
)
from app.core.logging import setup_logger
from app.dynamics.system import PhaseVector

logger = setup_logger(__name__)

FlatRHS = Callable[[float, np.ndarray], np.ndarray]


class IntegrationMethod(str, Enum):
    ADAPTIVE_BS23 = "bs23"
    FIXED_RK4 = "rk4"


class IntegratorConfig(BaseModel):
    """Step control and output sampling for one integration"""
    model_config = ConfigDict(frozen=True, extra="forbid")
    
    method: IntegrationMethod = IntegrationMethod.ADAPTIVE_BS23
    rtol: float = Field(default_factory=lambda: get_settings().DEFAULT_RTOL, gt=0)
    atol: float = Field(default_factory=lambda: get_settings().DEFAULT_ATOL, gt=0)
    h_init: float = Field(default_factory=lambda: get_settings().DEFAULT_H_INIT, gt=0)
    h_min: float = Field(default=1e-12, gt=0)
    h_max: float = Field(default=1.0, gt=0)
    t_end: float
    sample_every: float = Field(default_factory=lambda: get_settings().DEFAULT_SAMPLE_EVERY, gt=0)
    # BS23 only: False steps with fixed h_init (order studies)
    adaptive: bool = True
    
    @model_validator(mode="after")
    def _check_steps(self):
        if not (self.h_min <= self.h_init <= self.h_max):
            raise ValueError(
                f"need h_min <= h_init <= h_max, got {self.h_min}, {self.h_init}, {self.h_max}"
            )
        return self
    
    @property
    def is_adaptive(self) -> bool:
        return self.method is IntegrationMethod.ADAPTIVE_BS23 and self.adaptive


@dataclass
class StepStats:
    accepted: int = 0
    rejected: int = 0
    min_h: float = math.inf
    max_h: float = 0.0
    
    def record(self, h: float) -> None:
        self.accepted += 1
        self.min_h = min(self.min_h, h)
        self.max_h = max(self.max_h, h)


@dataclass
class Trajectory:
    """
    Sampled solution. states[i] is the flat phase vector at times[i];
    layout=(n, m) when the states are primal-dual phase vectors.
    """
    times: np.ndarray
    states: np.ndarray
    step_stats: StepStats = field(default_factory=StepStats)
    layout: Optional[Tuple[int, int]] = None
    complete: bool = True
    
    def __len__(self) -> int:
        return len(self.times)
    
    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]
    
    def phase(self, i: int) -> PhaseVector:
        if self.layout is None:
            raise DomainError("trajectory has no phase-vector layout")
        n, m = self.layout
        return PhaseVector.unpack(self.states[i], n, m)
    
    def phases(self):
        for i in range(len(self)):
            yield self.times[i], self.phase(i)


# Butcher tableaux -----------------------------------------------------------------

BS23_C = (0.0, 0.5, 0.75, 1.0)
BS23_B3 = (2.0 / 9.0, 1.0 / 3.0, 4.0 / 9.0, 0.0)
BS23_B2 = (7.0 / 24.0, 1.0 / 4.0, 1.0 / 3.0, 1.0 / 8.0)
BS23_E = tuple(b3 - b2 for b3, b2 in zip(BS23_B3, BS23_B2))

SAFETY = 0.9
MAX_GROWTH = 5.0
BLOW_UP_RATIO = 1e8


def _bs23_step(f: FlatRHS, t: float, z: np.ndarray, h: float,
               k1: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One BS23 step; returns (z_new, f(t+h, z_new), error vector)"""
    k2 = f(t + BS23_C[1] * h, z + (0.5 * h) * k1)
    k3 = f(t + BS23_C[2] * h, z + (0.75 * h) * k2)
    z_new = z + (h * BS23_B3[0]) * k1 + (h * BS23_B3[1]) * k2 + (h * BS23_B3[2]) * k3
    k4 = f(t + h, z_new)
    err = (h * BS23_E[0]) * k1 + (h * BS23_E[1]) * k2 + (h * BS23_E[2]) * k3 + (h * BS23_E[3]) * k4
    return z_new, k4, err


def _rk4_step(f: FlatRHS, t: float, z: np.ndarray, h: float,
              k1: np.ndarray) -> Tuple[np.ndarray, np.ndarray, None]:
    k2 = f(t + 0.5 * h, z + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, z + 0.5 * h * k2)
    k4 = f(t + h, z + h * k3)
    z_new = z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return z_new, f(t + h, z_new), None


def _error_norm(err: np.ndarray, z: np.ndarray, z_new: np.ndarray,
                atol: float, rtol: float) -> float:
    """RMS of err_i / (atol + rtol * max(|z_i|, |z_new_i|))"""
    scale = atol + rtol * np.maximum(np.abs(z), np.abs(z_new))
    return float(np.sqrt(np.mean((err / scale) ** 2)))


def hermite_interpolate(t0: float, h: float, y0: np.ndarray, f0: np.ndarray,
                        y1: np.ndarray, f1: np.ndarray, t: float) -> np.ndarray:
    """Cubic Hermite interpolant on [t0, t0 + h] through (y0, f0), (y1, f1)"""
    s = (t - t0) / h
    s2, s3 = s * s, s * s * s
    h10 = s3 - 2 * s2 + s
    h01 = -2 * s3 + 3 * s2
    h11 = s3 - s2
    return y0 + h01 * (y1 - y0) + h * (h10 * f0 + h11 * f1)


def sample_grid(t0: float, t_end: float, every: float) -> np.ndarray:
    """Uniform grid from t0 with spacing `every`; always ends exactly at t_end"""
    count = int(math.floor((t_end - t0) / every + 1e-9))
    grid = np.minimum(t0 + every * np.arange(count + 1), t_end)
    if t_end - grid[-1] > 1e-9 * every:
        grid = np.append(grid, t_end)
    elif grid.size > 1:
        grid[-1] = t_end
    return grid


class _Recorder:
    """Collects grid samples as steps are accepted"""
    
    def __init__(self, grid: np.ndarray, z0: np.ndarray):
        self.grid = grid
        self.times: List[float] = [float(grid[0])]
        self.states: List[np.ndarray] = [z0.copy()]
        self.next = 1
    
    def emit(self, t: float, t_new: float, z: np.ndarray, f0: np.ndarray,
             z_new: np.ndarray, f1: np.ndarray) -> None:
        h = t_new - t
        while self.next < len(self.grid) and self.grid[self.next] <= t_new:
            ts = float(self.grid[self.next])
            if ts == t_new:
                sample = z_new.copy()
            else:
                sample = hermite_interpolate(t, h, z, f0, z_new, f1, ts)
            self.times.append(ts)
            self.states.append(sample)
            self.next += 1
    
    def trajectory(self, stats: StepStats, layout, complete: bool) -> Trajectory:
        return Trajectory(np.array(self.times), np.array(self.states), stats,
                          layout=layout, complete=complete)


def _as_flat(Z0: Union[PhaseVector, np.ndarray]) -> Tuple[np.ndarray, Optional[Tuple[int, int]]]:
    if isinstance(Z0, PhaseVector):
        return Z0.pack(), (Z0.n, Z0.m)
    z = np.array(Z0, dtype=float).reshape(-1)
    return z, None


def integrate(rhs: FlatRHS, Z0: Union[PhaseVector, np.ndarray], cfg: IntegratorConfig,
              t0: float = 0.0) -> Trajectory:
    """
    Integrate Z' = rhs(t, Z) on [t0, cfg.t_end].
    
    Raises:
        StepUnderflowError: step fell below h_min with the local error still too large
        IntegrationError: the right-hand side or the state became non-finite
    Both carry the partial trajectory as `partial`.
    """
    z, layout = _as_flat(Z0)
    if not np.all(np.isfinite(z)):
        raise NonFiniteError("initial state is not finite")
    if not cfg.t_end > t0:
        raise DomainError(f"t_end={cfg.t_end} must exceed t0={t0}")
    
    recorder = _Recorder(sample_grid(t0, cfg.t_end, cfg.sample_every), z)
    stats = StepStats()
    step = _bs23_step if cfg.method is IntegrationMethod.ADAPTIVE_BS23 else _rk4_step
    
    t = t0
    try:
        f0 = rhs(t, z)
        if not np.isfinite(f0).all():
            raise IntegrationError(f"right-hand side is not finite at t={t}", last_t=t, last_state=z.copy())
        if cfg.is_adaptive:
            t, z = _run_adaptive(rhs, t, z, f0, cfg, recorder, stats)
        else:
            t, z = _run_fixed(rhs, step, t, z, f0, cfg, recorder, stats)
    except IntegrationError as exc:
        exc.partial = recorder.trajectory(stats, layout, complete=False)
        logger.error(f"integration stopped at t={exc.last_t}: {exc}")
        raise
    
    logger.info(
        f"integrated [{t0:g}, {cfg.t_end:g}] with {cfg.method.value}: "
        f"{stats.accepted} accepted / {stats.rejected} rejected steps, "
        f"h in [{stats.min_h:.3e}, {stats.max_h:.3e}]"
    )
    return recorder.trajectory(stats, layout, complete=True)


def _guarded(fn, t: float, z: np.ndarray):
    """Evaluate a step, turning non-finite values into IntegrationError"""
    try:
        result = fn()
    except NonFiniteError as exc:
        raise IntegrationError(str(exc), last_t=t, last_state=z.copy()) from exc
    peak = float(np.max(np.abs(result[0])))
    if not (math.isfinite(peak) and np.isfinite(result[1]).all()):
        raise IntegrationError(f"non-finite state after step from t={t}",
                               last_t=t, last_state=z.copy())
    if peak > BLOW_UP_RATIO * (1.0 + float(np.max(np.abs(z)))):
        raise IntegrationError(f"state blew up within one step from t={t}",
                               last_t=t, last_state=z.copy())
    return result


def _run_adaptive(rhs, t, z, f0, cfg, recorder, stats):
    t_end = cfg.t_end
    h = min(cfg.h_init, cfg.h_max, t_end - t)
    while t < t_end:
        final = t + h >= t_end
        if final:
            h = t_end - t
        z_new, f1, err = _guarded(lambda: _bs23_step(rhs, t, z, h, f0), t, z)
        err_norm = _error_norm(err, z, z_new, cfg.atol, cfg.rtol)
        
        if err_norm <= 1.0:
            t_new = t_end if final else t + h
            recorder.emit(t, t_new, z, f0, z_new, f1)
            stats.record(h)
            t, z, f0 = t_new, z_new, f1
            factor = MAX_GROWTH if err_norm == 0.0 else min(MAX_GROWTH, SAFETY * err_norm ** (-1.0 / 3.0))
            h = min(max(h * factor, cfg.h_min), cfg.h_max)
        else:
            stats.rejected += 1
            if h <= cfg.h_min:
                raise StepUnderflowError(
                    f"step size {h:.3e} reached h_min with error norm {err_norm:.3e}",
                    last_t=t, last_state=z.copy(),
                )
            h = max(h * SAFETY * err_norm ** (-1.0 / 3.0), cfg.h_min)
    return t, z


def _run_fixed(rhs, step, t0, z, f0, cfg, recorder, stats):
    h_nominal = cfg.h_init
    count = int(math.ceil((cfg.t_end - t0) / h_nominal - 1e-9))
    t = t0
    for i in range(1, count + 1):
        t_new = cfg.t_end if i == count else t0 + i * h_nominal
        h = t_new - t
        z_new, f1, _ = _guarded(lambda: step(rhs, t, z, h, f0), t, z)
        recorder.emit(t, t_new, z, f0, z_new, f1)
        stats.record(h)
        t, z, f0 = t_new, z_new, f1
    return t, z


@dataclass
class OrderEstimate:
    slope: float
    intercept: float
    step_sizes: np.ndarray
    errors: np.ndarray
    degenerate: bool = False


def convergence_order_estimate(rhs: FlatRHS, Z0, t_span: Tuple[float, float],
                               h_list: Sequence[float],
                               method: IntegrationMethod = IntegrationMethod.FIXED_RK4,
                               reference: Optional[np.ndarray] = None) -> OrderEstimate:
    """
    Empirical global order: least-squares slope of log(error) against log(h).
    
    The reference final state defaults to a DOP853 solve at rtol=1e-13.
    BS23 is run with a fixed step (adaptive=False).
    """
    h_values = np.asarray(sorted(h_list, reverse=True), dtype=float)
    if h_values.size < 3:
        raise InsufficientDataError(f"need at least 3 step sizes, got {h_values.size}")
    ratios = h_values[1:] / h_values[:-1]
    if not np.allclose(ratios, ratios[0], rtol=1e-6):
        raise DomainError("step sizes must form a geometric progression")
    
    z0, _ = _as_flat(Z0)
    t0, t1 = t_span
    if reference is None:
        sol = solve_ivp(rhs, (t0, t1), z0, method="DOP853", rtol=1e-13, atol=1e-15)
        reference = sol.y[:, -1]
    
    errors = []
    for h in h_values:
        cfg = IntegratorConfig(method=method, adaptive=False, h_init=h, h_min=h, h_max=h,
                               t_end=t1, sample_every=t1 - t0)
        final = integrate(rhs, z0, cfg, t0=t0).final_state
        errors.append(float(np.linalg.norm(final - reference)))
    errors = np.array(errors)
    
    if np.any(errors <= 0.0):
        logger.warning("order estimate degenerate: zero global error at some step size")
        return OrderEstimate(math.nan, math.nan, h_values, errors, degenerate=True)
    
    slope, intercept = np.polyfit(np.log(h_values), np.log(errors), 1)
    return OrderEstimate(float(slope), float(intercept), h_values, errors)
