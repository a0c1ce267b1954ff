"""
Numerical check of the energy descent inequalities.

IHD:   dE_{lam*}/dt <= 0
IHDTR: dE^eps_{lam*}/dt <= (alpha/3) t xi(t) eps(t) ||x*||^2
both for t past an empirically detected t2, with tolerance 1e-7 (1 + |E(t)|).
"""

from dataclasses import dataclass
import math
import numpy as np

from app.core.exceptions import DomainError, InsufficientDataError
from app.core.logging import setup_logger
from app.diagnostics.energy import (
    EnergyParams,
    energy_E_eps,
    energy_E_mu,
    energy_derivative_analytic,
)
from app.dynamics.schedule import SystemKind
from app.dynamics.system import rhs
from app.integration.solver import Trajectory
from app.problems.core import Problem

logger = setup_logger(__name__)

MIN_SAMPLES = 10
RELATIVE_TOL = 1e-7


@dataclass
class DescentReport:
    t2_detected: float
    violations: int
    max_violation: float
    violations_after_t2: int
    samples_checked: int
    
    @property
    def settled(self) -> bool:
        """A violation-free tail exists"""
        return math.isfinite(self.t2_detected)


def descent_check(traj: Trajectory, params: EnergyParams, p: Problem,
                  mode: SystemKind) -> DescentReport:
    """
    Evaluate the descent inequality at every sample.
    
    t2 is the first sample time after the last violation (the first sample
    time when there is none, inf when the last sample violates).
    """
    mode = SystemKind(mode)
    if mode is SystemKind.BASELINE:
        mode = SystemKind.IHD
    if len(traj) < MIN_SAMPLES:
        raise InsufficientDataError(f"descent check needs at least {MIN_SAMPLES} samples, got {len(traj)}")
    if traj.layout is None:
        raise DomainError("descent check needs a phase-vector trajectory")
    
    s = params.schedule
    x_star_sq = float(params.x_star @ params.x_star)
    times = traj.times
    excess = np.empty(len(traj))
    
    for i, (t, Z) in enumerate(traj.phases()):
        derivative = rhs(s, p, mode, t, Z)
        if mode is SystemKind.IHDTR:
            energy = energy_E_eps(params, p, t, Z)
            bound = (s.alpha / 3.0) * t * s.xi.value(t) * s.eps.value(t) * x_star_sq
        else:
            energy = energy_E_mu(params, p, t, Z)
            bound = 0.0
        d_energy = energy_derivative_analytic(params, p, t, Z, derivative,
                                              include_tikhonov=mode is SystemKind.IHDTR)
        excess[i] = d_energy - bound - RELATIVE_TOL * (1.0 + abs(energy))
    
    violating = np.flatnonzero(excess > 0.0)
    if violating.size == 0:
        t2 = float(times[0])
    elif violating[-1] == len(traj) - 1:
        t2 = math.inf
    else:
        t2 = float(times[violating[-1] + 1])
    
    report = DescentReport(
        t2_detected=t2,
        violations=int(violating.size),
        max_violation=float(max(excess.max(), 0.0)),
        violations_after_t2=int(np.count_nonzero(excess[times >= t2] > 0.0)),
        samples_checked=len(traj),
    )
    logger.info(
        f"descent check ({mode.value}): t2={report.t2_detected:.4g}, "
        f"violations={report.violations}, max excess={report.max_violation:.3e}"
    )
    return report
