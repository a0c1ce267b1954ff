"""
Certifies which convergence hypotheses a coefficient schedule satisfies.

Power-law families (xi = c t^p, eps = a / t^r) are decided by exponent
calculus. Any Custom family switches to a numerical path: sampling on log
grids and log-substituted quadrature to a horizon of 1e6 t0. The numerical
path decides eventual behaviour from per-decade trends and is flagged
heuristic.
"""

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple
import math
import numpy as np
from scipy.integrate import quad

from app.core.exceptions import DomainError
from app.core.logging import setup_logger
from app.dynamics.schedule import (
    CoefficientSchedule,
    InversePowerTikhonov,
    PowerLawScaling,
    beta_of_t,
)

logger = setup_logger(__name__)

BOUNDARY_SLACK = 1e-6
EQ15_GRID_DECADES = 4
TAIL_DECADES = (4, 5, 6)
TREND_TOL = 1e-3
TAIL_TOLERANCE = 0.1


@dataclass
class Eq15Result:
    ok: bool
    delta_max: float


@dataclass
class Assumption31Result:
    ok: bool
    induced_M: Optional[float] = None
    notes: List[str] = field(default_factory=list)


@dataclass
class ConditionReport:
    eq15_ok: bool
    delta_max: float
    assumption31_ok: bool
    thm31i_ok: bool
    thm31ii_ok: bool
    thm33_ok: bool
    regime: str = "IHDTR"
    thm21_ok: bool = False
    heuristic: bool = False
    induced_M: Optional[float] = None
    notes: List[str] = field(default_factory=list)
    
    @property
    def lemma_ok(self) -> bool:
        return self.eq15_ok and self.assumption31_ok
    
    def as_dict(self) -> dict:
        return {
            "regime": self.regime,
            "eq15_ok": self.eq15_ok,
            "delta_max": self.delta_max,
            "assumption31_ok": self.assumption31_ok,
            "lemma_ok": self.lemma_ok,
            "thm21_ok": self.thm21_ok,
            "thm31i_ok": self.thm31i_ok,
            "thm31ii_ok": self.thm31ii_ok,
            "thm33_ok": self.thm33_ok,
            "heuristic": self.heuristic,
            "induced_M": self.induced_M,
            "notes": list(self.notes),
        }


def _power_law(s: CoefficientSchedule) -> Optional[Tuple[float, float]]:
    """(c, p) when xi is a power law"""
    if isinstance(s.xi, PowerLawScaling):
        return s.xi.c, s.xi.p
    return None


def _inverse_power(s: CoefficientSchedule) -> Optional[Tuple[float, float]]:
    """(a, r) when eps is an inverse power"""
    if isinstance(s.eps, InversePowerTikhonov):
        return s.eps.a, s.eps.r
    return None


def _is_symbolic(s: CoefficientSchedule, method: str) -> bool:
    if method not in ("auto", "symbolic", "numeric"):
        raise DomainError(f"unknown method '{method}'")
    eps_symbolic = s.eps.is_zero or _inverse_power(s) is not None
    available = _power_law(s) is not None and eps_symbolic
    if method == "symbolic" and not available:
        raise DomainError("symbolic path needs power-law xi and inverse-power eps")
    return available and method != "numeric"


# Damping condition ----------------------------------------------------------------

def check_eq15(s: CoefficientSchedule, method: str = "auto") -> Eq15Result:
    """(2 - 2 alpha/3) + t xi'(t)/xi(t) < -delta for some delta > 0"""
    base = 2.0 - 2.0 * s.alpha / 3.0
    if _is_symbolic(s, method):
        _, p = _power_law(s)
        expr = base + p
    else:
        grid = np.geomspace(s.t0, s.t0 * 10 ** EQ15_GRID_DECADES, 400)
        expr = max(base + t * s.xi.derivative(t) / s.xi.value(t) for t in grid)
    return Eq15Result(ok=expr < 0, delta_max=float(-expr))


# Tikhonov decay assumption ------------------------------------------------------

def check_assumption31(s: CoefficientSchedule, method: str = "auto") -> Assumption31Result:
    """2 eps'(t) + M |gamma + beta/t| xi(t) eps(t)^2 <= 0 eventually, for some M > 1"""
    if s.eps.is_zero:
        raise DomainError("the Tikhonov decay assumption concerns a nonzero coefficient")
    if s.gamma == 0 and s.beta_shift == 0:
        return Assumption31Result(True, None, ["gamma = beta = 0: |beta(t)| vanishes, holds trivially"])
    if _is_symbolic(s, method):
        return _assumption31_symbolic(s)
    return _assumption31_numeric(s)


def _assumption31_symbolic(s: CoefficientSchedule) -> Assumption31Result:
    c, p = _power_law(s)
    a, r = _inverse_power(s)
    if r == 0:
        return Assumption31Result(False, None, ["constant eps: eps' = 0 cannot absorb the positive term"])
    
    # After dividing by a t^(-r-1): -2r + M coef c a t^k <= 0
    if s.gamma > 0:
        coef, k = s.gamma, p - (r - 1.0)
    else:
        coef, k = s.beta_shift, p - r
    
    if k < 0:
        return Assumption31Result(True, None, ["xi eps^2 decays faster than eps': any M > 1 works"])
    if k > 0:
        return Assumption31Result(False, None, ["xi eps^2 outgrows eps'"])
    
    threshold = 2.0 * r / (coef * c)
    induced = threshold / a
    if a <= threshold * (1.0 - BOUNDARY_SLACK):
        return Assumption31Result(True, induced, [f"boundary exponent: holds for M < {induced:.6g}"])
    return Assumption31Result(False, induced, [f"boundary exponent: needs a < {threshold:.6g}, got a = {a:g}"])


def _assumption31_numeric(s: CoefficientSchedule) -> Assumption31Result:
    M = 1.0 + BOUNDARY_SLACK
    grid = np.geomspace(s.t0 * 1e3, s.t0 * 1e6, 61)
    
    def ratio(t: float) -> float:
        beta_t, _ = beta_of_t(s, t)
        numerator = M * abs(beta_t) * s.xi.value(t) * s.eps.value(t) ** 2
        denominator = -2.0 * s.eps.derivative(t)
        if numerator == 0.0:
            return 0.0
        if denominator <= 0.0:
            return math.inf
        return numerator / denominator
    
    values = [ratio(t) for t in grid]
    last, decade_back = values[-1], values[-21]
    growing = last > 0 and (decade_back == 0 or last / decade_back > 1.0 + TREND_TOL)
    ok = last <= 1.0 and not growing
    return Assumption31Result(ok, 1.0 / last if ok and last > 0 else None,
                              ["heuristic: sampled on [1e3 t0, 1e6 t0]"])


# Convergence conditions ---------------------------------------------------------

def _log_quad(g: Callable[[float], float], lo: float, hi: float) -> float:
    value, _ = quad(lambda u: g(math.exp(u)) * math.exp(u), math.log(lo), math.log(hi),
                    limit=200, epsabs=0.0, epsrel=1e-10)
    return value


def _integral_converges(g: Callable[[float], float], t0: float, notes: List[str],
                        label: str) -> bool:
    """Per-decade increments of int_{t0}^{T} g at T = 1e4, 1e5, 1e6 (times t0)"""
    marks = [t0 * 10.0 ** d for d in TAIL_DECADES]
    head = _log_quad(g, t0, marks[0])
    d1 = _log_quad(g, marks[0], marks[1])
    d2 = _log_quad(g, marks[1], marks[2])
    total = head + d1 + d2
    if d1 <= 0.0:
        return d2 <= 0.0
    q = d2 / d1
    if q >= 1.0 - TREND_TOL:
        return False
    tail = d2 * q / (1.0 - q)
    if tail > TAIL_TOLERANCE * abs(total):
        notes.append(f"heuristic: {label} tail estimate {tail:.3g} exceeds 10% of {total:.3g}")
    return True


def _grows_unbounded(v: Callable[[float], float], t0: float) -> bool:
    values = [v(t0 * 10.0 ** d) for d in TAIL_DECADES]
    return all(b > a * (1.0 + TREND_TOL) for a, b in zip(values, values[1:]))


def _decays_to_zero(v: Callable[[float], float], t0: float) -> bool:
    values = [v(t0 * 10.0 ** d) for d in TAIL_DECADES]
    return all(b < a * (1.0 - TREND_TOL) for a, b in zip(values, values[1:]))


def check_theorem_conditions(s: CoefficientSchedule, method: str = "auto") -> ConditionReport:
    """
    Rate theorem (i): int t xi eps < inf and t^2 xi -> inf
    Velocity theorem (ii): int xi eps / t < inf
    Strong convergence: (ii), descent hypotheses, t^2 xi eps -> inf, liminf xi != 0
    and (1 / t^2 xi eps) int s^2 xi^2 eps^2 -> 0
    """
    symbolic = _is_symbolic(s, method)
    eq15 = check_eq15(s, method)
    notes: List[str] = []
    
    if s.eps.is_zero:
        notes.append("eps = 0: IHD regime, Tikhonov conditions vacuous")
        report = ConditionReport(
            eq15_ok=eq15.ok, delta_max=eq15.delta_max, assumption31_ok=True,
            thm31i_ok=False, thm31ii_ok=False, thm33_ok=False, regime="IHD",
            thm21_ok=eq15.ok and s.alpha > 3, heuristic=not symbolic, notes=notes,
        )
        return report
    
    a31 = check_assumption31(s, method)
    notes.extend(a31.notes)
    if symbolic:
        thm31i, thm31ii, thm33 = _theorems_symbolic(s, eq15.ok, a31.ok, notes)
    else:
        thm31i, thm31ii, thm33 = _theorems_numeric(s, eq15.ok, a31.ok, notes)
        notes.append("heuristic: numerical quadrature path")
    
    if thm31i and not (eq15.ok and a31.ok):
        notes.append("rate exponents hold but the energy lemma hypotheses do not")
    
    report = ConditionReport(
        eq15_ok=eq15.ok, delta_max=eq15.delta_max, assumption31_ok=a31.ok,
        thm31i_ok=thm31i, thm31ii_ok=thm31ii, thm33_ok=thm33, regime="IHDTR",
        thm21_ok=eq15.ok and s.alpha > 3, heuristic=not symbolic,
        induced_M=a31.induced_M, notes=notes,
    )
    assert not report.thm33_ok or (report.eq15_ok and report.assumption31_ok and report.thm31ii_ok)
    return report


def _theorems_symbolic(s: CoefficientSchedule, eq15_ok: bool, a31_ok: bool,
                       notes: List[str]) -> Tuple[bool, bool, bool]:
    _, p = _power_law(s)
    _, r = _inverse_power(s)
    
    thm31i = r > p + 2 and p > -2
    thm31ii = r > p
    thm33 = p >= 0 and p + 1 < r < p + 2 and eq15_ok and a31_ok
    
    for edge, label in ((p + 2, "r = p + 2"), (p + 1, "r = p + 1"), (p, "r = p")):
        if r == edge:
            notes.append(f"boundary: {label}")
    return thm31i, thm31ii, thm33


def _theorems_numeric(s: CoefficientSchedule, eq15_ok: bool, a31_ok: bool,
                      notes: List[str]) -> Tuple[bool, bool, bool]:
    xi, eps, t0 = s.xi.value, s.eps.value, s.t0
    
    thm31i = (_integral_converges(lambda t: t * xi(t) * eps(t), t0, notes, "int t xi eps")
              and _grows_unbounded(lambda t: t * t * xi(t), t0))
    thm31ii = _integral_converges(lambda t: xi(t) * eps(t) / t, t0, notes, "int xi eps / t")
    
    def ratio(t: float) -> float:
        integral = _log_quad(lambda u: (u * xi(u) * eps(u)) ** 2, t0, t)
        return integral / (t * t * xi(t) * eps(t))
    
    liminf_ok = xi(t0 * 1e6) >= xi(t0 * 1e4) * (1.0 - TREND_TOL)
    thm33 = (thm31ii and eq15_ok and a31_ok
             and _grows_unbounded(lambda t: t * t * xi(t) * eps(t), t0)
             and liminf_ok
             and _decays_to_zero(ratio, t0))
    return thm31i, thm31ii, thm33
