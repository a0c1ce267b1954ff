"""
Experiment config schemas.

A run config describes one simulation; a compare config carries a `base`
run config and `members`, each a label plus a partial override deep-merged
into the base before validation.
"""

import copy
import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from app.core.exceptions import ConfigError
from app.dynamics.schedule import (
    CoefficientSchedule,
    InversePowerTikhonov,
    PowerLawScaling,
    SystemKind,
    ZeroTikhonov,
)
from app.dynamics.system import PhaseVector
from app.integration.solver import IntegrationMethod, IntegratorConfig
from app.problems.builtin import toy_problem
from app.problems.core import LinearConstraint, Problem
from app.problems.objectives import QuadraticObjective, RankOneSquaredObjective


class _Spec(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ProblemSpec(_Spec):
    """toy: (m x1 + n x2 + e x3)^2 s.t. (m, -n, e) x = 0; quadratic / rank_one: explicit data"""
    kind: Literal["toy", "quadratic", "rank_one"] = "toy"
    m: float = 5.0
    n: float = 10.0
    e: float = 6.0
    Q: Optional[List[List[float]]] = None
    q: Optional[List[float]] = None
    c: Optional[List[float]] = None
    A: Optional[List[List[float]]] = None
    b: Optional[List[float]] = None
    rho: float = Field(default=1.0, ge=0)
    
    @model_validator(mode="after")
    def _check_data(self):
        if self.kind == "quadratic" and (self.Q is None or self.A is None or self.b is None):
            raise ValueError("quadratic problems need Q, A and b")
        if self.kind == "rank_one" and (self.c is None or self.A is None or self.b is None):
            raise ValueError("rank_one problems need c, A and b")
        if self.kind == "toy" and 0.0 in (self.m, self.n, self.e):
            raise ValueError("toy problem needs nonzero m, n, e")
        return self
    
    def build(self) -> Problem:
        if self.kind == "toy":
            return toy_problem(self.m, self.n, self.e, rho=self.rho)
        constraint = LinearConstraint(self.A, self.b)
        if self.kind == "quadratic":
            objective = QuadraticObjective(self.Q, self.q)
        else:
            objective = RankOneSquaredObjective(self.c)
        return Problem(objective, constraint, rho=self.rho, name=self.kind)
    
    @property
    def dims(self):
        if self.kind == "toy":
            return 3, 1
        return len(self.A[0]), len(self.A)


class ScalingSpec(_Spec):
    kind: Literal["power"] = "power"
    c: float = Field(default=1.0, gt=0)
    p: float = 0.0
    
    def build(self) -> PowerLawScaling:
        return PowerLawScaling(c=self.c, p=self.p)


class TikhonovSpec(_Spec):
    kind: Literal["zero", "inverse_power"] = "zero"
    a: float = Field(default=1.0, gt=0)
    r: float = Field(default=1.5, ge=0)
    
    def build(self):
        if self.kind == "zero":
            return ZeroTikhonov()
        return InversePowerTikhonov(a=self.a, r=self.r)


class ScheduleSpec(_Spec):
    alpha: float = Field(gt=0)
    gamma: float = Field(default=0.0, ge=0)
    beta: float = 0.0
    xi: ScalingSpec = Field(default_factory=ScalingSpec)
    eps: TikhonovSpec = Field(default_factory=TikhonovSpec)
    
    @model_validator(mode="after")
    def _check_beta(self):
        if self.gamma == 0 and self.beta < 0:
            raise ValueError("gamma = 0 requires beta >= 0")
        return self
    
    def build(self, t0: float) -> CoefficientSchedule:
        return CoefficientSchedule(alpha=self.alpha, gamma=self.gamma, beta_shift=self.beta,
                                   xi=self.xi.build(), eps=self.eps.build(), t0=t0)


class InitialSpec(_Spec):
    t0: float = Field(default=1.0, gt=0)
    x0: List[float]
    lam0: List[float]
    vx0: List[float]
    vlam0: List[float]
    
    def build(self) -> PhaseVector:
        return PhaseVector(np.array(self.x0), np.array(self.lam0),
                           np.array(self.vx0), np.array(self.vlam0))


class IntegratorSpec(_Spec):
    method: IntegrationMethod = IntegrationMethod.ADAPTIVE_BS23
    horizon: float = Field(default=50.0, gt=0)
    rtol: Optional[float] = Field(default=None, gt=0)
    atol: Optional[float] = Field(default=None, gt=0)
    h_init: Optional[float] = Field(default=None, gt=0)
    h_min: float = Field(default=1e-12, gt=0)
    h_max: float = Field(default=1.0, gt=0)
    sample_every: Optional[float] = Field(default=None, gt=0)
    
    def build(self) -> IntegratorConfig:
        values = {k: v for k, v in self.model_dump().items() if v is not None and k != "horizon"}
        return IntegratorConfig(t_end=self.horizon, **values)


class AnalysisSpec(_Spec):
    rate_window: Optional[List[float]] = None
    descent: bool = True


class OutputSpec(_Spec):
    dir: str = "out"
    svg: bool = True


class RunConfig(_Spec):
    name: str
    description: str = ""
    problem: ProblemSpec = Field(default_factory=ProblemSpec)
    system: SystemKind = SystemKind.IHDTR
    schedule: ScheduleSpec
    initial: InitialSpec
    integrator: IntegratorSpec = Field(default_factory=IntegratorSpec)
    analysis: AnalysisSpec = Field(default_factory=AnalysisSpec)
    output: OutputSpec = Field(default_factory=OutputSpec)
    
    @model_validator(mode="after")
    def _check_dims(self):
        n, m = self.problem.dims
        init = self.initial
        if len(init.x0) != n or len(init.vx0) != n:
            raise ValueError(f"initial x0/vx0 must have length {n}")
        if len(init.lam0) != m or len(init.vlam0) != m:
            raise ValueError(f"initial lam0/vlam0 must have length {m}")
        if self.integrator.horizon <= init.t0:
            raise ValueError("integrator.horizon must exceed initial.t0")
        return self
    
    @property
    def horizon(self):
        return self.initial.t0, self.integrator.horizon


class CompareMember(_Spec):
    label: str
    overrides: Dict[str, Any] = Field(default_factory=dict)


class CompareConfig(_Spec):
    name: str
    description: str = ""
    base: Dict[str, Any]
    members: List[CompareMember] = Field(min_length=1)
    output: OutputSpec = Field(default_factory=OutputSpec)
    
    def resolve(self) -> List[tuple]:
        """(label, RunConfig) per member"""
        resolved = []
        for index, member in enumerate(self.members):
            merged = deep_merge(self.base, member.overrides)
            merged["name"] = f"{self.name}-{member.label}"
            try:
                resolved.append((member.label, RunConfig.model_validate(merged)))
            except ValidationError as exc:
                raise ConfigError(_format_errors(exc, prefix=f"members.{index}")) from exc
        return resolved


def deep_merge(base: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def _format_errors(exc: ValidationError, prefix: str = "") -> str:
    lines = []
    for error in exc.errors():
        loc = ".".join(str(part) for part in error["loc"])
        if prefix:
            loc = f"{prefix}.{loc}" if loc else prefix
        lines.append(f"{loc or '<root>'}: {error['msg']}")
    return "invalid config:\n  " + "\n  ".join(lines)


def parse_config(data: Dict[str, Any]) -> Union[RunConfig, CompareConfig]:
    try:
        if "members" in data:
            return CompareConfig.model_validate(data)
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_errors(exc)) from exc


def load_config(path: Union[str, Path]) -> Union[RunConfig, CompareConfig]:
    """Read and validate a JSON experiment config"""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return parse_config(data)
