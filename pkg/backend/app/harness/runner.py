"""
Experiment runner: simulate a configured system, evaluate diagnostics,
and write trajectory CSV, summary JSON and SVG plots.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple
import json
import math
import numpy as np
import pandas as pd
from scipy import linalg

from app.conditions.checker import check_theorem_conditions
from app.core.config import get_settings
from app.core.exceptions import ConfigError, DomainError, InsufficientDataError, IntegrationError
from app.core.logging import setup_logger
from app.diagnostics.descent import descent_check
from app.diagnostics.energy import EnergyParams
from app.diagnostics.rates import rate_fit
from app.diagnostics.records import (
    ball_crossings,
    diagnostics_frame,
    integral_estimates,
    oscillation_count,
)
from app.dynamics.schedule import beta_of_t
from app.dynamics.system import make_rhs
from app.harness import plots
from app.harness.io import write_csv
from app.harness.schemas import CompareConfig, RunConfig
from app.integration.solver import Trajectory, integrate
from app.problems.core import Problem, minimum_norm_solution, objective_residual

logger = setup_logger(__name__)

COMPARE_METRICS = ["gap_xhat", "feas_xhat", "iterate_err"]
RATE_METRICS = ["gap_xhat", "feas_xhat", "vel_norm", "iterate_err"]
DEFAULT_RATE_START = 10.0


@dataclass
class RunResult:
    config: RunConfig
    frame: pd.DataFrame
    summary: Dict
    complete: bool
    error: Optional[str] = None
    files: List[Path] = field(default_factory=list)


@dataclass
class CompareResult:
    name: str
    aligned: pd.DataFrame
    oscillations: Dict[str, int]
    final_iterate_error: Dict[str, float]
    members: Dict[str, RunResult]
    files: List[Path] = field(default_factory=list)


def _as_list(values: np.ndarray) -> List[float]:
    return [float(v) for v in values]


def _json_safe(value):
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else str(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


class ExperimentRunner:
    """
    Runs configured simulations.
    One runner can be shared across threads; every run writes to its own directory.
    """
    
    def __init__(self, out_dir: Optional[Path] = None, svg: bool = True):
        self.out_dir = Path(out_dir) if out_dir is not None else get_settings().output_dir()
        self.svg = svg
    
    # Single run ---------------------------------------------------------------
    
    def simulate(self, config: RunConfig, problem: Optional[Problem] = None) -> Tuple[Trajectory, Optional[str]]:
        """Integrate the configured system; a failed integration returns its partial trajectory"""
        if problem is None:
            problem = config.problem.build()
        t0 = config.initial.t0
        schedule = config.schedule.build(t0)
        rhs_fn = make_rhs(schedule, problem, config.system)
        try:
            return integrate(rhs_fn, config.initial.build(), config.integrator.build(), t0=t0), None
        except IntegrationError as exc:
            return exc.partial, str(exc)
    
    def run(self, config: RunConfig, write: bool = True) -> RunResult:
        logger.info(f"running {config.name} ({config.system.value})")
        problem = config.problem.build()
        saddle = minimum_norm_solution(problem)
        problem = problem.with_saddle(saddle.x, saddle.lam)
        params = EnergyParams.from_problem(problem, config.schedule.build(config.initial.t0), config.system)
        
        trajectory, error = self.simulate(config, problem)
        if error:
            logger.error(f"{config.name}: {error}")
        frame = diagnostics_frame(trajectory, params, problem, config.system)
        summary = self._summarize(config, problem, params, trajectory, frame, error)
        result = RunResult(config, frame, summary, complete=error is None, error=error)
        if write:
            result.files = self._write_run(result)
        return result
    
    def _summarize(self, config, problem, params, trajectory, frame, error) -> Dict:
        s = params.schedule
        last = frame.iloc[-1]
        Z_end = trajectory.phase(len(trajectory) - 1)
        beta_t, _ = beta_of_t(s, float(last["t"]))
        x_hat = Z_end.x + beta_t * Z_end.vx
        
        summary = {
            "name": config.name,
            "system": config.system.value,
            "t0": config.initial.t0,
            "complete": error is None,
            "error": error,
            "x_star": _as_list(params.x_star),
            "final": {
                "t": float(last["t"]),
                "x": _as_list(Z_end.x),
                "x_norm": float(linalg.norm(Z_end.x)),
                "iterate_err": float(last["iterate_err"]),
                "feas_xhat": float(last["feas_xhat"]),
                "gap_xhat": float(last["gap_xhat"]),
                "vel_norm": float(last["vel_norm"]),
                "objective_residual": objective_residual(problem, x_hat),
                "E": float(last["E"]),
                "E_eps": float(last["E_eps"]),
            },
            "steps": asdict(trajectory.step_stats),
            "oscillations": oscillation_count(frame["feas_xhat"].to_numpy()),
            "ball_crossings": ball_crossings(frame, float(linalg.norm(params.x_star))),
            "conditions": check_theorem_conditions(s).as_dict(),
        }
        
        if config.analysis.descent and len(trajectory) >= 10:
            summary["descent"] = asdict(descent_check(trajectory, params, problem, config.system))
        
        window = self._rate_window(config, frame)
        summary["rates"] = {}
        for metric in RATE_METRICS:
            try:
                summary["rates"][metric] = asdict(rate_fit(frame["t"], frame[metric], window))
            except (InsufficientDataError, DomainError):
                summary["rates"][metric] = None
        
        try:
            estimates = integral_estimates(frame, s, t_lo=window[0] if window else None)
            summary["integrals"] = {k: asdict(v) for k, v in estimates.items()}
        except (InsufficientDataError, DomainError):
            summary["integrals"] = {}
        return summary
    
    @staticmethod
    def _rate_window(config: RunConfig, frame: pd.DataFrame) -> Optional[Tuple[float, float]]:
        t_end = float(frame["t"].iloc[-1])
        if config.analysis.rate_window:
            lo, hi = config.analysis.rate_window
            return float(lo), min(float(hi), t_end)
        t_lo = max(DEFAULT_RATE_START, config.initial.t0)
        if t_lo >= t_end:
            return None
        return t_lo, t_end
    
    def _run_dir(self, name: str) -> Path:
        return self.out_dir / name
    
    def _write_run(self, result: RunResult) -> List[Path]:
        run_dir = self._run_dir(result.config.name)
        files = [write_csv(result.frame, run_dir / "trajectory.csv")]
        summary_path = run_dir / "summary.json"
        summary_path.write_text(json.dumps(_json_safe(result.summary), indent=2), encoding="utf-8")
        files.append(summary_path)
        if self.svg and result.config.output.svg:
            title = f"{result.config.name} ({result.config.system.value})"
            files.append(plots.plot_positions(result.frame, run_dir / "positions.svg", title))
            files.append(plots.plot_metrics(result.frame, run_dir / "metrics.svg", title))
        return files
    
    # Comparison ---------------------------------------------------------------
    
    def compare(self, config: CompareConfig, write: bool = True) -> CompareResult:
        """Run every member on the shared grid and align their metrics by sample"""
        members = config.resolve()
        horizons = {member.horizon for _, member in members}
        grids = {member.integrator.sample_every for _, member in members}
        if len(horizons) != 1 or len(grids) != 1:
            raise ConfigError(f"{config.name}: mismatched horizons {sorted(horizons)} or sampling {sorted(grids, key=str)}")
        labels = [label for label, _ in members]
        if len(set(labels)) != len(labels):
            raise ConfigError(f"{config.name}: member labels must be unique")
        
        # pyplot is not thread safe: simulate in the pool, write afterwards
        workers = max(1, get_settings().COMPARE_WORKERS)
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                runs = list(pool.map(lambda item: self.run(item[1], write=False), members))
        else:
            runs = [self.run(member, write=False) for _, member in members]
        if write:
            for run in runs:
                run.files = self._write_run(run)
        results = dict(zip(labels, runs))
        
        longest = max(runs, key=lambda run: len(run.frame))
        columns = {"t": longest.frame["t"]}
        for label, run in results.items():
            for metric in COMPARE_METRICS:
                columns[f"{label}:{metric}"] = run.frame[metric]
        aligned = pd.DataFrame(columns)
        
        comparison = CompareResult(
            name=config.name,
            aligned=aligned,
            oscillations={label: run.summary["oscillations"] for label, run in results.items()},
            final_iterate_error={label: run.summary["final"]["iterate_err"] for label, run in results.items()},
            members=results,
        )
        for label, count in comparison.oscillations.items():
            logger.info(f"{config.name}/{label}: {count} feasibility oscillations")
        if write:
            comparison.files = self._write_compare(config, comparison)
        return comparison
    
    def _write_compare(self, config: CompareConfig, comparison: CompareResult) -> List[Path]:
        compare_dir = self.out_dir / config.name
        files = [write_csv(comparison.aligned, compare_dir / "comparison.csv")]
        summary = {
            "name": config.name,
            "oscillations": comparison.oscillations,
            "final_iterate_error": comparison.final_iterate_error,
            "complete": {label: run.complete for label, run in comparison.members.items()},
        }
        summary_path = compare_dir / "comparison.json"
        summary_path.write_text(json.dumps(_json_safe(summary), indent=2), encoding="utf-8")
        files.append(summary_path)
        if self.svg and config.output.svg:
            frames = {label: run.frame for label, run in comparison.members.items()}
            for metric in COMPARE_METRICS:
                files.append(plots.plot_overlay(frames, metric, compare_dir / f"{metric}.svg", config.name))
        return files
