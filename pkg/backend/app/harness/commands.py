"""
Command implementations behind run_experiment.py.
Each command returns a process exit code: 0 on success, 1 on a pd-flow error,
2 on invalid arguments.
"""

from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union
import json
import numpy as np
from scipy import linalg

from app.conditions.checker import check_theorem_conditions
from app.core.config import get_settings
from app.core.exceptions import ConfigError, PDFlowError
from app.core.logging import setup_logger
from app.diagnostics.rates import rate_fit
from app.dynamics.schedule import (
    CoefficientSchedule,
    InversePowerTikhonov,
    PowerLawScaling,
    ZeroTikhonov,
)
from app.harness.io import metric_columns, path_frame, read_csv, write_csv
from app.harness.reports import format_condition_report, format_rate_fit, format_summary
from app.harness.runner import ExperimentRunner
from app.harness.schemas import CompareConfig, RunConfig, load_config, parse_config
from app.problems.builtin import BUILTIN_PROBLEMS
from app.problems.core import minimum_norm_solution
from app.tikhonov.path import path_scan

logger = setup_logger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2

DEFAULT_TIKHONOV_GRID = [1.0, 0.1, 0.01, 1e-3, 1e-4]


def resolve_config_path(name_or_path: str) -> Path:
    """A file path, or the stem of a shipped experiment"""
    path = Path(name_or_path)
    if path.exists():
        return path
    shipped = get_settings().experiments_path / f"{path.stem}.json"
    if shipped.exists():
        return shipped
    raise ConfigError(f"no such config or shipped experiment: {name_or_path}")


def list_experiments() -> List[Tuple[str, str]]:
    """(name, description) of every shipped experiment"""
    experiments = []
    for path in sorted(get_settings().experiments_path.glob("*.json")):
        try:
            config = load_config(path)
            experiments.append((path.stem, config.description))
        except ConfigError as exc:
            logger.warning(f"skipping {path.name}: {exc}")
    return experiments


def apply_overrides(config: Union[RunConfig, CompareConfig], system: Optional[str] = None,
                    horizon: Optional[float] = None, rtol: Optional[float] = None,
                    atol: Optional[float] = None) -> Union[RunConfig, CompareConfig]:
    """CLI flags take precedence over the config file"""
    integrator = {k: v for k, v in (("horizon", horizon), ("rtol", rtol), ("atol", atol)) if v is not None}
    
    if isinstance(config, CompareConfig):
        base = dict(config.base)
        if system is not None:
            base["system"] = system
        if integrator:
            base["integrator"] = {**base.get("integrator", {}), **integrator}
        return parse_config({**config.model_dump(mode="json"), "base": base})
    
    data = config.model_dump(mode="json")
    if system is not None:
        data["system"] = system
    data["integrator"].update(integrator)
    return parse_config(data)


def _runner(out: Optional[str], config_out: str, svg: bool) -> ExperimentRunner:
    return ExperimentRunner(get_settings().output_dir(out or config_out), svg=svg)


def cmd_run(config_path: str, out: Optional[str] = None, svg: bool = True, **overrides) -> int:
    try:
        config = apply_overrides(load_config(resolve_config_path(config_path)), **overrides)
        if isinstance(config, CompareConfig):
            return _compare(config, out, svg)
        result = _runner(out, config.output.dir, svg).run(config)
    except PDFlowError as exc:
        logger.error(f"run failed: {exc}")
        return EXIT_ERROR
    
    print(format_summary(result.summary))
    schedule = config.schedule.build(config.initial.t0).for_system(config.system)
    print(format_condition_report(check_theorem_conditions(schedule)))
    for path in result.files:
        logger.info(f"wrote {path}")
    if not result.complete:
        logger.error(f"{config.name}: integration stopped early, partial output kept: {result.error}")
        return EXIT_ERROR
    return EXIT_OK


def cmd_compare(config_path: str, out: Optional[str] = None, svg: bool = True, **overrides) -> int:
    try:
        config = apply_overrides(load_config(resolve_config_path(config_path)), **overrides)
        if not isinstance(config, CompareConfig):
            raise ConfigError(f"{config_path} is a single-run config; use `run`")
        return _compare(config, out, svg)
    except PDFlowError as exc:
        logger.error(f"compare failed: {exc}")
        return EXIT_ERROR


def _compare(config: CompareConfig, out: Optional[str], svg: bool) -> int:
    result = _runner(out, config.output.dir, svg).compare(config)
    for run in result.members.values():
        print(format_summary(run.summary))
    print(f"\n{'member':<24} {'oscillations':>12} {'final iterate error':>22}")
    for label in result.members:
        print(f"{label:<24} {result.oscillations[label]:>12d} {result.final_iterate_error[label]:>22.6e}")
    incomplete = [label for label, run in result.members.items() if not run.complete]
    if incomplete:
        logger.error(f"incomplete members: {', '.join(incomplete)}")
        return EXIT_ERROR
    return EXIT_OK


def cmd_check(p: float = 0.0, r: Optional[float] = 1.5, alpha: float = 3.1, gamma: float = 1.0,
              beta: float = 0.0, c: float = 1.0, a: float = 1.0, t0: float = 1.0,
              as_json: bool = False) -> int:
    """Certify a power-law schedule xi = c t^p, eps = a / t^r (r=None: no Tikhonov term)"""
    try:
        eps = ZeroTikhonov() if r is None else InversePowerTikhonov(a=a, r=r)
        schedule = CoefficientSchedule(alpha=alpha, gamma=gamma, beta_shift=beta,
                                       xi=PowerLawScaling(c=c, p=p), eps=eps, t0=t0)
        report = check_theorem_conditions(schedule)
    except PDFlowError as exc:
        logger.error(f"check failed: {exc}")
        return EXIT_USAGE
    if as_json:
        print(json.dumps(report.as_dict(), indent=2))
    else:
        print(format_condition_report(report))
    return EXIT_OK


def cmd_rates(csv_path: str, window: Optional[Sequence[float]] = None,
              columns: Optional[Sequence[str]] = None) -> int:
    try:
        frame = read_csv(csv_path)
        if "t" not in frame.columns:
            raise ConfigError(f"{csv_path}: missing t column")
        names = list(columns) if columns else metric_columns(frame)
        missing = [name for name in names if name not in frame.columns]
        if missing:
            raise ConfigError(f"{csv_path}: unknown columns {missing}")
        span = tuple(window) if window else None
    except PDFlowError as exc:
        logger.error(f"rates failed: {exc}")
        return EXIT_USAGE
    
    for name in names:
        try:
            fit = rate_fit(frame["t"], frame[name], span)
        except PDFlowError as exc:
            logger.warning(f"{name}: {exc}")
            fit = None
        print(format_rate_fit(name, fit))
    return EXIT_OK


def cmd_tikhonov(problem: str = "toy", grid: Optional[Sequence[float]] = None,
                 out: Optional[str] = None) -> int:
    """Write the Tikhonov path of a built-in problem or a run config's problem"""
    try:
        if problem in BUILTIN_PROBLEMS:
            instance = BUILTIN_PROBLEMS[problem]()
            name = problem
        else:
            config = load_config(resolve_config_path(problem))
            if isinstance(config, CompareConfig):
                raise ConfigError("tikhonov needs a single-run config or a built-in problem")
            instance = config.problem.build()
            name = config.name
        saddle = minimum_norm_solution(instance)
        points = path_scan(instance, saddle.lam, list(grid) if grid else DEFAULT_TIKHONOV_GRID)
        path = write_csv(path_frame(points), get_settings().output_dir(out) / name / "tikhonov_path.csv")
    except PDFlowError as exc:
        logger.error(f"tikhonov failed: {exc}")
        return EXIT_ERROR
    
    print(f"min-norm x* = {np.array2string(saddle.x, precision=6)}  ||x*|| = {linalg.norm(saddle.x):.6e}")
    for point in points:
        print(f"eps {point.eps:<10.3g} ||x_eps|| {point.norm:.6e}  residual {point.residual:.2e}")
    logger.info(f"wrote {path}")
    return EXIT_OK
