"""
Human-readable rendering of condition reports, rate fits and run summaries.
"""

from typing import Dict, Optional

from app.conditions.checker import ConditionReport
from app.diagnostics.rates import RateFit


def _status(ok: bool) -> str:
    return "SATISFIED" if ok else "NOT SATISFIED"


def verdict_line(report: ConditionReport) -> str:
    """One-line verdict, convergence guarantees first"""
    if report.regime == "IHD":
        return f"IHD rates: {_status(report.thm21_ok)}"
    return (f"strong convergence: {_status(report.thm33_ok)}; "
            f"fast rates: {_status(report.thm31i_ok)}")


def format_condition_report(report: ConditionReport) -> str:
    lines = [
        f"Regime: {report.regime}",
        f"damping condition (eq15_ok): {_status(report.eq15_ok)} (delta_max = {report.delta_max:.6g})",
    ]
    if report.regime == "IHD":
        lines.append(f"IHD rates (thm21_ok): {_status(report.thm21_ok)}")
    else:
        lines.extend([
            f"Tikhonov decay (assumption31_ok): {_status(report.assumption31_ok)}",
            f"fast rates (thm31i_ok): {_status(report.thm31i_ok)}",
            f"velocity decay (thm31ii_ok): {_status(report.thm31ii_ok)}",
            f"strong convergence (thm33_ok): {_status(report.thm33_ok)}",
        ])
    if report.heuristic:
        lines.append("(numerical path: heuristic)")
    lines.append(verdict_line(report))
    for note in report.notes:
        lines.append(f"  note: {note}")
    return "\n".join(lines)


def format_rate_fit(name: str, fit: Optional[RateFit]) -> str:
    if fit is None:
        return f"{name:<12} insufficient data"
    flag = "" if fit.reliable else "  [unreliable]"
    return (f"{name:<12} slope {fit.slope:+.2f}  r^2 {fit.r_squared:.4f}  "
            f"window [{fit.window[0]:g}, {fit.window[1]:g}]{flag}")


def format_summary(summary: Dict) -> str:
    final = summary["final"]
    lines = [
        "=" * 72,
        f"RUN {summary['name']}  ({summary['system']})",
        "=" * 72,
        f"  horizon            [{summary['t0']:g}, {final['t']:g}]"
        + ("" if summary["complete"] else "  (INCOMPLETE)"),
        f"  ||x(T)||           {final['x_norm']:.6e}",
        f"  iterate error      {final['iterate_err']:.6e}",
        f"  feasibility        {final['feas_xhat']:.6e}",
        f"  gap                {final['gap_xhat']:.6e}",
        f"  objective residual {final['objective_residual']:.6e}",
        f"  velocity norm      {final['vel_norm']:.6e}",
    ]
    descent = summary.get("descent")
    if descent:
        lines.append(f"  descent            t2={descent['t2_detected']:.4g} "
                     f"violations={descent['violations']} after t2={descent['violations_after_t2']}")
    for name, fit in summary.get("rates", {}).items():
        if fit is None:
            lines.append(f"  rate {name:<13} insufficient data")
        else:
            lines.append(f"  rate {name:<13} slope {fit['slope']:+.2f} (r^2 {fit['r_squared']:.3f})")
    lines.append(f"  oscillations       {summary['oscillations']}")
    lines.append(f"  ball crossings     {summary['ball_crossings']}")
    steps = summary["steps"]
    lines.append(f"  steps              {steps['accepted']} accepted / {steps['rejected']} rejected")
    return "\n".join(lines)
