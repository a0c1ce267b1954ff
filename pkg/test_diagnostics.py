"""
Diagnostics tests: energies, descent inequalities, rate fits and trajectory metrics.
Long runs to t = 200 are integrated once per module.
"""

import numpy as np
import pandas as pd
import pytest
from numpy.testing import assert_allclose

from app.core.exceptions import DomainError, InsufficientDataError
from app.diagnostics.descent import descent_check
from app.diagnostics.energy import (
    EnergyParams,
    energy_E_eps,
    energy_E_mu,
    energy_derivative_analytic,
    tikhonov_term,
)
from app.diagnostics.rates import rate_fit, scaled_sup
from app.diagnostics.records import (
    METRIC_COLUMNS,
    ball_crossings,
    csv_columns,
    diagnostics_frame,
    integral_estimates,
    oscillation_count,
)
from app.dynamics.schedule import (
    CoefficientSchedule,
    InversePowerTikhonov,
    PowerLawScaling,
    SystemKind,
    ZeroTikhonov,
)
from app.dynamics.system import PhaseVector, make_rhs, rhs
from app.integration.solver import IntegratorConfig, Trajectory, integrate
from app.problems.builtin import toy_problem

LONG_HORIZON = 200.0


def _schedule(eps):
    return CoefficientSchedule(alpha=3.1, gamma=1.0, beta_shift=-0.5, xi=PowerLawScaling(1.0, 0.0), eps=eps)


def _start():
    return PhaseVector(np.array([1.0, -1.0, -1.0]), np.array([1.0]),
                       np.array([-1.0, 1.0, 1.0]), np.array([-1.0]))


def _run(system, eps, t_end, rtol=1e-8, sample_every=0.05):
    p = toy_problem()
    s = _schedule(eps)
    cfg = IntegratorConfig(t_end=t_end, rtol=rtol, atol=rtol * 1e-3, sample_every=sample_every)
    traj = integrate(make_rhs(s, p, system), _start(), cfg, t0=1.0)
    params = EnergyParams.from_problem(p, s, system)
    return p, params, traj


@pytest.fixture(scope="module")
def ihd_long():
    p, params, traj = _run(SystemKind.IHD, ZeroTikhonov(), LONG_HORIZON)
    return p, params, traj, diagnostics_frame(traj, params, p, SystemKind.IHD)


@pytest.fixture(scope="module")
def ihdtr_long():
    p, params, traj = _run(SystemKind.IHDTR, InversePowerTikhonov(1.0, 1.5), LONG_HORIZON)
    return p, params, traj, diagnostics_frame(traj, params, p, SystemKind.IHDTR)


class TestEnergy:
    
    def test_zero_at_rest_on_anchor(self, kkt):
        s = _schedule(ZeroTikhonov())
        params = EnergyParams.from_problem(kkt, s, SystemKind.IHD)
        Z = PhaseVector.at_rest(params.x_star, params.mu)
        assert energy_E_mu(params, kkt, 3.0, Z) == pytest.approx(0.0, abs=1e-12)
    
    def test_multiplier_offset_at_rest(self, kkt):
        s = _schedule(ZeroTikhonov())
        params = EnergyParams.from_problem(kkt, s, SystemKind.IHD, mu=np.array([1.0]))
        saddle = kkt.known_saddle
        Z = PhaseVector.at_rest(saddle.x, saddle.lam)
        alpha = s.alpha
        expected = (2.0 * alpha ** 2 / 9.0 + alpha * (alpha - 3.0) / 9.0) * 4.0
        assert energy_E_mu(params, kkt, 5.0, Z) == pytest.approx(expected, rel=1e-12)
        assert energy_E_mu(params, kkt, 5.0, Z) == pytest.approx(8.68, rel=1e-12)
    
    def test_tikhonov_energy_adds_term(self, toy, exp1_state):
        params = EnergyParams.from_problem(toy, _schedule(InversePowerTikhonov(1.0, 1.5)))
        t = 4.0
        expected = energy_E_mu(params, toy, t, exp1_state) + 0.5 * t * t * t ** -1.5 * 3.0
        assert energy_E_eps(params, toy, t, exp1_state) == pytest.approx(expected, rel=1e-12)
        assert tikhonov_term(params, t, exp1_state) == pytest.approx(1.5 * t ** 0.5, rel=1e-12)
    
    def test_anchor_is_min_norm_solution(self, toy):
        params = EnergyParams.from_problem(toy, _schedule(ZeroTikhonov()))
        assert_allclose(params.x_star, np.zeros(3), atol=1e-12)
        assert_allclose(params.mu, np.zeros(1), atol=1e-12)
    
    @pytest.mark.parametrize("system, eps", [
        (SystemKind.IHD, ZeroTikhonov()),
        (SystemKind.IHDTR, InversePowerTikhonov(1.0, 1.5)),
    ])
    def test_analytic_derivative_matches_finite_differences(self, system, eps):
        h = 2e-4
        p, params, traj = _run(system, eps, 3.0, rtol=1e-11, sample_every=h)
        energies = np.array([energy_E_eps(params, p, t, Z) for t, Z in traj.phases()])
        for i in (2000, 5000, 8000):
            t, Z = traj.times[i], traj.phase(i)
            analytic = energy_derivative_analytic(params, p, t, Z, rhs(params.schedule, p, system, t, Z))
            central = (energies[i + 1] - energies[i - 1]) / (traj.times[i + 1] - traj.times[i - 1])
            assert analytic == pytest.approx(central, rel=1e-3, abs=1e-2)


class TestDiagnosticsFrame:
    
    def test_exact_header(self):
        p, params, traj = _run(SystemKind.IHD, ZeroTikhonov(), 2.0)
        frame = diagnostics_frame(traj, params, p, SystemKind.IHD)
        assert list(frame.columns) == [
            "t", "x_0", "x_1", "x_2", "lam_0", "vx_0", "vx_1", "vx_2", "vlam_0",
            "gap_xhat", "feas_xhat", "iterate_err", "vel_norm", "E", "E_eps", "dEdt",
        ]
        assert list(frame.columns) == csv_columns(3, 1)
        assert list(frame.columns[-len(METRIC_COLUMNS):]) == METRIC_COLUMNS
    
    def test_equilibrium_metrics_vanish(self, toy, ihd_schedule):
        cfg = IntegratorConfig(t_end=20.0)
        Z0 = PhaseVector.at_rest(np.zeros(3), np.zeros(1))
        traj = integrate(make_rhs(ihd_schedule, toy, SystemKind.IHD), Z0, cfg, t0=1.0)
        params = EnergyParams.from_problem(toy, ihd_schedule, SystemKind.IHD)
        frame = diagnostics_frame(traj, params, toy, SystemKind.IHD)
        assert frame[METRIC_COLUMNS].abs().to_numpy().max() <= 1e-10
    
    @pytest.mark.slow
    def test_gap_nonnegative(self, ihd_long):
        assert ihd_long[3]["gap_xhat"].min() >= -1e-10


class TestDescent:
    
    @pytest.mark.slow
    def test_ihd_settles(self, ihd_long):
        p, params, traj, _ = ihd_long
        report = descent_check(traj, params, p, SystemKind.IHD)
        assert report.settled
        assert report.t2_detected < LONG_HORIZON
        assert report.violations_after_t2 == 0
        assert report.samples_checked == len(traj)
    
    @pytest.mark.slow
    def test_ihdtr_settles(self, ihdtr_long):
        p, params, traj, _ = ihdtr_long
        report = descent_check(traj, params, p, SystemKind.IHDTR)
        assert report.settled
        assert report.violations_after_t2 == 0
    
    @pytest.mark.slow
    def test_stable_under_halved_tolerance(self):
        for rtol in (1e-8, 5e-9):
            p, params, traj = _run(SystemKind.IHD, ZeroTikhonov(), 50.0, rtol=rtol)
            report = descent_check(traj, params, p, SystemKind.IHD)
            assert report.settled
            assert report.violations_after_t2 == 0
    
    @pytest.mark.slow
    def test_ihdtr_stable_under_halved_tolerance(self):
        for rtol in (1e-8, 5e-9):
            p, params, traj = _run(SystemKind.IHDTR, InversePowerTikhonov(1.0, 1.5), 50.0, rtol=rtol)
            report = descent_check(traj, params, p, SystemKind.IHDTR)
            assert report.settled
            assert report.violations_after_t2 == 0
    
    def test_constant_trajectory_at_saddle(self, toy, ihd_schedule):
        times = np.linspace(1.0, 20.0, 40)
        traj = Trajectory(times, np.zeros((40, 8)), layout=(3, 1))
        params = EnergyParams.from_problem(toy, ihd_schedule, SystemKind.IHD)
        report = descent_check(traj, params, toy, SystemKind.IHD)
        assert report.t2_detected == times[0]
        assert report.violations == 0
    
    def test_needs_samples(self):
        p, params, traj = _run(SystemKind.IHD, ZeroTikhonov(), 1.2, sample_every=0.1)
        with pytest.raises(InsufficientDataError):
            descent_check(traj, params, p, SystemKind.IHD)


class TestRates:
    
    def test_inverse_square(self):
        t = np.geomspace(1.0, 100.0, 50)
        fit = rate_fit(t, 3.0 / t ** 2)
        assert fit.slope == pytest.approx(-2.0, abs=1e-10)
        assert fit.r_squared == pytest.approx(1.0)
        assert fit.reliable
    
    def test_window(self):
        t = np.linspace(1.0, 100.0, 200)
        values = np.where(t < 10.0, 1.0, 1.0 / t)
        fit = rate_fit(t, values, window=(10.0, 100.0))
        assert fit.slope == pytest.approx(-1.0, abs=1e-10)
        assert fit.window == (10.0, 100.0)
    
    def test_drops_non_positive_values(self):
        t = np.geomspace(1.0, 100.0, 20)
        values = 1.0 / t
        values[::2] = 0.0
        fit = rate_fit(t, values)
        assert fit.dropped == 10
        assert not fit.reliable
    
    def test_too_few_points(self):
        with pytest.raises(InsufficientDataError):
            rate_fit([1.0, 2.0, 3.0], [1.0, 0.5, 0.3])
    
    def test_bad_window(self):
        with pytest.raises(DomainError):
            rate_fit(np.arange(1.0, 10.0), np.ones(9), window=(5.0, 2.0))
    
    def test_scaled_sup(self):
        t = np.linspace(1.0, 10.0, 10)
        assert scaled_sup(t, 1.0 / t ** 2, lambda s: s * s) == pytest.approx(1.0)
    
    @pytest.mark.slow
    def test_ihd_rates(self, ihd_long):
        frame = ihd_long[3]
        window = (10.0, LONG_HORIZON)
        assert rate_fit(frame["t"], frame["gap_xhat"], window).slope <= -1.8
        assert rate_fit(frame["t"], frame["feas_xhat"], window).slope <= -1.8
        assert rate_fit(frame["t"], frame["vel_norm"], window).slope <= -0.8
    
    @pytest.mark.slow
    def test_scaled_gap_stays_bounded(self, ihd_long):
        p, params, traj, frame = ihd_long
        t2 = max(descent_check(traj, params, p, SystemKind.IHD).t2_detected, 10.0)
        middle = 0.5 * (t2 + LONG_HORIZON)
        early = scaled_sup(frame["t"], frame["gap_xhat"], lambda s: s * s, (t2, middle))
        late = scaled_sup(frame["t"], frame["gap_xhat"], lambda s: s * s, (middle, LONG_HORIZON))
        assert late <= 10.0 * early
    
    @pytest.mark.slow
    def test_ihdtr_velocity_vanishes(self, ihdtr_long):
        assert ihdtr_long[3]["vel_norm"].iloc[-1] <= 1e-2
    
    @pytest.mark.slow
    def test_ihdtr_velocity_trend(self, ihdtr_long):
        frame = ihdtr_long[3]
        first = frame.loc[frame["t"] <= 10.0, "vel_norm"].mean()
        last = frame.loc[frame["t"] >= LONG_HORIZON / 10.0, "vel_norm"].mean()
        assert last <= 0.1 * first


class TestTrajectoryMetrics:
    
    def test_oscillation_count(self):
        t = np.linspace(0.0, 10.0 * np.pi, 2000)
        assert oscillation_count(np.abs(np.sin(t))) == 10
        assert oscillation_count(np.exp(-t)) == 0
    
    def test_oscillation_count_short_series(self):
        assert oscillation_count([1.0, 2.0]) == 0
    
    def test_ball_crossings(self):
        frame = pd.DataFrame({"t": [0, 1, 2, 3], "x_0": [2.0, 0.5, 1.5, 0.2], "x_1": [0.0, 0.0, 0.0, 0.0]})
        assert ball_crossings(frame, 1.0) == 3
    
    @pytest.mark.slow
    def test_integral_estimates(self, ihdtr_long):
        _, params, _, frame = ihdtr_long
        estimates = integral_estimates(frame, params.schedule, t_lo=10.0)
        assert set(estimates) == {"gap", "velocity", "feasibility", "tikhonov"}
        assert all(estimate.value >= 0.0 for estimate in estimates.values())
    
    def test_integral_estimates_need_samples(self):
        p, params, traj = _run(SystemKind.IHDTR, InversePowerTikhonov(1.0, 1.5), 2.0)
        frame = diagnostics_frame(traj, params, p, SystemKind.IHDTR)
        with pytest.raises(InsufficientDataError):
            integral_estimates(frame.head(3), params.schedule)
