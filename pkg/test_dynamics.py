"""
Dynamics tests: coefficient schedules, extrapolated points and the right-hand side.
"""

import math
import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.core.exceptions import DimensionError, DomainError, NonFiniteError
from app.dynamics.schedule import (
    CoefficientSchedule,
    CustomScaling,
    CustomTikhonov,
    InversePowerTikhonov,
    PowerLawScaling,
    SystemKind,
    ZeroTikhonov,
    beta_of_t,
    eta_of_t,
)
from app.dynamics.system import PhaseVector, extrapolated_points, make_rhs, rhs
from app.problems.core import grad_lam_aug_lagrangian, grad_x_aug_lagrangian

T_GRID = np.geomspace(1.0, 1e4, 9)


class TestCoefficients:
    
    def test_beta_at_start(self, ihdtr_schedule):
        assert beta_of_t(ihdtr_schedule, 1.0) == pytest.approx((0.5, 0.5))
    
    def test_beta_baseline(self):
        s = CoefficientSchedule(alpha=3.1)
        assert beta_of_t(s, 7.0) == (0.0, 0.0)
    
    def test_beta_limit(self, ihdtr_schedule):
        assert beta_of_t(ihdtr_schedule, 1e9)[0] == pytest.approx(1.0)
    
    def test_beta_before_t0(self, ihdtr_schedule):
        with pytest.raises(DomainError):
            beta_of_t(ihdtr_schedule, 0.5)
    
    def test_eta_at_start(self, ihdtr_schedule):
        assert eta_of_t(ihdtr_schedule, 1.0) == pytest.approx(-0.5 + 3.05 / 6.2, rel=1e-12)
        assert eta_of_t(ihdtr_schedule, 1.0) == pytest.approx(-0.00806451, rel=1e-5)
    
    def test_eta_zero_for_baseline(self):
        s = CoefficientSchedule(alpha=3.1)
        assert all(eta_of_t(s, t) == 0.0 for t in T_GRID)
    
    def test_eta_asymptote(self, ihdtr_schedule):
        assert eta_of_t(ihdtr_schedule, 1e9) == pytest.approx(-0.5, rel=1e-8)
    
    def test_eta_consistent_with_beta_derivative(self, ihdtr_schedule):
        s = ihdtr_schedule
        for t in T_GRID:
            beta_t, beta_dot = beta_of_t(s, t)
            expected = (-s.alpha * beta_t + 3.0 * t * beta_dot) / (2.0 * s.alpha)
            assert eta_of_t(s, t) == pytest.approx(expected, rel=1e-12)
            closed = -s.gamma / 2.0 - (s.alpha + 3.0) * s.beta_shift / (2.0 * s.alpha * t)
            assert eta_of_t(s, t) == pytest.approx(closed, rel=1e-12, abs=1e-15)
    
    @pytest.mark.parametrize("family", [
        PowerLawScaling(2.0, 1.5), PowerLawScaling(0.5, -0.7), InversePowerTikhonov(1.0, 1.5), InversePowerTikhonov(3.0, 2.2),
    ])
    def test_derivatives_match_finite_differences(self, family):
        for t in T_GRID[1:]:
            h = 1e-5 * t
            fd = (family.value(t + h) - family.value(t - h)) / (2.0 * h)
            assert family.derivative(t) == pytest.approx(fd, rel=1e-6)
    
    def test_beta_derivative_matches_finite_differences(self, ihdtr_schedule):
        for t in T_GRID[1:]:
            h = 1e-5 * t
            fd = (beta_of_t(ihdtr_schedule, t + h)[0] - beta_of_t(ihdtr_schedule, t - h)[0]) / (2.0 * h)
            assert beta_of_t(ihdtr_schedule, t)[1] == pytest.approx(fd, rel=1e-6)


class TestScheduleValidation:
    
    def test_gamma_zero_needs_nonnegative_beta(self):
        with pytest.raises(DomainError):
            CoefficientSchedule(alpha=3.1, gamma=0.0, beta_shift=-0.5)
    
    def test_alpha_positive(self):
        with pytest.raises(DomainError):
            CoefficientSchedule(alpha=0.0)
    
    def test_t0_positive(self):
        with pytest.raises(DomainError):
            CoefficientSchedule(alpha=3.1, t0=0.0)
    
    def test_custom_scaling_wrong_derivative(self):
        with pytest.raises(DomainError):
            CoefficientSchedule(alpha=3.1, xi=CustomScaling(lambda t: t * t, lambda t: t))
    
    def test_custom_scaling_accepted(self):
        s = CoefficientSchedule(alpha=3.1, xi=CustomScaling(lambda t: math.log(1.0 + t), lambda t: 1.0 / (1.0 + t)))
        assert s.xi.value(1.0) == pytest.approx(math.log(2.0))
    
    def test_custom_tikhonov_must_decrease(self):
        with pytest.raises(DomainError):
            CoefficientSchedule(alpha=3.1, eps=CustomTikhonov(lambda t: t, lambda t: 1.0))
    
    def test_inverse_power_needs_positive_a(self):
        with pytest.raises(DomainError):
            InversePowerTikhonov(a=0.0, r=1.5)
    
    def test_for_system(self, ihdtr_schedule):
        assert ihdtr_schedule.for_system(SystemKind.IHDTR) is ihdtr_schedule
        assert ihdtr_schedule.for_system(SystemKind.IHD).eps.is_zero
        baseline = ihdtr_schedule.for_system(SystemKind.BASELINE)
        assert (baseline.gamma, baseline.beta_shift, baseline.eps.is_zero) == (0.0, 0.0, True)


class TestExtrapolatedPoints:
    
    def test_zero_velocity(self, ihdtr_schedule):
        Z = PhaseVector.at_rest([1.0, 2.0, 3.0], [4.0])
        x_hat, x_bar, lam_bar = extrapolated_points(ihdtr_schedule, 2.0, Z)
        assert_allclose(x_hat, Z.x)
        assert_allclose(x_bar, Z.x)
        assert_allclose(lam_bar, Z.lam)
    
    def test_unit_factors(self):
        s = CoefficientSchedule(alpha=3.0, gamma=1.0, beta_shift=0.0)
        Z = PhaseVector(np.zeros(2), np.zeros(1), np.array([1.0, 0.0]), np.zeros(1))
        x_hat, x_bar, _ = extrapolated_points(s, 2.0, Z)
        assert_allclose(x_hat, [1.0, 0.0])
        assert_allclose(x_bar, [1.0, 0.0])
    
    def test_experiment_start(self, ihdtr_schedule, exp1_state):
        x_hat, _, _ = extrapolated_points(ihdtr_schedule, 1.0, exp1_state)
        assert_allclose(x_hat, [0.5, -0.5, -0.5])


def _reference_rhs(s, p, t, Z, eps_on):
    """Term-by-term evaluation of the accelerations with plain numpy"""
    c, A, b, rho = p.objective.c, p.A, p.b, p.rho
    beta_t = s.gamma + s.beta_shift / t
    beta_dot = -s.beta_shift / t ** 2
    eta = (-s.alpha * beta_t + 3.0 * t * beta_dot) / (2.0 * s.alpha)
    theta = 1.5 * t / s.alpha
    xi = s.xi.value(t)
    eps = s.eps.value(t) if eps_on else 0.0
    x_hat = Z.x + beta_t * Z.vx
    x_bar = Z.x + theta * Z.vx
    lam_bar = Z.lam + theta * Z.vlam
    g = 2.0 * (c @ x_hat) * c + A.T @ lam_bar + rho * A.T @ (A @ x_hat - b) + eps * Z.x
    ax = -(s.alpha / t) * Z.vx - xi * g
    alam = -(s.alpha / t) * Z.vlam + xi * ((A @ x_bar - b) + eta * (A @ Z.vx) - theta * xi * beta_t * (A @ g))
    return ax, alam


class TestRightHandSide:
    
    def test_saddle_is_equilibrium_for_ihd(self, toy, ihd_schedule):
        Z = PhaseVector.at_rest(np.zeros(3), np.zeros(1))
        for t in T_GRID:
            dZ = rhs(ihd_schedule, toy, SystemKind.IHD, t, Z)
            assert np.max(np.abs(dZ.vx)) <= 1e-12
            assert np.max(np.abs(dZ.vlam)) <= 1e-12
    
    def test_tikhonov_term_survives_at_nonzero_saddle(self, kkt, ihdtr_schedule):
        Z = PhaseVector.at_rest(kkt.known_saddle.x, kkt.known_saddle.lam)
        t = 4.0
        dZ = rhs(ihdtr_schedule, kkt, SystemKind.IHDTR, t, Z)
        expected = -ihdtr_schedule.xi.value(t) * ihdtr_schedule.eps.value(t) * kkt.known_saddle.x
        assert_allclose(dZ.vx, expected, rtol=1e-12)
        assert np.any(dZ.vx != 0.0)
    
    def test_experiment_start_values(self, toy, ihdtr_schedule, exp1_state):
        dZ = rhs(ihdtr_schedule, toy, SystemKind.IHDTR, 1.0, exp1_state)
        ax, alam = _reference_rhs(ihdtr_schedule, toy, 1.0, exp1_state, eps_on=True)
        assert_allclose(dZ.x, exp1_state.vx)
        assert_allclose(dZ.lam, exp1_state.vlam)
        assert_allclose(dZ.vx, ax, rtol=1e-12)
        assert_allclose(dZ.vlam, alam, rtol=1e-12)
        assert_allclose(dZ.vx, [32.019355, 158.06129, 33.803226], rtol=1e-4)
        assert dZ.vlam[0] == pytest.approx(-293.5363, rel=1e-4)
    
    def test_random_states_match_reference(self, toy, ihdtr_schedule):
        rng = np.random.default_rng(3)
        for _ in range(100):
            t = float(rng.uniform(1.0, 100.0))
            Z = PhaseVector(rng.normal(size=3), rng.normal(size=1), rng.normal(size=3), rng.normal(size=1))
            for system, eps_on in ((SystemKind.IHDTR, True), (SystemKind.IHD, False)):
                dZ = rhs(ihdtr_schedule, toy, system, t, Z)
                ax, alam = _reference_rhs(ihdtr_schedule, toy, t, Z, eps_on)
                assert_allclose(dZ.vx, ax, rtol=1e-10, atol=1e-10)
                assert_allclose(dZ.vlam, alam, rtol=1e-10, atol=1e-10)
    
    def test_ihdtr_without_tikhonov_is_ihd(self, toy, ihd_schedule, ihdtr_schedule):
        rng = np.random.default_rng(5)
        for _ in range(100):
            t = float(rng.uniform(1.0, 50.0))
            Z = PhaseVector(rng.normal(size=3), rng.normal(size=1), rng.normal(size=3), rng.normal(size=1))
            reference = rhs(ihd_schedule, toy, SystemKind.IHD, t, Z).pack()
            assert np.array_equal(rhs(ihd_schedule, toy, SystemKind.IHDTR, t, Z).pack(), reference)
            assert np.array_equal(rhs(ihdtr_schedule, toy, SystemKind.IHD, t, Z).pack(), reference)
    
    def test_ihd_without_shift_is_baseline(self, toy):
        s = CoefficientSchedule(alpha=3.1, eps=ZeroTikhonov())
        rng = np.random.default_rng(9)
        for _ in range(100):
            t = float(rng.uniform(1.0, 50.0))
            Z = PhaseVector(rng.normal(size=3), rng.normal(size=1), rng.normal(size=3), rng.normal(size=1))
            assert np.array_equal(rhs(s, toy, SystemKind.IHD, t, Z).pack(),
                                  rhs(s, toy, SystemKind.BASELINE, t, Z).pack())
    
    def test_flat_form_agrees(self, toy, ihdtr_schedule, exp1_state):
        f = make_rhs(ihdtr_schedule, toy, SystemKind.IHDTR)
        assert np.array_equal(f(2.5, exp1_state.pack()), rhs(ihdtr_schedule, toy, SystemKind.IHDTR, 2.5, exp1_state).pack())
    
    def test_flat_form_rejects_wrong_length(self, toy, ihdtr_schedule):
        f = make_rhs(ihdtr_schedule, toy, SystemKind.IHDTR)
        with pytest.raises(DimensionError):
            f(2.0, np.zeros(7))
    
    def test_dual_acceleration_from_extrapolated_points(self, kkt, ihdtr_schedule):
        Z = PhaseVector(np.array([0.3, -0.2]), np.array([0.7]), np.zeros(2), np.array([0.4]))
        t = 3.0
        dZ = rhs(ihdtr_schedule, kkt, SystemKind.IHD, t, Z)
        x_hat, x_bar, lam_bar = extrapolated_points(ihdtr_schedule, t, Z)
        g = grad_x_aug_lagrangian(kkt, x_hat, lam_bar)
        theta = 1.5 * t / ihdtr_schedule.alpha
        beta_t, _ = beta_of_t(ihdtr_schedule, t)
        expected = (-(ihdtr_schedule.alpha / t) * Z.vlam + grad_lam_aug_lagrangian(kkt, x_bar)
                    - theta * beta_t * (kkt.A @ g))
        assert_allclose(dZ.vlam, expected, rtol=1e-10)
    
    def test_rejects_non_finite_state(self):
        with pytest.raises(NonFiniteError):
            PhaseVector(np.array([np.inf, 0.0, 0.0]), np.zeros(1), np.zeros(3), np.zeros(1))
    
    def test_rejects_time_before_start(self, toy, ihdtr_schedule, exp1_state):
        with pytest.raises(DomainError):
            rhs(ihdtr_schedule, toy, SystemKind.IHDTR, 0.5, exp1_state)
