"""
Tikhonov path tests.
"""

import numpy as np
import pytest

from app.core.exceptions import DomainError
from app.problems.core import LinearConstraint, Problem
from app.problems.objectives import CallbackObjective
from app.tikhonov.path import path_scan, tikhonov_point

GRID = [1.0, 0.1, 0.01, 1e-4]


def _closed_form(eps):
    return np.full(2, 3.0 / (3.0 + eps))


class TestTikhonovPoint:
    
    @pytest.mark.parametrize("eps", GRID)
    def test_quadratic_closed_form(self, kkt, eps):
        point = tikhonov_point(kkt, np.array([-1.0]), eps)
        assert np.allclose(point.x_eps, _closed_form(eps), rtol=0, atol=1e-9)
        assert point.residual <= 1e-8
    
    def test_rejects_nonpositive_eps(self, kkt):
        with pytest.raises(DomainError):
            tikhonov_point(kkt, np.array([-1.0]), 0.0)
    
    def test_rejects_eps_below_floor(self, kkt):
        with pytest.raises(DomainError):
            tikhonov_point(kkt, np.array([-1.0]), 1e-13)
    
    def test_callback_needs_lipschitz_bound(self):
        objective = CallbackObjective(2, lambda x: 0.5 * x @ x, lambda x: x)
        p = Problem(objective, LinearConstraint([[1.0, 1.0]], [2.0]),
                    known_saddle=(np.ones(2), -np.ones(1)))
        with pytest.raises(DomainError):
            tikhonov_point(p, np.array([-1.0]), 0.1)


class TestPathScan:
    
    def test_kkt_path(self, kkt):
        points = path_scan(kkt, None, GRID)
        assert [pt.eps for pt in points] == GRID
        for point in points:
            assert np.allclose(point.x_eps, _closed_form(point.eps), rtol=0, atol=1e-9)
            assert point.norm <= np.sqrt(2.0) + 1e-12
            assert point.residual <= 1e-8
    
    def test_distance_to_solution_shrinks(self, kkt):
        errors = [np.linalg.norm(pt.x_eps - np.ones(2)) for pt in path_scan(kkt, None, GRID)]
        assert all(b < a for a, b in zip(errors, errors[1:]))
    
    def test_toy_path_is_zero(self, toy):
        for point in path_scan(toy, None, [1.0, 1e-2, 1e-4]):
            assert np.allclose(point.x_eps, 0.0, atol=1e-14)
    
    def test_empty_grid(self, kkt):
        assert path_scan(kkt, None, []) == []
    
    @pytest.mark.parametrize("grid", [[0.1, 0.1], [0.01, 0.1], [1.0, -1.0]])
    def test_rejects_bad_grid(self, kkt, grid):
        with pytest.raises(DomainError):
            path_scan(kkt, None, grid)
    
    def test_callback_objective_uses_gradient_descent(self):
        objective = CallbackObjective(2, lambda x: 0.5 * x @ x, lambda x: x, lipschitz=1.0)
        p = Problem(objective, LinearConstraint([[1.0, 1.0]], [2.0]),
                    known_saddle=(np.ones(2), -np.ones(1)), name="callback_kkt")
        points = path_scan(p, None, GRID)
        for point in points:
            assert point.residual <= 1e-8
            assert np.allclose(point.x_eps, _closed_form(point.eps), rtol=0, atol=1e-7)
