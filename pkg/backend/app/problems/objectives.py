"""
Convex objective variants for linear-equality-constrained problems.
Each variant exposes value, gradient and (where closed form) Hessian.
"""

from typing import Callable, Optional
import numpy as np
from scipy import linalg

from app.core.exceptions import ConvexityError, DimensionError, DomainError, ensure_finite

GRADIENT_CHECK_POINTS = 3
GRADIENT_RTOL = 1e-6


class ConvexObjective:
    """Continuously differentiable convex f: R^n -> R"""
    
    dim: int
    
    def value(self, x: np.ndarray) -> float:
        raise NotImplementedError
    
    def gradient(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError
    
    def hessian(self) -> Optional[np.ndarray]:
        """Constant Hessian for quadratic variants, None otherwise"""
        return None
    
    def linear_term(self) -> np.ndarray:
        """Gradient at the origin for quadratic variants"""
        return np.zeros(self.dim)
    
    @property
    def is_quadratic(self) -> bool:
        return self.hessian() is not None
    
    def _check_dim(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise DimensionError(f"expected x of shape ({self.dim},), got {x.shape}")
        return x


class QuadraticObjective(ConvexObjective):
    """f(x) = 0.5 x^T Q x + q^T x with Q symmetric PSD"""
    
    SYMMETRY_RTOL = 1e-12
    PSD_RTOL = 1e-10
    
    def __init__(self, Q, q=None):
        Q = np.array(Q, dtype=float, ndmin=2)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise DimensionError(f"Q must be square, got shape {Q.shape}")
        self.dim = Q.shape[0]
        q = np.zeros(self.dim) if q is None else np.array(q, dtype=float).reshape(-1)
        if q.shape != (self.dim,):
            raise DimensionError(f"q must have length {self.dim}, got {q.shape}")
        ensure_finite(Q, "Q")
        ensure_finite(q, "q")
        
        scale = linalg.norm(Q, 2) if Q.any() else 0.0
        if linalg.norm(Q - Q.T) > self.SYMMETRY_RTOL * max(scale, 1.0):
            raise ConvexityError("Q is not symmetric")
        Q = 0.5 * (Q + Q.T)
        smallest = linalg.eigh(Q, eigvals_only=True)[0]
        if smallest < -self.PSD_RTOL * scale:
            raise ConvexityError(f"Q is not positive semidefinite (smallest eigenvalue {smallest:.3e})")
        
        Q.setflags(write=False)
        q.setflags(write=False)
        self.Q = Q
        self.q = q
    
    def value(self, x: np.ndarray) -> float:
        x = self._check_dim(x)
        return float(0.5 * x @ self.Q @ x + self.q @ x)
    
    def gradient(self, x: np.ndarray) -> np.ndarray:
        x = self._check_dim(x)
        return self.Q @ x + self.q
    
    def hessian(self) -> np.ndarray:
        return self.Q
    
    def linear_term(self) -> np.ndarray:
        return self.q
    
    @property
    def lipschitz(self) -> float:
        return float(linalg.norm(self.Q, 2))


class RankOneSquaredObjective(ConvexObjective):
    """f(x) = (c^T x)^2"""
    
    def __init__(self, c):
        c = np.array(c, dtype=float).reshape(-1)
        if c.size == 0:
            raise DimensionError("c must be non-empty")
        ensure_finite(c, "c")
        c.setflags(write=False)
        self.c = c
        self.dim = c.size
    
    def value(self, x: np.ndarray) -> float:
        x = self._check_dim(x)
        return float((self.c @ x) ** 2)
    
    def gradient(self, x: np.ndarray) -> np.ndarray:
        x = self._check_dim(x)
        return 2.0 * (self.c @ x) * self.c
    
    def hessian(self) -> np.ndarray:
        return 2.0 * np.outer(self.c, self.c)
    
    @property
    def lipschitz(self) -> float:
        return float(2.0 * self.c @ self.c)


class CallbackObjective(ConvexObjective):
    """
    User-supplied value and gradient; convexity is the caller's responsibility.
    
    The gradient is compared with central finite differences at a few seeded
    random points on construction (check_gradient=False skips this).
    """
    
    def __init__(self, dim: int, value_fn: Callable[[np.ndarray], float],
                 gradient_fn: Callable[[np.ndarray], np.ndarray],
                 lipschitz: Optional[float] = None, check_gradient: bool = True):
        if dim < 1:
            raise DimensionError("dim must be >= 1")
        self.dim = int(dim)
        self._value_fn = value_fn
        self._gradient_fn = gradient_fn
        self.lipschitz = lipschitz
        if check_gradient:
            self._check_gradient()
    
    def _check_gradient(self) -> None:
        rng = np.random.default_rng(0)
        for _ in range(GRADIENT_CHECK_POINTS):
            x = rng.normal(size=self.dim)
            exact = self.gradient(x)
            approx = finite_difference_gradient(self.value, x)
            tol = GRADIENT_RTOL * np.abs(exact) + GRADIENT_RTOL * max(1.0, float(np.linalg.norm(exact)))
            if np.any(np.abs(approx - exact) > tol):
                raise DomainError(
                    f"callback gradient disagrees with finite differences at x={x}: "
                    f"{exact} vs {approx}"
                )
    
    def value(self, x: np.ndarray) -> float:
        x = self._check_dim(x)
        return float(self._value_fn(x))
    
    def gradient(self, x: np.ndarray) -> np.ndarray:
        x = self._check_dim(x)
        g = np.asarray(self._gradient_fn(x), dtype=float).reshape(-1)
        if g.shape != (self.dim,):
            raise DimensionError(f"callback gradient has shape {g.shape}, expected ({self.dim},)")
        return ensure_finite(g, "callback gradient")


def finite_difference_gradient(fn: Callable[[np.ndarray], float], x: np.ndarray,
                               h: float = 1e-6) -> np.ndarray:
    """Central finite-difference gradient of a scalar function"""
    x = np.asarray(x, dtype=float)
    grad = np.empty_like(x)
    for i in range(x.size):
        step = np.zeros_like(x)
        step[i] = h * max(1.0, abs(x[i]))
        grad[i] = (fn(x + step) - fn(x - step)) / (2.0 * step[i])
    return grad
