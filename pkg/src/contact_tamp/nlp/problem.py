"""Sparse constrained nonlinear program container and solve report."""

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

CONVERGED = "converged"
MAX_ITER = "max-iter"
STALLED = "stalled"
INVALID = "invalid"


@dataclass
class NLPProblem:
    """min cost(x) s.t. eq(x) = 0, ineq(x) <= 0, lb <= x <= ub.

    Jacobian callables return scipy.sparse matrices; when omitted the solver
    falls back to finite differences (only sensible for small problems).
    `cost_hess` may supply a Gauss-Newton style positive-semidefinite model
    of the cost curvature.
    """

    n: int
    cost: callable
    lb: np.ndarray = None
    ub: np.ndarray = None
    eq: callable = None
    ineq: callable = None
    cost_grad: callable = None
    eq_jac: callable = None
    ineq_jac: callable = None
    cost_hess: callable = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.lb = np.full(self.n, -np.inf) if self.lb is None else np.asarray(self.lb, float)
        self.ub = np.full(self.n, np.inf) if self.ub is None else np.asarray(self.ub, float)
        if self.lb.shape != (self.n,) or self.ub.shape != (self.n,):
            raise ValueError("bounds must have shape (n,)")
        if np.any(self.lb > self.ub):
            raise ValueError("lb must be <= ub")

    def clip(self, x):
        return np.minimum(np.maximum(x, self.lb), self.ub)

    def eq_residual(self, x):
        if self.eq is None:
            return np.zeros(0)
        return np.asarray(self.eq(x), float)

    def ineq_residual(self, x):
        if self.ineq is None:
            return np.zeros(0)
        return np.asarray(self.ineq(x), float)

    def max_violation(self, x):
        ce = self.eq_residual(x)
        ci = self.ineq_residual(x)
        ve = np.abs(ce).max() if ce.size else 0.0
        vi = np.maximum(ci, 0.0).max() if ci.size else 0.0
        return ve, vi

    # -- derivative fallbacks ------------------------------------------------

    def cost_gradient(self, x, fd_step=1e-7):
        if self.cost_grad is not None:
            return np.asarray(self.cost_grad(x), float)
        g = np.zeros(self.n)
        for k in range(self.n):
            e = np.zeros(self.n)
            e[k] = fd_step
            g[k] = (self.cost(x + e) - self.cost(x - e)) / (2 * fd_step)
        return g

    def eq_jacobian(self, x, fd_step=1e-7):
        if self.eq is None:
            return sp.csr_matrix((0, self.n))
        if self.eq_jac is not None:
            return sp.csr_matrix(self.eq_jac(x))
        return sp.csr_matrix(_fd_jacobian(self.eq_residual, x, fd_step))

    def ineq_jacobian(self, x, fd_step=1e-7):
        if self.ineq is None:
            return sp.csr_matrix((0, self.n))
        if self.ineq_jac is not None:
            return sp.csr_matrix(self.ineq_jac(x))
        return sp.csr_matrix(_fd_jacobian(self.ineq_residual, x, fd_step))

    def sparsity_patterns(self, x):
        """Boolean CSR patterns of both Jacobians at a probe point."""
        Je = self.eq_jacobian(x)
        Ji = self.ineq_jacobian(x)
        return (Je != 0), (Ji != 0)


def _fd_jacobian(fn, x, h):
    r0 = fn(x)
    J = np.zeros((r0.size, x.size))
    for k in range(x.size):
        e = np.zeros(x.size)
        e[k] = h
        J[:, k] = (fn(x + e) - fn(x - e)) / (2 * h)
    return J


@dataclass
class SolveReport:
    """Outcome of one solve: primal point, feasibility and bookkeeping."""

    x: np.ndarray
    cost: float
    max_eq_violation: float
    max_ineq_violation: float
    iterations: int
    termination: str
    wall_time: float

    def __post_init__(self):
        if self.termination not in (CONVERGED, MAX_ITER, STALLED, INVALID):
            raise ValueError(f"unknown termination reason {self.termination!r}")
        if self.max_eq_violation < 0 or self.max_ineq_violation < 0:
            raise ValueError("violations must be nonnegative")

    @property
    def max_violation(self):
        return max(self.max_eq_violation, self.max_ineq_violation)

    def to_dict(self):
        return {
            "cost": float(self.cost),
            "max_eq_violation": float(self.max_eq_violation),
            "max_ineq_violation": float(self.max_ineq_violation),
            "iterations": int(self.iterations),
            "termination": self.termination,
            "wall_time": float(self.wall_time),
        }


def check_derivatives(problem, x, n_directions=6, fd_step=1e-6, seed=0, dense=None):
    """Max relative error of provided derivatives against central differences.

    Small problems are checked column by column; larger ones along random
    directions (which still exercises every residual row).
    """
    rng = np.random.default_rng(seed)
    x = np.asarray(x, float)
    if dense is None:
        dense = problem.n <= 60
    worst = 0.0

    def rel(a, b):
        denom = max(np.abs(a).max() if np.size(a) else 0.0,
                    np.abs(b).max() if np.size(b) else 0.0, 1.0)
        return np.abs(a - b).max() / denom if np.size(a) else 0.0

    g = problem.cost_gradient(x)
    Je = problem.eq_jacobian(x)
    Ji = problem.ineq_jacobian(x)

    if dense:
        gfd = np.zeros(problem.n)
        for k in range(problem.n):
            e = np.zeros(problem.n)
            e[k] = fd_step
            gfd[k] = (problem.cost(x + e) - problem.cost(x - e)) / (2 * fd_step)
        worst = max(worst, rel(g, gfd))
        if Je.shape[0]:
            worst = max(worst, rel(Je.toarray(), _fd_jacobian(problem.eq_residual, x, fd_step)))
        if Ji.shape[0]:
            worst = max(worst, rel(Ji.toarray(), _fd_jacobian(problem.ineq_residual, x, fd_step)))
        return worst

    for _ in range(n_directions):
        d = rng.normal(size=problem.n)
        d /= np.linalg.norm(d)
        gd = (problem.cost(x + fd_step * d) - problem.cost(x - fd_step * d)) / (2 * fd_step)
        worst = max(worst, rel(np.array([g @ d]), np.array([gd])))
        if Je.shape[0]:
            rd = (problem.eq_residual(x + fd_step * d) - problem.eq_residual(x - fd_step * d)) / (
                2 * fd_step
            )
            worst = max(worst, rel(Je @ d, rd))
        if Ji.shape[0]:
            rd = (problem.ineq_residual(x + fd_step * d) - problem.ineq_residual(x - fd_step * d)) / (
                2 * fd_step
            )
            worst = max(worst, rel(Ji @ d, rd))
    return worst
