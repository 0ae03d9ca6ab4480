"""Augmented-Lagrangian solver with a damped Gauss-Newton inner loop.

Equalities enter the augmented term with multipliers; inequalities through a
squared hinge (Powell-Hestenes-Rockafellar). Bounds are handled by
projection inside the line search. Deterministic: identical inputs and
options give identical iterates.
"""

import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .problem import CONVERGED, INVALID, MAX_ITER, STALLED, SolveReport


@dataclass
class SolverOptions:
    outer_iterations: int = 50
    inner_iterations: int = 40
    tol_feasibility: float = 1e-6
    tol_stationarity: float = 1e-6
    rho_init: float = 10.0
    rho_growth: float = 10.0
    rho_max: float = 1e8
    damping_init: float = 1e-6
    line_search_shrink: float = 0.5
    line_search_steps: int = 25
    armijo: float = 1e-4
    log: callable = None

    def say(self, msg):
        if self.log is not None:
            self.log(msg)


class _ALWorkspace:
    def __init__(self, problem, options):
        self.problem = problem
        self.opt = options
        self.mu = None
        self.nu = None
        self.rho = options.rho_init
        self.evals = 0

    def residuals(self, x):
        self.evals += 1
        return self.problem.eq_residual(x), self.problem.ineq_residual(x)

    def merit(self, x, ce=None, ci=None):
        p = self.problem
        if ce is None or ci is None:
            ce, ci = self.residuals(x)
        val = p.cost(x)
        if ce.size:
            val += self.mu @ ce + 0.5 * self.rho * ce @ ce
        if ci.size:
            hinge = np.maximum(0.0, self.nu + self.rho * ci)
            val += (hinge @ hinge - self.nu @ self.nu) / (2.0 * self.rho)
        return val

    def merit_grad_hess(self, x, ce, ci):
        """Gradient and Gauss-Newton Hessian of the AL merit."""
        p = self.problem
        g = p.cost_gradient(x)
        n = p.n
        H = None
        if p.cost_hess is not None:
            H = sp.csr_matrix(p.cost_hess(x))
        else:
            H = sp.csr_matrix((n, n))
        if ce.size:
            Je = p.eq_jacobian(x)
            g = g + Je.T @ (self.mu + self.rho * ce)
            H = H + self.rho * (Je.T @ Je)
        if ci.size:
            Ji = p.ineq_jacobian(x)
            hinge = np.maximum(0.0, self.nu + self.rho * ci)
            g = g + Ji.T @ hinge
            active = (hinge > 0.0).astype(float)
            D = sp.diags(active * self.rho)
            H = H + Ji.T @ (D @ Ji)
        return g, H.tocsc()


def _projected_gradient_norm(x, g, lb, ub):
    step = np.clip(x - g, lb, ub) - x
    return np.abs(step).max() if step.size else 0.0


def solve(problem, x0, options=None):
    """Local solution of `problem` from `x0` (clamped into the bounds)."""
    opt = options or SolverOptions()
    t_start = time.perf_counter()
    x = problem.clip(np.asarray(x0, float).copy())

    ce, ci = problem.eq_residual(x), problem.ineq_residual(x)
    f0 = problem.cost(x)
    if not (np.all(np.isfinite(ce)) and np.all(np.isfinite(ci)) and np.isfinite(f0)):
        return SolveReport(x, float("nan"), float("inf"), float("inf"), 0, INVALID,
                           time.perf_counter() - t_start)

    ws = _ALWorkspace(problem, opt)
    ws.mu = np.zeros(ce.size)
    ws.nu = np.zeros(ci.size)

    def viol(ce, ci):
        ve = np.abs(ce).max() if ce.size else 0.0
        vi = np.maximum(ci, 0.0).max() if ci.size else 0.0
        return max(ve, vi)

    # feasible stationary start: return straight away
    g0 = problem.cost_gradient(x)
    if viol(ce, ci) <= opt.tol_feasibility and _projected_gradient_norm(
        x, g0, problem.lb, problem.ub
    ) <= opt.tol_stationarity:
        ve = np.abs(ce).max() if ce.size else 0.0
        vi = np.maximum(ci, 0.0).max() if ci.size else 0.0
        return SolveReport(x, f0, ve, vi, 0, CONVERGED, time.perf_counter() - t_start)

    total_inner = 0
    prev_viol = viol(ce, ci)
    best = (x.copy(), f0, ce, ci)
    stall_count = 0
    termination = MAX_ITER

    for outer in range(opt.outer_iterations):
        damping = opt.damping_init
        x, inner_used, ce, ci = _inner_gauss_newton(ws, x, damping)
        total_inner += inner_used

        cur_viol = viol(ce, ci)
        fx = problem.cost(x)
        opt.say(
            f"outer {outer:3d} rho={ws.rho:8.1e} viol={cur_viol:9.2e} cost={fx:12.5e}"
        )
        if cur_viol < viol(best[2], best[3]) or (
            abs(cur_viol - viol(best[2], best[3])) < 1e-12 and fx < best[1]
        ):
            best = (x.copy(), fx, ce, ci)

        g, _ = ws.merit_grad_hess(x, ce, ci)
        stationary = _projected_gradient_norm(x, g, problem.lb, problem.ub)
        if cur_viol <= opt.tol_feasibility and stationary <= max(
            opt.tol_stationarity, 1e-6 * (1.0 + abs(fx))
        ):
            termination = CONVERGED
            break

        # multiplier update / penalty growth
        if cur_viol <= 0.25 * prev_viol or cur_viol <= opt.tol_feasibility:
            if ce.size:
                ws.mu = ws.mu + ws.rho * ce
            if ci.size:
                ws.nu = np.maximum(0.0, ws.nu + ws.rho * ci)
            stall_count = 0
        else:
            if ws.rho < opt.rho_max:
                ws.rho = min(ws.rho * opt.rho_growth, opt.rho_max)
            else:
                if ce.size:
                    ws.mu = ws.mu + ws.rho * ce
                if ci.size:
                    ws.nu = np.maximum(0.0, ws.nu + ws.rho * ci)
                stall_count += 1
                if stall_count >= 4:
                    termination = STALLED
                    break
        prev_viol = min(prev_viol, cur_viol) if cur_viol > 0 else cur_viol

    x, fx, ce, ci = best
    ve = np.abs(ce).max() if ce.size else 0.0
    vi = np.maximum(ci, 0.0).max() if ci.size else 0.0
    return SolveReport(
        x, fx, ve, vi, total_inner, termination, time.perf_counter() - t_start
    )


def _inner_gauss_newton(ws, x, damping):
    """Minimize the AL merit for fixed multipliers/penalty; returns new point.

    Projected Gauss-Newton: variables pinned at an active bound (or with
    lb == ub) are excluded from the linear solve, the rest take a damped
    Newton step followed by a projected backtracking line search.
    """
    problem, opt = ws.problem, ws.opt
    ce, ci = ws.residuals(x)
    merit = ws.merit(x, ce, ci)
    iterations = 0
    for _ in range(opt.inner_iterations):
        g, H = ws.merit_grad_hess(x, ce, ci)
        if _projected_gradient_norm(x, g, problem.lb, problem.ub) <= opt.tol_stationarity:
            break
        tol_active = 1e-12
        at_lower = (x - problem.lb <= tol_active) & (g > 0)
        at_upper = (problem.ub - x <= tol_active) & (g < 0)
        free = ~(at_lower | at_upper | (problem.ub - problem.lb <= tol_active))
        if not np.any(free):
            break
        free_idx = np.nonzero(free)[0]
        Hff = H[free_idx][:, free_idx]
        gf = g[free_idx]
        step = None
        for _ in range(8):
            try:
                sf = spla.spsolve(
                    (Hff + damping * sp.identity(len(free_idx), format="csc")).tocsc(),
                    -gf,
                )
                if np.all(np.isfinite(sf)):
                    step = np.zeros(problem.n)
                    step[free_idx] = sf
                    break
            except Exception:
                pass
            damping = max(damping * 10.0, 1e-8)
            step = None
        if step is None:
            break

        # backtracking with bound projection
        alpha = 1.0
        accepted = False
        for _ in range(opt.line_search_steps):
            x_try = problem.clip(x + alpha * step)
            d = x_try - x
            if np.abs(d).max() < 1e-14:
                break
            ce_t, ci_t = ws.residuals(x_try)
            if np.all(np.isfinite(ce_t)) and np.all(np.isfinite(ci_t)):
                m_try = ws.merit(x_try, ce_t, ci_t)
                if m_try <= merit + opt.armijo * alpha * (g @ d) or m_try < merit:
                    x, ce, ci, merit = x_try, ce_t, ci_t, m_try
                    accepted = True
                    break
            alpha *= opt.line_search_shrink
        iterations += 1
        if not accepted:
            damping *= 10.0
            if damping > 1e8:
                break
            continue
        damping = max(damping / 3.0, opt.damping_init)
    return x, iterations, ce, ci
