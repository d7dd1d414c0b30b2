"""Terminal value problems: D^alpha y = f(t, y), y(b) = ystar, scalar only.

Two routes:

* shooting -- secant iteration on the initial value, each trial solved by
  the Adams method on [a, b]; early iterations run on a coarse grid (an
  accurate step size is wasted while the initial value is still far off),
  the final ones on the full grid.
* Fredholm collocation -- the terminal problem is equivalent to a weakly
  singular Fredholm equation whose kernel splits into the Volterra part
  (t-s)^(alpha-1) for s <= t minus the fixed row (b-s)^(alpha-1); on the
  grid this is one fractional integral evaluated at t and at b, iterated by
  damped Picard with a Newton fallback.

Uniqueness of the terminal value problem holds only for scalar unknowns,
hence this module never accepts vector data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import _kernels
from .errors import ConvergenceError, ValidationError
from .gridops import GridFunction, power_moment_weights, quadrature_weights
from .ivp import AdamsConfig, FodeProblem, solve_adams

__all__ = [
    "FredholmResult",
    "ShootingConfig",
    "ShootingResult",
    "SingularEvaluationError",
    "TvpProblem",
    "green_kernel",
    "solve_fredholm_collocation",
    "solve_shooting",
]


class SingularEvaluationError(ValidationError):
    """Pointwise evaluation at a non-integrable point of the Green kernel."""


@dataclass(frozen=True)
class TvpProblem:
    """Scalar terminal value problem with datum y(b) = ystar, b in (a, a+T]."""

    alpha: float
    a: float
    b: float
    T: float
    ystar: float
    rhs: Callable[[float, float], float]

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise ValidationError(f"order must lie in (0,1], got {self.alpha}")
        if not (self.b > self.a):
            raise ValidationError("terminal point must satisfy b > a")
        if not (self.a + self.T >= self.b - 1e-15):
            raise ValidationError("horizon must reach the terminal point: a + T >= b")


@dataclass(frozen=True)
class ShootingConfig:
    g0: float
    g1: float
    max_iterations: int = 20
    tolerance: float = 1e-6

    def __post_init__(self):
        if self.g0 == self.g1:
            raise ValidationError("initial guesses must differ")
        if not (self.tolerance > 0.0):
            raise ValidationError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValidationError("max_iterations must be >= 1")


def green_kernel(t: float, s: float, b: float, alpha: float) -> float:
    """Green kernel of the terminal-value Fredholm equation.

    -(b-s)^(alpha-1) for s > t, (t-s)^(alpha-1) - (b-s)^(alpha-1) for s <= t.
    The kernel is integrable but pointwise singular at s = t (alpha < 1)
    and at s = b on the upper branch; those evaluations raise.
    """
    if not (0.0 < alpha <= 1.0):
        raise ValidationError(f"order must lie in (0,1], got {alpha}")
    if s > b or t > b:
        raise ValidationError("green_kernel: arguments must satisfy s, t <= b")
    if s > t:
        if alpha < 1.0 and s == b:
            raise SingularEvaluationError("green_kernel: singular at s = b")
        return -((b - s) ** (alpha - 1.0))
    if alpha < 1.0 and s == t:
        raise SingularEvaluationError("green_kernel: singular at s = t")
    return (t - s) ** (alpha - 1.0) - (b - s) ** (alpha - 1.0)


@dataclass(frozen=True)
class ShootingResult:
    y_a: float
    trajectory: GridFunction
    residual: float
    n_solves: int
    converged: bool


def _terminal_value(p: TvpProblem, guess: float, n_steps: int) -> GridFunction:
    prob = FodeProblem(alpha=p.alpha, a=p.a, T=p.b - p.a, y0=guess, rhs=p.rhs)
    return solve_adams(prob, AdamsConfig(N=n_steps))


def solve_shooting(
    p: TvpProblem, c: ShootingConfig, ivp_config: AdamsConfig
) -> ShootingResult:
    """Secant iteration on g -> y(b; g) - ystar.

    The first two solves run at one eighth of the configured resolution,
    later ones at full resolution; when a sign-bracketing pair exists and
    the secant proposal leaves the bracket, a bisection step is taken
    instead.  On non-convergence the best iterate is returned with
    ``converged=False`` rather than raised.
    """
    n_full = ivp_config.N
    n_coarse = max(8, n_full // 8)
    solves = 0
    evaluations = []  # (g, residual, traj or None, fine?)

    def shoot(g, fine):
        nonlocal solves
        traj = _terminal_value(p, g, n_full if fine else n_coarse)
        solves += 1
        return traj, traj.values[-1] - p.ystar

    traj0, r0 = shoot(c.g0, False)
    evaluations.append((c.g0, r0))
    best = (abs(r0), c.g0, traj0, False)
    traj1, r1 = shoot(c.g1, False)
    evaluations.append((c.g1, r1))
    if abs(r1) < best[0]:
        best = (abs(r1), c.g1, traj1, False)
    # bracket endpoints carry opposite-sign residuals when one exists
    bracket = ((c.g0, r0), (c.g1, r1)) if r0 * r1 < 0.0 else None
    g_prev, r_prev = c.g0, r0
    g_cur, r_cur = c.g1, r1
    accepted = None
    for _ in range(c.max_iterations):
        denom = r_cur - r_prev
        if denom == 0.0:
            break
        g_next = g_cur - r_cur * (g_cur - g_prev) / denom
        if bracket is not None:
            lo = min(bracket[0][0], bracket[1][0])
            hi = max(bracket[0][0], bracket[1][0])
            if not (lo <= g_next <= hi):
                g_next = 0.5 * (lo + hi)
        traj, r_next = shoot(g_next, True)
        if abs(r_next) < best[0]:
            best = (abs(r_next), g_next, traj, True)
        if bracket is not None:
            if r_next * bracket[0][1] < 0.0:
                bracket = (bracket[0], (g_next, r_next))
            else:
                bracket = ((g_next, r_next), bracket[1])
        if abs(r_next) <= c.tolerance:
            accepted = (g_next, traj, abs(r_next))
            break
        g_prev, r_prev = g_cur, r_cur
        g_cur, r_cur = g_next, r_next
    if accepted is None:
        _, g_best, traj_best, fine = best
        if not fine:
            traj_best, r_best = shoot(g_best, True)
            best = (abs(r_best), g_best, traj_best, True)
        return ShootingResult(
            y_a=best[1], trajectory=_phase_two(p, best[1], best[2], n_full),
            residual=best[0], n_solves=solves, converged=False,
        )
    g_star, traj, resid = accepted
    return ShootingResult(
        y_a=g_star, trajectory=_phase_two(p, g_star, traj, n_full),
        residual=resid, n_solves=solves, converged=True,
    )


def _phase_two(
    p: TvpProblem, y_a: float, traj_ab: GridFunction, n_full: int
) -> GridFunction:
    """With y(a) recovered, re-solve on the whole horizon [a, a+T]."""
    if abs((p.a + p.T) - p.b) <= 1e-12 * max(1.0, abs(p.b)):
        return traj_ab
    n_total = max(2, round(n_full * p.T / (p.b - p.a)))
    prob = FodeProblem(alpha=p.alpha, a=p.a, T=p.T, y0=y_a, rhs=p.rhs)
    return solve_adams(prob, AdamsConfig(N=n_total))


@dataclass(frozen=True)
class FredholmResult:
    trajectory: GridFunction
    residual: float
    iterations: int


def solve_fredholm_collocation(
    p: TvpProblem,
    nodes: int,
    max_picard: int = 30,
    tol: float = 1e-10,
) -> FredholmResult:
    """Collocation on the Fredholm form at uniform nodes over [a, b].

    The kernel integral evaluates as (I^alpha F)(t_i) - (I^alpha F)(b) with
    the product-trapezoidal fractional integral (splitting the kernel at
    s = t exactly as the two branches prescribe); the nonlinear system is
    iterated by damped Picard and, if still unresolved, Newton with a
    finite-difference Jacobian.
    """
    if nodes < 2:
        raise ValidationError("collocation needs at least 2 intervals")
    h = (p.b - p.a) / nodes
    times = p.a + h * np.arange(nodes + 1)
    P, Q = power_moment_weights(p.alpha, nodes, h)

    def apply_map(y):
        F = np.asarray([p.rhs(t, yi) for t, yi in zip(times, y)])
        z = _kernels.conv_pq(P, Q, F)
        return p.ystar + z - z[-1]

    y = np.full(nodes + 1, p.ystar, dtype=np.float64)
    iterations = 0
    residual = math.inf
    for _ in range(max_picard):
        target = apply_map(y)
        residual = float(np.max(np.abs(target - y)))
        iterations += 1
        if residual <= tol:
            return FredholmResult(
                GridFunction(p.a, h, target), residual, iterations
            )
        y = y + 0.5 * (target - y)
    # Newton on R(y) = y - apply_map(y) = 0
    L = np.empty((nodes + 1, nodes + 1))
    L[0] = 0.0
    for i in range(1, nodes + 1):
        row = np.zeros(nodes + 1)
        row[: i + 1] = quadrature_weights(p.alpha, i, h)
        L[i] = row
    L = L - L[-1][None, :]
    eps_fd = 1e-7
    for _ in range(20):
        F = np.asarray([p.rhs(t, yi) for t, yi in zip(times, y)])
        dF = np.asarray(
            [
                (p.rhs(t, yi + eps_fd) - p.rhs(t, yi - eps_fd)) / (2.0 * eps_fd)
                for t, yi in zip(times, y)
            ]
        )
        res_vec = y - (p.ystar + L @ F)
        residual = float(np.max(np.abs(res_vec)))
        iterations += 1
        if residual <= tol:
            return FredholmResult(GridFunction(p.a, h, y), residual, iterations)
        J = np.eye(nodes + 1) - L * dF[None, :]
        y = y - np.linalg.solve(J, res_vec)
    F = np.asarray([p.rhs(t, yi) for t, yi in zip(times, y)])
    residual = float(np.max(np.abs(y - (p.ystar + L @ F))))
    if residual > tol:
        raise ConvergenceError(
            f"Fredholm collocation stalled with residual {residual:.3e} "
            f"after {iterations} iterations"
        )
    return FredholmResult(GridFunction(p.a, h, y), residual, iterations)
