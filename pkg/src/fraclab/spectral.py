"""Petrov-Galerkin solver for D^alpha y = f(t) on [-1, 1], y(-1) = y0.

Trial functions are the fractional Sturm-Liouville eigenfunctions of the
first kind, (1+t)^(alpha/2) P_{n-1}^(-alpha/2, alpha/2)(t); test functions
mirror them with (1-t)^(alpha/2) and swapped Jacobi indices.  In this pair
of spaces the stiffness matrix is diagonal, which the assembly asserts
numerically rather than assuming.

No closed form for the diagonal entries is transplanted: the fractional
derivative of each trial function is evaluated by direct singular
quadrature of its defining integral (the trial function's derivative is
known in product-rule form, and two Gauss-Jacobi rules absorb the endpoint
singularities exactly), and the tests cross-check the assembled entries
against an independent adaptive-quadrature oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_jacobi

from .errors import NumericalError, ValidationError
from .specfun import gamma, jacobi_poly

__all__ = [
    "PolyfractonomialBasis",
    "SpectralSolution",
    "assemble_system",
    "caputo_of_trial",
    "evaluate_solution",
    "residual_orthogonality",
    "solve_model_problem",
    "test_eval",
    "trial_eval",
]


class DiagonalityError(NumericalError):
    """Assembled stiffness matrix is not numerically diagonal."""


@dataclass(frozen=True)
class PolyfractonomialBasis:
    """Basis descriptor: order alpha in (0,1), size N, trial or test kind."""

    alpha: float
    N: int
    kind: str = "trial"

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ValidationError(f"basis order must lie in (0,1), got {self.alpha}")
        if self.N < 1:
            raise ValidationError(f"basis size must be >= 1, got {self.N}")
        if self.kind not in ("trial", "test"):
            raise ValidationError(f"basis kind must be trial/test, got {self.kind!r}")

    def eval(self, n: int, t):
        if self.kind == "trial":
            return trial_eval(self.alpha, n, t)
        return test_eval(self.alpha, n, t)


def _check_domain(t):
    t_arr = np.asarray(t, dtype=np.float64)
    if np.any(t_arr < -1.0) or np.any(t_arr > 1.0):
        raise ValidationError("polyfractonomials are defined on [-1, 1]")
    return t_arr


def trial_eval(alpha: float, n: int, t):
    """(1+t)^(alpha/2) P_{n-1}^(-alpha/2, alpha/2)(t); vanishes at t = -1."""
    if n < 1:
        raise ValidationError("basis index starts at 1")
    t_arr = _check_domain(t)
    out = (1.0 + t_arr) ** (0.5 * alpha) * jacobi_poly(
        n - 1, -0.5 * alpha, 0.5 * alpha, t_arr
    )
    return out if isinstance(t, np.ndarray) else float(out)


def test_eval(alpha: float, n: int, t):
    """(1-t)^(alpha/2) P_{n-1}^(alpha/2, -alpha/2)(t); vanishes at t = +1."""
    if n < 1:
        raise ValidationError("basis index starts at 1")
    t_arr = _check_domain(t)
    out = (1.0 - t_arr) ** (0.5 * alpha) * jacobi_poly(
        n - 1, 0.5 * alpha, -0.5 * alpha, t_arr
    )
    return out if isinstance(t, np.ndarray) else float(out)


def _jacobi_deriv(k: int, a: float, b: float, t):
    """d/dt P_k^(a,b)(t) = (k+a+b+1)/2 * P_{k-1}^(a+1,b+1)(t)."""
    if k == 0:
        return np.zeros_like(np.asarray(t, dtype=np.float64))
    return 0.5 * (k + a + b + 1.0) * jacobi_poly(k - 1, a + 1.0, b + 1.0, t)


def _unit_jacobi_rule(q: int, a: float, b: float):
    """Nodes/weights for int_0^1 (1-s)^a s^b g(s) ds."""
    x, w = roots_jacobi(q, a, b)
    s = 0.5 * (1.0 + x)
    return s, w * 2.0 ** (-(a + b + 1.0))


def caputo_of_trial(alpha: float, n: int, t, inner_nodes: int | None = None):
    """Caputo derivative of the n-th trial function at points t, by direct
    singular quadrature of (1/Gamma(1-alpha)) int_{-1}^t (t-tau)^-alpha u'(tau) dtau.

    With tau = -1 + (1+t) s, the two product-rule pieces of u' carry the
    weights (1-s)^-alpha s^(alpha/2 - 1) and (1-s)^-alpha s^(alpha/2); each
    is absorbed by a Gauss-Jacobi rule, with the polynomial factors left as
    the smooth integrand, so the quadrature is exact up to rounding.
    """
    t_arr = np.atleast_1d(np.asarray(_check_domain(t), dtype=np.float64))
    k = n - 1
    a, b = -0.5 * alpha, 0.5 * alpha
    q = inner_nodes if inner_nodes is not None else max(4, k + 6)
    s1, w1 = _unit_jacobi_rule(q, -alpha, 0.5 * alpha - 1.0)
    s2, w2 = _unit_jacobi_rule(q, -alpha, 0.5 * alpha)
    out = np.empty_like(t_arr)
    for i, ti in enumerate(t_arr):
        width = 1.0 + ti
        if width == 0.0:
            out[i] = np.inf if alpha > 0 else 0.0
            continue
        tau1 = -1.0 + width * s1
        tau2 = -1.0 + width * s2
        i1 = float(np.dot(w1, jacobi_poly(k, a, b, tau1)))
        i2 = float(np.dot(w2, _jacobi_deriv(k, a, b, tau2)))
        out[i] = (
            0.5 * alpha * width ** (0.5 * alpha - alpha) * i1
            + width ** (0.5 * alpha - alpha + 1.0) * i2
        ) / gamma(1.0 - alpha)
    if isinstance(t, np.ndarray):
        return out
    return float(out[0]) if out.size == 1 else out


_DIAG_TOL = 1e-8


def assemble_system(alpha: float, N: int, f, quad_nodes: int | None = None):
    """Stiffness matrix and load vector of the Petrov-Galerkin system.

    S[m, n] = <D^alpha trial_n, test_m>, b[m] = <f, test_m>, both by
    Gauss-Jacobi quadrature matched to the endpoint singularities.  Raises
    :class:`DiagonalityError` when the off-diagonal/diagonal ratio exceeds
    1e-8 (that indicates a quadrature or basis bug, not a data problem).
    """
    if N < 1:
        raise ValidationError("system size must be >= 1")
    Q = quad_nodes if quad_nodes is not None else 2 * N + 16
    half = 0.5 * alpha
    # stiffness: weight (1-t)^(alpha/2) (1+t)^(-alpha/2); the integrand's
    # remaining factor (1+t)^(alpha/2) D^alpha trial_n * P_{m-1} is polynomial
    ts, ws = roots_jacobi(Q, half, -half)
    dvals = np.empty((N, Q))
    for n in range(1, N + 1):
        dvals[n - 1] = (1.0 + ts) ** half * caputo_of_trial(alpha, n, ts)
    pvals = np.empty((N, Q))
    for m in range(1, N + 1):
        pvals[m - 1] = jacobi_poly(m - 1, half, -half, ts)
    S = pvals @ (dvals * ws).T  # S[m-1, n-1]
    diag = np.abs(np.diag(S))
    if np.any(diag == 0.0):
        raise DiagonalityError("assembled stiffness has a zero diagonal entry")
    off = np.abs(S - np.diag(np.diag(S)))
    ratio = float(np.max(off / diag[:, None]))
    if ratio > _DIAG_TOL:
        raise DiagonalityError(
            f"stiffness off-diagonal/diagonal ratio {ratio:.3e} exceeds "
            f"{_DIAG_TOL:.0e}"
        )
    # load: the quadrature weight matches the forcing's endpoint class.
    # Smooth f: weight (1-t)^(alpha/2), smooth factor f * P_{m-1}.
    # Fractional-derivative-type f (growing like (1+t)^(-alpha/2) at the left
    # endpoint, detected by probing): weight (1-t)^(alpha/2) (1+t)^(-alpha/2),
    # smooth factor f * (1+t)^(alpha/2) * P_{m-1}.
    if _forcing_is_singular(f):
        tb, wb = ts, ws
        fvals = np.asarray([f(t) for t in tb], dtype=np.float64)
        fvals = fvals * (1.0 + tb) ** half
    else:
        tb, wb = roots_jacobi(Q, half, 0.0)
        fvals = np.asarray([f(t) for t in tb], dtype=np.float64)
    bvec = np.empty(N)
    for m in range(1, N + 1):
        bvec[m - 1] = float(np.dot(wb, fvals * jacobi_poly(m - 1, half, -half, tb)))
    return S, bvec


def _forcing_is_singular(f, eps: float = 1e-8, ratio: float = 1e4) -> bool:
    """Probe the left endpoint for algebraic growth |f| ~ (1+t)^p with p < 0."""
    try:
        near = abs(float(f(-1.0 + eps)))
        far = abs(float(f(-1.0 + ratio * eps)))
    except (ArithmeticError, ValueError):
        return True
    if not math.isfinite(near):
        return True
    if near <= 1e-300 or far <= 1e-300:
        return False
    p = math.log(near / far) / math.log(1.0 / ratio)
    return p < -0.02


@dataclass(frozen=True)
class SpectralSolution:
    """Expansion y0 + sum c_n trial_n; evaluation at -1 returns y0 exactly."""

    alpha: float
    y0: float
    coefficients: np.ndarray


_SINGULAR_DIAG = 1e-13


def solve_model_problem(alpha: float, f, y0: float, N: int) -> SpectralSolution:
    """Diagonal solve c_n = b_n / S_nn; O(N) once assembled."""
    S, b = assemble_system(alpha, N, f)
    diag = np.diag(S)
    if np.any(np.abs(diag) < _SINGULAR_DIAG * np.max(np.abs(diag))):
        raise NumericalError("stiffness diagonal entry below singularity threshold")
    return SpectralSolution(alpha=alpha, y0=float(y0), coefficients=b / diag)


def evaluate_solution(sol: SpectralSolution, t):
    """y0 + sum_n c_n trial_n(t)."""
    t_arr = _check_domain(t)
    out = np.full_like(np.atleast_1d(t_arr), float(sol.y0))
    for n, c in enumerate(sol.coefficients, start=1):
        out = out + c * trial_eval(sol.alpha, n, np.atleast_1d(t_arr))
    if isinstance(t, np.ndarray):
        return out
    return float(out[0])


def residual_orthogonality(sol: SpectralSolution, f, quad_nodes: int | None = None):
    """Petrov-Galerkin residual <D^alpha Y - f, test_m> recomputed on an
    independent rule; returns max |r_m| / max |<f, test_m>|."""
    N = sol.coefficients.size
    Q = quad_nodes if quad_nodes is not None else 2 * N + 24
    S, b = assemble_system(sol.alpha, N, f, quad_nodes=Q)
    r = S @ sol.coefficients - b
    scale = float(np.max(np.abs(b))) or 1.0
    return float(np.max(np.abs(r))) / scale
