"""Special functions: gamma, two-parameter Mittag-Leffler, Jacobi polynomials,
and the power kernel t^(beta-1)/Gamma(beta).

The Mittag-Leffler routine is the exact-solution oracle for every linear
solver test in the package, so it is self-validating: each evaluation path
carries an error estimate and raises :class:`MittagLefflerError` instead of
returning a value it cannot vouch for.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import NumericalError, PoleError, ValidationError

__all__ = [
    "GAMMA_OVERFLOW_X",
    "MittagLefflerError",
    "PowerKernelParam",
    "gamma",
    "jacobi_poly",
    "mittag_leffler",
    "power_kernel",
    "recip_gamma",
]


class MittagLefflerError(NumericalError):
    """The Mittag-Leffler evaluation failed its internal accuracy check."""


# --------------------------------------------------------------------------
# gamma

# Lanczos approximation, g = 7, 9 terms.
_LANCZOS_G = 7.0
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)

# Gamma(x) overflows double precision just above this point.
GAMMA_OVERFLOW_X = 171.61


def _sinpi(x: float) -> float:
    """sin(pi*x) with exact argument reduction modulo 2."""
    r = x - round(x)
    s = math.sin(math.pi * r)
    if round(x) % 2 != 0:
        s = -s
    return s


def _gamma_positive(x: float) -> float:
    # x >= 0.5; split the power to avoid intermediate overflow near x ~ 170
    z = x - 1.0
    acc = _LANCZOS[0]
    for i in range(1, len(_LANCZOS)):
        acc += _LANCZOS[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    half_pow = t ** (0.5 * (z + 0.5))
    return math.sqrt(2.0 * math.pi) * acc * (half_pow * math.exp(-t)) * half_pow


def gamma(x: float) -> float:
    """Gamma function on the real line.

    Raises :class:`PoleError` at non-positive integers and ``OverflowError``
    past the double-precision overflow point.
    """
    x = float(x)
    if math.isnan(x):
        raise ValidationError("gamma: argument is NaN")
    if x <= 0.0 and x == math.floor(x):
        raise PoleError(f"gamma: pole at non-positive integer x={x}")
    if x > GAMMA_OVERFLOW_X:
        raise OverflowError(f"gamma: overflow for x={x} > {GAMMA_OVERFLOW_X}")
    if x >= 0.5:
        return _gamma_positive(x)
    # reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
    return math.pi / (_sinpi(x) * _gamma_positive(1.0 - x))


def recip_gamma(x: float) -> float:
    """1/Gamma(x); entire, returns 0.0 at the poles of Gamma."""
    x = float(x)
    if x <= 0.0 and x == math.floor(x):
        return 0.0
    if x > GAMMA_OVERFLOW_X:
        # 1/Gamma underflows smoothly; go through logs
        return math.exp(-math.lgamma(x))
    return 1.0 / gamma(x)


# --------------------------------------------------------------------------
# Mittag-Leffler E_{alpha,beta}(z), real argument

_ML_MAX_TERMS = 20000
_ML_CANCEL_LIMIT = 1.0e4  # max |term| / |sum| tolerated for the series path
_ML_TOL = 1.0e-12


def _ml_series(alpha: float, beta: float, z: float):
    """Partial sums of sum_k z^k / Gamma(alpha k + beta).

    Returns (value, max_abs_term, converged).  Terms are generated in log
    space once |z|^k leaves the comfortable range.
    """
    if z == 0.0:
        return recip_gamma(beta), abs(recip_gamma(beta)), True
    total = 0.0
    max_term = 0.0
    log_abs_z = math.log(abs(z))
    sign_z = 1.0 if z > 0 else -1.0
    term_sign = 1.0
    for k in range(_ML_MAX_TERMS):
        x = alpha * k + beta
        if x <= 0.0 and x == math.floor(x):
            term = 0.0
        else:
            log_term = k * log_abs_z - math.lgamma(x)
            if log_term > 700.0:
                raise OverflowError(
                    f"mittag_leffler({alpha}, {beta}, {z}): series term overflows"
                )
            mag = math.exp(log_term)
            # Gamma(x) alternates sign between consecutive negative integers:
            # negative on (-1,0), positive on (-2,-1), ...
            gamma_sign = 1.0
            if x < 0.0 and math.floor(x) % 2 == 1:
                gamma_sign = -1.0
            term = term_sign * gamma_sign * mag
        total += term
        at = abs(term)
        if at > max_term:
            max_term = at
        # convergence: a decaying tail bounded by a geometric estimate
        if k > 2 and at <= 1e-17 * (abs(total) + 1e-300) and alpha * k + beta > 1.5:
            return total, max_term, True
        term_sign *= sign_z
    return total, max_term, False


def _ml_alpha_one(beta: float, z: float) -> float:
    """E_{1,beta}(z) by analytic reduction (exact identities, stable for z < 0).

    beta a non-positive integer or 1 collapses to z^(1-beta) e^z; beta >= 1
    uses the Kummer transform E_{1,b}(z) = e^z M(b-1, b, -z)/Gamma(b) whose
    series has no cancellation for z < 0; smaller beta is lifted with
    E_{1,b}(z) = z E_{1,b+1}(z) + 1/Gamma(b).
    """
    if beta == round(beta) and beta <= 1.0:
        m = int(round(1.0 - beta))
        return z**m * math.exp(z)
    if beta >= 1.0:
        x = -z
        term = 1.0
        total = 1.0
        for k in range(1, _ML_MAX_TERMS):
            term *= x / k
            contrib = term * (beta - 1.0) / (beta - 1.0 + k)
            total += contrib
            if abs(contrib) <= 1e-17 * abs(total) and k > x:
                return math.exp(z) * total * recip_gamma(beta)
        raise MittagLefflerError(
            f"mittag_leffler(1, {beta}, {z}): Kummer series did not converge"
        )
    return z * _ml_alpha_one(beta + 1.0, z) + recip_gamma(beta)


def _ml_contour(alpha: float, beta: float, z: float) -> float:
    """Ray-plus-arc contour evaluation for z < 0, 0 < alpha < 2.

    Integrates e^{zeta^(1/alpha)} zeta^((1-beta)/alpha) / (zeta - z) over two
    rays at angles +-mu (joined by an arc of radius eps), which represents
    E_{alpha,beta}(z) whenever mu < |arg z| = pi.  The ray integral is taken
    in the variable u = r^(1/alpha) so the integrand decays like
    exp(u cos(mu/alpha)).
    """
    lo = 0.5 * alpha * math.pi
    hi = min(alpha * math.pi, math.pi)
    mu = 0.5 * (lo + hi)
    if not (lo < mu < math.pi):
        raise MittagLefflerError(
            f"mittag_leffler: no admissible contour angle for alpha={alpha}"
        )
    eps = min(1.0, 0.5 * abs(z))
    c = complex(math.cos(mu / alpha), math.sin(mu / alpha))
    eimu = complex(math.cos(mu), math.sin(mu))
    decay = -c.real  # > 0 required for ray convergence
    if decay <= 1e-3:
        raise MittagLefflerError(
            f"mittag_leffler: contour decays too slowly for alpha={alpha}"
        )
    u0 = eps ** (1.0 / alpha)
    u_cut = (745.0 / decay) ** 1.0  # exp underflows beyond this point

    def ray_integrand(u):
        zeta = (u**alpha) * eimu
        val = np.exp(u * c) * (u ** (1.0 - beta)) * np.exp(1j * mu * (1.0 - beta) / alpha)
        val = val * eimu * (u ** (alpha - 1.0)) / (zeta - z)
        return val.imag

    def arc_integrand(phi):
        zeta = eps * complex(math.cos(phi), math.sin(phi))
        w = zeta ** (1.0 / alpha)
        val = np.exp(w) * zeta ** ((1.0 - beta) / alpha) * zeta / (zeta - z)
        return val.real

    ray_val, ray_err = quad(
        ray_integrand, u0, u_cut, epsabs=1e-14, epsrel=1e-12, limit=400
    )
    arc_val, arc_err = quad(
        arc_integrand, 0.0, mu, epsabs=1e-14, epsrel=1e-12, limit=200
    )
    # rays contribute (1/pi) Int Im[...] du, the arc (1/(alpha pi)) Int Re[...] dphi
    result = ray_val / math.pi + arc_val / (alpha * math.pi)
    # roundoff floor: cancellation cannot be resolved below eps * integrand scale
    sample_scale = max(
        abs(ray_integrand(u0 + 0.1)),
        abs(ray_integrand(u0 + 1.0)),
        abs(arc_integrand(0.0)),
        abs(arc_integrand(0.5 * mu)),
    )
    est = (ray_err + arc_err) / math.pi + 5e-16 * sample_scale
    if est > 1e-10 * (abs(result) + 1e-30):
        raise MittagLefflerError(
            f"mittag_leffler({alpha}, {beta}, {z}): contour quadrature error "
            f"estimate {est:.2e} too large for value {result:.6e}"
        )
    return result


def mittag_leffler(alpha: float, beta: float, z: float) -> float:
    """Two-parameter Mittag-Leffler function E_{alpha,beta}(z), real z.

    Series summation where it is numerically safe (z >= 0, or |z| <= 1);
    for z < -1 a ray-contour integral representation is used.  Raises
    :class:`MittagLefflerError` when the internal error estimate fails and
    ``OverflowError`` when the value exceeds double range.
    """
    alpha = float(alpha)
    beta = float(beta)
    z = float(z)
    if alpha <= 0.0:
        raise ValidationError(f"mittag_leffler: alpha must be > 0, got {alpha}")
    if math.isnan(z) or math.isnan(beta):
        raise ValidationError("mittag_leffler: NaN argument")
    if z == 0.0:
        return recip_gamma(beta)
    if z > 0.0 or abs(z) <= 1.0:
        value, max_term, converged = _ml_series(alpha, beta, z)
        if not converged:
            raise MittagLefflerError(
                f"mittag_leffler({alpha}, {beta}, {z}): series did not converge"
            )
        if z > 0.0 or max_term <= _ML_CANCEL_LIMIT * (abs(value) + 1e-300):
            return value
        # fall through to the contour when cancellation ate the series
    if z < 0.0 and alpha == 1.0:
        return _ml_alpha_one(beta, z)
    if z < 0.0 and 0.0 < alpha < 2.0:
        return _ml_contour(alpha, beta, z)
    if z < 0.0 and alpha >= 2.0:
        value, max_term, converged = _ml_series(alpha, beta, z)
        if converged and max_term <= _ML_CANCEL_LIMIT * (abs(value) + 1e-300):
            return value
        raise MittagLefflerError(
            f"mittag_leffler({alpha}, {beta}, {z}): series unreliable and no "
            "integral representation available for alpha >= 2"
        )
    raise MittagLefflerError(f"mittag_leffler({alpha}, {beta}, {z}): no method")


# --------------------------------------------------------------------------
# Jacobi polynomials


def jacobi_poly(n: int, a: float, b: float, t):
    """Jacobi polynomial P_n^(a,b)(t) by the forward three-term recurrence.

    ``t`` may be a scalar or ndarray with entries in [-1, 1].
    """
    if n < 0 or n != int(n):
        raise ValidationError(f"jacobi_poly: degree must be a non-negative int, got {n}")
    if a <= -1.0 or b <= -1.0:
        raise ValidationError(f"jacobi_poly: parameters must exceed -1, got a={a}, b={b}")
    t_arr = np.asarray(t, dtype=np.float64)
    if np.any(t_arr < -1.0) or np.any(t_arr > 1.0):
        raise ValidationError("jacobi_poly: t outside [-1, 1]")
    n = int(n)
    p_prev = np.ones_like(t_arr)
    if n == 0:
        return p_prev if isinstance(t, np.ndarray) else float(p_prev)
    p_cur = 0.5 * (a - b) + 0.5 * (a + b + 2.0) * t_arr
    for k in range(2, n + 1):
        s = 2.0 * k + a + b
        c1 = 2.0 * k * (k + a + b) * (s - 2.0)
        c2 = (s - 1.0) * (a * a - b * b)
        c3 = (s - 2.0) * (s - 1.0) * s
        c4 = 2.0 * (k + a - 1.0) * (k + b - 1.0) * s
        p_next = ((c2 + c3 * t_arr) * p_cur - c4 * p_prev) / c1
        p_prev, p_cur = p_cur, p_next
    return p_cur if isinstance(t, np.ndarray) else float(p_cur)


# --------------------------------------------------------------------------
# power kernel


@dataclass(frozen=True)
class PowerKernelParam:
    """Order parameter of the power kernel t^(beta-1)/Gamma(beta)."""

    beta: float

    def __post_init__(self):
        if not (self.beta > 0.0):
            raise ValidationError(f"power kernel requires beta > 0, got {self.beta}")


def power_kernel(param: PowerKernelParam, t):
    """Evaluate t^(beta-1)/Gamma(beta); diverges as t -> 0+ when beta < 1,
    so callers must keep t strictly positive."""
    t_arr = np.asarray(t, dtype=np.float64)
    if np.any(t_arr <= 0.0):
        raise ValidationError("power_kernel: t must be strictly positive")
    out = t_arr ** (param.beta - 1.0) / gamma(param.beta)
    return out if isinstance(t, np.ndarray) else float(out)
