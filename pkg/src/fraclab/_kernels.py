"""Hot inner loops: weakly singular convolutions and time-stepping cores.

Every routine here exists twice, a numba ``@njit`` loop and a pure-numpy
equivalent; the public wrapper picks one based on :mod:`fraclab.backend`.
The numpy fallbacks delegate the O(N^2) work to ``np.convolve`` / ``np.dot``
so they stay usable (if slower) without a JIT.

Convolution convention used throughout: a kernel on the uniform grid
``u_m = m*h`` is represented by its per-cell moment weights ``P[m]``, ``Q[m]``
so that for samples ``f_0..f_N`` of a piecewise-linear function

    out[n] = sum_{m=0}^{n-1} ( P[m] * f[n-m] + Q[m] * f[n-m-1] )

is the exact integral of kernel times interpolant.  ``P``/``Q`` come from
cumulative kernel moments, see :mod:`fraclab.gfc` and :mod:`fraclab.gridops`.
"""

from __future__ import annotations

import numpy as np

from . import backend
from .backend import njit

# --------------------------------------------------------------------------
# moment-weight convolution


@njit(cache=True)
def _conv_pq_njit(P, Q, f):
    n_out = f.shape[0]
    out = np.zeros(n_out)
    for n in range(1, n_out):
        acc = 0.0
        for m in range(n):
            acc += P[m] * f[n - m] + Q[m] * f[n - m - 1]
        out[n] = acc
    return out


def _conv_pq_numpy(P, Q, f):
    n_out = f.shape[0]
    out = np.zeros(n_out)
    if n_out == 1:
        return out
    a = np.convolve(P[: n_out - 1], f[1:])[: n_out - 1]
    b = np.convolve(Q[: n_out - 1], f[:-1])[: n_out - 1]
    out[1:] = a + b
    return out


def conv_pq(P: np.ndarray, Q: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Product-quadrature convolution of a moment kernel with samples f."""
    P = np.ascontiguousarray(P, dtype=np.float64)
    Q = np.ascontiguousarray(Q, dtype=np.float64)
    f = np.ascontiguousarray(f, dtype=np.float64)
    if backend.use_numba():
        return _conv_pq_njit(P, Q, f)
    return _conv_pq_numpy(P, Q, f)


# --------------------------------------------------------------------------
# first-kind Volterra forward substitution (deconvolution)


@njit(cache=True)
def _volterra_pq_njit(P, Q, g, r0):
    n_out = g.shape[0]
    r = np.zeros(n_out)
    r[0] = r0
    for n in range(1, n_out):
        acc = Q[n - 1] * r[0]
        for m in range(1, n):
            acc += P[m] * r[n - m] + Q[m - 1] * r[n - m]
        r[n] = (g[n] - acc) / P[0]
    return r


def _volterra_pq_numpy(P, Q, g, r0):
    n_out = g.shape[0]
    r = np.zeros(n_out)
    r[0] = r0
    for n in range(1, n_out):
        acc = Q[n - 1] * r[0]
        if n > 1:
            # terms m=1..n-1 pair r[n-m] with P[m] and Q[m-1]
            acc += np.dot(P[1:n][::-1] + Q[0 : n - 1][::-1], r[1:n])
        r[n] = (g[n] - acc) / P[0]
    return r


def volterra_solve_pq(
    P: np.ndarray, Q: np.ndarray, g: np.ndarray, r0: float
) -> np.ndarray:
    """Solve sum_{m<n} (P[m] r[n-m] + Q[m] r[n-m-1]) = g[n] for r, given r[0].

    This is the product-quadrature forward substitution for the first-kind
    Volterra equation (kernel * r)(t_n) = g(t_n).
    """
    P = np.ascontiguousarray(P, dtype=np.float64)
    Q = np.ascontiguousarray(Q, dtype=np.float64)
    g = np.ascontiguousarray(g, dtype=np.float64)
    if backend.use_numba():
        return _volterra_pq_njit(P, Q, g, float(r0))
    return _volterra_pq_numpy(P, Q, g, float(r0))


# --------------------------------------------------------------------------
# Grunwald-Letnikov convolution


@njit(cache=True)
def _gl_conv_njit(w, v):
    n = v.shape[0]
    out = np.zeros(n)
    for i in range(n):
        acc = 0.0
        for j in range(i + 1):
            acc += w[j] * v[i - j]
        out[i] = acc
    return out


def gl_convolve(w: np.ndarray, v: np.ndarray) -> np.ndarray:
    """out[i] = sum_{j<=i} w[j] v[i-j] (triangular discrete convolution)."""
    w = np.ascontiguousarray(w, dtype=np.float64)
    v = np.ascontiguousarray(v, dtype=np.float64)
    if backend.use_numba():
        return _gl_conv_njit(w, v)
    return np.convolve(w, v)[: v.shape[0]]


# --------------------------------------------------------------------------
# fractional Adams predictor-corrector (PECE) core
#
# Weights (order alpha, step h):
#   predictor  y_{n+1} = y0 + h^a/Gamma(a+1) * sum_j b[n-j] f_j,
#              b[m] = (m+1)^a - m^a
#   corrector  y_{n+1} = y0 + h^a/Gamma(a+2) *
#              ( a0(n) f_0 + sum_{j=1..n} c[n+1-j] f_j + f_{n+1} ),
#              c[m] = (m+1)^{a+1} - 2 m^{a+1} + (m-1)^{a+1},
#              a0(n) = n^{a+1} - (n-alpha)(n+1)^a


def adams_weight_arrays(alpha: float, n_steps: int):
    m = np.arange(n_steps + 1, dtype=np.float64)
    b = (m + 1.0) ** alpha - m**alpha
    c = np.empty(n_steps + 1)
    c[0] = 0.0  # unused slot, kept for aligned indexing
    mm = m[1:]
    c[1:] = (mm + 1.0) ** (alpha + 1.0) - 2.0 * mm ** (alpha + 1.0) + (
        mm - 1.0
    ) ** (alpha + 1.0)
    a0 = m ** (alpha + 1.0) - (m - alpha) * (m + 1.0) ** alpha
    return b, c, a0


@njit(cache=False)
def _adams_njit(rhs, t0, y0, h, n_steps, alpha, gamma1, gamma2, b, c, a0, n_corr, guard):
    # gamma1 = Gamma(alpha+1), gamma2 = Gamma(alpha+2)
    y = np.empty(n_steps + 1)
    F = np.empty(n_steps + 1)
    y[0] = y0
    F[0] = rhs(t0, y0)
    ha1 = h**alpha / gamma1
    ha2 = h**alpha / gamma2
    for n in range(n_steps):
        t_next = t0 + (n + 1) * h
        sp = 0.0
        for j in range(n + 1):
            sp += b[n - j] * F[j]
        yp = y[0] + ha1 * sp
        sc = a0[n] * F[0]
        for j in range(1, n + 1):
            sc += c[n + 1 - j] * F[j]
        yn = yp
        for _ in range(n_corr):
            fn = rhs(t_next, yn)
            yn = y[0] + ha2 * (sc + fn)
        if np.abs(yn) > guard:
            return y[: n + 1], F[: n + 1], n + 1
        y[n + 1] = yn
        F[n + 1] = rhs(t_next, yn)
    return y, F, -1


def adams_python(rhs, t0, y0, h, n_steps, alpha, gamma1, gamma2, b, c, a0, n_corr, guard):
    """Pure-python PECE loop; history sums vectorized with np.dot."""
    y = np.empty(n_steps + 1)
    F = np.empty(n_steps + 1)
    y[0] = y0
    F[0] = rhs(t0, y0)
    ha1 = h**alpha / gamma1
    ha2 = h**alpha / gamma2
    for n in range(n_steps):
        t_next = t0 + (n + 1) * h
        sp = float(np.dot(F[: n + 1], b[n::-1]))
        yp = y[0] + ha1 * sp
        sc = a0[n] * F[0]
        if n >= 1:
            sc += float(np.dot(F[1 : n + 1], c[n:0:-1]))
        yn = yp
        for _ in range(n_corr):
            fn = rhs(t_next, yn)
            yn = y[0] + ha2 * (sc + fn)
        if abs(yn) > guard:
            return y[: n + 1], F[: n + 1], n + 1
        y[n + 1] = yn
        F[n + 1] = rhs(t_next, yn)
    return y, F, -1


# --------------------------------------------------------------------------
# diffusive (infinite-state) march core
#
# One step advances every auxiliary state phi_j by the A-stable one-step
# method and solves the scalar coupling
#   f(t_{n+1}, y_{n+1}) = S1 + (S2/h) (y_{n+1} - y_n)
# by fixed-point iteration (damping on stagnation) with a Newton fallback.


@njit(cache=False)
def _diffusive_njit(rhs, t0, y0, h, n_steps, w, omega, h2w, stepper_code, S2, max_iter, tol, guard):
    # S2 is the analytic lag-0 coupling weight int_0^h k(s) ds; the states
    # only carry the lag >= h part of the memory.
    m = w.shape[0]
    phi = np.zeros(m)
    if stepper_code == 0:
        # exponential Euler: exact relaxation over one step
        A = np.exp(-h * w)
        B = h2w * (1.0 - A) / w
    elif stepper_code == 1:
        denom = 1.0 + 0.5 * h * w
        A = (1.0 - 0.5 * h * w) / denom
        B = h * h2w / denom
    else:
        denom = 1.0 + h * w
        A = 1.0 / denom
        B = h * h2w / denom
    y = np.empty(n_steps + 1)
    y[0] = y0
    yn = y0
    yprev = y0
    for n in range(n_steps):
        t_next = t0 + (n + 1) * h
        S1 = 0.0
        for j in range(m):
            S1 += omega[j] * A[j] * phi[j]
        # fixed point: ynew = yn + (h/S2) (f(t,ynew) - S1);
        # linear extrapolation seeds the iteration
        ynew = yn + (yn - yprev) if n > 0 else yn
        prev_res = 1e300
        damping = 1.0
        converged = False
        for it in range(max_iter):
            target = yn + (h / S2) * (rhs(t_next, ynew) - S1)
            res = np.abs(target - ynew)
            scale = np.abs(ynew) + 1.0
            if res <= tol * scale:
                ynew = target
                converged = True
                break
            if res >= prev_res:
                damping = 0.5
            prev_res = res
            ynew = ynew + damping * (target - ynew)
        if not converged:
            # Newton on g(z) = f(t,z) - S1 - (S2/h)(z - yn)
            for it in range(max_iter):
                g = rhs(t_next, ynew) - S1 - (S2 / h) * (ynew - yn)
                dz = 1e-7 * (np.abs(ynew) + 1.0)
                gp = (rhs(t_next, ynew + dz) - rhs(t_next, ynew - dz)) / (2.0 * dz) - S2 / h
                step = g / gp
                ynew = ynew - step
                if np.abs(step) <= tol * (np.abs(ynew) + 1.0):
                    converged = True
                    break
        if not converged:
            return y[: n + 1], phi, n + 1, 1
        if np.abs(ynew) > guard:
            return y[: n + 1], phi, n + 1, 2
        vbar = (ynew - yn) / h
        for j in range(m):
            phi[j] = A[j] * phi[j] + B[j] * vbar
        yprev = yn
        yn = ynew
        y[n + 1] = yn
    return y, phi, -1, 0


def diffusive_python(rhs, t0, y0, h, n_steps, w, omega, h2w, stepper_code, S2, max_iter, tol, guard):
    """Vectorized-per-step python version of the diffusive march.

    S2 is the analytic lag-0 coupling weight int_0^h k(s) ds.
    """
    phi = np.zeros(w.shape[0])
    if stepper_code == 0:
        A = np.exp(-h * w)
        B = h2w * (1.0 - A) / w
    elif stepper_code == 1:
        denom = 1.0 + 0.5 * h * w
        A = (1.0 - 0.5 * h * w) / denom
        B = h * h2w / denom
    else:
        denom = 1.0 + h * w
        A = 1.0 / denom
        B = h * h2w / denom
    omegaA = omega * A
    y = np.empty(n_steps + 1)
    y[0] = y0
    yn = y0
    yprev = y0
    for n in range(n_steps):
        t_next = t0 + (n + 1) * h
        S1 = float(np.dot(omegaA, phi))
        ynew = yn + (yn - yprev) if n > 0 else yn
        prev_res = np.inf
        damping = 1.0
        converged = False
        for _ in range(max_iter):
            target = yn + (h / S2) * (rhs(t_next, ynew) - S1)
            res = abs(target - ynew)
            if res <= tol * (abs(ynew) + 1.0):
                ynew = target
                converged = True
                break
            if res >= prev_res:
                damping = 0.5
            prev_res = res
            ynew = ynew + damping * (target - ynew)
        if not converged:
            for _ in range(max_iter):
                g = rhs(t_next, ynew) - S1 - (S2 / h) * (ynew - yn)
                dz = 1e-7 * (abs(ynew) + 1.0)
                gp = (rhs(t_next, ynew + dz) - rhs(t_next, ynew - dz)) / (2.0 * dz) - S2 / h
                step = g / gp
                ynew = ynew - step
                if abs(step) <= tol * (abs(ynew) + 1.0):
                    converged = True
                    break
        if not converged:
            return y[: n + 1], phi, n + 1, 1
        if abs(ynew) > guard:
            return y[: n + 1], phi, n + 1, 2
        vbar = (ynew - yn) / h
        phi = A * phi + B * vbar
        yprev = yn
        yn = ynew
        y[n + 1] = yn
    return y, phi, -1, 0


# --------------------------------------------------------------------------
# full-memory map iteration


@njit(cache=False)
def _memory_map_njit(coef, x0, scale, n_steps, guard, kick):
    x = np.empty(n_steps + 1)
    g = np.empty(n_steps)
    x[0] = x0
    for n in range(1, n_steps + 1):
        g[n - 1] = kick(x[n - 1])
        acc = 0.0
        for j in range(n):
            acc += coef[n - j] * g[j]
        xn = x0 + scale * acc
        if np.abs(xn) > guard:
            return x[:n], n
        x[n] = xn
    return x, -1


def memory_map_python(coef, x0, scale, n_steps, guard, kick):
    x = np.empty(n_steps + 1)
    g = np.empty(n_steps)
    x[0] = x0
    for n in range(1, n_steps + 1):
        g[n - 1] = kick(x[n - 1])
        acc = float(np.dot(coef[1 : n + 1], g[n - 1 :: -1]))
        xn = x0 + scale * acc
        if abs(xn) > guard:
            return x[:n], n
        x[n] = xn
    return x, -1
