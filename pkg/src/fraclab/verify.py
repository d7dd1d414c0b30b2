"""Property/verification suites behind the CLI `verify` subcommand.

Each check returns a row (suite, check, passed, value, threshold); rows are
deterministic for a fixed seed, so repeated runs write byte-identical CSVs.
Checks are sized for seconds, not minutes; the full-strength acceptance
tolerances live in tests/test_acceptance.py.
"""

from __future__ import annotations

import math

import numpy as np

from . import backend, gfc, gridops, ivp, maps, spectral, tvp
from .gridops import GridFunction
from .specfun import gamma, mittag_leffler

__all__ = ["SUITES", "run_suite"]


def _row(suite, check, value, threshold, larger_is_better=False):
    passed = value >= threshold if larger_is_better else value <= threshold
    return {
        "suite": suite,
        "check": check,
        "passed": bool(passed),
        "value": float(value),
        "threshold": float(threshold),
    }


def _interior(n: int, alpha: float) -> slice:
    return slice(max(gridops.skip_head(alpha), int(0.05 * n)), None)


# --------------------------------------------------------------------------


def _suite_operators(seed: int):
    rows = []
    rng = np.random.default_rng(seed)
    n = 256
    f = GridFunction.sample(math.sin, 0.0, 1.0, n)
    g = GridFunction.sample(math.exp, 0.0, 1.0, n)
    a_c, b_c = rng.uniform(-2, 2, size=2)
    combo = f.with_values(a_c * f.values + b_c * g.values)
    lin = gridops.rl_integral(combo, 0.5).values - (
        a_c * gridops.rl_integral(f, 0.5).values
        + b_c * gridops.rl_integral(g, 0.5).values
    )
    scale = np.max(np.abs(gridops.rl_integral(combo, 0.5).values)) + 1e-30
    rows.append(_row("operators", "linearity", np.max(np.abs(lin)) / scale, 1e-12))

    w = gridops.quadrature_weights(0.5, 64, 1.0 / 64)
    rows.append(_row("operators", "weights-nonnegative", -float(w.min()), 0.0))

    one = GridFunction.sample(lambda t: 1.0, 0.0, 1.0, 64)
    interp = gridops.rl_integral(one, 1.0)
    rows.append(
        _row(
            "operators",
            "interpolation-I1",
            float(np.max(np.abs(interp.values - interp.times))),
            1e-12,
        )
    )

    n = 512
    f = GridFunction.sample(math.sin, 0.0, 1.0, n)
    comp = gridops.rl_derivative(gridops.rl_integral(f, 0.5), 0.5)
    sl = _interior(n, 0.5)
    rows.append(
        _row(
            "operators",
            "left-inverse",
            float(np.max(np.abs(comp.values[sl] - f.values[sl]))),
            1e-3,
        )
    )

    n = 1024
    f = GridFunction.sample(math.exp, 0.0, 1.0, n)
    semi = gridops.rl_integral(gridops.rl_integral(f, 0.4), 0.3).values - (
        gridops.rl_integral(f, 0.7).values
    )
    rows.append(
        _row(
            "operators",
            "semigroup",
            float(np.max(np.abs(semi[_interior(n, 0.3)]))),
            2e-4,
        )
    )

    f2 = GridFunction.sample(lambda t: t * t, 0.0, 1.0, 512)
    hr = gridops.hilfer_derivative(f2, gridops.HilferParams(0.5, 0.0))
    rr = gridops.rl_derivative(f2, 0.5)
    rows.append(
        _row(
            "operators",
            "hilfer-rl-bitmatch",
            0.0 if np.array_equal(hr.values, rr.values) else 1.0,
            0.0,
        )
    )
    hc = gridops.hilfer_derivative(f2, gridops.HilferParams(0.5, 0.5))
    cc = gridops.caputo_derivative(f2, 0.5)
    rows.append(
        _row(
            "operators",
            "hilfer-caputo-match",
            float(np.max(np.abs(hc.values - cc.values))),
            1e-10,
        )
    )

    f = GridFunction.sample(math.sin, 0.0, 1.0, 512)
    fp = np.cos(f.times)
    e99 = np.max(np.abs(gridops.caputo_derivative(f, 0.99).values[2:] - fp[2:]))
    e999 = np.max(np.abs(gridops.caputo_derivative(f, 0.999).values[2:] - fp[2:]))
    rows.append(_row("operators", "caputo-limit-alpha-1", float(e999 / e99), 1.0))
    e01 = np.max(np.abs(gridops.caputo_derivative(f, 0.01).values[2:] - f.values[2:]))
    e001 = np.max(
        np.abs(gridops.caputo_derivative(f, 0.001).values[2:] - f.values[2:])
    )
    rows.append(_row("operators", "caputo-limit-alpha-0", float(e001 / e01), 1.0))

    wgl = gridops.gl_weights(1.0, 8)
    target = np.zeros(9)
    target[0], target[1] = 1.0, -1.0
    rows.append(
        _row("operators", "gl-alpha1-weights", float(np.max(np.abs(wgl - target))), 0.0)
    )
    return rows


def _suite_gfc(seed: int):
    rows = []
    p = gfc.make_power_pair(0.5, validation_n=1024)
    rows.append(_row("gfc", "power-pair-residual", p.residual, 1e-8))
    spec = gfc.MultiTermSpec((1.0, 1.0), (0.3, 0.7))
    mt = gfc.make_multiterm_pair(spec, validation_n=4096)
    rows.append(_row("gfc", "two-term-residual", mt.residual, 1e-6))
    mt2 = gfc.extend_to_Ln(mt, 2)
    rows.append(_row("gfc", "L2-extension-residual", mt2.residual, 1e-6))

    alpha = 0.8
    bad = gfc.SonineKernelPair(
        gfc.PowerSumKernel([(1.0, alpha)]),
        gfc.PowerSumKernel([(1.0, 1.0 - alpha / 2)]),
        1, "mismatched", 1.0, 1024, 1e-6,
    )
    t = np.linspace(0.5, 1.0, 64)
    rows.append(
        _row("gfc", "mismatched-pair-detected", gfc.sonine_residual(bad, t), 0.1,
             larger_is_better=True)
    )

    n = 512
    f = GridFunction.sample(lambda t: t * math.cos(t), 0.0, 1.0, n)
    comp = gfc.gfd_rl(mt, gfc.gfi(mt, f))
    sl = _interior(n, 0.3)
    rows.append(
        _row("gfc", "first-ft-two-term",
             float(np.max(np.abs(comp.values[sl] - f.values[sl]))), 1e-2)
    )

    p2 = gfc.extend_to_Ln(p, 2)
    fe = GridFunction.sample(math.exp, 0.0, 1.0, n)
    recon = gfc.gfi(p2, gfc.gfd_caputo(p2, fe))
    target = np.exp(fe.times) - 1.0 - fe.times
    rows.append(
        _row("gfc", "second-ft-L2",
             float(np.max(np.abs(recon.values[sl] - target[sl]))), 1e-2)
    )

    gk = gfc.GammaLagKernel(0.5, 2.0)
    from scipy.special import gammainc

    one = GridFunction.sample(lambda t: 1.0, 0.0, 1.0, 256)
    out = gfc.gamma_lag_convolve(gk, one)
    cdf = gammainc(0.5, 2.0 * out.times)
    rows.append(
        _row("gfc", "gamma-lag-cdf", float(np.max(np.abs(out.values - cdf))), 1e-8)
    )
    return rows


def _suite_solvers(seed: int):
    rows = []
    p = ivp.linear_problem(0.5, -1.0)
    sol = ivp.solve_adams(p, ivp.AdamsConfig(N=512))
    exact = mittag_leffler(0.5, 1.0, -1.0)
    rows.append(
        _row("solvers", "adams-oracle", abs(sol.values[-1] - exact) / abs(exact), 1e-4)
    )

    from .ivp import _build_nodes

    w, om, _ = _build_nodes(0.5, 1e-6, 1e6, 12, 120)
    rows.append(
        _row("solvers", "laplace-identity",
             ivp.laplace_identity_error(0.5, w, om, [0.1, 1.0]), 1e-6)
    )

    p = ivp.linear_problem(0.4, -1.0)
    a = ivp.solve_adams(p, ivp.AdamsConfig(N=512))
    d = ivp.solve_diffusive(p, ivp.DiffusiveConfig(N=512))
    rows.append(
        _row("solvers", "adams-diffusive-agreement",
             abs(a.values[-1] - d.values[-1]), 1e-3)
    )

    z = np.logspace(-3.0, 8.0, 67)
    worst = max(
        float(np.max(np.abs(ivp.stepper_amplification(s, z))))
        for s in ("exponential", "trapezoidal", "backward-euler")
    )
    rows.append(_row("solvers", "a-stability", worst, 1.0))

    d2 = ivp.solve_diffusive(p, ivp.DiffusiveConfig(N=512))
    rows.append(
        _row("solvers", "determinism",
             0.0 if np.array_equal(d.values, d2.values) else 1.0, 0.0)
    )
    return rows


def _suite_spectral(seed: int):
    rows = []
    S, b = spectral.assemble_system(0.5, 8, lambda t: 0.0)
    diag = np.abs(np.diag(S))
    off = np.abs(S - np.diag(np.diag(S)))
    rows.append(
        _row("spectral", "diagonality", float(np.max(off / diag[:, None])), 1e-8)
    )
    f_manu = lambda t: spectral.caputo_of_trial(0.5, 1, t)
    sol = spectral.solve_model_problem(0.5, f_manu, 1.5, 8)
    err = max(
        abs(sol.coefficients[0] - 1.0), float(np.max(np.abs(sol.coefficients[1:])))
    )
    rows.append(_row("spectral", "manufactured-recovery", err, 1e-8))
    rows.append(
        _row("spectral", "initial-condition",
             abs(spectral.evaluate_solution(sol, -1.0) - 1.5), 0.0)
    )
    f = lambda t: math.cos(t)
    sol16 = spectral.solve_model_problem(0.5, f, 0.0, 16)
    rows.append(
        _row("spectral", "residual-orthogonality",
             spectral.residual_orthogonality(sol16, f), 1e-8)
    )
    return rows


def _suite_tvp(seed: int):
    rows = []
    rhs = backend.compile_rhs(lambda t, y: -y)
    ystar = mittag_leffler(0.6, 1.0, -1.0)
    p = tvp.TvpProblem(alpha=0.6, a=0.0, b=1.0, T=1.0, ystar=ystar, rhs=rhs)
    res = tvp.solve_shooting(
        p, tvp.ShootingConfig(g0=0.0, g1=2.0, tolerance=1e-4), ivp.AdamsConfig(N=512)
    )
    rows.append(_row("tvp", "shooting-recovery", abs(res.y_a - 1.0), 1e-3))
    rows.append(_row("tvp", "shooting-solves", float(res.n_solves), 4.0))
    fr = tvp.solve_fredholm_collocation(p, nodes=512, max_picard=40, tol=1e-10)
    d = float(np.max(np.abs(fr.trajectory.values - res.trajectory.values)))
    rows.append(_row("tvp", "fredholm-shooting-agreement", d, 1e-3))
    fwd = ivp.solve_adams(
        ivp.FodeProblem(alpha=0.6, a=0.0, T=1.0, y0=res.y_a, rhs=rhs),
        ivp.AdamsConfig(N=512),
    )
    rows.append(
        _row("tvp", "terminal-roundtrip", abs(fwd.values[-1] - ystar), 2e-4)
    )
    return rows


def _suite_maps(seed: int):
    rows = []
    c = maps.memory_weights(0.6, 4096)
    rows.append(
        _row("maps", "weight-telescoping",
             abs(float(np.sum(c[1:])) - 4096.0**0.6 / 0.6) / (4096.0**0.6 / 0.6),
             1e-14)
    )
    rows.append(
        _row("maps", "weights-positive-decreasing",
             0.0 if (np.all(c[1:] > 0) and np.all(np.diff(c[1:]) < 0)) else 1.0, 0.0)
    )
    K, h, x0 = 2.5, 1.0, 0.2
    kick = lambda x: K * x * (1.0 - x)
    orb = maps.iterate_map(maps.MemoryMapSpec(1.0, x0, h, kick), 128)
    x = x0
    ref = [x0]
    for _ in range(128):
        x = x + h * kick(x)
        ref.append(x)
    rows.append(
        _row("maps", "alpha1-bit-exact",
             0.0 if np.array_equal(orb.samples, np.asarray(ref)) else 1.0, 0.0)
    )
    Ks = 0.25
    kick_s = lambda x: Ks * x * (1.0 - x)
    hh = 1.0 / 128
    n = 256
    orb2 = maps.iterate_map(maps.MemoryMapSpec(0.7, 0.3, hh, kick_s), n)
    prob = ivp.FodeProblem(
        alpha=0.7, a=0.0, T=n * hh, y0=0.3,
        rhs=backend.compile_rhs(lambda t, y: Ks * y * (1.0 - y)),
    )
    sol = ivp.solve_adams(prob, ivp.AdamsConfig(N=n))
    rows.append(
        _row("maps", "adams-agreement",
             float(np.max(np.abs(orb2.samples - sol.values))), 1e-2)
    )
    return rows


SUITES = {
    "operators": _suite_operators,
    "gfc": _suite_gfc,
    "solvers": _suite_solvers,
    "spectral": _suite_spectral,
    "tvp": _suite_tvp,
    "maps": _suite_maps,
}


def run_suite(name: str, seed: int = 20260809):
    """Run one suite ('fundamental-theorems' and 'all' are aggregates)."""
    if name == "all":
        names = list(SUITES)
    elif name == "fundamental-theorems":
        rows = []
        for r in _suite_operators(seed):
            if r["check"] in ("left-inverse", "semigroup", "hilfer-rl-bitmatch",
                              "hilfer-caputo-match"):
                rows.append(r)
        for r in _suite_gfc(seed):
            if r["check"] in ("power-pair-residual", "two-term-residual",
                              "L2-extension-residual", "first-ft-two-term",
                              "second-ft-L2"):
                rows.append(r)
        return rows
    elif name in SUITES:
        names = [name]
    else:
        from .errors import ValidationError

        raise ValidationError(
            f"unknown suite {name!r}; choose from "
            f"{['all', 'fundamental-theorems'] + sorted(SUITES)}"
        )
    rows = []
    for n in names:
        try:
            rows.extend(SUITES[n](seed))
        except Exception as exc:  # a crashed suite is a failed check, not an abort
            rows.append(
                {
                    "suite": n,
                    "check": f"suite-error: {type(exc).__name__}",
                    "passed": False,
                    "value": float("nan"),
                    "threshold": 0.0,
                }
            )
    return rows
