"""Desk-scale acceptance gate.

Twelve criteria, one test function each, so `pytest -v tests/test_acceptance.py`
prints exactly one pass/fail line per criterion.  Tolerances and runtime
budgets are pinned in the asserts; the heavy determinant comparisons run
at the default quadrature density.
"""

import itertools
import math
import time

import numpy as np
import pytest
from numpy.testing import assert_allclose

from qkz.determinant_formula import (
    c_l_constant,
    c_tilde,
    e_l,
    e_l_ratio_check,
    g_l_closed,
    theorem_rhs,
)
from qkz.double_sine import (
    Periods,
    log_s2,
    s2,
    s2_asymptotic_log,
    s2_batch,
    s2_slope_at_zero,
)
from qkz.hypergeometric import (
    QuadratureSpec,
    WeightFunction,
    determinant_d,
    exchange_check,
    f_integral,
    pairing_integral,
    pairing_integral_shifted_beta,
)
from qkz.quantum_algebra import (
    ModelParams,
    QPhase,
    compositions,
    det_k_closed,
    k_operator,
    r_matrix,
    r_matrix_oracle,
)

P1 = ModelParams(rho=2 * np.pi, lam=2 * np.pi, mu=0.5, Lambda=(-0.3,), beta=(0.0,))
P2 = ModelParams(rho=2 * np.pi, lam=2 * np.pi, mu=0.5, Lambda=(-0.3, -0.3), beta=(0.0, 0.4))
Q2 = ModelParams(rho=5.37, lam=4.81, mu=0.2, Lambda=(-0.31, -0.47), beta=(0.0, 0.4))
G3 = ModelParams(
    rho=5.37, lam=4.81, mu=0.77, Lambda=(-0.31, -0.47, -0.23), beta=(0.0, 0.4, -0.27)
)

# periods wide enough for an open two-variable convergence window
WIDE12 = ModelParams(rho=19.0, lam=19.0, mu=0.165, Lambda=(-0.3,), beta=(0.0,))
WIDE22 = ModelParams(rho=19.0, lam=19.0, mu=0.16, Lambda=(-0.3, -0.3), beta=(0.0, 0.4))


def _head(params, n):
    return ModelParams(rho=params.rho, lam=params.lam, mu=params.mu,
                       Lambda=params.Lambda[:n], beta=params.beta[:n])


def _difference_equation_dev(l, Lam, per, x, which, quad=None):
    """|step ratio - closed cosh product| for the one-site integral."""
    rho, lam = per.omega1, per.omega2
    step, own, par = (math.pi / lam, rho, lam) if which == 1 else (math.pi / rho, lam, rho)
    num = f_integral(l, Lam, x + step, per, quad).value
    den = f_integral(l, Lam, x - step, per, quad).value
    rhs = 1.0 + 0j
    for k in range(l):
        rhs *= np.cosh(own * 1j * x / 2 - np.pi**2 * 1j * (k - Lam) / par) / np.cosh(
            own * 1j * x / 2 + np.pi**2 * 1j * (k - Lam) / par)
    return abs(num / den - rhs)


def test_criterion_01_double_sine_laws():
    """Shift, reflection, period symmetry, zero slope, asymptotics; < 10 s."""
    t0 = time.monotonic()
    per = Periods(2.0, 3.0)
    x = np.linspace(0.13, 4.6, 50) + 0.37j
    v = s2_batch(x, per)
    assert_allclose(s2_batch(x + per.omega1, per) / v,
                    1 / (2 * np.sin(np.pi * x / per.omega2)), rtol=1e-10)
    assert_allclose(s2_batch(x + per.omega2, per) / v,
                    1 / (2 * np.sin(np.pi * x / per.omega1)), rtol=1e-10)
    xr = np.linspace(-3.9, 3.9, 50) + 0.51j
    assert_allclose(s2_batch(xr, per) * s2_batch(-xr, per),
                    -4 * np.sin(np.pi * xr / per.omega1) * np.sin(np.pi * xr / per.omega2),
                    rtol=1e-10)
    assert_allclose(s2_batch(x, per), s2_batch(x, Periods(3.0, 2.0)), rtol=1e-10)
    h = 1e-5
    est = 2 * s2(h / 2, per).value / (h / 2) - s2(h, per).value / h
    assert_allclose(est, s2_slope_at_zero(per), rtol=1e-6)
    # trend only: the asymptote residual decays along a vertical line
    res = []
    for y in (5.0, 10.0, 20.0):
        d = log_s2(1.2 + 1j * y, per) - s2_asymptotic_log(1.2 + 1j * y, per)
        res.append(abs(complex(d.real, (d.imag + math.pi) % (2 * math.pi) - math.pi)))
    assert res[0] > res[1] > res[2] and res[2] < 1e-6
    assert time.monotonic() - t0 < 10.0


def test_criterion_02_r_matrix_oracle_equivalence():
    """Closed R construction vs intertwining solve, 20 generic draws, l <= 2,
    matrix-norm relative 1e-10; < 30 s."""
    t0 = time.monotonic()
    rng = np.random.default_rng(2026)
    for _ in range(20):
        rho = float(rng.uniform(4.0, 9.0))
        q = QPhase.from_period(rho)
        L1, L2 = (float(v) for v in rng.uniform(-0.9, -0.1, 2))
        b1, b2 = rng.uniform(-1.0, 1.0, 2)
        z = np.exp(2 * np.pi * (b1 - b2) / rho)
        for l in (1, 2):
            a = r_matrix(L1, L2, z, q, l)
            b = r_matrix_oracle(L1, L2, z, q, l)
            assert np.linalg.norm(a - b) <= 1e-10 * np.linalg.norm(a), (rho, L1, L2, l)
    assert time.monotonic() - t0 < 30.0


def test_criterion_03_det_k_closed_form():
    """Operator-product determinant vs closed form, n <= 3, l <= 2, every
    site and both flavors, 1e-8; < 60 s."""
    t0 = time.monotonic()
    for n in (1, 2, 3):
        params = _head(G3, n)
        for l in (1, 2):
            for m in range(1, n + 1):
                for flavor in ("rho", "lambda"):
                    num = np.linalg.det(k_operator(m, params, l, flavor).matrix)
                    closed = det_k_closed(m, params, l, flavor)
                    assert abs(num - closed) <= 1e-8 * abs(closed), (n, l, m, flavor)
    assert time.monotonic() - t0 < 60.0


def test_criterion_04_exchange_relation():
    """Pointwise two-site exchange vs the R-matrix action, n = 2, l = 1,
    10 random real draws, 1e-8."""
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(10):
        beta = tuple(float(v) for v in rng.uniform(-1.0, 1.0, 2))
        alphas = (float(rng.uniform(-0.8, 0.8)),)
        lhs, rhs = exchange_check(P2.with_beta(beta), alphas)
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    assert worst < 1e-8


def test_criterion_05_shift_relation():
    """Moving the free last rapidity up one partner period equals the
    site-rotated pairing, n = 2, l = 1, defaults, 1e-6 relative; < 60 s."""
    t0 = time.monotonic()
    for Lp in ((1, 0), (0, 1)):
        fshift = WeightFunction("rho", (1, 0), P2, kind="g")
        gright = WeightFunction("lambda", Lp, P2)
        lhs = pairing_integral_shifted_beta(fshift, gright, P2, 2, P2.lam * 1j)
        frot = WeightFunction("rho", (0, 1), P2, kind="g", site_order=(2, 1))
        rhs = pairing_integral(frot, gright, P2)
        assert abs(lhs.value / rhs.value - 1) < 1e-6, Lp
    assert time.monotonic() - t0 < 60.0


def test_criterion_06_one_site_difference_equations():
    """Both step equations for the one-site integral: l = 1 at 1e-6 and
    l = 2 at 1e-4; < 3 min.  The weight-2 run needs wide periods for its
    convergence strip and uses the documented wide-set node density."""
    t0 = time.monotonic()
    per = Periods(5.0, 7.0)
    assert _difference_equation_dev(1, -0.35, per, 0.25, 1) < 1e-6
    assert _difference_equation_dev(1, -0.35, per, 0.1, 2) < 1e-6
    wide = Periods(18.0, 20.0)
    quad = QuadratureSpec(nodes_per_unit=4, truncation_margin=10.0, tolerance=1e-4)
    assert _difference_equation_dev(2, -0.3, wide, 0.05, 1, quad) < 1e-4
    assert _difference_equation_dev(2, -0.3, wide, 0.05, 2, quad) < 1e-4
    assert time.monotonic() - t0 < 180.0


def test_criterion_07_one_site_closed_form():
    """F over G is x-independent and equals the closed normalization
    constant: 3 x-values spread over 0.3, both statements at 1e-5."""
    per = Periods(2 * np.pi, 2 * np.pi)
    want = c_tilde(1, -0.3, per)
    ratios = []
    for x in (0.1, 0.2, 0.4):
        ratios.append(f_integral(1, -0.3, x, per).value / g_l_closed(1, -0.3, x, per))
        assert abs(ratios[-1] - want) <= 1e-5 * abs(want), x
    for a, b in itertools.combinations(ratios, 2):
        assert abs(a - b) <= 1e-5 * abs(a)


def test_criterion_08_headline_determinant_identity():
    """Numerical determinant of the pairing matrix against the closed
    form: (1,1) at 1e-5, (1,2) and (2,1) at 1e-4, (2,2) at 1e-3, default
    quadrature density; < 5 min total."""
    t0 = time.monotonic()
    cases = (
        (P1, 1, 1e-5),
        (P2, 1, 1e-4),
        (WIDE12, 2, 1e-4),
        (WIDE22, 2, 1e-3),
    )
    for params, l, tol in cases:
        det, _ = determinant_d(params, l)
        rhs = theorem_rhs(params, l)
        assert abs(det / rhs - 1) < tol, (params.n, l)
    assert time.monotonic() - t0 < 300.0


def test_criterion_09_weight_zero_exactness():
    """The empty-weight determinant and the closed form are exactly 1
    for n <= 3."""
    for n in (1, 2, 3):
        params = _head(G3, n)
        det, bound = determinant_d(params, 0)
        assert det == 1.0 + 0j and bound == 0.0
        assert theorem_rhs(params, 0) == 1.0 + 0j


def test_criterion_10_carrier_step_ratio_laws():
    """Both step ratios of the carrier against the closed step
    determinant, n <= 2, l <= 2, every site, 1e-8."""
    for params in (_head(Q2, 1), Q2, _head(P2, 1), P2):
        for l in (0, 1, 2):
            for m in range(1, params.n + 1):
                for which in ("lambda", "rho"):
                    ratio, closed = e_l_ratio_check(params, m, which, l)
                    assert abs(ratio - closed) <= 1e-8 * abs(closed), (params.n, l, m, which)


def test_criterion_11_multi_index_moments():
    """Exhaustive enumeration: the sum over all weight-l multi-indices of
    any product of k distinct entries equals C(n+l-1, n+k-1); n, l <= 4."""
    for n in range(1, 5):
        for l in range(5):
            all_L = list(compositions(l, n))
            for k in range(n + 1):
                for sites in itertools.combinations(range(n), k):
                    total = sum(math.prod(L[m] for m in sites) for L in all_L)
                    assert total == math.comb(n + l - 1, n + k - 1), (n, l, sites)


def test_criterion_12_closed_form_reassembly():
    """The expanded closed form equals constant times carrier at 10
    random parameter draws, 1e-10."""
    rng = np.random.default_rng(7)
    for _ in range(10):
        n = int(rng.integers(1, 4))
        l = int(rng.integers(0, 3))
        params = ModelParams(
            rho=float(rng.uniform(4, 9)),
            lam=float(rng.uniform(4, 9)),
            mu=float(rng.uniform(0.1, 0.9)),
            Lambda=tuple(float(v) for v in rng.uniform(-0.6, -0.1, n)),
            beta=tuple(float(v) for v in rng.uniform(-1, 1, n)),
        )
        lhs = theorem_rhs(params, l)
        rhs = c_l_constant(params, l) * e_l(params, l)
        assert abs(lhs - rhs) <= 1e-10 * abs(lhs), (n, l)
