import cmath
import dataclasses
import json
import math
import pathlib

import numpy as np
import pytest

from qkz.determinant_formula import (
    ClosedFormContext,
    c_l_constant,
    c_tilde,
    e_l,
    e_l_ratio_check,
    f_closed,
    g_l_closed,
    theorem_rhs,
)
from qkz.double_sine import Periods, s2
from qkz.hypergeometric import f_integral, fundamental_matrix
from qkz.quantum_algebra import ModelParams, det_k_closed

GOLD = json.loads(
    (pathlib.Path(__file__).resolve().parents[1] / "golden" / "hypergeometric.json").read_text()
)

P1 = ModelParams(rho=2 * np.pi, lam=2 * np.pi, mu=0.5, Lambda=(-0.3,), beta=(0.0,))
P2 = ModelParams(rho=2 * np.pi, lam=2 * np.pi, mu=0.5, Lambda=(-0.3, -0.3), beta=(0.0, 0.4))
Q2 = ModelParams(rho=5.37, lam=4.81, mu=0.2, Lambda=(-0.31, -0.47), beta=(0.0, 0.4))
G3 = ModelParams(
    rho=5.37, lam=4.81, mu=0.77, Lambda=(-0.31, -0.47, -0.23), beta=(0.0, 0.4, -0.27)
)


# ---------------------------------------------------------------------------
# e_l


def test_e_l_weight_zero_is_one():
    assert e_l(P2, 0) == 1.0 + 0j
    assert e_l(G3, 0) == 1.0 + 0j


def test_e_l_single_site_is_pure_exponential():
    # no pairs at n=1, only the exponential carrier survives
    p = ModelParams(rho=5.0, lam=7.0, mu=0.3, Lambda=(-0.4,), beta=(0.7,))
    for l in (1, 2, 3):
        assert e_l(p, l) == pytest.approx(cmath.exp(0.3 * 0.7 * l), rel=1e-14)


def test_e_l_rejects_negative_weight():
    with pytest.raises(ValueError):
        e_l(P2, -1)


def test_context_s2_matches_module_level():
    ctx = ClosedFormContext(Q2)
    x = 1.3 + 0.2j
    assert ctx.s2(x) == s2(x, Periods(Q2.rho, Q2.lam)).value


# ---------------------------------------------------------------------------
# step ratios against the closed determinant


@pytest.mark.parametrize("params,l", [(Q2, 1), (Q2, 2), (G3, 1), (P2, 2)])
def test_step_ratio_matches_closed_determinant(params, l):
    for m in range(1, params.n + 1):
        for which in ("lambda", "rho"):
            ratio, closed = e_l_ratio_check(params, m, which, l)
            assert abs(ratio - closed) / abs(closed) < 1e-12, (m, which)


def test_step_ratio_closed_side_is_det_k():
    _, closed = e_l_ratio_check(Q2, 1, "lambda", 2)
    assert closed == det_k_closed(1, Q2, 2, "rho")
    _, closed = e_l_ratio_check(Q2, 2, "rho", 1)
    assert closed == det_k_closed(2, Q2, 1, "lambda")


def test_step_ratio_weight_zero_trivial():
    assert e_l_ratio_check(Q2, 1, "lambda", 0) == (1.0 + 0j, 1.0 + 0j)


def test_step_ratio_validates_inputs():
    with pytest.raises(ValueError, match="step"):
        e_l_ratio_check(Q2, 1, "mu", 1)
    with pytest.raises(ValueError, match="site"):
        e_l_ratio_check(Q2, 3, "rho", 1)


# ---------------------------------------------------------------------------
# closed difference-equation solution


def _g_difference_dev(l, Lam, per, x, which):
    # ratio across one half-period step against the cosh product it must equal
    rho, lam = per.omega1, per.omega2
    if which == 1:
        step, own, par = math.pi / lam, rho, lam
    else:
        step, own, par = math.pi / rho, lam, rho
    num = g_l_closed(l, Lam, x + step, per)
    den = g_l_closed(l, Lam, x - step, per)
    rhs = 1.0 + 0j
    for k in range(l):
        rhs *= np.cosh(own * 1j * x / 2 - np.pi**2 * 1j * (k - Lam) / par) / np.cosh(
            own * 1j * x / 2 + np.pi**2 * 1j * (k - Lam) / par
        )
    return abs(num / den - rhs)


@pytest.mark.parametrize("l", [1, 2, 3])
@pytest.mark.parametrize("periods", [Periods(5.0, 7.0), Periods(2 * np.pi, 2 * np.pi)])
def test_g_l_satisfies_both_difference_equations(l, periods):
    assert _g_difference_dev(l, -0.35, periods, 0.23, 1) < 1e-12
    assert _g_difference_dev(l, -0.35, periods, 0.11, 2) < 1e-12


def test_g_l_is_even_in_x():
    per = Periods(5.0, 7.0)
    assert g_l_closed(2, -0.3, 0.37, per) == g_l_closed(2, -0.3, -0.37, per)


def test_g_l_weight_zero_is_one():
    assert g_l_closed(0, -0.3, 0.2, Periods(5.0, 7.0)) == 1.0 + 0j


def test_g_l_rejects_negative_weight():
    with pytest.raises(ValueError):
        g_l_closed(-1, -0.3, 0.2, Periods(5.0, 7.0))


# ---------------------------------------------------------------------------
# normalization constant


def test_c_tilde_weight_zero_is_one():
    assert c_tilde(0, -0.3, Periods(2 * np.pi, 2 * np.pi)) == 1.0 + 0j


def test_c_tilde_weight_one_closed_form():
    per = Periods(2 * np.pi, 2 * np.pi)
    want = math.sqrt(per.omega1 * per.omega2) / s2(0.6 * math.pi, per).value
    assert c_tilde(1, -0.3, per) == pytest.approx(want, rel=1e-14)


def test_c_tilde_accepts_plain_period_pair():
    assert c_tilde(1, -0.3, (5.0, 7.0)) == c_tilde(1, -0.3, Periods(5.0, 7.0))


def test_f_closed_is_constant_times_g():
    per = Periods(5.0, 7.0)
    got = f_closed(2, -0.35, 0.2, per)
    want = c_tilde(2, -0.35, per) * g_l_closed(2, -0.35, 0.2, per)
    assert got == want


def test_one_site_integral_matches_closed_form():
    # quadrature side divided by the closed solution is the constant,
    # independently of where on the line it is sampled
    per = Periods(2 * np.pi, 2 * np.pi)
    want = c_tilde(1, -0.3, per)
    for x in (0.1, 0.2, 0.4):
        ratio = f_integral(1, -0.3, x, per).value / g_l_closed(1, -0.3, x, per)
        assert abs(ratio - want) / abs(want) < 1e-10, x


# ---------------------------------------------------------------------------
# full closed form


def test_theorem_rhs_weight_zero_is_exactly_one():
    for params in (P1, P2, G3):
        assert theorem_rhs(params, 0) == 1.0 + 0j


def test_theorem_rhs_equals_constant_times_carrier():
    rng = np.random.default_rng(5)
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
        assert abs(lhs - rhs) / abs(lhs) < 1e-10, (n, l)


def test_theorem_rhs_symmetric_under_period_swap():
    # transposing the pairing matrix leaves the determinant alone
    for params, l in [(Q2, 1), (G3, 1), (Q2, 2)]:
        swapped = dataclasses.replace(params, rho=params.lam, lam=params.rho)
        a, b = theorem_rhs(params, l), theorem_rhs(swapped, l)
        assert abs(a - b) / abs(a) < 1e-12


def test_theorem_rhs_matches_golden_pairing():
    rec = GOLD["pairing_n1l1"]
    want = complex(float(rec["re"]), float(rec["im"]))
    assert theorem_rhs(P1, 1) == pytest.approx(want, rel=1e-12)


def test_theorem_rhs_matches_numerical_determinant_two_sites():
    det, bound = fundamental_matrix(P2, 1).determinant_d()
    rhs = theorem_rhs(P2, 1)
    assert abs(det - rhs) / abs(rhs) < 1e-10
    assert abs(det - rhs) <= max(bound, 1e-12) * 10 + 1e-10 * abs(rhs)


def test_theorem_rhs_rejects_negative_weight():
    with pytest.raises(ValueError):
        theorem_rhs(P2, -1)
    with pytest.raises(ValueError):
        c_l_constant(P2, -1)
