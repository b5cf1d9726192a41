"""Closed-form side of the determinant identity.

Every function here is a finite product of double-sine values, q-brackets
and exponentials: the beta-dependent carrier (e_l), the one-site
difference-equation solution (g_l_closed) with its normalization
(c_tilde), the beta-independent constant assembled from them
(c_l_constant), and the fully expanded right-hand side (theorem_rhs).
The numerical integrals in `hypergeometric` are compared against these.

Conventions: integer exponents are computed as exact integers (binomials
and composition counts), and powers of the unit-modulus phases are taken
as exp(i theta x) with the accumulated phase, never by principal-branch
powering of a complex base.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from .double_sine import Periods, s2
from .quantum_algebra import (
    ModelParams,
    QPhase,
    compositions,
    compositions_count,
    det_k_closed,
    q_factorial,
)

__all__ = [
    "ClosedFormContext",
    "e_l",
    "e_l_ratio_check",
    "g_l_closed",
    "c_tilde",
    "f_closed",
    "c_l_constant",
    "theorem_rhs",
]


@dataclass(frozen=True)
class ClosedFormContext:
    """Parameter bundle with double-sine access at the model periods."""

    params: ModelParams

    @property
    def periods(self) -> Periods:
        return Periods(self.params.rho, self.params.lam)

    def s2(self, x) -> complex:
        return s2(x, self.periods).value


def _count_with_part(l: int, j: int, n: int) -> int:
    """Number of length-n multi-indices of weight l whose given entry is
    exactly j.  The remaining weight l - j spreads over n - 1 sites."""
    return compositions_count(l - j, n - 1)


def e_l(params: ModelParams, l: int) -> complex:
    """The beta-dependent carrier of the determinant: an exponential of
    sum(beta) and a double product of S2 ratios over site pairs, with
    integer exponents fixed by the weight."""
    if l < 0:
        raise ValueError("need l >= 0")
    n = params.n
    ctx = ClosedFormContext(params)
    total_beta = sum(params.beta)
    out = cmath.exp(params.mu * total_beta * math.comb(n + l - 1, n))
    for j in range(l):
        expo = math.comb(n + l - j - 2, n - 1)
        if expo == 0:
            continue
        block = 1.0 + 0j
        for m in range(n):
            for mp in range(m + 1, n):
                diff = 1j * (params.beta[m] - params.beta[mp])
                wgt = (params.Lambda[m] + params.Lambda[mp] - j) * math.pi
                block *= ctx.s2(diff + wgt) / ctx.s2(diff - wgt)
        out *= block**expo
    return out


def e_l_ratio_check(params: ModelParams, m: int, which: str, l: int):
    """(ratio, closed): the step ratio of e_l when beta_m moves down by
    one imaginary period, next to the closed determinant it must equal.

    which = "lambda": beta_m -> beta_m - lambda*i, compared against the
    rho-flavor closed determinant; which = "rho": the period-swapped
    statement.
    """
    if which not in ("rho", "lambda"):
        raise ValueError(f"step must be 'rho' or 'lambda', got {which!r}")
    n = params.n
    if not 1 <= m <= n:
        raise ValueError(f"site {m} outside 1..{n}")
    if l == 0:
        return 1.0 + 0j, 1.0 + 0j
    step = params.lam if which == "lambda" else params.rho
    beta = list(params.beta)
    beta[m - 1] -= 1j * step
    shifted = e_l(params.with_beta(beta), l)
    ratio = shifted / e_l(params, l)
    flavor = "rho" if which == "lambda" else "lambda"
    return ratio, det_k_closed(m, params, l, flavor)


def g_l_closed(l: int, Lambda, x, periods) -> complex:
    """Closed solution of both difference equations: a product over the
    weight of reciprocal S2 pairs, even in x."""
    if l < 0:
        raise ValueError("need l >= 0")
    periods = periods if isinstance(periods, Periods) else Periods(*periods)
    L = complex(Lambda)
    x = complex(x)
    center = (periods.omega1 + periods.omega2) / 2.0
    scale = periods.omega1 * periods.omega2 / (2.0 * math.pi)
    out = 1.0 + 0j
    for k in range(l):
        a = center - math.pi * (k - L)
        out /= s2(a - scale * x, periods).value * s2(a + scale * x, periods).value
    return out


def c_tilde(l: int, Lambda, periods) -> complex:
    """Normalization constant tying the one-site integral to its closed
    form: q-bracket factorials against a product of special S2 values."""
    if l < 0:
        raise ValueError("need l >= 0")
    periods = periods if isinstance(periods, Periods) else Periods(*periods)
    if l == 0:
        return 1.0 + 0j
    L = complex(Lambda)
    q_rho = QPhase.from_period(periods.omega1)
    q_lam = QPhase.from_period(periods.omega2)
    out = q_factorial(l, q_rho) * q_factorial(l, q_lam)
    out /= 4.0 ** math.comb(l, 2) * math.factorial(l)
    root = math.sqrt(periods.omega1 * periods.omega2)
    s2pi = s2(math.pi, periods).value
    for k in range(1, l + 1):
        out *= (s2pi * root) / (
            s2(k * math.pi, periods).value * s2((k - 2 * L - 1) * math.pi, periods).value
        )
    return out


def f_closed(l: int, Lambda, x, periods) -> complex:
    """The x-independent constant times the closed difference-equation
    solution: the closed form of the one-site integral."""
    return c_tilde(l, Lambda, periods) * g_l_closed(l, Lambda, x, periods)


def _shifted_argument(params: ModelParams, L, m: int) -> complex:
    """Exponent entering the one-site factor for site m of multi-index L:
    mu shifted by the weighted site asymmetry, minus the period mean."""
    rho, lam = params.rho, params.lam
    acc = 0.0 + 0j
    for j in range(params.n):
        term = L[j] - params.Lambda[j]
        if j < m:
            acc += term
        elif j > m:
            acc -= term
    return params.mu + 2.0 * math.pi**2 / (rho * lam) * acc - (rho + lam) * math.pi / (rho * lam)


def _phase_power(params: ModelParams, exponent) -> complex:
    """(q at rho) * (q at lam) raised to a possibly non-integer exponent,
    by phase accumulation."""
    theta = params.q_phase("rho").theta + params.q_phase("lambda").theta
    return cmath.exp(1j * theta * complex(exponent))


def c_l_constant(params: ModelParams, l: int) -> complex:
    """The beta-independent constant relating the determinant to e_l,
    assembled as displayed: a combinatorial prefactor times the product
    of closed one-site factors over all multi-indices and sites."""
    if l < 0:
        raise ValueError("need l >= 0")
    n = params.n
    binom_top = math.comb(n + l - 1, n)
    binom_next = math.comb(n + l - 1, n + 1)
    sum_L = sum(params.Lambda)
    out = _phase_power(params, math.comb(n, 2) * binom_next + binom_top * sum_L)
    out /= 4.0 ** (n * (n - 1) * binom_top + math.comb(n, 2) * binom_next)
    out /= float(math.factorial(l)) ** math.comb(n + l - 1, n - 1)
    for j in range(1, l + 1):
        out *= float(math.factorial(j)) ** (n * _count_with_part(l, j, n))
    per = Periods(params.rho, params.lam)
    for L in compositions(l, n):
        for m in range(n):
            out *= f_closed(L[m], params.Lambda[m], _shifted_argument(params, L, m), per)
    return out


def theorem_rhs(params: ModelParams, l: int) -> complex:
    """The fully expanded closed form of the determinant of the pairing
    matrix: phase and S2 prefactors, the per-site q-bracket/S2 block with
    composition-count exponents, the mu-ratio product, and e_l."""
    if l < 0:
        raise ValueError("need l >= 0")
    n = params.n
    per = Periods(params.rho, params.lam)
    binom_top = math.comb(n + l - 1, n)
    binom_next = math.comb(n + l - 1, n + 1)
    sum_L = sum(params.Lambda)
    out = _phase_power(params, math.comb(n, 2) * binom_next + binom_top * sum_L)
    s2pi = s2(math.pi, per).value
    root = math.sqrt(params.rho * params.lam)
    out *= (s2pi * root) ** (n * binom_top)
    out /= 4.0 ** (n * (n - 1) * binom_top + math.comb(n + 1, 2) * binom_next)
    out /= float(math.factorial(l)) ** math.comb(n + l - 1, n - 1)
    q_rho = params.q_phase("rho")
    q_lam = params.q_phase("lambda")
    for j in range(1, l + 1):
        expo = _count_with_part(l, j, n)
        if expo == 0:
            continue
        for m in range(n):
            block = q_factorial(j, q_rho) * q_factorial(j, q_lam)
            for k in range(1, j + 1):
                block /= (
                    s2(k * math.pi, per).value
                    * s2((k - 2 * params.Lambda[m] - 1) * math.pi, per).value
                )
            out *= block**expo
    mu_arg = params.rho * params.lam * params.mu / (2.0 * math.pi)
    for j in range(l):
        expo = math.comb(n + j - 1, n - 1)
        wgt = (sum_L - j) * math.pi
        out *= (s2(mu_arg - wgt, per).value / s2(mu_arg + wgt, per).value) ** expo
    return out * e_l(params, l)
