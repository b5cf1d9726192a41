"""Double sine function S2(x | omega1, omega2) for positive quasi-periods.

S2 is the meromorphic function with zeros on omega1*Z<=0 + omega2*Z<=0,
poles on omega1*Z>=1 + omega2*Z>=1, normalized so that

    S2(x + omega1) / S2(x) = 1 / (2 sin(pi x / omega2))

and symmetrically in omega1 <-> omega2.  Consequences used throughout:

    S2(x) S2(-x)              = -4 sin(pi x/omega1) sin(pi x/omega2)
    S2(x) S2(omega1+omega2-x) = 1
    S2(x)                     = (2 pi / sqrt(omega1 omega2)) x + O(x^2)
    S2((omega1+omega2)/2)     = 1

Evaluation: inside the strip 0 < Re x < omega1 + omega2,

    log S2(x) = int_0^oo  [ sh(ct/2) / (2 sh(w1 t/2) sh(w2 t/2))
                            - c / (w1 w2 t) ] dt / t,
    c = 2x - w1 - w2,

computed on a truncated interval [0, T] by composite Gauss-Legendre with
the exact algebraic tail -c/(w1 w2 T) added back (the integrand tends to
-c/(w1 w2 t^2) with exponentially small corrections).  Points outside the
middle band Re x in [1/4, 3/4](w1+w2) are first reduced into it with the
shift law, which keeps the truncation scale T = TAIL_EFOLDS/eps bounded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

REGULAR = "regular"
NEAR_ZERO = "near_zero"
NEAR_POLE = "near_pole"

# lattice guard: distance to the zero/pole lattice, in units of min(w1, w2)
GUARD_DISTANCE = 1e-8

# truncate the t-integral once the non-algebraic part has decayed by e^-40
TAIL_EFOLDS = 40.0

_GL_ORDER = 16
_GL_NODES, _GL_WEIGHTS = leggauss(_GL_ORDER)


@dataclass(frozen=True)
class Periods:
    """Quasi-period pair; both must be positive and finite."""

    omega1: float
    omega2: float

    def __post_init__(self):
        for w in (self.omega1, self.omega2):
            if not (math.isfinite(w) and w > 0):
                raise ValueError(f"periods must be finite and positive, got {self!r}")

    @property
    def total(self) -> float:
        return self.omega1 + self.omega2

    @property
    def smallest(self) -> float:
        return min(self.omega1, self.omega2)


@dataclass(frozen=True)
class S2Value:
    value: complex
    status: str


def _shratio_m1(u):
    """sinh(u)/u - 1, cancellation-free near u = 0 (complex ok)."""
    u = np.asarray(u)
    small = np.abs(u) < 0.5
    us = np.where(small, 0.0, u)
    with np.errstate(invalid="ignore", over="ignore"):
        direct = np.sinh(us) / np.where(small, 1.0, us) - 1.0
    u2 = np.where(small, u, 0.0) ** 2
    # sum_{k>=1} u^{2k}/(2k+1)!, six terms: relative error < 1e-15 at |u|=1/2
    series = u2 / 6 * (1 + u2 / 20 * (1 + u2 / 42 * (1 + u2 / 72 * (1 + u2 / 110 * (1 + u2 / 156)))))
    return np.where(small, series, direct)


def _j_integral(c, w1: float, w2: float):
    """log S2 at strip points given as c = 2x - w1 - w2, |Re c| < w1 + w2.

    Batched: one shared t-grid for the whole array, sized by the smallest
    decay rate and the fastest oscillation present in the batch.
    """
    c = np.atleast_1d(np.asarray(c, dtype=complex))
    eps = (w1 + w2 - np.abs(c.real)) / 2
    if not np.all(eps > 0):
        raise ValueError("strip evaluation outside 0 < Re x < omega1 + omega2")
    eps_min = float(eps.min())
    t_max = TAIL_EFOLDS / eps_min
    # one panel per half oscillation wavelength (freq in t is |Im c|/2),
    # and at most two e-folds of decay per panel
    im_max = float(np.abs(c.imag).max())
    dt = min(2.0 / eps_min, 2.0 * math.pi / im_max if im_max > 0 else math.inf)
    n_panels = max(8, int(math.ceil(t_max / dt)))
    edges = np.linspace(0.0, t_max, n_panels + 1)
    half = np.diff(edges) / 2
    mid = (edges[:-1] + edges[1:]) / 2
    t = (mid[:, None] + half[:, None] * _GL_NODES).ravel()
    wts = (half[:, None] * _GL_WEIGHTS).ravel()

    pa = _shratio_m1(w1 / 2 * t)
    pb = _shratio_m1(w2 / 2 * t)
    q = pa + pb + pa * pb

    out = np.empty(c.shape, dtype=complex)
    block = max(1, int(4e6 // t.size))
    for lo in range(0, c.size, block):
        cb = c[lo : lo + block, None]
        pc = _shratio_m1(cb * t / 2)
        h = (pc - q) / (1 + q) / (t * t)
        out[lo : lo + block] = (h @ wts) * (cb[:, 0] / (w1 * w2)) - cb[:, 0] / (w1 * w2 * t_max)
    return out


def _log_2sin(z):
    """log(2 sin z), stable for large |Im z|; branch only good mod 2 pi i."""
    z = np.asarray(z, dtype=complex)
    big = np.abs(z.imag) > 30.0
    zs = np.where(big, 0.0, z)
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = np.log(2 * np.sin(zs))
    sgn = np.where(z.imag >= 0, 1.0, -1.0)
    stable = -1j * sgn * z + 1j * sgn * math.pi / 2 + np.log1p(-np.exp(2j * sgn * z))
    return np.where(big, stable, direct)


def _reduced_log(x, p: Periods):
    """Strip-reduce into the middle band; return (log correction, reduced x)."""
    x = np.array(np.atleast_1d(x), dtype=complex)
    total = p.total
    ws = p.smallest
    wo = max(p.omega1, p.omega2)
    corr = np.zeros(x.shape, dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        while True:
            mask = x.real < 0.25 * total
            if not mask.any():
                break
            corr[mask] += _log_2sin(math.pi * x[mask] / wo)
            x[mask] += ws
        while True:
            mask = x.real >= 0.75 * total
            if not mask.any():
                break
            x[mask] -= ws
            corr[mask] -= _log_2sin(math.pi * x[mask] / wo)
    return corr, x


def lattice_status(x: complex, p: Periods) -> str:
    """Classify x against the zero and pole lattices of S2."""
    x = complex(x)
    if not (math.isfinite(x.real) and math.isfinite(x.imag)):
        raise ValueError(f"non-finite argument {x!r}")
    thr = GUARD_DISTANCE * p.smallest
    if abs(x.imag) > thr:
        return REGULAR
    # zeros: -a w1 - b w2, a,b >= 0
    a_max = max(0, int(math.ceil(-x.real / p.omega1))) + 1
    d_zero = min(
        abs(x - (-a * p.omega1 - b * p.omega2))
        for a in range(a_max + 1)
        for b in range(max(0, int(math.ceil((-x.real - a * p.omega1) / p.omega2))) + 2)
    )
    if d_zero < thr:
        return NEAR_ZERO
    # poles: a w1 + b w2, a,b >= 1
    a_hi = max(1, int(math.ceil(x.real / p.omega1))) + 1
    d_pole = min(
        abs(x - (a * p.omega1 + b * p.omega2))
        for a in range(1, a_hi + 1)
        for b in range(1, max(1, int(math.ceil((x.real - a * p.omega1) / p.omega2))) + 2)
    )
    if d_pole < thr:
        return NEAR_POLE
    return REGULAR


def log_s2_batch(x, p: Periods):
    """log S2 over an array of points.  Exact only up to multiples of 2 pi i."""
    corr, xr = _reduced_log(x, p)
    return corr + _j_integral(2 * xr - p.total, p.omega1, p.omega2)


def s2_batch(x, p: Periods):
    """S2 over an array of points.  No lattice guard; callers near the
    real axis should check lattice_status themselves."""
    x = np.asarray(x, dtype=complex)
    return np.exp(log_s2_batch(x.ravel(), p)).reshape(x.shape)


def log_s2(x: complex, p: Periods) -> complex:
    return complex(log_s2_batch([complex(x)], p)[0])


def s2(x: complex, p: Periods) -> S2Value:
    status = lattice_status(x, p)
    return S2Value(value=complex(np.exp(log_s2(x, p))), status=status)


def s2_slope_at_zero(p: Periods) -> float:
    """d S2/dx at x = 0 (S2 itself vanishes there)."""
    return 2 * math.pi / math.sqrt(p.omega1 * p.omega2)


def s2_asymptotic_log(x: complex, p: Periods) -> complex:
    """Quadratic asymptote of log S2 as Im x -> +-oo (o(1) error), sign
    taken from the half plane of x."""
    x = complex(x)
    if x.imag == 0:
        raise ValueError("asymptote defined off the real axis")
    s = 1.0 if x.imag > 0 else -1.0
    w1, w2 = p.omega1, p.omega2
    quad = x * x / (2 * w1 * w2) - (w1 + w2) * x / (2 * w1 * w2)
    # constant term: +1/12(...), i.e. half the double Bernoulli polynomial
    # B22(x); the sign is pinned numerically by the integral representation
    const = (w1 / w2 + w2 / w1 + 3) / 12
    return s * math.pi * 1j * (quad + const)
