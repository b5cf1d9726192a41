"""Weight functions, decay kernels, and the tensor-product pairing integrals.

The two flavors of weight function (one per period), the kernel factors
assembled from the double sine function, the convergence window for the
real-line contour, the block of pairing integrals forming the fundamental
matrix, and the one-site integrals used by the closed-form determinant
checks all live here.  Every integral runs over the real line with a
truncation radius read off the analytic decay envelope, never hard-coded.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace
from functools import lru_cache
from itertools import permutations

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import CubicSpline

from .double_sine import Periods, log_s2_batch, s2, s2_batch
from .quantum_algebra import ModelParams, MultiIndex, r_matrix, weight_basis

LN10 = math.log(10.0)

# beyond this many copies of the larger period the kernel is replaced by
# its pure exponential tail; the dropped correction is O(e^{-2 pi |x| / max
# period}), about 4e-17 right at the switch
ASYM_SWITCH_FACTOR = 6.0

# spacing of the log-psi interpolation table; cubic interpolation error
# scales like step^4 and sits near 1e-11 at 0.02
PSI_TABLE_STEP = 0.02

# soft cap on tensor-grid chunk size (elements), keeps temporaries ~16 MB
_CHUNK_ELEMENTS = 1 << 20


# ---------------------------------------------------------------------------
# quadrature policy and result containers


@dataclass(frozen=True)
class QuadratureSpec:
    """Node density and truncation policy for the real-line integrals.

    The truncation radius is derived per axis: the integration window ends
    where the integrand envelope (kernel decay net of weight growth) has
    dropped truncation_margin decades below its peak.
    """

    nodes_per_unit: int = 12
    truncation_margin: float = 14.0
    tolerance: float = 1e-8
    max_dimension: int = 2

    def __post_init__(self):
        if not 2 <= self.nodes_per_unit <= 64:
            raise ValueError(f"nodes_per_unit {self.nodes_per_unit} outside 2..64")
        if not 1.0 <= self.truncation_margin <= 60.0:
            raise ValueError("truncation_margin must be between 1 and 60 decades")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_dimension not in (1, 2, 3):
            raise ValueError("max_dimension must be 1, 2 or 3")


@dataclass(frozen=True)
class IntegralResult:
    """Quadrature value with its node-doubling error estimate."""

    value: complex
    error_estimate: float
    flagged: bool = False
    nodes: int = 0

    def __complex__(self):
        return complex(self.value)


@dataclass(frozen=True)
class ConvergenceReport:
    """Outcome of the absolute-convergence window test for the pairing."""

    ok: bool
    mu_effective: float
    lower: float
    upper: float
    reason: str = ""

    @property
    def margins(self):
        """(distance above the lower edge, distance below the upper edge)."""
        return (self.mu_effective - self.lower, self.upper - self.mu_effective)

    def __bool__(self):
        return self.ok


def convergence_check(params: ModelParams, l: int, shift_mu: float = 0.0) -> ConvergenceReport:
    """Does the l-variable pairing converge absolutely on the real contour?

    The open window is
        2 pi^2 (l - 1 - sum Lambda)/(rho lam) < mu < 2 pi/lam - (same edge),
    tested for mu + shift_mu.  Both margins are reported; an empty window
    (small rho*lam) fails with a diagnostic.
    """
    sig = params.lambda_sum().real
    edge = 2.0 * math.pi**2 * (l - 1 - sig) / (params.rho * params.lam)
    lower = edge
    upper = 2.0 * math.pi / params.lam - edge
    mu = params.mu + shift_mu
    if lower >= upper:
        need = 2.0 * math.pi * (l - 1 - sig)
        return ConvergenceReport(
            False, mu, lower, upper,
            reason=f"window is empty: needs rho > {need:.6g} at this lam and weight sum",
        )
    if not lower < mu < upper:
        side = "lower" if mu <= lower else "upper"
        return ConvergenceReport(
            False, mu, lower, upper,
            reason=f"mu = {mu:.6g} outside the open window ({lower:.6g}, {upper:.6g}), {side} edge",
        )
    return ConvergenceReport(True, mu, lower, upper)


def pairing_envelope_rates(params: ModelParams, l: int):
    """Per-variable decay rates (left, right) of the pairing integrand.

    Kernel decay net of weight growth: each extra site costs its weight in
    the exponent, each extra variable one pair coupling.
    """
    corr = 2.0 * math.pi**2 * (params.lambda_sum().real - (l - 1)) / (params.rho * params.lam)
    left = params.mu + corr
    right = 2.0 * math.pi / params.rho + 2.0 * math.pi / params.lam - params.mu + corr
    return left, right


# ---------------------------------------------------------------------------
# kernels


class KernelContext:
    """Kernel evaluations tied to one (rho, lam) period pair.

    phi(x; Lambda) = 1/(S2(ix - Lambda pi) S2(-ix - Lambda pi)), both
    factors at periods (rho, lam); psi(x) = phi(x; -1).  Grid variants
    switch to the exponential tail beyond x_switch, and psi additionally
    reads a cubic interpolant of log psi built once per context, because
    the pair couplings of the two-dimensional integrals hit it at every
    node pair.  rho + lam > pi keeps psi pole-free on the real axis.
    """

    def __init__(self, params: ModelParams | None = None, *, periods: Periods | None = None,
                 table_step: float = PSI_TABLE_STEP):
        if periods is None:
            if params is None:
                raise ValueError("need params or periods")
            periods = Periods(params.rho, params.lam)
        if periods.total <= math.pi:
            raise ValueError(f"rho + lam = {periods.total:.6g} <= pi: psi acquires real poles")
        self.params = params
        self.periods = periods
        self.x_switch = ASYM_SWITCH_FACTOR * max(periods.omega1, periods.omega2)
        self.table_step = float(table_step)
        self.psi_interp_error = None
        self._psi_spline = None

    def decay_rate(self, Lambda) -> complex:
        """Coefficient a in phi(x; Lambda) ~ e^{-a |x|} on the real axis."""
        p = self.periods
        return math.pi * (p.total + 2.0 * complex(Lambda) * math.pi) / (p.omega1 * p.omega2)

    def phi(self, x, Lambda) -> complex:
        """Pointwise phi through the guarded scalar S2; raises with the
        offending factor named when an argument sits on the lattice."""
        L = complex(Lambda)
        a = 1j * complex(x) - L * math.pi
        b = -1j * complex(x) - L * math.pi
        try:
            va = s2(a, self.periods).value
        except ValueError as exc:
            raise ValueError(f"kernel factor S2(ix - Lambda pi) at {a:.6g}: {exc}") from exc
        try:
            vb = s2(b, self.periods).value
        except ValueError as exc:
            raise ValueError(f"kernel factor S2(-ix - Lambda pi) at {b:.6g}: {exc}") from exc
        denom = va * vb
        if denom == 0:
            raise ValueError("phi pole: both kernel factors vanish")
        return 1.0 / denom

    def psi(self, x) -> complex:
        return self.phi(x, -1.0)

    def phi_grid(self, x, Lambda):
        """Vectorized phi; complex offsets allowed, tail beyond x_switch."""
        xa = np.asarray(x, dtype=complex)
        shape = xa.shape
        xa = xa.reshape(-1)
        out = np.empty(xa.shape, dtype=complex)
        L = complex(Lambda)
        far = np.abs(xa.real) > self.x_switch
        if far.any():
            xf = xa[far]
            out[far] = np.exp(-self.decay_rate(L) * np.sign(xf.real) * xf)
        near = ~far
        if near.any():
            xn = xa[near]
            a = 1j * xn - L * math.pi
            if L.imag == 0.0 and not xn.imag.any():
                # real axis, real weight: the second factor is the complex
                # conjugate of the first
                out[near] = 1.0 / np.abs(s2_batch(a, self.periods)) ** 2
            else:
                b = -1j * xn - L * math.pi
                out[near] = 1.0 / (s2_batch(a, self.periods) * s2_batch(b, self.periods))
        return out.reshape(shape)

    def phi_log_grid(self, x, Lambda):
        """log phi on a grid.  Lets callers fuse the kernel with growing
        exponential prefactors before a single exp, so near the edge of the
        convergence window neither factor overflows on its own."""
        xa = np.asarray(x, dtype=complex)
        shape = xa.shape
        xa = xa.reshape(-1)
        out = np.empty(xa.shape, dtype=complex)
        L = complex(Lambda)
        far = np.abs(xa.real) > self.x_switch
        if far.any():
            xf = xa[far]
            out[far] = -self.decay_rate(L) * np.sign(xf.real) * xf
        near = ~far
        if near.any():
            xn = xa[near]
            a = 1j * xn - L * math.pi
            if L.imag == 0.0 and not xn.imag.any():
                out[near] = -2.0 * log_s2_batch(a, self.periods).real
            else:
                b = -1j * xn - L * math.pi
                out[near] = -(log_s2_batch(a, self.periods) + log_s2_batch(b, self.periods))
        return out.reshape(shape)

    def phi_total(self, x, params: ModelParams | None = None):
        """prod_m phi(x - beta_m; Lambda_m) on a grid."""
        p = params if params is not None else self.params
        if p is None:
            raise ValueError("no site parameters supplied")
        xa = np.asarray(x, dtype=complex)
        out = None
        for bm, Lm in zip(p.beta, p.Lambda):
            f = self.phi_grid(xa - bm, Lm)
            out = f if out is None else out * f
        return out

    def phi_total_log(self, x, params: ModelParams | None = None):
        """sum_m log phi(x - beta_m; Lambda_m) on a grid."""
        p = params if params is not None else self.params
        if p is None:
            raise ValueError("no site parameters supplied")
        xa = np.asarray(x, dtype=complex)
        out = None
        for bm, Lm in zip(p.beta, p.Lambda):
            f = self.phi_log_grid(xa - bm, Lm)
            out = f if out is None else out + f
        return out

    def _table(self):
        if self._psi_spline is None:
            h = self.table_step
            knots = np.arange(0.0, self.x_switch + 4.0 * h, h)
            vals = self.phi_grid(knots, -1.0).real  # positive on the real axis
            sp = CubicSpline(knots, np.log(vals), bc_type=((1, 0.0), "not-a-knot"))
            probe = knots[:-1:7] + 0.5 * h
            direct = self.phi_grid(probe, -1.0).real
            dev = np.abs(np.exp(sp(probe)) / direct - 1.0)
            self.psi_interp_error = float(dev.max())
            self._psi_spline = sp
        return self._psi_spline

    def psi_grid(self, x):
        """Vectorized psi for real arguments (differences of contour nodes)."""
        xa = np.asarray(x)
        if np.iscomplexobj(xa):
            if xa.imag.any():
                return self.phi_grid(xa, -1.0)
            xa = xa.real
        shape = xa.shape
        ax = np.abs(xa).reshape(-1)
        sp = self._table()
        out = np.empty(ax.shape)
        far = ax > self.x_switch
        if far.any():
            out[far] = np.exp(-self.decay_rate(-1.0).real * ax[far])
        near = ~far
        if near.any():
            out[near] = np.exp(sp(ax[near]))
        return out.reshape(shape)


@lru_cache(maxsize=8)
def _period_context(w1: float, w2: float, step: float) -> KernelContext:
    return KernelContext(periods=Periods(w1, w2), table_step=step)


def kernel_context(params: ModelParams) -> KernelContext:
    """Shared per-period context; the psi table is built once and reused
    across calls with the same periods (shifted-beta runs included)."""
    return _period_context(params.rho, params.lam, PSI_TABLE_STEP)


def phi(x, Lambda, ctx: KernelContext) -> complex:
    return ctx.phi(x, Lambda)


def psi(x, ctx: KernelContext) -> complex:
    return ctx.phi(x, -1.0)


# ---------------------------------------------------------------------------
# weight functions


@lru_cache(maxsize=8)
def _perm_signs(l: int):
    out = []
    for perm in permutations(range(l)):
        inv = sum(1 for i in range(l) for j in range(i + 1, l) if perm[i] > perm[j])
        out.append((perm, -1.0 if inv % 2 else 1.0))
    return tuple(out)


def _cross_pairs(L: MultiIndex) -> int:
    """sum over site pairs m < m' of l_m * l_m'."""
    return (L.total**2 - sum(e * e for e in L.entries)) // 2


def _site_ladder(alpha, own: float, m_idx: int, betas, Lambdas):
    """Per-variable site factor of the plain weight for a variable attached
    to site m_idx (0-based): a decaying exponential anchored at its own
    site, sh ladders with +Lambda pi i offsets at earlier sites and
    -Lambda pi i at later ones.  Vectorized over alpha."""
    a = np.asarray(alpha, dtype=complex)
    k = math.pi / own
    out = np.exp(-k * (a - betas[m_idx] + Lambdas[m_idx] * math.pi * 1j))
    for m in range(m_idx):
        out = out * np.sinh(k * (a - betas[m] + Lambdas[m] * math.pi * 1j))
    for m in range(m_idx + 1, len(betas)):
        out = out * np.sinh(k * (a - betas[m] - Lambdas[m] * math.pi * 1j))
    return out


def _coerce_index(L) -> MultiIndex:
    return L if isinstance(L, MultiIndex) else MultiIndex(tuple(L))


def g_weight(flavor: str, L, alphas, betas, params: ModelParams, Lambdas=None) -> complex:
    """The plain (un-symmetrized) weight function.

    Product of the q-phase raised to the cross-site occupation count, one
    sh factor per ordered variable pair at argument shifted by -pi i, and
    one site ladder per variable.  The lambda flavor is the same
    expression with the two periods swapped.  Entire in every alpha.
    """
    L = _coerce_index(L)
    own, _ = params.periods(flavor)
    if Lambdas is None:
        Lambdas = params.Lambda
    betas = tuple(complex(b) for b in betas)
    Lambdas = tuple(complex(v) for v in Lambdas)
    if len(betas) != len(Lambdas) or L.n != len(betas):
        raise ValueError("site data and multi-index lengths disagree")
    l = L.total
    alphas = tuple(complex(a) for a in alphas)
    if len(alphas) != l:
        raise ValueError(f"need {l} variables, got {len(alphas)}")
    val = params.q_phase(flavor).power(_cross_pairs(L))
    k = math.pi / own
    for j in range(l):
        for j2 in range(j + 1, l):
            val *= cmath.sinh(k * (alphas[j2] - alphas[j] - 1j * math.pi))
    gam = tuple(m - 1 for m in L.sites())
    for j in range(l):
        val *= complex(_site_ladder(alphas[j], own, gam[j], betas, Lambdas))
    return val


def w_weight(flavor: str, L, alphas, betas, params: ModelParams, Lambdas=None) -> complex:
    """Skew-symmetrization of g_weight over the variables: the signed
    permutation sum with a 1/l! prefactor.  Explicit sum, capped at l <= 4."""
    l = len(alphas)
    if l > 4:
        raise ValueError("explicit skew-symmetrization capped at l <= 4")
    acc = 0j
    for perm, sign in _perm_signs(l):
        acc += sign * g_weight(flavor, L, [alphas[p] for p in perm], betas, params, Lambdas)
    return acc / math.factorial(l)


@dataclass(frozen=True)
class WeightFunction:
    """One side of the pairing.

    flavor picks the period; kind "w" is the skew-symmetrized weight and
    "g" the plain one (the shift-relation routes pair a plain weight with
    a symmetrized one).  site_order permutes the (beta, Lambda) site data
    jointly, for the relabeled pairings; entries are 1-based sites.
    """

    flavor: str
    L: MultiIndex
    params: ModelParams
    kind: str = "w"
    site_order: tuple = ()

    def __post_init__(self):
        if self.flavor not in ("rho", "lambda"):
            raise ValueError(f"flavor must be 'rho' or 'lambda', got {self.flavor!r}")
        if self.kind not in ("w", "g"):
            raise ValueError(f"kind must be 'w' or 'g', got {self.kind!r}")
        object.__setattr__(self, "L", _coerce_index(self.L))
        if self.L.n != self.params.n:
            raise ValueError("multi-index does not match the site count")
        order = self.site_order or tuple(range(1, self.params.n + 1))
        order = tuple(int(m) for m in order)
        if sorted(order) != list(range(1, self.params.n + 1)):
            raise ValueError(f"site_order must permute 1..{self.params.n}, got {order}")
        object.__setattr__(self, "site_order", order)

    @property
    def l(self) -> int:
        return self.L.total

    def site_data(self):
        b, lam = self.params.beta, self.params.Lambda
        return (tuple(b[m - 1] for m in self.site_order),
                tuple(lam[m - 1] for m in self.site_order))

    def value(self, alphas) -> complex:
        betas, Lams = self.site_data()
        fn = w_weight if self.kind == "w" else g_weight
        return fn(self.flavor, self.L, alphas, betas, self.params, Lambdas=Lams)


class _GridWeight:
    """Broadcast evaluator for one weight function on a shared node vector.

    Site ladders are precomputed once per node set; tensor chunks are
    assembled from row slices, so chunking costs no re-evaluation.
    """

    def __init__(self, fn: WeightFunction, nodes):
        self.l = fn.l
        own, _ = fn.params.periods(fn.flavor)
        self.k = math.pi / own
        self.nodes = nodes
        betas, Lams = fn.site_data()
        gam = tuple(m - 1 for m in fn.L.sites())
        pref = fn.params.q_phase(fn.flavor).power(_cross_pairs(fn.L))
        if fn.kind == "w":
            scale = pref / math.factorial(self.l)
            self.terms = tuple((perm, sign * scale) for perm, sign in _perm_signs(self.l))
        else:
            self.terms = ((tuple(range(self.l)), pref),)
        self.h = [_site_ladder(nodes, own, gam[j], betas, Lams) for j in range(self.l)]

    def one_d(self):
        perm, coeff = self.terms[0]
        return coeff * self.h[0]

    def _axis_nodes(self, axis: int, rows: slice):
        return self.nodes[rows] if axis == 0 else self.nodes

    def chunk(self, rows: slice):
        """Grid over axes [nodes[rows], nodes, ..., nodes]."""
        l = self.l
        out = None
        for perm, coeff in self.terms:
            grid = None
            for j in range(l):
                axis = perm[j]
                vals = self.h[j][rows] if axis == 0 else self.h[j]
                fac = _bc(vals, axis, l)
                grid = fac if grid is None else grid * fac
            for j in range(l):
                for j2 in range(j + 1, l):
                    a1, a2 = perm[j], perm[j2]
                    diff = _bc(self._axis_nodes(a2, rows), a2, l) - _bc(self._axis_nodes(a1, rows), a1, l)
                    grid = grid * np.sinh(self.k * (diff - 1j * math.pi))
            out = coeff * grid if out is None else out + coeff * grid
        return out


def _bc(arr, axis: int, l: int):
    """Reshape a 1-D array to broadcast along the given tensor axis."""
    shape = [1] * l
    shape[axis] = arr.shape[0]
    return arr.reshape(shape)


# ---------------------------------------------------------------------------
# quadrature driver


def _axis_nodes(anchor_lo: float, anchor_hi: float, rate_left: float, rate_right: float,
                margin: float, npu: int):
    """Composite Gauss-Legendre panels covering the envelope support:
    [anchor_lo - margin*ln10/rate_left, anchor_hi + margin*ln10/rate_right]
    cut into panels of width <= 1."""
    if rate_left <= 0 or rate_right <= 0:
        raise ValueError("integrand envelope does not decay; outside the convergence window")
    a = anchor_lo - margin * LN10 / rate_left
    b = anchor_hi + margin * LN10 / rate_right
    panels = max(1, math.ceil(b - a))
    edges = np.linspace(a, b, panels + 1)
    xg, wg = leggauss(npu)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * xg).ravel()
    wts = (half[:, None] * wg).ravel()
    return nodes, wts


def _grid_range_guard(nodes, growth: float):
    """The sh/exp weight grids grow like exp(growth * |node|) and are formed
    as standalone tensors before the decaying core multiplies them away, so
    they must fit in double range on their own."""
    if growth <= 0:
        return
    amax = float(max(abs(nodes[0]), abs(nodes[-1])))
    if growth * amax > 690.0:
        raise ValueError(
            "truncation range too wide for the factored integrand: weight factors reach "
            f"exp({growth * amax:.3g}); the convergence margin is too thin at these parameters")


def _entry_sums(l: int, nodes, u, ctx: KernelContext, left, right, pair_idx):
    """Shared-core tensor sums.

    u is the 1-D measure factor with quadrature weights folded in; left and
    right are _GridWeight lists; pair_idx lists (i, j) entries to contract.
    Chunks run over rows of axis 0 in fixed order, and the pair couplings
    between the non-chunked axes are reused across chunks.
    """
    if l == 1:
        lv = [g.one_d() for g in left]
        rv = [g.one_d() for g in right]
        return np.array([np.sum((u * lv[i]) * rv[j]) for i, j in pair_idx])
    n_nodes = nodes.shape[0]
    per = max(1, _CHUNK_ELEMENTS // (n_nodes ** (l - 1)))
    acc = np.zeros(len(pair_idx), dtype=complex)
    rest = None
    for a1 in range(1, l):
        for a2 in range(a1 + 1, l):
            d = _bc(nodes, a2, l) - _bc(nodes, a1, l)
            pg = ctx.psi_grid(d)
            rest = pg if rest is None else rest * pg
    for start in range(0, n_nodes, per):
        rows = slice(start, min(start + per, n_nodes))
        core = _bc(u[rows], 0, l)
        for a in range(1, l):
            core = core * _bc(u, a, l)
        for a in range(1, l):
            core = core * ctx.psi_grid(_bc(nodes, a, l) - _bc(nodes[rows], 0, l))
        if rest is not None:
            core = core * rest
        lw = [g.chunk(rows) for g in left]
        rw = [g.chunk(rows) for g in right]
        for idx, (i, j) in enumerate(pair_idx):
            # core first: it is tiny where the weights are huge, and the
            # ordered product keeps every intermediate inside double range
            acc[idx] += np.sum((core * lw[i]) * rw[j])
    return acc


def _pairing_pass(params: ModelParams, l: int, left_fns, right_fns, pair_idx,
                  quad: QuadratureSpec, npu: int, ctx: KernelContext):
    rate_l, rate_r = pairing_envelope_rates(params, l)
    blo = min(b.real for b in params.beta)
    bhi = max(b.real for b in params.beta)
    nodes, wts = _axis_nodes(blo, bhi, rate_l, rate_r, quad.truncation_margin, npu)
    _grid_range_guard(nodes, l * (params.n + l - 1) * math.pi / min(params.rho, params.lam))
    # fused exponent: e^{mu alpha} alone can overflow on a wide axis even
    # though the product with the kernels decays
    u = wts * np.exp(params.mu * nodes + ctx.phi_total_log(nodes, params))
    left = [_GridWeight(f, nodes) for f in left_fns]
    right = [_GridWeight(f, nodes) for f in right_fns]
    return _entry_sums(l, nodes, u, ctx, left, right, pair_idx), nodes.shape[0]


def _paired_l(f: WeightFunction, g: WeightFunction, params: ModelParams) -> int:
    if f.L.total != g.L.total:
        raise ValueError("the two weight functions carry different variable counts")
    if f.params.n != params.n or g.params.n != params.n:
        raise ValueError("weight functions and measure disagree on the site count")
    return f.L.total


def pairing_integral(f: WeightFunction, g: WeightFunction, params: ModelParams,
                     quad: QuadratureSpec | None = None) -> IntegralResult:
    """I(f, g): the l-fold real-line integral of e^{mu sum alpha} times the
    site kernels, the pair kernels, and f * g.

    Evaluated at the requested node density and at double density; the
    difference is the reported error estimate, and the result is flagged
    when that estimate exceeds quad.tolerance (relative, floored at 1).
    """
    quad = quad or QuadratureSpec()
    l = _paired_l(f, g, params)
    if l == 0:
        return IntegralResult(1.0 + 0j, 0.0, False, 0)
    if l > quad.max_dimension:
        raise ValueError(f"l = {l} exceeds max_dimension = {quad.max_dimension}")
    rep = convergence_check(params, l)
    if not rep:
        raise ValueError(f"pairing does not converge absolutely: {rep.reason}")
    ctx = kernel_context(params)
    coarse, _ = _pairing_pass(params, l, [f], [g], [(0, 0)], quad, quad.nodes_per_unit, ctx)
    fine, n2 = _pairing_pass(params, l, [f], [g], [(0, 0)], quad, 2 * quad.nodes_per_unit, ctx)
    err = float(abs(fine[0] - coarse[0]))
    flagged = err > quad.tolerance * max(1.0, abs(fine[0]))
    return IntegralResult(complex(fine[0]), err, bool(flagged), n2)


def pairing_integral_shifted_beta(f: WeightFunction, g: WeightFunction, params: ModelParams,
                                  m: int, shift, quad: QuadratureSpec | None = None) -> IntegralResult:
    """The pairing with beta_m complex-shifted and the contour unchanged.

    Valid exactly when the shifted site is the last one, carries no
    variables in the multi-index of f, and the shift is +i times the
    partner period of f's flavor: then every kernel pole ladder that the
    shift moves across the axis is cancelled by a sh factor of f, and the
    real-line contour never meets a pole.
    """
    quad = quad or QuadratureSpec()
    l = _paired_l(f, g, params)
    n = params.n
    if not 1 <= m <= n:
        raise ValueError(f"site {m} outside 1..{n}")
    if l == 0:
        return IntegralResult(1.0 + 0j, 0.0, False, 0)
    _, partner = params.periods(f.flavor)
    safe = (m == n and f.L.entries[m - 1] == 0
            and abs(complex(shift) - 1j * partner) <= 1e-9 * partner)
    if not safe:
        raise ValueError("contour deformation required; out of scope")
    beta = list(params.beta)
    beta[m - 1] += complex(shift)
    shifted = params.with_beta(beta)
    f2 = replace(f, params=shifted)
    g2 = replace(g, params=shifted)
    return pairing_integral(f2, g2, shifted, quad)


# ---------------------------------------------------------------------------
# fundamental matrix


@dataclass(frozen=True)
class FundamentalMatrix:
    """Pairing matrix over the weight basis: rows carry the rho flavor,
    columns the lambda flavor, in the lex basis order."""

    entries: np.ndarray
    basis: tuple
    params: ModelParams
    quad: QuadratureSpec
    entry_errors: np.ndarray
    error_estimate: float
    flagged: bool
    nodes: int

    @property
    def d(self) -> int:
        return len(self.basis)

    def determinant_d(self):
        """(det, bound): the determinant with a first-order error bound,
        sum over entries of |cofactor| x entry error."""
        mat = self.entries
        det = complex(np.linalg.det(mat))
        bound = 0.0
        for i in range(self.d):
            for j in range(self.d):
                minor = np.delete(np.delete(mat, i, axis=0), j, axis=1)
                cof = complex(np.linalg.det(minor))
                bound += abs(cof) * float(self.entry_errors[i, j])
        return det, bound


def fundamental_matrix(params: ModelParams, l: int,
                       quad: QuadratureSpec | None = None) -> FundamentalMatrix:
    """All d x d pairings between the two weight families, sharing one
    measure evaluation across entries."""
    quad = quad or QuadratureSpec()
    basis = weight_basis(params.n, l)
    d = len(basis)
    if l == 0:
        one = np.ones((1, 1), dtype=complex)
        return FundamentalMatrix(one, basis, params, quad, np.zeros((1, 1)), 0.0, False, 0)
    if l > quad.max_dimension:
        raise ValueError(f"l = {l} exceeds max_dimension = {quad.max_dimension}")
    rep = convergence_check(params, l)
    if not rep:
        raise ValueError(f"pairing does not converge absolutely: {rep.reason}")
    ctx = kernel_context(params)
    rho_fns = [WeightFunction("rho", L, params) for L in basis]
    lam_fns = [WeightFunction("lambda", L, params) for L in basis]
    pair_idx = [(i, j) for i in range(d) for j in range(d)]
    coarse, _ = _pairing_pass(params, l, rho_fns, lam_fns, pair_idx, quad, quad.nodes_per_unit, ctx)
    fine, n2 = _pairing_pass(params, l, rho_fns, lam_fns, pair_idx, quad, 2 * quad.nodes_per_unit, ctx)
    entries = fine.reshape(d, d)
    errs = np.abs(fine - coarse).reshape(d, d)
    flagged = bool((errs > quad.tolerance * np.maximum(1.0, np.abs(entries))).any())
    return FundamentalMatrix(entries, basis, params, quad, errs, float(errs.max()), flagged, n2)


def determinant_d(params: ModelParams, l: int, quad: QuadratureSpec | None = None):
    """(det, bound) of the fundamental matrix at the given parameters."""
    return fundamental_matrix(params, l, quad).determinant_d()


# ---------------------------------------------------------------------------
# one-site integrals


def f_convergence_bound(l: int, Lambda, periods: Periods) -> float:
    """|Re x| bound for absolute convergence of the one-site integral."""
    w1, w2 = periods.omega1, periods.omega2
    return (math.pi / w1 + math.pi / w2
            - 2.0 * math.pi**2 * (l - 1 - complex(Lambda).real) / (w1 * w2))


def f_integral(l: int, Lambda, x, periods, quad: QuadratureSpec | None = None) -> IntegralResult:
    """The l-variable one-site integral: e^{x sum alpha} against the site
    kernel phi(.; Lambda), the pair kernels, the skew-symmetrized sh
    product at the first period's rate and the plain sh product at the
    second period's rate."""
    quad = quad or QuadratureSpec()
    periods = periods if isinstance(periods, Periods) else Periods(*periods)
    if l < 0:
        raise ValueError("need l >= 0")
    if l == 0:
        return IntegralResult(1.0 + 0j, 0.0, False, 0)
    if l > quad.max_dimension:
        raise ValueError(f"l = {l} exceeds max_dimension = {quad.max_dimension}")
    x = complex(x)
    bound = f_convergence_bound(l, Lambda, periods)
    if abs(x.real) >= bound:
        raise ValueError(
            f"one-site integral not absolutely convergent: |Re x| = {abs(x.real):.6g} >= {bound:.6g}")
    ctx = _period_context(periods.omega1, periods.omega2, PSI_TABLE_STEP)
    k_own = math.pi / periods.omega1
    k_par = math.pi / periods.omega2
    signs = _perm_signs(l)
    fact = math.factorial(l)

    def one_pass(npu: int):
        nodes, wts = _axis_nodes(0.0, 0.0, bound + x.real, bound - x.real,
                                 quad.truncation_margin, npu)
        if l > 1:
            _grid_range_guard(nodes, l * (l - 1) * max(k_own, k_par))
        u = wts * np.exp(x * nodes + ctx.phi_log_grid(nodes, Lambda))
        if l == 1:
            return np.sum(u), nodes.shape[0]
        n_nodes = nodes.shape[0]
        per = max(1, _CHUNK_ELEMENTS // (n_nodes ** (l - 1)))
        total = 0j

        def ax(axis, rows):
            return nodes[rows] if axis == 0 else nodes

        rest = None
        for a1 in range(1, l):
            for a2 in range(a1 + 1, l):
                pg = ctx.psi_grid(_bc(nodes, a2, l) - _bc(nodes, a1, l))
                rest = pg if rest is None else rest * pg
        for start in range(0, n_nodes, per):
            rows = slice(start, min(start + per, n_nodes))
            core = _bc(u[rows], 0, l)
            for a in range(1, l):
                core = core * _bc(u, a, l)
            for a in range(1, l):
                core = core * ctx.psi_grid(_bc(nodes, a, l) - _bc(nodes[rows], 0, l))
            if rest is not None:
                core = core * rest
            plain = None
            for j in range(l):
                for j2 in range(j + 1, l):
                    diff = _bc(ax(j2, rows), j2, l) - _bc(ax(j, rows), j, l)
                    fac = np.sinh(k_par * (diff - 1j * math.pi))
                    plain = fac if plain is None else plain * fac
            skew = None
            for perm, sign in signs:
                term = None
                for j in range(l):
                    for j2 in range(j + 1, l):
                        a1, a2 = perm[j], perm[j2]
                        diff = _bc(ax(a2, rows), a2, l) - _bc(ax(a1, rows), a1, l)
                        fac = np.sinh(k_own * (diff - 1j * math.pi))
                        term = fac if term is None else term * fac
                term = (sign / fact) * term
                skew = term if skew is None else skew + term
            total += np.sum((core * skew) * plain)
        return total, n_nodes

    coarse, _ = one_pass(quad.nodes_per_unit)
    fine, n2 = one_pass(2 * quad.nodes_per_unit)
    err = float(abs(fine - coarse))
    flagged = err > quad.tolerance * max(1.0, abs(fine))
    return IntegralResult(complex(fine), err, bool(flagged), n2)


# ---------------------------------------------------------------------------
# pointwise exchange relation


def exchange_check(params: ModelParams, alphas):
    """Two-site exchange at fixed variables: returns (lhs, rhs) vectors over
    the weight basis, where lhs collects the swapped-site weights and rhs
    is the block R-matrix at z_1/z_2 applied to the unswapped weight
    vector.  Their equality is the pointwise exchange relation."""
    if params.n != 2:
        raise ValueError("pointwise exchange check implemented for two sites")
    l = len(alphas)
    basis = weight_basis(2, l)
    q = params.q_phase("rho")
    zratio = params.z(1, "rho") / params.z(2, "rho")
    r = r_matrix(params.Lambda[0], params.Lambda[1], zratio, q, l)
    wvec = np.array([WeightFunction("rho", L, params).value(alphas) for L in basis])
    swapped = replace(params,
                      beta=(params.beta[1], params.beta[0]),
                      Lambda=(params.Lambda[1], params.Lambda[0]))
    lhs = np.array([
        WeightFunction("rho", MultiIndex(L.entries[::-1]), swapped).value(alphas)
        for L in basis
    ])
    rhs = r @ wvec
    return lhs, rhs
