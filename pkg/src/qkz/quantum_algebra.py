"""Modular-pair quantum algebra: Verma modules, R-matrices, the K operator.

Everything lives at |q| = 1.  A deformation parameter is stored as its
phase theta (q = e^{i theta}), and q^x is always exp(i theta x); the
complex number q is never raised to a complex power directly, so there
is no branch ambiguity in q^{2 Lambda} with non-integer Lambda.

Verma module V_Lambda has basis v^(0), v^(1), ...; the evaluation module
V_Lambda(z) attaches a spectral parameter z to the affine generators:

    e1 v^(k) = [2 Lambda - k + 1] v^(k-1)     e0 = z f1
    f1 v^(k) = [k + 1] v^(k+1)                f0 = z^{-1} e1
    q^{h1} v^(k) = q^{2(Lambda - k)}          q^{h0} = q^{-h1}

Tensor products carry the coproduct D(e) = e x 1 + q^h x e,
D(f) = f x q^{-h} + 1 x f, D(q^h) = q^h x q^h, and the flipped coproduct
D' = sigma o D.  The R-matrix on a two-site weight block is built two
independent ways: the triangular-series-plus-projectors closed
construction, and a direct linear solve of the intertwining equations
R D(x) = D'(x) R (the oracle).

The boundary operator K_m on the n-site weight-l block is the ordered
product of pairwise R factors around site m with a diagonal power of
r = e^{-mu lambda i / 2} in the middle; det K has a closed sinh-ratio
product form implemented side by side.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache

import numpy as np

# proximity threshold for "parameters are non-generic" failures
DEGENERACY_GUARD = 1e-8
# proximity threshold for exact-zero denominators (q - 1/q, sinh, ...)
ZERO_GUARD = 1e-12


# ---------------------------------------------------------------------------
# phases and q-integers


@dataclass(frozen=True)
class QPhase:
    """q = e^{i theta} on the unit circle.

    Construction rejects q = +-1 (theta an integer multiple of pi), where
    q - q^{-1} = 0 kills every q-bracket.  Higher roots of unity are legal
    at construction: the acceptance parameter sets sit at theta/pi = -1/2
    and similar low-order rationals, and only brackets that actually
    vanish are forbidden, at their point of use (q_factorial, the R(0)
    series denominators).  phase_is_generic() gives the stricter scan.
    """

    theta: float

    def __post_init__(self):
        if not math.isfinite(self.theta):
            raise ValueError(f"non-finite phase {self.theta!r}")
        t = self.theta / math.pi
        if abs(t - round(t)) < ZERO_GUARD:
            raise ValueError(f"q = e^(i {self.theta}) is +-1; every q-bracket degenerates")

    @classmethod
    def from_period(cls, period: float) -> "QPhase":
        # q^(rho) = e^{-i pi^2 / rho}
        return cls(-math.pi**2 / period)

    def power(self, x) -> complex:
        """q^x = exp(i theta x) for complex x."""
        return cmath.exp(1j * self.theta * complex(x))

    @property
    def value(self) -> complex:
        return self.power(1)


def phase_is_generic(q: QPhase, max_denominator: int = 64) -> bool:
    """True when theta/pi is not within 1e-12 of a rational with small
    denominator, i.e. q is safely far from low-order roots of unity."""
    t = q.theta / math.pi
    near = Fraction(t).limit_denominator(max_denominator)
    return abs(t - float(near)) >= ZERO_GUARD


def q_integer(a, q: QPhase) -> complex:
    """[a]_q = (q^a - q^{-a}) / (q - q^{-1})."""
    denom = q.power(1) - q.power(-1)  # 2 i sin theta
    if abs(denom) < ZERO_GUARD:
        raise ValueError("q - q^{-1} vanishes; q-integers undefined")
    return (q.power(a) - q.power(-a)) / denom


def q_factorial(k: int, q: QPhase) -> complex:
    """[k]_q! = [1][2]...[k]; errors if any factor vanishes."""
    if k < 0:
        raise ValueError("q-factorial needs k >= 0")
    out = 1.0 + 0j
    for m in range(1, k + 1):
        v = q_integer(m, q)
        if abs(v) < ZERO_GUARD:
            raise ValueError(f"[{m}]_q = 0: q is a root of unity of order 2*{m}")
        out *= v
    return out


# ---------------------------------------------------------------------------
# model parameters and multi-indices


@dataclass(frozen=True)
class ModelParams:
    """rho, lam, mu > 0; Lambda_m < 0 site weights; beta_m rapidities.

    beta is stored as complex to admit the shifted arguments appearing in
    the difference-equation checks; the integral operations reject
    non-real beta themselves.  Derived quantities (z_m, p, r, the two
    q-phases) are computed on demand, never stored.
    """

    rho: float
    lam: float
    mu: float
    Lambda: tuple
    beta: tuple

    def __post_init__(self):
        for name in ("rho", "lam", "mu"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v!r}")
        object.__setattr__(self, "Lambda", tuple(complex(L) for L in self.Lambda))
        object.__setattr__(self, "beta", tuple(complex(b) for b in self.beta))
        if len(self.Lambda) != len(self.beta):
            raise ValueError("Lambda and beta must have one entry per site")
        if not self.Lambda:
            raise ValueError("need at least one site")
        for L in self.Lambda:
            if L.imag != 0 or not L.real < 0:
                raise ValueError(f"site weights must be negative reals, got {L!r}")
        for b in self.beta:
            if not (math.isfinite(b.real) and math.isfinite(b.imag)):
                raise ValueError(f"non-finite beta {b!r}")

    @property
    def n(self) -> int:
        return len(self.Lambda)

    def periods(self, flavor: str = "rho"):
        """(own period, partner period) for the given flavor."""
        if flavor == "rho":
            return self.rho, self.lam
        if flavor == "lambda":
            return self.lam, self.rho
        raise ValueError(f"flavor must be 'rho' or 'lambda', got {flavor!r}")

    def q_phase(self, flavor: str = "rho") -> QPhase:
        own, _ = self.periods(flavor)
        return QPhase.from_period(own)

    def z(self, m: int, flavor: str = "rho") -> complex:
        """z_m = e^{2 pi beta_m / period}; sites are 1-based."""
        own, _ = self.periods(flavor)
        return cmath.exp(2 * math.pi * self.beta[m - 1] / own)

    def p_shift(self, flavor: str = "rho") -> complex:
        """multiplier e^{-2 pi i partner / own} carried by the wrapped R factors."""
        own, other = self.periods(flavor)
        return cmath.exp(-2j * math.pi * other / own)

    def r_diag(self, flavor: str = "rho") -> complex:
        """r = e^{-mu partner i / 2}, the diagonal half-phase."""
        _, other = self.periods(flavor)
        return cmath.exp(-1j * self.mu * other / 2)

    def lambda_sum(self) -> complex:
        return sum(self.Lambda)

    def with_beta(self, beta) -> "ModelParams":
        return replace(self, beta=tuple(beta))


def compositions(l: int, n: int):
    """All (l_1, ..., l_n) of non-negative integers summing to l, in
    lexicographic order."""
    if n == 0:
        return [()] if l == 0 else []
    if n == 1:
        return [(l,)]
    out = []
    for first in range(l + 1):
        out.extend((first, *rest) for rest in compositions(l - first, n - 1))
    return out


def compositions_count(total: int, parts: int) -> int:
    """|{(l_1..l_parts) >= 0 : sum = total}| = C(total+parts-1, parts-1);
    the parts = 0 edge is the Kronecker delta at total = 0."""
    if total < 0:
        return 0
    if parts == 0:
        return 1 if total == 0 else 0
    return math.comb(total + parts - 1, parts - 1)


@dataclass(frozen=True)
class MultiIndex:
    """A point of Z_l^n: site occupation numbers (l_1, ..., l_n)."""

    entries: tuple

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(int(e) for e in self.entries))
        if any(e < 0 for e in self.entries):
            raise ValueError(f"occupations must be non-negative, got {self.entries}")

    @property
    def n(self) -> int:
        return len(self.entries)

    @property
    def total(self) -> int:
        return sum(self.entries)

    def sites(self) -> tuple:
        """gamma(j) for j = 1..l: the site each ordered variable sits on;
        the first l_1 variables on site 1, the next l_2 on site 2, ..."""
        return tuple(m for m, lm in enumerate(self.entries, start=1) for _ in range(lm))

    def blocks(self) -> tuple:
        """Gamma_m: the set of variable labels j with gamma(j) = m."""
        out = []
        j = 1
        for lm in self.entries:
            out.append(tuple(range(j, j + lm)))
            j += lm
        return tuple(out)

    def preceded_by(self, other: "MultiIndex") -> bool:
        """Partial order: other <= self when every suffix sum of other is
        bounded by the matching suffix sum of self."""
        if self.n != other.n or self.total != other.total:
            return False
        acc_s = acc_o = 0
        for es, eo in zip(reversed(self.entries), reversed(other.entries)):
            acc_s += es
            acc_o += eo
            if acc_o > acc_s:
                return False
        return True


def weight_basis(n: int, l: int):
    """Lex-ordered basis of the weight-l block, as MultiIndex objects."""
    return tuple(MultiIndex(c) for c in compositions(l, n))


@dataclass
class WeightBlockMatrix:
    """Dense operator on the weight-l block in the fixed lex basis."""

    n: int
    l: int
    basis: tuple
    matrix: np.ndarray

    def det(self) -> complex:
        return complex(np.linalg.det(self.matrix))


# ---------------------------------------------------------------------------
# single-site and two-site actions


def verma_action(gen: str, k: int, Lambda, z, q: QPhase):
    """Action of one generator on v^(k); returns (target index, coefficient).

    Target index -1 with zero coefficient encodes the zero vector.  The
    h-generators return (k, scalar) with the scalar q^{+-2(Lambda-k)}.
    """
    if k < 0:
        raise ValueError("basis index must be >= 0")
    Lambda = complex(Lambda)
    if gen == "e1":
        if k == 0:
            return (-1, 0j)
        return (k - 1, q_integer(2 * Lambda - k + 1, q))
    if gen == "f1":
        return (k + 1, q_integer(k + 1, q))
    if gen == "h1":
        return (k, q.power(2 * (Lambda - k)))
    if gen == "e0":
        return (k + 1, complex(z) * q_integer(k + 1, q))
    if gen == "f0":
        if k == 0:
            return (-1, 0j)
        return (k - 1, q_integer(2 * Lambda - k + 1, q) / complex(z))
    if gen == "h0":
        return (k, q.power(-2 * (Lambda - k)))
    raise ValueError(f"unknown generator {gen!r}")


@dataclass
class TensorVector:
    """Vector in V_{Lambda1}(z1) x V_{Lambda2}(z2) truncated at total
    degree l_max; coeffs[a, b] multiplies v^(a) x v^(b), a + b <= l_max."""

    coeffs: np.ndarray
    Lambda1: complex
    Lambda2: complex
    z1: complex = 1.0 + 0j
    z2: complex = 1.0 + 0j
    overflow: bool = False

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.ndim != 2 or self.coeffs.shape[0] != self.coeffs.shape[1]:
            raise ValueError("coeffs must be a square (l_max+1)^2 array")

    @property
    def l_max(self) -> int:
        return self.coeffs.shape[0] - 1

    def block_vector(self, j: int) -> np.ndarray:
        """Coefficients along total degree j, ordered by a = 0..j (lex)."""
        return np.array([self.coeffs[a, j - a] for a in range(j + 1)])


def _pair_terms(gen: str, a: int, b: int, L1, L2, z1, z2, q: QPhase, flipped: bool):
    """Nonzero images of v^(a) x v^(b) under D(gen) (or sigma o D when
    flipped): list of (a', b', coefficient)."""
    qi = lambda x: q_integer(x, q)
    if gen == "h1":
        return [(a, b, q.power(2 * (L1 - a)) * q.power(2 * (L2 - b)))]
    if gen == "h0":
        return [(a, b, q.power(-2 * (L1 - a)) * q.power(-2 * (L2 - b)))]
    if not flipped:
        if gen == "e1":
            # e1 x 1 + q^h1 x e1
            out = []
            if a > 0:
                out.append((a - 1, b, qi(2 * L1 - a + 1)))
            if b > 0:
                out.append((a, b - 1, q.power(2 * (L1 - a)) * qi(2 * L2 - b + 1)))
            return out
        if gen == "f1":
            # f1 x q^-h1 + 1 x f1
            return [
                (a + 1, b, qi(a + 1) * q.power(-2 * (L2 - b))),
                (a, b + 1, qi(b + 1)),
            ]
        if gen == "e0":
            # z1 (f1 x 1) + q^-h1 x z2 f1
            return [
                (a + 1, b, z1 * qi(a + 1)),
                (a, b + 1, q.power(-2 * (L1 - a)) * z2 * qi(b + 1)),
            ]
        if gen == "f0":
            # f0 x q^h1 + 1 x f0, with f0 = z^-1 e1 per leg
            out = []
            if a > 0:
                out.append((a - 1, b, qi(2 * L1 - a + 1) / z1 * q.power(2 * (L2 - b))))
            if b > 0:
                out.append((a, b - 1, qi(2 * L2 - b + 1) / z2))
            return out
    else:
        if gen == "e1":
            out = []
            if b > 0:
                out.append((a, b - 1, qi(2 * L2 - b + 1)))
            if a > 0:
                out.append((a - 1, b, q.power(2 * (L2 - b)) * qi(2 * L1 - a + 1)))
            return out
        if gen == "f1":
            return [
                (a, b + 1, qi(b + 1) * q.power(-2 * (L1 - a))),
                (a + 1, b, qi(a + 1)),
            ]
        if gen == "e0":
            return [
                (a, b + 1, z2 * qi(b + 1)),
                (a + 1, b, q.power(-2 * (L2 - b)) * z1 * qi(a + 1)),
            ]
        if gen == "f0":
            out = []
            if b > 0:
                out.append((a, b - 1, qi(2 * L2 - b + 1) / z2 * q.power(2 * (L1 - a))))
            if a > 0:
                out.append((a - 1, b, qi(2 * L1 - a + 1) / z1))
            return out
    raise ValueError(f"unknown generator {gen!r}")


def coproduct_action(
    gen: str, x: TensorVector, q: QPhase, flipped: bool = False, strict: bool = True
) -> TensorVector:
    """Apply the coproduct of one generator to a truncated tensor vector.

    Components pushed past the truncation degree raise when strict (the
    default), otherwise they are dropped and flagged on the result.
    """
    lm = x.l_max
    out = np.zeros_like(x.coeffs)
    overflow = False
    for a in range(lm + 1):
        for b in range(lm + 1 - a):
            c = x.coeffs[a, b]
            if c == 0:
                continue
            for a2, b2, w in _pair_terms(gen, a, b, x.Lambda1, x.Lambda2, x.z1, x.z2, q, flipped):
                if a2 + b2 > lm:
                    if w != 0:
                        overflow = True
                    continue
                out[a2, b2] += w * c
    if overflow and strict:
        raise ValueError(f"coproduct action of {gen} exceeds truncation degree {lm}")
    return TensorVector(out, x.Lambda1, x.Lambda2, x.z1, x.z2, overflow=overflow or x.overflow)


def _coproduct_block(gen, L1, L2, j_src, q, flipped=False, z1=1.0, z2=1.0):
    """Matrix of D(gen) (or D'(gen)) from the two-site degree-j_src block
    to its target block, in the lex bases (a ascending)."""
    shift = {"e1": -1, "f0": -1, "f1": 1, "e0": 1, "h1": 0, "h0": 0}[gen]
    j_tgt = j_src + shift
    if j_tgt < 0:
        return np.zeros((0, j_src + 1), dtype=complex)
    out = np.zeros((j_tgt + 1, j_src + 1), dtype=complex)
    for a in range(j_src + 1):
        b = j_src - a
        for a2, b2, w in _pair_terms(gen, a, b, L1, L2, z1, z2, q, flipped):
            if a2 + b2 == j_tgt:
                out[a2, a] += w
    return out


# ---------------------------------------------------------------------------
# singular vectors, projectors, R-matrix


def singular_vector(Lambda1, Lambda2, j: int, q: QPhase) -> TensorVector:
    """The weight-j vector killed by D(e1), normalized so the coefficient
    of v^(j) x v^(0) is one."""
    if j < 0:
        raise ValueError("need j >= 0")
    L1, L2 = complex(Lambda1), complex(Lambda2)
    coeffs = np.zeros((j + 1, j + 1), dtype=complex)
    if j == 0:
        coeffs[0, 0] = 1.0
        return TensorVector(coeffs, L1, L2)
    E = _coproduct_block("e1", L1, L2, j, q)  # shape (j, j+1): kernel dim 1 iff full rank
    _, s, vh = np.linalg.svd(E)
    if s.size and s[-1] < DEGENERACY_GUARD * s[0]:
        raise ValueError(f"kernel of D(e1) on block {j} is not one-dimensional")
    u = vh[-1].conj()
    if abs(u[j]) < DEGENERACY_GUARD:
        raise ValueError("singular vector has no v^(j) x v^(0) component; cannot normalize")
    u = u / u[j]
    for a in range(j + 1):
        coeffs[a, j - a] = u[a]
    return TensorVector(coeffs, L1, L2)


def _projector_family(Lambda1, Lambda2, l_max: int, q: QPhase):
    """All projectors Pi_j, j = 0..l_max, on the two-site weight-l_max
    block: columns of B are D(f1)^{l_max-j} applied to the j-th singular
    vector."""
    L1, L2 = complex(Lambda1), complex(Lambda2)
    dim = l_max + 1
    B = np.zeros((dim, dim), dtype=complex)
    for j in range(l_max + 1):
        u = singular_vector(L1, L2, j, q)
        # lift into the full truncated square to apply f1 repeatedly
        tv = TensorVector(np.zeros((l_max + 1, l_max + 1), dtype=complex), L1, L2)
        tv.coeffs[: j + 1, : j + 1] = u.coeffs
        for _ in range(l_max - j):
            tv = coproduct_action("f1", tv, q)
        B[:, j] = tv.block_vector(l_max)
    if np.linalg.cond(B) > 1 / DEGENERACY_GUARD:
        raise ValueError("projector basis is numerically singular; parameters non-generic")
    Binv = np.linalg.inv(B)
    return [np.outer(B[:, j], Binv[j, :]) for j in range(l_max + 1)]


def projector(Lambda1, Lambda2, j: int, l_max: int, q: QPhase) -> np.ndarray:
    """Pi_j on the two-site weight-l_max block."""
    if not 0 <= j <= l_max:
        raise ValueError("need 0 <= j <= l_max")
    return _projector_family(Lambda1, Lambda2, l_max, q)[j]


def _r_zero(Lambda1, Lambda2, q: QPhase, l: int) -> np.ndarray:
    """R(0) on the weight-l block: diagonal phase times the terminating
    series in X = q^{-h} e1 x q^{h} f1.  Triangular by construction."""
    L1, L2 = complex(Lambda1), complex(Lambda2)
    dim = l + 1
    X = np.zeros((dim, dim), dtype=complex)
    for a in range(1, dim):
        b = l - a
        w = q.power(-2 * (L1 - a + 1)) * q_integer(2 * L1 - a + 1, q)
        w *= q.power(2 * (L2 - b - 1)) * q_integer(b + 1, q)
        X[a - 1, a] = w
    series = np.eye(dim, dtype=complex)
    term = np.eye(dim, dtype=complex)
    one_m_q2 = 1 - q.power(2)
    for k in range(1, dim):
        denom = 1 - q.power(2 * k)
        if abs(denom) < ZERO_GUARD:
            raise ValueError(f"R(0) series denominator 1 - q^{2 * k} vanishes (root of unity)")
        term = term @ X * (q.value * one_m_q2**2 / denom)
        series = series + term
    phase = np.array(
        [q.power(2 * L1 * L2 - 2 * (L1 - a) * (L2 - (l - a))) for a in range(dim)]
    )
    return phase[:, None] * series


def r_matrix(Lambda1, Lambda2, zratio, q: QPhase, l: int) -> np.ndarray:
    """R(z) on the two-site weight-l block (z = z1/z2), normalized to fix
    v^(0) x v^(0): closed construction R(0) . sum_j scalar_j(z) Pi_j."""
    if l == 0:
        return np.array([[1.0 + 0j]])
    L1, L2 = complex(Lambda1), complex(Lambda2)
    z = complex(zratio)
    R0 = _r_zero(L1, L2, q, l)
    projs = _projector_family(L1, L2, l, q)
    out = np.zeros((l + 1, l + 1), dtype=complex)
    for j in range(l + 1):
        scal = 1.0 + 0j
        for i in range(j):
            num = 1 - q.power(-2 * (L1 + L2 - i)) * z
            den = 1 - q.power(2 * (L1 + L2 - i)) * z
            if abs(den) < DEGENERACY_GUARD:
                raise ValueError(f"R-matrix pole: 1 - q^(2(L1+L2-{i})) z vanishes")
            scal *= num / den
        out += scal * projs[j]
    return R0 @ out


def r_matrix_oracle(Lambda1, Lambda2, zratio, q: QPhase, l: int) -> np.ndarray:
    """Independent route: solve R D(x) = D'(x) R for x in {e1, f1, e0, f0}
    block by block, with R = [1] on block 0.  Unique for generic
    parameters; raises if the stacked system is rank-deficient or the
    residual is inconsistent."""
    L1, L2 = complex(Lambda1), complex(Lambda2)
    z1, z2 = complex(zratio), 1.0 + 0j
    R_prev = np.array([[1.0 + 0j]])
    for j in range(1, l + 1):
        dim = j + 1
        rows = []
        rhs = []
        for gen in ("f1", "e0"):  # raising: block j-1 -> j
            M = _coproduct_block(gen, L1, L2, j - 1, q, False, z1, z2)
            N = _coproduct_block(gen, L1, L2, j - 1, q, True, z1, z2) @ R_prev
            rows.append(np.kron(np.eye(dim), M.T))
            rhs.append(N.T.ravel(order="F"))
        for gen in ("e1", "f0"):  # lowering: block j -> j-1
            M = _coproduct_block(gen, L1, L2, j, q, False, z1, z2)
            Np = _coproduct_block(gen, L1, L2, j, q, True, z1, z2)
            rows.append(np.kron(Np, np.eye(dim)))
            rhs.append((R_prev @ M).ravel(order="C"))
        A = np.vstack(rows)
        b = np.concatenate(rhs)
        sol, _, rank, _ = np.linalg.lstsq(A, b, rcond=None)
        if rank < dim * dim:
            raise ValueError(f"intertwining system on block {j} is rank-deficient")
        resid = np.linalg.norm(A @ sol - b)
        scale = max(np.linalg.norm(b), 1.0)
        if resid > 1e-9 * scale:
            raise ValueError(f"intertwining system on block {j} is inconsistent")
        R_prev = sol.reshape(dim, dim)
    return R_prev


# ---------------------------------------------------------------------------
# the K operator and its closed determinant


def _pairwise_r(n, l, basis, index, site_a, site_b, blocks, out=None):
    """Operator on the n-site weight-l block acting as the given two-site
    R blocks on (site_a, site_b), identity elsewhere.  Sites 1-based;
    blocks[j] is the (j+1)^2 matrix with first slot = site_a."""
    d = len(basis)
    mat = np.zeros((d, d), dtype=complex)
    for col, L in enumerate(basis):
        a, b = L.entries[site_a - 1], L.entries[site_b - 1]
        Rj = blocks[a + b]
        for a2 in range(a + b + 1):
            w = Rj[a2, a]
            if w == 0:
                continue
            tgt = list(L.entries)
            tgt[site_a - 1] = a2
            tgt[site_b - 1] = a + b - a2
            mat[index[MultiIndex(tuple(tgt))], col] += w
    return mat


def k_operator(m: int, params: ModelParams, l: int, flavor: str = "rho") -> WeightBlockMatrix:
    """K_m on the n-site weight-l block: wrapped-left R factors times the
    diagonal r power times right R factors,

        R_{m,m-1}(p z_m/z_{m-1}) ... R_{m,1}(p z_m/z_1)
        . r^{2 Lambda_m - H_m}
        . R_{m,n}(z_m/z_n) ... R_{m,m+1}(z_m/z_{m+1}),

    applied right factor first.  The diagonal acts as r^{2 l_m} on v_L.
    """
    n = params.n
    if not 1 <= m <= n:
        raise ValueError(f"site {m} outside 1..{n}")
    basis = weight_basis(n, l)
    index = {L: i for i, L in enumerate(basis)}
    q = params.q_phase(flavor)
    p = params.p_shift(flavor)
    r = params.r_diag(flavor)
    d = len(basis)
    mat = np.eye(d, dtype=complex)

    def blocks_for(k, zarg):
        return [r_matrix(params.Lambda[m - 1], params.Lambda[k - 1], zarg, q, j) for j in range(l + 1)]

    for k in range(m + 1, n + 1):
        zarg = params.z(m, flavor) / params.z(k, flavor)
        mat = _pairwise_r(n, l, basis, index, m, k, blocks_for(k, zarg)) @ mat
    diag = np.array([r ** (2 * L.entries[m - 1]) for L in basis])
    mat = diag[:, None] * mat
    for k in range(1, m):
        zarg = p * params.z(m, flavor) / params.z(k, flavor)
        mat = _pairwise_r(n, l, basis, index, m, k, blocks_for(k, zarg)) @ mat
    return WeightBlockMatrix(n=n, l=l, basis=basis, matrix=mat)


def det_k_closed(m: int, params: ModelParams, l: int, flavor: str = "rho") -> complex:
    """Closed product form of det K_m on the weight-l block:

        (e^{-mu partner i})^C(n+l-1, n)
        . prod_{j=0}^{l-1} [ prod_{k<m} sh-ratio(shifted) .
                             prod_{k>m} sh-ratio ]^C(n+l-j-2, n-1)

    where the sh arguments are pi/own (b_m - b_k [- partner i]
    +- (Lambda_m + Lambda_k - j) pi i).
    """
    n = params.n
    if not 1 <= m <= n:
        raise ValueError(f"site {m} outside 1..{n}")
    own, other = params.periods(flavor)
    out = cmath.exp(-1j * params.mu * other) ** math.comb(n + l - 1, n)
    bm, Lm = params.beta[m - 1], params.Lambda[m - 1]
    for j in range(l):
        expo = math.comb(n + l - j - 2, n - 1)
        if expo == 0:
            continue
        block = 1.0 + 0j
        for k in range(1, n + 1):
            if k == m:
                continue
            bk, Lk = params.beta[k - 1], params.Lambda[k - 1]
            shift = -1j * other if k < m else 0.0
            base = bm - bk + shift
            wgt = (Lm + Lk - j) * math.pi * 1j
            den = cmath.sinh(math.pi / own * (base - wgt))
            if abs(den) < ZERO_GUARD:
                raise ValueError(f"det K sinh denominator vanishes at sites ({m},{k}), j={j}")
            block *= cmath.sinh(math.pi / own * (base + wgt)) / den
        out *= block**expo
    return out
