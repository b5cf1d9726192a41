import cmath
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from qkz.quantum_algebra import (
    ModelParams,
    MultiIndex,
    QPhase,
    TensorVector,
    WeightBlockMatrix,
    compositions,
    compositions_count,
    coproduct_action,
    det_k_closed,
    k_operator,
    phase_is_generic,
    projector,
    q_factorial,
    q_integer,
    r_matrix,
    r_matrix_oracle,
    singular_vector,
    verma_action,
    weight_basis,
    _coproduct_block,
    _r_zero,
)

Q51 = QPhase.from_period(5.1)

GENERIC = ModelParams(
    rho=5.37, lam=4.81, mu=0.77, Lambda=(-0.31, -0.47, -0.23), beta=(0.0, 0.4, -0.27)
)


def _sub(params, n):
    return ModelParams(
        rho=params.rho,
        lam=params.lam,
        mu=params.mu,
        Lambda=params.Lambda[:n],
        beta=params.beta[:n],
    )


# ---------------------------------------------------------------------------
# phases, q-integers


def test_qphase_rejects_q_equal_plus_minus_one():
    with pytest.raises(ValueError):
        QPhase(0.0)
    with pytest.raises(ValueError):
        QPhase(math.pi)
    with pytest.raises(ValueError):
        QPhase(-2 * math.pi)


def test_qphase_accepts_acceptance_defaults():
    # theta/pi = -1/2: a low-order root of unity, but the default
    # parameter set lives there and only [2]-type brackets degenerate
    q = QPhase.from_period(2 * math.pi)
    assert_allclose(q.value, -1j, atol=1e-14)
    assert not phase_is_generic(q)
    assert phase_is_generic(QPhase.from_period(5.1))


def test_q_integer_examples():
    assert_allclose(q_integer(1, Q51), 1.0)
    assert_allclose(q_integer(0, Q51), 0.0, atol=1e-15)
    q3 = QPhase.from_period(3.0)
    assert_allclose(q_integer(2, q3), 2 * math.cos(math.pi**2 / 3), rtol=1e-12)
    assert abs(q_integer(2, q3) + 1.97805) < 1e-4


def test_q_integer_phase_arithmetic_not_principal_branch():
    # q^a via exp(i theta a) for non-integer a
    a = 2 * (-0.31)
    want = (cmath.exp(1j * Q51.theta * a) - cmath.exp(-1j * Q51.theta * a)) / (
        cmath.exp(1j * Q51.theta) - cmath.exp(-1j * Q51.theta)
    )
    assert_allclose(q_integer(a, Q51), want, rtol=1e-14)


def test_q_factorial_detects_low_order_root_of_unity():
    assert_allclose(q_factorial(0, Q51), 1.0)
    assert_allclose(q_factorial(3, Q51), q_integer(1, Q51) * q_integer(2, Q51) * q_integer(3, Q51))
    q = QPhase.from_period(2 * math.pi)  # q = -i, [2]_q = 0
    with pytest.raises(ValueError):
        q_factorial(2, q)


# ---------------------------------------------------------------------------
# verma and coproduct actions


def test_verma_action_examples():
    idx, c = verma_action("f1", 0, -0.31, 1.0, Q51)
    assert idx == 1 and abs(c - 1.0) < 1e-14
    idx, c = verma_action("e1", 0, -0.31, 1.0, Q51)
    assert c == 0j
    idx, c = verma_action("e0", 3, -0.31, 2.0, Q51)
    assert idx == 4
    assert_allclose(c, 2.0 * q_integer(4, Q51), rtol=1e-14)
    idx, c = verma_action("h1", 2, -0.31, 1.0, Q51)
    assert idx == 2
    assert_allclose(c, Q51.power(2 * (-0.31 - 2)), rtol=1e-14)
    idx, c = verma_action("h0", 2, -0.31, 1.0, Q51)
    assert_allclose(c, Q51.power(-2 * (-0.31 - 2)), rtol=1e-14)
    # f0 = z^{-1} e1
    idx, c = verma_action("f0", 2, -0.31, 2.0, Q51)
    assert idx == 1
    assert_allclose(c, q_integer(2 * (-0.31) - 1, Q51) / 2.0, rtol=1e-14)


def test_verma_action_rejects_negative_index():
    with pytest.raises(ValueError):
        verma_action("f1", -1, -0.31, 1.0, Q51)
    with pytest.raises(ValueError):
        verma_action("g2", 0, -0.31, 1.0, Q51)


def _basis_vector(a, b, l_max, L1, L2, z1=1.0, z2=1.0):
    c = np.zeros((l_max + 1, l_max + 1), dtype=complex)
    c[a, b] = 1.0
    return TensorVector(c, L1, L2, z1, z2)


def test_coproduct_examples():
    L1, L2 = -0.31, -0.47
    # grouplike h1 on v^(j) x v^(k)
    out = coproduct_action("h1", _basis_vector(1, 2, 4, L1, L2), Q51)
    assert_allclose(out.coeffs[1, 2], Q51.power(2 * (L1 - 1)) * Q51.power(2 * (L2 - 2)), rtol=1e-14)
    # e1 kills the highest weight vector
    out = coproduct_action("e1", _basis_vector(0, 0, 2, L1, L2), Q51)
    assert np.all(out.coeffs == 0)
    # f1 on v00: q^{-2 L2} v10 + v01
    out = coproduct_action("f1", _basis_vector(0, 0, 2, L1, L2), Q51)
    assert_allclose(out.coeffs[1, 0], Q51.power(-2 * L2), rtol=1e-14)
    assert_allclose(out.coeffs[0, 1], 1.0, rtol=1e-14)


def test_coproduct_overflow_reported():
    L1, L2 = -0.31, -0.47
    top = _basis_vector(1, 0, 1, L1, L2)
    with pytest.raises(ValueError):
        coproduct_action("f1", top, Q51)
    out = coproduct_action("f1", top, Q51, strict=False)
    assert out.overflow
    assert_allclose(out.coeffs[1, 1] if False else out.coeffs[0, 0], 0.0, atol=1e-15)


def test_flipped_coproduct_is_swap_conjugate():
    # sigma o D(x) computed directly must equal P . D(x) . P with equal weights
    L = -0.42
    rng = np.random.default_rng(3)
    for gen in ("e1", "f1", "e0", "f0", "h1", "h0"):
        vec = np.zeros((3, 3), dtype=complex)
        for a in range(3):
            for b in range(3 - a):
                vec[a, b] = rng.normal() + 1j * rng.normal()
        x = TensorVector(vec, L, L, 1.3, 0.8)
        swapped = TensorVector(vec.T.copy(), L, L, 0.8, 1.3)
        lhs = coproduct_action(gen, x, Q51, flipped=True, strict=False).coeffs
        rhs = coproduct_action(gen, swapped, Q51, strict=False).coeffs.T
        assert_allclose(lhs, rhs, atol=1e-12)


# ---------------------------------------------------------------------------
# singular vectors, projectors, R-matrices


def test_singular_vector_examples():
    u0 = singular_vector(-0.31, -0.47, 0, Q51)
    assert_allclose(u0.coeffs[0, 0], 1.0)
    u1 = singular_vector(-0.31, -0.47, 1, Q51)
    assert_allclose(u1.coeffs[1, 0], 1.0)
    c = -q_integer(2 * -0.31, Q51) / (Q51.power(2 * -0.31) * q_integer(2 * -0.47, Q51))
    assert_allclose(u1.coeffs[0, 1], c, rtol=1e-12)


def test_singular_vector_killed_by_e1():
    rng = np.random.default_rng(11)
    for _ in range(5):
        q = QPhase.from_period(rng.uniform(2.1, 9.0))
        L1, L2 = -rng.uniform(0.1, 0.9), -rng.uniform(0.1, 0.9)
        for j in (1, 2, 3):
            u = singular_vector(L1, L2, j, q)
            E = _coproduct_block("e1", L1, L2, j, q)
            assert np.linalg.norm(E @ u.block_vector(j)) < 1e-12


def test_projector_algebra():
    L1, L2 = -0.31, -0.47
    fam = [projector(L1, L2, j, 2, Q51) for j in range(3)]
    assert_allclose(sum(fam), np.eye(3), atol=1e-10)
    for j, P in enumerate(fam):
        assert np.linalg.norm(P @ P - P) < 1e-10
        for k, Pk in enumerate(fam):
            if k != j:
                assert np.linalg.norm(P @ Pk) < 1e-10
    assert_allclose(projector(L1, L2, 0, 0, Q51), [[1.0]])


def test_r_matrix_block0_and_triangularity():
    assert_allclose(r_matrix(-0.31, -0.47, 0.7 + 0.2j, Q51, 0), [[1.0]])
    R0 = _r_zero(-0.31, -0.47, Q51, 2)
    assert np.linalg.norm(np.tril(R0, -1)) == 0.0


def test_r_matrix_oracle_equivalence_20_draws():
    # acceptance criterion: 20 random generic draws, blocks l <= 2, 1e-10
    rng = np.random.default_rng(20240817)
    for _ in range(20):
        q = QPhase.from_period(rng.uniform(2.1, 9.0))
        L1, L2 = -rng.uniform(0.1, 0.95), -rng.uniform(0.1, 0.95)
        z = rng.uniform(0.3, 2.0) * np.exp(1j * rng.uniform(0, 2 * math.pi))
        for l in (1, 2):
            A = r_matrix(L1, L2, z, q, l)
            B = r_matrix_oracle(L1, L2, z, q, l)
            assert np.linalg.norm(A - B) / np.linalg.norm(B) < 1e-10


def test_r_matrix_intertwines_all_generators():
    L1, L2 = -0.31, -0.47
    z = 1.4 * np.exp(0.9j)
    for l in (1, 2):
        R = {j: r_matrix(L1, L2, z, Q51, j) for j in range(l + 1)}
        for gen in ("e1", "f1", "e0", "f0"):
            shift = {"e1": -1, "f0": -1, "f1": 1, "e0": 1}[gen]
            src, tgt = (l, l + shift) if shift < 0 else (l - 1, l)
            if tgt > l:
                continue
            M = _coproduct_block(gen, L1, L2, src, Q51, False, z, 1.0)
            Mp = _coproduct_block(gen, L1, L2, src, Q51, True, z, 1.0)
            lhs = R[tgt] @ M if shift > 0 else R[tgt] @ M
            rhs = Mp @ R[src]
            assert np.linalg.norm(lhs - rhs) < 1e-10


def test_r_matrix_pole_guard():
    L1, L2 = -0.31, -0.47
    z_pole = 1 / Q51.power(2 * (L1 + L2))  # kills 1 - q^{2(L1+L2)} z at j factor i=0
    with pytest.raises(ValueError):
        r_matrix(L1, L2, z_pole, Q51, 1)


def test_r_series_root_of_unity_guard():
    q = QPhase.from_period(2 * math.pi)  # q^4 = 1: block-2 series denominator dies
    with pytest.raises(ValueError):
        _r_zero(-0.31, -0.47, q, 2)


# ---------------------------------------------------------------------------
# K operator and its closed determinant


def test_k_operator_trivial_cases():
    p2 = _sub(GENERIC, 2)
    K0 = k_operator(1, p2, 0)
    assert_allclose(K0.matrix, [[1.0]])
    p1 = _sub(GENERIC, 1)
    for l in (0, 1, 2):
        K = k_operator(1, p1, l)
        assert K.matrix.shape == (1, 1)
        assert_allclose(K.matrix[0, 0], cmath.exp(-1j * p1.mu * p1.lam * l), rtol=1e-13)


def test_det_k_closed_trivial_cases():
    p3 = GENERIC
    for m in (1, 2, 3):
        assert det_k_closed(m, p3, 0) == 1.0
    p1 = _sub(GENERIC, 1)
    assert_allclose(det_k_closed(1, p1, 2), cmath.exp(-2j * p1.mu * p1.lam), rtol=1e-14)


def test_det_k_matches_closed_form():
    # acceptance criterion: n <= 3, l <= 2, every site, 1e-8 (both flavors)
    for n in (2, 3):
        params = _sub(GENERIC, n)
        for flavor in ("rho", "lambda"):
            for l in (1, 2):
                for m in range(1, n + 1):
                    num = k_operator(m, params, l, flavor).det()
                    clo = det_k_closed(m, params, l, flavor)
                    assert abs(num / clo - 1) < 1e-8, (n, l, m, flavor)


def test_det_k_commuting_shift_consistency():
    # shifting beta_1 then beta_2 must agree with the other order
    params = _sub(GENERIC, 2)
    for flavor, step in (("rho", params.lam), ("lambda", params.rho)):
        b1, b2 = params.beta
        path_a = det_k_closed(1, params, 2, flavor) * det_k_closed(
            2, params.with_beta((b1 - 1j * step, b2)), 2, flavor
        )
        path_b = det_k_closed(2, params, 2, flavor) * det_k_closed(
            1, params.with_beta((b1, b2 - 1j * step)), 2, flavor
        )
        assert abs(path_a / path_b - 1) < 1e-10


def test_k_operator_rejects_bad_site():
    with pytest.raises(ValueError):
        k_operator(0, GENERIC, 1)
    with pytest.raises(ValueError):
        k_operator(4, GENERIC, 1)
    with pytest.raises(ValueError):
        det_k_closed(0, GENERIC, 1)


# ---------------------------------------------------------------------------
# multi-index combinatorics


def test_compositions_lex_order_and_count():
    cs = compositions(2, 3)
    assert cs == [(0, 0, 2), (0, 1, 1), (0, 2, 0), (1, 0, 1), (1, 1, 0), (2, 0, 0)]
    for l in range(5):
        for n in range(5):
            assert len(compositions(l, n)) == compositions_count(l, n)
    assert compositions_count(0, 0) == 1
    assert compositions_count(3, 0) == 0


def test_enumeration_identity_exhaustive():
    # sum over Z_l^n of l_{m1}...l_{mk} = C(n+l-1, n+k-1), every subset
    from itertools import combinations

    for n in range(1, 5):
        for l in range(5):
            Z = compositions(l, n)
            for k in range(0, n + 1):
                for subset in combinations(range(n), k):
                    total = 0
                    for L in Z:
                        prod = 1
                        for m in subset:
                            prod *= L[m]
                        total += prod
                    assert total == math.comb(n + l - 1, n + k - 1), (n, l, subset)


def test_multi_index_structure():
    L = MultiIndex((2, 0, 1))
    assert L.total == 3 and L.n == 3
    assert L.sites() == (1, 1, 3)
    assert L.blocks() == ((1, 2), (), (3,))
    with pytest.raises(ValueError):
        MultiIndex((1, -1))


def test_multi_index_partial_order():
    a = MultiIndex((2, 0))
    b = MultiIndex((1, 1))
    c = MultiIndex((0, 2))
    # suffix sums: (2,0) has the smallest tails
    assert b.preceded_by(c) is False
    assert c.preceded_by(b)
    assert b.preceded_by(a)
    assert a.preceded_by(a)
    assert not a.preceded_by(MultiIndex((1, 0)))  # different totals never compare


def test_weight_basis_matches_dimension():
    for n in (1, 2, 3):
        for l in (0, 1, 2, 3):
            basis = weight_basis(n, l)
            assert len(basis) == math.comb(n + l - 1, n - 1)
            assert list(basis) == sorted(basis, key=lambda L: L.entries)


def test_model_params_validation():
    with pytest.raises(ValueError):
        ModelParams(rho=-1, lam=1, mu=1, Lambda=(-0.3,), beta=(0.0,))
    with pytest.raises(ValueError):
        ModelParams(rho=1, lam=1, mu=1, Lambda=(0.3,), beta=(0.0,))
    with pytest.raises(ValueError):
        ModelParams(rho=1, lam=1, mu=1, Lambda=(-0.3, -0.4), beta=(0.0,))
    with pytest.raises(ValueError):
        ModelParams(rho=1, lam=1, mu=1, Lambda=(), beta=())
    p = ModelParams(rho=2.0, lam=3.0, mu=0.5, Lambda=(-0.3,), beta=(0.1,))
    assert p.n == 1
    assert_allclose(p.z(1), math.exp(2 * math.pi * 0.1 / 2.0))
    assert_allclose(p.p_shift("rho"), cmath.exp(-2j * math.pi * 3.0 / 2.0))
    assert_allclose(p.r_diag("lambda"), cmath.exp(-1j * 0.5 * 2.0 / 2))
    with pytest.raises(ValueError):
        p.periods("sigma")


def test_weight_block_matrix_det():
    wb = WeightBlockMatrix(n=2, l=1, basis=weight_basis(2, 1), matrix=np.diag([2.0, 3.0]))
    assert_allclose(wb.det(), 6.0)
