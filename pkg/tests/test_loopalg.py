import numpy as np
import pytest

from uniton.errors import NotUnitary, SingularAtMu
from uniton.loopalg import (LoopFamily, LoopMatrix, constant_family,
                            identity_loop, loop_adjoint_inverse, loop_eval,
                            loop_mul, nu_involution, reality_defect,
                            s1_action, standard_j, symplectic_defect,
                            uniton_factor, unitarity_defect)
from uniton.numlin import orthonormal_span

RNG = np.random.default_rng(9)


def rand_line(n, rng=RNG):
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return orthonormal_span([v])


def rand_uniton_loop(n, r, rng=RNG):
    lm = identity_loop(n)
    for _ in range(r):
        k = int(rng.integers(1, n))
        basis = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
        lm = loop_mul(lm, uniton_factor(orthonormal_span(basis)))
    return lm


class TestMul:
    def test_identity(self):
        a = rand_uniton_loop(3, 2)
        assert (loop_mul(a, identity_loop(3)) - a).norm() < 1e-14

    def test_inverse_pair(self):
        alpha = rand_line(3)
        prod = loop_mul(uniton_factor(alpha, "plus"),
                        uniton_factor(alpha, "minus"))
        assert (prod - identity_loop(3)).norm() < 1e-14

    def test_associative_random(self):
        for _ in range(5):
            a, b, c = (rand_uniton_loop(3, 2) for _ in range(3))
            lhs = loop_mul(loop_mul(a, b), c)
            rhs = loop_mul(a, loop_mul(b, c))
            assert (lhs - rhs).norm() < 1e-11


class TestAdjointInverse:
    def test_identity(self):
        inv = loop_adjoint_inverse(identity_loop(4))
        assert (inv - identity_loop(4)).norm() == 0

    def test_uniton_factor(self):
        alpha = rand_line(3)
        inv = loop_adjoint_inverse(uniton_factor(alpha, "plus"))
        expect = uniton_factor(alpha, "minus")
        assert (inv - expect).norm() < 1e-14

    def test_multiply_back(self):
        phi = rand_uniton_loop(4, 3)
        prod = loop_mul(phi, loop_adjoint_inverse(phi))
        assert (prod - identity_loop(4)).norm() < 1e-9

    def test_involution_exact(self):
        phi = rand_uniton_loop(3, 2)
        twice = loop_adjoint_inverse(loop_adjoint_inverse(phi, validate=False),
                                     validate=False)
        for k in phi.coeffs:
            assert np.array_equal(twice.coeffs[k], phi.coeffs[k])

    def test_not_unitary(self):
        bad = LoopMatrix(2, {0: np.eye(2), 1: np.eye(2)})
        with pytest.raises(NotUnitary):
            loop_adjoint_inverse(bad)


class TestEval:
    def test_identity_any_lambda(self):
        np.testing.assert_allclose(loop_eval(identity_loop(3), 0.3 + 0.1j),
                                   np.eye(3))

    def test_based_at_one(self):
        phi = rand_uniton_loop(4, 3)
        np.testing.assert_allclose(loop_eval(phi, 1.0), np.eye(4), atol=1e-12)

    def test_unit_circle_unitary(self):
        phi = rand_uniton_loop(4, 3)
        for k in range(32):
            lam = np.exp(2j * np.pi * k / 32)
            g = loop_eval(phi, lam)
            assert np.linalg.norm(g.conj().T @ g - np.eye(4)) < 1e-10

    def test_cartan_at_minus_one(self):
        alpha = rand_line(3)
        g = loop_eval(uniton_factor(alpha), -1.0)
        expect = 2 * alpha.projector() - np.eye(3)
        np.testing.assert_allclose(g, expect, atol=1e-14)


class TestUnitonFactor:
    def test_full_space_is_identity(self):
        full = orthonormal_span(np.eye(3))
        assert (uniton_factor(full) - identity_loop(3)).norm() < 1e-14

    def test_zero_space_is_lambda(self):
        zero = orthonormal_span([], ambient_dim=3)
        lm = uniton_factor(zero)
        assert set(lm.coeffs) == {1}
        np.testing.assert_allclose(lm.coeffs[1], np.eye(3))

    def test_structure_identity(self):
        alpha = rand_line(4)
        p = alpha.projector()
        q = np.eye(4) - p
        assert np.linalg.norm(p @ p + q @ q - np.eye(4) + p @ q + q @ p) < 1e-12


class TestNu:
    def test_identity_fixed(self):
        flipped, defect = nu_involution(identity_loop(3))
        assert defect == 0

    def test_factor_fixed(self):
        alpha = rand_line(3)
        _, defect = nu_involution(uniton_factor(alpha))
        # eta(-lambda) eta(-1)^{-1} = (P - lambda Q)(P - Q) = P + lambda Q
        assert defect < 1e-13

    def test_generic_not_fixed(self):
        a, b = rand_line(3), rand_line(3)
        phi = loop_mul(uniton_factor(a), uniton_factor(b))
        _, defect = nu_involution(phi)
        assert defect > 1e-3

    def test_involution_squared(self):
        phi = rand_uniton_loop(3, 2)
        once, _ = nu_involution(phi)
        twice, _ = nu_involution(once)
        assert (twice - phi).norm() < 1e-10


class TestRealityAndSymplectic:
    def test_identity_degree_zero(self):
        assert reality_defect(identity_loop(3), 0) == 0

    def test_isotropic_line_real(self):
        v = np.array([1.0, 1j]) / np.sqrt(2)
        alpha = orthonormal_span([v])
        assert reality_defect(uniton_factor(alpha), 1) < 1e-14

    def test_non_isotropic_line_not_real(self):
        alpha = orthonormal_span([np.array([1.0, 0.0])])
        assert reality_defect(uniton_factor(alpha), 1) > 0.5

    def test_symplectic_identity(self):
        assert symplectic_defect(identity_loop(4), 0) == 0

    def test_lagrangian_factor(self):
        # J-eigenspace span{e1 + i e2, e3 + i e4} satisfies J0 conj = itself^perp
        basis = np.array([[1, 0], [1j, 0], [0, 1], [0, 1j]]) / np.sqrt(2)
        alpha = orthonormal_span(basis)
        assert symplectic_defect(uniton_factor(alpha), 1) < 1e-14

    def test_generic_not_symplectic(self):
        alpha = orthonormal_span([np.array([1.0, 0, 0, 0])])
        assert symplectic_defect(uniton_factor(alpha), 1) > 0.1

    def test_j_squares_to_minus_one(self):
        j = standard_j(6)
        np.testing.assert_allclose(j @ j, -np.eye(6))


class TestCircleAction:
    def test_mu_one_is_identity(self):
        fam = constant_family(rand_uniton_loop(3, 2))
        acted = s1_action(fam, 1.0)
        assert (acted(0.3) - fam(0.3)).norm() < 1e-14

    def test_unitary_preserved(self):
        fam = constant_family(rand_uniton_loop(3, 2))
        acted = s1_action(fam, np.exp(0.7j))
        assert unitarity_defect(acted(0.1)) < 1e-12

    def test_zero_mu(self):
        fam = constant_family(identity_loop(2))
        with pytest.raises(SingularAtMu):
            s1_action(fam, 0.0)


class TestInvariantFamilies:
    def test_invariant_chain_fixed_by_action(self):
        from uniton.corpus import builtin_examples
        from uniton.factorize import FiltrationSpec, extract_unitons_generic
        w = builtin_examples()["mixed_pair"].model()
        chain = extract_unitons_generic(w, FiltrationSpec.segal(2))
        fam = chain.family()
        acted = s1_action(fam, np.exp(1.3j))
        for z in (0.7 + 0.2j, -0.4 + 0.9j):
            assert (acted(z) - fam(z)).norm() < 1e-9
