from itertools import combinations

import numpy as np
import pytest

from uniton.corpus import builtin_examples, iwasawa_example_family
from uniton.errors import NotReal, SingularPoint
from uniton.factorize import (FiltrationSpec, NormalizationRecord,
                              alternating_real_factorization,
                              apply_constant_inverse, binomial_transform,
                              covering_residual, extract_unitons_generic,
                              gauss_chain_length, gauss_unitons_explicit,
                              inverse_binomial_transform, iwasawa, loop_fiber,
                              mixed_unitons_explicit, normalize,
                              reconstruct_and_verify, segal_unitons_H,
                              segal_unitons_explicit, uhlenbeck_unitons_H,
                              uhlenbeck_unitons_explicit, loop_columns_model)
from uniton.exactfun import LaurentSection, mv, section
from uniton.grassmodel import WModel, generate_W, sample_grid, symmetry_tests
from uniton.loopalg import (LoopFamily, LoopMatrix, identity_loop, loop_eval,
                            loop_mul, uniton_factor)
from uniton.numlin import orthonormal_span, subspace_distance

Z0 = 0.7 + 0.2j
Z1 = -0.45 + 0.9j
EXAMPLES = builtin_examples()
MODEL_NAMES = [n for n in EXAMPLES if n != "iwasawa_line"]
STRATEGIES = ("segal", "uhlenbeck", "alternating-u-first",
              "alternating-s-first")


def model(name):
    return EXAMPLES[name].model()


class TestSpec:
    def test_parse_names(self):
        assert FiltrationSpec.parse("segal", 3).steps == ("S", "S", "S")
        assert FiltrationSpec.parse("alternating-u-first", 3).steps == \
            ("U", "S", "U")
        assert FiltrationSpec.parse("schedule:usu", 3).steps == ("U", "S", "U")
        with pytest.raises(ValueError):
            FiltrationSpec.parse("nope", 2)

    def test_u_counts(self):
        spec = FiltrationSpec.alternating_u_first(3)
        assert [spec.u_count(i) for i in (1, 2, 3)] == [1, 1, 0]

    def test_roundtrip_names(self):
        for name in STRATEGIES:
            spec = FiltrationSpec.parse(name, 4)
            assert FiltrationSpec.parse(spec.name, 4) == spec


class TestGenericExtraction:
    def test_trivial_line(self):
        w = generate_W([section(mv(1, 0))], 1)
        chain = extract_unitons_generic(w, FiltrationSpec.segal(1))
        alpha = chain.uniton_at(Z0, 1)
        assert subspace_distance(
            alpha, orthonormal_span([np.array([1.0, 0])])) < 1e-14

    def test_segal_nested(self):
        chain = extract_unitons_generic(model("mixed_pair"),
                                        FiltrationSpec.segal(2))
        pc = chain.point(Z0)
        assert [a.rank for a in pc.alphas] == [1, 2]
        from uniton.numlin import contains
        ok, _ = contains(pc.alphas[1], pc.alphas[0])
        assert ok

    @pytest.mark.parametrize("name", MODEL_NAMES)
    @pytest.mark.parametrize("strategy", STRATEGIES)
    def test_reconstruction(self, name, strategy):
        w = model(name)
        chain = extract_unitons_generic(w, FiltrationSpec.parse(strategy, w.r))
        got = loop_fiber(chain.loop_at(Z0), chain.window)
        assert subspace_distance(got, w.fiber_space(Z0, chain.window)) < 1e-10

    def test_based_loops(self):
        chain = extract_unitons_generic(model("dai_terng_r3"),
                                        FiltrationSpec.uhlenbeck(3))
        np.testing.assert_allclose(loop_eval(chain.loop_at(Z0), 1.0),
                                   np.eye(5), atol=1e-12)

    def test_covering_criteria(self):
        seg = extract_unitons_generic(model("dai_terng_r3"),
                                      FiltrationSpec.segal(3))
        assert covering_residual(seg, Z0, "segal") < 1e-7
        uhl = extract_unitons_generic(model("dai_terng_r3"),
                                      FiltrationSpec.uhlenbeck(3))
        assert covering_residual(uhl, Z0, "uhlenbeck") < 1e-7

    def test_s_coefficients_are_perp_products(self):
        chain = extract_unitons_generic(model("dai_terng_r3"),
                                        FiltrationSpec.segal(3))
        pc = chain.point(Z0)
        n = chain.n
        projs = [a.projector() for a in pc.alphas]
        perps = [np.eye(n) - p for p in projs]
        for i in (1, 2, 3):
            for s in range(i + 1):
                acc = np.zeros((n, n), dtype=complex)
                for perp_set in combinations(range(i), s):
                    term = np.eye(n)
                    for j in range(i - 1, -1, -1):  # product Pi_i ... Pi_1
                        term = term @ (perps[j] if j in perp_set else projs[j])
                    acc += term
                s_mat = pc.ts[i][s].conj().T
                assert np.linalg.norm(acc - s_mat) < 1e-9, (i, s)

    def test_kernel_image_criteria(self):
        w = model("dai_terng_r3")
        uhl = extract_unitons_generic(w, FiltrationSpec.uhlenbeck(3)).point(Z0)
        seg = extract_unitons_generic(w, FiltrationSpec.segal(3)).point(Z0)
        for i in (1, 2, 3):
            s0 = uhl.ts[i][0].conj().T
            img = orthonormal_span(s0, ambient_dim=w.n)
            assert subspace_distance(img, uhl.alphas[i - 1]) < 1e-10
            ti = seg.ts[i][i]
            _, sv, vh = np.linalg.svd(ti)
            ker = orthonormal_span(vh[sv < 1e-9 * sv[0]].conj().T,
                                   ambient_dim=w.n)
            assert subspace_distance(ker, seg.alphas[i - 1]) < 1e-10


class TestExplicitFormulae:
    @pytest.mark.parametrize("name", [n for n in MODEL_NAMES
                                      if EXAMPLES[n].sections()[0] == "osculating"
                                      or True])
    @pytest.mark.parametrize("strategy", STRATEGIES)
    def test_mixed_matches_generic(self, name, strategy):
        w = model(name)
        spec = FiltrationSpec.parse(strategy, w.r)
        gen = extract_unitons_generic(w, spec)
        exp = mixed_unitons_explicit(w, spec)
        for z in (Z0, Z1):
            for i in range(1, w.r + 1):
                d = subspace_distance(gen.uniton_at(z, i), exp.uniton_at(z, i))
                assert d < 1e-7, (name, strategy, i)

    def test_segal_first_unitons_shape(self):
        w = model("dai_terng_r3")
        chain = segal_unitons_explicit(w)
        l0 = mv([1], [0, 1], [0, 0, 1], [0, 0, 0, 1], [0, 0, 0, 0, 1])
        b1 = orthonormal_span([l0(Z0)])
        assert subspace_distance(chain.uniton_at(Z0, 1), b1) < 1e-12

    def test_segal_second_uniton_formula(self):
        # span{pi L0 + perp L1, perp L0'} against the engine
        w = model("dai_terng_r3")
        chain = segal_unitons_explicit(w)
        pc = chain.point(Z0)
        p = pc.alphas[0].projector()
        q = np.eye(5) - p
        l0 = mv([1], [0, 1], [0, 0, 1], [0, 0, 0, 1], [0, 0, 0, 0, 1])
        l1 = mv(0, 0, 0, 1, 0)
        v1 = p @ l0(Z0) + q @ l1(Z0)
        v2 = q @ l0.derivative()(Z0)
        assert subspace_distance(orthonormal_span([v1, v2]),
                                 pc.alphas[1]) < 1e-10

    def test_h_forms_cross_check(self):
        gens = [section(mv([1], [0, 1], [0, 0, 1]))]
        chain_l, chain_c = segal_unitons_H(gens, 2)
        for i in (1, 2):
            assert subspace_distance(chain_l.uniton_at(Z0, i),
                                     chain_c.uniton_at(Z0, i)) < 1e-7

    def test_binomial_transform_identities(self):
        h = section(mv(1, 0, 0), mv(0, 1, 0))
        l = binomial_transform(h, 3)
        # L_1 = H_0 + H_1
        np.testing.assert_allclose(l.terms[1](Z0), [1, 1, 0])
        back = inverse_binomial_transform(l, 3)
        assert back.terms.keys() == h.terms.keys()
        for k in h.terms:
            assert back.terms[k] == h.terms[k]

    def test_uhlenbeck_forms(self):
        w = model("dai_terng_r3")
        gen = extract_unitons_generic(w, FiltrationSpec.uhlenbeck(3))
        for chain in (uhlenbeck_unitons_explicit(w), uhlenbeck_unitons_H(w)):
            for i in (1, 2, 3):
                assert subspace_distance(gen.uniton_at(Z0, i),
                                         chain.uniton_at(Z0, i)) < 1e-7

    def test_gauss_matches_generic(self):
        for name in ("mixed_pair", "line_cp1", "sp2_nonGrassmannian"):
            w = model(name)
            length = gauss_chain_length(w)
            gen = extract_unitons_generic(w, FiltrationSpec.gauss(length))
            exp = gauss_unitons_explicit(w, length)
            for i in range(1, length + 1):
                assert subspace_distance(gen.uniton_at(Z0, i),
                                         exp.uniton_at(Z0, i)) < 1e-7


class TestReportsAndDuality:
    def test_basic_antibasic_labels(self):
        pts = [Z0, Z1]
        w = model("mixed_pair")
        seg = reconstruct_and_verify(
            extract_unitons_generic(w, FiltrationSpec.segal(2)), pts)
        assert seg["labels"][2] == ["antibasic"]
        uhl = reconstruct_and_verify(
            extract_unitons_generic(w, FiltrationSpec.uhlenbeck(2)), pts)
        assert uhl["labels"][2] == ["basic"]
        assert seg["recon_max"] < 1e-10
        assert seg["closure_max"] < 1e-6

    def test_chain_duality(self):
        from uniton.grassmodel import involution_dual
        w = model("mixed_pair")
        dual = WModel(w.n, w.r,
                      lambda z: involution_dual(w.fiber(z).space, w.n, w.r))
        seg = extract_unitons_generic(w, FiltrationSpec.segal(2)).point(Z0)
        uhl = extract_unitons_generic(dual, FiltrationSpec.uhlenbeck(2)).point(Z0)
        for i in range(2):
            conj_perp = orthonormal_span(
                np.eye(3) - seg.alphas[i].conj().projector(), ambient_dim=3)
            assert subspace_distance(uhl.alphas[i], conj_perp) < 1e-9


class TestNormalize:
    def _padded(self, base, eta):
        n, r = base.n, base.r

        def fiber_fn(z):
            src = base.fiber_space(z, r + (eta.hi))
            window = r + eta.hi
            cols = []
            for c in range(src.rank):
                vec = src.basis[:, c]
                out = np.zeros(window * n, dtype=complex)
                for g in range(window):
                    blk = vec[g * n:(g + 1) * n]
                    for k, mat in eta.coeffs.items():
                        if g + k < window:
                            out[(g + k) * n:(g + k + 1) * n] += mat @ blk
                cols.append(out)
            return orthonormal_span(cols, ambient_dim=window * n)
        return WModel(n, r + eta.hi, fiber_fn, name="padded")

    def test_unitary_unpad(self):
        base = model("mixed_pair")
        v = orthonormal_span([np.array([1.0, -1.0, 0.5])])
        padded = self._padded(base, uniton_factor(v))
        out, rec = normalize(padded, "unitary")
        assert out.r == base.r
        assert len(rec.multipliers) == 1
        assert subspace_distance(out.fiber(Z0).space,
                                 base.fiber(Z0).space) < 1e-9

    def test_unitary_bound(self):
        for name in MODEL_NAMES:
            w = model(name)
            out, _ = normalize(w, "unitary")
            assert out.r <= w.n - 1

    def test_grassmannian_flavor(self):
        base = model("mixed_pair")
        v = orthonormal_span([np.array([0.2, 1.0, -0.3])])
        p = v.projector()
        eta = LoopMatrix(3, {0: p, 2: np.eye(3) - p})
        padded = self._padded(base, eta)
        out, rec = normalize(padded, "grassmannian")
        assert out.r == base.r
        assert all(m.hi == 2 and set(m.coeffs) <= {0, 2}
                   for m in rec.multipliers)
        st = symmetry_tests(out, Z0)
        assert st["nu"] < 1e-8

    def test_real_flavor_constant_middle(self):
        w = model("real_n4_r3_const_mid")
        out, rec = normalize(w, "real")
        assert out.r == w.n - 2
        assert symmetry_tests(out, Z0)["real_perp_distance"] < 1e-8
        assert rec.removed_indices[0][1] == "constant isotropic middle"

    def test_real_pad_can_be_normalized_already(self):
        # an isotropic-line pad fills every graded slot: the result is a
        # genuinely normalized degree-4 real model, and the real flavor
        # correctly leaves it alone (degree n-1 is the sharp bound)
        base = model("real_n5_r2")
        delta = orthonormal_span([np.array([1.0, 1j, 0, 0, 0]) / np.sqrt(2)])
        p = delta.projector()
        pbar = delta.conj().projector()
        eta = LoopMatrix(5, {0: p, 1: np.eye(5) - p - pbar, 2: pbar})
        padded = self._padded(base, eta)
        assert symmetry_tests(padded, Z0)["real_perp_distance"] < 1e-9
        from uniton.grassmodel import A_ranks
        assert all(a >= 1 for a in A_ranks(padded, Z0))
        out, _ = normalize(padded, "real")
        assert out.r == padded.r  # nothing reducible
        assert out.r <= padded.n - 1

    def test_real_flavor_isotropic_pad_reduces(self):
        base, _ = normalize(model("real_n4_r3_const_mid"), "real")
        y = orthonormal_span([np.array([1, 1j, 0, 0]) / np.sqrt(2),
                              np.array([0, 0, 1, 1j]) / np.sqrt(2)])
        eta = LoopMatrix(4, {0: y.projector(), 2: y.conj().projector()})
        padded = self._padded(base, eta)
        out, rec = normalize(padded, "real")
        assert out.r == base.r
        assert symmetry_tests(out, Z0)["real_perp_distance"] < 1e-8

    def test_real_flavor_interior_hull(self):
        # constant flag with the vanishing block off center: delta_3 = delta_4
        from uniton.exactfun import mv, perp_c
        from uniton.grassmodel import graded_W
        x1 = mv(1, "i", 0, 0)
        perp = perp_c([x1])
        w = graded_W([[x1], [x1], perp, perp], 4)
        from uniton.grassmodel import A_ranks
        assert A_ranks(w, Z0) == [1, 0, 2, 0, 1]
        out, rec = normalize(w, "real")
        assert out.r == 2
        assert rec.removed_indices == [(3, "interior vanishing block")]
        assert symmetry_tests(out, Z0)["real_perp_distance"] < 1e-8


class TestIwasawa:
    def test_exact_family(self):
        res = iwasawa(iwasawa_example_family())
        assert res.report["neg_mass"] < 1e-12
        assert res.report["unitarity"] < 1e-12
        assert res.report["product_residual"] < 1e-12
        assert res.report["phi_u_degree"] <= res.report["psi_degree"]

    def test_unitary_input_gives_trivial_plus(self):
        chain = extract_unitons_generic(model("mixed_pair"),
                                        FiltrationSpec.segal(2))
        res = iwasawa(chain.family())
        z = Z0
        plus = res.phi_plus(z)
        assert (plus - identity_loop(3)).norm() < 1e-9

    def test_chain_times_plus_loop(self):
        rng = np.random.default_rng(12)
        chain = extract_unitons_generic(model("sp2_r2"),
                                        FiltrationSpec.uhlenbeck(2))
        n1 = 0.3 * (rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)))
        c = LoopMatrix(4, {0: np.eye(4), 1: n1})
        psi = LoopFamily(4, 0, 3, lambda z: loop_mul(chain.loop_at(z), c))
        res = iwasawa(psi)
        assert res.report["neg_mass"] < 1e-8
        assert res.report["unitarity"] < 1e-9
        assert res.report["product_residual"] < 1e-8
        assert res.report["phi_u_degree"] <= 2

    def test_loop_columns_model_matches(self):
        w = loop_columns_model(iwasawa_example_family())
        base = model("line_cp1")
        assert subspace_distance(w.fiber(Z0).space,
                                 base.fiber(Z0).space) < 1e-12


class TestAlternatingReal:
    def test_requires_symmetry(self):
        with pytest.raises(NotReal):
            alternating_real_factorization(model("mixed_pair"), "real", [Z0])

    @pytest.mark.parametrize("name,form", [
        ("real_n5_r2", "real"),
        ("real_n6_r3", "real"),
        ("real_n6_r4_isotropic", "real"),
        ("real_n4_r3_const_mid", "real"),
        ("sp2_r2", "symplectic"),
        ("sp2_nonGrassmannian", "symplectic"),
    ])
    def test_certificates(self, name, form):
        chain, cert = alternating_real_factorization(model(name), form,
                                                     [Z0, Z1])
        assert cert["quad_factor"] < 1e-9
        assert cert["even_partial"] < 1e-9
        assert cert["isotropy"] < 1e-9
        assert cert["first_maximal"] < 1e-7

    def test_odd_degree_first_uniton_rank(self):
        chain, _ = alternating_real_factorization(model("real_n6_r3"), "real",
                                                  [Z0])
        first = chain.uniton_at(Z0, 1)
        assert first.rank == 3  # maximal isotropic in C^6


class TestIwasawaTriviality:
    def test_constant_plus_input_gives_identity_unitary_part(self):
        # the factorization is trivial on the plus subgroup: a constant
        # invertible plus-loop splits as identity times itself
        rng = np.random.default_rng(21)
        n1 = 0.3 * (rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)))
        c = LoopMatrix(3, {0: np.eye(3) + 0.1 * rng.standard_normal((3, 3)),
                           1: n1})
        psi = LoopFamily(3, 0, 2, lambda z: c)
        res = iwasawa(psi)
        z0 = 0.4 + 0.3j
        assert (res.chain.loop_at(z0) - identity_loop(3)).norm() < 1e-9
        assert (res.phi_plus(z0) - c).norm() < 1e-9

    def test_plus_factor_invertible_at_zero(self):
        chain = extract_unitons_generic(model("dai_terng_r3"),
                                        FiltrationSpec.segal(3))
        rng = np.random.default_rng(8)
        c = LoopMatrix(5, {0: np.eye(5),
                           1: 0.2 * rng.standard_normal((5, 5))})
        psi = LoopFamily(5, 0, 4, lambda z: loop_mul(chain.loop_at(z), c))
        res = iwasawa(psi)
        t0 = res.phi_plus(0.5 + 0.4j).coefficient(0)
        assert np.linalg.cond(t0) < 1e6
