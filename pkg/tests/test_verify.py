import json

import numpy as np
import pytest

from uniton.corpus import builtin_examples
from uniton.factorize import FiltrationSpec, extract_unitons_generic
from uniton.grassmodel import sample_grid, step
from uniton.loopalg import constant_family, identity_loop, uniton_factor
from uniton.numlin import orthonormal_span, subspace_distance
from uniton.verify import (CheckEntry, PerturbedChain, Report, pde_check,
                           filtration_certificate, reconstruction_check,
                           run_suite, unitarity_check, uniton_certificate)

Z0 = 0.7 + 0.2j
EXAMPLES = builtin_examples()
POINTS = [0.7 + 0.2j, -0.45 + 0.9j, 1.3 + 0.1j, 0.31 - 0.64j]


def chain_for(name, strategy="segal"):
    w = EXAMPLES[name].model()
    return extract_unitons_generic(w, FiltrationSpec.parse(strategy, w.r))


class TestPde:
    def test_constant_loop(self):
        fam = constant_family(identity_loop(3))
        entry = pde_check(fam, POINTS)
        assert entry.passed
        assert entry.max_residual < 1e-12

    def test_constant_product_loop(self):
        alpha = orthonormal_span([np.array([1.0, 2j, 0.1])])
        fam = constant_family(uniton_factor(alpha))
        assert pde_check(fam, POINTS).max_residual < 1e-12

    @pytest.mark.parametrize("name", ["mixed_pair", "dai_terng_r3", "sp2_r2"])
    def test_reconstructed_families_pass(self, name):
        entry = pde_check(chain_for(name).family(), POINTS)
        assert entry.passed
        assert entry.max_residual < 1e-4

    def test_negative_control_fails(self):
        base = chain_for("mixed_pair")
        bad = PerturbedChain(base, which=1, amplitude=0.5)
        entry = pde_check(bad.family(), POINTS)
        assert entry.max_residual > 1e-1
        assert not entry.passed
        # the perturbed chain is still unitary: unrelated check passes
        assert unitarity_check(bad, POINTS).passed


class TestCertificates:
    def test_filtration_residuals(self):
        entry = filtration_certificate(chain_for("dai_terng_r3",
                                                 "alternating-u-first"),
                                       POINTS)
        assert entry.passed
        assert entry.max_residual < 1e-8

    def test_alternating_is_strictly_between(self):
        w = EXAMPLES["dai_terng_r3"].model()
        chain = extract_unitons_generic(w, FiltrationSpec.alternating_u_first(3))
        stage = chain.stage_models[1]
        seg = step(w, "segal")
        uhl = step(w, "uhlenbeck")
        d_seg = subspace_distance(stage.fiber(Z0).space, seg.fiber(Z0).space)
        d_uhl = subspace_distance(stage.fiber(Z0).space, uhl.fiber(Z0).space)
        assert d_seg > 1e-2 and d_uhl < 1e-12  # first step is Uhlenbeck

    def test_uniton_certificate_positive(self):
        entry = uniton_certificate(chain_for("mixed_pair"), POINTS[:2])
        assert entry.passed

    def test_uniton_certificate_negative(self):
        bad = PerturbedChain(chain_for("mixed_pair"), which=2, amplitude=0.5)
        entry = uniton_certificate(bad, POINTS[:2])
        assert entry.max_residual > 1e-2

    def test_reconstruction_entries(self):
        entry, skipped = reconstruction_check(chain_for("sp2_r2"), POINTS)
        assert entry.passed and not skipped


class TestSuite:
    def test_mixed_pair_all_pass(self):
        grid = sample_grid(per_ring=8, extra_random=4)
        report = run_suite("mixed_pair", "segal", grid=grid)
        assert report.overall, {k: v.to_obj() for k, v in report.checks.items()
                                if not v.passed}
        assert report.labels["target"].startswith("complex Grassmannian")

    def test_sp2_suite(self):
        grid = sample_grid(per_ring=6, extra_random=2)
        report = run_suite("sp2_nonGrassmannian", "alternating-u-first",
                           grid=grid)
        assert report.overall
        assert report.labels["target"].startswith("Sp(m)")
        assert report.checks["symmetry:symplectic_perp_distance"].passed

    def test_report_schema(self):
        grid = sample_grid(per_ring=4, extra_random=2)
        report = run_suite("line_cp1", "uhlenbeck", grid=grid)
        obj = report.to_obj()
        assert obj["schema"] == "uniton-report/1"
        json.dumps(obj)  # serializable
        assert obj["overall"] is True

    def test_deterministic(self):
        grid = sample_grid(per_ring=4, extra_random=2)
        r1 = run_suite("dai_terng_r3", "segal", grid=grid)
        r2 = run_suite("dai_terng_r3", "segal", grid=grid)
        assert r1.to_obj() == r2.to_obj()
