import numpy as np
import pytest

from uniton.errors import DimMismatch, RankMismatch
from uniton.numlin import (DEFAULT_TOL, Subspace, Tolerances, contains,
                           full_subspace, orthonormal_span,
                           principal_angle_distance, projector,
                           subspace_distance, subspace_ops, zero_subspace)

RNG = np.random.default_rng(42)


def rand_subspace(n, k, rng=RNG):
    mat = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
    return orthonormal_span(mat)


class TestSpan:
    def test_dependent_vectors(self):
        s = orthonormal_span([np.array([1.0, 0]), np.array([2.0, 0])])
        assert s.rank == 1

    def test_empty(self):
        assert orthonormal_span([], ambient_dim=4).rank == 0

    def test_near_dependent_default_tol(self):
        s = orthonormal_span([np.array([1.0, 0]), np.array([1.0, 1e-14])])
        # SVD oracle on the 2x2 Gram: second singular value ~ 7e-15 relative
        assert s.rank == 1

    def test_orthonormal_columns(self):
        s = rand_subspace(6, 3)
        eye = s.basis.conj().T @ s.basis
        assert np.linalg.norm(eye - np.eye(3)) < 1e-12


class TestProjector:
    def test_full_and_zero(self):
        np.testing.assert_allclose(projector(full_subspace(3)), np.eye(3))
        np.testing.assert_allclose(projector(zero_subspace(3)), np.zeros((3, 3)))

    def test_diagonal_line(self):
        v = np.array([1.0, 1.0]) / np.sqrt(2)
        p = projector(orthonormal_span([v]))
        np.testing.assert_allclose(p, np.full((2, 2), 0.5), atol=1e-14)

    def test_projector_laws(self):
        for k in (1, 2, 4):
            s = rand_subspace(6, k)
            p = projector(s)
            assert np.linalg.norm(p - p.conj().T) < 1e-12
            assert np.linalg.norm(p @ p - p) < 1e-11
            assert abs(np.trace(p).real - s.rank) < 1e-9


class TestOps:
    def test_sum_idempotent(self):
        a = rand_subspace(5, 2)
        assert subspace_distance(subspace_ops(a, a, "sum"), a) < 1e-12

    def test_intersect_with_perp_is_zero(self):
        a = rand_subspace(5, 2)
        assert subspace_ops(a, a.perp(), "intersect").rank == 0

    def test_generic_intersection_dim(self):
        a, b = rand_subspace(5, 3), rand_subspace(5, 3)
        cap = subspace_ops(a, b, "intersect")
        assert cap.rank == 1  # 3 + 3 - 5
        _, res_a = contains(a, cap)
        _, res_b = contains(b, cap)
        assert max(res_a, res_b) < 1e-10

    def test_dimension_law(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            ka, kb = rng.integers(1, 5), rng.integers(1, 5)
            a, b = rand_subspace(6, int(ka), rng), rand_subspace(6, int(kb), rng)
            s = subspace_ops(a, b, "sum")
            cap = subspace_ops(a, b, "intersect")
            assert s.rank + cap.rank == a.rank + b.rank

    def test_dim_mismatch(self):
        with pytest.raises(DimMismatch):
            subspace_ops(rand_subspace(4, 1), rand_subspace(5, 1), "sum")


class TestContains:
    def test_truncation_subspace(self):
        a = rand_subspace(6, 4)
        b = Subspace(6, a.basis[:, :2])
        ok, res = contains(a, b)
        assert ok and res < 1e-13

    def test_orthogonal_lines(self):
        a = orthonormal_span([np.array([1.0, 0])])
        b = orthonormal_span([np.array([0.0, 1.0])])
        ok, res = contains(a, b)
        assert not ok and res == pytest.approx(1.0, abs=1e-12)


class TestAngles:
    def test_self(self):
        a = rand_subspace(5, 2)
        assert principal_angle_distance(a, a) < 1e-8

    def test_orthogonal(self):
        a = orthonormal_span([np.array([1.0, 0])])
        b = orthonormal_span([np.array([0.0, 1.0])])
        assert principal_angle_distance(a, b) == pytest.approx(np.pi / 2)

    def test_known_angle(self):
        th = 0.3
        a = orthonormal_span([np.array([1.0, 0])])
        b = orthonormal_span([np.array([np.cos(th), np.sin(th)])])
        assert principal_angle_distance(a, b) == pytest.approx(th, abs=1e-12)

    def test_rank_mismatch(self):
        with pytest.raises(RankMismatch):
            principal_angle_distance(rand_subspace(4, 1), rand_subspace(4, 2))

    def test_mutual_containment_small_angle(self):
        a = rand_subspace(6, 3)
        jitter = a.basis + 1e-12 * RNG.standard_normal(a.basis.shape)
        b = orthonormal_span(jitter)
        ok1, _ = contains(a, b)
        ok2, _ = contains(b, a)
        assert ok1 and ok2
        assert principal_angle_distance(a, b) < DEFAULT_TOL.angle_tol


class TestTolerances:
    def test_scaled(self):
        t = Tolerances().scaled(10)
        assert t.rank_rel == pytest.approx(1e-9)
        assert t.pde_rel == pytest.approx(1e-3)

    def test_env(self, monkeypatch):
        monkeypatch.setenv("UNITON_TOL_SCALE", "2")
        assert Tolerances.from_env().contain_res == pytest.approx(2e-8)
