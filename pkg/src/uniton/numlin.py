"""Numeric complex linear algebra on subspaces of C^n.

Subspaces are stored by orthonormal bases; every rank decision goes through
an SVD with a relative threshold taken from a single Tolerances record, and
all equality-style queries return residuals so callers can assert
quantitatively.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace

import numpy as np

from .errors import DimMismatch, RankMismatch


@dataclass(frozen=True)
class Tolerances:
    rank_rel: float = 1e-10
    contain_res: float = 1e-8
    angle_tol: float = 1e-7
    fd_step: float = 1e-5
    pde_rel: float = 1e-4

    def scaled(self, factor: float) -> "Tolerances":
        return replace(self, **{f.name: getattr(self, f.name) * factor
                                for f in fields(self)})

    @staticmethod
    def from_env() -> "Tolerances":
        """Default record, scaled by UNITON_TOL_SCALE if set."""
        t = Tolerances()
        scale = os.environ.get("UNITON_TOL_SCALE")
        return t.scaled(float(scale)) if scale else t


DEFAULT_TOL = Tolerances()


@dataclass(frozen=True, eq=False)
class Subspace:
    """A subspace of C^n given by an orthonormal basis (columns)."""

    ambient_dim: int
    basis: np.ndarray  # shape (ambient_dim, rank)

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T

    def perp(self, tol: Tolerances = DEFAULT_TOL) -> "Subspace":
        return subspace_ops(self, self, "perp_within_ambient", tol)

    def conj(self) -> "Subspace":
        return Subspace(self.ambient_dim, self.basis.conj())

    def __repr__(self):
        return f"Subspace(dim {self.rank} of C^{self.ambient_dim})"


def zero_subspace(n: int) -> Subspace:
    return Subspace(n, np.zeros((n, 0), dtype=np.complex128))


def full_subspace(n: int) -> Subspace:
    return Subspace(n, np.eye(n, dtype=np.complex128))


def orthonormal_span(vectors, tol: Tolerances = DEFAULT_TOL,
                     ambient_dim: int | None = None) -> Subspace:
    """Orthonormal basis of the numerical span; singular values below
    rank_rel * sigma_max are discarded."""
    if isinstance(vectors, np.ndarray) and vectors.ndim == 2:
        mat = np.asarray(vectors, dtype=np.complex128)
    else:
        vectors = [np.asarray(v, dtype=np.complex128).ravel() for v in vectors]
        if not vectors:
            if ambient_dim is None:
                raise ValueError("ambient_dim required for an empty span")
            return zero_subspace(ambient_dim)
        mat = np.column_stack(vectors)
    n = mat.shape[0]
    if ambient_dim is not None and ambient_dim != n:
        raise DimMismatch(f"vectors live in C^{n}, expected C^{ambient_dim}")
    if mat.shape[1] == 0:
        return zero_subspace(n)
    u, s, _ = np.linalg.svd(mat, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return zero_subspace(n)
    r = int(np.sum(s > tol.rank_rel * s[0]))
    return Subspace(n, u[:, :r])


def projector(s: Subspace) -> np.ndarray:
    """Hermitian idempotent with range s."""
    return s.projector()


def subspace_ops(a: Subspace, b: Subspace, kind: str,
                 tol: Tolerances = DEFAULT_TOL) -> Subspace:
    """sum, intersect, or perp_within_ambient (of a; b is ignored for perp)."""
    if a.ambient_dim != b.ambient_dim:
        raise DimMismatch(f"{a.ambient_dim} vs {b.ambient_dim}")
    n = a.ambient_dim
    if kind == "sum":
        return orthonormal_span(np.hstack([a.basis, b.basis]), tol,
                                ambient_dim=n)
    if kind == "perp_within_ambient":
        u, s, _ = np.linalg.svd(a.basis, full_matrices=True)
        r = int(np.sum(s > tol.rank_rel * s[0])) if s.size else 0
        return Subspace(n, u[:, r:])
    if kind == "intersect":
        # nullspace of the stacked complement projectors
        eye = np.eye(n, dtype=np.complex128)
        stack = np.vstack([eye - a.projector(), eye - b.projector()])
        _, s, vh = np.linalg.svd(stack)
        thresh = np.sqrt(tol.rank_rel)
        null_mask = s < thresh
        basis = vh[null_mask].conj().T
        return orthonormal_span(basis, tol, ambient_dim=n) if basis.size \
            else zero_subspace(n)
    raise ValueError(f"unknown subspace op {kind!r}")


def contains(a: Subspace, b: Subspace,
             tol: Tolerances = DEFAULT_TOL) -> tuple[bool, float]:
    """Whether b is contained in a, with the residual ||(I - P_a) basis_b||."""
    if a.ambient_dim != b.ambient_dim:
        raise DimMismatch(f"{a.ambient_dim} vs {b.ambient_dim}")
    if b.rank == 0:
        return True, 0.0
    res = b.basis - a.basis @ (a.basis.conj().T @ b.basis)
    residual = float(np.linalg.norm(res, 2))
    return residual < tol.contain_res, residual


def principal_angle_distance(a: Subspace, b: Subspace) -> float:
    """Largest principal angle (radians) between equal-rank subspaces."""
    if a.ambient_dim != b.ambient_dim:
        raise DimMismatch(f"{a.ambient_dim} vs {b.ambient_dim}")
    if a.rank != b.rank:
        raise RankMismatch(f"rank {a.rank} vs {b.rank}")
    if a.rank == 0:
        return 0.0
    s = np.linalg.svd(a.basis.conj().T @ b.basis, compute_uv=False)
    return float(np.arccos(np.clip(s.min(), -1.0, 1.0)))


def subspace_distance(a: Subspace, b: Subspace) -> float:
    """Gap metric ||P_a - P_b||_2; works across ranks (1.0 when ranks differ)."""
    if a.ambient_dim != b.ambient_dim:
        raise DimMismatch(f"{a.ambient_dim} vs {b.ambient_dim}")
    if a.ambient_dim == 0:
        return 0.0
    return float(np.linalg.norm(a.projector() - b.projector(), 2))
