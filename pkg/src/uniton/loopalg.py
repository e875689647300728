"""Laurent matrix polynomials in the loop parameter (algebraic loops).

A loop is a finite sum sum_k lambda^k T_k with complex n x n coefficient
matrices; products are Cauchy products, and the inverse of a loop that is
unitary on the unit circle is the adjoint loop sum_k lambda^{-k} T_k^*.
Families index loops by a base point z through a pure evaluator.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (DimMismatch, NotUnitary, OddDim, SingularAtMinusOne,
                     SingularAtMu, ZeroLambdaWithNegativePowers)
from .numlin import Subspace

TRIM_REL = 1e-12


class LoopMatrix:
    """Immutable Laurent matrix polynomial: coeffs maps power -> (n, n) array."""

    __slots__ = ("n", "coeffs")

    def __init__(self, n: int, coeffs: dict, trim: bool = True):
        clean = {}
        arrays = {k: np.asarray(m, dtype=np.complex128) for k, m in coeffs.items()}
        if trim and arrays:
            top = max((np.linalg.norm(m) for m in arrays.values()), default=0.0)
            cutoff = TRIM_REL * top
            arrays = {k: m for k, m in arrays.items()
                      if np.linalg.norm(m) > cutoff}
        for k, m in arrays.items():
            if m.shape != (n, n):
                raise DimMismatch(f"coefficient at power {k} has shape {m.shape}")
            clean[int(k)] = m
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "coeffs", dict(sorted(clean.items())))

    def __setattr__(self, *a):
        raise AttributeError("LoopMatrix is immutable")

    @property
    def lo(self) -> int:
        return min(self.coeffs) if self.coeffs else 0

    @property
    def hi(self) -> int:
        return max(self.coeffs) if self.coeffs else 0

    def coefficient(self, k: int) -> np.ndarray:
        return self.coeffs.get(k, np.zeros((self.n, self.n), dtype=np.complex128))

    def __matmul__(self, other: "LoopMatrix") -> "LoopMatrix":
        return loop_mul(self, other)

    def __add__(self, other: "LoopMatrix") -> "LoopMatrix":
        if self.n != other.n:
            raise DimMismatch("loop sizes differ")
        out = {k: m.copy() for k, m in self.coeffs.items()}
        for k, m in other.coeffs.items():
            out[k] = out[k] + m if k in out else m
        return LoopMatrix(self.n, out)

    def __sub__(self, other: "LoopMatrix") -> "LoopMatrix":
        return self + other.scale(-1.0)

    def scale(self, c: complex) -> "LoopMatrix":
        return LoopMatrix(self.n, {k: c * m for k, m in self.coeffs.items()})

    def shift(self, p: int) -> "LoopMatrix":
        """Multiply by lambda^p."""
        return LoopMatrix(self.n, {k + p: m for k, m in self.coeffs.items()},
                          trim=False)

    def conj_coeffs(self) -> "LoopMatrix":
        return LoopMatrix(self.n, {k: m.conj() for k, m in self.coeffs.items()},
                          trim=False)

    def norm(self) -> float:
        return float(sum(np.linalg.norm(m) for m in self.coeffs.values()))

    def __call__(self, lam: complex) -> np.ndarray:
        return loop_eval(self, lam)

    def __repr__(self):
        return f"LoopMatrix(n={self.n}, powers={sorted(self.coeffs)})"


def identity_loop(n: int) -> LoopMatrix:
    return LoopMatrix(n, {0: np.eye(n, dtype=np.complex128)}, trim=False)


def loop_mul(a: LoopMatrix, b: LoopMatrix) -> LoopMatrix:
    if a.n != b.n:
        raise DimMismatch("loop sizes differ")
    out: dict[int, np.ndarray] = {}
    for i, ta in a.coeffs.items():
        for j, tb in b.coeffs.items():
            k = i + j
            prod = ta @ tb
            out[k] = out[k] + prod if k in out else prod
    return LoopMatrix(a.n, out)


def loop_eval(phi: LoopMatrix, lam: complex) -> np.ndarray:
    if lam == 0 and phi.lo < 0:
        raise ZeroLambdaWithNegativePowers("loop has negative powers")
    acc = np.zeros((phi.n, phi.n), dtype=np.complex128)
    for k, m in phi.coeffs.items():
        acc += (lam ** k) * m
    return acc


def unitarity_defect(phi: LoopMatrix) -> float:
    """Max over offsets m of || sum_k T_k^* T_{k+m} - delta_{m0} I ||."""
    ks = sorted(phi.coeffs)
    if not ks:
        return float(np.linalg.norm(np.eye(phi.n)))
    worst = 0.0
    for m in range(-(ks[-1] - ks[0]), ks[-1] - ks[0] + 1):
        acc = np.zeros((phi.n, phi.n), dtype=np.complex128)
        for k in ks:
            if k + m in phi.coeffs:
                acc += phi.coeffs[k].conj().T @ phi.coeffs[k + m]
        if m == 0:
            acc -= np.eye(phi.n)
        worst = max(worst, float(np.linalg.norm(acc)))
    return worst


def loop_adjoint_inverse(phi: LoopMatrix, validate: bool = True,
                         unitary_res: float = 1e-6) -> LoopMatrix:
    """Inverse of a unitary-on-the-circle loop: S_k = T_k^* at power -k."""
    if validate:
        defect = unitarity_defect(phi)
        if defect > unitary_res:
            raise NotUnitary(f"unitarity defect {defect:.3e}")
    return LoopMatrix(phi.n, {-k: m.conj().T for k, m in phi.coeffs.items()},
                      trim=False)


def uniton_factor(alpha: Subspace, direction: str = "plus") -> LoopMatrix:
    """pi_alpha + lambda^{+-1} pi_alpha^perp."""
    p = alpha.projector()
    perp = np.eye(alpha.ambient_dim) - p
    power = 1 if direction == "plus" else -1
    return LoopMatrix(alpha.ambient_dim, {0: p, power: perp})


def nu_involution(phi: LoopMatrix) -> tuple[LoopMatrix, float]:
    """nu(phi)(lambda) = phi(-lambda) phi(-1)^{-1}, and ||nu(phi) - phi||."""
    at_minus_one = loop_eval(phi, -1.0)
    try:
        inv = np.linalg.inv(at_minus_one)
    except np.linalg.LinAlgError as exc:
        raise SingularAtMinusOne(str(exc)) from exc
    flipped = LoopMatrix(phi.n, {k: ((-1.0) ** k) * (m @ inv)
                                 for k, m in phi.coeffs.items()}, trim=False)
    defect = (flipped - phi).norm()
    return flipped, defect


def reality_defect(phi: LoopMatrix, r: int) -> float:
    """Deviation from the degree-r reality condition.

    Pointwise conjugation of a circle loop sends sum lambda^k T_k to
    sum lambda^{-k} conj(T_k); equality with lambda^{-r} phi therefore reads
    conj(T_k) = T_{r-k} for every k.  For even r this is the same as the
    centered form T_{-l} = conj(T_l) of lambda^{-r/2} phi.
    """
    ks = set(phi.coeffs) | {r - k for k in phi.coeffs}
    worst = 0.0
    for k in ks:
        diff = phi.coefficient(k).conj() - phi.coefficient(r - k)
        worst = max(worst, float(np.linalg.norm(diff)))
    return worst


def standard_j(n: int) -> np.ndarray:
    """Matrix of the quaternionic structure on the fixed symplectic basis:
    e_{2j-1} -> e_{2j}, e_{2j} -> -e_{2j-1} (to be composed with conjugation)."""
    if n % 2:
        raise OddDim(f"dim {n} is odd")
    j = np.zeros((n, n))
    for b in range(0, n, 2):
        j[b + 1, b] = 1.0
        j[b, b + 1] = -1.0
    return j


def symplectic_defect(phi: LoopMatrix, r: int) -> float:
    """Deviation from J phi J^{-1} = lambda^{-r} phi, J the quaternionic
    structure; on coefficients this reads J0 conj(T_k) J0^{-1} = T_{r-k}."""
    j0 = standard_j(phi.n)
    j0inv = j0.T  # J0 is real orthogonal with J0^2 = -I
    ks = set(phi.coeffs) | {r - k for k in phi.coeffs}
    worst = 0.0
    for k in ks:
        lhs = j0 @ phi.coefficient(k).conj() @ j0inv
        worst = max(worst, float(np.linalg.norm(lhs - phi.coefficient(r - k))))
    return worst


@dataclass(frozen=True)
class LoopFamily:
    """A z-indexed family of loops through a pure evaluator."""

    n: int
    lo: int
    hi: int
    at: Callable[[complex], LoopMatrix]

    def __call__(self, z: complex) -> LoopMatrix:
        return self.at(z)


def constant_family(phi: LoopMatrix) -> LoopFamily:
    return LoopFamily(phi.n, phi.lo, phi.hi, lambda z: phi)


def s1_action_loop(phi: LoopMatrix, mu: complex) -> LoopMatrix:
    """(mu * phi)_lambda = phi_{mu lambda} phi_mu^{-1} for a single loop."""
    if mu == 0:
        raise SingularAtMu("mu must be nonzero")
    at_mu = loop_eval(phi, mu)
    try:
        inv = np.linalg.inv(at_mu)
    except np.linalg.LinAlgError as exc:
        raise SingularAtMu(str(exc)) from exc
    return LoopMatrix(phi.n, {k: (mu ** k) * (m @ inv)
                              for k, m in phi.coeffs.items()})


def s1_action(family: LoopFamily, mu: complex) -> LoopFamily:
    """The circle (and punctured-plane) action on loop families."""
    if mu == 0:
        raise SingularAtMu("mu must be nonzero")
    return LoopFamily(family.n, family.lo, family.hi,
                      lambda z: s1_action_loop(family.at(z), mu))
