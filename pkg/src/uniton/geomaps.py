"""Geometric layer: harmonic maps from chains, the Cartan embedding,
holomorphic curves with their osculating flags and Gauss transforms, exact
isotropy orders, superhorizontal sequences, and target classification."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (HorizontalityViolated, IsotropyViolated, NotUnitary,
                     OddDim)
from .exactfun import (MeroVector, as_mv, bilinear_c, omega_form, perp_c,
                       rf_rank)
from .factorize import UnitonChain
from .fdcalc import d_dz
from .grassmodel import graded_W, WModel
from .loopalg import standard_j
from .numlin import DEFAULT_TOL, Subspace, Tolerances, orthonormal_span


@dataclass(frozen=True)
class HarmonicMapEval:
    """A unitary-matrix-valued map of z with its construction provenance."""

    n: int
    evaluator: Callable[[complex], np.ndarray]
    provenance: str = ""

    def __call__(self, z: complex) -> np.ndarray:
        return self.evaluator(z)


def cartan_embed(v: Subspace) -> np.ndarray:
    """The totally geodesic embedding of subspaces into the unitary group:
    the Hermitian involution with +1 eigenspace v."""
    return 2.0 * v.projector() - np.eye(v.ambient_dim)


def harmonic_map_from_chain(chain: UnitonChain,
                            phi0: np.ndarray | None = None) -> HarmonicMapEval:
    """phi0 times the product of the Cartan involutions of the chain's
    unitons; equals the chain loop evaluated at lambda = -1."""
    n = chain.n
    if phi0 is None:
        phi0 = np.eye(n, dtype=np.complex128)
    phi0 = np.asarray(phi0, dtype=np.complex128)
    if np.linalg.norm(phi0.conj().T @ phi0 - np.eye(n)) > 1e-9:
        raise NotUnitary("left constant factor is not unitary")

    def ev(z, chain=chain, phi0=phi0):
        acc = phi0.copy()
        for a in chain.point(z).alphas:
            acc = acc @ (2.0 * a.projector() - np.eye(n))
        return acc
    return HarmonicMapEval(n, ev, provenance=f"chain:{chain.name}")


class HoloCurve:
    """A holomorphic subbundle given by exact meromorphic generators."""

    def __init__(self, generators: Sequence[MeroVector]):
        self.generators = tuple(as_mv(g) for g in generators)
        if not self.generators:
            raise ValueError("a curve needs at least one generator")
        self.dim = self.generators[0].dim

    def osculating(self, i: int) -> "HoloCurve":
        """Generators together with their derivatives of order up to i."""
        gens = list(self.generators)
        for g in self.generators:
            d = g
            for _ in range(i):
                d = d.derivative()
                if d.is_zero():
                    break
                gens.append(d)
        return HoloCurve(gens)

    def rank_exact(self) -> int:
        return rf_rank([g.entries for g in self.generators])

    def is_full(self) -> bool:
        """Exact certificate: some osculating flag fills the ambient space."""
        return self.osculating(self.dim - 1).rank_exact() == self.dim

    def span_at(self, z: complex, tol: Tolerances = DEFAULT_TOL) -> Subspace:
        return orthonormal_span([g(z) for g in self.generators], tol,
                                ambient_dim=self.dim)

    def __repr__(self):
        return f"HoloCurve(dim={self.dim}, gens={len(self.generators)})"


def associated_curve(f: HoloCurve, i: int) -> HoloCurve:
    if i < 0:
        raise ValueError("osculating order must be >= 0")
    return f.osculating(i)


def gauss_transform(f: HoloCurve, i: int,
                    tol: Tolerances = DEFAULT_TOL) -> Callable[[complex], Subspace]:
    """Pointwise i-th transform: the part of the i-th osculating space
    orthogonal to the (i-1)-st."""
    if i < 1:
        raise ValueError("transform order must be >= 1")
    low = associated_curve(f, i - 1)
    high = associated_curve(f, i)

    def ev(z):
        lo = low.span_at(z, tol)
        hi = high.span_at(z, tol)
        rem = hi.basis - lo.basis @ (lo.basis.conj().T @ hi.basis)
        return orthonormal_span(rem, tol, ambient_dim=f.dim)
    return ev


def gauss_transform_grassmannian(v_eval: Callable[[complex], Subspace],
                                 tol: Tolerances = DEFAULT_TOL) -> Callable[[complex], Subspace]:
    """One Gauss transform of a Grassmannian-valued map: the image of the
    z-derivative of its projector, off the subbundle."""
    h = tol.fd_step

    def ev(z):
        v = v_eval(z)
        dp = d_dz(lambda zz: v_eval(zz).projector(), z, h)
        img = (np.eye(v.ambient_dim) - v.projector()) @ dp @ v.basis
        return orthonormal_span(img, tol, ambient_dim=v.ambient_dim)
    return ev


def isotropy_order(f: HoloCurve, form: str = "symmetric"):
    """Exact isotropy order: the largest t with all derivative pairings of
    total order <= t identically zero; math.inf when this persists past the
    ambient bound, -1 when even the order-zero pairing fails."""
    pair = bilinear_c if form == "symmetric" else omega_form
    if form == "symplectic" and f.dim % 2:
        raise OddDim("symplectic isotropy needs even dimension")
    gens = f.generators
    ders = {(j, 0): g for j, g in enumerate(gens)}

    def der(j, k):
        if (j, k) not in ders:
            ders[(j, k)] = der(j, k - 1).derivative()
        return ders[(j, k)]

    bound = 2 * f.dim
    t = -1
    while t < bound:
        total = t + 1
        for a in range(total + 1):
            b = total - a
            if b < a:
                break
            for j1 in range(len(gens)):
                for j2 in range(len(gens)):
                    if not pair(der(j1, a), der(j2, b)).is_zero():
                        return t
        t += 1
    return math.inf


# -- superhorizontal sequences ---------------------------------------------------


@dataclass
class SuperhorizontalSeq:
    """Nested holomorphic subbundles delta_1 subset ... subset delta_r with
    d/dz carrying each into the next; stored by exact generators."""

    deltas: list[list[MeroVector]]  # deltas[i] generates delta_{i+1}
    n: int

    @property
    def r(self) -> int:
        return len(self.deltas)

    def delta_at(self, i: int, z: complex,
                 tol: Tolerances = DEFAULT_TOL) -> Subspace:
        """delta_i fiber, 1-based; delta_0 = 0 and delta_{r+1} = C^n."""
        from .numlin import full_subspace, zero_subspace
        if i <= 0:
            return zero_subspace(self.n)
        if i > self.r:
            return full_subspace(self.n)
        return orthonormal_span([g(z) for g in self.deltas[i - 1]], tol,
                                ambient_dim=self.n)

    def to_model(self, tol: Tolerances = DEFAULT_TOL,
                 name: str = "") -> WModel:
        """The graded model sum lambda^{i} delta_{i+1} + lambda^r H_+."""
        return graded_W(self.deltas, self.r, tol, name=name)


def _exact_subset(small: Sequence[MeroVector], big: Sequence[MeroVector]) -> bool:
    big = list(big)
    if not big:
        return all(g.is_zero() for g in small)
    base = rf_rank([g.entries for g in big])
    joint = rf_rank([g.entries for g in list(big) + list(small)])
    return joint == base


def validate_superhorizontal(seq: SuperhorizontalSeq):
    """Exact checks: nesting and d/dz(delta_i) inside delta_{i+1}."""
    for i in range(seq.r - 1):
        if not _exact_subset(seq.deltas[i], seq.deltas[i + 1]):
            raise HorizontalityViolated(f"delta_{i+1} not inside delta_{i+2}")
        ders = [g.derivative() for g in seq.deltas[i]]
        if not _exact_subset(ders, seq.deltas[i + 1]):
            raise HorizontalityViolated(
                f"d/dz delta_{i+1} leaves delta_{i+2}")
    # the top subbundle only needs derivatives inside C^n, which is automatic


def build_real_superhorizontal_odd(seed: Sequence[MeroVector],
                                   choices: dict[int, Sequence[MeroVector]],
                                   r: int) -> SuperhorizontalSeq:
    """Real superhorizontal sequence of odd degree r from a maximal isotropic
    seed at the middle slot: lower slots are the supplied choices, validated
    against the derivative-orthogonality constraint, and upper slots are the
    exact bilinear complements of their mirrors."""
    if r % 2 == 0:
        raise ValueError("this builder is for odd degree")
    seed = [as_mv(g) for g in seed]
    n = seed[0].dim
    if n % 2:
        raise OddDim("maximal isotropic seeds need even ambient dimension")
    for a in seed:
        for b in seed:
            if not bilinear_c(a, b).is_zero():
                raise IsotropyViolated("seed is not isotropic")
    if rf_rank([g.entries for g in seed]) != n // 2:
        raise IsotropyViolated("seed is not maximal isotropic")
    mid = (r + 1) // 2
    deltas: dict[int, list[MeroVector]] = {mid: list(seed)}
    for i in range(mid - 1, 0, -1):
        chosen = [as_mv(g) for g in choices.get(i, [])]
        upper = deltas[r - i] if (r - i) in deltas else None
        if upper is None:
            # mirror not built yet: constraint is against delta_{r-i} which
            # for i just below the middle is delta_i^perp of later steps;
            # build order guarantees r - i > mid was set by a previous pass
            raise ValueError("choices must be supplied from the middle out")
        cons = list(upper) + [g.derivative() for g in upper]
        for g in chosen:
            for c in cons:
                if not bilinear_c(g, c).is_zero():
                    raise HorizontalityViolated(
                        f"choice at slot {i} pairs with the osculating mirror")
        deltas[i] = chosen
        deltas[r - i + 1] = perp_c(chosen) if chosen else \
            [as_mv([1 if k == j else 0 for k in range(n)]) for j in range(n)]
    seq = SuperhorizontalSeq([deltas[i] for i in range(1, r + 1)], n)
    validate_superhorizontal(seq)
    for i in range(1, r + 1):
        mirror = deltas[r - i + 1]
        for g in deltas[i]:
            for m in mirror:
                if not bilinear_c(g, m).is_zero():
                    raise IsotropyViolated(
                        f"reality failed: delta_{i} pairs with delta_{r-i+1}")
    return seq


def zeta_decomposition(seq: SuperhorizontalSeq, z: complex,
                       tol: Tolerances = DEFAULT_TOL) -> list[Subspace]:
    """The orthogonal legs zeta_i = delta_i^perp cap delta_{i+1}, i = 0..r."""
    out = []
    for i in range(seq.r + 1):
        low = seq.delta_at(i, z, tol)
        high = seq.delta_at(i + 1, z, tol)
        rem = high.basis - low.basis @ (low.basis.conj().T @ high.basis)
        out.append(orthonormal_span(rem, tol, ambient_dim=seq.n))
    return out


def s1_invariant_phi(seq: SuperhorizontalSeq,
                     tol: Tolerances = DEFAULT_TOL) -> HarmonicMapEval:
    """The Grassmannian-valued harmonic map of a nested sequence: the Cartan
    image of the sum of the even legs."""
    n = seq.n

    def ev(z):
        zetas = zeta_decomposition(seq, z, tol)
        acc = -np.eye(n, dtype=np.complex128)
        for k in range(0, len(zetas), 2):
            acc += 2.0 * zetas[k].projector()
        return acc
    return HarmonicMapEval(n, ev, provenance="superhorizontal")


# -- target classification --------------------------------------------------------


@dataclass
class TargetClass:
    label: str
    memberships: dict[str, str]
    residuals: dict[str, float]


def classify_target(phi: HarmonicMapEval, points: Sequence[complex],
                    tol: Tolerances = DEFAULT_TOL) -> TargetClass:
    """Membership residuals over sample points and the resulting class label.

    Tests: unitarity, square-identity (Grassmannian), conjugation symmetry
    (orthogonal cases, g or ig real), and the quaternionic commutation
    (symplectic cases).  Borderline values are reported UNDECIDED."""
    n = phi.n
    res: dict[str, float] = {}
    names = ["unitary", "involution", "conj_plus", "conj_minus"]
    if n % 2 == 0:
        names += ["sympl_plus", "sympl_minus"]
    for z in points:
        g = phi(z)
        eye = np.eye(n)
        upd = {
            "unitary": np.linalg.norm(g.conj().T @ g - eye),
            "involution": np.linalg.norm(g @ g - eye),
            "conj_plus": np.linalg.norm(g.conj() - g),
            "conj_minus": np.linalg.norm(g.conj() + g),
        }
        if n % 2 == 0:
            j0 = standard_j(n)
            jg = j0 @ g.conj() @ j0.T
            upd["sympl_plus"] = np.linalg.norm(jg - g)
            upd["sympl_minus"] = np.linalg.norm(jg + g)
        for k in names:
            res[k] = max(res.get(k, 0.0), float(upd[k]))
    thresh = tol.contain_res
    member = {}
    for k in names:
        if res[k] < thresh:
            member[k] = "PASS"
        elif res[k] < 100 * thresh:
            member[k] = "UNDECIDED"
        else:
            member[k] = "FAIL"
    label = "U(n)"
    if member["involution"] == "PASS":
        label = "complex Grassmannian"
        if member["conj_plus"] == "PASS":
            label = "real Grassmannian"
        elif member["conj_minus"] == "PASS":
            label = "O(2m)/U(m)"
        elif n % 2 == 0 and member["sympl_minus"] == "PASS":
            label = "Sp(m)/U(m)"
        elif n % 2 == 0 and member["sympl_plus"] == "PASS":
            label = "quaternionic Grassmannian"
    else:
        if member["conj_plus"] == "PASS":
            label = "O(n)"
        elif member["conj_minus"] == "PASS":
            label = "O(n) (as i.phi)"
        elif n % 2 == 0 and member["sympl_plus"] == "PASS":
            label = "Sp(m)"
        elif n % 2 == 0 and member["sympl_minus"] == "PASS":
            label = "Sp(m) (as i.phi)"
    if member["involution"] == "PASS":
        ranks = {int(round((n + np.trace(phi(z)).real) / 2)) for z in points}
        if len(ranks) == 1:
            label += f" [rank {ranks.pop()}]"
    return TargetClass(label, member, res)
