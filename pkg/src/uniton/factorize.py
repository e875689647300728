"""Uniton extraction and loop factorization.

A filtration strategy is a word in Segal / Uhlenbeck / Gauss steps applied
from the top model down to H_+.  Every strategy shares one per-point engine:
the i-th subspace is spanned by sum_s S_s^{i-1} applied to grade blocks of a
spanning set, where S_s^{i-1} are the adjoint coefficients of the partial
product built so far.  The generic rule reads the spanning set off the
stepped fibers; the explicit rules evaluate closed-form meromorphic spans.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import Sequence

import numpy as np

from .errors import (DegreeZero, NotFull, NotReal, NotSymplectic,
                     OddDegreeOddDim, RankDeficientEverywhere, SingularPoint)
from .exactfun import LaurentSection, MeroVector
from .fdcalc import a_z_field, a_zbar_field, d_dzbar
from .grassmodel import (WModel, _span_with_gap_check, delta_subspaces,
                         generate_W, intersect_lambda, osculating_model,
                         s1_invariant_limit, sample_grid, step, good_points)
from .loopalg import (LoopFamily, LoopMatrix, identity_loop,
                      loop_adjoint_inverse, loop_eval, loop_mul,
                      reality_defect, symplectic_defect, uniton_factor,
                      unitarity_defect)
from .numlin import (DEFAULT_TOL, Subspace, Tolerances, orthonormal_span,
                     subspace_distance, zero_subspace)


# -- strategies ----------------------------------------------------------------


@dataclass(frozen=True)
class FiltrationSpec:
    """A step word applied starting at the top model W; entry j is the step
    taking the (r-j)-degree stage to the next one.  Uhlenbeck counts are
    always derived from the word, never supplied separately."""

    steps: tuple[str, ...]

    def __post_init__(self):
        for s in self.steps:
            if s not in ("S", "U", "G"):
                raise ValueError(f"unknown step {s!r}")

    @property
    def length(self) -> int:
        return len(self.steps)

    @property
    def is_gauss(self) -> bool:
        return any(s == "G" for s in self.steps)

    def u_count(self, i: int) -> int:
        """Number of Uhlenbeck steps taken to reach stage i (counted from the
        bottom: stage i is reached after length - i steps)."""
        taken = self.steps[:self.length - i]
        return sum(1 for s in taken if s == "U")

    @property
    def name(self) -> str:
        word = "".join(self.steps)
        if set(word) == {"S"}:
            return "segal"
        if set(word) == {"U"}:
            return "uhlenbeck"
        if set(word) == {"G"}:
            return "gauss"
        return f"schedule:{word}"

    @staticmethod
    def segal(r: int) -> "FiltrationSpec":
        return FiltrationSpec(("S",) * r)

    @staticmethod
    def uhlenbeck(r: int) -> "FiltrationSpec":
        return FiltrationSpec(("U",) * r)

    @staticmethod
    def alternating_u_first(r: int) -> "FiltrationSpec":
        return FiltrationSpec(tuple("U" if k % 2 == 0 else "S"
                                    for k in range(r)))

    @staticmethod
    def alternating_s_first(r: int) -> "FiltrationSpec":
        return FiltrationSpec(tuple("S" if k % 2 == 0 else "U"
                                    for k in range(r)))

    @staticmethod
    def gauss(length: int) -> "FiltrationSpec":
        return FiltrationSpec(("G",) * length)

    @staticmethod
    def parse(text: str, r: int) -> "FiltrationSpec":
        """Strategy names used by the command line and manifests."""
        text = text.strip().lower()
        if text == "segal":
            return FiltrationSpec.segal(r)
        if text == "uhlenbeck":
            return FiltrationSpec.uhlenbeck(r)
        if text == "alternating-u-first":
            return FiltrationSpec.alternating_u_first(r)
        if text == "alternating-s-first":
            return FiltrationSpec.alternating_s_first(r)
        if text == "gauss":
            return FiltrationSpec.gauss(r)
        if text.startswith("schedule:"):
            word = text[len("schedule:"):].upper()
            return FiltrationSpec(tuple(word))
        raise ValueError(f"unknown strategy {text!r}")


STRATEGY_NAMES = ("segal", "uhlenbeck", "alternating-u-first",
                  "alternating-s-first", "gauss")


# -- the per-point chain engine -------------------------------------------------


@dataclass
class PointChain:
    """Chain data at one base point: unitons and partial-product coefficients."""

    alphas: list[Subspace]
    ts: list[list[np.ndarray]]  # ts[i][k]: lambda^k coefficient of stage i

    def loop(self, i: int | None = None) -> LoopMatrix:
        i = len(self.alphas) if i is None else i
        coeffs = {k: m for k, m in enumerate(self.ts[i])}
        return LoopMatrix(len(self.ts[0][0]), coeffs)

    def s_coeffs(self, i: int) -> list[np.ndarray]:
        return [m.conj().T for m in self.ts[i]]

    def phi(self, i: int | None = None) -> np.ndarray:
        i = len(self.alphas) if i is None else i
        acc = np.zeros_like(self.ts[0][0])
        for k, m in enumerate(self.ts[i]):
            acc += ((-1.0) ** k) * m
        return acc


class UnitonChain:
    """Ordered unitons alpha_1..alpha_R with partial products, lazily computed
    and cached per base point."""

    def __init__(self, w: WModel, spec: FiltrationSpec, length: int,
                 window: int, alpha_rule, tol: Tolerances = DEFAULT_TOL,
                 name: str = ""):
        self.w = w
        self.spec = spec
        self.n = w.n
        self.length = length
        self.window = window
        self._alpha_rule = alpha_rule
        self.tol = tol
        self.name = name or spec.name
        self._points: dict[complex, PointChain] = {}

    def point(self, z: complex) -> PointChain:
        got = self._points.get(z)
        if got is None:
            got = self._compute(z)
            self._points[z] = got
        return got

    def _compute(self, z: complex) -> PointChain:
        n = self.n
        eye = np.eye(n, dtype=np.complex128)
        ts: list[list[np.ndarray]] = [[eye]]
        alphas: list[Subspace] = []
        state: dict = {}
        for i in range(1, self.length + 1):
            s_mats = [m.conj().T for m in ts[i - 1]]
            vectors = self._alpha_rule(z, i, s_mats, alphas, state)
            alpha = _span_with_gap_check(vectors, n, self.tol, z) \
                if vectors else zero_subspace(n)
            alphas.append(alpha)
            p = alpha.projector()
            q = eye - p
            prev = ts[i - 1]
            nxt = [prev[0] @ p]
            for k in range(1, i):
                nxt.append(prev[k] @ p + prev[k - 1] @ q)
            nxt.append(prev[i - 1] @ q)
            ts.append(nxt)
        return PointChain(alphas, ts)

    def uniton_at(self, z: complex, i: int) -> Subspace:
        return self.point(z).alphas[i - 1]

    def loop_at(self, z: complex, i: int | None = None) -> LoopMatrix:
        return self.point(z).loop(i)

    def phi_at(self, z: complex, i: int | None = None) -> np.ndarray:
        return self.point(z).phi(i)

    def family(self, i: int | None = None) -> LoopFamily:
        i = self.length if i is None else i
        return LoopFamily(self.n, 0, i, lambda z: self.loop_at(z, i))

    def __repr__(self):
        return f"UnitonChain({self.name}, length={self.length}, n={self.n})"


def _stage_models(w: WModel, spec: FiltrationSpec,
                  tol: Tolerances) -> list[WModel]:
    """Models along the word: entry j is the stage after j steps from W."""
    models = [w]
    for kind in spec.steps:
        cur = models[-1]
        if kind == "S":
            models.append(step(cur, "segal", tol))
        elif kind == "U":
            models.append(step(cur, "uhlenbeck", tol))
        else:
            raise ValueError("gauss words use gauss_chain_models")
    return models


def gauss_chain_length(w: WModel, tol: Tolerances = DEFAULT_TOL,
                       probe: complex = 0.37 + 0.41j) -> int:
    """Smallest number of osculating steps after which the model fills H_+."""
    full_dim = w.r * w.n
    for j in range(0, w.r * w.n + 1):
        m = osculating_model(w, j, tol) if j else w
        if m.fiber(probe).space.rank == full_dim:
            return j
    raise NotFull("osculating chain never fills the window")


def extract_unitons_generic(w: WModel, spec: FiltrationSpec,
                            tol: Tolerances = DEFAULT_TOL) -> UnitonChain:
    """Chain extraction from the stepped fibers:
    alpha_i = (sum_s S_s^{i-1} P_s) applied to the stage-i fiber."""
    n = w.n
    if spec.is_gauss:
        length = len(spec.steps)
        # the stage after j steps is the j-th osculating model
        models = [osculating_model(w, j, tol) if j else w
                  for j in range(length + 1)]
        window = max(w.r, length)
    else:
        if spec.length != w.r:
            raise ValueError(f"step word has length {spec.length}, model degree {w.r}")
        length = w.r
        models = _stage_models(w, spec, tol)
        window = w.r

    def rule(z, i, s_mats, alphas, state):
        stage = models[length - i]
        vectors = []
        if stage.sections is not None:
            # exact spanning sections give much better-conditioned columns
            # than an orthonormalized fiber basis
            for sec in stage.sections:
                v = sec(z)
                acc = np.zeros(n, dtype=np.complex128)
                for s in range(min(i, stage.r)):
                    acc += s_mats[s] @ v[s * n:(s + 1) * n]
                vectors.append(acc)
            # grades at and above the stage degree are full blocks
            for s in range(stage.r, i):
                vectors.extend(s_mats[s][:, m] for m in range(n))
            return vectors
        basis = stage.fiber_space(z, window).basis
        acc = np.zeros((n, basis.shape[1]), dtype=np.complex128)
        for s in range(min(i, len(s_mats))):
            acc += s_mats[s] @ basis[s * n:(s + 1) * n, :]
        return [acc[:, j] for j in range(acc.shape[1])]

    chain = UnitonChain(w, spec, length, window, rule, tol)
    chain.stage_models = models
    return chain


# -- explicit meromorphic-span rules -------------------------------------------


class _ExactTable:
    """Derivative table (L^j_m)^{(k)} for the coefficient vectors of exact
    generators, with the hatted (lambda-power-stripped) variants."""

    def __init__(self, gens: Sequence[LaurentSection]):
        self.gens = list(gens)
        self.orders = [g.order() for g in self.gens]
        self._ders: dict[tuple[int, int, int], MeroVector | None] = {}

    def der(self, j: int, m: int, k: int) -> MeroVector | None:
        if m < 0:
            return None
        key = (j, m, k)
        if key not in self._ders:
            if k == 0:
                v = self.gens[j].terms.get(m)
            else:
                lower = self.der(j, m, k - 1)
                v = lower.derivative() if lower is not None else None
            self._ders[key] = None if (v is None or v.is_zero()) else v
        return self._ders[key]

    def der_hat(self, j: int, m: int, k: int) -> MeroVector | None:
        return self.der(j, m + self.orders[j], k)


def _sum_span(entries, s_mats, z, n, lo_s=0):
    """One span vector sum_{s >= lo_s} S_s @ entry_s(z); None entries skipped."""
    acc = np.zeros(n, dtype=np.complex128)
    nonzero = False
    for s, mvs in entries:
        if mvs is None or s >= len(s_mats) or s < lo_s:
            continue
        acc += s_mats[s] @ mvs(z)
        nonzero = True
    return acc if nonzero else None


def _require_exact(w: WModel):
    if w.generators is None:
        raise ValueError("explicit formulae need exact generators")
    return _ExactTable(w.generators)


def mixed_unitons_explicit(w: WModel, spec: FiltrationSpec,
                           tol: Tolerances = DEFAULT_TOL) -> UnitonChain:
    """Closed-form spans for a mixed Segal/Uhlenbeck step word: two groups of
    span vectors governed by the number u of Uhlenbeck steps taken so far."""
    if spec.is_gauss:
        raise ValueError("use gauss_unitons_explicit for gauss words")
    if spec.length != w.r:
        raise ValueError("step word length must equal the model degree")
    table = _require_exact(w)
    n, r = w.n, w.r

    def rule(z, i, s_mats, alphas, state):
        u = spec.u_count(i)
        vectors = []
        for j in range(len(table.gens)):
            o = table.orders[j]
            for k in range(max(0, u - o), i + u - o):
                entries = [(s, table.der(j, s - k + u, k)) for s in range(i)]
                v = _sum_span(entries, s_mats, z, n)
                if v is not None:
                    vectors.append(v)
            for k in range(0, u - o):
                entries = [(s, table.der_hat(j, s, k)) for s in range(i)]
                v = _sum_span(entries, s_mats, z, n)
                if v is not None:
                    vectors.append(v)
        return vectors

    return UnitonChain(w, spec, r, r, rule, tol, name=f"explicit:{spec.name}")


def segal_unitons_explicit(w: WModel,
                           tol: Tolerances = DEFAULT_TOL) -> UnitonChain:
    """Nested-step spans: stage i is spanned by
    sum_{s=k}^{i-1} S_s^{i-1} (L^j_{s-k})^{(k)} over 0 <= k <= i-1."""
    return mixed_unitons_explicit(w, FiltrationSpec.segal(w.r), tol)


def uhlenbeck_unitons_explicit(w: WModel,
                               tol: Tolerances = DEFAULT_TOL) -> UnitonChain:
    """Merged single-group spans over the hatted sections:
    sum_s S_s^{i-1} (Lhat^j_s)^{(k)} for o(j) + k <= r - i."""
    table = _require_exact(w)
    n, r = w.n, w.r
    spec = FiltrationSpec.uhlenbeck(r)

    def rule(z, i, s_mats, alphas, state):
        vectors = []
        for j in range(len(table.gens)):
            o = table.orders[j]
            for k in range(0, r - i - o + 1):
                entries = [(s, table.der_hat(j, s, k)) for s in range(i)]
                v = _sum_span(entries, s_mats, z, n)
                if v is not None:
                    vectors.append(v)
        return vectors

    return UnitonChain(w, spec, r, r, rule, tol, name="explicit:uhlenbeck")


def gauss_unitons_explicit(w: WModel, length: int | None = None,
                           tol: Tolerances = DEFAULT_TOL) -> UnitonChain:
    """Spans for the osculating (A_z-image) filtration:
    sum_{s=k}^{i-1} S_s^{i-1} (L^j_{s-k})^{(k+l)}, 0 <= l <= R - i."""
    table = _require_exact(w)
    n, r = w.n, w.r
    length = gauss_chain_length(w, tol) if length is None else length
    spec = FiltrationSpec.gauss(length)

    def rule(z, i, s_mats, alphas, state):
        vectors = []
        for j in range(len(table.gens)):
            o = table.orders[j]
            for k in range(0, i - o):
                for ell in range(0, length - i + 1):
                    entries = [(s, table.der(j, s - k, k + ell))
                               for s in range(i)]
                    v = _sum_span(entries, s_mats, z, n)
                    if v is not None:
                        vectors.append(v)
        # chains longer than the degree see the full blocks of the tail
        # grades, which contribute the whole adjoint-coefficient images
        for s in range(r, i):
            vectors.extend(s_mats[s][:, m] for m in range(n))
        return vectors

    return UnitonChain(w, spec, length, max(r, length), rule, tol,
                       name="explicit:gauss")


def binomial_transform(h: LaurentSection, r: int) -> LaurentSection:
    """L_i = sum_l binom(i, l) H_l, computed mod lambda^r."""
    terms = {}
    for i in range(r):
        acc = None
        for ell in range(i + 1):
            hl = h.terms.get(ell)
            if hl is None:
                continue
            contrib = hl.scale(comb(i, ell))
            acc = contrib if acc is None else acc + contrib
        if acc is not None and not acc.is_zero():
            terms[i] = acc
    return LaurentSection(terms, h.dim)


def inverse_binomial_transform(l: LaurentSection, r: int) -> LaurentSection:
    """H_i = sum_l (-1)^{i-l} binom(i, l) L_l, mod lambda^r."""
    terms = {}
    for i in range(r):
        acc = None
        for ell in range(i + 1):
            ll = l.terms.get(ell)
            if ll is None:
                continue
            contrib = ll.scale(((-1) ** (i - ell)) * comb(i, ell))
            acc = contrib if acc is None else acc + contrib
        if acc is not None and not acc.is_zero():
            terms[i] = acc
    return LaurentSection(terms, l.dim)


def _c_table_advance(state: dict, alphas: list[Subspace], n: int):
    """Keep the perp-product matrices C_s^i in step with the chain built so far:
    C_s^i = C_s^{i-1} + perp(beta_i) C_{s-1}^{i-1}."""
    cs = state.setdefault("C", [np.eye(n, dtype=np.complex128)])
    built = state.setdefault("built", 0)
    while built < len(alphas):
        q = np.eye(n) - alphas[built].projector()
        cs = [cs[0]] + [cs[s] + q @ cs[s - 1] for s in range(1, len(cs))] \
            + [q @ cs[-1]]
        built += 1
    state["C"], state["built"] = cs, built
    return cs


def segal_unitons_H(hdata: Sequence[LaurentSection], r: int,
                    tol: Tolerances = DEFAULT_TOL) -> tuple[UnitonChain, UnitonChain]:
    """Spans from binomial-transformed data, two ways: through the transformed
    generators (adjoint-coefficient form) and directly through the recursive
    perp-product matrices.  Both chains factor the same model."""
    hdata = list(hdata)
    ldata = [binomial_transform(h, r) for h in hdata]
    w = generate_W(ldata, r, tol)
    chain_l = segal_unitons_explicit(w, tol)
    table = _ExactTable(hdata)
    n = w.n
    spec = FiltrationSpec.segal(r)

    def rule(z, i, s_mats, alphas, state):
        cs = _c_table_advance(state, alphas, n)
        vectors = []
        for j in range(len(table.gens)):
            for k in range(i):
                acc = np.zeros(n, dtype=np.complex128)
                nonzero = False
                for s in range(k, i):
                    hv = table.der(j, s - k, k)
                    if hv is None:
                        continue
                    acc += cs[s] @ hv(z)
                    nonzero = True
                if nonzero:
                    vectors.append(acc)
        return vectors

    chain_c = UnitonChain(w, spec, r, r, rule, tol, name="explicit:segal-H")
    return chain_l, chain_c


def uhlenbeck_unitons_H(w: WModel,
                        tol: Tolerances = DEFAULT_TOL) -> UnitonChain:
    """Uhlenbeck spans through the inverse binomial transform of the hatted
    generators and the recursive perp-product matrices."""
    if w.generators is None:
        raise ValueError("explicit formulae need exact generators")
    n, r = w.n, w.r
    hhat = [inverse_binomial_transform(g.hatted(), r) for g in w.generators]
    orders = [g.order() for g in w.generators]
    table = _ExactTable(hhat)
    spec = FiltrationSpec.uhlenbeck(r)

    def rule(z, i, s_mats, alphas, state):
        cs = _c_table_advance(state, alphas, n)
        vectors = []
        for j in range(len(hhat)):
            o = orders[j]
            for k in range(0, r - i - o + 1):
                acc = np.zeros(n, dtype=np.complex128)
                nonzero = False
                for s in range(i):
                    hv = table.der(j, s, k)
                    if hv is None:
                        continue
                    acc += cs[s] @ hv(z)
                    nonzero = True
                if nonzero:
                    vectors.append(acc)
        return vectors

    return UnitonChain(w, spec, r, r, rule, tol, name="explicit:uhlenbeck-H")


# -- reconstruction and uniton certificates ------------------------------------


def loop_fiber(lm: LoopMatrix, window: int,
               tol: Tolerances = DEFAULT_TOL) -> Subspace:
    """The model generated by a loop: span of the loop applied to the grade
    basis of the window quotient."""
    n = lm.n
    cols = []
    for g in range(window):
        for j in range(n):
            v = np.zeros(window * n, dtype=np.complex128)
            for k, m in lm.coeffs.items():
                if 0 <= g + k < window:
                    v[(g + k) * n:(g + k + 1) * n] += m[:, j]
            cols.append(v)
    return orthonormal_span(cols, tol, ambient_dim=window * n)


def _isotropy_gram(sub: Subspace, skew: bool) -> float:
    if sub.rank == 0:
        return 0.0
    if skew:
        from .loopalg import standard_j
        mid = -standard_j(sub.ambient_dim)
        return float(np.linalg.norm(sub.basis.T @ mid @ sub.basis, 2))
    return float(np.linalg.norm(sub.basis.T @ sub.basis, 2))


def reconstruct_and_verify(chain: UnitonChain, points: Sequence[complex],
                           tol: Tolerances = DEFAULT_TOL,
                           check_unitons: bool = True) -> dict:
    """Report-only residuals: reconstruction of the model by the factor
    product, per-uniton closure/holomorphy residuals, and basic/antibasic
    classification relative to the preceding partial map."""
    w = chain.w
    h = tol.fd_step
    recon, closure, holo, labels = [], [], [], []
    used, skipped = [], []
    for z in points:
        try:
            pc = chain.point(z)
            target = w.fiber_space(z, chain.window)
            recon.append(subspace_distance(
                loop_fiber(pc.loop(), chain.window, tol), target))
            if check_unitons:
                for i in range(1, chain.length + 1):
                    phi_prev = lambda zz, i=i: chain.phi_at(zz, i - 1)
                    az = a_z_field(phi_prev, z, h)
                    azb = a_zbar_field(phi_prev, z, h)
                    p = pc.alphas[i - 1].projector()
                    q = np.eye(chain.n) - p
                    scale = max(float(np.linalg.norm(az)), 1e-12)
                    closure.append(float(np.linalg.norm(q @ az @ p)) / scale)
                    pi_fun = lambda zz, i=i: chain.uniton_at(zz, i).projector()
                    dbar_p = d_dzbar(pi_fun, z, h)
                    holo.append(float(np.linalg.norm(q @ (dbar_p + azb @ p)))
                                / max(1.0, float(np.linalg.norm(azb))))
                    basic = float(np.linalg.norm(az @ p)) / scale
                    antibasic = float(np.linalg.norm(q @ az)) / scale
                    if basic < 1e-6 and antibasic < 1e-6:
                        labels.append((i, "both"))
                    elif basic < 1e-6:
                        labels.append((i, "basic"))
                    elif antibasic < 1e-6:
                        labels.append((i, "antibasic"))
                    else:
                        labels.append((i, "neither"))
            used.append(z)
        except SingularPoint:
            skipped.append(z)
    label_by_i: dict[int, set] = {}
    for i, lab in labels:
        label_by_i.setdefault(i, set()).add(lab)
    return {
        "points_used": used,
        "points_skipped": skipped,
        "recon_max": max(recon) if recon else float("nan"),
        "closure_max": max(closure) if closure else 0.0,
        "holomorphy_max": max(holo) if holo else 0.0,
        "labels": {i: sorted(v) for i, v in sorted(label_by_i.items())},
    }


def covering_residual(chain: UnitonChain, z: complex, mode: str,
                      tol: Tolerances = DEFAULT_TOL) -> float:
    """Covering identities along the chain: projections of consecutive
    unitons onto each other ("segal": pi_{a_i}(a_{i+1}) = a_i,
    "uhlenbeck": pi_{a_{i+1}}(a_i) = a_{i+1})."""
    pc = chain.point(z)
    worst = 0.0
    for i in range(chain.length - 1):
        a, b = pc.alphas[i], pc.alphas[i + 1]
        if mode == "segal":
            img = orthonormal_span(a.projector() @ b.basis, tol,
                                   ambient_dim=chain.n)
            worst = max(worst, subspace_distance(img, a))
        else:
            img = orthonormal_span(b.projector() @ a.basis, tol,
                                   ambient_dim=chain.n)
            worst = max(worst, subspace_distance(img, b))
    return worst


# -- normalization --------------------------------------------------------------


@dataclass
class NormalizationRecord:
    multipliers: list[LoopMatrix] = field(default_factory=list)
    removed_indices: list[tuple[int, str]] = field(default_factory=list)
    initial_degree: int = 0
    final_degree: int = 0
    notes: list[str] = field(default_factory=list)


def _retruncate(w: WModel, new_r: int, tol: Tolerances) -> WModel:
    """Re-represent a model whose top grades are full at one degree lower."""
    n = w.n

    def fiber_fn(z, w=w, n=n, new_r=new_r):
        basis = w.fiber(z).space.basis
        return orthonormal_span(basis[:new_r * n, :], tol,
                                ambient_dim=new_r * n)
    return WModel(n, new_r, fiber_fn, name=f"{w.name}|deg{new_r}")


def _lambda_down(w: WModel, tol: Tolerances) -> WModel:
    """Divide by lambda: valid when the grade-0 part is zero and the top
    grades are full; drops the degree by two."""
    n, r = w.n, w.r

    def fiber_fn(z, w=w):
        basis = w.fiber(z).space.basis
        down = basis[n:, :]
        return orthonormal_span(down[:(r - 2) * n, :], tol,
                                ambient_dim=(r - 2) * n)
    return WModel(n, r - 2, fiber_fn, name=f"{w.name}/lambda")


def apply_constant_inverse(w: WModel, eta: LoopMatrix, drop: int,
                           tol: Tolerances = DEFAULT_TOL,
                           neg_tol: float = 1e-6) -> WModel:
    """The model eta^{-1} W for a constant loop eta of degree `drop`;
    certifies that no negative-grade mass appears."""
    n, r = w.n, w.r
    new_r = r - drop
    if new_r < 0:
        raise DegreeZero("multiplier degree exceeds the model degree")
    inv = loop_adjoint_inverse(eta)
    e_coeffs = {-k: m for k, m in inv.coeffs.items()}  # e_coeffs[k] at power -k

    def fiber_fn(z, w=w):
        basis = w.fiber(z).space.basis
        cols = basis.shape[1]
        out = np.zeros((new_r * n, cols), dtype=np.complex128)
        neg = 0.0
        for g in range(-drop, new_r):
            acc = np.zeros((n, cols), dtype=np.complex128)
            for k, m in e_coeffs.items():
                src = g + k
                if 0 <= src < r:
                    acc += m @ basis[src * n:(src + 1) * n, :]
            if g < 0:
                neg = max(neg, float(np.linalg.norm(acc)))
            else:
                out[g * n:(g + 1) * n, :] = acc
        if neg > neg_tol:
            raise SingularPoint(z, f"negative-grade mass {neg:.2e} after multiplier")
        return orthonormal_span(out, tol, ambient_dim=new_r * n)
    return WModel(n, new_r, fiber_fn, name=f"{w.name}|eta")


def _constant_subspace(subs: Sequence[Subspace], angle_tol: float):
    """The common value of a z-indexed subspace when it is constant, else None."""
    first = subs[0]
    for s in subs[1:]:
        if s.rank != first.rank:
            return None
        if subspace_distance(s, first) > angle_tol:
            return None
    return first


def _probe_points(w: WModel, count: int = 8) -> list[complex]:
    grid = sample_grid(per_ring=8, extra_random=4)
    usable, _ = good_points(w, grid)
    if not usable:
        raise SingularPoint(None, "no usable probe points")
    stride = max(1, len(usable) // count)
    return usable[::stride][:count]


def normalize(w: WModel, flavor: str = "unitary",
              probes: Sequence[complex] | None = None,
              tol: Tolerances = DEFAULT_TOL) -> tuple[WModel, NormalizationRecord]:
    """Degree reduction by constant multipliers.

    unitary:       degree-1 multipliers whenever some delta_i is constant.
    grassmannian:  lambda^2 multipliers only (interior constant delta_i),
                   preserving the even/odd grading symmetry.
    real:          reality-preserving reductions: top/bottom lambda shifts,
                   the constant-middle maximal-isotropic case, and the
                   constant degree-2 hull for an interior vanishing block.
    """
    rec = NormalizationRecord(initial_degree=w.r, final_degree=w.r)
    cur = w
    angle = max(tol.angle_tol, 1e-9) * 10
    while cur.r > 0:
        pts = probes or _probe_points(cur)
        try:
            delta_lists = [delta_subspaces(cur, z, tol) for z in pts]
        except SingularPoint:
            rec.notes.append("probe points became singular; stopping")
            break
        r, n = cur.r, cur.n
        # per-index constancy
        const: dict[int, Subspace] = {}
        for i in range(1, r + 1):
            got = _constant_subspace([dl[i - 1] for dl in delta_lists], angle)
            if got is not None:
                const[i] = got
        top_full = all(dl[r - 1].rank == n for dl in delta_lists)
        bottom_zero = all(dl[0].rank == 0 for dl in delta_lists)

        if flavor == "unitary":
            if top_full:
                cur = _retruncate(cur, r - 1, tol)
                rec.multipliers.append(identity_loop(n))
                rec.removed_indices.append((r, "top-grade full"))
                continue
            pick = next(iter(sorted(const)), None)
            if pick is None:
                break
            eta = uniton_factor(const[pick], "plus")
            cur = apply_constant_inverse(cur, eta, 1, tol)
            rec.multipliers.append(eta)
            rec.removed_indices.append((pick, "constant delta"))
            continue

        if flavor == "grassmannian":
            pick = next((i for i in sorted(const) if 1 < i < r), None)
            if pick is None or r < 2:
                break
            p = const[pick].projector()
            eta = LoopMatrix(n, {0: p, 2: np.eye(n) - p})
            cur = apply_constant_inverse(cur, eta, 2, tol)
            rec.multipliers.append(eta)
            rec.removed_indices.append((pick, "constant delta, even multiplier"))
            continue

        if flavor == "real":
            if bottom_zero and top_full and r >= 2:
                cur = _lambda_down(cur, tol)
                rec.multipliers.append(
                    LoopMatrix(n, {1: np.eye(n, dtype=np.complex128)}))
                rec.removed_indices.append((0, "lambda shift"))
                continue
            mid = (r + 1) // 2 if r % 2 else r // 2
            if mid in const and const[mid].rank == n // 2 \
                    and _isotropy_gram(const[mid], skew=False) < 1e-8:
                eta = uniton_factor(const[mid], "plus")
                cur = apply_constant_inverse(cur, eta, 1, tol)
                rec.multipliers.append(eta)
                rec.removed_indices.append((mid, "constant isotropic middle"))
                continue
            interior = _real_interior_reduction(cur, delta_lists, pts, tol, rec)
            if interior is not None:
                cur = interior
                continue
            break
        if flavor not in ("unitary", "grassmannian", "real"):
            raise ValueError(f"unknown flavor {flavor!r}")
        break
    rec.final_degree = cur.r
    return cur, rec


def _real_interior_reduction(cur: WModel, delta_lists, pts, tol,
                             rec: NormalizationRecord) -> WModel | None:
    """Reduction by the constant degree-2 hull
    lambda^{i+1-r}(W cap lambda^{r-i-1} H_+) + lambda^{2-i}(W cap lambda^{i-1} H_+)
    + lambda^2 H_+, applicable when the graded block at some interior
    i > (r+1)/2 vanishes (and with it its mirror)."""
    r, n = cur.r, cur.n
    dims = [[0] + [d.rank for d in dl] for dl in delta_lists]
    for i in range(int((r + 1) // 2) + 1, r):
        if all(d[i + 1] - d[i] == 0 for d in dims):
            hulls = []
            for z in pts:
                cap_hi = intersect_lambda(cur, r - i - 1, z, tol)
                cap_lo = intersect_lambda(cur, i - 1, z, tol)
                cols = []
                for sub, shift_by in ((cap_hi, i + 1 - r), (cap_lo, 2 - i)):
                    for c in range(sub.rank):
                        v = sub.basis[:, c]
                        out = np.zeros(2 * n, dtype=np.complex128)
                        for g in range(r):
                            tg = g + shift_by
                            if 0 <= tg < 2:
                                out[tg * n:(tg + 1) * n] += v[g * n:(g + 1) * n]
                        cols.append(out)
                hulls.append(orthonormal_span(cols, tol, ambient_dim=2 * n))
            hull = _constant_subspace(hulls, max(tol.angle_tol, 1e-9) * 10)
            if hull is None:
                rec.notes.append(f"interior block {i}: hull not constant; stopped")
                return None
            eta = _loop_from_constant_fiber(hull, n, 2, tol)
            try:
                out = apply_constant_inverse(cur, eta, 2, tol)
                out.fiber(pts[0])
            except SingularPoint:
                rec.notes.append(f"interior block {i}: hull multiplier failed")
                return None
            rec.multipliers.append(eta)
            rec.removed_indices.append((i, "interior vanishing block"))
            return out
    return None


def _loop_from_constant_fiber(space: Subspace, n: int, degree: int,
                              tol: Tolerances) -> LoopMatrix:
    """The polynomial loop whose model has the given constant fiber:
    extracted as a chain of constant subspaces."""
    model = WModel(n, degree, lambda z: space, name="constant")
    chain = extract_unitons_generic(model, FiltrationSpec.segal(degree), tol)
    return chain.loop_at(0.123 + 0.456j)


# -- the explicit splitting of meromorphic loops --------------------------------


@dataclass
class IwasawaResult:
    phi_u: LoopFamily
    phi_plus: LoopFamily
    model: WModel
    chain: UnitonChain
    report: dict


def loop_columns_model(psi: LoopFamily, degree: int | None = None,
                       tol: Tolerances = DEFAULT_TOL, name: str = "") -> WModel:
    """The model spanned by the columns of a polynomial-in-lambda family and
    their lambda shifts."""
    r = psi.hi if degree is None else degree
    if r < 1:
        raise DegreeZero("column model needs degree >= 1")
    n = psi.n

    def col(z, j):
        lm = psi(z)
        v = np.zeros(r * n, dtype=np.complex128)
        for k, m in lm.coeffs.items():
            if 0 <= k < r:
                v[k * n:(k + 1) * n] += m[:, j]
        return v

    def fiber_fn(z):
        from .grassmodel import shift_matrix
        sh = shift_matrix(n, r)
        vecs = []
        for j in range(n):
            v = col(z, j)
            for _ in range(r):
                vecs.append(v)
                v = sh @ v
        return _span_with_gap_check(vecs, r * n, tol, z)

    sections = [lambda z, j=j: col(z, j) for j in range(n)]
    return WModel(n, r, fiber_fn, sections=sections, name=name or "columns")


def iwasawa(psi: LoopFamily, spec: FiltrationSpec | None = None,
            degree: int | None = None, tol: Tolerances = DEFAULT_TOL,
            points: Sequence[complex] | None = None,
            rng_seed: int = 7) -> IwasawaResult:
    """Split a meromorphic family as (unitary loop) . (plus loop).

    The unitary part is rebuilt from the column model by the chosen strategy;
    the plus part is the adjoint-inverse product, certified to carry no
    negative powers and checked by multiplying back."""
    w = loop_columns_model(psi, degree, tol)
    spec = spec or FiltrationSpec.segal(w.r)
    chain = extract_unitons_generic(w, spec, tol)
    phi_u = chain.family()

    def plus_at(z):
        lam_u = chain.loop_at(z)
        return loop_mul(loop_adjoint_inverse(lam_u), psi(z))

    phi_plus = LoopFamily(w.n, min(0, psi.lo), psi.hi + chain.length, plus_at)
    pts = list(points) if points is not None else \
        [z for z in sample_grid(per_ring=6, extra_random=2)]
    rng = np.random.default_rng(rng_seed)
    neg_mass = 0.0
    unit_defect = 0.0
    product_res = 0.0
    used = 0
    deg_u = 0
    for z in pts:
        try:
            pl = plus_at(z)
            lam_u = chain.loop_at(z)
        except SingularPoint:
            continue
        used += 1
        deg_u = max(deg_u, lam_u.hi)
        neg_mass = max(neg_mass, sum(np.linalg.norm(m)
                                     for k, m in pl.coeffs.items() if k < 0))
        unit_defect = max(unit_defect, unitarity_defect(lam_u))
        for _ in range(3):
            lam = np.exp(2j * np.pi * rng.random())
            lhs = loop_eval(lam_u, lam) @ loop_eval(pl, lam)
            rhs = loop_eval(psi(z), lam)
            product_res = max(product_res, float(
                np.linalg.norm(lhs - rhs) / max(1.0, np.linalg.norm(rhs))))
    if used == 0:
        raise RankDeficientEverywhere("no usable points for the splitting")
    report = {
        "points_used": used,
        "neg_mass": neg_mass,
        "unitarity": unit_defect,
        "product_residual": product_res,
        "phi_u_degree": deg_u,
        "psi_degree": psi.hi,
    }
    return IwasawaResult(phi_u, phi_plus, w, chain, report)


# -- alternating factorization with reality / symplectic certificates -----------


def _pair_layout(r: int) -> tuple[list[int], list[tuple[int, int]]]:
    """Indices (1-based) of the leading singleton (odd degree) and the
    quadratic pairs of the alternating factorization."""
    if r % 2 == 0:
        return [], [(2 * l - 1, 2 * l) for l in range(1, r // 2 + 1)]
    return [1], [(2 * l, 2 * l + 1) for l in range(1, (r - 1) // 2 + 1)]


def alternating_real_factorization(w: WModel, form: str = "real",
                                   points: Sequence[complex] | None = None,
                                   tol: Tolerances = DEFAULT_TOL) -> tuple[UnitonChain, dict]:
    """Alternating (Uhlenbeck-first) factorization of a real or symplectic
    model, with the structure certificates: quadratic factors and even
    partial products respect the symmetry, the designated subspaces are
    isotropic, and for odd degree the first uniton is maximal isotropic."""
    r, n = w.r, w.n
    skew = form == "symplectic"
    if r % 2 and n % 2:
        raise OddDegreeOddDim("odd degree requires even ambient dimension")
    pts = list(points) if points is not None else _probe_points(w)
    from .grassmodel import symmetry_tests
    sym = symmetry_tests(w, pts[0], tol)
    key = "symplectic_perp_distance" if skew else "real_perp_distance"
    if sym.get(key, 1.0) > 1e-6:
        raise (NotSymplectic if skew else NotReal)(
            f"{key} = {sym.get(key):.2e}")
    defect_fn = symplectic_defect if skew else reality_defect
    chain = extract_unitons_generic(w, FiltrationSpec.alternating_u_first(r), tol)
    singles, pairs = _pair_layout(r)
    cert = {"quad_factor": 0.0, "even_partial": 0.0, "isotropy": 0.0,
            "first_maximal": 0.0, "points": 0}
    limit = s1_invariant_limit(w, tol) if singles else None
    for z in pts:
        try:
            pc = chain.point(z)
        except SingularPoint:
            continue
        cert["points"] += 1
        factors = [uniton_factor(a, "plus") for a in pc.alphas]
        for (a, b) in pairs:
            q = loop_mul(factors[a - 1], factors[b - 1])
            cert["quad_factor"] = max(cert["quad_factor"], defect_fn(q, 2))
        start = 1 if singles else 0
        part = identity_loop(n)
        deg = 0
        for idx in range(start, r):
            part = loop_mul(part, factors[idx])
            deg += 1
            if deg % 2 == 0:
                cert["even_partial"] = max(cert["even_partial"],
                                           defect_fn(part, deg))
        for (a, b) in pairs:
            # within each pair the later factor is the Uhlenbeck-step uniton
            alpha_u = pc.alphas[b - 1]
            perp = orthonormal_span(
                np.eye(n) - pc.alphas[a - 1].projector(), tol, ambient_dim=n)
            cert["isotropy"] = max(cert["isotropy"],
                                   _isotropy_gram(alpha_u, skew),
                                   _isotropy_gram(perp, skew))
        if singles:
            first = pc.alphas[0]
            gram = _isotropy_gram(first, skew)
            rank_def = abs(first.rank - n // 2)
            mid = delta_subspaces(limit, z, tol)[(r + 1) // 2 - 1]
            dist = subspace_distance(first, mid)
            cert["first_maximal"] = max(cert["first_maximal"],
                                        gram + rank_def, dist)
    if cert["points"] == 0:
        raise SingularPoint(None, "no usable certificate points")
    return chain, cert
