"""Finite-window model of lambda-closed subspaces.

A degree-r model W lives between lambda^r H_+ and H_+ and is represented by
its image in the quotient H_+/lambda^r H_+ ~= C^{rn}, laid out grade-major
(grade 0 block first).  Fibers are computed per base point z from exact
generating data, cached, and stepped by the Segal / Uhlenbeck / Gauss moves;
symmetry (real / nu / symplectic) is tested fiberwise through the shifted
pairing sum_k <v_k, w_{r-1-k}>.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (DegreeZero, PoleAtPoint, SingularNeighborhood,
                     SingularPoint)
from .exactfun import LaurentSection, MeroVector
from .loopalg import standard_j
from .numlin import (DEFAULT_TOL, Subspace, Tolerances, full_subspace,
                     orthonormal_span, subspace_distance, subspace_ops,
                     zero_subspace)

GRID_SEED = 0x5EED
AMBIGUITY_BAND = 100.0  # kept/discarded singular-value gap below this flags


def shift_matrix(n: int, window: int) -> np.ndarray:
    """Multiplication by lambda on C^{window*n}: block nilpotent down-shift."""
    s = np.zeros((window * n, window * n))
    for g in range(window - 1):
        s[(g + 1) * n:(g + 2) * n, g * n:(g + 1) * n] = np.eye(n)
    return s


def grade_block(v: np.ndarray, n: int, g: int) -> np.ndarray:
    return v[g * n:(g + 1) * n]


def embed_fiber(space: Subspace, n: int, degree: int, window: int) -> Subspace:
    """Re-represent a degree-`degree` fiber in a deeper window by appending
    the full blocks for grades degree..window-1."""
    if window == degree:
        return space
    if window < degree:
        raise ValueError("window shallower than degree")
    m = window * n
    basis = np.zeros((m, space.rank + (window - degree) * n),
                     dtype=np.complex128)
    basis[:degree * n, :space.rank] = space.basis
    for j in range(degree * n, window * n):
        basis[j, space.rank + j - degree * n] = 1.0
    return Subspace(m, basis)


def _span_with_gap_check(vectors, n_amb: int, tol: Tolerances,
                         z=None) -> Subspace:
    """Span with the sample-point policy: an ambiguous rank gap is singular.

    Columns are normalized so the noise floor is uniform across spanning
    vectors of very different magnitudes; columns whose norm is below
    rank_rel times the largest are content-free and dropped first."""
    vecs = [np.asarray(v, dtype=np.complex128) for v in vectors]
    norms = [np.linalg.norm(v) for v in vecs]
    top = max(norms, default=0.0)
    if top == 0.0:
        return zero_subspace(n_amb)
    vecs = [v / nv for v, nv in zip(vecs, norms) if nv > tol.rank_rel * top]
    if not vecs:
        return zero_subspace(n_amb)
    mat = np.column_stack(vecs)
    u, s, _ = np.linalg.svd(mat, full_matrices=False)
    smax = s[0]
    if smax == 0.0:
        return zero_subspace(n_amb)
    keep = s > tol.rank_rel * smax
    if not np.all(keep):
        kept_min = s[keep].min() if np.any(keep) else smax
        disc_max = s[~keep].max()
        if disc_max > 0 and kept_min / disc_max < AMBIGUITY_BAND:
            raise SingularPoint(z, "ambiguous rank gap")
    return Subspace(n_amb, u[:, keep])


@dataclass(frozen=True)
class GradedFiber:
    """A point fiber: lambda-closed subspace of C^{rn} with its shift map."""

    n: int
    degree: int
    space: Subspace

    @property
    def ambient_dim(self) -> int:
        return self.space.ambient_dim

    def shift(self) -> np.ndarray:
        return shift_matrix(self.n, self.degree)

    def closure_residual(self) -> float:
        """||(I - P) . (shift basis)||: how far the fiber is from lambda-closed."""
        if self.space.rank == 0 or self.degree == 0:
            return 0.0
        shifted = self.shift() @ self.space.basis
        res = shifted - self.space.basis @ (self.space.basis.conj().T @ shifted)
        return float(np.linalg.norm(res, 2)) if shifted.size else 0.0


class WModel:
    """A degree-r lambda-closed model with per-point fibers.

    ``generators`` (exact LaurentSections) are present for models built from
    meromorphic data; purely numeric models carry only the fiber evaluator.
    ``sections`` are smooth-frame callables z -> C^{rn} spanning the fiber,
    used by the extended-solution residuals.
    """

    def __init__(self, n: int, r: int, fiber_fn: Callable[[complex], Subspace],
                 generators: Sequence[LaurentSection] | None = None,
                 osculating: bool = False,
                 sections: Sequence[Callable[[complex], np.ndarray]] | None = None,
                 name: str = ""):
        self.n = n
        self.r = r
        self._fiber_fn = fiber_fn
        self.generators = tuple(generators) if generators is not None else None
        self.osculating = osculating
        self.sections = list(sections) if sections is not None else None
        self.name = name
        self._cache: dict[complex, GradedFiber] = {}

    def fiber(self, z: complex) -> GradedFiber:
        got = self._cache.get(z)
        if got is None:
            try:
                space = self._fiber_fn(z)
            except PoleAtPoint as exc:
                raise SingularPoint(z, "generator pole") from exc
            got = GradedFiber(self.n, self.r, space)
            self._cache[z] = got
        return got

    def fiber_space(self, z: complex, window: int | None = None) -> Subspace:
        f = self.fiber(z)
        return embed_fiber(f.space, self.n, self.r, window or self.r)

    def __repr__(self):
        tag = self.name or ("osculating" if self.osculating else "model")
        return f"WModel({tag}, n={self.n}, r={self.r})"


# -- constructors -------------------------------------------------------------


def _section_vectors(secs: Sequence[LaurentSection], r: int):
    """Evaluator list for exact quotient sections."""
    return [lambda z, s=s: s.eval_quotient(z, r) for s in secs]


def generate_W(X: Sequence[LaurentSection], r: int,
               tol: Tolerances = DEFAULT_TOL, name: str = "") -> WModel:
    """The model generated by holomorphic data X:
    grade-k parts collect the k-th osculating span of X, shifted up.

    Spanning sections are lambda^{k+m} (L)^{(k)} for k + m <= r - 1."""
    X = list(X)
    if any(L.max_power >= r for L in X):
        raise ValueError("generator lambda-powers must be < r")
    secs: list[LaurentSection] = []
    for L in X:
        dk = L
        for k in range(r):
            if k > 0:
                dk = dk.derivative()
            if dk.is_zero():
                break
            for m in range(r - k):
                s = dk.shifted(k + m).truncated(r)
                if not s.is_zero():
                    secs.append(s)
    n = X[0].dim
    fiber_fn = lambda z: _span_with_gap_check(
        [s.eval_quotient(z, r) for s in secs], r * n, tol, z)
    return WModel(n, r, fiber_fn, generators=X, osculating=True,
                  sections=_section_vectors(secs, r), name=name)


def lambda_span_W(gens: Sequence[LaurentSection], r: int,
                  tol: Tolerances = DEFAULT_TOL, name: str = "") -> WModel:
    """The model spanned by the given sections and their lambda-shifts only
    (no osculating closure); right for loop columns and hand-built graded data."""
    gens = list(gens)
    secs = []
    for L in gens:
        for m in range(r):
            s = L.shifted(m).truncated(r)
            if not s.is_zero():
                secs.append(s)
    n = gens[0].dim
    fiber_fn = lambda z: _span_with_gap_check(
        [s.eval_quotient(z, r) for s in secs], r * n, tol, z)
    return WModel(n, r, fiber_fn, generators=gens, osculating=False,
                  sections=_section_vectors(secs, r), name=name)


def graded_W(grades: Sequence[Sequence[MeroVector]], r: int,
             tol: Tolerances = DEFAULT_TOL, name: str = "") -> WModel:
    """Model sum_i lambda^i span(grades[i]) + lambda^r H_+ from exact data."""
    gens = [LaurentSection({i: v}) for i, vs in enumerate(grades) for v in vs]
    return lambda_span_W(gens, r, tol, name=name)


def numeric_W(n: int, r: int, fiber_fn: Callable[[complex], Subspace],
              sections=None, name: str = "") -> WModel:
    return WModel(n, r, fiber_fn, sections=sections, name=name)


# -- graded projections and lambda-intersections ------------------------------


def graded_projection(fiber: GradedFiber, i: int,
                      tol: Tolerances = DEFAULT_TOL) -> Subspace:
    """P_i of the fiber: span of the grade-i blocks of a spanning set."""
    if not 0 <= i < fiber.degree:
        raise IndexError(f"grade {i} outside [0, {fiber.degree})")
    n = fiber.n
    rows = fiber.space.basis[i * n:(i + 1) * n, :]
    return orthonormal_span(rows, tol, ambient_dim=n)


def coordinate_tail(n: int, window: int, i: int) -> Subspace:
    """The coordinate subspace with all grades < i equal to zero."""
    m = window * n
    basis = np.zeros((m, (window - i) * n), dtype=np.complex128)
    for j in range(i * n, m):
        basis[j, j - i * n] = 1.0
    return Subspace(m, basis)


def intersect_lambda(w: WModel, i: int, z: complex,
                     tol: Tolerances = DEFAULT_TOL) -> Subspace:
    """Fiber of W cap lambda^i H_+ (an honest intersection, not coordinate
    zeroing), represented in the same window."""
    if not 0 <= i <= w.r:
        raise IndexError(f"lambda-power {i} outside [0, {w.r}]")
    space = w.fiber(z).space
    if i == 0:
        return space
    if i == w.r:
        return zero_subspace(space.ambient_dim)
    return subspace_ops(space, coordinate_tail(w.n, w.r, i), "intersect", tol)


def delta_subspaces(w: WModel, z: complex,
                    tol: Tolerances = DEFAULT_TOL) -> list[Subspace]:
    """[delta_1, ..., delta_{r+1}] with delta_{i+1} = P_i(W cap lambda^i H_+);
    delta_{r+1} is the full C^n."""
    n = w.n
    out = []
    for i in range(w.r):
        cap = intersect_lambda(w, i, z, tol)
        rows = cap.basis[i * n:(i + 1) * n, :]
        out.append(orthonormal_span(rows, tol, ambient_dim=n))
    out.append(full_subspace(n))
    return out


def A_ranks(w: WModel, z: complex, tol: Tolerances = DEFAULT_TOL) -> list[int]:
    """Ranks of the graded pieces of W / lambda W; entry i is
    dim delta_{i+1} - dim delta_i, and the list sums to n."""
    deltas = delta_subspaces(w, z, tol)
    dims = [0] + [d.rank for d in deltas]
    return [dims[i + 1] - dims[i] for i in range(w.r + 1)]


# -- steps --------------------------------------------------------------------


def step(w: WModel, kind: str, tol: Tolerances = DEFAULT_TOL) -> WModel:
    """One lambda-step toward H_+:

    - "segal":     W + lambda^{r-1} H_+     (degree drops by one)
    - "uhlenbeck": (lambda^{-1} W) cap H_+  (degree drops by one)
    - "gauss":     first osculating model W_(1) (same degree window)
    """
    if kind in ("segal", "uhlenbeck") and w.r < 1:
        raise DegreeZero("cannot step a degree-zero model")
    n = w.n
    if kind == "segal":
        def seg_fiber(z, w=w, n=n):
            space = w.fiber(z).space
            if w.r == 1:
                return zero_subspace(0)
            return orthonormal_span(space.basis[:(w.r - 1) * n, :], tol,
                                    ambient_dim=(w.r - 1) * n)
        return WModel(n, w.r - 1, seg_fiber, name=f"{w.name}+S")
    if kind == "uhlenbeck":
        def uhl_fiber(z, w=w, n=n):
            space = w.fiber(z).space
            head = coordinate_tail(n, w.r, 1)
            cap = subspace_ops(space, head, "intersect", tol)
            if w.r == 1:
                return zero_subspace(0)
            down = cap.basis[n:, :]
            return orthonormal_span(down, tol, ambient_dim=(w.r - 1) * n)
        return WModel(n, w.r - 1, uhl_fiber, name=f"{w.name}+U")
    if kind == "gauss":
        if not w.osculating or w.generators is None:
            raise ValueError("gauss steps need exact osculating generators")
        return osculating_model(w, 1, tol)
    raise ValueError(f"unknown step kind {kind!r}")


_PRUNE_PROBES = (0.413 + 0.271j, -0.337 + 0.59j, 0.181 - 0.443j)


def _prune_sections(secs, r: int, order_key=None):
    """Keep a generating subset of exact sections.

    A section whose value is pointwise dependent on the accepted ones at
    every generic probe is dependent over the rational-function field and
    therefore spans nothing new at any point.  Candidates are visited
    low-order-first so the surviving set is well conditioned."""
    if order_key is not None:
        secs = sorted(secs, key=order_key)
    kept = []
    basis = {z: [] for z in _PRUNE_PROBES}
    for s in secs:
        try:
            vals = {z: s.eval_quotient(z, r) for z in _PRUNE_PROBES}
        except PoleAtPoint:
            kept.append(s)
            continue
        adds = False
        residuals = {}
        for z, v in vals.items():
            nv = np.linalg.norm(v)
            if nv == 0:
                continue
            v = v / nv
            for q in basis[z]:
                v = v - q * np.vdot(q, v)
            residuals[z] = v
            if np.linalg.norm(v) > 1e-6:
                adds = True
        if adds:
            kept.append(s)
            for z, v in residuals.items():
                nv = np.linalg.norm(v)
                if nv > 1e-9:
                    basis[z].append(v / nv)
    return kept


def osculating_model(w: WModel, extra_derivs: int,
                     tol: Tolerances = DEFAULT_TOL) -> WModel:
    """W with all sections differentiated up to `extra_derivs` more times;
    same degree window.

    For osculating-generated models the derivative budget at shift j is
    j + extra_derivs (the base already osculates); for plain lambda-span
    models it is extra_derivs at every shift.  The section list is pruned
    to a generating subset before any numeric work."""
    if w.generators is None:
        raise ValueError("osculating steps need exact generators")
    r, n = w.r, w.n
    secs = []
    orders = {}
    for L in w.generators:
        ders = [L]
        for _ in range(r - 1 + extra_derivs):
            nxt = ders[-1].derivative()
            ders.append(nxt)
        for j in range(r):
            budget = j + extra_derivs if w.osculating else extra_derivs
            for k in range(min(len(ders), budget + 1)):
                s = ders[k].shifted(j).truncated(r)
                if not s.is_zero():
                    secs.append(s)
                    orders[id(s)] = (k, j)
    secs = _prune_sections(secs, r, order_key=lambda s: orders[id(s)])
    fiber_fn = lambda z: _span_with_gap_check(
        [s.eval_quotient(z, r) for s in secs], r * n, tol, z)
    return WModel(n, r, fiber_fn, generators=w.generators, osculating=True,
                  sections=_section_vectors(secs, r),
                  name=f"{w.name}+G{extra_derivs}")


# -- the circle action and its invariant limit --------------------------------


def scale_action(w: WModel, s: complex, tol: Tolerances = DEFAULT_TOL) -> WModel:
    """The punctured-plane action: grade-k blocks scale by s^k."""
    if s == 0:
        raise ValueError("s must be nonzero")
    n, r = w.n, w.r
    weights = np.repeat(np.power(s, np.arange(r)), n)

    def fiber_fn(z, w=w):
        basis = w.fiber(z).space.basis
        return orthonormal_span(weights[:, None] * basis, tol,
                                ambient_dim=r * n)
    return WModel(n, r, fiber_fn, name=f"{w.name}*s")


def s1_invariant_limit(w: WModel, tol: Tolerances = DEFAULT_TOL) -> WModel:
    """The graded model sum_i lambda^i delta_{i+1} + lambda^r H_+."""
    n, r = w.n, w.r

    def fiber_fn(z, w=w):
        deltas = delta_subspaces(w, z, tol)
        cols = []
        for i in range(r):
            d = deltas[i]
            block = np.zeros((r * n, d.rank), dtype=np.complex128)
            block[i * n:(i + 1) * n, :] = d.basis
            cols.append(block)
        return orthonormal_span(np.hstack(cols), tol, ambient_dim=r * n)
    return WModel(n, r, fiber_fn, name=f"{w.name}.limit")


# -- symmetry tests ------------------------------------------------------------


def _reversal(n: int, r: int) -> np.ndarray:
    """Block permutation v_k -> v_{r-1-k}."""
    m = r * n
    p = np.zeros((m, m))
    for k in range(r):
        p[(r - 1 - k) * n:(r - k) * n, k * n:(k + 1) * n] = np.eye(n)
    return p


def shifted_pairing_gram(space: Subspace, n: int, r: int,
                         skew: bool = False) -> np.ndarray:
    """Gram matrix of <v, w>_s = sum_k <v_k, w_{r-1-k}> on the fiber, with the
    plain symmetric form per block, or the skew form when ``skew``."""
    rev = _reversal(n, r)
    mid = rev if not skew else np.kron(np.eye(r), -standard_j(n)) @ rev
    return space.basis.T @ mid @ space.basis


def perp_shifted(space: Subspace, n: int, r: int, skew: bool = False,
                 tol: Tolerances = DEFAULT_TOL) -> Subspace:
    """The annihilator of the fiber under the shifted pairing."""
    rev = _reversal(n, r)
    mid = rev if not skew else np.kron(np.eye(r), -standard_j(n)) @ rev
    rows = (mid @ space.basis).T  # <x, w>_s = row . x per basis column w
    return orthonormal_span(rows.conj().T, tol, ambient_dim=r * n).perp(tol)


def involution_dual(w_fiber: Subspace, n: int, r: int,
                    tol: Tolerances = DEFAULT_TOL) -> Subspace:
    """The duality-involution fiber: the shifted-pairing annihilator
    (lambda^{r-1} times the conjugate-orthogonal model)."""
    return perp_shifted(w_fiber, n, r, skew=False, tol=tol)


def nu_flip(space: Subspace, n: int, r: int) -> Subspace:
    signs = np.repeat((-1.0) ** np.arange(r), n)
    return Subspace(space.ambient_dim, signs[:, None] * space.basis)


def symmetry_tests(w: WModel, z: complex,
                   tol: Tolerances = DEFAULT_TOL) -> dict:
    """Residual record for the degree-r reality, nu, symplectic and duality
    structures of the fiber at z."""
    f = w.fiber(z)
    n, r = w.n, w.r
    space = f.space
    out: dict[str, float] = {}
    gram = shifted_pairing_gram(space, n, r, skew=False)
    out["real_gram"] = float(np.linalg.norm(gram, 2)) if gram.size else 0.0
    out["real_dim_defect"] = abs(2 * space.rank - n * r)
    dual = involution_dual(space, n, r, tol)
    out["real_perp_distance"] = subspace_distance(space, dual)
    out["involution_roundtrip"] = subspace_distance(
        space, involution_dual(dual, n, r, tol))
    out["nu"] = subspace_distance(space, nu_flip(space, n, r))
    if n % 2 == 0:
        sgram = shifted_pairing_gram(space, n, r, skew=True)
        out["symplectic_gram"] = float(np.linalg.norm(sgram, 2)) if sgram.size else 0.0
        sdual = perp_shifted(space, n, r, skew=True, tol=tol)
        out["symplectic_perp_distance"] = subspace_distance(space, sdual)
    return out


# -- extended-solution residuals ----------------------------------------------


def extended_solution_defect(w: WModel, z: complex,
                             tol: Tolerances = DEFAULT_TOL) -> dict:
    """Residuals of the two closure conditions on the spanning sections:
    dbar sigma must stay in the fiber, and so must lambda d_z sigma.
    Derivatives are central differences with step fd_step."""
    if w.sections is None:
        raise ValueError("model carries no section frames")
    h = tol.fd_step
    try:
        for dz in (h, -h, 1j * h, -1j * h):
            w.fiber(z + dz)
        proj = w.fiber(z).space
    except SingularPoint as exc:
        raise SingularNeighborhood(z, "singular finite-difference stencil") from exc
    shift = shift_matrix(w.n, w.r)
    dbar_res = 0.0
    f_res = 0.0
    for sec in w.sections:
        vx = (sec(z + h) - sec(z - h)) / (2 * h)
        vy = (sec(z + 1j * h) - sec(z - 1j * h)) / (2 * h)
        d_z = 0.5 * (vx - 1j * vy)
        d_zbar = 0.5 * (vx + 1j * vy)
        scale = max(np.linalg.norm(sec(z)), 1.0)
        rem_b = d_zbar - proj.basis @ (proj.basis.conj().T @ d_zbar)
        dbar_res = max(dbar_res, float(np.linalg.norm(rem_b)) / scale)
        fv = shift @ d_z
        rem_f = fv - proj.basis @ (proj.basis.conj().T @ fv)
        f_res = max(f_res, float(np.linalg.norm(rem_f)) / scale)
    return {"dbar_res": dbar_res, "F_res": f_res}


# -- the sample grid ----------------------------------------------------------


def sample_grid(rings: Sequence[float] = (0.3, 0.7, 1.3, 2.1),
                per_ring: int = 64, extra_random: int = 16,
                seed: int = GRID_SEED) -> list[complex]:
    """Deterministic grid: concentric rings plus seeded random points.

    Ring angles are uniform with a half-step offset, keeping the grid off
    the real and imaginary axes where conjugation-symmetric data degenerates
    coincidentally."""
    pts: list[complex] = []
    for rho in rings:
        for k in range(per_ring):
            theta = 2 * np.pi * (k + 0.5) / per_ring
            pts.append(complex(rho * np.cos(theta), rho * np.sin(theta)))
    rng = np.random.default_rng(seed)
    for _ in range(extra_random):
        rho = rng.uniform(0.2, 2.2)
        theta = rng.uniform(0, 2 * np.pi)
        pts.append(complex(rho * np.cos(theta), rho * np.sin(theta)))
    return pts


def good_points(w: WModel, grid: Sequence[complex]) -> tuple[list[complex], list[complex]]:
    """Split the grid into usable and singular points for this model.

    A point is singular when a generator has a pole there, the rank gap is
    ambiguous, or the fiber dimension differs from the grid majority."""
    usable, singular, dims = [], [], {}
    for z in grid:
        try:
            dims[z] = w.fiber(z).space.rank
        except SingularPoint:
            singular.append(z)
    if not dims:
        return [], list(grid)
    counts: dict[int, int] = {}
    for d in dims.values():
        counts[d] = counts.get(d, 0) + 1
    generic = max(counts, key=counts.get)
    for z, d in dims.items():
        (usable if d == generic else singular).append(z)
    return usable, singular


def fiber_dump(w: WModel, points: Sequence[complex]) -> dict:
    """JSON-able fiber dump for debugging: per point, the orthonormal basis
    in the grade-major layout (grade-0 block first)."""
    entries = []
    for z in points:
        try:
            space = w.fiber(z).space
        except SingularPoint as exc:
            entries.append({"z": [z.real, z.imag], "singular": str(exc)})
            continue
        entries.append({
            "z": [z.real, z.imag],
            "rank": space.rank,
            "basis": [[[float(v.real), float(v.imag)] for v in col]
                      for col in space.basis.T],
        })
    return {"schema": "uniton-fibers/1", "n": w.n, "degree": w.r,
            "layout": "grade-major", "points": entries}
