"""Verification harness: the harmonic-map equation test on loop families,
filtration and uniton certificates, negative controls, and consolidated
reports with one threshold record."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import SingularPoint
from .factorize import (FiltrationSpec, UnitonChain, extract_unitons_generic,
                        gauss_chain_length, loop_fiber)
from .fdcalc import a_z_field, a_zbar_field, d_dz, d_dz_richardson, d_dzbar
from .grassmodel import (WModel, good_points, sample_grid, shift_matrix,
                         step, symmetry_tests)
from .loopalg import LoopFamily, loop_eval
from .numlin import DEFAULT_TOL, Subspace, Tolerances, contains, \
    orthonormal_span, subspace_distance

REPORT_SCHEMA = "uniton-report/1"


@dataclass
class CheckEntry:
    points_tested: int
    points_passed: int
    max_residual: float
    threshold: float

    @property
    def passed(self) -> bool:
        return (self.points_tested > 0
                and self.points_passed == self.points_tested)

    def to_obj(self):
        return {"points_tested": self.points_tested,
                "points_passed": self.points_passed,
                "max_residual": self.max_residual,
                "threshold": self.threshold,
                "passed": self.passed}


@dataclass
class Report:
    checks: dict[str, CheckEntry] = field(default_factory=dict)
    singular_points: list[complex] = field(default_factory=list)
    labels: dict[str, str] = field(default_factory=dict)
    grid_size: int = 0

    @property
    def overall(self) -> bool:
        return all(c.passed for c in self.checks.values()) and \
            (self.grid_size == 0 or
             self.grid_size - len(self.singular_points) >= 0.8 * self.grid_size)

    def to_obj(self):
        return {
            "schema": REPORT_SCHEMA,
            "overall": self.overall,
            "grid_size": self.grid_size,
            "singular_points": [[z.real, z.imag] for z in self.singular_points],
            "labels": self.labels,
            "checks": {k: v.to_obj() for k, v in self.checks.items()},
        }


_UNIT_CIRCLE_8 = [np.exp(2j * np.pi * (k + 0.5) / 8) for k in range(8)]


def _pde_residual_at(family: LoopFamily, z: complex, tol: Tolerances,
                     richardson: bool = False) -> float:
    """Deviation of Phi^{-1} d_z Phi from the (1 - 1/lambda) shape across
    circle samples, plus the conjugate test with the (1 - lambda) shape."""
    dz_op = d_dz_richardson if richardson else d_dz
    worst = 0.0
    a_samples, b_samples = [], []
    for lam in _UNIT_CIRCLE_8:
        phi_l = lambda zz, lam=lam: loop_eval(family(zz), lam)
        g = phi_l(z)
        dg = dz_op(phi_l, z, tol.fd_step)
        d = np.linalg.solve(g, dg)
        a_samples.append(d / (1.0 - 1.0 / lam))
        fx = (phi_l(z + tol.fd_step) - phi_l(z - tol.fd_step)) / (2 * tol.fd_step)
        fy = (phi_l(z + 1j * tol.fd_step) - phi_l(z - 1j * tol.fd_step)) / (2 * tol.fd_step)
        dgb = 0.5 * (fx + 1j * fy)
        db = np.linalg.solve(g, dgb)
        b_samples.append(db / (1.0 - lam))
    for samples in (a_samples, b_samples):
        scale = max(max(np.linalg.norm(s) for s in samples), 1e-8)
        ref = samples[0]
        for s in samples[1:]:
            worst = max(worst, float(np.linalg.norm(s - ref)) / scale)
    return worst


def pde_check(family: LoopFamily, points: Sequence[complex],
              tol: Tolerances = DEFAULT_TOL) -> CheckEntry:
    """The harmonic-map equation, tested through the lambda-shape of the
    logarithmic derivative at eight circle values; central differences with a
    Richardson retry when a point lands within 10x of the threshold."""
    tested = passed = 0
    worst = 0.0
    for z in points:
        try:
            res = _pde_residual_at(family, z, tol)
            if tol.pde_rel <= res < 10 * tol.pde_rel:
                res = min(res, _pde_residual_at(family, z, tol, richardson=True))
        except (SingularPoint, np.linalg.LinAlgError):
            continue
        tested += 1
        worst = max(worst, res)
        if res < tol.pde_rel:
            passed += 1
    return CheckEntry(tested, passed, worst, tol.pde_rel)


def filtration_certificate(chain: UnitonChain, points: Sequence[complex],
                           tol: Tolerances = DEFAULT_TOL) -> CheckEntry:
    """Containment residuals of the chain's stages (lambda W_{i-1} inside W_i
    inside W_{i-1}) and the extremal sandwich against fresh nested-step and
    intersection-step stages."""
    w = chain.w
    length = chain.length
    window = chain.window
    models = getattr(chain, "stage_models", None)
    if models is None:
        raise ValueError("chain carries no stage models")
    seg_stages = [w]
    uhl_stages = [w]
    for _ in range(w.r):
        seg_stages.append(step(seg_stages[-1], "segal", tol))
        uhl_stages.append(step(uhl_stages[-1], "uhlenbeck", tol))
    sh = shift_matrix(w.n, window)
    tested = passed = 0
    worst = 0.0
    for z in points:
        try:
            fibers = [m.fiber_space(z, window) for m in models]
            segs = [m.fiber_space(z, window) for m in seg_stages]
            uhls = [m.fiber_space(z, window) for m in uhl_stages]
        except SingularPoint:
            continue
        res = 0.0
        for j in range(1, len(fibers)):
            # one lambda-step: lambda . stage_j inside stage_{j-1} inside stage_j
            _, r1 = contains(fibers[j], fibers[j - 1], tol)
            shifted = orthonormal_span(sh @ fibers[j].basis, tol,
                                       ambient_dim=window * w.n)
            _, r2 = contains(fibers[j - 1], shifted, tol)
            res = max(res, r1, r2)
        if not chain.spec.is_gauss:
            for j in range(len(fibers)):
                _, r3 = contains(fibers[j], segs[j], tol)
                _, r4 = contains(uhls[j], fibers[j], tol)
                res = max(res, r3, r4)
        tested += 1
        worst = max(worst, res)
        if res < tol.contain_res:
            passed += 1
    return CheckEntry(tested, passed, worst, tol.contain_res)


def uniton_certificate(chain: UnitonChain, points: Sequence[complex],
                       tol: Tolerances = DEFAULT_TOL,
                       threshold: float | None = None) -> CheckEntry:
    """Per-uniton closure under the half Maurer-Cartan z-part and
    holomorphy with respect to the induced dbar operator, by central
    differences of the partial maps.

    The default threshold is the finite-difference equation tolerance;
    negative controls sit two orders of magnitude above it."""
    threshold = tol.pde_rel if threshold is None else threshold
    tested = passed = 0
    worst = 0.0
    h = tol.fd_step
    for z in points:
        try:
            pc = chain.point(z)
            res = 0.0
            for i in range(1, chain.length + 1):
                phi_prev = lambda zz, i=i: chain.phi_at(zz, i - 1)
                az = a_z_field(phi_prev, z, h)
                azb = a_zbar_field(phi_prev, z, h)
                p = pc.alphas[i - 1].projector()
                q = np.eye(chain.n) - p
                scale = max(float(np.linalg.norm(az)), 1.0)
                res = max(res, float(np.linalg.norm(q @ az @ p)) / scale)
                pi_fun = lambda zz, i=i: chain.uniton_at(zz, i).projector()
                dbar_p = d_dzbar(pi_fun, z, h)
                res = max(res, float(np.linalg.norm(q @ (dbar_p + azb @ p)))
                          / max(1.0, float(np.linalg.norm(azb))))
        except (SingularPoint, np.linalg.LinAlgError):
            continue
        tested += 1
        worst = max(worst, res)
        if res < threshold:
            passed += 1
    return CheckEntry(tested, passed, worst, threshold)


def reconstruction_check(chain: UnitonChain, points: Sequence[complex],
                         tol: Tolerances = DEFAULT_TOL) -> tuple[CheckEntry, list[complex]]:
    """Fiber distance between the factor product's model and the source."""
    tested = passed = 0
    worst = 0.0
    skipped: list[complex] = []
    for z in points:
        try:
            target = chain.w.fiber_space(z, chain.window)
            got = loop_fiber(chain.loop_at(z), chain.window, tol)
        except SingularPoint:
            skipped.append(z)
            continue
        d = subspace_distance(got, target)
        tested += 1
        worst = max(worst, d)
        if d < tol.contain_res:
            passed += 1
    return CheckEntry(tested, passed, worst, tol.contain_res), skipped


def unitarity_check(chain: UnitonChain, points: Sequence[complex],
                    threshold: float = 1e-10,
                    n_lambda: int = 32) -> CheckEntry:
    """Unitarity of the reconstructed loop at roots of unity."""
    lams = [np.exp(2j * np.pi * k / n_lambda) for k in range(n_lambda)]
    tested = passed = 0
    worst = 0.0
    eye = np.eye(chain.n)
    for z in points:
        try:
            lm = chain.loop_at(z)
        except SingularPoint:
            continue
        res = 0.0
        for lam in lams:
            g = loop_eval(lm, lam)
            res = max(res, float(np.linalg.norm(g.conj().T @ g - eye)))
        tested += 1
        worst = max(worst, res)
        if res < threshold:
            passed += 1
    return CheckEntry(tested, passed, worst, threshold)


# -- negative controls -----------------------------------------------------------


def _nonholomorphic_rotation(n: int, z: complex, amplitude: float) -> np.ndarray:
    """A z- and zbar-dependent unitary rotation (breaks holomorphy on purpose)."""
    theta = amplitude * np.sin(z.real) * np.cos(2.0 * z.imag)
    herm = np.zeros((n, n), dtype=np.complex128)
    herm[0, -1] = 1.0
    herm[-1, 0] = 1.0
    herm[0, 0] = 0.5
    vals, vecs = np.linalg.eigh(herm)
    return vecs @ np.diag(np.exp(1j * theta * vals)) @ vecs.conj().T


class PerturbedChain:
    """A chain with one uniton rotated non-holomorphically: a documented
    negative control that must fail the equation and closure tests."""

    def __init__(self, chain: UnitonChain, which: int, amplitude: float = 0.5):
        self.base = chain
        self.which = which
        self.amplitude = amplitude
        self.n = chain.n
        self.length = chain.length
        self.spec = chain.spec
        self.w = chain.w
        self.window = chain.window
        self.name = f"{chain.name}+perturbed"

    def _alphas(self, z: complex) -> list[Subspace]:
        rot = _nonholomorphic_rotation(self.n, z, self.amplitude)
        alphas = list(self.base.point(z).alphas)
        i = self.which - 1
        alphas[i] = Subspace(self.n, rot @ alphas[i].basis)
        return alphas

    def point(self, z: complex):
        from .factorize import PointChain
        alphas = self._alphas(z)
        eye = np.eye(self.n, dtype=np.complex128)
        ts = [[eye]]
        for i, a in enumerate(alphas, start=1):
            p = a.projector()
            q = eye - p
            prev = ts[i - 1]
            nxt = [prev[0] @ p]
            for k in range(1, i):
                nxt.append(prev[k] @ p + prev[k - 1] @ q)
            nxt.append(prev[i - 1] @ q)
            ts.append(nxt)
        return PointChain(alphas, ts)

    def uniton_at(self, z, i):
        return self.point(z).alphas[i - 1]

    def loop_at(self, z, i=None):
        return self.point(z).loop(i)

    def phi_at(self, z, i=None):
        return self.point(z).phi(i)

    def family(self, i=None):
        i = self.length if i is None else i
        return LoopFamily(self.n, 0, i, lambda z: self.loop_at(z, i))


def perturbed_sections_model(w: WModel, amplitude: float = 0.1) -> WModel:
    """The model with every section frame multiplied by a zbar-dependent
    factor: a negative control for the holomorphy residual."""
    if w.sections is None:
        raise ValueError("model carries no section frames")

    def warp(sec):
        return lambda z: (1.0 + amplitude * np.conj(z)) * sec(z) \
            + amplitude * np.conj(z) * np.roll(sec(z), 1)
    out = WModel(w.n, w.r, w._fiber_fn, generators=w.generators,
                 osculating=w.osculating,
                 sections=[warp(s) for s in w.sections],
                 name=f"{w.name}+warped")
    return out


# -- suite composition -----------------------------------------------------------


def run_suite(example, strategy: str = "segal",
              tol: Tolerances = DEFAULT_TOL,
              grid: Sequence[complex] | None = None,
              pde_subsample: int = 4,
              with_classification: bool = True) -> Report:
    """generate -> extract -> reconstruct -> certificates -> classification
    for one example and one strategy; deterministic for a fixed grid."""
    if isinstance(example, str):
        from .corpus import builtin_examples
        example = builtin_examples()[example]
    model = example.model(tol)
    full_grid = list(grid) if grid is not None else sample_grid()
    usable, singular = good_points(model, full_grid)
    report = Report(grid_size=len(full_grid), singular_points=singular)
    report.labels["example"] = example.name
    report.labels["strategy"] = strategy
    if strategy == "gauss":
        spec = FiltrationSpec.gauss(gauss_chain_length(model, tol))
    else:
        spec = FiltrationSpec.parse(strategy, model.r)
    chain = extract_unitons_generic(model, spec, tol)
    recon, skipped = reconstruction_check(chain, usable, tol)
    report.checks["reconstruction"] = recon
    report.singular_points.extend(skipped)
    report.checks["unitarity"] = unitarity_check(chain, usable[::pde_subsample])
    report.checks["pde"] = pde_check(chain.family(), usable[::pde_subsample], tol)
    report.checks["filtration"] = filtration_certificate(
        chain, usable[::pde_subsample], tol)
    report.checks["unitons"] = uniton_certificate(
        chain, usable[::max(1, 2 * pde_subsample)], tol)
    if with_classification:
        from .geomaps import classify_target, harmonic_map_from_chain
        phi = harmonic_map_from_chain(chain)
        cls = classify_target(phi, usable[::max(1, len(usable) // 12)], tol)
        report.labels["target"] = cls.label
        for k, v in cls.memberships.items():
            report.labels[f"membership:{k}"] = v
    for flag, key in (("expect_real", "real_perp_distance"),
                      ("expect_nu", "nu"),
                      ("expect_symplectic", "symplectic_perp_distance")):
        if getattr(example, flag, False):
            worst = 0.0
            cnt = ok = 0
            for z in usable[::max(1, len(usable) // 12)]:
                try:
                    sym = symmetry_tests(model, z, tol)
                except SingularPoint:
                    continue
                cnt += 1
                worst = max(worst, sym[key])
                if sym[key] < tol.contain_res:
                    ok += 1
            report.checks[f"symmetry:{key}"] = CheckEntry(
                cnt, ok, worst, tol.contain_res)
    return report
