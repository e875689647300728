"""Command line: manifest-driven builds, certificates, splittings and exports.

Exit codes: 0 success, 2 certificate failure (with --strict), 3 input error,
4 numerical degeneracy (not enough usable grid points).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile

import numpy as np

from .errors import ParseError, InvariantViolation, UnitonError
from .factorize import (FiltrationSpec, extract_unitons_generic,
                        gauss_chain_length, iwasawa)
from .grassmodel import (delta_subspaces, good_points, s1_invariant_limit,
                         sample_grid, scale_action)
from .loopalg import LoopFamily, LoopMatrix, loop_eval
from .manifest import (Manifest, builtin_manifest, parse_manifest,
                       serialize_manifest)
from .numlin import Tolerances, subspace_distance
from .verify import Report, run_suite

EXIT_OK = 0
EXIT_CERT = 2
EXIT_INPUT = 3
EXIT_DEGENERATE = 4


def _atomic_write(path: str, text: str):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".",
                               prefix=".uniton-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _resolve_manifest(spec: str) -> Manifest:
    from .corpus import builtin_examples
    if spec.startswith("builtin:"):
        spec = spec[len("builtin:"):]
    if os.path.exists(spec):
        return parse_manifest(spec)
    if spec in builtin_examples():
        return builtin_manifest(spec)
    raise ParseError(f"{spec!r} is neither a manifest file nor a builtin name")


def _grid_from_args(args, manifest: Manifest | None = None):
    overrides = dict(manifest.grid) if manifest is not None else {}
    if args.grid is not None:
        overrides["per_ring"] = max(1, args.grid // 4)
    if args.seed is not None:
        overrides["seed"] = int(args.seed, 0)
    keys = {k: overrides[k] for k in ("rings", "per_ring", "extra_random",
                                      "seed") if k in overrides}
    return sample_grid(**keys)


def _subspace_obj(sub):
    return [[[float(v.real), float(v.imag)] for v in col]
            for col in sub.basis.T]


def _chain_json(chain, points, certificates=None):
    unitons = []
    for i in range(1, chain.length + 1):
        entries = []
        for z in points:
            try:
                sub = chain.uniton_at(z, i)
            except UnitonError:
                continue
            entries.append({"z": [z.real, z.imag],
                            "rank": sub.rank,
                            "basis": _subspace_obj(sub)})
        unitons.append({"index": i, "points": entries})
    return {
        "schema": "uniton-chain/1",
        "strategy": chain.spec.name,
        "n": chain.n,
        "model_degree": chain.w.r,
        "length": chain.length,
        "certificates": certificates or {},
        "unitons": unitons,
    }


def _spec_for(manifest: Manifest, model, strategy: str | None, tol):
    name = strategy or manifest.strategy
    if name == "gauss":
        return FiltrationSpec.gauss(gauss_chain_length(model, tol))
    return FiltrationSpec.parse(name, model.r)


def cmd_factor(args, tol) -> int:
    manifest = _resolve_manifest(args.input)
    model = manifest.model(tol)
    grid = _grid_from_args(args, manifest)
    usable, singular = good_points(model, grid)
    if len(usable) < 0.8 * len(grid):
        print(f"degenerate: only {len(usable)}/{len(grid)} usable points",
              file=sys.stderr)
        return EXIT_DEGENERATE
    spec = _spec_for(manifest, model, args.strategy, tol)
    chain = extract_unitons_generic(model, spec, tol)
    report = run_suite(_example_view(manifest), strategy=spec.name
                       if not spec.is_gauss else "gauss", tol=tol, grid=grid)
    out = args.out or manifest.out_dir
    base = os.path.join(out, manifest.name)
    certs = {name: check.to_obj() for name, check in report.checks.items()}
    payload = _chain_json(chain, usable[::4], certificates=certs)
    from .grassmodel import fiber_dump
    payload["model_fibers"] = fiber_dump(model, usable[::max(1, len(usable) // 8)])
    _atomic_write(base + ".chain.json", json.dumps(payload, indent=1))
    _atomic_write(base + ".report.json",
                  json.dumps(report.to_obj(), indent=1))
    print(f"wrote {base}.chain.json and {base}.report.json")
    return _report_exit(report, args.strict)


class _ExampleView:
    """Adapter letting run_suite consume a manifest like a corpus example."""

    def __init__(self, manifest: Manifest):
        self.name = manifest.name
        self.expect_real = manifest.expect_real
        self.expect_nu = manifest.expect_nu
        self.expect_symplectic = manifest.expect_symplectic
        self._manifest = manifest

    def model(self, tol):
        return self._manifest.model(tol)


def _example_view(manifest: Manifest) -> _ExampleView:
    return _ExampleView(manifest)


def _report_exit(report: Report, strict: bool) -> int:
    if strict and not report.overall:
        return EXIT_CERT
    return EXIT_OK


def cmd_verify(args, tol) -> int:
    manifest = _resolve_manifest(args.input)
    grid = _grid_from_args(args, manifest)
    strategy = args.strategy or manifest.strategy
    report = run_suite(_example_view(manifest), strategy=strategy, tol=tol,
                       grid=grid)
    out = args.out or manifest.out_dir
    base = os.path.join(out, manifest.name)
    _atomic_write(base + ".report.json", json.dumps(report.to_obj(), indent=1))
    for name, check in report.checks.items():
        state = "pass" if check.passed else "FAIL"
        print(f"{state:4s} {name:28s} max={check.max_residual:.3e} "
              f"thr={check.threshold:.1e} ({check.points_passed}/{check.points_tested})")
    print(f"wrote {base}.report.json; overall: "
          f"{'pass' if report.overall else 'FAIL'}")
    if len(report.singular_points) > 0.2 * report.grid_size:
        return EXIT_DEGENERATE
    return _report_exit(report, args.strict)


def _family_from_manifest(manifest: Manifest, tol) -> LoopFamily:
    """Interpret the manifest's sections as the columns of a loop family."""
    if len(manifest.sections) != manifest.n:
        raise InvariantViolation(
            "loop-columns mode needs exactly n sections (the columns)")
    cols = [s for _, s in manifest.sections]

    def at(z):
        coeffs = {}
        for j, sec in enumerate(cols):
            for power, vec in sec.terms.items():
                block = coeffs.setdefault(
                    power, np.zeros((manifest.n, manifest.n),
                                    dtype=np.complex128))
                block[:, j] = vec(z)
        return LoopMatrix(manifest.n, coeffs, trim=False)
    hi = max(p for _, s in manifest.sections for p in s.terms)
    return LoopFamily(manifest.n, 0, hi, at)


def cmd_iwasawa(args, tol) -> int:
    manifest = _resolve_manifest(args.input)
    psi = _family_from_manifest(manifest, tol)
    spec = None
    if args.strategy:
        spec = FiltrationSpec.parse(args.strategy, psi.hi)
    res = iwasawa(psi, spec=spec, tol=tol)
    out = args.out or manifest.out_dir
    base = os.path.join(out, manifest.name)
    payload = {"schema": "uniton-iwasawa/1", "report": res.report}
    zs = sample_grid(per_ring=4, extra_random=2)[:8]
    dumps = []
    for z in zs:
        try:
            lu = res.phi_u(z)
            lp = res.phi_plus(z)
        except UnitonError:
            continue
        dumps.append({
            "z": [z.real, z.imag],
            "phi_u": {str(k): [[ [v.real, v.imag] for v in row] for row in m]
                      for k, m in lu.coeffs.items()},
            "phi_plus": {str(k): [[ [v.real, v.imag] for v in row] for row in m]
                         for k, m in lp.coeffs.items()},
        })
    payload["samples"] = dumps
    _atomic_write(base + ".iwasawa.json", json.dumps(payload, indent=1))
    ok = (res.report["neg_mass"] < 1e-8
          and res.report["unitarity"] < 1e-9
          and res.report["product_residual"] < 1e-8)
    print(f"wrote {base}.iwasawa.json; neg_mass={res.report['neg_mass']:.2e} "
          f"product={res.report['product_residual']:.2e}")
    return EXIT_OK if (ok or not args.strict) else EXIT_CERT


def cmd_limit_s1(args, tol) -> int:
    manifest = _resolve_manifest(args.input)
    model = manifest.model(tol)
    grid = _grid_from_args(args, manifest)
    usable, _ = good_points(model, grid)
    if not usable:
        return EXIT_DEGENERATE
    limit = s1_invariant_limit(model, tol)
    out = args.out or manifest.out_dir
    base = os.path.join(out, manifest.name)
    entries = []
    worst = 0.0
    for z in usable[::max(1, len(usable) // 16)]:
        deltas = delta_subspaces(limit, z, tol)
        dist = subspace_distance(model.fiber(z).space, limit.fiber(z).space)
        deformed = scale_action(model, 0.01, tol)
        ddist = subspace_distance(deformed.fiber(z).space,
                                  limit.fiber(z).space)
        worst = max(worst, ddist)
        entries.append({"z": [z.real, z.imag],
                        "delta_ranks": [d.rank for d in deltas],
                        "distance_to_limit": dist,
                        "deformed_s0.01_distance": ddist})
    payload = {"schema": "uniton-limit/1", "points": entries,
               "max_deformed_distance": worst}
    _atomic_write(base + ".limit.json", json.dumps(payload, indent=1))
    print(f"wrote {base}.limit.json; max s=0.01 distance {worst:.3e}")
    return EXIT_OK


def cmd_classify(args, tol) -> int:
    from .geomaps import classify_target, harmonic_map_from_chain
    manifest = _resolve_manifest(args.input)
    model = manifest.model(tol)
    grid = _grid_from_args(args, manifest)
    usable, _ = good_points(model, grid)
    if not usable:
        return EXIT_DEGENERATE
    spec = _spec_for(manifest, model, args.strategy, tol)
    chain = extract_unitons_generic(model, spec, tol)
    phi = harmonic_map_from_chain(chain)
    cls = classify_target(phi, usable[::max(1, len(usable) // 12)], tol)
    out = args.out or manifest.out_dir
    base = os.path.join(out, manifest.name)
    payload = {"schema": "uniton-classify/1", "label": cls.label,
               "memberships": cls.memberships,
               "residuals": {k: float(v) for k, v in cls.residuals.items()}}
    _atomic_write(base + ".classify.json", json.dumps(payload, indent=1))
    print(f"{manifest.name}: {cls.label}")
    return EXIT_OK


def cmd_export_grid(args, tol) -> int:
    manifest = _resolve_manifest(args.input)
    model = manifest.model(tol)
    grid = _grid_from_args(args, manifest)
    usable, _ = good_points(model, grid)
    if not usable:
        return EXIT_DEGENERATE
    spec = _spec_for(manifest, model, args.strategy, tol)
    chain = extract_unitons_generic(model, spec, tol)
    lams = [np.exp(2j * np.pi * k / 8) for k in range(8)]
    buf = io.StringIO()
    writer = csv.writer(buf)
    header = ["z_re", "z_im", "lambda_re", "lambda_im"]
    for a in range(model.n):
        for b in range(model.n):
            header += [f"m{a}{b}_re", f"m{a}{b}_im"]
    writer.writerow(header)
    for z in usable:
        try:
            lm = chain.loop_at(z)
        except UnitonError:
            continue
        for lam in lams:
            g = loop_eval(lm, lam)
            row = [z.real, z.imag, lam.real, lam.imag]
            for a in range(model.n):
                for b in range(model.n):
                    row += [g[a, b].real, g[a, b].imag]
            writer.writerow(row)
    out = args.out or manifest.out_dir
    base = os.path.join(out, manifest.name)
    _atomic_write(base + ".grid.csv", buf.getvalue())
    print(f"wrote {base}.grid.csv")
    return EXIT_OK


def cmd_examples(args, tol) -> int:
    from .corpus import builtin_examples
    exs = builtin_examples()
    if args.emit:
        if args.emit not in exs:
            print(f"no builtin named {args.emit!r}", file=sys.stderr)
            return EXIT_INPUT
        text = serialize_manifest(builtin_manifest(args.emit))
        if args.out:
            path = os.path.join(args.out, f"{args.emit}.toml")
            _atomic_write(path, text)
            print(f"wrote {path}")
        else:
            print(text, end="")
        return EXIT_OK
    for name, ex in exs.items():
        flags = "".join(c for c, on in
                        (("R", ex.expect_real), ("N", ex.expect_nu),
                         ("J", ex.expect_symplectic),
                         ("S", ex.expect_s1_invariant)) if on)
        print(f"{name:26s} n={ex.n} r={ex.r} [{flags:4s}] {ex.doc}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="uniton",
        description="factorize, verify and classify finite-uniton-number "
                    "models of harmonic maps")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, needs_input=True):
        if needs_input:
            sp.add_argument("--input", required=True,
                            help="manifest path or builtin example name")
        sp.add_argument("--strategy", default=None,
                        help="segal | uhlenbeck | alternating-u-first | "
                             "alternating-s-first | gauss | schedule:<word>")
        sp.add_argument("--grid", type=int, default=None,
                        help="total ring points (split over four rings)")
        sp.add_argument("--seed", default=None, help="grid seed (int or hex)")
        sp.add_argument("--strict", action="store_true",
                        help="nonzero exit on any failed certificate")
        sp.add_argument("--out", default=None, help="output directory")

    common(sub.add_parser("factor", help="extract a factorization"))
    common(sub.add_parser("verify", help="run the certificate suite"))
    common(sub.add_parser("iwasawa",
                          help="split loop columns into unitary and plus parts"))
    common(sub.add_parser("limit-s1", help="grading-invariant limit data"))
    common(sub.add_parser("classify", help="target-space classification"))
    common(sub.add_parser("export-grid", help="loop evaluation grid as CSV"))
    ex = sub.add_parser("examples", help="list or emit builtin examples")
    ex.add_argument("--list", action="store_true", default=False)
    ex.add_argument("--emit", default=None, metavar="NAME")
    ex.add_argument("--out", default=None)
    return p


COMMANDS = {
    "factor": cmd_factor,
    "verify": cmd_verify,
    "iwasawa": cmd_iwasawa,
    "limit-s1": cmd_limit_s1,
    "classify": cmd_classify,
    "export-grid": cmd_export_grid,
    "examples": cmd_examples,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    tol = Tolerances.from_env()
    try:
        code = COMMANDS[args.command](args, tol)
    except (ParseError, InvariantViolation) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except UnitonError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    return code


if __name__ == "__main__":
    sys.exit(main())
