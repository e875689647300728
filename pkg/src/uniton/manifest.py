"""Experiment manifests: one TOML file describes one model build.

Coefficients are exact: integers, decimal strings ("0.5", "1/3+2i") or
[re_num, re_den, im_num, im_den] quadruples; plain floats are rationalized
through their shortest decimal form at parse time.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

from .errors import InvariantViolation, ParseError
from .exactfun import (GaussianRational, LaurentSection, MeroVector, Poly,
                       RationalFun)
from .grassmodel import WModel, generate_W, lambda_span_W
from .numlin import DEFAULT_TOL, Tolerances

MODES = ("osculating", "lambda-span", "loop-columns")


@dataclass
class Manifest:
    name: str
    n: int
    r: int
    sections: list[tuple[str, LaurentSection]]
    mode: str = "osculating"
    strategy: str = "segal"
    expect_real: bool = False
    expect_nu: bool = False
    expect_symplectic: bool = False
    grid: dict = field(default_factory=dict)
    out_dir: str = "."

    def model(self, tol: Tolerances = DEFAULT_TOL) -> WModel:
        gens = [s for _, s in self.sections]
        if self.mode == "osculating":
            m = generate_W(gens, self.r, tol)
        elif self.mode in ("lambda-span", "loop-columns"):
            m = lambda_span_W(gens, self.r, tol)
        else:
            raise InvariantViolation(f"unknown mode {self.mode!r}")
        m.name = self.name
        return m

    def __eq__(self, other):
        if not isinstance(other, Manifest):
            return NotImplemented
        mine = [(k, s.terms) for k, s in self.sections]
        theirs = [(k, s.terms) for k, s in other.sections]
        return (self.name, self.n, self.r, self.mode, self.strategy,
                self.expect_real, self.expect_nu, self.expect_symplectic,
                self.grid, mine) == \
               (other.name, other.n, other.r, other.mode, other.strategy,
                other.expect_real, other.expect_nu, other.expect_symplectic,
                other.grid, theirs)


def _coeff_from_obj(obj) -> GaussianRational:
    try:
        return GaussianRational.parse(obj)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"bad coefficient {obj!r}: {exc}") from exc


def _rf_from_obj(obj) -> RationalFun:
    if isinstance(obj, dict):
        extra = set(obj) - {"num", "den"}
        if extra:
            raise ParseError(f"unknown rational-function fields {extra}")
        num = Poly([_coeff_from_obj(c) for c in obj.get("num", [])])
        den = Poly([_coeff_from_obj(c) for c in obj.get("den", [[1, 1, 0, 1]])])
        if den.is_zero():
            raise InvariantViolation("zero denominator in manifest")
        return RationalFun(num, den)
    return RationalFun(Poly([_coeff_from_obj(obj)]))


def _section_from_obj(obj, n: int, r: int, where: str,
                      allow_power_eq_r: bool = False) -> LaurentSection:
    terms = {}
    bound = r + 1 if allow_power_eq_r else r
    for term in obj.get("terms", []):
        if "power" not in term or "vector" not in term:
            raise ParseError(f"{where}: each term needs power and vector")
        power = term["power"]
        if not isinstance(power, int) or power < 0:
            raise ParseError(f"{where}: power must be a nonnegative integer")
        if power >= bound:
            raise InvariantViolation(
                f"{where}: lambda-power {power} >= {bound}")
        vec = term["vector"]
        if len(vec) != n:
            raise InvariantViolation(
                f"{where}: vector has length {len(vec)}, expected n = {n}")
        terms[power] = MeroVector([_rf_from_obj(e) for e in vec])
    if not terms:
        raise ParseError(f"{where}: section has no terms")
    return LaurentSection(terms, n)


def manifest_from_obj(data: dict) -> Manifest:
    for key in ("n", "r"):
        if key not in data:
            raise ParseError(f"manifest missing field {key!r}")
        if not isinstance(data[key], int) or data[key] <= 0:
            raise ParseError(f"field {key!r} must be a positive integer")
    mode = data.get("mode", "osculating")
    if mode not in MODES:
        raise ParseError(f"mode must be one of {MODES}")
    n, r = data["n"], data["r"]
    sections = []
    for k, sec in enumerate(data.get("sections", [])):
        name = sec.get("name", f"L{k + 1}")
        sections.append((name, _section_from_obj(
            sec, n, r, f"section {name}",
            allow_power_eq_r=(mode == "loop-columns"))))
    if not sections:
        raise ParseError("manifest declares no sections")
    sym = data.get("symmetry", {})
    return Manifest(
        name=data.get("name", "experiment"),
        n=n, r=r, sections=sections, mode=mode,
        strategy=data.get("strategy", "segal"),
        expect_real=bool(sym.get("expect_real", False)),
        expect_nu=bool(sym.get("expect_nu", False)),
        expect_symplectic=bool(sym.get("expect_symplectic", False)),
        grid=dict(data.get("grid", {})),
        out_dir=data.get("out_dir", "."),
    )


def parse_manifest(path: str) -> Manifest:
    try:
        with open(path, "rb") as fh:
            data = _toml.load(fh)
    except FileNotFoundError:
        raise ParseError(f"no such manifest: {path}")
    except _toml.TOMLDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return manifest_from_obj(data)


def parse_manifest_text(text: str) -> Manifest:
    try:
        data = _toml.loads(text)
    except _toml.TOMLDecodeError as exc:
        raise ParseError(str(exc)) from exc
    return manifest_from_obj(data)


# -- canonical serialization -----------------------------------------------------


def _quad_str(c: GaussianRational) -> str:
    q = c.to_quad()
    return "[" + ", ".join(str(x) for x in q) + "]"


def _rf_str(f: RationalFun) -> str:
    num = ", ".join(_quad_str(c) for c in f.num.coeffs) or "[0, 1, 0, 1]"
    den = ", ".join(_quad_str(c) for c in f.den.coeffs)
    return f"{{num = [{num}], den = [{den}]}}"


def serialize_manifest(m: Manifest) -> str:
    lines = [
        f'name = "{m.name}"',
        f"n = {m.n}",
        f"r = {m.r}",
        f'mode = "{m.mode}"',
        f'strategy = "{m.strategy}"',
        f'out_dir = "{m.out_dir}"',
        "",
        "[symmetry]",
        f"expect_real = {str(m.expect_real).lower()}",
        f"expect_nu = {str(m.expect_nu).lower()}",
        f"expect_symplectic = {str(m.expect_symplectic).lower()}",
    ]
    if m.grid:
        lines += ["", "[grid]"]
        for k, v in sorted(m.grid.items()):
            if isinstance(v, (list, tuple)):
                lines.append(f"{k} = [{', '.join(str(x) for x in v)}]")
            else:
                lines.append(f"{k} = {v}")
    for name, sec in m.sections:
        lines += ["", "[[sections]]", f'name = "{name}"']
        for power, vec in sorted(sec.terms.items()):
            lines += ["", "[[sections.terms]]", f"power = {power}"]
            entries = ",\n    ".join(_rf_str(e) for e in vec.entries)
            lines.append(f"vector = [\n    {entries},\n]")
    return "\n".join(lines) + "\n"


def builtin_manifest(name: str) -> Manifest:
    """Manifest equivalent of a corpus example."""
    from .corpus import builtin_examples
    ex = builtin_examples()[name]
    mode, gens = ex.sections()
    return Manifest(
        name=ex.name, n=ex.n, r=ex.r,
        sections=[(f"L{k + 1}", g) for k, g in enumerate(gens)],
        mode=mode, strategy=ex.strategies[0],
        expect_real=ex.expect_real, expect_nu=ex.expect_nu,
        expect_symplectic=ex.expect_symplectic)
