"""Exact arithmetic over Q(i)(z).

Coefficients are Gaussian rationals (pairs of ``fractions.Fraction``),
polynomials and rational functions are in one variable z, and vectors of
rational functions carry the two bilinear forms used by the isotropy tests:
the symmetric form sum_k v_k w_k and the skew form pairing coordinates
(2j-1, 2j).  Everything here is exact; numerics live in ``numlin``.

All values are immutable after construction and safe to share.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .errors import DimMismatch, OddDim, PoleAtPoint, ZeroSection

_ZERO = Fraction(0)
_ONE = Fraction(1)


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, float):
        # exact decimal rationalization: 0.5 -> 1/2, 0.1 -> 1/10
        return Fraction(repr(x))
    raise TypeError(f"cannot build an exact rational from {x!r}")


class GaussianRational:
    """An element of Q(i), kept in reduced form."""

    __slots__ = ("real", "imag")

    def __init__(self, real=0, imag=0):
        object.__setattr__(self, "real", _as_fraction(real))
        object.__setattr__(self, "imag", _as_fraction(imag))

    def __setattr__(self, *args):
        raise AttributeError("GaussianRational is immutable")

    @staticmethod
    def parse(x) -> "GaussianRational":
        """Accept ints, Fractions, decimal floats/strings, 'a+bi' strings,
        (re, im) pairs and [re_n, re_d, im_n, im_d] quadruples."""
        if isinstance(x, GaussianRational):
            return x
        if isinstance(x, (int, Fraction, float)):
            return GaussianRational(_as_fraction(x))
        if isinstance(x, complex):
            return GaussianRational(_as_fraction(x.real), _as_fraction(x.imag))
        if isinstance(x, str):
            return _parse_gaussian_string(x)
        if isinstance(x, (tuple, list)):
            if len(x) == 2:
                return GaussianRational(_as_fraction(x[0]), _as_fraction(x[1]))
            if len(x) == 4:
                return GaussianRational(Fraction(int(x[0]), int(x[1])),
                                        Fraction(int(x[2]), int(x[3])))
        raise TypeError(f"cannot parse Gaussian rational from {x!r}")

    def __add__(self, o):
        o = GaussianRational.parse(o)
        return GaussianRational(self.real + o.real, self.imag + o.imag)

    __radd__ = __add__

    def __neg__(self):
        return GaussianRational(-self.real, -self.imag)

    def __sub__(self, o):
        return self + (-GaussianRational.parse(o))

    def __rsub__(self, o):
        return GaussianRational.parse(o) + (-self)

    def __mul__(self, o):
        o = GaussianRational.parse(o)
        return GaussianRational(self.real * o.real - self.imag * o.imag,
                                self.real * o.imag + self.imag * o.real)

    __rmul__ = __mul__

    def inverse(self) -> "GaussianRational":
        n = self.real * self.real + self.imag * self.imag
        if n == 0:
            raise ZeroDivisionError("inverse of 0 in Q(i)")
        return GaussianRational(self.real / n, -self.imag / n)

    def __truediv__(self, o):
        return self * GaussianRational.parse(o).inverse()

    def __rtruediv__(self, o):
        return GaussianRational.parse(o) * self.inverse()

    def conjugate(self) -> "GaussianRational":
        return GaussianRational(self.real, -self.imag)

    def is_zero(self) -> bool:
        return self.real == 0 and self.imag == 0

    def __bool__(self):
        return not self.is_zero()

    def __eq__(self, o):
        try:
            o = GaussianRational.parse(o)
        except TypeError:
            return NotImplemented
        return self.real == o.real and self.imag == o.imag

    def __hash__(self):
        return hash((self.real, self.imag))

    def __complex__(self):
        return complex(float(self.real), float(self.imag))

    def __repr__(self):
        if self.imag == 0:
            return str(self.real)
        if self.real == 0:
            return f"{self.imag}i"
        sign = "+" if self.imag > 0 else "-"
        return f"{self.real}{sign}{abs(self.imag)}i"

    def to_quad(self):
        """[re_num, re_den, im_num, im_den] for serialization."""
        return [self.real.numerator, self.real.denominator,
                self.imag.numerator, self.imag.denominator]


def _parse_gaussian_string(s: str) -> GaussianRational:
    s = s.strip().replace(" ", "")
    if not s:
        raise TypeError("empty Gaussian rational literal")
    if "i" not in s and "j" not in s:
        return GaussianRational(Fraction(s))
    s = s.replace("j", "i")
    # split at the last top-level +/- that is not a leading sign or part of '/'
    for k in range(len(s) - 1, 0, -1):
        if s[k] in "+-" and s[k - 1] not in "+-/":
            head, tail = s[:k], s[k:]
            break
    else:
        head, tail = "", s
    def imag_part(t):
        t = t[:-1]  # strip 'i'
        if t in ("", "+"):
            return Fraction(1)
        if t == "-":
            return Fraction(-1)
        return Fraction(t)
    if tail.endswith("i"):
        re_part = Fraction(head) if head else Fraction(0)
        return GaussianRational(re_part, imag_part(tail))
    if head.endswith("i"):
        return GaussianRational(Fraction(tail), imag_part(head))
    raise TypeError(f"cannot parse Gaussian rational from {s!r}")


QI_ZERO = GaussianRational(0)
QI_ONE = GaussianRational(1)
QI_I = GaussianRational(0, 1)


class Poly:
    """Polynomial in z over Q(i), coefficients ascending, trailing nonzero."""

    __slots__ = ("coeffs", "_c128")

    def __init__(self, coeffs=()):
        cs = [GaussianRational.parse(c) for c in coeffs]
        while cs and cs[-1].is_zero():
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))
        object.__setattr__(self, "_c128", None)

    def __setattr__(self, *a):
        raise AttributeError("Poly is immutable")

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1  # -1 for the zero polynomial

    def is_zero(self) -> bool:
        return not self.coeffs

    def __bool__(self):
        return bool(self.coeffs)

    def leading(self) -> GaussianRational:
        return self.coeffs[-1] if self.coeffs else QI_ZERO

    def __add__(self, o):
        o = as_poly(o)
        n = max(len(self.coeffs), len(o.coeffs))
        return Poly([(self.coeffs[k] if k < len(self.coeffs) else QI_ZERO)
                     + (o.coeffs[k] if k < len(o.coeffs) else QI_ZERO)
                     for k in range(n)])

    __radd__ = __add__

    def __neg__(self):
        return Poly([-c for c in self.coeffs])

    def __sub__(self, o):
        return self + (-as_poly(o))

    def __rsub__(self, o):
        return as_poly(o) + (-self)

    def __mul__(self, o):
        o = as_poly(o)
        if self.is_zero() or o.is_zero():
            return P_ZERO
        out = [QI_ZERO] * (len(self.coeffs) + len(o.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a.is_zero():
                continue
            for j, b in enumerate(o.coeffs):
                out[i + j] = out[i + j] + a * b
        return Poly(out)

    __rmul__ = __mul__

    def scale(self, c: GaussianRational) -> "Poly":
        return Poly([c * a for a in self.coeffs])

    def divmod(self, d: "Poly"):
        if d.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        q = [QI_ZERO] * max(0, self.degree - d.degree + 1)
        r = list(self.coeffs)
        dl = d.leading().inverse()
        for k in range(len(r) - len(d.coeffs), -1, -1):
            c = r[k + d.degree] * dl
            if c.is_zero():
                continue
            q[k] = c
            for j, b in enumerate(d.coeffs):
                r[k + j] = r[k + j] - c * b
        return Poly(q), Poly(r)

    def __mod__(self, d):
        return self.divmod(as_poly(d))[1]

    def __floordiv__(self, d):
        return self.divmod(as_poly(d))[0]

    def monic(self) -> "Poly":
        if self.is_zero():
            return self
        return self.scale(self.leading().inverse())

    def derivative(self) -> "Poly":
        return Poly([GaussianRational(k) * c for k, c in enumerate(self.coeffs)][1:])

    def eval_exact(self, z: GaussianRational) -> GaussianRational:
        acc = QI_ZERO
        for c in reversed(self.coeffs):
            acc = acc * z + c
        return acc

    def coeffs_c128(self) -> np.ndarray:
        cached = object.__getattribute__(self, "_c128")
        if cached is None:
            cached = np.array([complex(c) for c in self.coeffs] or [0j],
                              dtype=np.complex128)
            object.__setattr__(self, "_c128", cached)
        return cached

    def __call__(self, z: complex) -> complex:
        acc = 0j
        for c in reversed(self.coeffs_c128()):
            acc = acc * z + c
        return acc

    def __eq__(self, o):
        try:
            o = as_poly(o)
        except TypeError:
            return NotImplemented
        return self.coeffs == o.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        if self.is_zero():
            return "0"
        parts = []
        for k, c in enumerate(self.coeffs):
            if c.is_zero():
                continue
            zs = "" if k == 0 else ("z" if k == 1 else f"z^{k}")
            parts.append(f"({c}){zs}" if zs else f"{c}")
        return " + ".join(parts)


P_ZERO = Poly()
P_ONE = Poly([1])
P_Z = Poly([0, 1])


def as_poly(x) -> Poly:
    if isinstance(x, Poly):
        return x
    if isinstance(x, (list, tuple)):
        return Poly(x)
    return Poly([GaussianRational.parse(x)])


def poly_gcd(a: Poly, b: Poly) -> Poly:
    """Monic gcd by the Euclidean algorithm."""
    while not b.is_zero():
        a, b = b, a % b
    return a.monic() if not a.is_zero() else P_ZERO


class RationalFun:
    """A rational function num/den over Q(i), reduced, denominator monic."""

    __slots__ = ("num", "den")

    def __init__(self, num, den=P_ONE):
        num, den = as_poly(num), as_poly(den)
        if den.is_zero():
            raise ZeroDivisionError("rational function with zero denominator")
        if num.is_zero():
            den = P_ONE
        else:
            g = poly_gcd(num, den)
            if g.degree > 0:
                num, den = num // g, den // g
            lead = den.leading().inverse()
            num, den = num.scale(lead), den.scale(lead)
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    def __setattr__(self, *a):
        raise AttributeError("RationalFun is immutable")

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def __bool__(self):
        return not self.is_zero()

    def is_polynomial(self) -> bool:
        return self.den.degree == 0

    def __add__(self, o):
        o = as_rf(o)
        return RationalFun(self.num * o.den + o.num * self.den, self.den * o.den)

    __radd__ = __add__

    def __neg__(self):
        return RationalFun(-self.num, self.den)

    def __sub__(self, o):
        return self + (-as_rf(o))

    def __rsub__(self, o):
        return as_rf(o) + (-self)

    def __mul__(self, o):
        o = as_rf(o)
        return RationalFun(self.num * o.num, self.den * o.den)

    __rmul__ = __mul__

    def __truediv__(self, o):
        o = as_rf(o)
        if o.is_zero():
            raise ZeroDivisionError("division by the zero rational function")
        return RationalFun(self.num * o.den, self.den * o.num)

    def __rtruediv__(self, o):
        return as_rf(o) / self

    def derivative(self) -> "RationalFun":
        if self.is_polynomial():
            return RationalFun(self.num.derivative())
        n, d = self.num, self.den
        return RationalFun(n.derivative() * d - n * d.derivative(), d * d)

    def __call__(self, z: complex) -> complex:
        d = self.den(z)
        if d == 0:
            raise PoleAtPoint(z)
        return self.num(z) / d

    def eval_exact(self, z: GaussianRational) -> GaussianRational:
        d = self.den.eval_exact(z)
        if d.is_zero():
            raise PoleAtPoint(z)
        return self.num.eval_exact(z) / d

    def __eq__(self, o):
        try:
            o = as_rf(o)
        except TypeError:
            return NotImplemented
        return self.num == o.num and self.den == o.den

    def __hash__(self):
        return hash((self.num, self.den))

    def __repr__(self):
        if self.is_polynomial():
            return repr(self.num)
        return f"({self.num})/({self.den})"

    def to_obj(self):
        """{"num": [...], "den": [...]} with coefficient quadruples."""
        return {"num": [c.to_quad() for c in self.num.coeffs],
                "den": [c.to_quad() for c in self.den.coeffs]}

    @staticmethod
    def from_obj(obj) -> "RationalFun":
        if isinstance(obj, dict):
            num = Poly([GaussianRational.parse(c) for c in obj["num"]])
            den = Poly([GaussianRational.parse(c) for c in obj.get("den", [1])])
            return RationalFun(num, den)
        return as_rf(obj)


RF_ZERO = RationalFun(P_ZERO)
RF_ONE = RationalFun(P_ONE)
RF_Z = RationalFun(P_Z)


def as_rf(x) -> RationalFun:
    if isinstance(x, RationalFun):
        return x
    if isinstance(x, Poly):
        return RationalFun(x)
    if isinstance(x, dict):
        return RationalFun.from_obj(x)
    return RationalFun(as_poly(x))


def rf(num, den=1) -> RationalFun:
    """Convenience constructor: rf([1, 2]) is 1 + 2z, rf(1, [0, 1]) is 1/z."""
    return RationalFun(as_poly(num), as_poly(den))


def rf_arith(a: RationalFun, b: RationalFun, kind: str) -> RationalFun:
    op = {"add": a.__add__, "sub": a.__sub__, "mul": a.__mul__,
          "div": a.__truediv__}[kind]
    return op(b)


def rf_derivative(f: RationalFun) -> RationalFun:
    return as_rf(f).derivative()


def rf_is_zero(f: RationalFun) -> bool:
    return as_rf(f).is_zero()


def evaluate(f: RationalFun, z: complex) -> complex:
    """Numeric evaluation; raises PoleAtPoint at roots of the denominator."""
    return as_rf(f)(z)


class MeroVector:
    """A vector of rational functions; the meromorphic sections of C^n."""

    __slots__ = ("entries",)

    def __init__(self, entries):
        object.__setattr__(self, "entries",
                           tuple(as_rf(e) for e in entries))

    def __setattr__(self, *a):
        raise AttributeError("MeroVector is immutable")

    @property
    def dim(self) -> int:
        return len(self.entries)

    def is_zero(self) -> bool:
        return all(e.is_zero() for e in self.entries)

    def __add__(self, o):
        o = as_mv(o)
        if o.dim != self.dim:
            raise DimMismatch(f"{self.dim} vs {o.dim}")
        return MeroVector([a + b for a, b in zip(self.entries, o.entries)])

    def __neg__(self):
        return MeroVector([-e for e in self.entries])

    def __sub__(self, o):
        return self + (-as_mv(o))

    def scale(self, c) -> "MeroVector":
        c = as_rf(c)
        return MeroVector([c * e for e in self.entries])

    def __rmul__(self, c):
        return self.scale(c)

    def derivative(self, k: int = 1) -> "MeroVector":
        v = self
        for _ in range(k):
            v = MeroVector([e.derivative() for e in v.entries])
        return v

    def __call__(self, z: complex) -> np.ndarray:
        return np.array([e(z) for e in self.entries], dtype=np.complex128)

    def __eq__(self, o):
        try:
            o = as_mv(o)
        except TypeError:
            return NotImplemented
        return self.entries == o.entries

    def __hash__(self):
        return hash(self.entries)

    def __repr__(self):
        return "(" + ", ".join(repr(e) for e in self.entries) + ")"


def as_mv(x) -> MeroVector:
    if isinstance(x, MeroVector):
        return x
    if isinstance(x, (list, tuple)):
        return MeroVector(x)
    raise TypeError(f"cannot build MeroVector from {x!r}")


def mv(*entries) -> MeroVector:
    return MeroVector(entries)


def bilinear_c(v: MeroVector, w: MeroVector) -> RationalFun:
    """Standard complex symmetric bilinear form: sum_k v_k w_k, no conjugation."""
    v, w = as_mv(v), as_mv(w)
    if v.dim != w.dim:
        raise DimMismatch(f"{v.dim} vs {w.dim}")
    acc = RF_ZERO
    for a, b in zip(v.entries, w.entries):
        acc = acc + a * b
    return acc


def omega_form(v: MeroVector, w: MeroVector) -> RationalFun:
    """Skew form pairing coordinates (2j-1, 2j):
    sum_j (v_{2j-1} w_{2j} - v_{2j} w_{2j-1})."""
    v, w = as_mv(v), as_mv(w)
    if v.dim != w.dim:
        raise DimMismatch(f"{v.dim} vs {w.dim}")
    if v.dim % 2:
        raise OddDim(f"dim {v.dim} is odd")
    acc = RF_ZERO
    for j in range(0, v.dim, 2):
        acc = acc + v.entries[j] * w.entries[j + 1] - v.entries[j + 1] * w.entries[j]
    return acc


class LaurentSection:
    """A finite sum over i >= 0 of lambda^i times a MeroVector."""

    __slots__ = ("terms", "dim")

    def __init__(self, terms, dim=None):
        clean = {}
        for i, v in dict(terms).items():
            i = int(i)
            if i < 0:
                raise ValueError("LaurentSection powers must be >= 0")
            v = as_mv(v)
            if not v.is_zero():
                clean[i] = v
        if dim is None:
            if not clean:
                raise ValueError("dim required for the zero section")
            dim = next(iter(clean.values())).dim
        for v in clean.values():
            if v.dim != dim:
                raise DimMismatch("mixed dims in LaurentSection")
        object.__setattr__(self, "terms", dict(sorted(clean.items())))
        object.__setattr__(self, "dim", dim)

    def __setattr__(self, *a):
        raise AttributeError("LaurentSection is immutable")

    def is_zero(self) -> bool:
        return not self.terms

    @property
    def max_power(self) -> int:
        return max(self.terms) if self.terms else -1

    def coefficient(self, i: int) -> MeroVector:
        return self.terms.get(i, MeroVector([RF_ZERO] * self.dim))

    def order(self) -> int:
        if not self.terms:
            raise ZeroSection("order of the zero section")
        return min(self.terms)

    def hatted(self) -> "LaurentSection":
        """The section with the lambda-power gcd removed: L = lambda^o(L) * Lhat."""
        o = self.order()
        return LaurentSection({i - o: v for i, v in self.terms.items()}, self.dim)

    def shifted(self, k: int) -> "LaurentSection":
        return LaurentSection({i + k: v for i, v in self.terms.items()}, self.dim)

    def derivative(self) -> "LaurentSection":
        out = {i: v.derivative() for i, v in self.terms.items()}
        return LaurentSection({i: v for i, v in out.items() if not v.is_zero()},
                              self.dim)

    def __add__(self, o):
        if o.dim != self.dim:
            raise DimMismatch("LaurentSection dims differ")
        out = dict(self.terms)
        for i, v in o.terms.items():
            out[i] = out[i] + v if i in out else v
        return LaurentSection(out, self.dim)

    def truncated(self, r: int) -> "LaurentSection":
        """Drop powers >= r (reduction mod lambda^r)."""
        return LaurentSection({i: v for i, v in self.terms.items() if i < r},
                              self.dim)

    def eval_quotient(self, z: complex, r: int) -> np.ndarray:
        """Value in C^{r n}, grade-major layout (grade 0 block first)."""
        out = np.zeros(r * self.dim, dtype=np.complex128)
        for i, v in self.terms.items():
            if i < r:
                out[i * self.dim:(i + 1) * self.dim] = v(z)
        return out

    def __repr__(self):
        return " + ".join(f"lam^{i}*{v!r}" for i, v in self.terms.items()) or "0"


def section(*graded, dim=None) -> LaurentSection:
    """section(v0, v1, ...) builds v0 + lambda v1 + ..."""
    return LaurentSection({i: v for i, v in enumerate(graded)
                           if not as_mv(v).is_zero()},
                          dim=dim if dim is not None else as_mv(graded[0]).dim)


def section_order(L: LaurentSection) -> int:
    return L.order()


# -- exact linear algebra over the rational-function field -------------------

def rf_rref(rows):
    """Reduced row echelon form of a matrix of RationalFun entries.

    Returns (rref_rows, pivot_columns)."""
    rows = [list(as_rf(e) for e in row) for row in rows]
    if not rows:
        return [], []
    ncols = len(rows[0])
    pivots = []
    rank = 0
    for col in range(ncols):
        piv = next((r for r in range(rank, len(rows)) if rows[r][col]), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        inv = RF_ONE / rows[rank][col]
        rows[rank] = [inv * e for e in rows[rank]]
        for r in range(len(rows)):
            if r != rank and rows[r][col]:
                f = rows[r][col]
                rows[r] = [a - f * b for a, b in zip(rows[r], rows[rank])]
        pivots.append(col)
        rank += 1
        if rank == len(rows):
            break
    return rows, pivots


def rf_rank(rows) -> int:
    return len(rf_rref(rows)[1])


def rf_nullspace(rows) -> list:
    """Basis of the right nullspace of a RationalFun matrix, as MeroVectors."""
    rows = [list(row.entries) if isinstance(row, MeroVector) else list(row)
            for row in rows]
    if not rows:
        raise ValueError("nullspace of an empty matrix needs explicit columns")
    ncols = len(rows[0])
    rref, pivots = rf_rref(rows)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fcol in free:
        v = [RF_ZERO] * ncols
        v[fcol] = RF_ONE
        for prow, pcol in enumerate(pivots):
            v[pcol] = -rref[prow][fcol]
        basis.append(MeroVector(v))
    return basis


def perp_c(gens) -> list:
    """Exact orthogonal complement for bilinear_c: vectors pairing to zero
    with every generator."""
    gens = [as_mv(g) for g in gens]
    if not gens:
        raise ValueError("perp_c needs at least one generator")
    return rf_nullspace([g.entries for g in gens])


def perp_omega(gens) -> list:
    """Exact complement for omega_form."""
    gens = [as_mv(g) for g in gens]
    if not gens:
        raise ValueError("perp_omega needs at least one generator")
    rows = []
    for g in gens:
        row = []
        for j in range(0, g.dim, 2):
            # omega(g, v) = sum_j g_{2j-1} v_{2j} - g_{2j} v_{2j-1}
            row.extend([-g.entries[j + 1], g.entries[j]])
        rows.append(row)
    return rf_nullspace(rows)
