"""Builtin example corpus.

Each example carries exact generating data for a model at desk scale,
together with the symmetries it is expected to satisfy.  The two isotropic
curves are stored in standard coordinates (the symmetric form is the plain
sum of products); the hyperbolic-pair change of basis used to produce them
keeps all coefficients in Q(i).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .exactfun import LaurentSection, MeroVector, mv, rf, section
from .grassmodel import WModel, generate_W, lambda_span_W
from .loopalg import LoopFamily, LoopMatrix
from .numlin import DEFAULT_TOL, Tolerances


def isotropic_curve_c5() -> MeroVector:
    """Full curve in C^5, totally isotropic (order 3): every derivative
    pairing of total order <= 3 vanishes identically."""
    return mv([1, 0, 0, 0, "3/4"],
              ["i", 0, 0, 0, "-3/4i"],
              [0, 1, 0, -3],
              [0, "i", 0, "3i"],
              [0, 0, 3])


def isotropic_curve_c6() -> MeroVector:
    """Full curve in C^6 of maximal isotropy order (three) for that ambient
    dimension, in standard coordinates."""
    return mv([0, 24, 0, 0, 6],
              [0, "24i", 0, 0, "-6i"],
              [0, 0, 12, -8],
              [0, 0, "12i", "8i"],
              [1, 0, 0, 0, 0, -48],
              ["i", 0, 0, 0, 0, "48i"])


def isotropic_complement_c6() -> MeroVector:
    """A rank-one isotropic section of the bilinear complement of the first
    osculating space of the C^6 curve, transverse to that space."""
    return mv([0, 16], [0, "16i"], [0, 0, 6], [0, 0, "6i"], [1], ["i"])


def j_isotropic_curve_c4() -> MeroVector:
    """Full curve in C^4, totally isotropic (order two) for the skew form."""
    return mv([0, 1], [0, 0, "1/2"], [1], [0, 0, 0, "-1/6"])


@dataclass
class Example:
    name: str
    n: int
    r: int
    build: Callable[[], tuple[str, list[LaurentSection]]]
    doc: str = ""
    expect_real: bool = False
    expect_nu: bool = False
    expect_symplectic: bool = False
    expect_s1_invariant: bool = False
    strategies: tuple[str, ...] = ("segal", "uhlenbeck", "alternating-u-first",
                                   "alternating-s-first", "gauss")
    _models: dict = field(default_factory=dict, repr=False)

    def sections(self) -> tuple[str, list[LaurentSection]]:
        """(mode, generating sections): mode is "osculating" or "lambda-span"."""
        return self.build()

    def model(self, tol: Tolerances = DEFAULT_TOL) -> WModel:
        key = id(tol)
        if key not in self._models:
            mode, gens = self.build()
            maker = generate_W if mode == "osculating" else lambda_span_W
            m = maker(gens, self.r, tol)
            m.name = self.name
            self._models[key] = m
        return self._models[key]


def _line_cp1():
    return "osculating", [section(mv([1], [0, 1]))]


def _mixed_pair():
    return "osculating", [section(mv([1], [0, 1], [0, 0, 1]))]


def _cp2_full_gauss():
    # a non-rational-normal full curve so the osculating flag is generic
    return "osculating", [section(mv([1, 1], [0, 1, 1], [0, 0, 0, 1]))]


def _dai_terng_r3():
    # L1 quadratic in lambda over the rational normal curve, L2 of order two;
    # the lambda-tail of L1 leaves the osculating flag (the model is not
    # grading-invariant) while the top graded piece stays proper
    l0 = mv([1], [0, 1], [0, 0, 1], [0, 0, 0, 1], [0, 0, 0, 0, 1])
    hat20 = mv(0, 0, 0, 1, 0)
    x1 = LaurentSection({0: l0, 1: hat20, 2: l0.derivative(2)})
    x2 = LaurentSection({2: hat20})
    return "osculating", [x1, x2]


def _real_n5_r2():
    # tail coefficients are H1 = a H0''' and H3 = a H0'''' with a = 1/8: the
    # structure equations force the two constants equal, and the modest
    # amplitude keeps the grading deformation close to its limit
    h0 = isotropic_curve_c5()
    h0p = h0.derivative()
    h1 = h0.derivative(3).scale(rf("1/8"))
    h3 = h0.derivative(4).scale(rf("1/8"))
    gens = [
        section(h0, h1),
        section(h0p, h3),
        LaurentSection({1: h0}),
        LaurentSection({1: h0p}),
        LaurentSection({1: h0.derivative(2)}),
    ]
    return "lambda-span", gens


def _real_n6_r3():
    from .exactfun import bilinear_c
    h0 = isotropic_curve_c6()
    h3 = isotropic_complement_c6()
    h1 = h0.derivative(2) + h3
    # dual direction with <h0, w> = 2 everywhere, keeping solutions polynomial;
    # the shifted-pairing Gram needs 2<H0,H2> + <H1,H1> = 0
    w = mv(0, 0, 0, 0, 1, "-i")
    h2 = w.scale(bilinear_c(h1, h1) / rf(-4))
    h4 = w.scale(bilinear_c(h1, h3) / rf(-2))
    x1 = LaurentSection({0: h0, 1: h1, 2: h2})
    x2 = LaurentSection({1: h3, 2: h4})
    return "osculating", [x1, x2]


def _real_n6_r4():
    from .exactfun import perp_c
    h0 = isotropic_curve_c6()
    h0p = h0.derivative()
    d2 = [h0, h0p]
    d3 = perp_c(d2)
    d4 = perp_c([h0])
    grades = [[h0], d2, d3, d4]
    return "lambda-span", [LaurentSection({i: v}) for i, vs in enumerate(grades)
                           for v in vs]


def _real_n4_r3():
    x1 = mv(1, "i", 0, 0)
    x2 = mv(0, 0, 1, "i")
    d1 = x1 + x2.scale(rf([0, 1]))
    from .exactfun import perp_c
    d3 = perp_c([d1])
    grades = [[d1], [x1, x2], d3]
    return "lambda-span", [LaurentSection({i: v}) for i, vs in enumerate(grades)
                           for v in vs]


def _sp2_r2():
    from .exactfun import perp_omega
    h0 = j_isotropic_curve_c4()
    h1 = mv(0, 0, 0, 1)
    d2 = perp_omega([h0])
    gens = [section(h0, h1)] + [LaurentSection({1: v}) for v in d2]
    return "lambda-span", gens


def _sp2_r3():
    h0 = j_isotropic_curve_c4()
    h1 = mv(0, 0, 0, 1)
    return "osculating", [section(h0, h1)]


def _iwasawa_line():
    return "loop-columns", [section(mv([1], [0, 1])),
                            LaurentSection({1: mv(1, 0)})]


def iwasawa_example_family() -> LoopFamily:
    """An exact meromorphic degree-one family whose columns frame the
    holomorphic-line model: [[1, lambda], [z, 0]]."""
    def at(z: complex) -> LoopMatrix:
        t0 = np.array([[1.0, 0.0], [z, 0.0]], dtype=np.complex128)
        t1 = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=np.complex128)
        return LoopMatrix(2, {0: t0, 1: t1}, trim=False)
    return LoopFamily(2, 0, 1, at)


def builtin_examples() -> dict[str, Example]:
    out = [
        Example("line_cp1", 2, 1, _line_cp1,
                doc="holomorphic line (1, z): one factor, Cartan image"),
        Example("mixed_pair", 3, 2, _mixed_pair, expect_nu=True,
                expect_s1_invariant=True,
                doc="rational normal curve in C^3: nested degree-2 model"),
        Example("cp2_full_gauss", 3, 2, _cp2_full_gauss, expect_nu=True,
                expect_s1_invariant=True,
                doc="full curve in C^3 with generic osculating flag"),
        Example("dai_terng_r3", 5, 3, _dai_terng_r3,
                doc="degree-3 model in C^5 from a quadratic generator plus "
                    "an order-two generator"),
        Example("real_n5_r2", 5, 2, _real_n5_r2, expect_real=True,
                doc="degree-2 real model over the totally isotropic C^5 "
                    "curve; not nu-invariant, target off the Grassmannians"),
        Example("real_n6_r3", 6, 3, _real_n6_r3, expect_real=True,
                doc="degree-3 real model over the C^6 curve with solved "
                    "complement data"),
        Example("real_n6_r4_isotropic", 6, 4, _real_n6_r4, expect_real=True,
                expect_nu=True, expect_s1_invariant=True,
                doc="graded real model of the full isotropic flag in C^6"),
        Example("real_n4_r3_const_mid", 4, 3, _real_n4_r3, expect_real=True,
                expect_nu=True, expect_s1_invariant=True,
                doc="odd-degree real model with a constant maximal isotropic "
                    "middle subbundle (normalizes to degree n-2)"),
        Example("sp2_r2", 4, 2, _sp2_r2, expect_symplectic=True,
                doc="degree-2 symplectic model over the J-isotropic curve"),
        Example("sp2_nonGrassmannian", 4, 3, _sp2_r3, expect_symplectic=True,
                doc="degree-3 symplectic model whose map lands in the "
                    "symplectic group but not its Hermitian quotient"),
        Example("iwasawa_line", 2, 1, _iwasawa_line,
                strategies=("segal", "uhlenbeck"),
                doc="meromorphic loop columns [[1, lambda], [z, 0]] for the "
                    "unitary-times-plus splitting"),
    ]
    return {e.name: e for e in out}
