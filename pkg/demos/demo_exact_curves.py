"""Exact isotropy and superhorizontal building blocks.

Everything here is computed over Q(i)(z): isotropy orders are exact symbol
manipulations, not numerics.  The five-dimensional curve is totally
isotropic (order n - 2 = 3) and closes up conjugately after four Gauss
transforms; the six-dimensional curve reaches the maximal order possible in
even ambient dimension, and feeds the rank-(1,3,5) real superhorizontal
sequence.
"""

import numpy as np

from uniton import (HoloCurve, bilinear_c, gauss_transform, isotropy_order,
                    omega_form, orthonormal_span, principal_angle_distance,
                    rf_is_zero)
from uniton.corpus import (isotropic_complement_c6, isotropic_curve_c5,
                           isotropic_curve_c6, j_isotropic_curve_c4)
from uniton.geomaps import build_real_superhorizontal_odd, s1_invariant_phi

f5 = isotropic_curve_c5()
print("C^5 curve:", f5)
print("isotropy order:", isotropy_order(HoloCurve([f5])))
print("pairing <f, f''> is identically zero:",
      rf_is_zero(bilinear_c(f5, f5.derivative(2))))

g4 = gauss_transform(HoloCurve([f5]), 4)
z0 = 0.62 - 0.41j
conj_line = orthonormal_span([np.conj(f5(z0))])
print("fourth Gauss transform equals the conjugate line:",
      f"{principal_angle_distance(g4(z0), conj_line):.2e}")

h6 = isotropic_curve_c6()
print("\nC^6 curve isotropy order (maximal for n = 6):",
      isotropy_order(HoloCurve([h6])))

h0 = j_isotropic_curve_c4()
print("\nC^4 curve skew-isotropy order:",
      isotropy_order(HoloCurve([h0]), "symplectic"))
print("omega(H0, H0') =", omega_form(h0, h0.derivative()))

print("\nreal superhorizontal sequence of ranks (1, 3, 5) in C^6:")
seed = [h6, h6.derivative(), isotropic_complement_c6()]
seq = build_real_superhorizontal_odd(seed, {1: [h6]}, 3)
print("  delta ranks:", [seq.delta_at(i, z0).rank for i in (1, 2, 3)])
phi = s1_invariant_phi(seq)
g = phi(z0)
# odd degree: the legs pair conjugately across the middle, so conj(g) = -g
# and the map takes values among the orthogonal complex structures
print("  invariant map satisfies conj(g) = -g:",
      np.linalg.norm(g.conj() + g) < 1e-9)
print("  and is an involution:", np.linalg.norm(g @ g - np.eye(6)) < 1e-9)
