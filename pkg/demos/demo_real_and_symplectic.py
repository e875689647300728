"""Real and symplectic factorizations.

Runs the alternating (Uhlenbeck-first) factorization on the structured
examples and prints the symmetry certificates: quadratic factors and even
partial products respect the structure, the designated subspaces are
isotropic, odd-degree chains start with a maximal isotropic uniton, and the
harmonic maps land in the predicted targets.
"""

from uniton import (alternating_real_factorization, builtin_examples,
                    classify_target, harmonic_map_from_chain, normalize,
                    symmetry_tests)

examples = builtin_examples()
points = [0.63 + 0.31j, -0.42 + 0.88j, 1.28 - 0.17j]

for name, form in [("real_n5_r2", "real"),
                   ("real_n6_r3", "real"),
                   ("real_n6_r4_isotropic", "real"),
                   ("sp2_r2", "symplectic"),
                   ("sp2_nonGrassmannian", "symplectic")]:
    model = examples[name].model()
    sym = symmetry_tests(model, points[0])
    key = "symplectic_perp_distance" if form == "symplectic" \
        else "real_perp_distance"
    print(f"{name}: degree {model.r} in C^{model.n}, "
          f"{form} residual {sym[key]:.1e}")
    chain, cert = alternating_real_factorization(model, form, points)
    print(f"  quadratic factors  {cert['quad_factor']:.1e}")
    print(f"  even partials      {cert['even_partial']:.1e}")
    print(f"  isotropy           {cert['isotropy']:.1e}")
    if model.r % 2:
        print(f"  first uniton maximal isotropic: {cert['first_maximal']:.1e}")
    cls = classify_target(harmonic_map_from_chain(chain), points)
    print(f"  target: {cls.label}")
    print()

print("normalization of the odd-degree model with a constant middle:")
model = examples["real_n4_r3_const_mid"].model()
reduced, record = normalize(model, "real")
print(f"  degree {model.r} -> {reduced.r} "
      f"(ambient allows at most n - 2 = {model.n - 2})")
for idx, case in record.removed_indices:
    print(f"  removed block {idx}: {case}")
