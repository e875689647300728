"""The circle action and the grading-invariant limit.

Every model deforms through the punctured-plane action to its invariant
limit; the limit has nested Segal unitons, the Uhlenbeck unitons in
reversed order, and a graded fiber.
"""

from uniton import (FiltrationSpec, builtin_examples, contains,
                    extract_unitons_generic, s1_invariant_limit, scale_action,
                    subspace_distance)

example = builtin_examples()["dai_terng_r3"]
model = example.model()
limit = s1_invariant_limit(model)
z0 = 0.7 + 0.2j

print(f"{example.name}: distance to its invariant limit "
      f"{subspace_distance(model.fiber(z0).space, limit.fiber(z0).space):.3f}")
print("deformation toward the limit:")
for s in (0.8, 0.4, 0.1, 0.01):
    d = subspace_distance(scale_action(model, s).fiber(z0).space,
                          limit.fiber(z0).space)
    print(f"  s = {s:5.2f}: fiber distance {d:.2e}")

seg = extract_unitons_generic(limit, FiltrationSpec.segal(model.r)).point(z0)
uhl = extract_unitons_generic(limit, FiltrationSpec.uhlenbeck(model.r)).point(z0)
print("\nlimit Segal uniton ranks:   ", [a.rank for a in seg.alphas])
print("limit Uhlenbeck uniton ranks:", [a.rank for a in uhl.alphas])
print("nested:", all(contains(seg.alphas[i + 1], seg.alphas[i])[0]
                     for i in range(model.r - 1)))
rev = max(subspace_distance(uhl.alphas[i], seg.alphas[model.r - 1 - i])
          for i in range(model.r))
print(f"reversal identity residual: {rev:.2e}")
