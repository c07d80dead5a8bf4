"""Optimal weights for a support chosen in advance.

With the support fixed, the best signs and weights need no search at all.
A support that is linearly dependent is first reduced to an independent one
without increasing the criterion.
"""

import numpy as np

from cdesign import (
    DesignMeasure,
    PolynomialModel,
    design_from_support,
    prune_dependent_support,
    psi,
    signs_and_weights,
)

model = PolynomialModel(6)
c = np.eye(6)[2]

# %% Five points, k = 6, c = e3
u = np.array([-1.0, -np.sqrt(0.5), 0.0, np.sqrt(0.5), 1.0])
sol = signs_and_weights(model.features(u), c)
for ui, s, p in zip(u, sol.signs, sol.weights):
    print(f"u = {ui:+.4f}  sign {int(s):+d}  p = {p:.6f}")
print(f"psi = {sol.psi:.6f}, gamma = {sol.gamma:.6f}")

# %% The same support with a random, suboptimal weighting does worse
rng = np.random.default_rng(0)
for _ in range(3):
    d = DesignMeasure(model.features(u), rng.dirichlet(np.ones(5)))
    print(f"random weights: psi = {psi(d, c):10.3f}")

# %% Weights that vanish: a point orthogonal to M^- c gets nothing
u2 = np.array([-1.0, -0.5, 0.0, 0.5, 1.0])
d2 = design_from_support(PolynomialModel(3).features(u2[[0, 2, 4]]), [0.0, 1.0, 0.0], u=u2[[0, 2, 4]])
print("\nslope in a quadratic, support {-1, 0, 1}:", {float(a): round(float(b), 6) for a, b in zip(d2.u, d2.weights)})

# %% A dependent support: seven points in a 4-dimensional model
model4 = PolynomialModel(4)
u3 = np.linspace(-1, 1, 7)
d3 = DesignMeasure(model4.features(u3), np.full(7, 1 / 7), u3)
c4 = np.eye(4)[3]
reduced = prune_dependent_support(d3, c4)
print(f"\nuniform on 7 points: psi = {psi(d3, c4):.3f}")
print(f"after reduction to {reduced.size} points: psi = {psi(reduced, c4):.3f}, u = {np.round(reduced.u, 3)}")
best = design_from_support(reduced.points, c4, reduced.u)
print(f"optimal weights on that support: psi = {psi(best, c4):.3f}")
