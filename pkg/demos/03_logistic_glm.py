"""Locally optimal design for quadratic logistic regression.

The model is logit P(y=1 | u) = t1 + t2 u + t3 u^2. At a guess theta_hat
the information of a design equals that of a linear model on the curve
g(u) = w(theta_hat' x(u)) B x(u), with B = ||theta_hat|| U for an orthogonal
U whose last row points along theta_hat. The c-optimal design for the GLM
is the (B c)-optimal design on that curve.
"""

from pathlib import Path

import numpy as np

from cdesign import (
    DesignMeasure,
    PolynomialModel,
    glm_transform,
    psi,
    solve_glm,
    transform_point,
    turning_point_c,
)
from cdesign.cli import curve_table

theta = np.array([2.0, -6.0, -9.0])
g = glm_transform(theta)
print("B =\n", np.round(g.B, 3))

# %% Target given directly
c = np.array([-0.195, 0.1, -0.243])
res = solve_glm(theta, c)
print("B c =", np.round(res.transformed.c, 3), " |B c| =", round(float(np.linalg.norm(res.transformed.c)), 4))
print("design on u:")
for u, p in zip(res.design.u, res.design.weights):
    print(f"  u = {u:+.4f}  p = {p:.4f}")
print(f"psi = {res.psi:.4f}")

# The published design for this problem, evaluated with the same criterion
pub_u, pub_p = np.array([-1.0, 0.181, 0.452]), np.array([0.135, 0.194, 0.671])
G = transform_point(g, PolynomialModel(3).features(pub_u))
print(f"published design psi = {psi(DesignMeasure(G, pub_p / pub_p.sum()), res.transformed.c):.4f}")

# %% Target: the dose maximizing response, eta = -t2 / (2 t3)
ct = turning_point_c(theta)
rt = solve_glm(theta, ct)
print("\nturning point", -theta[1] / (2 * theta[2]), "c =", ct)
for u, p in zip(rt.design.u, rt.design.weights):
    print(f"  u = {u:+.4f}  p = {p:.4f}")

# %% Curves for plotting: X, its image G and the reflection -G
out = Path("logistic_curves.csv")
out.write_text(curve_table(theta))
print(f"\nwrote {out} (401 samples)")
