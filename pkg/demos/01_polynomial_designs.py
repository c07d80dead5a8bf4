"""Polynomial regression on [-1, 1]: c-optimal designs for c = e_j.

Each design is found by maximizing ||z*||^2 over k-tuples of points of the
curve u -> (1, u, ..., u^{k-1}); signs and weights then follow in closed
form. Run from the repository root::

    python3 demos/01_polynomial_designs.py
"""

import numpy as np

from cdesign import PolynomialModel, ProblemSpec, basis_vector, solve

# %% One problem, end to end
k = 6
spec = ProblemSpec(PolynomialModel(k), basis_vector(2, k))
res = solve(spec)
print(f"k={k}, c=e2: psi = {res.psi:.6f} after {res.objective_evals} evaluations")
for u, p, s in zip(res.design.u, res.design.weights, res.solution.signs):
    print(f"  u = {u:+.6f}  p = {p:.6f}  sign {int(s):+d}")

# The Elfving point lies on the ray through c, at distance 1/sqrt(psi)
z = res.solution.elfving_point
print("z* =", np.round(z, 12), " gamma =", round(res.gamma, 12))

# %% A block of the table, in the paired layout (u > 0 with the mirrored weight)
print("\nk=7")
print(f"{'j':>2} {'xi(0)':>7}  {'pairs (u, p)':<48} {'psi':>8}")
for j in range(1, 8):
    r = solve(ProblemSpec(PolynomialModel(7), basis_vector(j, 7)))
    u, p = r.design.u, r.design.weights
    xi0 = p[np.abs(u) < 1e-3].sum()
    pairs = " ".join(f"({a:.3f}, {b:.3f})" for a, b in zip(u[u > 1e-3], p[u > 1e-3]))
    print(f"{j:>2} {xi0:7.3f}  {pairs:<48} {r.psi:8.1f}")

# %% Structure worth noticing
# - every design is symmetric about 0
# - the weight at u = 0 is positive exactly when j is odd
# - for c = e1 all mass sits at u = 0 and psi = 1
