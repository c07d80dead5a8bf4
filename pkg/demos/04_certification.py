"""Independent checks of solver output.

Three oracles that do not use the closed-form weights: a linear program over
a fine grid of the Elfving set, enumeration of all sign patterns on a fixed
support, and a lattice scan of the weight simplex.
"""

import numpy as np

from cdesign import (
    GridSpec,
    PolynomialModel,
    ProblemSpec,
    basis_vector,
    lp_elfving,
    sign_enumeration,
    solve,
    weight_grid,
)

# %% Grid LP: how far along the ray through c can the Elfving set reach?
for k, j in [(3, 2), (4, 3), (4, 4)]:
    spec = ProblemSpec(PolynomialModel(k), basis_vector(j, k))
    res = solve(spec)
    cert = lp_elfving(spec, GridSpec(u_points=2001), solver_psi=res.psi)
    print(f"k={k} e{j}: solver {res.psi:.6f}  LP {cert.oracle_psi:.6f}  gap {cert.gap:+.1e}  pass={cert.passed}")

# %% Sign enumeration on the solver's support, k = 6, c = e4
spec = ProblemSpec(PolynomialModel(6), basis_vector(4, 6))
res = solve(spec)
cert = sign_enumeration(res.design.points, spec.c, solver_psi=res.psi)
print(f"\nk=6 e4: {cert.resolution} sign patterns, best psi {cert.oracle_psi:.6f}, signs match {cert.details['signs_match']}")

# %% Weight lattice at resolution 1/100 on the support {0, +-.707, +-1}
u = np.array([-1.0, -np.sqrt(0.5), 0.0, np.sqrt(0.5), 1.0])
X = PolynomialModel(6).features(u)
cert = weight_grid(X, basis_vector(3, 6), GridSpec(simplex_resolution=100))
print(f"\nlattice minimum {cert.oracle_psi:.4f} vs closed form {cert.solver_psi:.4f}, "
      f"{cert.details['lattice_size']} lattice points, pass={cert.passed}")
