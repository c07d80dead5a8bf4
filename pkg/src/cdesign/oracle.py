"""Brute-force verifiers for formula-based designs.

These deliberately avoid the closed-form weights:

* :func:`lp_elfving` discretizes the design space and solves the linear
  program for the farthest point of the Elfving set on the ray through ``c``;
* :func:`sign_enumeration` tries every sign pattern on a fixed support;
* :func:`weight_grid` scans a lattice on the weight simplex.

Each returns a :class:`Certificate` comparing its optimum with the
criterion value being checked.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import comb

import numpy as np
from scipy.optimize import linprog

from .design import DesignMeasure
from .elfving import ZERO_WEIGHT, signs_and_weights
from .errors import InvalidInputError, NotEstimableError, OracleInfeasibleError
from .linalg import DEFAULT_TOL, Tolerances, numerical_rank, psi
from .model import CurveModel, PointSetModel, ProblemSpec

__all__ = [
    "GridSpec",
    "Certificate",
    "lp_elfving",
    "lp_gamma",
    "sign_enumeration",
    "weight_grid",
    "simplex_lattice",
    "LP_TOL",
    "SIGN_TOL",
]

LP_TOL = 1e-3
SIGN_TOL = 1e-8
MAX_LATTICE = 6_000_000
LP_CONVERGENCE = 1e-4
_CHUNK = 250_000


@dataclass(frozen=True)
class GridSpec:
    """Resolutions of the discretized searches.

    u_points
        Grid points on the design interval for the LP (2001 gives spacing
        1e-3 on [-1, 1]).
    simplex_resolution
        Weight lattice step is ``1 / simplex_resolution``.
    sign_cap
        Largest support size for sign enumeration.
    """

    u_points: int = 2001
    simplex_resolution: int = 200
    sign_cap: int = 12

    def __post_init__(self):
        if self.u_points < 10 or self.simplex_resolution < 10:
            raise InvalidInputError("grid resolutions must be >= 10")
        if self.sign_cap < 1:
            raise InvalidInputError("sign_cap must be >= 1")


@dataclass(frozen=True, eq=False)
class Certificate:
    method: str
    oracle_psi: float
    solver_psi: float
    gap: float
    passed: bool
    tolerance: float
    resolution: int
    status: str = "ok"
    details: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "method": self.method,
            "oracle_psi": self.oracle_psi,
            "solver_psi": self.solver_psi,
            "gap": self.gap,
            "passed": self.passed,
            "tolerance": self.tolerance,
            "resolution": self.resolution,
            "status": self.status,
            "details": self.details,
        }


def _grid_points(model, n):
    if isinstance(model, PointSetModel):
        return model.points, None
    if not isinstance(model, CurveModel):
        raise InvalidInputError("lp_elfving needs a curve or point-set model")
    lo, hi = model.domain
    u = np.linspace(lo, hi, n)
    return model._map(u), u


def lp_gamma(S, c):
    """Largest ``gamma`` with ``gamma c`` in the convex hull of ``S`` and ``-S``.

    Returns ``(gamma, lam_plus, lam_minus)``; ``gamma = 0`` means ``c`` is not
    in the span of the rows of ``S``.
    """
    S = np.asarray(S, dtype=float)
    c = np.asarray(c, dtype=float)
    N, k = S.shape
    scale = np.abs(S).max()
    # columns: lam+ (N), lam- (N), gamma
    A_eq = np.zeros((k + 1, 2 * N + 1))
    A_eq[:k, :N] = S.T / scale
    A_eq[:k, N : 2 * N] = -S.T / scale
    A_eq[:k, -1] = -c / scale
    A_eq[k, : 2 * N] = 1.0
    b_eq = np.zeros(k + 1)
    b_eq[k] = 1.0
    cost = np.zeros(2 * N + 1)
    cost[-1] = -1.0
    res = linprog(
        cost,
        A_eq=A_eq,
        b_eq=b_eq,
        bounds=[(0, None)] * (2 * N + 1),
        method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        raise OracleInfeasibleError(f"LP solver failed: {res.message}")
    x = res.x
    return float(x[-1]), x[:N], x[N : 2 * N]


def lp_elfving(
    spec: ProblemSpec,
    grid: GridSpec = GridSpec(),
    design: DesignMeasure | None = None,
    solver_psi: float | None = None,
    rtol: float = LP_TOL,
) -> Certificate:
    """Certify a design against the grid-restricted Elfving optimum.

    The oracle value is ``||c||^2 / ||gamma c||^2`` for the LP optimum
    ``gamma``. The value checked is ``solver_psi`` if given, else the
    criterion of ``design`` computed directly. The grid is also solved at
    half resolution; the change in ``gamma`` is reported as
    ``details["refinement_delta"]`` (relative) and must stay below 1e-4 for the
    certificate to pass.
    """
    S, u = _grid_points(spec.model, grid.u_points)
    gamma, lp_plus, lp_minus = lp_gamma(S, spec.c)
    cc = float(spec.c @ spec.c)
    checked = solver_psi
    if checked is None and design is not None:
        checked = psi(design, spec.c, spec.tol)
    if checked is None:
        checked = float("nan")
    if gamma <= 1e-12:
        return Certificate(
            "lp", float("inf"), float(checked), float("inf"), False, rtol, grid.u_points,
            status="not-estimable",
        )
    oracle = cc / (gamma * gamma * cc)
    details = {"gamma": gamma}
    if u is not None and grid.u_points >= 21:
        half = (grid.u_points - 1) // 2 + 1
        if (grid.u_points - 1) % 2 == 0:
            g_half, _, _ = lp_gamma(S[::2], spec.c)
            details["refinement_delta"] = abs(gamma - g_half) / gamma
        lam = lp_plus + lp_minus
        mask = lam > 1e-9
        details["lp_support_u"] = u[mask].tolist()
        details["lp_weights"] = lam[mask].tolist()
        details["coarse_points"] = half
    gap = (checked - oracle) / oracle if np.isfinite(checked) else float("nan")
    passed = bool(np.isfinite(gap) and abs(gap) <= rtol)
    status = "ok"
    if details.get("refinement_delta", 0.0) >= LP_CONVERGENCE:
        status, passed = "not-converged", False
    return Certificate(
        "lp", oracle, float(checked), float(gap), passed, rtol, grid.u_points, status=status, details=details
    )


def _sign_patterns(ell):
    bits = (np.arange(2**ell)[:, None] >> np.arange(ell)) & 1
    return 1.0 - 2.0 * bits  # pattern 0 is all +1


def sign_enumeration(
    points,
    c,
    cap: int = 12,
    solver_psi: float | None = None,
    tol: Tolerances = DEFAULT_TOL,
) -> Certificate:
    """Enumerate all ``2^l`` sign patterns on a linearly independent support.

    For each pattern the linear system ``sum p_i e_i x_i = gamma c``,
    ``sum p_i = 1`` is solved for ``(p, gamma)``; patterns with ``p >= 0``
    and ``gamma > 0`` are feasible and the largest ``gamma`` wins. The
    certificate passes when ``1/gamma^2`` matches the criterion being
    checked (relative 1e-8) and the closed-form signs agree with the
    enumerated ones on every positive-weight point.
    """
    X = np.array(points, dtype=float, ndmin=2)
    c = np.asarray(c, dtype=float)
    ell, k = X.shape
    if ell > cap:
        raise OracleInfeasibleError(f"sign enumeration capped at {cap} points, support has {ell}")
    row_tol = Tolerances(np.sqrt(tol.rank_tol), tol.span_tol, tol.merge_tol)
    if numerical_rank(X, row_tol) < ell:
        raise OracleInfeasibleError("sign enumeration needs a linearly independent support")

    E = _sign_patterns(ell)
    n_pat = E.shape[0]
    A = np.zeros((n_pat, k + 1, ell + 1))
    A[:, :k, :ell] = (E[:, :, None] * X[None, :, :]).transpose(0, 2, 1)
    A[:, :k, ell] = -c
    A[:, k, :ell] = 1.0
    b = np.zeros(k + 1)
    b[k] = 1.0
    sol = np.linalg.pinv(A) @ b
    resid = np.linalg.norm(np.einsum("nij,nj->ni", A, sol) - b, axis=1)
    p, gam = sol[:, :ell], sol[:, ell]
    feasible = (resid <= 1e-9 * max(1.0, np.abs(X).max())) & (p.min(axis=1) >= -1e-12) & (gam > 0)
    if not np.any(feasible):
        return Certificate(
            "sign_enum", float("inf"), float("nan"), float("inf"), False, SIGN_TOL, 2**ell,
            status="not-representable",
        )
    best = int(np.argmax(np.where(feasible, gam, -np.inf)))
    oracle = 1.0 / gam[best] ** 2
    try:
        formula = signs_and_weights(X, c, tol=tol)
    except NotEstimableError:
        return Certificate(
            "sign_enum", oracle, float("nan"), float("inf"), False, SIGN_TOL, 2**ell,
            status="not-estimable",
        )
    checked = formula.psi if solver_psi is None else float(solver_psi)
    positive = formula.weights > ZERO_WEIGHT
    signs_match = bool(np.all(formula.signs[positive] == E[best][positive]))
    gap = (checked - oracle) / oracle
    passed = bool(abs(gap) <= SIGN_TOL and signs_match)
    details = {
        "signs": E[best].tolist(),
        "weights": np.clip(p[best], 0, None).tolist(),
        "formula_signs": formula.signs.tolist(),
        "signs_match": signs_match,
        "feasible_patterns": int(feasible.sum()),
    }
    return Certificate("sign_enum", oracle, checked, gap, passed, SIGN_TOL, 2**ell, details=details)


@lru_cache(maxsize=None)
def _lattice(ell: int, n: int) -> np.ndarray:
    if ell == 1:
        return np.array([[n]], dtype=np.int32)
    blocks = []
    for first in range(n, -1, -1):
        rest = _lattice(ell - 1, n - first)
        blocks.append(np.hstack([np.full((rest.shape[0], 1), first, dtype=np.int32), rest]))
    out = np.vstack(blocks)
    out.setflags(write=False)
    return out


def simplex_lattice(ell: int, n: int) -> np.ndarray:
    """All nonnegative integer vectors of length ``ell`` summing to ``n``."""
    return _lattice(int(ell), int(n))


def weight_grid(
    points,
    c,
    grid: GridSpec = GridSpec(),
    solver_psi: float | None = None,
    tol: Tolerances = DEFAULT_TOL,
) -> Certificate:
    """Scan the weight simplex of a fixed linearly independent support.

    Writing ``c = sum a_i x_i``, the criterion of weights ``p`` is
    ``sum a_i^2 / p_i`` (infinite when some ``a_i != 0`` has ``p_i = 0``).
    The certificate passes when no lattice point beats the checked value
    and the lattice minimum lies within the rounding bound
    ``sum_i h^2 / (p*_i - h)`` (relative, ``h`` the lattice step) above it.
    """
    X = np.array(points, dtype=float, ndmin=2)
    c = np.asarray(c, dtype=float)
    ell = X.shape[0]
    n = grid.simplex_resolution
    if comb(n + ell - 1, ell - 1) > MAX_LATTICE:
        raise OracleInfeasibleError(
            f"weight lattice for {ell} points at resolution 1/{n} is too large"
        )
    row_tol = Tolerances(np.sqrt(tol.rank_tol), tol.span_tol, tol.merge_tol)
    if numerical_rank(X, row_tol) < ell:
        raise OracleInfeasibleError("weight grid needs a linearly independent support")
    a, *_ = np.linalg.lstsq(X.T, c, rcond=None)
    if np.linalg.norm(X.T @ a - c) > tol.span_tol * np.linalg.norm(c):
        return Certificate(
            "weight_grid", float("inf"), float("nan"), float("inf"), False, 0.0, n,
            status="not-estimable",
        )
    L = simplex_lattice(ell, n)
    a2 = a * a
    needed = a2 > 0
    values = np.empty(L.shape[0])
    with np.errstate(divide="ignore"):
        for s in range(0, L.shape[0], _CHUNK):
            block = L[s : s + _CHUNK]
            v = (a2[needed] * n / block[:, needed]).sum(axis=1)
            v[np.any(block[:, needed] == 0, axis=1)] = np.inf
            values[s : s + _CHUNK] = v
    i_min = int(np.argmin(values))
    grid_min = float(values[i_min])

    formula = signs_and_weights(X, c, tol=tol)
    checked = formula.psi if solver_psi is None else float(solver_psi)
    h = 1.0 / n
    pstar = formula.weights[formula.weights > ZERO_WEIGHT]
    bound = float(np.sum(h * h / (pstar - h))) if np.all(pstar > h) else float("inf")
    gap = (grid_min - checked) / checked
    passed = bool(gap >= -1e-9 and gap <= bound)
    details = {
        "grid_weights": (L[i_min] / n).tolist(),
        "formula_weights": formula.weights.tolist(),
        "bound": bound,
        "lattice_size": int(L.shape[0]),
    }
    return Certificate("weight_grid", grid_min, checked, gap, passed, bound, n, details=details)
