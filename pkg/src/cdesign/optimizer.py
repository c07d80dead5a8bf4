"""Search for the c-optimal support by maximizing ``phi = ||z*||^2``.

For scalar-parametrized models the unknowns are k values of ``u``. Each
start runs Nelder-Mead on ``u = mid + half * sin(t)``, which keeps iterates
inside the domain while letting the boundary (where optimal supports often
sit) be reached smoothly. Candidates at which ``c`` is not estimable get a
large negative penalty instead of an exception, so the simplex method always
sees a total function. The winning support is then sharpened by SQP on
its points and coefficients, which resolves directions the simplex leaves
flat.

Finite point sets are searched by a multi-start exchange over k-subsets.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from .design import DesignMeasure
from .elfving import WeightSignSolution, merge_duplicates, signs_and_weights
from .errors import InvalidInputError, NotEstimableError, OptimizationFailedError
from .linalg import DEFAULT_TOL, Tolerances, numerical_rank
from .model import (
    CurveModel,
    GlmTransform,
    PointSetModel,
    ProblemSpec,
    QuadraticLogisticModel,
    back_transform,
    glm_transform,
    transformed_problem,
)

__all__ = [
    "SolveSettings",
    "SolveResult",
    "GlmSolveResult",
    "objective",
    "solve",
    "solve_glm",
    "canonicalize",
    "chebyshev_start",
]

log = logging.getLogger(__name__)

DROP_WEIGHT = 1e-6
SYMMETRY_TOL = 2e-3
REDUNDANT_WEIGHT = DROP_WEIGHT
SNAP_TOL = 1e-9
REFINE_NOISE = 1e-10
FD_STEP = 1e-7


@dataclass(frozen=True)
class SolveSettings:
    """Multi-start Nelder-Mead settings.

    ``penalty_scale`` multiplies ``||c||^2`` in the penalty returned for
    candidates under which ``c`` is not estimable. ``polish`` is the number
    of best coarse candidates refined to the tight tolerances.
    """

    starts: int = 40
    max_iters: int = 800
    seed: int = 1
    xatol: float = 1e-10
    fatol: float = 1e-15
    coarse_xatol: float = 1e-4
    coarse_fatol: float = 1e-8
    penalty_scale: float = 1e6
    polish: int = 3
    restarts: int = 4

    def __post_init__(self):
        if int(self.starts) < 1:
            raise InvalidInputError("starts must be >= 1")
        if int(self.max_iters) < 1:
            raise InvalidInputError("max_iters must be >= 1")
        for name in ("xatol", "fatol", "coarse_xatol", "coarse_fatol", "penalty_scale"):
            if not getattr(self, name) > 0:
                raise InvalidInputError(f"{name} must be > 0")
        if int(self.polish) < 1 or int(self.restarts) < 0:
            raise InvalidInputError("polish must be >= 1 and restarts >= 0")


@dataclass(frozen=True, eq=False)
class SolveResult:
    design: DesignMeasure
    solution: WeightSignSolution
    psi: float
    objective_evals: int
    best_start: int
    certificate: Optional[object] = None
    raw_u: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def gamma(self) -> float:
        return self.solution.gamma


class _Objective:
    """Callable ``u -> phi`` with an evaluation counter."""

    def __init__(self, spec: ProblemSpec, settings: SolveSettings):
        self.spec = spec
        self.model = spec.model
        self.c = spec.c
        self.tol = spec.tol
        self.penalty = settings.penalty_scale * float(spec.c @ spec.c)
        self.evals = 0

    def __call__(self, u) -> float:
        self.evals += 1
        u = np.sort(self.model.clamp(np.asarray(u, dtype=float)))
        keep = np.ones(u.shape, dtype=bool)
        keep[1:] = np.diff(u) > self.tol.merge_tol
        X = self.model._map(u[keep])
        try:
            return _phi_kernel(X, self.c, self.tol)
        except NotEstimableError as err:
            return -(1.0 + err.residual) * self.penalty


def _phi_kernel(X, c, tol):
    """``||z*||^2`` for a support, without input validation.

    With linearly independent rows and ``c = sum_i a_i x_i`` the Elfving
    point is ``c / sum_i |a_i|``. Dependent supports fall back to the
    general routine, which prunes them.
    """
    if X.shape[0] > X.shape[1]:
        return signs_and_weights(X, c, tol=tol).phi
    U, s, Vt = np.linalg.svd(X, full_matrices=False)
    if s[0] == 0:
        raise NotEstimableError("zero support", 1.0)
    if s[-1] * s[-1] <= tol.rank_tol * s[0] ** 2:
        return signs_and_weights(X, c, tol=tol).phi
    coords = Vt @ c
    cc = float(c @ c)
    if X.shape[0] < X.shape[1]:
        resid = float(np.linalg.norm(c - Vt.T @ coords)) / np.sqrt(cc)
        if resid > tol.span_tol:
            raise NotEstimableError("c outside the span", resid)
    a = U @ (coords / s)
    return cc / float(np.abs(a).sum()) ** 2


def objective(u, spec: ProblemSpec, settings: SolveSettings | None = None) -> float:
    """``phi`` at the support ``x(u_1), ..., x(u_k)``, or a negative penalty.

    Near-coincident ``u`` values (within ``merge_tol``) are merged first, so
    a collapsing support degrades to a smaller support rather than to an
    ill-conditioned one.
    """
    return _Objective(spec, settings or SolveSettings())(u)


def chebyshev_start(k: int, domain=(-1.0, 1.0)) -> np.ndarray:
    """Extrema of the Chebyshev polynomial of degree k-1, mapped to the domain."""
    lo, hi = domain
    if k == 1:
        return np.array([(lo + hi) / 2])
    t = np.cos(np.arange(k) * np.pi / (k - 1))[::-1]
    return (lo + hi) / 2 + (hi - lo) / 2 * t


def _random_starts(model: CurveModel, n: int, rng, tol: Tolerances):
    lo, hi = model.domain
    row_tol = Tolerances(np.sqrt(tol.rank_tol), tol.span_tol, tol.merge_tol)
    out = []
    for _ in range(n):
        for _attempt in range(100):
            u = np.sort(rng.uniform(lo, hi, model.k))
            if numerical_rank(model._map(u), row_tol) == min(model.k, u.size):
                break
        out.append(u)
    return out


def _nelder_mead(f, t0, step, xatol, fatol, max_iters):
    n = t0.size
    simplex = np.vstack([t0, t0 + step * np.eye(n)])
    res = minimize(
        f,
        t0,
        method="Nelder-Mead",
        options={
            "initial_simplex": simplex,
            "xatol": xatol,
            "fatol": fatol,
            "maxiter": max_iters,
            "maxfev": 2 * max_iters,
            "adaptive": n > 4,
        },
    )
    return res.x, float(res.fun)


def _solve_curve(spec: ProblemSpec, settings: SolveSettings):
    model = spec.model
    lo, hi = model.domain
    mid, half = (lo + hi) / 2, (hi - lo) / 2
    obj = _Objective(spec, settings)

    def to_u(t):
        return mid + half * np.sin(t)

    def f(t):
        return -obj(to_u(t))

    def to_t(u):
        return np.arcsin(np.clip((u - mid) / half, -1.0, 1.0))

    rng = np.random.default_rng(settings.seed)
    starts = [chebyshev_start(model.k, model.domain)]
    starts += _random_starts(model, settings.starts, rng, spec.tol)

    coarse = []
    for u0 in starts:
        t, fval = _nelder_mead(
            f, to_t(u0), 0.25, settings.coarse_xatol, settings.coarse_fatol, settings.max_iters
        )
        coarse.append((t, fval))

    # refine the best few; ranks are by value, ties by start index
    order = sorted(range(len(coarse)), key=lambda i: (coarse[i][1], i))
    best_i, best_t, best_f = None, None, np.inf
    for i in order[: settings.polish]:
        t, fval = _polish(f, *coarse[i], 0.05, settings)
        if fval < best_f or (fval == best_f and i < best_i):
            best_i, best_t, best_f = i, t, fval

    if best_f >= 0:
        raise OptimizationFailedError(
            "no start reached a support under which c is estimable",
            residual=-best_f / obj.penalty - 1.0,
        )
    u = np.sort(to_u(best_t))

    u = _sqp_refine(spec, u)
    u = _snap(u, model.domain)
    return u, model._map(u), best_i, obj.evals


def _polish(f, t, fval, step, settings):
    """Nelder-Mead restarts with a halving initial simplex until no gain.

    ``fatol`` is applied relative to ``|f|``: phi is as small as 1e-5 for
    large ``Psi``.
    """
    for _ in range(settings.restarts + 1):
        fatol = settings.fatol * max(abs(fval), 1e-300)
        t_new, f_new = _nelder_mead(f, t, step, settings.xatol, fatol, settings.max_iters)
        improved = f_new < fval - fatol
        if f_new <= fval:
            t, fval = t_new, f_new
        if not improved:
            break
        step = max(step / 2, 1e-3)
    return t, fval


def _sqp_refine(spec: ProblemSpec, u, max_iters: int = 200):
    """Sharpen a simplex result by SQP on support points and coefficients.

    Minimizes ``sum_i eps_i a_i`` subject to ``sum_i a_i x(u_i) = c`` with
    the signs ``eps`` held fixed; the optimum is ``1 / gamma``. Unlike the
    penalized ``phi`` this stays well posed when fewer than k points carry
    weight, where ``c`` remains in their span only on a curved manifold and
    Nelder-Mead stalls. Points with weight <= REDUNDANT_WEIGHT are dropped
    first. The refined support is kept unless its ``phi`` is lower than the
    input's by more than REFINE_NOISE (relative).
    """
    model, c, tol = spec.model, spec.c, spec.tol
    lo, hi = model.domain

    def solve_at(v):
        try:
            return signs_and_weights(model._map(v), c, tol=tol)
        except NotEstimableError:
            return None

    start = solve_at(u)
    if start is None:
        return u
    v0 = u[start.weights > REDUNDANT_WEIGHT]
    sol = solve_at(v0)
    if sol is None:
        return u
    m = v0.size
    if c.size > 2 * m:
        # more equality constraints than unknowns; SLSQP does not allow it
        return u
    eps = sol.signs.astype(float)

    def residual(y):
        return model._map(y[:m]).T @ y[m:] - c

    def jacobian(y):
        up = np.minimum(y[:m] + FD_STEP, hi)
        dn = np.maximum(y[:m] - FD_STEP, lo)
        dX = (model._map(up) - model._map(dn)) / (up - dn)[:, None]
        return np.hstack([(dX * y[m:, None]).T, model._map(y[:m]).T])

    res = minimize(
        lambda y: eps @ y[m:],
        np.r_[v0, eps * sol.weights / sol.gamma],
        jac=lambda y: np.r_[np.zeros(m), eps],
        constraints=[{"type": "eq", "fun": residual, "jac": jacobian}],
        bounds=[(lo, hi)] * m + [(None, None)] * m,
        method="SLSQP",
        options={"ftol": 1e-16, "maxiter": max_iters},
    )
    v = np.sort(model.clamp(res.x[:m]))
    if np.any(np.diff(v) <= tol.merge_tol):
        return u
    cand = solve_at(v)
    if cand is None or cand.phi < start.phi * (1 - REFINE_NOISE):
        return u
    return v


def _snap(u, domain):
    """Round support values within SNAP_TOL of 0 or an endpoint onto it."""
    u = u.copy()
    for target in (0.0, *domain):
        if domain[0] <= target <= domain[1]:
            u[np.abs(u - target) <= SNAP_TOL] = target
    return u


def _solve_points(spec: ProblemSpec, settings: SolveSettings):
    """Multi-start exchange over subsets of a finite point set."""
    P = spec.model.points
    n = P.shape[0]
    size = min(spec.model.k, n)
    penalty = settings.penalty_scale * float(spec.c @ spec.c)
    evals = 0

    def value(idx):
        nonlocal evals
        evals += 1
        try:
            return signs_and_weights(P[list(idx)], spec.c, tol=spec.tol).phi
        except NotEstimableError as err:
            return -(1.0 + err.residual) * penalty

    rng = np.random.default_rng(settings.seed)
    best_idx, best_val, best_start = None, -np.inf, -1
    for s in range(settings.starts):
        idx = sorted(rng.choice(n, size=size, replace=False).tolist())
        val = value(idx)
        improved = True
        while improved:
            improved = False
            cand_best, cand_val = None, val
            for pos in range(size):
                for j in range(n):
                    if j in idx:
                        continue
                    trial = sorted(idx[:pos] + [j] + idx[pos + 1 :])
                    tv = value(trial)
                    if tv > cand_val * (1 + 1e-12) + 1e-300:
                        cand_best, cand_val = trial, tv
            if cand_best is not None:
                idx, val, improved = cand_best, cand_val, True
        if val > best_val:
            best_idx, best_val, best_start = idx, val, s
        if size == n:
            break
    if best_val < 0:
        raise OptimizationFailedError(
            "c is not estimable on any subset of the point set",
            residual=-best_val / penalty - 1.0,
        )
    return np.array(best_idx, dtype=float), P[best_idx], best_start, evals


def solve(spec: ProblemSpec, settings: SolveSettings | None = None) -> SolveResult:
    """Multi-start maximization of ``phi`` followed by canonicalization.

    Deterministic for fixed settings: the winner is the largest ``phi``
    with ties broken by the lowest start index (start 0 is the Chebyshev
    extrema guess, then ``settings.starts`` seeded random starts).
    For a :class:`PointSetModel` the ``u`` tags of the design are indices
    into the point set.
    """
    settings = settings or spec.settings or SolveSettings()
    if isinstance(spec.model, PointSetModel):
        u, X, best_start, evals = _solve_points(spec, settings)
    else:
        u, X, best_start, evals = _solve_curve(spec, settings)

    raw = signs_and_weights(X, spec.c, tol=spec.tol).design(u)
    canon = canonicalize(raw, spec.tol)
    solution = signs_and_weights(canon.points, spec.c, tol=spec.tol)
    design = canonicalize(canon.with_weights(solution.weights), spec.tol)
    if design.size != solution.points.shape[0]:
        solution = signs_and_weights(design.points, spec.c, tol=spec.tol)
    return SolveResult(
        design=design,
        solution=solution,
        psi=solution.psi,
        objective_evals=evals,
        best_start=best_start,
        raw_u=u,
    )


def canonicalize(design: DesignMeasure, tol: Tolerances = DEFAULT_TOL) -> DesignMeasure:
    """Presentation form of a design.

    Merges points within ``merge_tol``, drops weights below 1e-6 and
    renormalizes, sorts by ``u`` (or lexicographically by point), and, when
    every ``(u, p)`` has a mirror ``(-u, p')`` with ``|p - p'| < 2e-3``,
    replaces each mirrored pair of weights by their mean.
    """
    d = merge_duplicates(design, tol)
    keep = d.weights >= DROP_WEIGHT
    if not np.any(keep):
        keep = d.weights == d.weights.max()
    d = d.subset(keep)
    w = d.weights / d.weights.sum()
    if d.u is not None:
        order = np.lexsort((np.arange(d.size), d.u))
    else:
        order = np.lexsort(d.points.T[::-1])
    pts, w = d.points[order], w[order]
    u = None if d.u is None else d.u[order]

    if u is not None:
        mirror = np.array(
            [np.argmin(np.abs(u + ui)) for ui in u], dtype=int
        )
        if np.all(np.abs(u + u[mirror]) <= SYMMETRY_TOL) and np.all(
            np.abs(w - w[mirror]) < SYMMETRY_TOL
        ) and np.all(mirror[mirror] == np.arange(u.size)):
            w = (w + w[mirror]) / 2
            w = w / w.sum()
    return DesignMeasure(pts, w, u)


@dataclass(frozen=True, eq=False)
class GlmSolveResult:
    """Locally optimal design for the quadratic logistic model."""

    transform: GlmTransform
    transformed: ProblemSpec
    result: SolveResult
    design: DesignMeasure

    @property
    def psi(self) -> float:
        return self.result.psi


def solve_glm(
    theta_hat,
    c,
    settings: SolveSettings | None = None,
    tol: Tolerances = DEFAULT_TOL,
    domain=(-1.0, 1.0),
    U=None,
) -> GlmSolveResult:
    """Transform, solve for ``B c`` on the transformed curve, map back."""
    g = glm_transform(theta_hat, U)
    base = ProblemSpec(
        model=QuadraticLogisticModel(domain=domain, theta_hat=tuple(theta_hat)),
        c=c,
        settings=settings,
        tol=tol,
    )
    tp = transformed_problem(g, base)
    result = solve(tp, settings)
    design = back_transform(g, result.design, base=base.model)
    return GlmSolveResult(transform=g, transformed=tp, result=result, design=design)
