"""Closed-form optimal signs and weights for a candidate support.

For linearly independent points ``x_1..x_l`` with ``c`` in their span, let
``M = sum a_i x_i x_i'`` (``a_i = 1/l`` by default) and ``v_i = x_i' M^- c``.
Then

* the optimal signs are ``sign(v_i)``,
* the optimal weights are ``p_i = a_i |v_i| / sum_j a_j |v_j|``,
* the Elfving point ``z = sum_i sign(v_i) p_i x_i`` equals ``gamma * c`` with
  ``gamma = 1 / sum_j a_j |v_j|``,
* and the design ``{(x_i, p_i)}`` minimizes ``c' M(xi)^- c`` over all designs
  supported on those points, with minimum ``||c||^2 / ||z||^2 = gamma^-2``.

Maximizing ``||z||^2`` over k-tuples of design points therefore solves the
c-optimal design problem (see :mod:`cdesign.optimizer`).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .design import DesignMeasure
from .errors import InvalidInputError, NotEstimableError
from .linalg import DEFAULT_TOL, Tolerances, numerical_rank, psi

__all__ = [
    "WeightSignSolution",
    "signs_and_weights",
    "elfving_point",
    "phi",
    "design_from_support",
    "prune_dependent_support",
    "merge_duplicates",
]

log = logging.getLogger(__name__)

ZERO_WEIGHT = 1e-12


@dataclass(frozen=True, eq=False)
class WeightSignSolution:
    """Optimal signs/weights for one support, aligned with the input points."""

    points: np.ndarray
    c: np.ndarray
    signs: np.ndarray
    weights: np.ndarray
    elfving_point: np.ndarray
    gamma: float
    psi: float

    @property
    def phi(self) -> float:
        return float(self.elfving_point @ self.elfving_point)

    def design(self, u=None) -> DesignMeasure:
        """The design on the positive-weight points."""
        keep = self.weights > ZERO_WEIGHT
        w = self.weights[keep]
        u = None if u is None else np.asarray(u, dtype=float)[keep]
        return DesignMeasure(self.points[keep], w / w.sum(), u)


def _prepare(points, c):
    X = np.array(points, dtype=float, ndmin=2)
    c = np.asarray(c, dtype=float)
    if X.shape[0] == 0 or X.size == 0:
        raise InvalidInputError("empty support")
    if c.ndim != 1 or X.ndim != 2 or X.shape[1] != c.shape[0]:
        raise InvalidInputError(f"points {X.shape} and c {c.shape} do not conform")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(c))):
        raise InvalidInputError("non-finite entries in points or c")
    if not np.any(c):
        raise InvalidInputError("c must be nonzero")
    return X, c


def _coefficients(X, c, a, tol):
    """``v_i = x_i' M^+ c`` with ``M = X' diag(a) X``, plus the numerical rank.

    Uses the SVD of ``diag(sqrt(a)) X`` so that conditioning is that of the
    point matrix, not of ``M``.
    """
    Y = X * np.sqrt(a)[:, None]
    _, s, Vt = np.linalg.svd(Y, full_matrices=False)
    keep = s * s > tol.rank_tol * s[0] ** 2 if s[0] > 0 else np.zeros_like(s, bool)
    Vr, sr = Vt[keep], s[keep]
    coords = Vr @ c
    resid = np.linalg.norm(c - Vr.T @ coords) / np.linalg.norm(c)
    if resid > tol.span_tol:
        raise NotEstimableError(
            f"c is not in the span of the support (relative residual {resid:.3g})", resid
        )
    v = X @ (Vr.T @ (coords / sr**2))
    return v, int(keep.sum())


def signs_and_weights(
    points,
    c,
    a=None,
    *,
    ginverse=None,
    tol: Tolerances = DEFAULT_TOL,
) -> WeightSignSolution:
    """Optimal signs, weights, Elfving point and criterion for a support.

    Parameters
    ----------
    points : (l, k) array_like
        Candidate support points, one per row.
    c : (k,) array_like
        Target vector; must lie in the span of ``points``.
    a : (l,) array_like, optional
        Strictly positive constants defining ``M = sum a_i x_i x_i'``.
        Defaults to ``1/l``. The result does not depend on them.
    ginverse : (k, k) array_like, optional
        A generalized inverse of ``M`` to use instead of the Moore-Penrose
        inverse. The result does not depend on the choice either.
    tol : Tolerances

    Returns
    -------
    WeightSignSolution
        Arrays aligned with ``points``. A point with ``x_i' M^- c = 0``
        gets sign +1 and weight 0.

    Raises
    ------
    NotEstimableError
        If ``c`` is not in the span of the points.
    InvalidInputError
        On an empty support, a zero ``c`` or non-positive ``a``.

    Notes
    -----
    Linearly dependent supports are first reduced with
    :func:`prune_dependent_support`; dropped points get weight 0.
    """
    X, c = _prepare(points, c)
    ell = X.shape[0]
    if a is None:
        a = np.full(ell, 1.0 / ell)
    else:
        a = np.asarray(a, dtype=float)
        if a.shape != (ell,) or not np.all(a > 0) or not np.all(np.isfinite(a)):
            raise InvalidInputError("a must hold one strictly positive value per point")

    if ginverse is None:
        v, rank = _coefficients(X, c, a, tol)
    else:
        G = np.asarray(ginverse, dtype=float)
        M = (X * a[:, None]).T @ X
        _coefficients(X, c, a, tol)  # estimability check only
        rank = numerical_rank(X, Tolerances(np.sqrt(tol.rank_tol), tol.span_tol, tol.merge_tol))
        v = X @ (G @ c)
        if not np.allclose(M @ G @ M, M, atol=1e-8 * max(1.0, np.abs(M).max())):
            raise InvalidInputError("ginverse is not a generalized inverse of M")

    if rank < ell:
        return _dependent_support(X, c, tol)

    av = a * np.abs(v)
    total = av.sum()
    weights = av / total
    signs = np.where(v < 0, -1.0, 1.0)
    signs[weights <= ZERO_WEIGHT] = 1.0
    weights[weights <= ZERO_WEIGHT] = 0.0
    weights /= weights.sum()
    z = (signs * weights) @ X
    gamma = 1.0 / total
    return WeightSignSolution(
        points=X,
        c=c,
        signs=signs,
        weights=weights,
        elfving_point=z,
        gamma=float(gamma),
        psi=float(c @ c / (z @ z)),
    )


def _dependent_support(X, c, tol):
    ell = X.shape[0]
    start = DesignMeasure(X, np.full(ell, 1.0 / ell), u=np.arange(ell, dtype=float))
    reduced = prune_dependent_support(start, c, tol)
    idx = reduced.u.astype(int)
    log.debug("support of %d points is dependent; reduced to indices %s", ell, idx.tolist())
    inner = signs_and_weights(reduced.points, c, tol=tol)
    signs = np.ones(ell)
    weights = np.zeros(ell)
    signs[idx] = inner.signs
    weights[idx] = inner.weights
    return WeightSignSolution(
        points=X,
        c=c,
        signs=signs,
        weights=weights,
        elfving_point=inner.elfving_point,
        gamma=inner.gamma,
        psi=inner.psi,
    )


def elfving_point(points, c, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    return signs_and_weights(points, c, tol=tol).elfving_point


def phi(points, c, tol: Tolerances = DEFAULT_TOL) -> float:
    """Squared norm of the Elfving point, ``||c||^2 / Psi``."""
    return signs_and_weights(points, c, tol=tol).phi


def design_from_support(points, c, u=None, tol: Tolerances = DEFAULT_TOL) -> DesignMeasure:
    """Optimal design on a prescribed (possibly suboptimal) support.

    Points that receive zero weight are dropped. ``u`` optionally tags the
    points with their design-variable values.
    """
    return signs_and_weights(points, c, tol=tol).design(u)


def merge_duplicates(design: DesignMeasure, tol: Tolerances = DEFAULT_TOL) -> DesignMeasure:
    """Merge support points closer than ``merge_tol``, summing their weights.

    Distances are measured on the ``u`` tags when present, otherwise on the
    points. The first point of every cluster is kept.
    """
    coords = design.points if design.u is None else design.u[:, None]
    n = design.size
    owner = np.arange(n)
    for i in range(n):
        if owner[i] != i:
            continue
        d = np.max(np.abs(coords[i + 1 :] - coords[i]), axis=1) if i + 1 < n else np.empty(0)
        for j in np.nonzero(d <= tol.merge_tol)[0] + i + 1:
            if owner[j] == j:
                owner[j] = i
    reps = np.unique(owner)
    if reps.size == n:
        return design
    weights = np.array([design.weights[owner == r].sum() for r in reps])
    u = None if design.u is None else design.u[reps]
    return DesignMeasure(design.points[reps], weights, u)


def prune_dependent_support(
    design: DesignMeasure, c, tol: Tolerances = DEFAULT_TOL
) -> DesignMeasure:
    """Reduce a design to a linearly independent support without raising Psi.

    Each pass rewrites the design in signed form ``z = sum e_i q_i x_i`` on the
    ray through ``c`` (which can only lower the criterion), picks a null
    combination ``sum alpha_i e_i x_i = 0`` oriented so that
    ``sum alpha_i >= 0``, and moves along it by
    ``delta = min{q_i / alpha_i : alpha_i > 0}``. One point loses all its
    weight; the mass ``delta * sum alpha_i`` that would sit at the origin is
    redistributed by renormalizing, which pushes ``z`` further out along the
    ray. Passes repeat until the support is linearly independent.
    """
    X, c = _prepare(design.points, c)
    design = merge_duplicates(design, tol)
    design = design.subset(design.weights > ZERO_WEIGHT)
    design = design.with_weights(design.weights / design.weights.sum())
    psi(design, c, tol)  # raises NotEstimableError

    row_tol = Tolerances(np.sqrt(tol.rank_tol), tol.span_tol, tol.merge_tol)
    while numerical_rank(design.points, row_tol) < design.size:
        X = design.points
        M = (X * design.weights[:, None]).T @ X
        t = X @ np.linalg.lstsq(M, c, rcond=None)[0]
        q = design.weights * np.abs(t)
        q /= q.sum()
        eps = np.where(t < 0, -1.0, 1.0)
        keep = q > ZERO_WEIGHT
        if not np.all(keep):
            design = DesignMeasure(X[keep], q[keep] / q[keep].sum(), None if design.u is None else design.u[keep])
            continue

        null = scipy.linalg.null_space((eps[:, None] * X).T)
        if null.shape[1] == 0:
            # rank decision and null space disagree at the tolerance boundary
            null = np.linalg.svd((eps[:, None] * X).T)[2][-1:].T
        alpha = null[:, 0]
        if alpha.sum() < 0:
            alpha = -alpha
        pos = alpha > 1e-14 * np.abs(alpha).max()
        ratios = np.full(alpha.shape, np.inf)
        ratios[pos] = q[pos] / alpha[pos]
        drop = int(np.argmin(ratios))
        delta = ratios[drop]
        q_new = q - delta * alpha
        q_new[drop] = 0.0
        q_new = np.clip(q_new, 0.0, None)
        keep = q_new > ZERO_WEIGHT
        q_new = q_new[keep]
        design = DesignMeasure(
            X[keep], q_new / q_new.sum(), None if design.u is None else design.u[keep]
        )
    return design
