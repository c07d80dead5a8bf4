"""Design spaces parametrized by a scalar, and the logistic-model transform.

Most models of interest map a scalar design variable ``u`` in a closed
interval to a regression vector ``x(u)`` in R^k, which shrinks the search
over k points in R^k to a search over k scalars.

For the quadratic logistic model ``P(Y=1|u) = 1/(1+exp(-theta'x(u)))`` with
``x(u) = (1, u, u^2)'``, a locally c-optimal design at a guess ``theta_hat``
is found by solving the linear-model problem for target ``B c`` on the curve
``g(u) = w(z_k) z`` with ``z = B x(u)``, where ``B = ||theta_hat|| U`` for an
orthonormal ``U`` whose last row is ``theta_hat / ||theta_hat||`` and
``w(s) = exp(s/2) / (1 + exp(s))``. The support found there is mapped back
through the ``u`` values it came from.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .design import DesignMeasure
from .errors import DomainError, InvalidInputError, TurningPointError
from .linalg import DEFAULT_TOL, Tolerances

__all__ = [
    "CurveModel",
    "PolynomialModel",
    "QuadraticLogisticModel",
    "TransformedModel",
    "PointSetModel",
    "GlmTransform",
    "ProblemSpec",
    "features",
    "logistic_weight",
    "glm_transform",
    "householder_completion",
    "transform_point",
    "transformed_problem",
    "turning_point_c",
    "back_transform",
    "basis_vector",
]

CLAMP_TOL = 1e-12


@dataclass(frozen=True)
class CurveModel:
    """Base class for maps ``u -> x(u)`` over ``domain = (lo, hi)``."""

    k: int
    domain: tuple = (-1.0, 1.0)

    def __post_init__(self):
        lo, hi = (float(v) for v in self.domain)
        if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
            raise InvalidInputError(f"domain must be a finite interval lo < hi, got {self.domain}")
        if int(self.k) < 1:
            raise InvalidInputError("k must be a positive integer")
        object.__setattr__(self, "domain", (lo, hi))
        object.__setattr__(self, "k", int(self.k))

    def clamp(self, u) -> np.ndarray:
        """Clip ``u`` into the domain, tolerating tiny excursions only."""
        u = np.asarray(u, dtype=float)
        lo, hi = self.domain
        if np.any(u < lo - CLAMP_TOL) or np.any(u > hi + CLAMP_TOL) or not np.all(np.isfinite(u)):
            raise DomainError(f"u outside the domain [{lo}, {hi}]: {u}")
        return np.clip(u, lo, hi)

    def features(self, u) -> np.ndarray:
        """``x(u)``: shape ``(k,)`` for scalar ``u``, ``(n, k)`` for a vector."""
        u = self.clamp(u)
        X = self._map(np.atleast_1d(u))
        return X[0] if u.ndim == 0 else X

    def _map(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class PolynomialModel(CurveModel):
    """``x(u) = (1, u, ..., u^(k-1))'``."""

    def _map(self, u):
        return np.vander(u, self.k, increasing=True)


@dataclass(frozen=True)
class QuadraticLogisticModel(PolynomialModel):
    """Linear-predictor curve ``x(u) = (1, u, u^2)'`` of the quadratic logistic
    model, together with the local parameter guess."""

    k: int = 3
    theta_hat: tuple = ()

    def __post_init__(self):
        super().__post_init__()
        th = tuple(float(t) for t in self.theta_hat)
        if self.k != 3 or len(th) != 3:
            raise InvalidInputError("the quadratic logistic model needs k = 3 and a 3-vector theta_hat")
        object.__setattr__(self, "theta_hat", th)

    def response_probability(self, u) -> np.ndarray:
        eta = self.features(u) @ np.asarray(self.theta_hat)
        return 1.0 / (1.0 + np.exp(-eta))


@dataclass(frozen=True)
class PointSetModel:
    """A finite design space given as explicit points (rows)."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float, ndmin=2)
        if pts.ndim != 2 or pts.shape[0] == 0 or not np.all(np.isfinite(pts)):
            raise InvalidInputError("points must be a non-empty finite 2-d array")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def k(self) -> int:
        return self.points.shape[1]


def features(model: CurveModel, u) -> np.ndarray:
    return model.features(u)


def logistic_weight(zeta) -> np.ndarray:
    """``w(s) = exp(s/2) / (1 + exp(s))``, evaluated without overflow."""
    zeta = np.asarray(zeta, dtype=float)
    a = np.abs(zeta)
    return np.exp(-a / 2) / (1.0 + np.exp(-a))


def householder_completion(direction) -> np.ndarray:
    """Orthonormal ``U`` whose last row is the unit vector along ``direction``.

    ``U`` is the Householder reflection exchanging ``e_k`` and the unit
    direction ``t``; it is symmetric, so its last row equals its last column
    ``U e_k = t``.
    """
    d = np.asarray(direction, dtype=float)
    t = d / np.linalg.norm(d)
    k = t.shape[0]
    v = np.eye(k)[-1] - t
    vv = v @ v
    if vv < 1e-30:
        return np.eye(k)
    U = np.eye(k) - 2.0 * np.outer(v, v) / vv
    U[-1] = t  # exact, not just up to rounding
    return U


@dataclass(frozen=True, eq=False)
class GlmTransform:
    """``B = ||theta_hat|| U`` and the weight function ``w``."""

    theta_hat: np.ndarray
    U: np.ndarray
    B: np.ndarray

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.theta_hat))

    @staticmethod
    def weight(zeta):
        return logistic_weight(zeta)


def glm_transform(theta_hat, U=None) -> GlmTransform:
    """Build the transform for a parameter guess.

    ``U`` defaults to :func:`householder_completion`. Any orthonormal matrix
    with last row ``theta_hat / ||theta_hat||`` may be supplied instead; the
    resulting design does not depend on the choice.
    """
    th = np.asarray(theta_hat, dtype=float)
    if th.ndim != 1 or not np.all(np.isfinite(th)):
        raise InvalidInputError("theta_hat must be a finite vector")
    norm = np.linalg.norm(th)
    if norm == 0:
        raise InvalidInputError("theta_hat must be nonzero")
    if U is None:
        U = householder_completion(th)
    else:
        U = np.array(U, dtype=float)
        k = th.shape[0]
        if U.shape != (k, k):
            raise InvalidInputError(f"U must be {k}x{k}")
        if not np.allclose(U @ U.T, np.eye(k), atol=1e-10):
            raise InvalidInputError("U is not orthonormal")
        if not np.allclose(U[-1], th / norm, atol=1e-10):
            raise InvalidInputError("last row of U must be theta_hat / ||theta_hat||")
    B = norm * U
    B[-1] = th  # the last row is theta_hat exactly
    for arr in (th, U, B):
        arr.setflags(write=False)
    return GlmTransform(theta_hat=th, U=U, B=B)


def transform_point(g: GlmTransform, x) -> np.ndarray:
    """``w(z_k) z`` with ``z = B x``; works row-wise on a 2-d array."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != g.B.shape[1]:
        raise InvalidInputError("dimension mismatch between x and the transform")
    z = x @ g.B.T
    return logistic_weight(z[..., -1])[..., None] * z


@dataclass(frozen=True)
class TransformedModel(CurveModel):
    """The curve ``u -> w(z_k) z``, ``z = B x(u)``, built on a base curve."""

    base: CurveModel = None
    transform: GlmTransform = None

    def _map(self, u):
        return transform_point(self.transform, self.base._map(u))


Model = Union[CurveModel, PointSetModel]


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """A c-optimal design problem: design space, target and tolerances.

    ``settings`` holds a :class:`cdesign.optimizer.SolveSettings`; ``None``
    means the defaults.
    """

    model: Model
    c: np.ndarray
    settings: object = None
    tol: Tolerances = field(default=DEFAULT_TOL)

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        if c.ndim != 1 or not np.all(np.isfinite(c)):
            raise InvalidInputError("c must be a finite vector")
        if not np.any(c):
            raise InvalidInputError("c must be nonzero")
        if c.shape[0] != self.model.k:
            raise InvalidInputError(f"c has length {c.shape[0]} but the model has k = {self.model.k}")
        c.setflags(write=False)
        object.__setattr__(self, "c", c)


def basis_vector(j: int, k: int) -> np.ndarray:
    """``e_j`` in R^k, 1-based."""
    if not 1 <= j <= k:
        raise InvalidInputError(f"e{j} does not exist in dimension {k}")
    return np.eye(k)[j - 1]


def transformed_problem(g: GlmTransform, base: ProblemSpec) -> ProblemSpec:
    """The linear-model problem on the transformed curve with target ``B c``."""
    if not isinstance(base.model, CurveModel):
        raise InvalidInputError("the GLM transform needs a curve model")
    if base.model.k != g.B.shape[0]:
        raise InvalidInputError("model dimension does not match theta_hat")
    model = TransformedModel(k=base.model.k, domain=base.model.domain, base=base.model, transform=g)
    return ProblemSpec(model=model, c=g.B @ base.c, settings=base.settings, tol=base.tol)


def turning_point_c(theta_hat) -> np.ndarray:
    """Target ``(0, -theta_3, theta_2)'`` for the dose maximizing response.

    It is a positive multiple of the gradient of ``-theta_2 / (2 theta_3)``
    with respect to ``(theta_1, theta_2, theta_3)``.
    """
    th = np.asarray(theta_hat, dtype=float)
    if th.shape != (3,):
        raise InvalidInputError("theta_hat must have length 3")
    if th[2] == 0:
        raise TurningPointError("theta_3 = 0: the turning point is undefined")
    return np.array([0.0, -th[2], th[1]])


def back_transform(
    g: GlmTransform, design_on_G: DesignMeasure, u_index=None, base: CurveModel | None = None
) -> DesignMeasure:
    """Map a design on the transformed curve back to the original curve.

    The support is identified through the ``u`` value each point came from
    (``u_index``, or the design's own ``u`` tags); weights are carried over
    unchanged.
    """
    u = design_on_G.u if u_index is None else np.asarray(u_index, dtype=float)
    if u is None or np.shape(u) != (design_on_G.size,):
        raise InvalidInputError("every support point needs the u value it was generated from")
    if np.any(~np.isfinite(u)):
        raise InvalidInputError("missing u provenance for a support point")
    if base is None:
        base = PolynomialModel(k=g.B.shape[0])
    X = base._map(np.asarray(u, dtype=float))
    # consistency: the tagged u must reproduce the transformed point
    expected = transform_point(g, X)
    scale = max(1.0, float(np.abs(design_on_G.points).max()))
    if not np.allclose(expected, design_on_G.points, atol=1e-8 * scale):
        raise InvalidInputError("u tags do not reproduce the transformed support points")
    return DesignMeasure(X, design_on_G.weights, u)
