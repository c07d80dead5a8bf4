"""Finitely supported design measures."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidDesignError, InvalidInputError

WEIGHT_SUM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DesignMeasure:
    """Support points in R^k with probability weights.

    ``u`` optionally tags every support point with the scalar design
    variable it was generated from. The container does not enforce the
    probability constraints on construction (intermediate measures in the
    support reduction are unnormalized); call :meth:`check` or use
    :func:`cdesign.linalg.info_matrix`, which does.
    """

    points: np.ndarray
    weights: np.ndarray
    u: np.ndarray | None = field(default=None)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float, ndmin=2)
        w = np.array(self.weights, dtype=float, ndmin=1)
        if pts.ndim != 2 or w.ndim != 1 or pts.shape[0] != w.shape[0]:
            raise InvalidInputError(
                f"points {pts.shape} and weights {w.shape} do not describe a design"
            )
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(w))):
            raise InvalidInputError("design contains non-finite entries")
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)
        if self.u is not None:
            u = np.array(self.u, dtype=float, ndmin=1)
            if u.shape != w.shape:
                raise InvalidInputError("u tags must match the number of support points")
            u.setflags(write=False)
            object.__setattr__(self, "u", u)

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def check(self) -> DesignMeasure:
        if self.size == 0:
            raise InvalidDesignError("design has no support points")
        if np.any(self.weights < 0):
            raise InvalidDesignError("design has negative weights")
        total = self.weights.sum()
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise InvalidDesignError(f"design weights sum to {total!r}, not 1")
        return self

    def subset(self, mask) -> DesignMeasure:
        u = None if self.u is None else self.u[mask]
        return DesignMeasure(self.points[mask], self.weights[mask], u)

    def with_weights(self, weights) -> DesignMeasure:
        return DesignMeasure(self.points, weights, self.u)

    def __repr__(self):
        if self.u is not None:
            body = ", ".join(f"({a:.4g}, {p:.4g})" for a, p in zip(self.u, self.weights))
        else:
            body = ", ".join(
                f"({np.array2string(x, precision=4)}, {p:.4g})"
                for x, p in zip(self.points, self.weights)
            )
        return f"DesignMeasure({{{body}}})"
