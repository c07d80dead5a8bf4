"""Dense linear-algebra kernel: generalized inverses, information matrices,
the c-criterion and span tests.

Every routine takes an explicit :class:`Tolerances`. Matrices here are
small (k <= 25), so everything is dense and SVD based.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .design import DesignMeasure
from .errors import InvalidInputError, NotEstimableError

__all__ = [
    "Tolerances",
    "DEFAULT_TOL",
    "pinv",
    "alt_ginverse",
    "info_matrix",
    "psi",
    "in_colspace",
    "span_residual",
    "numerical_rank",
]


@dataclass(frozen=True)
class Tolerances:
    """Cutoffs used by the rank, span and merge decisions.

    rank_tol
        Singular values of a matrix below ``rank_tol * sigma_max`` are
        treated as zero.
    span_tol
        Relative residual norm accepted by span / column-space membership.
    merge_tol
        Support points closer than this are considered the same point.
    """

    rank_tol: float = 1e-10
    span_tol: float = 1e-8
    merge_tol: float = 1e-6

    def __post_init__(self):
        for name in ("rank_tol", "span_tol", "merge_tol"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise InvalidInputError(f"{name} must be strictly positive, got {value!r}")
        if self.rank_tol >= 1:
            raise InvalidInputError("rank_tol must be < 1")


DEFAULT_TOL = Tolerances()


def _as_matrix(A, name="A") -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise InvalidInputError(f"{name} must be a 2-d array, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return A


def _as_vector(c, name="c") -> np.ndarray:
    c = np.asarray(c, dtype=float)
    if c.ndim != 1:
        raise InvalidInputError(f"{name} must be a vector, got shape {c.shape}")
    if not np.all(np.isfinite(c)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return c


def pinv(A, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Moore-Penrose inverse with a relative singular-value cutoff."""
    A = _as_matrix(A)
    if A.size == 0:
        return np.zeros(A.shape[::-1])
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    keep = s > tol.rank_tol * s[0] if s.size and s[0] > 0 else np.zeros_like(s, bool)
    return (Vt[keep].T / s[keep]) @ U[:, keep].T


def numerical_rank(A, tol: Tolerances = DEFAULT_TOL) -> int:
    A = _as_matrix(A)
    if A.size == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > tol.rank_tol * s[0]))


def alt_ginverse(A, V=None, W=None, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """A generalized inverse of ``A`` that is in general not Moore-Penrose.

    Returns ``G = A+ + (I - A+ A) V + W (I - A A+)``, which satisfies
    ``A G A = A`` for every ``V`` and ``W``.
    """
    A = _as_matrix(A)
    n, m = A.shape
    V = np.zeros((m, n)) if V is None else _as_matrix(V, "V")
    W = np.zeros((m, n)) if W is None else _as_matrix(W, "W")
    if V.shape != (m, n) or W.shape != (m, n):
        raise InvalidInputError(
            f"V and W must have shape {(m, n)}, got {V.shape} and {W.shape}"
        )
    Ap = pinv(A, tol)
    return Ap + (np.eye(m) - Ap @ A) @ V + W @ (np.eye(n) - A @ Ap)


def info_matrix(design: DesignMeasure) -> np.ndarray:
    """``sum_i p_i x_i x_i'`` for a valid probability design."""
    design.check()
    X = design.points
    return (X * design.weights[:, None]).T @ X


def span_residual(c, basis_rows, tol: Tolerances = DEFAULT_TOL) -> float:
    """Relative norm of the part of ``c`` outside the row span of ``basis_rows``."""
    c = _as_vector(c)
    B = _as_matrix(basis_rows, "basis_rows")
    norm_c = np.linalg.norm(c)
    if norm_c == 0:
        return 0.0
    if B.size == 0:
        return 1.0
    _, s, Vt = np.linalg.svd(B, full_matrices=False)
    if s[0] == 0:
        return 1.0
    # singular values of the rows are square roots of those of M = B'B
    Vr = Vt[s > np.sqrt(tol.rank_tol) * s[0]]
    return float(np.linalg.norm(c - Vr.T @ (Vr @ c)) / norm_c)


def in_colspace(c, M, tol: Tolerances = DEFAULT_TOL) -> bool:
    """True iff ``||(I - M M+) c|| <= span_tol * ||c||``."""
    c = _as_vector(c)
    M = _as_matrix(M, "M")
    if M.shape[0] != c.shape[0]:
        raise InvalidInputError(f"dimension mismatch: M is {M.shape}, c has {c.shape[0]}")
    r = c - M @ (pinv(M, tol) @ c)
    return bool(np.linalg.norm(r) <= tol.span_tol * np.linalg.norm(c))


def psi(design: DesignMeasure, c, tol: Tolerances = DEFAULT_TOL, ginverse=None) -> float:
    """The c-criterion ``c' M(design)^- c``.

    With ``ginverse=None`` the Moore-Penrose inverse is used, computed from
    the SVD of the weighted point matrix ``diag(sqrt(p)) X`` rather than of
    ``M`` itself, which halves the loss of precision for ill-conditioned
    supports. Any other generalized inverse of ``M`` may be passed
    explicitly; the value does not depend on the choice when ``c`` is
    estimable.
    """
    design.check()
    c = _as_vector(c)
    if c.shape[0] != design.dim:
        raise InvalidInputError(f"c has length {c.shape[0]}, design points have {design.dim}")
    Y = design.points * np.sqrt(design.weights)[:, None]
    _, s, Vt = np.linalg.svd(Y, full_matrices=False)
    keep = s * s > tol.rank_tol * s[0] ** 2 if s[0] > 0 else np.zeros_like(s, bool)
    Vr = Vt[keep]
    norm_c = np.linalg.norm(c)
    resid = np.linalg.norm(c - Vr.T @ (Vr @ c)) / norm_c if norm_c else 0.0
    if resid > tol.span_tol:
        raise NotEstimableError(
            f"c is not estimable under this design (relative residual {resid:.3g})", resid
        )
    if ginverse is not None:
        G = _as_matrix(ginverse, "ginverse")
        return float(c @ G @ c)
    return float(np.sum(((Vr @ c) / s[keep]) ** 2))
