"""c-optimal experimental designs from closed-form optimal signs and weights.

The public API re-exports the main entry points of the submodules::

    >>> import numpy as np
    >>> from cdesign import PolynomialModel, ProblemSpec, solve
    >>> res = solve(ProblemSpec(PolynomialModel(k=3), c=[0.0, 1.0, 0.0]))
    >>> round(res.psi, 6)
    1.0
"""

__version__ = "0.1.0"

from .design import DesignMeasure
from .elfving import (
    WeightSignSolution,
    design_from_support,
    elfving_point,
    phi,
    prune_dependent_support,
    signs_and_weights,
)
from .errors import (
    DesignError,
    DomainError,
    InvalidDesignError,
    InvalidInputError,
    NotEstimableError,
    OptimizationFailedError,
    OracleInfeasibleError,
    TurningPointError,
)
from .linalg import DEFAULT_TOL, Tolerances, alt_ginverse, in_colspace, info_matrix, pinv, psi
from .model import (
    CurveModel,
    GlmTransform,
    PointSetModel,
    PolynomialModel,
    ProblemSpec,
    QuadraticLogisticModel,
    TransformedModel,
    back_transform,
    basis_vector,
    features,
    glm_transform,
    transform_point,
    transformed_problem,
    turning_point_c,
)
from .optimizer import SolveResult, SolveSettings, canonicalize, objective, solve, solve_glm
from .oracle import Certificate, GridSpec, lp_elfving, sign_enumeration, weight_grid
