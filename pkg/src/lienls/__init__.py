"""Noncommutative integration and reduction of nonlinear Schrodinger
equations on Lie groups.

Typical use::

    from lienls import catalog
    e = catalog.load("e2")
    e.reduced().coefficients()
"""

__version__ = "0.1.0"

from . import errors, expr  # noqa: E402
from .algebra import LieAlgebra, Subalgebra, index, jacobi_residual  # noqa: E402
from .catalog import CatalogEntry, load, verify_entry  # noqa: E402
from .geometry import GeometryCache, MetricSpec  # noqa: E402
from .group import GroupChart, left_invariant_frame, right_invariant_frame  # noqa: E402
from .orbit import DKernelSpec, LambdaRep, lambda_rep, polarization_check  # noqa: E402
from .reduction import (  # noqa: E402
    AnsatzSpec,
    GroupNLSE,
    ReducedEquation,
    factorization_check,
    generator_transport_check,
    kappa_check,
    lift,
    reduce_equation,
)
from .solver import Grid1D, amplitude_phase_solve, bright_soliton, ode_integrate, split_step_evolve  # noqa: E402

__all__ = [
    "__version__",
    "errors",
    "expr",
    "LieAlgebra",
    "Subalgebra",
    "index",
    "jacobi_residual",
    "CatalogEntry",
    "load",
    "verify_entry",
    "GeometryCache",
    "MetricSpec",
    "GroupChart",
    "left_invariant_frame",
    "right_invariant_frame",
    "DKernelSpec",
    "LambdaRep",
    "lambda_rep",
    "polarization_check",
    "AnsatzSpec",
    "GroupNLSE",
    "ReducedEquation",
    "factorization_check",
    "generator_transport_check",
    "kappa_check",
    "lift",
    "reduce_equation",
    "Grid1D",
    "amplitude_phase_solve",
    "bright_soliton",
    "ode_integrate",
    "split_step_evolve",
]
