"""Numerical laboratory for nonlinear Dirichlet forms on finite measured graphs.

Layers, bottom up: measured spaces and lattice operations (space), energy
functionals with proximal solves and structure checks (forms), gauge norms
(gauge), subset capacities (capacity), embedding equivalences (embed),
resolvent problems and boundedness certificates (elliptic), the gradient-flow
semigroup and smoothing experiments (flow), instance files (instances), and
the command line (cli).
"""

__version__ = "0.1.0"

from .capacity import CapacityResult, capacity, chebyshev_check, is_polar
from .elliptic import (BoundednessCertificate, EllipticSolution, LevelSetTrace,
                       boundedness_certificate, level_decay_check, resolve,
                       resolvent_identity_check, stampacchia_vanishing_level)
from .embed import (IsocapScanResult, PoincareEstimate, isocap_scan,
                    linfty_embedding_check, lq_embedding_check,
                    poincare_constant, weak_lp_embedding_check)
from .flow import FlowTrace, contraction_checks, evolve, smoothing_experiment
from .forms import (DEFAULT_SOLVER, FormInstance, FormSpec, PiecewisePhi,
                    SolverConfig, SolverError, submodularity_suite,
                    truncation_suite)
from .gauge import GaugeResult, dirichlet_norm, dirichlet_seminorm
from .instances import (Instance, InstanceError, bundled_names, load_bundled,
                        load_instance)
from .reports import InequalityReport
from .space import FiniteMeasuredSpace

__all__ = [
    "__version__", "FiniteMeasuredSpace", "InequalityReport",
    "FormSpec", "FormInstance", "PiecewisePhi", "SolverConfig", "SolverError",
    "DEFAULT_SOLVER", "submodularity_suite", "truncation_suite",
    "GaugeResult", "dirichlet_norm", "dirichlet_seminorm",
    "CapacityResult", "capacity", "is_polar", "chebyshev_check",
    "PoincareEstimate", "poincare_constant", "IsocapScanResult", "isocap_scan",
    "linfty_embedding_check", "weak_lp_embedding_check", "lq_embedding_check",
    "EllipticSolution", "LevelSetTrace", "resolve", "level_decay_check",
    "stampacchia_vanishing_level", "resolvent_identity_check",
    "BoundednessCertificate", "boundedness_certificate",
    "FlowTrace", "evolve", "contraction_checks", "smoothing_experiment",
    "Instance", "InstanceError", "bundled_names", "load_bundled", "load_instance",
]
