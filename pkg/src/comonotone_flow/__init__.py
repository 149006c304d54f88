"""Inertial Tikhonov-regularized flows for comonotone inclusions.

Solve ``0 in A(x)`` for a maximally rho-comonotone operator ``A`` by
integrating a second-order system with Hessian-driven damping and a vanishing
Tikhonov term, then check the energy estimates along the computed trajectory.
"""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .linalg import solve_dense, sym_eigen, sym_eigen_min
from .operators import (OperatorSpec, certify_comonotone, check_cocoercivity_sample,
                        diagonal_example, resolvent, yosida)
from .schedules import (DynamicsParams, HypothesisReport, TikhonovSchedule, check_hypotheses,
                        delta_window, eval_schedule)
from .integrator import IntegratorConfig, integrate
from .dynamics import (PhaseState, SystemKind, Trajectory, ds_vector_field,
                       initial_phase_state, simulate, tds_vector_field)
from .diagnostics import (DecayCertificate, EnergyRecord, RateFit, decay_certificate, energy,
                          fit_rate, lemma_ineq_check, viscosity_point)
