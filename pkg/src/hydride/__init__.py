"""Simulator for dissipative hydrogen storage in metal hydrides.

Three coupled fields evolve on a box grid: absolute temperature, the
hydride phase fraction (constrained to a bounded interval through a
maximal monotone graph), and the gas pressure (Robin exchange with a
zero-pressure exterior).  Each implicit step decouples into a phase
inclusion, a linear pressure solve and a monotone temperature solve; a
diagnostics layer machine-checks every discretely verifiable invariant
(phase bounds, positivity, mass balance, dissipation signs, uniform
energy ledgers).
"""

from .errors import (AdmissibilityError, DomainError, FieldError, GraphError,
                     GraphInconsistency, HydrideError, MaxIterations,
                     MMSDomainError, NoConvergence, ParseError,
                     PositivityViolation)
from .grid import (Grid, RobinLaplacian, ZeroFluxLaplacian, boundary_integrate,
                   h1_seminorm_sq, integrate, norm_l1, norm_l2, norm_linf)
from .model import (AdmissibilityRecord, InternalEnergyMap, ModelParams,
                    MonotoneGraph, PlateauCurve, build_plateau_curve,
                    certify_curve, dissipation_potential, enthalpy,
                    internal_energy, internal_energy_slope,
                    invert_internal_energy)
from .solvers import (InclusionSolveConfig, LinearSolveConfig,
                      conjugate_gradient, solve_phase, solve_pressure,
                      solve_temperature)
from .stepper import (RunConfig, RunResult, State, StepStats,
                      floor_initial_pressure, init_state, make_operators, run,
                      step)
from .diagnostics import (DiagnosticsLedger, check_uniform_in_tau,
                          positivity_report, recompute_ledger,
                          tau_cauchy_study)
from .mms import ManufacturedCase, builtin_case, mms_run
from .config import CliConfig, emit_config, initial_fields, parse_config

__version__ = "0.1.0"
