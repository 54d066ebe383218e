"""Damped nonlinear Schrodinger equation on a star graph with Kirchhoff coupling."""
__version__ = "0.1.0"

from . import kernels
from .graph import (DampingProfile, GraphError, GraphState, StarGraph, build_star,
                    indicator_damping, kirchhoff_flux_residual, no_damping, ramp_damping,
                    sample_function, table_damping)
from .dynamics import (BlowUpError, SimParams, SolverBreakdown, Trajectory, evolve,
                       free_propagate, linear_step, nonlinear_damping_step)
from .norms import (ExponentSet, EnergyTrace, admissible_q, energy_trace, exponents,
                    l2_energy, lp_norm, mixed_norm, triple_norm)
from .duhamel import (HorizonInputs, PicardReport, local_time_horizon, picard_map,
                      picard_solve, strichartz_quotient)
from .analysis import (DecayFit, ObservabilityReport, contraction_prediction, decay_fit,
                       energy_identity_residual, estimate_c, lemma31_check,
                       observability_ratio)
from .config import ConfigError, ExperimentConfig, load_config
