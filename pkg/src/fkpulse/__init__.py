"""Overdamped pulsating Frenkel-Kontorova chains.

Simulation of one periodic cell under a square-wave pulsed drive,
shift-invariant cell statistics with exact circle optimal transport,
continued-fraction machinery for the equidistribution penalty, and the
closed-form transport-speed lower bounds those pieces feed.
"""

from .bounds import (BoundInputs, golden_mean_bound, on_phase_floor,
                     optimal_tau, speed_lower_bound, typical_spacing_bound)
from .cfrac import (GOLDEN_MEAN, SQRT2, ConvergentSeq, PenaltyParams,
                    continued_fraction, convergents_up_to,
                    equidistribution_penalty, levy_constant,
                    penalty_coefficient, rational_approximant)
from .config import (load_config, model_digest, model_from_config, parse_config,
                     parse_rho, serialize_model)
from .dynamics import (ChainState, DynamicsMode, IntegratorConfig, evolve,
                       is_rotationally_ordered, order_preserved, poincare_map,
                       rhs, second_differences, spacings, width_function)
from .errors import ConfigurationError, FkpulseError, InvariantViolation
from .harness import (InvariantReport, SpeedEstimate, SweepResult, bound_report,
                      measure_speed, read_checkpoint, run_config, sweep,
                      verify_invariants, write_checkpoint)
from .measures import (CircleMeasure, EmpiricalMeasure, avg_width,
                       cell_width_rms, energy, mean_displacement,
                       project_circle, w1_circle, w1_to_uniform)
from .potentials import (AsymmetryParams, InteractionPotential, ModelSpec,
                         PulseSpec, SitePotential, curvature_range,
                         default_model, extract_asymmetry, pulse_value)

__version__ = "0.1.0"
