"""Poisson time changes of simple Markov counting processes.

Simulate counting processes and their unit-rate Poisson subordination by
literal trajectory composition, compute the resulting transition rates and
infinitesimal moments in closed form, verify every closed form against Monte
Carlo estimates and a uniformization oracle, and assemble the blocks into an
over-dispersed SIR counting system.
"""

from .errors import ConfigurationError, DomainError, HorizonError
from .kernels import (
    KernelDistribution,
    birth_kernel,
    death_kernel,
    gamma_mixed_poisson_prob,
    poisson_kernel,
    transient_distribution,
    transition_kernel,
    uniformization_kernel,
)
from .moments import (
    MomentSummary,
    binomial_poisson_moments,
    event_size_moments,
    moments_from_rates,
    ode_path,
    poisson_poisson_moments,
)
from .montecarlo import (
    Comparison,
    EstimateReport,
    estimate_dispersion,
    estimate_interevent,
    estimate_jump_sizes,
    estimate_transition_rates,
)
from .processes import (
    LinearBirth,
    LinearDeath,
    NonlinearDeath,
    Poisson,
    ProcessSpec,
    RateTable,
    is_absorbing,
    rate_at,
)
from .rng import RngStream
from .sir import SirConfig, SirState, simulate_sir, sir_dispersion_probe
from .trajectories import (
    Trajectory,
    compose,
    simulate_poisson_unit,
    simulate_simple,
    simulate_time_changed,
    trajectory_csv,
)
from .transition_rates import (
    TransitionRateRow,
    closed_form_rate,
    rate_function_S,
    rate_row,
    rates_from_kernel,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "DomainError",
    "HorizonError",
    "KernelDistribution",
    "MomentSummary",
    "Comparison",
    "EstimateReport",
    "LinearBirth",
    "LinearDeath",
    "NonlinearDeath",
    "Poisson",
    "ProcessSpec",
    "RateTable",
    "RngStream",
    "SirConfig",
    "SirState",
    "Trajectory",
    "TransitionRateRow",
    "birth_kernel",
    "binomial_poisson_moments",
    "closed_form_rate",
    "compose",
    "death_kernel",
    "estimate_dispersion",
    "estimate_interevent",
    "estimate_jump_sizes",
    "estimate_transition_rates",
    "event_size_moments",
    "gamma_mixed_poisson_prob",
    "is_absorbing",
    "moments_from_rates",
    "ode_path",
    "poisson_kernel",
    "poisson_poisson_moments",
    "rate_at",
    "rate_function_S",
    "rate_row",
    "rates_from_kernel",
    "simulate_poisson_unit",
    "simulate_simple",
    "simulate_sir",
    "simulate_time_changed",
    "sir_dispersion_probe",
    "trajectory_csv",
    "transient_distribution",
    "transition_kernel",
    "uniformization_kernel",
]
