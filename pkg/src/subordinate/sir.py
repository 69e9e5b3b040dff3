"""Stochastic SIR counting system built from subordinated flow blocks.

The system advances in steps of fixed length: within a step each flow's
per-capita rate is frozen at the step's start (mass-action contact * I / N
for infection, the recovery rate for recovery), and the number of
transitions on the flow over the step is drawn from the flow's transition
kernel for that duration.

A plain flow exits individuals independently, giving the classical binomial
draw with exit probability 1 - e^(-rate * step).  An over-dispersed flow
replaces that block with the subordinated linear-death block: the flow count
follows the time change of a death counting process on the source
compartment, whose kernel is computed by uniformization over the step.  Each
flow uses its own independent subordinating clock.

Flows are drawn from the step-start counts, infection before recovery, so
compartments can never go negative.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .errors import ConfigurationError, DomainError
from .kernels import death_kernel, transient_distribution
from .montecarlo import Comparison, EstimateReport, _Z, dispersion_from_power_sums
from .rng import RngStream

RngLike = RngStream | np.random.Generator


@dataclass(frozen=True)
class SirConfig:
    population: int
    contact_rate: float
    recovery_rate: float
    step: float
    initial_s: int
    initial_i: int
    initial_r: int = 0
    overdispersed_si: bool = False
    overdispersed_ir: bool = False
    kernel_eps: float = 1e-10

    def __post_init__(self) -> None:
        if self.population < 1:
            raise ConfigurationError("population must be positive")
        for name in ("contact_rate", "recovery_rate"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ConfigurationError(f"{name} must be finite and >= 0")
        if not self.step > 0:
            raise ConfigurationError("step must be positive")
        counts = (self.initial_s, self.initial_i, self.initial_r)
        if any(c < 0 for c in counts):
            raise ConfigurationError("initial counts must be non-negative")
        if sum(counts) != self.population:
            raise ConfigurationError("initial counts must sum to the population")

    def to_dict(self) -> dict:
        return {
            "population": self.population,
            "contact_rate": self.contact_rate,
            "recovery_rate": self.recovery_rate,
            "step": self.step,
            "initial": {"S": self.initial_s, "I": self.initial_i, "R": self.initial_r},
            "overdispersed": {"SI": self.overdispersed_si, "IR": self.overdispersed_ir},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SirConfig":
        initial = data.get("initial", {})
        over = data.get("overdispersed", {})
        return cls(
            population=int(data["population"]),
            contact_rate=float(data["contact_rate"]),
            recovery_rate=float(data["recovery_rate"]),
            step=float(data["step"]),
            initial_s=int(initial.get("S", 0)),
            initial_i=int(initial.get("I", 0)),
            initial_r=int(initial.get("R", 0)),
            overdispersed_si=bool(over.get("SI", False)),
            overdispersed_ir=bool(over.get("IR", False)),
            kernel_eps=float(data.get("kernel_eps", 1e-10)),
        )

    @classmethod
    def from_json(cls, text: str) -> "SirConfig":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class SirState:
    """Compartment counts and cumulative flow counters at one time point."""

    time: float
    susceptible: int
    infectious: int
    recovered: int
    n_si: int
    n_ir: int


@lru_cache(maxsize=256)
def overdispersed_flow_pmf(rate: float, source: int, duration: float, eps: float) -> tuple[float, ...]:
    """Distribution of transitions on an over-dispersed flow over one step.

    The flow is the subordinated death block on ``source`` individuals with
    per-capita exit rate ``rate``: states 0..source count transitions, state
    s jumps by k at the binomial rate of the block, and the law at
    ``duration`` is computed by uniformization and renormalized (the series
    remainder is below ``eps``).
    """
    jump_rates = []
    for s in range(source):
        kernel = death_kernel(rate, source, s)
        jump_rates.append({k: p for k, p in kernel.probs.items() if k >= 1})
    jump_rates.append({})
    vector, _ = transient_distribution(jump_rates, 0, duration, eps)
    vector = np.clip(vector, 0.0, None)
    return tuple(vector / vector.sum())


def _draw_flow(
    gen: np.random.Generator, source: int, rate: float, duration: float,
    overdispersed: bool, eps: float,
) -> int:
    if source == 0 or rate <= 0.0:
        return 0
    if not overdispersed:
        return int(gen.binomial(source, -math.expm1(-rate * duration)))
    pmf = overdispersed_flow_pmf(rate, source, duration, eps)
    return int(gen.choice(len(pmf), p=pmf))


def _as_generator(rng: RngLike) -> np.random.Generator:
    return rng.generator() if isinstance(rng, RngStream) else rng


def simulate_sir(
    config: SirConfig, t_end: float, rng: RngLike, record_every: int = 1
) -> list[SirState]:
    """One realization of the SIR counting system over [0, t_end].

    States are recorded at t = 0, every ``record_every``-th step, and at the
    end.  The final step is shortened when t_end is not a multiple of the
    step length.  Population is conserved exactly and the flow counters never
    decrease.
    """
    if not t_end > 0:
        raise DomainError("t_end must be positive")
    if record_every < 1:
        raise DomainError("record_every must be >= 1")
    gen = _as_generator(rng)
    s, i, r = config.initial_s, config.initial_i, config.initial_r
    n_si = n_ir = 0
    records = [SirState(0.0, s, i, r, n_si, n_ir)]
    n_steps = math.ceil(t_end / config.step)
    t = 0.0
    for step_index in range(1, n_steps + 1):
        duration = min(config.step, t_end - t)
        t = step_index * config.step if step_index < n_steps else t_end
        rate_si = config.contact_rate * i / config.population
        new_si = _draw_flow(
            gen, s, rate_si, duration, config.overdispersed_si, config.kernel_eps
        )
        new_ir = _draw_flow(
            gen, i, config.recovery_rate, duration, config.overdispersed_ir, config.kernel_eps
        )
        new_si = min(new_si, s)
        new_ir = min(new_ir, i)
        s -= new_si
        i += new_si - new_ir
        r += new_ir
        n_si += new_si
        n_ir += new_ir
        if step_index % record_every == 0 or step_index == n_steps:
            records.append(SirState(t, s, i, r, n_si, n_ir))
    return records


def sir_states_csv(records: list[SirState]) -> str:
    lines = ["t,S,I,R,N_SI,N_IR"]
    for st in records:
        lines.append(
            f"{st.time:.17g},{st.susceptible},{st.infectious},{st.recovered},{st.n_si},{st.n_ir}"
        )
    return "\n".join(lines) + "\n"


def _flow_pmf_dispersion(pmf: tuple[float, ...]) -> float | None:
    mean = math.fsum(k * p for k, p in enumerate(pmf))
    if mean <= 0:
        return None
    second = math.fsum(k * k * p for k, p in enumerate(pmf))
    return (second - mean * mean) / mean


def sir_dispersion_probe(
    config: SirConfig, window: float, n_reps: int, seed: int
) -> EstimateReport:
    """Variance-to-mean ratio of each flow's increment over one window.

    Replicates draw both flows from the initial state with rates frozen over
    the window (the window acts as a single step).  Each flow's ratio is
    compared with its exact reference: the block-kernel dispersion for an
    over-dispersed flow, 1 - exit probability for a binomial flow.  Flows
    that never move are reported as degenerate and produce no comparison.
    """
    if not window > 0:
        raise DomainError("window must be positive")
    probe_config = replace(config, step=window)
    sums = {"SI": [0, 0, 0, 0], "IR": [0, 0, 0, 0]}
    for rep in range(n_reps):
        gen = RngStream(seed, rep).generator()
        rate_si = probe_config.contact_rate * probe_config.initial_i / probe_config.population
        draws = {
            "SI": _draw_flow(
                gen, probe_config.initial_s, rate_si, window,
                probe_config.overdispersed_si, probe_config.kernel_eps,
            ),
            "IR": _draw_flow(
                gen, probe_config.initial_i, probe_config.recovery_rate, window,
                probe_config.overdispersed_ir, probe_config.kernel_eps,
            ),
        }
        for flow, y in draws.items():
            y2 = y * y
            sums[flow][0] += y
            sums[flow][1] += y2
            sums[flow][2] += y2 * y
            sums[flow][3] += y2 * y2
    comparisons = []
    extras: dict = {"window": window}
    flow_params = {
        "SI": (
            probe_config.initial_s,
            probe_config.contact_rate * probe_config.initial_i / probe_config.population,
            probe_config.overdispersed_si,
        ),
        "IR": (probe_config.initial_i, probe_config.recovery_rate, probe_config.overdispersed_ir),
    }
    for flow, (source, rate, overdispersed) in flow_params.items():
        stats = dispersion_from_power_sums(tuple(sums[flow]), n_reps)
        if source == 0 or rate <= 0.0 or stats is None:
            extras[f"{flow}_degenerate"] = True
            continue
        if overdispersed:
            reference = _flow_pmf_dispersion(
                overdispersed_flow_pmf(rate, source, window, probe_config.kernel_eps)
            )
        else:
            reference = 1.0 - (-math.expm1(-rate * window))
        estimate, se = stats
        tolerance = _Z * se
        comparisons.append(
            Comparison(
                f"{flow.lower()}_dispersion",
                estimate,
                reference,
                se,
                tolerance,
                abs(estimate - reference) <= tolerance,
            )
        )
    return EstimateReport("sir_dispersion_probe", tuple(comparisons), n_reps, seed, extras)
