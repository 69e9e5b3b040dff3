"""Monte Carlo checks of the subordinated-process laws against closed forms.

Every estimator is a deterministic function of its configuration and master
seed: replicate i draws from RngStream(master_seed, i), replicates are
aggregated in fixed chunks of 10,000, and partial results are merged in chunk
order, so serial and multi-worker runs produce bit-identical reports.

Tolerance policy: a comparison passes when

    |estimate - reference| <= 3.5 * SE + bias_allowance

where the bias allowance accounts for the O(h) discretization bias of
finite-window estimates and is 2 * h * event_rate * reference for window
estimators (0 for window-free ones).  The empirical distribution checks use a
maximum-discrepancy statistic with critical value 1.63 / sqrt(n), the
asymptotic 1% point.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from .errors import ConfigurationError, DomainError
from .moments import binomial_poisson_moments, moments_from_rates, poisson_poisson_moments
from .processes import LinearDeath, Poisson, ProcessSpec, rate_at
from .rng import RngStream
from .trajectories import simulate_simple, simulate_time_changed
from .transition_rates import rate_function_S, rate_row

_Z = 3.5
_KS_CRITICAL = 1.63  # asymptotic 1% point of the Kolmogorov statistic
_CHUNK = 10_000

THREAD_ENV_VAR = "SUBORDINATE_THREADS"


@dataclass(frozen=True)
class Comparison:
    """One estimated quantity against its closed-form reference."""

    label: str
    estimate: float
    reference: float
    se: float | None
    tolerance: float
    passed: bool
    bias_allowance: float = 0.0

    def to_dict(self) -> dict:
        return {
            "check": self.label,
            "estimate": self.estimate,
            "reference": self.reference,
            "se": self.se,
            "pass": self.passed,
        }


@dataclass(frozen=True)
class EstimateReport:
    """Reproducible record of one verification run."""

    target: str
    comparisons: tuple[Comparison, ...]
    n_reps: int
    master_seed: int
    extras: dict = field(default_factory=dict, compare=False)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.comparisons)


def effective_jobs(n_jobs: int) -> int:
    """Worker count after applying the SUBORDINATE_THREADS cap."""
    jobs = max(1, int(n_jobs))
    cap = os.environ.get(THREAD_ENV_VAR)
    if cap is not None:
        try:
            jobs = min(jobs, max(1, int(cap)))
        except ValueError as exc:
            raise ConfigurationError(f"{THREAD_ENV_VAR} must be an integer") from exc
    return jobs


def _chunk_bounds(n_reps: int) -> list[tuple[int, int]]:
    return [(lo, min(lo + _CHUNK, n_reps)) for lo in range(0, n_reps, _CHUNK)]


def _run_chunks(worker, n_reps: int, n_jobs: int) -> list:
    bounds = _chunk_bounds(n_reps)
    jobs = effective_jobs(n_jobs)
    if jobs <= 1 or len(bounds) <= 1:
        return [worker(b) for b in bounds]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(worker, bounds))


def _window_counts_chunk(bounds, spec: ProcessSpec, h: float, seed: int):
    counts: dict[int, int] = {}
    multi_jump = 0
    for i in range(*bounds):
        traj = simulate_time_changed(spec, h, RngStream(seed, i))
        delta = traj.final_value - spec.initial_state
        counts[delta] = counts.get(delta, 0) + 1
        if any(jump >= 2 for _, jump in traj.events):
            multi_jump += 1
    return counts, multi_jump


def estimate_transition_rates(
    spec: ProcessSpec,
    s: int,
    h: float,
    n_reps: int,
    seed: int,
    eps: float = 1e-10,
    n_jobs: int = 1,
) -> EstimateReport:
    """Finite-window estimate of the subordinated transition rates.

    Simulates n_reps composed paths over [0, h] started at count ``s`` and
    compares the per-window frequency of each observed jump total, divided by
    h, with the closed-form rate for that jump.  The estimator carries an
    O(h) bias from multiple events per window, covered by the documented
    bias allowance.
    """
    if not 0 < h:
        raise DomainError("window h must be positive")
    started = spec.at_state(s)
    parts = _run_chunks(
        partial(_window_counts_chunk, spec=started, h=h, seed=seed), n_reps, n_jobs
    )
    counts: dict[int, int] = {}
    multi_jump = 0
    for chunk_counts, chunk_multi in parts:
        multi_jump += chunk_multi
        for k, c in chunk_counts.items():
            counts[k] = counts.get(k, 0) + c
    row = rate_row(spec, s, eps)
    lam_s = rate_function_S(spec, s)
    comparisons = []
    for k in sorted(counts):
        if k == 0:
            continue
        p_hat = counts[k] / n_reps
        estimate = p_hat / h
        se = math.sqrt(p_hat * (1.0 - p_hat) / n_reps) / h
        reference = row.rates.get(k, 0.0)
        allowance = 2.0 * h * lam_s * reference
        tolerance = _Z * se + allowance
        comparisons.append(
            Comparison(
                label=f"rate_k{k}",
                estimate=estimate,
                reference=reference,
                se=se,
                tolerance=tolerance,
                passed=abs(estimate - reference) <= tolerance,
                bias_allowance=allowance,
            )
        )
    extras = {
        "window": h,
        "event_rate": lam_s,
        "multi_jump_replicates": multi_jump,
        "zero_windows": counts.get(0, 0),
    }
    return EstimateReport("transition_rates", tuple(comparisons), n_reps, seed, extras)


def _first_event_chunk(bounds, spec: ProcessSpec, seed: int, max_clock_events: int):
    times: list[float] = []
    ticks: list[int] = []
    jumps: list[int] = []
    for i in range(*bounds):
        gen = RngStream(seed, i).generator()
        t = 0.0
        g = 0
        while True:
            t += -math.log1p(-gen.random())
            g += 1
            window = simulate_simple(spec, 1.0, gen)
            delta = window.final_value - spec.initial_state
            if delta > 0:
                break
            if g >= max_clock_events:
                raise ConfigurationError(
                    f"no event within {max_clock_events} clock ticks from count "
                    f"{spec.initial_state}"
                )
        times.append(t)
        ticks.append(g)
        jumps.append(delta)
    return times, ticks, jumps


def _first_event_samples(
    spec: ProcessSpec, s: int, n_reps: int, seed: int, n_jobs: int, max_clock_events: int
):
    if rate_at(spec, s) <= 0.0:
        raise DomainError(f"count {s} is absorbing; there is no first event")
    started = spec.at_state(s)
    parts = _run_chunks(
        partial(
            _first_event_chunk, spec=started, seed=seed, max_clock_events=max_clock_events
        ),
        n_reps,
        n_jobs,
    )
    times = np.concatenate([np.asarray(p[0]) for p in parts])
    ticks = np.concatenate([np.asarray(p[1]) for p in parts])
    jumps = np.concatenate([np.asarray(p[2]) for p in parts])
    return times, ticks, jumps


def _mean_comparison(label: str, sample: np.ndarray, reference: float) -> Comparison:
    n = sample.size
    estimate = float(sample.mean())
    se = float(sample.std(ddof=1) / math.sqrt(n)) if n > 1 else float("inf")
    tolerance = _Z * se
    return Comparison(label, estimate, reference, se, tolerance, abs(estimate - reference) <= tolerance)


def estimate_interevent(
    spec: ProcessSpec,
    s: int,
    n_reps: int,
    seed: int,
    n_jobs: int = 1,
    max_clock_events: int = 10**6,
) -> EstimateReport:
    """First holding time of the subordinated process started at count ``s``.

    The holding time is exponential with rate 1 - e^-rate(s); the number of
    clock ticks consumed before the first event is geometric with the same
    success probability.  Both laws are checked on the same replicates: the
    holding-time mean and its full distribution (maximum discrepancy against
    the exponential CDF), and the tick count's mean and success fraction.
    """
    times, ticks, _ = _first_event_samples(spec, s, n_reps, seed, n_jobs, max_clock_events)
    pi = rate_function_S(spec, s)
    comparisons = [_mean_comparison("holding_mean", times, 1.0 / pi)]

    sorted_times = np.sort(times)
    cdf = -np.expm1(-pi * sorted_times)
    grid = np.arange(1, n_reps + 1) / n_reps
    ks = float(np.max(np.maximum(grid - cdf, cdf - (grid - 1.0 / n_reps))))
    ks_critical = _KS_CRITICAL / math.sqrt(n_reps)
    comparisons.append(
        Comparison("holding_max_discrepancy", ks, 0.0, None, ks_critical, ks <= ks_critical)
    )

    comparisons.append(_mean_comparison("clock_ticks_mean", ticks.astype(float), 1.0 / pi))
    p1_hat = float(np.mean(ticks == 1))
    se_p1 = math.sqrt(p1_hat * (1.0 - p1_hat) / n_reps)
    tol_p1 = _Z * se_p1
    comparisons.append(
        Comparison("clock_ticks_success", p1_hat, pi, se_p1, tol_p1, abs(p1_hat - pi) <= tol_p1)
    )
    extras = {"min_holding_time": float(times.min()), "event_probability": pi}
    return EstimateReport("interevent", tuple(comparisons), n_reps, seed, extras)


def estimate_jump_sizes(
    spec: ProcessSpec,
    s: int,
    n_reps: int,
    seed: int,
    eps: float = 1e-10,
    n_jobs: int = 1,
    max_clock_events: int = 10**6,
) -> EstimateReport:
    """First jump size of the subordinated process against the normalized rates."""
    _, _, jumps = _first_event_samples(spec, s, n_reps, seed, n_jobs, max_clock_events)
    row = rate_row(spec, s, eps)
    lam_s = row.rate_function
    comparisons = []
    for k in sorted(set(jumps.tolist())):
        p_hat = float(np.mean(jumps == k))
        se = math.sqrt(p_hat * (1.0 - p_hat) / n_reps)
        reference = row.rates.get(k, 0.0) / lam_s
        tolerance = _Z * se
        comparisons.append(
            Comparison(
                f"jump_k{k}", p_hat, reference, se, tolerance, abs(p_hat - reference) <= tolerance
            )
        )
    return EstimateReport("jump_sizes", tuple(comparisons), n_reps, seed)


def _increment_moments_chunk(
    bounds, spec: ProcessSpec, h: float, seed: int, time_changed: bool
):
    s1 = s2 = s3 = s4 = 0
    for i in range(*bounds):
        rng = RngStream(seed, i)
        if time_changed:
            traj = simulate_time_changed(spec, h, rng)
        else:
            traj = simulate_simple(spec, h, rng)
        y = traj.final_value - spec.initial_state
        y2 = y * y
        s1 += y
        s2 += y2
        s3 += y2 * y
        s4 += y2 * y2
    return s1, s2, s3, s4


def dispersion_from_power_sums(
    sums: tuple[int, int, int, int], n: int
) -> tuple[float, float] | None:
    """Variance-to-mean ratio and its delta-method standard error.

    Returns None when no increments were observed (degenerate sample).
    The SE propagates the sampling covariance of the first two raw moments
    through D = m2/m1 - m1, which needs moments up to order four.
    """
    s1, s2, s3, s4 = sums
    if s1 == 0:
        return None
    m1 = s1 / n
    m2 = s2 / n
    m3 = s3 / n
    m4 = s4 / n
    sample_var = (s2 - n * m1 * m1) / (n - 1)
    estimate = sample_var / m1
    g1 = -m2 / (m1 * m1) - 1.0
    g2 = 1.0 / m1
    cov11 = m2 - m1 * m1
    cov12 = m3 - m1 * m2
    cov22 = m4 - m2 * m2
    var = (g1 * g1 * cov11 + 2.0 * g1 * g2 * cov12 + g2 * g2 * cov22) / n
    return estimate, math.sqrt(max(var, 0.0))


def _dispersion_reference(spec: ProcessSpec, s: int, time_changed: bool, eps: float):
    """(dispersion, increment mean rate) references for the tolerance policy."""
    if not time_changed:
        return 1.0, rate_at(spec, s)
    rate = spec.rate
    if isinstance(rate, Poisson):
        summary = poisson_poisson_moments(rate.alpha)
    elif isinstance(rate, LinearDeath) and s < rate.d0:
        summary = binomial_poisson_moments(rate.delta, rate.d0, s)
    else:
        summary = moments_from_rates(rate_row(spec, s, eps))
    return summary.dispersion, summary.inf_mean


def estimate_dispersion(
    spec: ProcessSpec,
    s: int,
    h: float,
    n_reps: int,
    seed: int,
    time_changed: bool = True,
    eps: float = 1e-10,
    n_jobs: int = 1,
) -> EstimateReport:
    """Variance-to-mean ratio of increments over windows of length ``h``.

    With ``time_changed`` false the un-subordinated base process is measured
    instead, as an equi-dispersed control.  The finite window biases the
    ratio downward by about (increment mean rate) * h, covered by the bias
    allowance.
    """
    if not 0 < h:
        raise DomainError("window h must be positive")
    started = spec.at_state(s)
    parts = _run_chunks(
        partial(
            _increment_moments_chunk, spec=started, h=h, seed=seed, time_changed=time_changed
        ),
        n_reps,
        n_jobs,
    )
    sums = tuple(sum(p[j] for p in parts) for j in range(4))
    stats = dispersion_from_power_sums(sums, n_reps)
    reference, mean_rate = _dispersion_reference(spec, s, time_changed, eps)
    extras = {"window": h, "mean_increments": sums[0] / n_reps}
    if stats is None or reference is None:
        extras["degenerate"] = True
        return EstimateReport("dispersion", (), n_reps, seed, extras)
    estimate, se = stats
    allowance = 2.0 * h * mean_rate
    tolerance = _Z * se + allowance
    comparison = Comparison(
        "dispersion",
        estimate,
        reference,
        se,
        tolerance,
        abs(estimate - reference) <= tolerance,
        bias_allowance=allowance,
    )
    return EstimateReport("dispersion", (comparison,), n_reps, seed, extras)
