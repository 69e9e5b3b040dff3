"""Infinitesimal moments and deterministic approximations.

For a process with transition rates q_{s,k}, the infinitesimal mean and
variance of its increments are the rate-weighted jump moments

    mean(s) = sum_k k   * q_{s,k}
    var(s)  = sum_k k^2 * q_{s,k}

and their ratio is the infinitesimal dispersion index.  Subordinated
processes allow jumps larger than one, so their dispersion exceeds one away
from states where only unit jumps remain possible.

Closed forms are provided for the constant-rate and linear-death families.
For constant rate alpha the event rate is 1 - e^-alpha and jump sizes
conditional on an event are zero-truncated Poisson; the product of the two
collapses to mean alpha and variance alpha * (1 + alpha), with dispersion
1 + alpha.  (The jump-size law of the linear birth family is known, but its
increment moments do not reduce the same way, so that family is served
numerically with certified error bounds instead.)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError
from .processes import LinearBirth, LinearDeath, NonlinearDeath, Poisson, ProcessSpec
from .transition_rates import TransitionRateRow


@dataclass(frozen=True)
class MomentSummary:
    """Infinitesimal mean, variance and dispersion index at one count.

    ``dispersion`` is None at absorbing counts where no events occur.
    ``error_bound`` is a certified bound on how much kernel truncation can
    move the reported variance (the mean error is never larger).
    """

    state: int
    inf_mean: float
    inf_var: float
    dispersion: float | None
    error_bound: float = 0.0


def moments_from_rates(row: TransitionRateRow) -> MomentSummary:
    """Rate-weighted jump moments of a transition rate row.

    The truncated tail can hide jumps up to the support bound (finite
    support) or jumps decaying geometrically beyond the stored maximum
    (certified ratio r), so the variance error is bounded by
    tail * support^2, respectively tail * (K + 1 + 2/(1-r))^2.
    """
    mean = math.fsum(k * q for k, q in row.rates.items())
    var = math.fsum(k * k * q for k, q in row.rates.items())
    dispersion = var / mean if mean > 0 else None
    if row.tail_bound == 0.0:
        error = 0.0
    elif row.support_bound is not None:
        error = row.tail_bound * row.support_bound**2
    elif row.tail_ratio is not None and row.tail_ratio < 1.0:
        k_max = max(row.rates, default=0)
        guard = 2.0 / (1.0 - row.tail_ratio)
        error = row.tail_bound * (k_max + 1 + guard) ** 2
    else:
        raise DomainError(
            "cannot certify a moment error bound: row has tail mass but no decay information"
        )
    return MomentSummary(row.state, mean, var, dispersion, error)


def poisson_poisson_moments(alpha: float) -> MomentSummary:
    """Closed-form increment moments of the subordinated constant-rate process.

    Events occur at rate 1 - e^-alpha with zero-truncated Poisson sizes;
    multiplying rate by conditional jump moments gives mean alpha, variance
    alpha * (1 + alpha), dispersion 1 + alpha, independent of the count.
    """
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha!r}")
    return MomentSummary(0, alpha, alpha * (1.0 + alpha), 1.0 + alpha)


def binomial_poisson_moments(delta: float, d0: int, s: int) -> MomentSummary:
    """Closed-form increment moments of the subordinated linear-death process."""
    if not delta > 0:
        raise DomainError(f"delta must be positive, got {delta!r}")
    if not 0 <= s < d0:
        raise DomainError(f"count {s} outside 0..{d0 - 1}")
    p = -math.expm1(-delta)
    mean = (d0 - s) * p
    dispersion = 1.0 + (d0 - s - 1) * p
    return MomentSummary(s, mean, mean * dispersion, dispersion)


def event_size_moments(row: TransitionRateRow) -> tuple[float, float]:
    """Mean and variance of the jump size conditional on a jump occurring.

    This is the normalized jump-size law (rates divided by the event rate);
    it differs from the raw unit-time increment law, which includes the
    no-jump outcome.
    """
    if not row.rate_function > 0:
        raise DomainError(f"count {row.state} is absorbing; jump sizes are undefined")
    mean = math.fsum(k * q for k, q in row.rates.items()) / row.rate_function
    second = math.fsum(k * k * q for k, q in row.rates.items()) / row.rate_function
    return mean, second - mean * mean


_ODE_STEP = 1e-3


def _base_slope(spec: ProcessSpec, x: float) -> float:
    rate = spec.rate
    if isinstance(rate, Poisson):
        return rate.alpha
    if isinstance(rate, LinearBirth):
        return rate.beta * max(x, 0.0)
    if isinstance(rate, LinearDeath):
        return rate.delta * max(rate.d0 - x, 0.0)
    if isinstance(rate, NonlinearDeath):
        return max(x * (rate.d0 - x), 0.0) if x < rate.d0 else 0.0
    raise DomainError(f"no continuous rate law for family {rate.family!r}")


def _time_changed_slope(spec: ProcessSpec, s: float) -> float:
    rate = spec.rate
    if isinstance(rate, Poisson):
        return rate.alpha * -math.expm1(-rate.alpha)
    if isinstance(rate, LinearDeath):
        return -math.expm1(-rate.delta) * max(rate.d0 - s, 0.0)
    raise DomainError(
        f"no deterministic approximation of the subordinated {rate.family!r} family"
    )


def ode_path(
    spec: ProcessSpec, time_changed: bool, s0: float, t_grid: list[float]
) -> list[float]:
    """Deterministic approximating path, integrated with classical RK4.

    With ``time_changed`` false the slope is the family's rate law read as a
    function of a continuous state; with it true the slope is the family's
    subordinated approximation (constant alpha * (1 - e^-alpha) for the
    constant-rate family, (d0 - s) * (1 - e^-delta) for linear death).  The
    fixed step is 1e-3, ample for these non-stiff right-hand sides.
    """
    if not t_grid or t_grid[0] != 0:
        raise DomainError("t_grid must start at 0")
    if any(b <= a for a, b in zip(t_grid, t_grid[1:])):
        raise DomainError("t_grid must be strictly increasing")
    slope = _time_changed_slope if time_changed else _base_slope
    values = [float(s0)]
    x = float(s0)
    for a, b in zip(t_grid, t_grid[1:]):
        n_steps = max(1, math.ceil((b - a) / _ODE_STEP))
        h = (b - a) / n_steps
        for _ in range(n_steps):
            k1 = slope(spec, x)
            k2 = slope(spec, x + 0.5 * h * k1)
            k3 = slope(spec, x + 0.5 * h * k2)
            k4 = slope(spec, x + h * k3)
            x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        values.append(x)
    return values
