"""Distributions of the base count after one unit of operational time.

For a counting process started at count ``s``, the distribution of the count
one time unit later is exactly the table of transition rates of the process
subordinated by a unit-rate Poisson clock, so these kernels are the central
quantity of the package.  Three families admit closed forms:

* constant rate ``alpha``      -> jump ~ Poisson(alpha)
* linear birth rate ``beta*x`` -> jump ~ NegativeBinomial(s, 1 - e^-beta)
* linear death rate            -> jump ~ Binomial(d0 - s, 1 - e^-delta)

Everything else is handled numerically by uniformization: the transient
distribution is a Poisson mixture of powers of the uniformized one-step
matrix, truncated with a certified bound on the omitted mass.  All factorials
and binomial coefficients are evaluated in log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.special import gammaln

from .errors import ConfigurationError, DomainError
from .processes import LinearBirth, LinearDeath, NonlinearDeath, Poisson, ProcessSpec, RateTable, rate_at

# Tolerated floating-point slack on "probabilities sum to one".
_NORMALIZATION_SLACK = 1e-12

# The Poisson mixture weights are accumulated in linear space; beyond this
# uniformization rate * time the leading weight would underflow.
_MAX_UNIFORMIZATION_MASS = 700.0

# Truncated kernels refuse to materialize more than this many entries; the
# linear-birth kernel's support grows like e^beta, so huge rate parameters
# must be rejected rather than ground through term by term.
_MAX_KERNEL_TERMS = 1_000_000


@dataclass(frozen=True)
class KernelDistribution:
    """Distribution of the count increment over one unit of time.

    ``probs`` maps jump size k >= 0 to probability, conditioned on starting
    at ``base_state``.  ``tail_bound`` is a certified upper bound on all mass
    not represented in ``probs``; it is exactly zero for finite-support
    families.  ``tail_ratio`` (when known) certifies that beyond the stored
    support the probabilities decay at least geometrically with that ratio,
    and ``support_bound`` gives the largest possible jump when it is finite.
    Both feed downstream moment error bounds.
    """

    base_state: int
    probs: Mapping[int, float]
    tail_bound: float
    tail_ratio: float | None = None
    support_bound: int | None = None

    _total: float = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.base_state < 0:
            raise ValueError("base_state must be non-negative")
        if self.tail_bound < 0:
            raise ValueError("tail_bound must be non-negative")
        for k, p in self.probs.items():
            if k < 0:
                raise ValueError("jump sizes must be non-negative")
            if not -_NORMALIZATION_SLACK <= p <= 1 + _NORMALIZATION_SLACK:
                raise ValueError(f"probability out of [0, 1] at jump {k}: {p!r}")
        total = math.fsum(self.probs.values()) + self.tail_bound
        if abs(total - 1.0) > _NORMALIZATION_SLACK:
            raise ValueError(f"probabilities plus tail bound sum to {total!r}, not 1")
        object.__setattr__(self, "_total", total)

    def to_dict(self) -> dict:
        return {
            "s": self.base_state,
            "probs": {str(k): self.probs[k] for k in sorted(self.probs)},
            "tail_bound": self.tail_bound,
        }


def poisson_kernel(alpha: float, s: int = 0, eps: float = 1e-12) -> KernelDistribution:
    """Poisson(alpha) jump distribution, independent of the starting count.

    Truncated at the first k where the remaining Poisson tail is certifiably
    below ``eps`` (ratio test: successive terms shrink by at least
    alpha / (k + 2) once k >= alpha).
    """
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha!r}")
    if not eps > 0:
        raise DomainError("eps must be positive")
    if s < 0:
        raise DomainError("starting count must be non-negative")
    log_alpha = math.log(alpha)
    probs: dict[int, float] = {}
    k = 0
    while True:
        probs[k] = math.exp(k * log_alpha - alpha - gammaln(k + 1))
        ratio = alpha / (k + 2)
        if ratio < 1.0:
            next_term = math.exp((k + 1) * log_alpha - alpha - gammaln(k + 2))
            if next_term / (1.0 - ratio) <= eps:
                break
        if k >= _MAX_KERNEL_TERMS:
            raise ConfigurationError(
                f"Poisson kernel truncation needs more than {_MAX_KERNEL_TERMS} terms"
            )
        k += 1
    tail = max(0.0, 1.0 - math.fsum(probs.values()))
    return KernelDistribution(s, probs, tail, tail_ratio=alpha / (k + 2))


def birth_kernel(
    beta: float, s: int, eps: float = 1e-12, allow_absorbing: bool = False
) -> KernelDistribution:
    """Negative binomial jump distribution of a linear birth process.

    Success probability 1 - e^-beta with ``s`` failures until stopping.  The
    starting count must be positive; count 0 is absorbing and is only served
    (as a point mass at zero) when ``allow_absorbing`` is set.  Truncation is
    certified through the non-increasing term ratio p * (s + k) / (k + 1).
    """
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta!r}")
    if not eps > 0:
        raise DomainError("eps must be positive")
    if s < 0:
        raise DomainError("starting count must be non-negative")
    if s == 0:
        if allow_absorbing:
            return KernelDistribution(0, {0: 1.0}, 0.0, support_bound=0)
        raise DomainError("count 0 is absorbing for linear birth; no jump distribution")
    p = -math.expm1(-beta)
    log_p = math.log(p)
    probs: dict[int, float] = {}
    k = 0
    while True:
        log_term = gammaln(s + k) - gammaln(k + 1) - gammaln(s) - beta * s + k * log_p
        probs[k] = math.exp(log_term)
        ratio = p * (s + k + 1) / (k + 2)
        if ratio < 1.0:
            next_term = probs[k] * p * (s + k) / (k + 1)
            if next_term / (1.0 - ratio) <= eps:
                break
        if k >= _MAX_KERNEL_TERMS:
            raise ConfigurationError(
                f"birth kernel truncation needs more than {_MAX_KERNEL_TERMS} terms; "
                f"the support grows like e^beta"
            )
        k += 1
    tail = max(0.0, 1.0 - math.fsum(probs.values()))
    return KernelDistribution(s, probs, tail, tail_ratio=p * (s + k + 1) / (k + 2))


def death_kernel(delta: float, d0: int, s: int) -> KernelDistribution:
    """Binomial jump distribution of a linear death counting process.

    ``d0 - s`` trials with success probability 1 - e^-delta; finite support,
    so the tail bound is exactly zero.  At ``s = d0`` the kernel is the point
    mass at zero jumps.
    """
    if not delta > 0:
        raise DomainError(f"delta must be positive, got {delta!r}")
    if d0 < 1:
        raise DomainError(f"d0 must be a positive integer, got {d0!r}")
    if not 0 <= s <= d0:
        raise DomainError(f"starting count {s} outside 0..{d0}")
    n = d0 - s
    if n == 0:
        return KernelDistribution(s, {0: 1.0}, 0.0, support_bound=0)
    p = -math.expm1(-delta)
    q = math.exp(-delta)
    # Anchor at the mode and recur outward with exact term ratios; a single
    # log-gamma evaluation keeps the sum within ~n ulps of one even for
    # thousands of trials, where per-term exp(log ...) evaluation drifts.
    mode = min(int((n + 1) * p), n)
    log_mode = (
        gammaln(n + 1)
        - gammaln(mode + 1)
        - gammaln(n - mode + 1)
        + mode * math.log(p)
        - delta * (n - mode)
    )
    values = np.empty(n + 1)
    values[mode] = math.exp(log_mode)
    if mode < n:
        ks = np.arange(mode, n, dtype=float)
        forward = (n - ks) / (ks + 1.0) * (p / q)
        values[mode + 1 :] = values[mode] * np.cumprod(forward)
    if mode > 0:
        ks = np.arange(mode, 0, -1, dtype=float)
        backward = ks / (n - ks + 1.0) * (q / p)
        values[mode - 1 :: -1] = values[mode] * np.cumprod(backward)
    # The ratios fix the shape to a few ulps; the anchor's log-gamma
    # cancellation only blurs the global scale, which normalization pins.
    values /= math.fsum(values)
    probs = {k: float(values[k]) for k in range(n + 1)}
    return KernelDistribution(s, probs, 0.0, support_bound=n)


def gamma_mixed_poisson_prob(l: float, k: int, tau: float) -> float:
    """Probability of k events for a Poisson count whose exposure is gamma.

    The exposure R has a gamma law with shape l/tau and scale tau (mean l,
    variance l*tau), and the returned value is E[R^k e^-R] / k!, evaluated in
    log space:

        Gamma(l/tau + k) / (k! Gamma(l/tau) (1+tau)^(l/tau) (1+1/tau)^k)
    """
    if not l > 0:
        raise DomainError(f"l must be positive, got {l!r}")
    if not tau > 0:
        raise DomainError(f"tau must be positive, got {tau!r}")
    if k < 0:
        raise DomainError("k must be non-negative")
    shape = l / tau
    log_value = (
        gammaln(shape + k)
        - gammaln(k + 1)
        - gammaln(shape)
        - shape * math.log1p(tau)
        - k * math.log1p(1.0 / tau)
    )
    return math.exp(log_value)


def transient_distribution(
    jump_rates: Sequence[Mapping[int, float]], start: int, t: float, eps: float = 1e-10
) -> tuple[np.ndarray, float]:
    """Transient law of a finite upward-jumping Markov chain, by uniformization.

    ``jump_rates[i]`` maps jump size to rate out of state i; all jumps must
    land inside the state window, so the top state(s) are absorbing.  Returns
    the probability vector of the state at time ``t`` started from ``start``,
    plus the certified remainder of the truncated Poisson mixture (the
    returned vector underestimates the true law by at most that much, in
    total variation).
    """
    m = len(jump_rates)
    if not 0 <= start < m:
        raise DomainError(f"start state {start} outside 0..{m - 1}")
    if not t > 0:
        raise DomainError("t must be positive")
    if not eps > 0:
        raise DomainError("eps must be positive")
    out_rate = np.zeros(m)
    step = np.zeros((m, m))
    for i, row in enumerate(jump_rates):
        for jump, rate in row.items():
            if jump < 1 or i + jump >= m:
                raise ConfigurationError(
                    f"jump {jump} from state {i} leaves the state window"
                )
            if rate < 0 or not math.isfinite(rate):
                raise ConfigurationError(f"invalid rate {rate!r} from state {i}")
            step[i, i + jump] = rate
            out_rate[i] += rate
    lam = float(out_rate.max(initial=0.0))
    result = np.zeros(m)
    if lam <= 0.0:
        result[start] = 1.0
        return result, 0.0
    step /= lam
    np.fill_diagonal(step, 1.0 - out_rate / lam)
    mass = lam * t
    if mass > _MAX_UNIFORMIZATION_MASS:
        raise ConfigurationError(
            f"uniformization rate * time = {mass:.3g} too large; reduce the state cap or t"
        )
    v = np.zeros(m)
    v[start] = 1.0
    weight = math.exp(-mass)
    result += weight * v
    j = 0
    while True:
        # Ratio test on the remaining Poisson weights: once j >= mass the
        # remainder after term j is at most w_{j+1} / (1 - mass/(j+2)).
        ratio = mass / (j + 2)
        if ratio < 1.0:
            next_weight = weight * mass / (j + 1)
            if next_weight / (1.0 - ratio) <= eps:
                break
        j += 1
        weight *= mass / j
        v = v @ step
        result += weight * v
    remainder = max(0.0, 1.0 - math.fsum(result))
    return result, remainder


_DEFAULT_CAP_FACTOR = 50


def _default_cap(spec: ProcessSpec, s: int) -> int:
    param = spec.rate.alpha if isinstance(spec.rate, Poisson) else spec.rate.beta
    return s + math.ceil(_DEFAULT_CAP_FACTOR * (1.0 + param))


def uniformization_kernel(
    spec: ProcessSpec,
    s: int,
    t: float = 1.0,
    eps: float = 1e-10,
    state_cap: int | None = None,
) -> KernelDistribution:
    """Numerical jump distribution over time ``t`` for any supported family.

    Death-type families have a finite reachable window, so truncating there
    is exact.  For unbounded families (constant-rate and linear birth) the
    window is capped; because all individual jumps are of size one, the mass
    that the truncated chain parks at the cap equals exactly the true mass at
    or beyond it, so the cap leakage is folded into ``tail_bound`` without
    approximation.  The default cap is ``s + ceil(50 * (1 + rate parameter))``
    and can be overridden with ``state_cap``.
    """
    rate_at(spec, s)  # domain check
    ceiling = spec.rate.max_state
    if ceiling is None and isinstance(spec.rate, RateTable):
        ceiling = len(spec.rate.rates)
    if ceiling is not None:
        hi = max(ceiling, s)
        capped = False
        if state_cap is not None and state_cap < hi:
            raise ConfigurationError("state_cap below the family's own ceiling")
    else:
        hi = state_cap if state_cap is not None else _default_cap(spec, s)
        if hi <= s:
            raise ConfigurationError("state_cap must exceed the starting count")
        capped = True

    m = hi - s + 1
    jump_rates: list[dict[int, float]] = []
    for i in range(m - 1):
        lam = rate_at(spec, s + i)
        jump_rates.append({1: lam} if lam > 0 else {})
    jump_rates.append({})  # window top is absorbing (exact for unit jumps)

    vector, _ = transient_distribution(jump_rates, 0, t, eps)
    top = m - 1
    if capped:
        probs = {k: float(vector[k]) for k in range(top)}
        support: int | None = None
        ratio = _capped_tail_ratio(spec, s, t, top)
    else:
        probs = {k: float(vector[k]) for k in range(top + 1)}
        support = top
        ratio = None
    tail = max(0.0, 1.0 - math.fsum(probs.values()))
    return KernelDistribution(s, probs, tail, tail_ratio=ratio, support_bound=support)


def _capped_tail_ratio(spec: ProcessSpec, s: int, t: float, k_cap: int) -> float | None:
    """Certified geometric decay ratio of the true kernel beyond the cap."""
    if isinstance(spec.rate, Poisson):
        ratio = spec.rate.alpha * t / (k_cap + 1)
    else:
        p = -math.expm1(-spec.rate.beta * t)
        ratio = p * (s + k_cap) / (k_cap + 1)
    return ratio if ratio < 1.0 else None


def transition_kernel(
    spec: ProcessSpec, s: int, eps: float = 1e-12, state_cap: int | None = None
) -> KernelDistribution:
    """Unit-time jump distribution, closed form where available, numeric otherwise."""
    rate = spec.rate
    if isinstance(rate, Poisson):
        return poisson_kernel(rate.alpha, s, eps)
    if isinstance(rate, LinearBirth):
        return birth_kernel(rate.beta, s, eps, allow_absorbing=True)
    if isinstance(rate, LinearDeath):
        return death_kernel(rate.delta, rate.d0, s)
    return uniformization_kernel(spec, s, 1.0, eps, state_cap)
