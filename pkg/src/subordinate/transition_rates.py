"""Transition rates of a counting process subordinated by a unit-rate Poisson clock.

The subordinated process jumps only when the clock ticks, and the size of the
jump is the base-process increment over one unit of operational time.  Its
transition rate for a jump of size k from count s therefore equals the
probability that the base count moves from s to s + k in unit time, and its
total event rate is 1 - e^-rate(s), always inside [0, 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

from .errors import DomainError
from .kernels import KernelDistribution, transition_kernel
from .processes import LinearBirth, LinearDeath, Poisson, ProcessSpec, rate_at

_SLACK = 1e-12


@dataclass(frozen=True)
class TransitionRateRow:
    """All transition rates out of one count of the subordinated process.

    ``rates`` maps jump size k >= 1 to the rate q_{s,k}; ``rate_function`` is
    the total event rate out of ``state`` and equals the sum of the rates
    plus the certified ``tail_bound`` carried over from the kernel.
    """

    state: int
    rates: Mapping[int, float]
    rate_function: float
    tail_bound: float
    tail_ratio: float | None = None
    support_bound: int | None = None

    def __post_init__(self) -> None:
        # The event rate is strictly below one mathematically; when the
        # no-jump probability sits under machine epsilon the complement
        # rounds to exactly 1.0, so the representable bound is inclusive.
        if not 0.0 <= self.rate_function <= 1.0:
            raise ValueError(f"rate_function must lie in [0, 1], got {self.rate_function!r}")
        for k, q in self.rates.items():
            if k < 1:
                raise ValueError("transition jumps must be >= 1")
            if not -_SLACK <= q <= 1 + _SLACK:
                raise ValueError(f"rate out of [0, 1] at jump {k}: {q!r}")
        total = math.fsum(self.rates.values()) + self.tail_bound
        if abs(total - self.rate_function) > _SLACK:
            raise ValueError(
                f"rates plus tail bound sum to {total!r}, expected {self.rate_function!r}"
            )

    def to_dict(self) -> dict:
        return {
            "s": self.state,
            "rates": {str(k): self.rates[k] for k in sorted(self.rates)},
            "lambda_S": self.rate_function,
            "tail_bound": self.tail_bound,
        }


def rates_from_kernel(kernel: KernelDistribution) -> TransitionRateRow:
    """Turn a unit-time jump distribution into the subordinated rate row.

    Jumps of size zero are not transitions, so the k = 0 mass is dropped and
    the event rate is its complement.
    """
    rates = {k: p for k, p in kernel.probs.items() if k >= 1}
    rate_function = 1.0 - kernel.probs.get(0, 0.0)
    return TransitionRateRow(
        state=kernel.base_state,
        rates=rates,
        rate_function=rate_function,
        tail_bound=kernel.tail_bound,
        tail_ratio=kernel.tail_ratio,
        support_bound=kernel.support_bound,
    )


def rate_function_S(spec: ProcessSpec, s: int) -> float:
    """Total event rate of the subordinated process at count ``s``: 1 - e^-rate(s)."""
    return -math.expm1(-rate_at(spec, s))


def rate_row(
    spec: ProcessSpec, s: int, eps: float = 1e-12, state_cap: int | None = None
) -> TransitionRateRow:
    """Rate row via the family's kernel (closed form where available)."""
    return rates_from_kernel(transition_kernel(spec, s, eps, state_cap))


def closed_form_rate(spec: ProcessSpec, s: int, k: int) -> float:
    """Direct closed-form transition rate q_{s,k} for the three named families.

    Evaluates the probability mass expression itself, without building a
    kernel: Poisson mass for constant rate, negative binomial mass for linear
    birth, binomial mass for linear death.  Only jumps k >= 1 are transitions.
    """
    if k < 1:
        raise DomainError(f"transition jump must be >= 1, got {k!r}")
    if s < 0:
        raise DomainError("count must be non-negative")
    rate = spec.rate
    if isinstance(rate, Poisson):
        alpha = rate.alpha
        return math.exp(k * math.log(alpha) - alpha - _lgamma(k + 1))
    if isinstance(rate, LinearBirth):
        if s < 1:
            raise DomainError("linear birth rates require a positive starting count")
        p = -math.expm1(-rate.beta)
        return math.exp(
            _lgamma(s + k) - _lgamma(k + 1) - _lgamma(s) - rate.beta * s + k * math.log(p)
        )
    if isinstance(rate, LinearDeath):
        n = rate.d0 - s
        if s >= rate.d0 or k > n:
            raise DomainError(f"jump {k} from count {s} outside the death family's range")
        p = -math.expm1(-rate.delta)
        return math.exp(
            _lgamma(n + 1)
            - _lgamma(k + 1)
            - _lgamma(n - k + 1)
            + k * math.log(p)
            - rate.delta * (n - k)
        )
    raise DomainError(f"no closed-form rates for family {rate.family!r}")


def _lgamma(x: float) -> float:
    return math.lgamma(x)
