"""Counting-process families defined by state-dependent event rates.

A process counts events, so its state is a non-negative integer that never
decreases.  Each family below fixes the rate at which the count leaves its
current state; a rate of zero marks an absorbing state.  All families are
time-homogeneous and every individual event increments the count by one.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import ClassVar, Union

from .errors import DomainError


def _require_positive(name: str, value: float) -> None:
    if not math.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")


def _require_positive_int(name: str, value: int) -> None:
    if not isinstance(value, int) or isinstance(value, bool) or value <= 0:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")


@dataclass(frozen=True)
class Poisson:
    """Constant event rate ``alpha`` in every state."""

    alpha: float

    family: ClassVar[str] = "poisson"

    def __post_init__(self) -> None:
        _require_positive("alpha", self.alpha)

    @property
    def max_state(self) -> int | None:
        return None

    def rate(self, x: int) -> float:
        return self.alpha

    def params(self) -> dict:
        return {"alpha": self.alpha}


@dataclass(frozen=True)
class LinearBirth:
    """Per-individual birth rate ``beta``; rate ``beta * x``, absorbing at 0."""

    beta: float

    family: ClassVar[str] = "linear_birth"

    def __post_init__(self) -> None:
        _require_positive("beta", self.beta)

    @property
    def max_state(self) -> int | None:
        return None

    def rate(self, x: int) -> float:
        return self.beta * x

    def params(self) -> dict:
        return {"beta": self.beta}


@dataclass(frozen=True)
class LinearDeath:
    """Deaths counted up in a linear death model.

    The state is the number of deaths so far out of an initial population of
    ``d0`` individuals, each dying at rate ``delta``, so the count advances at
    rate ``delta * (d0 - x)`` and absorbs at ``d0``.
    """

    delta: float
    d0: int

    family: ClassVar[str] = "linear_death"

    def __post_init__(self) -> None:
        _require_positive("delta", self.delta)
        _require_positive_int("d0", self.d0)

    @property
    def max_state(self) -> int | None:
        return self.d0

    def rate(self, x: int) -> float:
        return self.delta * (self.d0 - x) if x < self.d0 else 0.0

    def params(self) -> dict:
        return {"delta": self.delta, "d0": self.d0}


@dataclass(frozen=True)
class NonlinearDeath:
    """Death counting with rate ``x * (d0 - x)``.

    Absorbing at ``d0``; note the defining rate also vanishes at ``x = 0``.
    """

    d0: int

    family: ClassVar[str] = "nonlinear_death"

    def __post_init__(self) -> None:
        _require_positive_int("d0", self.d0)

    @property
    def max_state(self) -> int | None:
        return self.d0

    def rate(self, x: int) -> float:
        return float(x * (self.d0 - x)) if x < self.d0 else 0.0

    def params(self) -> dict:
        return {"d0": self.d0}


@dataclass(frozen=True)
class RateTable:
    """Explicit per-state rates; absorbing at and beyond the end of the table.

    Covers death-type processes whose rate law is only available pointwise
    (logistic, Bass, power and similar families).
    """

    rates: tuple[float, ...]

    family: ClassVar[str] = "general"

    def __post_init__(self) -> None:
        object.__setattr__(self, "rates", tuple(float(r) for r in self.rates))
        for i, r in enumerate(self.rates):
            if not math.isfinite(r) or r < 0:
                raise ValueError(f"table rate at state {i} must be finite and >= 0, got {r!r}")

    @property
    def max_state(self) -> int | None:
        return None

    def rate(self, x: int) -> float:
        return self.rates[x] if x < len(self.rates) else 0.0

    def params(self) -> dict:
        return {"rates": list(self.rates)}


RateFunction = Union[Poisson, LinearBirth, LinearDeath, NonlinearDeath, RateTable]

_FAMILIES: dict[str, type] = {
    cls.family: cls for cls in (Poisson, LinearBirth, LinearDeath, NonlinearDeath, RateTable)
}


@dataclass(frozen=True)
class ProcessSpec:
    """A counting-process family together with its starting count."""

    rate: RateFunction
    initial_state: int = 0

    def __post_init__(self) -> None:
        if not isinstance(self.initial_state, int) or self.initial_state < 0:
            raise ValueError(f"initial_state must be a non-negative integer, got {self.initial_state!r}")
        ceiling = self.rate.max_state
        if ceiling is not None and self.initial_state > ceiling:
            raise ValueError(
                f"initial_state {self.initial_state} exceeds the family ceiling {ceiling}"
            )

    def at_state(self, x: int) -> "ProcessSpec":
        """Same family restarted from count ``x``."""
        return ProcessSpec(self.rate, x)

    def to_dict(self) -> dict:
        return {
            "family": self.rate.family,
            "params": self.rate.params(),
            "initial_state": self.initial_state,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "ProcessSpec":
        try:
            family = _FAMILIES[data["family"]]
        except KeyError as exc:
            raise ValueError(f"unknown process family {data.get('family')!r}") from exc
        params = dict(data.get("params", {}))
        if family is RateTable and "rates" in params:
            params["rates"] = tuple(params["rates"])
        return cls(family(**params), int(data.get("initial_state", 0)))

    @classmethod
    def from_json(cls, text: str) -> "ProcessSpec":
        return cls.from_dict(json.loads(text))


def rate_at(spec: ProcessSpec, x: int) -> float:
    """Event rate of the family at count ``x``.

    Raises DomainError if ``x`` is negative or beyond the family ceiling.
    """
    if not isinstance(x, int) or isinstance(x, bool) or x < 0:
        raise DomainError(f"state must be a non-negative integer, got {x!r}")
    ceiling = spec.rate.max_state
    if ceiling is not None and x > ceiling:
        raise DomainError(f"state {x} exceeds the family ceiling {ceiling}")
    return spec.rate.rate(x)


def is_absorbing(spec: ProcessSpec, x: int) -> bool:
    """True when the process can never leave count ``x``."""
    return rate_at(spec, x) == 0.0
