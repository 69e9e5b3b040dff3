"""Exact event-driven simulation and composition of counting-process paths.

A trajectory is a right-continuous step function: a starting count plus a
strictly increasing sequence of (event time, jump size) pairs up to a fixed
horizon.  Subordinating a base process by a unit-rate Poisson clock is done
literally here: the clock path is simulated, the base path is simulated over
the operational time the clock reached, and the two step functions are
composed event by event.
"""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, HorizonError
from .processes import Poisson, ProcessSpec, rate_at
from .rng import RngStream

RngLike = RngStream | np.random.Generator


def _as_generator(rng: RngLike) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    return rng


@dataclass(frozen=True)
class Trajectory:
    """Right-continuous step path of a counting process.

    The value at time t is ``initial_state`` plus all jumps with event time
    <= t.  Unit-jump paths come out of the simulators; composed paths may
    carry jumps larger than one.
    """

    initial_state: int
    events: tuple[tuple[float, int], ...]
    horizon: float

    _times: tuple[float, ...] = field(init=False, repr=False, compare=False)
    _values: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.initial_state < 0:
            raise ValueError("initial_state must be non-negative")
        if not math.isfinite(self.horizon) or self.horizon < 0:
            raise ValueError("horizon must be finite and non-negative")
        events = tuple((float(t), int(j)) for t, j in self.events)
        object.__setattr__(self, "events", events)
        prev = 0.0
        value = self.initial_state
        values = []
        for t, jump in events:
            if not t > prev:
                raise ValueError("event times must be strictly increasing and positive")
            if t > self.horizon:
                raise ValueError("event beyond the trajectory horizon")
            if jump < 1:
                raise ValueError("jump sizes must be positive integers")
            value += jump
            values.append(value)
            prev = t
        object.__setattr__(self, "_times", tuple(t for t, _ in events))
        object.__setattr__(self, "_values", tuple(values))

    @property
    def final_value(self) -> int:
        """Count at the horizon."""
        return self._values[-1] if self._values else self.initial_state

    def evaluate(self, t: float) -> int:
        """Count at time ``t`` (right-continuous: a jump at ``t`` is included)."""
        if t < 0:
            raise DomainError(f"time must be non-negative, got {t!r}")
        if t > self.horizon:
            raise HorizonError(f"time {t} beyond horizon {self.horizon}")
        idx = bisect.bisect_right(self._times, t)
        return self._values[idx - 1] if idx else self.initial_state

    def to_dict(self) -> dict:
        return {
            "initial_state": self.initial_state,
            "events": [[t, j] for t, j in self.events],
            "horizon": self.horizon,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "Trajectory":
        events = tuple((float(t), int(j)) for t, j in data.get("events", []))
        return cls(int(data["initial_state"]), events, float(data["horizon"]))

    @classmethod
    def from_json(cls, text: str) -> "Trajectory":
        return cls.from_dict(json.loads(text))


def trajectory_csv(traj: Trajectory) -> str:
    """CSV rendering: header ``time,state``, a row at t=0, one per event, one at the horizon."""
    lines = ["time,state", f"0,{traj.initial_state}"]
    value = traj.initial_state
    for (t, jump) in traj.events:
        value += jump
        lines.append(f"{t:.17g},{value}")
    lines.append(f"{traj.horizon:.17g},{value}")
    return "\n".join(lines) + "\n"


def simulate_simple(spec: ProcessSpec, t_end: float, rng: RngLike) -> Trajectory:
    """Exact simulation of a unit-jump counting process up to ``t_end``.

    Holding times are exponential with the state's event rate, sampled by
    inverse CDF from a uniform in (0, 1] so a zero uniform can never occur.
    Simulation stops early if an absorbing state is reached; the returned
    horizon is always ``t_end``.
    """
    if not t_end > 0:
        raise DomainError(f"t_end must be positive, got {t_end!r}")
    gen = _as_generator(rng)
    x = spec.initial_state
    t = 0.0
    events: list[tuple[float, int]] = []
    while True:
        lam = rate_at(spec, x)
        if lam <= 0.0:
            break
        t += -math.log1p(-gen.random()) / lam
        if t > t_end:
            break
        events.append((t, 1))
        x += 1
    return Trajectory(spec.initial_state, tuple(events), float(t_end))


_UNIT_CLOCK = ProcessSpec(Poisson(1.0), 0)


def simulate_poisson_unit(t_end: float, rng: RngLike) -> Trajectory:
    """Unit-rate Poisson clock path over [0, t_end]."""
    return simulate_simple(_UNIT_CLOCK, t_end, rng)


def compose(x_traj: Trajectory, n_traj: Trajectory) -> Trajectory:
    """Path of the time-changed process: the base path read at the clock path.

    Events can only happen at clock event times; the jump there is the base
    path increment over the clock's unit step.  Clock events across which the
    base path is flat are skipped, and several base events swallowed by one
    clock step merge into a single larger jump.

    The base path must extend at least to the clock's final value, otherwise
    a HorizonError asks the caller to extend it.
    """
    needed = float(n_traj.final_value)
    if x_traj.horizon < needed:
        raise HorizonError(
            f"base trajectory horizon {x_traj.horizon} is shorter than the "
            f"clock's final value {needed}; extend the base simulation"
        )
    start = x_traj.evaluate(float(n_traj.initial_state))
    events: list[tuple[float, int]] = []
    prev = start
    clock_value = n_traj.initial_state
    for (t, jump) in n_traj.events:
        clock_value += jump
        value = x_traj.evaluate(float(clock_value))
        if value != prev:
            events.append((t, value - prev))
            prev = value
    return Trajectory(start, tuple(events), n_traj.horizon)


def simulate_time_changed(
    spec: ProcessSpec, t_end: float, rng: RngLike, return_parts: bool = False
):
    """Simulate the base process subordinated by a unit-rate Poisson clock.

    The clock is simulated first over [0, t_end]; the base process is then
    simulated over exactly the operational time the clock consumed, and the
    two paths are composed.  With ``return_parts`` the composed path is
    returned together with the base and clock paths.
    """
    gen = _as_generator(rng)
    n_traj = simulate_poisson_unit(t_end, gen)
    operational = n_traj.final_value
    if operational == 0:
        x_traj = Trajectory(spec.initial_state, (), 0.0)
    else:
        x_traj = simulate_simple(spec, float(operational), gen)
    s_traj = compose(x_traj, n_traj)
    if return_parts:
        return s_traj, x_traj, n_traj
    return s_traj
