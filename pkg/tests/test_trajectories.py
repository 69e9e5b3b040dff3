import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from subordinate import (
    DomainError,
    HorizonError,
    LinearBirth,
    LinearDeath,
    NonlinearDeath,
    Poisson,
    ProcessSpec,
    RateTable,
    RngStream,
    Trajectory,
    compose,
    simulate_poisson_unit,
    simulate_simple,
    simulate_time_changed,
    trajectory_csv,
)

FAMILIES = [
    ProcessSpec(Poisson(1.3)),
    ProcessSpec(LinearBirth(0.5), 1),
    ProcessSpec(LinearDeath(0.7, 10)),
    ProcessSpec(NonlinearDeath(5), 1),
    ProcessSpec(RateTable((2.0, 1.0, 0.5, 0.25))),
]


class TestEvaluate:
    def test_right_continuity(self):
        traj = Trajectory(0, ((1.0, 2),), 5.0)
        assert traj.evaluate(0.999) == 0
        assert traj.evaluate(1.0) == 2
        assert traj.evaluate(5.0) == 2

    def test_bounds(self):
        traj = Trajectory(0, ((1.0, 1),), 2.0)
        with pytest.raises(HorizonError):
            traj.evaluate(2.0001)
        with pytest.raises(DomainError):
            traj.evaluate(-0.1)

    def test_invalid_event_sequences(self):
        with pytest.raises(ValueError):
            Trajectory(0, ((1.0, 1), (1.0, 1)), 2.0)
        with pytest.raises(ValueError):
            Trajectory(0, ((2.0, 1), (1.0, 1)), 3.0)
        with pytest.raises(ValueError):
            Trajectory(0, ((1.0, 0),), 2.0)
        with pytest.raises(ValueError):
            Trajectory(0, ((3.0, 1),), 2.0)


class TestSimulateSimple:
    def test_birth_from_zero_never_moves(self):
        traj = simulate_simple(ProcessSpec(LinearBirth(0.5)), 100.0, RngStream(1, 0))
        assert traj.events == ()

    def test_death_absorbs_after_exactly_d0_events(self):
        spec = ProcessSpec(LinearDeath(0.7, 3))
        for i in range(20):
            traj = simulate_simple(spec, 1e9, RngStream(4, i))
            assert len(traj.events) == 3
            assert traj.final_value == 3

    def test_poisson_mean_event_count(self):
        # Monte Carlo against the Poisson(10) mean with n = 10^4 replicates.
        spec = ProcessSpec(Poisson(1.0))
        n = 10_000
        total = sum(
            len(simulate_simple(spec, 10.0, RngStream(77, i)).events) for i in range(n)
        )
        se = math.sqrt(10.0 / n)
        assert abs(total / n - 10.0) <= 3.0 * se

    def test_unit_jumps_only(self):
        traj = simulate_simple(ProcessSpec(Poisson(3.0)), 5.0, RngStream(2, 0))
        assert traj.events
        assert all(j == 1 for _, j in traj.events)

    def test_t_end_must_be_positive(self):
        with pytest.raises(DomainError):
            simulate_simple(ProcessSpec(Poisson(1.0)), 0.0, RngStream(0, 0))


class TestPoissonUnit:
    def test_no_event_probability(self):
        n = 10_000
        empty = sum(
            1 for i in range(n) if not simulate_poisson_unit(1.0, RngStream(9, i)).events
        )
        p = math.exp(-1.0)
        se = math.sqrt(p * (1 - p) / n)
        assert abs(empty / n - p) <= 3.5 * se

    def test_rejects_zero_horizon(self):
        with pytest.raises(DomainError):
            simulate_poisson_unit(0.0, RngStream(0, 0))


class TestCompose:
    def test_merged_simultaneous_events(self):
        # Base path moves twice inside the clock's third unit step and once
        # inside its fifth: the composed path jumps by 2 then by 1.
        x = Trajectory(0, ((2.3, 1), (2.7, 1), (4.5, 1)), 6.0)
        n = Trajectory(0, ((0.8, 1), (1.4, 1), (2.9, 1), (3.3, 1), (4.8, 1)), 5.0)
        s = compose(x, n)
        assert s.events == ((2.9, 2), (4.8, 1))
        assert s.initial_state == 0

    def test_clock_without_events_freezes_composition(self):
        x = Trajectory(2, ((0.5, 1),), 3.0)
        n = Trajectory(0, (), 10.0)
        s = compose(x, n)
        assert s.events == ()
        assert s.initial_state == 2
        assert s.horizon == 10.0

    def test_flat_base_gives_flat_composition(self):
        x = Trajectory(5, (), 10.0)
        n = Trajectory(0, ((1.0, 1), (2.0, 1)), 3.0)
        s = compose(x, n)
        assert s.events == ()
        assert s.final_value == 5

    def test_horizon_precondition(self):
        x = Trajectory(0, ((0.5, 1),), 1.0)
        n = Trajectory(0, ((1.0, 1), (2.0, 1)), 3.0)
        with pytest.raises(HorizonError):
            compose(x, n)

    def test_composed_event_times_subsequence_of_clock(self):
        for i in range(30):
            s, x, n = simulate_time_changed(
                ProcessSpec(Poisson(2.0)), 4.0, RngStream(15, i), return_parts=True
            )
            clock_times = {t for t, _ in n.events}
            assert all(t in clock_times for t, _ in s.events)
            assert all(j >= 1 for _, j in s.events)

    @pytest.mark.parametrize("spec", FAMILIES)
    def test_composition_identity(self, spec):
        # evaluate(compose(x, n), t) == evaluate(x, evaluate(n, t)) exactly,
        # including at the clock's own event times.
        checked = 0
        picker = np.random.default_rng(123)
        for i in range(120):
            s, x, n = simulate_time_changed(
                spec, 3.0, RngStream(1000 + i, 0), return_parts=True
            )
            ts = list(picker.uniform(0.0, 3.0, size=8)) + [t for t, _ in n.events][:2]
            for t in ts:
                assert s.evaluate(t) == x.evaluate(float(n.evaluate(t)))
                checked += 1
        assert checked >= 1000


class TestDeterminism:
    def test_same_stream_same_trajectory(self):
        a = simulate_time_changed(ProcessSpec(Poisson(1.0)), 5.0, RngStream(7, 3))
        b = simulate_time_changed(ProcessSpec(Poisson(1.0)), 5.0, RngStream(7, 3))
        assert a == b

    def test_distinct_streams_differ(self):
        a = simulate_simple(ProcessSpec(Poisson(5.0)), 10.0, RngStream(7, 0))
        b = simulate_simple(ProcessSpec(Poisson(5.0)), 10.0, RngStream(7, 1))
        assert a.events != b.events


class TestSerialization:
    def test_json_round_trip(self):
        traj = simulate_simple(ProcessSpec(Poisson(2.0)), 3.0, RngStream(11, 0))
        assert Trajectory.from_json(traj.to_json()) == traj

    def test_csv_has_boundary_rows(self):
        traj = Trajectory(1, ((0.5, 1), (1.25, 2)), 2.0)
        lines = trajectory_csv(traj).strip().splitlines()
        assert lines[0] == "time,state"
        assert lines[1] == "0,1"
        assert lines[-1].startswith("2,") and lines[-1].endswith(",4")
        assert len(lines) == 2 + 2 + 1


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32), t_end=st.floats(0.5, 4.0))
def test_composed_paths_are_nondecreasing(seed, t_end):
    s = simulate_time_changed(ProcessSpec(Poisson(1.5)), t_end, RngStream(seed, 0))
    assert all(j >= 1 for _, j in s.events)
    values = [s.evaluate(0.0), *(s.evaluate(t) for t, _ in s.events)]
    assert values == sorted(values)
