"""Núcleo numérico: passo IMEX, agenda de passos e cruzamentos"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import sparse

from kpp.errors import LevelRangeError, StabilityError
from kpp.numerics import (
    ImexStepper,
    crossings,
    guard_reaction_step,
    interpolate_in_time,
    line_diffusion_system,
    monotone_crossing_time,
    periodic_second_difference,
    step_schedule,
)


class TestStepSchedule:

    def test_exact_horizon(self):
        n, dt = step_schedule(1.0, 0.3)
        assert n == 4
        assert n * dt == pytest.approx(1.0)

    def test_divisible_horizon(self):
        assert step_schedule(1.0, 0.25) == (4, 0.25)

    def test_zero_horizon(self):
        assert step_schedule(0.0, 0.1)[0] == 0

    def test_non_positive_dt(self):
        with pytest.raises(StabilityError):
            step_schedule(1.0, 0.0)

    def test_reaction_guard(self):
        guard_reaction_step(0.5, 1.5)
        with pytest.raises(StabilityError, match="dt=10"):
            guard_reaction_step(10.0, 1.0)


class TestOperators:

    def test_periodic_second_difference_kills_constants(self):
        d2 = periodic_second_difference(16, 0.1)
        assert np.allclose(d2 @ np.ones(16), 0.0)
        assert d2[0, 15] == pytest.approx(100.0)

    def test_line_system_boundary_rows(self):
        system = line_diffusion_system(10, 0.5, 0.1).toarray()
        assert system[0, 0] == 1.0 and system[0, 1] == 0.0
        assert system[-1, -2] == pytest.approx(-0.8)
        assert system[-1].sum() == pytest.approx(1.0)


class TestImexStepper:

    def test_constant_data_follows_logistic(self):
        n, dt = 16, 1e-2
        system = sparse.identity(n, format="csc") - dt * periodic_second_difference(n, 1.0 / n)
        stepper = ImexStepper(lambda u: u * (1.0 - u), system, dt)
        u = np.full(n, 0.5)
        for _ in range(int(round(math.log(3.0) / dt))):
            u = stepper.step(u)
        t = int(round(math.log(3.0) / dt)) * dt
        assert np.allclose(u, 1.0 / (1.0 + math.exp(-t)), atol=1e-8)

    def test_dirichlet_value_is_imposed(self):
        stepper = ImexStepper(lambda u: u * (1.0 - u), line_diffusion_system(20, 0.25, 1e-3), 1e-3)
        u = stepper.step(np.linspace(1.0, 0.0, 20), boundary=(0.7, 0.8))
        assert u[0] == 0.8


class TestCrossings:

    def test_linear_interpolation(self):
        x = np.array([0.0, 1.0, 2.0, 3.0])
        values = np.array([1.0, 0.6, 0.2, 0.0])
        assert crossings(x, values, 0.5) == pytest.approx([1.25])

    def test_exact_node_counted_once(self):
        x = np.arange(5.0)
        values = np.array([1.0, 0.75, 0.5, 0.25, 0.0])
        assert crossings(x, values, 0.5).tolist() == [2.0]

    def test_non_monotone_profile(self):
        x = np.arange(5.0)
        values = np.array([0.0, 1.0, 0.0, 1.0, 0.0])
        assert len(crossings(x, values, 0.5)) == 4

    @settings(max_examples=40, deadline=None)
    @given(st.floats(min_value=0.01, max_value=0.99))
    def test_crossing_is_exact_for_linear_data(self, level):
        x = np.linspace(0.0, 1.0, 11)
        assert crossings(x, 1.0 - x, level) == pytest.approx([1.0 - level])

    def test_monotone_crossing_time(self):
        times = np.array([0.0, 1.0, 2.0])
        assert monotone_crossing_time(times, np.array([0.1, 0.3, 0.9]), 0.6) == pytest.approx(1.5)
        with pytest.raises(LevelRangeError):
            monotone_crossing_time(times, np.array([0.1, 0.3, 0.9]), 0.95)

    def test_interpolate_in_time(self):
        fields = np.array([[0.0, 0.0], [1.0, 2.0]])
        assert interpolate_in_time(np.array([0.0, 1.0]), fields, 0.25) == pytest.approx([0.25, 0.5])
        with pytest.raises(LevelRangeError):
            interpolate_in_time(np.array([0.0, 1.0]), fields, 1.5)
