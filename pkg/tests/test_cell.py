"""Problemas na célula: evolução, B(m,T), solução global e constantes α, ω"""

import math

import numpy as np
import pytest

from kpp.cell import (
    average_level_constant,
    construct_global_solution,
    evolve_cell,
    global_field_at,
    mean_crossing_time,
    predicted_bmt,
    rate_samples,
    ratio_limit_check,
    solve_terminal_value,
)
from kpp.errors import ConfigError, DegenerateInputError, HorizonError, LevelRangeError
from kpp.reaction import make_periodic_fisher
from kpp.spectral import TorusField, eigenpair_for
from kpp.verify import fit_decay_rate


def wavy(mean, amplitude, n=32):
    x = np.arange(n) / n
    return TorusField(mean + amplitude * np.cos(2.0 * math.pi * x), 1.0)


@pytest.fixture(scope="module")
def fisher_global(fisher):
    return construct_global_solution(fisher, n=1000, t_max=15.0, grid=16)


class TestEvolveCell:

    def test_constant_follows_logistic(self, fisher):
        run = evolve_cell(fisher, TorusField.constant(0.5, 16, 1.0), math.log(3.0))
        assert np.allclose(run.final.values, 0.75, atol=1e-6)
        assert run.times[-1] == pytest.approx(math.log(3.0))

    def test_stride_zero_keeps_endpoints(self, fisher):
        run = evolve_cell(fisher, TorusField.constant(0.2, 16, 1.0), 0.5, stride=0)
        assert len(run.times) == 2

    def test_unit_interval_invariance(self, periodic):
        run = evolve_cell(periodic, wavy(0.5, 0.49), 3.0, stride=50)
        assert run.fields.min() >= 0.0
        assert run.fields.max() <= 1.0

    def test_comparison_principle(self, periodic):
        low = evolve_cell(periodic, wavy(0.2, 0.1), 2.0, stride=100)
        high = evolve_cell(periodic, wavy(0.3, 0.1), 2.0, stride=100)
        assert np.all(low.fields <= high.fields + 1e-14)

    def test_mean_growth_identity(self, periodic):
        run = evolve_cell(periodic, wavy(0.3, 0.2), 0.5, stride=1)
        x = np.arange(32) / 32
        rates = periodic.eval(x[None, :], run.fields).mean(axis=1)
        growth = np.diff(run.means) / run.dt
        assert np.max(np.abs(growth - 0.5 * (rates[1:] + rates[:-1]))) < 1e-5

    def test_rejects_data_outside_unit_interval(self, fisher):
        with pytest.raises(DegenerateInputError):
            evolve_cell(fisher, TorusField.constant(1.5, 16, 1.0), 1.0)

    def test_rejects_period_mismatch(self, fisher):
        with pytest.raises(ConfigError, match="Período"):
            evolve_cell(fisher, TorusField.constant(0.5, 16, 2.0), 1.0)


class TestTerminalValue:

    def test_logistic_oracle(self, fisher):
        result = solve_terminal_value(fisher, 0.5, math.log(3.0), n=16)
        assert result.B == pytest.approx(0.25, abs=1e-6)
        assert abs(result.terminal_mean - 0.5) <= 1e-8

    def test_short_horizon(self, fisher):
        result = solve_terminal_value(fisher, 0.5, 1e-3, n=16)
        assert result.B == pytest.approx(0.49975, abs=1e-6)

    def test_monotone_in_level_and_horizon(self, periodic):
        def B(m, T):
            return solve_terminal_value(periodic, m, T, tol=1e-10, n=16, dt=1e-2).B
        assert B(0.3, 2.0) < B(0.5, 2.0) < B(0.7, 2.0)
        assert B(0.5, 3.0) < B(0.5, 2.0)

    def test_horizon_too_long(self, fisher):
        with pytest.raises(HorizonError):
            solve_terminal_value(fisher, 0.5, 40.0, n=16, dt=1e-2)

    @pytest.mark.parametrize("m", [0.0, 1.0])
    def test_level_out_of_range(self, fisher, m):
        with pytest.raises(LevelRangeError):
            solve_terminal_value(fisher, m, 1.0, n=16)

    def test_zero_amplitude_reduces_to_fisher(self):
        result = solve_terminal_value(make_periodic_fisher(0.0, 1.0), 0.5, math.log(3.0), n=16)
        assert result.B == pytest.approx(0.25, abs=1e-6)

    def test_self_convergence_in_time_step(self, periodic):
        B = [solve_terminal_value(periodic, 0.5, 1.0, tol=1e-12, n=16, dt=dt).B for dt in (4e-3, 2e-3, 1e-3)]
        coarse, fine = abs(B[0] - B[1]), abs(B[1] - B[2])
        assert fine <= 0.75 * coarse + 1e-10
        assert fine / B[2] < 1e-3

    def test_rate_samples_sequential(self, fisher):
        samples = rate_samples(fisher, 0.5, [1.0, 2.0], n=16, dt=1e-2)
        assert [T for T, _ in samples] == [1.0, 2.0]
        assert samples[1][1] < samples[0][1]


class TestGlobalSolution:

    def test_normalization(self, fisher_global):
        assert fisher_global.field_at(0.0).mean() == pytest.approx(0.5, abs=1e-8)
        assert mean_crossing_time(fisher_global, 0.5) == pytest.approx(0.0, abs=1e-9)

    def test_constants_for_fisher(self, fisher_global):
        assert fisher_global.alpha == pytest.approx(1.0, rel=0.01)
        assert fisher_global.omega == pytest.approx(1.0, rel=0.01)
        assert fisher_global.f0 == pytest.approx(1.0)
        assert fisher_global.f1 == pytest.approx(1.0)

    def test_matches_logistic(self, fisher_global):
        for t in (-3.0, 0.0, 4.0):
            expected = 1.0 / (1.0 + math.exp(-t))
            assert np.allclose(global_field_at(fisher_global, t).values, expected, atol=1e-6)

    def test_uniqueness_across_starting_levels(self, fisher, fisher_global):
        other = construct_global_solution(fisher, n=100, t_max=15.0, grid=16)
        for t in (-5.0, 0.0, 5.0):
            a = other.field_at(t, extrapolate=True).values
            b = fisher_global.field_at(t, extrapolate=True).values
            assert np.max(np.abs(a - b)) < 1e-4

    def test_outside_window(self, fisher_global):
        with pytest.raises(LevelRangeError):
            fisher_global.field_at(-50.0)
        past = fisher_global.field_at(-50.0, extrapolate=True)
        assert past.mean() == pytest.approx(math.exp(-50.0), rel=0.01)

    def test_predicted_bmt_matches_shooting(self, fisher_global):
        assert predicted_bmt(fisher_global, 0.5, math.log(3.0)) == pytest.approx(0.25, abs=1e-6)

    def test_average_level_constant(self, fisher_global):
        assert average_level_constant(fisher_global, 0.75) == pytest.approx(3.0, rel=0.01)

    def test_periodic_construction(self, periodic):
        g = construct_global_solution(periodic, n=1000, t_max=10.0, grid=32)
        assert g.field_at(0.0).mean() == pytest.approx(0.5, abs=1e-8)
        assert g.alpha > 0 and g.omega > 0
        assert np.all(np.diff(g.step_means) > 0)

    def test_alpha_identity_at_window_start(self, fisher_global):
        g = fisher_global
        expected = g.alpha * g.pair_zero.eigenfunction.values * math.exp(g.f0 * g.t_min)
        assert np.allclose(g.fields[0], expected, rtol=5e-3, atol=0.0)

    def test_omega_identity_at_window_end(self, fisher_global):
        g = fisher_global
        deficit = g.omega * g.pair_one.eigenfunction.values * math.exp(-g.f1 * g.t_max)
        assert np.allclose(1.0 - g.fields[-1], deficit, rtol=5e-3, atol=0.0)

    def test_periodic_omega_identity_at_window_end(self, periodic):
        g = construct_global_solution(periodic, n=1000, t_max=10.0, grid=32)
        deficit = g.omega * g.pair_one.eigenfunction.values * math.exp(-g.f1 * g.t_max)
        assert np.allclose(1.0 - g.fields[-1], deficit, rtol=0.02, atol=0.0)

    def test_crossing_time_below_window(self, fisher_global):
        g = fisher_global
        with pytest.raises(LevelRangeError):
            mean_crossing_time(g, 1e-6)
        t = mean_crossing_time(g, 1e-6, extrapolate=True)
        assert t < g.t_min
        assert t == pytest.approx(math.log(1e-6), abs=1e-2)
        assert g.field_at(t, extrapolate=True).mean() == pytest.approx(1e-6, rel=1e-9)

    def test_crossing_time_above_window(self, fisher_global):
        g = fisher_global
        level = 1.0 - 1e-9
        t = mean_crossing_time(g, level, extrapolate=True)
        assert t > g.t_max
        assert t == pytest.approx(-math.log(1e-9), abs=1e-2)
        assert 1.0 - g.field_at(t, extrapolate=True).mean() == pytest.approx(1e-9, rel=1e-5)

    def test_crossing_time_inside_window_ignores_extrapolation(self, fisher_global):
        assert mean_crossing_time(fisher_global, 0.3, extrapolate=True) == mean_crossing_time(fisher_global, 0.3)

    def test_rejects_small_n(self, fisher):
        with pytest.raises(ConfigError):
            construct_global_solution(fisher, n=5)

    def test_summary_keys(self, fisher_global):
        assert {"alpha", "omega", "f0", "f1"} <= set(fisher_global.summary())


@pytest.mark.slow
class TestAcceptance:
    """Fisher periódico a = 0.5, L = 1"""

    def test_decay_rate_matches_eigenvalue(self, periodic):
        samples = rate_samples(periodic, 0.5, [6.0, 8.0, 10.0, 12.0])
        f0 = eigenpair_for(periodic, "zero", 512).rate
        assert fit_decay_rate(samples) == pytest.approx(f0, rel=0.02)

    def test_ratio_limit(self, periodic):
        ratios = ratio_limit_check(periodic, 0.5, [6.0, 9.0, 12.0])
        deviations = [abs(r - 1.0) for r in ratios]
        assert deviations[-1] <= 0.05
        assert deviations[0] >= deviations[1] >= deviations[2] or deviations[-1] < 1e-6
