"""Perfil logístico contra a forma fechada e(t)/(1+e(t))"""

import math

import numpy as np
import pytest

from kpp.errors import ConfigError, LevelRangeError
from kpp.logistic import (
    level_time,
    linear_constant,
    predict_level_position,
    solve_profile,
    spreading_law,
)
from kpp.profiles import make_algebraic
from kpp.reaction import make_homogeneous


@pytest.fixture(scope="module")
def profile(fisher):
    return solve_profile(fisher)


def closed_form(t):
    return 1.0 / (1.0 + np.exp(-np.asarray(t, dtype=float)))


class TestSolveProfile:

    def test_matches_closed_form(self, profile):
        t = np.linspace(-20.0, 20.0, 801)
        assert np.max(np.abs(profile.eval(t) - closed_form(t))) < 1e-8

    def test_anchor(self, profile):
        assert profile.eval(0.0) == pytest.approx(0.5, abs=1e-14)

    def test_extrapolation_beyond_range(self, profile):
        assert profile.eval(-80.0) == pytest.approx(math.exp(-80.0), rel=1e-6)
        assert 1.0 - 1e-9 < profile.eval(40.0) <= 1.0

    def test_scalar_and_vector(self, profile):
        assert isinstance(profile(1.0), float)
        assert profile(np.array([0.0, 1.0])).shape == (2,)

    def test_rejects_periodic(self, periodic):
        with pytest.raises(ConfigError, match="homogênea"):
            solve_profile(periodic)

    def test_rejects_range_without_zero(self, fisher):
        with pytest.raises(ConfigError):
            solve_profile(fisher, t_range=(1.0, 5.0))

    def test_other_homogeneous_rate(self):
        f = make_homogeneous(lambda u: 2.0 * u * (1.0 - u), 2.0, -2.0)
        profile = solve_profile(f)
        assert profile.eval(1.0) == pytest.approx(float(closed_form(2.0)), abs=1e-8)


class TestLevelTime:

    @pytest.mark.parametrize("m", [0.1, 0.25, 0.5, 0.75, 0.9])
    def test_logit(self, profile, m):
        assert level_time(profile, m) == pytest.approx(math.log(m / (1.0 - m)), abs=1e-8)

    def test_level_in_linear_tail(self, profile):
        assert level_time(profile, 1e-40) == pytest.approx(math.log(1e-40), abs=1e-6)

    @pytest.mark.parametrize("m", [0.0, 1.0, 1.5])
    def test_out_of_range(self, profile, m):
        with pytest.raises(LevelRangeError):
            level_time(profile, m)


class TestPredictions:

    def test_half_level_alpha2(self, profile, algebraic2):
        x = predict_level_position(profile, algebraic2, 0.5, 10.0)
        assert x == pytest.approx(math.exp(5.0) * (1.0 + math.exp(-10.0)) ** 0.5, rel=1e-8)

    def test_three_quarters_alpha2(self, profile, algebraic2):
        x = predict_level_position(profile, algebraic2, 0.75, 10.0)
        phi = 3.0 * math.exp(-10.0) / (1.0 + 3.0 * math.exp(-10.0))
        assert x == pytest.approx(phi ** -0.5, rel=1e-8)
        assert x == pytest.approx(85.7, abs=0.1)

    def test_level_above_plateau(self, profile):
        with pytest.raises(LevelRangeError):
            predict_level_position(profile, make_algebraic(2.0, plateau=0.4), 0.5, 0.0)

    @pytest.mark.parametrize("m", [0.25, 0.5, 0.75])
    def test_linear_constant_fisher(self, profile, m):
        assert linear_constant(profile, m) == pytest.approx(m / (1.0 - m), rel=1e-7)

    def test_spreading_law_leading_order(self, profile):
        u0 = make_algebraic(4.0)
        for m in (0.25, 0.5, 0.75):
            expected = ((1.0 - m) / m * math.exp(10.0)) ** 0.25
            assert spreading_law(profile, u0, m, 10.0) == pytest.approx(expected, rel=1e-7)
