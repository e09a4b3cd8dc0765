"""Testes dos dados iniciais, da inversa da cauda e da admissibilidade"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kpp.errors import ConfigError, LevelRangeError
from kpp.profiles import (
    ScaledProfile,
    inverse_tail,
    load_profile_table,
    make_algebraic,
    make_constant,
    make_exponential,
    make_log_algebraic,
    make_stretched,
    oscillation_ratio,
    profile_from_config,
    validate_admissibility,
)


class TestAlgebraicProfile:

    def test_tail_values(self, algebraic2):
        assert algebraic2.eval(10.0) == pytest.approx(0.01)
        assert make_algebraic(4.0).eval(10.0) == pytest.approx(1e-4)

    def test_plateau(self):
        u0 = make_algebraic(2.0, plateau=0.6)
        assert u0.eval(-5.0) == 0.6
        assert u0.eval(1.0) == 0.6
        assert u0.left_level == 0.6

    def test_join_is_monotone(self, algebraic2):
        x = np.linspace(0.5, 3.0, 400)
        assert np.all(np.diff(algebraic2.eval(x)) <= 0)

    def test_log_eval_without_underflow(self):
        u0 = make_algebraic(50.0)
        assert u0.log_eval(1e10) == pytest.approx(-50.0 * math.log(1e10))

    @pytest.mark.parametrize("alpha", [0.0, -1.0])
    def test_rejects_non_positive_alpha(self, alpha):
        with pytest.raises(ConfigError, match="positivo"):
            make_algebraic(alpha)

    def test_rejects_plateau_below_join(self):
        with pytest.raises(ConfigError, match="monótona"):
            make_algebraic(2.0, plateau=0.26)


class TestOtherFamilies:

    def test_stretched_tail(self):
        u0 = make_stretched(0.5)
        assert u0.eval(16.0) == pytest.approx(math.exp(-4.0))

    def test_stretched_rejects_beta(self):
        with pytest.raises(ConfigError):
            make_stretched(1.0)

    def test_log_algebraic_gamma_bound(self):
        with pytest.raises(ConfigError, match="gamma"):
            make_log_algebraic(1.0, 1.0)
        u0 = make_log_algebraic(2.0, 1.0)
        assert u0.eval(math.e ** 2) == pytest.approx(math.e ** -4 * 2.0)

    def test_constant_has_no_tail(self):
        u0 = make_constant(0.5)
        assert u0.eval(123.0) == 0.5
        with pytest.raises(LevelRangeError, match="cauda"):
            inverse_tail(u0, 0.25)

    def test_scaled_profile_is_capped(self, algebraic2):
        scaled = ScaledProfile(algebraic2, 4.0)
        assert scaled.eval(0.0) == 1.0
        assert scaled.eval(10.0) == pytest.approx(0.04)

    def test_table_profile(self, tmp_path):
        path = tmp_path / "u0.csv"
        x = np.array([0.0, 1.0, 2.0, 4.0, 8.0])
        np.savetxt(path, np.column_stack([x, [1.0, 1.0, 0.25, 1 / 16, 1 / 64]]), delimiter=",")
        u0 = load_profile_table(str(path))
        assert u0.eval(16.0) == pytest.approx(1 / 256)
        assert u0.tail_start == 1.0
        assert inverse_tail(u0, 1 / 16) == pytest.approx(4.0)

    def test_from_config_missing_parameter(self):
        with pytest.raises(ConfigError, match="ausente"):
            profile_from_config({"family": "stretched"})

    def test_from_config_unknown_family(self):
        with pytest.raises(ConfigError, match="desconhecida"):
            profile_from_config({"family": "gaussian"})


class TestInverseTail:

    def test_closed_forms(self, algebraic2):
        assert inverse_tail(algebraic2, 0.01) == pytest.approx(10.0, rel=1e-12)
        assert inverse_tail(make_algebraic(4.0), 1e-4) == pytest.approx(10.0, rel=1e-12)

    def test_tiny_level(self, algebraic2):
        assert inverse_tail(algebraic2, 1e-200) == pytest.approx(1e100, rel=1e-12)

    def test_level_above_plateau(self):
        with pytest.raises(LevelRangeError):
            inverse_tail(make_algebraic(2.0, plateau=0.4), 0.5)

    @pytest.mark.parametrize("level", [0.0, 1.0, -0.2])
    def test_level_out_of_range(self, algebraic2, level):
        with pytest.raises(LevelRangeError):
            inverse_tail(algebraic2, level)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(min_value=-250.0, max_value=-0.05))
    def test_inverse_round_trip_in_log(self, log_level):
        u0 = make_algebraic(3.0)
        x = inverse_tail(u0, math.exp(log_level))
        assert u0.log_eval(x) == pytest.approx(log_level, rel=1e-10, abs=1e-10)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(min_value=1e-8, max_value=0.5), st.floats(min_value=1e-8, max_value=0.5))
    def test_inverse_is_decreasing(self, a, b):
        u0 = make_stretched(0.4)
        if a < b:
            assert inverse_tail(u0, a) >= inverse_tail(u0, b)


class TestAdmissibility:

    @pytest.mark.parametrize("factory", [lambda: make_algebraic(2.0), lambda: make_algebraic(4.0),
                                         lambda: make_log_algebraic(2.0, 1.0)])
    def test_admissible_families(self, factory):
        report = validate_admissibility(factory())
        assert report.passed, [c for c in report.checks if not c.passed]

    def test_exponential_is_not_slow(self):
        report = validate_admissibility(make_exponential(1.0), x_max=200.0)
        assert report.check("slower_than_exponential").status == "fail"

    def test_stretched_two_thirds(self):
        report = validate_admissibility(make_stretched(2.0 / 3.0), x_max=1e8)
        for name in ("decay_to_zero", "slower_than_exponential", "monotone_tail"):
            assert report.check(name).passed
        assert report.check("regularity_ratio").status == "fail"

    def test_x_max_must_exceed_tail(self, algebraic2):
        with pytest.raises(ConfigError):
            validate_admissibility(algebraic2, x_max=0.5)


class TestOscillationRatio:

    def test_closed_form_minus(self, algebraic2):
        ratio = oscillation_ratio(algebraic2, lambda t: math.exp(-t), 1.0, 20.0, sign=-1)
        assert ratio == pytest.approx((1.0 - 20.0 * math.exp(-10.0)) ** -2, rel=1e-9)

    def test_closed_form_plus(self, algebraic2):
        ratio = oscillation_ratio(algebraic2, lambda t: math.exp(-t), 1.0, 20.0, sign=+1)
        assert ratio == pytest.approx((1.0 + 20.0 * math.exp(-10.0)) ** -2, rel=1e-9)

    @pytest.mark.parametrize("u0, t", [(make_algebraic(2.0), 30.0), (make_stretched(0.3), 200.0)])
    def test_ratio_tends_to_one(self, u0, t):
        deviations = [abs(oscillation_ratio(u0, lambda s: math.exp(-s), 1.0, s) - 1.0)
                      for s in (t / 2, 3 * t / 4, t)]
        assert deviations[0] > deviations[1] > deviations[2]
        assert deviations[-1] < 0.01
