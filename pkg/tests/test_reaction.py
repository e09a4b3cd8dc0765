"""Testes das não linearidades KPP e do validador estrutural"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kpp.errors import ConfigError
from kpp.reaction import (
    load_table,
    make_fisher,
    make_homogeneous,
    make_periodic_fisher,
    make_table,
    reaction_from_config,
    validate_kpp,
)


class TestFactories:
    """Construção e parâmetros das famílias"""

    def test_fisher_values(self, fisher):
        assert fisher.eval(0.3, 0.5) == pytest.approx(0.25)
        assert fisher.kind == "homogeneous"
        assert float(fisher.du_at_zero(0.7)) == 1.0
        assert float(fisher.du_at_one(0.7)) == -1.0

    def test_periodic_growth(self, periodic):
        assert periodic.eval(0.0, 0.5) == pytest.approx(1.5 * 0.25)
        assert periodic.eval(0.5, 0.5) == pytest.approx(0.5 * 0.25)
        assert periodic.kind == "periodic"
        assert periodic.lipschitz_bound() == pytest.approx(1.5)

    @pytest.mark.parametrize("amplitude", [-0.1, 1.0, 1.5])
    def test_amplitude_out_of_range(self, amplitude):
        with pytest.raises(ConfigError, match="Amplitude"):
            make_periodic_fisher(amplitude)

    def test_non_positive_period(self):
        with pytest.raises(ConfigError):
            make_fisher(0.0)

    def test_from_config(self):
        f = reaction_from_config({"family": "periodic_fisher", "amplitude": 0.25, "period": 2.0})
        assert f.to_config() == {"family": "periodic_fisher", "period": 2.0, "amplitude": 0.25}

    def test_table_requires_path(self):
        with pytest.raises(ConfigError, match="table_path"):
            reaction_from_config({"family": "table"})

    def test_homogeneous_slopes_by_differences(self):
        f = make_homogeneous(lambda u: 2.0 * u * (1.0 - u))
        assert float(f.du_at_zero(0.0)) == pytest.approx(2.0, abs=1e-6)
        assert float(f.du_at_one(0.0)) == pytest.approx(-2.0, abs=1e-6)

    def test_mean_rate_averages_over_cell(self, periodic):
        rate = periodic.mean_rate()
        assert float(rate(np.array(0.5))) == pytest.approx(0.25, abs=1e-12)


class TestTabulatedReaction:

    def _grid(self, periodic):
        xs = np.linspace(0.0, 1.0, 32, endpoint=False)
        us = np.linspace(0.0, 1.0, 41)
        return xs, us, periodic.eval(xs[:, None], us[None, :])

    def test_table_matches_analytic_on_nodes(self, periodic):
        xs, us, values = self._grid(periodic)
        table = make_table(xs, us, values, 1.0)
        assert np.allclose(table.eval(xs[:, None], us[None, :]), values)

    def test_periodic_wrap(self, periodic):
        xs, us, values = self._grid(periodic)
        table = make_table(xs, us, values, 1.0)
        assert table.eval(0.3, 0.4) == pytest.approx(table.eval(2.3, 0.4))

    def test_bind_agrees_with_eval(self, periodic):
        xs, us, values = self._grid(periodic)
        table = make_table(xs, us, values, 1.0)
        nodes = np.linspace(0.0, 1.0, 50, endpoint=False)
        u = np.linspace(0.05, 0.95, 50)
        assert np.allclose(table.bind(nodes)(u), table.eval(nodes, u))

    def test_bad_u_grid(self, periodic):
        xs, us, values = self._grid(periodic)
        with pytest.raises(ConfigError, match="de 0 a 1"):
            make_table(xs, us * 0.5, values, 1.0)

    def test_load_csv(self, tmp_path, periodic):
        xs, us, values = self._grid(periodic)
        path = tmp_path / "f.csv"
        rows = np.vstack([np.concatenate([[0.0], us]), np.column_stack([xs, values])])
        np.savetxt(path, rows, delimiter=",")
        table = load_table(str(path), 1.0)
        assert validate_kpp(table).check("vanishes_at_zero").passed

    def test_load_npz(self, tmp_path, periodic):
        xs, us, values = self._grid(periodic)
        path = tmp_path / "f.npz"
        np.savez(path, x=xs, u=us, f=values)
        table = load_table(str(path), 1.0)
        assert table.eval(0.0, 0.5) == pytest.approx(periodic.eval(0.0, 0.5))


class TestValidateKpp:
    """Condições KPP: falhas viram entradas, nunca exceções"""

    def test_fisher_passes(self, fisher):
        report = validate_kpp(fisher)
        assert report.passed
        assert {c.name for c in report.checks} >= {"vanishes_at_zero", "chord_bound", "ratio_decreasing"}

    def test_periodic_passes(self, periodic):
        assert validate_kpp(periodic).passed

    def test_allee_type_fails_ratio(self):
        f = make_homogeneous(lambda u: u * (1.0 - u) * (1.0 + 2.0 * u), 1.0, -3.0)
        report = validate_kpp(f)
        assert not report.passed
        assert report.check("ratio_decreasing").status == "fail"
        assert report.check("chord_bound").status == "fail"
        assert report.check("vanishes_at_zero").passed

    def test_nonvanishing_at_one(self):
        f = make_homogeneous(lambda u: u * (1.1 - u), 1.1, -0.9)
        check = validate_kpp(f).check("vanishes_at_one")
        assert check.status == "fail"
        assert check.worst_value == pytest.approx(0.1)

    def test_too_few_samples(self, fisher):
        with pytest.raises(ConfigError):
            validate_kpp(fisher, x_samples=8)

    @settings(max_examples=25, deadline=None)
    @given(st.floats(min_value=0.0, max_value=0.95), st.floats(min_value=0.25, max_value=4.0))
    def test_periodic_family_always_kpp(self, amplitude, period):
        assert validate_kpp(make_periodic_fisher(amplitude, period), 32, 32).passed


def central_slope(f, x, u, h):
    return float((f.eval(x, u + h) - f.eval(x, u - h)) / (2.0 * h))


class TestDerivativeConsistency:
    """f_u(x,0) e f_u(x,1) contra diferenças de eval"""

    @pytest.mark.parametrize("f", [
        make_fisher(),
        make_periodic_fisher(0.5, 1.0),
        make_periodic_fisher(0.3, 2.0),
        make_homogeneous(lambda u: 2.0 * u * (1.0 - u)),
    ])
    @settings(max_examples=30, deadline=None)
    @given(x=st.floats(min_value=0.0, max_value=2.0))
    def test_slopes_match_central_differences(self, f, x):
        assert central_slope(f, x, 0.0, 1e-4) == pytest.approx(float(f.du_at_zero(x)), abs=1e-6)
        assert central_slope(f, x, 1.0, 1e-4) == pytest.approx(float(f.du_at_one(x)), abs=1e-6)

    def test_central_difference_is_second_order(self):
        f = make_homogeneous(lambda u: u * (1.0 - u) * (1.0 + u), 1.0, -2.0)
        for u, slope in ((0.0, 1.0), (1.0, -2.0)):
            coarse = abs(central_slope(f, 0.3, u, 1e-2) - slope)
            fine = abs(central_slope(f, 0.3, u, 5e-3) - slope)
            assert fine / coarse == pytest.approx(0.25, rel=1e-3)

    @settings(max_examples=20, deadline=None)
    @given(x=st.floats(min_value=0.0, max_value=1.0))
    def test_table_slopes_match_forward_differences(self, periodic, x):
        xs = np.linspace(0.0, 1.0, 32, endpoint=False)
        us = np.linspace(0.0, 1.0, 41)
        table = make_table(xs, us, periodic.eval(xs[:, None], us[None, :]), 1.0)
        h = 0.5 * (us[1] - us[0])
        at_zero = float((table.eval(x, h) - table.eval(x, 0.0)) / h)
        at_one = float((table.eval(x, 1.0) - table.eval(x, 1.0 - h)) / h)
        assert at_zero == pytest.approx(float(table.du_at_zero(x)), rel=1e-9)
        assert at_one == pytest.approx(float(table.du_at_one(x)), rel=1e-9)
