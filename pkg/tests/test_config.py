"""Configuração: arquivos de experimento e variáveis de ambiente"""

from pathlib import Path

import pytest

from kpp.config import load_experiment_config, load_settings, parse_experiment_config
from kpp.errors import ConfigError

TOML = """
experiment = "hom_levelsets"
m = [0.25, 0.5]
horizons = [10.0]

[reaction]
family = "periodic_fisher"
amplitude = 0.5

[initial_data]
family = "algebraic"
alpha = 4.0

[numerics]
dx = 0.125
x_right = 3000.0
"""

JSON5 = """
// comentários são permitidos
{
  experiment: 'bmt_rate',
  horizons: [6, 8, 10,],
  numerics: {cell_nodes: 32},
}
"""


class TestExperimentFiles:

    def test_toml(self, tmp_path):
        path = tmp_path / "exp.toml"
        path.write_text(TOML, encoding="utf-8")
        config = load_experiment_config(str(path))
        assert config.experiment == "hom_levelsets"
        assert config.reaction.amplitude == 0.5
        assert config.initial_data.alpha == 4.0
        assert config.numerics.x_right == 3000.0
        assert config.numerics.dt == 1e-3
        assert config.horizon == 10.0

    def test_json5(self, tmp_path):
        path = tmp_path / "exp.json5"
        path.write_text(JSON5, encoding="utf-8")
        config = load_experiment_config(str(path))
        assert config.experiment == "bmt_rate"
        assert config.horizons == [6.0, 8.0, 10.0]
        assert config.numerics.cell_nodes == 32

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="não encontrado"):
            load_experiment_config(str(tmp_path / "nada.toml"))

    def test_syntax_error(self, tmp_path):
        path = tmp_path / "ruim.toml"
        path.write_text("experiment = \n", encoding="utf-8")
        with pytest.raises(ConfigError, match="sintaxe"):
            load_experiment_config(str(path))

    def test_shipped_experiments_are_valid(self):
        files = sorted(Path(__file__).parent.parent.joinpath("experiments").glob("*.toml"))
        assert files
        for file in files:
            load_experiment_config(str(file))


class TestValidation:

    @pytest.mark.parametrize("m", [[0.0], [1.0], [0.5, 1.2], []])
    def test_levels_outside_unit_interval(self, m):
        with pytest.raises(ConfigError, match="inválida"):
            parse_experiment_config({"m": m})

    @pytest.mark.parametrize("horizons", [[0.0], [-1.0], []])
    def test_non_positive_horizons(self, horizons):
        with pytest.raises(ConfigError):
            parse_experiment_config({"horizons": horizons})

    def test_unknown_experiment(self):
        with pytest.raises(ConfigError):
            parse_experiment_config({"experiment": "bogus"})

    def test_defaults(self):
        config = parse_experiment_config({})
        assert config.experiment == "simulate"
        assert config.reaction.family == "fisher"
        assert config.sweep is None


class TestSettings:

    def test_defaults(self, tmp_path, monkeypatch):
        for name in ("KPP_THREADS", "KPP_RESULTS_DIR", "KPP_LOG_LEVEL", "KPP_NODE_BUDGET"):
            monkeypatch.delenv(name, raising=False)
        settings = load_settings(str(tmp_path / "config.env"))
        assert settings.threads == 1
        assert settings.results_dir == "resultados"
        assert settings.node_budget == 10_000_000

    def test_environment(self, tmp_path, monkeypatch):
        monkeypatch.setenv("KPP_THREADS", "4")
        monkeypatch.setenv("KPP_LOG_LEVEL", "debug")
        monkeypatch.setenv("KPP_NODE_BUDGET", "2e6")
        settings = load_settings(str(tmp_path / "config.env"))
        assert settings.threads == 4
        assert settings.log_level == "DEBUG"
        assert settings.node_budget == 2_000_000

    def test_invalid_value(self, tmp_path, monkeypatch):
        monkeypatch.setenv("KPP_THREADS", "muitos")
        with pytest.raises(ConfigError, match="KPP_"):
            load_settings(str(tmp_path / "config.env"))
