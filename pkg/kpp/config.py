"""
Configuração
============

Variáveis de ambiente (config.env via python-dotenv) e arquivos de
experimento TOML/JSON validados com pydantic.
"""

import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass
from pathlib import Path
from typing import List, Literal, Optional

import json5
from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError, field_validator

from kpp.errors import ConfigError

Experiment = Literal["simulate", "hom_levelsets", "spreading_law", "mean_levelsets", "flatness",
                     "bmt_rate", "ratio_limit", "global_solution"]


class ReactionConfig(BaseModel):
    family: Literal["fisher", "periodic_fisher", "table"] = "fisher"
    amplitude: float = 0.0
    period: float = Field(default=1.0, gt=0)
    table_path: Optional[str] = None


class InitialDataConfig(BaseModel):
    family: Literal["algebraic", "stretched", "log_algebraic", "exponential", "constant", "table"] = "algebraic"
    alpha: Optional[float] = None
    beta: Optional[float] = None
    gamma: Optional[float] = None
    rate: Optional[float] = None
    level: Optional[float] = None
    plateau: float = Field(default=1.0, gt=0, le=1)
    table_path: Optional[str] = None


class NumericsConfig(BaseModel):
    dt: float = Field(default=1e-3, gt=0)
    dx: float = Field(default=0.25, gt=0)
    cell_nodes: int = Field(default=64, ge=8)
    eigen_nodes: int = Field(default=512, ge=8)
    x_left: float = -20.0
    x_right: Optional[float] = None
    safety: float = Field(default=2.0, gt=0)
    stride: int = Field(default=50, ge=1)
    taint_threshold: float = Field(default=0.1, gt=0, lt=1)
    tol: float = Field(default=1e-8, gt=0)
    global_n: float = Field(default=1000.0, ge=10)
    global_t_max: float = Field(default=15.0, gt=0)


class SweepConfig(BaseModel):
    """Produto cartesiano de parâmetros; cada combinação vira uma execução"""
    m: List[float] = Field(default_factory=lambda: [0.5])
    T: List[float] = Field(default_factory=lambda: [10.0])
    alpha: List[float] = Field(default_factory=lambda: [2.0])


class ExperimentConfig(BaseModel):
    experiment: Experiment = "simulate"
    reaction: ReactionConfig = Field(default_factory=ReactionConfig)
    initial_data: InitialDataConfig = Field(default_factory=InitialDataConfig)
    numerics: NumericsConfig = Field(default_factory=NumericsConfig)
    m: List[float] = Field(default_factory=lambda: [0.5])
    horizons: List[float] = Field(default_factory=lambda: [10.0])
    eps: float = Field(default=0.05, gt=0, lt=0.5)
    margin_rate: float = Field(default=2.0, ge=0)
    band: float = Field(default=0.15, gt=0)
    tolerance: float = Field(default=0.02, gt=0)
    m_min: Optional[float] = None
    output_dir: Optional[str] = None
    seed: int = 0
    sweep: Optional[SweepConfig] = None

    @field_validator("horizons")
    @classmethod
    def _positive_horizons(cls, value: List[float]) -> List[float]:
        if not value or any(t <= 0 for t in value):
            raise ValueError("horizontes devem ser positivos")
        return value

    @field_validator("m")
    @classmethod
    def _levels_in_unit_interval(cls, value: List[float]) -> List[float]:
        if not value or any(not 0 < m < 1 for m in value):
            raise ValueError("níveis m devem estar em (0,1)")
        return value

    @property
    def horizon(self) -> float:
        return max(self.horizons)


@dataclass(frozen=True)
class Settings:
    threads: int
    results_dir: str
    log_level: str
    node_budget: int


def load_settings(env_file: str = "config.env") -> Settings:
    """Lê KPP_* do ambiente, carregando antes o config.env se existir"""
    if os.path.exists(env_file):
        load_dotenv(env_file)
    try:
        return Settings(
            threads=int(os.getenv("KPP_THREADS", "1")),
            results_dir=os.getenv("KPP_RESULTS_DIR", "resultados"),
            log_level=os.getenv("KPP_LOG_LEVEL", "INFO").upper(),
            node_budget=int(float(os.getenv("KPP_NODE_BUDGET", "1e7"))),
        )
    except ValueError as e:
        raise ConfigError(f"Variável de ambiente KPP_* inválida: {e}")


def load_experiment_config(path: str) -> ExperimentConfig:
    """TOML (primário) ou JSON/JSON5"""
    file = Path(path)
    if not file.exists():
        raise ConfigError(f"Arquivo de configuração não encontrado: {path}")
    try:
        if file.suffix == ".toml":
            with open(file, "rb") as fh:
                data = tomllib.load(fh)
        else:
            with open(file, encoding="utf-8") as fh:
                data = json5.load(fh)
    except (tomllib.TOMLDecodeError, ValueError) as e:
        raise ConfigError(f"Erro de sintaxe em {path}: {e}")
    return parse_experiment_config(data, source=str(path))


def parse_experiment_config(data: dict, source: str = "<dict>") -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"Configuração inválida em {source}: {e}")
