"""
Não linearidades KPP periódicas
===============================

Famílias de termos de reação f(x,u), L-periódicos em x, com as derivadas
f_u(x,0) e f_u(x,1), e o validador das condições estruturais KPP.
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Optional

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from kpp.errors import ConfigError
from kpp.numerics import Rate
from kpp.reports import CheckResult, ValidationReport

logger = logging.getLogger(__name__)

EQUALITY_TOL = 1e-12
MONOTONE_TOL = 1e-10
SIGN_TOL = 1e-10
DEFAULT_SAMPLES = 64


class Nonlinearity(ABC):
    """Termo de reação f(x,u) periódico de período L"""

    period: float
    family: str

    @property
    def kind(self) -> str:
        return "periodic"

    @abstractmethod
    def eval(self, x, u) -> np.ndarray:
        """Taxa de reação f(x,u), vetorizada com broadcasting"""

    @abstractmethod
    def du_at_zero(self, x) -> np.ndarray:
        """f_u(x,0)"""

    @abstractmethod
    def du_at_one(self, x) -> np.ndarray:
        """f_u(x,1)"""

    def bind(self, x: np.ndarray) -> Rate:
        """Taxa u -> f(x,u) com os nós x fixos (usada nos passos de tempo)"""
        nodes = np.asarray(x, dtype=float)
        return lambda u: self.eval(nodes, u)

    def lipschitz_bound(self, samples: int = DEFAULT_SAMPLES) -> float:
        """max |f_u| estimado em grade (guarda de estabilidade)"""
        xs = np.linspace(0.0, self.period, samples, endpoint=False)[:, None]
        us = np.linspace(0.0, 1.0, samples + 1)[None, :]
        values = self.eval(xs, us)
        slopes = np.abs(np.diff(values, axis=1)) / np.diff(us, axis=1)
        return float(slopes.max())

    def mean_rate(self, samples: int = DEFAULT_SAMPLES) -> Rate:
        """EDO média v' = média_x f(x,v) (fronteira esquerda da reta)"""
        if self.kind == "homogeneous":
            return lambda v: self.eval(0.0, v)
        xs = np.linspace(0.0, self.period, samples, endpoint=False)

        def rate(v):
            v = np.asarray(v, dtype=float)
            return self.eval(xs[:, None], np.atleast_1d(v)[None, :]).mean(axis=0).reshape(v.shape)

        return rate

    def to_config(self) -> Dict[str, Any]:
        return {"family": self.family, "period": self.period}


def _broadcast(x, u):
    x_arr, u_arr = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(u, dtype=float))
    return x_arr, u_arr


@dataclass(frozen=True)
class FisherReaction(Nonlinearity):
    """f(x,u) = u(1-u)"""
    period: float = 1.0
    family: str = field(default="fisher", init=False)

    @property
    def kind(self) -> str:
        return "homogeneous"

    def eval(self, x, u):
        _, u_arr = _broadcast(x, u)
        return u_arr * (1.0 - u_arr)

    def du_at_zero(self, x):
        return np.ones_like(np.asarray(x, dtype=float))

    def du_at_one(self, x):
        return -np.ones_like(np.asarray(x, dtype=float))

    def bind(self, x):
        return lambda u: u * (1.0 - u)

    def lipschitz_bound(self, samples: int = DEFAULT_SAMPLES) -> float:
        return 1.0


@dataclass(frozen=True)
class PeriodicFisherReaction(Nonlinearity):
    """f(x,u) = (1 + a cos(2πx/L)) u(1-u)"""
    amplitude: float
    period: float = 1.0
    family: str = field(default="periodic_fisher", init=False)

    def growth(self, x) -> np.ndarray:
        return 1.0 + self.amplitude * np.cos(2.0 * math.pi * np.asarray(x, dtype=float) / self.period)

    def eval(self, x, u):
        x_arr, u_arr = _broadcast(x, u)
        return self.growth(x_arr) * u_arr * (1.0 - u_arr)

    def du_at_zero(self, x):
        return self.growth(x)

    def du_at_one(self, x):
        return -self.growth(x)

    def bind(self, x):
        g = self.growth(x)
        return lambda u: g * u * (1.0 - u)

    def lipschitz_bound(self, samples: int = DEFAULT_SAMPLES) -> float:
        return 1.0 + abs(self.amplitude)

    def to_config(self) -> Dict[str, Any]:
        return {"family": self.family, "period": self.period, "amplitude": self.amplitude}


@dataclass(frozen=True, eq=False)
class HomogeneousReaction(Nonlinearity):
    """
    f(x,u) = g(u) dado por uma função do usuário.

    Derivadas em 0 e 1 explícitas quando informadas; caso contrário,
    diferenças unilaterais de segunda ordem.
    """
    rate: Callable[[np.ndarray], np.ndarray]
    slope_at_zero: Optional[float] = None
    slope_at_one: Optional[float] = None
    period: float = 1.0
    family: str = field(default="custom", init=False)

    @property
    def kind(self) -> str:
        return "homogeneous"

    def eval(self, x, u):
        _, u_arr = _broadcast(x, u)
        return np.asarray(self.rate(u_arr), dtype=float)

    def _slope(self, at: float) -> float:
        h = 1e-6
        g = lambda s: float(self.rate(np.asarray(s, dtype=float)))
        if at == 0.0:
            return (-3.0 * g(0.0) + 4.0 * g(h) - g(2.0 * h)) / (2.0 * h)
        return (3.0 * g(1.0) - 4.0 * g(1.0 - h) + g(1.0 - 2.0 * h)) / (2.0 * h)

    def du_at_zero(self, x):
        value = self.slope_at_zero if self.slope_at_zero is not None else self._slope(0.0)
        return np.full_like(np.asarray(x, dtype=float), value)

    def du_at_one(self, x):
        value = self.slope_at_one if self.slope_at_one is not None else self._slope(1.0)
        return np.full_like(np.asarray(x, dtype=float), value)

    def bind(self, x):
        return lambda u: np.asarray(self.rate(u), dtype=float)


@dataclass(frozen=True, eq=False)
class TabulatedReaction(Nonlinearity):
    """Tabela f(x_i, u_j) com interpolação bilinear e extensão periódica em x"""
    x_grid: np.ndarray
    u_grid: np.ndarray
    values: np.ndarray
    period: float = 1.0
    source: Optional[str] = None
    family: str = field(default="table", init=False)

    def __post_init__(self):
        xs = np.append(self.x_grid, self.x_grid[0] + self.period)
        table = np.vstack([self.values, self.values[:1]])
        interpolator = RegularGridInterpolator((xs, self.u_grid), table, method="linear")
        object.__setattr__(self, "_interpolator", interpolator)
        object.__setattr__(self, "_x_ext", xs)
        object.__setattr__(self, "_table_ext", table)

    def _wrap(self, x):
        return self.x_grid[0] + np.mod(np.asarray(x, dtype=float) - self.x_grid[0], self.period)

    def eval(self, x, u):
        x_arr, u_arr = _broadcast(x, u)
        points = np.stack([self._wrap(x_arr), np.clip(u_arr, self.u_grid[0], self.u_grid[-1])], axis=-1)
        return self._interpolator(points.reshape(-1, 2)).reshape(x_arr.shape)

    def du_at_zero(self, x):
        h = self.u_grid[1] - self.u_grid[0]
        return (self.eval(x, self.u_grid[1]) - self.eval(x, self.u_grid[0])) / h

    def du_at_one(self, x):
        h = self.u_grid[-1] - self.u_grid[-2]
        return (self.eval(x, self.u_grid[-1]) - self.eval(x, self.u_grid[-2])) / h

    def bind(self, x):
        # Interpola primeiro em x: cada nó vira uma tabela linear por partes em u
        xw = self._wrap(x)
        k = np.clip(np.searchsorted(self._x_ext, xw, side="right") - 1, 0, len(self._x_ext) - 2)
        theta = ((xw - self._x_ext[k]) / (self._x_ext[k + 1] - self._x_ext[k]))[:, None]
        rows = (1.0 - theta) * self._table_ext[k] + theta * self._table_ext[k + 1]
        ug = self.u_grid
        nodes = np.arange(len(xw))

        def rate(u):
            uc = np.clip(u, ug[0], ug[-1])
            j = np.clip(np.searchsorted(ug, uc, side="right") - 1, 0, len(ug) - 2)
            s = (uc - ug[j]) / (ug[j + 1] - ug[j])
            return (1.0 - s) * rows[nodes, j] + s * rows[nodes, j + 1]

        return rate

    def to_config(self) -> Dict[str, Any]:
        return {"family": self.family, "period": self.period, "table_path": self.source}


def make_fisher(period: float = 1.0) -> FisherReaction:
    """Não linearidade de Fisher homogênea u(1-u)"""
    if period <= 0:
        raise ConfigError(f"Período deve ser positivo: {period}")
    return FisherReaction(period=period)


def make_periodic_fisher(amplitude: float, period: float = 1.0) -> PeriodicFisherReaction:
    """Família (1 + a cos(2πx/L)) u(1-u), com 0 <= a < 1"""
    if not 0.0 <= amplitude < 1.0:
        raise ConfigError(f"Amplitude deve estar em [0,1) para manter f_u(x,0) > 0: {amplitude}")
    if period <= 0:
        raise ConfigError(f"Período deve ser positivo: {period}")
    return PeriodicFisherReaction(amplitude=amplitude, period=period)


def make_homogeneous(rate, du_at_zero: Optional[float] = None, du_at_one: Optional[float] = None,
                     period: float = 1.0) -> HomogeneousReaction:
    return HomogeneousReaction(rate=rate, slope_at_zero=du_at_zero, slope_at_one=du_at_one, period=period)


def make_table(x_grid, u_grid, values, period: float, source: Optional[str] = None) -> TabulatedReaction:
    x_grid = np.asarray(x_grid, dtype=float)
    u_grid = np.asarray(u_grid, dtype=float)
    values = np.asarray(values, dtype=float)
    if values.shape != (len(x_grid), len(u_grid)):
        raise ConfigError(f"Tabela com forma {values.shape}, esperado {(len(x_grid), len(u_grid))}")
    if u_grid[0] != 0.0 or u_grid[-1] != 1.0:
        raise ConfigError("A grade em u da tabela deve ir de 0 a 1")
    if np.any(np.diff(x_grid) <= 0) or np.any(np.diff(u_grid) <= 0):
        raise ConfigError("Grades da tabela devem ser estritamente crescentes")
    if x_grid[-1] - x_grid[0] >= period:
        raise ConfigError("A grade em x deve cobrir um único período [x0, x0 + L)")
    return TabulatedReaction(x_grid=x_grid, u_grid=u_grid, values=values, period=period, source=source)


def load_table(path: str, period: float) -> TabulatedReaction:
    """
    Carrega uma tabela de reação.

    CSV: primeira linha `_, u_1, ..., u_k`; demais linhas `x_i, f(x_i,u_1), ...`.
    NPZ: arrays `x`, `u`, `f`.
    """
    file = Path(path)
    if not file.exists():
        raise ConfigError(f"Tabela de reação não encontrada: {path}")
    if file.suffix == ".npz":
        data = np.load(file)
        return make_table(data["x"], data["u"], data["f"], period, source=str(path))
    raw = np.loadtxt(file, delimiter=",", comments="#")
    return make_table(raw[1:, 0], raw[0, 1:], raw[1:, 1:], period, source=str(path))


def reaction_from_config(fragment) -> Nonlinearity:
    """Constrói a não linearidade a partir do fragmento `reaction` da configuração"""
    data = fragment if isinstance(fragment, dict) else fragment.model_dump()
    family = data.get("family", "fisher")
    period = float(data.get("period", 1.0))
    if family == "fisher":
        return make_fisher(period)
    if family == "periodic_fisher":
        return make_periodic_fisher(float(data.get("amplitude", 0.0)), period)
    if family == "table":
        if not data.get("table_path"):
            raise ConfigError("Família 'table' exige table_path")
        return load_table(data["table_path"], period)
    raise ConfigError(f"Família de reação desconhecida: {family}")


def _worst(name: str, violation: np.ndarray, xs: np.ndarray, us: np.ndarray, limit: float,
           detail: str) -> CheckResult:
    """Entrada do relatório a partir de uma grade de violações (positivo = viola)"""
    idx = np.unravel_index(int(np.argmax(violation)), violation.shape)
    worst = float(violation[idx])
    point = {"x": float(np.broadcast_to(xs, violation.shape)[idx]),
             "u": float(np.broadcast_to(us, violation.shape)[idx])}
    return CheckResult(name=name, status="pass" if worst <= limit else "fail",
                       worst_point=point, worst_value=worst, detail=detail)


def validate_kpp(f: Nonlinearity, x_samples: int = DEFAULT_SAMPLES,
                 u_samples: int = DEFAULT_SAMPLES) -> ValidationReport:
    """
    Verifica as condições KPP numa grade x_samples × u_samples.

    Falhas viram entradas do relatório, nunca exceções.
    """
    if x_samples < 16 or u_samples < 16:
        raise ConfigError("Grades de validação precisam de pelo menos 16 amostras")

    xs = np.linspace(0.0, f.period, x_samples, endpoint=False)[:, None]
    us = np.linspace(0.0, 1.0, u_samples)[None, :]
    values = f.eval(xs, us)
    slope0 = f.du_at_zero(xs)
    slope1 = f.du_at_one(xs)
    zeros = np.zeros_like(xs)

    checks = [
        _worst("vanishes_at_zero", np.abs(f.eval(xs, 0.0)), xs, zeros, EQUALITY_TOL, "f(x,0) = 0"),
        _worst("vanishes_at_one", np.abs(f.eval(xs, 1.0)), xs, zeros + 1.0, EQUALITY_TOL, "f(x,1) = 0"),
        _worst("chord_bound", values - slope0 * us, xs, us, EQUALITY_TOL, "f(x,u) <= f_u(x,0) u"),
    ]

    ratio = values[:, 1:] / us[:, 1:]
    checks.append(_worst("ratio_decreasing", np.diff(ratio, axis=1), xs, us[:, 2:], MONOTONE_TOL,
                         "f(x,u)/u não crescente em u"))
    checks.append(_worst("positive_growth_at_zero", SIGN_TOL - slope0, xs, zeros, 0.0, "f_u(x,0) > 0"))
    checks.append(_worst("negative_slope_at_one", slope1 + SIGN_TOL, xs, zeros + 1.0, 0.0, "f_u(x,1) < 0"))
    shifted = f.eval(xs + f.period, us)
    checks.append(_worst("periodic", np.abs(shifted - values), xs, us, EQUALITY_TOL, "f(x+L,u) = f(x,u)"))

    report = ValidationReport(subject=f"reaction:{f.family}", checks=checks)
    failed = [c.name for c in checks if not c.passed]
    if failed:
        logger.info("Não linearidade %s viola: %s", f.family, ", ".join(failed))
    return report
