"""
Frente na reta truncada
=======================

Evolução de u_t = u_xx + f(x,u) em [x_left, x_right] com dado tipo frente,
planejamento do domínio, extração de conjuntos de nível e de nível médio,
diagnóstico de achatamento e persistência das execuções.
"""

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
from scipy.integrate import trapezoid

from kpp.errors import BudgetError, ConfigError, DataError, LevelRangeError
from kpp.numerics import (
    ImexStepper,
    check_unit_interval,
    crossings,
    guard_reaction_step,
    line_diffusion_system,
    rk4_step,
    step_schedule,
)
from kpp.profiles import InitialData, inverse_tail, profile_from_config
from kpp.reaction import Nonlinearity, reaction_from_config

logger = logging.getLogger(__name__)

SCHEMA_HEADER = "# kpp-front schema v1"
DEFAULT_DX = 0.25
DEFAULT_X_LEFT = -20.0
DEFAULT_STRIDE = 50
DEFAULT_SAFETY = 2.0
DEFAULT_TAINT = 0.1
DEFAULT_NODE_BUDGET = 10_000_000
ALL = "all"


@dataclass(frozen=True, eq=False)
class LineField:
    """Valores em nós uniformes x_left + j·dx"""
    values: np.ndarray
    x_left: float
    dx: float

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def x(self) -> np.ndarray:
        return self.x_left + self.dx * np.arange(self.n)

    @property
    def x_right(self) -> float:
        return self.x_left + self.dx * (self.n - 1)


@dataclass(frozen=True)
class DomainPlan:
    x_left: float
    x_right: float
    dx: float
    phi_min: float = 0.0

    @property
    def nodes(self) -> int:
        return int(round((self.x_right - self.x_left) / self.dx)) + 1

    def as_dict(self) -> Dict[str, float]:
        return {"x_left": self.x_left, "x_right": self.x_right, "dx": self.dx,
                "nodes": self.nodes, "phi_min": self.phi_min}


@dataclass(frozen=True, eq=False)
class FrontRun:
    """Instantâneos de u(t,·) com diagnósticos por instantâneo"""
    times: np.ndarray
    fields: np.ndarray
    x_left: float
    dx: float
    dt: float
    horizon: float
    reaction: Optional[Nonlinearity]
    initial: Optional[InitialData]
    taint_threshold: float = DEFAULT_TAINT
    tainted_at: Optional[float] = None
    boundary: Dict[str, str] = field(default_factory=lambda: {"left": "dirichlet-plateau-ode",
                                                              "right": "neumann"})

    @property
    def x(self) -> np.ndarray:
        return self.x_left + self.dx * np.arange(self.fields.shape[1])

    @property
    def tainted(self) -> bool:
        return self.tainted_at is not None

    def untainted_at(self, t: float) -> bool:
        return self.tainted_at is None or t < self.tainted_at

    @property
    def mass(self) -> np.ndarray:
        return trapezoid(self.fields, dx=self.dx, axis=1)

    @property
    def left_values(self) -> np.ndarray:
        return self.fields[:, 0]

    @property
    def right_values(self) -> np.ndarray:
        return self.fields[:, -1]

    def snapshot_index(self, t: float) -> int:
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > self.dt * (1.0 + 1e-9):
            raise LevelRangeError(
                f"Nenhum instantâneo a até dt de t={t:.6g} (mais próximo: {self.times[k]:.6g})"
            )
        return k

    def snapshot(self, t: float) -> LineField:
        return LineField(self.fields[self.snapshot_index(t)], self.x_left, self.dx)

    def diagnostics(self) -> Dict[str, Any]:
        return {
            "times": self.times.tolist(),
            "mass": self.mass.tolist(),
            "left_boundary": self.left_values.tolist(),
            "right_boundary": self.right_values.tolist(),
            "tainted": self.tainted,
            "tainted_at": self.tainted_at,
            "taint_threshold": self.taint_threshold,
        }


def plan_domain(u0: InitialData, f0: float, horizon: float, m_min: float = 0.25,
                safety: float = DEFAULT_SAFETY, dx: float = DEFAULT_DX,
                x_left: float = DEFAULT_X_LEFT, node_budget: int = DEFAULT_NODE_BUDGET,
                constant: Optional[float] = None) -> DomainPlan:
    """
    x_right = safety·u0^{-1}(φ_min) + 10√T, com φ_min = c·e^{-f0 T} o menor
    nível relevante para m_min/4. c é a constante de linearização da reação
    (linear_constant para f homogênea, average_level_constant para f
    periódica); sem ela usa a logística level/(1 - level).
    """
    if horizon <= 0:
        raise ConfigError(f"Horizonte deve ser positivo: T={horizon}")
    if not 0.0 < m_min < 1.0:
        raise ConfigError(f"m_min fora de (0,1): {m_min}")
    level = m_min / 4.0
    if constant is None:
        constant = level / (1.0 - level)
    if constant <= 0:
        raise ConfigError(f"Constante de linearização deve ser positiva: {constant}")
    phi_min = constant * math.exp(-f0 * horizon)
    x_right = safety * inverse_tail(u0, phi_min) + 10.0 * math.sqrt(horizon)
    plan = DomainPlan(x_left=x_left, x_right=x_right, dx=dx, phi_min=phi_min)
    if plan.nodes > node_budget:
        raise BudgetError(
            f"Domínio [{x_left:g}, {x_right:.4g}] com dx={dx:g} exige {plan.nodes} nós "
            f"(orçamento {node_budget}); reduza T ou aumente o expoente da cauda"
        )
    logger.info("Domínio planejado: [%g, %.2f], dx=%g, %d nós", x_left, x_right, dx, plan.nodes)
    return plan


def _as_plan(grid: Union[DomainPlan, Dict[str, float]]) -> DomainPlan:
    if isinstance(grid, DomainPlan):
        return grid
    return DomainPlan(x_left=float(grid.get("x_left", DEFAULT_X_LEFT)), x_right=float(grid["x_right"]),
                      dx=float(grid.get("dx", DEFAULT_DX)))


def simulate_front(f: Nonlinearity, u0: InitialData, horizon: float,
                   grid: Union[DomainPlan, Dict[str, float]], dt: float = 1e-3,
                   stride: int = DEFAULT_STRIDE, taint_threshold: float = DEFAULT_TAINT) -> FrontRun:
    """
    IMEX na reta: Dirichlet à esquerda seguindo a EDO média do patamar,
    Neumann homogêneo à direita, monitoramento de contaminação pela fronteira.
    """
    plan = _as_plan(grid)
    if not plan.x_left < 0.0 < plan.x_right:
        raise ConfigError(f"Domínio deve conter a origem: [{plan.x_left}, {plan.x_right}]")
    n_steps, dt_eff = step_schedule(horizon, dt)
    guard_reaction_step(dt_eff, f.lipschitz_bound())

    x = plan.x_left + plan.dx * np.arange(plan.nodes)
    u = np.clip(np.asarray(u0.eval(x), dtype=float), 0.0, 1.0)
    stepper = ImexStepper(f.bind(x), line_diffusion_system(len(x), plan.dx, dt_eff), dt_eff)
    plateau_rate = f.mean_rate()
    half = 0.5 * dt_eff

    times, fields = [0.0], [u.copy()]
    tainted_at = None
    v = float(u[0])
    for k in range(1, n_steps + 1):
        v_half = float(rk4_step(plateau_rate, np.array(v), half))
        v = float(rk4_step(plateau_rate, np.array(v_half), half))
        u = stepper.step(u, boundary=(v_half, v))
        t = k * dt_eff
        check_unit_interval(u, t)
        if tainted_at is None and u[-1] > taint_threshold:
            tainted_at = t
            logger.warning("Execução contaminada: u(x_right)=%.3g > %.3g em t=%.4g", u[-1], taint_threshold, t)
        if k % stride == 0 or k == n_steps:
            times.append(t)
            fields.append(u.copy())

    return FrontRun(times=np.array(times), fields=np.array(fields), x_left=plan.x_left, dx=plan.dx,
                    dt=dt_eff, horizon=horizon, reaction=f, initial=u0,
                    taint_threshold=taint_threshold, tainted_at=tainted_at)


def level_crossings(line: LineField, m: float) -> np.ndarray:
    """Cruzamentos de u - m entre nós adjacentes, ordenados"""
    return crossings(line.x, line.values, m)


def extract_level_set(run: FrontRun, m: float, t: float) -> np.ndarray:
    """E_m(t) no instantâneo mais próximo (até dt); vazio quando não há cruzamento"""
    return level_crossings(run.snapshot(t), m)


def _prefix(values: np.ndarray, dx: float) -> np.ndarray:
    return np.concatenate([[0.0], np.cumsum(0.5 * dx * (values[1:] + values[:-1]))])


def _primitive(values: np.ndarray, prefix: np.ndarray, x_left: float, dx: float, points: np.ndarray) -> np.ndarray:
    """∫_{x_left}^{p} do interpolante linear por partes"""
    s = (points - x_left) / dx
    k = np.clip(np.floor(s).astype(int), 0, len(values) - 2)
    h = (s - k) * dx
    slope = (values[k + 1] - values[k]) / dx
    return prefix[k] + values[k] * h + 0.5 * slope * h ** 2


def window_average(line: LineField, window: float) -> Tuple[np.ndarray, np.ndarray]:
    """A(x) = (1/L)∫_x^{x+L} u nos nós x com x + L dentro do domínio"""
    if window <= 0 or window > line.x_right - line.x_left:
        raise ConfigError(f"Janela L={window} deve estar em (0, largura do domínio]")
    prefix = _prefix(line.values, line.dx)
    x = line.x
    starts = x[x + window <= line.x_right + 1e-12 * line.dx]
    upper = _primitive(line.values, prefix, line.x_left, line.dx, np.minimum(starts + window, line.x_right))
    lower = _primitive(line.values, prefix, line.x_left, line.dx, starts)
    return starts, (upper - lower) / window


def extract_average_level_set(run: FrontRun, m: float, t: float, window: float) -> Union[np.ndarray, str]:
    """Ē_m(t): cruzamentos de A(x) = m; "all" quando A ≡ m"""
    line = run.snapshot(t)
    if np.ptp(line.values) == 0.0:
        return ALL if abs(line.values[0] - m) <= 1e-12 else np.array([])
    xs, averages = window_average(line, window)
    return crossings(xs, averages, m)


def flatness_diagnostic(run: FrontRun, floor: float = 1e-12) -> Tuple[np.ndarray, np.ndarray]:
    """Série temporal de ‖u_x/u‖∞ (nós com u > floor, instantâneos não contaminados)"""
    times, values = [], []
    for t, u in zip(run.times, run.fields):
        if not run.untainted_at(t):
            break
        mask = u[:-1] > floor
        gradient = np.abs(np.diff(u)) / run.dx
        times.append(float(t))
        values.append(float((gradient[mask] / u[:-1][mask]).max()) if mask.any() else 0.0)
    return np.array(times), np.array(values)


def save_run(run: FrontRun, directory: Union[str, Path]) -> List[Path]:
    """snapshots.csv (t e valores nodais por linha) + run.json"""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    csv_path = directory / "snapshots.csv"
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write(SCHEMA_HEADER + "\n")
        np.savetxt(fh, np.column_stack([run.times, run.fields]), delimiter=",", fmt="%.17g")
    description = {
        "grid": {"x_left": run.x_left, "dx": run.dx, "nodes": int(run.fields.shape[1]),
                 "x_right": float(run.x[-1])},
        "dt": run.dt,
        "horizon": run.horizon,
        "boundary": run.boundary,
        "reaction": run.reaction.to_config() if run.reaction is not None else None,
        "initial_data": run.initial.to_config() if run.initial is not None else None,
        "diagnostics": run.diagnostics(),
    }
    json_path = directory / "run.json"
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(description, fh, ensure_ascii=False, indent=2, sort_keys=True)
    return [csv_path, json_path]


def load_run(directory: Union[str, Path]) -> FrontRun:
    directory = Path(directory)
    csv_path = directory / "snapshots.csv"
    json_path = directory / "run.json"
    if not csv_path.exists() or not json_path.exists():
        raise DataError(f"Diretório {directory} não contém snapshots.csv e run.json")
    with open(csv_path, encoding="utf-8") as fh:
        header = fh.readline().strip()
    if header != SCHEMA_HEADER:
        raise DataError(f"Esquema CSV desconhecido em {csv_path}: {header!r}")
    with open(json_path, encoding="utf-8") as fh:
        description = json.load(fh)
    data = np.loadtxt(csv_path, delimiter=",", comments="#", ndmin=2)

    reaction, initial = None, None
    try:
        if description.get("reaction"):
            reaction = reaction_from_config(description["reaction"])
        if description.get("initial_data"):
            initial = profile_from_config(description["initial_data"])
    except ConfigError as e:
        logger.warning("Execução carregada sem reconstruir reação/dado inicial: %s", e)

    diagnostics = description.get("diagnostics", {})
    return FrontRun(times=data[:, 0], fields=data[:, 1:], x_left=description["grid"]["x_left"],
                    dx=description["grid"]["dx"], dt=description["dt"], horizon=description["horizon"],
                    reaction=reaction, initial=initial,
                    taint_threshold=diagnostics.get("taint_threshold", DEFAULT_TAINT),
                    tainted_at=diagnostics.get("tainted_at"),
                    boundary=description.get("boundary", {}))
