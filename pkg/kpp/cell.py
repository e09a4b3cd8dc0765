"""
Problemas na célula periódica
=============================

Evolução no toro [0,L), problema de valor terminal que define B(m,T), a
solução global no tempo normalizada por média 1/2 em t = 0, tempos de
cruzamento da média e as constantes assintóticas α e ω.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse

from kpp.errors import (
    BracketError,
    ConfigError,
    DegenerateInputError,
    ExtractionError,
    HorizonError,
    LevelRangeError,
)
from kpp.numerics import (
    ImexStepper,
    UNIT_SLACK,
    check_unit_interval,
    guard_reaction_step,
    interpolate_in_time,
    monotone_crossing_time,
    periodic_second_difference,
    step_schedule,
)
from kpp.reaction import Nonlinearity
from kpp.spectral import EigenPair, TorusField, eigenpair_for

logger = logging.getLogger(__name__)

DEFAULT_DT = 1e-3
DEFAULT_CELL_NODES = 64
DEFAULT_STRIDE = 10
BISECTION_FLOOR = 1e-14
BISECTION_TOL = 1e-8
BISECTION_MAX_ITER = 60
EARLY_AMPLITUDE = 0.01
LATE_AMPLITUDE = 0.01


@dataclass(frozen=True, eq=False)
class CellTrajectory:
    """Instantâneos de φ(t,·) no toro e a série da média a cada passo"""
    times: np.ndarray
    fields: np.ndarray
    step_times: np.ndarray
    step_means: np.ndarray
    dt: float
    period: float
    reaction: Nonlinearity

    @property
    def final(self) -> TorusField:
        return TorusField(self.fields[-1].copy(), self.period)

    @property
    def means(self) -> np.ndarray:
        return self.fields.mean(axis=1)

    def field(self, k: int) -> TorusField:
        return TorusField(self.fields[k].copy(), self.period)


@dataclass(frozen=True, eq=False)
class TerminalValueResult:
    B: float
    m: float
    T: float
    trajectory: CellTrajectory
    iterations: int
    terminal_mean: float

    def as_dict(self) -> dict:
        return {"B": self.B, "m": self.m, "T": self.T, "iterations": self.iterations,
                "terminal_mean": self.terminal_mean}


@dataclass(frozen=True, eq=False)
class GlobalSolution:
    """
    Solução global φ reindexada para média 1/2 em t = 0, com as constantes
    α (φ ≈ α ψ0 e^{f0 t} em t → -∞) e ω (1 - φ ≈ ω ψ1 e^{-f1 t} em t → +∞).
    """
    times: np.ndarray
    fields: np.ndarray
    step_times: np.ndarray
    step_means: np.ndarray
    alpha: float
    omega: float
    n: float
    crossing: float
    pair_zero: EigenPair
    pair_one: EigenPair
    period: float
    dt: float
    reaction: Nonlinearity = field(repr=False)

    @property
    def t_min(self) -> float:
        return float(self.times[0])

    @property
    def t_max(self) -> float:
        return float(self.times[-1])

    @property
    def f0(self) -> float:
        return self.pair_zero.rate

    @property
    def f1(self) -> float:
        return self.pair_one.rate

    def field_at(self, t: float, extrapolate: bool = False) -> TorusField:
        """
        φ(t,·) por interpolação linear no tempo. Com extrapolate, fora da
        janela usa a projeção em ψ0 (passado) ou a aproximação 1 - ωψ1e^{-f1 t}.
        """
        if self.t_min <= t <= self.t_max:
            return TorusField(interpolate_in_time(self.times, self.fields, t), self.period)
        if not extrapolate:
            raise LevelRangeError(f"t={t:.6g} fora de [{self.t_min:.6g}, {self.t_max:.6g}]")
        psi0 = self.pair_zero.eigenfunction
        if t < self.t_min:
            weight = TorusField(self.fields[0], self.period).inner(psi0)
            return TorusField(weight * psi0.values * math.exp(self.f0 * (t - self.t_min)), self.period)
        psi1 = self.pair_one.eigenfunction.values
        return TorusField(1.0 - self.omega * psi1 * math.exp(-self.f1 * t), self.period)

    def summary(self) -> dict:
        return {
            "alpha": self.alpha,
            "omega": self.omega,
            "f0": self.f0,
            "f1": self.f1,
            "n": self.n,
            "t_min": self.t_min,
            "t_max": self.t_max,
            "crossing_time": self.crossing,
            "integral_psi0": self.pair_zero.integral,
        }


@dataclass
class _Segment:
    times: List[float]
    fields: List[np.ndarray]
    step_times: List[float]
    step_means: List[float]
    final: np.ndarray


def _stepper(f: Nonlinearity, n: int, period: float, dt: float) -> ImexStepper:
    guard_reaction_step(dt, f.lipschitz_bound())
    dx = period / n
    system = sparse.identity(n, format="csc") - dt * periodic_second_difference(n, dx)
    nodes = np.arange(n) * dx
    return ImexStepper(f.bind(nodes), system, dt)


def _march(stepper: ImexStepper, u: np.ndarray, t0: float, n_steps: int, stride: int,
           stop_mean: Optional[float] = None) -> _Segment:
    seg = _Segment([t0], [u.copy()], [t0], [float(u.mean())], u)
    recorded = 0
    k = 0
    for k in range(1, n_steps + 1):
        u = stepper.step(u)
        t = t0 + k * stepper.dt
        check_unit_interval(u, t)
        seg.step_times.append(t)
        seg.step_means.append(float(u.mean()))
        if stride and k % stride == 0:
            seg.times.append(t)
            seg.fields.append(u.copy())
            recorded = k
        if stop_mean is not None and seg.step_means[-1] >= stop_mean:
            break
    if recorded != k:
        seg.times.append(t0 + k * stepper.dt)
        seg.fields.append(u.copy())
    seg.final = u
    return seg


def evolve_cell(f: Nonlinearity, init: TorusField, horizon: float, dt: float = DEFAULT_DT,
                stride: int = DEFAULT_STRIDE) -> CellTrajectory:
    """
    Evolução IMEX de φ_t = φ_xx + f(x,φ) no toro até o horizonte exato.

    stride = 0 guarda só o instante inicial e o final.
    """
    values = np.asarray(init.values, dtype=float)
    if values.min() < -UNIT_SLACK or values.max() > 1.0 + UNIT_SLACK:
        raise DegenerateInputError("Dado inicial da célula fora de [0,1]")
    if abs(init.period - f.period) > 1e-12 * f.period:
        raise ConfigError(f"Período do campo ({init.period}) difere do período da reação ({f.period})")
    n_steps, dt_eff = step_schedule(horizon, dt)
    stepper = _stepper(f, init.n, init.period, dt_eff)
    seg = _march(stepper, values.copy(), 0.0, n_steps, stride)
    return CellTrajectory(times=np.array(seg.times), fields=np.array(seg.fields),
                          step_times=np.array(seg.step_times), step_means=np.array(seg.step_means),
                          dt=dt_eff, period=init.period, reaction=f)


def solve_terminal_value(f: Nonlinearity, m: float, T: float, tol: float = BISECTION_TOL,
                         n: int = DEFAULT_CELL_NODES, dt: float = DEFAULT_DT,
                         max_iter: int = BISECTION_MAX_ITER) -> TerminalValueResult:
    """
    B(m,T): nível constante inicial cuja solução tem média m no tempo T.

    Bisseção geométrica em [1e-14, m]; a média terminal é crescente em B.
    """
    if not 0.0 < m < 1.0:
        raise LevelRangeError(f"Média alvo m={m} fora de (0,1)")
    if T <= 0:
        raise ConfigError(f"Horizonte deve ser positivo: T={T}")

    def shoot(level: float) -> CellTrajectory:
        return evolve_cell(f, TorusField.constant(level, n, f.period), T, dt, stride=0)

    upper = shoot(m)
    if upper.final.mean() < m:
        raise BracketError(
            f"Média terminal {upper.final.mean():.6g} < m={m} partindo de B=m; verifique a reação"
        )
    lower = shoot(BISECTION_FLOOR)
    if lower.final.mean() > m:
        raise HorizonError(
            f"Horizonte T={T} longo demais: mesmo B={BISECTION_FLOOR:g} atinge média {lower.final.mean():.6g} > {m}"
        )

    lo, hi = BISECTION_FLOOR, m
    best, best_gap, trajectory = m, abs(upper.final.mean() - m), upper
    iterations = 0
    for iterations in range(1, max_iter + 1):
        mid = math.sqrt(lo * hi)
        run = shoot(mid)
        gap = run.final.mean() - m
        if abs(gap) < best_gap:
            best, best_gap, trajectory = mid, abs(gap), run
        logger.debug("B(%.3g,%.3g): iteração %d, B=%.12e, erro=%.3e", m, T, iterations, mid, gap)
        if abs(gap) <= tol:
            break
        if gap > 0:
            hi = mid
        else:
            lo = mid
    else:
        logger.warning("Bisseção de B(%.3g,%.3g) parou em %d iterações com erro %.3e",
                       m, T, max_iter, best_gap)

    return TerminalValueResult(B=best, m=m, T=T, trajectory=trajectory, iterations=iterations,
                               terminal_mean=float(trajectory.final.mean()))


def _window_fit(amplitude: np.ndarray, series: np.ndarray, label: str) -> float:
    """Intercepto da reta série × amplitude (extrapolação para amplitude zero)"""
    if len(series) < 2:
        raise ExtractionError(f"Janela de extração de {label} com menos de 2 instantâneos")
    if np.ptp(amplitude) == 0.0:
        return float(series.mean())
    return float(np.polyfit(amplitude, series, 1)[1])


def construct_global_solution(f: Nonlinearity, n: float = 1000, t_max: float = 15.0,
                              grid: int = DEFAULT_CELL_NODES, dt: float = DEFAULT_DT,
                              stride: int = 1) -> GlobalSolution:
    """
    Parte da constante 1/n, registra o instante τ em que a média cruza 1/2,
    reindexa t → t - τ e continua até t_max. Extrai α na janela inicial
    (max φ < max(0.01, 2/n)) e ω na final (min φ > 0.99).
    """
    if n < 10:
        raise ConfigError(f"Denominador inicial deve ser >= 10: n={n}")
    if t_max <= 0:
        raise ConfigError(f"t_max deve ser positivo: {t_max}")
    pair_zero = eigenpair_for(f, "zero", grid)
    pair_one = eigenpair_for(f, "one", grid)
    f0, f1 = pair_zero.rate, pair_one.rate

    stepper = _stepper(f, grid, f.period, dt)
    cap = 20.0 + 5.0 * math.log(n) / max(f0, 1e-3)
    first = _march(stepper, np.full(grid, 1.0 / n), 0.0, int(math.ceil(cap / dt)), stride, stop_mean=0.5)
    if first.step_means[-1] < 0.5:
        raise HorizonError(f"A média não cruzou 1/2 até t={cap:.3g} partindo de 1/{n:g}")
    step_times = np.array(first.step_times)
    step_means = np.array(first.step_means)
    crossing = monotone_crossing_time(step_times, step_means, 0.5)

    t_stop = first.step_times[-1]
    remaining = int(math.ceil((crossing + t_max - t_stop) / dt - 1e-9))
    second = _march(stepper, first.final, t_stop, max(remaining, 0), stride)

    times = np.concatenate([first.times, second.times[1:]]) - crossing
    fields = np.vstack([first.fields, second.fields[1:]])
    step_times = np.concatenate([step_times, second.step_times[1:]]) - crossing
    step_means = np.concatenate([step_means, second.step_means[1:]])

    psi0 = pair_zero.eigenfunction.values
    psi1 = pair_one.eigenfunction.values
    dx = f.period / grid

    early_threshold = max(EARLY_AMPLITUDE, 2.0 / n)
    early = fields.max(axis=1) < early_threshold
    alpha = _window_fit(fields[early].max(axis=1),
                        np.exp(-f0 * times[early]) * (fields[early] @ psi0) * dx, "alpha")
    late = fields.min(axis=1) > 1.0 - LATE_AMPLITUDE
    deficit = 1.0 - fields[late]
    omega = _window_fit(deficit.max(axis=1), np.exp(f1 * times[late]) * (deficit @ psi1) * dx, "omega")
    if alpha <= 0 or omega <= 0:
        raise ExtractionError(f"Constantes assintóticas não positivas: alpha={alpha:.4g}, omega={omega:.4g}")

    logger.info("Solução global (n=%g): τ=%.6f, α=%.6f, ω=%.6f, f0=%.6f, f1=%.6f",
                n, crossing, alpha, omega, f0, f1)
    return GlobalSolution(times=times, fields=fields, step_times=step_times, step_means=step_means,
                          alpha=alpha, omega=omega, n=n, crossing=crossing, pair_zero=pair_zero,
                          pair_one=pair_one, period=f.period, dt=dt, reaction=f)


def mean_crossing_time(g: GlobalSolution, m: float, extrapolate: bool = False) -> float:
    """
    T_m com média(φ(T_m)) = m, interpolando a série de médias por passo.

    Com extrapolate, níveis abaixo da janela usam a projeção em ψ0
    (média ⟨φ(t_min),ψ0⟩·média(ψ0)·e^{f0(t - t_min)}) e níveis acima usam
    1 - ω·média(ψ1)·e^{-f1 t}, as mesmas aproximações de field_at.
    """
    if not 0.0 < m < 1.0:
        raise LevelRangeError(f"Nível m={m} fora de (0,1)")
    if extrapolate and m < g.step_means[0]:
        psi0 = g.pair_zero.eigenfunction
        weight = TorusField(g.fields[0], g.period).inner(psi0)
        return g.t_min + math.log(m / (weight * psi0.mean())) / g.f0
    if extrapolate and m > g.step_means[-1]:
        psi1 = g.pair_one.eigenfunction
        return -math.log((1.0 - m) / (g.omega * psi1.mean())) / g.f1
    return monotone_crossing_time(g.step_times, g.step_means, m)


def global_field_at(g: GlobalSolution, t: float, extrapolate: bool = False) -> TorusField:
    return g.field_at(t, extrapolate=extrapolate)


def predicted_bmt(g: GlobalSolution, m: float, T: float) -> float:
    """∫φ(T_m - T)ψ0 / ∫ψ0: valor assintótico de B(m,T)"""
    psi0 = g.pair_zero.eigenfunction
    field_then = g.field_at(mean_crossing_time(g, m) - T, extrapolate=True)
    return field_then.inner(psi0) / psi0.integral()


def average_level_constant(g: GlobalSolution, m: float) -> float:
    """c_m em Ē_m(t) ~ u0^{-1}(c_m e^{-f0 t}): α·e^{f0 T_m}/∫ψ0"""
    return g.alpha * math.exp(g.f0 * mean_crossing_time(g, m)) / g.pair_zero.integral


def _terminal_value_worker(args) -> Tuple[float, float]:
    f, m, T, tol, n, dt = args
    return T, solve_terminal_value(f, m, T, tol=tol, n=n, dt=dt).B


def rate_samples(f: Nonlinearity, m: float, T_list: Sequence[float], n: int = DEFAULT_CELL_NODES,
                 dt: float = DEFAULT_DT, tol: float = BISECTION_TOL, threads: int = 1) -> List[Tuple[float, float]]:
    """Pares (T, B(m,T)) de soluções independentes, opcionalmente em paralelo"""
    tasks = [(f, m, float(T), tol, n, dt) for T in T_list]
    if threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(_terminal_value_worker, tasks))
    return [_terminal_value_worker(task) for task in tasks]


def ratio_limit_check(f: Nonlinearity, m: float, T_list: Sequence[float], n: int = DEFAULT_CELL_NODES,
                      dt: float = DEFAULT_DT, g: Optional[GlobalSolution] = None,
                      n_start: Optional[float] = None, threads: int = 1) -> List[float]:
    """
    B(m,T)·∫ψ0 / ∫φ(T_m - T)ψ0 para cada T; deve tender a 1.

    Sem g, constrói a solução global com 1/n_start pequeno o bastante para
    que T_m - max(T) fique dentro da janela calculada.
    """
    if not T_list:
        raise ConfigError("Lista de horizontes vazia")
    if g is None:
        if n_start is None:
            f0 = eigenpair_for(f, "zero", n).rate
            n_start = max(1000.0, math.exp(f0 * (max(T_list) + 2.0)))
        g = construct_global_solution(f, n=n_start, t_max=8.0, grid=n, dt=dt)
    psi0 = g.pair_zero.eigenfunction
    T_m = mean_crossing_time(g, m)
    samples = dict(rate_samples(f, m, T_list, n=n, dt=dt, threads=threads))
    ratios = []
    for T in T_list:
        denominator = g.field_at(T_m - T).inner(psi0)
        ratio = samples[float(T)] * psi0.integral() / denominator
        logger.info("Razão de B(%.3g,%.3g): %.8f", m, T, ratio)
        ratios.append(ratio)
    return ratios
