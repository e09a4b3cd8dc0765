"""
Núcleo numérico compartilhado
=============================

Operadores de diferenças finitas, passo IMEX e interpolação de cruzamentos,
usados pelo problema na célula periódica e pelo problema na reta.
"""

import math
from typing import Callable, Optional, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import factorized

from kpp.errors import LevelRangeError, StabilityError

Rate = Callable[[np.ndarray], np.ndarray]

UNIT_SLACK = 1e-8
# dt * max|f_u| acima disso quebra a monotonia do RK4 explícito
MAX_REACTION_CFL = 1.0


def periodic_second_difference(n: int, dx: float) -> sparse.csc_matrix:
    """Matriz D² periódica (tridiagonal com cantos) em n nós uniformes"""
    main = np.full(n, -2.0)
    off = np.ones(n - 1)
    d2 = sparse.diags([off, main, off], [-1, 0, 1], shape=(n, n), format="lil")
    d2[0, n - 1] = 1.0
    d2[n - 1, 0] = 1.0
    return d2.tocsc() * (1.0 / dx ** 2)


def line_diffusion_system(n_nodes: int, dx: float, dt: float) -> sparse.csc_matrix:
    """
    Sistema de Euler implícito I - dt D² na reta truncada.

    Linha 0 é a condição de Dirichlet (identidade); a última linha usa o nó
    fantasma de Neumann homogêneo.
    """
    r = dt / dx ** 2
    main = np.full(n_nodes, 1.0 + 2.0 * r)
    lower = np.full(n_nodes - 1, -r)
    upper = np.full(n_nodes - 1, -r)
    main[0] = 1.0
    upper[0] = 0.0
    lower[-1] = -2.0 * r
    return sparse.diags([lower, main, upper], [-1, 0, 1], format="csc")


def rk4_step(rate: Rate, u: np.ndarray, h: float) -> np.ndarray:
    """Passo clássico de Runge-Kutta 4 para u' = rate(u), nó a nó"""
    k1 = rate(u)
    k2 = rate(u + 0.5 * h * k1)
    k3 = rate(u + 0.5 * h * k2)
    k4 = rate(u + h * k3)
    return u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step_schedule(horizon: float, dt: float) -> Tuple[int, float]:
    """Número de passos e passo efetivo que termina exatamente no horizonte"""
    if dt <= 0:
        raise StabilityError(f"Passo de tempo deve ser positivo: dt={dt}")
    if horizon <= 0:
        return 0, dt
    n_steps = max(1, int(math.ceil(horizon / dt - 1e-9)))
    return n_steps, horizon / n_steps


def guard_reaction_step(dt: float, lipschitz: float) -> None:
    """Rejeita passos em que a reação explícita perde monotonia"""
    if dt * lipschitz > MAX_REACTION_CFL:
        raise StabilityError(
            f"dt={dt:g} grande demais para a reação explícita "
            f"(dt * max|f_u| = {dt * lipschitz:.3g} > {MAX_REACTION_CFL})"
        )


def check_unit_interval(u: np.ndarray, t: float) -> None:
    lo = float(u.min())
    hi = float(u.max())
    if lo < -UNIT_SLACK or hi > 1.0 + UNIT_SLACK:
        raise StabilityError(
            f"Solução saiu de [0,1] em t={t:.6g} (min={lo:.3e}, max={hi:.6f}); reduza dt"
        )


class ImexStepper:
    """
    Passo IMEX com divisão de Strang.

    Meio passo de reação explícita (RK4 nó a nó), um passo de difusão implícita
    (Euler implícito, sistema fatorado uma única vez), meio passo de reação.
    Para dados espacialmente constantes o passo reproduz a EDO logística com
    erro de RK4.
    """

    def __init__(self, rate: Rate, system: sparse.spmatrix, dt: float):
        self.rate = rate
        self.dt = dt
        self._solve = factorized(sparse.csc_matrix(system))

    def step(self, u: np.ndarray, boundary: Optional[Tuple[float, float]] = None) -> np.ndarray:
        """boundary: valores de Dirichlet no nó 0 após o primeiro e o segundo meio passo"""
        half = 0.5 * self.dt
        u = rk4_step(self.rate, u, half)
        if boundary is not None:
            u[0] = boundary[0]
        u = self._solve(u)
        u = rk4_step(self.rate, u, half)
        if boundary is not None:
            u[0] = boundary[1]
        return u


def crossings(x: np.ndarray, values: np.ndarray, level: float) -> np.ndarray:
    """
    Todos os pontos em que values - level troca de sinal, por interpolação
    linear entre nós adjacentes. Nós exatamente no nível contam uma vez.
    """
    d = np.asarray(values, dtype=float) - level
    exact = np.flatnonzero(d == 0.0)
    j = np.flatnonzero(d[:-1] * d[1:] < 0.0)
    theta = d[j] / (d[j] - d[j + 1])
    points = x[j] + theta * (x[j + 1] - x[j])
    return np.unique(np.concatenate([x[exact], points]))


def monotone_crossing_time(times: np.ndarray, series: np.ndarray, level: float) -> float:
    """Tempo em que uma série crescente atinge level (interpolação linear)"""
    if not series[0] <= level <= series[-1]:
        raise LevelRangeError(
            f"Nível {level:.6g} fora do intervalo atingido [{series[0]:.6g}, {series[-1]:.6g}]"
        )
    k = int(np.searchsorted(series, level, side="left"))
    if k == 0:
        return float(times[0])
    s0, s1 = series[k - 1], series[k]
    theta = 0.0 if s1 == s0 else (level - s0) / (s1 - s0)
    return float(times[k - 1] + theta * (times[k] - times[k - 1]))


def interpolate_in_time(times: np.ndarray, fields: np.ndarray, t: float) -> np.ndarray:
    """Campo em t por interpolação linear entre instantâneos vizinhos"""
    if t < times[0] or t > times[-1]:
        raise LevelRangeError(f"t={t:.6g} fora de [{times[0]:.6g}, {times[-1]:.6g}]")
    k = int(np.searchsorted(times, t, side="left"))
    if k == 0:
        return fields[0].copy()
    t0, t1 = times[k - 1], times[k]
    theta = (t - t0) / (t1 - t0)
    return (1.0 - theta) * fields[k - 1] + theta * fields[k]
