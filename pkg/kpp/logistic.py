"""
Perfil logístico homogêneo
==========================

Solução global φ_t = f(φ) com φ(0) = 1/2, tempos de nível T_m e a previsão
homogênea u0^{-1}(φ(T_m - T)) para a posição dos conjuntos de nível.
"""

import logging
import math
from typing import Tuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from kpp.errors import ConfigError, ConvergenceError, LevelRangeError
from kpp.profiles import InitialData, inverse_tail
from kpp.reaction import Nonlinearity

logger = logging.getLogger(__name__)

DEFAULT_T_RANGE = (-60.0, 30.0)
DEFAULT_TOL = 1e-10
ANCHOR = 0.5


class LogisticProfile:
    """
    φ(t) para t em t_range por saída densa do integrador adaptativo.

    Fora do intervalo computado usa as linearizações em 0 e em 1:
    φ ≈ φ(t_lo)·exp(f'(0)(t - t_lo)) e 1 - φ ≈ (1 - φ(t_hi))·exp(f'(1)(t - t_hi)).
    """

    def __init__(self, reaction: Nonlinearity, forward, backward, t_range: Tuple[float, float], tol: float):
        self.reaction = reaction
        self.t_lo, self.t_hi = t_range
        self.tol = tol
        self._forward = forward
        self._backward = backward
        self.slope_at_zero = float(reaction.du_at_zero(0.0))
        self.slope_at_one = float(reaction.du_at_one(0.0))
        self.low_value = float(backward(-self.t_lo)[0])
        self.high_value = float(forward(self.t_hi)[0])

    def _inside(self, t: np.ndarray) -> np.ndarray:
        out = np.empty_like(t)
        ahead = t >= 0.0
        if ahead.any():
            out[ahead] = self._forward(t[ahead])[0]
        if (~ahead).any():
            out[~ahead] = self._backward(-t[~ahead])[0]
        return out

    def eval(self, t):
        t = np.asarray(t, dtype=float)
        flat = np.atleast_1d(t).ravel()
        out = np.empty_like(flat)
        below = flat < self.t_lo
        above = flat > self.t_hi
        mid = ~(below | above)
        out[below] = self.low_value * np.exp(self.slope_at_zero * (flat[below] - self.t_lo))
        out[above] = 1.0 - (1.0 - self.high_value) * np.exp(self.slope_at_one * (flat[above] - self.t_hi))
        out[mid] = self._inside(flat[mid])
        out = out.reshape(t.shape)
        return float(out) if out.shape == () else out

    def __call__(self, t):
        return self.eval(t)


def solve_profile(f: Nonlinearity, t_range: Tuple[float, float] = DEFAULT_T_RANGE,
                  tol: float = DEFAULT_TOL) -> LogisticProfile:
    """
    Integra φ' = f(φ) a partir de φ(0) = 1/2 nos dois sentidos.

    O ramo t < 0 resolve ψ' = -f(ψ) com ψ(s) = φ(-s).
    """
    if f.kind != "homogeneous":
        raise ConfigError(f"O perfil logístico exige reação homogênea (recebido: {f.family})")
    t_lo, t_hi = t_range
    if not t_lo < 0.0 < t_hi:
        raise ConfigError(f"Intervalo de tempo deve conter 0: {t_range}")

    def rate(_t, y):
        return np.asarray(f.eval(0.0, y), dtype=float)

    def reverse(_t, y):
        return -np.asarray(f.eval(0.0, y), dtype=float)

    options = dict(method="DOP853", dense_output=True, rtol=tol, atol=1e-300)
    forward = solve_ivp(rate, (0.0, t_hi), [ANCHOR], **options)
    backward = solve_ivp(reverse, (0.0, -t_lo), [ANCHOR], **options)
    for label, sol in (("direto", forward), ("reverso", backward)):
        if not sol.success:
            raise ConvergenceError(f"Integração logística ({label}) falhou: {sol.message}")
    logger.debug("Perfil logístico: %d passos diretos, %d reversos", len(forward.t), len(backward.t))
    return LogisticProfile(f, forward.sol, backward.sol, (t_lo, t_hi), tol)


def level_time(profile: LogisticProfile, m: float) -> float:
    """Tempo T_m com φ(T_m) = m"""
    if not 0.0 < m < 1.0:
        raise LevelRangeError(f"Nível m={m} fora de (0,1)")
    if m <= profile.low_value:
        return profile.t_lo + math.log(m / profile.low_value) / profile.slope_at_zero
    if m >= profile.high_value:
        if profile.high_value >= 1.0:
            raise LevelRangeError(f"Nível m={m} indistinguível da saturação")
        return profile.t_hi + math.log((1.0 - m) / (1.0 - profile.high_value)) / profile.slope_at_one
    return float(brentq(lambda t: profile.eval(t) - m, profile.t_lo, profile.t_hi, xtol=1e-14, rtol=1e-14))


def predict_level_position(profile: LogisticProfile, u0: InitialData, m: float, T: float) -> float:
    """u0^{-1}(φ(T_m - T)): posição prevista de E_m(T)"""
    return inverse_tail(u0, profile.eval(level_time(profile, m) - T))


def linear_constant(profile: LogisticProfile, m: float) -> float:
    """c_m = lim φ(T_m - T)·exp(f'(0)T), lido da extrapolação linearizada"""
    return profile.low_value * math.exp(profile.slope_at_zero * (level_time(profile, m) - profile.t_lo))


def spreading_law(profile: LogisticProfile, u0: InitialData, m: float, T: float) -> float:
    """Versão de ordem dominante: u0^{-1}(c_m·exp(-f'(0)T))"""
    return inverse_tail(u0, linear_constant(profile, m) * math.exp(-profile.slope_at_zero * T))
