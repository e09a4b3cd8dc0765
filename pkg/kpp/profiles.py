"""
Dados iniciais de decaimento lento
==================================

Perfis u0 tipo frente (patamar à esquerda, cauda decrescente à direita), a
inversa da cauda u0^{-1}, o validador de admissibilidade e a razão de
oscilação sob deslocamentos lineares no tempo.
"""

import logging
import math
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, Optional, Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator
from scipy.optimize import bisect

from kpp.errors import ConfigError, ConvergenceError, LevelRangeError
from kpp.reports import CheckResult, ValidationReport

logger = logging.getLogger(__name__)

DEFAULT_EPSILONS = (1.0, 0.1, 0.01)
DEFAULT_X_MAX = 1e6
ADMISSIBILITY_SAMPLES = 200
MAX_DOUBLINGS = 2000
JOIN_START = 1.0
JOIN_END = 2.0


def _as_output(values: np.ndarray, shape) -> Any:
    values = values.reshape(shape)
    return float(values) if values.shape == () else values


class InitialData(ABC):
    """Dado inicial u0 com cauda monótona a partir de tail_start"""

    family: str = "abstract"
    tail_start: float = JOIN_START
    left_level: float = 1.0

    @abstractmethod
    def eval(self, x):
        """u0(x)"""

    def log_eval(self, x):
        """log u0(x); as famílias analíticas evitam underflow"""
        with np.errstate(divide="ignore"):
            return np.log(self.eval(x))

    def parameters(self) -> Dict[str, Any]:
        return {}

    def to_config(self) -> Dict[str, Any]:
        return {"family": self.family, **self.parameters()}

    def __repr__(self) -> str:
        params = ", ".join(f"{k}={v}" for k, v in self.parameters().items())
        return f"{type(self).__name__}({params})"


class JoinedTailProfile(InitialData):
    """
    Patamar p para x <= 1, junção de Hermite cúbica C¹ em [1,2] e cauda
    exata para x >= 2.

    A junção é monótona quando 3(p - cauda(2)) >= -cauda'(2).
    """

    def __init__(self, plateau: float):
        if not 0.0 < plateau <= 1.0:
            raise ConfigError(f"Patamar deve estar em (0,1]: {plateau}")
        self.plateau = float(plateau)
        end_value = float(self._tail(np.array(JOIN_END)))
        end_slope = float(self._tail_slope(JOIN_END))
        drop = self.plateau - end_value
        if drop <= 0 or 3.0 * drop < -end_slope:
            raise ConfigError(
                f"Patamar {plateau} incompatível com a cauda da família {self.family}: "
                f"a junção em [1,2] não seria monótona (exige p >= {end_value - end_slope / 3.0:.4g})"
            )
        self._join = CubicHermiteSpline([JOIN_START, JOIN_END], [self.plateau, end_value],
                                        [0.0, end_slope])
        self.tail_start = JOIN_START
        self.left_level = self.plateau

    @abstractmethod
    def _tail(self, x: np.ndarray) -> np.ndarray:
        """Cauda exata (x >= 2)"""

    @abstractmethod
    def _log_tail(self, x: np.ndarray) -> np.ndarray:
        """log da cauda (x >= 2)"""

    @abstractmethod
    def _tail_slope(self, x: float) -> float:
        """Derivada da cauda em x"""

    def _piecewise(self, x, plateau_value, join, tail):
        x = np.asarray(x, dtype=float)
        flat = np.atleast_1d(x).ravel()
        out = np.empty_like(flat)
        left = flat <= JOIN_START
        right = flat >= JOIN_END
        mid = ~(left | right)
        out[left] = plateau_value
        out[mid] = join(flat[mid])
        out[right] = tail(flat[right])
        return _as_output(out, x.shape)

    def eval(self, x):
        return self._piecewise(x, self.plateau, self._join, self._tail)

    def log_eval(self, x):
        return self._piecewise(x, math.log(self.plateau), lambda s: np.log(self._join(s)), self._log_tail)


class AlgebraicProfile(JoinedTailProfile):
    """u0(x) = x^{-α} para x >= 2"""
    family = "algebraic"

    def __init__(self, alpha: float, plateau: float = 1.0):
        if alpha <= 0:
            raise ConfigError(f"Expoente algébrico deve ser positivo: alpha={alpha}")
        self.alpha = float(alpha)
        super().__init__(plateau)

    def _tail(self, x):
        return np.power(x, -self.alpha)

    def _log_tail(self, x):
        return -self.alpha * np.log(x)

    def _tail_slope(self, x):
        return -self.alpha * x ** (-self.alpha - 1.0)

    def parameters(self):
        return {"alpha": self.alpha, "plateau": self.plateau}


class StretchedProfile(JoinedTailProfile):
    """u0(x) = exp(-x^β); admissível para β < 1/2"""
    family = "stretched"

    def __init__(self, beta: float, plateau: float = 1.0):
        if not 0.0 < beta < 1.0:
            raise ConfigError(f"Expoente da exponencial esticada deve estar em (0,1): beta={beta}")
        self.beta = float(beta)
        super().__init__(plateau)

    def _tail(self, x):
        return np.exp(-np.power(x, self.beta))

    def _log_tail(self, x):
        return -np.power(x, self.beta)

    def _tail_slope(self, x):
        return -self.beta * x ** (self.beta - 1.0) * math.exp(-x ** self.beta)

    def parameters(self):
        return {"beta": self.beta, "plateau": self.plateau}


class LogAlgebraicProfile(JoinedTailProfile):
    """u0(x) = x^{-α} log(x)^γ para x >= 2 (exige γ < α log 2)"""
    family = "log_algebraic"

    def __init__(self, alpha: float, gamma: float, plateau: float = 1.0):
        if alpha <= 0:
            raise ConfigError(f"Expoente algébrico deve ser positivo: alpha={alpha}")
        if gamma >= alpha * math.log(JOIN_END):
            raise ConfigError(f"gamma={gamma} torna a cauda crescente em x=2 (exige gamma < alpha·log 2)")
        self.alpha = float(alpha)
        self.gamma = float(gamma)
        super().__init__(plateau)

    def _tail(self, x):
        return np.exp(self._log_tail(x))

    def _log_tail(self, x):
        return -self.alpha * np.log(x) + self.gamma * np.log(np.log(x))

    def _tail_slope(self, x):
        lx = math.log(x)
        return x ** (-self.alpha - 1.0) * lx ** (self.gamma - 1.0) * (self.gamma - self.alpha * lx)

    def parameters(self):
        return {"alpha": self.alpha, "gamma": self.gamma, "plateau": self.plateau}


class ExponentialProfile(JoinedTailProfile):
    """u0(x) = exp(-r x): cauda de referência, não admissível"""
    family = "exponential"

    def __init__(self, rate: float, plateau: float = 1.0):
        if rate <= 0:
            raise ConfigError(f"Taxa exponencial deve ser positiva: rate={rate}")
        self.rate = float(rate)
        super().__init__(plateau)

    def _tail(self, x):
        return np.exp(-self.rate * x)

    def _log_tail(self, x):
        return -self.rate * np.asarray(x, dtype=float)

    def _tail_slope(self, x):
        return -self.rate * math.exp(-self.rate * x)

    def parameters(self):
        return {"rate": self.rate, "plateau": self.plateau}


class ConstantProfile(InitialData):
    """u0 ≡ c (caso degenerado, sem cauda)"""
    family = "constant"

    def __init__(self, level: float):
        if not 0.0 <= level <= 1.0:
            raise ConfigError(f"Nível constante deve estar em [0,1]: {level}")
        self.level = float(level)
        self.tail_start = math.inf
        self.left_level = self.level

    def eval(self, x):
        x = np.asarray(x, dtype=float)
        return _as_output(np.full(x.shape, self.level), x.shape)

    def parameters(self):
        return {"level": self.level}


class ScaledProfile(InitialData):
    """min(1, c·u0): dado comparável para testes de ordenação"""
    family = "scaled"

    def __init__(self, base: InitialData, factor: float):
        if factor <= 0:
            raise ConfigError(f"Fator de escala deve ser positivo: {factor}")
        self.base = base
        self.factor = float(factor)
        self.tail_start = base.tail_start
        self.left_level = min(1.0, factor * base.left_level)

    def eval(self, x):
        return np.minimum(1.0, self.factor * np.asarray(self.base.eval(x)))

    def log_eval(self, x):
        return np.minimum(0.0, math.log(self.factor) + np.asarray(self.base.log_eval(x)))

    def parameters(self):
        return {"factor": self.factor, "base": self.base.to_config()}


class TabulatedProfile(InitialData):
    """
    Perfil tabelado (x_i, u_i) com interpolante PCHIP monótono.

    À esquerda da tabela vale u_0; à direita a cauda é estendida como lei de
    potência ajustada aos dois últimos pontos.
    """
    family = "table"

    def __init__(self, x: Sequence[float], values: Sequence[float], source: Optional[str] = None):
        x = np.asarray(x, dtype=float)
        values = np.asarray(values, dtype=float)
        if len(x) < 4 or x.shape != values.shape:
            raise ConfigError("Tabela de dado inicial precisa de ao menos 4 pares (x, u)")
        if np.any(np.diff(x) <= 0):
            raise ConfigError("Abscissas da tabela devem ser estritamente crescentes")
        if np.any(values <= 0) or np.any(values > 1):
            raise ConfigError("Valores da tabela devem estar em (0,1]")
        if x[-1] <= 0 or values[-1] >= values[-2]:
            raise ConfigError("A tabela deve terminar numa cauda decrescente com x > 0")
        self.x = x
        self.values = values
        self.source = source
        self._interp = PchipInterpolator(x, values, extrapolate=False)
        self._slope = (math.log(values[-1]) - math.log(values[-2])) / (math.log(x[-1]) - math.log(x[-2]))
        increasing = np.flatnonzero(np.diff(values) >= 0)
        start = 0 if len(increasing) == 0 else increasing[-1] + 1
        self.tail_start = float(x[start])
        self.left_level = float(values[0])

    def log_eval(self, x):
        x = np.asarray(x, dtype=float)
        flat = np.atleast_1d(x).ravel()
        out = np.empty_like(flat)
        left = flat <= self.x[0]
        right = flat >= self.x[-1]
        mid = ~(left | right)
        out[left] = math.log(self.values[0])
        out[mid] = np.log(self._interp(flat[mid]))
        out[right] = math.log(self.values[-1]) + self._slope * (np.log(flat[right]) - math.log(self.x[-1]))
        return _as_output(out, x.shape)

    def eval(self, x):
        return np.exp(self.log_eval(x))

    def parameters(self):
        return {"table_path": self.source, "nodes": int(len(self.x))}


def make_algebraic(alpha: float, plateau: float = 1.0) -> AlgebraicProfile:
    """Perfil com cauda exata x^{-α} para x >= 2 e patamar p para x <= 1"""
    return AlgebraicProfile(alpha, plateau)


def make_stretched(beta: float, plateau: float = 1.0) -> StretchedProfile:
    return StretchedProfile(beta, plateau)


def make_log_algebraic(alpha: float, gamma: float, plateau: float = 1.0) -> LogAlgebraicProfile:
    return LogAlgebraicProfile(alpha, gamma, plateau)


def make_exponential(rate: float, plateau: float = 1.0) -> ExponentialProfile:
    return ExponentialProfile(rate, plateau)


def make_constant(level: float) -> ConstantProfile:
    return ConstantProfile(level)


def load_profile_table(path: str) -> TabulatedProfile:
    """CSV com duas colunas x,u (linhas iniciadas por # são ignoradas)"""
    file = Path(path)
    if not file.exists():
        raise ConfigError(f"Tabela de dado inicial não encontrada: {path}")
    raw = np.loadtxt(file, delimiter=",", comments="#", ndmin=2)
    return TabulatedProfile(raw[:, 0], raw[:, 1], source=str(path))


def profile_from_config(fragment) -> InitialData:
    """Constrói u0 a partir do fragmento `initial_data` da configuração"""
    data = fragment if isinstance(fragment, dict) else fragment.model_dump()
    family = data.get("family", "algebraic")
    plateau = float(data.get("plateau") or 1.0)
    try:
        if family == "algebraic":
            return make_algebraic(float(data["alpha"]), plateau)
        if family == "stretched":
            return make_stretched(float(data["beta"]), plateau)
        if family == "log_algebraic":
            return make_log_algebraic(float(data["alpha"]), float(data.get("gamma") or 0.0), plateau)
        if family == "exponential":
            return make_exponential(float(data["rate"]), plateau)
        if family == "constant":
            return make_constant(float(data["level"]))
        if family == "table":
            return load_profile_table(data["table_path"])
    except (KeyError, TypeError) as e:
        raise ConfigError(f"Parâmetro ausente para a família '{family}': {e}")
    raise ConfigError(f"Família de dado inicial desconhecida: {family}")


def inverse_tail(u0: InitialData, level: float) -> float:
    """
    Posição x >= tail_start com u0(x) = level.

    Fase de expansão com duplicação do intervalo e depois bisseção em
    log u0, com tolerância relativa de máquina.
    """
    if not math.isfinite(u0.tail_start):
        raise LevelRangeError(f"Perfil {u0.family} não possui cauda monótona")
    top = float(u0.eval(u0.tail_start))
    if not 0.0 < level < top:
        raise LevelRangeError(
            f"Nível {level:.6g} fora do intervalo invertível (0, {top:.6g}) da cauda de {u0.family}"
        )
    target = math.log(level)

    def gap(x: float) -> float:
        return float(u0.log_eval(x)) - target

    lo = u0.tail_start
    width = 1.0
    hi = lo + width
    for _ in range(MAX_DOUBLINGS):
        if gap(hi) <= 0.0:
            break
        lo = hi
        width *= 2.0
        hi = lo + width
        if not math.isfinite(hi):
            raise ConvergenceError(f"Expansão do intervalo estourou procurando o nível {level:.3e}")
    else:
        raise ConvergenceError(
            f"Nível {level:.3e} não alcançado após {MAX_DOUBLINGS} duplicações do intervalo"
        )
    if gap(hi) == 0.0:
        return hi
    return float(bisect(gap, lo, hi, xtol=1e-300, rtol=4.0 * np.finfo(float).eps, maxiter=4000))


def _geometric_samples(u0: InitialData, x_max: float, samples: int) -> np.ndarray:
    start = max(u0.tail_start, JOIN_START)
    return np.geomspace(start, x_max, samples)


def _log_derivative(u0: InitialData, x: np.ndarray) -> np.ndarray:
    h = 1e-4 * x
    return (np.asarray(u0.log_eval(x + h)) - np.asarray(u0.log_eval(x - h))) / (2.0 * h)


def validate_admissibility(u0: InitialData, epsilons: Iterable[float] = DEFAULT_EPSILONS,
                           x_max: float = DEFAULT_X_MAX,
                           samples: int = ADMISSIBILITY_SAMPLES) -> ValidationReport:
    """
    Condições de decaimento lento sobre pontos geométricos até x_max:

    - decay_to_zero: cauda decrescente e u0(x_max)/u0(início) < 0.01
    - slower_than_exponential: log u0 + εx crescente no último décimo da amostra
    - monotone_tail: log u0 estritamente decrescente
    - regularity_ratio: |(log u0)'·log u0| decrescente e caindo abaixo de 1/10
      do valor inicial na janela x >= max(tail_start, 10)
    """
    if not math.isfinite(u0.tail_start) or x_max <= u0.tail_start:
        raise ConfigError(f"x_max={x_max} deve exceder tail_start={u0.tail_start}")

    xs = _geometric_samples(u0, x_max, samples)
    logs = np.asarray(u0.log_eval(xs), dtype=float)
    checks = []

    decreasing = bool(np.all(np.diff(logs) < 0))
    drop = float(logs[-1] - logs[0])
    if not decreasing:
        status = "fail"
    elif drop < math.log(0.01):
        status = "pass"
    else:
        status = "inconclusive"
    checks.append(CheckResult(name="decay_to_zero", status=status,
                              worst_point={"x": float(xs[-1])}, worst_value=math.exp(drop),
                              detail="u0(x_max)/u0(x_inicial)"))

    tail = slice(int(0.9 * samples), samples)
    worst_eps, worst_gap = None, math.inf
    for eps in epsilons:
        growth = np.diff(logs[tail] + eps * xs[tail])
        if growth.min() < worst_gap:
            worst_eps, worst_gap = eps, float(growth.min())
    checks.append(CheckResult(name="slower_than_exponential",
                              status="pass" if worst_gap > 0 else "fail",
                              worst_point={"epsilon": float(worst_eps)} if worst_eps is not None else None,
                              worst_value=worst_gap,
                              detail=f"u0(x)·exp(εx) crescente para ε em {list(epsilons)}"))

    steps = np.diff(logs)
    k = int(np.argmax(steps))
    checks.append(CheckResult(name="monotone_tail", status="pass" if steps[k] < 0 else "fail",
                              worst_point={"x": float(xs[k])}, worst_value=float(steps[k]),
                              detail="log u0 estritamente decrescente"))

    window = xs[xs >= max(u0.tail_start, 10.0)]
    if len(window) < 3:
        checks.append(CheckResult(name="regularity_ratio", status="inconclusive",
                                  detail="janela de amostragem curta demais"))
    else:
        ratio = np.abs(_log_derivative(u0, window) * np.asarray(u0.log_eval(window)))
        trend = np.diff(ratio)
        if np.all(trend < 0) and ratio[-1] < ratio[0] / 10.0:
            status = "pass"
        elif np.all(trend > 0):
            status = "fail"
        else:
            status = "inconclusive"
        checks.append(CheckResult(name="regularity_ratio", status=status,
                                  worst_point={"x": float(window[-1])}, worst_value=float(ratio[-1]),
                                  detail=f"|u0'·log u0/u0| de {ratio[0]:.3g} a {ratio[-1]:.3g}"))

    return ValidationReport(subject=f"initial_data:{u0.family}", checks=checks)


def oscillation_ratio(u0: InitialData, level_of_t: Callable[[float], float], c3: float, t: float,
                      sign: int = -1) -> float:
    """u0(u0^{-1}(λ_t) ± c3·t) / λ_t; tende a 1 quando t → ∞ para dados admissíveis"""
    level = float(level_of_t(t))
    x = inverse_tail(u0, level) + (1 if sign > 0 else -1) * c3 * t
    if x < u0.tail_start:
        raise LevelRangeError(f"Ponto deslocado x={x:.6g} abaixo de tail_start={u0.tail_start}")
    return math.exp(float(u0.log_eval(x)) - math.log(level))
