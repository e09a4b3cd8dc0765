"""
Autopar principal no toro
=========================

Maior autovalor e autofunção positiva de d²/dx² + q(x) em [0,L) periódico,
por iteração inversa com deslocamento sobre a discretização de diferenças
centrais. O solver denso fica como oráculo.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy import linalg, sparse
from scipy.sparse.linalg import factorized

from kpp.errors import ConfigError, ConvergenceError, DegenerateInputError
from kpp.numerics import periodic_second_difference
from kpp.reaction import Nonlinearity

logger = logging.getLogger(__name__)

DEFAULT_NODES = 512
MIN_NODES = 8
RESIDUAL_TOL = 1e-9
STAGNATION_TOL = 1e-14
MAX_ITERATIONS = 10000

Potential = Union[Callable[[np.ndarray], np.ndarray], np.ndarray, float]


@dataclass(frozen=True, eq=False)
class TorusField:
    """Valores em N nós uniformes de [0,L), fechamento periódico"""
    values: np.ndarray
    period: float

    def __post_init__(self):
        if len(self.values) < MIN_NODES:
            raise ConfigError(f"Campo no toro exige N >= {MIN_NODES} nós (recebido {len(self.values)})")

    @classmethod
    def constant(cls, level: float, n: int, period: float) -> "TorusField":
        return cls(np.full(n, float(level)), period)

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def dx(self) -> float:
        return self.period / self.n

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n) * self.dx

    def integral(self) -> float:
        """Trapézio periódico: dx·Σ v_j"""
        return float(self.values.sum() * self.dx)

    def mean(self) -> float:
        return float(self.values.mean())

    def inner(self, other: "TorusField") -> float:
        return float(np.dot(self.values, other.values) * self.dx)


@dataclass(frozen=True, eq=False)
class EigenPair:
    """
    Autopar principal. Para o par em 0 a taxa é f0 = autovalor; para o par
    em 1 (q = f_u(x,1)) a taxa de saturação é f1 = -autovalor.
    """
    eigenvalue: float
    eigenfunction: TorusField
    n: int
    tag: str = "at-zero"
    residual: float = 0.0
    iterations: int = 0

    @property
    def rate(self) -> float:
        return self.eigenvalue if self.tag == "at-zero" else -self.eigenvalue

    @property
    def integral(self) -> float:
        return self.eigenfunction.integral()

    def as_dict(self) -> dict:
        return {
            "eigenvalue": self.eigenvalue,
            "rate": self.rate,
            "integral_of_psi": self.integral,
            "nodes": self.n,
            "tag": self.tag,
            "residual": self.residual,
            "iterations": self.iterations,
        }


def _sample(q: Potential, nodes: np.ndarray) -> np.ndarray:
    if callable(q):
        values = np.asarray(q(nodes), dtype=float)
    else:
        values = np.asarray(q, dtype=float)
    values = np.broadcast_to(values, nodes.shape).astype(float)
    if not np.all(np.isfinite(values)):
        raise DegenerateInputError("Potencial com valores não finitos")
    return values


def _normalize(vector: np.ndarray, dx: float) -> np.ndarray:
    psi = vector / np.sqrt(np.dot(vector, vector) * dx)
    if psi[np.argmax(np.abs(psi))] < 0:
        psi = -psi
    if np.any(psi <= 0):
        raise ConvergenceError(
            f"Autofunção principal não positiva (mínimo {psi.min():.3e}); refine a malha"
        )
    return psi


def _pack(eigenvalue: float, psi: np.ndarray, operator, period: float, tag: str, iterations: int) -> EigenPair:
    residual = float(np.max(np.abs(operator @ psi - eigenvalue * psi)))
    return EigenPair(eigenvalue=float(eigenvalue), eigenfunction=TorusField(psi, period), n=len(psi),
                     tag=tag, residual=residual, iterations=iterations)


def principal_eigenpair(q: Potential, period: float = 1.0, n: int = DEFAULT_NODES,
                        tag: str = "at-zero") -> EigenPair:
    """
    Iteração inversa com deslocamento σ = max q + 1 sobre σI - (D² + q).

    O sistema periódico (tridiagonal com cantos) é fatorado uma vez.
    """
    if n < MIN_NODES:
        raise ConfigError(f"N deve ser >= {MIN_NODES}: {n}")
    if period <= 0:
        raise ConfigError(f"Período deve ser positivo: {period}")
    dx = period / n
    nodes = np.arange(n) * dx
    qv = _sample(q, nodes)
    operator = (periodic_second_difference(n, dx) + sparse.diags(qv)).tocsc()
    shift = float(qv.max()) + 1.0
    solve = factorized((shift * sparse.identity(n, format="csc") - operator).tocsc())
    # piso de arredondamento de A·v
    floor = 64.0 * np.finfo(float).eps * (4.0 / dx ** 2 + float(np.abs(qv).max()))

    v = np.ones(n) / np.sqrt(n)
    for iteration in range(1, MAX_ITERATIONS + 1):
        w = solve(v)
        w /= np.linalg.norm(w)
        av = operator @ w
        eigenvalue = float(np.dot(w, av))
        residual = float(np.max(np.abs(av - eigenvalue * w)) / np.max(np.abs(w)))
        if residual <= RESIDUAL_TOL * max(1.0, abs(eigenvalue)) + floor:
            break
        if np.max(np.abs(w - v)) < STAGNATION_TOL:
            raise ConvergenceError(
                f"Iteração inversa estagnou com resíduo {residual:.3e} (N={n}, iteração {iteration})"
            )
        v = w
    else:
        raise ConvergenceError(f"Iteração inversa não convergiu em {MAX_ITERATIONS} iterações")

    logger.debug("Autopar %s: λ=%.12g em %d iterações (N=%d)", tag, eigenvalue, iteration, n)
    return _pack(eigenvalue, _normalize(w, dx), operator, period, tag, iteration)


def dense_eigenpair(q: Potential, period: float = 1.0, n: int = DEFAULT_NODES,
                    tag: str = "at-zero") -> EigenPair:
    """Mesmo problema discreto resolvido com eigh denso (oráculo de teste)"""
    if n < MIN_NODES:
        raise ConfigError(f"N deve ser >= {MIN_NODES}: {n}")
    dx = period / n
    nodes = np.arange(n) * dx
    qv = _sample(q, nodes)
    operator = (periodic_second_difference(n, dx) + sparse.diags(qv)).tocsc()
    values, vectors = linalg.eigh(operator.toarray(), subset_by_index=[n - 1, n - 1])
    return _pack(float(values[0]), _normalize(vectors[:, 0], dx), operator, period, tag, 0)


def rayleigh_quotient(psi: TorusField, q: Potential) -> float:
    """(∫ qψ² - |Dψ|²) / ∫ψ² com diferenças progressivas periódicas"""
    values = np.asarray(psi.values, dtype=float)
    norm = float(np.dot(values, values))
    if norm == 0.0:
        raise DegenerateInputError("Quociente de Rayleigh de um campo identicamente nulo")
    qv = _sample(q, psi.nodes)
    gradient = (np.roll(values, -1) - values) / psi.dx
    return float((np.dot(qv, values ** 2) - np.dot(gradient, gradient)) / norm)


def eigenpair_for(f: Nonlinearity, at: str = "zero", n: int = DEFAULT_NODES, dense: bool = False) -> EigenPair:
    """(ψ0, f0) com q = f_u(x,0) ou (ψ1, f1) com q = f_u(x,1) e f1 = -λ_max"""
    if at not in ("zero", "one"):
        raise ConfigError(f"Linearização desconhecida: {at} (use 'zero' ou 'one')")
    potential = f.du_at_zero if at == "zero" else f.du_at_one
    solver = dense_eigenpair if dense else principal_eigenpair
    pair = solver(potential, f.period, n, tag=f"at-{at}")
    if pair.rate <= 0:
        logger.warning("Taxa principal %s não positiva (%.6g): condições KPP violadas?", pair.tag, pair.rate)
    return pair
