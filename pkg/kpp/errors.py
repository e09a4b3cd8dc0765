"""
Erros do laboratório
====================

Hierarquia única de exceções. Cada classe carrega o código de saída que o
orquestrador (main.py) devolve ao shell.
"""


class KppError(Exception):
    """Erro base de todos os solvers e validadores"""

    exit_code = 1


class ConfigError(KppError):
    """Configuração inválida ou incompatível com a operação pedida"""

    exit_code = 2


class LevelRangeError(KppError):
    """Nível, tempo ou posição fora do intervalo em que a operação é definida"""


class ConvergenceError(KppError):
    """Iteração numérica sem convergência (bisseção, iteração de potência, EDO)"""


class StabilityError(KppError):
    """Passo de tempo grande demais para a parte explícita da reação"""


class BracketError(KppError):
    """Intervalo inicial da bisseção não contém a raiz"""


class HorizonError(KppError):
    """Horizonte de tempo incompatível com o alvo (longo ou curto demais)"""


class ExtractionError(KppError):
    """Janela de extração das constantes assintóticas vazia"""


class BudgetError(KppError):
    """Domínio planejado excede o orçamento de nós"""


class DegenerateInputError(KppError):
    """Entrada degenerada (por exemplo, campo identicamente nulo)"""


class DataError(KppError):
    """
    Série de dados com valores inválidos (NaN, infinito, não positivo) ou
    artefato salvo ilegível. Código de saída 1, como os erros numéricos.
    """


class VerificationRefused(KppError):
    """Execução contaminada pela fronteira: verificação recusada"""

    exit_code = 3
