"""
Modelos de relatório
====================

Relatórios de validação (condições sobre f e u0) e de verificação (previsão
dos teoremas contra a simulação). Serializados em JSON via pydantic.
"""

from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, Field

Status = Literal["pass", "fail", "inconclusive", "at-boundary", "pre-asymptotic", "skipped", "info"]

# Status que não entram no veredito
NON_CLAIMING = ("inconclusive", "at-boundary", "pre-asymptotic", "skipped", "info")


class CheckResult(BaseModel):
    """Resultado de uma condição verificada numa grade de amostras"""
    name: str
    status: Status
    worst_point: Optional[Dict[str, float]] = None
    worst_value: Optional[float] = None
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.status == "pass"


class ValidationReport(BaseModel):
    """Relatório de admissibilidade de uma não linearidade ou dado inicial"""
    subject: str
    checks: List[CheckResult] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.status == "pass" for c in self.checks)

    def check(self, name: str) -> CheckResult:
        for entry in self.checks:
            if entry.name == name:
                return entry
        raise KeyError(name)


Quantity = Union[float, List[float], None]


class VerificationEntry(BaseModel):
    """Uma comparação previsão × medida (por nível m, por horizonte, ...)"""
    label: str
    predicted: Quantity = None
    measured: Quantity = None
    tolerance: Optional[float] = None
    status: Status
    detail: str = ""


class VerificationReport(BaseModel):
    """Relatório de verificação de um resultado assintótico"""
    theorem: str
    parameters: Dict[str, Any] = Field(default_factory=dict)
    entries: List[VerificationEntry] = Field(default_factory=list)
    provenance: Dict[str, str] = Field(default_factory=dict)
    notes: List[str] = Field(default_factory=list)

    @property
    def claimed(self) -> List[VerificationEntry]:
        return [e for e in self.entries if e.status not in NON_CLAIMING]

    @property
    def passed(self) -> bool:
        claimed = self.claimed
        return bool(claimed) and all(e.status == "pass" for e in claimed)

    def to_payload(self) -> Dict[str, Any]:
        payload = self.model_dump(mode="json")
        payload["pass"] = self.passed
        return payload
