from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field

from .constructions import SemilinearSearchReport, StrongIsoCertificate
from .families import FamilyDescriptor, GBoundsReport
from .field_tower import FieldCtx, FieldDescriptor
from .isotopy import IsotopismTriple, KnuthOrbitEntry, NucleiReport, SemilinearityReport, Status
from .presemifield import Presemifield, is_commutative, is_presemifield, linearity_degree

__all__ = (
    "REPORT_VERSION",
    "CheckResult",
    "PresemifieldSummary",
    "TripleRecord",
    "RunReport",
    "report_schema",
)

REPORT_VERSION = 1

CheckStatus = Literal["passed", "failed", "skipped"]


class CheckResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    status: CheckStatus
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.status != "failed"


class PresemifieldSummary(BaseModel):
    model_config = ConfigDict(frozen=True)

    label: str
    is_presemifield: bool
    commutative: bool
    linearity_degree: int
    nuclei: NucleiReport | None = None

    @classmethod
    def of(
        cls, S: Presemifield, nuclei: NucleiReport | None = None, exhaustive: bool = False
    ) -> PresemifieldSummary:
        return cls(
            label=S.label,
            is_presemifield=is_presemifield(S),
            commutative=is_commutative(S, exhaustive=exhaustive),
            linearity_degree=linearity_degree(S),
            nuclei=nuclei,
        )


class TripleRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    source: str
    target: str
    status: Status
    strong: bool
    M: list[list[int]]
    N: list[list[int]]
    L: list[list[int]]
    witness: tuple[int, int] | None = None
    semilinearity: SemilinearityReport | None = None

    @classmethod
    def from_triple(
        cls, ctx: FieldCtx, triple: IsotopismTriple, semilinearity: SemilinearityReport | None = None
    ) -> TripleRecord:
        return cls(
            source=triple.source,
            target=triple.target,
            status=triple.status,
            strong=triple.is_strong,
            M=[ctx.elem_coeffs(c) for c in triple.M.coeffs],
            N=[ctx.elem_coeffs(c) for c in triple.N.coeffs],
            L=[ctx.elem_coeffs(c) for c in triple.L.coeffs],
            witness=triple.witness,
            semilinearity=semilinearity,
        )


class RunReport(BaseModel):
    """Everything a command prints on stdout."""

    version: str
    report_version: int = REPORT_VERSION
    command: str
    args: dict[str, Any] = Field(default_factory=dict)
    field: FieldDescriptor | None = None
    families: list[FamilyDescriptor] = Field(default_factory=list)
    presemifields: list[PresemifieldSummary] = Field(default_factory=list)
    triples: list[TripleRecord] = Field(default_factory=list)
    certificate: StrongIsoCertificate | None = None
    g_bounds: GBoundsReport | None = None
    semilinear_search: SemilinearSearchReport | None = None
    knuth_orbit: list[KnuthOrbitEntry] | None = None
    checks: list[CheckResult] = Field(default_factory=list)
    timing: dict[str, float] | None = None

    @property
    def ok(self) -> bool:
        return all(check.ok for check in self.checks)

    def failed(self) -> list[CheckResult]:
        return [check for check in self.checks if check.status == "failed"]


def report_schema() -> dict[str, Any]:
    return RunReport.model_json_schema()
