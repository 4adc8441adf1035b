from fractions import Fraction
from typing import Any, Dict, List, Optional, Union

from pydantic import BaseModel, Field, field_validator


# Errors

class QhmError(Exception):
    """Base class for every error raised by the toolkit"""

    def __init__(self, detail: str, witness: Any = None):
        super().__init__(detail)
        self.detail = detail
        self.witness = witness

    def to_payload(self) -> Dict[str, Any]:
        return {"error": type(self).__name__, "detail": self.detail, "witness": self.witness}


class StructuralError(QhmError):
    """Shape or quantale mismatch, malformed documents"""


class InputError(QhmError):
    """Values outside their declared range, mass mismatch, unparsable formulas"""


class UnsupportedOperation(QhmError):
    """The operation exists but not for this quantale, lifting or backend"""


class PreconditionError(QhmError):
    """A documented precondition does not hold; the witness says where"""


class ConfigError(QhmError):
    """Invalid run configuration"""


# Rationals travel as "p/q" strings

def parse_rational(raw: Union[str, int, Fraction]) -> Fraction:
    if isinstance(raw, Fraction):
        return raw
    if isinstance(raw, bool) or isinstance(raw, float):
        raise InputError(f"Rationals must be given as 'p/q' strings, got {raw!r}")
    if isinstance(raw, int):
        return Fraction(raw)
    try:
        return Fraction(str(raw).strip())
    except (ValueError, ZeroDivisionError):
        raise InputError(f"Cannot parse rational {raw!r}")


def format_rational(value: Fraction) -> str:
    return str(Fraction(value))


# JSON documents

class QuantaleTable(BaseModel):
    elements: List[str]
    join: List[List[str]]
    tensor: List[List[str]]
    unit: str


class QuantaleDescriptor(BaseModel):
    kind: str
    table: Optional[QuantaleTable] = None
    factors: Optional[List["QuantaleDescriptor"]] = None

    @field_validator("kind")
    @classmethod
    def known_kind(cls, value: str) -> str:
        if value not in {"bool2", "luk01", "max01", "diamond4", "table", "product"}:
            raise ValueError(f"unknown quantale kind {value!r}")
        return value


class VCatDocument(BaseModel):
    quantale: QuantaleDescriptor
    states: List[str]
    matrix: List[List[Any]]


class CoalgebraDocument(BaseModel):
    quantale: Optional[QuantaleDescriptor] = None
    functor: str
    labels: Optional[List[str]] = None
    states: List[str]
    base_matrix: Optional[List[List[Any]]] = None
    transitions: Dict[str, Any] = Field(default_factory=dict)


class DistanceMatrixDocument(BaseModel):
    provenance: str
    quantale: QuantaleDescriptor
    order: str
    states: List[str]
    matrix: List[List[Any]]
    steps: int = 0
    residual: Optional[str] = None
    converged: bool = True


# Reports

class LawResult(BaseModel):
    law: str
    passed: bool
    checked: int = 0
    witness: Optional[List[Any]] = None


class LawReport(BaseModel):
    quantale: str
    exhaustive: bool
    passed: bool
    laws: List[LawResult]


class VCatReport(BaseModel):
    valid: bool
    symmetric: bool
    laws: List[LawResult]


class CoalgebraReport(BaseModel):
    valid: bool
    functor: str
    violations: List[LawResult]


class KDecompositionReport(BaseModel):
    quantale: str
    holds: bool
    witnesses: List[Any]
    join: Any


class FormulaGap(BaseModel):
    formula: str
    states: List[str]
    gap: Any
    bound: Any


class AdequacyReport(BaseModel):
    passed: bool
    depth: int
    formulas_checked: int
    residual: Optional[str] = None
    violations: List[FormulaGap] = Field(default_factory=list)


class ExpressivityEntry(BaseModel):
    depth: int
    gap: Any
    exact: bool
    basis_size: int


class ExpressivityReport(BaseModel):
    passed: bool
    monotone: bool
    entries: List[ExpressivityEntry]


class InvarianceReport(BaseModel):
    passed: bool
    pairs_checked: int
    formulas_checked: int = 0
    witness: Optional[List[Any]] = None


class DecompositionReport(BaseModel):
    holds: Optional[bool]
    precondition: Optional[str] = None
    witness: Optional[List[Any]] = None


class ContinuityReport(BaseModel):
    lifting: str
    closure: str
    passed: bool
    checks: int
    witness: Optional[List[Any]] = None


class TrialOutcome(BaseModel):
    seed: int
    passed: bool
    summary: Dict[str, Any] = Field(default_factory=dict)
    witness: Optional[Dict[str, Any]] = None
    error: Optional[str] = None


class SuiteReport(BaseModel):
    suite: str
    passed: bool
    trials: List[TrialOutcome] = Field(default_factory=list)
    details: Dict[str, Any] = Field(default_factory=dict)


# Run configuration

class RunConfig(BaseModel):
    command: str
    suite: Optional[str] = None
    inputs: List[str] = Field(default_factory=list)
    quantale: Optional[str] = None
    functor: Optional[str] = None
    backend: str = "lp"
    eps: Fraction = Fraction(1, 10 ** 9)
    depth: int = 2
    width: int = 2000
    grid: Fraction = Fraction(1, 16)
    formula_grid: Fraction = Fraction(1, 8)
    seed: int = 0
    trials: int = 50
    states: int = 4
    closure_op: str = "id"
    formula: Optional[str] = None
    pair: Optional[List[str]] = None
    budget: int = 5000
    max_iter: int = 1000
    epsilon: Fraction = Fraction(1, 10)
    output_format: str = "json"
    out: Optional[str] = None
    replay: Optional[int] = None
    max_states: int = 64

    model_config = {"arbitrary_types_allowed": True}

    @field_validator("eps", "grid", "formula_grid", "epsilon", mode="before")
    @classmethod
    def rational(cls, value: Any) -> Fraction:
        if isinstance(value, float):
            return Fraction(value).limit_denominator(10 ** 12)
        try:
            return parse_rational(value)
        except InputError as e:
            raise ValueError(e.detail)

    @field_validator("eps")
    @classmethod
    def positive_eps(cls, value: Fraction) -> Fraction:
        if value <= 0:
            raise ValueError("eps must be positive")
        return value

    @field_validator("depth")
    @classmethod
    def nonnegative_depth(cls, value: int) -> int:
        if value < 0:
            raise ValueError("depth must be non-negative")
        return value

    @field_validator("grid", "formula_grid")
    @classmethod
    def grid_divides_one(cls, value: Fraction) -> Fraction:
        if value <= 0 or value > 1 or value.numerator != 1:
            raise ValueError("grid step must be 1/n for a positive integer n")
        return value

    @field_validator("backend")
    @classmethod
    def known_backend(cls, value: str) -> str:
        if value not in {"lp", "enum"}:
            raise ValueError("backend must be 'lp' or 'enum'")
        return value

    @field_validator("output_format")
    @classmethod
    def known_format(cls, value: str) -> str:
        if value not in {"json", "csv"}:
            raise ValueError("format must be 'json' or 'csv'")
        return value


QuantaleDescriptor.model_rebuild()
