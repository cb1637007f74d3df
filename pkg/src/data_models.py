from enum import Enum
from fractions import Fraction
from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, PlainSerializer, field_validator, model_validator

from src.power_arith import as_level

Rational = Annotated[Fraction, BeforeValidator(as_level), PlainSerializer(lambda f: str(f), return_type=str)]

SCHEMA_VERSION = 1


class CoefficientFamily(str, Enum):
    UNIFORM_SIGNED = "uniform-magnitude-signed"
    UNIFORM_POSITIVE = "uniform-positive"


class CoefficientKind(str, Enum):
    BOUNDED = "bounded"
    FIXED = "fixed"


class InputKind(str, Enum):
    UNIFORM = "uniform"        # independent, uniform over each source alphabet
    IDENTICAL = "identical"    # X_1 = X_2 = … uniform
    JOINT = "joint"            # explicit joint table over source tuples


class InstanceKind(str, Enum):
    PARTITION_DEMO = "partition-demo"
    THEOREM_VERIFY = "theorem-verify"
    AIS_ORACLE = "ais-oracle"
    REGION = "region"
    CERTIFICATE = "certificate"
    LEMMA1 = "lemma1"


class SamplerConfig(BaseModel):
    model_config = ConfigDict(extra="allow")

    delta1: float = Field(default=1.0, gt=0)
    delta2: float = Field(default=2.0, gt=0)
    f_max: float = Field(default=1.0, gt=0)
    family: CoefficientFamily = CoefficientFamily.UNIFORM_SIGNED
    seed: int = 0

    @model_validator(mode="after")
    def validate_density(self):
        if self.delta2 <= self.delta1:
            raise ValueError(f"delta2 must exceed delta1 for a bounded density, got [{self.delta1}, {self.delta2}]")
        if self.peak_density > self.f_max:
            raise ValueError(f"family {self.family.value} has peak density {self.peak_density:g} above f_max={self.f_max:g}")
        return self

    @property
    def peak_density(self) -> float:
        width = self.delta2 - self.delta1
        if self.family == CoefficientFamily.UNIFORM_SIGNED:
            return 1.0 / (2.0 * width)
        return 1.0 / width


class TermSpec(BaseModel):
    """One term of a floor-linear combination: source j, optional band, optional trim, coefficient."""

    model_config = ConfigDict(extra="allow")

    source: int = Field(ge=0)
    band: Optional[Tuple[Rational, Rational]] = None
    trim: Optional[Tuple[Rational, Rational]] = None   # (gamma, delta)
    kind: CoefficientKind = CoefficientKind.FIXED
    value: Optional[float] = None

    @field_validator("band")
    @classmethod
    def validate_band(cls, v):
        if v is not None and not (0 <= v[0] <= v[1]):
            raise ValueError(f"band selector must satisfy 0 <= low <= high, got {v}")
        return v

    @model_validator(mode="after")
    def validate_coefficient(self):
        if self.kind == CoefficientKind.FIXED and self.value is None:
            raise ValueError("fixed terms need a coefficient value")
        return self


class CombinationSpec(BaseModel):
    model_config = ConfigDict(extra="allow")

    terms: List[TermSpec] = Field(default_factory=list)

    def __len__(self) -> int:
        return len(self.terms)


class InputModel(BaseModel):
    model_config = ConfigDict(extra="allow")

    kind: InputKind = InputKind.UNIFORM
    support: Optional[List[List[int]]] = None
    mass: Optional[List[float]] = None

    @model_validator(mode="after")
    def validate_joint(self):
        if self.kind == InputKind.JOINT:
            if not self.support or self.mass is None or len(self.support) != len(self.mass):
                raise ValueError("joint inputs need matching support and mass lists")
            if abs(sum(self.mass) - 1.0) > 1e-9 or min(self.mass) < 0:
                raise ValueError("joint input masses must be non-negative and sum to 1")
        return self


class TheoremInstance(BaseModel):
    """
    One sum-set inequality instance. Bands are 1-based: band i of row k spans
    levels (λ_{k,1}+…+λ_{k,i-1}, λ_{k,1}+…+λ_{k,i}). Index sets, trims and fixed
    coefficients use 1-based (k, l, i, j) keys written "k,l,i,j".
    """

    model_config = ConfigDict(extra="allow")

    name: str = "instance"
    N: int = Field(ge=1)
    K: int = Field(ge=1)
    n: int = Field(default=1, ge=1)
    level_grid: List[List[Rational]]
    index_sets: List[List[List[int]]]
    trims: Dict[str, Tuple[Rational, Rational]] = Field(default_factory=dict)
    fixed_coefficients: Dict[str, float] = Field(default_factory=dict)
    rhs_coefficients: Literal["fixed", "bounded"] = "fixed"
    input_model: InputModel = Field(default_factory=InputModel)
    conditioning: Optional[CombinationSpec] = None
    sampler: SamplerConfig = Field(default_factory=SamplerConfig)

    @model_validator(mode="after")
    def validate_shapes(self):
        if len(self.level_grid) != self.K or len(self.index_sets) != self.K:
            raise ValueError(f"level_grid and index_sets need one row per k (K={self.K})")
        widths = {len(row) for row in self.level_grid}
        if len(widths) != 1:
            raise ValueError("every level_grid row needs the same number of bands M")
        if any(level < 0 for row in self.level_grid for level in row):
            raise ValueError("power levels must be non-negative")
        return self

    @property
    def M(self) -> int:
        return len(self.level_grid[0])

    @property
    def source_level(self) -> Fraction:
        return max(sum(row, Fraction(0)) for row in self.level_grid)

    def band_edges(self, k: int, i: int) -> Tuple[Fraction, Fraction]:
        row = self.level_grid[k - 1]
        low = sum(row[:i - 1], Fraction(0))
        return low, low + row[i - 1]

    def trim_for(self, k: int, l: int, i: int, j: int) -> Tuple[Fraction, Fraction]:
        """(γ, δ) inside band i, defaulting to the untrimmed band (λ_{k,i}, 0)."""
        return self.trims.get(f"{k},{l},{i},{j}", (self.level_grid[k - 1][i - 1], Fraction(0)))

    def m(self, k: int, l: int) -> int:
        return min(self.index_sets[k - 1][l - 1])


class MimoIcConfig(BaseModel):
    model_config = ConfigDict(extra="allow")

    M1: int = Field(default=5, ge=1)
    M2: int = Field(default=5, ge=1)
    N1: int = Field(default=2, ge=1)
    N2: int = Field(default=3, ge=1)
    alpha: Dict[str, Rational] = Field(default_factory=lambda: {
        "11": Fraction(1), "12": Fraction(3, 4), "21": Fraction(2, 3), "22": Fraction(1)})
    beta: Dict[str, Rational] = Field(default_factory=lambda: {"12": Fraction(1, 4), "21": Fraction(1, 3)})
    # floor on |det| of every N_r×N_r minor inside a per-transmitter block
    det_min: float = Field(default=0.05, gt=0)

    @field_validator("alpha")
    @classmethod
    def validate_alpha(cls, v):
        if set(v) != {"11", "12", "21", "22"} or any(a < 0 for a in v.values()):
            raise ValueError("alpha needs non-negative entries 11, 12, 21, 22")
        return v

    @field_validator("beta")
    @classmethod
    def validate_beta(cls, v):
        if set(v) != {"12", "21"} or any(not 0 <= b <= 1 for b in v.values()):
            raise ValueError("beta needs entries 12, 21 within [0, 1]")
        return v

    @model_validator(mode="after")
    def validate_split(self):
        if self.N2 > self.M1 or self.N1 > self.M2:
            raise ValueError("cross blocks need N2 <= M1 and N1 <= M2")
        return self


def lemma1_sampler(seed: int = 0) -> SamplerConfig:
    """Positive coefficients, the default family of the Lemma 1 checks."""
    return SamplerConfig(family=CoefficientFamily.UNIFORM_POSITIVE, seed=seed)


class EntropyEstimate(BaseModel):
    value: float
    method: Literal["exact", "plugin-sample"] = "exact"
    trials: int = 1
    normalizer: float = 1.0
    support_size: Optional[int] = None
    bias_flag: bool = False

    @property
    def normalized(self) -> float:
        return self.value / self.normalizer if self.normalizer > 0 else float("nan")


class GapReport(BaseModel):
    P: float
    pbar: int
    lhs: Optional[EntropyEstimate] = None
    rhs: Optional[EntropyEstimate] = None
    gap: Optional[float] = None
    normalized_gap: Optional[float] = None
    condition_ok: bool = True
    target: float = 0.0        # normalized lower bound the gap should respect
    status: Literal["ok", "cap-exceeded"] = "ok"
    note: str = ""

    @model_validator(mode="after")
    def validate_gap(self):
        if self.lhs is not None and self.rhs is not None and self.gap is None:
            self.gap = self.lhs.value - self.rhs.value
            if self.lhs.normalizer > 0:
                self.normalized_gap = self.gap / self.lhs.normalizer
        return self


class AlignmentReport(BaseModel):
    pbar: int
    draws: int
    distinct_images: int
    class_sizes: List[List[int]] = Field(default_factory=list)
    expected_cardinality: float
    expected_max_cardinality: float
    analytic_exponent: float
    analytic_bound: float
    designated: Tuple[int, ...]
    map_choice: str = "lexicographic canonical preimage"
    quadrature_cardinality: Optional[float] = None
    pa_matrix: Optional[List[Dict[str, Any]]] = None


class JointTable(BaseModel):
    """Distribution over named integer variables: support rows × variables, with masses."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    names: List[str]
    support: np.ndarray
    mass: np.ndarray

    @field_validator("support", mode="before")
    @classmethod
    def coerce_support(cls, v):
        return np.asarray(v, dtype=np.int64)

    @field_validator("mass", mode="before")
    @classmethod
    def coerce_mass(cls, v):
        return np.asarray(v, dtype=np.float64)

    @model_validator(mode="after")
    def validate_table(self):
        self.support = self.support.reshape(len(self.mass), len(self.names))
        if self.mass.size and self.mass.min() < 0:
            raise ValueError("masses must be non-negative")
        if abs(self.mass.sum() - 1.0) > 1e-12 * max(1, self.mass.size):
            raise ValueError(f"masses sum to {self.mass.sum()!r}, not 1")
        if len(set(self.names)) != len(self.names):
            raise ValueError("variable names must be distinct")
        if self.names and len(np.unique(self.support, axis=0)) != len(self.support):
            raise ValueError("support tuples must be distinct")
        return self


class PartitionDemoBody(BaseModel):
    model_config = ConfigDict(extra="allow")

    X: int = Field(ge=0)
    P: Optional[float] = None
    pbar: Optional[int] = None
    levels: List[Rational]

    @model_validator(mode="after")
    def validate_power(self):
        if (self.P is None) == (self.pbar is None):
            raise ValueError("give exactly one of P or pbar")
        return self


class SweepBody(BaseModel):
    model_config = ConfigDict(extra="allow")

    pbar: List[int] = Field(default_factory=lambda: [16, 32, 64])
    P: Optional[List[float]] = None
    trials: int = Field(default=16, ge=1)
    seed: int = 0
    cap: Optional[int] = None
    out: Optional[str] = None


class TheoremVerifyBody(SweepBody):
    builtin: Optional[Literal["theorem1", "figure3", "figure5", "appendix-b"]] = None
    lambda1: Rational = Fraction(1)
    lambda2: Rational = Fraction(1, 2)
    dependent: bool = False
    instance: Optional[TheoremInstance] = None
    tolerance: float = 0.15
    method: Literal["exact", "plugin-sample"] = "exact"

    @model_validator(mode="after")
    def validate_source(self):
        if (self.builtin is None) == (self.instance is None):
            raise ValueError("give exactly one of builtin or instance")
        ignored = sorted({"lambda1", "lambda2", "dependent"} & self.model_fields_set)
        if ignored and self.builtin != "theorem1":
            source = f"built-in {self.builtin!r}" if self.builtin else "a custom instance"
            raise ValueError(f"{', '.join(ignored)} only apply to the theorem1 built-in, not {source}")
        return self


class AisOracleBody(SweepBody):
    lambda1: Rational = Fraction(1)
    lambda2: Rational = Fraction(1)
    pairs: bool = False
    quadrature_resolution: Optional[float] = None
    include_histogram: bool = False
    sampler: SamplerConfig = Field(default_factory=SamplerConfig)


class HalfPlaneSpec(BaseModel):
    a1: Rational
    a2: Rational
    b: Rational


class RegionBody(BaseModel):
    model_config = ConfigDict(extra="allow")

    builtin: Optional[Literal["theorem5"]] = "theorem5"
    halfplanes: Optional[List[HalfPlaneSpec]] = None
    out: Optional[str] = None


class LedgerSpec(BaseModel):
    terms: Dict[str, Rational] = Field(default_factory=dict)
    bound: Rational = Fraction(0)
    slack: bool = False


class PremiseSpec(BaseModel):
    weight: Rational
    name: Optional[str] = None       # built-in premise registry key
    ledger: Optional[LedgerSpec] = None

    @model_validator(mode="after")
    def validate_source(self):
        if (self.name is None) == (self.ledger is None):
            raise ValueError("a premise needs exactly one of name or ledger")
        if self.weight < 0:
            raise ValueError("premise weights must be non-negative")
        return self


class CertificateBody(BaseModel):
    model_config = ConfigDict(extra="allow")

    builtin: Optional[str] = None
    premises: Optional[List[PremiseSpec]] = None
    target: Optional[LedgerSpec] = None
    out: Optional[str] = None

    @model_validator(mode="after")
    def validate_source(self):
        if self.builtin is None and (self.premises is None or self.target is None):
            raise ValueError("give a builtin certificate name or premises plus target")
        return self


class Lemma1Body(SweepBody):
    level_scale: Rational = Fraction(1, 2)
    han_joints: int = Field(default=1000, ge=1)
    mimo: MimoIcConfig = Field(default_factory=MimoIcConfig)
    sampler: SamplerConfig = Field(default_factory=lemma1_sampler)


BODY_MODELS = {
    InstanceKind.PARTITION_DEMO: PartitionDemoBody,
    InstanceKind.THEOREM_VERIFY: TheoremVerifyBody,
    InstanceKind.AIS_ORACLE: AisOracleBody,
    InstanceKind.REGION: RegionBody,
    InstanceKind.CERTIFICATE: CertificateBody,
    InstanceKind.LEMMA1: Lemma1Body,
}


class InstanceFile(BaseModel):
    model_config = ConfigDict(extra="allow")

    schema_version: int = SCHEMA_VERSION
    name: str = "unnamed"
    kind: InstanceKind
    body: Dict[str, Any] = Field(default_factory=dict)

    @field_validator("schema_version")
    @classmethod
    def validate_schema_version(cls, v):
        if v != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {v}, expected {SCHEMA_VERSION}")
        return v

    def parsed_body(self) -> BaseModel:
        return BODY_MODELS[self.kind](**self.body)


class RunManifest(BaseModel):
    input_sha256: str
    seed: Optional[int] = None
    tool_version: str
    wall_time_s: float = 0.0
    tasks: Dict[str, str] = Field(default_factory=dict)
