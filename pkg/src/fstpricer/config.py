"""Job configuration: YAML file -> validated, fully resolved settings."""
from __future__ import annotations

import dataclasses
from typing import Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ._validation import is_power_of_two
from .exceptions import ConfigError, InvalidParameters
from .levy import FAMILIES, validate_params
from .payoffs import BARRIER_KINDS, PAYOFFS, American, Barrier, NoConstraint
from .regime import MAX_REGIMES, RegimeModel

# config spellings that are not Python identifiers
_PARAM_ALIASES = {"lambda": "lam"}


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class RegimeSection(_Strict):
    family: str
    params: dict[str, float]
    r: float


class ModelSection(_Strict):
    family: Optional[str] = None
    params: dict[str, float] = Field(default_factory=dict)
    regimes: Optional[list[RegimeSection]] = None
    generator: Optional[list[list[float]]] = None

    @model_validator(mode="after")
    def _one_kind(self):
        if (self.family is None) == (self.regimes is None):
            raise ValueError("give either family + params or regimes + generator")
        if self.regimes is not None:
            k = len(self.regimes)
            if not 2 <= k <= MAX_REGIMES:
                raise ValueError(f"regime count must be between 2 and {MAX_REGIMES}")
            if self.generator is None or len(self.generator) != k or any(len(r) != k for r in self.generator):
                raise ValueError(f"generator must be a {k}x{k} matrix of transition rates")
        return self


class MarketSection(_Strict):
    S0: float = Field(gt=0)
    r: float = 0.0
    q: float = 0.0
    T: float = Field(gt=0)


class PayoffSection(_Strict):
    type: Literal["call", "put", "digital_call", "straddle", "custom"]
    K: Optional[float] = Field(default=None, gt=0)
    table: Optional[list[tuple[float, float]]] = None

    @model_validator(mode="after")
    def _fields(self):
        if self.type == "custom":
            if self.table is None:
                raise ValueError("custom payoff needs a table of [S, value] rows")
        elif self.K is None:
            raise ValueError(f"{self.type} payoff needs a strike K")
        return self


class ConstraintSection(_Strict):
    type: Literal["none", "american", "barrier"] = "none"
    kind: Optional[Literal[BARRIER_KINDS]] = None
    H: Optional[float] = Field(default=None, gt=0)
    rebate: float = Field(default=0.0, ge=0)

    @model_validator(mode="after")
    def _fields(self):
        if self.type == "barrier" and (self.kind is None or self.H is None):
            raise ValueError("barrier constraint needs kind and H")
        return self


class InstrumentSection(_Strict):
    payoff: PayoffSection
    constraint: ConstraintSection = Field(default_factory=ConstraintSection)


class NumericsSection(_Strict):
    N: int = 4096
    L: Optional[float] = Field(default=None, gt=0)
    M: Optional[int] = Field(default=None, ge=1)
    continuity_correction: bool = False
    trusted_region: Literal["warn", "error", "ignore"] = "warn"
    levels: Optional[list[tuple[int, int]]] = None
    reference: Union[Literal["oracle", "finest"], tuple[int, int]] = "oracle"

    @field_validator("N")
    @classmethod
    def _pow2(cls, n):
        if not is_power_of_two(n) or n < 8:
            raise ValueError("N must be a power of two >= 8")
        return n

    @field_validator("levels")
    @classmethod
    def _levels(cls, levels):
        if levels is None:
            return levels
        if len(levels) < 3:
            raise ValueError("convergence needs at least 3 levels")
        for n, m in levels:
            if not is_power_of_two(n) or n < 8:
                raise ValueError(f"level N={n}: N must be a power of two >= 8")
            if m < 1:
                raise ValueError(f"level M={m}: M must be >= 1")
        return levels


class VerifySection(_Strict):
    tolerance: float = Field(default=1e-3, gt=0)
    n_paths: int = Field(default=1_000_000, ge=1000)
    tree_steps: int = Field(default=5000, ge=1)


class OutputSection(_Strict):
    dir: Optional[str] = None
    surface_csv: bool = False


class JobConfig(_Strict):
    mode: Literal["price", "convergence", "verify"] = "price"
    seed: int = Field(default=0, ge=0)
    model: ModelSection
    market: MarketSection
    instrument: InstrumentSection
    numerics: NumericsSection = Field(default_factory=NumericsSection)
    verify: VerifySection = Field(default_factory=VerifySection)
    output: OutputSection = Field(default_factory=OutputSection)


def _line_of(node, path):
    """1-based line of ``path`` in a composed YAML node tree, best effort."""
    line = None
    for key in path:
        if node is None:
            break
        line = node.start_mark.line + 1
        if isinstance(node, yaml.MappingNode):
            nxt = None
            for k, v in node.value:
                if k.value == str(key):
                    line, nxt = k.start_mark.line + 1, v
                    break
            node = nxt
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
            line = node.start_mark.line + 1
        else:
            break
    return line


def _diagnose(exc: ValidationError, root) -> str:
    parts = []
    for err in exc.errors():
        loc = [p for p in err["loc"] if not (isinstance(p, str) and p.startswith("function-"))]
        field = ".".join(str(p) for p in loc) or "<root>"
        line = _line_of(root, loc) if root is not None else None
        where = f"line {line}, " if line else ""
        msg = err["msg"].removeprefix("Value error, ")
        parts.append(f"{where}field {field}: {msg}")
    return "; ".join(parts)


def parse_config(text: str) -> JobConfig:
    try:
        data = yaml.safe_load(text)
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping at the top level")
    try:
        cfg = JobConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_diagnose(exc, root)) from None
    # revalidate the domain invariants the schema cannot see
    try:
        build_model(cfg.model)
        build_payoff(cfg.instrument.payoff)
    except (InvalidParameters, ValueError, TypeError) as exc:
        raise ConfigError(f"field model/instrument: {exc}") from None
    return cfg


def load_config(path) -> JobConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


def _levy(family, params):
    cls = FAMILIES.get(family.lower())
    if cls is None:
        raise ValueError(f"unknown model family {family!r}; expected one of {sorted(FAMILIES)}")
    kwargs = {_PARAM_ALIASES.get(k, k): v for k, v in params.items()}
    allowed = {f.name for f in dataclasses.fields(cls)} - {"gamma"}
    unknown = set(kwargs) - allowed
    missing = allowed - set(kwargs)
    if unknown or missing:
        raise ValueError(f"{family} params: unknown {sorted(unknown)}, missing {sorted(missing)}")
    model = cls(**kwargs)
    violations = validate_params(model)
    if violations:
        raise InvalidParameters(violations)
    return model


def build_model(section: ModelSection):
    if section.family is not None:
        return _levy(section.family, section.params)
    models = [_levy(r.family, r.params) for r in section.regimes]
    return RegimeModel.from_rates(models, [r.r for r in section.regimes], section.generator)


def build_payoff(section: PayoffSection):
    cls = PAYOFFS[section.type]
    if section.type == "custom":
        return cls(tuple(tuple(row) for row in section.table))
    return cls(section.K)


def build_constraint(section: ConstraintSection):
    if section.type == "american":
        return American()
    if section.type == "barrier":
        return Barrier(section.kind, section.H, section.rebate)
    return NoConstraint()
