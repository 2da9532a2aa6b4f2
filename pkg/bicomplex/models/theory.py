"""Data models describing theories and their specification documents."""

from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator


class FieldDecl(BaseModel):
    """A graded field u^a of the theory."""

    model_config = ConfigDict(frozen=True)

    name: str = Field(..., min_length=1, description="Identifier used in expressions")
    ghost: int = Field(..., description="Ghost degree of the fiber coordinate")

    @field_validator("name")
    @classmethod
    def validate_name(cls, v: str) -> str:
        """Names are letters/digits with an optional trailing '+' (antifields)."""
        core = v[:-1] if v.endswith("+") else v
        if not core or not core[0].isalpha() or not core.isalnum():
            raise ValueError(f"Invalid field name: {v!r}")
        return v

    @property
    def parity(self) -> int:
        """Parity of the fiber coordinate."""
        return self.ghost % 2


class SpecOptions(BaseModel):
    """Per-document overrides of the engine settings."""

    jet_cap: Optional[int] = Field(None, ge=1)
    seed: Optional[int] = None
    samples: Optional[int] = Field(None, ge=1)
    arity: Optional[int] = Field(None, ge=1, le=4)


class SpecDocument(BaseModel):
    """Raw sections of a theory specification, one string per section."""

    dimension: int = Field(..., ge=1, description="Dimension n of the base R^n")
    coordinates: list[str] = Field(default_factory=list)
    fields: list[FieldDecl] = Field(..., min_length=1)
    omega: Optional[str] = Field(None, description="The local symplectic form")
    pairing: Optional[list[list[str]]] = Field(
        None, description="Constant matrix P_ab with omega = P_ab dV(u^a)^dV(u^b)^vol"
    )
    q: dict[str, str] = Field(default_factory=dict, description="Q^a per field name")
    lagrangian: Optional[str] = None
    theta: Optional[str] = None
    options: SpecOptions = Field(default_factory=SpecOptions)

    @field_validator("fields")
    @classmethod
    def validate_unique_names(cls, v: list[FieldDecl]) -> list[FieldDecl]:
        """Field names must be unique within a theory."""
        names = [f.name for f in v]
        if len(set(names)) != len(names):
            raise ValueError("Field names must be unique")
        return v
