"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field


class ErrorInfo(BaseModel):
    kind: Literal["parse", "semantic", "fuel", "internal"]
    message: str
    line: Optional[int] = None
    col: Optional[int] = None


class Definition(BaseModel):
    name: str
    body: str


class ParseRequest(BaseModel):
    text: str
    gamma: str = ""


class ParseResponse(BaseModel):
    defs: list[Definition]
    main: Optional[str] = None
    diagnostics: list[str]


class NormalizeRequest(BaseModel):
    text: str
    gamma: str = ""
    fuel: int = Field(default=100_000, ge=1)
    trace: bool = False


class NormalizeResponse(BaseModel):
    normal_form: str
    shape: str
    trace: Optional[list[str]] = None


class ExpandRequest(BaseModel):
    text: str
    gamma: str = ""


class ExpandResponse(BaseModel):
    main: str
    defs: list[Definition]


class LtsRequest(BaseModel):
    text: str
    gamma: str = ""
    bindings: dict[str, bool] = Field(default_factory=dict)
    depth: int = Field(default=8, ge=1)
    max_states: int = Field(default=4000, ge=1)
    hide: list[str] = Field(default_factory=list)
    format: Literal["text", "json"] = "text"


class LtsResponse(BaseModel):
    text: Optional[str] = None
    lts: Optional[dict] = None


class EquivRequest(BaseModel):
    text_a: str
    text_b: str
    gamma: str = ""
    bindings: dict[str, bool] = Field(default_factory=dict)
    mode: Literal["bisim", "trace"] = "bisim"
    depth: int = Field(default=8, ge=1)
    max_states: int = Field(default=4000, ge=1)


class EquivResponse(BaseModel):
    equivalent: bool
    bounded_only: bool = False
    evidence: Optional[str] = None
    mode: str = "bisim"


class RunRequest(BaseModel):
    text: str
    gamma: str = ""
    script: list[str] = Field(default_factory=list)
    bindings: dict[str, bool] = Field(default_factory=dict)


class RunResponse(BaseModel):
    status: str
    rendered: str
    value: Optional[str] = None
    exc: Optional[str] = None
    step: Optional[int] = None
    action: Optional[str] = None
    count: int = 0
    enabled: list[str] = Field(default_factory=list)


class CheckRequest(BaseModel):
    suite: Literal["axioms", "lint", "disambig"]
    samples: int = Field(default=500, ge=1)
    seed: int = 0
    depth: Optional[int] = Field(default=None, ge=1)


class CheckResponse(BaseModel):
    suite: str
    ok: bool
    failures: int
    text: str
    data: dict
