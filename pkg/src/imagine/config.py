"""Pipeline configuration: one YAML file, validated, unknown keys rejected.

Credentials never live in the file; HTTP backends name the environment
variable that holds the key.
"""

from __future__ import annotations

from pathlib import Path
from typing import Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SandboxConfig(_Strict):
    seed: int = 42
    profile: Literal["tiny", "standard"] = "tiny"


class QueriesConfig(_Strict):
    count: int = Field(90, ge=1)
    seed: int = 7
    # "<days>:<level>" -> weight, e.g. {"3:easy": 1.0}; empty means uniform over the 3x3 grid
    level_mix: dict[str, float] = Field(default_factory=dict)
    people_choices: list[int] = Field(default_factory=lambda: [1, 2, 3, 4, 5])
    infeasible_fraction: float = Field(0.25, ge=0.0, le=1.0)

    @field_validator("level_mix")
    @classmethod
    def _cells(cls, v: dict[str, float]) -> dict[str, float]:
        for key in v:
            days, _, level = key.partition(":")
            if days not in ("3", "5", "7") or level not in ("easy", "medium", "hard"):
                raise ValueError(f"bad level_mix key {key!r}; expected '<3|5|7>:<easy|medium|hard>'")
        return v


class BackendConfig(_Strict):
    kind: Literal["oracle", "http", "scripted"] = "oracle"
    url: Optional[str] = None
    model: Optional[str] = None
    api_key_env: str = "IMAGINE_API_KEY"
    timeout: float = 120.0
    replies_file: Optional[str] = None  # scripted: JSON list of replies

    @field_validator("url")
    @classmethod
    def _url(cls, v: Optional[str]) -> Optional[str]:
        if v is not None and not v.startswith(("http://", "https://")):
            raise ValueError("url must be http(s)")
        return v


class MasConfig(_Strict):
    reasoner: BackendConfig = Field(default_factory=BackendConfig)
    judges: list[BackendConfig] = Field(default_factory=lambda: [BackendConfig(), BackendConfig()])
    reflector: BackendConfig = Field(default_factory=BackendConfig)
    retries: int = Field(3, ge=0)
    backoff_seconds: float = Field(1.0, ge=0.0)

    @field_validator("judges")
    @classmethod
    def _two(cls, v: list) -> list:
        if len(v) != 2:
            raise ValueError("exactly two judges are required")
        return v


class RewardConfig(_Strict):
    count_vacuous_hard: bool = False


class GrpoSection(_Strict):
    group_size: int = Field(8, ge=2)
    clip_eps: float = Field(0.2, gt=0.0, lt=1.0)
    learning_rate: float = Field(0.5, ge=0.0)
    std_floor: float = Field(1e-6, ge=0.0)
    seed: int = 0
    inner_steps: int = Field(2, ge=1)
    pooled_tokens: bool = False
    steps: int = Field(200, ge=1)
    n_contexts: int = Field(4, ge=1)


class PipelineConfig(_Strict):
    sandbox: SandboxConfig = Field(default_factory=SandboxConfig)
    queries: QueriesConfig = Field(default_factory=QueriesConfig)
    mas: MasConfig = Field(default_factory=MasConfig)
    reward: RewardConfig = Field(default_factory=RewardConfig)
    grpo: GrpoSection = Field(default_factory=GrpoSection)
    jobs: int = Field(1, ge=1)


def load_config(path: str | Path | None) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    data = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    return PipelineConfig.model_validate(data)


def dump_config(cfg: PipelineConfig) -> str:
    return yaml.safe_dump(cfg.model_dump(), sort_keys=False)
