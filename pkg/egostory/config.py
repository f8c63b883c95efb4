import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from egostory.errors import ConfigError

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = Path(__file__).resolve().parent.parent / "config" / "pipeline.json"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


# 🔹 Region cues
class CueConfig(_Section):
    theta_r: float = Field(10000.0, gt=0, description="chi-square region match threshold")
    theta_p: float = Field(0.7, description="interest point ratio-test threshold")
    window_minutes: float = Field(10.0, description="frequency window span")
    window_alignment: Literal["centered", "trailing", "leading"] = "centered"
    skin_fraction: float = Field(0.25, description="superpixel skin fraction above which it is a hand")
    matcher: Literal["brute", "kdtree"] = "brute"

    @field_validator("theta_p", "skin_fraction")
    @classmethod
    def _open_unit(cls, value: float) -> float:
        if not 0.0 < value < 1.0:
            raise ValueError("must lie in (0, 1)")
        return value

    @field_validator("window_minutes")
    @classmethod
    def _positive(cls, value: float) -> float:
        if value <= 0:
            raise ValueError("must be > 0")
        return value


# 🔹 Event segmentation
class EventConfig(_Section):
    t_window: int = Field(27000, gt=0, description="temporal weight span in frames")
    threshold_space: Literal["chi2", "d"] = "chi2"
    sigma_multiplier: float = Field(2.0, ge=0)
    tau_override: Optional[float] = None


# 🔹 Region grouping
class GroupingConfig(_Section):
    membership_fraction: float = Field(0.5, gt=0, le=1)
    mass_floor: float = Field(1e-3, ge=0)
    max_clusters: int = Field(20, ge=1)
    redundancy_affinity: float = Field(0.5, gt=0, le=1, description="rho: prune threshold")
    max_candidates: int = Field(500, ge=1)
    background_ratio: Optional[float] = Field(1.0, gt=0, description="pairs with chi2 >= ratio * gamma get zero affinity")
    power_iterations: int = Field(1000, ge=1)
    power_tolerance: float = Field(1e-10, gt=0)


# 🔹 Storyboard
class SummaryConfig(_Section):
    mode: Literal["criterion", "budget"] = "criterion"
    tau: float = 0.2
    k: int = Field(10, ge=1)
    no_events: bool = False
    stats: Literal["model", "self"] = "model"
    brute_force_limit: int = Field(10_000_000, ge=1)


class BundleConfig(_Section):
    stride: int = Field(15, ge=1)
    color_bins_per_channel: int = Field(23, ge=1)
    flow_bins_per_direction: int = Field(61, ge=1)


class PipelineConfig(_Section):
    seed: int = 0
    bundle: BundleConfig = BundleConfig()
    cues: CueConfig = CueConfig()
    events: EventConfig = EventConfig()
    grouping: GroupingConfig = GroupingConfig()
    summary: SummaryConfig = SummaryConfig()


class Settings(BaseSettings):
    """Process-level knobs that do not belong in the audited pipeline config."""

    model_config = SettingsConfigDict(env_prefix="EGOSTORY_", case_sensitive=False)

    workers: int = Field(1, ge=1)
    database_url: str = "sqlite:///./egostory.db"
    log_level: str = "INFO"


def get_settings() -> Settings:
    return Settings()


def load_config(path: Optional[Path] = None) -> PipelineConfig:
    path = Path(path) if path is not None else DEFAULT_CONFIG_PATH
    if not path.exists():
        if path == DEFAULT_CONFIG_PATH:
            logger.warning(f"Default config {path} missing, using built-in defaults")
            return PipelineConfig()
        raise ConfigError(f"Config file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
        return PipelineConfig.model_validate(raw)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Config {path} is not valid JSON: {e}")
    except ValidationError as e:
        raise ConfigError(f"Config {path} is invalid: {e}")


def _coerce(raw: str) -> Any:
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def apply_overrides(cfg: PipelineConfig, overrides: dict[str, Any]) -> PipelineConfig:
    """Apply ``{"dotted.path": value}`` overrides and re-validate the whole tree.

    String values are parsed as JSON when possible so ``--set cues.theta_r=5000``
    arrives as a number.
    """
    data = cfg.model_dump()
    for dotted, value in overrides.items():
        if value is None:
            continue
        keys = dotted.split(".")
        node = data
        for key in keys[:-1]:
            if key not in node or not isinstance(node[key], dict):
                raise ConfigError(f"Unknown config section: {dotted}")
            node = node[key]
        if keys[-1] not in node:
            raise ConfigError(f"Unknown config field: {dotted}")
        node[keys[-1]] = _coerce(value) if isinstance(value, str) else value
    try:
        return PipelineConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"Invalid override: {e}")


def config_hash(cfg: PipelineConfig) -> str:
    payload = json.dumps(cfg.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()
