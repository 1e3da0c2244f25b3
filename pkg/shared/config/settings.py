"""
Configuration settings for the Schottky cusp counting lab
Uses pydantic-settings for process settings and pydantic models for run configuration
"""
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from pydantic_settings import BaseSettings

from shared.middleware.error_handler import ConfigError

logger = logging.getLogger(__name__)


class Settings(BaseSettings):
    """Process settings with environment variable support"""

    app_name: str = "Schottky Cusp Counting Lab"
    app_version: str = "1.0.0"

    # Logging Configuration
    log_level: str = "INFO"
    log_format: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

    # Distance table cache
    cache_dir: str = "cache/distance_tables"
    cache_enabled: bool = True

    # Runs
    out_dir: str = "out"
    workers: int = 1
    default_config: str = "config/default_run.json"

    class Config:
        env_file = ".env"
        env_file_encoding = "utf-8"
        env_prefix = "CUSPLAB_"
        case_sensitive = False
        extra = "ignore"


# Global settings instance
settings = Settings()


# ============================================================================
# RUN CONFIGURATION SECTIONS
# ============================================================================

class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class LConfig(_Section):
    """Slowly varying function L"""
    variant: Literal["constant", "power_of_log", "iterated_log"] = "constant"
    c: float = Field(1.0, gt=0.0, description="Value of the constant variant")
    beta: float = Field(0.0, description="Exponent of the log variants")
    t_min: Optional[float] = Field(None, ge=0.0, description="Evaluation floor, null for automatic")


class ProfileConfig(_Section):
    """Cusp profile construction"""
    alpha: float = Field(1.5, ge=0.0)
    A: float = Field(0.4, gt=0.0, lt=1.0)
    B: float = Field(2.0, gt=1.0)
    glue_grid: int = Field(10_000, ge=100)
    initial_guess: Optional[float] = Field(None, gt=0.0)
    ladder_cap: int = Field(8, ge=1)
    hyperbolic_test_mode: bool = False

    @model_validator(mode="after")
    def _check_alpha(self):
        if not self.hyperbolic_test_mode and not 1.0 < self.alpha < 2.0:
            raise ValueError("alpha must lie in (1, 2) outside the hyperbolic test mode")
        return self


class ClairautConfig(_Section):
    """Clairaut integrals and the distance table"""
    n_min: float = Field(1.0, gt=0.0)
    n_0: float = Field(1e3, gt=0.0, description="Envelope threshold")
    quad_epsabs: float = Field(1e-12, gt=0.0)
    quad_epsrel: float = Field(1e-11, gt=0.0)
    quad_limit: int = Field(200, ge=10)
    table_knots: int = Field(800, ge=50)
    table_log10_max: float = Field(9.0, gt=0.0)


class SchottkyConfig(_Section):
    """Generators, ping-pong intervals and the distance model"""
    family: Literal["cusp_pair", "hyperbolic_pair"] = "cusp_pair"
    tau: float = Field(6.0, gt=0.0)
    h_lambda: float = Field(12.0, gt=1.0)
    h_power: int = Field(2, ge=1)
    second_lambda: float = Field(30.0, gt=1.0)
    cusp_height: float = Field(0.0, ge=0.0)
    intervals: Optional[List[List[List[Optional[float]]]]] = None
    x0: float = 0.0
    N_check: int = Field(6, ge=1)
    model: Literal["EXACT_H2", "MODIFIED_CUSP"] = "MODIFIED_CUSP"


class TransferConfig(_Section):
    """Discretized Ruelle operator"""
    trunc_N: int = Field(64, ge=1)
    trunc_hyperbolic: int = Field(8, ge=1)
    mesh_points: int = Field(96, ge=4)
    tail_compensation: bool = True
    s_hi: float = Field(3.0, gt=0.0)
    margin: float = Field(1e-4, ge=0.0)
    max_iter: int = Field(10_000, ge=10)
    tol: float = Field(1e-10, gt=0.0)


class RGridSpec(_Section):
    start: float
    stop: float
    step: float = Field(..., gt=0.0)


class CountingConfig(_Section):
    """Brute-force counting and the renewal sum"""
    k_max: int = Field(12, ge=0)
    R_grid: Union[List[float], RGridSpec] = RGridSpec(start=8.0, stop=16.0, step=1.0)
    mollify: float = Field(1e-3, gt=0.0)
    node_budget: int = Field(5_000_000, ge=1)
    u_halfwidth: float = Field(1.0, gt=0.0)
    r_split: float = Field(4.0, gt=0.0)
    t_step: float = Field(0.01, gt=0.0)
    orbit_depth: int = Field(1, ge=1)
    renewal_R: List[float] = Field(default_factory=lambda: [12.0])

    def r_values(self) -> List[float]:
        """Expand the R grid into an explicit sorted list"""
        if isinstance(self.R_grid, RGridSpec):
            spec = self.R_grid
            count = int(np.floor((spec.stop - spec.start) / spec.step + 1e-9)) + 1
            return [round(spec.start + i * spec.step, 12) for i in range(max(count, 0))]
        return sorted(float(r) for r in self.R_grid)


class OutputConfig(_Section):
    directory: Optional[str] = None
    float_format: str = "%.12g"


class RunConfig(_Section):
    """Complete configuration of one lab run"""
    L: LConfig = LConfig()
    profile: ProfileConfig = ProfileConfig()
    clairaut: ClairautConfig = ClairautConfig()
    schottky: SchottkyConfig = SchottkyConfig()
    transfer: TransferConfig = TransferConfig()
    counting: CountingConfig = CountingConfig()
    output: OutputConfig = OutputConfig()
    seed: int = 20240607


# ============================================================================
# LOADING
# ============================================================================

def parse_override(text: str) -> tuple[list[str], Any]:
    """Split 'a.b=value' into a key path and a JSON-or-string value"""
    if "=" not in text:
        raise ConfigError(f"Override '{text}' is not of the form key=value", {"override": text})
    key, raw = text.split("=", 1)
    path = [part for part in key.strip().split(".") if part]
    if not path:
        raise ConfigError(f"Override '{text}' has an empty key", {"override": text})
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return path, value


def apply_overrides(data: Dict[str, Any], overrides: Iterable[str]) -> Dict[str, Any]:
    """Apply repeated --set overrides onto a raw config dictionary"""
    for text in overrides or []:
        path, value = parse_override(text)
        node = data
        for part in path[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError(
                    f"Override '{text}' descends into non-section key '{part}'",
                    {"override": text, "key": ".".join(path)}
                )
            node = child
        node[path[-1]] = value
    return data


def _read_json(path: Path) -> Dict[str, Any]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Cannot read config file {path}: {e}", {"path": str(path)})
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(
            f"Config parse error at line {e.lineno}, column {e.colno}: {e.msg}",
            {"path": str(path), "line": e.lineno, "column": e.colno}
        )
    if not isinstance(data, dict):
        raise ConfigError("Config root must be a JSON object", {"path": str(path)})
    return data


def load_run_config(path: Optional[str] = None, overrides: Iterable[str] = ()) -> RunConfig:
    """
    Load, override and validate a run configuration.

    Args:
        path: JSON config file; None uses the shipped default when present
        overrides: Strings of the form 'section.key=value'

    Returns:
        Validated RunConfig
    """
    if path is not None:
        data = _read_json(Path(path))
    elif Path(settings.default_config).exists():
        data = _read_json(Path(settings.default_config))
    else:
        data = {}

    data = apply_overrides(data, overrides)

    try:
        config = RunConfig.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        key = ".".join(str(part) for part in first["loc"])
        raise ConfigError(
            f"Invalid config key '{key}': {first['msg']}",
            {"key": key, "errors": [
                {"key": ".".join(str(p) for p in err["loc"]), "msg": err["msg"]}
                for err in e.errors()
            ]}
        )

    logger.debug("Loaded run config", extra={"path": path, "overrides": list(overrides or [])})
    return config
