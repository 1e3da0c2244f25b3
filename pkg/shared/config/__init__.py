"""Configuration package"""
from .settings import settings, Settings, RunConfig, load_run_config, apply_overrides

__all__ = ["settings", "Settings", "RunConfig", "load_run_config", "apply_overrides"]
