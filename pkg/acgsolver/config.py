"""
Configuration management for the ACG solver
Supports JSON/YAML config files, environment variables and solver profiles
"""

import json
import logging
import os
from dataclasses import asdict, dataclass, fields
from enum import Enum
from typing import Any, Dict, Optional, Union

import yaml

from .error_handling import ConfigError

logger = logging.getLogger(__name__)


class Variant(Enum):
    """Branch-and-price variants"""
    ACG = "acg"      # parallel exact
    ACG1 = "acg1"    # single thread
    ACGH = "acgh"    # heuristic pricing, certificates masked
    ACGR = "acgr"    # root only, no branching


class SolverProfile(Enum):
    """Predefined time-limit profiles"""
    STANDARD = "standard"
    QUICK = "quick"
    THOROUGH = "thorough"


@dataclass
class SolverConfig:
    """Settings of one branch-and-price run"""

    # Time limits (milliseconds)
    t_acg_ms: int = 500
    t_atomic_ms: int = 60
    global_limit_ms: int = 120_000

    # Branching
    gamma_ratio: float = 0.2
    variant: str = Variant.ACG.value

    # Parallelism
    workers: int = 4
    pricing_workers: int = 1

    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self):
        if isinstance(self.variant, Variant):
            self.variant = self.variant.value
        try:
            Variant(self.variant)
        except ValueError:
            raise ConfigError(f"unknown variant {self.variant!r}") from None
        if not 0.0 < float(self.gamma_ratio) <= 1.0:
            raise ConfigError(f"gamma_ratio must lie in (0, 1], got {self.gamma_ratio}")
        for name in ("t_acg_ms", "t_atomic_ms", "global_limit_ms"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.workers < 1 or self.pricing_workers < 1:
            raise ConfigError("worker counts must be at least 1")

    @property
    def variant_enum(self) -> Variant:
        return Variant(self.variant)

    @property
    def effective_workers(self) -> int:
        return self.workers if self.variant_enum == Variant.ACG else 1

    @property
    def heuristic(self) -> bool:
        return self.variant_enum == Variant.ACGH

    @property
    def root_only(self) -> bool:
        return self.variant_enum == Variant.ACGR


class ConfigManager:
    """Manages configuration loading, saving and profiles"""

    DEFAULT_CONFIG_FILE = "acgsolver_config.json"

    ENV_MAPPING = {
        'ACG_T_ACG_MS': ('t_acg_ms', int),
        'ACG_T_ATOMIC_MS': ('t_atomic_ms', int),
        'ACG_LIMIT_MS': ('global_limit_ms', int),
        'ACG_GAMMA': ('gamma_ratio', float),
        'ACG_VARIANT': ('variant', str),
        'ACG_WORKERS': ('workers', int),
        'ACG_SEED': ('seed', int),
    }

    def __init__(self, config_file: Optional[str] = None):
        self.config_file = config_file or self.DEFAULT_CONFIG_FILE
        self.config = SolverConfig()
        self._load_config()

    def _load_config(self):
        """Load configuration from file and environment variables"""
        if os.path.exists(self.config_file):
            try:
                with open(self.config_file, 'r', encoding='utf-8') as f:
                    if self.config_file.endswith(('.yaml', '.yml')):
                        data = yaml.safe_load(f) or {}
                    else:
                        data = json.load(f)
                self.update(data)
            except ConfigError:
                raise
            except Exception as e:
                logger.warning("Could not load config file %s: %s", self.config_file, e)

        self._load_env_variables()
        self.config.validate()

    def _load_env_variables(self):
        for env_var, (attr, convert) in self.ENV_MAPPING.items():
            value = os.getenv(env_var)
            if value is None:
                continue
            try:
                setattr(self.config, attr, convert(value))
            except ValueError:
                raise ConfigError(f"{env_var}={value!r} is not a valid {convert.__name__}") from None

    def update(self, values: Dict[str, Any]):
        """Apply overrides, ignoring unknown keys and None values"""
        known = {f.name for f in fields(SolverConfig)}
        for key, value in values.items():
            if value is None:
                continue
            if key in known:
                setattr(self.config, key, value)
            else:
                logger.debug("Ignoring unknown config key %s", key)
        self.config.validate()

    def save_config(self, config_file: Optional[str] = None):
        """Save current configuration to file"""
        file_path = config_file or self.config_file
        config_dict = asdict(self.config)
        with open(file_path, 'w', encoding='utf-8') as f:
            if file_path.endswith(('.yaml', '.yml')):
                yaml.dump(config_dict, f, default_flow_style=False, indent=2)
            else:
                json.dump(config_dict, f, indent=2)
        logger.info("Configuration saved to %s", file_path)

    def apply_profile(self, profile: Union[str, SolverProfile]):
        """Apply a predefined time-limit profile"""
        if isinstance(profile, str):
            try:
                profile = SolverProfile(profile)
            except ValueError:
                raise ConfigError(f"unknown profile {profile!r}") from None

        if profile == SolverProfile.STANDARD:
            self.config.t_acg_ms = 500
            self.config.t_atomic_ms = 60
            self.config.global_limit_ms = 120_000
            self.config.gamma_ratio = 0.2

        elif profile == SolverProfile.QUICK:
            self.config.t_acg_ms = 100
            self.config.t_atomic_ms = 20
            self.config.global_limit_ms = 10_000

        elif profile == SolverProfile.THOROUGH:
            self.config.t_acg_ms = 2000
            self.config.t_atomic_ms = 500
            self.config.global_limit_ms = 600_000

        self.config.validate()


def get_config_manager(config_file: Optional[str] = None, profile: Optional[str] = None) -> ConfigManager:
    """Get a configured ConfigManager instance"""
    manager = ConfigManager(config_file)
    if profile:
        manager.apply_profile(profile)
    return manager
