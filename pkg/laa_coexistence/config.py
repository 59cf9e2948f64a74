"""Run configuration for the coexistence tools.

A run configuration is a flat text file of ``key = value`` (or
``key: value``) lines with ``#`` comments. Missing keys take the LBT
validation scenario defaults.
"""

import math
import os
import re
from dataclasses import dataclass, field, fields, replace
from typing import Any, Dict, List, Optional

import yaml

from laa_coexistence.distributions import Family
from laa_coexistence.model import (
    CoexistenceError,
    ModelParams,
    ParameterError,
    SenseOffRule,
    ThresholdMode,
)
from laa_coexistence.simulator import DISTRIBUTION_ROLES, FastStartMode, SimConfig


class ConfigError(CoexistenceError):
    """Raised when a run configuration cannot be read or is invalid."""
    pass


# file keys that differ from the attribute names
KEY_ALIASES = {
    "D": "servers",
    "Q": "queue_size",
    "Q_theta": "threshold",
    "lbt": "lbt_enabled",
    "buffering": "buffering_enabled",
}

DISTRIBUTION_FIELDS = ("family", "cv")

_ASSIGNMENT = re.compile(r"^(\s*)([A-Za-z_][\w.]*)\s*=\s*(.*)$")


@dataclass
class RunConfig:
    """Configuration data structure for solver and simulator runs.

    Attributes:
        scenario: Label printed in the first CSV column
        lambda_laa: LAA packet arrival rate (1/s)
        lambda_wifi: Wi-Fi packet arrival rate (1/s)
        mu_laa: LAA service rate (1/s)
        mu_wifi: Wi-Fi service rate (1/s)
        mu_sense: Sensing completion rate (1/s)
        mu_on: Channel occupancy completion rate (1/s)
        mu_off: OFF period completion rate (1/s)
        fast_start_multiplier: Fast-start rate as a multiple of mu_on
        servers: Unlicensed servers D (file key ``D``)
        queue_size: LAA buffer size Q (file key ``Q``)
        threshold: Buffer threshold Q_theta (file key ``Q_theta``)
        lbt_enabled: Listen-before-talk controller on (file key ``lbt``)
        buffering_enabled: LAA buffering on (file key ``buffering``)
        threshold_mode: 'non_strict' or 'strict'
        sense_off_rule: 'wifi_only' or 'busy'
        sessions: Simulated arrivals per replication
        seed: Simulation seed
        replications: Simulation replications
        warmup_fraction: Fraction of sessions discarded as warmup
        fast_start_mode: 'exponential' or 'immediate'
        distributions: Per-role overrides, e.g. {'laa_service': {'family': 'lognormal', 'cv': 2.0}}
    """
    scenario: str = "custom"
    lambda_laa: float = 25.0
    lambda_wifi: float = 5.0
    mu_laa: float = 25.0
    mu_wifi: float = 40.0
    mu_sense: float = 1.0
    mu_on: float = 0.1
    mu_off: float = 0.1
    fast_start_multiplier: float = 10.0
    servers: int = 1
    queue_size: int = 2
    threshold: int = 2
    lbt_enabled: bool = True
    buffering_enabled: bool = True
    threshold_mode: str = "non_strict"
    sense_off_rule: str = "wifi_only"
    sessions: int = 1_000_000
    seed: int = 0
    replications: int = 1
    warmup_fraction: float = 0.05
    fast_start_mode: str = "exponential"
    distributions: Dict[str, Dict[str, Any]] = field(default_factory=dict)

    def validate(self) -> List[str]:
        """Validate configuration and return list of error messages.

        Returns:
            List of error messages. Empty list if configuration is valid.
        """
        errors = []

        if self.threshold_mode not in [m.value for m in ThresholdMode]:
            errors.append("threshold_mode must be 'strict' or 'non_strict'")
        if self.sense_off_rule not in [r.value for r in SenseOffRule]:
            errors.append("sense_off_rule must be 'wifi_only' or 'busy'")
        if self.fast_start_mode not in [m.value for m in FastStartMode]:
            errors.append("fast_start_mode must be 'exponential' or 'immediate'")

        for role, override in self.distributions.items():
            family = override.get("family", Family.EXPONENTIAL.value)
            if family not in [f.value for f in Family]:
                errors.append(f"{role}.family must be one of exponential, deterministic, lognormal")
            elif family == Family.LOGNORMAL.value and override.get("cv") is None:
                errors.append(f"{role}.cv is required for a lognormal distribution")

        if errors:
            return errors

        try:
            sim_config = to_sim_config(self)
        except ParameterError as e:
            return e.errors
        return sim_config.validate()


def _coerce_float(key: str, value: Any) -> float:
    if not isinstance(value, str):
        raise ConfigError(f"{key} must be a number, got {value!r}")
    try:
        result = float(value)
    except ValueError:
        raise ConfigError(f"{key} must be a number, got {value!r}")
    if not math.isfinite(result):
        raise ConfigError(f"{key} must be finite, got {value!r}")
    return result


def _coerce_int(key: str, value: Any) -> int:
    # exact for integers beyond float precision, e.g. large seeds
    if isinstance(value, str):
        try:
            return int(value.strip())
        except ValueError:
            pass
    number = _coerce_float(key, value)
    if not number.is_integer():
        raise ConfigError(f"{key} must be an integer, got {value!r}")
    return int(number)


def _coerce_bool(key: str, value: Any) -> bool:
    if isinstance(value, str) and value.strip().lower() in ("true", "false"):
        return value.strip().lower() == "true"
    raise ConfigError(f"{key} must be true or false, got {value!r}")


def _coerce_str(key: str, value: Any) -> str:
    if isinstance(value, (dict, list)):
        raise ConfigError(f"{key} must be a single value")
    return str(value).strip().lower()


_COERCERS = {float: _coerce_float, int: _coerce_int, bool: _coerce_bool, str: _coerce_str}


def _normalize(text: str) -> str:
    """Rewrite ``key = value`` lines as YAML mappings."""
    lines = []
    for line in text.splitlines():
        match = _ASSIGNMENT.match(line)
        lines.append(f"{match.group(1)}{match.group(2)}: {match.group(3)}" if match else line)
    return "\n".join(lines) + "\n"


def parse_config(text: str) -> RunConfig:
    """Parse run-configuration text into a RunConfig.

    Args:
        text: File contents

    Returns:
        RunConfig with defaults for missing keys

    Raises:
        ConfigError: On malformed text, unknown keys or mistyped values

    Example:
        >>> parse_config("lambda_laa = 50\\nlbt = false\\n").lbt_enabled
        False
    """
    try:
        # scalars stay text; each field is coerced explicitly below
        data = yaml.load(_normalize(text), Loader=yaml.BaseLoader)
    except yaml.YAMLError as e:
        raise ConfigError(f"Error parsing configuration file: {e}")

    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("configuration must consist of key = value lines")

    types = {f.name: f.type for f in fields(RunConfig) if f.name != "distributions"}
    values: Dict[str, Any] = {}
    distributions: Dict[str, Dict[str, Any]] = {}
    unknown = []

    for raw_key, value in data.items():
        key = str(raw_key)
        if "." in key:
            role, _, attribute = key.partition(".")
            if role not in DISTRIBUTION_ROLES or attribute not in DISTRIBUTION_FIELDS:
                unknown.append(key)
                continue
            coerced = _coerce_str(key, value) if attribute == "family" else _coerce_float(key, value)
            distributions.setdefault(role, {})[attribute] = coerced
            continue

        # aliased attributes are only reachable through their file key
        name = KEY_ALIASES.get(key, key)
        if name not in types or (key == name and name in KEY_ALIASES.values()):
            unknown.append(key)
            continue
        if name == "scenario":
            values[name] = str(value).strip()
        else:
            values[name] = _COERCERS[types[name]](key, value)

    if unknown:
        raise ConfigError(f"unknown configuration keys: {', '.join(sorted(unknown))}")

    return RunConfig(distributions=distributions, **values)


def load_config(config_path: str) -> Optional[RunConfig]:
    """Load a run configuration file.

    Args:
        config_path: Path to the configuration file

    Returns:
        RunConfig if the file exists, None if it doesn't

    Raises:
        ConfigError: If the file cannot be read or parsed
    """
    if not os.path.exists(config_path):
        return None

    try:
        with open(config_path, 'r') as f:
            text = f.read()
    except OSError as e:
        raise ConfigError(f"Cannot read configuration file {config_path}: {e}")

    return parse_config(text)


DEFAULT_CONFIG = """# LAA / Wi-Fi coexistence run configuration
# Lines are `key = value`; missing keys take the values shown here.

# Row label for CSV output
scenario = table1

# Arrival rates (packets per second)
lambda_laa = 25
lambda_wifi = 5

# Service and phase rates (1/s)
mu_laa = 25
mu_wifi = 40
mu_sense = 1
mu_on = 0.1
mu_off = 0.1

# Fast-start rate is fast_start_multiplier * mu_on
fast_start_multiplier = 10

# Unlicensed servers, LAA buffer size and buffer threshold
D = 1
Q = 2
Q_theta = 2

# Model variant
lbt = true
buffering = true
threshold_mode = non_strict     # non_strict (z >= Q_theta) or strict (z > Q_theta)
sense_off_rule = wifi_only      # wifi_only or busy

# Simulation
sessions = 1000000
seed = 0
replications = 1
warmup_fraction = 0.05
fast_start_mode = exponential   # exponential or immediate

# Distribution overrides; means always follow the rates above.
# Roles: laa_interarrival, wifi_interarrival, laa_service, wifi_service,
#        sense_duration, on_duration, off_duration
# laa_service.family = lognormal
# laa_service.cv = 2.0
"""


def create_default_config(config_path: str = "laa_config.conf") -> None:
    """Write a commented configuration file with the LBT validation defaults.

    Args:
        config_path: Path where the config file should be created

    Raises:
        ConfigError: If the file cannot be created
    """
    try:
        with open(config_path, 'w') as f:
            f.write(DEFAULT_CONFIG)
    except OSError as e:
        raise ConfigError(f"Cannot create configuration file at {config_path}: {e}")


def merge_config(file_config: Optional[RunConfig], cli_args) -> RunConfig:
    """Merge file configuration with CLI arguments.

    CLI arguments take precedence; None values do not override the file.

    Args:
        file_config: Configuration loaded from file (can be None)
        cli_args: Parsed command-line arguments (argparse.Namespace or dict)

    Returns:
        Merged RunConfig
    """
    config = RunConfig() if file_config is None else replace(
        file_config, distributions={k: dict(v) for k, v in file_config.distributions.items()}
    )

    def get_arg(name, default=None):
        if isinstance(cli_args, dict):
            return cli_args.get(name, default)
        return getattr(cli_args, name, default)

    for name in ("seed", "sessions", "replications"):
        value = get_arg(name)
        if value is not None:
            setattr(config, name, value)

    return config


def to_model_params(config: RunConfig) -> ModelParams:
    """Build ModelParams from a run configuration.

    Raises:
        ParameterError: If the parameters are invalid
    """
    try:
        threshold_mode = ThresholdMode(config.threshold_mode)
        sense_off_rule = SenseOffRule(config.sense_off_rule)
    except ValueError as e:
        raise ParameterError([str(e)])

    return ModelParams(
        lambda_laa=config.lambda_laa,
        lambda_wifi=config.lambda_wifi,
        mu_laa=config.mu_laa,
        mu_wifi=config.mu_wifi,
        mu_sense=config.mu_sense,
        mu_on=config.mu_on,
        mu_off=config.mu_off,
        fast_start_multiplier=config.fast_start_multiplier,
        servers=config.servers,
        queue_size=config.queue_size,
        threshold=config.threshold,
        lbt_enabled=config.lbt_enabled,
        buffering_enabled=config.buffering_enabled,
        threshold_mode=threshold_mode,
        sense_off_rule=sense_off_rule,
    )


def to_sim_config(config: RunConfig) -> SimConfig:
    """Build SimConfig from a run configuration.

    Distribution overrides keep the mean implied by the corresponding rate.

    Raises:
        ParameterError: If the parameters are invalid
    """
    params = to_model_params(config)
    try:
        fast_start_mode = FastStartMode(config.fast_start_mode)
    except ValueError as e:
        raise ParameterError([str(e)])

    overrides = {}
    for role, override in config.distributions.items():
        base = SimConfig(params=params).resolved_distribution(role)
        if base is None:
            continue
        family = Family(override.get("family", Family.EXPONENTIAL.value))
        overrides[role] = base.with_family(family, override.get("cv"))

    return SimConfig(
        params=params,
        sessions=config.sessions,
        seed=config.seed,
        replications=config.replications,
        warmup_fraction=config.warmup_fraction,
        fast_start_mode=fast_start_mode,
        **overrides,
    )
