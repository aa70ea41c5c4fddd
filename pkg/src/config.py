"""Configuration management for batching experiments."""

import dataclasses
import hashlib
import json
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, fields
from os import environ
from pathlib import Path
from typing import Any, Mapping, Optional

from dotenv import load_dotenv

from src.demand import DemandParams
from src.errors import ConfigurationError
from src.ordering import SCHEDULE_KINDS, ReviewConfig, ScheduleKind

FORMATS = ("text", "json", "csv")

# Fields that only shape output or execution; they never change a number.
EXECUTION_FIELDS = ("workers", "output_dir", "format", "verbose")

PRESETS: dict[str, dict[str, Any]] = {
    # two retailers, two-period review cycle, demand mean 10 and variance 1
    "lpw-section1": {"N": 2, "R": 2, "m": 10.0, "sigma2": 1.0, "schedule": "correlated"},
}
# older name, kept so existing scripts still resolve
PRESETS["lpw-headline"] = PRESETS["lpw-section1"]

ENV_VARS = {
    "seed": "BULLWHIP_SEED",
    "replications": "BULLWHIP_REPLICATIONS",
    "cycles": "BULLWHIP_CYCLES",
    "workers": "BULLWHIP_WORKERS",
    "output_dir": "BULLWHIP_OUTPUT_DIR",
    "tolerance": "BULLWHIP_TOLERANCE",
}


@dataclass
class ExperimentConfig:
    """One Monte Carlo experiment: demand law, batching geometry, schedule, replications."""

    # Batching geometry
    N: int = 2  # retailers
    R: int = 2  # periods per review cycle
    cycles: int = 100_000  # review cycles M per replication

    # Demand law
    m: float = 10.0
    sigma2: float = 1.0
    distribution: str = "normal"  # normal | gamma | uniform
    phi: float = 0.0  # AR(1) coefficient, 0 = i.i.d.

    # Ordering and replication
    schedule: str = "correlated"  # correlated | balanced | random | lpw_binomial
    replications: int = 10
    seed: int = 42
    tolerance: float = 1e-9  # Scenario A band

    # Execution and output
    workers: int = 1
    output_dir: str = ""
    format: str = "text"  # text | json | csv
    verbose: bool = False

    @property
    def demand_params(self) -> DemandParams:
        return DemandParams(mean=self.m, sigma2=self.sigma2, distribution=self.distribution, phi=self.phi)

    @property
    def review(self) -> ReviewConfig:
        return ReviewConfig(R=self.R, N=self.N, M=self.cycles)

    @property
    def schedule_kind(self) -> ScheduleKind:
        return ScheduleKind(self.schedule)

    @property
    def total_periods(self) -> int:
        return self.R * self.cycles

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))

    @classmethod
    def from_env(cls) -> "ExperimentConfig":
        """Documented defaults, overridden by BULLWHIP_* environment variables."""
        load_dotenv()

        values = {}
        for name, var in ENV_VARS.items():
            raw = environ.get(var)
            if raw is not None and raw != "":
                values[name] = raw
        return cls.from_mapping(values, source="environment")

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any], source: str = "config") -> "ExperimentConfig":
        return cls().updated(values, source=source)

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        return cls.from_mapping(read_config_file(path), source=str(path))

    @classmethod
    def resolve(
        cls,
        config_file: Optional[str | Path] = None,
        preset: Optional[str] = None,
        overrides: Optional[Mapping[str, Any]] = None,
    ) -> "ExperimentConfig":
        """Merge layers: default < environment < config file < preset < CLI flags.

        None-valued overrides are treated as "flag not given".
        """
        config = cls.from_env()
        if config_file:
            config = config.updated(read_config_file(config_file), source=str(config_file))
        if preset:
            if preset not in PRESETS:
                raise ConfigurationError(
                    f"unknown preset {preset!r} (available: {', '.join(sorted(PRESETS))})",
                    fields=("preset",),
                )
            config = config.updated(PRESETS[preset], source=f"preset {preset}")
        if overrides:
            given = {k: v for k, v in overrides.items() if v is not None}
            config = config.updated(given, source="command line")
        return config

    def updated(self, values: Mapping[str, Any], source: str = "config") -> "ExperimentConfig":
        """Copy with `values` applied; unknown keys and uncoercible values are rejected."""
        known = {f.name: f for f in fields(self)}
        unknown = [key for key in values if key not in known]
        if unknown:
            raise ConfigurationError(
                f"{source}: unknown key(s): {', '.join(unknown)}",
                fields=tuple(unknown),
            )
        changes = {key: _coerce(key, known[key].type, value, source) for key, value in values.items()}
        return dataclasses.replace(self, **changes)

    def validate(self) -> None:
        """Validate every field at once.

        Raises:
            ConfigurationError: naming each offending field.
        """
        problems = []

        for name in ("N", "R", "cycles", "replications", "workers"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                problems.append((name, f"must be an integer >= 1 (got {value!r})"))

        for name, message in self.demand_params.problems():
            problems.append(("m" if name == "mean" else name, message))

        if self.schedule not in SCHEDULE_KINDS:
            problems.append(("schedule", f"must be one of {', '.join(SCHEDULE_KINDS)} (got {self.schedule!r})"))
        if self.format not in FORMATS:
            problems.append(("format", f"must be one of {', '.join(FORMATS)} (got {self.format!r})"))
        if not self.tolerance >= 0:
            problems.append(("tolerance", f"must be >= 0 (got {self.tolerance})"))
        if self.seed < 0:
            problems.append(("seed", f"must be >= 0 (got {self.seed})"))

        if problems:
            raise ConfigurationError(
                "Invalid configuration: " + "; ".join(f"{name} {message}" for name, message in problems),
                fields=tuple(name for name, _ in problems),
            )

    def to_dict(self, include_execution: bool = False) -> dict:
        """Field values; execution-only fields are left out unless requested."""
        data = dataclasses.asdict(self)
        if not include_execution:
            for name in EXECUTION_FIELDS:
                data.pop(name, None)
        return data

    def config_hash(self) -> str:
        """sha256 over the canonical JSON of the result-relevant fields."""
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()


def defaults() -> dict:
    """Documented defaults with the environment variable that overrides each."""
    base = dataclasses.asdict(ExperimentConfig())
    return {
        name: {"default": value, "env": ENV_VARS.get(name, "")}
        for name, value in base.items()
    }


def read_config_file(path: str | Path) -> dict:
    """Parse a TOML or JSON configuration document into a flat mapping."""
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"config file not found: {path}", fields=("config",))
    try:
        if path.suffix.lower() == ".json":
            data = json.loads(path.read_text())
        else:
            data = tomllib.loads(path.read_text())
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as e:
        raise ConfigurationError(f"{path}: could not parse config file: {e}", fields=("config",)) from e
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: config document must be a table/object", fields=("config",))
    return data


def _coerce(name: str, annotation: Any, value: Any, source: str) -> Any:
    """Coerce a config/env/flag value to the field's declared type."""
    kind = annotation if isinstance(annotation, str) else getattr(annotation, "__name__", str(annotation))
    try:
        if kind == "bool":
            if isinstance(value, str):
                return value.strip().lower() in ("1", "true", "yes", "on")
            return bool(value)
        if kind == "int":
            if isinstance(value, bool):
                raise ValueError("booleans are not integers")
            if isinstance(value, float):
                if not value.is_integer():
                    raise ValueError("not an integer")
                return int(value)
            return int(value)
        if kind == "float":
            if isinstance(value, bool):
                raise ValueError("booleans are not numbers")
            return float(value)
        return str(value)
    except (TypeError, ValueError) as e:
        raise ConfigurationError(f"{source}: {name} has invalid value {value!r} ({e})", fields=(name,)) from e
