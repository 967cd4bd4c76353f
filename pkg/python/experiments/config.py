"""Experiment configuration and its flat key-value file format.

Grammar (one entry per line, UTF-8):

    line    := blank | comment | entry
    comment := "#" any-text
    entry   := key "=" value
    key     := field-name | ("hp_central" | "hp_local") "." field-name

Whitespace around keys and values is ignored. Booleans are ``true``/``false``,
floats use Python's shortest round-trip ``repr``. Serialization writes every
field in declaration order, so serialize -> parse -> serialize is byte-identical.
"""

import dataclasses
import hashlib
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from dotenv import load_dotenv

from python.agents.hammer import RunMode
from python.agents.ppo import PpoHyperparams

OUTPUT_ROOT_ENV = "HAMMER_OUTPUT_ROOT"
DEFAULT_OUTPUT_ROOT = "runs"
ENV_KINDS = ("nav", "nav_continuous")
HP_SECTIONS = ("hp_central", "hp_local")
HEADER = "# hammer experiment config\n"


def default_output_root() -> str:
    """Output root from ``HAMMER_OUTPUT_ROOT`` (environment or .env), else ``runs``."""
    load_dotenv()
    return os.getenv(OUTPUT_ROOT_ENV, DEFAULT_OUTPUT_ROOT)


def default_message_length(n_agents: int) -> int:
    """4 for three agents, 8 from five agents upward."""
    return 8 if n_agents >= 5 else 4


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce one training run."""

    mode: RunMode = RunMode.HAMMER
    env: str = "nav"
    n_agents: int = 3
    message_length: int = 0
    total_episodes: int = 30000
    seed: int = 1
    hidden_size: int = 64
    episode_length: int = 25
    collision_penalty: float = 1.0
    output_dir: str = field(default_factory=default_output_root)
    checkpoint_every: int = 1000
    eval_stochastic: bool = False
    eval_episodes: int = 0
    final_window: int = 500
    log_every: int = 100
    record_wall_time: bool = False
    hp_central: PpoHyperparams = field(default_factory=PpoHyperparams.central)
    hp_local: PpoHyperparams = field(default_factory=PpoHyperparams.local)

    def __post_init__(self) -> None:
        self.mode = RunMode(self.mode)
        if self.message_length <= 0:
            self.message_length = default_message_length(self.n_agents)
        self.validate()

    def validate(self) -> None:
        if self.env not in ENV_KINDS:
            raise ValueError(f"env must be one of {ENV_KINDS}, got {self.env!r}")
        if self.n_agents <= 0:
            raise ValueError("n_agents must be positive")
        if self.total_episodes < 0:
            raise ValueError("total_episodes must be non-negative")
        if self.hidden_size <= 0 or self.episode_length <= 0:
            raise ValueError("hidden_size and episode_length must be positive")
        if self.final_window <= 0:
            raise ValueError("final_window must be positive")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    @property
    def continuous(self) -> bool:
        return self.env == "nav_continuous"

    @property
    def cell_name(self) -> str:
        """Run name without the seed; runs sharing it form one aggregate row."""
        return f"{self.mode}_{self.env}_n{self.n_agents}_m{self.message_length}"

    @property
    def run_name(self) -> str:
        return f"{self.cell_name}_s{self.seed}"

    @property
    def run_dir(self) -> Path:
        return Path(self.output_dir) / self.run_name

    def fingerprint(self) -> str:
        """Hash of every setting except seed and output location (identifies a sweep cell)."""
        lines = [
            line
            for line in serialize_config(self).splitlines()
            if not line.startswith(("seed ", "output_dir ", "#"))
        ]
        return hashlib.sha256("\n".join(lines).encode()).hexdigest()[:12]

    def with_overrides(self, **overrides: Any) -> "ExperimentConfig":
        """Copy with top-level fields or ``hp_central__lr`` style nested fields replaced."""
        nested: dict[str, dict[str, Any]] = {section: {} for section in HP_SECTIONS}
        top: dict[str, Any] = {}
        for key, value in overrides.items():
            section, _, name = key.partition("__")
            if name and section in HP_SECTIONS:
                nested[section][name] = value
            else:
                top[key] = value
        for section, values in nested.items():
            if values:
                top[section] = dataclasses.replace(getattr(self, section), **values)
        if "n_agents" in top and "message_length" not in top:
            top["message_length"] = 0
        return dataclasses.replace(self, **top)


def _format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_value(raw: str, target: Any, key: str) -> Any:
    if target is bool:
        if raw not in ("true", "false"):
            raise ValueError(f"{key}: expected true/false, got {raw!r}")
        return raw == "true"
    if target is int:
        return int(raw)
    if target is float:
        return float(raw)
    if target is RunMode:
        return RunMode(raw)
    return raw


def serialize_config(config: ExperimentConfig) -> str:
    lines = [HEADER.rstrip("\n")]
    for f in dataclasses.fields(config):
        value = getattr(config, f.name)
        if f.name in HP_SECTIONS:
            for hp_field in dataclasses.fields(value):
                lines.append(
                    f"{f.name}.{hp_field.name} = {_format_value(getattr(value, hp_field.name))}"
                )
        else:
            lines.append(f"{f.name} = {_format_value(value)}")
    return "\n".join(lines) + "\n"


def parse_config(text: str) -> ExperimentConfig:
    """Parse the flat key-value format; unspecified keys keep their defaults.

    Raises:
        ValueError: On malformed lines, unknown keys or bad values (with line number)
    """
    top_types = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}
    hp_types = {f.name: f.type for f in dataclasses.fields(PpoHyperparams)}
    top: dict[str, Any] = {}
    nested: dict[str, dict[str, Any]] = {section: {} for section in HP_SECTIONS}

    for line_no, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, raw = stripped.partition("=")
        key, raw = key.strip(), raw.strip()
        if not sep or not key:
            raise ValueError(f"Line {line_no}: expected 'key = value', got {line!r}")
        try:
            section, dot, name = key.partition(".")
            if dot:
                if section not in HP_SECTIONS or name not in hp_types:
                    raise ValueError(f"unknown key {key!r}")
                nested[section][name] = _parse_value(raw, hp_types[name], key)
            else:
                if key not in top_types or key in HP_SECTIONS:
                    raise ValueError(f"unknown key {key!r}")
                top[key] = _parse_value(raw, top_types[key], key)
        except ValueError as e:
            raise ValueError(f"Line {line_no}: {e}") from e

    defaults = ExperimentConfig.__dataclass_fields__
    for section, values in nested.items():
        base = defaults[section].default_factory()  # type: ignore[misc]
        top[section] = dataclasses.replace(base, **values)
    return ExperimentConfig(**top)


def load_config(path: Path) -> ExperimentConfig:
    if not path.exists():
        raise FileNotFoundError(f"Config file not found: {path}")
    return parse_config(path.read_text())


def save_config(config: ExperimentConfig, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(serialize_config(config))
