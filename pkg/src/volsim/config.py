"""Experiment configuration: one JSON document with nested sections
(scenario / channel / weights / rl / pso).

Parsing is strict: unknown sections or keys are rejected by name, missing
keys take the documented defaults (200 vehicles, 15 RSUs, 300 m coverage,
1-10 MB tasks at 500-1000 cycles/bit), and every value is validated with
the offending field named. parse -> serialize -> parse round-trips.
"""

import dataclasses
import json
from dataclasses import dataclass

from volsim.domain import ChannelParams, CostWeights
from volsim.errors import ConfigParseError, InvalidConfigError
from volsim.mobility import ScenarioConfig
from volsim.pso import PsoConfig
from volsim.rl import RlConfig

_TUPLE_FIELDS = {"area", "speed_range", "task_size_range", "intensity_range",
                 "deadline_range", "bounds"}

_SECTIONS = {
    "scenario": ScenarioConfig,
    "channel": ChannelParams,
    "weights": CostWeights,
    "rl": RlConfig,
    "pso": PsoConfig,
}


@dataclass(frozen=True)
class AppConfig:
    scenario: ScenarioConfig
    channel: ChannelParams
    weights: CostWeights
    rl: RlConfig
    pso: PsoConfig

    def validate(self):
        self.scenario.validate()
        try:
            # frozen dataclasses validate in __post_init__; re-run for clarity
            ChannelParams(**dataclasses.asdict(self.channel))
            CostWeights(**dataclasses.asdict(self.weights))
        except ValueError as exc:
            raise InvalidConfigError(str(exc)) from exc
        self.rl.validate()
        self.pso.validate()
        return self


def default_config():
    return AppConfig(scenario=ScenarioConfig(), channel=ChannelParams(),
                     weights=CostWeights(), rl=RlConfig(), pso=PsoConfig())


def _build_section(name, cls, data):
    if not isinstance(data, dict):
        raise ConfigParseError(f"section '{name}' must be an object")
    known = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in known:
            raise ConfigParseError(f"unknown key '{name}.{key}'")
        if key in _TUPLE_FIELDS and isinstance(value, list):
            value = tuple(value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise InvalidConfigError(f"section '{name}': {exc}") from exc


def parse_dict(data):
    """Strict-parse a config mapping into an AppConfig (validated)."""
    if not isinstance(data, dict):
        raise ConfigParseError("config root must be a JSON object")
    for key in data:
        if key not in _SECTIONS:
            raise ConfigParseError(f"unknown section '{key}'")
    sections = {}
    for name, cls in _SECTIONS.items():
        sections[name] = _build_section(name, cls, data.get(name, {}))
    return AppConfig(**sections).validate()


def parse_config(path):
    """Parse and validate a JSON config file."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigParseError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigParseError(f"invalid JSON in {path}: line {exc.lineno}: {exc.msg}") from exc
    return parse_dict(data)


def config_to_dict(app):
    """Back to a plain JSON-ready mapping (tuples become lists)."""
    out = {}
    for name in _SECTIONS:
        section = dataclasses.asdict(getattr(app, name))
        for key, value in section.items():
            if isinstance(value, tuple):
                section[key] = list(value)
        out[name] = section
    return out


def save_config(app, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config_to_dict(app), fh, indent=2, sort_keys=True)
        fh.write("\n")
