"""Pipeline configuration: one flat-sectioned key=value file configures
every stage (scenario, rendering, corruption, grids, CFAR, heatmap,
tracker).

The file format is INI-style sections of ``key = value`` lines parsed by
:mod:`configparser`.  Every key maps 1:1 onto a field of the owning
config dataclass, values are converted to that field's type (ints,
floats, booleans, strings, or comma-separated number tuples), unknown
sections or keys are rejected, and each dataclass re-validates its
invariants on construction.  Later sources win: built-in defaults, then
the file, then ``section.key=value`` override strings from CLI flags.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

from radarkit.cfar import CfarConfig
from radarkit.grid import CartesianGridSpec, PolarGridSpec
from radarkit.sim import CorruptionConfig, RenderConfig, ScenarioConfig
from radarkit.targets import HeatmapConfig
from radarkit.tracker import TrackerConfig


class ConfigError(ValueError):
    """Raised for unknown keys, unparsable values, or invariant violations."""


DEFAULT_POLAR_SPEC = PolarGridSpec(
    range_bins=150,
    range_res=0.5,
    range_offset=0.25,
    azimuth_bins=120,
    azimuth_res=0.017453292519943295,  # 1 degree
    azimuth_offset=-1.0471975511965976,  # -60 degrees
    elevation_bins=18,
    elevation_res=0.03490658503988659,  # 2 degrees
    elevation_offset=-0.3141592653589793,  # -18 degrees
    doppler_bins=16,
)

_SECTIONS: dict[str, type] = {
    "scenario": ScenarioConfig,
    "render": RenderConfig,
    "corruption": CorruptionConfig,
    "polar": PolarGridSpec,
    "grid": CartesianGridSpec,
    "cfar": CfarConfig,
    "heatmap": HeatmapConfig,
    "tracker": TrackerConfig,
}

_DEFAULTS: dict[str, Any] = {
    "scenario": ScenarioConfig(),
    "render": RenderConfig(),
    "corruption": CorruptionConfig(),
    "polar": DEFAULT_POLAR_SPEC,
    "grid": CartesianGridSpec(),
    "cfar": CfarConfig(),
    "heatmap": HeatmapConfig(),
    "tracker": TrackerConfig(),
}


@dataclass(frozen=True)
class PipelineConfig:
    """Validated configuration for every pipeline stage."""

    scenario: ScenarioConfig
    render: RenderConfig
    corruption: CorruptionConfig
    polar: PolarGridSpec
    grid: CartesianGridSpec
    cfar: CfarConfig
    heatmap: HeatmapConfig
    tracker: TrackerConfig

    @classmethod
    def default(cls) -> "PipelineConfig":
        return cls(**_DEFAULTS)

    def replace(self, **sections) -> "PipelineConfig":
        return dataclasses.replace(self, **sections)


def _parse_scalar(section: str, key: str, raw: str, template: Any) -> Any:
    raw = raw.strip()
    try:
        if isinstance(template, bool):
            lowered = raw.lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if isinstance(template, int):
            return int(raw)
        if isinstance(template, float):
            return float(raw)
        if isinstance(template, tuple):
            parts = [p for p in raw.replace(",", " ").split() if p]
            if not parts:
                raise ValueError("empty tuple")
            return tuple(float(p) for p in parts)
        if isinstance(template, str):
            return raw
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: {exc}") from None
    raise ConfigError(
        f"[{section}] {key}: unsupported value type {type(template).__name__}"
    )


def _parse_value(section: str, key: str, raw: str, template: Any) -> Any:
    if section == "grid" and key == "voxel_size":
        # Scalar for cubic voxels or a (z, y, x) triple.
        if any(ch in raw for ch in ", "):
            return _parse_scalar(section, key, raw, (0.0,))
        return _parse_scalar(section, key, raw, 0.0)
    return _parse_scalar(section, key, raw, template)


def _field_templates(section: str) -> dict[str, Any]:
    defaults = _DEFAULTS[section]
    return {
        f.name: getattr(defaults, f.name)
        for f in dataclasses.fields(defaults)
    }


def _build_section(section: str, updates: Mapping[str, str]) -> Any:
    templates = _field_templates(section)
    kwargs = dict(templates)
    for key, raw in updates.items():
        if key not in templates:
            raise ConfigError(
                f"unknown key {key!r} in section [{section}]; "
                f"valid keys: {', '.join(sorted(templates))}"
            )
        kwargs[key] = _parse_value(section, key, raw, templates[key])
    try:
        return _SECTIONS[section](**kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"section [{section}]: {exc}") from None


def parse_overrides(pairs: Sequence[str]) -> dict[str, dict[str, str]]:
    """Parse ``section.key=value`` strings into per-section update maps."""
    result: dict[str, dict[str, str]] = {}
    for pair in pairs:
        head, sep, value = pair.partition("=")
        if not sep:
            raise ConfigError(f"override {pair!r} is not of form section.key=value")
        section, dot, key = head.strip().partition(".")
        if not dot or not section or not key:
            raise ConfigError(f"override {pair!r} is not of form section.key=value")
        if section not in _SECTIONS:
            raise ConfigError(
                f"unknown section {section!r}; valid sections: "
                f"{', '.join(sorted(_SECTIONS))}"
            )
        result.setdefault(section, {})[key.strip()] = value
    return result


def load_config(
    path: str | None = None,
    overrides: Sequence[str] = (),
) -> PipelineConfig:
    """Load a pipeline config from an optional file plus override strings."""
    updates: dict[str, dict[str, str]] = {name: {} for name in _SECTIONS}

    if path is not None:
        parser = configparser.ConfigParser(
            interpolation=None,
            inline_comment_prefixes=("#", ";"),
        )
        parser.optionxform = str  # keys are case-sensitive
        try:
            with open(path, "r", encoding="utf-8") as handle:
                parser.read_file(handle)
        except OSError as exc:
            raise FileNotFoundError(f"cannot read config {path!r}: {exc}") from None
        except configparser.Error as exc:
            raise ConfigError(f"malformed config {path!r}: {exc}") from None
        for section in parser.sections():
            if section not in _SECTIONS:
                raise ConfigError(
                    f"unknown section [{section}] in {path!r}; valid sections: "
                    f"{', '.join(sorted(_SECTIONS))}"
                )
            for key, raw in parser.items(section):
                updates[section][key] = raw
        if parser.defaults():
            stray = ", ".join(sorted(parser.defaults()))
            raise ConfigError(f"keys outside any section in {path!r}: {stray}")

    for section, pairs in parse_overrides(overrides).items():
        updates[section].update(pairs)

    sections = {
        name: _build_section(name, update) for name, update in updates.items()
    }
    return PipelineConfig(**sections)


def dump_config(config: PipelineConfig) -> str:
    """Render a config back to the key=value text format it loads from."""
    lines: list[str] = []
    for section in _SECTIONS:
        lines.append(f"[{section}]")
        value = getattr(config, section)
        for f in dataclasses.fields(value):
            item = getattr(value, f.name)
            if isinstance(item, tuple):
                text = ", ".join(repr(v) for v in item)
            else:
                text = str(item)  # bare tokens; repr would quote strings
            lines.append(f"{f.name} = {text}")
        lines.append("")
    return "\n".join(lines)
