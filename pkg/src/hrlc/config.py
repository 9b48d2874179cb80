"""Flat key = value run configuration (INI sections, one per module).

Unknown sections or keys are rejected rather than ignored, so typos fail
loudly with a config error. ``snapshot``/``from_snapshot`` give a lossless
flat-dict form that run manifests embed and tests round-trip.
"""

import configparser
from dataclasses import dataclass, field, fields

from .errors import ConfigError, RangeError
from .metrics import MATCH_MODES
from .pipeline import PipelineConfig
from .synth import LAYOUTS


@dataclass
class SynthSettings:
    n_frames: int = 8
    height: int = 64
    width: int = 64
    feature_dim: int = 256
    n_generators: int = 3
    layout: str = "stripes"
    noise_sigma: float = 0.0
    noise_rel: float = -1.0  # >= 0 overrides noise_sigma as a fraction of min generator distance
    seed: int = 0


@dataclass
class RunConfig:
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    synth: SynthSettings = field(default_factory=SynthSettings)
    target_h: int = 0  # refine target; 0 = keep input dims
    target_w: int = 0
    smooth_radius: int = 2
    smooth_passes: int = 1
    match_mode: str = "majority"
    contact_sheet: bool = False

    def validate(self) -> "RunConfig":
        try:
            self.pipeline.validate()
        except RangeError as exc:
            raise ConfigError(str(exc)) from exc
        if self.match_mode not in MATCH_MODES:
            raise ConfigError(f"match_mode must be one of {MATCH_MODES}")
        if self.synth.layout not in LAYOUTS:
            raise ConfigError(f"synth layout must be one of {LAYOUTS}")
        if min(self.synth.n_frames, self.synth.height, self.synth.width,
               self.synth.feature_dim, self.synth.n_generators) < 1:
            raise ConfigError("synth dimensions must all be positive")
        if self.target_h < 0 or self.target_w < 0:
            raise ConfigError("refine target dims must be non-negative")
        if self.smooth_radius < 0 or self.smooth_passes < 0:
            raise ConfigError("smoothing radius/passes must be non-negative")
        return self


_BOOL_VALUES = {"true": True, "yes": True, "1": True,
                "false": False, "no": False, "0": False}


def _convert(section, key, raw, kind):
    try:
        if kind is bool:
            return _BOOL_VALUES[raw.strip().lower()]
        return kind(raw)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"[{section}] {key} = {raw!r}: not a valid {kind.__name__}") from exc


def _section_targets(cfg: RunConfig):
    return {
        "pipeline": cfg.pipeline,
        "synth": cfg.synth,
        "refine": cfg,
        "metrics": cfg,
        "render": cfg,
    }


_SECTION_KEYS = {
    "pipeline": [f.name for f in fields(PipelineConfig)],
    "synth": [f.name for f in fields(SynthSettings)],
    "refine": ["target_h", "target_w", "smooth_radius", "smooth_passes"],
    "metrics": ["match_mode"],
    "render": ["contact_sheet"],
}


def load_config(path=None) -> RunConfig:
    """Defaults, overlaid with ``path`` when given."""
    cfg = RunConfig()
    if path is None:
        return cfg.validate()

    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc

    targets = _section_targets(cfg)
    for section in parser.sections():
        if section not in _SECTION_KEYS:
            raise ConfigError(f"unknown config section [{section}]")
        target = targets[section]
        for key, raw in parser.items(section):
            if key not in _SECTION_KEYS[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            kind = type(getattr(target, key))
            setattr(target, key, _convert(section, key, raw, kind))
    return cfg.validate()


def snapshot(cfg: RunConfig) -> dict:
    """Flat 'section.key' -> string form of every effective value."""
    out = {}
    targets = _section_targets(cfg)
    for section, keys in _SECTION_KEYS.items():
        target = targets[section]
        for key in keys:
            value = getattr(target, key)
            out[f"{section}.{key}"] = repr(value) if isinstance(value, float) else str(value)
    return out


def from_snapshot(flat: dict) -> RunConfig:
    """Inverse of :func:`snapshot`."""
    cfg = RunConfig()
    targets = _section_targets(cfg)
    for dotted, raw in flat.items():
        section, _, key = dotted.partition(".")
        if section not in _SECTION_KEYS or key not in _SECTION_KEYS[section]:
            raise ConfigError(f"unknown snapshot entry {dotted!r}")
        target = targets[section]
        kind = type(getattr(target, key))
        setattr(target, key, _convert(section, key, raw, kind))
    return cfg.validate()
