"""Evaluation configuration: YAML in, validated frozen objects out.

Angles are written in degrees in the file (keys ending in ``_deg``) and held
in radians in memory.  Every validation problem is reported with the dotted
path of the offending field, for example ``models[2].kind``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import yaml

from .gap import GapConfig
from .metrics import METRIC_IDS, MetricConfig
from .models import MODEL_KINDS, SensorModelConfig, default_reference_rtm, reference_config, standard_models
from .perception import PerceptionConfig
from .scenario import DEFAULT_DT, SCENARIO_NAMES, SensorPose, default_params
from .sensor_models import ReferenceNoise, RtmParams

SCHEMA_VERSION = 1
MAX_SEED = 2**64 - 1


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` holds one message per bad field."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.errors))


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    params: Mapping[str, float] = field(default_factory=dict)
    duration: float | None = None
    dt: float = DEFAULT_DT


@dataclass(frozen=True)
class DdmTraining:
    bins: int = 8
    k_max: int = 20
    duration: float = 40.0


@dataclass(frozen=True)
class EvaluationConfig:
    seed: int
    scenarios: tuple[ScenarioSpec, ...] = tuple(ScenarioSpec(n) for n in SCENARIO_NAMES)
    sensor: SensorPose = field(default_factory=SensorPose)
    models: tuple[SensorModelConfig, ...] = tuple(standard_models())
    reference: SensorModelConfig = field(default_factory=reference_config)
    ddm: DdmTraining = field(default_factory=DdmTraining)
    perception: PerceptionConfig = field(default_factory=PerceptionConfig)
    metrics: MetricConfig | None = None  # None: caps derived from the sensor FOV
    gap: GapConfig = field(default_factory=GapConfig)
    output_dir: str | None = None

    def metric_config(self) -> MetricConfig:
        if self.metrics is not None:
            return self.metrics
        return MetricConfig(empty_cap=self.sensor.range_max, phi_cap=2.0 * self.sensor.fov_azimuth)

    def select(self, scenarios=None, models=None) -> "EvaluationConfig":
        """Restrict to the named scenarios and models (``None`` keeps all)."""
        errors = []
        out = self
        if scenarios is not None:
            known = {s.name: s for s in self.scenarios}
            for n in scenarios:
                if n not in SCENARIO_NAMES:
                    errors.append(f"--scenarios: unknown scenario {n!r}; expected one of {', '.join(SCENARIO_NAMES)}")
            chosen = tuple(known.get(n, ScenarioSpec(n)) for n in scenarios if n in SCENARIO_NAMES)
            out = dataclasses.replace(out, scenarios=chosen)
        if models is not None:
            known = {m.name: m for m in self.models}
            for n in models:
                if n not in known and n != self.reference.name:
                    errors.append(f"--models: unknown model {n!r}; configured: {', '.join(known)}")
            chosen = tuple(known[n] if n in known else self.reference for n in models
                           if n in known or n == self.reference.name)
            out = dataclasses.replace(out, models=chosen)
        if errors:
            raise ConfigError(errors)
        return out


# --------------------------------------------------------------------------
# parsing helpers


def _as_mapping(value, path, errors) -> dict:
    if value is None:
        return {}
    if not isinstance(value, Mapping):
        errors.append(f"{path}: expected a mapping, got {type(value).__name__}")
        return {}
    return dict(value)


def _build(cls, data: dict, path: str, errors: list, rename: Mapping[str, Any] | None = None):
    """Instantiate a dataclass from ``data``; unknown keys and constructor
    errors become field-level messages.  ``rename`` maps file keys to
    (field name, converter)."""
    rename = dict(rename or {})
    names = {f.name for f in dataclasses.fields(cls) if f.init}
    kwargs = {}
    for key, value in data.items():
        if key in rename:
            target, conv = rename[key]
            try:
                kwargs[target] = conv(value)
            except (TypeError, ValueError):
                errors.append(f"{path}.{key}: invalid value {value!r}")
            continue
        if key not in names:
            errors.append(f"{path}.{key}: unknown field")
            continue
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        errors.append(f"{path}: {exc}")
        return None


def _deg(v):
    return math.radians(float(v))


def _rtm(data, path, errors, base: RtmParams):
    data = _as_mapping(data, path, errors)
    if "detection_probability_curve" in data:
        try:
            data["detection_probability_curve"] = tuple(tuple(map(float, k)) for k in data["detection_probability_curve"])
        except (TypeError, ValueError):
            errors.append(f"{path}.detection_probability_curve: expected a list of [snr_db, p] pairs")
            del data["detection_probability_curve"]
    merged = {**dataclasses.asdict(base), **data}
    return _build(RtmParams, merged, path, errors)


def _noise(data, path, errors):
    data = _as_mapping(data, path, errors)
    return _build(ReferenceNoise, data, path, errors, {"sigma_phi_deg": ("sigma_phi", _deg)})


def _model(data, path, errors, reference=False):
    if isinstance(data, str):
        data = {"name": data, "kind": data.lower()}
    data = _as_mapping(data, path, errors)
    if reference:
        data.setdefault("name", "reference")
        data.setdefault("kind", "reference")
        data.setdefault("seed_key", "reference")
    kind = data.get("kind")
    if "name" not in data:
        errors.append(f"{path}.name: required")
        return None
    if kind not in MODEL_KINDS:
        errors.append(f"{path}.kind: unknown kind {kind!r}; expected one of {', '.join(MODEL_KINDS)}")
        return None
    base_rtm = default_reference_rtm() if kind == "reference" else RtmParams()
    rtm = _rtm(data.pop("rtm", None), f"{path}.rtm", errors, base_rtm)
    noise = _noise(data.pop("noise", None), f"{path}.noise", errors)
    if rtm is None or noise is None:
        return None
    return _build(SensorModelConfig, {**data, "rtm": rtm, "noise": noise}, path, errors)


def _scenario(data, path, errors):
    if isinstance(data, str):
        data = {"name": data}
    data = _as_mapping(data, path, errors)
    name = data.get("name")
    if name not in SCENARIO_NAMES:
        errors.append(f"{path}.name: unknown scenario {name!r}; expected one of {', '.join(SCENARIO_NAMES)}")
        return None
    params = _as_mapping(data.get("params"), f"{path}.params", errors)
    allowed = default_params(name)
    for k in params:
        if k not in allowed:
            errors.append(f"{path}.params.{k}: unknown parameter; expected one of {', '.join(sorted(allowed))}")
    data["params"] = {k: float(v) for k, v in params.items() if k in allowed}
    return _build(ScenarioSpec, data, path, errors)


def _gap(data, path, errors):
    data = _as_mapping(data, path, errors)
    if "level_weights" in data:
        lw = data["level_weights"]
        if not isinstance(lw, (list, tuple)) or len(lw) != 4:
            errors.append(f"{path}.level_weights: expected 4 numbers")
            del data["level_weights"]
        else:
            data["level_weights"] = tuple(float(x) for x in lw)
    ranges = _as_mapping(data.get("fixed_ranges"), f"{path}.fixed_ranges", errors)
    for k, v in list(ranges.items()):
        if k not in METRIC_IDS:
            errors.append(f"{path}.fixed_ranges.{k}: unknown metric")
            del ranges[k]
        elif not isinstance(v, (list, tuple)) or len(v) != 2:
            errors.append(f"{path}.fixed_ranges.{k}: expected [min, max]")
            del ranges[k]
        else:
            ranges[k] = (float(v[0]), float(v[1]))
    if "fixed_ranges" in data:
        data["fixed_ranges"] = ranges
    if "metric_weights" in data:
        data["metric_weights"] = _as_mapping(data["metric_weights"], f"{path}.metric_weights", errors)
    return _build(GapConfig, data, path, errors)


_TOP_LEVEL = {"schema_version", "seed", "scenarios", "sensor", "models", "reference", "ddm", "perception",
              "metrics", "gap", "output_dir"}


def parse_config(doc: Any, seed_override: int | None = None) -> EvaluationConfig:
    """Validate a parsed YAML document (``None`` means all defaults)."""
    errors: list[str] = []
    doc = _as_mapping(doc, "<root>", errors)
    for key in doc:
        if key not in _TOP_LEVEL:
            errors.append(f"{key}: unknown field")
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        errors.append(f"schema_version: unsupported version {version!r} (this build reads {SCHEMA_VERSION})")
    seed = seed_override if seed_override is not None else doc.get("seed")
    if seed is None:
        errors.append("seed: required (set it in the config or pass --seed)")
    elif isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed <= MAX_SEED:
        errors.append(f"seed: expected an integer in [0, 2^64), got {seed!r}")
    kwargs: dict[str, Any] = {}

    if "scenarios" in doc:
        items = doc["scenarios"]
        if not isinstance(items, list) or not items:
            errors.append("scenarios: expected a non-empty list")
        else:
            specs = [_scenario(s, f"scenarios[{i}]", errors) for i, s in enumerate(items)]
            names = [s.name for s in specs if s is not None]
            if len(set(names)) != len(names):
                errors.append("scenarios: duplicate scenario names")
            kwargs["scenarios"] = tuple(s for s in specs if s is not None)

    if "sensor" in doc:
        kwargs["sensor"] = _build(
            SensorPose, _as_mapping(doc["sensor"], "sensor", errors), "sensor", errors,
            {"yaw_deg": ("yaw", _deg), "fov_azimuth_deg": ("fov_azimuth", _deg)},
        )

    if "models" in doc:
        items = doc["models"]
        if not isinstance(items, list) or not items:
            errors.append("models: expected a non-empty list")
        else:
            models = [_model(m, f"models[{i}]", errors) for i, m in enumerate(items)]
            names = [m.name for m in models if m is not None]
            if len(set(names)) != len(names):
                errors.append("models: duplicate model names")
            kwargs["models"] = tuple(m for m in models if m is not None)

    if "reference" in doc:
        kwargs["reference"] = _model(doc["reference"], "reference", errors, reference=True)

    for key, cls in (("ddm", DdmTraining), ("perception", PerceptionConfig), ("metrics", MetricConfig)):
        if key in doc:
            kwargs[key] = _build(cls, _as_mapping(doc[key], key, errors), key, errors)

    if "gap" in doc:
        kwargs["gap"] = _gap(doc["gap"], "gap", errors)

    if doc.get("output_dir") is not None:
        if not isinstance(doc["output_dir"], str):
            errors.append("output_dir: expected a path string")
        else:
            kwargs["output_dir"] = doc["output_dir"]

    if any(v is None for v in kwargs.values()) or errors:
        raise ConfigError(errors or ["configuration could not be built"])
    cfg = EvaluationConfig(seed=int(seed), **kwargs)
    names = {m.name for m in cfg.models}
    if cfg.reference.name in names:
        raise ConfigError([f"models: name {cfg.reference.name!r} is reserved for the reference sensor"])
    return cfg


def load_config(path, seed_override: int | None = None) -> EvaluationConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError([f"{path}: cannot read ({exc.strerror})"]) from exc
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError([f"{path}: not valid YAML ({exc})"]) from exc
    return parse_config(doc, seed_override)
