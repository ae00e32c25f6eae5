"""Sensor-model configurations, random-stream splitting and batch simulation.

Random streams: every (scenario, stream key, stage) triple gets its own
``numpy.random.Generator`` seeded from
``SeedSequence(master_seed, spawn_key=(crc32(scenario), crc32(key), crc32(stage)))``.
A model's stream key defaults to its name, so adding or removing a model
never shifts another model's draws.  A model may borrow the reference
sensor's key to replay the reference stream exactly.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .scenario import Scenario, TRAINING_NAMES, build_training_scenario
from .sensor_models import (
    DdmModel,
    PointCloud,
    ReferenceNoise,
    RtmParams,
    ddm_fit,
    ddm_sample,
    irm_detect,
    perturb_positions,
    reference_detect,
    rtm_detect,
    training_pairs,
)

MODEL_KINDS = ("irm", "ddm", "rtm", "reference")
REFERENCE_KEY = "reference"


def stream(master_seed: int, scenario: str, key: str, stage: str) -> np.random.Generator:
    spawn = tuple(zlib.crc32(s.encode("utf-8")) for s in (scenario, key, stage))
    return np.random.default_rng(np.random.SeedSequence(int(master_seed), spawn_key=spawn))


def default_reference_rtm() -> RtmParams:
    """Ray casting behind the reference sensor: a finer ray fan than the
    simulated ray tracer, so the two are not identical by construction."""
    return RtmParams(ray_count=241)


@dataclass(frozen=True)
class SensorModelConfig:
    name: str
    kind: str
    points_per_object: int = 8
    rtm: RtmParams = field(default_factory=RtmParams)
    noise: ReferenceNoise = field(default_factory=ReferenceNoise)
    position_noise: float = 0.0  # m, extra Cartesian jitter (reference kind only)
    seed_key: str | None = None

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"model {self.name!r}: unknown kind {self.kind!r}; expected one of {MODEL_KINDS}")
        if self.points_per_object < 1:
            raise ValueError(f"model {self.name!r}: points_per_object must be >= 1")
        if self.position_noise < 0:
            raise ValueError(f"model {self.name!r}: position_noise must be non-negative")

    @property
    def key(self) -> str:
        return self.seed_key or self.name


def reference_config(**overrides) -> SensorModelConfig:
    base = SensorModelConfig(name="reference", kind="reference", rtm=default_reference_rtm(), seed_key=REFERENCE_KEY)
    return replace(base, **overrides)


def standard_models() -> list[SensorModelConfig]:
    """The three model types compared throughout: IRM, DDM and RTM."""
    return [
        SensorModelConfig("IRM", "irm"),
        SensorModelConfig("DDM", "ddm"),
        SensorModelConfig("RTM", "rtm"),
    ]


def simulate(scenario: Scenario, cfg: SensorModelConfig, master_seed: int,
             ddm_model: DdmModel | None = None) -> list[PointCloud]:
    """Point clouds of ``cfg`` for every frame of ``scenario``."""
    sensor = scenario.sensor
    rng = stream(master_seed, scenario.name, cfg.key, "sensor")
    out = []
    if cfg.kind == "ddm" and ddm_model is None:
        raise ValueError(f"model {cfg.name!r}: the data-driven model needs a fitted DdmModel")
    for k, frame in enumerate(scenario.frames):
        if cfg.kind == "irm":
            cloud = irm_detect(frame, sensor, cfg.points_per_object, k)
        elif cfg.kind == "rtm":
            cloud = rtm_detect(frame, sensor, cfg.rtm, rng, k)
        elif cfg.kind == "ddm":
            cloud = ddm_sample(frame, sensor, ddm_model, rng, k)
        else:
            cloud = reference_detect(frame, sensor, cfg.rtm, cfg.noise, rng, k)
        out.append(cloud)
    if cfg.kind == "reference" and cfg.position_noise > 0:
        jitter = stream(master_seed, scenario.name, cfg.name, "position_noise")
        out = [perturb_positions(c, cfg.position_noise, sensor, jitter) for c in out]
    return out


def train_ddm(reference: SensorModelConfig, master_seed: int, bins: int = 8, k_max: int = 20,
              scenarios: Sequence[str] = TRAINING_NAMES, duration: float = 40.0) -> DdmModel:
    """Fit the data-driven model on reference-sensor recordings of the
    training drives, which never overlap the evaluation scenarios."""
    pairs = []
    range_max = math.inf
    for name in scenarios:
        scen = build_training_scenario(name, duration=duration)
        range_max = min(range_max, scen.sensor.range_max)
        clouds = simulate(scen, reference, master_seed)
        pairs += training_pairs(scen, clouds)
    return ddm_fit(pairs, bins=bins, k_max=k_max, range_max=range_max, seed=int(master_seed) % (2**32))
