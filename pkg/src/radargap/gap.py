"""Normalization, fidelity-level aggregation and the overall gap G.

Fidelity levels:

=====  ==========================  =====================================
level  evaluation                  metrics
=====  ==========================  =====================================
FL I   implicit, high level        OSPA, IoU
FL II  implicit, low level         RMSE_x, RMSE_y, CardinalityError
FL III explicit, high level        DPP, WD
FL IV  explicit, low level         PNE, WD_r, WD_phi, WD_doppler
=====  ==========================  =====================================

Min-max normalization runs per metric across the models compared on one
scenario, so the worst model on a metric always scores 1.  A fixed range per
metric can be supplied instead to compare gaps across scenarios.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .metrics import METRIC_IDS, MetricConfig, explicit_metrics, implicit_metrics
from .models import SensorModelConfig, simulate
from .perception import PerceptionConfig, run_perception
from .scenario import Scenario, ScenarioError
from .serialization import fmt_float

REPORT_SCHEMA = "radargap.report/1"

LEVELS = {
    "FL I": ("OSPA", "IoU"),
    "FL II": ("RMSE_x", "RMSE_y", "CardinalityError"),
    "FL III": ("DPP", "WD"),
    "FL IV": ("PNE", "WD_r", "WD_phi", "WD_doppler"),
}

# "down": smaller is better, "up": larger is better
DIRECTION = {m: "down" for m in METRIC_IDS}
DIRECTION["IoU"] = "up"


class NormalizationError(ValueError):
    pass


def level_of(metric_id: str) -> str:
    for level, members in LEVELS.items():
        if metric_id in members:
            return level
    raise KeyError(metric_id)


def normalize(raw: Mapping[str, float], metric_id: str, direction: str | None = None,
              fixed_range: tuple[float, float] | None = None) -> dict[str, float]:
    """Rescale one metric column to [0, 1] with 0 as the best value."""
    direction = direction or DIRECTION[metric_id]
    if direction not in ("up", "down"):
        raise ValueError("direction must be 'up' or 'down'")
    if fixed_range is not None:
        lo, hi = map(float, fixed_range)
        if not hi > lo:
            raise NormalizationError(f"{metric_id}: fixed range needs max > min")
        scaled = {k: min(max((float(v) - lo) / (hi - lo), 0.0), 1.0) for k, v in raw.items()}
    else:
        if len(raw) < 2:
            raise NormalizationError(f"{metric_id}: min-max normalization needs at least 2 models or a fixed range")
        lo, hi = min(raw.values()), max(raw.values())
        if hi == lo:
            return {k: 0.0 for k in raw}
        scaled = {k: (float(v) - lo) / (hi - lo) for k, v in raw.items()}
    if direction == "up":
        scaled = {k: 1.0 - v for k, v in scaled.items()}
    return scaled


@dataclass(frozen=True)
class FidelityLevelScores:
    fl1: float
    fl2: float
    fl3: float
    fl4: float

    def __post_init__(self):
        for v in self.as_tuple():
            if not (-1e-12 <= v <= 1 + 1e-12):
                raise ValueError(f"fidelity score {v} outside [0, 1]")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.fl1, self.fl2, self.fl3, self.fl4)


def aggregate_levels(normalized: Mapping[str, float], metric_weights: Mapping[str, float] | None = None
                     ) -> FidelityLevelScores:
    """Weighted mean of the normalized metrics inside each level (equal weights by default)."""
    weights = dict(metric_weights or {})
    scores = []
    for level, members in LEVELS.items():
        missing = [m for m in members if m not in normalized]
        if missing:
            raise KeyError(f"{level}: missing metric(s) {missing}")
        w = [float(weights.get(m, 1.0)) for m in members]
        if min(w) < 0 or sum(w) <= 0:
            raise ValueError(f"{level}: metric weights must be non-negative with a positive sum")
        total = sum(w)
        scores.append(sum((wi / total) * normalized[m] for wi, m in zip(w, members)))
    return FidelityLevelScores(*scores)


def gap(scores: FidelityLevelScores, level_weights: Sequence[float] = (1.0, 1.0, 1.0, 1.0)) -> float:
    """Simulation-to-reality gap: weighted mean of the four level scores."""
    w = [float(x) for x in level_weights]
    if len(w) != 4 or min(w) < 0 or sum(w) <= 0:
        raise ValueError("need four non-negative level weights with a positive sum")
    # weights are normalized first so that (1, 1, 1, 1) and (0.25, 0.25, 0.25, 0.25)
    # give bit-identical results
    total = sum(w)
    return sum((wi / total) * s for wi, s in zip(w, scores.as_tuple()))


@dataclass(frozen=True)
class GapConfig:
    level_weights: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)
    metric_weights: Mapping[str, float] = field(default_factory=dict)
    normalization: str = "minmax"  # or "fixed"
    fixed_ranges: Mapping[str, tuple[float, float]] = field(default_factory=dict)

    def __post_init__(self):
        if self.normalization not in ("minmax", "fixed"):
            raise ValueError("normalization must be 'minmax' or 'fixed'")
        if self.normalization == "fixed":
            missing = [m for m in METRIC_IDS if m not in self.fixed_ranges]
            if missing:
                raise ValueError(f"fixed normalization needs ranges for {missing}")
        unknown = [m for m in self.metric_weights if m not in METRIC_IDS]
        if unknown:
            raise ValueError(f"unknown metric weight(s) {unknown}")


@dataclass
class ModelResult:
    name: str
    raw: dict[str, float]
    normalized: dict[str, float]
    levels: FidelityLevelScores
    gap: float
    flagged: dict[str, int]


@dataclass
class GapReport:
    scenario: str
    frames: int
    master_seed: int
    models: list[ModelResult]
    normalization: dict[str, dict]

    def model(self, name: str) -> ModelResult:
        for m in self.models:
            if m.name == name:
                return m
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "scenario": self.scenario,
            "frames": self.frames,
            "master_seed": self.master_seed,
            "levels": {k: list(v) for k, v in LEVELS.items()},
            "directions": {m: DIRECTION[m] for m in METRIC_IDS},
            "normalization": self.normalization,
            "models": [
                {
                    "name": m.name,
                    "raw": {k: fmt_float(m.raw[k]) for k in METRIC_IDS},
                    "normalized": {k: fmt_float(m.normalized[k]) for k in METRIC_IDS},
                    "fidelity_levels": dict(zip(LEVELS, (fmt_float(v) for v in m.levels.as_tuple()))),
                    "gap": fmt_float(m.gap),
                    "flagged_frames": {k: m.flagged[k] for k in METRIC_IDS},
                }
                for m in self.models
            ],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "GapReport":
        if d.get("schema") != REPORT_SCHEMA:
            raise ValueError(f"not a gap report ({REPORT_SCHEMA})")
        models = []
        for m in d["models"]:
            missing = [k for k in METRIC_IDS if k not in m["raw"] or k not in m["normalized"]]
            if missing:
                raise ValueError(f"model {m.get('name')!r}: missing metric(s) {missing}")
            fl = m["fidelity_levels"]
            models.append(
                ModelResult(
                    m["name"],
                    {k: float(m["raw"][k]) for k in METRIC_IDS},
                    {k: float(m["normalized"][k]) for k in METRIC_IDS},
                    FidelityLevelScores(*(float(fl[k]) for k in LEVELS)),
                    float(m["gap"]),
                    {k: int(m["flagged_frames"].get(k, 0)) for k in METRIC_IDS},
                )
            )
        return cls(d["scenario"], int(d["frames"]), int(d["master_seed"]), models, dict(d["normalization"]))


def raw_metrics(ref_clouds, ref_tracks, clouds, tracks, metric_cfg: MetricConfig):
    """All eleven metric records of one model against the reference."""
    records = {}
    records.update(explicit_metrics(ref_clouds, clouds, metric_cfg))
    records.update(implicit_metrics(ref_tracks, tracks, metric_cfg))
    return records


def evaluate_scenario(
    scenario: Scenario,
    models: Sequence[SensorModelConfig],
    reference: SensorModelConfig,
    perception: PerceptionConfig | None = None,
    metric_cfg: MetricConfig | None = None,
    gap_cfg: GapConfig | None = None,
    master_seed: int = 0,
    ddm_model=None,
) -> GapReport:
    """Run reference and models through perception, score, normalize and aggregate."""
    perception = perception or PerceptionConfig()
    metric_cfg = metric_cfg or MetricConfig(empty_cap=scenario.sensor.range_max,
                                            phi_cap=2.0 * scenario.sensor.fov_azimuth)
    gap_cfg = gap_cfg or GapConfig()
    if gap_cfg.normalization == "minmax" and len(models) < 2:
        raise NormalizationError("min-max normalization needs at least 2 models; supply fixed ranges otherwise")
    names = [m.name for m in models]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate model names in {names}")
    ego = scenario.ego_trajectory
    ref_clouds = simulate(scenario, reference, master_seed)
    if not any(len(c) for c in ref_clouds):
        raise ScenarioError(f"{scenario.name}: the reference sensor detects nothing; scenario is unevaluable")
    ref_tracks = run_perception(ref_clouds, ego, scenario.sensor, perception, scenario.dt)
    raws, flags = {}, {}
    for cfg in models:
        try:
            clouds = simulate(scenario, cfg, master_seed, ddm_model)
            tracks = run_perception(clouds, ego, scenario.sensor, perception, scenario.dt)
            recs = raw_metrics(ref_clouds, ref_tracks, clouds, tracks, metric_cfg)
        except Exception as exc:
            raise RuntimeError(f"{scenario.name}/{cfg.name}: {exc}") from exc
        raws[cfg.name] = {k: recs[k].scenario_mean for k in METRIC_IDS}
        flags[cfg.name] = {k: len(recs[k].flagged_frames) for k in METRIC_IDS}
    normalized = {n: {} for n in names}
    norm_ctx = {}
    for metric in METRIC_IDS:
        column = {n: raws[n][metric] for n in names}
        fixed = gap_cfg.fixed_ranges.get(metric) if gap_cfg.normalization == "fixed" else None
        scaled = normalize(column, metric, fixed_range=fixed)
        lo, hi = fixed if fixed is not None else (min(column.values()), max(column.values()))
        norm_ctx[metric] = {"min": fmt_float(lo), "max": fmt_float(hi), "direction": DIRECTION[metric]}
        for n in names:
            normalized[n][metric] = scaled[n]
    results = []
    for n in names:
        levels = aggregate_levels(normalized[n], gap_cfg.metric_weights)
        g = gap(levels, gap_cfg.level_weights)
        results.append(ModelResult(n, raws[n], normalized[n], levels, min(max(g, 0.0), 1.0), flags[n]))
    return GapReport(scenario.name, len(scenario.frames), int(master_seed), results, norm_ctx)


def is_finite_report(report: GapReport) -> bool:
    return all(math.isfinite(v) for m in report.models for v in m.raw.values())
