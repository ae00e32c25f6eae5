"""Ground-truth scenarios and sensor-frame transforms.

The eight scenario categories are analytic, continuous-time trajectories.
``states_at`` evaluates them at any time, ``build_scenario`` samples them on
a fixed frame grid.  All speeds, ranges and offsets below are defaults of
this package; override them through ``params``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Mapping, Sequence

import numpy as np

from . import kernels
from .geometry import visible_edge_points, wrap_angle
from .serialization import fmt_float, read_jsonl, write_jsonl

SCENARIO_NAMES = (
    "oncoming_s",
    "overtake_s",
    "leading_s",
    "eight_s",
    "occlusion_m",
    "leading_m",
    "overtake_m",
    "crossing_m",
)

SCENARIO_SCHEMA = "radargap.scenario/1"

DEFAULT_DT = 0.05
VISIBILITY_SAMPLES = 32

CAR_LENGTH = 4.5
CAR_WIDTH = 1.8
LANE = 3.75


class ScenarioError(ValueError):
    """Raised for unknown scenarios, bad timing or unobservable targets."""


@dataclass(frozen=True)
class ObjectState:
    """Rectangular vehicle; (x, y) is the box center in the world frame."""

    id: int
    x: float
    y: float
    yaw: float
    speed: float
    length: float = CAR_LENGTH
    width: float = CAR_WIDTH
    yaw_rate: float = 0.0

    def __post_init__(self):
        vals = (self.x, self.y, self.yaw, self.speed, self.length, self.width, self.yaw_rate)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"object {self.id}: non-finite state {vals}")
        if self.length <= 0 or self.width <= 0:
            raise ValueError(f"object {self.id}: extent must be positive")
        object.__setattr__(self, "yaw", wrap_angle(self.yaw))

    @property
    def velocity(self) -> np.ndarray:
        return self.speed * np.array([math.cos(self.yaw), math.sin(self.yaw)])

    @property
    def rect(self) -> np.ndarray:
        return np.array([self.x, self.y, self.yaw, self.length, self.width])

    def point_velocities(self, points: np.ndarray) -> np.ndarray:
        """Rigid-body velocity of world points attached to this object."""
        rel = np.asarray(points, dtype=np.float64).reshape(-1, 2) - [self.x, self.y]
        spin = self.yaw_rate * np.stack([-rel[:, 1], rel[:, 0]], axis=1)
        return self.velocity + spin


@dataclass(frozen=True)
class SensorPose:
    """Radar mount relative to the ego box center; angles in radians."""

    x: float = 0.0
    y: float = 0.0
    yaw: float = 0.0
    fov_azimuth: float = math.radians(60.0)
    range_max: float = 100.0

    def __post_init__(self):
        if not 0.0 < self.fov_azimuth <= math.pi:
            raise ValueError("fov_azimuth must lie in (0, pi]")
        if self.range_max <= 0:
            raise ValueError("range_max must be positive")

    def world_pose(self, ego: ObjectState) -> tuple[np.ndarray, float, np.ndarray]:
        """Sensor origin, boresight angle and velocity in the world frame."""
        c, s = math.cos(ego.yaw), math.sin(ego.yaw)
        origin = np.array([ego.x + c * self.x - s * self.y, ego.y + s * self.x + c * self.y])
        vel = ego.point_velocities(origin)[0]
        return origin, ego.yaw + self.yaw, vel

    def in_fov(self, r, phi):
        r = np.asarray(r)
        phi = np.asarray(phi)
        return (r > 0.0) & (r <= self.range_max) & (np.abs(phi) <= self.fov_azimuth)


@dataclass(frozen=True)
class Frame:
    timestamp: float
    ego: ObjectState
    targets: tuple[ObjectState, ...]


@dataclass(frozen=True)
class Scenario:
    name: str
    dt: float
    frames: tuple[Frame, ...]
    sensor: SensorPose = field(default_factory=SensorPose)
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "params", MappingProxyType(dict(self.params)))

    def __len__(self):
        return len(self.frames)

    @property
    def ego_trajectory(self) -> list[ObjectState]:
        return [f.ego for f in self.frames]


@dataclass(frozen=True)
class SensorFrameObject:
    """A target as the sensor sees it: box pose and relative velocity in the
    sensor's Cartesian frame (boresight along +x)."""

    x: float
    y: float
    yaw: float
    length: float
    width: float
    vx: float
    vy: float
    yaw_rate: float = 0.0

    @property
    def range(self) -> float:
        return math.hypot(self.x, self.y)

    @property
    def azimuth(self) -> float:
        return math.atan2(self.y, self.x)

    @property
    def aspect(self) -> float:
        """Direction of the sensor as seen from the object's body frame."""
        return wrap_angle(math.atan2(-self.y, -self.x) - self.yaw)

    def point_velocities(self, points: np.ndarray) -> np.ndarray:
        rel = np.asarray(points, dtype=np.float64).reshape(-1, 2) - [self.x, self.y]
        spin = self.yaw_rate * np.stack([-rel[:, 1], rel[:, 0]], axis=1)
        return np.array([self.vx, self.vy]) + spin


# --------------------------------------------------------------------------
# transforms


def polar_from_world(points, velocities, sensor: SensorPose, ego: ObjectState):
    """Range, azimuth and signed radial velocity of world points.

    Closing points get negative radial velocity.
    """
    origin, boresight, svel = sensor.world_pose(ego)
    d = np.asarray(points, dtype=np.float64).reshape(-1, 2) - origin
    r = np.hypot(d[:, 0], d[:, 1])
    phi = wrap_angle(np.arctan2(d[:, 1], d[:, 0]) - boresight)
    rel_v = np.asarray(velocities, dtype=np.float64).reshape(-1, 2) - svel
    with np.errstate(invalid="ignore", divide="ignore"):
        radial = np.where(r > 0, (d * rel_v).sum(axis=1) / r, 0.0)
    return r, np.atleast_1d(phi), radial


def to_sensor_frame(state: ObjectState, ego: ObjectState, sensor: SensorPose):
    """``(r, phi, radial_velocity, relative_yaw)`` of an object's center."""
    r, phi, vr = polar_from_world([[state.x, state.y]], state.velocity, sensor, ego)
    rel_yaw = wrap_angle(state.yaw - ego.yaw - sensor.yaw)
    return float(r[0]), float(phi[0]), float(vr[0]), rel_yaw


def object_in_sensor_frame(state: ObjectState, ego: ObjectState, sensor: SensorPose) -> SensorFrameObject:
    origin, boresight, svel = sensor.world_pose(ego)
    c, s = math.cos(boresight), math.sin(boresight)
    dx, dy = state.x - origin[0], state.y - origin[1]
    # relative velocity as observed in the (translating) sensor frame
    rv = state.velocity - svel
    return SensorFrameObject(
        x=c * dx + s * dy,
        y=-s * dx + c * dy,
        yaw=wrap_angle(state.yaw - boresight),
        length=state.length,
        width=state.width,
        vx=c * rv[0] + s * rv[1],
        vy=-s * rv[0] + c * rv[1],
        yaw_rate=state.yaw_rate - ego.yaw_rate,
    )


def visibility(
    target: ObjectState,
    others: Sequence[ObjectState],
    ego: ObjectState,
    sensor: SensorPose,
    samples: int = VISIBILITY_SAMPLES,
) -> float:
    """Fraction of the target's sensor-facing outline that the radar can see.

    A sample point counts when it lies inside the field of view and the
    segment from the sensor to it misses every other object.
    """
    if any(o.id == target.id for o in others):
        raise ValueError("target must not be among the occluders")
    origin, _, _ = sensor.world_pose(ego)
    pts = visible_edge_points(target.x, target.y, target.yaw, target.length, target.width, origin, samples)
    if len(pts) == 0:
        return 0.0
    r, phi, _ = polar_from_world(pts, np.zeros_like(pts), sensor, ego)
    ok = sensor.in_fov(r, phi)
    if others and ok.any():
        rects = np.array([o.rect for o in others])
        ok &= ~kernels.segments_blocked(origin, pts, rects)
    return float(ok.sum()) / len(pts)


# --------------------------------------------------------------------------
# trajectories


def _straight(oid, x0, y0, yaw, speed, t, length=CAR_LENGTH, width=CAR_WIDTH):
    return ObjectState(
        oid, x0 + speed * math.cos(yaw) * t, y0 + speed * math.sin(yaw) * t, yaw, speed, length, width
    )


def _oncoming_s(p, t):
    ego = _straight(0, 0.0, 0.0, 0.0, p["ego_speed"], t)
    tgt = _straight(1, p["target_start"], p["lane_offset"], math.pi, p["target_speed"], t)
    return ego, [tgt]


def _overtake_s(p, t):
    ego = _straight(0, 0.0, 0.0, 0.0, p["ego_speed"], t)
    tgt = _straight(1, p["target_start"], p["lane_offset"], 0.0, p["target_speed"], t)
    return ego, [tgt]


def _leading_s(p, t):
    ego = _straight(0, 0.0, 0.0, 0.0, p["ego_speed"], t)
    tgt = _straight(1, p["gap"], 0.0, 0.0, p["target_speed"], t)
    return ego, [tgt]


def _eight_s(p, t):
    # Bernoulli lemniscate with focal distance a, long axis across the
    # boresight, traversed at constant parameter rate
    ego = ObjectState(0, 0.0, 0.0, 0.0, 0.0)
    a = p["focus"]
    A = a * math.sqrt(2.0)
    w = 2.0 * math.pi / p["period"]
    th = w * t
    s, c = math.sin(th), math.cos(th)
    D = 1.0 + s * s
    xl, yl = A * c / D, A * s * c / D
    vxl = w * A * (s * s - 3.0) * s / D**2
    vyl = w * A * (1.0 - 3.0 * s * s) / D**2
    # rotate the curve by +90 deg and move its center down the boresight
    x, y = p["center_x"] - yl, xl
    vx, vy = -vyl, vxl
    yaw_rate = w * 3.0 * c / D
    tgt = ObjectState(1, x, y, math.atan2(vy, vx), math.hypot(vx, vy), yaw_rate=yaw_rate)
    return ego, [tgt]


def _occlusion_m(p, t):
    ego = ObjectState(0, 0.0, 0.0, 0.0, 0.0)
    crosser = _straight(1, p["crosser_x"], p["crosser_start"], math.pi / 2, p["crosser_speed"], t)
    hidden = _straight(2, p["hidden_x"], 0.0, 0.0, p["hidden_speed"], t)
    return ego, [crosser, hidden]


def _leading_m(p, t):
    ego = _straight(0, 0.0, 0.0, 0.0, p["ego_speed"], t)
    a = _straight(1, p["gap"], 0.0, 0.0, p["target_speed"], t)
    b = _straight(2, p["gap"] + p["stagger"], p["lane_offset"], 0.0, p["target_speed"], t)
    return ego, [a, b]


def _overtake_m(p, t):
    ego = _straight(0, 0.0, 0.0, 0.0, p["ego_speed"], t)
    a = _straight(1, p["start_a"], p["lane_offset"], 0.0, p["speed_a"], t)
    b = _straight(2, p["start_b"], -p["lane_offset"], 0.0, p["speed_b"], t)
    return ego, [a, b]


def _crossing_m(p, t):
    ego = ObjectState(0, 0.0, 0.0, 0.0, 0.0)
    a = _straight(1, p["x_a"], p["start_a"], math.pi / 2, p["speed_a"], t)
    b = _straight(2, p["x_b"], p["start_b"], -math.pi / 2, p["speed_b"], t)
    return ego, [a, b]


_Builder = Callable[[Mapping[str, float], float], tuple[ObjectState, list[ObjectState]]]

_REGISTRY: dict[str, tuple[_Builder, dict[str, float], float]] = {
    "oncoming_s": (_oncoming_s, dict(ego_speed=10.0, target_speed=12.0, target_start=120.0, lane_offset=LANE), 10.0),
    "overtake_s": (_overtake_s, dict(ego_speed=15.0, target_speed=20.0, target_start=-12.0, lane_offset=LANE), 10.0),
    "leading_s": (_leading_s, dict(ego_speed=15.0, target_speed=15.0, gap=30.0), 10.0),
    "eight_s": (_eight_s, dict(focus=15.0, center_x=25.0, period=16.0), 30.0),
    "occlusion_m": (
        _occlusion_m,
        dict(crosser_x=20.0, crosser_start=-20.0, crosser_speed=3.0, hidden_x=40.0, hidden_speed=0.0),
        20.0,
    ),
    "leading_m": (_leading_m, dict(ego_speed=15.0, target_speed=15.0, gap=30.0, stagger=6.0, lane_offset=LANE), 10.0),
    "overtake_m": (
        _overtake_m,
        dict(ego_speed=15.0, start_a=-10.0, speed_a=20.0, start_b=-20.0, speed_b=21.0, lane_offset=LANE),
        10.0,
    ),
    "crossing_m": (
        _crossing_m,
        dict(x_a=25.0, start_a=-25.0, speed_a=6.0, x_b=40.0, start_b=30.0, speed_b=5.0),
        10.0,
    ),
}


def default_params(name: str) -> dict[str, float]:
    _check_name(name)
    return dict(_REGISTRY[name][1])


def default_duration(name: str) -> float:
    _check_name(name)
    return _REGISTRY[name][2]


def is_multi_object(name: str) -> bool:
    return name.endswith("_m")


def _check_name(name):
    if name not in _REGISTRY:
        raise ScenarioError(f"unknown scenario {name!r}; expected one of {', '.join(SCENARIO_NAMES)}")


def _merge(name, params):
    merged = default_params(name)
    for k, v in (params or {}).items():
        if k not in merged:
            raise ScenarioError(f"{name}: unknown parameter {k!r}")
        merged[k] = float(v)
    return merged


def states_at(name: str, t: float, params: Mapping[str, float] | None = None):
    """Ego and target states of scenario ``name`` at time ``t``."""
    _check_name(name)
    return _REGISTRY[name][0](_merge(name, params), t)


def build_scenario(
    name: str,
    params: Mapping[str, float] | None = None,
    dt: float = DEFAULT_DT,
    duration: float | None = None,
    sensor: SensorPose | None = None,
) -> Scenario:
    _check_name(name)
    if duration is None:
        duration = default_duration(name)
    if not dt > 0 or not duration > 0:
        raise ScenarioError("dt and duration must be positive")
    if duration < 10 * dt - 1e-12:
        raise ScenarioError("duration must cover at least 10 frames")
    sensor = sensor or SensorPose()
    merged = _merge(name, params)
    builder = _REGISTRY[name][0]
    n = int(round(duration / dt))
    frames = []
    for k in range(n):
        t = k * dt
        ego, targets = builder(merged, t)
        frames.append(Frame(t, ego, tuple(targets)))
    scen = Scenario(name, dt, tuple(frames), sensor, merged)
    _check_observable(scen)
    return scen


def _check_observable(scen: Scenario):
    ids = [t.id for t in scen.frames[0].targets]
    need = 2 if is_multi_object(scen.name) else 1
    if len(ids) < need:
        raise ScenarioError(f"{scen.name}: needs at least {need} target(s)")
    seen = {i: False for i in ids}
    for f in scen.frames:
        for tgt in f.targets:
            if not seen[tgt.id]:
                r, phi, _, _ = to_sensor_frame(tgt, f.ego, scen.sensor)
                seen[tgt.id] = bool(scen.sensor.in_fov(r, phi))
    missing = [i for i, ok in seen.items() if not ok]
    if missing:
        raise ScenarioError(f"{scen.name}: target(s) {missing} never enter the field of view")


# --------------------------------------------------------------------------
# training drives for the data-driven model (never used for evaluation)

TRAINING_NAMES = ("train_orbit", "train_radial")


def build_training_scenario(name: str, dt: float = DEFAULT_DT, duration: float = 40.0) -> Scenario:
    """Drives that sweep aspect angle and range for fitting the data-driven model."""
    ego = ObjectState(0, 0.0, 0.0, 0.0, 0.0)
    frames = []
    n = int(round(duration / dt))
    for k in range(n):
        t = k * dt
        if name == "train_orbit":
            # circle of radius 15 m centred 45 m ahead, counter-clockwise
            w = 2.0 * math.pi / 20.0
            th = w * t
            x, y = 45.0 + 15.0 * math.cos(th), 15.0 * math.sin(th)
            tgt = ObjectState(1, x, y, th + math.pi / 2, 15.0 * w, yaw_rate=w)
        elif name == "train_radial":
            # zig-zag out to 95 m and back, slightly off boresight
            v = 9.0
            span = 90.0
            s = (v * t) % (2 * span)
            out = s < span
            x = 5.0 + (s if out else 2 * span - s)
            tgt = ObjectState(1, x, 0.15 * x, 0.0 if out else math.pi, v)
        else:
            raise ScenarioError(f"unknown training scenario {name!r}")
        frames.append(Frame(t, ego, (tgt,)))
    return Scenario(name, dt, tuple(frames), SensorPose(), {})


# --------------------------------------------------------------------------
# persistence


def _state_record(s: ObjectState) -> dict:
    return {
        "id": s.id,
        "x": fmt_float(s.x),
        "y": fmt_float(s.y),
        "yaw": fmt_float(s.yaw),
        "speed": fmt_float(s.speed),
        "length": fmt_float(s.length),
        "width": fmt_float(s.width),
        "yaw_rate": fmt_float(s.yaw_rate),
    }


def _state_from(rec: Mapping) -> ObjectState:
    return ObjectState(
        int(rec["id"]), rec["x"], rec["y"], rec["yaw"], rec["speed"],
        rec["length"], rec["width"], rec.get("yaw_rate", 0.0),
    )


def save_scenario(scen: Scenario, path) -> None:
    """JSON lines: a header record, then one record per frame."""
    s = scen.sensor
    header = {
        "schema": SCENARIO_SCHEMA,
        "name": scen.name,
        "dt": fmt_float(scen.dt),
        "frames": len(scen.frames),
        "sensor": {
            "x": fmt_float(s.x), "y": fmt_float(s.y), "yaw": fmt_float(s.yaw),
            "fov_azimuth": fmt_float(s.fov_azimuth), "range_max": fmt_float(s.range_max),
        },
        "params": {k: fmt_float(v) for k, v in sorted(scen.params.items())},
    }
    records = [
        {
            "t": fmt_float(f.timestamp),
            "ego": _state_record(f.ego),
            "targets": [_state_record(t) for t in f.targets],
        }
        for f in scen.frames
    ]
    write_jsonl(path, [header] + records)


def load_scenario(path) -> Scenario:
    records = read_jsonl(path)
    if not records or records[0].get("schema") != SCENARIO_SCHEMA:
        raise ValueError(f"{path}: not a scenario file ({SCENARIO_SCHEMA})")
    header = records[0]
    frames = tuple(
        Frame(float(r["t"]), _state_from(r["ego"]), tuple(_state_from(t) for t in r["targets"]))
        for r in records[1:]
    )
    if len(frames) != header["frames"]:
        raise ValueError(f"{path}: expected {header['frames']} frames, found {len(frames)}")
    return Scenario(header["name"], float(header["dt"]), frames, SensorPose(**header["sensor"]), header["params"])

