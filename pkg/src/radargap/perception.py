"""Tracking-by-detection pipeline fed with radar point clouds.

Density clustering in (x, y, scaled Doppler), global-nearest-neighbour
association, one constant-velocity Kalman filter per track and M-of-N
confirmation.  Everything is deterministic; detection order within a frame
does not matter because points are sorted before clustering.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .geometry import rect_corners, wrap_angle
from .scenario import ObjectState, SensorPose
from .sensor_models.types import PointCloud
from .serialization import fmt_float, read_jsonl, write_jsonl

TRACK_SCHEMA = "radargap.tracks/1"


@dataclass(frozen=True)
class PerceptionConfig:
    eps: float = 2.5  # m, neighbourhood radius in clustering space
    min_pts: int = 2
    doppler_scale: float = 1.0  # m of clustering distance per m/s
    gate: float = 3.0  # m
    confirm_m: int = 2
    confirm_n: int = 3
    delete_after: int = 5  # consecutive misses of a confirmed track
    meas_sigma: float = 0.3  # m, centroid noise assumed by the filter
    accel_sigma: float = 2.0  # m/s^2, white-acceleration process noise
    init_vel_sigma: float = 10.0  # m/s
    box_alpha: float = 0.3  # smoothing factor for box yaw and size
    min_extent: float = 0.2  # m, floor for box length and width

    def __post_init__(self):
        if self.eps <= 0 or self.min_pts < 1:
            raise ValueError("eps must be positive and min_pts >= 1")
        if not 1 <= self.confirm_m <= self.confirm_n:
            raise ValueError("need 1 <= confirm_m <= confirm_n")
        if self.delete_after < 1 or self.gate <= 0:
            raise ValueError("delete_after must be >= 1 and gate positive")
        if not 0 < self.box_alpha <= 1 or self.min_extent <= 0:
            raise ValueError("box_alpha must be in (0, 1] and min_extent positive")


@dataclass(frozen=True)
class OrientedBox:
    cx: float
    cy: float
    yaw: float
    length: float
    width: float

    def __post_init__(self):
        if not (self.length > 0 and self.width > 0):
            raise ValueError("box extents must be positive")

    def corners(self) -> np.ndarray:
        return rect_corners(self.cx, self.cy, self.yaw, self.length, self.width)


@dataclass(frozen=True, eq=False)
class Cluster:
    detections: np.ndarray  # (k, 3) polar rows from the source cloud
    xy: np.ndarray  # (k, 2) world positions
    centroid: tuple[float, float]
    mean_doppler: float

    def __len__(self):
        return len(self.detections)


@dataclass(frozen=True)
class TrackEstimate:
    track_id: int
    x: float
    y: float
    vx: float
    vy: float
    box: OrientedBox
    age: int
    confirmed: bool


def cluster(cloud: PointCloud, sensor: SensorPose, ego: ObjectState, eps: float = 2.5, min_pts: int = 2,
            doppler_scale: float = 1.0) -> list[Cluster]:
    """DBSCAN on world (x, y) plus scaled Doppler.  Noise points are dropped."""
    if eps <= 0 or min_pts < 1:
        raise ValueError("eps must be positive and min_pts >= 1")
    if len(cloud) == 0:
        return []
    origin, boresight, _ = sensor.world_pose(ego)
    ang = boresight + cloud.phi
    xy = origin + cloud.r[:, None] * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    feats = np.column_stack([xy, cloud.doppler * doppler_scale])
    order = np.lexsort((feats[:, 2], feats[:, 1], feats[:, 0]))
    feats, xy, dets = feats[order], xy[order], cloud.data[order]
    diff = feats[:, None, :] - feats[None, :, :]
    adj = (diff * diff).sum(axis=2) <= eps * eps
    core = adj.sum(axis=1) >= min_pts
    labels = np.full(len(feats), -1)
    n_clusters = 0
    for seed in range(len(feats)):
        if not core[seed] or labels[seed] >= 0:
            continue
        labels[seed] = n_clusters
        queue = [seed]
        while queue:
            p = queue.pop()
            if not core[p]:
                continue
            for q in np.flatnonzero(adj[p] & (labels < 0)):
                labels[q] = n_clusters
                queue.append(q)
        n_clusters += 1
    out = []
    for c in range(n_clusters):
        m = labels == c
        pts = xy[m]
        out.append(Cluster(dets[m], pts, (float(pts[:, 0].mean()), float(pts[:, 1].mean())),
                           float(dets[m, 2].mean())))
    return out


def _principal_extent(pts: np.ndarray):
    """Principal-axis angle and the point spread along/across it."""
    if len(pts) < 2:
        return None, 0.0, 0.0
    d = pts - pts.mean(axis=0)
    cov = d.T @ d
    evals, evecs = np.linalg.eigh(cov)
    axis = evecs[:, 1]
    theta = math.atan2(axis[1], axis[0])
    along = d @ axis
    across = d @ np.array([-axis[1], axis[0]])
    return theta, float(np.ptp(along)), float(np.ptp(across))


@dataclass
class _Track:
    track_id: int
    state: np.ndarray
    cov: np.ndarray
    hits: deque
    yaw: float
    length: float
    width: float
    age: int = 1
    misses: int = 0
    confirmed: bool = False

    def estimate(self) -> TrackEstimate:
        x, y, vx, vy = (float(v) for v in self.state)
        return TrackEstimate(self.track_id, x, y, vx, vy, OrientedBox(x, y, self.yaw, self.length, self.width),
                             self.age, self.confirmed)


@dataclass
class TrackerState:
    config: PerceptionConfig = field(default_factory=PerceptionConfig)
    tracks: list = field(default_factory=list)
    next_id: int = 1


def _cv_matrices(dt, accel_sigma):
    F = np.eye(4)
    F[0, 2] = F[1, 3] = dt
    q = accel_sigma**2
    Q1 = q * np.array([[dt**3 / 3, dt**2 / 2], [dt**2 / 2, dt]])
    Q = np.zeros((4, 4))
    Q[np.ix_([0, 2], [0, 2])] = Q1
    Q[np.ix_([1, 3], [1, 3])] = Q1
    return F, Q


_H = np.hstack([np.eye(2), np.zeros((2, 2))])


def _update_box(tr: _Track, cl: Cluster, cfg: PerceptionConfig):
    theta, along, across = _principal_extent(cl.xy)
    if theta is None:
        return
    # the principal axis is only defined modulo pi; stay near the previous yaw
    theta = tr.yaw + wrap_angle(2.0 * (theta - tr.yaw)) / 2.0
    a = cfg.box_alpha
    tr.yaw = float(wrap_angle(tr.yaw + a * (theta - tr.yaw)))
    tr.length = (1 - a) * tr.length + a * max(along, cfg.min_extent)
    tr.width = (1 - a) * tr.width + a * max(across, cfg.min_extent)


def _spawn(state: TrackerState, cl: Cluster) -> _Track:
    cfg = state.config
    theta, along, across = _principal_extent(cl.xy)
    tr = _Track(
        track_id=state.next_id,
        state=np.array([cl.centroid[0], cl.centroid[1], 0.0, 0.0]),
        cov=np.diag([cfg.meas_sigma**2] * 2 + [cfg.init_vel_sigma**2] * 2),
        hits=deque([True], maxlen=cfg.confirm_n),
        yaw=0.0 if theta is None else theta,
        length=max(along, cfg.min_extent),
        width=max(across, cfg.min_extent),
    )
    tr.confirmed = cfg.confirm_m <= 1
    state.next_id += 1
    return tr


def tracker_step(state: TrackerState, clusters: Sequence[Cluster], dt: float):
    """Advance the tracker by one frame; returns the state and confirmed tracks."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    cfg = state.config
    F, Q = _cv_matrices(dt, cfg.accel_sigma)
    R = cfg.meas_sigma**2 * np.eye(2)
    for tr in state.tracks:
        tr.state = F @ tr.state
        tr.cov = F @ tr.cov @ F.T + Q
        tr.age += 1

    matched_tracks: dict[int, int] = {}
    if state.tracks and clusters:
        pred = np.array([tr.state[:2] for tr in state.tracks])
        cent = np.array([c.centroid for c in clusters])
        dist = np.hypot(pred[:, None, 0] - cent[None, :, 0], pred[:, None, 1] - cent[None, :, 1])
        cost = np.where(dist <= cfg.gate, dist, cfg.gate * 1e3 + 1e6)
        rows, cols = linear_sum_assignment(cost)
        for r, c in zip(rows, cols):
            if dist[r, c] <= cfg.gate:
                matched_tracks[r] = c

    survivors = []
    for i, tr in enumerate(state.tracks):
        if i in matched_tracks:
            cl = clusters[matched_tracks[i]]
            z = np.array(cl.centroid)
            S = _H @ tr.cov @ _H.T + R
            K = tr.cov @ _H.T @ np.linalg.inv(S)
            tr.state = tr.state + K @ (z - _H @ tr.state)
            tr.cov = (np.eye(4) - K @ _H) @ tr.cov
            tr.hits.append(True)
            tr.misses = 0
            _update_box(tr, cl, cfg)
        else:
            tr.hits.append(False)
            tr.misses += 1
        if not tr.confirmed and sum(tr.hits) >= cfg.confirm_m and tr.age >= cfg.confirm_m:
            tr.confirmed = True
        if tr.confirmed:
            if tr.misses >= cfg.delete_after:
                continue
        elif tr.age >= cfg.confirm_n:
            continue
        survivors.append(tr)

    used = set(matched_tracks.values())
    for j, cl in enumerate(clusters):
        if j not in used:
            survivors.append(_spawn(state, cl))
    state.tracks = survivors
    return state, [tr.estimate() for tr in survivors if tr.confirmed]


def run_perception(clouds: Sequence[PointCloud], ego_trajectory: Sequence[ObjectState], sensor: SensorPose,
                   config: PerceptionConfig | None = None, dt: float | None = None) -> list[list[TrackEstimate]]:
    """Cluster and track a whole cloud sequence; one estimate list per frame."""
    if not clouds:
        raise ValueError("need at least one point cloud")
    if len(clouds) != len(ego_trajectory):
        raise ValueError(f"frame misalignment: {len(clouds)} clouds vs {len(ego_trajectory)} ego states")
    idx = [c.frame_index for c in clouds]
    if any(b != a + 1 for a, b in zip(idx, idx[1:])):
        raise ValueError("frame misalignment: cloud frame indices are not consecutive")
    cfg = config or PerceptionConfig()
    if dt is None:
        stamps = [c.timestamp for c in clouds]
        dt = (stamps[-1] - stamps[0]) / (len(stamps) - 1) if len(stamps) > 1 else 0.05
    state = TrackerState(cfg)
    out = []
    for cloud, ego in zip(clouds, ego_trajectory):
        cls = cluster(cloud, sensor, ego, cfg.eps, cfg.min_pts, cfg.doppler_scale)
        state, est = tracker_step(state, cls, dt)
        out.append(est)
    return out


def save_tracks(path, frames: Sequence[Sequence[TrackEstimate]], **header) -> None:
    recs = [{"schema": TRACK_SCHEMA, **header}]
    for k, ests in enumerate(frames):
        recs.append(
            {
                "frame": k,
                "tracks": [
                    {
                        "id": e.track_id,
                        "x": fmt_float(e.x),
                        "y": fmt_float(e.y),
                        "vx": fmt_float(e.vx),
                        "vy": fmt_float(e.vy),
                        "box": [fmt_float(v) for v in (e.box.cx, e.box.cy, e.box.yaw, e.box.length, e.box.width)],
                        "age": e.age,
                        "confirmed": e.confirmed,
                    }
                    for e in ests
                ],
            }
        )
    write_jsonl(path, recs)


def load_tracks(path) -> tuple[dict, list[list[TrackEstimate]]]:
    recs = read_jsonl(path)
    if not recs or recs[0].get("schema") != TRACK_SCHEMA:
        raise ValueError(f"{path}: not a track log ({TRACK_SCHEMA})")
    frames = []
    for rec in recs[1:]:
        frames.append(
            [
                TrackEstimate(int(t["id"]), t["x"], t["y"], t["vx"], t["vy"], OrientedBox(*t["box"]),
                              int(t["age"]), bool(t["confirmed"]))
                for t in rec["tracks"]
            ]
        )
    return recs[0], frames
