from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from ..scenario import SensorPose
from ..serialization import fmt_float, read_jsonl, write_jsonl

DETECTION_SCHEMA = "radargap.detections/1"


class Detection(NamedTuple):
    r: float
    phi: float
    doppler: float


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Detections of one radar cycle, stored as an (K, 3) array of
    ``(r, phi, doppler)`` rows.  Row order carries no meaning."""

    frame_index: int
    timestamp: float
    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float64).reshape(-1, 3)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @classmethod
    def empty(cls, frame_index: int, timestamp: float) -> "PointCloud":
        return cls(frame_index, timestamp, np.empty((0, 3)))

    def __len__(self):
        return self.data.shape[0]

    def __eq__(self, other):
        if not isinstance(other, PointCloud):
            return NotImplemented
        return (
            self.frame_index == other.frame_index
            and self.timestamp == other.timestamp
            and np.array_equal(self.data, other.data)
        )

    __hash__ = None

    @property
    def detections(self) -> tuple[Detection, ...]:
        return tuple(Detection(*map(float, row)) for row in self.data)

    @property
    def r(self) -> np.ndarray:
        return self.data[:, 0]

    @property
    def phi(self) -> np.ndarray:
        return self.data[:, 1]

    @property
    def doppler(self) -> np.ndarray:
        return self.data[:, 2]

    def xy(self) -> np.ndarray:
        """Cartesian positions in the sensor frame."""
        return np.stack([self.r * np.cos(self.phi), self.r * np.sin(self.phi)], axis=1)

    def valid_for(self, sensor: SensorPose) -> bool:
        d = self.data
        return bool(
            np.all(np.isfinite(d))
            and np.all(d[:, 0] > 0)
            and np.all(d[:, 0] <= sensor.range_max)
            and np.all(np.abs(d[:, 1]) <= sensor.fov_azimuth)
        )


def from_polar_arrays(frame_index, timestamp, r, phi, doppler, sensor: SensorPose) -> PointCloud:
    """Stack detection columns, dropping anything outside the field of view."""
    r = np.asarray(r, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    keep = sensor.in_fov(r, phi) & np.isfinite(doppler)
    return PointCloud(frame_index, timestamp, np.stack([r[keep], phi[keep], np.asarray(doppler)[keep]], axis=1))


def save_detections(path, clouds: Sequence[PointCloud], **header) -> None:
    """One header record, then one record per frame with its detection triples."""
    head = {"schema": DETECTION_SCHEMA, **header}
    recs = [head]
    for c in clouds:
        recs.append(
            {
                "frame": int(c.frame_index),
                "t": fmt_float(c.timestamp),
                "detections": [[fmt_float(v) for v in row] for row in c.data],
            }
        )
    write_jsonl(path, recs)


def load_detections(path) -> tuple[dict, list[PointCloud]]:
    recs = read_jsonl(path)
    if not recs or recs[0].get("schema") != DETECTION_SCHEMA:
        raise ValueError(f"{path}: not a detection log ({DETECTION_SCHEMA})")
    clouds = []
    for rec in recs[1:]:
        dets = rec["detections"]
        if any(len(d) != 3 or not all(math.isfinite(float(v)) for v in d) for d in dets):
            raise ValueError(f"{path}: frame {rec.get('frame')}: malformed detection")
        clouds.append(PointCloud(int(rec["frame"]), float(rec["t"]), np.array(dets, dtype=np.float64)))
    return recs[0], clouds


def quantized(cloud: PointCloud) -> PointCloud:
    """The cloud as it reads back from a log file."""
    q = np.vectorize(fmt_float, otypes=[np.float64])(cloud.data) if len(cloud) else cloud.data
    return PointCloud(cloud.frame_index, fmt_float(cloud.timestamp), q)


def concat(frame_index: int, timestamp: float, parts: Iterable[np.ndarray]) -> PointCloud:
    parts = [p for p in parts if len(p)]
    data = np.concatenate(parts, axis=0) if parts else np.empty((0, 3))
    return PointCloud(frame_index, timestamp, data)
