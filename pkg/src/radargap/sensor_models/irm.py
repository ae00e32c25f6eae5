"""Ideal radar model: noise-free scattering centers on the vehicle outline."""

import numpy as np

from ..geometry import perimeter_points, rotation
from ..scenario import Frame, SensorPose, polar_from_world, visibility
from .types import PointCloud, concat, from_polar_arrays

DEFAULT_POINTS_PER_OBJECT = 8


def shell_points(target, n: int) -> np.ndarray:
    """World coordinates of ``n`` evenly spaced outline points."""
    local, _ = perimeter_points(target.length, target.width, n)
    return local @ rotation(target.yaw).T + [target.x, target.y]


def irm_detect(frame: Frame, sensor: SensorPose, points_per_object: int = DEFAULT_POINTS_PER_OBJECT,
               frame_index: int = 0) -> PointCloud:
    if points_per_object < 1:
        raise ValueError("points_per_object must be >= 1")
    parts = []
    for tgt in frame.targets:
        others = [o for o in frame.targets if o.id != tgt.id]
        if visibility(tgt, others, frame.ego, sensor) <= 0.0:
            continue
        pts = shell_points(tgt, points_per_object)
        r, phi, dop = polar_from_world(pts, tgt.point_velocities(pts), sensor, frame.ego)
        parts.append(from_polar_arrays(frame_index, frame.timestamp, r, phi, dop, sensor).data)
    return concat(frame_index, frame.timestamp, parts)
