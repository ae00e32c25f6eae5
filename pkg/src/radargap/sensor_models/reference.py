"""Pseudo-real reference sensor: ray casting plus measurement imperfections.

Stands in for proving-ground recordings.  The noise defaults are assumptions
of this package, not measured values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..scenario import Frame, SensorPose
from .rtm import RtmParams, rtm_detect
from .types import PointCloud, from_polar_arrays


@dataclass(frozen=True)
class ReferenceNoise:
    sigma_r: float = 0.15  # m
    sigma_phi: float = math.radians(0.5)  # rad
    sigma_doppler: float = 0.1  # m/s
    dropout: float = 0.1  # probability a true detection is lost
    clutter_rate: float = 1.0  # mean false alarms per frame

    def __post_init__(self):
        if min(self.sigma_r, self.sigma_phi, self.sigma_doppler, self.clutter_rate) < 0:
            raise ValueError("noise parameters must be non-negative")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")


def reference_detect(frame: Frame, sensor: SensorPose, params: RtmParams, noise: ReferenceNoise,
                     rng: np.random.Generator, frame_index: int = 0) -> PointCloud:
    base = rtm_detect(frame, sensor, params, rng, frame_index)
    k = len(base)
    jitter = rng.standard_normal((k, 3)) * [noise.sigma_r, noise.sigma_phi, noise.sigma_doppler]
    lost = rng.random(k) < noise.dropout
    noisy = base.data + jitter
    n_clutter = int(rng.poisson(noise.clutter_rate))
    # clutter uniform over the field-of-view sector area, stationary in the world
    cr = sensor.range_max * np.sqrt(rng.random(n_clutter))
    cphi = rng.uniform(-sensor.fov_azimuth, sensor.fov_azimuth, n_clutter)
    _, boresight, svel = sensor.world_pose(frame.ego)
    cdop = -(svel[0] * np.cos(boresight + cphi) + svel[1] * np.sin(boresight + cphi))
    r = np.concatenate([noisy[~lost, 0], cr])
    phi = np.concatenate([noisy[~lost, 1], cphi])
    dop = np.concatenate([noisy[~lost, 2], cdop])
    return from_polar_arrays(frame_index, frame.timestamp, r, phi, dop, sensor)


def perturb_positions(cloud: PointCloud, sigma: float, sensor: SensorPose,
                      rng: np.random.Generator) -> PointCloud:
    """Add isotropic Cartesian position noise; points pushed out of view are dropped."""
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if sigma == 0:
        return cloud
    xy = cloud.xy() + rng.standard_normal((len(cloud), 2)) * sigma
    r = np.hypot(xy[:, 0], xy[:, 1])
    phi = np.arctan2(xy[:, 1], xy[:, 0])
    return from_polar_arrays(cloud.frame_index, cloud.timestamp, r, phi, cloud.doppler, sensor)
