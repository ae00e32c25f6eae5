"""Ray-casting radar model with a radar-equation SNR and detection threshold."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..scenario import Frame, SensorPose, polar_from_world
from .types import PointCloud

FOUR_PI_CUBED = (4.0 * math.pi) ** 3


@dataclass(frozen=True)
class RtmParams:
    """Radar-equation constants.

    Defaults describe a generic 77 GHz corner-of-the-envelope sensor; they are
    tuned so that a passenger car fades below threshold near 100 m, not
    measured from any specific device.
    """

    ray_count: int = 121
    tx_power_term: float = 1.0  # W
    gain_term: float = 300.0  # linear, includes processing gain
    wavelength: float = 3.9e-3  # m
    noise_power: float = 1e-12  # W
    snr_threshold: float = 10.0  # dB
    # piecewise-linear (SNR dB, p_detect) knots; flat beyond the ends
    detection_probability_curve: tuple[tuple[float, float], ...] = ((10.0, 0.0), (20.0, 1.0))
    rcs_per_unit_length: float = 2.0  # m^2 per m of illuminated edge

    def __post_init__(self):
        if self.ray_count < 16:
            raise ValueError("ray_count must be >= 16")
        if self.noise_power <= 0:
            raise ValueError("noise_power must be positive")
        if min(self.tx_power_term, self.gain_term, self.wavelength, self.rcs_per_unit_length) <= 0:
            raise ValueError("radar-equation constants must be positive")
        curve = tuple((float(s), float(p)) for s, p in self.detection_probability_curve)
        if not curve:
            raise ValueError("detection_probability_curve needs at least one knot")
        snr = [s for s, _ in curve]
        pd = [p for _, p in curve]
        if any(b <= a for a, b in zip(snr, snr[1:])):
            raise ValueError("detection curve SNR knots must increase")
        if any(b < a for a, b in zip(pd, pd[1:])) or min(pd) < 0 or max(pd) > 1:
            raise ValueError("detection probability must be non-decreasing within [0, 1]")
        object.__setattr__(self, "detection_probability_curve", curve)

    def p_detect(self, snr_db) -> np.ndarray:
        knots = np.array(self.detection_probability_curve)
        return np.interp(snr_db, knots[:, 0], knots[:, 1])


def rtm_snr_db(r, rcs, params: RtmParams):
    """Signal-to-noise ratio in dB of a reflection with cross section ``rcs`` at range ``r``."""
    r = np.asarray(r, dtype=np.float64)
    num = params.tx_power_term * params.gain_term**2 * params.wavelength**2 * np.asarray(rcs)
    return 10.0 * np.log10(num / (FOUR_PI_CUBED * r**4 * params.noise_power))


def ray_angles(sensor: SensorPose, params: RtmParams) -> np.ndarray:
    """Equiangular ray directions relative to boresight."""
    return np.linspace(-sensor.fov_azimuth, sensor.fov_azimuth, params.ray_count)


def rtm_reflections(frame: Frame, sensor: SensorPose, params: RtmParams):
    """Per-ray ``(range, snr_db, doppler, target_index)``; misses have inf range."""
    origin, boresight, _ = sensor.world_pose(frame.ego)
    rel = ray_angles(sensor, params)
    k = rel.shape[0]
    snr = np.full(k, -np.inf)
    dop = np.zeros(k)
    if not frame.targets:
        return np.full(k, np.inf), snr, dop, np.full(k, -1)
    rects = np.array([t.rect for t in frame.targets])
    dist, idx, cosinc = kernels.ray_cast(origin, boresight + rel, rects, sensor.range_max)
    hit = idx >= 0
    if hit.any():
        spacing = 2.0 * sensor.fov_azimuth / (params.ray_count - 1)
        # edge length covered by one ray's angular slot, capped at the box size
        longest = np.maximum(rects[idx[hit], 3], rects[idx[hit], 4])
        with np.errstate(divide="ignore"):
            footprint = np.minimum(dist[hit] * spacing / cosinc[hit], longest)
        snr[hit] = rtm_snr_db(dist[hit], params.rcs_per_unit_length * footprint, params)
        ang = boresight + rel[hit]
        pts = origin + dist[hit, None] * np.stack([np.cos(ang), np.sin(ang)], axis=1)
        vel = np.empty_like(pts)
        for j in np.unique(idx[hit]):
            sel = idx[hit] == j
            vel[sel] = frame.targets[j].point_velocities(pts[sel])
        _, _, dop[hit] = polar_from_world(pts, vel, sensor, frame.ego)
    return dist, snr, dop, idx


def rtm_detect(frame: Frame, sensor: SensorPose, params: RtmParams, rng: np.random.Generator,
               frame_index: int = 0) -> PointCloud:
    dist, snr, dop, _ = rtm_reflections(frame, sensor, params)
    # one uniform per ray, drawn unconditionally, keeps streams aligned
    u = rng.random(params.ray_count)
    above = snr >= params.snr_threshold
    keep = above & (u < params.p_detect(np.where(above, snr, params.snr_threshold)))
    rel = ray_angles(sensor, params)
    data = np.stack([dist[keep], rel[keep], dop[keep]], axis=1)
    return PointCloud(frame_index, frame.timestamp, data)
