"""Data-driven radar model.

Detections of a vehicle are described in the vehicle's body frame as
``(u, v, doppler_residual)``: the offset from the box center along the
length and width axes, plus the Doppler deviation from the rigid-body
radial velocity at that point.  One Gaussian mixture is fitted per
aspect-angle bin; the number of detections per frame is drawn from an
empirical distribution per range bin.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from sklearn.exceptions import ConvergenceWarning
from sklearn.mixture import GaussianMixture as _SkGMM

from ..geometry import rotation
from ..scenario import Frame, SensorFrameObject, SensorPose, object_in_sensor_frame, visibility
from .types import PointCloud, concat, from_polar_arrays

REG_COVAR = 1e-6
MAX_COMPONENTS = 5


@dataclass(frozen=True, eq=False)
class Mixture:
    weights: np.ndarray  # (C,)
    means: np.ndarray  # (C, 3)
    covariances: np.ndarray  # (C, 3, 3)
    chol: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        mu = np.asarray(self.means, dtype=np.float64).reshape(len(w), -1)
        cov = np.asarray(self.covariances, dtype=np.float64).reshape(len(w), mu.shape[1], mu.shape[1])
        if abs(w.sum() - 1.0) > 1e-9 or np.any(w < 0):
            raise ValueError("mixture weights must be non-negative and sum to 1")
        cov = 0.5 * (cov + np.transpose(cov, (0, 2, 1)))
        chol = np.empty_like(cov)
        for c in range(len(w)):
            try:
                chol[c] = np.linalg.cholesky(cov[c])
            except np.linalg.LinAlgError:
                cov[c] = cov[c] + REG_COVAR * np.eye(cov.shape[1])
                chol[c] = np.linalg.cholesky(cov[c])
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "covariances", cov)
        object.__setattr__(self, "chol", chol)

    @property
    def n_components(self) -> int:
        return len(self.weights)

    def mean(self) -> np.ndarray:
        return self.weights @ self.means

    def covariance(self) -> np.ndarray:
        mu = self.mean()
        d = self.means - mu
        return np.einsum("c,cij->ij", self.weights, self.covariances) + np.einsum("c,ci,cj->ij", self.weights, d, d)

    def sample(self, k: int, rng: np.random.Generator) -> np.ndarray:
        if k == 0:
            return np.empty((0, self.means.shape[1]))
        comp = rng.choice(self.n_components, size=k, p=self.weights)
        z = rng.standard_normal((k, self.means.shape[1]))
        return self.means[comp] + np.einsum("kij,kj->ki", self.chol[comp], z)

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "covariances": self.covariances.tolist(),
        }

    @classmethod
    def from_dict(cls, d) -> "Mixture":
        return cls(np.array(d["weights"]), np.array(d["means"]), np.array(d["covariances"]))


@dataclass(frozen=True, eq=False)
class DdmModel:
    aspect_edges: np.ndarray  # (B+1,) over (-pi, pi]
    mixtures: tuple[Mixture, ...]  # one per aspect bin
    range_edges: np.ndarray  # (R+1,) over (0, range_max]
    count_probs: np.ndarray  # (R, K_max+1)

    def __post_init__(self):
        probs = np.asarray(self.count_probs, dtype=np.float64)
        if np.any(np.abs(probs.sum(axis=1) - 1.0) > 1e-9) or np.any(probs < 0):
            raise ValueError("every count distribution must sum to 1")
        if len(self.mixtures) != len(self.aspect_edges) - 1:
            raise ValueError("need one mixture per aspect bin")
        if probs.shape[0] != len(self.range_edges) - 1:
            raise ValueError("need one count distribution per range bin")
        object.__setattr__(self, "count_probs", probs)
        object.__setattr__(self, "mixtures", tuple(self.mixtures))

    @property
    def k_max(self) -> int:
        return self.count_probs.shape[1] - 1

    def aspect_bin(self, angle: float) -> int:
        return _bin_index(self.aspect_edges, angle)

    def range_bin(self, r: float) -> int:
        return _bin_index(self.range_edges, r)

    def mean_count(self, r: float) -> float:
        p = self.count_probs[self.range_bin(r)]
        return float(np.arange(len(p)) @ p)

    def to_dict(self) -> dict:
        return {
            "aspect_edges": self.aspect_edges.tolist(),
            "mixtures": [m.to_dict() for m in self.mixtures],
            "range_edges": self.range_edges.tolist(),
            "count_probs": self.count_probs.tolist(),
        }

    @classmethod
    def from_dict(cls, d) -> "DdmModel":
        return cls(
            np.array(d["aspect_edges"]),
            tuple(Mixture.from_dict(m) for m in d["mixtures"]),
            np.array(d["range_edges"]),
            np.array(d["count_probs"]),
        )


def _bin_index(edges: np.ndarray, value: float) -> int:
    # bins are half-open on the left: (e_k, e_{k+1}]
    k = int(np.searchsorted(edges, value, side="left")) - 1
    return min(max(k, 0), len(edges) - 2)


def aspect_edges(bins: int) -> np.ndarray:
    return np.linspace(-math.pi, math.pi, bins + 1)


def body_features(obj: SensorFrameObject, cloud_xy: np.ndarray, doppler: np.ndarray) -> np.ndarray:
    """Map sensor-frame detections to ``(u, v, doppler_residual)``."""
    center = np.array([obj.x, obj.y])
    local = (cloud_xy - center) @ rotation(obj.yaw)
    return np.column_stack([local, doppler - rigid_radial_velocity(obj, cloud_xy)])


def rigid_radial_velocity(obj: SensorFrameObject, xy: np.ndarray) -> np.ndarray:
    """Radial velocity of body-fixed points seen from a sensor at the origin."""
    v = obj.point_velocities(xy)
    r = np.hypot(xy[:, 0], xy[:, 1])
    return (xy * v).sum(axis=1) / np.where(r > 0, r, 1.0)


def _nearest_fill(populated: np.ndarray, circular: bool) -> np.ndarray:
    """Index of the nearest populated bin for every bin (ties go to the lower index)."""
    n = len(populated)
    have = np.flatnonzero(populated)
    out = np.empty(n, dtype=np.int64)
    for b in range(n):
        d = np.abs(have - b)
        if circular:
            d = np.minimum(d, n - d)
        out[b] = have[np.argmin(d)]
    return out


def _fit_mixture(samples: np.ndarray, seed: int) -> Mixture:
    best = None
    best_bic = np.inf
    for c in range(1, min(MAX_COMPONENTS, len(samples)) + 1):
        gm = _SkGMM(n_components=c, covariance_type="full", reg_covar=REG_COVAR, random_state=seed, n_init=1)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConvergenceWarning)
            gm.fit(samples)
        bic = gm.bic(samples)
        if bic < best_bic - 1e-9:
            best, best_bic = gm, bic
    w = best.weights_ / best.weights_.sum()
    return Mixture(w, best.means_, best.covariances_)


def ddm_fit(
    training: Sequence[tuple[SensorFrameObject, PointCloud]],
    bins: int = 8,
    k_max: int = 20,
    range_max: float = 100.0,
    range_bin_width: float = 10.0,
    seed: int = 0,
) -> DdmModel:
    """Fit the aspect-conditioned mixtures and range-conditioned counts."""
    if not training:
        raise ValueError("training set is empty")
    if bins < 1 or k_max < 0:
        raise ValueError("bins must be >= 1 and k_max >= 0")
    a_edges = aspect_edges(bins)
    n_range = max(1, int(math.ceil(range_max / range_bin_width)))
    r_edges = np.linspace(0.0, range_max, n_range + 1)
    counts = np.zeros((n_range, k_max + 1))
    per_bin: list[list[np.ndarray]] = [[] for _ in range(bins)]
    for obj, cloud in training:
        rb = _bin_index(r_edges, obj.range)
        counts[rb, min(len(cloud), k_max)] += 1
        if len(cloud):
            per_bin[_bin_index(a_edges, obj.aspect)].append(body_features(obj, cloud.xy(), cloud.doppler))
    populated = np.array([bool(p) for p in per_bin])
    if not populated.any():
        raise ValueError("training clouds contain no detections")
    fitted = {}
    for b in np.flatnonzero(populated):
        fitted[b] = _fit_mixture(np.concatenate(per_bin[b], axis=0), seed)
    src = _nearest_fill(populated, circular=True)
    mixtures = tuple(fitted[src[b]] for b in range(bins))
    seen = counts.sum(axis=1) > 0
    rsrc = _nearest_fill(seen, circular=False)
    probs = counts[rsrc] / counts[rsrc].sum(axis=1, keepdims=True)
    return DdmModel(a_edges, mixtures, r_edges, probs)


def ddm_sample(frame: Frame, sensor: SensorPose, model: DdmModel, rng: np.random.Generator,
               frame_index: int = 0) -> PointCloud:
    parts = []
    support = np.arange(model.k_max + 1)
    for tgt in frame.targets:
        others = [o for o in frame.targets if o.id != tgt.id]
        if visibility(tgt, others, frame.ego, sensor) <= 0.0:
            continue
        obj = object_in_sensor_frame(tgt, frame.ego, sensor)
        k = int(rng.choice(support, p=model.count_probs[model.range_bin(obj.range)]))
        feats = model.mixtures[model.aspect_bin(obj.aspect)].sample(k, rng)
        if k == 0:
            continue
        xy = np.array([obj.x, obj.y]) + feats[:, :2] @ rotation(obj.yaw).T
        r = np.hypot(xy[:, 0], xy[:, 1])
        phi = np.arctan2(xy[:, 1], xy[:, 0])
        dop = rigid_radial_velocity(obj, xy) + feats[:, 2]
        parts.append(from_polar_arrays(frame_index, frame.timestamp, r, phi, dop, sensor).data)
    return concat(frame_index, frame.timestamp, parts)


def training_pairs(scenario, clouds: Sequence[PointCloud], gate: float = 2.0
                   ) -> list[tuple[SensorFrameObject, PointCloud]]:
    """Pair each single-target training frame with the detections near its box.

    Detections farther than ``gate`` outside the box are treated as clutter and
    left out, as a measurement-to-object association would.
    """
    out = []
    for frame, cloud in zip(scenario.frames, clouds):
        if len(frame.targets) != 1:
            raise ValueError("training frames must contain exactly one target")
        obj = object_in_sensor_frame(frame.targets[0], frame.ego, scenario.sensor)
        if len(cloud):
            local = (cloud.xy() - [obj.x, obj.y]) @ rotation(obj.yaw)
            near = (np.abs(local[:, 0]) <= obj.length / 2 + gate) & (np.abs(local[:, 1]) <= obj.width / 2 + gate)
            cloud = PointCloud(cloud.frame_index, cloud.timestamp, cloud.data[near])
        out.append((obj, cloud))
    return out
