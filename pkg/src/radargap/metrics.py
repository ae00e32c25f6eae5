"""Point-cloud and tracking divergence metrics.

Explicit metrics compare two radar point clouds of the same cycle; implicit
metrics compare the tracker output obtained from each.  ``explicit_metrics``
and ``implicit_metrics`` turn frame-aligned sequences into scenario records.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import kernels
from .geometry import clip_convex, polygon_area
from .perception import OrientedBox, TrackEstimate
from .sensor_models.types import PointCloud

METRIC_IDS = (
    "OSPA",
    "IoU",
    "RMSE_x",
    "RMSE_y",
    "CardinalityError",
    "DPP",
    "WD",
    "PNE",
    "WD_r",
    "WD_phi",
    "WD_doppler",
)


class EmptyInputError(ValueError):
    """A metric that needs points was given an empty set."""


def _points(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 1:
        a = a.reshape(-1, 1) if a.size else a.reshape(0, 1)
    return a


def _nonempty(*sets):
    for s in sets:
        if len(s) == 0:
            raise EmptyInputError("point set is empty")


# --------------------------------------------------------------------------
# explicit, high level


def metric_points(cloud: PointCloud, doppler_weight: float = 1.0) -> np.ndarray:
    """``(x, y, weighted doppler)`` rows of a cloud, in the sensor frame."""
    return np.column_stack([cloud.xy(), cloud.doppler * doppler_weight])


def dpp(X, Y) -> float:
    """Mean distance from each point of X to its nearest neighbour in Y."""
    X, Y = _points(X), _points(Y)
    _nonempty(X, Y)
    # correctly rounded sum: the result does not depend on summation order
    return math.fsum(kernels.nearest_distances(X, Y)) / len(X)


def dpp_worst(X, Y) -> float:
    return max(dpp(X, Y), dpp(Y, X))


def wasserstein(X, Y) -> float:
    """Exact earth mover's distance between uniform masses on X and Y,
    with Euclidean ground distance."""
    X, Y = _points(X), _points(Y)
    _nonempty(X, Y)
    if X.shape[1] != Y.shape[1]:
        raise ValueError("point sets differ in dimension")
    return kernels.emd_uniform(X, Y)


# --------------------------------------------------------------------------
# explicit, low level


def wd_1d(a, b) -> float:
    """Wasserstein-1 distance of two scalar samples: area between their CDFs."""
    a = np.sort(np.asarray(a, dtype=np.float64).ravel())
    b = np.sort(np.asarray(b, dtype=np.float64).ravel())
    _nonempty(a, b)
    grid = np.concatenate([a, b])
    grid.sort(kind="mergesort")
    steps = np.diff(grid)
    fa = np.searchsorted(a, grid[:-1], side="right") / a.size
    fb = np.searchsorted(b, grid[:-1], side="right") / b.size
    return float(np.sum(np.abs(fa - fb) * steps))


def pne(X, Y) -> int:
    return abs(len(X) - len(Y))


# --------------------------------------------------------------------------
# implicit, high level


def ospa(A, B, p: float = 2.0, c: float = 5.0) -> float:
    """Optimal sub-pattern assignment distance between two point patterns."""
    if p < 1 or not c > 0:
        raise ValueError("OSPA needs p >= 1 and c > 0")
    A = _points(A) if len(A) else np.empty((0, 2))
    B = _points(B) if len(B) else np.empty((0, 2))
    if len(A) > len(B):
        A, B = B, A
    m, n = len(A), len(B)
    if n == 0:
        return 0.0
    if m == 0:
        return float(c)
    d = np.sqrt(((A[:, None, :] - B[None, :, :]) ** 2).sum(axis=2))
    cost = np.minimum(d, c) ** p
    rows, cols = linear_sum_assignment(cost)
    total = cost[rows, cols].sum() + c**p * (n - m)
    return float(min((total / n) ** (1.0 / p), c))


def iou(a: OrientedBox, b: OrientedBox) -> float:
    """Intersection over union of two oriented rectangles."""
    for box in (a, b):
        if not (box.length > 0 and box.width > 0):
            raise ValueError("degenerate box")
    if a == b:
        return 1.0  # exact, where clipping would leave rounding residue
    pa, pb = a.corners(), b.corners()
    inter = polygon_area(clip_convex(pa, pb))
    union = a.length * a.width + b.length * b.width - inter
    return float(min(max(inter / union, 0.0), 1.0))


# --------------------------------------------------------------------------
# implicit, low level


def match_tracks(est: Sequence[TrackEstimate], ref: Sequence[TrackEstimate], gate: float = 5.0):
    """Optimal assignment on center distance; pairs farther than ``gate`` are dropped."""
    if not est or not ref:
        return []
    e = np.array([[t.x, t.y] for t in est])
    r = np.array([[t.x, t.y] for t in ref])
    d = np.hypot(e[:, None, 0] - r[None, :, 0], e[:, None, 1] - r[None, :, 1])
    cost = np.where(d <= gate, d, gate * 1e3 + 1e6)
    rows, cols = linear_sum_assignment(cost)
    return [(int(i), int(j)) for i, j in zip(rows, cols) if d[i, j] <= gate]


def rmse_axis(est: Sequence[Sequence[float]], ref: Sequence[Sequence[float]], axis: str) -> float:
    """Root mean squared error of one coordinate over all matched pairs.

    ``est`` and ``ref`` are equally long sequences of matched (x, y) positions.
    """
    k = {"x": 0, "y": 1}[axis]
    e = np.asarray(est, dtype=np.float64).reshape(-1, 2)
    r = np.asarray(ref, dtype=np.float64).reshape(-1, 2)
    if len(e) != len(r):
        raise ValueError("matched position lists differ in length")
    if len(e) == 0:
        raise EmptyInputError("no matched pairs over the scenario")
    return float(np.sqrt(np.mean((e[:, k] - r[:, k]) ** 2)))


def cardinality_error(est_counts: Sequence[int], ref_counts: Sequence[int]) -> float:
    if len(est_counts) != len(ref_counts):
        raise ValueError("count sequences are not frame-aligned")
    if not len(est_counts):
        return 0.0
    return float(np.mean(np.abs(np.asarray(est_counts) - np.asarray(ref_counts))))


# --------------------------------------------------------------------------
# scenario aggregation


@dataclass(frozen=True)
class MetricConfig:
    doppler_weight: float = 1.0  # m per m/s in the 3-D point metrics
    empty_cap: float = 100.0  # DPP/WD/WD_r value when exactly one cloud is empty
    phi_cap: float = 2.0 * math.radians(60.0)  # WD_phi value in that case
    doppler_cap: float = 20.0  # WD_doppler value in that case
    ospa_p: float = 2.0
    ospa_c: float = 5.0
    match_gate: float = 5.0

    def __post_init__(self):
        if self.ospa_p < 1 or not self.ospa_c > 0:
            raise ValueError("OSPA needs p >= 1 and c > 0")


@dataclass
class MetricRecord:
    """Per-frame values of one metric and its scenario-level value.

    ``scenario_mean`` is the mean of ``per_frame`` (frames with ``None`` are
    left out), except for the RMSE metrics which pool every matched pair of
    the scenario.  ``flagged_frames`` lists frames scored with a cap value.
    """

    metric_id: str
    per_frame: list
    scenario_mean: float
    flagged_frames: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "metric_id": self.metric_id,
            "per_frame": self.per_frame,
            "scenario_mean": self.scenario_mean,
            "flagged_frames": self.flagged_frames,
        }


def _mean(values, default=0.0):
    vals = [v for v in values if v is not None]
    return float(np.mean(vals)) if vals else default


def explicit_metrics(real: Sequence[PointCloud], sim: Sequence[PointCloud], cfg: MetricConfig):
    """DPP, WD, PNE and the feature-wise distances, frame by frame.

    ``real`` plays the role of X (reference) and ``sim`` of Y.
    """
    if len(real) != len(sim):
        raise ValueError("point cloud sequences are not frame-aligned")
    ids = ("DPP", "WD", "PNE", "WD_r", "WD_phi", "WD_doppler")
    vals = {k: [] for k in ids}
    flagged = []
    for k, (x, y) in enumerate(zip(real, sim)):
        vals["PNE"].append(pne(x.data, y.data))
        if len(x) == 0 and len(y) == 0:
            for m in ids:
                if m != "PNE":
                    vals[m].append(None)
            continue
        if len(x) == 0 or len(y) == 0:
            flagged.append(k)
            vals["DPP"].append(cfg.empty_cap)
            vals["WD"].append(cfg.empty_cap)
            vals["WD_r"].append(cfg.empty_cap)
            vals["WD_phi"].append(cfg.phi_cap)
            vals["WD_doppler"].append(cfg.doppler_cap)
            continue
        X = metric_points(x, cfg.doppler_weight)
        Y = metric_points(y, cfg.doppler_weight)
        vals["DPP"].append(dpp_worst(X, Y))
        vals["WD"].append(wasserstein(X, Y))
        vals["WD_r"].append(wd_1d(x.r, y.r))
        vals["WD_phi"].append(wd_1d(x.phi, y.phi))
        vals["WD_doppler"].append(wd_1d(x.doppler, y.doppler))
    out = {}
    for m in ids:
        out[m] = MetricRecord(m, vals[m], _mean(vals[m]), flagged if m != "PNE" else [])
    return out


def implicit_metrics(real: Sequence[Sequence[TrackEstimate]], sim: Sequence[Sequence[TrackEstimate]],
                     cfg: MetricConfig):
    """OSPA, IoU, RMSE_x/y and cardinality error, with the tracks from the
    reference data treated as ground truth."""
    if len(real) != len(sim):
        raise ValueError("track sequences are not frame-aligned")
    o, io, rx, ry = [], [], [], []
    n_est, n_ref = [], []
    pairs_est, pairs_ref = [], []
    for ref, est in zip(real, sim):
        o.append(ospa([[t.x, t.y] for t in ref], [[t.x, t.y] for t in est], cfg.ospa_p, cfg.ospa_c))
        n_est.append(len(est))
        n_ref.append(len(ref))
        matches = match_tracks(est, ref, cfg.match_gate)
        n_boxes = len(est) + len(ref) - len(matches)
        if n_boxes == 0:
            io.append(None)
        else:
            io.append(sum(iou(est[i].box, ref[j].box) for i, j in matches) / n_boxes)
        fe = [(est[i].x, est[i].y) for i, _ in matches]
        fr = [(ref[j].x, ref[j].y) for _, j in matches]
        pairs_est += fe
        pairs_ref += fr
        if matches:
            d = np.asarray(fe) - np.asarray(fr)
            rx.append(float(np.sqrt(np.mean(d[:, 0] ** 2))))
            ry.append(float(np.sqrt(np.mean(d[:, 1] ** 2))))
        else:
            rx.append(None)
            ry.append(None)
    out = {
        "OSPA": MetricRecord("OSPA", o, _mean(o)),
        # no box on either side anywhere means nothing disagreed
        "IoU": MetricRecord("IoU", io, _mean(io, default=1.0)),
        "CardinalityError": MetricRecord(
            "CardinalityError", [abs(a - b) for a, b in zip(n_est, n_ref)], cardinality_error(n_est, n_ref)
        ),
    }
    flagged = [] if pairs_est else list(range(len(real)))
    for axis, per in (("x", rx), ("y", ry)):
        try:
            value = rmse_axis(pairs_est, pairs_ref, axis)
        except EmptyInputError:
            value = cfg.match_gate
        out[f"RMSE_{axis}"] = MetricRecord(f"RMSE_{axis}", per, value, flagged)
    return out
