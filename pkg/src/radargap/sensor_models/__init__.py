"""Radar sensor models mapping ground-truth frames to point clouds."""

from .ddm import DdmModel, Mixture, ddm_fit, ddm_sample, training_pairs
from .irm import DEFAULT_POINTS_PER_OBJECT, irm_detect, shell_points
from .reference import ReferenceNoise, perturb_positions, reference_detect
from .rtm import RtmParams, ray_angles, rtm_detect, rtm_reflections, rtm_snr_db
from .types import Detection, PointCloud, load_detections, quantized, save_detections

__all__ = [
    "DEFAULT_POINTS_PER_OBJECT",
    "DdmModel",
    "Detection",
    "Mixture",
    "PointCloud",
    "ReferenceNoise",
    "RtmParams",
    "ddm_fit",
    "ddm_sample",
    "irm_detect",
    "load_detections",
    "perturb_positions",
    "quantized",
    "ray_angles",
    "reference_detect",
    "rtm_detect",
    "rtm_reflections",
    "rtm_snr_db",
    "save_detections",
    "shell_points",
    "training_pairs",
]
