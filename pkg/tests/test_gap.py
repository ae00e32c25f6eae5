import json
import math
from dataclasses import replace

import pytest
from hypothesis import given
from hypothesis import strategies as st

from radargap.gap import (
    DIRECTION,
    LEVELS,
    FidelityLevelScores,
    GapConfig,
    GapReport,
    NormalizationError,
    aggregate_levels,
    evaluate_scenario,
    gap,
    is_finite_report,
    level_of,
    normalize,
)
from radargap.metrics import METRIC_IDS
from radargap.models import SensorModelConfig, reference_config
from radargap.scenario import ScenarioError, build_scenario
from radargap.serialization import dumps

IRM = SensorModelConfig("IRM", "irm")
RTM = SensorModelConfig("RTM", "rtm")


@pytest.fixture(scope="module")
def short_eight():
    return build_scenario("eight_s", duration=3.0)


@pytest.fixture(scope="module")
def report(short_eight):
    return evaluate_scenario(short_eight, [IRM, RTM], reference_config(), master_seed=5)


# -- normalization ----------------------------------------------------------------


def test_normalize_example():
    out = normalize({"IRM": 0.342, "DDM": 0.314, "RTM": 0.304}, "OSPA")
    assert out["IRM"] == 1.0 and out["RTM"] == 0.0
    assert out["DDM"] == pytest.approx(0.010 / 0.038)


def test_normalize_constant_column_and_inversion():
    assert normalize({"a": 2.0, "b": 2.0}, "WD") == {"a": 0.0, "b": 0.0}
    out = normalize({"a": 0.9, "b": 0.1}, "IoU")
    assert out == {"a": 0.0, "b": 1.0}


def test_normalize_errors_and_fixed_range():
    with pytest.raises(NormalizationError):
        normalize({"a": 1.0}, "DPP")
    assert normalize({"a": 1.0}, "DPP", fixed_range=(0.0, 4.0)) == {"a": 0.25}
    # values beyond the fixed range saturate
    assert normalize({"a": 9.0, "b": -1.0}, "DPP", fixed_range=(0.0, 4.0)) == {"a": 1.0, "b": 0.0}
    with pytest.raises(NormalizationError):
        normalize({"a": 1.0}, "DPP", fixed_range=(1.0, 1.0))
    with pytest.raises(ValueError):
        normalize({"a": 1.0, "b": 2.0}, "DPP", direction="sideways")


values = st.dictionaries(st.sampled_from("ABCDEF"), st.floats(0, 100), min_size=2)


@given(values, st.sampled_from(METRIC_IDS))
def test_normalize_preserves_order(raw, metric):
    out = normalize(raw, metric)
    assert all(0.0 <= v <= 1.0 for v in out.values())
    sign = 1 if DIRECTION[metric] == "down" else -1
    for a in raw:
        for b in raw:
            if raw[a] < raw[b]:
                assert sign * out[a] <= sign * out[b]


def test_iou_inversion_order_is_irrelevant_under_minmax():
    raw = {"a": 0.2, "b": 0.7, "c": 0.5}
    inverted_first = normalize({k: 1 - v for k, v in raw.items()}, "OSPA")
    for k in raw:
        assert normalize(raw, "IoU")[k] == pytest.approx(inverted_first[k], abs=1e-15)


# -- levels and G -------------------------------------------------------------------


def test_level_registry_covers_all_metrics():
    assert sorted(m for ms in LEVELS.values() for m in ms) == sorted(METRIC_IDS)
    assert level_of("WD_phi") == "FL IV"
    with pytest.raises(KeyError):
        level_of("nope")


def test_aggregate_examples():
    zeros = {m: 0.0 for m in METRIC_IDS}
    assert aggregate_levels(zeros).as_tuple() == (0.0, 0.0, 0.0, 0.0)
    vals = dict(zeros, DPP=0.4, WD=0.2)
    assert aggregate_levels(vals).fl3 == pytest.approx(0.3)
    assert aggregate_levels(vals, {"DPP": 0.75, "WD": 0.25}).fl3 == pytest.approx(0.35)
    with pytest.raises(KeyError):
        aggregate_levels({"DPP": 0.1})


def test_gap_examples():
    assert gap(FidelityLevelScores(0, 0, 0, 0)) == 0.0
    assert gap(FidelityLevelScores(1, 1, 1, 1)) == 1.0
    assert gap(FidelityLevelScores(0.2, 0.4, 0.6, 0.8)) == pytest.approx(0.5)
    s = FidelityLevelScores(0.1, 0.7, 0.3, 0.9)
    assert gap(s, (0.25,) * 4) == gap(s)
    with pytest.raises(ValueError):
        gap(s, (1, 1, 1))
    with pytest.raises(ValueError):
        FidelityLevelScores(1.5, 0, 0, 0)


@given(st.dictionaries(st.sampled_from(METRIC_IDS), st.floats(0, 1), min_size=len(METRIC_IDS)))
def test_gap_is_zero_iff_all_normalized_zero(norm):
    g = gap(aggregate_levels(norm))
    assert -1e-12 <= g <= 1 + 1e-12
    assert (g == 0.0) == all(v == 0.0 for v in norm.values())


def test_gap_config_validation():
    with pytest.raises(ValueError):
        GapConfig(normalization="zscore")
    with pytest.raises(ValueError):
        GapConfig(normalization="fixed", fixed_ranges={"DPP": (0, 1)})


# -- end to end ---------------------------------------------------------------------


def test_report_structure(report):
    assert [m.name for m in report.models] == ["IRM", "RTM"]
    for m in report.models:
        assert set(m.raw) == set(METRIC_IDS)
        assert 0.0 <= m.gap <= 1.0
    assert is_finite_report(report)


def test_report_round_trip_and_reproducibility(short_eight, report):
    d = report.to_dict()
    assert d["schema"] == "radargap.report/1"
    assert GapReport.from_dict(json.loads(dumps(d))).to_dict() == json.loads(dumps(d))
    again = evaluate_scenario(short_eight, [IRM, RTM], reference_config(), master_seed=5)
    assert dumps(again.to_dict()) == dumps(d)
    with pytest.raises(ValueError):
        GapReport.from_dict({"schema": "other"})


def test_adding_a_model_keeps_raw_values(short_eight, report):
    noisy = replace(reference_config(), name="noisy_ref", seed_key=None, position_noise=0.5)
    bigger = evaluate_scenario(short_eight, [IRM, RTM, noisy], reference_config(), master_seed=5)
    for name in ("IRM", "RTM"):
        assert bigger.model(name).raw == report.model(name).raw


def test_reference_copy_has_zero_gap(short_eight):
    ref = reference_config()
    rep = evaluate_scenario(short_eight, [replace(ref, name="copy"), IRM], ref, master_seed=5)
    copy = rep.model("copy")
    assert copy.gap == 0.0
    assert all(v == (1.0 if k == "IoU" else 0.0) for k, v in copy.raw.items())


def test_evaluate_preconditions(short_eight):
    with pytest.raises(NormalizationError):
        evaluate_scenario(short_eight, [IRM], reference_config())
    with pytest.raises(ValueError):
        evaluate_scenario(short_eight, [IRM, IRM], reference_config())
    fixed = GapConfig(normalization="fixed", fixed_ranges={m: (0.0, 10.0) for m in METRIC_IDS})
    single = evaluate_scenario(short_eight, [IRM], reference_config(), gap_cfg=fixed)
    assert math.isfinite(single.model("IRM").gap)


def test_unevaluable_scenario_is_rejected():
    # the target sits outside the field of view for the whole drive
    scen = build_scenario("leading_s", duration=2.0)
    blind = replace(scen, sensor=replace(scen.sensor, yaw=math.pi))
    ref = reference_config()
    quiet = replace(ref, noise=replace(ref.noise, clutter_rate=0.0))
    with pytest.raises(ScenarioError):
        evaluate_scenario(blind, [IRM, RTM], quiet)
