"""Command-line harness: ``radargap simulate | evaluate | report``.

Output directory precedence: ``--out``, then ``$RADARGAP_OUT``, then
``output_dir`` in the config, then ``./radargap_out``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

from .config import ConfigError, EvaluationConfig, ScenarioSpec, load_config, parse_config
from .gap import DIRECTION, LEVELS, GapReport, evaluate_scenario
from .models import simulate, train_ddm
from .perception import run_perception, save_tracks
from .scenario import Scenario, build_scenario, save_scenario
from .sensor_models import save_detections
from .serialization import dumps, fmt_float

OUT_ENV = "RADARGAP_OUT"
DEFAULT_OUT = "radargap_out"
ARROW = {"down": "↓", "up": "↑"}

log = logging.getLogger("radargap")


class HarnessError(RuntimeError):
    pass


def _csv_list(text: str) -> list[str]:
    items = [s.strip() for s in text.split(",") if s.strip()]
    if not items:
        raise argparse.ArgumentTypeError("expected a comma-separated list")
    return items


def _seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must lie in [0, 2^64)")
    return v


def _jobs(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("--jobs must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML evaluation config")
    common.add_argument("--seed", type=_seed, help="master seed (overrides the config)")
    common.add_argument("--out", type=Path, help=f"output directory (overrides ${OUT_ENV} and the config)")
    common.add_argument("--jobs", type=_jobs, default=1, help="parallel scenario jobs")
    common.add_argument("--scenarios", type=_csv_list, help="comma-separated scenario names")
    common.add_argument("--models", type=_csv_list, help="comma-separated model names")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="radargap", description="Radar sensor-model simulation-to-reality gap harness")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="write scenario, detection and track logs")
    sub.add_parser("evaluate", parents=[common], help="compute gap reports and a summary table")
    rep = sub.add_parser("report", help="flatten gap reports to CSV or chart data")
    rep.add_argument("reports", nargs="*", type=Path, help="report files or directories holding them")
    rep.add_argument("--format", choices=("csv", "chart-data"), default="csv")
    rep.add_argument("--out", type=Path, help="output file (default: stdout)")
    rep.add_argument("-v", "--verbose", action="store_true")
    return p


def resolve_config(args) -> EvaluationConfig:
    if args.config is not None:
        cfg = load_config(args.config, args.seed)
    else:
        cfg = parse_config(None, args.seed)
    return cfg.select(args.scenarios, args.models)


def resolve_out(args, cfg: EvaluationConfig) -> Path:
    if args.out is not None:
        return args.out
    env = os.environ.get(OUT_ENV)
    if env:
        return Path(env)
    return Path(cfg.output_dir or DEFAULT_OUT)


def _prepare_out(path: Path) -> Path:
    try:
        path.mkdir(parents=True, exist_ok=True)
        probe = path / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise HarnessError(f"output directory {path} is not writable ({exc.strerror})") from exc
    return path


def _scenario(spec: ScenarioSpec, cfg: EvaluationConfig) -> Scenario:
    return build_scenario(spec.name, spec.params or None, spec.dt, spec.duration, cfg.sensor)


def _needs_ddm(cfg: EvaluationConfig) -> bool:
    return any(m.kind == "ddm" for m in cfg.models)


def _train(cfg: EvaluationConfig):
    if not _needs_ddm(cfg):
        return None
    log.info("fitting data-driven model on reference training drives")
    return train_ddm(cfg.reference, cfg.seed, cfg.ddm.bins, cfg.ddm.k_max, duration=cfg.ddm.duration)


def _run_parallel(fn, jobs: Sequence[tuple], n_jobs: int):
    if n_jobs <= 1 or len(jobs) <= 1:
        return [fn(*j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(n_jobs, len(jobs))) as pool:
        futures = [pool.submit(fn, *j) for j in jobs]
        return [f.result() for f in futures]


# --------------------------------------------------------------------------
# simulate


def _simulate_job(spec: ScenarioSpec, cfg: EvaluationConfig, ddm_model, out: Path) -> list[str]:
    scen = _scenario(spec, cfg)
    target = out / scen.name
    target.mkdir(parents=True, exist_ok=True)
    save_scenario(scen, target / "scenario.jsonl")
    written = [str(target / "scenario.jsonl")]
    for model in (cfg.reference, *cfg.models):
        try:
            clouds = simulate(scen, model, cfg.seed, ddm_model)
            tracks = run_perception(clouds, scen.ego_trajectory, scen.sensor, cfg.perception, scen.dt)
        except Exception as exc:
            raise HarnessError(f"{scen.name}/{model.name}: {exc}") from exc
        header = {"scenario": scen.name, "model": model.name, "kind": model.kind, "seed": cfg.seed}
        det = target / f"{model.name}.detections.jsonl"
        trk = target / f"{model.name}.tracks.jsonl"
        save_detections(det, clouds, **header)
        save_tracks(trk, tracks, **header)
        written += [str(det), str(trk)]
    return written


def cmd_simulate(cfg: EvaluationConfig, out: Path, jobs: int = 1) -> list[str]:
    out = _prepare_out(out)
    ddm_model = _train(cfg)
    written = []
    for files in _run_parallel(_simulate_job, [(s, cfg, ddm_model, out) for s in cfg.scenarios], jobs):
        written += files
    return written


# --------------------------------------------------------------------------
# evaluate


def _evaluate_job(spec: ScenarioSpec, cfg: EvaluationConfig, ddm_model) -> dict:
    scen = _scenario(spec, cfg)
    report = evaluate_scenario(scen, cfg.models, cfg.reference, cfg.perception, cfg.metric_config(), cfg.gap,
                               cfg.seed, ddm_model)
    return report.to_dict()


def summary_rows(reports: Sequence[GapReport]) -> list[list]:
    rows = [["scenario", "model", "FL I", "FL II", "FL III", "FL IV", "G"]]
    for r in reports:
        for m in r.models:
            rows.append([r.scenario, m.name, *(fmt_float(v) for v in m.levels.as_tuple()), fmt_float(m.gap)])
    return rows


def _write_csv(path_or_buffer, rows):
    if isinstance(path_or_buffer, (str, Path)):
        with open(path_or_buffer, "w", encoding="utf-8", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerows(rows)
    else:
        csv.writer(path_or_buffer, lineterminator="\n").writerows(rows)


def cmd_evaluate(cfg: EvaluationConfig, out: Path, jobs: int = 1) -> list[Path]:
    if cfg.gap.normalization == "minmax" and len(cfg.models) < 2:
        raise ConfigError(["models: min-max normalization needs at least 2 models (or gap.normalization: fixed)"])
    out = _prepare_out(out)
    ddm_model = _train(cfg)
    docs = _run_parallel(_evaluate_job, [(s, cfg, ddm_model) for s in cfg.scenarios], jobs)
    rdir = out / "reports"
    rdir.mkdir(exist_ok=True)
    paths = []
    for doc in docs:
        p = rdir / f"{doc['scenario']}.json"
        p.write_text(dumps(doc) + "\n", encoding="utf-8")
        paths.append(p)
    _write_csv(out / "summary.csv", summary_rows([GapReport.from_dict(d) for d in docs]))
    return paths


# --------------------------------------------------------------------------
# report


def read_report(path: Path) -> GapReport:
    try:
        return GapReport.from_dict(json.loads(path.read_text(encoding="utf-8")))
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise HarnessError(f"{path}: malformed report ({exc})") from exc


def _expand(paths: Sequence[Path]) -> list[Path]:
    files = []
    for p in paths:
        if p.is_dir():
            files += sorted(p.glob("*.json"))
        else:
            files.append(p)
    return files


def table_rows(reports: Sequence[GapReport]) -> list[list]:
    """Fidelity level, metric, direction, then one raw value per model."""
    names = []
    for r in reports:
        for m in r.models:
            if m.name not in names:
                names.append(m.name)
    rows = [["scenario", "fidelity_level", "metric", "direction", *names]]
    for r in reports:
        by_name = {m.name: m for m in r.models}
        for level, members in LEVELS.items():
            for metric in members:
                vals = [fmt_float(by_name[n].raw[metric]) if n in by_name else "" for n in names]
                rows.append([r.scenario, level, metric, ARROW[DIRECTION[metric]], *vals])
        for level_idx, level in enumerate(LEVELS):
            vals = [fmt_float(by_name[n].levels.as_tuple()[level_idx]) if n in by_name else "" for n in names]
            rows.append([r.scenario, level, "score", ARROW["down"], *vals])
        rows.append([r.scenario, "overall", "G", ARROW["down"],
                     *(fmt_float(by_name[n].gap) if n in by_name else "" for n in names)])
    return rows


def chart_rows(reports: Sequence[GapReport]) -> list[list]:
    rows = [["scenario", "model", "G"]]
    for r in reports:
        rows += [[r.scenario, m.name, fmt_float(m.gap)] for m in r.models]
    return rows


def cmd_report(paths: Sequence[Path], fmt: str = "csv") -> str:
    files = _expand(paths)
    reports = [read_report(p) for p in files]
    if not reports:
        log.warning("no report files given; emitting an empty export")
    rows = table_rows(reports) if fmt == "csv" else chart_rows(reports)
    if not reports:
        rows = rows[:1]
    buf = io.StringIO()
    _write_csv(buf, rows)
    return buf.getvalue()


# --------------------------------------------------------------------------


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        if args.command == "report":
            text = cmd_report(args.reports, args.format)
            if args.out is not None:
                args.out.parent.mkdir(parents=True, exist_ok=True)
                args.out.write_text(text, encoding="utf-8")
            else:
                sys.stdout.write(text)
            return 0
        cfg = resolve_config(args)
        out = resolve_out(args, cfg)
        if args.command == "simulate":
            files = cmd_simulate(cfg, out, args.jobs)
            log.info("wrote %d files under %s", len(files), out)
        else:
            paths = cmd_evaluate(cfg, out, args.jobs)
            log.info("wrote %d reports and %s", len(paths), out / "summary.csv")
        return 0
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # any stage failure maps to a nonzero exit
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
