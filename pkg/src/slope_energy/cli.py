"""Batch command-line pipeline.

Subcommands: synth, ingest, calibrate, map, eval-path, superpose, plan.
Machine-readable CSV/JSON goes to the requested output files (or stdout);
human summaries go to stderr. Exit codes: 0 success, 2 invalid input,
1 runtime/computation failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from pathlib import Path

from . import calibration, path_energy, planner, synthbench, telemetry, wrench_model
from .errors import InputError, SlopeEnergyError
from .terrain import load_terrain


def _say(msg: str) -> None:
    print(msg, file=sys.stderr)


def _load_json(path):
    with open(path) as fh:
        return json.load(fh)


def _write_json(obj: dict, path: str | None) -> None:
    text = json.dumps(obj, indent=2)
    if path is None:
        print(text)
    else:
        Path(path).write_text(text + "\n")


def _load_model(path: str) -> wrench_model.WrenchModel:
    return wrench_model.WrenchModel.from_json_dict(_load_json(path))


def _deg_range(spec: str) -> list[float]:
    """Parse "lo:hi:n" degrees into n radian samples, inclusive of both ends."""
    try:
        lo, hi, n = spec.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError:
        raise InputError(f"range {spec!r} is not lo:hi:n") from None
    if n < 1:
        raise InputError("range sample count must be >= 1")
    if n == 1:
        return [math.radians(lo)]
    step = (hi - lo) / (n - 1)
    return [math.radians(lo + i * step) for i in range(n)]


def _cmd_synth(args) -> int:
    if args.scenario:
        scenario = synthbench.Scenario.from_json_dict(_load_json(args.scenario))
    else:
        scenario = synthbench.default_scenario()
    if args.seed is not None:
        scenario.seed = args.seed
    samples, manifest = synthbench.generate_telemetry(scenario)
    telemetry.write_log(args.output, samples)
    if args.manifest:
        _write_json(manifest, args.manifest)
    _say(f"synth: wrote {len(samples)} samples over {manifest['n_runs']} runs to {args.output}")
    return 0


def _cmd_ingest(args) -> int:
    samples = telemetry.read_log(args.input)
    overrides = _load_json(args.config) if args.config else {}
    cfg = telemetry.PreprocessConfig(**overrides)
    model = _load_model(args.model) if args.model else None
    cleaned, report = telemetry.preprocess(samples, cfg, model)
    telemetry.write_log(args.output, cleaned)
    if args.report:
        _write_json(report.to_json_dict(), args.report)
    _say(f"ingest: kept {report.output_count}/{report.input_count} samples "
         f"(low-speed {report.dropped_low_speed}, outlier {report.dropped_power_outlier}, "
         f"inconsistent {report.dropped_inconsistent})")
    return 0


def _cmd_calibrate(args) -> int:
    samples = telemetry.read_log(args.input)
    overrides = _load_json(args.config) if args.config else {}
    if "basis_masks" in overrides and overrides["basis_masks"] is not None:
        overrides["basis_masks"] = {k: tuple(v) for k, v in overrides["basis_masks"].items()}
    cfg = calibration.CalibrationConfig(**overrides)
    terrain = load_terrain(args.terrain) if args.terrain else None
    result = calibration.calibrate(samples, cfg, terrain)
    model = result.model
    if args.eval_mode:
        model = dataclasses.replace(model, eval_mode=args.eval_mode)
    _write_json(model.to_json_dict(), args.output)
    if args.report:
        _write_json(result.report.to_json_dict(), args.report)
    if args.wrench_samples:
        calibration.write_wrench_samples_csv(args.wrench_samples, result.wrench_samples)
    rms = {c: f.residual_rms for c, f in result.report.components.items()}
    _say(f"calibrate: {len(result.wrench_samples)} wrench samples from "
         f"{result.n_windows} windows ({result.n_skipped_windows} skipped); "
         f"residual RMS {rms}")
    return 0


def _cmd_map(args) -> int:
    model = _load_model(args.model)
    if args.alpha_deg:
        alphas = _deg_range(args.alpha_deg)
    elif model.alpha_fit_range_deg:
        lo, hi = model.alpha_fit_range_deg
        alphas = _deg_range(f"{lo}:{hi}:9")
    else:
        alphas = _deg_range("0:20:9")
    gammas = _deg_range(args.gamma_deg or "0:180:13")
    text = wrench_model.cost_map_csv(model, alphas, gammas, args.axis)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    _say(f"map: {len(alphas)}x{len(gammas)} {args.axis} cost grid")
    return 0


def _cmd_eval_path(args) -> int:
    path = path_energy.PathSpec.from_json_dict(_load_json(args.path))
    terrain = load_terrain(args.terrain)
    model = _load_model(args.model)
    if args.eval_mode:
        model = dataclasses.replace(model, eval_mode=args.eval_mode)
    report = path_energy.energy_of_path(path, terrain, model, args.dt)
    _write_json(report.to_json_dict(), args.output)
    _say(f"eval-path: {report.total_j:.3f} J over {report.duration_s:.2f} s"
         + (f" ({'; '.join(report.warnings)})" if report.warnings else ""))
    return 0


def _cmd_superpose(args) -> int:
    parts = [path_energy.PathSpec.from_json_dict(_load_json(p)) for p in args.parts]
    whole = path_energy.PathSpec.from_json_dict(_load_json(args.whole))
    terrain = load_terrain(args.terrain)
    model = _load_model(args.model)
    if args.eval_mode:
        model = dataclasses.replace(model, eval_mode=args.eval_mode)
    rel = path_energy.superposition_check(parts, whole, terrain, model, args.dt)
    parts_j = math.fsum(
        path_energy.energy_of_path(p, terrain, model, args.dt).total_j for p in parts
    )
    whole_j = path_energy.energy_of_path(whole, terrain, model, args.dt).total_j
    _write_json({
        "schema_version": 1,
        "relative_difference": rel,
        "parts_total_j": parts_j,
        "whole_total_j": whole_j,
    }, args.output)
    _say(f"superpose: relative difference {rel:.6g}")
    return 0


def _parse_cell(text: str, n_fields: int):
    try:
        vals = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise InputError(f"{text!r} is not a comma-separated integer tuple") from None
    if len(vals) != n_fields:
        raise InputError(f"expected {n_fields} comma-separated integers, got {text!r}")
    return vals


def _cmd_plan(args) -> int:
    terrain = load_terrain(args.terrain)
    model = _load_model(args.model)
    overrides = _load_json(args.config) if args.config else {}
    if args.nx:
        overrides["nx"] = args.nx
    if args.ny:
        overrides["ny"] = args.ny
    if args.cell_size:
        overrides["cell_size_m"] = args.cell_size
    if args.headings:
        overrides["headings"] = args.headings
    if args.allow_lateral:
        overrides["allow_lateral"] = True
    if "origin_xy" in overrides:
        overrides["origin_xy"] = tuple(overrides["origin_xy"])
    if "nx" not in overrides or "ny" not in overrides:
        raise InputError("grid size required: pass --nx/--ny or a --config with nx/ny")
    cfg = planner.LatticeConfig(**overrides)
    start = _parse_cell(args.start, 3)
    goal = _parse_cell(args.goal, 2)
    result = planner.plan(start, goal, terrain, model, cfg)
    _write_json(result.to_json_dict(), args.output)
    _say(f"plan: {result.energy_j:.3f} J, {len(result.path.primitives)} primitives, "
         f"{result.expanded_nodes} nodes expanded in {result.runtime_ms:.1f} ms")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slope-energy",
        description="Calibrate a heading-dependent locomotion energy model "
                    "and evaluate or plan paths on sloped terrain.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate synthetic telemetry from a scenario")
    p.add_argument("--scenario", help="scenario JSON (omit for the default protocol grid)")
    p.add_argument("--output", required=True, help="telemetry CSV to write")
    p.add_argument("--manifest", help="ground-truth manifest JSON to write")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("ingest", help="parse and clean a telemetry log")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True, help="cleaned telemetry CSV")
    p.add_argument("--report", help="rejection report JSON")
    p.add_argument("--config", help="PreprocessConfig overrides JSON")
    p.add_argument("--model", help="wrench model JSON for the consistency bound")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("calibrate", help="fit a wrench model from cleaned telemetry")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True, help="model JSON")
    p.add_argument("--report", help="fit report JSON")
    p.add_argument("--wrench-samples", help="wrench sample dataset CSV")
    p.add_argument("--config", help="CalibrationConfig overrides JSON")
    p.add_argument("--terrain", help="terrain JSON (required for frame_source=terrain)")
    p.add_argument("--eval-mode", choices=wrench_model.EVAL_MODES)
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("map", help="export an (alpha, gamma) cost map CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--output", help="CSV path (stdout if omitted)")
    p.add_argument("--alpha-deg", help="lo:hi:n sweep, degrees")
    p.add_argument("--gamma-deg", help="lo:hi:n sweep, degrees")
    p.add_argument("--axis", choices=("forward", "lateral", "yaw"), default="forward")
    p.set_defaults(func=_cmd_map)

    p = sub.add_parser("eval-path", help="integrate path energy under a model")
    p.add_argument("--path", required=True, help="path JSON")
    p.add_argument("--terrain", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--dt", type=float, default=path_energy.DEFAULT_DT)
    p.add_argument("--output", help="energy report JSON (stdout if omitted)")
    p.add_argument("--eval-mode", choices=wrench_model.EVAL_MODES)
    p.set_defaults(func=_cmd_eval_path)

    p = sub.add_parser("superpose", help="compare part energies against a whole path")
    p.add_argument("--parts", nargs="+", required=True, help="part path JSONs, in order")
    p.add_argument("--whole", required=True)
    p.add_argument("--terrain", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--dt", type=float, default=path_energy.DEFAULT_DT)
    p.add_argument("--output", help="JSON result (stdout if omitted)")
    p.add_argument("--eval-mode", choices=wrench_model.EVAL_MODES)
    p.set_defaults(func=_cmd_superpose)

    p = sub.add_parser("plan", help="minimum-energy lattice plan")
    p.add_argument("--terrain", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--start", required=True, help="ix,iy,ih")
    p.add_argument("--goal", required=True, help="ix,iy")
    p.add_argument("--config", help="LatticeConfig JSON")
    p.add_argument("--nx", type=int)
    p.add_argument("--ny", type=int)
    p.add_argument("--cell-size", type=float)
    p.add_argument("--headings", type=int)
    p.add_argument("--allow-lateral", action="store_true")
    p.add_argument("--output", help="plan JSON (stdout if omitted)")
    p.set_defaults(func=_cmd_plan)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, FileNotFoundError, json.JSONDecodeError, ValueError, TypeError) as exc:
        _say(f"error: {exc}")
        return 2
    except SlopeEnergyError as exc:
        _say(f"error: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
