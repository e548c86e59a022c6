"""Batch entry point: scene preprocessing, optimization, closure, radar demo.

Subcommands: ``run`` (full pipeline to an artifact directory), ``compare``
(one row per mode, Table-style), ``validate-scene``. All randomness hangs off
a single seed; artifacts are deterministic for a fixed config + seed, with
timestamps confined to run.log.
"""

import argparse
import csv
import dataclasses
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import evaluation, optimizer, radar, scene as scene_mod
from .channel import LinkBudget
from .errors import (InfeasibleCoverageError, InfeasiblePowerError,
                     RisDeployError, SceneFormatError)
from .propagation import PropagationConfig
from .sensing import OfdmParams, OfdmWaveform
from .units import lin2db

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_BAD_INPUT = 2
EXIT_INFEASIBLE = 3
EXIT_NOT_CONVERGED = 4

MODES = ("full-isac", "comm-only", "pathloss-baseline", "passive-orientation")

DEFAULT_CONFIG = {
    "carrier_hz": 28e9,
    "bandwidth_hz": 1e9,
    "subcarriers": 2560,
    "symbols": 2048,
    "tx_power_dbm": 43.0,
    "noise_psd_dbm_hz": -165.0,
    "snr_threshold_db": 20.0,
    "range_crb_max": 4e-4,
    "velocity_crb_max": 1e-2,
    "d_min": 0.3,
    "max_iterations": 500,
    "m_s": None,
    "beta_grid": [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
    "bits": 2,
    "efficiency": 0.3,
    "ref_cells_per_side": 20,
    "rcs": 0.04,
    "ue_height": 1.5,
    "uav_height": 50.0,
    "ue_cell_size": 5.0,
    "uav_cell_size": 10.0,
    "pl_max_db": 120.0,
    "reflection_loss_db": 10.0,
    "bs_array": [4, 4],
    "bs_gain_dbi": 3.0,
    "mode": "full-isac",
    "seed": 0,
    "size_margin_db": 1.0,
    "size_cap": 20.0,
    "uav_velocity": [4.0, 2.0, 0.0],
    "radar_noise": True,
    "detection_threshold_db": 12.0,
}

ENV_PREFIX = "RISDEPLOY_"


def load_config(path) -> dict:
    "Config JSON over defaults, then RISDEPLOY_* environment overrides."
    cfg = dict(DEFAULT_CONFIG)
    with open(path) as fh:
        try:
            user = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SceneFormatError("<config>", f"invalid JSON: {exc}") from exc
    unknown = set(user) - set(cfg) - {"scene"}
    if unknown:
        raise SceneFormatError(",".join(sorted(unknown)), "unknown config fields")
    cfg.update(user)
    for key in list(cfg):
        env = os.environ.get(ENV_PREFIX + key.upper())
        if env is not None:
            cfg[key] = json.loads(env)
    if "scene" not in cfg:
        raise SceneFormatError("scene", "missing required field")
    if cfg["mode"] not in MODES:
        raise SceneFormatError("mode", f"must be one of {MODES}")
    scene_path = Path(cfg["scene"])
    if not scene_path.is_absolute():
        cfg["scene"] = str((Path(path).parent / scene_path).resolve())
    return cfg


def build_context(cfg: dict, mode: str | None = None) -> optimizer.OptimizerContext:
    """Scene preprocessing: grids, coverage universe, greedy region selection,
    and the immutable optimizer context."""
    mode = mode or cfg["mode"]
    scn = scene_mod.load_scene(cfg["scene"])
    ofdm = OfdmParams(cfg["carrier_hz"], cfg["bandwidth_hz"],
                      int(cfg["subcarriers"]), int(cfg["symbols"]))
    link = LinkBudget(cfg["tx_power_dbm"], cfg["noise_psd_dbm_hz"],
                      cfg["bandwidth_hz"], cfg["snr_threshold_db"])
    prop = PropagationConfig(carrier_freq=cfg["carrier_hz"],
                             reflection_loss_db=cfg["reflection_loss_db"],
                             pl_max_db=cfg["pl_max_db"])
    ue_grids = [scene_mod.build_grids(scn, cfg["ue_cell_size"], cfg["ue_height"], area)
                for area in scn.ue_areas]
    centers = np.vstack([g.centers for g in ue_grids])
    ue_grid = scene_mod.GridSet(centers, ue_grids[0].extent, cfg["ue_height"])
    uav_grid = scene_mod.build_grids(scn, cfg["uav_cell_size"], cfg["uav_height"],
                                     scn.uav_area)
    uncovered = [i for i, c in enumerate(ue_grid.centers)
                 if not scene_mod.line_of_sight(scn, scn.bs_position, c)]
    candidates = scene_mod.candidate_regions(scn, ue_grid, uncovered, uav_grid, prop)
    regions = scene_mod.select_ris_regions(uncovered, candidates)
    for i, region in enumerate(regions):
        region.ris_index = i
    thresholds = optimizer.QosThresholds(link.snr_threshold_linear,
                                         cfg["range_crb_max"], cfg["velocity_crb_max"])
    moments = OfdmWaveform(ofdm, seed=int(cfg["seed"])).moments()
    return optimizer.OptimizerContext(
        scene=scn, regions=regions, ue_grid=ue_grid, uav_grid=uav_grid, link=link,
        prop=prop, thresholds=thresholds, ofdm=ofdm, moments=moments,
        bs_array_size=int(np.prod(cfg["bs_array"])), bs_gain_dbi=cfg["bs_gain_dbi"],
        efficiency=cfg["efficiency"], bits=int(cfg["bits"]),
        ref_cells_per_side=int(cfg["ref_cells_per_side"]), rcs=cfg["rcs"], mode=mode,
        beta_grid=tuple(cfg["beta_grid"]), d_min=cfg["d_min"],
        max_iterations=int(cfg["max_iterations"]), size_margin_db=cfg["size_margin_db"],
        size_cap=cfg["size_cap"])


def optimize(ctx: optimizer.OptimizerContext, cfg: dict) -> optimizer.OptimizationResult:
    if ctx.mode == "pathloss-baseline":
        return optimizer.pathloss_baseline(ctx, seed=int(cfg["seed"]))
    n_vertices = None if cfg["m_s"] is None else int(cfg["m_s"]) + 1
    simplex = optimizer.initial_simplex(ctx, seed=int(cfg["seed"]), n_vertices=n_vertices)
    return optimizer.nelder_mead_run(simplex, ctx)


def deployment_dict(ctx, result, report) -> dict:
    out = {
        "mode": result.mode,
        "objective": result.objective,
        "converged": bool(result.converged),
        "iterations": int(result.iterations),
        "positions": [list(map(float, p)) for p in result.positions],
        "orientations": [{"theta_r": o.theta_r, "psi_r": o.psi_r}
                         for o in result.orientations],
        "sizes": [{"area_m2": s.area, "side_m": s.side,
                   "cells_per_side": s.cells_per_side} for s in result.sizes],
        "coverage": [{"ris_index": r.ris_index, "building": r.building_index,
                      "covered_cells": list(map(int, r.covered_cells)),
                      "coverage_area_m2": r.coverage_area} for r in ctx.regions],
        "omega_per_uav": result.omega_per_uav.tolist(),
        "snr_margin_db": report.snr_margin_db,
        "gain_gap_db": [float(g) for g in report.gain_gap_db],
    }
    if result.mode != "comm-only":
        out["beta_per_uav"] = result.beta_per_uav.tolist()
        out["crb_range"] = report.crb_range.tolist()
        out["crb_velocity"] = report.crb_velocity.tolist()
        out["crb_range_margin_db"] = report.crb_range_margin_db
        out["crb_velocity_margin_db"] = report.crb_velocity_margin_db
    return out


def write_convergence_csv(path, trace):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "best_objective", "mean_spread_m",
                         "std_spread_m", "max_spread_m"])
        for rec in trace:
            writer.writerow([rec.iteration, repr(rec.best_objective),
                             repr(rec.mean_spread), repr(rec.std_spread),
                             repr(rec.max_spread)])


def write_snr_maps(out_dir: Path, ctx, report):
    paths = []
    for n, region in enumerate(ctx.regions):
        path = out_dir / f"snr_map_{n}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["cell_index", "x", "y", "snr_db"])
            for cell, snr in zip(region.covered_cells, report.snr_db[n]):
                x, y = ctx.ue_grid.centers[cell][:2]
                writer.writerow([cell, repr(float(x)), repr(float(y)), repr(float(snr))])
        paths.append(path)
    return paths


def write_rv_map_csv(path, rv: radar.RangeVelocityMap, max_range: float,
                     vel_window: int = 32):
    "Crop the map to the ranges of interest and a velocity window, then dump."
    keep_r = min(len(rv.range_axis), int(np.searchsorted(rv.range_axis, max_range)) + 32)
    mid = len(rv.velocity_axis) // 2
    lo, hi = max(0, mid - vel_window), min(len(rv.velocity_axis), mid + vel_window + 1)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["# range_resolution_m", rv.resolution[0]])
        writer.writerow(["# velocity_resolution_mps", rv.resolution[1]])
        writer.writerow(["range_m", "velocity_mps", "power_db"])
        for i in range(keep_r):
            for j in range(lo, hi):
                writer.writerow([repr(float(rv.range_axis[i])),
                                 repr(float(rv.velocity_axis[j])),
                                 repr(float(rv.power_db[i, j]))])


def radar_stage(ctx, result, cfg, out_dir: Path, log):
    "Exemplary UAV: synthesize returns, map, CFAR, LS position."
    uav = np.asarray(ctx.uav_grid.centers[0], dtype=float)
    vel = np.asarray(cfg["uav_velocity"], dtype=float)
    paths = evaluation.demo_sensing_paths(ctx, result, uav, vel)
    waveform = OfdmWaveform(ctx.ofdm, seed=int(cfg["seed"]))
    noise = ctx.link.noise_psd_w_hz if cfg["radar_noise"] else 0.0
    received = radar.synthesize_returns(waveform, paths, noise_psd=noise,
                                        seed=int(cfg["seed"]) + 1)
    rv = radar.range_velocity_map(received, waveform.grid, ctx.ofdm)
    expected_ranges = [p.range for p in paths]
    report = radar.detect_paths(rv, expected=len(paths),
                                threshold_db=cfg["detection_threshold_db"])
    detections = radar.associate_paths(report.detections, expected_ranges)
    write_rv_map_csv(out_dir / "rv_map.csv", rv, max(expected_ranges))
    with open(out_dir / "detections.json", "w") as fh:
        json.dump({"expected_ranges_m": expected_ranges,
                   "warning": report.warning,
                   "detections": [dataclasses.asdict(d) for d in detections]},
                  fh, indent=2)
    positions_out = {"true_position": uav.tolist()}
    by_path = {d.path_index_hypothesis: d.range_est for d in detections}
    if all(i in by_path for i in range(len(paths))):
        ranges = [by_path[0]] + [by_path[i + 1] for i in range(len(ctx.regions))]
        try:
            est, residual = radar.ls_position(ctx.scene.bs_position, result.positions,
                                              ranges, uav_height=float(uav[2]))
            positions_out.update({
                "estimate": est.tolist(), "residual_m": residual,
                "error_m": float(np.linalg.norm(est - uav)),
                "ranges_m": [float(r) for r in ranges],
            })
            log.info("LS position error %.3f m (residual %.4f m)",
                     positions_out["error_m"], residual)
        except RisDeployError as exc:
            positions_out["error"] = str(exc)
            log.warning("LS positioning failed: %s", exc)
    else:
        positions_out["error"] = "not all paths detected"
        log.warning("radar stage: %s", positions_out["error"])
    with open(out_dir / "positions.json", "w") as fh:
        json.dump(positions_out, fh, indent=2)


def run_pipeline(cfg: dict, out_dir: Path, mode: str | None = None) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    log = logging.getLogger("risdeploy")
    handler = logging.FileHandler(out_dir / "run.log", mode="w")
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO)
    try:
        t0 = time.time()
        ctx = build_context(cfg, mode)
        log.info("scene: %d buildings, %d UE cells (%d uncovered universe), "
                 "%d UAV cells, %d RIS regions", len(ctx.scene.buildings),
                 len(ctx.ue_grid), sum(len(r.covered_cells) for r in ctx.regions),
                 len(ctx.uav_grid), len(ctx.regions))
        result = optimize(ctx, cfg)
        log.info("optimizer (%s): objective %.6g, converged=%s after %d iterations",
                 ctx.mode, result.objective, result.converged, result.iterations)
        report = evaluation.closure_report(ctx, result, result.step1)
        log.info("closure: SNR margin %.2f dB, scaling-vs-synthesis gap per RIS %s dB",
                 report.snr_margin_db, np.round(report.gain_gap_db, 2).tolist())
        if ctx.mode != "comm-only":
            log.info("closure: CRB margins %.2f dB (range), %.2f dB (velocity)",
                     report.crb_range_margin_db, report.crb_velocity_margin_db)
        with open(out_dir / "deployment.json", "w") as fh:
            json.dump(deployment_dict(ctx, result, report), fh, indent=2)
        write_convergence_csv(out_dir / "convergence.csv", result.trace)
        write_snr_maps(out_dir, ctx, report)
        if ctx.mode != "comm-only":
            radar_stage(ctx, result, cfg, out_dir, log)
        log.info("done in %.1f s", time.time() - t0)
        return EXIT_OK if result.converged else EXIT_NOT_CONVERGED
    except RisDeployError as exc:
        return _fail(out_dir, log, exc)
    finally:
        log.removeHandler(handler)
        handler.close()


def _fail(out_dir: Path, log, exc: RisDeployError) -> int:
    kind = type(exc).__name__
    log.error("%s: %s", kind, exc)
    with open(out_dir / "error.json", "w") as fh:
        json.dump({"error": kind, "message": str(exc)}, fh, indent=2)
    if isinstance(exc, (SceneFormatError,)):
        return EXIT_BAD_INPUT
    if isinstance(exc, (InfeasibleCoverageError, InfeasiblePowerError)):
        return EXIT_INFEASIBLE
    return EXIT_ERROR


def compare_modes(cfg: dict, modes: list, out_dir: Path, threads: int = 1) -> int:
    "One comparison row per mode: sizes, coverage %, sensing feasibility."
    if len(modes) < 2:
        print(json.dumps({"error": "InvalidInputError",
                          "message": "compare needs at least two modes"}))
        return EXIT_BAD_INPUT
    out_dir.mkdir(parents=True, exist_ok=True)

    def one(mode):
        try:
            ctx = build_context(cfg, mode)
            result = optimize(ctx, cfg)
            report = evaluation.closure_report(ctx, result, result.step1)
            total = sum(len(r.covered_cells) for r in ctx.regions)
            served = sum(int(np.sum(s >= lin2db(ctx.thresholds.snr_threshold) - 3.0))
                         for s in report.snr_db)
            sensing_ok = (mode != "comm-only"
                          and report.crb_range_margin_db >= -3.0
                          and report.crb_velocity_margin_db >= -3.0)
            return {
                "mode": mode, "status": "ok",
                "sizes_m": [round(s.side, 4) for s in result.sizes],
                "total_area_m2": round(sum(s.area for s in result.sizes), 6),
                "coverage_pct": round(100.0 * served / total, 2),
                "sensing": "satisfied" if sensing_ok else "not available",
                "objective": result.objective,
            }
        except RisDeployError as exc:
            return {"mode": mode, "status": "failed",
                    "error": type(exc).__name__, "message": str(exc)}

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(one, modes))
    else:
        rows = [one(m) for m in modes]
    with open(out_dir / "comparison.json", "w") as fh:
        json.dump(rows, fh, indent=2)
    cols = ["mode", "status", "sizes_m", "total_area_m2", "coverage_pct",
            "sensing", "objective"]
    with open(out_dir / "comparison.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for row in rows:
            writer.writerow([row.get(c, "") for c in cols])
    return EXIT_OK if all(r["status"] == "ok" for r in rows) else EXIT_ERROR


def validate_scene(path) -> int:
    try:
        scn = scene_mod.load_scene(path)
    except SceneFormatError as exc:
        print(json.dumps({"error": "SceneFormatError", "field": exc.field,
                          "message": str(exc)}))
        return EXIT_BAD_INPUT
    print(json.dumps({"status": "ok", "buildings": len(scn.buildings),
                      "ue_areas": len(scn.ue_areas)}))
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="risdeploy",
                                     description="RIS deployment planner for "
                                                 "mmWave ISAC networks")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="full pipeline into an output directory")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", required=True)
    p_run.add_argument("--mode", choices=MODES)
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--threads", type=int, default=1)
    p_cmp = sub.add_parser("compare", help="run several modes, emit a table")
    p_cmp.add_argument("--config", required=True)
    p_cmp.add_argument("--out", required=True)
    p_cmp.add_argument("--modes", nargs="+", required=True, choices=MODES)
    p_cmp.add_argument("--seed", type=int)
    p_cmp.add_argument("--threads", type=int, default=1)
    p_val = sub.add_parser("validate-scene", help="check a scene JSON file")
    p_val.add_argument("scene")
    args = parser.parse_args(argv)
    if args.command == "validate-scene":
        return validate_scene(args.scene)
    try:
        cfg = load_config(args.config)
    except (OSError, SceneFormatError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}))
        return EXIT_BAD_INPUT
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.command == "run":
        if args.mode:
            cfg["mode"] = args.mode
        return run_pipeline(cfg, Path(args.out))
    return compare_modes(cfg, args.modes, Path(args.out), threads=args.threads)


if __name__ == "__main__":
    sys.exit(main())
