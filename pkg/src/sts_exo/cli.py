"""Command-line front end: optimize, simulate, sweep, controller-sim, report.

All artifacts are CSV/JSON with deterministic float formatting; every output
file gets a `<name>.meta.json` sidecar carrying the config hash, seed and
package version so runs can be compared byte for byte.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .anthro import build_body_model
from .config import RunConfig, load_config
from .controller import (ControlGains, PressureController, read_pressure_log,
                         simulate_drive)
from .errors import NoFeasibleDesign, ParseError, StallError, StsExoError
from .mechanism import fit_free_length
from .optimizer import (DesignContext, NormConstants, OptimizerConfig, choose_solution,
                        nsga2_run)
from .sts_sim import (SIT_TO_STAND, STAND_TO_SIT, SimOptions, feasibility_report,
                      feasible_region_contiguous, moment_reference, simulate_transition,
                      user_grid_report)

log = logging.getLogger("sts_exo")

D2R = math.pi / 180.0


def _fmt(value) -> str:
    return repr(float(value))


def _write_csv(path: Path, header: str, rows) -> None:
    with open(path, "w", newline="") as f:
        f.write(header + "\n")
        for row in rows:
            f.write(",".join(v if isinstance(v, str) else _fmt(v) for v in row) + "\n")


def _write_sidecar(path: Path, cfg: RunConfig, command: str) -> None:
    meta = {"config_sha256": cfg.sha256(), "seed": cfg.seed,
            "version": __version__, "command": command}
    Path(str(path) + ".meta.json").write_text(json.dumps(meta, sort_keys=True,
                                                         indent=1) + "\n")


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _context(cfg: RunConfig, workers: int) -> tuple[DesignContext, OptimizerConfig]:
    user = cfg.user or cfg.grid.inputs()[0]
    body = build_body_model(user)
    ref = moment_reference(cfg.exo, cfg.angles, gravity=cfg.sim.gravity)
    ctx = DesignContext(
        body=body, exo=cfg.exo, angles=cfg.angles, spring=cfg.spring,
        nominal_placement=cfg.placement,
        norms=NormConstants(moment_ref=ref, dq=cfg.sim.dq),
        area_a1=cfg.area_a1, area_a2=cfg.area_a2, gravity=cfg.sim.gravity,
        seed_designs=(cfg.design,))
    opt = cfg.optimizer
    oc = OptimizerConfig(
        population=int(opt.get("population", 100)),
        generations=int(opt.get("generations", 200)),
        crossover_prob=float(opt.get("crossover_prob", 0.9)),
        sbx_eta=float(opt.get("sbx_eta", 15.0)),
        mutation_prob=opt.get("mutation_prob"),
        mutation_eta=float(opt.get("mutation_eta", 20.0)),
        seed=cfg.seed, workers=workers,
        reference_point=tuple(opt.get("reference_point", (5.0, 5.0, 5.0))))
    return ctx, oc


DESIGN_COLS = ("u_x", "u_y", "v_x", "v_y", "w_x", "w_y", "n_x", "n_y",
               "o_x", "o_y", "p_x", "p_y", "r1", "r2", "eta")


def cmd_optimize(cfg: RunConfig, workers: int) -> int:
    out = _outdir(cfg)
    ctx, oc = _context(cfg, workers)
    try:
        front, result = nsga2_run(oc, ctx)
    except NoFeasibleDesign as exc:
        log.error("optimization failed: %s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return 2

    header = "gen,j_moment,j_motion,j_torque,violation," + ",".join(DESIGN_COLS)
    rows = []
    for cand in front.members:
        obj = cand.objectives
        rows.append([front.generation, obj.j_moment, obj.j_motion, obj.j_torque,
                     cand.constraint_violation, *cand.design.to_array()])
    _write_csv(out / "pareto.csv", header, rows)
    _write_sidecar(out / "pareto.csv", cfg, "optimize")

    _write_csv(out / "pareto_plotdata.csv", "j_moment,j_motion,j_torque",
               [[c.objectives.j_moment, c.objectives.j_motion, c.objectives.j_torque]
                for c in front.members])
    _write_sidecar(out / "pareto_plotdata.csv", cfg, "optimize")

    summary = {
        "members": len(front.members),
        "generations": front.generation,
        "hypervolume": front.hypervolume,
        "reference_point": list(oc.reference_point),
        "history": result.history,
    }
    (out / "pareto_summary.json").write_text(json.dumps(summary, indent=1) + "\n")
    _write_sidecar(out / "pareto_summary.json", cfg, "optimize")

    chosen = choose_solution(front)
    chosen_payload = {
        "objectives": {"j_moment": chosen.objectives.j_moment,
                       "j_motion": chosen.objectives.j_motion,
                       "j_torque": chosen.objectives.j_torque},
        "violation": chosen.constraint_violation,
        "design": dict(zip(DESIGN_COLS, map(float, chosen.design.to_array()))),
    }
    (out / "chosen.json").write_text(json.dumps(chosen_payload, sort_keys=True,
                                                indent=1) + "\n")
    _write_sidecar(out / "chosen.json", cfg, "optimize")
    log.info("front size %d, hypervolume %.4f", len(front.members), front.hypervolume)
    return 0


def cmd_simulate(cfg: RunConfig, workers: int) -> int:
    out = _outdir(cfg)
    users = cfg.grid.inputs() if cfg.grid else [cfg.user]
    placement = fit_free_length(cfg.placement, cfg.angles)
    feas: dict = {}
    for user in users:
        body = build_body_model(user)
        pl = replace(placement, spring_count=user.spring_count)
        entry: dict = {"mass": user.total_mass, "height": user.height,
                       "spring_count": user.spring_count}
        for direction in (SIT_TO_STAND, STAND_TO_SIT):
            opts = replace(cfg.sim, raise_on_stall=True)
            try:
                trace = simulate_transition(body, cfg.exo, cfg.design, pl,
                                            cfg.spring, cfg.angles, direction,
                                            "quasi_static", opts)
                entry[direction] = {"completed": True,
                                    "peak_mo_norm": float(np.max(trace.Mo_norm))}
            except StallError as exc:
                trace = exc.trace
                entry[direction] = {"completed": False,
                                    "stall_angle_deg": exc.stall_angle / D2R
                                    if exc.stall_angle is not None else None,
                                    "error": str(exc)}
            if trace is not None:
                name = f"trace_{user.label}_{direction}.csv"
                trace.to_csv(out / name)
                _write_sidecar(out / name, cfg, "simulate")
        verdict = feasibility_report(body, cfg.exo, cfg.design, pl, cfg.spring,
                                     cfg.angles, cfg.sim)
        entry["feasible"] = verdict.feasible
        entry["standing_margin"] = verdict.standing_margin
        entry["sitting_margin"] = verdict.sitting_margin
        feas[user.label] = entry
    (out / "feasibility.json").write_text(json.dumps(feas, sort_keys=True,
                                                     indent=1) + "\n")
    _write_sidecar(out / "feasibility.json", cfg, "simulate")
    return 0


def cmd_sweep(cfg: RunConfig, workers: int) -> int:
    out = _outdir(cfg)
    grid = cfg.grid
    if grid is None:
        print("error: sweep requires a user_grid in the config", file=sys.stderr)
        return 2
    cells = user_grid_report(grid.masses, grid.heights, cfg.exo, cfg.design,
                             cfg.placement, cfg.spring, cfg.angles,
                             spring_count=grid.spring_count, opts=cfg.sim)
    header = ("mass,height,feasible,excursion_stand_cm,excursion_sit_cm,"
              "standing_margin,sitting_margin")
    rows = [[c.mass, c.height, str(int(c.feasible)), c.excursion_stand * 100.0,
             c.excursion_sit * 100.0, c.standing_margin, c.sitting_margin]
            for c in cells]
    _write_csv(out / "com_excursion.csv", header, rows)
    _write_sidecar(out / "com_excursion.csv", cfg, "sweep")
    summary = {
        "cells": len(cells),
        "feasible_cells": sum(c.feasible for c in cells),
        "contiguous": feasible_region_contiguous(cells),
        "excursion_stand_cm_range":
            [min(c.excursion_stand for c in cells) * 100.0,
             max(c.excursion_stand for c in cells) * 100.0],
    }
    (out / "sweep_summary.json").write_text(json.dumps(summary, sort_keys=True,
                                                       indent=1) + "\n")
    _write_sidecar(out / "sweep_summary.json", cfg, "sweep")
    return 0


def cmd_controller_sim(cfg: RunConfig, log_path: str) -> int:
    out = _outdir(cfg)
    try:
        frames = read_pressure_log(log_path)
    except ParseError as exc:
        print(f"error: {exc} (line {exc.line})", file=sys.stderr)
        return 2
    ctrl_cfg = dict(cfg.controller)
    if "rate_limit" in ctrl_cfg:
        ctrl_cfg["rate_limit"] = tuple(ctrl_cfg["rate_limit"])
    gains = ControlGains(**ctrl_cfg)
    controller = PressureController(gains)
    commands = [controller.update(fr) for fr in frames]
    _write_csv(out / "commands.csv", "t,v,omega",
               [[fr.timestamp, c.v, c.omega] for fr, c in zip(frames, commands)])
    _write_sidecar(out / "commands.csv", cfg, "controller-sim")
    dt = float(np.median(np.diff([fr.timestamp for fr in frames]))) \
        if len(frames) > 1 else 0.01
    path = simulate_drive(commands, dt)
    times = [frames[0].timestamp + k * dt for k in range(len(path))] \
        if frames else [0.0]
    _write_csv(out / "path.csv", "t,x,y,heading",
               [[times[k], *path[k]] for k in range(len(path))])
    _write_sidecar(out / "path.csv", cfg, "controller-sim")
    return 0


def cmd_report(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    report: dict = {"artifacts": {}}
    for name in ("pareto.csv", "pareto_summary.json", "chosen.json",
                 "feasibility.json", "com_excursion.csv", "commands.csv",
                 "path.csv"):
        p = out / name
        if p.exists():
            report["artifacts"][name] = {"bytes": p.stat().st_size}
    summary_path = out / "pareto_summary.json"
    if summary_path.exists():
        summary = json.loads(summary_path.read_text())
        report["pareto"] = {"members": summary.get("members"),
                            "hypervolume": summary.get("hypervolume")}
    feas_path = out / "feasibility.json"
    if feas_path.exists():
        feas = json.loads(feas_path.read_text())
        report["users"] = {label: entry.get("feasible")
                           for label, entry in feas.items()}
    text = json.dumps(report, sort_keys=True, indent=1)
    (out / "report.json").write_text(text + "\n")
    _write_sidecar(out / "report.json", cfg, "report")
    print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sts-exo",
        description="Passive STS exoskeleton simulation and design search")
    parser.add_argument("--config", default=None, help="JSON or INI run config")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--design", default=None,
                        help="design fixture JSON overriding the shipped reference")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("optimize", help="NSGA-II design search")
    sub.add_parser("simulate", help="transition traces and feasibility")
    sub.add_parser("sweep", help="user-grid COM excursion / usability map")
    ctrl = sub.add_parser("controller-sim", help="drive-command simulation")
    ctrl.add_argument("--log", required=True, help="pressure log CSV (t,s0..s9)")
    sub.add_parser("report", help="summarize artifacts in the output directory")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("STS_EXO_LOG", "WARNING").upper())
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, seed=args.seed, out_dir=args.out,
                          design_path=args.design)
        if args.command == "optimize":
            return cmd_optimize(cfg, args.workers)
        if args.command == "simulate":
            return cmd_simulate(cfg, args.workers)
        if args.command == "sweep":
            return cmd_sweep(cfg, args.workers)
        if args.command == "controller-sim":
            return cmd_controller_sim(cfg, args.log)
        if args.command == "report":
            return cmd_report(cfg)
    except StsExoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
