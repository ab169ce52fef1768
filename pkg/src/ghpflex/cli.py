"""Command line entry point: ``python -m ghpflex <command>``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .envelope import EnvelopeOptions, envelope
from .opf import LossMode, NetworkError, Objective
from .scenario import (
    Scenario,
    ScenarioError,
    bundled_scenario_path,
    disturbance_bands,
    emit_results,
    format_clock,
    load_scenario,
    parse_clock,
    run_horizon,
    run_step,
)
from .thermal import SimulationError, ThermalState, simulate

logger = logging.getLogger("ghpflex")

EXIT_LOAD_FAILURE = 1


def _clock(text: str) -> int:
    try:
        return parse_clock(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected HH:MM, got {text!r}") from None


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, default=None,
                   help="scenario JSON file (default: the bundled 33-bus two-cluster scenario)")
    p.add_argument("--out-dir", type=Path, default=None, help="directory for output files")
    p.add_argument("--verbose", "-v", action="store_true", help="log progress and applied defaults")


def _opf_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--loss-mode", choices=[m.value for m in LossMode], default=None,
                   help="network loss model (overrides the scenario)")
    p.add_argument("--segments", type=int, default=None,
                   help="polygon segments for the apparent-power limits (overrides the scenario)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ghpflex",
        description="Demand envelopes of clustered ground-source heat pumps and their feeder-level flexibility.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="transient thermal simulation of one building",
                       description="Integrate the RC model of the first building served by a GHP under constant inputs.")
    _common(p)
    p.add_argument("--ghp", default=None, help="GHP id (default: first in the scenario)")
    p.add_argument("--time", type=_clock, default=None, help="clock time for the disturbance forecast (HH:MM)")
    p.add_argument("--duration", type=float, default=6 * 3600.0, help="simulated seconds (default 21600)")
    p.add_argument("--step", type=float, default=None, help="RK4 step in seconds (default: from time constants)")
    p.add_argument("--supply-temp", type=float, default=None, help="supply temperature (default: GHP upper limit)")
    p.add_argument("--flow-fraction", type=float, default=1.0, help="flow as a fraction of each radiator's maximum")
    p.add_argument("--initial-temp", type=float, default=None, help="uniform initial temperature (default: setpoint mean)")

    p = sub.add_parser("envelope", help="demand envelope of one GHP at one instant",
                       description="Upper, lower and desired electric power of one GHP.")
    _common(p)
    p.add_argument("--ghp", default=None, help="GHP id (default: first in the scenario)")
    p.add_argument("--time", type=_clock, default=None, help="clock time (HH:MM, default: horizon start)")
    p.add_argument("--grid-points", type=int, default=None,
                   help="also compute the exact lower bound with this many supply-temperature grid points")

    p = sub.add_parser("aggregate", help="feeder OPF at one instant",
                       description="Aggregate all envelopes per bus and solve the feeder OPF.")
    _common(p)
    _opf_flags(p)
    p.add_argument("--time", type=_clock, default=None, help="clock time (HH:MM, default: horizon start)")
    p.add_argument("--objective", choices=[o.value for o in Objective] + ["all"], default="all",
                   help="objective to report (default: all)")

    p = sub.add_parser("horizon", help="full run over the scenario horizon",
                       description="Run every time step and write envelopes.csv, feeder.csv and run_meta.json.")
    _common(p)
    _opf_flags(p)
    p.add_argument("--grid-points", type=int, default=None, help="override the scenario's grid_points setting")
    return parser


def _load(args) -> Scenario:
    path = args.config or bundled_scenario_path()
    sc = load_scenario(path)
    if getattr(args, "loss_mode", None):
        sc = replace(sc, loss_mode=LossMode(args.loss_mode))
    if getattr(args, "segments", None) is not None:
        if args.segments < 4:
            raise ScenarioError("/polygon_segments", "need at least 4 segments")
        sc = replace(sc, segments=args.segments)
    if getattr(args, "grid_points", None) is not None:
        if args.grid_points < 2:
            raise ScenarioError("/grid_points", "need at least 2 grid points")
        sc = replace(sc, grid_points=args.grid_points)
    return sc


def _pick_ghp(sc: Scenario, ghp_id):
    if ghp_id is None:
        return sc.ghps[0]
    for g in sc.ghps:
        if g.id == ghp_id:
            return g
    raise ScenarioError("/clusters", f"unknown GHP id {ghp_id!r}; known: {', '.join(g.id for g in sc.ghps)}")


def _write_json(out_dir: Path | None, name: str, payload) -> None:
    text = json.dumps(payload, indent=2)
    print(text)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / name).write_text(text + "\n")


def _cmd_simulate(args, sc: Scenario) -> int:
    ghp = _pick_ghp(sc, args.ghp)
    model = sc.buildings_of(ghp)[0]
    t = sc.start if args.time is None else args.time
    band = disturbance_bands(sc.profile, t)
    supply = ghp.supply_high if args.supply_temp is None else args.supply_temp
    init = args.initial_temp
    if init is None:
        init = float(np.mean([z.setpoint for z in model.zones]))
    flows = args.flow_fraction * model.flow_limits()
    try:
        traj = simulate(model, ThermalState.uniform(model, init), flows, supply, band.outdoor_midpoint(model.id),
                        band.gains_midpoint(model.id), args.duration, args.step)
    except (SimulationError, ValueError) as exc:
        print(f"simulation failed: {exc}", file=sys.stderr)
        return 1
    header = ["time_s"] + [f"zone_{z.id}" for z in model.zones]
    lines = [",".join(header)]
    for k in range(len(traj)):
        st = traj[k]
        lines.append(",".join([format(traj.times[k], ".9g")] + [format(v, ".9g") for v in st.zone_temps]))
    if args.out_dir is not None:
        args.out_dir.mkdir(parents=True, exist_ok=True)
        (args.out_dir / "trajectory.csv").write_text("\n".join(lines) + "\n")
    final = traj.final
    print(f"building {model.id}: {len(traj)} samples over {args.duration:g} s")
    for z, v in zip(model.zones, final.zone_temps):
        print(f"  {z.id}: {v:.3f} °C")
    return 0


def _cmd_envelope(args, sc: Scenario) -> int:
    ghp = _pick_ghp(sc, args.ghp)
    t = sc.start if args.time is None else args.time
    options = EnvelopeOptions(
        exact_lower=args.grid_points is not None,
        grid_points=sc.grid_points if args.grid_points is None else args.grid_points,
        settings=sc.settings,
    )
    env = envelope(ghp, sc.buildings_of(ghp), disturbance_bands(sc.profile, t), sc.weights, options)
    _write_json(args.out_dir, "envelope.json", {
        "time": format_clock(t),
        "ghp_id": ghp.id,
        "unit": "kW",
        "p_lower_aggressive": env.p_lower_aggressive,
        "p_lower_conservative": env.p_lower_conservative,
        "p_lower_exact": env.p_lower_exact,
        "p_upper": env.p_upper,
        "p_desired": env.p_desired,
        "supply_temp_desired": env.supply_temp_desired,
        "statuses": {k: v.value for k, v in env.statuses.items()},
        "invariant_violations": env.invariant_violations,
    })
    return 0


def _cmd_aggregate(args, sc: Scenario) -> int:
    t = sc.start if args.time is None else args.time
    step = run_step(sc, t)
    wanted = list(Objective) if args.objective == "all" else [Objective(args.objective)]
    payload = {
        "time": format_clock(t),
        "unit": "per-unit",
        "loss_mode": sc.loss_mode.value,
        "buses": {
            str(bus): {"lower_kw": a.lower, "upper_kw": a.upper, "desired_kw": a.desired, "ghps": list(a.members)}
            for bus, a in step.aggregates.items()
        },
        "objectives": {},
        "failures": step.failures,
    }
    for obj in wanted:
        sol = step.opf[obj]
        payload["objectives"][obj.value] = None if sol is None else {
            "status": sol.status.value,
            "P0": sol.p0 if sol.optimal else None,
            "Q0": sol.q0 if sol.optimal else None,
            "violated_family": sol.violated_family,
            "residuals": step.residuals[obj],
        }
    _write_json(args.out_dir, "aggregate.json", payload)
    return 0


def _cmd_horizon(args, sc: Scenario) -> int:
    out_dir = args.out_dir or Path("results")

    def progress(k, n):
        if k % 12 == 0 or k == n:
            logger.info("step %d/%d", k, n)

    result = run_horizon(sc, progress)
    paths = emit_results(result, out_dir)
    print(f"{len(result.steps)} steps, {len(sc.ghps)} GHPs in {result.wall_time:.1f} s; "
          f"{len(result.failures)} recorded failures")
    for p in paths.values():
        print(f"  wrote {p}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        sc = _load(args)
    except (ScenarioError, NetworkError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_LOAD_FAILURE
    handlers = {
        "simulate": _cmd_simulate,
        "envelope": _cmd_envelope,
        "aggregate": _cmd_aggregate,
        "horizon": _cmd_horizon,
    }
    try:
        return handlers[args.command](args, sc)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_LOAD_FAILURE


if __name__ == "__main__":
    sys.exit(main())
