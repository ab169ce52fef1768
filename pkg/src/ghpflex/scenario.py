"""Scenario loading, disturbance bands and the per-step envelope/OPF pipeline.

A scenario JSON file names a network file, building archetypes, GHP
clusters attached to buses, a time horizon and disturbance profile
parameters. :func:`run_horizon` computes every GHP envelope at every step,
aggregates them per bus and solves the three feeder objectives.
"""
from __future__ import annotations

import copy
import csv
import io
import json
import logging
import math
import platform
import time as _time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping

import jsonschema
import numpy as np

from . import __version__
from .envelope import DemandEnvelope, DesiredWeights, DisturbanceBand, EnvelopeOptions, GhpUnit, envelope
from .opf import (
    BusEnvelope,
    LossMode,
    Network,
    Objective,
    OpfSolution,
    estimate_losses,
    load_network,
    residual_report,
    solve_opf,
)
from .solver import SolverSettings, Status
from .thermal import BuildingModel, building_from_dict

logger = logging.getLogger(__name__)

__all__ = [
    "ScenarioError",
    "DisturbanceProfile",
    "Scenario",
    "BusAggregate",
    "StepResult",
    "HorizonResult",
    "load_scenario",
    "scenario_from_dict",
    "bundled_scenario_path",
    "disturbance_bands",
    "aggregate_bus",
    "run_step",
    "run_horizon",
    "emit_results",
    "format_clock",
    "parse_clock",
    "ENVELOPE_COLUMNS",
    "FEEDER_COLUMNS",
]

ENVELOPE_COLUMNS = (
    "time", "ghp_id", "p_lower_aggressive", "p_lower_conservative", "p_upper", "p_desired", "statuses",
)
FEEDER_COLUMNS = (
    "time", "P0_min", "P0_desired", "P0_max", "Q0_min", "Q0_desired", "Q0_max",
    "residual_min", "residual_desired", "residual_max", "statuses",
)


class ScenarioError(ValueError):
    """Schema violation or dangling reference in a scenario file."""

    def __init__(self, pointer: str, message: str):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer or "/"


# ---------------------------------------------------------------------------
# schema
# ---------------------------------------------------------------------------

_CLOCK = {"type": "string", "pattern": r"^([01]\d|2[0-3]):[0-5]\d$"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}

_RADIATOR = {
    "type": "object",
    "required": ["element_count", "element_capacity", "element_resistance", "flow_max"],
    "properties": {
        "element_count": {"type": "integer", "minimum": 1},
        "element_capacity": _POS,
        "element_resistance": _POS,
        "flow_max": _POS,
    },
}
_ZONE = {
    "type": "object",
    "required": ["id", "heat_capacity", "comfort_low", "comfort_high", "setpoint", "radiator"],
    "properties": {
        "id": {"type": "string"},
        "heat_capacity": _POS,
        "envelope_resistance": {"anyOf": [_POS, {"type": "null"}]},
        "comfort_low": {"type": "number"},
        "comfort_high": {"type": "number"},
        "setpoint": {"type": "number"},
        "gain": _NONNEG,
        "radiator": _RADIATOR,
    },
}
_ARCHETYPE = {
    "type": "object",
    "required": ["zones"],
    "properties": {
        "zones": {"type": "array", "minItems": 1, "items": _ZONE},
        "walls": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["zone_a", "zone_b", "heat_capacity", "resistance"],
                "properties": {"heat_capacity": _POS, "resistance": _POS},
            },
        },
    },
}
_GHP = {
    "type": "object",
    "required": ["cop_slope", "cop_intercept", "supply_low", "supply_high"],
    "properties": {
        "cop_slope": _POS,
        "cop_intercept": _POS,
        "supply_low": {"type": "number"},
        "supply_high": {"type": "number"},
        "power_factor": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "mode": {"enum": ["heating", "cooling"]},
    },
}
SCENARIO_SCHEMA = {
    "type": "object",
    "required": ["network", "archetypes", "clusters"],
    "properties": {
        "name": {"type": "string"},
        "network": {"type": "string"},
        "granularity_s": _POS,
        "horizon": {"type": "object", "properties": {"start": _CLOCK, "end": _CLOCK}},
        "power_factor": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "loss_mode": {"enum": [m.value for m in LossMode]},
        "polygon_segments": {"type": "integer", "minimum": 4},
        "grid_points": {"type": "integer", "minimum": 2},
        "weights": {"type": "object", "properties": {"comfort": _NONNEG, "efficiency": _NONNEG}},
        "solver": {
            "type": "object",
            "properties": {
                "feasibility_tol": _POS,
                "optimality_tol": _POS,
                "max_iterations": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
        "disturbances": {
            "type": "object",
            "properties": {
                "outdoor": {
                    "type": "object",
                    "properties": {
                        "mean": {"type": "number"},
                        "amplitude": _NONNEG,
                        "peak_hour": {"type": "number", "minimum": 0, "maximum": 24},
                        "band": _NONNEG,
                    },
                },
                "gains": {
                    "type": "object",
                    "properties": {
                        "band_relative": {"type": "number", "minimum": 0, "maximum": 1},
                        "occupancy": {"type": "object", "properties": {"start": _CLOCK, "end": _CLOCK}},
                        "unoccupied_factor": _NONNEG,
                    },
                },
            },
        },
        "archetypes": {"type": "object", "minProperties": 1, "additionalProperties": _ARCHETYPE},
        "clusters": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["bus", "archetype", "ghp"],
                "properties": {
                    "bus": {"type": "integer", "minimum": 0},
                    "archetype": {"type": "string"},
                    "ghps": {"type": "integer", "minimum": 1},
                    "buildings_per_ghp": {"type": "integer", "minimum": 1},
                    "ghp": _GHP,
                },
            },
        },
    },
}

DEFAULTS = {
    "name": "scenario",
    "granularity_s": 300,
    "horizon": {"start": "06:00", "end": "20:00"},
    "power_factor": 0.95,
    "loss_mode": "lossless",
    "polygon_segments": 8,
    "grid_points": 50,
    "weights": {"comfort": 1.0, "efficiency": 0.01},
    "solver": {},
    "disturbances": {
        "outdoor": {"mean": 0.0, "amplitude": 0.0, "peak_hour": 15.0, "band": 2.0},
        "gains": {"band_relative": 0.2, "occupancy": {"start": "00:00", "end": "23:59"}, "unoccupied_factor": 1.0},
    },
}
_CLUSTER_DEFAULTS = {"ghps": 1, "buildings_per_ghp": 1}


def _pointer(path) -> str:
    return "".join(f"/{p}" for p in path)


def _apply_defaults(data: dict, defaults: dict, prefix: str, applied: list[str]) -> None:
    for key, value in defaults.items():
        if key not in data:
            data[key] = copy.deepcopy(value)
            applied.append(f"{prefix}/{key}")
        elif isinstance(value, dict) and isinstance(data[key], dict):
            _apply_defaults(data[key], value, f"{prefix}/{key}", applied)


# ---------------------------------------------------------------------------
# clock helpers
# ---------------------------------------------------------------------------


def parse_clock(text: str) -> int:
    """``"HH:MM"`` to seconds after midnight."""
    hh, mm = text.split(":")
    return int(hh) * 3600 + int(mm) * 60


def format_clock(seconds: float) -> str:
    s = int(round(seconds))
    return f"{s // 3600:02d}:{(s % 3600) // 60:02d}"


# ---------------------------------------------------------------------------
# disturbances
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DisturbanceProfile:
    """Forecast curves and band widths.

    The outdoor curve is ``mean + amplitude * cos(2 pi (h - peak_hour) / 24)``
    with ``h`` in hours, shared by every building. Each zone's gain curve is
    its nominal gain, scaled by ``unoccupied_factor`` outside the occupancy
    window.
    """

    outdoor_mean: float = 0.0
    outdoor_amplitude: float = 0.0
    outdoor_peak_hour: float = 15.0
    outdoor_band: float = 2.0
    gain_band: float = 0.2
    occupancy: tuple[int, int] = (0, 24 * 3600)
    unoccupied_factor: float = 1.0
    zone_gains: Mapping[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.outdoor_band < 0 or self.gain_band < 0:
            raise ValueError("band half-widths must be nonnegative")
        if self.outdoor_amplitude < 0 or self.unoccupied_factor < 0:
            raise ValueError("amplitude and unoccupied factor must be nonnegative")
        gains = {k: np.asarray(v, dtype=float) for k, v in self.zone_gains.items()}
        for k, v in gains.items():
            if np.any(v < 0):
                raise ValueError(f"negative base gain for {k}")
        object.__setattr__(self, "zone_gains", gains)

    def outdoor(self, t: float) -> float:
        hours = t / 3600.0
        return self.outdoor_mean + self.outdoor_amplitude * math.cos(2 * math.pi * (hours - self.outdoor_peak_hour) / 24)

    def gain_factor(self, t: float) -> float:
        start, end = self.occupancy
        inside = start <= t <= end if start <= end else (t >= start or t <= end)
        return 1.0 if inside else self.unoccupied_factor

    def gains(self, building: str, t: float) -> np.ndarray:
        return self.zone_gains[building] * self.gain_factor(t)


def disturbance_bands(profile: DisturbanceProfile, t: float) -> DisturbanceBand:
    """Bands around the profile curves at time ``t`` (seconds after midnight).

    Outdoor: curve ± ``outdoor_band``; gains: curve × (1 ± ``gain_band``).
    Midpoints are the curves themselves.
    """
    t_out = profile.outdoor(t)
    outdoor = {}
    gains = {}
    gains_mid = {}
    for bid in profile.zone_gains:
        base = profile.gains(bid, t)
        outdoor[bid] = (t_out - profile.outdoor_band, t_out + profile.outdoor_band)
        gains[bid] = (base * (1 - profile.gain_band), base * (1 + profile.gain_band))
        gains_mid[bid] = base
    return DisturbanceBand(outdoor, gains, outdoor_mid={b: t_out for b in outdoor}, gains_mid=gains_mid)


# ---------------------------------------------------------------------------
# scenario
# ---------------------------------------------------------------------------


@dataclass
class Scenario:
    name: str
    network: Network
    network_path: str
    ghps: tuple[GhpUnit, ...]
    buildings: dict[str, BuildingModel]
    ghp_bus: dict[str, int]
    profile: DisturbanceProfile
    granularity: float
    start: int
    end: int
    loss_mode: LossMode
    segments: int
    grid_points: int
    weights: DesiredWeights
    settings: SolverSettings
    config: dict  # validated input with defaults filled in
    defaults_applied: list[str]

    @property
    def n_steps(self) -> int:
        return int(math.floor((self.end - self.start) / self.granularity + 1e-9)) + 1

    @property
    def times(self) -> list[float]:
        return [self.start + k * self.granularity for k in range(self.n_steps)]

    def buildings_of(self, ghp: GhpUnit) -> list[BuildingModel]:
        return [self.buildings[b] for b in ghp.buildings]

    def bus_members(self) -> dict[int, list[GhpUnit]]:
        out: dict[int, list[GhpUnit]] = {}
        for g in self.ghps:
            out.setdefault(self.ghp_bus[g.id], []).append(g)
        return dict(sorted(out.items()))


def scenario_from_dict(raw: Mapping, base_dir: Path | str = ".") -> Scenario:
    """Validate ``raw`` against the scenario schema and resolve every reference."""
    data = copy.deepcopy(dict(raw))
    validator = jsonschema.Draft202012Validator(SCENARIO_SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise ScenarioError(_pointer(err.absolute_path), err.message)
    applied: list[str] = []
    _apply_defaults(data, DEFAULTS, "", applied)
    for k, cl in enumerate(data["clusters"]):
        _apply_defaults(cl, _CLUSTER_DEFAULTS, f"/clusters/{k}", applied)
    for item in applied:
        logger.info("default applied: %s", item)

    net_path = Path(base_dir) / data["network"]
    try:
        network = load_network(net_path)
    except FileNotFoundError:
        raise ScenarioError("/network", f"network file {str(net_path)!r} not found") from None
    except (KeyError, ValueError) as exc:
        raise ScenarioError("/network", f"invalid network file: {exc}") from None
    logger.info("power base %.6g MVA: 1 pu = %.6g kW", network.base_mva, 1000.0 * network.base_mva)

    start = parse_clock(data["horizon"]["start"])
    end = parse_clock(data["horizon"]["end"])
    if not end > start:
        raise ScenarioError("/horizon", "end must be after start")

    archetypes = data["archetypes"]
    buildings: dict[str, BuildingModel] = {}
    gains: dict[str, np.ndarray] = {}
    ghps: list[GhpUnit] = []
    ghp_bus: dict[str, int] = {}
    bus_ids = set(network.bus_ids)
    for k, cl in enumerate(data["clusters"]):
        ptr = f"/clusters/{k}"
        if cl["bus"] not in bus_ids:
            raise ScenarioError(f"{ptr}/bus", f"bus {cl['bus']} is not in the network")
        if cl["archetype"] not in archetypes:
            raise ScenarioError(f"{ptr}/archetype", f"unknown archetype {cl['archetype']!r}")
        arch = archetypes[cl["archetype"]]
        unit = cl["ghp"]
        for g in range(cl["ghps"]):
            gid = f"bus{cl['bus']:02d}-{cl['archetype']}-g{g + 1}"
            if gid in ghp_bus:
                raise ScenarioError(ptr, f"duplicate GHP id {gid}")
            bids = []
            for j in range(cl["buildings_per_ghp"]):
                bid = f"{gid}-b{j + 1}"
                try:
                    buildings[bid] = building_from_dict(arch, bid)
                except (KeyError, ValueError) as exc:
                    raise ScenarioError(f"/archetypes/{cl['archetype']}", str(exc)) from None
                gains[bid] = np.array([float(z.get("gain", 0.0)) for z in arch["zones"]])
                bids.append(bid)
            try:
                ghps.append(
                    GhpUnit(
                        gid,
                        float(unit["cop_slope"]),
                        float(unit["cop_intercept"]),
                        float(unit["supply_low"]),
                        float(unit["supply_high"]),
                        float(unit.get("power_factor", data["power_factor"])),
                        tuple(bids),
                        unit.get("mode", "heating"),
                    )
                )
            except ValueError as exc:
                raise ScenarioError(f"{ptr}/ghp", str(exc)) from None
            ghp_bus[gid] = int(cl["bus"])

    dist = data["disturbances"]
    occ = dist["gains"]["occupancy"]
    profile = DisturbanceProfile(
        outdoor_mean=float(dist["outdoor"]["mean"]),
        outdoor_amplitude=float(dist["outdoor"]["amplitude"]),
        outdoor_peak_hour=float(dist["outdoor"]["peak_hour"]),
        outdoor_band=float(dist["outdoor"]["band"]),
        gain_band=float(dist["gains"]["band_relative"]),
        occupancy=(parse_clock(occ["start"]), parse_clock(occ["end"])),
        unoccupied_factor=float(dist["gains"]["unoccupied_factor"]),
        zone_gains=gains,
    )
    try:
        weights = DesiredWeights(float(data["weights"]["comfort"]), float(data["weights"]["efficiency"]))
    except ValueError as exc:
        raise ScenarioError("/weights", str(exc)) from None
    return Scenario(
        name=str(data["name"]),
        network=network,
        network_path=str(data["network"]),
        ghps=tuple(ghps),
        buildings=buildings,
        ghp_bus=ghp_bus,
        profile=profile,
        granularity=float(data["granularity_s"]),
        start=start,
        end=end,
        loss_mode=LossMode(data["loss_mode"]),
        segments=int(data["polygon_segments"]),
        grid_points=int(data["grid_points"]),
        weights=weights,
        settings=SolverSettings(**data["solver"]),
        config=data,
        defaults_applied=applied,
    )


def load_scenario(path) -> Scenario:
    """Read and validate a scenario file; the network path is resolved relative to it."""
    path = Path(path)
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ScenarioError("", f"scenario file {str(path)!r} not found") from None
    except json.JSONDecodeError as exc:
        raise ScenarioError("", f"invalid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ScenarioError("", "scenario must be a JSON object")
    return scenario_from_dict(raw, path.parent)


def bundled_scenario_path() -> Path:
    """Path of the bundled two-cluster 33-bus scenario."""
    return Path(str(resources.files("ghpflex") / "data" / "ieee33_two_clusters.json"))


# ---------------------------------------------------------------------------
# horizon
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BusAggregate:
    """Summed member envelopes at one bus, in kW."""

    bus: int
    lower: float | None
    upper: float | None
    desired: float | None
    power_factor: float
    members: tuple[str, ...]

    @property
    def complete(self) -> bool:
        return None not in (self.lower, self.upper, self.desired)


def aggregate_bus(bus: int, members: list[GhpUnit], envelopes: Mapping[str, DemandEnvelope]) -> BusAggregate:
    """Sum aggressive lower, upper and desired powers of the GHPs at ``bus``.

    Member power factors must agree, since the bus block carries a single one.
    """
    pfs = {g.power_factor for g in members}
    if len(pfs) != 1:
        raise ValueError(f"bus {bus}: GHPs with different power factors cannot share one block")
    envs = [envelopes[g.id] for g in members]

    def total(name):
        vals = [getattr(e, name) for e in envs]
        return None if any(v is None for v in vals) else float(sum(vals))

    return BusAggregate(
        bus, total("p_lower_aggressive"), total("p_upper"), total("p_desired"), pfs.pop(), tuple(g.id for g in members)
    )


@dataclass
class StepResult:
    time: float
    envelopes: dict[str, DemandEnvelope]
    aggregates: dict[int, BusAggregate]
    opf: dict[Objective, OpfSolution | None]
    residuals: dict[Objective, dict[str, float] | None]
    timings: dict[str, float]
    failures: list[str]


@dataclass
class HorizonResult:
    scenario: Scenario
    steps: list[StepResult]
    wall_time: float

    @property
    def failures(self) -> list[tuple[str, str]]:
        return [(format_clock(s.time), f) for s in self.steps for f in s.failures]


def run_step(scenario: Scenario, t: float) -> StepResult:
    """Envelopes, bus aggregates and the three OPF solves at one time step."""
    failures: list[str] = []
    t0 = _time.perf_counter()
    bands = disturbance_bands(scenario.profile, t)
    options = EnvelopeOptions(settings=scenario.settings)
    envs = {}
    for g in scenario.ghps:
        env = envelope(g, scenario.buildings_of(g), bands, scenario.weights, options)
        envs[g.id] = env
        for key, status in env.statuses.items():
            # conservative infeasibility is an expected outcome, kept in the statuses column
            if status is not Status.OPTIMAL and key != "conservative":
                failures.append(f"{g.id}: {key} {status.value}")
    t1 = _time.perf_counter()

    aggregates = {bus: aggregate_bus(bus, members, envs) for bus, members in scenario.bus_members().items()}
    opf: dict[Objective, OpfSolution | None] = {o: None for o in Objective}
    residuals: dict[Objective, dict[str, float] | None] = {o: None for o in Objective}
    if all(a.complete for a in aggregates.values()):
        net = scenario.network
        blocks = {
            bus: BusEnvelope(
                float(net.kw_to_pu(a.lower)), float(net.kw_to_pu(a.upper)), float(net.kw_to_pu(a.desired)), a.power_factor
            )
            for bus, a in aggregates.items()
        }
        losses = None
        if scenario.loss_mode is LossMode.FIXED_BASE_CASE:
            # one base case per step keeps the three feasible sets identical
            base = solve_opf(net, blocks, Objective.DESIRED, scenario.settings, LossMode.LOSSLESS, scenario.segments)
            if base.optimal:
                losses = estimate_losses(net, base)
            else:
                failures.append(f"loss base case {base.status.value}")
        if scenario.loss_mode is LossMode.LOSSLESS or losses is not None:
            for obj in Objective:
                sol = solve_opf(net, blocks, obj, scenario.settings, scenario.loss_mode, scenario.segments, losses)
                opf[obj] = sol
                if sol.optimal:
                    residuals[obj] = residual_report(net, sol)
                else:
                    failures.append(f"OPF {obj.value} {sol.status.value} ({sol.violated_family})")
    else:
        missing = [b for b, a in aggregates.items() if not a.complete]
        failures.append(f"OPF skipped: incomplete envelopes at buses {missing}")
    t2 = _time.perf_counter()
    for f in failures:
        logger.warning("%s %s", format_clock(t), f)
    return StepResult(t, envs, aggregates, opf, residuals, {"envelopes": t1 - t0, "opf": t2 - t1}, failures)


def run_horizon(scenario: Scenario, progress=None) -> HorizonResult:
    """Run every step of the horizon in order. Per-step failures are recorded, not raised."""
    t0 = _time.perf_counter()
    steps = []
    for k, t in enumerate(scenario.times):
        steps.append(run_step(scenario, t))
        if progress is not None:
            progress(k + 1, scenario.n_steps)
    return HorizonResult(scenario, steps, _time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _num(v) -> str:
    return "" if v is None else format(float(v), ".9g")


def _worst(rep: Mapping[str, float] | None) -> float | None:
    if rep is None:
        return None
    return max(v for k, v in rep.items() if k != "flow_limit_disk")


def envelope_rows(result: HorizonResult) -> list[list[str]]:
    rows = []
    for step in result.steps:
        for gid in sorted(step.envelopes):
            e = step.envelopes[gid]
            statuses = ";".join(f"{k}={v.value}" for k, v in e.statuses.items())
            rows.append([
                format_clock(step.time), gid, _num(e.p_lower_aggressive), _num(e.p_lower_conservative),
                _num(e.p_upper), _num(e.p_desired), statuses,
            ])
    return rows


def feeder_rows(result: HorizonResult) -> list[list[str]]:
    order = (Objective.MIN_FEEDER, Objective.DESIRED, Objective.MAX_FEEDER)
    rows = []
    for step in result.steps:
        sols = [step.opf[o] for o in order]
        p0 = [_num(s.p0 if s is not None and s.optimal else None) for s in sols]
        q0 = [_num(s.q0 if s is not None and s.optimal else None) for s in sols]
        res = [_num(_worst(step.residuals[o])) for o in order]
        statuses = ";".join(f"{o.value}={'Skipped' if s is None else s.status.value}" for o, s in zip(order, sols))
        rows.append([format_clock(step.time), *p0, *q0, *res, statuses])
    return rows


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def emit_results(result: HorizonResult, out_dir) -> dict[str, Path]:
    """Write ``envelopes.csv`` (kW), ``feeder.csv`` (per-unit) and ``run_meta.json``."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    paths = {"envelopes": out / "envelopes.csv", "feeder": out / "feeder.csv", "meta": out / "run_meta.json"}
    paths["envelopes"].write_text(_csv_text(ENVELOPE_COLUMNS, envelope_rows(result)))
    paths["feeder"].write_text(_csv_text(FEEDER_COLUMNS, feeder_rows(result)))

    sc = result.scenario
    meta = {
        "scenario": sc.config,
        "defaults_applied": sc.defaults_applied,
        "units": {
            "envelopes.csv": "kW",
            "feeder.csv": "per-unit",
            "kw_per_pu": 1000.0 * sc.network.base_mva,
        },
        "steps": len(result.steps),
        "ghps": len(sc.ghps),
        "loss_mode": sc.loss_mode.value,
        "failures": [f"{t} {f}" for t, f in result.failures],
        "versions": {"ghpflex": __version__, "numpy": np.__version__, "python": platform.python_version()},
        "timings": {
            "total_s": result.wall_time,
            "envelopes_s": sum(s.timings["envelopes"] for s in result.steps),
            "opf_s": sum(s.timings["opf"] for s in result.steps),
        },
    }
    paths["meta"].write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return paths
