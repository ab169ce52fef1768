"""Per-heat-pump electric demand envelopes.

For one GHP serving a set of buildings, the steady-state zone balances
(walls and radiator states eliminated), the radiator capacity limits, the
supply-temperature range, the comfort boxes and the disturbance boxes form a
linear constraint block. Optimizing the delivered heat over that block and
dividing by the COP at the relevant supply temperature gives:

* ``p_upper``: maximum electric power, supply pinned at its upper limit;
* ``p_lower_aggressive`` / ``p_lower_conservative``: minimum electric power,
  with radiator capacity evaluated at the upper / lower supply limit;
* ``p_lower_exact``: optional parametric sweep over the supply temperature;
* ``p_desired``: comfort/efficiency trade-off at mid-band disturbances.

Powers are in kW (same unit as the thermal model).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .solver import QuadraticProgram, SolveResult, SolverSettings, Status, solve
from .thermal import BuildingModel, check_cop_range, cop, radiator_kappa_max, PhysicalConstants

logger = logging.getLogger(__name__)

__all__ = [
    "GhpUnit",
    "DisturbanceBand",
    "DesiredWeights",
    "EnvelopeOptions",
    "SteadyConstraints",
    "BoundResult",
    "DesiredResult",
    "DemandEnvelope",
    "assemble_steady_constraints",
    "upper_bound_power",
    "lower_bound_power",
    "fixed_supply_power",
    "lower_bound_power_exact",
    "desired_power",
    "envelope",
]


@dataclass(frozen=True)
class GhpUnit:
    """One heat pump and the buildings it serves."""

    id: str
    cop_slope: float
    cop_intercept: float
    supply_low: float
    supply_high: float
    power_factor: float
    buildings: tuple[str, ...]
    mode: str = "heating"

    def __post_init__(self):
        object.__setattr__(self, "buildings", tuple(self.buildings))
        if not (self.cop_slope > 0 and self.cop_intercept > 0):
            raise ValueError(f"GHP {self.id}: COP coefficients must be positive")
        if not self.supply_low < self.supply_high:
            raise ValueError(f"GHP {self.id}: supply_low must be below supply_high")
        check_cop_range(self.cop_slope, self.cop_intercept, self.supply_low, self.supply_high)
        if not 0 < self.power_factor <= 1:
            raise ValueError(f"GHP {self.id}: power factor must be in (0, 1]")
        if not self.buildings:
            raise ValueError(f"GHP {self.id} serves no buildings")
        if self.mode not in ("heating", "cooling"):
            raise ValueError(f"GHP {self.id}: mode must be 'heating' or 'cooling'")

    def cop(self, supply_temp: float) -> float:
        return cop(self.cop_slope, self.cop_intercept, supply_temp)

    @property
    def sign(self) -> float:
        return 1.0 if self.mode == "heating" else -1.0


@dataclass(frozen=True, eq=False)
class DisturbanceBand:
    """Forecast bands of outdoor temperature (per building) and internal gains (per zone).

    ``outdoor`` maps building id to ``(low, high)`` in °C and ``gains`` maps
    building id to ``(low, high)`` arrays in kW, one entry per zone. The
    optional ``*_mid`` mappings override the arithmetic midpoints.
    """

    outdoor: Mapping[str, tuple[float, float]]
    gains: Mapping[str, tuple[np.ndarray, np.ndarray]]
    outdoor_mid: Mapping[str, float] | None = None
    gains_mid: Mapping[str, np.ndarray] | None = None

    def __post_init__(self):
        gains = {k: (np.asarray(lo, float), np.asarray(hi, float)) for k, (lo, hi) in self.gains.items()}
        object.__setattr__(self, "gains", gains)
        object.__setattr__(self, "outdoor", {k: (float(lo), float(hi)) for k, (lo, hi) in self.outdoor.items()})
        for k, (lo, hi) in self.outdoor.items():
            if lo > hi:
                raise ValueError(f"outdoor band for {k} has low > high")
        for k, (lo, hi) in gains.items():
            if lo.shape != hi.shape or np.any(lo > hi):
                raise ValueError(f"gain band for {k} is inconsistent")

    @classmethod
    def from_models(cls, buildings: Sequence[BuildingModel]) -> "DisturbanceBand":
        """Band taken from the bounds stored on the building models themselves."""
        return cls(
            outdoor={b.id: (b.outdoor_low, b.outdoor_high) for b in buildings},
            gains={
                b.id: (
                    np.array([z.disturbance_low for z in b.zones]),
                    np.array([z.disturbance_high for z in b.zones]),
                )
                for b in buildings
            },
        )

    def outdoor_midpoint(self, building: str) -> float:
        if self.outdoor_mid is not None and building in self.outdoor_mid:
            return float(self.outdoor_mid[building])
        lo, hi = self.outdoor[building]
        return 0.5 * (lo + hi)

    def gains_midpoint(self, building: str) -> np.ndarray:
        if self.gains_mid is not None and building in self.gains_mid:
            return np.asarray(self.gains_mid[building], float)
        lo, hi = self.gains[building]
        return 0.5 * (lo + hi)


@dataclass(frozen=True)
class DesiredWeights:
    comfort_weight: float = 1.0
    efficiency_weight: float = 0.01

    def __post_init__(self):
        if self.comfort_weight < 0 or self.efficiency_weight < 0:
            raise ValueError("weights must be nonnegative")
        if self.comfort_weight == 0 and self.efficiency_weight == 0:
            raise ValueError("at least one weight must be positive")


@dataclass(frozen=True)
class EnvelopeOptions:
    exact_lower: bool = False
    grid_points: int = 50
    settings: SolverSettings = field(default_factory=SolverSettings)
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)


# ---------------------------------------------------------------------------
# constraint block
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class SteadyConstraints:
    """Linear constraint block over ``[Z, u, T_o, Q, (T_s)]``.

    Zones of all served buildings are stacked in building order. ``T_s`` is
    present only when the supply temperature is a decision variable.
    """

    n_vars: int
    zone_temps: slice
    heat: slice
    outdoor: slice
    gains: slice
    supply: int | None
    eq_matrix: np.ndarray
    eq_rhs: np.ndarray
    ineq_matrix: np.ndarray
    ineq_rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    kappa_max: np.ndarray
    setpoints: np.ndarray

    def program(self, quadratic=None, linear=None) -> QuadraticProgram:
        return QuadraticProgram(
            self.n_vars,
            quadratic,
            linear,
            self.eq_matrix,
            self.eq_rhs,
            self.ineq_matrix,
            self.ineq_rhs,
            self.lower,
            self.upper,
        )


def _resolve_buildings(ghp: GhpUnit, buildings) -> list[BuildingModel]:
    if isinstance(buildings, Mapping):
        table = dict(buildings)
    else:
        table = {b.id: b for b in buildings}
    missing = [b for b in ghp.buildings if b not in table]
    if missing:
        raise KeyError(f"GHP {ghp.id} references unknown buildings {missing}")
    return [table[b] for b in ghp.buildings]


def assemble_steady_constraints(
    ghp: GhpUnit,
    buildings,
    bands: DisturbanceBand | None = None,
    supply: float | None = None,
    *,
    midpoint_disturbances: bool = False,
    supply_caps: Sequence[float] = (),
    constants: PhysicalConstants = PhysicalConstants(),
) -> SteadyConstraints:
    """Steady-state equalities and operating/comfort/disturbance limits.

    Parameters
    ----------
    supply
        ``None`` makes the supply temperature a variable bounded by the GHP
        range; a number fixes it at that value.
    midpoint_disturbances
        Pin outdoor temperature and gains at their band midpoints instead of
        letting them range over the band.
    supply_caps
        Extra radiator-capacity rows evaluated at the given fixed supply
        temperatures (used by the lower-bound variants).
    """
    models = _resolve_buildings(ghp, buildings)
    bands = bands or DisturbanceBand.from_models(models)
    c_w = constants.water_specific_heat

    nz = sum(m.n_zones for m in models)
    nb = len(models)
    n = 3 * nz + nb + (1 if supply is None else 0)
    sz, su = slice(0, nz), slice(nz, 2 * nz)
    so, sq = slice(2 * nz, 2 * nz + nb), slice(2 * nz + nb, 3 * nz + nb)
    ts = 3 * nz + nb if supply is None else None

    lower = np.full(n, -np.inf)
    upper = np.full(n, np.inf)
    eq = np.zeros((nz, n))
    kap = np.empty(nz)
    setpoints = np.empty(nz)

    row = 0
    for k, m in enumerate(models):
        base = row
        if m.id not in bands.outdoor or m.id not in bands.gains:
            raise KeyError(f"no disturbance band for building {m.id}")
        o_lo, o_hi = bands.outdoor[m.id]
        g_lo, g_hi = bands.gains[m.id]
        if g_lo.shape != (m.n_zones,):
            raise ValueError(f"gain band for building {m.id} has {g_lo.size} entries, expected {m.n_zones}")
        if midpoint_disturbances:
            o_lo = o_hi = bands.outdoor_midpoint(m.id)
            g_lo = g_hi = bands.gains_midpoint(m.id)
        lower[so.start + k], upper[so.start + k] = o_lo, o_hi
        for i, (z, r) in enumerate(zip(m.zones, m.radiators)):
            zi = base + i
            g = z.envelope_conductance
            eq[zi, zi] -= g
            eq[zi, so.start + k] += g
            eq[zi, su.start + zi] = 1.0
            eq[zi, sq.start + zi] = 1.0
            lower[zi], upper[zi] = z.comfort_low, z.comfort_high
            lower[sq.start + zi], upper[sq.start + zi] = g_lo[i], g_hi[i]
            kap[zi] = radiator_kappa_max(r, c_w)
            setpoints[zi] = z.setpoint
        for w, (a, b) in zip(m.walls, m.wall_ends()):
            gw = 1.0 / (2.0 * w.resistance)
            a, b = base + a, base + b
            eq[a, a] -= gw
            eq[a, b] += gw
            eq[b, b] -= gw
            eq[b, a] += gw
        row += m.n_zones

    sign = ghp.sign
    # heat delivered has the sign of the mode: u >= 0 heating, u <= 0 cooling
    if sign > 0:
        lower[su] = 0.0
    else:
        upper[su] = 0.0

    rows, rhs = [], []

    def capacity_rows(fixed_supply):
        for zi in range(nz):
            r = np.zeros(n)
            # heating: u <= kappa (T_s - Z); cooling: u >= kappa (T_s - Z)
            r[su.start + zi] = sign
            r[zi] = sign * kap[zi]
            if fixed_supply is None:
                r[ts] = -sign * kap[zi]
                rows.append(r)
                rhs.append(0.0)
            else:
                rows.append(r)
                rhs.append(sign * kap[zi] * fixed_supply)

    capacity_rows(supply)
    for cap in supply_caps:
        capacity_rows(float(cap))

    if ts is not None:
        lower[ts], upper[ts] = ghp.supply_low, ghp.supply_high

    return SteadyConstraints(
        n_vars=n,
        zone_temps=sz,
        heat=su,
        outdoor=so,
        gains=sq,
        supply=ts,
        eq_matrix=eq,
        eq_rhs=np.zeros(nz),
        ineq_matrix=np.array(rows).reshape(-1, n),
        ineq_rhs=np.array(rhs),
        lower=lower,
        upper=upper,
        kappa_max=kap,
        setpoints=setpoints,
    )


# ---------------------------------------------------------------------------
# bounds
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class BoundResult:
    """Outcome of one envelope sub-problem. ``power`` is ``None`` unless Optimal."""

    power: float | None
    heat_total: float | None
    supply_temp: float | None
    status: Status
    solve_result: SolveResult | None = None

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


def _bound(block: SteadyConstraints, ghp: GhpUnit, maximize: bool, divisor: float, settings) -> BoundResult:
    c = np.zeros(block.n_vars)
    c[block.heat] = ghp.sign / divisor
    if maximize:
        c = -c
    res = solve(block.program(linear=c), settings)
    if not res.optimal:
        return BoundResult(None, None, None, res.status, res)
    heat = ghp.sign * float(np.sum(res.x[block.heat]))
    return BoundResult(heat / divisor, heat, None, res.status, res)


def upper_bound_power(
    ghp: GhpUnit,
    buildings,
    bands: DisturbanceBand | None = None,
    settings: SolverSettings | None = None,
    constants: PhysicalConstants = PhysicalConstants(),
) -> BoundResult:
    """Largest electric power, with the supply temperature at its upper limit."""
    block = assemble_steady_constraints(ghp, buildings, bands, supply=ghp.supply_high, constants=constants)
    out = _bound(block, ghp, True, ghp.cop(ghp.supply_high), settings)
    out.supply_temp = ghp.supply_high if out.optimal else None
    return out


def lower_bound_power(
    ghp: GhpUnit,
    buildings,
    bands: DisturbanceBand | None = None,
    variant: str = "aggressive",
    settings: SolverSettings | None = None,
    constants: PhysicalConstants = PhysicalConstants(),
) -> BoundResult:
    """Smallest electric power, evaluated at the COP of the lowest supply temperature.

    ``variant="aggressive"`` caps radiator heat with the upper supply
    temperature; ``"conservative"`` with the lower one, which can make the
    problem infeasible (reported through ``status``).
    """
    if variant == "aggressive":
        cap = ghp.supply_high
    elif variant == "conservative":
        cap = ghp.supply_low
    else:
        raise ValueError(f"unknown lower-bound variant {variant!r}")
    block = assemble_steady_constraints(ghp, buildings, bands, None, supply_caps=(cap,), constants=constants)
    out = _bound(block, ghp, False, ghp.cop(ghp.supply_low), settings)
    out.supply_temp = ghp.supply_low if out.optimal else None
    return out


def _fixed_supply_min(ghp, buildings, bands, supply, settings, constants) -> tuple[float, BoundResult]:
    block = assemble_steady_constraints(ghp, buildings, bands, supply=supply, constants=constants)
    out = _bound(block, ghp, False, ghp.cop(supply), settings)
    out.supply_temp = supply
    return (out.power if out.optimal else math.inf), out


def fixed_supply_power(
    ghp: GhpUnit,
    buildings,
    supply_temp: float,
    bands: DisturbanceBand | None = None,
    settings: SolverSettings | None = None,
    constants: PhysicalConstants = PhysicalConstants(),
) -> BoundResult:
    """Minimum electric power with the supply temperature held at ``supply_temp``."""
    if not ghp.supply_low <= supply_temp <= ghp.supply_high:
        raise ValueError("supply_temp outside the GHP supply range")
    return _fixed_supply_min(ghp, buildings, bands, supply_temp, settings, constants)[1]


def lower_bound_power_exact(
    ghp: GhpUnit,
    buildings,
    bands: DisturbanceBand | None = None,
    grid_points: int = 50,
    settings: SolverSettings | None = None,
    constants: PhysicalConstants = PhysicalConstants(),
    tolerance: float = 1e-3,
) -> BoundResult:
    """Minimum electric power with the supply temperature as a true decision variable.

    For a fixed supply temperature the problem is an LP, so the minimum is
    found by a uniform sweep of the supply range followed by golden-section
    refinement (to ``tolerance`` °C) inside the best grid cell.
    """
    if grid_points < 2:
        raise ValueError("grid_points must be >= 2")
    grid = np.linspace(ghp.supply_low, ghp.supply_high, grid_points)
    evals = [_fixed_supply_min(ghp, buildings, bands, t, settings, constants) for t in grid]
    values = np.array([v for v, _ in evals])
    if not np.any(np.isfinite(values)):
        return BoundResult(None, None, None, Status.INFEASIBLE, evals[0][1].solve_result)
    best = int(np.argmin(values))
    best_val, best_out = evals[best]

    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, grid_points - 1)]
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c_ = b - invphi * (b - a)
    d_ = a + invphi * (b - a)
    fc = _fixed_supply_min(ghp, buildings, bands, c_, settings, constants)
    fd = _fixed_supply_min(ghp, buildings, bands, d_, settings, constants)
    while b - a > tolerance:
        if fc[0] <= fd[0]:
            b, d_, fd = d_, c_, fc
            c_ = b - invphi * (b - a)
            fc = _fixed_supply_min(ghp, buildings, bands, c_, settings, constants)
        else:
            a, c_, fc = c_, d_, fd
            d_ = a + invphi * (b - a)
            fd = _fixed_supply_min(ghp, buildings, bands, d_, settings, constants)
    for val, out in (fc, fd):
        if val < best_val:
            best_val, best_out = val, out
    return best_out


# ---------------------------------------------------------------------------
# desired consumption
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class DesiredResult:
    power: float | None
    supply_temp: float | None
    zone_temps: np.ndarray | None
    heat: np.ndarray | None
    status: Status
    solve_result: SolveResult | None = None

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


def desired_power(
    ghp: GhpUnit,
    buildings,
    bands: DisturbanceBand | None = None,
    weights: DesiredWeights = DesiredWeights(),
    settings: SolverSettings | None = None,
    constants: PhysicalConstants = PhysicalConstants(),
) -> DesiredResult:
    """Electric power at the comfort/efficiency optimum with mid-band disturbances.

    Minimizes ``phi_a/2 * sum((Z - setpoint)^2) + phi_b/2 * (T_s - T_s_low)^2``.
    """
    block = assemble_steady_constraints(ghp, buildings, bands, None, midpoint_disturbances=True, constants=constants)
    n = block.n_vars
    H = np.zeros((n, n))
    c = np.zeros(n)
    idx = np.arange(block.zone_temps.start, block.zone_temps.stop)
    H[idx, idx] = weights.comfort_weight
    c[idx] = -weights.comfort_weight * block.setpoints
    H[block.supply, block.supply] = weights.efficiency_weight
    # heating favours low supply temperatures, cooling high ones
    target = ghp.supply_low if ghp.sign > 0 else ghp.supply_high
    c[block.supply] = -weights.efficiency_weight * target
    res = solve(block.program(H, c), settings)
    if not res.optimal:
        return DesiredResult(None, None, None, None, res.status, res)
    ts = float(res.x[block.supply])
    u = res.x[block.heat].copy()
    power = ghp.sign * float(np.sum(u)) / ghp.cop(ts)
    return DesiredResult(power, ts, res.x[block.zone_temps].copy(), u, res.status, res)


# ---------------------------------------------------------------------------
# envelope
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class DemandEnvelope:
    ghp_id: str
    p_lower_aggressive: float | None
    p_lower_conservative: float | None
    p_lower_exact: float | None
    p_upper: float | None
    p_desired: float | None
    heat_upper: float | None
    heat_lower_aggressive: float | None
    heat_lower_conservative: float | None
    heat_desired: float | None
    supply_temp_desired: float | None
    zone_temps_desired: np.ndarray | None
    statuses: dict[str, Status]
    invariant_violations: list[str] = field(default_factory=list)

    @property
    def complete(self) -> bool:
        """Upper, aggressive lower and desired values are all available."""
        return None not in (self.p_upper, self.p_lower_aggressive, self.p_desired)


def envelope(
    ghp: GhpUnit,
    buildings,
    bands: DisturbanceBand | None = None,
    weights: DesiredWeights = DesiredWeights(),
    options: EnvelopeOptions = EnvelopeOptions(),
    slack: float = 1e-9,
) -> DemandEnvelope:
    """Compute every envelope value for one GHP from one snapshot of bands.

    Sub-problem failures are recorded in ``statuses`` with the value left as
    ``None``. Broken ordering/containment relations are listed in
    ``invariant_violations`` rather than raised.
    """
    st, cn = options.settings, options.constants
    up = upper_bound_power(ghp, buildings, bands, st, cn)
    agg = lower_bound_power(ghp, buildings, bands, "aggressive", st, cn)
    con = lower_bound_power(ghp, buildings, bands, "conservative", st, cn)
    des = desired_power(ghp, buildings, bands, weights, st, cn)
    statuses = {"upper": up.status, "aggressive": agg.status, "conservative": con.status, "desired": des.status}
    exact = None
    if options.exact_lower:
        ex = lower_bound_power_exact(ghp, buildings, bands, options.grid_points, st, cn)
        statuses["exact"] = ex.status
        exact = ex.power

    env = DemandEnvelope(
        ghp_id=ghp.id,
        p_lower_aggressive=agg.power,
        p_lower_conservative=con.power,
        p_lower_exact=exact,
        p_upper=up.power,
        p_desired=des.power,
        heat_upper=up.heat_total,
        heat_lower_aggressive=agg.heat_total,
        heat_lower_conservative=con.heat_total,
        heat_desired=None if des.heat is None else ghp.sign * float(np.sum(des.heat)),
        supply_temp_desired=des.supply_temp,
        zone_temps_desired=des.zone_temps,
        statuses=statuses,
    )

    v = env.invariant_violations
    if agg.power is not None and con.power is not None and agg.power > con.power + slack:
        v.append("aggressive > conservative")
    if env.complete:
        if not env.p_lower_aggressive - slack <= env.p_desired <= env.p_upper + slack:
            v.append("desired outside [aggressive, upper]")
    for name in ("p_lower_aggressive", "p_lower_conservative", "p_upper", "p_desired"):
        val = getattr(env, name)
        if val is not None and val < -slack:
            v.append(f"{name} negative")
    for msg in v:
        logger.warning("GHP %s: %s", ghp.id, msg)
    return env
