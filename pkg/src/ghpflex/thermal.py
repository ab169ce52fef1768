"""Building thermal model: zones, inter-zone walls and radiator chains.

Units are kW, °C, kJ, kg and s throughout, so ``c_w * q`` with ``c_w`` in
kJ/(kg·°C) and ``q`` in kg/s is a conductance in kW/°C and capacities in
kJ/°C give time constants in seconds.

State vector layout (see :class:`ThermalState`): zone temperatures, then wall
temperatures, then radiator elements zone by zone, element 1 first.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

WATER_SPECIFIC_HEAT = 4.186  # kJ/(kg·°C)


class SingularSystemError(np.linalg.LinAlgError):
    pass


class SimulationError(RuntimeError):
    def __init__(self, message: str, time: float):
        super().__init__(f"{message} at t = {time:g} s")
        self.time = time


@dataclass(frozen=True)
class PhysicalConstants:
    water_specific_heat: float = WATER_SPECIFIC_HEAT

    def __post_init__(self):
        if not self.water_specific_heat > 0:
            raise ValueError("water_specific_heat must be positive")


@dataclass(frozen=True)
class ThermalZone:
    """One room. ``envelope_resistance=None`` marks an interior-only zone."""

    id: str
    heat_capacity: float
    envelope_resistance: float | None
    comfort_low: float
    comfort_high: float
    setpoint: float
    disturbance_low: float = 0.0
    disturbance_high: float = 0.0

    def __post_init__(self):
        if not self.heat_capacity > 0:
            raise ValueError(f"zone {self.id}: heat_capacity must be positive")
        if self.envelope_resistance is not None and not self.envelope_resistance > 0:
            raise ValueError(f"zone {self.id}: envelope_resistance must be positive")
        if self.comfort_low > self.comfort_high:
            raise ValueError(f"zone {self.id}: comfort_low > comfort_high")
        if not self.comfort_low <= self.setpoint <= self.comfort_high:
            raise ValueError(f"zone {self.id}: setpoint outside comfort range")
        if self.disturbance_low > self.disturbance_high:
            raise ValueError(f"zone {self.id}: disturbance_low > disturbance_high")
        if self.disturbance_low < 0:
            raise ValueError(f"zone {self.id}: disturbances must be nonnegative")

    @property
    def envelope_conductance(self) -> float:
        return 0.0 if self.envelope_resistance is None else 1.0 / self.envelope_resistance


@dataclass(frozen=True)
class InterZoneWall:
    zone_a: str
    zone_b: str
    heat_capacity: float
    resistance: float

    def __post_init__(self):
        if not self.heat_capacity > 0 or not self.resistance > 0:
            raise ValueError(f"wall {self.zone_a}-{self.zone_b}: capacity and resistance must be positive")
        if self.zone_a == self.zone_b:
            raise ValueError(f"wall {self.zone_a}-{self.zone_b} connects a zone to itself")


@dataclass(frozen=True)
class RadiatorChain:
    zone: str
    element_count: int
    element_capacity: float
    element_resistance: float
    flow_max: float

    def __post_init__(self):
        if int(self.element_count) != self.element_count or self.element_count < 1:
            raise ValueError(f"radiator {self.zone}: element_count must be an integer >= 1")
        if not (self.element_capacity > 0 and self.element_resistance > 0 and self.flow_max > 0):
            raise ValueError(f"radiator {self.zone}: capacity, resistance and flow_max must be positive")

    @property
    def conductance(self) -> float:
        """Per-element radiator-to-air conductance ``B_ar`` in kW/°C."""
        return 1.0 / self.element_resistance


@dataclass(frozen=True, eq=False)
class BuildingModel:
    zones: tuple[ThermalZone, ...]
    walls: tuple[InterZoneWall, ...]
    radiators: tuple[RadiatorChain, ...]
    outdoor_low: float = 0.0
    outdoor_high: float = 0.0
    id: str = "building"
    _zone_index: dict = field(init=False, repr=False)
    _offsets: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        put = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        put("zones", tuple(self.zones))
        put("walls", tuple(self.walls))
        if not self.zones:
            raise ValueError(f"building {self.id} has no zones")
        index = {z.id: i for i, z in enumerate(self.zones)}
        if len(index) != len(self.zones):
            raise ValueError(f"building {self.id}: duplicate zone ids")
        pairs = set()
        for w in self.walls:
            for zid in (w.zone_a, w.zone_b):
                if zid not in index:
                    raise ValueError(f"building {self.id}: wall references unknown zone {zid!r}")
            key = frozenset((w.zone_a, w.zone_b))
            if key in pairs:
                raise ValueError(f"building {self.id}: more than one wall between {w.zone_a} and {w.zone_b}")
            pairs.add(key)
        by_zone = {}
        for r in self.radiators:
            if r.zone not in index:
                raise ValueError(f"building {self.id}: radiator references unknown zone {r.zone!r}")
            if r.zone in by_zone:
                raise ValueError(f"building {self.id}: zone {r.zone} has more than one radiator")
            by_zone[r.zone] = r
        missing = [z.id for z in self.zones if z.id not in by_zone]
        if missing:
            raise ValueError(f"building {self.id}: zones without radiator: {missing}")
        if self.outdoor_low > self.outdoor_high:
            raise ValueError(f"building {self.id}: outdoor_low > outdoor_high")
        put("radiators", tuple(by_zone[z.id] for z in self.zones))
        put("_zone_index", index)
        counts = [r.element_count for r in self.radiators]
        put("_offsets", np.concatenate([[0], np.cumsum(counts)]).astype(int))

    # -- layout -----------------------------------------------------------
    @property
    def n_zones(self) -> int:
        return len(self.zones)

    @property
    def n_walls(self) -> int:
        return len(self.walls)

    @property
    def n_elements(self) -> int:
        return int(self._offsets[-1])

    @property
    def n_states(self) -> int:
        return self.n_zones + self.n_walls + self.n_elements

    def zone_index(self, zone_id: str) -> int:
        return self._zone_index[zone_id]

    def wall_ends(self) -> np.ndarray:
        """(n_walls, 2) array of zone indices for each wall."""
        return np.array(
            [[self._zone_index[w.zone_a], self._zone_index[w.zone_b]] for w in self.walls], dtype=int
        ).reshape(-1, 2)

    def element_slice(self, zone: int) -> slice:
        base = self.n_zones + self.n_walls
        return slice(base + self._offsets[zone], base + self._offsets[zone + 1])

    def flow_limits(self) -> np.ndarray:
        return np.array([r.flow_max for r in self.radiators])


@dataclass(frozen=True, eq=False)
class ThermalState:
    """Temperatures of every node of one building."""

    zone_temps: np.ndarray
    wall_temps: np.ndarray
    radiator_temps: tuple[np.ndarray, ...]

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.zone_temps, self.wall_temps, *self.radiator_temps])

    @classmethod
    def from_vector(cls, model: BuildingModel, v: np.ndarray) -> "ThermalState":
        v = np.asarray(v, dtype=float)
        if v.shape != (model.n_states,):
            raise ValueError(f"state vector has shape {v.shape}, expected ({model.n_states},)")
        nz, nw = model.n_zones, model.n_walls
        rads = tuple(v[model.element_slice(i)].copy() for i in range(nz))
        return cls(v[:nz].copy(), v[nz:nz + nw].copy(), rads)

    @classmethod
    def uniform(cls, model: BuildingModel, temperature: float) -> "ThermalState":
        return cls.from_vector(model, np.full(model.n_states, float(temperature)))

    def check(self, model: BuildingModel) -> None:
        ok = (
            self.zone_temps.shape == (model.n_zones,)
            and self.wall_temps.shape == (model.n_walls,)
            and len(self.radiator_temps) == model.n_zones
            and all(t.shape == (r.element_count,) for t, r in zip(self.radiator_temps, model.radiators))
        )
        if not ok:
            raise ValueError("state dimensions do not match the building model")


def _inputs(model: BuildingModel, flows, disturbances):
    q = np.broadcast_to(np.asarray(flows, dtype=float), (model.n_zones,)).copy()
    Q = np.broadcast_to(np.asarray(disturbances, dtype=float), (model.n_zones,)).copy()
    if np.any(q < 0) or np.any(q > model.flow_limits() * (1 + 1e-12)):
        raise ValueError("flows must lie in [0, flow_max]")
    return q, Q


# ---------------------------------------------------------------------------
# dynamics
# ---------------------------------------------------------------------------


def derivatives(
    model: BuildingModel,
    state: ThermalState,
    flows,
    supply_temp: float,
    outdoor_temp: float,
    disturbances,
    constants: PhysicalConstants = PhysicalConstants(),
) -> ThermalState:
    """Time derivative (°C/s) of every temperature in ``state``."""
    state.check(model)
    q, Q = _inputs(model, flows, disturbances)
    c_w = constants.water_specific_heat
    T = state.zone_temps

    heat = Q.copy()
    for i, z in enumerate(model.zones):
        if z.envelope_resistance is not None:
            heat[i] += (outdoor_temp - T[i]) / z.envelope_resistance

    wall_rate = np.zeros(model.n_walls)
    for w_idx, (w, (a, b)) in enumerate(zip(model.walls, model.wall_ends())):
        Tw = state.wall_temps[w_idx]
        heat[a] += (Tw - T[a]) / w.resistance
        heat[b] += (Tw - T[b]) / w.resistance
        wall_rate[w_idx] = ((T[a] - Tw) / w.resistance + (T[b] - Tw) / w.resistance) / w.heat_capacity

    rad_rates = []
    for i, r in enumerate(model.radiators):
        Tn = state.radiator_temps[i]
        upstream = np.concatenate([[supply_temp], Tn[:-1]])
        heat[i] += np.sum(Tn - T[i]) / r.element_resistance
        rate = ((T[i] - Tn) / r.element_resistance + c_w * q[i] * (upstream - Tn)) / r.element_capacity
        rad_rates.append(rate)

    zone_rate = heat / np.array([z.heat_capacity for z in model.zones])
    return ThermalState(zone_rate, wall_rate, tuple(rad_rates))


def linear_system(
    model: BuildingModel,
    flows,
    supply_temp: float,
    outdoor_temp: float,
    disturbances,
    constants: PhysicalConstants = PhysicalConstants(),
):
    """Matrix form ``C dx/dt = K x + f`` of the node balances.

    Returns ``(K, f, C)`` with ``C`` the vector of node capacities.
    """
    q, Q = _inputs(model, flows, disturbances)
    c_w = constants.water_specific_heat
    n = model.n_states
    nz, nw = model.n_zones, model.n_walls
    K = np.zeros((n, n))
    f = np.zeros(n)
    C = np.zeros(n)

    for i, z in enumerate(model.zones):
        C[i] = z.heat_capacity
        g = z.envelope_conductance
        K[i, i] -= g
        f[i] += g * outdoor_temp + Q[i]

    for w_idx, (w, (a, b)) in enumerate(zip(model.walls, model.wall_ends())):
        k = nz + w_idx
        g = 1.0 / w.resistance
        C[k] = w.heat_capacity
        for zi in (a, b):
            K[zi, zi] -= g
            K[zi, k] += g
            K[k, zi] += g
            K[k, k] -= g

    for i, r in enumerate(model.radiators):
        sl = model.element_slice(i)
        B = r.conductance
        flow_g = c_w * q[i]
        for n_idx, k in enumerate(range(sl.start, sl.stop)):
            C[k] = r.element_capacity
            K[i, i] -= B
            K[i, k] += B
            K[k, i] += B
            K[k, k] -= B + flow_g
            if n_idx == 0:
                f[k] += flow_g * supply_temp
            else:
                K[k, k - 1] += flow_g
    return K, f, C


def time_constants(
    model: BuildingModel, flows, constants: PhysicalConstants = PhysicalConstants()
) -> np.ndarray:
    """Modal time constants (s) of the linear dynamics, ascending."""
    K, _, C = linear_system(model, flows, 0.0, 0.0, np.zeros(model.n_zones), constants)
    lam = np.linalg.eigvals(K / C[:, None])
    re = -np.real(lam)
    if np.any(re <= 0):
        raise SingularSystemError("dynamics have a non-decaying mode")
    return np.sort(1.0 / re)


def rk4_step(fun: Callable[[np.ndarray], np.ndarray], x: np.ndarray, h: float) -> np.ndarray:
    k1 = fun(x)
    k2 = fun(x + 0.5 * h * k1)
    k3 = fun(x + 0.5 * h * k2)
    k4 = fun(x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@dataclass(frozen=True, eq=False)
class Trajectory:
    model: BuildingModel
    times: np.ndarray
    states: np.ndarray  # (len(times), n_states)

    def __len__(self) -> int:
        return len(self.times)

    def __getitem__(self, k: int) -> ThermalState:
        return ThermalState.from_vector(self.model, self.states[k])

    @property
    def final(self) -> ThermalState:
        return self[-1]


def simulate(
    model: BuildingModel,
    initial: ThermalState,
    flows,
    supply_temp: float,
    outdoor_temp: float,
    disturbances,
    duration: float,
    step: float | None = None,
    constants: PhysicalConstants = PhysicalConstants(),
) -> Trajectory:
    """Integrate the building dynamics with classic fixed-step RK4.

    With constant inputs the right-hand side is affine, so one RK4 step is
    itself an affine map ``x -> P x + p``. ``P`` and ``p`` are obtained by
    pushing the identity and the zero state through :func:`rk4_step` once;
    the loop then applies that map, which is the same arithmetic as calling
    the stages every step.

    ``step`` defaults to the smallest modal time constant divided by 20.
    The trajectory has ``floor(duration / step) + 1`` entries.
    """
    initial.check(model)
    if duration < 0:
        raise ValueError("duration must be nonnegative")
    K, f, C = linear_system(model, flows, supply_temp, outdoor_temp, disturbances, constants)
    if step is None:
        step = time_constants(model, flows, constants)[0] / 20.0
    if not step > 0:
        raise ValueError("step must be positive")

    M = K / C[:, None]
    g = f / C
    P = rk4_step(lambda X: M @ X, np.eye(model.n_states), step)
    p = rk4_step(lambda x: M @ x + g, np.zeros(model.n_states), step)

    n_steps = int(math.floor(duration / step + 1e-12))
    out = np.empty((n_steps + 1, model.n_states))
    out[0] = initial.as_vector()
    x = out[0]
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, n_steps + 1):
            x = P @ x + p
            out[k] = x
    bad = ~np.all(np.isfinite(out), axis=1)
    if np.any(bad):
        k = int(np.argmax(bad))
        raise SimulationError("non-finite temperature", k * step)
    return Trajectory(model, step * np.arange(n_steps + 1), out)


# ---------------------------------------------------------------------------
# steady state
# ---------------------------------------------------------------------------


def steady_state(
    model: BuildingModel,
    flows,
    supply_temp: float,
    outdoor_temp: float,
    disturbances,
    constants: PhysicalConstants = PhysicalConstants(),
) -> ThermalState:
    """Equilibrium temperatures for constant inputs."""
    K, f, _ = linear_system(model, flows, supply_temp, outdoor_temp, disturbances, constants)
    if np.linalg.cond(K) > 1e14:
        raise SingularSystemError(
            f"building {model.id}: steady-state system is singular "
            "(a zone has no path to the outdoor air or to a flowing radiator)"
        )
    x = np.linalg.solve(K, -f)
    return ThermalState.from_vector(model, x)


def reduced_steady_residual(model: BuildingModel, zone_temps, heat_outputs, outdoor_temp, disturbances) -> np.ndarray:
    """Per-zone residual (kW) of the zone balance with wall and radiator states eliminated.

    Each wall contributes ``(Z_j - Z_i) / (2 R_ij)`` and each radiator its
    heat output ``u_i``.
    """
    Z = np.asarray(zone_temps, dtype=float)
    res = np.asarray(heat_outputs, dtype=float) + np.asarray(disturbances, dtype=float)
    res = res + np.array([z.envelope_conductance for z in model.zones]) * (outdoor_temp - Z)
    for w, (a, b) in zip(model.walls, model.wall_ends()):
        g = 1.0 / (2.0 * w.resistance)
        res[a] += g * (Z[b] - Z[a])
        res[b] += g * (Z[a] - Z[b])
    return res


# ---------------------------------------------------------------------------
# closed-form radiator relations
# ---------------------------------------------------------------------------


def _pass_ratio(q, b_ar, c_w):
    cq = c_w * q
    return cq / (cq + b_ar)


def terminal_temperature(q, b_ar, n, zone_temp, supply_temp, c_w=WATER_SPECIFIC_HEAT):
    """Leaving water temperature of an ``n``-element radiator at steady state."""
    fn = _pass_ratio(q, b_ar, c_w) ** n
    return (1.0 - fn) * zone_temp + fn * supply_temp


def kappa(q, b_ar, n, c_w=WATER_SPECIFIC_HEAT):
    """Radiator heat-transfer coefficient (kW/°C) multiplying ``T_s - Z``.

    Equal to ``c_w q (1 - f**n)`` with ``f = c_w q / (c_w q + b_ar)``, evaluated
    as ``b_ar * sum(f**k, k=1..n)`` which has no cancellation as ``q`` grows.
    """
    if np.any(np.asarray(q) < 0):
        raise ValueError("flow must be nonnegative")
    f = np.asarray(_pass_ratio(q, b_ar, c_w), dtype=float)
    powers = f[..., None] ** np.arange(1, int(n) + 1)
    out = b_ar * powers.sum(axis=-1)
    return float(out) if out.ndim == 0 else out


def heat_output(q, b_ar, n, supply_temp, zone_temp, c_w=WATER_SPECIFIC_HEAT):
    """Heat (kW) delivered by the radiator to the zone at steady state."""
    return kappa(q, b_ar, n, c_w) * (supply_temp - zone_temp)


def radiator_kappa_max(radiator: RadiatorChain, c_w=WATER_SPECIFIC_HEAT) -> float:
    return kappa(radiator.flow_max, radiator.conductance, radiator.element_count, c_w)


def cop(a: float, b: float, supply_temp):
    """Affine coefficient of performance ``b - a * supply_temp``."""
    return b - a * supply_temp


def check_cop_range(a: float, b: float, supply_low: float, supply_high: float) -> None:
    worst = min(cop(a, b, supply_low), cop(a, b, supply_high))
    if not worst > 0:
        raise ValueError(f"COP {worst:g} is not positive over [{supply_low}, {supply_high}] °C")


def zone_table(model: BuildingModel, attribute: str) -> np.ndarray:
    return np.array([getattr(z, attribute) for z in model.zones], dtype=float)


def building_from_dict(data: dict, building_id: str | None = None) -> BuildingModel:
    """Build a :class:`BuildingModel` from its JSON description.

    Expected keys: ``zones`` (list of zone records with an embedded
    ``radiator`` record), ``walls`` and optional ``outdoor_low``/``outdoor_high``.
    """
    zones, radiators = [], []
    for z in data["zones"]:
        zones.append(
            ThermalZone(
                id=str(z["id"]),
                heat_capacity=float(z["heat_capacity"]),
                envelope_resistance=None if z.get("envelope_resistance") is None else float(z["envelope_resistance"]),
                comfort_low=float(z["comfort_low"]),
                comfort_high=float(z["comfort_high"]),
                setpoint=float(z["setpoint"]),
                disturbance_low=float(z.get("disturbance_low", 0.0)),
                disturbance_high=float(z.get("disturbance_high", 0.0)),
            )
        )
        r = z["radiator"]
        radiators.append(
            RadiatorChain(
                zone=str(z["id"]),
                element_count=int(r["element_count"]),
                element_capacity=float(r["element_capacity"]),
                element_resistance=float(r["element_resistance"]),
                flow_max=float(r["flow_max"]),
            )
        )
    walls = [
        InterZoneWall(str(w["zone_a"]), str(w["zone_b"]), float(w["heat_capacity"]), float(w["resistance"]))
        for w in data.get("walls", [])
    ]
    return BuildingModel(
        zones=tuple(zones),
        walls=tuple(walls),
        radiators=tuple(radiators),
        outdoor_low=float(data.get("outdoor_low", 0.0)),
        outdoor_high=float(data.get("outdoor_high", 0.0)),
        id=building_id or str(data.get("id", "building")),
    )


def zones_sequence(models: Sequence[BuildingModel]):
    """Yield ``(building_index, zone_index, zone, radiator)`` over several buildings."""
    for k, m in enumerate(models):
        for i, (z, r) in enumerate(zip(m.zones, m.radiators)):
            yield k, i, z, r
