"""Random and hand-made model builders shared by the tests."""
from __future__ import annotations

import numpy as np

from ghpflex.thermal import BuildingModel, InterZoneWall, RadiatorChain, ThermalZone, WATER_SPECIFIC_HEAT


def single_zone(R=2.0, b_ar=2.0, n=1, flow_max=None, comfort=(18.0, 22.0), setpoint=20.0, q_band=(0.0, 0.2),
                outdoor=(-2.0, 2.0), heat_capacity=500.0, element_capacity=30.0):
    """One zone, no walls. Defaults give kappa(flow_max) = 1 kW/°C."""
    if flow_max is None:
        flow_max = b_ar / WATER_SPECIFIC_HEAT  # f = 1/2, kappa = b_ar / 2
    zone = ThermalZone("z0", heat_capacity, R, comfort[0], comfort[1], setpoint, q_band[0], q_band[1])
    rad = RadiatorChain("z0", n, element_capacity, 1.0 / b_ar, flow_max)
    return BuildingModel((zone,), (), (rad,), outdoor[0], outdoor[1], id="single")


def random_building(rng, max_zones=4, max_elements=5, building_id="b"):
    nz = int(rng.integers(1, max_zones + 1))
    zones, rads = [], []
    for i in range(nz):
        lo = rng.uniform(17.0, 20.0)
        hi = lo + rng.uniform(2.0, 4.0)
        zones.append(
            ThermalZone(
                f"z{i}", rng.uniform(200, 800), rng.uniform(4, 12), lo, hi, rng.uniform(lo, hi),
                *sorted(rng.uniform(0.0, 0.4, size=2)),
            )
        )
        rads.append(
            RadiatorChain(
                f"z{i}", int(rng.integers(1, max_elements + 1)), rng.uniform(20, 60),
                1.0 / rng.uniform(0.05, 0.3), rng.uniform(0.03, 0.12),
            )
        )
    walls = []
    for i in range(1, nz):
        j = int(rng.integers(0, i))
        walls.append(InterZoneWall(f"z{j}", f"z{i}", rng.uniform(300, 1500), rng.uniform(2, 8)))
    o_lo = rng.uniform(-6, 2)
    return BuildingModel(tuple(zones), tuple(walls), tuple(rads), o_lo, o_lo + 4.0, id=building_id)


def random_inputs(rng, model):
    q = rng.uniform(0.0, 1.0, size=model.n_zones) * model.flow_limits()
    return dict(
        flows=q,
        supply_temp=rng.uniform(30, 55),
        outdoor_temp=rng.uniform(-8, 8),
        disturbances=rng.uniform(0.0, 0.5, size=model.n_zones),
    )


def random_ghp_instance(rng, max_buildings=2, supply=(30.0, 60.0), require_conservative=False, max_zones=4):
    """Rejection-sample a GHP and its buildings until the envelope problems are feasible."""
    from ghpflex.envelope import GhpUnit, envelope
    from ghpflex.solver import Status

    while True:
        nb = int(rng.integers(1, max_buildings + 1))
        buildings = [random_building(rng, max_zones=max_zones, building_id=f"b{k}") for k in range(nb)]
        a = rng.uniform(0.02, 0.06)
        ghp = GhpUnit("g", a, a * supply[1] + rng.uniform(2.0, 4.0), supply[0], supply[1], 0.95,
                      tuple(b.id for b in buildings))
        env = envelope(ghp, buildings)
        keys = ["upper", "aggressive", "desired"] + (["conservative"] if require_conservative else [])
        if all(env.statuses[k] is Status.OPTIMAL for k in keys):
            return ghp, buildings
