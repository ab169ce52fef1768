"""Warm-up of a four-zone house from 15 °C with the radiators fully open.

Prints zone temperatures every hour and the steady state they approach.

Run with ``python3 demos/thermal_response.py``.
"""
import numpy as np

from ghpflex.scenario import bundled_scenario_path, disturbance_bands, load_scenario, parse_clock
from ghpflex.thermal import ThermalState, simulate, steady_state, time_constants

sc = load_scenario(bundled_scenario_path())
ghp = next(g for g in sc.ghps if sc.ghp_bus[g.id] == 5)
house = sc.buildings_of(ghp)[0]
band = disturbance_bands(sc.profile, parse_clock("06:00"))
inputs = dict(
    flows=house.flow_limits(),
    supply_temp=40.0,
    outdoor_temp=band.outdoor_midpoint(house.id),
    disturbances=band.gains_midpoint(house.id),
)

tc = time_constants(house, inputs["flows"])
print(f"house {house.id}: time constants {tc.min() / 60:.1f} min to {tc.max() / 3600:.1f} h")
traj = simulate(house, ThermalState.uniform(house, 15.0), duration=12 * 3600, step=60.0, **inputs)
names = [z.id for z in house.zones]
print("hour  " + "  ".join(f"{n:>9}" for n in names))
for k in range(0, len(traj), 60):
    temps = traj[k].zone_temps
    print(f"{traj.times[k] / 3600:4.0f}  " + "  ".join(f"{v:9.2f}" for v in temps))
ss = steady_state(house, **inputs)
print("  ss  " + "  ".join(f"{v:9.2f}" for v in ss.zone_temps))
print(f"max gap to steady state after 12 h: {np.max(np.abs(traj.final.zone_temps - ss.zone_temps)):.3f} °C")
