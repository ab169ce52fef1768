"""Demand envelope of one heat pump serving a single-zone building.

The building has R = 2 °C/kW, a radiator with kappa_max = 1 kW/°C, comfort
18-22 °C, outdoor air in [-2, 2] °C and gains in [0, 0.2] kW. The heat pump
has COP = 5 - 0.05 T_s with T_s in [30, 45] °C.

Run with ``python3 demos/worked_envelope.py``.
"""
from ghpflex.envelope import DesiredWeights, EnvelopeOptions, GhpUnit, envelope
from ghpflex.thermal import BuildingModel, RadiatorChain, ThermalZone, WATER_SPECIFIC_HEAT

b_ar = 2.0
zone = ThermalZone("room", 500.0, 2.0, 18.0, 22.0, 20.0, 0.0, 0.2)
# flow chosen so that one element passes half the inlet excess: kappa = b_ar / 2
radiator = RadiatorChain("room", 1, 30.0, 1.0 / b_ar, b_ar / WATER_SPECIFIC_HEAT)
house = BuildingModel((zone,), (), (radiator,), -2.0, 2.0, id="house")
ghp = GhpUnit("ghp", 0.05, 5.0, 30.0, 45.0, 0.95, ("house",))

env = envelope(ghp, [house], weights=DesiredWeights(1.0, 0.01), options=EnvelopeOptions(exact_lower=True))
print(f"upper bound          {env.p_upper:.4f} kW  (heat {env.heat_upper:.2f} kW at 45 °C)")
print(f"lower bound, aggr.   {env.p_lower_aggressive:.4f} kW  (heat {env.heat_lower_aggressive:.2f} kW, COP at 30 °C)")
print(f"lower bound, cons.   {env.p_lower_conservative:.4f} kW")
print(f"lower bound, exact   {env.p_lower_exact:.4f} kW")
print(f"desired              {env.p_desired:.4f} kW  (zone {env.zone_temps_desired[0]:.2f} °C, "
      f"supply {env.supply_temp_desired:.2f} °C)")
