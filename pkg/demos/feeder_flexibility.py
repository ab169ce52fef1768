"""Hourly feeder flexibility band of the bundled 33-bus scenario.

For each hour the per-GHP envelopes are summed per bus and the feeder OPF is
solved three times. The band [MinFeeder P0, MaxFeeder P0] is the demand
response the clustered heat pumps offer to the upstream grid.

Run with ``python3 demos/feeder_flexibility.py``.
"""
from ghpflex.opf import Objective
from ghpflex.scenario import bundled_scenario_path, format_clock, load_scenario, run_step

sc = load_scenario(bundled_scenario_path())
kw = sc.network.pu_to_kw
print(f"{len(sc.ghps)} GHPs on buses {sorted(set(sc.ghp_bus.values()))}")
print(" time   outdoor   P0 min   P0 desired   P0 max   band (kW)")
for t in sc.times[::12]:
    step = run_step(sc, t)
    p = {o: step.opf[o].p0 for o in Objective}
    lo, mid, hi = p[Objective.MIN_FEEDER], p[Objective.DESIRED], p[Objective.MAX_FEEDER]
    print(f"{format_clock(t)}  {sc.profile.outdoor(t):7.2f}  {lo:7.4f}  {mid:11.4f}  {hi:7.4f}   "
          f"{kw(hi - lo):8.1f}")
print("P0 in per-unit on a", sc.network.base_mva, "MVA base")
