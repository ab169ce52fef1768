import numpy as np
import pytest

from ghpflex.envelope import (
    DesiredWeights,
    DisturbanceBand,
    EnvelopeOptions,
    GhpUnit,
    fixed_supply_power,
    assemble_steady_constraints,
    desired_power,
    envelope,
    lower_bound_power,
    lower_bound_power_exact,
    upper_bound_power,
)
from ghpflex.solver import Status
from ghpflex.thermal import BuildingModel, InterZoneWall, RadiatorChain, ThermalZone

from builders import random_building, single_zone
from oracles import worked_single_zone_desired, worked_single_zone_lp


def ghp_for(building_ids, supply=(30.0, 45.0), a=0.05, b=5.0, **kw):
    return GhpUnit("g", a, b, supply[0], supply[1], 0.95, tuple(building_ids), **kw)


# --- worked single-zone instance --------------------------------------------------
# R = 2, kappa_max = 1, T_o in [-2, 2], Q in [0, 0.2], Z in [18, 22], COP = 5 - 0.05 T_s


def test_oracle_values_for_worked_instance():
    u_max, x = worked_single_zone_lp(45.0, maximize=True)
    assert u_max == pytest.approx(12.0)
    np.testing.assert_allclose(x[[0, 2, 3]], [22.0, -2.0, 0.0], atol=1e-12)
    u_min, x = worked_single_zone_lp(45.0, maximize=False)
    assert u_min == pytest.approx(7.8)
    np.testing.assert_allclose(x[[0, 2, 3]], [18.0, 2.0, 0.2], atol=1e-12)
    assert worked_single_zone_lp(30.0, maximize=False)[0] == pytest.approx(7.8)


def test_worked_upper_bound():
    m = single_zone()
    out = upper_bound_power(ghp_for([m.id]), [m])
    u_max, _ = worked_single_zone_lp(45.0, True)
    assert out.status is Status.OPTIMAL
    assert out.heat_total == pytest.approx(u_max, abs=1e-9)
    assert out.power == pytest.approx(12.0 / 2.75, abs=1e-9)
    assert out.power == pytest.approx(4.3636, abs=1e-4)


@pytest.mark.parametrize("variant", ["aggressive", "conservative"])
def test_worked_lower_bounds(variant):
    m = single_zone()
    out = lower_bound_power(ghp_for([m.id]), [m], variant=variant)
    u_min, _ = worked_single_zone_lp(30.0 if variant == "conservative" else 45.0, False)
    assert out.heat_total == pytest.approx(u_min, abs=1e-9)
    assert out.power == pytest.approx(7.8 / 3.5, abs=1e-9)


def test_worked_exact_lower_bound_sits_at_lowest_supply():
    m = single_zone()
    g = ghp_for([m.id])
    out = lower_bound_power_exact(g, [m], grid_points=50)
    assert out.power == pytest.approx(7.8 / 3.5, abs=1e-9)
    assert out.supply_temp == pytest.approx(30.0)


def test_worked_desired_power():
    m = single_zone()
    out = desired_power(ghp_for([m.id]), [m], weights=DesiredWeights(1.0, 0.01))
    assert out.status is Status.OPTIMAL
    assert out.zone_temps[0] == pytest.approx(20.0, abs=1e-7)
    assert out.supply_temp == pytest.approx(30.0, abs=1e-7)
    assert out.heat[0] == pytest.approx(9.9, abs=1e-7)
    assert out.power == pytest.approx(9.9 / 3.5, abs=1e-7)
    z, u, ts = worked_single_zone_desired()
    np.testing.assert_allclose([out.zone_temps[0], out.heat[0], out.supply_temp], [z, u, ts], atol=1e-7)


def test_worked_envelope():
    m = single_zone()
    env = envelope(ghp_for([m.id]), [m], options=EnvelopeOptions(exact_lower=True))
    assert env.p_lower_aggressive == pytest.approx(2.2286, abs=1e-4)
    assert env.p_lower_conservative == pytest.approx(2.2286, abs=1e-4)
    assert env.p_lower_exact == pytest.approx(2.2286, abs=1e-4)
    assert env.p_upper == pytest.approx(4.3636, abs=1e-4)
    assert env.p_desired == pytest.approx(2.8286, abs=1e-4)
    assert all(s is Status.OPTIMAL for s in env.statuses.values())
    assert env.invariant_violations == []


# --- constraint assembly ----------------------------------------------------------


def test_single_zone_block_shape():
    m = single_zone()
    block = assemble_steady_constraints(ghp_for([m.id]), [m], supply=45.0)
    assert block.eq_matrix.shape[0] == 1
    # (4b) row, plus bounds on u (below), Z, T_o and Q
    n_bounded = np.sum(np.isfinite(block.lower) | np.isfinite(block.upper))
    assert block.ineq_matrix.shape[0] + n_bounded == 5
    # (T_o - Z)/R + u + Q = 0
    np.testing.assert_allclose(block.eq_matrix[0], [-0.5, 1.0, 0.5, 1.0])


def test_variable_supply_adds_supply_column_and_box():
    m = single_zone()
    block = assemble_steady_constraints(ghp_for([m.id]), [m])
    assert block.supply == block.n_vars - 1
    assert (block.lower[block.supply], block.upper[block.supply]) == (30.0, 45.0)
    # u - kappa T_s + kappa Z <= 0
    np.testing.assert_allclose(block.ineq_matrix[0], [1.0, 1.0, 0, 0, -1.0])


def test_fixed_supply_rows():
    m = single_zone(b_ar=4.0)  # kappa = 2
    block = assemble_steady_constraints(ghp_for([m.id]), [m], supply=45.0)
    np.testing.assert_allclose(block.ineq_matrix[0], [2.0, 1.0, 0, 0])
    assert block.ineq_rhs[0] == pytest.approx(2.0 * 45.0)


def test_wall_elimination_uses_half_conductance():
    zones = (ThermalZone("a", 100, 4.0, 18, 22, 20), ThermalZone("b", 100, 5.0, 18, 22, 20))
    rads = (RadiatorChain("a", 2, 10, 5, 0.1), RadiatorChain("b", 2, 10, 5, 0.1))
    m = BuildingModel(zones, (InterZoneWall("a", "b", 500, 3.0),), rads, -2, 2, id="two")
    block = assemble_steady_constraints(ghp_for(["two"]), [m], supply=45.0)
    gw = 1.0 / (2 * 3.0)
    np.testing.assert_allclose(block.eq_matrix[0, :2], [-0.25 - gw, gw])
    np.testing.assert_allclose(block.eq_matrix[1, :2], [gw, -0.2 - gw])


def test_missing_building_is_rejected():
    m = single_zone()
    with pytest.raises(KeyError):
        assemble_steady_constraints(ghp_for(["nope"]), [m])


def test_band_with_low_above_high_is_rejected():
    with pytest.raises(ValueError):
        DisturbanceBand(outdoor={"b": (3.0, 1.0)}, gains={"b": (np.zeros(1), np.zeros(1))})


@pytest.mark.parametrize(
    "kw", [dict(a=0.0), dict(b=-1.0), dict(supply=(45.0, 30.0)), dict(a=0.2, b=5.0)]
)
def test_ghp_validation(kw):
    with pytest.raises(ValueError):
        ghp_for(["x"], **kw)


# --- feasibility edge cases -----------------------------------------------------


def test_vanishing_flow_makes_comfort_unreachable():
    m = single_zone(flow_max=1e-12)
    out = upper_bound_power(ghp_for([m.id]), [m])
    assert out.status is Status.INFEASIBLE
    assert out.power is None


def test_vanishing_flow_with_passive_comfort():
    m = single_zone(flow_max=1e-12, comfort=(-5.0, 5.0), setpoint=0.0)
    out = upper_bound_power(ghp_for([m.id]), [m])
    assert out.status is Status.OPTIMAL
    assert out.heat_total == pytest.approx(0.0, abs=1e-9)


def test_conservative_can_be_infeasible_alone():
    # kappa (T_s_low - Z) = 1 * (25 - 18) = 7 < 7.8 required
    m = single_zone()
    g = ghp_for([m.id], supply=(25.0, 45.0))
    assert lower_bound_power(g, [m], variant="aggressive").status is Status.OPTIMAL
    assert lower_bound_power(g, [m], variant="conservative").status is Status.INFEASIBLE
    env = envelope(g, [m])
    assert env.p_lower_conservative is None
    assert env.statuses["conservative"] is Status.INFEASIBLE
    assert env.complete


def test_unknown_variant():
    m = single_zone()
    with pytest.raises(ValueError):
        lower_bound_power(ghp_for([m.id]), [m], variant="median")


# --- monotonicity -------------------------------------------------------------


def _band(o, g):
    return DisturbanceBand(outdoor={"single": o}, gains={"single": (np.array([g[0]]), np.array([g[1]]))})


def test_point_band_never_raises_upper_bound():
    m = single_zone()
    g = ghp_for([m.id])
    wide = upper_bound_power(g, [m], _band((-2, 2), (0, 0.2))).power
    for o in (-2.0, 0.0, 2.0):
        for q in (0.0, 0.1, 0.2):
            point = upper_bound_power(g, [m], _band((o, o), (q, q))).power
            assert point <= wide + 1e-9


def test_wider_gain_band_never_raises_lower_bound():
    m = single_zone()
    g = ghp_for([m.id])
    prev = np.inf
    for hi in (0.0, 0.1, 0.2, 0.5, 1.0):
        val = lower_bound_power(g, [m], _band((-2, 2), (0, hi))).power
        assert val <= prev + 1e-9
        prev = val


# --- exact lower bound -------------------------------------------------------------


def test_exact_with_flat_cop_equals_plain_minimum():
    m = single_zone()
    g = ghp_for([m.id], a=1e-15)
    ex = lower_bound_power_exact(g, [m], grid_points=2)
    agg = lower_bound_power(g, [m], variant="aggressive")
    assert ex.power == pytest.approx(agg.power, rel=1e-9)


def test_exact_rejects_single_point_grid():
    m = single_zone()
    with pytest.raises(ValueError):
        lower_bound_power_exact(ghp_for([m.id]), [m], grid_points=1)


def test_exact_all_infeasible():
    m = single_zone(flow_max=1e-12)
    assert lower_bound_power_exact(ghp_for([m.id]), [m], grid_points=3).status is Status.INFEASIBLE


# --- desired power ---------------------------------------------------------------


def test_pure_comfort_hits_setpoint():
    m = single_zone(setpoint=21.0)
    out = desired_power(ghp_for([m.id]), [m], weights=DesiredWeights(1.0, 0.0))
    assert out.zone_temps[0] == pytest.approx(21.0, abs=1e-7)


def test_pure_efficiency_uses_lowest_supply():
    m = single_zone()
    out = desired_power(ghp_for([m.id]), [m], weights=DesiredWeights(0.0, 1.0))
    assert out.supply_temp == pytest.approx(30.0, abs=1e-7)


def test_weights_must_not_both_be_zero():
    with pytest.raises(ValueError):
        DesiredWeights(0.0, 0.0)


def test_weight_scaling_leaves_optimizer_unchanged():
    rng = np.random.default_rng(4)
    m = random_building(rng, building_id="r")
    g = ghp_for(["r"], supply=(30.0, 60.0), a=0.04, b=5.5)
    base = desired_power(g, [m], weights=DesiredWeights(1.0, 0.05))
    scaled = desired_power(g, [m], weights=DesiredWeights(7.0, 0.35))
    assert base.optimal and scaled.optimal
    np.testing.assert_allclose(base.solve_result.x, scaled.solve_result.x, atol=1e-6)


# --- multi-building and cooling --------------------------------------------------


def test_identical_ghps_give_identical_envelopes():
    rng = np.random.default_rng(9)
    m = random_building(rng, building_id="r")
    g1 = GhpUnit("g1", 0.04, 5.5, 30.0, 60.0, 0.95, ("r",))
    g2 = GhpUnit("g2", 0.04, 5.5, 30.0, 60.0, 0.95, ("r",))
    e1, e2 = envelope(g1, [m]), envelope(g2, [m])
    for name in ("p_lower_aggressive", "p_lower_conservative", "p_upper", "p_desired"):
        assert getattr(e1, name) == getattr(e2, name)


def test_two_identical_buildings_double_the_power():
    m = single_zone()
    twin = BuildingModel(m.zones, m.walls, m.radiators, m.outdoor_low, m.outdoor_high, id="twin")
    one = envelope(ghp_for(["single"]), [m])
    two = envelope(ghp_for(["single", "twin"]), [m, twin])
    for name in ("p_lower_aggressive", "p_upper", "p_desired"):
        assert getattr(two, name) == pytest.approx(2 * getattr(one, name), rel=1e-7)


def test_cooling_mode_envelope():
    # hot day: T_o in [30, 34], chilled supply in [7, 15]
    zone = ThermalZone("z0", 500.0, 2.0, 23.0, 27.0, 25.0, 0.0, 0.2)
    m = BuildingModel((zone,), (), (RadiatorChain("z0", 1, 30, 0.5, 2.0 / 4.186),), 30.0, 34.0, id="c")
    g = GhpUnit("g", 0.05, 5.0, 7.0, 15.0, 0.95, ("c",), mode="cooling")
    env = envelope(g, [m])
    assert env.complete
    # heat removed: (T_o - Z)/2 + Q, largest at T_o = 34, Z = 23, Q = 0.2
    assert env.heat_upper == pytest.approx(5.7, abs=1e-7)
    assert env.p_lower_aggressive <= env.p_desired <= env.p_upper
    assert env.invariant_violations == []


# --- randomized properties ------------------------------------------------------

from builders import random_ghp_instance  # noqa: E402


@pytest.mark.parametrize("seed", range(8))
def test_envelope_ordering_and_containment(seed):
    ghp, buildings = random_ghp_instance(np.random.default_rng(seed), require_conservative=True)
    env = envelope(ghp, buildings, options=EnvelopeOptions(exact_lower=True, grid_points=20))
    eps = 1e-9
    assert env.invariant_violations == []
    assert 0.0 <= env.p_lower_aggressive
    assert env.p_lower_aggressive <= env.p_lower_conservative + eps
    assert env.p_lower_aggressive <= env.p_lower_exact + eps
    assert env.p_lower_conservative <= env.p_upper + eps
    assert env.p_lower_aggressive <= env.p_desired + eps
    assert env.p_desired <= env.p_upper + eps


@pytest.mark.parametrize("seed", range(4))
def test_exact_lower_bound_beats_fixed_supply_sweep(seed):
    ghp, buildings = random_ghp_instance(np.random.default_rng(50 + seed))
    exact = lower_bound_power_exact(ghp, buildings, grid_points=50)
    assert exact.optimal
    for ts in np.linspace(ghp.supply_low, ghp.supply_high, 50):
        fixed = fixed_supply_power(ghp, buildings, ts)
        if fixed.optimal:
            assert exact.power <= fixed.power + 1e-9


def test_desired_is_feasible_for_its_own_supply():
    ghp, buildings = random_ghp_instance(np.random.default_rng(77))
    d = desired_power(ghp, buildings)
    block = assemble_steady_constraints(ghp, buildings, supply=d.supply_temp, midpoint_disturbances=True)
    x = np.concatenate([d.solve_result.x[: block.n_vars]])
    assert np.max(np.abs(block.eq_matrix @ x - block.eq_rhs)) <= 1e-8
    assert np.all(block.ineq_matrix @ x <= block.ineq_rhs + 1e-8)


def test_envelope_is_deterministic():
    ghp, buildings = random_ghp_instance(np.random.default_rng(5))
    a = envelope(ghp, buildings, options=EnvelopeOptions(exact_lower=True, grid_points=10))
    b = envelope(ghp, buildings, options=EnvelopeOptions(exact_lower=True, grid_points=10))
    for name in ("p_lower_aggressive", "p_lower_conservative", "p_lower_exact", "p_upper", "p_desired"):
        assert getattr(a, name) == getattr(b, name)
    np.testing.assert_array_equal(a.zone_temps_desired, b.zone_temps_desired)
