"""Linearized optimal power flow over a distribution feeder with GHP load blocks.

Squared voltage magnitudes ``w = v**2`` and bus angles ``theta`` enter the
branch flows linearly:

    P_ab = g (w_a - w_b)/2 - b (theta_a - theta_b) + P_ab^L
    Q_ab = -b (w_a - w_b)/2 - g (theta_a - theta_b) + Q_ab^L

Each line contributes both directions ``(a, b)`` and ``(b, a)``. Because the
flows are affine in ``(w, theta)`` they are substituted into the nodal
balances and the polygonized apparent-power limits instead of being carried
as decision variables; :class:`OpfSolution` reports them explicitly.

All quantities are per-unit on the network's power base.
"""
from __future__ import annotations

import json
import logging
import math
from collections import deque
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping

import numpy as np

from .solver import QuadraticProgram, SolveResult, SolverSettings, Status, polygonize_disk, solve

logger = logging.getLogger(__name__)

__all__ = [
    "NetworkError",
    "Objective",
    "LossMode",
    "Bus",
    "Branch",
    "Network",
    "BusEnvelope",
    "OpfProblem",
    "OpfSolution",
    "load_network",
    "network_from_dict",
    "ghp_reactive",
    "assemble_opf",
    "solve_opf",
    "estimate_losses",
    "residual_report",
    "widen_limits",
]

FEEDER_FLOOR = 1e-6  # lower bound on P0 under the MaxFeeder objective
_WIDE = 1e3


class NetworkError(ValueError):
    """Malformed or disconnected network data."""


class Objective(str, Enum):
    DESIRED = "Desired"
    MIN_FEEDER = "MinFeeder"
    MAX_FEEDER = "MaxFeeder"


class LossMode(str, Enum):
    LOSSLESS = "lossless"
    FIXED_BASE_CASE = "fixed-base-case"


# ---------------------------------------------------------------------------
# network data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Bus:
    """A network bus. Loads, limits and generator bounds are per-unit."""

    id: int
    p_load: float = 0.0
    q_load: float = 0.0
    v_min: float = 0.9
    v_max: float = 1.1
    generator: tuple[float, float, float, float] | None = None  # (p_min, p_max, q_min, q_max)
    g_shunt: float = 0.0
    b_shunt: float = 0.0

    def __post_init__(self):
        if not 0 < self.v_min <= self.v_max:
            raise NetworkError(f"bus {self.id}: need 0 < v_min <= v_max")
        if self.generator is not None:
            p_min, p_max, q_min, q_max = self.generator
            if not (p_min <= p_max and q_min <= q_max):
                raise NetworkError(f"bus {self.id}: generator bounds out of order")


@dataclass(frozen=True)
class Branch:
    """A line with series conductance ``g`` and susceptance ``b`` (per-unit)."""

    from_bus: int
    to_bus: int
    conductance: float
    susceptance: float
    s_max: float

    def __post_init__(self):
        if self.conductance < 0:
            raise NetworkError(f"branch {self.from_bus}-{self.to_bus}: negative conductance")
        if not self.s_max > 0:
            raise NetworkError(f"branch {self.from_bus}-{self.to_bus}: s_max must be positive")
        if self.from_bus == self.to_bus:
            raise NetworkError(f"branch {self.from_bus}-{self.to_bus} is a self-loop")

    @classmethod
    def from_impedance(cls, from_bus, to_bus, r, x, s_max) -> "Branch":
        z2 = r * r + x * x
        if z2 <= 0:
            raise NetworkError(f"branch {from_bus}-{to_bus}: zero impedance")
        return cls(from_bus, to_bus, r / z2, -x / z2, s_max)


@dataclass(frozen=True)
class Network:
    """Buses, lines and the per-unit base. Bus 0 is the feeder."""

    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...]
    base_kv: float = 12.66
    base_mva: float = 10.0
    name: str = "network"

    def __post_init__(self):
        object.__setattr__(self, "buses", tuple(sorted(self.buses, key=lambda b: b.id)))
        object.__setattr__(self, "branches", tuple(self.branches))
        if not self.base_mva > 0:
            raise NetworkError("power base must be positive")
        ids = [b.id for b in self.buses]
        if len(set(ids)) != len(ids):
            raise NetworkError("duplicate bus ids")
        if 0 not in ids:
            raise NetworkError("network has no feeder bus 0")
        known = set(ids)
        pairs = set()
        for br in self.branches:
            if br.from_bus not in known or br.to_bus not in known:
                raise NetworkError(f"branch {br.from_bus}-{br.to_bus} references an unknown bus")
            key = frozenset((br.from_bus, br.to_bus))
            if key in pairs:
                raise NetworkError(f"duplicate branch {br.from_bus}-{br.to_bus}")
            pairs.add(key)
        self._check_connected()
        if self.buses[0].generator is None:
            raise NetworkError("feeder bus 0 needs a generator")

    def _check_connected(self):
        adj = {b.id: [] for b in self.buses}
        for br in self.branches:
            adj[br.from_bus].append(br.to_bus)
            adj[br.to_bus].append(br.from_bus)
        seen = {0}
        todo = deque([0])
        while todo:
            for nxt in adj[todo.popleft()]:
                if nxt not in seen:
                    seen.add(nxt)
                    todo.append(nxt)
        if len(seen) != len(self.buses):
            missing = sorted(set(adj) - seen)
            raise NetworkError(f"network is disconnected; unreachable buses {missing}")

    @property
    def n_buses(self) -> int:
        return len(self.buses)

    @property
    def bus_ids(self) -> list[int]:
        return [b.id for b in self.buses]

    def index(self, bus_id: int) -> int:
        try:
            return self.bus_ids.index(bus_id)
        except ValueError:
            raise KeyError(f"unknown bus {bus_id}") from None

    def directed(self) -> list[tuple[int, int, Branch]]:
        """Both directions of every line as ``(from_index, to_index, branch)``."""
        out = []
        for br in self.branches:
            a, b = self.index(br.from_bus), self.index(br.to_bus)
            out.append((a, b, br))
            out.append((b, a, br))
        return out

    def admittance_matrix(self) -> np.ndarray:
        """Complex bus admittance matrix from series elements and shunts."""
        n = self.n_buses
        Y = np.zeros((n, n), dtype=complex)
        for br in self.branches:
            a, b = self.index(br.from_bus), self.index(br.to_bus)
            y = complex(br.conductance, br.susceptance)
            Y[a, a] += y
            Y[b, b] += y
            Y[a, b] -= y
            Y[b, a] -= y
        for i, bus in enumerate(self.buses):
            Y[i, i] += complex(bus.g_shunt, bus.b_shunt)
        return Y

    def row_sums(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-bus ``sum_b G_ab`` and ``sum_b (-B_ab)``."""
        s = self.admittance_matrix().sum(axis=1)
        return s.real.copy(), -s.imag

    def kw_to_pu(self, kw):
        return np.asarray(kw, dtype=float) / (1000.0 * self.base_mva)

    def pu_to_kw(self, pu):
        return np.asarray(pu, dtype=float) * (1000.0 * self.base_mva)


def network_from_dict(data: Mapping) -> Network:
    """Build a :class:`Network` from the JSON schema described in the README.

    Branches carry either ``r``/``x`` (per-unit impedance) or ``g``/``b``
    (per-unit series admittance).
    """
    base_mva = float(data.get("base_mva", 10.0))
    if not base_mva > 0:
        raise NetworkError("power base must be positive")
    buses = []
    for i, rec in enumerate(data["buses"]):
        gen = rec.get("generator")
        if gen is not None:
            gen = (float(gen["p_min"]), float(gen["p_max"]), float(gen["q_min"]), float(gen["q_max"]))
        buses.append(
            Bus(
                id=int(rec["id"]),
                p_load=float(rec.get("p_load", 0.0)),
                q_load=float(rec.get("q_load", 0.0)),
                v_min=float(rec.get("v_min", 0.9)),
                v_max=float(rec.get("v_max", 1.1)),
                generator=gen,
                g_shunt=float(rec.get("g_shunt", 0.0)),
                b_shunt=float(rec.get("b_shunt", 0.0)),
            )
        )
    branches = []
    default_s = float(data.get("default_s_max", 1.0))
    for rec in data["branches"]:
        s_max = float(rec.get("s_max", default_s))
        if "g" in rec:
            branches.append(Branch(int(rec["from"]), int(rec["to"]), float(rec["g"]), float(rec["b"]), s_max))
        else:
            branches.append(Branch.from_impedance(int(rec["from"]), int(rec["to"]), float(rec["r"]), float(rec["x"]), s_max))
    return Network(
        tuple(buses), tuple(branches), float(data.get("base_kv", 12.66)), base_mva, str(data.get("name", "network"))
    )


def load_network(path) -> Network:
    with open(path) as fh:
        return network_from_dict(json.load(fh))


def widen_limits(network: Network, s_max: float = _WIDE, v_range: tuple[float, float] = (0.5, 1.5)) -> Network:
    """Copy of ``network`` with line and non-feeder voltage limits made non-binding."""
    buses = tuple(
        b if b.id == 0 else replace(b, v_min=v_range[0], v_max=v_range[1]) for b in network.buses
    )
    branches = tuple(replace(br, s_max=s_max) for br in network.branches)
    return replace(network, buses=buses, branches=branches)


# ---------------------------------------------------------------------------
# GHP blocks
# ---------------------------------------------------------------------------


def ghp_reactive(p, power_factor: float):
    """Reactive demand of a constant-power-factor load: ``Q = P tan(arccos eta)``."""
    if not 0 < power_factor <= 1:
        raise ValueError("power factor must be in (0, 1]")
    if np.any(np.asarray(p) < 0):
        raise ValueError("active power must be nonnegative")
    ratio = math.tan(math.acos(power_factor))
    return float(p) * ratio if np.ndim(p) == 0 else np.asarray(p, dtype=float) * ratio


@dataclass(frozen=True)
class BusEnvelope:
    """Aggregated GHP block at one bus: bounds and desired point in per-unit."""

    lower: float
    upper: float
    desired: float
    power_factor: float = 1.0

    def __post_init__(self):
        if not self.lower <= self.upper + 1e-12:
            raise ValueError("envelope lower bound above upper bound")
        if not 0 < self.power_factor <= 1:
            raise ValueError("power factor must be in (0, 1]")

    @property
    def reactive_ratio(self) -> float:
        return math.tan(math.acos(self.power_factor))


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------


@dataclass
class OpfProblem:
    """Assembled QP plus the maps needed to read a solution back."""

    program: QuadraticProgram
    objective: Objective
    n_buses: int
    w: slice
    theta: slice
    p_gen: slice
    q_gen: slice
    p_ghp: slice
    gen_buses: list[int]
    ghp_buses: list[int]
    flow_p: np.ndarray  # (2L, n) maps x to directed P flows, plus loss_p
    flow_q: np.ndarray
    loss_p: np.ndarray
    loss_q: np.ndarray
    directions: list[tuple[int, int]]
    segments: int
    loss_mode: LossMode
    envelopes: dict[int, BusEnvelope]


def _directed_flow_maps(network: Network, n_vars: int, w: slice, theta: slice):
    dirs = network.directed()
    Fp = np.zeros((len(dirs), n_vars))
    Fq = np.zeros((len(dirs), n_vars))
    for k, (a, b, br) in enumerate(dirs):
        g, bb = br.conductance, br.susceptance
        Fp[k, w.start + a] += g / 2
        Fp[k, w.start + b] -= g / 2
        Fp[k, theta.start + a] -= bb
        Fp[k, theta.start + b] += bb
        Fq[k, w.start + a] -= bb / 2
        Fq[k, w.start + b] += bb / 2
        Fq[k, theta.start + a] -= g
        Fq[k, theta.start + b] += g
    return dirs, Fp, Fq


def assemble_opf(
    network: Network,
    envelopes: Mapping[int, BusEnvelope],
    objective: Objective | str = Objective.DESIRED,
    loss_mode: LossMode | str = LossMode.LOSSLESS,
    segments: int = 8,
    losses: tuple[np.ndarray, np.ndarray] | None = None,
    relax: frozenset[str] = frozenset(),
) -> OpfProblem:
    """Assemble the linearized OPF as a :class:`QuadraticProgram`.

    ``envelopes`` maps bus id to its aggregated GHP block. ``losses`` gives
    per-direction constant loss terms (ordered as ``network.directed()``);
    they are required for ``fixed-base-case`` and must be absent or zero for
    ``lossless``. ``relax`` names limit families to drop, which is used to
    locate the cause of infeasibility.
    """
    objective = Objective(objective)
    loss_mode = LossMode(loss_mode)
    nb = network.n_buses
    for bus_id in envelopes:
        network.index(bus_id)
    gen_buses = [i for i, b in enumerate(network.buses) if b.generator is not None]
    ghp_buses = sorted(network.index(k) for k in envelopes)
    env_by_index = {network.index(k): v for k, v in envelopes.items()}
    ng, nh = len(gen_buses), len(ghp_buses)

    w = slice(0, nb)
    theta = slice(nb, 2 * nb)
    p_gen = slice(2 * nb, 2 * nb + ng)
    q_gen = slice(p_gen.stop, p_gen.stop + ng)
    p_ghp = slice(q_gen.stop, q_gen.stop + nh)
    n = p_ghp.stop

    dirs, Fp, Fq = _directed_flow_maps(network, n, w, theta)
    n_dir = len(dirs)
    if losses is None:
        if loss_mode is LossMode.FIXED_BASE_CASE:
            raise ValueError("fixed-base-case mode needs precomputed losses")
        lp = np.zeros(n_dir)
        lq = np.zeros(n_dir)
    else:
        lp, lq = (np.asarray(v, dtype=float) for v in losses)
        if lp.shape != (n_dir,) or lq.shape != (n_dir,):
            raise ValueError(f"losses must have one entry per directed branch ({n_dir})")
        if loss_mode is LossMode.LOSSLESS and (np.any(lp) or np.any(lq)):
            raise ValueError("lossless mode with nonzero loss terms")

    # nodal balances: generation - GHP - load = outgoing flows + shunt term
    g_sum, b_sum = network.row_sums()
    Aeq = np.zeros((2 * nb, n))
    beq = np.zeros(2 * nb)
    for k, (a, _, _) in enumerate(dirs):
        Aeq[a] -= Fp[k]
        Aeq[nb + a] -= Fq[k]
        beq[a] += lp[k]
        beq[nb + a] += lq[k]
    for i in range(nb):
        Aeq[i, w.start + i] -= g_sum[i]
        Aeq[nb + i, w.start + i] -= b_sum[i]
        beq[i] += network.buses[i].p_load
        beq[nb + i] += network.buses[i].q_load
    for j, i in enumerate(gen_buses):
        Aeq[i, p_gen.start + j] = 1.0
        Aeq[nb + i, q_gen.start + j] = 1.0
    for j, i in enumerate(ghp_buses):
        Aeq[i, p_ghp.start + j] = -1.0
        Aeq[nb + i, p_ghp.start + j] = -env_by_index[i].reactive_ratio

    # polygonized apparent-power limits on every direction
    rows, rhs = [], []
    if "flow" not in relax:
        for k, (_, _, br) in enumerate(dirs):
            for alpha, beta, c in polygonize_disk(br.s_max, segments):
                rows.append(alpha * Fp[k] + beta * Fq[k])
                rhs.append(c - alpha * lp[k] - beta * lq[k])
    G = np.array(rows).reshape(-1, n)
    h = np.array(rhs)

    lower = np.full(n, -np.inf)
    upper = np.full(n, np.inf)
    for i, bus in enumerate(network.buses):
        if "voltage" in relax and i != 0:
            continue
        lower[w.start + i] = bus.v_min**2
        upper[w.start + i] = bus.v_max**2
    lower[theta.start] = upper[theta.start] = 0.0
    for j, i in enumerate(gen_buses):
        if "generator" in relax:
            continue
        p_min, p_max, q_min, q_max = network.buses[i].generator
        lower[p_gen.start + j], upper[p_gen.start + j] = p_min, p_max
        lower[q_gen.start + j], upper[q_gen.start + j] = q_min, q_max
    for j, i in enumerate(ghp_buses):
        env = env_by_index[i]
        if "envelope" in relax:
            lower[p_ghp.start + j] = 0.0
        else:
            lower[p_ghp.start + j], upper[p_ghp.start + j] = env.lower, env.upper

    H = np.zeros((n, n))
    c = np.zeros(n)
    feeder = p_gen.start + gen_buses.index(0)
    if objective is Objective.DESIRED:
        for j, i in enumerate(ghp_buses):
            H[p_ghp.start + j, p_ghp.start + j] = 1.0
            c[p_ghp.start + j] = -env_by_index[i].desired
    elif objective is Objective.MIN_FEEDER:
        H[feeder, feeder] = 1.0
    else:
        c[feeder] = -1.0
        lower[feeder] = max(lower[feeder], FEEDER_FLOOR)

    program = QuadraticProgram(n, H, c, Aeq, beq, G, h, lower, upper)
    return OpfProblem(
        program, objective, nb, w, theta, p_gen, q_gen, p_ghp, gen_buses, ghp_buses, Fp, Fq, lp, lq,
        [(a, b) for a, b, _ in dirs], segments, loss_mode, dict(env_by_index),
    )


# ---------------------------------------------------------------------------
# solution
# ---------------------------------------------------------------------------


@dataclass
class OpfSolution:
    """Bus and branch quantities of one OPF solve (per-unit, angles in rad)."""

    objective: Objective
    status: Status
    loss_mode: LossMode
    v_squared: np.ndarray | None = None
    theta: np.ndarray | None = None
    p_gen: np.ndarray | None = None  # per bus, zero where no generator
    q_gen: np.ndarray | None = None
    p_ghp: np.ndarray | None = None  # per bus, zero where no GHP block
    q_ghp: np.ndarray | None = None
    p_flow: np.ndarray | None = None  # per direction
    q_flow: np.ndarray | None = None
    directions: list[tuple[int, int]] = field(default_factory=list)
    loss_p: np.ndarray | None = None
    loss_q: np.ndarray | None = None
    envelopes: dict[int, BusEnvelope] = field(default_factory=dict)  # keyed by bus index
    segments: int = 8
    objective_value: float | None = None
    violated_family: str | None = None
    solve_result: SolveResult | None = None

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL

    @property
    def p0(self) -> float | None:
        return None if self.p_gen is None else float(self.p_gen[0])

    @property
    def q0(self) -> float | None:
        return None if self.q_gen is None else float(self.q_gen[0])


def _read_solution(problem: OpfProblem, res: SolveResult) -> OpfSolution:
    x = res.x
    nb = problem.n_buses
    p_gen = np.zeros(nb)
    q_gen = np.zeros(nb)
    p_gen[problem.gen_buses] = x[problem.p_gen]
    q_gen[problem.gen_buses] = x[problem.q_gen]
    p_ghp = np.zeros(nb)
    q_ghp = np.zeros(nb)
    p_ghp[problem.ghp_buses] = x[problem.p_ghp]
    for i in problem.ghp_buses:
        q_ghp[i] = p_ghp[i] * problem.envelopes[i].reactive_ratio
    return OpfSolution(
        objective=problem.objective,
        status=res.status,
        loss_mode=problem.loss_mode,
        v_squared=x[problem.w].copy(),
        theta=x[problem.theta].copy(),
        p_gen=p_gen,
        q_gen=q_gen,
        p_ghp=p_ghp,
        q_ghp=q_ghp,
        p_flow=problem.flow_p @ x + problem.loss_p,
        q_flow=problem.flow_q @ x + problem.loss_q,
        directions=list(problem.directions),
        loss_p=problem.loss_p.copy(),
        loss_q=problem.loss_q.copy(),
        envelopes=dict(problem.envelopes),
        segments=problem.segments,
        objective_value=res.objective_value,
        solve_result=res,
    )


def estimate_losses(network: Network, solution: OpfSolution) -> tuple[np.ndarray, np.ndarray]:
    """Constant per-direction losses from a base-case solution.

    A line's loss ``g * (dtheta**2 + (dw/2)**2)`` (and ``-b`` times the same
    for reactive power) is split evenly between its two directions.
    """
    lp, lq = [], []
    for (a, b), (_, _, br) in zip(solution.directions, network.directed()):
        dth = solution.theta[a] - solution.theta[b]
        dw = (solution.v_squared[a] - solution.v_squared[b]) / 2
        mag = dth * dth + dw * dw
        lp.append(0.5 * br.conductance * mag)
        lq.append(-0.5 * br.susceptance * mag)
    return np.array(lp), np.array(lq)


_FAMILIES = (
    ("envelope", "GHP envelope bounds"),
    ("flow", "branch flow limits"),
    ("voltage", "voltage limits"),
    ("generator", "generator limits"),
)


def _diagnose(network, envelopes, loss_mode, segments, losses, settings) -> str:
    for key, label in _FAMILIES:
        prob = assemble_opf(network, envelopes, Objective.DESIRED, loss_mode, segments, losses, frozenset({key}))
        feas = replace(prob.program, objective_quadratic=np.zeros_like(prob.program.objective_quadratic),
                       objective_linear=np.zeros(prob.program.n_vars))
        if solve(feas, settings).status is Status.OPTIMAL:
            return label
    return "nodal power balance"


def solve_opf(
    network: Network,
    envelopes: Mapping[int, BusEnvelope],
    objective: Objective | str = Objective.DESIRED,
    settings: SolverSettings | None = None,
    loss_mode: LossMode | str = LossMode.LOSSLESS,
    segments: int = 8,
    losses: tuple[np.ndarray, np.ndarray] | None = None,
) -> OpfSolution:
    """Solve the OPF for one objective.

    In ``fixed-base-case`` mode without explicit ``losses`` a lossless
    Desired solve provides the base case for :func:`estimate_losses`.
    On infeasibility ``violated_family`` names the first limit family whose
    removal restores feasibility.
    """
    loss_mode = LossMode(loss_mode)
    if loss_mode is LossMode.FIXED_BASE_CASE and losses is None:
        base = solve_opf(network, envelopes, Objective.DESIRED, settings, LossMode.LOSSLESS, segments)
        if not base.optimal:
            return replace(base, objective=Objective(objective), loss_mode=loss_mode)
        losses = estimate_losses(network, base)
    problem = assemble_opf(network, envelopes, objective, loss_mode, segments, losses)
    res = solve(problem.program, settings)
    if not res.optimal:
        sol = OpfSolution(problem.objective, res.status, loss_mode, directions=list(problem.directions),
                          envelopes=dict(problem.envelopes), segments=segments, solve_result=res)
        if res.status is Status.INFEASIBLE:
            sol.violated_family = _diagnose(network, envelopes, loss_mode, segments, losses, settings)
            logger.warning("OPF %s infeasible: %s", problem.objective.value, sol.violated_family)
        return sol
    return _read_solution(problem, res)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


def residual_report(network: Network, solution: OpfSolution) -> dict[str, float]:
    """Largest violation per constraint family, recomputed from the reported quantities.

    All entries are nonnegative violations except ``flow_limit_disk``, which
    is the signed ``max(|S_ab| - S_max)`` and is nonpositive whenever the
    polygon constraints hold.
    """
    if solution.v_squared is None:
        raise ValueError("solution carries no values")
    nb = network.n_buses
    if solution.v_squared.shape != (nb,) or len(solution.directions) != 2 * len(network.branches):
        raise ValueError("solution does not match the network")
    w, th = solution.v_squared, solution.theta
    dirs = network.directed()
    r_p = r_q = 0.0
    out_p = np.zeros(nb)
    out_q = np.zeros(nb)
    poly = 0.0
    disk = -np.inf
    for k, (a, b, br) in enumerate(dirs):
        g, bb = br.conductance, br.susceptance
        p_model = g * (w[a] - w[b]) / 2 - bb * (th[a] - th[b]) + solution.loss_p[k]
        q_model = -bb * (w[a] - w[b]) / 2 - g * (th[a] - th[b]) + solution.loss_q[k]
        p, q = solution.p_flow[k], solution.q_flow[k]
        r_p = max(r_p, abs(p - p_model))
        r_q = max(r_q, abs(q - q_model))
        out_p[a] += p
        out_q[a] += q
        for alpha, beta, c in polygonize_disk(br.s_max, solution.segments):
            poly = max(poly, alpha * p + beta * q - c)
        disk = max(disk, math.hypot(p, q) - br.s_max)

    g_sum, b_sum = network.row_sums()
    loads_p = np.array([bus.p_load for bus in network.buses])
    loads_q = np.array([bus.q_load for bus in network.buses])
    bal_p = solution.p_gen - solution.p_ghp - loads_p - out_p - g_sum * w
    bal_q = solution.q_gen - solution.q_ghp - loads_q - out_q - b_sum * w

    gen = 0.0
    for i, bus in enumerate(network.buses):
        if bus.generator is None:
            gen = max(gen, abs(solution.p_gen[i]), abs(solution.q_gen[i]))
            continue
        p_min, p_max, q_min, q_max = bus.generator
        gen = max(gen, p_min - solution.p_gen[i], solution.p_gen[i] - p_max,
                  q_min - solution.q_gen[i], solution.q_gen[i] - q_max)
    volt = max(
        0.0, float(np.max([bus.v_min**2 - w[i] for i, bus in enumerate(network.buses)])),
        float(np.max([w[i] - bus.v_max**2 for i, bus in enumerate(network.buses)])),
    )
    env = 0.0
    pf = 0.0
    for i in range(nb):
        blk = solution.envelopes.get(i)
        if blk is None:
            env = max(env, abs(solution.p_ghp[i]))
            continue
        env = max(env, blk.lower - solution.p_ghp[i], solution.p_ghp[i] - blk.upper)
        pf = max(pf, abs(solution.q_ghp[i] - blk.reactive_ratio * solution.p_ghp[i]))
    return {
        "active_flow": float(r_p),
        "reactive_flow": float(r_q),
        "active_balance": float(np.max(np.abs(bal_p))),
        "reactive_balance": float(np.max(np.abs(bal_q))),
        "flow_limit_polygon": float(max(poly, 0.0)),
        "flow_limit_disk": float(disk),
        "generator_limits": float(max(gen, 0.0)),
        "voltage_limits": float(volt),
        "ghp_envelope": float(max(env, 0.0)),
        "ghp_power_factor": float(pf),
        "angle_reference": float(abs(th[0])),
    }
