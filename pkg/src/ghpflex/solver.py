"""Dense convex QP/LP solver.

Problems have the form::

    minimize    0.5 x'Hx + c'x
    subject to  A x  = b
                G x <= h
                lb <= x <= ub

and are solved with a Mehrotra predictor-corrector primal-dual interior-point
method on dense matrices. Infeasibility is reported either from a Farkas
certificate extracted from diverging dual iterates or from an elastic phase-1
program. Problem sizes in this package are at most a few hundred variables,
so dense factorizations are used throughout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg as sla

__all__ = [
    "Status",
    "QuadraticProgram",
    "SolverSettings",
    "SolveResult",
    "solve",
    "polygonize_disk",
    "polygon_vertices",
]


class Status(str, Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    NUMERICAL_FAILURE = "NumericalFailure"


def _as_matrix(a, n_cols: int, name: str) -> np.ndarray:
    if a is None:
        return np.zeros((0, n_cols))
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.size == 0:
        return np.zeros((0, n_cols))
    if a.shape[1] != n_cols:
        raise ValueError(f"{name} has {a.shape[1]} columns, expected {n_cols}")
    return a


def _as_vector(v, n: int, name: str, fill: float = 0.0) -> np.ndarray:
    if v is None:
        return np.full(n, fill)
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.shape[0] != n:
        raise ValueError(f"{name} has length {v.shape[0]}, expected {n}")
    return v


@dataclass(frozen=True, eq=False)
class QuadraticProgram:
    """Convex quadratic program in dense form.

    Any of the matrix/vector fields may be omitted; missing constraints are
    empty and missing bounds are infinite. The quadratic term must be
    symmetric positive semidefinite (checked to 1e-9).
    """

    n_vars: int
    objective_quadratic: np.ndarray | None = None
    objective_linear: np.ndarray | None = None
    eq_matrix: np.ndarray | None = None
    eq_rhs: np.ndarray | None = None
    ineq_matrix: np.ndarray | None = None
    ineq_rhs: np.ndarray | None = None
    var_lower: np.ndarray | None = None
    var_upper: np.ndarray | None = None

    def __post_init__(self):
        n = int(self.n_vars)
        if n < 1:
            raise ValueError("n_vars must be positive")
        put = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        put("n_vars", n)

        H = self.objective_quadratic
        H = np.zeros((n, n)) if H is None else np.asarray(H, dtype=float)
        if H.shape != (n, n):
            raise ValueError(f"objective_quadratic has shape {H.shape}, expected {(n, n)}")
        scale = max(1.0, float(np.max(np.abs(H))) if H.size else 0.0)
        if _amax(H - H.T) > 1e-9 * scale:
            raise ValueError("objective_quadratic is not symmetric")
        H = 0.5 * (H + H.T)
        if np.any(H):
            lam_min = float(np.linalg.eigvalsh(H)[0])
            if lam_min < -1e-9 * scale:
                raise ValueError(f"objective_quadratic is not PSD (min eigenvalue {lam_min:.3e})")
        put("objective_quadratic", H)
        put("objective_linear", _as_vector(self.objective_linear, n, "objective_linear"))

        A = _as_matrix(self.eq_matrix, n, "eq_matrix")
        b = _as_vector(self.eq_rhs, A.shape[0], "eq_rhs")
        G = _as_matrix(self.ineq_matrix, n, "ineq_matrix")
        h = _as_vector(self.ineq_rhs, G.shape[0], "ineq_rhs")
        put("eq_matrix", A)
        put("eq_rhs", b)
        put("ineq_matrix", G)
        put("ineq_rhs", h)

        lb = _as_vector(self.var_lower, n, "var_lower", -np.inf)
        ub = _as_vector(self.var_upper, n, "var_upper", np.inf)
        if np.any(np.isnan(lb)) or np.any(np.isnan(ub)):
            raise ValueError("bounds contain NaN")
        put("var_lower", lb)
        put("var_upper", ub)
        for name in ("objective_linear", "eq_rhs", "ineq_rhs"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"{name} must be finite")
        for name in ("eq_matrix", "ineq_matrix"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"{name} must be finite")

    def objective(self, x: np.ndarray) -> float:
        return float(0.5 * x @ self.objective_quadratic @ x + self.objective_linear @ x)

    def primal_residual(self, x: np.ndarray) -> float:
        """Largest absolute violation of any constraint or bound at ``x``."""
        viol = [0.0]
        if self.eq_matrix.shape[0]:
            viol.append(np.max(np.abs(self.eq_matrix @ x - self.eq_rhs)))
        if self.ineq_matrix.shape[0]:
            viol.append(np.max(self.ineq_matrix @ x - self.ineq_rhs))
        viol.append(np.max(self.var_lower - x))
        viol.append(np.max(x - self.var_upper))
        return float(max(0.0, *viol))


@dataclass(frozen=True)
class SolverSettings:
    feasibility_tol: float = 1e-8
    optimality_tol: float = 1e-6
    # internal stopping target; the contract tolerances above are what the
    # reported status is checked against
    gap_tol: float = 1e-10
    max_iterations: int = 200
    polish: bool = True
    regularization: float = 1e-11


@dataclass(eq=False)
class SolveResult:
    status: Status
    x: np.ndarray
    objective_value: float
    max_primal_residual: float
    iterations: int
    stationarity_residual: float = math.nan
    eq_duals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    ineq_duals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    phase1_value: float | None = None
    polished: bool = False

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


# ---------------------------------------------------------------------------
# standard form
# ---------------------------------------------------------------------------


@dataclass
class _Standard:
    """Row-scaled problem with bounds folded into equality/inequality rows."""

    H: np.ndarray
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    G: np.ndarray
    h: np.ndarray
    a_scale: np.ndarray
    g_scale: np.ndarray
    n_user_eq: int
    n_user_ineq: int


def _standardize(p: QuadraticProgram) -> _Standard:
    n = p.n_vars
    lb, ub = p.var_lower, p.var_upper
    fixed = np.isfinite(lb) & np.isfinite(ub) & (lb == ub)
    eye = np.eye(n)
    A = np.vstack([p.eq_matrix, eye[fixed]])
    b = np.concatenate([p.eq_rhs, lb[fixed]])
    has_ub = np.isfinite(ub) & ~fixed
    has_lb = np.isfinite(lb) & ~fixed
    G = np.vstack([p.ineq_matrix, eye[has_ub], -eye[has_lb]])
    h = np.concatenate([p.ineq_rhs, ub[has_ub], -lb[has_lb]])

    a_scale = np.max(np.abs(A), axis=1) if A.shape[0] else np.zeros(0)
    g_scale = np.max(np.abs(G), axis=1) if G.shape[0] else np.zeros(0)
    a_scale[a_scale == 0] = 1.0
    g_scale[g_scale == 0] = 1.0
    return _Standard(
        H=p.objective_quadratic,
        c=p.objective_linear,
        A=A / a_scale[:, None],
        b=b / a_scale,
        G=G / g_scale[:, None],
        h=h / g_scale,
        a_scale=a_scale,
        g_scale=g_scale,
        n_user_eq=p.eq_matrix.shape[0],
        n_user_ineq=p.ineq_matrix.shape[0],
    )


# ---------------------------------------------------------------------------
# interior point core
# ---------------------------------------------------------------------------


@dataclass
class _IpmOutcome:
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    s: np.ndarray
    iterations: int
    converged: bool
    reason: str
    pres: float
    dres: float
    gap: float


class _Kkt:
    """Factorized reduced KKT system with iterative refinement."""

    def __init__(self, H, A, G, w, reg):
        n, p = H.shape[0], A.shape[0]
        M = H + (G.T * w) @ G if G.shape[0] else H.copy()
        K = np.zeros((n + p, n + p))
        K[:n, :n] = M
        K[:n, n:] = A.T
        K[n:, :n] = A
        self.K = K
        Kr = K.copy()
        Kr[np.arange(n), np.arange(n)] += reg
        Kr[n + np.arange(p), n + np.arange(p)] -= reg
        self.n = n
        self.lu = sla.lu_factor(Kr, check_finite=False)

    def solve(self, rhs):
        d = sla.lu_solve(self.lu, rhs, check_finite=False)
        for _ in range(2):
            res = rhs - self.K @ d
            d = d + sla.lu_solve(self.lu, res, check_finite=False)
        return d[: self.n], d[self.n:]


def _amax(v) -> float:
    return float(np.abs(v).max()) if v.size else 0.0


def _max_step(v, dv):
    neg = dv < 0
    if not neg.any():
        return 1.0
    return min(1.0, float((-v[neg] / dv[neg]).min()))


def _ipm(H, c, A, b, G, h, settings: SolverSettings, max_iterations: int) -> _IpmOutcome:
    n, p, m = H.shape[0], A.shape[0], G.shape[0]
    reg = settings.regularization

    # least-squares flavoured starting point
    kkt = _Kkt(H, A, G, np.ones(m), max(reg, 1e-8))
    x, y = kkt.solve(np.concatenate([-c + G.T @ h, b]))
    s = h - G @ x
    z = np.ones(m)
    if m:
        shift = max(0.0, -float(np.min(s)))
        s = s + shift + 1.0

    c_norm = max(1.0, _amax(c))
    pres = dres = gap = math.inf
    small_steps = 0
    it = 0
    for it in range(1, max_iterations + 1):
        r_d = H @ x + c + A.T @ y + G.T @ z
        r_p = A @ x - b
        r_g = G @ x + s - h
        obj = 0.5 * x @ H @ x + c @ x
        pres = max(_amax(r_p), _amax(r_g))
        dscale = 1.0 + max(
            _amax(H @ x),
            c_norm,
            _amax(A.T @ y),
            _amax(G.T @ z),
        )
        dres = _amax(r_d) / dscale
        mu = float(s @ z) / m if m else 0.0
        gap = float(s @ z) / (1.0 + abs(obj)) if m else 0.0

        if pres <= settings.feasibility_tol * 0.1 and dres <= settings.gap_tol and gap <= settings.gap_tol:
            return _IpmOutcome(x, y, z, s, it - 1, True, "converged", pres, dres, gap)

        scale_yz = max(_amax(y), (float(z.max()) if z.size else 0.0))
        if scale_yz > 1e10 or _amax(x) > 1e12:
            return _IpmOutcome(x, y, z, s, it - 1, False, "diverged", pres, dres, gap)
        if not (np.isfinite(x).all() and np.isfinite(z).all() and np.isfinite(s).all()):
            return _IpmOutcome(x, y, z, s, it - 1, False, "nonfinite", pres, dres, gap)

        if m and not np.all(s > 0.0):
            return _IpmOutcome(x, y, z, s, it - 1, False, "singular", pres, dres, gap)
        with np.errstate(over="ignore"):
            w = z / s if m else np.zeros(0)
        if not np.all(np.isfinite(w)):
            return _IpmOutcome(x, y, z, s, it - 1, False, "singular", pres, dres, gap)
        try:
            kkt = _Kkt(H, A, G, w, reg)
        except (np.linalg.LinAlgError, ValueError):
            return _IpmOutcome(x, y, z, s, it - 1, False, "singular", pres, dres, gap)

        def direction(r_sz):
            t = (-r_sz + z * r_g) / s if m else np.zeros(0)
            dx, dy = kkt.solve(np.concatenate([-r_d - G.T @ t, -r_p]))
            ds = -r_g - G @ dx
            dz = t + w * (G @ dx) if m else np.zeros(0)
            return dx, dy, ds, dz

        if m:
            dx, dy, ds, dz = direction(s * z)
            a_aff = min(_max_step(s, ds), _max_step(z, dz))
            mu_aff = float((s + a_aff * ds) @ (z + a_aff * dz)) / m
            sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.0
            dx, dy, ds, dz = direction(s * z + ds * dz - sigma * mu)
            alpha = min(1.0, 0.99 * min(_max_step(s, ds), _max_step(z, dz)))
        else:
            dx, dy, ds, dz = direction(np.zeros(0))
            alpha = 1.0

        if not (np.isfinite(dx).all() and np.isfinite(dz).all()):
            return _IpmOutcome(x, y, z, s, it - 1, False, "nonfinite", pres, dres, gap)

        x = x + alpha * dx
        y = y + alpha * dy
        s = s + alpha * ds
        z = z + alpha * dz
        if m:
            # keep strictly interior despite rounding
            s = np.maximum(s, 1e-300)
            z = np.maximum(z, 1e-300)

        small_steps = small_steps + 1 if alpha < 1e-8 else 0
        if small_steps >= 5:
            return _IpmOutcome(x, y, z, s, it, False, "stalled", pres, dres, gap)
        if m == 0 and pres <= settings.feasibility_tol * 0.1 and dres <= settings.gap_tol:
            return _IpmOutcome(x, y, z, s, it, True, "converged", pres, dres, gap)

    return _IpmOutcome(x, y, z, s, it, False, "iteration_limit", pres, dres, gap)


def _farkas(std: _Standard, y, z, tol=1e-9) -> bool:
    """True when (y, z) normalized is a primal infeasibility certificate."""
    t = max(_amax(y), (float(z.max()) if z.size else 0.0))
    if t <= 0:
        return False
    yh, zh = y / t, z / t
    res = _amax(std.A.T @ yh + std.G.T @ zh)
    val = std.b @ yh + std.h @ zh
    return bool(res <= tol and val < -1e3 * tol)


def _unbounded_ray(std: _Standard, x, tol=1e-9) -> bool:
    t = _amax(x)
    if t <= 0:
        return False
    d = x / t
    ok = _amax(std.H @ d) <= tol
    ok &= _amax(std.A @ d) <= tol
    ok &= np.max(std.G @ d, initial=0.0) <= tol
    return bool(ok and std.c @ d < -tol)


_PHASE1_ITERATIONS = 200


def _phase1(std: _Standard, settings: SolverSettings) -> float | None:
    """Minimum total (row-scaled) constraint violation; ``None`` if not solved."""
    n = std.H.shape[0]
    p, m = std.A.shape[0], std.G.shape[0]
    nv = n + 2 * p + 1
    rho = 1e-9
    H = np.zeros((nv, nv))
    H[np.arange(n), np.arange(n)] = rho
    c = np.concatenate([np.zeros(n), np.ones(2 * p), [1.0]])
    A = np.hstack([std.A, np.eye(p), -np.eye(p), np.zeros((p, 1))])
    G = np.vstack(
        [
            np.hstack([std.G, np.zeros((m, 2 * p)), -np.ones((m, 1))]),
            np.hstack([np.zeros((2 * p + 1, n)), -np.eye(2 * p + 1)]),
        ]
    )
    h = np.concatenate([std.h, np.zeros(2 * p + 1)])
    out = _ipm(H, c, A, std.b, G, h, settings, _PHASE1_ITERATIONS)
    if not out.converged and out.pres > settings.feasibility_tol:
        return None
    e = out.x[n:]
    return float(np.sum(np.maximum(e, 0.0)))


def _polish(std: _Standard, x, y, z, s):
    """Re-solve the KKT system on the guessed active set."""
    n = std.H.shape[0]
    active = s <= z
    Ga, ha = std.G[active], std.h[active]
    p, q = std.A.shape[0], Ga.shape[0]
    K = np.zeros((n + p + q, n + p + q))
    K[:n, :n] = std.H
    K[:n, n:n + p] = std.A.T
    K[:n, n + p:] = Ga.T
    K[n:n + p, :n] = std.A
    K[n + p:, :n] = Ga
    rhs = np.concatenate([-std.c, std.b, ha])
    # least-norm correction keeps free directions near the interior iterate
    base = np.concatenate([x, y, z[active]])
    step, *_ = np.linalg.lstsq(K, rhs - K @ base, rcond=None)
    sol = base + step
    if not np.all(np.isfinite(sol)) or np.max(np.abs(K @ sol - rhs)) > 1e-9 * (1 + np.max(np.abs(rhs))):
        return None
    xp = sol[:n]
    yp = sol[n:n + p]
    zp = np.zeros_like(z)
    zp[active] = sol[n + p:]
    if np.any(zp < -1e-9 * (1 + _amax(z))):
        return None
    return xp, yp, np.maximum(zp, 0.0)


def solve(problem: QuadraticProgram, settings: SolverSettings | None = None) -> SolveResult:
    """Solve a convex QP.

    The returned status is ``Optimal`` only if the primal residual of the
    original (unscaled) problem is within ``feasibility_tol`` and the
    relative KKT stationarity residual within ``optimality_tol``.
    """
    settings = settings or SolverSettings()
    std = _standardize(problem)
    out = _ipm(std.H, std.c, std.A, std.b, std.G, std.h, settings, settings.max_iterations)

    x, y, z = out.x, out.y, out.z
    polished = False
    if out.converged and settings.polish and std.G.shape[0]:
        pol = _polish(std, x, y, z, out.s)
        if pol is not None:
            xp = pol[0]
            if problem.primal_residual(xp) <= max(problem.primal_residual(x), 1e-12) and problem.objective(
                xp
            ) <= problem.objective(x) + 1e-12 * (1 + abs(problem.objective(x))):
                x, y, z = pol
                polished = True

    # fixed variables are exact by definition
    fixed = problem.var_lower == problem.var_upper
    if np.any(fixed):
        x = x.copy()
        x[fixed] = problem.var_lower[fixed]
    pres = problem.primal_residual(x)
    r_d = std.H @ x + std.c + std.A.T @ y + std.G.T @ z
    dscale = 1.0 + max(
        _amax(std.H @ x),
        _amax(std.c),
        _amax(std.A.T @ y),
        _amax(std.G.T @ z),
    )
    stat = _amax(r_d) / dscale
    eq_duals = (y / std.a_scale)[: std.n_user_eq]
    ineq_duals = (z / std.g_scale)[: std.n_user_ineq]

    def result(status, phase1=None):
        return SolveResult(
            status=status,
            x=x,
            objective_value=problem.objective(x),
            max_primal_residual=pres,
            iterations=out.iterations,
            stationarity_residual=stat,
            eq_duals=eq_duals,
            ineq_duals=ineq_duals,
            phase1_value=phase1,
            polished=polished,
        )

    acceptable = pres <= settings.feasibility_tol and stat <= settings.optimality_tol
    gap_ok = out.gap <= settings.optimality_tol
    if out.converged and acceptable:
        return result(Status.OPTIMAL)
    if not out.converged and acceptable and gap_ok and out.reason in ("stalled", "iteration_limit", "singular"):
        return result(Status.OPTIMAL)

    if np.any(problem.var_lower > problem.var_upper):
        return result(Status.INFEASIBLE)
    if _farkas(std, out.y, out.z):
        return result(Status.INFEASIBLE)
    phase1 = _phase1(std, settings)
    if phase1 is not None and phase1 > settings.feasibility_tol:
        return result(Status.INFEASIBLE, phase1)
    if phase1 is not None and (_unbounded_ray(std, out.x) or out.reason == "diverged"):
        return result(Status.UNBOUNDED, phase1)
    return result(Status.NUMERICAL_FAILURE, phase1)


# ---------------------------------------------------------------------------
# disk polygonization
# ---------------------------------------------------------------------------


def polygon_vertices(radius: float, segments: int) -> np.ndarray:
    """Vertices of the regular polygon inscribed in the disk.

    Vertices sit at angles ``pi/segments + 2*pi*k/segments`` so that edge
    normals are at multiples of ``2*pi/segments`` (axis-aligned for 4 or 8).
    """
    _check_disk(radius, segments)
    ang = np.pi / segments + 2.0 * np.pi * np.arange(segments) / segments
    return radius * np.column_stack([np.cos(ang), np.sin(ang)])


def polygonize_disk(radius: float, segments: int = 8) -> list[tuple[float, float, float]]:
    """Halfplanes ``a*P + b*Q <= c`` whose intersection is the inscribed polygon.

    Parameters
    ----------
    radius : float
        Disk radius, ``> 0``.
    segments : int
        Number of polygon edges, ``>= 4``.

    Returns
    -------
    list of (a, b, c)
        One unit-normal halfplane per edge, normals at ``2*pi*k/segments``
        and offset ``radius * cos(pi/segments)``.
    """
    _check_disk(radius, segments)
    ang = 2.0 * np.pi * np.arange(segments) / segments
    c = radius * math.cos(math.pi / segments)
    return [(float(math.cos(t)), float(math.sin(t)), c) for t in ang]


def _check_disk(radius, segments):
    if not radius > 0:
        raise ValueError("radius must be positive")
    if int(segments) != segments or segments < 4:
        raise ValueError("segments must be an integer >= 4")
