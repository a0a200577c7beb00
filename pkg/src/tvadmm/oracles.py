"""Reference solutions, residuals, drift measurement and tracking bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .atoms import BoxIndicator, NonnegIndicator, Quadratic, SeparableFunction, WeightedL1, Zero
from .solver import (
    BoundsProfile,
    ProblemSnapshot,
    SolverParams,
    SolverState,
    Trajectory,
    _check_state,
    step,
)

__all__ = [
    "OracleSolution",
    "OracleError",
    "LINEAR_SOLVE",
    "FIXED_POINT",
    "solve_akkt",
    "akkt_residual",
    "oracle_trajectory",
    "Drifts",
    "measure_drifts",
    "TrackingBound",
    "tracking_bound",
    "predicted_sigma_lambda",
    "tracking_errors",
    "gamma_sweep",
]

LINEAR_SOLVE = "LinearSolve"
FIXED_POINT = "FixedPointIteration"
DEFAULT_TOL = {LINEAR_SOLVE: 1e-10, FIXED_POINT: 1e-8}
KKT_CONTINUATION_GAMMA = 1e-8


class OracleError(RuntimeError):
    """The reference solver failed (singular system or iteration cap)."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


@dataclass
class OracleSolution:
    w_star: SolverState
    akkt_residual: float
    method: str
    gamma: float
    w_opt: Optional[SolverState] = None
    iterations: int = 0


def akkt_residual(snap: ProblemSnapshot, w: SolverState, gamma: float, p: SolverParams) -> float:
    """Distance of ``w`` from satisfying the perturbed KKT system.

    Stationarity of the nonsmooth parts is measured through the prox
    fixed-point map, feasibility through ``Ax + By - b + gamma * lam``.
    """
    _check_state(snap, w.x, w.y, w.lam)
    a1, a2 = p.alpha1, p.alpha2
    gx = snap.f1.grad(w.x) - snap.A.T @ w.lam
    gy = snap.g1.grad(w.y) - snap.B.T @ w.lam
    rx = w.x - snap.f0.prox(w.x - a1 * gx, a1)
    ry = w.y - snap.g0.prox(w.y - a2 * gy, a2)
    rl = snap.A @ w.x + snap.B @ w.y - snap.b + gamma * w.lam
    return math.sqrt(float(rx @ rx + ry @ ry + rl @ rl))


def _quadratic_data(fn: SeparableFunction):
    n = fn.dimension
    P = np.zeros((n, n))
    q = np.zeros(n)
    for piece in fn.pieces:
        a = piece.atom
        sl = slice(piece.start, piece.stop)
        if isinstance(a, Quadratic):
            P[sl, sl] = a.P
            q[sl] = a.q
        elif not isinstance(a, Zero):
            raise TypeError(f"{a!r} is not quadratic")
    return P, q


def _is_purely_quadratic(snap: ProblemSnapshot) -> bool:
    return all(isinstance(a, Zero) for a in snap.f0.atoms + snap.g0.atoms)


def _solve_linear(snap: ProblemSnapshot, gamma: float, fixed=None) -> SolverState:
    """Solve the (perturbed) KKT system with the prox parts frozen.

    ``fixed`` maps each nonsmooth coordinate to either ``("fix", value)``
    or ``("free", subgradient)``; ``None`` means no nonsmooth parts.
    """
    m, n, ell = snap.dims
    Px, qx = _quadratic_data(snap.f1)
    Py, qy = _quadratic_data(snap.g1)
    N = m + n + ell
    K = np.zeros((N, N))
    rhs = np.zeros(N)
    K[:m, :m] = Px
    K[:m, m + n:] = -snap.A.T
    K[m:m + n, m:m + n] = Py
    K[m:m + n, m + n:] = -snap.B.T
    rhs[:m] = -qx
    rhs[m:m + n] = -qy
    K[m + n:, :m] = snap.A
    K[m + n:, m:m + n] = snap.B
    K[m + n:, m + n:] = gamma * np.eye(ell)
    rhs[m + n:] = snap.b
    if fixed is not None:
        for i, (mode, val) in enumerate(fixed):
            if mode == "fix":
                K[i, :] = 0.0
                K[i, i] = 1.0
                rhs[i] = val
            else:
                rhs[i] -= val
    try:
        sol = np.linalg.solve(K, rhs)
    except np.linalg.LinAlgError as exc:
        raise OracleError(f"KKT system is singular at gamma={gamma}") from exc
    if not np.all(np.isfinite(sol)):
        raise OracleError(f"KKT system is singular at gamma={gamma}")
    return SolverState(sol[:m], sol[m:m + n], sol[m + n:], snap.time_index)


def _active_pattern(fn: SeparableFunction, z: np.ndarray):
    """Classify each coordinate at a converged point: pinned or free with a
    fixed subgradient contribution."""
    out = []
    for piece in fn.pieces:
        a = piece.atom
        zz = z[piece.start:piece.stop]
        for j, v in enumerate(zz):
            if isinstance(a, Zero):
                out.append(("free", 0.0))
            elif isinstance(a, WeightedL1):
                out.append(("fix", 0.0) if v == 0.0 else ("free", math.copysign(a.w[j], v)))
            elif isinstance(a, BoxIndicator):
                if v <= a.lo[j]:
                    out.append(("fix", a.lo[j]))
                elif v >= a.hi[j]:
                    out.append(("fix", a.hi[j]))
                else:
                    out.append(("free", 0.0))
            elif isinstance(a, NonnegIndicator):
                out.append(("fix", 0.0) if v <= 0.0 else ("free", 0.0))
            else:
                raise TypeError(f"cannot classify {a!r}")
    return out


def _polish(snap, s: SolverState, gamma: float) -> SolverState:
    pattern = _active_pattern(snap.f0, s.x) + _active_pattern(snap.g0, s.y)
    return _solve_linear(snap, gamma, pattern)


def _fixed_point(snap, gamma, p, tol, max_iter, w0=None, check_every=10):
    pg = p.replace(gamma=gamma, beta=min(p.beta, 1.0 / (1.0 + gamma)), delta=0.0)
    s = SolverState.zeros(snap) if w0 is None else w0.copy()
    s.time_index = snap.time_index
    best, best_res = s, akkt_residual(snap, s, gamma, pg)
    it = 0
    while it < max_iter:
        for _ in range(check_every):
            s = step(snap, s, pg)
        it += check_every
        if not s.is_finite():
            break
        res = akkt_residual(snap, s, gamma, pg)
        if res < best_res:
            best, best_res = s, res
        if res <= tol:
            return s, res, it, True
    return best, best_res, it, False


def solve_akkt(
    snap: ProblemSnapshot,
    gamma: float,
    p: SolverParams,
    *,
    method: str = "auto",
    tol: Optional[float] = None,
    max_iter: int = 1_000_000,
    polish: bool = True,
    with_opt: bool = False,
    w0: Optional[SolverState] = None,
) -> OracleSolution:
    """Reference point of the perturbed KKT system at perturbation ``gamma``.

    Parameters
    ----------
    method : {"auto", "LinearSolve", "FixedPointIteration"}
        ``auto`` solves the dense KKT system when no nonsmooth atoms are
        present and iterates the static stepper otherwise.
    polish : bool
        After the fixed-point iteration, freeze the detected active set and
        solve the resulting linear system; kept only if it lowers the
        residual.
    with_opt : bool
        Also compute the unperturbed (``gamma = 0``) KKT point.
    """
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    if method == "auto":
        method = LINEAR_SOLVE if _is_purely_quadratic(snap) else FIXED_POINT
    if tol is None:
        tol = DEFAULT_TOL[method]

    if method == LINEAR_SOLVE:
        if not _is_purely_quadratic(snap):
            raise ValueError("LinearSolve requires f0 and g0 to be Zero atoms")
        w = _solve_linear(snap, gamma)
        res = akkt_residual(snap, w, gamma, p)
        iters = 0
    elif method == FIXED_POINT:
        g_iter = gamma if gamma > 0 else KKT_CONTINUATION_GAMMA
        w, res, iters, ok = _fixed_point(snap, g_iter, p, tol, max_iter, w0)
        if gamma == 0 or polish:
            try:
                wp = _polish(snap, w, gamma)
                rp = akkt_residual(snap, wp, gamma, p)
            except OracleError:
                rp = math.inf
            res_here = akkt_residual(snap, w, gamma, p)
            if rp <= max(res_here, tol):
                w, res, ok = wp, rp, ok or rp <= tol
            else:
                res = res_here
        if not ok or res > tol:
            raise OracleError(
                f"fixed-point oracle stopped at residual {res:.3e} after {iters} iterations",
                best=OracleSolution(w, res, method, gamma, iterations=iters),
            )
    else:
        raise ValueError(f"unknown oracle method {method!r}")

    sol = OracleSolution(w, res, method, gamma, iterations=iters)
    if with_opt:
        sol.w_opt = solve_akkt(snap, 0.0, p, method=method, tol=tol, max_iter=max_iter,
                               polish=True, w0=w).w_star
    return sol


def oracle_trajectory(snaps: Sequence[ProblemSnapshot], p: SolverParams, gamma=None,
                      **kwargs) -> list[OracleSolution]:
    """AKKT reference points for every snapshot (warm-started)."""
    gamma = p.gamma if gamma is None else gamma
    out = []
    prev = None
    for snap in snaps:
        sol = solve_akkt(snap, gamma, p, w0=prev, **kwargs)
        prev = sol.w_star
        out.append(sol)
    return out


class Drifts(NamedTuple):
    x: float
    y: float
    lam: float


def measure_drifts(oracle_traj: Sequence[OracleSolution]) -> Drifts:
    """Largest successive change of the reference primal and dual points."""
    if len(oracle_traj) < 2:
        raise ValueError("need at least two reference points")
    dx = dy = dl = 0.0
    for a, b in zip(oracle_traj, oracle_traj[1:]):
        u, v = a.w_star, b.w_star
        dx = max(dx, float(np.linalg.norm(v.x - u.x)))
        dy = max(dy, float(np.linalg.norm(v.y - u.y)))
        dl = max(dl, float(np.linalg.norm(v.lam - u.lam)))
    return Drifts(dx, dy, dl)


class TrackingBound(NamedTuple):
    bound: float
    """Asymptotic bound ``psi / delta``."""
    psi: float
    """Per-step G-norm drift of the reference point."""
    recursion_bound: float
    """Fixed point ``r psi / (1 - r)`` of the per-step recursion, ``r = (1+delta)^(-1/2)``."""


def tracking_bound(p: SolverParams, drifts) -> TrackingBound:
    """Asymptotic tracking-error bound from drift constants.

    ``psi = sqrt(sx^2/alpha1 + sy^2/alpha2 + slam^2/beta)``; with the default
    ``beta = 0.5`` the dual weight is 2.
    """
    if p.delta <= 0:
        raise ValueError("delta must be positive")
    sx, sy, sl = drifts
    psi = math.sqrt(sx**2 / p.alpha1 + sy**2 / p.alpha2 + sl**2 / p.beta)
    r = p.contraction
    return TrackingBound(psi / p.delta, psi, r * psi / (1.0 - r))


def predicted_sigma_lambda(bounds: BoundsProfile, gamma: float, c_estimate: float) -> float:
    """A-priori bound on the per-step change of the reference multiplier."""
    if bounds.dual_bound is None or bounds.primal_bounds is None:
        raise ValueError("dual_bound and primal_bounds must be set")
    if bounds.drift_x is None or bounds.drift_y is None:
        raise ValueError("drift_x and drift_y must be set")
    s1, s2 = bounds.primal_bounds
    slack = math.sqrt(gamma) * bounds.dual_bound * c_estimate
    return (bounds.sA * bounds.drift_x + bounds.sB * bounds.drift_y + bounds.drift_b
            + bounds.drift_A * (s1 + slack) + bounds.drift_B * (s2 + slack))


def tracking_errors(traj: Trajectory, oracle_traj: Sequence[OracleSolution]) -> np.ndarray:
    """G-norm distance of each recorded state to its reference point."""
    metric = traj.params.metric
    return np.array([metric.dist(s, o.w_star) for s, o in zip(traj.states, oracle_traj)])


def gamma_sweep(snap: ProblemSnapshot, gammas: Sequence[float], p: SolverParams, **kwargs):
    """Distance of the perturbed reference point to the KKT point per ``gamma``.

    Returns a list of dicts with keys ``gamma``, ``dist_v``, ``lam_norm``,
    ``lam_opt_norm``, ``v_opt_norm``.
    """
    opt = solve_akkt(snap, 0.0, p, **kwargs).w_star
    v_opt = np.concatenate([opt.x, opt.y])
    rows = []
    for g in gammas:
        w = solve_akkt(snap, float(g), p, **kwargs).w_star
        rows.append({
            "gamma": float(g),
            "dist_v": float(np.linalg.norm(np.concatenate([w.x, w.y]) - v_opt)),
            "lam_norm": float(np.linalg.norm(w.lam)),
            "lam_opt_norm": float(np.linalg.norm(opt.lam)),
            "v_opt_norm": float(np.linalg.norm(v_opt)),
        })
    return rows
