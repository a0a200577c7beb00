"""Online proximal ADMM with a perturbed dual update.

One iteration on snapshot ``k+1`` reads

    y+ = prox_{a2 g0}(y - a2 * dL1/dy(x, y, lam))
    x+ = prox_{a1 f0}(x - a1 * dL1/dx(x, y+, lam))
    lam+ = (1 - beta*gamma) * lam - beta * (A x+ + B y+ - b)

where ``L1 = f1 + g1 + beta/2 ||Ax + By - b||^2 - (1 - beta*gamma) lam'(Ax + By - b)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .atoms import DimensionError, SeparableFunction

__all__ = [
    "ProblemSnapshot",
    "BoundsProfile",
    "SolverParams",
    "SolverState",
    "GMetric",
    "Trajectory",
    "InadmissibleParams",
    "DivergenceError",
    "lagrangian_value",
    "grad_l1_x",
    "grad_l1_y",
    "constraint_residual",
    "step",
    "select_params",
    "check_step_conditions",
    "bounds_from_snapshots",
    "run_online",
    "DIVERGENCE_NORM",
]

DIVERGENCE_NORM = 1e12
_ADMISSIBLE_RTOL = 1e-12


class InadmissibleParams(ValueError):
    """Step sizes or (beta, gamma) violate the convergence conditions."""


class DivergenceError(RuntimeError):
    """An iterate became non-finite or exceeded the divergence threshold.

    Attributes
    ----------
    index : int
        Position in the snapshot sequence where the failure was detected.
    trajectory : Trajectory or None
        States recorded before the failure.
    """

    def __init__(self, message, index=-1, trajectory=None):
        super().__init__(message)
        self.index = index
        self.trajectory = trajectory


@dataclass(frozen=True, eq=False)
class ProblemSnapshot:
    """One time step of ``min f0+f1 (x) + g0+g1 (y)  s.t.  Ax + By = b``."""

    f0: SeparableFunction
    f1: SeparableFunction
    g0: SeparableFunction
    g1: SeparableFunction
    A: np.ndarray
    B: np.ndarray
    b: np.ndarray
    time_index: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        for name, arr in (("A", A), ("B", B), ("b", b)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        m, n = self.f0.dimension, self.g0.dimension
        if self.f1.dimension != m or self.g1.dimension != n:
            raise DimensionError("f0/f1 or g0/g1 dimensions disagree")
        if A.shape != (b.size, m) or B.shape != (b.size, n):
            raise DimensionError(
                f"A {A.shape} and B {B.shape} must be ({b.size}, {m}) and ({b.size}, {n})"
            )
        if not (self.f0.proxable and self.g0.proxable):
            raise ValueError("f0 and g0 must consist of prox-able atoms")
        if not (self.f1.smooth and self.g1.smooth):
            raise ValueError("f1 and g1 must consist of smooth atoms")
        if self.strong_convexity_f <= 0 or self.strong_convexity_g <= 0:
            raise ValueError("f and g must be strongly convex (add a quadratic with positive curvature)")

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.f0.dimension, self.g0.dimension, self.b.size

    @property
    def strong_convexity_f(self) -> float:
        # indicator/l1 atoms contribute zero curvature
        return self.f1.strong_convexity + self.f0.strong_convexity

    @property
    def strong_convexity_g(self) -> float:
        return self.g1.strong_convexity + self.g0.strong_convexity

    def replace(self, **changes) -> "ProblemSnapshot":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "f0": self.f0.to_dict(),
            "f1": self.f1.to_dict(),
            "g0": self.g0.to_dict(),
            "g1": self.g1.to_dict(),
            "A": self.A.tolist(),
            "B": self.B.tolist(),
            "b": self.b.tolist(),
            "time_index": self.time_index,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ProblemSnapshot":
        return cls(
            f0=SeparableFunction.from_dict(d["f0"]),
            f1=SeparableFunction.from_dict(d["f1"]),
            g0=SeparableFunction.from_dict(d["g0"]),
            g1=SeparableFunction.from_dict(d["g1"]),
            A=np.asarray(d["A"], dtype=float),
            B=np.asarray(d["B"], dtype=float),
            b=np.asarray(d["b"], dtype=float),
            time_index=int(d.get("time_index", 0)),
        )


@dataclass(frozen=True)
class BoundsProfile:
    """Uniform-in-time curvature, norm and drift constants of a problem stream."""

    v_f: float
    v_g: float
    L_f: float
    L_g: float
    sA: float
    sB: float
    drift_A: float = 0.0
    drift_B: float = 0.0
    drift_b: float = 0.0
    drift_x: Optional[float] = None
    drift_y: Optional[float] = None
    drift_lambda: Optional[float] = None
    dual_bound: Optional[float] = None
    primal_bounds: Optional[tuple[float, float]] = None

    def __post_init__(self):
        for name in ("v_f", "v_g", "L_f", "L_g", "sA", "sB", "drift_A", "drift_B", "drift_b"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    def replace(self, **changes) -> "BoundsProfile":
        return replace(self, **changes)


@dataclass(frozen=True)
class GMetric:
    """Weighted norm with weights ``1/alpha1``, ``1/alpha2``, ``1/beta``."""

    alpha1: float
    alpha2: float
    beta: float

    def __post_init__(self):
        if min(self.alpha1, self.alpha2, self.beta) <= 0:
            raise ValueError("G metric weights must be positive")

    def norm(self, x, y, lam) -> float:
        return math.sqrt(
            float(x @ x) / self.alpha1 + float(y @ y) / self.alpha2 + float(lam @ lam) / self.beta
        )

    def dist(self, s: "SolverState", t: "SolverState") -> float:
        return self.norm(s.x - t.x, s.y - t.y, s.lam - t.lam)


@dataclass(frozen=True)
class SolverParams:
    """Step sizes ``alpha1`` (x), ``alpha2`` (y), dual step ``beta``,
    perturbation ``gamma`` and contraction margin ``delta``."""

    alpha1: float
    alpha2: float
    beta: float = 0.5
    gamma: float = 1.0
    delta: float = 0.0

    def __post_init__(self):
        if not (self.alpha1 > 0 and self.alpha2 > 0):
            raise InadmissibleParams("step sizes must be positive")
        if not 0 < self.beta <= 1:
            raise InadmissibleParams("beta must lie in (0, 1]")
        if self.gamma < 0 or self.delta < 0:
            raise InadmissibleParams("gamma and delta must be nonnegative")
        if self.beta * self.gamma >= 1:
            raise InadmissibleParams("beta * gamma must be below 1")

    @property
    def metric(self) -> GMetric:
        return GMetric(self.alpha1, self.alpha2, self.beta)

    @property
    def contraction(self) -> float:
        """Per-iteration G-norm contraction factor ``(1 + delta)^(-1/2)``."""
        return 1.0 / math.sqrt(1.0 + self.delta)

    def replace(self, **changes) -> "SolverParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("alpha1", "alpha2", "beta", "gamma", "delta")}


@dataclass
class SolverState:
    """Primal-dual iterate ``w = (x, y, lam)``."""

    x: np.ndarray
    y: np.ndarray
    lam: np.ndarray
    time_index: int = 0

    def __post_init__(self):
        self.x = np.atleast_1d(np.asarray(self.x, dtype=float))
        self.y = np.atleast_1d(np.asarray(self.y, dtype=float))
        self.lam = np.atleast_1d(np.asarray(self.lam, dtype=float))

    @classmethod
    def zeros(cls, snap: ProblemSnapshot, time_index: Optional[int] = None) -> "SolverState":
        m, n, ell = snap.dims
        t = snap.time_index if time_index is None else time_index
        return cls(np.zeros(m), np.zeros(n), np.zeros(ell), t)

    def copy(self) -> "SolverState":
        return SolverState(self.x.copy(), self.y.copy(), self.lam.copy(), self.time_index)

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.x, self.y, self.lam])

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.y))
                    and np.all(np.isfinite(self.lam)))


def _check_state(snap: ProblemSnapshot, x, y, lam):
    m, n, ell = snap.dims
    if x.shape != (m,) or y.shape != (n,) or lam.shape != (ell,):
        raise DimensionError(
            f"state shapes {x.shape}, {y.shape}, {lam.shape} do not match snapshot ({m}, {n}, {ell})"
        )


def constraint_residual(snap: ProblemSnapshot, x, y) -> np.ndarray:
    """``A x + B y - b``."""
    return snap.A @ x + snap.B @ y - snap.b


def lagrangian_value(snap: ProblemSnapshot, s: SolverState, p: SolverParams) -> float:
    """Perturbed augmented Lagrangian; ``inf`` if an indicator is violated."""
    _check_state(snap, s.x, s.y, s.lam)
    nonsmooth = snap.f0.value(s.x) + snap.g0.value(s.y)
    if not np.isfinite(nonsmooth):
        return math.inf
    r = constraint_residual(snap, s.x, s.y)
    return float(
        snap.f1.value(s.x)
        + snap.g1.value(s.y)
        + 0.5 * p.beta * (r @ r)
        - (1.0 - p.beta * p.gamma) * (s.lam @ r)
        + nonsmooth
    )


def _penalty_dual(snap, x, y, lam, p, residual_fn=None):
    r = constraint_residual(snap, x, y) if residual_fn is None else residual_fn(snap, x, y)
    return p.beta * r - (1.0 - p.beta * p.gamma) * lam


def grad_l1_y(snap: ProblemSnapshot, x, y, lam, p: SolverParams, residual_fn=None) -> np.ndarray:
    """Gradient of the smooth Lagrangian part with respect to ``y``."""
    x, y, lam = (np.atleast_1d(np.asarray(v, dtype=float)) for v in (x, y, lam))
    _check_state(snap, x, y, lam)
    return snap.g1.grad(y) + snap.B.T @ _penalty_dual(snap, x, y, lam, p, residual_fn)


def grad_l1_x(snap: ProblemSnapshot, x, y, lam, p: SolverParams, residual_fn=None) -> np.ndarray:
    """Gradient of the smooth Lagrangian part with respect to ``x``."""
    x, y, lam = (np.atleast_1d(np.asarray(v, dtype=float)) for v in (x, y, lam))
    _check_state(snap, x, y, lam)
    return snap.f1.grad(x) + snap.A.T @ _penalty_dual(snap, x, y, lam, p, residual_fn)


ResidualFn = Callable[[ProblemSnapshot, np.ndarray, np.ndarray], np.ndarray]


def step(
    snap_next: ProblemSnapshot,
    s: SolverState,
    p: SolverParams,
    residual_fn: Optional[ResidualFn] = None,
) -> SolverState:
    """Apply one y -> x -> lambda iteration using the data of ``snap_next``.

    ``residual_fn`` replaces the model residual ``Ax + By - b`` (e.g. with
    measured quantities); by default the model is used.
    """
    if snap_next.time_index < s.time_index or snap_next.time_index > s.time_index + 1:
        raise ValueError(
            f"snapshot time {snap_next.time_index} cannot follow state time {s.time_index}"
        )
    x, y, lam = s.x, s.y, s.lam
    _check_state(snap_next, x, y, lam)
    a1, a2 = p.alpha1, p.alpha2

    y_new = snap_next.g0.prox(y - a2 * grad_l1_y(snap_next, x, y, lam, p, residual_fn), a2)
    x_new = snap_next.f0.prox(x - a1 * grad_l1_x(snap_next, x, y_new, lam, p, residual_fn), a1)
    r = (constraint_residual(snap_next, x_new, y_new) if residual_fn is None
         else residual_fn(snap_next, x_new, y_new))
    lam_new = (1.0 - p.beta * p.gamma) * lam - p.beta * r
    return SolverState(x_new, y_new, lam_new, snap_next.time_index)


def select_params(bounds: BoundsProfile, beta: float = 0.5, gamma: float = 1.0) -> SolverParams:
    """Largest admissible step sizes and the matching contraction margin.

    Examples
    --------
    >>> b = BoundsProfile(v_f=1, v_g=1, L_f=1, L_g=1, sA=1, sB=1)
    >>> p = select_params(b, 0.5, 1.0)
    >>> p.alpha1, p.alpha2, p.delta
    (0.4, 0.6666666666666666, 0.3333333333333333)
    """
    if not 0 < beta <= 1 or gamma <= 0 or beta * gamma + beta > 1:
        raise InadmissibleParams(
            f"(beta, gamma) = ({beta}, {gamma}) violates beta*gamma + beta <= 1, 0 < beta <= 1, gamma > 0"
        )
    if bounds.v_f <= 0 or bounds.v_g <= 0:
        raise InadmissibleParams("strong convexity bounds must be positive")
    bg = beta * gamma
    denom_x = (1.0 + bg) * bounds.sA**2 + bounds.L_f**2 / bounds.v_f
    denom_y = 2.0 * beta**2 * bounds.sB**4 / bounds.v_g + bounds.L_g**2 / bounds.v_g
    if denom_x <= 0 or denom_y <= 0:
        raise InadmissibleParams("step-size denominators vanish (no curvature and no coupling)")
    alpha1 = 1.0 / denom_x
    alpha2 = 1.0 / denom_y
    delta = min(
        bounds.v_f / denom_x,
        bounds.v_g**2 / (4.0 * beta**2 * bounds.sB**4 + 2.0 * bounds.L_g**2),
        bg,
    )
    return SolverParams(alpha1=alpha1, alpha2=alpha2, beta=beta, gamma=gamma, delta=delta)


def check_step_conditions(
    p: SolverParams,
    bounds: BoundsProfile,
    rho: Optional[Sequence[float]] = None,
    rtol: float = _ADMISSIBLE_RTOL,
) -> dict[str, bool]:
    """Evaluate the sufficient conditions behind the per-iteration contraction.

    The conditions are parameterised by five positive weights ``rho``; by
    default ``rho1 = rho2 = 1``, ``rho3 = v_g / (2 beta sB^2)``,
    ``rho4 = v_f``, ``rho5 = v_g``.  Returns a mapping from condition name to
    whether it holds (relative slack ``rtol``).
    """
    beta, gamma, delta = p.beta, p.gamma, p.delta
    sA2, sB2 = bounds.sA**2, bounds.sB**2
    if rho is None:
        rho3 = bounds.v_g / (2.0 * beta * sB2) if sB2 > 0 else 1.0
        rho = (1.0, 1.0, rho3, bounds.v_f, bounds.v_g)
    r1, r2, r3, r4, r5 = rho

    def le(a, b):
        return a <= b + rtol * max(abs(a), abs(b), 1e-300)

    a1_upper = 1.0 / ((1.0 / r1 + beta * gamma / r2) * sA2 + bounds.L_f**2 / r4)
    a1_room = 2.0 * bounds.v_f - r4
    a2_upper = 1.0 / (beta * sB2 / r3 + bounds.L_g**2 / r5)
    a2_room = 2.0 * bounds.v_g - r5 - beta * r3 * sB2
    return {
        "alpha1_upper": le(p.alpha1, a1_upper),
        "alpha1_lower": a1_room > 0 and le(delta / a1_room, p.alpha1),
        "alpha2_upper": le(p.alpha2, a2_upper),
        "alpha2_lower": a2_room > 0 and le(delta / a2_room, p.alpha2),
        "dual_step": le(r1, 1.0 / beta - gamma),
        "dual_perturbation": le(beta * gamma * r2, gamma),
        "delta_dual": le(delta, beta * gamma),
    }


def _opnorm(M: np.ndarray) -> float:
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def bounds_from_snapshots(snaps: Sequence[ProblemSnapshot]) -> BoundsProfile:
    """Uniform curvature, operator-norm and data-drift bounds over a stream."""
    snaps = list(snaps)
    if not snaps:
        raise ValueError("need at least one snapshot")
    dims = snaps[0].dims
    if any(s.dims != dims for s in snaps):
        raise DimensionError("snapshots have inconsistent dimensions")
    v_f = min(s.strong_convexity_f for s in snaps)
    v_g = min(s.strong_convexity_g for s in snaps)
    if v_f <= 0 or v_g <= 0:
        raise ValueError("a snapshot has zero strong convexity")
    drift_A = drift_B = drift_b = 0.0
    for prev, cur in zip(snaps, snaps[1:]):
        drift_A = max(drift_A, _opnorm(cur.A - prev.A))
        drift_B = max(drift_B, _opnorm(cur.B - prev.B))
        drift_b = max(drift_b, float(np.linalg.norm(cur.b - prev.b)))
    return BoundsProfile(
        v_f=v_f,
        v_g=v_g,
        L_f=max(s.f1.grad_lipschitz for s in snaps),
        L_g=max(s.g1.grad_lipschitz for s in snaps),
        sA=max(_opnorm(s.A) for s in snaps),
        sB=max(_opnorm(s.B) for s in snaps),
        drift_A=drift_A,
        drift_B=drift_B,
        drift_b=drift_b,
    )


@dataclass
class Trajectory:
    """States recorded after each snapshot of an online run.

    ``initial`` is the starting iterate; ``states[k]`` is the iterate after
    processing snapshot ``k``.
    """

    initial: SolverState
    states: list[SolverState]
    params: SolverParams
    iters_per_step: int = 1

    def __len__(self):
        return len(self.states)

    def primal_residuals(self, snaps: Sequence[ProblemSnapshot]) -> np.ndarray:
        return np.array([np.linalg.norm(constraint_residual(sn, s.x, s.y))
                         for sn, s in zip(snaps, self.states)])

    def lambda_norms(self) -> np.ndarray:
        return np.array([np.linalg.norm(s.lam) for s in self.states])

    def lagrangians(self, snaps: Sequence[ProblemSnapshot]) -> np.ndarray:
        return np.array([lagrangian_value(sn, s, self.params) for sn, s in zip(snaps, self.states)])


def _diverged(s: SolverState, metric: GMetric) -> bool:
    return not s.is_finite() or metric.norm(s.x, s.y, s.lam) > DIVERGENCE_NORM


def run_online(
    snaps: Sequence[ProblemSnapshot],
    p: SolverParams,
    w0: Optional[SolverState] = None,
    iters_per_step: int = 1,
    residual_fn: Optional[ResidualFn] = None,
) -> Trajectory:
    """Track a snapshot stream with ``iters_per_step`` iterations per snapshot.

    Raises
    ------
    DivergenceError
        If an iterate stops being finite or its G-norm exceeds
        ``DIVERGENCE_NORM``; the partial trajectory is attached.
    """
    snaps = list(snaps)
    if not snaps:
        raise ValueError("empty snapshot sequence")
    if iters_per_step < 1:
        raise ValueError("iters_per_step must be positive")
    if w0 is None:
        w0 = SolverState.zeros(snaps[0])
    metric = p.metric
    s = w0.copy()
    _check_state(snaps[0], s.x, s.y, s.lam)
    traj = Trajectory(initial=w0.copy(), states=[], params=p, iters_per_step=iters_per_step)
    for k, snap in enumerate(snaps):
        for _ in range(iters_per_step):
            s = step(snap, s, p, residual_fn)
        if _diverged(s, metric):
            raise DivergenceError(f"iterate diverged at snapshot {k}", index=k, trajectory=traj)
        traj.states.append(s)
    return traj
