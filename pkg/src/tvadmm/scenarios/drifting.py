"""Seeded streams of strongly convex two-block problems with bounded drift."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..atoms import Quadratic, SeparableFunction, WeightedL1, Zero
from ..solver import ProblemSnapshot

__all__ = ["DriftingQpConfig", "DRIFT_KINDS", "gen_drifting_qp", "random_snapshot", "gamma_sweep_snapshot"]

DRIFT_KINDS = ("SinusoidB", "RandomWalkB", "RotatingA")


@dataclass(frozen=True)
class DriftingQpConfig:
    """Parameters of a drifting problem family.

    Curvature matrices are ``P = L'L + nu*I`` with ``L`` Gaussian scaled by
    ``curvature_scale / sqrt(dim)``; ``A`` and ``B`` are Gaussian rescaled
    to spectral norm ``coupling_norm``.
    """

    m: int = 10
    n: int = 10
    ell: int = 5
    drift_amplitude: float = 0.0
    drift_kind: str = "SinusoidB"
    horizon: int = 100
    l1_weight: float = 0.0
    seed: int = 0
    period: float = 200.0
    nu: float = 1.0
    curvature_scale: float = 0.5
    coupling_norm: float = 1.0

    def __post_init__(self):
        if min(self.m, self.n, self.ell, self.horizon) <= 0:
            raise ValueError("dimensions and horizon must be positive")
        if self.drift_kind not in DRIFT_KINDS:
            raise ValueError(f"drift_kind must be one of {DRIFT_KINDS}")
        if self.drift_amplitude < 0 or self.l1_weight < 0:
            raise ValueError("drift_amplitude and l1_weight must be nonnegative")
        if self.nu < 0.1:
            raise ValueError("nu must be at least 0.1")
        if self.period <= 0:
            raise ValueError("period must be positive")


def _spd(rng, dim, nu, scale):
    L = rng.standard_normal((dim, dim)) * (scale / math.sqrt(dim))
    P = L.T @ L + nu * np.eye(dim)
    return 0.5 * (P + P.T)


def _coupling(rng, rows, cols, norm):
    M = rng.standard_normal((rows, cols))
    return M * (norm / np.linalg.norm(M, 2))


def _base(cfg: DriftingQpConfig, rng):
    Pf = _spd(rng, cfg.m, cfg.nu, cfg.curvature_scale)
    Pg = _spd(rng, cfg.n, cfg.nu, cfg.curvature_scale)
    qf = rng.standard_normal(cfg.m)
    qg = rng.standard_normal(cfg.n)
    A = _coupling(rng, cfg.ell, cfg.m, cfg.coupling_norm)
    B = _coupling(rng, cfg.ell, cfg.n, cfg.coupling_norm)
    b = rng.standard_normal(cfg.ell)
    return Pf, qf, Pg, qg, A, B, b


def _snapshot(cfg, Pf, qf, Pg, qg, A, B, b, k):
    f1 = SeparableFunction.single(Quadratic(Pf, qf))
    g1 = SeparableFunction.single(Quadratic(Pg, qg))
    if cfg.l1_weight > 0:
        f0 = SeparableFunction.single(WeightedL1(np.full(cfg.m, cfg.l1_weight)))
    else:
        f0 = SeparableFunction.zero(cfg.m)
    g0 = SeparableFunction.zero(cfg.n)
    return ProblemSnapshot(f0, f1, g0, g1, A, B, b, time_index=k)


def _givens_stack(dim, theta):
    """Product of rotations by ``theta`` in the disjoint planes (0,1), (2,3), ..."""
    R = np.eye(dim)
    c, s = math.cos(theta), math.sin(theta)
    for i in range(0, dim - 1, 2):
        R[i, i] = c
        R[i + 1, i + 1] = c
        R[i, i + 1] = -s
        R[i + 1, i] = s
    return R


def gen_drifting_qp(cfg: DriftingQpConfig) -> list[ProblemSnapshot]:
    """Generate ``cfg.horizon`` snapshots.

    ``SinusoidB`` moves ``b`` along ``b0 + a * u * sin(2 pi k / period + phase)``
    with unit ``u``, so successive changes are at most ``a * 2 pi / period``.
    ``RandomWalkB`` adds a step of norm exactly ``a`` each time.
    ``RotatingA`` rotates the columns of ``A`` by angle ``a`` per step, giving
    ``||A(k+1) - A(k)|| <= a * ||A||``.
    """
    rng = np.random.default_rng(cfg.seed)
    Pf, qf, Pg, qg, A0, B, b0 = _base(cfg, rng)
    a = cfg.drift_amplitude
    u = rng.standard_normal(cfg.ell)
    u /= np.linalg.norm(u)
    phase = rng.uniform(0.0, 2 * math.pi, cfg.ell)
    snaps = []
    b = b0.copy()
    for k in range(cfg.horizon):
        A = A0
        if cfg.drift_kind == "SinusoidB":
            b = b0 + a * u * np.sin(2 * math.pi * k / cfg.period + phase)
        elif cfg.drift_kind == "RandomWalkB":
            if k > 0:
                xi = rng.standard_normal(cfg.ell)
                b = b + a * xi / np.linalg.norm(xi)
        else:
            A = A0 @ _givens_stack(cfg.m, a * k)
        snaps.append(_snapshot(cfg, Pf, qf, Pg, qg, A, B, b.copy(), k))
    return snaps


def random_snapshot(seed: int, m: int = 10, n: int = 10, ell: int = 5, l1_weight: float = 0.0,
                    **kwargs) -> ProblemSnapshot:
    """A single static instance drawn from the same family."""
    cfg = DriftingQpConfig(m=m, n=n, ell=ell, l1_weight=l1_weight, seed=seed, horizon=1, **kwargs)
    return gen_drifting_qp(cfg)[0]


def gamma_sweep_snapshot(seed: int = 0) -> ProblemSnapshot:
    """Static instance used for perturbation-strength sweeps.

    Stronger coupling and milder curvature than the family defaults make the
    multiplier well determined, so the perturbed solution approaches the
    unperturbed one cleanly as ``gamma`` shrinks.
    """
    return random_snapshot(seed, nu=0.5, curvature_scale=0.3, coupling_norm=2.0)
