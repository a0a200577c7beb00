"""Bilinear saddle ``min_x max_lam x'A lam`` under simultaneous gradient play.

Without perturbation the iteration spirals outward; shrinking the multiplier
by ``1 - gamma*beta`` in both updates makes it contract.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

__all__ = ["ToyConfig", "ToyTrace", "toy_run", "DEFAULT_TOY_SEED"]

DEFAULT_TOY_SEED = 0


@dataclass(frozen=True)
class ToyConfig:
    """Toy saddle setup; ``A`` defaults to a seeded standard Gaussian ``m x ell``."""

    m: int = 5
    ell: int = 5
    alpha: float = 0.1
    beta: float = 0.1
    gamma: float = 1.0
    steps: int = 500
    seed: int = DEFAULT_TOY_SEED
    A: Optional[np.ndarray] = field(default=None, compare=False)
    x0: Optional[np.ndarray] = field(default=None, compare=False)
    lam0: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("step sizes must be positive")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        if self.gamma > 0 and self.gamma * self.beta >= 1:
            raise ValueError("gamma * beta must be below 1")
        if self.steps < 1:
            raise ValueError("steps must be positive")

    def matrices(self):
        """Return ``(A, x0, lam0)``, drawing any that were not supplied."""
        rng = np.random.default_rng(self.seed)
        A = rng.standard_normal((self.m, self.ell)) if self.A is None else np.asarray(self.A, float)
        x0 = rng.standard_normal(self.m) if self.x0 is None else np.asarray(self.x0, float)
        lam0 = rng.standard_normal(self.ell) if self.lam0 is None else np.asarray(self.lam0, float)
        if A.shape != (x0.size, lam0.size):
            raise ValueError(f"A has shape {A.shape}, expected ({x0.size}, {lam0.size})")
        return A, x0, lam0


@dataclass
class ToyTrace:
    x: np.ndarray
    lam: np.ndarray
    objective: np.ndarray
    norm: np.ndarray
    diverged: bool = False

    @property
    def growth(self) -> float:
        """Final over initial ``||(x, lam)||``."""
        return float(self.norm[-1] / self.norm[0]) if self.norm[0] > 0 else float(self.norm[-1])


def toy_run(cfg: ToyConfig, perturbed: bool) -> ToyTrace:
    """Iterate the saddle dynamics; both updates read the previous iterate.

    ``x`` has length ``m`` and ``lam`` length ``ell`` with ``A`` of shape
    ``(m, ell)`` so that the objective is ``x' A lam``.  Overflow truncates
    the trace and sets ``diverged``.
    """
    A, x, lam = cfg.matrices()
    shrink = 1.0 - cfg.gamma * cfg.beta if perturbed else 1.0
    xs, ls = [x.copy()], [lam.copy()]
    diverged = False
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(cfg.steps):
            if perturbed:
                x_new = x - cfg.alpha * (A @ lam * shrink)
                lam_new = lam * shrink + cfg.beta * (A.T @ x)
            else:
                x_new = x - cfg.alpha * (A @ lam)
                lam_new = lam + cfg.beta * (A.T @ x)
            if not (np.all(np.isfinite(x_new)) and np.all(np.isfinite(lam_new))):
                diverged = True
                break
            x, lam = x_new, lam_new
            xs.append(x.copy())
            ls.append(lam.copy())
    X, L = np.array(xs), np.array(ls)
    with np.errstate(over="ignore", invalid="ignore"):
        obj = np.einsum("ki,ij,kj->k", X, A, L)
    W = np.hstack([X, L])
    scale = np.max(np.abs(W), axis=1)
    safe = np.where(scale > 0, scale, 1.0)
    # scaled so that iterates close to the overflow limit keep a finite norm
    norm = scale * np.sqrt(np.sum((W / safe[:, None]) ** 2, axis=1))
    return ToyTrace(X, L, obj, norm, diverged)
