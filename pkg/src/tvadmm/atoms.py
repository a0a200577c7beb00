"""Objective pieces with exact gradients and proximal maps.

A :class:`SeparableFunction` is a list of atoms, each acting on a contiguous
slice of the variable vector.  Smooth atoms (``Quadratic``, ``Zero``) expose a
gradient; prox-able atoms (``WeightedL1``, ``BoxIndicator``,
``NonnegIndicator``, ``Zero``) expose the scaled proximal map

    prox(x, step) = argmin_z  0.5 * ||z - x||^2 + step * h(z).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "FunctionAtom",
    "Quadratic",
    "WeightedL1",
    "BoxIndicator",
    "NonnegIndicator",
    "Zero",
    "SeparableFunction",
    "DimensionError",
    "AtomKindError",
    "grad",
    "prox",
    "evaluate",
]

PSD_TOL = 1e-10
SYM_TOL = 1e-10


class DimensionError(ValueError):
    """Vector or matrix sizes do not agree."""


class AtomKindError(TypeError):
    """An operation was requested that the atom kind does not support."""


def _vec(v, size=None, name="vector"):
    arr = np.atleast_1d(np.asarray(v, dtype=float))
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if size is not None and arr.size != size:
        raise DimensionError(f"{name} has length {arr.size}, expected {size}")
    return arr


def _frozen(arr):
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


class FunctionAtom:
    """Base class for a convex function on a block of variables."""

    kind: str = "abstract"
    smooth: bool = False
    proxable: bool = False

    @property
    def dimension(self) -> int:
        raise NotImplementedError

    @property
    def strong_convexity(self) -> float:
        return 0.0

    @property
    def grad_lipschitz(self) -> float:
        return 0.0

    def value(self, z: np.ndarray) -> float:
        raise NotImplementedError

    def grad(self, z: np.ndarray) -> np.ndarray:
        raise AtomKindError(f"{self.kind} atom has no gradient")

    def prox(self, z: np.ndarray, step: float) -> np.ndarray:
        raise AtomKindError(f"{self.kind} atom has no proximal map")

    def to_dict(self) -> dict:
        raise NotImplementedError


class Quadratic(FunctionAtom):
    """``0.5 z'Pz + q'z + r`` with symmetric PSD ``P``."""

    kind = "quadratic"
    smooth = True

    def __init__(self, P, q=None, r=0.0):
        P = np.atleast_2d(np.asarray(P, dtype=float))
        if P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise DimensionError(f"P must be square, got shape {P.shape}")
        n = P.shape[0]
        scale = max(1.0, float(np.max(np.abs(P))) if P.size else 1.0)
        if np.max(np.abs(P - P.T), initial=0.0) > SYM_TOL * scale:
            raise ValueError("P is not symmetric")
        P = 0.5 * (P + P.T)
        eig = np.linalg.eigvalsh(P)
        if eig[0] < -PSD_TOL * scale:
            raise ValueError(f"P is not positive semidefinite (min eigenvalue {eig[0]:.3e})")
        self.P = _frozen(P)
        self.q = _frozen(np.zeros(n) if q is None else _vec(q, n, "q"))
        self.r = float(r)
        self._mu = max(float(eig[0]), 0.0)
        self._L = max(float(eig[-1]), 0.0)

    @property
    def dimension(self):
        return self.P.shape[0]

    @property
    def strong_convexity(self):
        return self._mu

    @property
    def grad_lipschitz(self):
        return self._L

    def value(self, z):
        return float(0.5 * z @ self.P @ z + self.q @ z + self.r)

    def grad(self, z):
        return self.P @ z + self.q

    def to_dict(self):
        return {"kind": self.kind, "P": self.P.tolist(), "q": self.q.tolist(), "r": self.r}

    def __repr__(self):
        return f"Quadratic(dim={self.dimension}, mu={self._mu:.3g}, L={self._L:.3g})"


class WeightedL1(FunctionAtom):
    """``sum_i w_i |z_i|`` with ``w >= 0``."""

    kind = "l1"
    proxable = True

    def __init__(self, w):
        w = _vec(w, name="w")
        if np.any(w < 0):
            raise ValueError("l1 weights must be nonnegative")
        self.w = _frozen(w)

    @property
    def dimension(self):
        return self.w.size

    def value(self, z):
        return float(self.w @ np.abs(z))

    def prox(self, z, step):
        return np.sign(z) * np.maximum(np.abs(z) - step * self.w, 0.0)

    def to_dict(self):
        return {"kind": self.kind, "w": self.w.tolist()}

    def __repr__(self):
        return f"WeightedL1(dim={self.dimension})"


class BoxIndicator(FunctionAtom):
    """Indicator of ``{z : lo <= z <= hi}``."""

    kind = "box"
    proxable = True

    def __init__(self, lo, hi):
        lo = _vec(lo, name="lo")
        hi = _vec(hi, lo.size, "hi")
        if np.any(lo > hi):
            raise ValueError("box requires lo <= hi componentwise")
        self.lo = _frozen(lo)
        self.hi = _frozen(hi)

    @property
    def dimension(self):
        return self.lo.size

    def value(self, z):
        if np.any(z < self.lo) or np.any(z > self.hi):
            return np.inf
        return 0.0

    def prox(self, z, step):
        return np.clip(z, self.lo, self.hi)

    def to_dict(self):
        return {"kind": self.kind, "lo": self.lo.tolist(), "hi": self.hi.tolist()}

    def __repr__(self):
        return f"BoxIndicator(dim={self.dimension})"


class NonnegIndicator(FunctionAtom):
    """Indicator of the nonnegative orthant."""

    kind = "nonneg"
    proxable = True

    def __init__(self, dim: int):
        if int(dim) <= 0:
            raise DimensionError("dimension must be positive")
        self._dim = int(dim)

    @property
    def dimension(self):
        return self._dim

    def value(self, z):
        return np.inf if np.any(z < 0) else 0.0

    def prox(self, z, step):
        return np.maximum(z, 0.0)

    def to_dict(self):
        return {"kind": self.kind, "dim": self._dim}

    def __repr__(self):
        return f"NonnegIndicator(dim={self._dim})"


class Zero(FunctionAtom):
    """The zero function; both smooth and prox-able."""

    kind = "zero"
    smooth = True
    proxable = True

    def __init__(self, dim: int):
        if int(dim) <= 0:
            raise DimensionError("dimension must be positive")
        self._dim = int(dim)

    @property
    def dimension(self):
        return self._dim

    def value(self, z):
        return 0.0

    def grad(self, z):
        return np.zeros_like(z)

    def prox(self, z, step):
        return np.array(z, dtype=float, copy=True)

    def to_dict(self):
        return {"kind": self.kind, "dim": self._dim}

    def __repr__(self):
        return f"Zero(dim={self._dim})"


@dataclass(frozen=True)
class _Piece:
    atom: FunctionAtom
    start: int
    stop: int


class SeparableFunction:
    """Sum of atoms acting on disjoint slices that cover ``[0, dimension)``.

    Parameters
    ----------
    pieces : sequence of (FunctionAtom, (start, stop))
        Each atom with the half-open index range it acts on.
    dimension : int, optional
        Total dimension; inferred from the ranges when omitted.
    """

    def __init__(self, pieces: Sequence, dimension: int | None = None):
        items = []
        for atom, rng in pieces:
            start, stop = int(rng[0]), int(rng[1])
            if stop - start != atom.dimension:
                raise DimensionError(
                    f"range [{start}, {stop}) does not match {atom!r} of dimension {atom.dimension}"
                )
            items.append(_Piece(atom, start, stop))
        items.sort(key=lambda p: p.start)
        pos = 0
        for p in items:
            if p.start != pos:
                raise DimensionError(f"atom ranges must partition the variable; gap or overlap at {pos}")
            pos = p.stop
        if dimension is None:
            dimension = pos
        if pos != dimension or dimension <= 0:
            raise DimensionError(f"atom ranges cover [0, {pos}) but dimension is {dimension}")
        self.pieces = tuple(items)
        self.dimension = int(dimension)

    @classmethod
    def single(cls, atom: FunctionAtom) -> "SeparableFunction":
        return cls([(atom, (0, atom.dimension))])

    @classmethod
    def zero(cls, dim: int) -> "SeparableFunction":
        return cls.single(Zero(dim))

    @property
    def atoms(self):
        return [p.atom for p in self.pieces]

    @property
    def smooth(self) -> bool:
        return all(p.atom.smooth for p in self.pieces)

    @property
    def proxable(self) -> bool:
        return all(p.atom.proxable for p in self.pieces)

    @property
    def strong_convexity(self) -> float:
        # disjoint blocks: the weakest block sets the modulus
        return min(p.atom.strong_convexity for p in self.pieces)

    @property
    def grad_lipschitz(self) -> float:
        return max(p.atom.grad_lipschitz for p in self.pieces)

    def _check(self, x):
        return _vec(x, self.dimension, "x")

    def grad(self, x):
        x = self._check(x)
        out = np.empty_like(x)
        for p in self.pieces:
            out[p.start:p.stop] = p.atom.grad(x[p.start:p.stop])
        return out

    def prox(self, x, step):
        if not step > 0:
            raise ValueError("prox step must be positive")
        x = self._check(x)
        out = np.empty_like(x)
        for p in self.pieces:
            out[p.start:p.stop] = p.atom.prox(x[p.start:p.stop], step)
        return out

    def value(self, x):
        x = self._check(x)
        return float(sum(p.atom.value(x[p.start:p.stop]) for p in self.pieces))

    def to_dict(self) -> dict:
        atoms = []
        for p in self.pieces:
            d = p.atom.to_dict()
            d["range"] = [p.start, p.stop]
            atoms.append(d)
        return {"atoms": atoms}

    @classmethod
    def from_dict(cls, spec: dict) -> "SeparableFunction":
        """Build from ``{"atoms": [{"kind": ..., "range": [a, b], ...}, ...]}``."""
        pieces = []
        for d in spec["atoms"]:
            start, stop = d["range"]
            kind = d["kind"]
            n = stop - start
            if kind == "quadratic":
                atom = Quadratic(d["P"], d.get("q"), d.get("r", 0.0))
            elif kind == "l1":
                w = d.get("w", 1.0)
                atom = WeightedL1(np.broadcast_to(np.asarray(w, float), (n,)))
            elif kind == "box":
                lo = np.broadcast_to(np.asarray(d["lo"], float), (n,))
                hi = np.broadcast_to(np.asarray(d["hi"], float), (n,))
                atom = BoxIndicator(lo, hi)
            elif kind == "nonneg":
                atom = NonnegIndicator(n)
            elif kind == "zero":
                atom = Zero(n)
            else:
                raise ValueError(f"unknown atom kind {kind!r}")
            pieces.append((atom, (start, stop)))
        return cls(pieces, spec.get("dimension"))

    def __repr__(self):
        inner = ", ".join(f"{p.atom!r}@[{p.start},{p.stop})" for p in self.pieces)
        return f"SeparableFunction({inner})"


def grad(fn: SeparableFunction, x) -> np.ndarray:
    """Gradient of a function made only of smooth atoms."""
    if not fn.smooth:
        bad = [p.atom.kind for p in fn.pieces if not p.atom.smooth]
        raise AtomKindError(f"gradient requested for nonsmooth atoms {bad}")
    return fn.grad(x)


def prox(fn: SeparableFunction, x, step: float) -> np.ndarray:
    """Scaled proximal map ``argmin_z 0.5||z - x||^2 + step * fn(z)``."""
    if not fn.proxable:
        bad = [p.atom.kind for p in fn.pieces if not p.atom.proxable]
        raise AtomKindError(f"prox requested for atoms without a prox {bad}")
    return fn.prox(x, step)


def evaluate(fn: SeparableFunction, x) -> float:
    """Function value; ``inf`` when an indicator is violated."""
    return fn.value(x)
