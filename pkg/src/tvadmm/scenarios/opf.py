"""Synthetic multi-area DER dispatch mapped onto the two-block template.

Block ``x`` stacks, per cluster, the DER set-points ``(P, Q)`` of each
internal node, followed by the directed inter-area flows ``(P, Q)`` of every
ordered pair of neighbouring clusters and shared boundary node.  Block ``y``
stacks the voltage slacks ``slack_lo`` and ``slack_hi`` of every internal
node.  Equality rows, in order:

* lower voltage rows    ``v_min - v(x) + slack_lo = 0``     (one per node)
* upper voltage rows    ``v(x) + slack_hi - v_max = 0``     (one per node)
* flow rows             ``x[j->i] - M[j->i](x_i - load_i) - sum_k Mk x[k->i] = m[j->i]``
* consensus rows        ``x[j->i] + x[i->j] = 0``

with the linearised voltage map ``v(x) = A_i (x_i - load_i) + sum_j A[j->i] x[j->i] + a_i``.
All sensitivities are synthetic; a feasible operating point is planted so
every snapshot admits a solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..atoms import BoxIndicator, NonnegIndicator, Quadratic, SeparableFunction, WeightedL1, Zero
from ..solver import ProblemSnapshot, Trajectory

__all__ = [
    "OpfConfig",
    "OpfLayout",
    "OpfModel",
    "build_opf_model",
    "gen_opf",
    "opf_metrics",
    "OpfMetrics",
    "measurement_residual",
]

TOPOLOGIES = ("star", "chain")


@dataclass(frozen=True)
class OpfConfig:
    """Multi-area dispatch instance.

    ``a_lo``/``a_hi`` weight the squared voltage slacks; ``flow_reg`` is the
    curvature added on the flow variables (and on DER coordinates whose cost
    weight is zero) so that the x-block objective is strongly convex.  ``p_available`` (shape ``horizon x clusters*nodes``)
    overrides the synthetic solar profile; ``profile="constant"`` freezes the
    first sample for static runs.
    """

    clusters: int = 4
    nodes_per_cluster: int = 2
    c_p: float = 3.0
    c_q: float = 1.0
    cbar_q: float = 0.1
    a_lo: float = 1.0
    a_hi: float = 1.0
    v_min: float = 0.95
    v_max: float = 1.05
    horizon: int = 1
    seed: int = 0
    topology: str = "star"
    profile: str = "solar"
    flow_reg: float = 1.0
    sensitivity: float = 0.05
    capacity: float = 0.1
    p_available: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        if self.clusters < 1 or self.nodes_per_cluster < 1 or self.horizon < 1:
            raise ValueError("clusters, nodes_per_cluster and horizon must be positive")
        if not self.v_min < self.v_max:
            raise ValueError("v_min must be below v_max")
        if min(self.c_p, self.c_q, self.cbar_q) < 0:
            raise ValueError("objective weights must be nonnegative")
        if self.a_lo <= 0 or self.a_hi <= 0:
            raise ValueError("slack weights must be positive")
        if self.flow_reg < 0:
            raise ValueError("flow_reg must be nonnegative")
        if self.flow_reg == 0:
            if self.c_p == 0 or self.c_q == 0:
                raise ValueError("zero c_p or c_q needs flow_reg > 0 for strong convexity")
            if self.clusters > 1:
                raise ValueError("inter-area flows need flow_reg > 0 for strong convexity")
        if self.topology not in TOPOLOGIES:
            raise ValueError(f"topology must be one of {TOPOLOGIES}")
        if self.profile not in ("solar", "constant"):
            raise ValueError("profile must be 'solar' or 'constant'")
        if self.p_available is not None:
            pa = np.asarray(self.p_available, dtype=float)
            if pa.shape != (self.horizon, self.clusters * self.nodes_per_cluster):
                raise ValueError(
                    f"p_available has shape {pa.shape}, expected "
                    f"({self.horizon}, {self.clusters * self.nodes_per_cluster})"
                )
            if np.any(pa <= 0):
                raise ValueError("p_available must be positive")


@dataclass(frozen=True)
class OpfLayout:
    """Index bookkeeping for variables and constraint rows."""

    clusters: int
    nodes: int
    pairs: tuple  # ordered (src, dst) for flows "into dst from src", one boundary node each
    neighbors: tuple

    @property
    def n_der(self) -> int:
        return self.clusters * self.nodes

    @property
    def m(self) -> int:
        return 2 * self.n_der + 2 * len(self.pairs)

    @property
    def n(self) -> int:
        return 2 * self.n_der

    @property
    def undirected(self) -> list:
        return [(s, d) for (s, d) in self.pairs if s < d]

    @property
    def ell(self) -> int:
        return 2 * self.n_der + 2 * len(self.pairs) + 2 * len(self.undirected)

    def der(self, i: int) -> slice:
        return slice(2 * self.nodes * i, 2 * self.nodes * (i + 1))

    def flow(self, src: int, dst: int) -> slice:
        idx = self.pairs.index((src, dst))
        start = 2 * self.n_der + 2 * idx
        return slice(start, start + 2)

    def p_index(self, i: int, j: int) -> int:
        return 2 * (self.nodes * i + j)

    def slack_lo(self, i: int) -> slice:
        return slice(self.nodes * i, self.nodes * (i + 1))

    def slack_hi(self, i: int) -> slice:
        return slice(self.n_der + self.nodes * i, self.n_der + self.nodes * (i + 1))

    def rows_vlo(self, i: int) -> slice:
        return self.slack_lo(i)

    def rows_vhi(self, i: int) -> slice:
        return self.slack_hi(i)

    def rows_flow(self, src: int, dst: int) -> slice:
        idx = self.pairs.index((src, dst))
        start = 2 * self.n_der + 2 * idx
        return slice(start, start + 2)

    def rows_consensus(self, a: int, b: int) -> slice:
        idx = self.undirected.index((min(a, b), max(a, b)))
        start = 2 * self.n_der + 2 * len(self.pairs) + 2 * idx
        return slice(start, start + 2)

    @property
    def flow_rows(self) -> slice:
        return slice(2 * self.n_der, 2 * self.n_der + 2 * len(self.pairs))

    @property
    def consensus_rows(self) -> slice:
        return slice(2 * self.n_der + 2 * len(self.pairs), self.ell)


def _layout(cfg: OpfConfig) -> OpfLayout:
    C = cfg.clusters
    if C == 1:
        adj = []
    elif cfg.topology == "star":
        # one boundary node shared by every cluster: all pairs adjacent
        adj = [(i, j) for i in range(C) for j in range(C) if i != j]
    else:
        adj = [(i, i + 1) for i in range(C - 1)] + [(i + 1, i) for i in range(C - 1)]
    pairs = tuple(sorted(adj))
    neighbors = tuple(tuple(sorted(s for (s, d) in pairs if d == i)) for i in range(C))
    return OpfLayout(C, cfg.nodes_per_cluster, pairs, neighbors)


@dataclass
class OpfModel:
    """Synthetic network data shared by all snapshots of one configuration."""

    cfg: OpfConfig
    layout: OpfLayout
    A_der: list           # per cluster: nodes x 2*nodes voltage sensitivity to own DERs
    A_flow: dict          # (src, dst) -> nodes x 2 voltage sensitivity of dst to the inflow
    a: np.ndarray         # horizon x n_der voltage offsets
    M_der: dict           # (src, dst) -> 2 x 2*nodes flow sensitivity to DERs of dst
    M_cross: dict         # (k, src, dst) -> 2 x 2 flow sensitivity to inflow from k
    m_off: dict           # (src, dst) -> 2 flow offset
    load: np.ndarray      # n_der x 2 non-controllable (P, Q) loads
    p_available: np.ndarray  # horizon x n_der
    x_ref: np.ndarray     # planted feasible x-block point (first snapshot)

    def voltages(self, x: np.ndarray, k: int = 0) -> np.ndarray:
        """Linearised voltage magnitudes of every internal node."""
        L = self.layout
        out = np.empty(L.n_der)
        for i in range(L.clusters):
            inj = x[L.der(i)] - self.load[L.nodes * i:L.nodes * (i + 1)].ravel()
            v = self.A_der[i] @ inj + self.a[k, L.nodes * i:L.nodes * (i + 1)]
            for src in L.neighbors[i]:
                v = v + self.A_flow[(src, i)] @ x[L.flow(src, i)]
            out[L.nodes * i:L.nodes * (i + 1)] = v
        return out

    def flow_residuals(self, x: np.ndarray) -> dict:
        """Mismatch of each inter-area flow equation, keyed by ``(src, dst)``."""
        L = self.layout
        res = {}
        for (src, dst) in L.pairs:
            inj = x[L.der(dst)] - self.load[L.nodes * dst:L.nodes * (dst + 1)].ravel()
            r = x[L.flow(src, dst)] - self.M_der[(src, dst)] @ inj - self.m_off[(src, dst)]
            for k in L.neighbors[dst]:
                if k != src:
                    r = r - self.M_cross[(k, src, dst)] @ x[L.flow(k, dst)]
            res[(src, dst)] = r
        return res

    def consensus_residuals(self, x: np.ndarray) -> dict:
        L = self.layout
        return {(a, b): x[L.flow(a, b)] + x[L.flow(b, a)] for (a, b) in L.undirected}


def _solar_profile(rng, horizon, n_der, capacity):
    t = np.arange(horizon)
    base = 0.6 + 0.25 * np.sin(2 * math.pi * t / max(horizon, 2))[:, None]
    scale = rng.uniform(0.7, 1.0, n_der)[None, :]
    wiggle = 0.05 * np.sin(2 * math.pi * t[:, None] / 37.0 + rng.uniform(0, 2 * math.pi, n_der))
    return capacity * np.clip(base * scale + wiggle, 0.1, 1.0)


def build_opf_model(cfg: OpfConfig) -> OpfModel:
    """Draw synthetic sensitivities and plant a feasible operating point."""
    rng = np.random.default_rng(cfg.seed)
    L = _layout(cfg)
    N, C = L.nodes, L.clusters
    s = cfg.sensitivity

    A_der = []
    for _ in range(C):
        R = rng.uniform(0.5, 1.0, (N, N)) * s
        X = rng.uniform(0.5, 1.0, (N, N)) * s
        Ai = np.empty((N, 2 * N))
        Ai[:, 0::2] = R
        Ai[:, 1::2] = X
        A_der.append(Ai)
    A_flow = {pair: rng.uniform(0.2, 0.5, (N, 2)) * s for pair in L.pairs}

    M_der, M_cross = {}, {}
    for (src, dst) in L.pairs:
        share = 1.0 / len(L.neighbors[dst])
        M = np.zeros((2, 2 * N))
        M[0, 0::2] = -share * rng.uniform(0.8, 1.0, N)
        M[1, 1::2] = -share * rng.uniform(0.0, 0.2, N)
        M_der[(src, dst)] = M
        for k in L.neighbors[dst]:
            if k != src:
                M_cross[(k, src, dst)] = rng.uniform(-0.1, 0.1, (2, 2))

    if cfg.p_available is not None:
        p_av = np.asarray(cfg.p_available, dtype=float)
    else:
        p_av = _solar_profile(rng, cfg.horizon, L.n_der, cfg.capacity)
        if cfg.profile == "constant":
            p_av = np.repeat(p_av[:1], cfg.horizon, axis=0)

    load = np.column_stack([rng.uniform(0.2, 0.5, L.n_der), rng.uniform(0.05, 0.15, L.n_der)])
    load *= cfg.capacity

    # planted point: P strictly inside [0, p_av(t)] for all t, consensus-consistent flows
    x_ref = np.zeros(L.m)
    p_floor = p_av.min(axis=0)
    for i in range(C):
        for j in range(N):
            idx = L.p_index(i, j)
            x_ref[idx] = rng.uniform(0.3, 0.6) * p_floor[N * i + j]
            x_ref[idx + 1] = rng.uniform(-0.05, 0.05) * cfg.capacity
    for (a, b) in L.undirected:
        f = rng.uniform(-0.2, 0.2, 2) * cfg.capacity
        x_ref[L.flow(a, b)] = f
        x_ref[L.flow(b, a)] = -f
    m_off = {}
    for (src, dst) in L.pairs:
        inj = x_ref[L.der(dst)] - load[N * dst:N * (dst + 1)].ravel()
        val = x_ref[L.flow(src, dst)] - M_der[(src, dst)] @ inj
        for k in L.neighbors[dst]:
            if k != src:
                val = val - M_cross[(k, src, dst)] @ x_ref[L.flow(k, dst)]
        m_off[(src, dst)] = val

    mid = 0.5 * (cfg.v_min + cfg.v_max)
    half = 0.5 * (cfg.v_max - cfg.v_min)
    a = np.empty((cfg.horizon, L.n_der))
    model = OpfModel(cfg, L, A_der, A_flow, np.zeros((1, L.n_der)), M_der, M_cross, m_off,
                     load, p_av, x_ref)
    v_ref = model.voltages(x_ref, 0)
    target = mid + half * rng.uniform(-0.3, 0.3, L.n_der)
    t = np.arange(cfg.horizon)[:, None]
    osc = 0.2 * half * np.sin(2 * math.pi * t / max(cfg.horizon, 2) + rng.uniform(0, 2 * math.pi, L.n_der))
    if cfg.profile == "constant":
        osc = np.zeros_like(osc)
    a[:] = (target - v_ref)[None, :] + osc
    model.a = a
    return model


def _assemble(model: OpfModel, k: int) -> ProblemSnapshot:
    cfg, L = model.cfg, model.layout
    N, C = L.nodes, L.clusters
    m, n, ell = L.m, L.n, L.ell
    p_av = model.p_available[k]

    diag = np.full(m, 2.0 * cfg.flow_reg)
    lin = np.zeros(m)
    const = 0.0
    f0_pieces = []
    for i in range(C):
        for j in range(N):
            ip = L.p_index(i, j)
            # zero-weight coordinates borrow the flow regularization
            diag[ip] = 2.0 * cfg.c_p if cfg.c_p > 0 else 2.0 * cfg.flow_reg
            diag[ip + 1] = 2.0 * cfg.c_q if cfg.c_q > 0 else 2.0 * cfg.flow_reg
            lin[ip] = -2.0 * cfg.c_p * p_av[N * i + j]
            const += cfg.c_p * p_av[N * i + j] ** 2
            f0_pieces.append((BoxIndicator([0.0], [p_av[N * i + j]]), (ip, ip + 1)))
            f0_pieces.append((WeightedL1([cfg.cbar_q]), (ip + 1, ip + 2)))
    if m > 2 * L.n_der:
        f0_pieces.append((Zero(m - 2 * L.n_der), (2 * L.n_der, m)))
    f1 = SeparableFunction.single(Quadratic(np.diag(diag), lin, const))
    f0 = SeparableFunction(f0_pieces, m)

    gdiag = np.concatenate([np.full(L.n_der, 2.0 * cfg.a_lo), np.full(L.n_der, 2.0 * cfg.a_hi)])
    g1 = SeparableFunction.single(Quadratic(np.diag(gdiag)))
    g0 = SeparableFunction.single(NonnegIndicator(n))

    A = np.zeros((ell, m))
    B = np.zeros((ell, n))
    b = np.zeros(ell)
    for i in range(C):
        lo, hi = L.rows_vlo(i), L.rows_vhi(i)
        ld = model.load[N * i:N * (i + 1)].ravel()
        off = model.a[k, N * i:N * (i + 1)] - model.A_der[i] @ ld
        A[lo, L.der(i)] = -model.A_der[i]
        A[hi, L.der(i)] = model.A_der[i]
        for src in L.neighbors[i]:
            A[lo, L.flow(src, i)] = -model.A_flow[(src, i)]
            A[hi, L.flow(src, i)] = model.A_flow[(src, i)]
        B[lo, L.slack_lo(i)] = np.eye(N)
        B[hi, L.slack_hi(i)] = np.eye(N)
        b[lo] = off - cfg.v_min
        b[hi] = cfg.v_max - off
    for (src, dst) in L.pairs:
        rows = L.rows_flow(src, dst)
        A[rows, L.flow(src, dst)] = np.eye(2)
        A[rows, L.der(dst)] = -model.M_der[(src, dst)]
        for kk in L.neighbors[dst]:
            if kk != src:
                A[rows, L.flow(kk, dst)] = -model.M_cross[(kk, src, dst)]
        ld = model.load[N * dst:N * (dst + 1)].ravel()
        b[rows] = model.m_off[(src, dst)] - model.M_der[(src, dst)] @ ld
    for (a_, b_) in L.undirected:
        rows = L.rows_consensus(a_, b_)
        A[rows, L.flow(a_, b_)] = np.eye(2)
        A[rows, L.flow(b_, a_)] = np.eye(2)

    meta = {"scenario": "opf", "flow_reg": cfg.flow_reg, "k": k}
    return ProblemSnapshot(f0, f1, g0, g1, A, B, b, time_index=k, meta=meta)


def gen_opf(cfg: OpfConfig, model: Optional[OpfModel] = None) -> list[ProblemSnapshot]:
    """Snapshots ``0 .. horizon-1`` of the multi-area dispatch problem."""
    model = build_opf_model(cfg) if model is None else model
    return [_assemble(model, k) for k in range(cfg.horizon)]


def measurement_residual(model: OpfModel):
    """Constraint residual with voltages and flow balances evaluated from the
    network model (exact simulated measurements) instead of ``A x + B y - b``."""
    L = model.layout
    N = L.nodes

    def residual(snap: ProblemSnapshot, x, y):
        k = min(snap.time_index, model.a.shape[0] - 1)
        v = model.voltages(x, k)
        r = np.empty(L.ell)
        for i in range(L.clusters):
            vi = v[N * i:N * (i + 1)]
            r[L.rows_vlo(i)] = model.cfg.v_min - vi + y[L.slack_lo(i)]
            r[L.rows_vhi(i)] = vi + y[L.slack_hi(i)] - model.cfg.v_max
        for pair, val in model.flow_residuals(x).items():
            r[L.rows_flow(*pair)] = val
        for pair, val in model.consensus_residuals(x).items():
            r[L.rows_consensus(*pair)] = val
        return r

    return residual


@dataclass
class OpfMetrics:
    """Per-step violation indices of an OPF trajectory."""

    voltage_violation: np.ndarray
    power_violation: np.ndarray
    consensus_violation: np.ndarray
    power_violation_by_cluster: np.ndarray

    def as_columns(self) -> dict:
        return {
            "voltage_violation": self.voltage_violation,
            "power_violation": self.power_violation,
            "consensus_violation": self.consensus_violation,
        }


def opf_metrics(traj: Trajectory, cfg: OpfConfig, model: Optional[OpfModel] = None,
                snapshot_index: Optional[Sequence[int]] = None) -> OpfMetrics:
    """Voltage, inter-area power and consensus violation per recorded state.

    ``snapshot_index[k]`` gives the time step each state belongs to (defaults
    to ``k``, clipped to the horizon, which suits static reruns of one
    snapshot).
    """
    model = build_opf_model(cfg) if model is None else model
    L = model.layout
    states = traj.states
    if states and states[0].x.size != L.m:
        raise ValueError(f"state dimension {states[0].x.size} does not match layout ({L.m})")
    T = len(states)
    volt = np.zeros(T)
    power = np.zeros(T)
    cons = np.zeros(T)
    by_cluster = np.zeros((T, L.clusters))
    for t, s in enumerate(states):
        k = t if snapshot_index is None else snapshot_index[t]
        k = min(k, model.a.shape[0] - 1)
        v = model.voltages(s.x, k)
        volt[t] = float(np.sum(np.maximum(v - cfg.v_max, 0.0) + np.maximum(cfg.v_min - v, 0.0)))
        for (src, dst), r in model.flow_residuals(s.x).items():
            by_cluster[t, dst] += float(r @ r)
        power[t] = by_cluster[t].sum()
        cons[t] = float(sum(r @ r for r in model.consensus_residuals(s.x).values()))
    return OpfMetrics(volt, power, cons, by_cluster)
