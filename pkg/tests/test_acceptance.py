"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL verdict (printed in the terminal summary) and
then asserts it.  Thresholds are used exactly as stated; nothing is relaxed.
"""

import math
import time

import numpy as np

from tvadmm.atoms import BoxIndicator, NonnegIndicator, Quadratic, SeparableFunction, WeightedL1
from tvadmm.oracles import (FIXED_POINT, LINEAR_SOLVE, akkt_residual, gamma_sweep, measure_drifts, oracle_trajectory,
                            solve_akkt, tracking_bound, tracking_errors)
from tvadmm.scenarios import (DriftingQpConfig, OpfConfig, ToyConfig, build_opf_model, gamma_sweep_snapshot,
                              gen_drifting_qp, gen_opf, opf_metrics, random_snapshot, toy_run)
from tvadmm.solver import (BoundsProfile, SolverState, bounds_from_snapshots, check_step_conditions,
                           run_online, select_params, step)

FLOOR = 1e-10


# ---------------------------------------------------------------- 1

def test_static_linear_convergence(acceptance):
    t0 = time.perf_counter()
    worst = 0.0
    worst_akkt = 0.0
    ok = True
    for seed in range(20):
        snap = random_snapshot(seed, m=10, n=10, ell=5, l1_weight=0.5)
        p = select_params(bounds_from_snapshots([snap]), beta=0.5, gamma=1.0)
        ref = solve_akkt(snap, p.gamma, p).w_star
        metric, rate = p.metric, p.contraction
        s = SolverState.zeros(snap)
        err = metric.dist(s, ref)
        for _ in range(5000):
            if err <= FLOOR:
                break
            s = step(snap, s, p)
            new = metric.dist(s, ref)
            worst = max(worst, new / err - rate)
            ok &= new <= rate * err + 1e-9 * err
            err = new
        ok &= err <= FLOOR
        worst_akkt = max(worst_akkt, akkt_residual(snap, s, p.gamma, p))
    elapsed = time.perf_counter() - t0
    ok &= worst <= 1e-9 and elapsed < 5.0
    acceptance(1, "static linear convergence", ok,
               f"max(ratio - rate)={worst:.3e}, limit akkt={worst_akkt:.1e}, {elapsed:.2f}s")
    assert ok


# ---------------------------------------------------------------- 2

def test_oracle_equivalence(acceptance):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    for i in range(50):
        m, n, ell = (int(v) for v in rng.integers(1, 6, size=3))
        snap = random_snapshot(int(rng.integers(1 << 31)), m=m, n=n, ell=ell)
        p = select_params(bounds_from_snapshots([snap]), beta=0.5, gamma=1.0)
        lin = solve_akkt(snap, p.gamma, p, method=LINEAR_SOLVE).w_star
        fp = solve_akkt(snap, p.gamma, p, method=FIXED_POINT, polish=False).w_star
        worst = max(worst, p.metric.dist(lin, fp))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-6 and elapsed < 10.0
    acceptance(2, "oracle equivalence", ok, f"max G-distance={worst:.2e}, {elapsed:.2f}s")
    assert ok


# ---------------------------------------------------------------- 3

def test_step_size_formulas(acceptance):
    unit = select_params(BoundsProfile(v_f=1, v_g=1, L_f=1, L_g=1, sA=1, sB=1), 0.5, 1.0)
    ok = unit.alpha1 == 0.4 and unit.alpha2 == 2 / 3 and unit.delta == 1 / 3
    rng = np.random.default_rng(7)
    worst_rel = 0.0
    admissible = True
    for _ in range(500):
        vf, vg = rng.uniform(0.05, 5, 2)
        Lf, Lg = vf * rng.uniform(1, 10), vg * rng.uniform(1, 10)
        sA, sB = rng.uniform(0.05, 5, 2)
        b = BoundsProfile(v_f=vf, v_g=vg, L_f=Lf, L_g=Lg, sA=sA, sB=sB)
        p = select_params(b, 0.5, 1.0)
        a1 = 1 / (1.5 * sA**2 + Lf**2 / vf)
        a2 = 1 / (sB**4 / (2 * vg) + Lg**2 / vg)
        d = min(vf / (1.5 * sA**2 + Lf**2 / vf), vg**2 / (sB**4 + 2 * Lg**2), 0.5)
        for got, want in ((p.alpha1, a1), (p.alpha2, a2), (p.delta, d)):
            worst_rel = max(worst_rel, abs(got - want) / want)
        conds = check_step_conditions(p, b, rho=(1.0, 1.0, vg / (2 * 0.5 * sB**2), vf, vg))
        admissible &= all(conds.values())
    ok &= worst_rel == 0.0 and admissible
    acceptance(3, "step-size formulas", ok,
               f"unit case exact={unit.alpha1 == 0.4 and unit.alpha2 == 2 / 3 and unit.delta == 1 / 3}, "
               f"max rel dev={worst_rel:.1e}, admissible={admissible}")
    assert ok


# ---------------------------------------------------------------- 4

def test_toy_perturbation_phenomenon(acceptance):
    t0 = time.perf_counter()
    cfg = ToyConfig(m=5, ell=5, alpha=0.1, beta=0.1, steps=500)
    plain = toy_run(cfg, perturbed=False)
    pert = toy_run(ToyConfig(m=5, ell=5, alpha=0.1, beta=0.1, gamma=1.0, steps=500), perturbed=True)
    zero = toy_run(ToyConfig(m=5, ell=5, alpha=0.1, beta=0.1, gamma=0.0, steps=500), perturbed=True)
    elapsed = time.perf_counter() - t0
    identical = np.array_equal(zero.x, plain.x) and np.array_equal(zero.lam, plain.lam)
    ok = (plain.norm[-1] >= 10 * plain.norm[0] and pert.norm[-1] <= 1e-3 * pert.norm[0]
          and identical and elapsed < 1.0)
    acceptance(4, "toy perturbation phenomenon", ok,
               f"unperturbed growth={plain.growth:.2e}, perturbed ratio={pert.growth:.2e}, "
               f"gamma=0 identical={identical}, {elapsed:.2f}s")
    assert ok


# ---------------------------------------------------------------- 5 and 6

_TRACK = {}


def _tracking_run(amplitude):
    if amplitude not in _TRACK:
        cfg = DriftingQpConfig(horizon=2000, drift_amplitude=amplitude, drift_kind="SinusoidB", seed=1)
        snaps = gen_drifting_qp(cfg)
        p = select_params(bounds_from_snapshots(snaps), beta=0.5, gamma=1.0)
        ref = oracle_trajectory(snaps, p)
        traj = run_online(snaps, p)
        _TRACK[amplitude] = (snaps, p, ref, traj, tracking_errors(traj, ref))
    return _TRACK[amplitude]


def test_tracking_bound(acceptance):
    t0 = time.perf_counter()
    _, p, ref, _, err = _tracking_run(1.0)
    _, _, _, _, err_half = _tracking_run(0.5)
    elapsed = time.perf_counter() - t0
    sx, sy, sl = measure_drifts(ref)
    bound = math.sqrt(sx**2 / p.alpha1 + sy**2 / p.alpha2 + 2 * sl**2) / p.delta
    steady, steady_half = err[-200:].max(), err_half[-200:].max()
    ratio = steady / steady_half
    ok = (steady <= bound and math.isclose(bound, tracking_bound(p, (sx, sy, sl)).bound, rel_tol=1e-12)
          and 1.5 <= ratio <= 2.5 and elapsed < 60.0)
    acceptance(5, "tracking bound", ok,
               f"steady={steady:.4e} <= bound={bound:.4e}, halving ratio={ratio:.3f}, {elapsed:.2f}s")
    assert ok


def test_per_step_recursion(acceptance):
    snaps, p, ref, traj, err = _tracking_run(1.0)
    metric, rate = p.metric, p.contraction
    prev_err = metric.dist(traj.initial, ref[0].w_star)
    prev_ref = ref[0].w_star
    worst = -math.inf
    for k in range(len(err)):
        rhs = rate * (prev_err + metric.dist(prev_ref, ref[k].w_star))
        worst = max(worst, err[k] - rhs)
        prev_err, prev_ref = err[k], ref[k].w_star
    ok = worst <= 1e-9
    acceptance(6, "per-step recursion", ok, f"max(lhs - rhs)={worst:.3e} over {len(err)} steps")
    assert ok


# ---------------------------------------------------------------- 7

def test_gamma_scaling(acceptance):
    snap = gamma_sweep_snapshot(0)
    p = select_params(bounds_from_snapshots([snap]), beta=0.5, gamma=1.0)
    rows = gamma_sweep(snap, [2.0**-k for k in range(11)], p)
    d = [r["dist_v"] for r in rows]
    monotone = all(b <= a for a, b in zip(d, d[1:]))
    final = d[-1] / rows[-1]["v_opt_norm"]
    lam_ok = all(r["lam_norm"] <= r["lam_opt_norm"] + 1e-10 for r in rows)
    ok = monotone and final <= 1e-3 and lam_ok
    acceptance(7, "gamma scaling", ok,
               f"nonincreasing={monotone}, final relative distance={final:.2e}, dual bound holds={lam_ok}")
    assert ok


# ---------------------------------------------------------------- 8

def test_opf_violation_decay(acceptance):
    t0 = time.perf_counter()
    cfg = OpfConfig(clusters=4, nodes_per_cluster=2, profile="constant", horizon=1)
    model = build_opf_model(cfg)
    snap = gen_opf(cfg, model)[0]
    p = select_params(bounds_from_snapshots([snap]), beta=0.5, gamma=1e-3)
    traj = run_online([snap] * 5000, p)
    met = opf_metrics(traj, cfg, model, snapshot_index=[0] * 5000)
    ref = solve_akkt(snap, p.gamma, p).w_star
    elapsed = time.perf_counter() - t0
    L = model.layout
    floor_power = p.gamma**2 * float(ref.lam[L.flow_rows] @ ref.lam[L.flow_rows])
    floor_cons = p.gamma**2 * float(ref.lam[L.consensus_rows] @ ref.lam[L.consensus_rows])
    checks = {}
    for name, arr in (("power", met.power_violation), ("consensus", met.consensus_violation)):
        tail = arr[50:]
        checks[name] = (bool(np.all(np.diff(tail) <= 0.0)), float(arr.min()), float(arr[-1]))
    ok = all(mono and low <= 1e-6 for mono, low, _ in checks.values()) and elapsed < 60.0
    # the limit sits at the perturbed feasibility gap of the reference point
    ok &= math.isclose(checks["power"][2], floor_power, rel_tol=1e-3)
    ok &= math.isclose(checks["consensus"][2], floor_cons, rel_tol=1e-3)
    acceptance(8, "dispatch violation decay", ok,
               f"power mono={checks['power'][0]} final={checks['power'][2]:.2e} (gap {floor_power:.2e}); "
               f"consensus mono={checks['consensus'][0]} final={checks['consensus'][2]:.2e} "
               f"(gap {floor_cons:.2e}); {elapsed:.2f}s")
    assert ok


# ---------------------------------------------------------------- 9

def _prox_suite(rng):
    return {
        "l1": SeparableFunction.single(WeightedL1(rng.uniform(0, 2, 4))),
        "box": SeparableFunction.single(BoxIndicator(-rng.uniform(0, 1, 4), rng.uniform(0, 1, 4))),
        "nonneg": SeparableFunction.single(NonnegIndicator(4)),
        "zero": SeparableFunction.zero(4),
    }


def _smooth_suite(rng):
    G = rng.standard_normal((4, 4))
    return {
        "quadratic": SeparableFunction.single(Quadratic(G.T @ G + 0.1 * np.eye(4), rng.standard_normal(4))),
        "zero": SeparableFunction.zero(4),
    }


def test_property_suites(acceptance):
    rng = np.random.default_rng(99)
    nonexp = True
    for atom in _prox_suite(rng).values():
        for _ in range(1000):
            u, v = rng.standard_normal(4) * 3, rng.standard_normal(4) * 3
            step_size = float(rng.uniform(1e-3, 10))
            d = np.linalg.norm(atom.prox(u, step_size) - atom.prox(v, step_size))
            nonexp &= d <= np.linalg.norm(u - v) + 1e-12
    worst_fd = 0.0
    h = 1e-5
    for atom in _smooth_suite(rng).values():
        for _ in range(100):
            x = rng.standard_normal(4) * 2
            g = atom.grad(x)
            fd = np.array([(atom.value(x + h * e) - atom.value(x - h * e)) / (2 * h) for e in np.eye(4)])
            worst_fd = max(worst_fd, np.linalg.norm(g - fd) / max(1.0, np.linalg.norm(g)))
    snap = random_snapshot(5, l1_weight=0.3)
    p = select_params(bounds_from_snapshots([snap]))
    a, b = run_online([snap] * 200, p), run_online([snap] * 200, p)
    same = all(np.array_equal(u.vector, v.vector) for u, v in zip(a.states, b.states))
    ok = nonexp and worst_fd <= 1e-5 and same
    acceptance(9, "property suites", ok,
               f"nonexpansive={nonexp}, max grad rel err={worst_fd:.1e}, bit-identical={same}")
    assert ok
