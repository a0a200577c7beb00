import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tvadmm.atoms import Quadratic, SeparableFunction, WeightedL1, Zero
from tvadmm.oracles import (FIXED_POINT, LINEAR_SOLVE, Drifts, OracleError, akkt_residual, gamma_sweep,
                            measure_drifts, oracle_trajectory, predicted_sigma_lambda, solve_akkt,
                            tracking_bound, tracking_errors)
from tvadmm.scenarios import DriftingQpConfig, gen_drifting_qp, random_snapshot
from tvadmm.solver import (BoundsProfile, ProblemSnapshot, SolverParams, SolverState, bounds_from_snapshots,
                           run_online, select_params)

UNIT = BoundsProfile(v_f=1, v_g=1, L_f=1, L_g=1, sA=1, sB=1)
P_UNIT = select_params(UNIT, 0.5, 1.0)


def _scalar(b):
    half = SeparableFunction.single(Quadratic([[1.0]]))
    return ProblemSnapshot(SeparableFunction.zero(1), half, SeparableFunction.zero(1), half,
                           A=[[1.0]], B=[[1.0]], b=[b])


def _g_dist(p, u, v):
    return p.metric.dist(u, v)


# ---------------------------------------------------------------- scalar instance

def test_scalar_akkt_point():
    sol = solve_akkt(_scalar(2.0), 1.0, P_UNIT)
    for v in (sol.w_star.x[0], sol.w_star.y[0], sol.w_star.lam[0]):
        assert v == pytest.approx(2 / 3, abs=1e-14)
    assert sol.method == LINEAR_SOLVE
    assert sol.akkt_residual <= 1e-10


def test_homogeneous_instance_has_zero_solution():
    sol = solve_akkt(_scalar(0.0), 1.0, P_UNIT)
    assert np.all(sol.w_star.vector == 0.0)


def test_scalar_gamma_sweep_closed_form():
    prev = math.inf
    for g in [2.0**-k for k in range(11)]:
        w = solve_akkt(_scalar(2.0), g, P_UNIT).w_star
        # x = y = lam and x + y + gamma*lam = 2
        assert w.x[0] == pytest.approx(2 / (2 + g), rel=1e-14)
        d = math.hypot(w.x[0] - 1.0, w.y[0] - 1.0)
        assert d <= prev
        prev = d
    opt = solve_akkt(_scalar(2.0), 0.0, P_UNIT).w_star
    assert opt.x[0] == pytest.approx(1.0) and opt.lam[0] == pytest.approx(1.0)


def test_akkt_residual_at_origin():
    # prox residuals vanish at w = 0 (zero gradient, identity prox); feasibility term is -2
    res = akkt_residual(_scalar(2.0), SolverState.zeros(_scalar(2.0)), 1.0, P_UNIT)
    assert res == pytest.approx(math.sqrt(0.0 + 0.0 + 4.0))


def test_akkt_residual_invariant_to_zero_atom_split():
    snap = random_snapshot(3, m=4, n=3, ell=2)
    split = snap.replace(f0=SeparableFunction([(Zero(1), (0, 1)), (Zero(3), (1, 4))]))
    p = select_params(bounds_from_snapshots([snap]))
    w = SolverState(np.arange(4.0), np.ones(3), np.array([0.5, -1.0]))
    assert akkt_residual(snap, w, 1.0, p) == akkt_residual(split, w, 1.0, p)


def test_akkt_residual_vanishes_at_oracle_solution():
    for seed in range(5):
        snap = random_snapshot(seed)
        p = select_params(bounds_from_snapshots([snap]))
        sol = solve_akkt(snap, p.gamma, p)
        assert akkt_residual(snap, sol.w_star, p.gamma, p) <= 1e-10


# ---------------------------------------------------------------- methods and errors

def test_linear_solve_rejects_nonsmooth():
    snap = random_snapshot(0, l1_weight=0.5)
    with pytest.raises(ValueError):
        solve_akkt(snap, 1.0, select_params(bounds_from_snapshots([snap])), method=LINEAR_SOLVE)


def test_singular_kkt_system():
    half = SeparableFunction.single(Quadratic([[1.0]]))
    snap = ProblemSnapshot(SeparableFunction.zero(1), half, SeparableFunction.zero(1), half,
                           A=[[1.0], [1.0]], B=[[1.0], [1.0]], b=[1.0, 1.0])
    with pytest.raises(OracleError):
        solve_akkt(snap, 0.0, P_UNIT)
    assert solve_akkt(snap, 1.0, P_UNIT).akkt_residual <= 1e-10


def test_iteration_cap_reports_best_point():
    snap = random_snapshot(1, l1_weight=0.5)
    p = select_params(bounds_from_snapshots([snap]))
    with pytest.raises(OracleError) as info:
        solve_akkt(snap, p.gamma, p, method=FIXED_POINT, max_iter=3, polish=False)
    assert info.value.best is not None and math.isfinite(info.value.best.akkt_residual)


def test_negative_gamma_rejected():
    with pytest.raises(ValueError):
        solve_akkt(_scalar(1.0), -1.0, P_UNIT)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 100_000), st.integers(1, 5), st.integers(1, 5), st.integers(1, 5))
def test_fixed_point_agrees_with_linear_solve(seed, m, n, ell):
    snap = random_snapshot(seed, m=m, n=n, ell=ell)
    p = select_params(bounds_from_snapshots([snap]))
    lin = solve_akkt(snap, p.gamma, p, method=LINEAR_SOLVE).w_star
    fp = solve_akkt(snap, p.gamma, p, method=FIXED_POINT, polish=False).w_star
    assert _g_dist(p, lin, fp) <= 1e-6


def test_fixed_point_with_l1_matches_penalized_minimizer():
    cp = pytest.importorskip("cvxpy")
    for seed in range(3):
        snap = random_snapshot(seed, m=6, n=4, ell=3, l1_weight=0.7)
        p = select_params(bounds_from_snapshots([snap]))
        gamma = p.gamma
        w = solve_akkt(snap, gamma, p).w_star
        Pf, qf = snap.f1.atoms[0].P, snap.f1.atoms[0].q
        Pg, qg = snap.g1.atoms[0].P, snap.g1.atoms[0].q
        wl1 = snap.f0.atoms[0].w
        x, y = cp.Variable(6), cp.Variable(4)
        r = snap.A @ x + snap.B @ y - snap.b
        obj = (0.5 * cp.quad_form(x, Pf) + qf @ x + 0.5 * cp.quad_form(y, Pg) + qg @ y
               + wl1 @ cp.abs(x) + cp.sum_squares(r) / (2 * gamma))
        cp.Problem(cp.Minimize(obj)).solve(solver=cp.CLARABEL, tol_gap_abs=1e-12, tol_gap_rel=1e-12,
                                           tol_feas=1e-12)
        np.testing.assert_allclose(w.x, x.value, atol=1e-6)
        np.testing.assert_allclose(w.y, y.value, atol=1e-6)
        lam = -(snap.A @ x.value + snap.B @ y.value - snap.b) / gamma
        np.testing.assert_allclose(w.lam, lam, atol=1e-6)


def test_kkt_point_for_nonsmooth_instance():
    snap = random_snapshot(2, l1_weight=0.4)
    p = select_params(bounds_from_snapshots([snap]))
    sol = solve_akkt(snap, 0.0, p)
    assert sol.akkt_residual <= 1e-8
    assert np.linalg.norm(snap.A @ sol.w_star.x + snap.B @ sol.w_star.y - snap.b) <= 1e-8


def test_with_opt_attaches_unperturbed_point():
    snap = random_snapshot(4)
    p = select_params(bounds_from_snapshots([snap]))
    sol = solve_akkt(snap, 0.5, p, with_opt=True)
    ref = solve_akkt(snap, 0.0, p).w_star
    assert np.allclose(sol.w_opt.vector, ref.vector, atol=1e-12)


# ---------------------------------------------------------------- drift and bounds

def test_constant_sequence_has_no_drift():
    snap = random_snapshot(0)
    p = select_params(bounds_from_snapshots([snap]))
    assert tuple(measure_drifts(oracle_trajectory([snap] * 4, p))) == (0.0, 0.0, 0.0)


def test_scalar_drift_closed_form():
    traj = oracle_trajectory([_scalar(2.0), _scalar(2.1)], P_UNIT)
    d = measure_drifts(traj)
    # x* = y* = lam* = b / 3 when gamma = 1
    assert d.x == pytest.approx(0.1 / 3, rel=1e-12)
    assert d.y == pytest.approx(0.1 / 3, rel=1e-12)
    assert d.lam == pytest.approx(0.1 / 3, rel=1e-12)


def test_drifts_need_two_points():
    with pytest.raises(ValueError):
        measure_drifts(oracle_trajectory([_scalar(1.0)], P_UNIT))


def test_drifts_nonnegative():
    snaps = gen_drifting_qp(DriftingQpConfig(horizon=10, drift_amplitude=0.5, drift_kind="RandomWalkB"))
    p = select_params(bounds_from_snapshots(snaps))
    assert all(v >= 0 for v in measure_drifts(oracle_trajectory(snaps, p)))


def test_tracking_bound_examples():
    p = SolverParams(alpha1=1.0, alpha2=1.0, beta=0.5, gamma=1.0, delta=1 / 3)
    assert tracking_bound(p, Drifts(0.0, 0.0, 0.0)).bound == 0.0
    tb = tracking_bound(p, Drifts(1.0, 1.0, 1.0))
    assert tb.bound == pytest.approx(3 * math.sqrt(1 + 1 + 2)) and tb.bound == pytest.approx(6.0)
    assert tb.psi == pytest.approx(2.0)
    assert tracking_bound(p, Drifts(2.0, 2.0, 2.0)).bound == pytest.approx(2 * tb.bound)


def test_tracking_bound_requires_margin():
    with pytest.raises(ValueError):
        tracking_bound(SolverParams(1.0, 1.0, 0.5, 1.0, delta=0.0), Drifts(1.0, 1.0, 1.0))


def test_predicted_sigma_lambda():
    b = BoundsProfile(v_f=1, v_g=1, L_f=1, L_g=1, sA=1, sB=1, drift_A=0.0, drift_B=0.0, drift_b=0.05,
                      drift_x=0.1, drift_y=0.1, dual_bound=3.0, primal_bounds=(1.0, 2.0))
    for c in (0.1, 1.0, 10.0):
        assert predicted_sigma_lambda(b, 1.0, c) == pytest.approx(0.25)
    zero = b.replace(drift_b=0.0, drift_x=0.0, drift_y=0.0)
    assert predicted_sigma_lambda(zero, 1.0, 1.0) == 0.0
    # without perturbation the primal bounds enter unchanged
    moving = b.replace(drift_A=1.0)
    assert predicted_sigma_lambda(moving, 0.0, 5.0) == pytest.approx(0.25 + 1.0)
    with pytest.raises(ValueError):
        predicted_sigma_lambda(b.replace(dual_bound=None), 1.0, 1.0)


def test_tracking_errors_use_metric():
    snaps = gen_drifting_qp(DriftingQpConfig(horizon=5, drift_amplitude=0.2))
    p = select_params(bounds_from_snapshots(snaps))
    traj = run_online(snaps, p)
    ref = oracle_trajectory(snaps, p)
    err = tracking_errors(traj, ref)
    assert err[2] == pytest.approx(p.metric.dist(traj.states[2], ref[2].w_star))


def test_gamma_sweep_rows():
    rows = gamma_sweep(_scalar(2.0), [1.0, 0.5], P_UNIT)
    assert [r["gamma"] for r in rows] == [1.0, 0.5]
    assert rows[0]["dist_v"] == pytest.approx(math.sqrt(2) * (1 - 2 / 3))
    assert rows[0]["lam_opt_norm"] == pytest.approx(1.0)
