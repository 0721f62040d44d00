"""Acceptance criteria 1-10. Each test prints one PASS/FAIL line."""
import time

import numpy as np
import pytest

from vemqp.baselines import BaselineConfig, fista_solve, fw_solve, pg_solve
from vemqp.core import GeneralizedSimplex, Termination
from vemqp.dopt import dopt_gradient, dopt_hessian, dopt_objective, dopt_value, generate_design_data
from vemqp.gen import QpInstanceSpec, gen_projection_instance, gen_qp_instance, random_spd_qp
from vemqp.proj import proj_generalized_simplex, project_with_trace
from vemqp.proj_newton import PnConfig, neg_log_objective, pn_solve
from vemqp.sqp_newton import SqpConfig, distance_objective, quadratic_objective, sqp_solve
from vemqp.vem import VemConfig, initial_point, vem_solve

from oracles import (
    central_difference_gradient,
    central_difference_jacobian,
    project_bisection,
    qp_active_set_enumeration,
)

pytestmark = pytest.mark.acceptance

CONDS = (1e2, 1e4, 1e6, 1e8)
RATIOS = (0.2, 0.4, 0.6, 0.8)
# Rounding floor for the dual-error tail, in ulps of max(1, |y*|).
TAIL_FLOOR_ULPS = 64


@pytest.fixture
def report(capsys):
    def _report(k, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {k}: {'PASS' if ok else 'FAIL'} - {detail}")
        assert ok, detail

    return _report


def descent_and_feasibility(rep, problem):
    """(max scaled objective increase, worst checkpoint violation flag)."""
    tr = rep.info["trace"]
    q = tr.objective_sequence()
    rise = np.diff(q) / (1.0 + np.abs(q[:-1]))
    fs = problem.feasible_set
    feasible = all(
        cp["eq_violation"] <= 1e-10 * max(1.0, abs(fs.b)) and cp["bound_violation"] <= 1e-14
        for cp in tr.checkpoints
    )
    return (float(rise.max()) if rise.size else 0.0), feasible and bool(tr.checkpoints)


@pytest.fixture(scope="module")
def grid_runs():
    cfg = VemConfig(record_trace=True, trace_period=1000)
    runs = []
    t0 = time.perf_counter()
    for seed in range(3):
        for cond in CONDS:
            for ratio in RATIOS:
                inst = gen_qp_instance(QpInstanceSpec(1000, cond, ratio, seed))
                rep = vem_solve(inst.problem, cfg=cfg)
                runs.append((inst, rep))
    return runs, time.perf_counter() - t0


@pytest.fixture(scope="module")
def oracle_runs():
    cfg = VemConfig(tol=1e-12, record_trace=True, trace_period=1)
    runs = []
    for seed in range(200):
        n = 2 + seed % 11
        p = random_spd_qp(n, seed)
        fs = p.feasible_set
        x_star = qp_active_set_enumeration(p.Q.array, p.c, fs.lower, fs.upper, fs.b)
        runs.append((p, x_star, vem_solve(p, cfg=cfg)))
    return runs


def test_criterion_1_projection_accuracy(report):
    worst_viol = worst_diff = worst_time = 0.0
    max_iter = 0
    for n in (10**5, 10**6):
        for seed in range(5):
            fs, x0 = gen_projection_instance(n, seed)
            t0 = time.perf_counter()
            x, _, trace = project_with_trace(x0, fs)
            elapsed = time.perf_counter() - t0
            x_ref, _ = project_bisection(x0, fs.lower, fs.upper, fs.b)
            worst_viol = max(worst_viol, abs(float(x.sum()) - fs.b) / max(1.0, abs(fs.b)))
            worst_diff = max(worst_diff, float(np.max(np.abs(x - x_ref))))
            worst_time = max(worst_time, elapsed)
            max_iter = max(max_iter, trace.iterations)
    ok = worst_viol <= 1e-12 and max_iter <= 50 and worst_time < 2.0 and worst_diff <= 1e-10
    report(
        1,
        ok,
        f"scaled violation {worst_viol:.1e}, max iterations {max_iter}, "
        f"max time {worst_time:.3f}s, max |x - x_bisection| {worst_diff:.1e}",
    )


def test_criterion_2_quadratic_tail(report):
    checked = excluded = failed = 0
    seed = 0
    while checked + excluded < 20:
        fs, x0 = gen_projection_instance(10**5, seed)
        seed += 1
        _, y_star = project_bisection(x0, fs.lower, fs.upper, fs.b)
        w = x0 + y_star
        if not np.any((fs.lower < w) & (w < fs.upper)):
            continue
        _, _, trace = project_with_trace(x0, fs)
        if trace.used_safeguard:
            excluded += 1
            continue
        e = np.abs(np.asarray(trace.y_history) - y_star)[-3:]
        floor = TAIL_FLOOR_ULPS * np.finfo(float).eps * max(1.0, abs(y_star))
        if len(e) < 3 or not all(e[i + 1] <= max(10 * e[i] ** 2, floor) for i in range(2)):
            failed += 1
        checked += 1
    share = excluded / 20
    report(2, failed == 0 and share < 0.2, f"{checked} checked, {failed} tail failures, safeguard share {share:.0%}")


def test_criterion_3_planted_optima(grid_runs, report):
    runs, elapsed = grid_runs
    worst = max(inst.relerr(rep.x) for inst, rep in runs)
    ok = worst <= 1e-8 and elapsed < 600 and len(runs) == 48
    report(3, ok, f"{len(runs)} cells, max relerr {worst:.1e}, grid time {elapsed:.1f}s")


def test_criterion_4_oracle_equivalence(oracle_runs, report):
    worst = max(float(np.max(np.abs(rep.x - x_star))) for _, x_star, rep in oracle_runs)
    report(4, worst <= 1e-8 and len(oracle_runs) == 200, f"200 instances n<=12, max |x - x*| {worst:.1e}")


def test_criterion_5_descent_and_feasibility(grid_runs, oracle_runs, report):
    results = [descent_and_feasibility(rep, inst.problem) for inst, rep in grid_runs[0]]
    results += [descent_and_feasibility(rep, p) for p, _, rep in oracle_runs]
    worst_rise = max(r for r, _ in results)
    all_feasible = all(f for _, f in results)
    report(
        5,
        worst_rise <= 1e-14 and all_feasible,
        f"{len(results)} runs, max scaled increase {worst_rise:.1e}, checkpoints feasible: {all_feasible}",
    )


def test_criterion_6_baseline_ordering(report):
    inst = gen_qp_instance(QpInstanceSpec(1000, 1e4, 0.4, seed=0))
    x0 = initial_point(inst.problem, None)
    fw = inst.relerr(fw_solve(inst.problem, x0, BaselineConfig(tol=1e-3, max_iter=10_000)).x)
    vem = inst.relerr(vem_solve(inst.problem, x0).x)
    pg = inst.relerr(pg_solve(inst.problem, x0, BaselineConfig(lipschitz=inst.lipschitz)).x)
    fista = inst.relerr(fista_solve(inst.problem, x0, BaselineConfig(lipschitz=inst.lipschitz)).x)
    ok = fw >= 1e-4 and vem <= 1e-8 and fw >= 100 * vem and pg <= 1e-7 and fista <= 1e-7
    report(6, ok, f"relerr FW {fw:.1e}, VEM {vem:.1e}, PG {pg:.1e}, FISTA {fista:.1e}")


def test_criterion_7_sqp_newton(report):
    cfg = SqpConfig(tau1=1e-12, rho=1e-12)
    dist_iters, dist_err = [], 0.0
    for seed in range(5):
        fs, t = gen_projection_instance(200, seed)
        t = 4.0 * t - 2.0
        rep = sqp_solve(distance_objective(t), np.zeros(200), fs, cfg)
        dist_iters.append(rep.iterations)
        dist_err = max(dist_err, float(np.max(np.abs(rep.x - proj_generalized_simplex(t, fs)))))
    quad_iters, quad_err = [], 0.0
    for seed in range(5):
        inst = gen_qp_instance(QpInstanceSpec(200, 1e4, 0.4, seed))
        p = inst.problem
        ref = vem_solve(p).x
        rep = sqp_solve(quadratic_objective(p.Q, p.c), np.zeros(200), p.feasible_set, cfg)
        quad_iters.append(rep.iterations)
        quad_err = max(quad_err, float(np.max(np.abs(rep.x - ref))))
    ok = all(k == 1 for k in dist_iters) and dist_err <= 1e-10 and max(quad_iters) <= 3 and quad_err <= 1e-8
    report(
        7,
        ok,
        f"distance: iterations {dist_iters}, err {dist_err:.1e}; "
        f"quadratic: iterations {quad_iters}, err {quad_err:.1e}",
    )


def test_criterion_8_projected_newton_dopt(report):
    prob = generate_design_data(1000, 100, 0)
    fs = GeneralizedSimplex.standard(1000)
    x0 = np.full(1000, 1e-3)
    obj = dopt_objective(prob)
    vem = pn_solve(obj, x0, fs, PnConfig(qp_solver="vem"))
    ref = pn_solve(obj, x0, fs, PnConfig(qp_solver="vem", lambda_stop=1e-6))
    fw = pn_solve(obj, x0, fs, PnConfig(qp_solver="fw"))
    rel = abs(vem.objective - ref.objective) / abs(ref.objective)
    ok = (
        vem.info["lambda"] <= 1e-3
        and vem.wall_time < 60
        and rel <= 1e-6
        and vem.info["qp_time"] < fw.info["qp_time"]
    )
    report(
        8,
        ok,
        f"lambda {vem.info['lambda']:.1e}, time {vem.wall_time:.2f}s, objective rel diff {rel:.1e}, "
        f"QPTime VEM {vem.info['qp_time']:.3f}s vs FW {fw.info['qp_time']:.3f}s",
    )


def test_criterion_9_symmetric_self_concordant(report):
    worst = 0.0
    for seed in range(5):
        n = 100
        x0 = np.random.default_rng(seed).uniform(0.1, 1.0, n)
        x0 /= x0.sum()
        rep = pn_solve(neg_log_objective(), x0, GeneralizedSimplex.standard(n))
        assert rep.termination is Termination.RESIDUAL_CONVERGED
        worst = max(worst, float(np.max(np.abs(rep.x - 1.0 / n))))
    report(9, worst <= 1e-8, f"5 random starts, max |x - e/n| {worst:.1e}")


def test_criterion_10_dopt_calculus(report):
    g_err = h_err = id_err = 0.0
    for seed in range(10):
        rng = np.random.default_rng(seed)
        prob = generate_design_data(50, 10, seed)
        x = rng.uniform(0.2, 1.0, 50)
        x /= x.sum()
        g = dopt_gradient(prob, x)
        H = dopt_hessian(prob, x).array
        g_fd = central_difference_gradient(lambda z: dopt_value(prob, z), x, 1e-6)
        H_fd = central_difference_jacobian(lambda z: dopt_gradient(prob, z), x, 1e-6)
        g_err = max(g_err, float(np.linalg.norm(g - g_fd) / np.linalg.norm(g)))
        h_err = max(h_err, float(np.linalg.norm(H - H_fd) / np.linalg.norm(H)))
        id_err = max(id_err, abs(float(x @ g) + 10.0) / 10.0)
    ok = g_err <= 1e-5 and h_err <= 1e-4 and id_err <= 1e-8
    report(10, ok, f"gradient rel err {g_err:.1e}, Hessian rel err {h_err:.1e}, identity rel err {id_err:.1e}")
