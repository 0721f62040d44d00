import numpy as np
import pytest

from vemqp.baselines import BaselineConfig, estimate_lipschitz, fista_solve, fw_solve, pg_solve
from vemqp.core import DenseSymmetricMatrix, GeneralizedSimplex, QpProblem, Termination
from vemqp.gen import QpInstanceSpec, gen_qp_instance, random_spd_qp
from vemqp.vem import initial_point, vem_solve

FIRST_ORDER = [pg_solve, fista_solve]


@pytest.fixture(scope="module")
def inst():
    return gen_qp_instance(QpInstanceSpec(1000, 1e4, 0.4, seed=0))


def test_lipschitz_estimate_brackets_largest_eigenvalue(rng):
    A = rng.standard_normal((30, 30))
    Q = DenseSymmetricMatrix(A @ A.T)
    lam = np.linalg.eigvalsh(Q.array)[-1]
    L = estimate_lipschitz(Q)
    assert 0.9 * lam <= L <= 1.01 * lam * (1 + 1e-12)


def test_lipschitz_must_be_positive():
    with pytest.raises(ValueError):
        BaselineConfig(lipschitz=0.0)


@pytest.mark.parametrize("solve", FIRST_ORDER)
def test_one_step_on_identity(solve):
    fs = GeneralizedSimplex(1.0, np.zeros(3), np.ones(3))
    xbar = np.array([0.2, 0.3, 0.5])
    p = QpProblem(np.eye(3), -xbar, fs)
    rep = solve(p, np.array([1.0, 0.0, 0.0]), BaselineConfig(lipschitz=1.0))
    np.testing.assert_allclose(rep.x, xbar, atol=1e-15)
    assert rep.termination is Termination.RESIDUAL_CONVERGED
    assert rep.iterations <= 2


@pytest.mark.parametrize("solve", FIRST_ORDER)
def test_fixed_point(solve):
    p = random_spd_qp(8, seed=4)
    x_star = vem_solve(p).x
    rep = solve(p, x_star, BaselineConfig(max_iter=1))
    assert np.max(np.abs(rep.x - x_star)) <= 1e-12


@pytest.mark.parametrize("solve", FIRST_ORDER + [fw_solve])
def test_infeasible_start_rejected(solve):
    p = random_spd_qp(4, seed=0)
    with pytest.raises(ValueError):
        solve(p, np.full(4, 10.0))


@pytest.mark.parametrize("solve", FIRST_ORDER)
def test_reaches_planted_optimum(solve, inst):
    x0 = initial_point(inst.problem, None)
    rep = solve(inst.problem, x0, BaselineConfig(lipschitz=inst.lipschitz))
    assert rep.termination is Termination.RESIDUAL_CONVERGED
    assert inst.relerr(rep.x) <= 1e-8
    assert inst.problem.feasible_set.contains(rep.x)


@pytest.mark.parametrize("solve", FIRST_ORDER)
def test_natural_residual_decreases(solve):
    inst = gen_qp_instance(QpInstanceSpec(200, 1e2, 0.4, seed=3))
    x0 = initial_point(inst.problem, None)
    cfg = dict(lipschitz=inst.lipschitz, tol=0.0)
    r10 = solve(inst.problem, x0, BaselineConfig(max_iter=10, **cfg)).kkt_residual
    r1000 = solve(inst.problem, x0, BaselineConfig(max_iter=1000, **cfg)).kkt_residual
    assert r1000 < r10


@pytest.mark.parametrize("solve", FIRST_ORDER + [fw_solve])
def test_time_limit(solve, inst):
    x0 = initial_point(inst.problem, None)
    rep = solve(inst.problem, x0, BaselineConfig(time_limit=0.0, lipschitz=inst.lipschitz))
    assert rep.termination is Termination.TIME_LIMIT


def test_fw_symmetric_two_dim_gap_decays():
    fs = GeneralizedSimplex(1.0, np.zeros(2), np.ones(2))
    p = QpProblem(np.eye(2), np.zeros(2), fs)
    q_star = p.objective(vem_solve(p, np.array([1.0, 0.0])).x)
    rep = fw_solve(p, np.array([1.0, 0.0]), BaselineConfig(tol=0.0, max_iter=1000))
    assert rep.iterations == 1000
    assert abs(rep.x[0] - 0.5) <= 1e-3
    # O(1/k) objective gap.
    assert p.objective(rep.x) - q_star <= 1.0 / 1000


def test_fw_feasible_and_gap_bounds_objective_error():
    inst = gen_qp_instance(QpInstanceSpec(300, 1e2, 0.4, seed=5))
    p = inst.problem
    q_star = p.objective(inst.xbar)
    x = initial_point(p, None)
    for k in range(1, 60):
        rep = fw_solve(p, x, BaselineConfig(tol=0.0, max_iter=1))
        gap = rep.info["gaps"][0]
        assert gap >= -1e-12
        assert p.objective(x) - q_star <= gap + 1e-10
        x = rep.x
        assert p.feasible_set.contains(x, eq_tol=1e-10, bound_tol=1e-10)


def test_fw_stalls_where_vem_converges(inst):
    x0 = initial_point(inst.problem, None)
    fw = fw_solve(inst.problem, x0)
    vem = vem_solve(inst.problem, x0)
    assert inst.relerr(fw.x) >= 1e-4
    assert inst.relerr(vem.x) <= 1e-8
    assert np.all(fw.info["gaps"] >= -1e-12)
