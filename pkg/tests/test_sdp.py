"""Interior-point SDP solver: oracle instances, duality, determinism."""

import numpy as np
import pytest

from ros_cert import sdp
from ros_cert.sdp import SdpProblem, SolveOptions


def _solve(problem, **kw):
    return sdp.solve(problem, SolveOptions(**kw))


def make_bounded_random(rng, dims, m, n_free=0):
    """Random instance with known interior primal/dual pair (strong duality)."""
    problem = SdpProblem(block_dims=list(dims), n_free=n_free)
    xs0 = []
    zs0 = []
    for d in dims:
        q = rng.standard_normal((d, d))
        xs0.append(q @ q.T + d * np.eye(d))
        q = rng.standard_normal((d, d))
        zs0.append(q @ q.T + d * np.eye(d))
    y0 = rng.standard_normal(m)
    u0 = rng.standard_normal(n_free)
    d_mat = rng.standard_normal((m, n_free)) if n_free else np.zeros((m, 0))

    rows = []
    for k in range(m):
        terms = []
        for b, d in enumerate(dims):
            a = rng.standard_normal((d, d))
            a = 0.5 * (a + a.T)
            terms.append(a)
        rows.append(terms)

    # b = A(X0) + D u0 ; C = A^T(y0) - Z0 ; c_u = D^T y0.
    for k in range(m):
        bk = float(d_mat[k] @ u0) if n_free else 0.0
        block_terms = []
        for b, a in enumerate(rows[k]):
            bk += float((a * xs0[b]).sum())
            for i in range(dims[b]):
                for j in range(i, dims[b]):
                    if a[i, j] != 0.0:
                        block_terms.append((b, i, j, a[i, j]))
        free_terms = [(v, d_mat[k, v]) for v in range(n_free)]
        problem.add_constraint(block_terms, free_terms, bk)

    for b, d in enumerate(dims):
        c = sum(y0[k] * rows[k][b] for k in range(m)) - zs0[b]
        entries = []
        for i in range(d):
            for j in range(i, d):
                entries.append((i, j, c[i, j]))
        problem.obj_blocks[b] = entries
    for v in range(n_free):
        problem.obj_free[v] = float(d_mat[:, v] @ y0)
    return problem


def test_eigenvalue_oracle_symmetric_offdiag():
    # maximize y with [[1, y], [y, 1]] PSD; PSD iff |y| <= 1.
    problem = SdpProblem(block_dims=[2], n_free=1)
    problem.add_constraint([(0, 0, 0, 1.0)], [], 1.0)
    problem.add_constraint([(0, 1, 1, 1.0)], [], 1.0)
    problem.add_constraint([(0, 0, 1, 0.5)], [(0, -1.0)], 0.0)
    problem.obj_free[0] = 1.0
    sol = _solve(problem)
    assert sol.status == "optimal"
    assert sol.free_values[0] == pytest.approx(1.0, abs=1e-6)
    x = sol.block_values[0]
    assert sdp.min_eigenvalue(x) >= -1e-8


def test_forced_boundary():
    # maximize -t subject to [t - 1] PSD (1x1): optimum t = 1.
    problem = SdpProblem(block_dims=[1], n_free=1)
    problem.add_constraint([(0, 0, 0, 1.0)], [(0, -1.0)], -1.0)
    problem.obj_free[0] = -1.0
    sol = _solve(problem)
    assert sol.status == "optimal"
    assert sol.free_values[0] == pytest.approx(1.0, abs=1e-6)


def test_infeasible_pair():
    # t >= 1 and -t >= 0 cannot hold together.
    problem = SdpProblem(block_dims=[1, 1], n_free=1)
    problem.add_constraint([(0, 0, 0, 1.0)], [(0, -1.0)], -1.0)
    problem.add_constraint([(1, 0, 0, 1.0)], [(0, 1.0)], 0.0)
    sol = _solve(problem)
    assert sol.status == "infeasible"


def test_unbounded_ray():
    # maximize t with [t] PSD only: t can grow without bound.
    problem = SdpProblem(block_dims=[1], n_free=1)
    problem.add_constraint([(0, 0, 0, 1.0)], [(0, -1.0)], 0.0)
    problem.obj_free[0] = 1.0
    sol = _solve(problem)
    assert sol.status == "unbounded"


def test_min_eigenvalue_examples():
    assert sdp.min_eigenvalue(np.eye(3)) == pytest.approx(1.0, abs=1e-10)
    assert sdp.min_eigenvalue(np.array([[0.0, 1.0], [1.0, 0.0]])) == pytest.approx(-1.0, abs=1e-10)
    assert sdp.min_eigenvalue(np.diag([2.0, 5.0])) == pytest.approx(2.0, abs=1e-10)
    with pytest.raises(ValueError):
        sdp.min_eigenvalue(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_random_instances_weak_duality_and_complementarity():
    rng = np.random.default_rng(42)
    for trial in range(6):
        dims = [int(rng.integers(2, 7)) for _ in range(int(rng.integers(1, 3)))]
        m = int(rng.integers(3, 11))
        n_free = int(rng.integers(0, 3))
        problem = make_bounded_random(rng, dims, m, n_free)
        sol = _solve(problem)
        assert sol.status == "optimal", (trial, sol.status, sol.message)
        assert sol.primal_residual <= 1e-7
        assert sol.dual_residual <= 1e-7
        assert sol.rel_gap <= 1e-7
        # Weak duality at the reported optimum (maximize): pobj <= dobj + tol.
        scale = 1.0 + abs(sol.primal_objective) + abs(sol.dual_objective)
        assert sol.primal_objective <= sol.dual_objective + 1e-6 * scale
        # Complementarity per block.
        for x, z in zip(sol.block_values, sol.dual_slacks):
            assert abs(float((x * z).sum())) <= 1e-6 * scale
            assert float(np.abs(x - x.T).max()) <= 1e-12 * max(1.0, np.abs(x).max())


def test_residuals_monotone_tail():
    rng = np.random.default_rng(7)
    problem = make_bounded_random(rng, [6, 3], 12, 2)
    sol = _solve(problem)
    assert sol.status == "optimal"
    tail = [h["pres"] for h in sol.history][-10:]
    for a, b in zip(tail, tail[1:]):
        assert b <= a * (1.0 + 1e-9) + 1e-14


def test_determinism_bitwise():
    rng = np.random.default_rng(11)
    problem = make_bounded_random(rng, [5], 8, 1)
    s1 = _solve(problem)
    s2 = _solve(problem)
    assert s1.status == s2.status
    assert s1.iterations == s2.iterations
    assert np.array_equal(s1.free_values, s2.free_values)
    assert np.array_equal(s1.dual_values, s2.dual_values)
    for a, b in zip(s1.block_values, s2.block_values):
        assert np.array_equal(a, b)
    assert s1.primal_objective == s2.primal_objective
    assert s1.primal_residual == s2.primal_residual


def test_dump_round_trip(tmp_path):
    problem = SdpProblem(block_dims=[2], n_free=1)
    problem.add_constraint([(0, 0, 0, 1.0)], [], 1.0)
    problem.add_constraint([(0, 0, 1, 0.5)], [(0, -1.0)], 0.0)
    problem.obj_free[0] = 1.0
    path = tmp_path / "problem.sdp"
    problem.dump(str(path))
    text = path.read_text().splitlines()
    assert text[0] == "dims 1 1 2"
    assert any(line.startswith("c 1 0 0 1 0.5") for line in text)
    assert any(line.startswith("of 0 1.0") for line in text)


def test_validation_rejects_bad_indices():
    problem = SdpProblem(block_dims=[2], n_free=0)
    problem.add_constraint([(0, 0, 5, 1.0)], [], 0.0)
    with pytest.raises(ValueError):
        problem.validate()
