"""SOS compilation: Gram bases, coefficient matching, certificates."""

import math

import numpy as np
import pytest

from ros_cert import poly as P
from ros_cert import sdp, sos
from ros_cert.poly import LinPoly, Poly
from ros_cert.sos import GramBasis, SosProgram, make_basis


def test_make_basis_counts():
    b = make_basis(2, 1)
    assert b.monomials == ((0, 0), (0, 1), (1, 0))
    assert len(make_basis(2, 3)) == 10
    assert len(make_basis(6, 3)) == 84
    assert (0, 0, 0, 0, 0, 0) in make_basis(6, 3).monomials


def test_perfect_square_gram():
    # x^2 - 2xy + y^2 over basis {x, y}: Gram [[1, -1], [-1, 1]].
    expr = LinPoly.from_poly(Poly(2, {(2, 0): 1.0, (1, 1): -2.0, (0, 2): 1.0}))
    basis = GramBasis(2, ((0, 1), (1, 0)))
    prog = SosProgram()
    which = prog.add_sos_constraint(expr, basis, "square")
    problem, index = prog.compile()
    sol = sdp.solve(problem)
    assert sol.status == "optimal"
    gram = sol.block_values[index.constraint_blocks[which]]
    # Basis is sorted grlex: (0,1) = y first, then (1,0) = x; Gram unchanged
    # under that permutation for this instance.
    assert np.allclose(gram, np.array([[1.0, -1.0], [-1.0, 1.0]]), atol=1e-7)
    expanded, residual = sos.reconstruct(sol, prog.constraints[which], index)
    assert residual <= 1e-9
    assert sdp.min_eigenvalue(gram) >= -1e-8


def test_known_sos_quartic_feasible():
    # 2x^4 + 2x^3 y - x^2 y^2 + 5y^4 is SOS (classical example); the sampling
    # oracle confirms nonnegativity on a grid and the compiled SDP is feasible.
    p = Poly(2, {(4, 0): 2.0, (3, 1): 2.0, (2, 2): -1.0, (0, 4): 5.0})
    grid = np.linspace(-2, 2, 41)
    vals = [P.evaluate(p, (x, y)) for x in grid for y in grid]
    assert min(vals) >= -1e-12

    basis = GramBasis(2, ((0, 2), (1, 1), (2, 0)))
    prog = SosProgram()
    which = prog.add_sos_constraint(LinPoly.from_poly(p), basis, "quartic")
    problem, index = prog.compile()
    sol = sdp.solve(problem)
    assert sol.status == "optimal"
    _, residual = sos.reconstruct(sol, prog.constraints[which], index)
    assert residual <= 1e-6
    gram = sol.block_values[index.constraint_blocks[which]]
    assert sdp.min_eigenvalue(gram) >= -1e-8


def test_motzkin_infeasible():
    # Motzkin polynomial: nonnegative (AM-GM) but not a sum of squares.
    motzkin = Poly(2, {(4, 2): 1.0, (2, 4): 1.0, (2, 2): -3.0, (0, 0): 1.0})
    rng = np.random.default_rng(0)
    pts = rng.uniform(-3, 3, size=(2000, 2))
    assert float(motzkin.evaluate_many(pts).min()) >= -1e-9

    prog = SosProgram()
    prog.add_sos_constraint(LinPoly.from_poly(motzkin), make_basis(2, 3), "motzkin")
    problem, _ = prog.compile()
    sol = sdp.solve(problem)
    assert sol.status == "infeasible"


def test_equality_count_invariant():
    p = Poly(2, {(2, 0): 1.0, (0, 2): 1.0, (0, 0): 0.5})
    basis = make_basis(2, 1)
    prog = SosProgram()
    prog.add_sos_constraint(LinPoly.from_poly(p), basis, "count")
    problem, index = prog.compile()
    products = set()
    for a in basis.monomials:
        for b in basis.monomials:
            products.add(tuple(x + y for x, y in zip(a, b)))
    expected = len(products | set(p.terms))
    assert len(problem.constraints) == expected
    assert len(index.equality_rows[0]) == expected


def test_degree_overflow_names_monomial():
    # x^3 has degree within 2 * half-degree of the custom quadratic basis but
    # is not a product of two of its elements.
    p = Poly(2, {(3, 0): 1.0, (4, 0): 1.0})
    basis = GramBasis(2, ((0, 2), (1, 1), (2, 0)))
    prog = SosProgram()
    prog.add_sos_constraint(LinPoly.from_poly(p), basis, "overflow")
    with pytest.raises(ValueError, match="x1\\^3"):
        prog.compile()


def test_expression_degree_guard():
    with pytest.raises(ValueError, match="degree"):
        sos.SosConstraint(LinPoly.from_poly(Poly(1, {(4,): 1.0})),
                          GramBasis(1, ((0,), (1,))))


def test_zero_expr_zero_gram_residual():
    basis = make_basis(2, 1)
    expanded = sos.gram_expansion(basis, np.zeros((3, 3)))
    assert expanded.is_zero()
    assert expanded.max_coeff_diff(Poly.zero(2)) == 0.0


def test_gram_bound_sos_poly_equality():
    # Declare an SOS polynomial variable and pin it to (x + 1)^2 through a
    # pure equality; its Gram block must certify it.
    target = Poly(1, {(2,): 1.0, (1,): 2.0, (0,): 1.0})
    prog = SosProgram()
    s_poly = prog.new_sos_poly(make_basis(1, 1), "s")
    prog.add_equality(s_poly.add_poly(target, factor=-1.0))
    problem, index = prog.compile()
    sol = sdp.solve(problem)
    assert sol.status == "optimal"
    gram = sol.block_values[index.gram_group_blocks[0]]
    assert sos.gram_expansion(make_basis(1, 1), gram).max_coeff_diff(target) <= 1e-7
    assert sdp.min_eigenvalue(gram) >= -1e-8


def test_objective_through_free_poly():
    # maximize c subject to x^2 + c being SOS on basis {1, x} and c <= 0 via
    # the SOS structure: x^2 + c = z^T G z requires G_00 = c >= 0... so the
    # optimum of max -c is at c = 0.
    prog = SosProgram()
    cpoly = prog.new_free_poly(1, [(0,)], "c")
    expr = cpoly.add_poly(Poly(1, {(2,): 1.0}))
    prog.add_sos_constraint(expr, make_basis(1, 1), "anchored")
    var = cpoly.terms[(0,)].decision_var()
    prog.set_objective({var: -1.0})
    problem, index = prog.compile()
    sol = sdp.solve(problem)
    assert sol.status == "optimal"
    assert sol.primal_objective == pytest.approx(0.0, abs=1e-6)


def test_round_trip_regression_suite():
    rng = np.random.default_rng(13)
    for _ in range(5):
        # Random SOS polynomial: sum of squares of random quadratics.
        dim = 2
        basis = make_basis(dim, 2)
        target = Poly.zero(dim)
        for _ in range(3):
            q = Poly(dim, {m: rng.uniform(-1, 1) for m in basis.monomials})
            target = target + q * q
        prog = SosProgram()
        which = prog.add_sos_constraint(LinPoly.from_poly(target), basis, "rt")
        problem, index = prog.compile()
        sol = sdp.solve(problem)
        assert sol.status == "optimal"
        _, residual = sos.reconstruct(sol, prog.constraints[which], index)
        assert residual <= 1e-6
        gram = sol.block_values[index.constraint_blocks[which]]
        assert sdp.min_eigenvalue(gram) >= -1e-8
