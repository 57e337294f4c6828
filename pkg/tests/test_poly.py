"""Polynomial arithmetic, calculus, moments, and the text grammar."""

import math

import numpy as np
import pytest

from ros_cert import poly
from ros_cert.poly import Poly, ball_moment, parse_poly, render


def random_poly(rng, dim, degree, n_terms):
    monos = poly.monomials_up_to(dim, degree)
    picks = rng.choice(len(monos), size=min(n_terms, len(monos)), replace=False)
    return Poly(dim, {monos[i]: rng.uniform(-2, 2) for i in picks})


def test_add_cancellation():
    x = Poly.variable(2, 0)
    y = Poly.variable(2, 1)
    assert (x + y) + (x - y) == x.scale(2.0)


def test_add_identity_and_collection():
    rng = np.random.default_rng(0)
    p = random_poly(rng, 3, 4, 8)
    assert p + Poly.zero(3) == p
    x2 = Poly(2, {(2, 0): 1.0})
    assert x2 + x2.scale(3.0) == Poly(2, {(2, 0): 4.0})


def test_add_dimension_mismatch():
    with pytest.raises(ValueError):
        poly.add(Poly.zero(2), Poly.zero(3))


def test_mul_difference_of_squares():
    x = Poly.variable(2, 0)
    y = Poly.variable(2, 1)
    assert (x + y) * (x - y) == Poly(2, {(2, 0): 1.0, (0, 2): -1.0})


def test_mul_identity_and_monomials():
    rng = np.random.default_rng(1)
    p = random_poly(rng, 2, 3, 6)
    assert p * Poly.constant(2, 1.0) == p
    assert Poly(2, {(2, 0): 1.0}) * Poly(2, {(0, 3): 1.0}) == Poly(2, {(2, 3): 1.0})


def test_mul_degree_adds():
    rng = np.random.default_rng(2)
    a = random_poly(rng, 2, 3, 4)
    b = random_poly(rng, 2, 2, 4)
    if not a.is_zero() and not b.is_zero():
        assert (a * b).degree() == a.degree() + b.degree()


def test_grad_examples():
    p = Poly(2, {(2, 0): 1.0, (0, 2): 1.0})
    gx, gy = poly.grad(p)
    assert gx == Poly(2, {(1, 0): 2.0})
    assert gy == Poly(2, {(0, 1): 2.0})
    assert all(g.is_zero() for g in poly.grad(Poly.constant(2, 5.0)))
    gx, gy = poly.grad(Poly(2, {(3, 1): 1.0}))
    assert gx == Poly(2, {(2, 1): 3.0})
    assert gy == Poly(2, {(3, 0): 1.0})


def test_grad_linearity_exact():
    rng = np.random.default_rng(3)
    p = random_poly(rng, 3, 4, 10)
    q = random_poly(rng, 3, 4, 10)
    a, b = 1.375, -2.5  # exactly representable
    left = poly.grad(p.scale(a) + q.scale(b))
    right = [gp.scale(a) + gq.scale(b) for gp, gq in zip(poly.grad(p), poly.grad(q))]
    for l, r in zip(left, right):
        assert l == r


def test_substitute_examples():
    delta_sq = Poly(1, {(2,): 1.0})
    expanded = poly.substitute_linear(delta_sq, np.array([[1.0, -1.0]]))
    assert expanded == Poly(2, {(2, 0): 1.0, (1, 1): -2.0, (0, 2): 1.0})

    rng = np.random.default_rng(4)
    p = random_poly(rng, 3, 3, 8)
    assert poly.substitute_linear(p, np.eye(3)) == p

    affine = poly.substitute_linear(Poly(1, {(1,): 1.0, (0,): 1.0}), np.array([[2.0]]))
    assert affine == Poly(1, {(1,): 2.0, (0,): 1.0})


def test_substitute_commutes_with_evaluate():
    rng = np.random.default_rng(5)
    for _ in range(10):
        p = random_poly(rng, 3, 4, 10)
        mat = rng.uniform(-1, 1, size=(3, 2))
        off = rng.uniform(-1, 1, size=3)
        q = poly.substitute_linear(p, mat, off)
        for _ in range(4):
            u = rng.uniform(-1, 1, size=2)
            direct = poly.evaluate(p, mat @ u + off)
            composed = poly.evaluate(q, u)
            assert composed == pytest.approx(direct, rel=1e-9, abs=1e-12)


def test_evaluate_vanderpol_component():
    # Second dynamics component of the example oscillator at (x, y) = (1, 2).
    mu_omega = 0.5 * 0.9
    f2 = Poly(2, {(2, 1): -mu_omega, (0, 1): mu_omega, (2, 0): -0.81})
    assert poly.evaluate(f2, (1.0, 2.0)) == pytest.approx(-0.81, abs=1e-12)


def test_evaluate_circle_points():
    p = Poly(2, {(2, 0): 1.0, (0, 2): 1.0})
    assert poly.evaluate(p, (0.0, 0.0)) == 0.0
    assert poly.evaluate(p, (0.6, 0.8)) == pytest.approx(1.0, abs=1e-12)


def test_evaluate_dimension_mismatch():
    with pytest.raises(ValueError):
        poly.evaluate(Poly.zero(2), (1.0,))


def test_ring_axioms_randomized():
    rng = np.random.default_rng(6)
    pts = rng.uniform(-1.5, 1.5, size=(32, 2))
    for _ in range(6):
        a = random_poly(rng, 2, 3, 6)
        b = random_poly(rng, 2, 3, 6)
        c = random_poly(rng, 2, 2, 5)
        for pt in pts:
            va, vb, vc = (poly.evaluate(q, pt) for q in (a, b, c))
            assert poly.evaluate(a + b, pt) == pytest.approx(va + vb, rel=1e-9, abs=1e-12)
            assert poly.evaluate(a * b, pt) == pytest.approx(va * vb, rel=1e-9, abs=1e-12)
            assert poly.evaluate((a + b) * c, pt) == pytest.approx(
                poly.evaluate(a * c, pt) + poly.evaluate(b * c, pt), rel=1e-9, abs=1e-9
            )
        assert a + b == b + a
        assert (a * b).max_coeff_diff(b * a) < 1e-12


def test_ball_moment_unit_disk_area():
    assert ball_moment((0, 0), 2, 1.0) == pytest.approx(math.pi, rel=1e-12)


def test_ball_moment_odd_is_zero():
    assert ball_moment((1, 0), 2, 1.0) == 0.0
    assert ball_moment((2, 3), 2, 1.0) == 0.0


def test_ball_moment_x_squared_disk():
    # Polar hand integral: int r^2 cos^2 t * r dr dt = pi/4; frozen from the
    # Monte-Carlo oracle below as well.
    assert ball_moment((2, 0), 2, 1.0) == pytest.approx(math.pi / 4, rel=1e-12)


def test_ball_moment_monte_carlo_large_sample():
    rng = np.random.default_rng(7)
    n_samples = 10_000_000
    pts = rng.uniform(-1, 1, size=(n_samples, 2))
    inside = (pts ** 2).sum(axis=1) <= 1.0
    vals = np.where(inside, pts[:, 0] ** 2, 0.0)
    est = vals.mean() * 4.0  # box volume
    assert abs(est - ball_moment((2, 0), 2, 1.0)) < 1e-3


def test_ball_moment_scaling_law():
    rng = np.random.default_rng(8)
    for _ in range(20):
        n = int(rng.integers(1, 6))
        alpha = tuple(int(2 * rng.integers(0, 3)) for _ in range(n))
        radius = float(rng.uniform(0.3, 2.5))
        lhs = ball_moment(alpha, n, radius)
        rhs = radius ** (n + sum(alpha)) * ball_moment(alpha, n, 1.0)
        assert lhs == pytest.approx(rhs, rel=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3, 5, 8])
def test_ball_moment_vs_monte_carlo(n):
    # Shared sample batch per dimension; every tested alpha must agree with the
    # Monte-Carlo estimate within 3 standard errors.
    rng = np.random.default_rng(100 + n)
    n_samples = 1_000_000
    pts = rng.uniform(-1, 1, size=(n_samples, n))
    inside = (pts ** 2).sum(axis=1) <= 1.0
    box = 2.0 ** n

    evens = [a for a in poly.monomials_up_to(n, 8) if all(e % 2 == 0 for e in a)]
    picks = list(rng.choice(len(evens), size=min(12, len(evens)), replace=False))
    for k in picks:
        alpha = evens[k]
        vals = np.where(inside, np.prod(pts ** np.array(alpha), axis=1), 0.0)
        est = vals.mean() * box
        stderr = vals.std(ddof=1) / math.sqrt(n_samples) * box
        exact = ball_moment(alpha, n, 1.0)
        if stderr == 0.0:  # 1-D ball equals the sampling box: estimate is exact
            assert est == pytest.approx(exact, rel=1e-12)
        else:
            assert abs(est - exact) <= 3.0 * stderr, (alpha, est, exact, stderr)


def test_render_parse_round_trip():
    rng = np.random.default_rng(9)
    for _ in range(25):
        p = random_poly(rng, 4, 5, 12)
        q = parse_poly(render(p), 4)
        assert p.max_coeff_diff(q) == 0.0
    assert parse_poly("0", 3).is_zero()
    assert parse_poly("-x2^3 + 4", 2) == Poly(2, {(0, 3): -1.0, (0, 0): 4.0})


def test_monomials_up_to_counts():
    assert len(poly.monomials_up_to(2, 1)) == 3
    assert len(poly.monomials_up_to(2, 3)) == 10
    assert len(poly.monomials_up_to(6, 3)) == 84
    assert poly.monomials_up_to(2, 1) == [(0, 0), (0, 1), (1, 0)]


def test_linpoly_lift_collapse_identity():
    rng = np.random.default_rng(10)
    p = random_poly(rng, 3, 4, 9)
    lifted = poly.LinPoly.from_poly(p)
    assert lifted.collapse(np.zeros(0)) == p


def test_linpoly_mul_and_substitute():
    # (c0 * x1) * (x1 + 1) then x1 = u - v, evaluated at c0 = 2.
    lp = poly.LinPoly(1, {(1,): poly.AffineForm(0.0, {0: 1.0})})
    lp = lp.mul_poly(Poly(1, {(1,): 1.0, (0,): 1.0}))
    lp = lp.substitute_linear(np.array([[1.0, -1.0]]))
    collapsed = lp.collapse(np.array([2.0]))
    expect = poly.substitute_linear(Poly(1, {(2,): 2.0, (1,): 2.0}), np.array([[1.0, -1.0]]))
    assert collapsed.max_coeff_diff(expect) < 1e-12
