"""Coupled-network model: full/error dynamics, Lie derivatives, region specs.

A network couples N identical nodes of state dimension n:

    xdot_i = f(x_i) - c * sum_j L_ij g(x_j)

Full-state polynomials live in the n*N stacked variables
(x_11..x_1n, x_21..., x_Nn); node i occupies coordinates (i-1)*n .. i*n - 1.
Error coordinates for a node pair (i, j) are Delta = x_i - x_j; they are never
independent indeterminates here, every occurrence is substituted by x_i - x_j
so constraints live in the full-state ring.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Literal, Optional, Sequence, Tuple, Union

import numpy as np

from . import poly as P
from .poly import LinPoly, Poly

_LAPLACIAN_TOL = 1e-12


@dataclass
class NetworkSpec:
    """Network data: node dynamics f, coupling g, Laplacian L, strength c."""

    node_dim: int
    n_nodes: int
    f: List[Poly]
    g: List[Poly]
    laplacian: np.ndarray
    coupling: float
    row_sum_exempt: bool = False

    def __post_init__(self):
        self.laplacian = np.asarray(self.laplacian, dtype=float)
        n, N = self.node_dim, self.n_nodes
        if len(self.f) != n or len(self.g) != n:
            raise ValueError("f and g must each have one component per node state")
        for comp in list(self.f) + list(self.g):
            if comp.dim != n:
                raise ValueError("f and g components must live in the node variables")
        if self.laplacian.shape != (N, N):
            raise ValueError(f"Laplacian must be {N}x{N}")
        if self.coupling <= 0:
            raise ValueError("coupling strength must be positive")
        if not self.row_sum_exempt:
            off = self.laplacian - np.diag(np.diag(self.laplacian))
            expect = -off.sum(axis=1)
            if np.abs(np.diag(self.laplacian) - expect).max() > _LAPLACIAN_TOL:
                raise ValueError(
                    "Laplacian diagonal must equal the negated off-diagonal row "
                    "sums (set row_sum_exempt to keep a nonconforming matrix)")

    @property
    def full_dim(self) -> int:
        return self.node_dim * self.n_nodes

    def node_embedding(self, i: int) -> np.ndarray:
        """Matrix mapping node variables into the node-i slot of full state
        (1-based node index)."""
        if not 1 <= i <= self.n_nodes:
            raise ValueError(f"node index {i} out of 1..{self.n_nodes}")
        n = self.node_dim
        mat = np.zeros((n, self.full_dim))
        for k in range(n):
            mat[k, (i - 1) * n + k] = 1.0
        return mat

    def pair_embedding(self, i: int, j: int) -> np.ndarray:
        """Matrix realizing Delta = x_i - x_j inside the full state."""
        return self.node_embedding(i) - self.node_embedding(j)


@dataclass
class RegionSpec:
    """Semialgebraic state set X = intersection {h_k > 0} plus a target set.

    ``scope`` tags whether the sets live in the n error variables of a node
    pair or in the full n*N state.  The target is either a norm ball of radius
    ``epsilon`` on the scope variables (stored as the polynomial
    epsilon^2 - ||.||^2) or an explicit list of polynomials (intersection of
    their positivity sets).
    """

    scope: Literal["error-pair", "full-state"]
    state_ineqs: List[Poly]
    epsilon: Optional[float] = None
    target_polys: Optional[List[Poly]] = None

    def __post_init__(self):
        if self.scope not in ("error-pair", "full-state"):
            raise ValueError("scope must be 'error-pair' or 'full-state'")
        if not self.state_ineqs:
            raise ValueError("at least one state inequality is required")
        dims = {h.dim for h in self.state_ineqs}
        if len(dims) != 1:
            raise ValueError("state inequalities must share one ambient dimension")
        if (self.epsilon is None) == (self.target_polys is None):
            raise ValueError("specify exactly one of epsilon or target_polys")
        if self.epsilon is not None and self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.target_polys is not None:
            for t in self.target_polys:
                if t.dim != self.dim:
                    raise ValueError("target polynomials must match the state dimension")
        covered = set()
        for h in self.state_ineqs:
            ball = ball_form(h)
            if ball is not None:
                covered.update(ball[1])
        if covered != set(range(self.dim)):
            raise ValueError(
                "state set must be bounded: the ball-shaped inequalities "
                "(const - sum of positive multiples of squares) must cover "
                "every variable")

    @property
    def dim(self) -> int:
        return self.state_ineqs[0].dim

    def target_list(self) -> List[Poly]:
        """Target as polynomials whose joint positivity defines the set."""
        if self.target_polys is not None:
            return list(self.target_polys)
        eps = float(self.epsilon)
        terms = {(0,) * self.dim: eps * eps}
        for var in range(self.dim):
            mono = [0] * self.dim
            mono[var] = 2
            terms[tuple(mono)] = -1.0
        return [Poly(self.dim, terms)]


def ball_form(h: Poly) -> Optional[Tuple[float, List[int]]]:
    """Detect h = R^2 - sum_j a_j x_j^2 with R, a_j > 0.

    Returns (R^2, variables with a_j > 0) or None.  Used for boundedness
    checks, analytic moments, and boundary sampling.
    """
    const = 0.0
    variables: List[int] = []
    for mono, coeff in h.terms.items():
        deg = sum(mono)
        if deg == 0:
            const = coeff
        elif deg == 2 and max(mono) == 2:
            if coeff >= 0:
                return None
            variables.append(mono.index(2))
        else:
            return None
    if const <= 0 or not variables:
        return None
    return const, sorted(variables)


def node_ball_structure(region: RegionSpec, node_dim: int) -> Optional[List[Tuple[float, List[int]]]]:
    """If every state inequality is a centered ball over one node's variables
    and together they cover all nodes exactly once, return the per-inequality
    (radius^2, variables); else None."""
    found = []
    covered: List[int] = []
    for h in region.state_ineqs:
        ball = ball_form(h)
        if ball is None:
            return None
        # unit coefficients only: re-check that the quadratic terms are -1
        for mono, coeff in h.terms.items():
            if sum(mono) == 2 and abs(coeff + 1.0) > P.ZERO_TOL:
                return None
        found.append(ball)
        covered.extend(ball[1])
    if sorted(covered) != list(range(region.dim)):
        return None
    return found


def full_dynamics(spec: NetworkSpec) -> List[Poly]:
    """Stacked vector field: component (i-1)*n + k is
    f_k(x_i) - c * sum_j L_ij g_k(x_j)."""
    comps: List[Poly] = []
    n = spec.node_dim
    g_at = [[P.substitute_linear(gk, spec.node_embedding(j + 1))
             for gk in spec.g] for j in range(spec.n_nodes)]
    for i in range(1, spec.n_nodes + 1):
        embed = spec.node_embedding(i)
        for k in range(n):
            comp = P.substitute_linear(spec.f[k], embed)
            for j in range(spec.n_nodes):
                weight = spec.coupling * spec.laplacian[i - 1, j]
                if abs(weight) > P.ZERO_TOL:
                    comp = comp + g_at[j][k].scale(-weight)
            comps.append(comp)
    return comps


def error_dynamics(spec: NetworkSpec, i: int, j: int) -> List[Poly]:
    """d/dt (x_i - x_j) as n polynomials over the full state."""
    if i == j:
        raise ValueError("error dynamics require two distinct nodes")
    for idx in (i, j):
        if not 1 <= idx <= spec.n_nodes:
            raise ValueError(f"node index {idx} out of 1..{spec.n_nodes}")
    n = spec.node_dim
    embed_i = spec.node_embedding(i)
    embed_j = spec.node_embedding(j)
    weights = spec.laplacian[i - 1] - spec.laplacian[j - 1]
    comps: List[Poly] = []
    for k in range(n):
        comp = P.substitute_linear(spec.f[k], embed_i) - \
            P.substitute_linear(spec.f[k], embed_j)
        for m in range(spec.n_nodes):
            weight = spec.coupling * weights[m]
            if abs(weight) > P.ZERO_TOL:
                comp = comp + P.substitute_linear(
                    spec.g[k], spec.node_embedding(m + 1)).scale(-weight)
        comps.append(comp)
    return comps


def lie_derivative(v: LinPoly, spec: NetworkSpec, i: int, j: int) -> LinPoly:
    """Derivative of v(Delta) along the pair (i, j) error flow, as a full-state
    polynomial affine in v's decision variables."""
    if v.dim != spec.node_dim:
        raise ValueError("the function must live in the node error variables")
    pair = spec.pair_embedding(i, j)
    flow = error_dynamics(spec, i, j)
    out = LinPoly.zero(spec.full_dim)
    for comp_v, comp_flow in zip(v.grad(), flow):
        out = out.add(comp_v.substitute_linear(pair).mul_poly(comp_flow))
    return out


def pair_coordinates(spec: NetworkSpec) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Embeddings of (node_i, node_j, midpoint) into the 2n pair variables
    (x_i occupies coordinates 0..n-1, x_j occupies n..2n-1)."""
    n = spec.node_dim
    e_i = np.hstack([np.eye(n), np.zeros((n, n))])
    e_j = np.hstack([np.zeros((n, n)), np.eye(n)])
    return e_i, e_j, 0.5 * (e_i + e_j)


def pair_reduced_dynamics(spec: NetworkSpec, i: int, j: int) -> List[Poly]:
    """d/dt (x_i - x_j) with the other nodes held at the pair midpoint.

    This is the reduction under which the error flow is a function of the pair
    alone: coupling contributions of nodes m outside the pair are evaluated at
    (x_i + x_j)/2.  For a zero-row-sum Laplacian the coupling collapses to
    w * (g(x_i) - g(x_j)) with w = (L_ii - L_ji + L_jj - L_ij) / 2; the
    reduction is exact for two-node networks and on the synchronization
    manifold.  Result lives in the 2n pair variables (x_i then x_j).
    """
    if i == j:
        raise ValueError("error dynamics require two distinct nodes")
    for idx in (i, j):
        if not 1 <= idx <= spec.n_nodes:
            raise ValueError(f"node index {idx} out of 1..{spec.n_nodes}")
    e_i, e_j, mid = pair_coordinates(spec)
    weights = spec.laplacian[i - 1] - spec.laplacian[j - 1]
    comps: List[Poly] = []
    for k in range(spec.node_dim):
        comp = P.substitute_linear(spec.f[k], e_i) - \
            P.substitute_linear(spec.f[k], e_j)
        for m in range(spec.n_nodes):
            weight = spec.coupling * weights[m]
            if abs(weight) <= P.ZERO_TOL:
                continue
            if m == i - 1:
                comp = comp + P.substitute_linear(spec.g[k], e_i).scale(-weight)
            elif m == j - 1:
                comp = comp + P.substitute_linear(spec.g[k], e_j).scale(-weight)
            else:
                comp = comp + P.substitute_linear(spec.g[k], mid).scale(-weight)
        comps.append(comp)
    return comps


def lie_derivative_pair(v: LinPoly, spec: NetworkSpec, i: int, j: int) -> LinPoly:
    """Derivative of v(Delta) along the midpoint-reduced pair flow, in the 2n
    pair variables."""
    if v.dim != spec.node_dim:
        raise ValueError("the function must live in the node error variables")
    e_i, e_j, _ = pair_coordinates(spec)
    delta_map = e_i - e_j
    flow = pair_reduced_dynamics(spec, i, j)
    out = LinPoly.zero(2 * spec.node_dim)
    for comp_v, comp_flow in zip(v.grad(), flow):
        out = out.add(comp_v.substitute_linear(delta_map).mul_poly(comp_flow))
    return out


def full_lie_derivative(v: LinPoly, spec: NetworkSpec) -> LinPoly:
    """Derivative of v(X) along the full network flow."""
    if v.dim != spec.full_dim:
        raise ValueError("the function must live in the full state variables")
    flow = full_dynamics(spec)
    out = LinPoly.zero(spec.full_dim)
    for comp_v, comp_flow in zip(v.grad(), flow):
        out = out.add(comp_v.mul_poly(comp_flow))
    return out
