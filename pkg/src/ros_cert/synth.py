"""Build and solve the barrier-synthesis SOS programs; extract and verify
certificates.

Two programs are compiled, sharing one recipe:

* manifold mode: one main SOS constraint per selected node pair (i, j),
  requiring   L_V - rate*V - sum_k p1_k h_k + p2 l   to be SOS in the pair
  variables (x_i, x_j) after substituting Delta = x_i - x_j, where V, p1, p2
  live in the n error variables and L_V differentiates V along the
  midpoint-reduced pair flow (netmodel.pair_reduced_dynamics).  Because the
  pair's error flow depends on where the pair sits and node dynamics may grow
  superlinearly, the growth condition cannot hold for arbitrary node states;
  the pair positions are localized with ball terms
  s(x) * (node_ball^2 - ||x_i or x_j||^2), s SOS in the pair variables.  The
  certificate covers trajectories whose node states stay inside those balls
  until the target is reached, with off-pair coupling evaluated at the pair
  midpoint (exact for two-node networks and on the manifold);

* equilibrium mode: a single main constraint over the full state with the
  network's stacked vector field (the state-set multipliers already bound
  every direction there, so no extra localization is involved).

Shared tail conditions:

* boundary: for every state inequality h_k, -V + q_k h_k - sum_{m!=k} s_km h_m
  is SOS (q_k free, s_km SOS), which pins V <= 0 on each piece of the state
  set boundary;
* scale normalization: the conditions are invariant under positive scaling of
  (V, multipliers), so the raw integral objective is either degenerate or
  unbounded.  Two constraints fix the scale soundly: an anchor
  V(0) >= origin_value (1x1 PSD block) and a cap V <= cap_value on the state
  set (one more SOS constraint).  Neither changes the family of certifiable
  regions, since {V > 0} is scale-invariant.

A target given as a polynomial list is treated as an intersection; its
complement is a union, so one main constraint is emitted per target piece
(each with its own multiplier set).  The common ball target stays a single
constraint.

The objective maximizes the integral of V over the state set: exactly via ball
moments when the state set is a ball or a product of per-node balls, otherwise
by fixed-seed Monte-Carlo estimation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np

from . import netmodel, poly as P, sdp, sos
from .netmodel import NetworkSpec, RegionSpec
from .poly import LinPoly, Monomial, Poly
from .sdp import SdpProblem, SdpSolution, SolveOptions
from .sos import GramBasis, SosIndex, SosProgram, make_basis

IDENTITY_TOL = 1e-6
GRAM_EIG_TOL = -1e-8


class CertificateError(ValueError):
    """Raised when a solver result violates the certificate invariants."""


@dataclass
class SynthesisConfig:
    rate: float
    barrier_degree: int = 4
    multiplier_degree: Optional[int] = None  # even; None = auto
    pair_mode: Literal["ordered", "unordered"] = "ordered"
    objective_region: Optional[RegionSpec] = None
    origin_value: float = 0.5
    cap_value: float = 1.0
    node_ball_radius: float = 2.0  # manifold mode: node-state localization
    moment_samples: int = 200_000
    moment_seed: int = 20240601

    def __post_init__(self):
        if self.rate <= 0:
            raise ValueError("rate must be positive")
        if self.node_ball_radius <= 0:
            raise ValueError("node_ball_radius must be positive")
        if self.barrier_degree < 2 or self.barrier_degree % 2:
            raise ValueError("barrier degree must be even and >= 2")
        if self.multiplier_degree is not None and self.multiplier_degree % 2:
            raise ValueError("multiplier degree must be even")
        if self.pair_mode not in ("ordered", "unordered"):
            raise ValueError("pair_mode must be 'ordered' or 'unordered'")
        if not 0 < self.origin_value <= self.cap_value:
            raise ValueError("need 0 < origin_value <= cap_value")


@dataclass
class Certificate:
    program: Literal["manifold", "equilibrium"]
    barrier: Poly
    rate: float
    pairs: List[Tuple[int, int]]
    state_multipliers: List[List[Poly]]
    target_multipliers: List[Poly]
    boundary_free: List[Poly]
    boundary_sos: List[List[Poly]]
    cap_sos: List[Poly]
    gram_blocks: Dict[str, np.ndarray]
    identity_residual: float
    gram_min_eig: float
    objective_value: float
    node_ball_radius: Optional[float] = None
    node_localizers: List[List[Poly]] = field(default_factory=list)

    def describe(self) -> str:
        return (f"{self.program} certificate: degree {self.barrier.degree()}, "
                f"rate {self.rate}, identity residual {self.identity_residual:.3e}, "
                f"gram min eig {self.gram_min_eig:.3e}")


@dataclass
class CompiledSynthesis:
    program: Literal["manifold", "equilibrium"]
    spec: NetworkSpec
    region: RegionSpec
    cfg: SynthesisConfig
    builder: SosProgram
    problem: SdpProblem
    index: SosIndex
    v_poly: LinPoly
    moments: Dict[Monomial, float]
    pairs: List[Tuple[int, int]]
    main_handles: List[int]
    main_labels: List[str]
    state_mult_groups: List[List[int]]   # sos-poly group per main constraint/h_k
    target_mult_groups: List[int]
    node_loc_groups: List[List[int]]     # per main constraint/node (manifold)
    boundary_handles: List[int]
    boundary_free_polys: List[LinPoly]
    boundary_sos_groups: List[List[int]]
    cap_handle: int
    cap_groups: List[int]
    anchor_handle: int


def _even_ceil(value: int) -> int:
    value = max(value, 0)
    return value if value % 2 == 0 else value + 1


def selected_pairs(n_nodes: int, mode: str) -> List[Tuple[int, int]]:
    if mode == "ordered":
        return [(i, j) for i in range(1, n_nodes + 1)
                for j in range(1, n_nodes + 1) if i != j]
    return [(i, j) for i in range(1, n_nodes + 1)
            for j in range(i + 1, n_nodes + 1)]


# -- moments --------------------------------------------------------------------


def region_moments(region: RegionSpec, monomials: Sequence[Monomial],
                   cfg: SynthesisConfig) -> Dict[Monomial, float]:
    """Integral of each monomial over the closed state set.

    Exact for a single centered ball or a product of per-node balls; otherwise
    fixed-seed Monte-Carlo rejection from the bounding box.
    """
    dim = region.dim
    if len(region.state_ineqs) == 1:
        ball = netmodel.ball_form(region.state_ineqs[0])
        if ball is not None and ball[1] == list(range(dim)):
            radius = math.sqrt(ball[0])
            return {m: P.ball_moment(m, dim, radius) for m in monomials}
    structure = netmodel.node_ball_structure(region, dim)
    if structure is not None:
        out: Dict[Monomial, float] = {}
        for mono in monomials:
            val = 1.0
            for r_sq, variables in structure:
                sub = tuple(mono[v] for v in variables)
                val *= P.ball_moment(sub, len(variables), math.sqrt(r_sq))
            out[mono] = val
        return out
    return _mc_moments(region, monomials, cfg)


def _bounding_box(region: RegionSpec) -> np.ndarray:
    radius = np.zeros(region.dim)
    for h in region.state_ineqs:
        ball = netmodel.ball_form(h)
        if ball is not None:
            r = math.sqrt(ball[0])
            for v in ball[1]:
                radius[v] = max(radius[v], r) if radius[v] == 0 else min(radius[v], r)
    if np.any(radius == 0):
        raise ValueError("cannot bound the state set for sampling")
    return radius


def _mc_moments(region: RegionSpec, monomials: Sequence[Monomial],
                cfg: SynthesisConfig) -> Dict[Monomial, float]:
    rng = np.random.default_rng(cfg.moment_seed)
    radius = _bounding_box(region)
    pts = rng.uniform(-radius, radius, size=(cfg.moment_samples, region.dim))
    inside = np.ones(cfg.moment_samples, dtype=bool)
    for h in region.state_ineqs:
        inside &= h.evaluate_many(pts) >= 0.0
    box_vol = float(np.prod(2.0 * radius))
    out: Dict[Monomial, float] = {}
    for mono in monomials:
        vals = np.prod(pts ** np.array(mono), axis=1)
        out[mono] = float(np.where(inside, vals, 0.0).mean()) * box_vol
    return out


# -- program builders -------------------------------------------------------------


def _attach_common_tail(builder: SosProgram, v_poly: LinPoly,
                        state_ineqs: List[Poly], cfg: SynthesisConfig,
                        dim: int) -> Tuple[List[int], List[LinPoly],
                                           List[List[int]], int, List[int], int]:
    """Boundary pieces, cap, and anchor constraints (all in `dim` variables)."""
    deg_v = cfg.barrier_degree

    boundary_handles: List[int] = []
    boundary_free: List[LinPoly] = []
    boundary_groups: List[List[int]] = []
    for k, h_k in enumerate(state_ineqs):
        deg_q = _even_ceil(deg_v - h_k.degree())
        q_poly = builder.new_free_poly(dim, P.monomials_up_to(dim, deg_q),
                                       f"boundary_free[{k}]")
        expr = v_poly.scale(-1.0).add(q_poly.mul_poly(h_k))
        groups: List[int] = []
        for m, h_m in enumerate(state_ineqs):
            if m == k:
                continue
            deg_s = _even_ceil(deg_v - h_m.degree())
            s_basis = make_basis(dim, deg_s // 2)
            s_poly = builder.new_sos_poly(s_basis, f"boundary_sos[{k},{m}]")
            groups.append(len(builder.sos_polys) - 1)
            expr = expr.add(s_poly.mul_poly(h_m), factor=-1.0)
        half = (max(expr.degree(), deg_v) + 1) // 2
        boundary_handles.append(builder.add_sos_constraint(
            expr, make_basis(dim, half), f"boundary[{k}]"))
        boundary_free.append(q_poly)
        boundary_groups.append(groups)

    cap_expr = v_poly.scale(-1.0).add_poly(Poly.constant(dim, cfg.cap_value))
    cap_groups: List[int] = []
    for k, h_k in enumerate(state_ineqs):
        deg_s = _even_ceil(deg_v - h_k.degree())
        s_poly = builder.new_sos_poly(make_basis(dim, deg_s // 2), f"cap_sos[{k}]")
        cap_groups.append(len(builder.sos_polys) - 1)
        cap_expr = cap_expr.add(s_poly.mul_poly(h_k), factor=-1.0)
    half = (max(cap_expr.degree(), deg_v) + 1) // 2
    cap_handle = builder.add_sos_constraint(cap_expr, make_basis(dim, half), "cap")

    origin = (0,) * dim
    anchor_form = v_poly.terms.get(origin)
    anchor_terms = {origin: anchor_form.copy() if anchor_form else P.AffineForm(0.0)}
    anchor_terms[origin].const -= cfg.origin_value
    anchor_expr = LinPoly(dim, anchor_terms)
    anchor_handle = builder.add_sos_constraint(
        anchor_expr, GramBasis(dim, (origin,)), "anchor")

    return (boundary_handles, boundary_free, boundary_groups, cap_handle,
            cap_groups, anchor_handle)


def _finish(program, spec, region, cfg, builder, v_poly, pairs, main_handles,
            main_labels, state_groups, target_groups, node_loc_groups,
            tail) -> CompiledSynthesis:
    moments = region_moments(cfg.objective_region or region,
                             list(v_poly.terms), cfg)
    objective = {}
    for mono, form in v_poly.terms.items():
        objective[form.decision_var()] = moments[mono]
    builder.set_objective(objective)
    problem, index = builder.compile()
    (boundary_handles, boundary_free, boundary_groups, cap_handle,
     cap_groups, anchor_handle) = tail
    return CompiledSynthesis(
        program=program, spec=spec, region=region, cfg=cfg, builder=builder,
        problem=problem, index=index, v_poly=v_poly, moments=moments,
        pairs=pairs, main_handles=main_handles, main_labels=main_labels,
        state_mult_groups=state_groups, target_mult_groups=target_groups,
        node_loc_groups=node_loc_groups,
        boundary_handles=boundary_handles, boundary_free_polys=boundary_free,
        boundary_sos_groups=boundary_groups, cap_handle=cap_handle,
        cap_groups=cap_groups, anchor_handle=anchor_handle)


def _pair_ball_poly(n: int, which: int, radius: float) -> Poly:
    """radius^2 - ||x||^2 for one member of a pair, in the 2n pair variables
    (which = 0 for x_i, 1 for x_j)."""
    terms: Dict[Monomial, float] = {(0,) * (2 * n): radius * radius}
    for k in range(n):
        mono = [0] * (2 * n)
        mono[which * n + k] = 2
        terms[tuple(mono)] = -1.0
    return Poly(2 * n, terms)


def build_manifold_program(spec: NetworkSpec, region: RegionSpec,
                           cfg: SynthesisConfig) -> CompiledSynthesis:
    """Program over node-pair error dynamics (region lives in error variables)."""
    if region.scope != "error-pair":
        raise ValueError("manifold program requires an error-pair region")
    n = spec.node_dim
    if region.dim != n:
        raise ValueError("region dimension must equal the node dimension")
    pair_dim = 2 * n
    deg_v = cfg.barrier_degree

    builder = SosProgram()
    v_poly = builder.new_free_poly(n, P.monomials_up_to(n, deg_v), "V")

    pairs = selected_pairs(spec.n_nodes, cfg.pair_mode)
    deg_dyn = max(max(c.degree() for c in netmodel.pair_reduced_dynamics(spec, i, j))
                  for i, j in pairs)
    deg_lv = deg_v - 1 + deg_dyn
    targets = region.target_list()

    e_i, e_j, _mid = netmodel.pair_coordinates(spec)
    delta_map = e_i - e_j
    ball_i = _pair_ball_poly(n, 0, cfg.node_ball_radius)
    ball_j = _pair_ball_poly(n, 1, cfg.node_ball_radius)

    main_handles: List[int] = []
    main_labels: List[str] = []
    state_groups: List[List[int]] = []
    target_groups: List[int] = []
    node_loc_groups: List[List[int]] = []
    for (i, j) in pairs:
        lie = netmodel.lie_derivative_pair(v_poly, spec, i, j)
        v_on_pair = v_poly.substitute_linear(delta_map)
        for t_idx, l_t in enumerate(targets):
            expr = lie.add(v_on_pair, factor=-cfg.rate)
            groups: List[int] = []
            top = max(deg_lv, deg_v)
            for k, h_k in enumerate(region.state_ineqs):
                deg_p = cfg.multiplier_degree if cfg.multiplier_degree is not None \
                    else _even_ceil(deg_lv - h_k.degree())
                p_poly = builder.new_sos_poly(
                    make_basis(n, deg_p // 2), f"state_mult[{i},{j},{t_idx},{k}]")
                groups.append(len(builder.sos_polys) - 1)
                expr = expr.add(
                    p_poly.mul_poly(h_k).substitute_linear(delta_map), factor=-1.0)
                top = max(top, deg_p + h_k.degree())
            deg_p2 = cfg.multiplier_degree if cfg.multiplier_degree is not None \
                else _even_ceil(deg_lv - l_t.degree())
            p2_poly = builder.new_sos_poly(
                make_basis(n, deg_p2 // 2), f"target_mult[{i},{j},{t_idx}]")
            target_groups.append(len(builder.sos_polys) - 1)
            expr = expr.add(p2_poly.mul_poly(l_t).substitute_linear(delta_map))
            top = max(top, deg_p2 + l_t.degree())

            # Localize the pair positions: the growth condition is certified
            # for x_i, x_j inside the configured balls.
            deg_s = _even_ceil(deg_lv - 2)
            loc_groups: List[int] = []
            for which, ball in enumerate((ball_i, ball_j)):
                s_poly = builder.new_sos_poly(
                    make_basis(pair_dim, deg_s // 2),
                    f"node_loc[{i},{j},{t_idx},{which}]")
                loc_groups.append(len(builder.sos_polys) - 1)
                expr = expr.add(s_poly.mul_poly(ball), factor=-1.0)
                top = max(top, deg_s + 2)

            label = f"pair({i},{j})" + (f" target[{t_idx}]" if len(targets) > 1 else "")
            main_handles.append(builder.add_sos_constraint(
                expr, make_basis(pair_dim, (top + 1) // 2), label))
            main_labels.append(label)
            state_groups.append(groups)
            node_loc_groups.append(loc_groups)

    tail = _attach_common_tail(builder, v_poly, region.state_ineqs, cfg, n)
    return _finish("manifold", spec, region, cfg, builder, v_poly, pairs,
                   main_handles, main_labels, state_groups, target_groups,
                   node_loc_groups, tail)


def build_equilibrium_program(spec: NetworkSpec, region: RegionSpec,
                              cfg: SynthesisConfig) -> CompiledSynthesis:
    """Program over the stacked network state (region lives in full state)."""
    if region.scope != "full-state":
        raise ValueError("equilibrium program requires a full-state region")
    full = spec.full_dim
    if region.dim != full:
        raise ValueError("region dimension must equal node_dim * n_nodes")
    deg_v = cfg.barrier_degree

    builder = SosProgram()
    v_poly = builder.new_free_poly(full, P.monomials_up_to(full, deg_v), "V")
    lie = netmodel.full_lie_derivative(v_poly, spec)
    deg_dyn = max(c.degree() for c in netmodel.full_dynamics(spec))
    deg_lv = deg_v - 1 + deg_dyn
    targets = region.target_list()

    main_handles: List[int] = []
    main_labels: List[str] = []
    state_groups: List[List[int]] = []
    target_groups: List[int] = []
    for t_idx, l_t in enumerate(targets):
        expr = lie.add(v_poly, factor=-cfg.rate)
        groups: List[int] = []
        top = max(deg_lv, deg_v)
        for k, h_k in enumerate(region.state_ineqs):
            deg_p = cfg.multiplier_degree if cfg.multiplier_degree is not None \
                else _even_ceil(deg_lv - h_k.degree())
            p_poly = builder.new_sos_poly(
                make_basis(full, deg_p // 2), f"state_mult[{t_idx},{k}]")
            groups.append(len(builder.sos_polys) - 1)
            expr = expr.add(p_poly.mul_poly(h_k), factor=-1.0)
            top = max(top, deg_p + h_k.degree())
        deg_p2 = cfg.multiplier_degree if cfg.multiplier_degree is not None \
            else _even_ceil(deg_lv - l_t.degree())
        p2_poly = builder.new_sos_poly(
            make_basis(full, deg_p2 // 2), f"target_mult[{t_idx}]")
        target_groups.append(len(builder.sos_polys) - 1)
        expr = expr.add(p2_poly.mul_poly(l_t))
        top = max(top, deg_p2 + l_t.degree())

        label = f"main target[{t_idx}]" if len(targets) > 1 else "main"
        main_handles.append(builder.add_sos_constraint(
            expr, make_basis(full, (top + 1) // 2), label))
        main_labels.append(label)
        state_groups.append(groups)

    tail = _attach_common_tail(builder, v_poly, region.state_ineqs, cfg, full)
    return _finish("equilibrium", spec, region, cfg, builder, v_poly, [],
                   main_handles, main_labels, state_groups, target_groups,
                   [], tail)


# -- extraction -------------------------------------------------------------------


def _collapse_group(compiled: CompiledSynthesis, solution: SdpSolution,
                    group: int) -> Poly:
    _, basis, _name, _vars = compiled.builder.sos_polys[group]
    gram = solution.block_values[compiled.index.gram_group_blocks[group]]
    return sos.gram_expansion(basis, gram)


def extract_certificate(solution: SdpSolution,
                        compiled: CompiledSynthesis) -> Certificate:
    """Collapse the solved decision variables into polynomials, then verify the
    certificate invariants (identity residual and Gram eigenvalue floor).

    Raises CertificateError with the failing figures rather than silently
    accepting a bad solve.
    """
    if solution.status != "optimal":
        raise CertificateError(f"solution status is {solution.status!r}, "
                               "certificate extraction requires 'optimal'")
    index = compiled.index
    assignment = index.assignment(solution)
    barrier = compiled.v_poly.collapse(assignment)

    worst_residual = 0.0
    for con in compiled.builder.constraints:
        _, residual = sos.reconstruct(solution, con, index)
        worst_residual = max(worst_residual, residual)

    worst_eig = math.inf
    gram_blocks: Dict[str, np.ndarray] = {}
    for handle, label in list(zip(compiled.main_handles, compiled.main_labels)) + \
            [(compiled.boundary_handles[k], f"boundary[{k}]")
             for k in range(len(compiled.boundary_handles))] + \
            [(compiled.cap_handle, "cap"), (compiled.anchor_handle, "anchor")]:
        blk = index.constraint_blocks[handle]
        gram_blocks[label] = solution.block_values[blk]
        worst_eig = min(worst_eig, sdp.min_eigenvalue(solution.block_values[blk]))
    for group, basis, name, _vars in compiled.builder.sos_polys:
        blk = index.gram_group_blocks[group]
        gram_blocks[name] = solution.block_values[blk]
        worst_eig = min(worst_eig, sdp.min_eigenvalue(solution.block_values[blk]))

    problems = []
    if worst_residual > IDENTITY_TOL:
        problems.append(f"identity residual {worst_residual:.3e} exceeds "
                        f"{IDENTITY_TOL:.0e}")
    if worst_eig < GRAM_EIG_TOL:
        problems.append(f"gram minimum eigenvalue {worst_eig:.3e} below "
                        f"{GRAM_EIG_TOL:.0e}")
    if problems:
        raise CertificateError("; ".join(problems))

    state_mults = [[_collapse_group(compiled, solution, g) for g in groups]
                   for groups in compiled.state_mult_groups]
    target_mults = [_collapse_group(compiled, solution, g)
                    for g in compiled.target_mult_groups]
    node_locs = [[_collapse_group(compiled, solution, g) for g in groups]
                 for groups in compiled.node_loc_groups]
    boundary_free = [q.collapse(assignment) for q in compiled.boundary_free_polys]
    boundary_sos = [[_collapse_group(compiled, solution, g) for g in groups]
                    for groups in compiled.boundary_sos_groups]
    cap_sos = [_collapse_group(compiled, solution, g) for g in compiled.cap_groups]

    return Certificate(
        program=compiled.program, barrier=barrier, rate=compiled.cfg.rate,
        pairs=list(compiled.pairs), state_multipliers=state_mults,
        target_multipliers=target_mults, boundary_free=boundary_free,
        boundary_sos=boundary_sos, cap_sos=cap_sos, gram_blocks=gram_blocks,
        identity_residual=worst_residual, gram_min_eig=worst_eig,
        objective_value=solution.primal_objective,
        node_ball_radius=(compiled.cfg.node_ball_radius
                          if compiled.program == "manifold" else None),
        node_localizers=node_locs)


def objective_from_moments(cert: Certificate,
                           moments: Dict[Monomial, float]) -> float:
    """Integral of the certified barrier from the moment vector."""
    return sum(coeff * moments.get(mono, 0.0)
               for mono, coeff in cert.barrier.terms.items())


@dataclass
class SynthesisResult:
    compiled: CompiledSynthesis
    solution: SdpSolution
    certificate: Optional[Certificate]
    failure: str = ""


def synthesize(spec: NetworkSpec, region: RegionSpec, cfg: SynthesisConfig,
               options: Optional[SolveOptions] = None) -> SynthesisResult:
    """Build, solve, and extract in one call; extraction failures are reported
    in the result rather than raised."""
    if region.scope == "error-pair":
        compiled = build_manifold_program(spec, region, cfg)
    else:
        compiled = build_equilibrium_program(spec, region, cfg)
    solution = sdp.solve(compiled.problem, options)
    certificate = None
    failure = ""
    if solution.status == "optimal":
        try:
            certificate = extract_certificate(solution, compiled)
        except CertificateError as err:
            failure = str(err)
    else:
        failure = f"solver status {solution.status}" + \
            (f": {solution.message}" if solution.message else "")
    return SynthesisResult(compiled, solution, certificate, failure)


# -- verification ------------------------------------------------------------------


@dataclass
class VerificationReport:
    samples: int
    seed: int
    worst_growth_margin: float     # min of L_V - rate*V over sampled X-bar \ X_T
    worst_boundary_value: float    # max of V over sampled boundary points
    growth_violations: int
    boundary_violations: int
    violating_points: List[Tuple[str, List[float]]] = field(default_factory=list)
    region_empty: bool = False

    @property
    def passed(self) -> bool:
        return self.growth_violations == 0 and self.boundary_violations == 0

    def describe(self) -> str:
        state = "PASS" if self.passed else "FAIL"
        return (f"verification {state}: growth margin {self.worst_growth_margin:.3e} "
                f"({self.growth_violations} violations), boundary max "
                f"{self.worst_boundary_value:.3e} ({self.boundary_violations} "
                f"violations), {self.samples} samples, seed {self.seed}")


GROWTH_MARGIN_TOL = -1e-6
BOUNDARY_VALUE_TOL = 1e-6


def _sample_outside_target(rng, region: RegionSpec, count: int) -> np.ndarray:
    """Uniform points of X-bar \\ X_T via rejection from the bounding box."""
    radius = _bounding_box(region)
    targets = region.target_list()
    out = []
    attempts = 0
    while sum(len(c) for c in out) < count:
        attempts += 1
        if attempts > 2000:
            raise RuntimeError("rejection sampling failed for the state set")
        pts = rng.uniform(-radius, radius, size=(max(count, 1024), region.dim))
        keep = np.ones(len(pts), dtype=bool)
        for h in region.state_ineqs:
            keep &= h.evaluate_many(pts) >= 0.0
        in_target = np.ones(len(pts), dtype=bool)
        for t in targets:
            in_target &= t.evaluate_many(pts) > 0.0
        keep &= ~in_target
        out.append(pts[keep])
    return np.concatenate(out)[:count]


def _sample_boundary(rng, region: RegionSpec, count: int) -> np.ndarray:
    """Points of the state-set boundary: for each ball-shaped piece, its
    variables on the sphere and the rest inside; rejection otherwise."""
    pieces = []
    for k, h in enumerate(region.state_ineqs):
        if netmodel.ball_form(h) is not None:
            pieces.append(k)
    if not pieces:
        raise RuntimeError("no ball-shaped state inequality to project onto")
    per = max(1, count // len(pieces))
    radius = _bounding_box(region)
    chunks = []
    for k in pieces:
        r_sq, variables = netmodel.ball_form(region.state_ineqs[k])
        want = per
        got = []
        attempts = 0
        while sum(len(c) for c in got) < want:
            attempts += 1
            if attempts > 2000:
                raise RuntimeError("rejection sampling failed for the boundary")
            pts = rng.uniform(-radius, radius, size=(max(want, 1024), region.dim))
            sphere = rng.standard_normal((len(pts), len(variables)))
            norms = np.linalg.norm(sphere, axis=1)
            norms[norms == 0] = 1.0
            sphere = sphere / norms[:, None] * math.sqrt(r_sq)
            pts[:, variables] = sphere
            keep = np.ones(len(pts), dtype=bool)
            for m, h in enumerate(region.state_ineqs):
                if m != k:
                    keep &= h.evaluate_many(pts) >= 0.0
            got.append(pts[keep])
        chunks.append(np.concatenate(got)[:want])
    return np.concatenate(chunks)


def _sample_in_ball(rng, count: int, dim: int, radius: float) -> np.ndarray:
    direction = rng.standard_normal((count, dim))
    norms = np.linalg.norm(direction, axis=1)
    norms[norms == 0] = 1.0
    radii = radius * rng.uniform(0.0, 1.0, size=count) ** (1.0 / dim)
    return direction / norms[:, None] * radii[:, None]


def verify_certificate(cert: Certificate, spec: NetworkSpec, region: RegionSpec,
                       samples: int = 100_000, seed: int = 0) -> VerificationReport:
    """Sample the certificate conditions directly.

    Growth condition (L_V - rate*V >= 0 on the state set outside the target):
    checked pointwise at `samples` draws; in manifold mode the pair error is
    drawn from the region, node states from the certificate's localization
    balls (consistently with the sampled error).  Boundary condition (V <= 0
    on the state-set boundary) is checked on projected boundary samples.
    Margins beyond the stated tolerances count as violations.
    """
    rng = np.random.default_rng(seed)
    worst_growth = math.inf
    growth_violations = 0
    witnesses: List[Tuple[str, List[float]]] = []

    if cert.program == "manifold":
        pair_count = max(1, len(cert.pairs))
        per_pair = max(1, samples // pair_count)
        n = spec.node_dim
        radius = cert.node_ball_radius or 1.0
        e_i, e_j, _mid = netmodel.pair_coordinates(spec)
        delta_map = e_i - e_j
        for (i, j) in cert.pairs:
            states = np.zeros((0, 2 * n))
            attempts = 0
            while len(states) < per_pair:
                attempts += 1
                if attempts > 200:
                    raise RuntimeError("node-ball sampling failed; error region "
                                       "larger than the localization ball")
                want = max(per_pair - len(states), 2048)
                deltas = _sample_outside_target(rng, region, want)
                x_j = _sample_in_ball(rng, want, n, radius)
                x_i = x_j + deltas
                keep = np.linalg.norm(x_i, axis=1) <= radius
                states = np.concatenate(
                    [states, np.hstack([x_i[keep], x_j[keep]])])
            states = states[:per_pair]
            lie = netmodel.lie_derivative_pair(
                LinPoly.from_poly(cert.barrier), spec, i, j).collapse(np.zeros(0))
            v_on_pair = P.substitute_linear(cert.barrier, delta_map)
            margin = lie.evaluate_many(states) - cert.rate * v_on_pair.evaluate_many(states)
            worst_growth = min(worst_growth, float(margin.min()))
            bad = margin < GROWTH_MARGIN_TOL
            growth_violations += int(bad.sum())
            for idx in np.nonzero(bad)[0][:3]:
                witnesses.append((f"growth pair({i},{j})", states[idx].tolist()))
    else:
        pts = _sample_outside_target(rng, region, samples)
        lie = netmodel.full_lie_derivative(
            LinPoly.from_poly(cert.barrier), spec).collapse(np.zeros(0))
        margin = lie.evaluate_many(pts) - cert.rate * cert.barrier.evaluate_many(pts)
        worst_growth = float(margin.min())
        bad = margin < GROWTH_MARGIN_TOL
        growth_violations = int(bad.sum())
        for idx in np.nonzero(bad)[0][:3]:
            witnesses.append(("growth", pts[idx].tolist()))

    boundary_pts = _sample_boundary(rng, region, max(1000, samples // 10))
    boundary_vals = cert.barrier.evaluate_many(boundary_pts)
    worst_boundary = float(boundary_vals.max())
    bad = boundary_vals > BOUNDARY_VALUE_TOL
    boundary_violations = int(bad.sum())
    for idx in np.nonzero(bad)[0][:3]:
        witnesses.append(("boundary", boundary_pts[idx].tolist()))

    interior = _sample_outside_target(rng, region, 2000)
    region_empty = bool((cert.barrier.evaluate_many(interior) <= 0.0).all()
                        and cert.barrier((0.0,) * region.dim) <= 0.0)

    return VerificationReport(
        samples=samples, seed=seed, worst_growth_margin=worst_growth,
        worst_boundary_value=worst_boundary, growth_violations=growth_violations,
        boundary_violations=boundary_violations, violating_points=witnesses,
        region_empty=region_empty)
