"""Compile SOS membership and polynomial identities into a semidefinite program.

Each SOS constraint ``expr in Sigma[x]`` is parameterized by a Gram matrix G
over a monomial basis z: the compiler emits one PSD block per constraint and
one linear equality per monomial of ``union(expr, z z^T products)`` matching
coefficients of ``expr = z^T G z``.

Auxiliary SOS polynomials (multipliers) are declared through
``SosProgram.new_sos_poly``: they own a PSD block as well, and their
coefficients are affine forms over *Gram-bound* decision variables that alias
the block entries directly.  This keeps multiplier polynomials out of the free
variable space and adds no extra matching equalities for them.

Decision-variable bookkeeping lives in DecisionSpace; ``compile`` translates
everything into the sdp module's problem form and returns an index map that
``reconstruct`` uses to rebuild certified polynomials from a solution.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import poly as P
from .poly import AffineForm, LinPoly, Monomial, Poly, grlex_key
from .sdp import SdpProblem, SdpSolution


@dataclass(frozen=True)
class GramBasis:
    """Ordered monomial basis for a Gram parameterization, closed under the
    global graded-lex order and containing the constant monomial."""

    ambient_dim: int
    monomials: Tuple[Monomial, ...]

    def __len__(self) -> int:
        return len(self.monomials)

    def half_degree(self) -> int:
        return max(sum(m) for m in self.monomials)


def make_basis(ambient_dim: int, half_degree: int) -> GramBasis:
    """Full monomial basis of total degree <= half_degree."""
    if half_degree < 0:
        raise ValueError("half_degree must be >= 0")
    monos = P.monomials_up_to(ambient_dim, half_degree)
    return GramBasis(ambient_dim, tuple(monos))


@dataclass
class SosConstraint:
    """Require expr (affine in decision variables) to be SOS over the basis."""

    expr: LinPoly
    basis: GramBasis
    name: str = ""

    def __post_init__(self):
        if self.expr.dim != self.basis.ambient_dim:
            raise ValueError("constraint expression and basis dimensions differ")
        if self.expr.degree() > 2 * self.basis.half_degree():
            raise ValueError(
                f"constraint {self.name or '<anon>'}: expression degree "
                f"{self.expr.degree()} exceeds 2 * basis half-degree")


class DecisionSpace:
    """Registry of scalar decision variables.

    A variable is either free (maps to an SDP free variable) or Gram-bound
    (aliases entry (i, j) of a declared SOS polynomial's Gram block).
    """

    def __init__(self):
        self.kinds: List[Tuple] = []  # ('free', name) | ('gram', group, i, j)

    def new_free(self, name: str) -> int:
        self.kinds.append(("free", name))
        return len(self.kinds) - 1

    def new_gram(self, group: int, i: int, j: int) -> int:
        self.kinds.append(("gram", group, i, j))
        return len(self.kinds) - 1

    def __len__(self) -> int:
        return len(self.kinds)


@dataclass
class SosIndex:
    """Map from (Gram entries, decision variables) to SdpProblem variables."""

    space: DecisionSpace
    constraints: List["SosConstraint"]
    constraint_blocks: List[int]              # block id per SosConstraint
    gram_group_blocks: Dict[int, int]          # sos-poly group -> block id
    free_columns: Dict[int, int]               # decision var -> SDP free column
    bases: List[GramBasis]                     # basis per block id
    equality_rows: List[List[int]]             # SDP rows emitted per constraint
    equality_monomials: List[List[Monomial]]   # matching monomial per row

    def assignment(self, solution: SdpSolution) -> np.ndarray:
        """Decision-variable values implied by an SDP solution."""
        values = np.zeros(len(self.space))
        for idx, kind in enumerate(self.space.kinds):
            if kind[0] == "free":
                values[idx] = solution.free_values[self.free_columns[idx]]
            else:
                _, group, i, j = kind
                values[idx] = solution.block_values[self.gram_group_blocks[group]][i, j]
        return values


def _product_map(basis: GramBasis) -> Dict[Monomial, List[Tuple[int, int]]]:
    """monomial -> list of basis index pairs (a <= b) with z_a * z_b = monomial."""
    out: Dict[Monomial, List[Tuple[int, int]]] = {}
    monos = basis.monomials
    for a in range(len(monos)):
        for b in range(a, len(monos)):
            mono = tuple(x + y for x, y in zip(monos[a], monos[b]))
            out.setdefault(mono, []).append((a, b))
    return out


class SosProgram:
    """Builder collecting SOS polynomials, constraints, equalities, objective."""

    def __init__(self):
        self.space = DecisionSpace()
        self.sos_polys: List[Tuple[int, GramBasis, str, Dict[Tuple[int, int], int]]] = []
        self.constraints: List[SosConstraint] = []
        self.equalities: List[LinPoly] = []
        self.objective: Dict[int, float] = {}

    def new_free_poly(self, dim: int, monomials: Sequence[Monomial],
                      name: str = "") -> LinPoly:
        """Polynomial with one free decision variable per listed monomial."""
        terms = {}
        for mono in sorted(monomials, key=grlex_key):
            idx = self.space.new_free(f"{name}[{mono}]")
            terms[mono] = AffineForm(0.0, {idx: 1.0})
        return LinPoly(dim, terms)

    def new_sos_poly(self, basis: GramBasis, name: str = "") -> LinPoly:
        """SOS polynomial z^T G z whose coefficients alias Gram entries of a
        dedicated PSD block."""
        group = len(self.sos_polys)
        entry_vars: Dict[Tuple[int, int], int] = {}
        size = len(basis)
        for a in range(size):
            for b in range(a, size):
                entry_vars[(a, b)] = self.space.new_gram(group, a, b)
        self.sos_polys.append((group, basis, name, entry_vars))

        terms: Dict[Monomial, AffineForm] = {}
        for mono, pairs in _product_map(basis).items():
            lin = {}
            for a, b in pairs:
                lin[entry_vars[(a, b)]] = 2.0 if a != b else 1.0
            terms[mono] = AffineForm(0.0, lin)
        return LinPoly(basis.ambient_dim, terms)

    def add_sos_constraint(self, expr: LinPoly, basis: GramBasis,
                           name: str = "") -> int:
        self.constraints.append(SosConstraint(expr, basis, name))
        return len(self.constraints) - 1

    def add_equality(self, expr: LinPoly) -> None:
        self.equalities.append(expr)

    def set_objective(self, coeffs: Mapping[int, float]) -> None:
        self.objective = dict(coeffs)

    def compile(self) -> Tuple[SdpProblem, SosIndex]:
        return compile(self.constraints, self.equalities, self.objective, self)


def compile(constraints: Sequence[SosConstraint], equalities: Sequence[LinPoly],
            objective: Mapping[int, float],
            program: Optional[SosProgram] = None) -> Tuple[SdpProblem, SosIndex]:
    """Compile into a block-PSD SDP plus the index map.

    One PSD block per declared SOS polynomial, one PSD block per SosConstraint,
    one equality row per monomial in the union of each constraint expression
    and its Gram product set.  Uncovered expression monomials raise with the
    offending monomial named (never silent truncation).
    """
    program = program or SosProgram()
    space = program.space

    block_dims: List[int] = []
    bases: List[GramBasis] = []
    gram_group_blocks: Dict[int, int] = {}
    for group, basis, _name, _vars in program.sos_polys:
        gram_group_blocks[group] = len(block_dims)
        block_dims.append(len(basis))
        bases.append(basis)
    constraint_blocks: List[int] = []
    for con in constraints:
        constraint_blocks.append(len(block_dims))
        block_dims.append(len(con.basis))
        bases.append(con.basis)

    # Free decision variables get contiguous SDP columns in index order.
    free_columns: Dict[int, int] = {}
    for idx, kind in enumerate(space.kinds):
        if kind[0] == "free":
            free_columns[idx] = len(free_columns)

    problem = SdpProblem(block_dims=block_dims, n_free=len(free_columns))

    def var_terms(form: AffineForm, block_terms, free_terms) -> None:
        """Translate an affine form's variables into SDP coefficients."""
        for var, coeff in form.lin.items():
            kind = space.kinds[var]
            if kind[0] == "free":
                free_terms.append((free_columns[var], coeff))
            else:
                _, group, i, j = kind
                blk = gram_group_blocks[group]
                # Entry value G_ij appears once; the SDP functional doubles
                # off-diagonal terms, so halve them here.
                value = coeff if i == j else 0.5 * coeff
                block_terms.append((blk, i, j, value))

    equality_rows: List[List[int]] = []
    equality_monomials: List[List[Monomial]] = []

    for con, blk in zip(constraints, constraint_blocks):
        products = _product_map(con.basis)
        for mono in con.expr.terms:
            if mono not in products:
                pretty = P.render(Poly(con.expr.dim, {mono: 1.0}))
                raise ValueError(
                    f"constraint {con.name or '<anon>'}: monomial {pretty} is not "
                    f"covered by the Gram basis product set (degree overflow)")
        monos = sorted(set(con.expr.terms) | set(products), key=grlex_key)
        rows: List[int] = []
        for mono in monos:
            block_terms: List[Tuple[int, int, int, float]] = []
            free_terms: List[Tuple[int, float]] = []
            const = 0.0
            form = con.expr.terms.get(mono)
            if form is not None:
                const = form.const
                var_terms(form, block_terms, free_terms)
            # Gram side: subtract sum over pairs with the zz^T multiplicity.
            for a, b in products.get(mono, ()):
                block_terms.append((blk, a, b, -1.0))
            rows.append(problem.add_constraint(block_terms, free_terms, -const))
        equality_rows.append(rows)
        equality_monomials.append(monos)

    for expr in equalities:
        for mono in sorted(expr.terms, key=grlex_key):
            form = expr.terms[mono]
            block_terms: List[Tuple[int, int, int, float]] = []
            free_terms: List[Tuple[int, float]] = []
            var_terms(form, block_terms, free_terms)
            problem.add_constraint(block_terms, free_terms, -form.const)

    obj_blocks: Dict[int, List[Tuple[int, int, float]]] = {}
    for var, coeff in objective.items():
        kind = space.kinds[var]
        if kind[0] == "free":
            problem.obj_free[free_columns[var]] = \
                problem.obj_free.get(free_columns[var], 0.0) + coeff
        else:
            _, group, i, j = kind
            blk = gram_group_blocks[group]
            value = coeff if i == j else 0.5 * coeff
            obj_blocks.setdefault(blk, []).append((i, j, value))
    for blk, entries in obj_blocks.items():
        problem.obj_blocks[blk] = entries

    problem.validate()
    index = SosIndex(space, list(constraints), constraint_blocks,
                     gram_group_blocks, free_columns, bases, equality_rows,
                     equality_monomials)
    return problem, index


def gram_expansion(basis: GramBasis, gram: np.ndarray) -> Poly:
    """z^T G z as a Poly."""
    out: Dict[Monomial, float] = {}
    for mono, pairs in _product_map(basis).items():
        total = 0.0
        for a, b in pairs:
            total += gram[a, b] * (2.0 if a != b else 1.0)
        out[mono] = total
    return Poly(basis.ambient_dim, out)


def reconstruct(solution: SdpSolution, constraint: SosConstraint,
                index: SosIndex) -> Tuple[Poly, float]:
    """Re-expand the Gram certificate of one constraint and report the max-abs
    coefficient mismatch against the collapsed expression."""
    if solution.status != "optimal":
        raise ValueError("reconstruct requires an optimal solution")
    for pos, candidate in enumerate(index.constraints):
        if candidate is constraint:
            break
    else:
        raise ValueError("constraint does not belong to this index map")
    blk = index.constraint_blocks[pos]
    gram = solution.block_values[blk]
    expanded = gram_expansion(constraint.basis, gram)
    collapsed = constraint.expr.collapse(index.assignment(solution))
    return expanded, expanded.max_coeff_diff(collapsed)
