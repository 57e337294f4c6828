"""Sparse multivariate polynomial arithmetic over float coefficients.

A monomial is a tuple of non-negative integer exponents, one per ambient
variable.  A Poly maps monomials to coefficients; coefficients with absolute
value below ZERO_TOL are dropped so cancellation keeps the representation
sparse.  LinPoly is the same structure with affine forms over scalar decision
variables as coefficients; it is what synthesis manipulates while the
certificate polynomial is still unknown.

The global monomial order is graded lexicographic, realized by grlex_key:
sort by total degree, ties broken by the exponent tuple.  Every basis and
coefficient-matching constraint in the toolkit is enumerated in this order so
repeated runs produce identical problem layouts.
"""

from __future__ import annotations

import math
import re
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple

import numpy as np

Monomial = Tuple[int, ...]

# Coefficients below this are treated as exact zeros when stored.
ZERO_TOL = 1e-14


def grlex_key(mono: Monomial) -> Tuple[int, Monomial]:
    """Sort key for the global graded-lexicographic monomial order."""
    return (sum(mono), mono)


def _check_mono(mono: Monomial, dim: int) -> Monomial:
    mono = tuple(int(e) for e in mono)
    if len(mono) != dim:
        raise ValueError(f"monomial {mono} has length {len(mono)}, expected {dim}")
    if any(e < 0 for e in mono):
        raise ValueError(f"monomial {mono} has a negative exponent")
    return mono


class Poly:
    """Sparse polynomial in `dim` variables with float coefficients."""

    __slots__ = ("dim", "terms")

    def __init__(self, dim: int, terms: Mapping[Monomial, float] | None = None):
        self.dim = int(dim)
        clean: Dict[Monomial, float] = {}
        if terms:
            for mono, coeff in terms.items():
                mono = _check_mono(mono, self.dim)
                coeff = float(coeff)
                if abs(coeff) >= ZERO_TOL:
                    clean[mono] = clean.get(mono, 0.0) + coeff
                    if abs(clean[mono]) < ZERO_TOL:
                        del clean[mono]
        self.terms = clean

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, dim: int) -> "Poly":
        return cls(dim, {})

    @classmethod
    def constant(cls, dim: int, value: float) -> "Poly":
        return cls(dim, {(0,) * dim: value})

    @classmethod
    def variable(cls, dim: int, index: int) -> "Poly":
        """The polynomial x_{index} (0-based index)."""
        if not 0 <= index < dim:
            raise ValueError(f"variable index {index} out of range for dim {dim}")
        exps = [0] * dim
        exps[index] = 1
        return cls(dim, {tuple(exps): 1.0})

    # -- basic queries -------------------------------------------------------

    def degree(self) -> int:
        if not self.terms:
            return 0
        return max(sum(m) for m in self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def coefficient(self, mono: Monomial) -> float:
        return self.terms.get(tuple(mono), 0.0)

    def sorted_terms(self) -> List[Tuple[Monomial, float]]:
        return sorted(self.terms.items(), key=lambda kv: grlex_key(kv[0]))

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other: "Poly") -> "Poly":
        return add(self, other)

    def __sub__(self, other: "Poly") -> "Poly":
        return add(self, other.scale(-1.0))

    def __mul__(self, other: "Poly") -> "Poly":
        return mul(self, other)

    def __neg__(self) -> "Poly":
        return self.scale(-1.0)

    def scale(self, factor: float) -> "Poly":
        return Poly(self.dim, {m: c * factor for m, c in self.terms.items()})

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Poly) and self.dim == other.dim and self.terms == other.terms

    def __hash__(self):
        return hash((self.dim, tuple(self.sorted_terms())))

    def max_coeff_diff(self, other: "Poly") -> float:
        """Largest absolute coefficient difference against `other`."""
        if self.dim != other.dim:
            raise ValueError("ambient dimension mismatch")
        worst = 0.0
        for mono in set(self.terms) | set(other.terms):
            worst = max(worst, abs(self.terms.get(mono, 0.0) - other.terms.get(mono, 0.0)))
        return worst

    # -- evaluation ----------------------------------------------------------

    def __call__(self, point: Sequence[float]) -> float:
        return evaluate(self, point)

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        """Evaluate at a batch of points, shape (k, dim) -> (k,)."""
        points = np.asarray(points, dtype=float)
        if points.ndim == 1:
            points = points[None, :]
        if points.shape[1] != self.dim:
            raise ValueError("point dimension mismatch")
        values = np.zeros(points.shape[0])
        for mono, coeff in self.terms.items():
            term = np.full(points.shape[0], coeff)
            for var, exp in enumerate(mono):
                if exp:
                    term = term * points[:, var] ** exp
            values += term
        return values

    def __repr__(self):
        return f"Poly({render(self)!r})"


def add(a: Poly, b: Poly) -> Poly:
    """Coefficient-wise sum; ambient dimensions must agree."""
    if a.dim != b.dim:
        raise ValueError(f"ambient dimension mismatch: {a.dim} vs {b.dim}")
    out = dict(a.terms)
    for mono, coeff in b.terms.items():
        out[mono] = out.get(mono, 0.0) + coeff
    return Poly(a.dim, out)


def mul(a: Poly, b: Poly) -> Poly:
    """Distributive product; ambient dimensions must agree."""
    if a.dim != b.dim:
        raise ValueError(f"ambient dimension mismatch: {a.dim} vs {b.dim}")
    out: Dict[Monomial, float] = {}
    for ma, ca in a.terms.items():
        for mb, cb in b.terms.items():
            mono = tuple(x + y for x, y in zip(ma, mb))
            out[mono] = out.get(mono, 0.0) + ca * cb
    return Poly(a.dim, out)


def grad(p: Poly) -> List[Poly]:
    """Gradient: component k is the partial derivative with respect to x_k."""
    comps = []
    for var in range(p.dim):
        terms: Dict[Monomial, float] = {}
        for mono, coeff in p.terms.items():
            exp = mono[var]
            if exp:
                lowered = list(mono)
                lowered[var] = exp - 1
                key = tuple(lowered)
                terms[key] = terms.get(key, 0.0) + coeff * exp
        comps.append(Poly(p.dim, terms))
    return comps


def substitute_linear(p: Poly, matrix: np.ndarray, offset: np.ndarray | None = None) -> Poly:
    """Compose p with the affine map x_i = offset_i + sum_j matrix[i, j] * y_j.

    `matrix` has shape (p.dim, new_dim); the result lives in new_dim variables.
    Composition is exact term expansion, so degree is preserved for affine maps.
    """
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != p.dim:
        raise ValueError(f"substitution matrix shape {matrix.shape} does not match dim {p.dim}")
    new_dim = matrix.shape[1]
    if offset is None:
        offset = np.zeros(p.dim)
    offset = np.asarray(offset, dtype=float)
    if offset.shape != (p.dim,):
        raise ValueError("offset length must equal the polynomial's ambient dimension")

    # Image of each old variable as a Poly in the new variables.
    images: List[Poly] = []
    for i in range(p.dim):
        terms: Dict[Monomial, float] = {}
        if abs(offset[i]) >= ZERO_TOL:
            terms[(0,) * new_dim] = offset[i]
        for j in range(new_dim):
            if abs(matrix[i, j]) >= ZERO_TOL:
                exps = [0] * new_dim
                exps[j] = 1
                terms[tuple(exps)] = matrix[i, j]
        images.append(Poly(new_dim, terms))

    # Cache powers of each image as needed.
    powers: List[Dict[int, Poly]] = [{0: Poly.constant(new_dim, 1.0)} for _ in range(p.dim)]

    def image_power(var: int, exp: int) -> Poly:
        cache = powers[var]
        if exp not in cache:
            cache[exp] = mul(image_power(var, exp - 1), images[var])
        return cache[exp]

    out = Poly.zero(new_dim)
    for mono, coeff in p.terms.items():
        term = Poly.constant(new_dim, coeff)
        for var, exp in enumerate(mono):
            if exp:
                term = mul(term, image_power(var, exp))
        out = add(out, term)
    return out


def evaluate(p: Poly, point: Sequence[float]) -> float:
    """Evaluate p at a point (length must equal the ambient dimension)."""
    point = tuple(float(v) for v in point)
    if len(point) != p.dim:
        raise ValueError(f"point length {len(point)} does not match dim {p.dim}")
    total = 0.0
    for mono, coeff in p.terms.items():
        term = coeff
        for var, exp in enumerate(mono):
            if exp:
                term *= point[var] ** exp
        total += term
    return total


def ball_moment(alpha: Monomial, n: int, radius: float) -> float:
    """Integral of the monomial x^alpha over the n-ball of the given radius.

    Zero when any exponent is odd; otherwise the closed-form even moment
    R^(n+|alpha|) * 2 * prod Gamma((a_i+1)/2) / ((n+|alpha|) * Gamma((n+|alpha|)/2)).
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != n:
        raise ValueError("alpha length must equal n")
    if any(a < 0 for a in alpha):
        raise ValueError("exponents must be non-negative")
    if any(a % 2 for a in alpha):
        return 0.0
    total = sum(alpha)
    log_num = sum(math.lgamma((a + 1) / 2.0) for a in alpha)
    log_den = math.lgamma((n + total) / 2.0)
    sphere = 2.0 * math.exp(log_num - log_den)
    return radius ** (n + total) * sphere / (n + total)


def monomials_up_to(dim: int, degree: int) -> List[Monomial]:
    """All monomials of total degree <= degree, in the global graded-lex order."""
    if degree < 0:
        raise ValueError("degree must be non-negative")
    out: List[Monomial] = []

    def rec(prefix: List[int], remaining: int, slot: int):
        if slot == dim - 1:
            for e in range(remaining + 1):
                out.append(tuple(prefix + [e]))
            return
        for e in range(remaining + 1):
            rec(prefix + [e], remaining - e, slot + 1)

    if dim == 0:
        return [()]
    rec([], degree, 0)
    out.sort(key=grlex_key)
    return out


# -- text grammar -------------------------------------------------------------
#
# Rendered form: terms in graded-lex order joined by " + " / " - ", each term
# "coeff*x1^a*x2^b" with unit exponents left implicit, e.g.
# "1 - 2*x1^2 + 0.5*x1*x2".  Variables are named x1..xk.

_TOKEN = re.compile(r"\s*(?:(?P<num>[0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?)|(?P<var>x[0-9]+)|(?P<op>[+\-*^]))")


def render(p: Poly) -> str:
    if not p.terms:
        return "0"
    pieces: List[str] = []
    for mono, coeff in p.sorted_terms():
        factors = []
        for var, exp in enumerate(mono):
            if exp == 1:
                factors.append(f"x{var + 1}")
            elif exp > 1:
                factors.append(f"x{var + 1}^{exp}")
        mag = abs(coeff)
        if factors and mag == 1.0:
            body = "*".join(factors)
        elif factors:
            body = "*".join([repr(mag)] + factors)
        else:
            body = repr(mag)
        if not pieces:
            pieces.append(body if coeff >= 0 else f"-{body}")
        else:
            pieces.append(("+ " if coeff >= 0 else "- ") + body)
    return " ".join(pieces)


def parse_poly(text: str, dim: int) -> Poly:
    """Parse the rendered grammar back into a Poly with the given ambient dim."""
    terms: Dict[Monomial, float] = {}
    pos = 0
    text = text.strip()
    if text == "0" or not text:
        return Poly.zero(dim)

    def error(msg: str):
        raise ValueError(f"polynomial parse error at position {pos}: {msg} in {text!r}")

    tokens: List[Tuple[str, str]] = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            error("unrecognized token")
        pos = m.end()
        for kind in ("num", "var", "op"):
            val = m.group(kind)
            if val is not None:
                tokens.append((kind, val))
                break

    i = 0
    n_tok = len(tokens)
    while i < n_tok:
        sign = 1.0
        while i < n_tok and tokens[i] == ("op", "+") or i < n_tok and tokens[i] == ("op", "-"):
            if tokens[i][1] == "-":
                sign = -sign
            i += 1
        if i >= n_tok:
            error("dangling sign")
        coeff = sign
        exps = [0] * dim
        expect_factor = True
        while i < n_tok and expect_factor:
            kind, val = tokens[i]
            if kind == "num":
                coeff *= float(val)
                i += 1
            elif kind == "var":
                var = int(val[1:]) - 1
                if not 0 <= var < dim:
                    error(f"variable {val} out of range for dimension {dim}")
                exp = 1
                i += 1
                if i + 1 < n_tok and tokens[i] == ("op", "^") and tokens[i + 1][0] == "num":
                    exp = int(float(tokens[i + 1][1]))
                    i += 2
                exps[var] += exp
            else:
                error("expected a coefficient or variable")
            expect_factor = i < n_tok and tokens[i] == ("op", "*")
            if expect_factor:
                i += 1
        mono = tuple(exps)
        terms[mono] = terms.get(mono, 0.0) + coeff
    return Poly(dim, terms)


# -- affine forms and LinPoly --------------------------------------------------


class AffineForm:
    """constant + sum coeff_i * decision_var_i, over integer variable indices."""

    __slots__ = ("const", "lin")

    def __init__(self, const: float = 0.0, lin: Mapping[int, float] | None = None):
        self.const = float(const)
        self.lin: Dict[int, float] = {}
        if lin:
            for idx, coeff in lin.items():
                coeff = float(coeff)
                if abs(coeff) >= ZERO_TOL:
                    self.lin[int(idx)] = coeff

    def is_zero(self) -> bool:
        return abs(self.const) < ZERO_TOL and not self.lin

    def copy(self) -> "AffineForm":
        return AffineForm(self.const, dict(self.lin))

    def add_inplace(self, other: "AffineForm", factor: float = 1.0) -> None:
        self.const += factor * other.const
        for idx, coeff in other.lin.items():
            val = self.lin.get(idx, 0.0) + factor * coeff
            if abs(val) < ZERO_TOL:
                self.lin.pop(idx, None)
            else:
                self.lin[idx] = val

    def scale(self, factor: float) -> "AffineForm":
        return AffineForm(self.const * factor, {i: c * factor for i, c in self.lin.items()})

    def value(self, assignment: np.ndarray) -> float:
        total = self.const
        for idx, coeff in self.lin.items():
            total += coeff * assignment[idx]
        return total

    def decision_var(self) -> int:
        """Index of the single unit-coefficient variable this form wraps."""
        if abs(self.const) >= ZERO_TOL or len(self.lin) != 1:
            raise ValueError("affine form is not a bare decision variable")
        (idx, coeff), = self.lin.items()
        if abs(coeff - 1.0) >= ZERO_TOL:
            raise ValueError("affine form is not a bare decision variable")
        return idx

    def __repr__(self):
        parts = [repr(self.const)] + [f"{c!r}*c{i}" for i, c in sorted(self.lin.items())]
        return " + ".join(parts)


class LinPoly:
    """Polynomial whose coefficients are affine forms over decision variables."""

    __slots__ = ("dim", "terms")

    def __init__(self, dim: int, terms: Mapping[Monomial, AffineForm] | None = None):
        self.dim = int(dim)
        self.terms: Dict[Monomial, AffineForm] = {}
        if terms:
            for mono, form in terms.items():
                mono = _check_mono(mono, self.dim)
                if not form.is_zero():
                    self.terms[mono] = form.copy()

    @classmethod
    def zero(cls, dim: int) -> "LinPoly":
        return cls(dim, {})

    @classmethod
    def from_poly(cls, p: Poly) -> "LinPoly":
        return cls(p.dim, {m: AffineForm(c) for m, c in p.terms.items()})

    @classmethod
    def from_variables(cls, dim: int, assignments: Mapping[Monomial, int]) -> "LinPoly":
        """One decision variable per monomial, unit coefficient."""
        return cls(dim, {m: AffineForm(0.0, {idx: 1.0}) for m, idx in assignments.items()})

    def copy(self) -> "LinPoly":
        return LinPoly(self.dim, self.terms)

    def add(self, other: "LinPoly", factor: float = 1.0) -> "LinPoly":
        if self.dim != other.dim:
            raise ValueError("ambient dimension mismatch")
        out = LinPoly(self.dim, self.terms)
        for mono, form in other.terms.items():
            if mono in out.terms:
                out.terms[mono].add_inplace(form, factor)
                if out.terms[mono].is_zero():
                    del out.terms[mono]
            else:
                scaled = form.scale(factor)
                if not scaled.is_zero():
                    out.terms[mono] = scaled
        return out

    def add_poly(self, p: Poly, factor: float = 1.0) -> "LinPoly":
        return self.add(LinPoly.from_poly(p), factor)

    def scale(self, factor: float) -> "LinPoly":
        return LinPoly(self.dim, {m: f.scale(factor) for m, f in self.terms.items()})

    def mul_poly(self, p: Poly) -> "LinPoly":
        """Product with a plain Poly (stays affine in the decision variables)."""
        if self.dim != p.dim:
            raise ValueError("ambient dimension mismatch")
        out: Dict[Monomial, AffineForm] = {}
        for mp, cp in p.terms.items():
            for ml, form in self.terms.items():
                mono = tuple(a + b for a, b in zip(mp, ml))
                if mono in out:
                    out[mono].add_inplace(form, cp)
                else:
                    out[mono] = form.scale(cp)
        return LinPoly(self.dim, out)

    def grad(self) -> List["LinPoly"]:
        comps = []
        for var in range(self.dim):
            terms: Dict[Monomial, AffineForm] = {}
            for mono, form in self.terms.items():
                exp = mono[var]
                if exp:
                    lowered = list(mono)
                    lowered[var] = exp - 1
                    key = tuple(lowered)
                    if key in terms:
                        terms[key].add_inplace(form, float(exp))
                    else:
                        terms[key] = form.scale(float(exp))
            comps.append(LinPoly(self.dim, terms))
        return comps

    def substitute_linear(self, matrix: np.ndarray, offset: np.ndarray | None = None) -> "LinPoly":
        """Affine variable substitution, applied to every coefficient form."""
        matrix = np.asarray(matrix, dtype=float)
        new_dim = matrix.shape[1]
        out = LinPoly.zero(new_dim)
        for mono, form in self.terms.items():
            image = substitute_linear(Poly(self.dim, {mono: 1.0}), matrix, offset)
            for new_mono, coeff in image.terms.items():
                if new_mono in out.terms:
                    out.terms[new_mono].add_inplace(form, coeff)
                else:
                    scaled = form.scale(coeff)
                    if not scaled.is_zero():
                        out.terms[new_mono] = scaled
        return out

    def collapse(self, assignment: np.ndarray) -> Poly:
        """Resolve decision variables to numbers; with none present this is the
        identity on the lifted Poly."""
        return Poly(self.dim, {m: f.value(assignment) for m, f in self.terms.items()})

    def decision_variables(self) -> List[int]:
        seen = set()
        for form in self.terms.values():
            seen.update(form.lin)
        return sorted(seen)

    def degree(self) -> int:
        if not self.terms:
            return 0
        return max(sum(m) for m in self.terms)

    def __repr__(self):
        items = ", ".join(f"{m}: {f!r}" for m, f in sorted(self.terms.items(), key=lambda kv: grlex_key(kv[0])))
        return f"LinPoly({self.dim}, {{{items}}})"
