"""Standard-form semidefinite programming with an embedded interior-point solver.

Problem form (see SdpProblem):

    maximize    sum_b <C_b, X_b> + c_u . u
    subject to  sum_b <A_kb, X_b> + d_k . u = b_k     (k = 1..m)
                X_b symmetric positive semidefinite,   u free.

The solver is a primal-dual path-following method with Nesterov-Todd scaling
on dense blocks and a Mehrotra predictor-corrector step.  Free variables are
eliminated from the Schur complement system through a QR factorization of
L^-1 D (L the Schur Cholesky factor), so the small free-variable system is
solved through orthogonal factors instead of variable splitting or explicitly
squaring D^T M^-1 D.  Primal infeasibility is certified by a dual improving
ray; ambiguous exits surface as ``numerical_failure``.

Sized for desk-scale sum-of-squares problems: dense blocks up to a few hundred
rows, a few thousand equality constraints.  A solve call owns its workspace
and is deterministic for fixed inputs and options.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

_SQRT2 = math.sqrt(2.0)
_CHUNK = 256  # constraints per batch when forming the Schur matrix


@dataclass
class ConstraintRow:
    """One linear equality: block functional plus free terms equals rhs.

    ``block_terms`` holds (block_index, row, col, value) with row <= col.  The
    value is the coefficient of the matrix entry X[row, col]; off-diagonal
    entries are mirrored, i.e. the functional is <A, X> for the symmetric A
    with A[row, col] = A[col, row] = value (so an off-diagonal term contributes
    2 * value * X[row, col]).
    """

    block_terms: List[Tuple[int, int, int, float]] = field(default_factory=list)
    free_terms: List[Tuple[int, float]] = field(default_factory=list)
    rhs: float = 0.0


@dataclass
class SdpProblem:
    """Block-diagonal PSD program with free scalar variables; sense = maximize."""

    block_dims: List[int]
    n_free: int = 0
    constraints: List[ConstraintRow] = field(default_factory=list)
    obj_blocks: Dict[int, List[Tuple[int, int, float]]] = field(default_factory=dict)
    obj_free: Dict[int, float] = field(default_factory=dict)

    def validate(self) -> None:
        if any(d < 1 for d in self.block_dims):
            raise ValueError("block dimensions must be >= 1")
        nb = len(self.block_dims)
        for k, row in enumerate(self.constraints):
            for b, i, j, _ in row.block_terms:
                if not 0 <= b < nb:
                    raise ValueError(f"constraint {k}: block index {b} out of range")
                if not (0 <= i <= j < self.block_dims[b]):
                    raise ValueError(f"constraint {k}: entry ({i},{j}) outside block {b}")
            for v, _ in row.free_terms:
                if not 0 <= v < self.n_free:
                    raise ValueError(f"constraint {k}: free variable {v} undeclared")
        for b, entries in self.obj_blocks.items():
            if not 0 <= b < nb:
                raise ValueError(f"objective block {b} out of range")
            for i, j, _ in entries:
                if not (0 <= i <= j < self.block_dims[b]):
                    raise ValueError(f"objective entry ({i},{j}) outside block {b}")
        for v in self.obj_free:
            if not 0 <= v < self.n_free:
                raise ValueError(f"objective free variable {v} undeclared")

    def add_constraint(
        self,
        block_terms: Sequence[Tuple[int, int, int, float]],
        free_terms: Sequence[Tuple[int, float]],
        rhs: float,
    ) -> int:
        terms = [(int(b), min(i, j), max(i, j), float(v)) for b, i, j, v in block_terms]
        row = ConstraintRow(terms, [(int(i), float(v)) for i, v in free_terms], float(rhs))
        self.constraints.append(row)
        return len(self.constraints) - 1

    def dump(self, path: str) -> None:
        """Sparse text dump for cross-checking against external solvers.

        Whitespace-separated lines, 0-based indices:
            dims <n_blocks> <n_free> <n_constraints>
            bdim <block> <dim>
            c <constraint> <block> <row> <col> <value>
            f <constraint> <free_var> <value>
            r <constraint> <rhs>
            oc <block> <row> <col> <value>
            of <free_var> <value>
        Block entries use row <= col with the symmetric-mirror convention
        documented on ConstraintRow.
        """
        lines = [f"dims {len(self.block_dims)} {self.n_free} {len(self.constraints)}"]
        for b, d in enumerate(self.block_dims):
            lines.append(f"bdim {b} {d}")
        for k, row in enumerate(self.constraints):
            for b, i, j, v in row.block_terms:
                lines.append(f"c {k} {b} {i} {j} {v!r}")
            for idx, v in row.free_terms:
                lines.append(f"f {k} {idx} {v!r}")
            lines.append(f"r {k} {row.rhs!r}")
        for b, entries in sorted(self.obj_blocks.items()):
            for i, j, v in entries:
                lines.append(f"oc {b} {i} {j} {v!r}")
        for idx, v in sorted(self.obj_free.items()):
            lines.append(f"of {idx} {v!r}")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")


@dataclass
class SolveOptions:
    tol_feas: float = 1e-7
    tol_gap: float = 1e-7
    max_iterations: int = 200
    step_fraction: float = 0.98
    polish: bool = True
    verbose: bool = False


@dataclass
class SdpSolution:
    status: str  # optimal | infeasible | unbounded | max_iterations | numerical_failure
    block_values: List[np.ndarray]
    free_values: np.ndarray
    dual_values: np.ndarray
    dual_slacks: List[np.ndarray]
    primal_objective: float
    dual_objective: float
    primal_residual: float
    dual_residual: float
    rel_gap: float
    iterations: int
    history: List[Dict[str, float]] = field(default_factory=list)
    message: str = ""


def min_eigenvalue(m: np.ndarray) -> float:
    """Smallest eigenvalue of a symmetric matrix (raises on asymmetric input)."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("input must be a square matrix")
    scale = max(1.0, float(np.abs(m).max()))
    if float(np.abs(m - m.T).max()) > 1e-12 * scale:
        raise ValueError("input matrix is not symmetric")
    return float(np.linalg.eigvalsh(0.5 * (m + m.T))[0])


# -- compiled data --------------------------------------------------------------


class _BlockData:
    """Per-block sparse views of the constraint coefficients (scaled rows)."""

    def __init__(self, dim: int, entries: List[Tuple[int, int, int, float]], m: int):
        self.dim = dim
        iu = np.triu_indices(dim)
        self.iu = iu
        svec_index = np.zeros((dim, dim), dtype=np.int64)
        svec_index[iu] = np.arange(iu[0].size)
        self.s_dim = iu[0].size
        self.svec_scale = np.where(iu[0] == iu[1], 1.0, _SQRT2)

        if entries:
            ks = np.array([e[0] for e in entries], dtype=np.int64)
            is_ = np.array([e[1] for e in entries], dtype=np.int64)
            js = np.array([e[2] for e in entries], dtype=np.int64)
            vs = np.array([e[3] for e in entries], dtype=float)
        else:
            ks = is_ = js = np.zeros(0, dtype=np.int64)
            vs = np.zeros(0, dtype=float)
        self._coo = (ks, is_, js, vs)

        self.active = np.unique(ks)
        self.m = m
        self._build(np.ones(m))

    def _build(self, row_scale: np.ndarray) -> None:
        ks, is_, js, vs = self._coo
        dim = self.dim
        m = self.m
        iu = self.iu
        svec_index = np.zeros((dim, dim), dtype=np.int64)
        svec_index[iu] = np.arange(iu[0].size)
        if ks.size:
            scale = np.where(is_ == js, 1.0, _SQRT2) * row_scale[ks]
            self.Asvec = sp.csr_matrix(
                (vs * scale, (ks, svec_index[is_, js])), shape=(m, self.s_dim))
            pos = {k: idx for idx, k in enumerate(self.active)}
            krel = np.array([pos[k] for k in ks], dtype=np.int64)
            off = is_ != js
            scaled_vs = vs * row_scale[ks]
            rows = np.concatenate([krel * dim + is_, krel[off] * dim + js[off]])
            cols = np.concatenate([js, is_[off]])
            vals = np.concatenate([scaled_vs, scaled_vs[off]])
            self.Astack = sp.csr_matrix((vals, (rows, cols)),
                                        shape=(self.active.size * dim, dim))
        else:
            self.Asvec = sp.csr_matrix((m, self.s_dim))
            self.Astack = sp.csr_matrix((0, dim))
        self.row_norms = np.sqrt(
            np.asarray(self.Asvec.multiply(self.Asvec).sum(axis=1)).ravel())

    def rescale(self, row_scale: np.ndarray) -> None:
        self._build(row_scale)

    def svec(self, mat: np.ndarray) -> np.ndarray:
        return mat[self.iu] * self.svec_scale

    def unsvec(self, vec: np.ndarray) -> np.ndarray:
        mat = np.zeros((self.dim, self.dim))
        mat[self.iu] = vec / self.svec_scale
        mat = mat + mat.T
        mat[np.diag_indices(self.dim)] *= 0.5
        return mat

    def dot_all(self, mat: np.ndarray) -> np.ndarray:
        """<A_k, mat> for every constraint k (zero rows where inactive)."""
        return self.Asvec @ self.svec(mat)

    def adjoint(self, y: np.ndarray) -> np.ndarray:
        """sum_k y_k A_k as a dense symmetric matrix."""
        return self.unsvec(self.Asvec.T @ y)

    def schur_accumulate(self, m_mat: np.ndarray, w: np.ndarray) -> None:
        """Add <A_k, W A_l W> over this block into the dense Schur matrix."""
        n_active = self.active.size
        if n_active == 0:
            return
        dim = self.dim
        for start in range(0, n_active, _CHUNK):
            stop = min(start + _CHUNK, n_active)
            q = stop - start
            aw = (self.Astack[start * dim : stop * dim] @ w).reshape(q, dim, dim)
            u = np.matmul(w, aw)  # W A_k W, batched over the chunk
            svecs = u[:, self.iu[0], self.iu[1]] * self.svec_scale
            m_mat[self.active[start:stop], :] += (self.Asvec @ svecs.T).T


class _Data:
    """Arrays for the scaled problem plus the scaling bookkeeping."""

    def __init__(self, problem: SdpProblem):
        problem.validate()
        self.dims = list(problem.block_dims)
        self.m = len(problem.constraints)
        self.n_free = problem.n_free

        per_block: List[List[Tuple[int, int, int, float]]] = [[] for _ in self.dims]
        self.D_orig = np.zeros((self.m, self.n_free))
        self.b_orig = np.zeros(self.m)
        for k, row in enumerate(problem.constraints):
            self.b_orig[k] = row.rhs
            for b, i, j, v in row.block_terms:
                per_block[b].append((k, i, j, v))
            for idx, v in row.free_terms:
                self.D_orig[k, idx] += v
        self.blocks = [_BlockData(d, per_block[b], self.m)
                       for b, d in enumerate(self.dims)]

        self.C_orig = [np.zeros((d, d)) for d in self.dims]
        for b, entries in problem.obj_blocks.items():
            for i, j, v in entries:
                if i == j:
                    self.C_orig[b][i, i] += v
                else:
                    self.C_orig[b][i, j] += v
                    self.C_orig[b][j, i] += v
        self.c_free_orig = np.zeros(self.n_free)
        for idx, v in problem.obj_free.items():
            self.c_free_orig[idx] += v

        # Row equilibration to unit 2-norm, objective normalization to unit size.
        norms_sq = np.zeros(self.m)
        for blk in self.blocks:
            norms_sq += blk.row_norms ** 2
        norms_sq += (self.D_orig ** 2).sum(axis=1)
        self.row_scale = 1.0 / np.maximum(np.sqrt(norms_sq), 1e-10)
        for blk in self.blocks:
            blk.rescale(self.row_scale)
        self.D = self.D_orig * self.row_scale[:, None]
        self.b = self.b_orig * self.row_scale

        cnorm = float(np.abs(self.c_free_orig).max(initial=0.0))
        for c in self.C_orig:
            if c.size:
                cnorm = max(cnorm, float(np.abs(c).max(initial=0.0)))
        self.obj_scale = 1.0 / max(1.0, cnorm)
        self.C = [c * self.obj_scale for c in self.C_orig]
        self.c_free = self.c_free_orig * self.obj_scale

        self.norm_b = float(np.linalg.norm(self.b))
        self.norm_c = math.sqrt(sum(float((c ** 2).sum()) for c in self.C)
                                + float((self.c_free ** 2).sum()))
        self.norm_b_orig = float(np.linalg.norm(self.b_orig))
        self.norm_c_orig = math.sqrt(sum(float((c ** 2).sum()) for c in self.C_orig)
                                     + float((self.c_free_orig ** 2).sum()))

    def apply_A(self, xs: List[np.ndarray], u: np.ndarray) -> np.ndarray:
        out = self.D @ u if self.n_free else np.zeros(self.m)
        for blk, x in zip(self.blocks, xs):
            out = out + blk.dot_all(x)
        return out

    def apply_At(self, y: np.ndarray) -> List[np.ndarray]:
        return [blk.adjoint(y) for blk in self.blocks]


def _max_step(l_factor: np.ndarray, direction: np.ndarray) -> float:
    """Largest alpha with X + alpha * dX PSD, where X = L L^T."""
    s = sla.solve_triangular(l_factor, direction, lower=True, check_finite=False)
    s = sla.solve_triangular(l_factor, s.T, lower=True, check_finite=False)
    s = 0.5 * (s + s.T)
    lam_min = float(np.linalg.eigvalsh(s)[0])
    if lam_min >= -1e-14:
        return np.inf
    return -1.0 / lam_min


def _chol_regularized(mat: np.ndarray) -> np.ndarray:
    """Cholesky with a progressive diagonal lift for nearly singular blocks."""
    try:
        return np.linalg.cholesky(mat)
    except np.linalg.LinAlgError:
        pass
    scale = max(float(np.trace(mat)) / mat.shape[0], 1e-300)
    for boost in (1e-14, 1e-12, 1e-10, 1e-8):
        try:
            return np.linalg.cholesky(mat + boost * scale * np.eye(mat.shape[0]))
        except np.linalg.LinAlgError:
            continue
    raise np.linalg.LinAlgError("block is not positive definite")


def _nt_scaling(x: np.ndarray, z: np.ndarray):
    """Returns (g, ginv, lam, lx, lz): W = g g^T satisfies W Z W = X and
    g^-1 X g^-T = g^T Z g = diag(lam)."""
    lx = _chol_regularized(x)
    lz = _chol_regularized(z)
    u_svd, sig, vt = np.linalg.svd(lz.T @ lx)
    sqrt_sig = np.sqrt(sig)
    g = (lx @ vt.T) / sqrt_sig
    ginv = (u_svd.T @ lz.T) / sqrt_sig[:, None]
    return g, ginv, sig, lx, lz


class _Residuals:
    def __init__(self, data: _Data, xs, zs, y, u):
        self.r_p = data.b - data.apply_A(xs, u)
        at_y = data.apply_At(y)
        self.r_d = [aty - c - z for aty, c, z in zip(at_y, data.C, zs)]
        self.r_u = (data.c_free - data.D.T @ y) if data.n_free else np.zeros(0)
        # Original-unit relative residual norms (row scale and objective scale
        # factor out exactly).
        r_p_orig = self.r_p / data.row_scale
        self.pres = float(np.linalg.norm(r_p_orig)) / (1.0 + data.norm_b_orig)
        dsq = sum(float((rd ** 2).sum()) for rd in self.r_d)
        dsq += float((self.r_u ** 2).sum())
        self.dres = (math.sqrt(dsq) / data.obj_scale) / (1.0 + data.norm_c_orig)


def solve(problem: SdpProblem, opts: SolveOptions | None = None) -> SdpSolution:
    """Solve the SDP; deterministic given identical inputs and options."""
    opts = opts or SolveOptions()
    data = _Data(problem)
    m, n_free = data.m, data.n_free
    dims = data.dims

    if m == 0:
        zero_obj = all(np.all(c == 0) for c in data.C) and np.all(data.c_free == 0)
        xs = [np.eye(d) for d in dims]
        status = "optimal" if zero_obj else "unbounded"
        return SdpSolution(status, xs, np.zeros(n_free), np.zeros(0),
                           [np.zeros((d, d)) for d in dims], 0.0, 0.0,
                           0.0, 0.0, 0.0, 0)

    # Cold start: scaled identity blocks.
    xs: List[np.ndarray] = []
    zs: List[np.ndarray] = []
    for blk, c in zip(data.blocks, data.C):
        d = blk.dim
        anorm = float(blk.row_norms.max(initial=0.0))
        xi = max(10.0, math.sqrt(d), d * (1.0 + data.norm_b) / (1.0 + anorm))
        eta = max(10.0, math.sqrt(d), anorm, float(np.linalg.norm(c)))
        xs.append(xi * np.eye(d))
        zs.append(eta * np.eye(d))
    u = np.zeros(n_free)
    y = np.zeros(m)

    total_dim = max(1, sum(dims))
    history: List[Dict[str, float]] = []
    status = "max_iterations"
    message = ""
    iteration = 0
    strikes = 0

    for iteration in range(1, opts.max_iterations + 1):
        res = _Residuals(data, xs, zs, y, u)
        gap = sum(float((x * z).sum()) for x, z in zip(xs, zs))
        mu = gap / total_dim
        pobj = float(data.c_free @ u) if n_free else 0.0
        pobj += sum(float((c * x).sum()) for c, x in zip(data.C, xs))
        dobj = float(data.b @ y)
        # Convergence is measured on original-unit objectives (theta factors out).
        pobj_orig = pobj / data.obj_scale
        dobj_orig = dobj / data.obj_scale
        rel_gap = abs(pobj_orig - dobj_orig) / (1.0 + abs(pobj_orig) + abs(dobj_orig))
        history.append({"iter": float(iteration), "pres": res.pres,
                        "dres": res.dres, "rel_gap": rel_gap, "mu": mu})
        if opts.verbose:
            print(f"  it {iteration:3d}  pres {res.pres:9.2e}  dres {res.dres:9.2e}"
                  f"  gap {rel_gap:9.2e}  mu {mu:9.2e}")

        if res.pres <= opts.tol_feas and res.dres <= opts.tol_feas \
                and rel_gap <= opts.tol_gap:
            status = "optimal"
            break

        # Dual improving ray (Farkas): normalize so b . y_ray = -1.
        if dobj < -1e-10:
            ynorm = -dobj
            ray_sq = sum(float(((rdm + c) ** 2).sum())
                         for rdm, c in zip(res.r_d, data.C))
            if n_free:
                ray_sq += float(((data.D.T @ y) ** 2).sum())
            ray_res = math.sqrt(ray_sq) / ynorm
            if ray_res <= 1e-7:
                status = "infeasible"
                message = "dual improving ray certifies primal infeasibility"
                break

        # Primal improving ray: normalize so the ray objective is 1.
        if pobj > 1e5 * (1.0 + data.norm_b):
            ray_res = float(np.linalg.norm(data.b - res.r_p)) / pobj
            if ray_res <= 1e-7:
                status = "unbounded"
                message = "primal improving ray certifies an unbounded objective"
                break

        if not all(map(math.isfinite, (res.pres, res.dres, mu))) or res.pres > 1e10:
            status = "numerical_failure"
            message = "iterates diverged"
            break

        try:
            scalings = [_nt_scaling(x, z) for x, z in zip(xs, zs)]
        except np.linalg.LinAlgError:
            status = "numerical_failure"
            message = "block iterate lost positive definiteness"
            break
        ws = [g @ g.T for g, *_ in scalings]

        m_mat = np.zeros((m, m))
        for blk, w in zip(data.blocks, ws):
            blk.schur_accumulate(m_mat, w)

        base_reg = 1e-13 * max(1.0, float(np.trace(m_mat)) / m)
        chol = None
        for attempt in range(6):
            try:
                chol = sla.cholesky(m_mat + (base_reg * 10.0 ** attempt) * np.eye(m),
                                    lower=True, check_finite=False)
                break
            except np.linalg.LinAlgError:
                continue
        if chol is None:
            status = "numerical_failure"
            message = "Schur complement could not be factored"
            break

        if n_free:
            t_mat = sla.solve_triangular(chol, data.D, lower=True, check_finite=False)
            r_t = np.linalg.qr(t_mat, mode="r")
            r_diag = np.abs(np.diag(r_t))
            if r_diag.size and (not np.all(np.isfinite(r_diag)) or r_diag.min() == 0.0):
                status = "numerical_failure"
                message = "free-variable columns are numerically dependent"
                break
        else:
            t_mat = r_t = None

        def solve_saddle_once(g1: np.ndarray, g2: np.ndarray):
            w_vec = sla.solve_triangular(chol, g1, lower=True, check_finite=False)
            if n_free:
                rhs = g2 - t_mat.T @ w_vec
                du = sla.solve_triangular(
                    r_t, sla.solve_triangular(r_t.T, rhs, lower=True,
                                              check_finite=False),
                    lower=False, check_finite=False)
                dy = sla.solve_triangular(chol.T, w_vec + t_mat @ du,
                                          lower=False, check_finite=False)
            else:
                du = np.zeros(0)
                dy = sla.solve_triangular(chol.T, w_vec, lower=False,
                                          check_finite=False)
            return dy, du

        def solve_saddle(g1: np.ndarray, g2: np.ndarray):
            """Solve M dy - D du = g1, D^T dy = g2, with one refinement step."""
            dy, du = solve_saddle_once(g1, g2)
            res1 = g1 - (m_mat @ dy - (data.D @ du if n_free else 0.0))
            res2 = (g2 - data.D.T @ dy) if n_free else np.zeros(0)
            scale = max(1.0, float(np.linalg.norm(g1)), float(np.linalg.norm(g2)))
            if max(float(np.linalg.norm(res1)), float(np.linalg.norm(res2))) \
                    > 1e-13 * scale:
                cy, cu = solve_saddle_once(res1, res2)
                dy = dy + cy
                if n_free:
                    du = du + cu
            return dy, du

        def directions(rc_list: List[np.ndarray]):
            g1 = -res.r_p.copy()
            for blk, rc, rd, w in zip(data.blocks, rc_list, res.r_d, ws):
                g1 += blk.dot_all(rc) - blk.dot_all(w @ rd @ w)
            dy, du = solve_saddle(g1, res.r_u)
            dzs, dxs = [], []
            for blk, rc, rd, w in zip(data.blocks, rc_list, res.r_d, ws):
                dz = blk.adjoint(dy) + rd
                dz = 0.5 * (dz + dz.T)
                dx = rc - w @ dz @ w
                dxs.append(0.5 * (dx + dx.T))
                dzs.append(dz)
            return dy, du, dxs, dzs

        # Predictor: affine direction, Rc = -X.  A single common step length
        # keeps complementarity from collapsing ahead of feasibility.
        dy_a, du_a, dx_a, dz_a = directions([-x for x in xs])

        a_aff = 1.0
        for (g, ginv, lam, lx, lz), dx, dz in zip(scalings, dx_a, dz_a):
            a_aff = min(a_aff, _max_step(lx, dx), _max_step(lz, dz))
        a_aff = min(1.0, opts.step_fraction * a_aff)
        gap_aff = sum(float(((x + a_aff * dx) * (z + a_aff * dz)).sum())
                      for x, dx, z, dz in zip(xs, dx_a, zs, dz_a))
        sigma = min(0.9999, max(1e-8, (max(gap_aff, 0.0) / gap) ** 3))

        # Corrector with Mehrotra second-order term, built in scaled space.
        rc_comb = []
        for (g, ginv, lam, lx, lz), dx, dz in zip(scalings, dx_a, dz_a):
            dxh = ginv @ dx @ ginv.T
            dzh = g.T @ dz @ g
            cross = dxh @ dzh
            n_mat = -0.5 * (cross + cross.T)
            n_mat[np.diag_indices_from(n_mat)] += sigma * mu - lam ** 2
            rc_hat = n_mat / (0.5 * (lam[:, None] + lam[None, :]))
            rc_comb.append(g @ rc_hat @ g.T)

        dy, du, dxs, dzs = directions(rc_comb)

        alpha = 1.0
        for (g, ginv, lam, lx, lz), dx, dz in zip(scalings, dxs, dzs):
            alpha = min(alpha, _max_step(lx, dx), _max_step(lz, dz))
        alpha = min(1.0, opts.step_fraction * alpha)

        if alpha < 1e-10:
            strikes += 1
            if strikes >= 3:
                status = "numerical_failure"
                message = "step lengths collapsed"
                break
        else:
            strikes = 0

        # Take the step only if both sides stay numerically positive definite;
        # back off on floating-point boundary grazes.
        for _ in range(30):
            ok = True
            for x, z, dx, dz in zip(xs, zs, dxs, dzs):
                xn = x + alpha * dx
                zn = z + alpha * dz
                try:
                    np.linalg.cholesky(0.5 * (xn + xn.T))
                    np.linalg.cholesky(0.5 * (zn + zn.T))
                except np.linalg.LinAlgError:
                    ok = False
                    break
            if ok:
                break
            alpha *= 0.8
        for idx in range(len(xs)):
            xn = xs[idx] + alpha * dxs[idx]
            zn = zs[idx] + alpha * dzs[idx]
            xs[idx] = 0.5 * (xn + xn.T)
            zs[idx] = 0.5 * (zn + zn.T)
        if n_free:
            u = u + alpha * du
        y = y + alpha * dy

    if status == "optimal" and opts.polish:
        xs, u = _polish(data, xs, u)

    return _package(data, status, xs, zs, y, u, iteration, history, message)


def _polish(data: _Data, xs: List[np.ndarray], u: np.ndarray):
    """Least-norm correction (dX, du) restoring A(X + dX) + D(u + du) = b."""
    m = data.m
    r_p = data.b - data.apply_A(xs, u)
    gram = np.zeros((m, m))
    for blk in data.blocks:
        blk.schur_accumulate(gram, np.eye(blk.dim))
    if data.n_free:
        gram += data.D @ data.D.T
    gram[np.diag_indices(m)] += 1e-12 * max(1.0, float(np.trace(gram)) / m)
    try:
        w = sla.cho_solve(sla.cho_factor(gram, lower=True, check_finite=False), r_p,
                          check_finite=False)
    except np.linalg.LinAlgError:
        return xs, u
    xs_new = [x + blk.adjoint(w) for blk, x in zip(data.blocks, xs)]
    u_new = (u + data.D.T @ w) if data.n_free else u
    return xs_new, u_new


def _package(data: _Data, status: str, xs: List[np.ndarray], zs: List[np.ndarray],
             y: np.ndarray, u: np.ndarray, iterations: int,
             history: List[Dict[str, float]], message: str) -> SdpSolution:
    # Map multipliers back to original data units: scaled rows A' = S A and
    # scaled objective C' = theta C give y_orig = S y' / theta, Z_orig = Z'/theta.
    y_orig = (data.row_scale * y) / data.obj_scale
    zs_orig = [z / data.obj_scale for z in zs]
    xs = [0.5 * (x + x.T) for x in xs]

    pobj = float(data.c_free_orig @ u) if data.n_free else 0.0
    pobj += sum(float((c * x).sum()) for c, x in zip(data.C_orig, xs))
    dobj = float(data.b_orig @ y_orig)

    res = _Residuals(data, xs, zs, y, u)
    rel_gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
    return SdpSolution(
        status=status,
        block_values=xs,
        free_values=u.copy(),
        dual_values=y_orig,
        dual_slacks=zs_orig,
        primal_objective=pobj,
        dual_objective=dobj,
        primal_residual=res.pres,
        dual_residual=res.dres,
        rel_gap=rel_gap,
        iterations=iterations,
        history=history,
        message=message,
    )
