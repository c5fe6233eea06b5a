"""Semidefinite / linear feasibility and optimization over Hermitian variables.

The modeling layer speaks the package's language: complex Hermitian PSD
matrix variables (optionally confined to a linear subspace given by an
orthonormal Hermitian basis), nonnegative or free real vector variables,
affine operator- and scalar-valued equality constraints, scalar upper
bounds, and a real affine objective to minimize.

Compilation lowers everything to a cone LP for cvxopt's conelp
(primal-dual interior point with Nesterov-Todd scaling):

* every complex Hermitian n x n PSD constraint is realized as the real
  symmetric 2n x 2n block [[Re,-Im],[Im,Re]];
* the full affine equality system is reduced by SVD to an equivalent
  full-row-rank system (redundant constraints are the rule here, not the
  exception), with an inconsistency certificate when the affine part
  alone is contradictory;
* feasibility questions are decided by slack maximization: maximize
  lambda with every PSD variable shifted to W >= lambda*1 (and every
  nonneg coordinate to q >= lambda); feasible iff lambda* >= -1e-7,
  infeasible iff the dual bound certifies lambda < 1e-6 is impossible,
  anything in between is reported as numerical-failure rather than a
  guess.

Equality multipliers are mapped back through the SVD so SolveReport
carries one dual object per declared constraint.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from cvxopt import matrix as _cvxmat
from cvxopt import solvers as _cvxsolvers

from .errors import IllPosedProgramError, ValidationError

RESIDUAL_TOL = 1e-7           # status=optimal promises residuals below this
FEASIBLE_SLACK_TOL = 1e-7     # lambda* >= -this  =>  feasible
INFEAS_CERT_TOL = 1e-6        # dual violation >= this  =>  infeasible
DEFAULT_MAXITER = 200
LAMBDA_CAP = 10.0
MAXITER_ENV = "CAUSALIS_SOLVER_MAXITER"

# -- Hermitian <-> real coordinate conventions --------------------------------


def herm_basis_size(n: int) -> int:
    return n * n


def herm_to_vec(h: np.ndarray) -> np.ndarray:
    """Coordinates of Hermitian matrices in the standard orthonormal basis.

    Order: n diagonal entries, then sqrt(2)*Re of the strict upper
    triangle (row-major), then sqrt(2)*Im of the same entries.  Accepts
    a stack (..., n, n) and returns (..., n*n) real.
    """
    n = h.shape[-1]
    iu, ju = np.triu_indices(n, 1)
    diag = np.real(h[..., np.arange(n), np.arange(n)])
    off = h[..., iu, ju]
    return np.concatenate(
        [diag, np.sqrt(2.0) * np.real(off), np.sqrt(2.0) * np.imag(off)], axis=-1
    )


def vec_to_herm(v: np.ndarray, n: int) -> np.ndarray:
    """Inverse of :func:`herm_to_vec` (single vector or stack)."""
    v = np.asarray(v, dtype=float)
    iu, ju = np.triu_indices(n, 1)
    k = len(iu)
    out = np.zeros(v.shape[:-1] + (n, n), dtype=np.complex128)
    out[..., np.arange(n), np.arange(n)] = v[..., :n]
    upper = (v[..., n : n + k] + 1j * v[..., n + k :]) / np.sqrt(2.0)
    out[..., iu, ju] = upper
    out[..., ju, iu] = np.conj(upper)
    return out


def real_embed(m: np.ndarray) -> np.ndarray:
    """Complex (stack of) n x n -> real 2n x 2n [[Re,-Im],[Im,Re]].

    Hermitian input gives a symmetric output with the same eigenvalues,
    each doubled in multiplicity, so PSD is preserved both ways.
    """
    x, y = np.real(m), np.imag(m)
    top = np.concatenate([x, -y], axis=-1)
    bot = np.concatenate([y, x], axis=-1)
    return np.concatenate([top, bot], axis=-2)


def real_unembed(p: np.ndarray) -> np.ndarray:
    """Adjoint-side map: real symmetric 2n x 2n -> complex Hermitian n x n.

    For Hermitian M and symmetric P:  Tr(real_embed(M) @ P) = 2 Tr(M @ Z)
    with Z = real_unembed(P).
    """
    n = p.shape[-1] // 2
    p11 = p[..., :n, :n]
    p12 = p[..., :n, n:]
    p21 = p[..., n:, :n]
    p22 = p[..., n:, n:]
    return (p11 + p22) / 2 + 1j * (p21 - p12) / 2


# -- program model -------------------------------------------------------------


@dataclass
class _MatrixVar:
    name: str
    side: int
    psd: bool
    basis: np.ndarray | None  # (m, side, side) orthonormal Hermitian stack

    @property
    def ncoords(self) -> int:
        return self.basis.shape[0] if self.basis is not None else self.side * self.side

    def basis_stack(self) -> np.ndarray:
        if self.basis is not None:
            return self.basis
        eye = np.eye(self.side * self.side)
        return vec_to_herm(eye, self.side)

    def value(self, t: np.ndarray) -> np.ndarray:
        if self.basis is not None:
            return np.einsum("k,kij->ij", t, self.basis)
        return vec_to_herm(t, self.side)

    def coords_of(self, e: np.ndarray) -> np.ndarray:
        """Row of pairing coefficients t -> Re Tr(E @ M(t)) for Hermitian E."""
        if self.basis is not None:
            return np.real(np.einsum("kij,ji->k", self.basis, e))
        return herm_to_vec((e + e.conj().T) / 2)


@dataclass
class _VecVar:
    name: str
    size: int
    nonneg: bool


@dataclass
class _OpEquality:
    matrix_terms: list[tuple[str, Callable[[np.ndarray], np.ndarray]]]
    scalar_terms: list[tuple[str, np.ndarray]]  # (size, p, p) coefficient stacks
    rhs: np.ndarray
    tag: str


@dataclass
class _ScalarAffine:
    matrix_terms: list[tuple[str, np.ndarray]]  # pairing matrices E: Re Tr(E M)
    vector_terms: list[tuple[str, np.ndarray]]  # coefficient rows
    constant: float
    tag: str = ""


class ConicProgram:
    """Container for variables, equality constraints, bounds, objective."""

    def __init__(self) -> None:
        self._matvars: dict[str, _MatrixVar] = {}
        self._vecvars: dict[str, _VecVar] = {}
        self._op_eqs: list[_OpEquality] = []
        self._sc_eqs: list[tuple[_ScalarAffine, float]] = []
        self._upper_bounds: list[tuple[_ScalarAffine, float]] = []
        self.objective: _ScalarAffine | None = None

    # -- variables ------------------------------------------------------------

    def add_psd_var(self, name: str, side: int, basis: np.ndarray | None = None) -> None:
        self._add_matrix(name, side, True, basis)

    def add_free_matrix_var(self, name: str, side: int, basis: np.ndarray | None = None) -> None:
        self._add_matrix(name, side, False, basis)

    def _add_matrix(self, name: str, side: int, psd: bool, basis) -> None:
        if name in self._matvars or name in self._vecvars:
            raise ValidationError(f"variable {name!r} declared twice")
        if basis is not None:
            basis = np.asarray(basis, dtype=np.complex128)
            if basis.ndim != 3 or basis.shape[1:] != (side, side):
                raise ValidationError(f"basis for {name!r} must be (m,{side},{side})")
        self._matvars[name] = _MatrixVar(name, side, psd, basis)

    def add_scalar_var(self, name: str, nonneg: bool = False) -> None:
        self.add_vector_var(name, 1, nonneg=nonneg)

    def add_vector_var(self, name: str, size: int, nonneg: bool = False) -> None:
        if name in self._matvars or name in self._vecvars:
            raise ValidationError(f"variable {name!r} declared twice")
        if size < 1:
            raise ValidationError(f"vector variable {name!r} has size {size}")
        self._vecvars[name] = _VecVar(name, size, nonneg)

    # -- constraints ------------------------------------------------------------

    def add_op_equality(
        self,
        matrix_terms: Sequence[tuple[str, Callable[[np.ndarray], np.ndarray] | float]],
        rhs: np.ndarray,
        scalar_terms: Sequence[tuple[str, np.ndarray]] = (),
        tag: str = "",
    ) -> None:
        """sum_v L_v(M_v) + sum_s C_s . s = rhs, all targets Hermitian.

        ``L_v`` is a Hermiticity-preserving real-linear map given as a
        callable on matrices, or a real coefficient acting by scaling.
        ``C_s`` is a stack of Hermitian coefficient matrices, one per
        coordinate of the scalar/vector variable.
        """
        rhs = np.asarray(rhs, dtype=np.complex128)
        if rhs.ndim != 2 or rhs.shape[0] != rhs.shape[1]:
            raise ValidationError("op equality rhs must be a square matrix")
        if np.max(np.abs(rhs - rhs.conj().T)) > 1e-12:
            raise ValidationError("op equality rhs is not Hermitian")
        terms = []
        for name, f in matrix_terms:
            if name not in self._matvars:
                raise ValidationError(f"unknown matrix variable {name!r}")
            if not callable(f):
                c = float(f)
                f = (lambda cc: (lambda m: cc * m))(c)
            terms.append((name, f))
        sterms = []
        for name, cstack in scalar_terms:
            if name not in self._vecvars:
                raise ValidationError(f"unknown scalar variable {name!r}")
            cstack = np.asarray(cstack, dtype=np.complex128)
            if cstack.ndim == 2:
                cstack = cstack[None, :, :]
            if cstack.shape[0] != self._vecvars[name].size:
                raise ValidationError(f"coefficient stack size mismatch for {name!r}")
            sterms.append((name, cstack))
        self._op_eqs.append(_OpEquality(terms, sterms, rhs, tag))

    def _scalar_affine(self, matrix_terms, vector_terms) -> _ScalarAffine:
        mts = []
        for name, e in matrix_terms:
            if name not in self._matvars:
                raise ValidationError(f"unknown matrix variable {name!r}")
            mts.append((name, np.asarray(e, dtype=np.complex128)))
        vts = []
        for name, row in vector_terms:
            if name not in self._vecvars:
                raise ValidationError(f"unknown scalar variable {name!r}")
            row = np.atleast_1d(np.asarray(row, dtype=float))
            if row.shape != (self._vecvars[name].size,):
                raise ValidationError(f"coefficient row shape mismatch for {name!r}")
            vts.append((name, row))
        return _ScalarAffine(mts, vts, 0.0)

    def add_scalar_equality(
        self,
        rhs: float,
        matrix_terms: Sequence[tuple[str, np.ndarray]] = (),
        vector_terms: Sequence[tuple[str, float | np.ndarray]] = (),
        tag: str = "",
    ) -> None:
        """sum_v Re Tr(E_v M_v) + sum_s c_s . s = rhs."""
        aff = self._scalar_affine(matrix_terms, vector_terms)
        aff.tag = tag
        self._sc_eqs.append((aff, float(rhs)))

    def add_upper_bound(
        self,
        rhs: float,
        matrix_terms: Sequence[tuple[str, np.ndarray]] = (),
        vector_terms: Sequence[tuple[str, float | np.ndarray]] = (),
    ) -> None:
        """sum_v Re Tr(E_v M_v) + sum_s c_s . s <= rhs."""
        self._upper_bounds.append((self._scalar_affine(matrix_terms, vector_terms), float(rhs)))

    def set_objective(
        self,
        matrix_terms: Sequence[tuple[str, np.ndarray]] = (),
        vector_terms: Sequence[tuple[str, float | np.ndarray]] = (),
        constant: float = 0.0,
    ) -> None:
        """Minimize sum_v Re Tr(E_v M_v) + sum_s c_s . s + constant."""
        aff = self._scalar_affine(matrix_terms, vector_terms)
        aff.constant = float(constant)
        self.objective = aff


@dataclass
class SolveReport:
    """Outcome of one conic solve.

    status=optimal promises all residuals <= 1e-7; status=infeasible
    carries a Farkas-type certificate with violation >= 1e-6 in
    ``certificate``; anything the solver could not settle at those
    tolerances is numerical-failure.
    """

    status: str
    objective_value: float | None
    primal: dict[str, np.ndarray | float]
    dual: dict
    residuals: tuple[float, float, float]  # (primal_eq, dual_eq, gap)
    slack: float | None = None             # feasibility margin lambda*
    certificate: dict | None = None
    dual_objective: float | None = None
    iterations: int = 0
    note: str = ""


# -- compilation ---------------------------------------------------------------


@dataclass
class _Compiled:
    nx: int
    offsets: dict[str, int]
    A: np.ndarray
    b: np.ndarray
    eq_slices: list[tuple[str, slice, int]]  # (kind:op/scalar + tag, rows, side)
    G_l: np.ndarray
    h_l: np.ndarray
    s_blocks: list[tuple[str, np.ndarray, np.ndarray]]  # (var name, Gblock, hblock)
    c: np.ndarray
    lam_index: int | None


def _compile(prog: ConicProgram, feasibility: bool) -> _Compiled:
    offsets: dict[str, int] = {}
    nx = 0
    for v in prog._matvars.values():
        offsets[v.name] = nx
        nx += v.ncoords
    for v in prog._vecvars.values():
        offsets[v.name] = nx
        nx += v.size
    lam_index = None
    if feasibility:
        lam_index = nx
        nx += 1

    # equality system
    rows: list[np.ndarray] = []
    rhs: list[np.ndarray] = []
    eq_slices: list[tuple[str, slice, int]] = []
    cursor = 0
    for i, eq in enumerate(prog._op_eqs):
        p = eq.rhs.shape[0]
        block = np.zeros((p * p, nx))
        for name, f in eq.matrix_terms:
            var = prog._matvars[name]
            off = offsets[name]
            stack = var.basis_stack()
            images = np.empty((var.ncoords, p, p), dtype=np.complex128)
            for k in range(var.ncoords):
                img = np.asarray(f(stack[k]), dtype=np.complex128)
                if img.shape != (p, p):
                    raise ValidationError(
                        f"term for {name!r} maps to shape {img.shape}, constraint needs {(p, p)}"
                    )
                images[k] = img
            block[:, off : off + var.ncoords] += herm_to_vec(images).T
        for name, cstack in eq.scalar_terms:
            off = offsets[name]
            block[:, off : off + cstack.shape[0]] += herm_to_vec(cstack).T
        rows.append(block)
        rhs.append(herm_to_vec(eq.rhs))
        eq_slices.append((eq.tag or f"op-eq-{i}", slice(cursor, cursor + p * p), p))
        cursor += p * p
    for i, (aff, r) in enumerate(prog._sc_eqs):
        row = np.zeros((1, nx))
        for name, e in aff.matrix_terms:
            var = prog._matvars[name]
            row[0, offsets[name] : offsets[name] + var.ncoords] += var.coords_of(e)
        for name, coef in aff.vector_terms:
            sz = prog._vecvars[name].size
            row[0, offsets[name] : offsets[name] + sz] += coef
        rows.append(row)
        rhs.append(np.array([r]))
        eq_slices.append((aff.tag or f"scalar-eq-{i}", slice(cursor, cursor + 1), 0))
        cursor += 1
    A = np.vstack(rows) if rows else np.zeros((0, nx))
    b = np.concatenate(rhs) if rhs else np.zeros(0)

    # linear cone rows: nonneg coords (shifted by lambda in feasibility mode),
    # then explicit upper bounds, then the lambda cap
    lrows: list[np.ndarray] = []
    lh: list[float] = []
    for v in prog._vecvars.values():
        if not v.nonneg:
            continue
        off = offsets[v.name]
        for j in range(v.size):
            row = np.zeros(nx)
            row[off + j] = -1.0
            if lam_index is not None:
                row[lam_index] = 1.0
            lrows.append(row)
            lh.append(0.0)
    for aff, bound in prog._upper_bounds:
        row = np.zeros(nx)
        for name, e in aff.matrix_terms:
            var = prog._matvars[name]
            row[offsets[name] : offsets[name] + var.ncoords] += var.coords_of(e)
        for name, coef in aff.vector_terms:
            sz = prog._vecvars[name].size
            row[offsets[name] : offsets[name] + sz] += coef
        lrows.append(row)
        lh.append(bound)
    if lam_index is not None:
        row = np.zeros(nx)
        row[lam_index] = 1.0
        lrows.append(row)
        lh.append(LAMBDA_CAP)
    G_l = np.vstack(lrows) if lrows else np.zeros((0, nx))
    h_l = np.asarray(lh)

    # semidefinite blocks, one per PSD matrix variable
    s_blocks: list[tuple[str, np.ndarray, np.ndarray]] = []
    for v in prog._matvars.values():
        if not v.psd:
            continue
        n2 = 2 * v.side
        emb = real_embed(v.basis_stack())            # (m, 2n, 2n)
        gblock = np.zeros((n2 * n2, nx))
        gblock[:, offsets[v.name] : offsets[v.name] + v.ncoords] = -emb.reshape(
            v.ncoords, n2 * n2
        ).T
        if lam_index is not None:
            gblock[:, lam_index] = np.eye(n2).reshape(-1)
        s_blocks.append((v.name, gblock, np.zeros(n2 * n2)))

    # objective
    c = np.zeros(nx)
    if feasibility:
        c[lam_index] = -1.0
    elif prog.objective is not None:
        for name, e in prog.objective.matrix_terms:
            var = prog._matvars[name]
            c[offsets[name] : offsets[name] + var.ncoords] += var.coords_of(e)
        for name, coef in prog.objective.vector_terms:
            sz = prog._vecvars[name].size
            c[offsets[name] : offsets[name] + sz] += coef

    return _Compiled(nx, offsets, A, b, eq_slices, G_l, h_l, s_blocks, c, lam_index)


def _reduce_equalities(A: np.ndarray, b: np.ndarray):
    """Row-scale, SVD-reduce to orthonormal rows; detect inconsistency.

    Returns (A_red, b_red, recover, farkas) where ``recover`` maps
    reduced multipliers back to one multiplier per original row, and
    ``farkas`` is a certificate vector when the system is contradictory.
    """
    nrows = A.shape[0]
    if nrows == 0:
        return A, b, (lambda y: np.zeros(0)), None
    norms = np.linalg.norm(A, axis=1)
    floor = 1e-12 * max(1.0, float(norms.max(initial=0.0)))
    weak = norms <= floor
    # a numerically-zero row demands b = 0; anything else is a contradiction
    bad = weak & (np.abs(b) > 1e-9)
    if bad.any():
        i = int(np.argmax(bad))
        y = np.zeros(nrows)
        y[i] = 1.0 / b[i]
        return None, None, None, y
    strong = ~weak
    sn = norms[strong]
    An = A[strong] / sn[:, None]
    bn = b[strong] / sn
    if An.shape[0] == 0:
        return np.zeros((0, A.shape[1])), np.zeros(0), (lambda y: np.zeros(nrows)), None
    u, s, vt = np.linalg.svd(An, full_matrices=False)
    tol = max(An.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    r = int(np.sum(s > max(tol, 1e-12)))
    resid = bn - u[:, :r] @ (u[:, :r].T @ bn)
    rnorm = np.linalg.norm(resid)
    if rnorm > 1e-9 * (1.0 + np.linalg.norm(bn)):
        ys = resid / (resid @ bn)  # A^T y = 0, b^T y = 1 on the scaled rows
        y = np.zeros(nrows)
        y[strong] = ys / sn
        return None, None, None, y
    A_red = vt[:r]
    b_red = (u[:, :r].T @ bn) / s[:r]

    def recover(y_red: np.ndarray) -> np.ndarray:
        y = np.zeros(nrows)
        if r:
            y[strong] = (u[:, :r] @ (y_red / s[:r])) / sn
        return y

    return A_red, b_red, recover, None


def _decode_duals(prog, comp, y_full):
    out = {}
    for tag, sl, side in comp.eq_slices:
        if side:
            out[tag] = vec_to_herm(y_full[sl], side)
        else:
            out[tag] = float(y_full[sl][0])
    return out


def _decode_primal(prog: ConicProgram, comp: _Compiled, x: np.ndarray) -> dict:
    primal: dict[str, np.ndarray | float] = {}
    for v in prog._matvars.values():
        t = x[comp.offsets[v.name] : comp.offsets[v.name] + v.ncoords]
        primal[v.name] = v.value(t)
    for v in prog._vecvars.values():
        val = x[comp.offsets[v.name] : comp.offsets[v.name] + v.size]
        primal[v.name] = float(val[0]) if v.size == 1 else val
    return primal


def _maxiter() -> int:
    raw = os.environ.get(MAXITER_ENV, "")
    try:
        return max(1, int(raw)) if raw else DEFAULT_MAXITER
    except ValueError:
        return DEFAULT_MAXITER


def solve(prog: ConicProgram) -> SolveReport:
    """Solve the program; no objective means a slack-maximization feasibility run."""
    if not prog._matvars and not prog._vecvars:
        raise IllPosedProgramError("program has no variables")
    feasibility = prog.objective is None
    comp = _compile(prog, feasibility)

    red = _reduce_equalities(comp.A, comp.b)
    if red[3] is not None:
        y = red[3]
        return SolveReport(
            status="infeasible",
            objective_value=None,
            primal={},
            dual={},
            residuals=(np.inf, 0.0, 0.0),
            slack=None,
            certificate={
                "kind": "equality-farkas",
                "multipliers": _decode_duals(prog, comp, y),
                "violation": 1.0,
            },
            note="affine equality system is inconsistent",
        )
    A_red, b_red, recover, _ = red

    G = np.vstack([comp.G_l] + [gb for _, gb, _ in comp.s_blocks])
    h = np.concatenate([comp.h_l] + [hb for _, _, hb in comp.s_blocks])
    if G.shape[0] == 0:
        raise IllPosedProgramError("program has no conic constraints and no bounds")
    unused = np.where(~(np.any(G != 0, axis=0) | np.any(comp.A != 0, axis=0)))[0]
    if unused.size:
        raise IllPosedProgramError(f"variable coordinates {unused[:4].tolist()} appear nowhere")

    dims = {
        "l": comp.G_l.shape[0],
        "q": [],
        "s": [2 * v.side for v in prog._matvars.values() if v.psd],
    }
    options = {
        "show_progress": False,
        "maxiters": _maxiter(),
        "abstol": 1e-9,
        "reltol": 1e-9,
        "feastol": 1e-9,
    }
    kwargs = {}
    if A_red.shape[0]:
        kwargs["A"] = _cvxmat(A_red)
        kwargs["b"] = _cvxmat(b_red)
    try:
        sol = _cvxsolvers.conelp(
            _cvxmat(comp.c), _cvxmat(G), _cvxmat(h), dims, options=options, **kwargs
        )
    except (ValueError, ZeroDivisionError, ArithmeticError) as exc:
        return SolveReport(
            status="numerical-failure",
            objective_value=None,
            primal={},
            dual={},
            residuals=(np.inf, np.inf, np.inf),
            note=f"solver raised {type(exc).__name__}: {exc}",
        )

    status = sol["status"]
    iters = int(sol.get("iterations", 0))
    const = prog.objective.constant if (prog.objective and not feasibility) else 0.0

    def cone_duals(zvec):
        duals = {}
        pos = comp.G_l.shape[0]
        for name, gb, _ in comp.s_blocks:
            side2 = int(np.sqrt(gb.shape[0]))
            blk = np.asarray(zvec[pos : pos + side2 * side2]).reshape(side2, side2, order="F")
            duals[name] = real_unembed((blk + blk.T) / 2)
            pos += side2 * side2
        return duals

    if status in ("optimal", "unknown") and sol["x"] is not None:
        x = np.asarray(sol["x"]).ravel()
        z = np.asarray(sol["z"]).ravel() if sol["z"] is not None else np.zeros(G.shape[0])
        y_red = np.asarray(sol["y"]).ravel() if (A_red.shape[0] and sol["y"] is not None) else np.zeros(0)
        y_full = recover(y_red)
        pobj = float(comp.c @ x)
        dobj = float(-h @ z - (b_red @ y_red if b_red.size else 0.0))
        prim_res = float(np.max(np.abs(comp.A @ x - comp.b))) if comp.A.shape[0] else 0.0
        dual_res = float(
            np.max(np.abs(G.T @ z + (A_red.T @ y_red if y_red.size else 0.0) + comp.c))
        )
        gap = abs(pobj - dobj) / (1.0 + abs(pobj))
        residuals = (prim_res, dual_res, gap)
        ok = max(residuals) <= RESIDUAL_TOL
        report = SolveReport(
            status="optimal" if ok else "numerical-failure",
            objective_value=pobj + const,
            primal=_decode_primal(prog, comp, x),
            dual={"equalities": _decode_duals(prog, comp, y_full), "cones": cone_duals(z)},
            residuals=residuals,
            dual_objective=dobj + const,
            iterations=iters,
            note="" if ok else f"solver status {status}, residuals {residuals}",
        )
        if feasibility and report.status == "optimal":
            lam = float(x[comp.lam_index])
            report.slack = lam
            report.objective_value = None
            if lam >= -FEASIBLE_SLACK_TOL:
                pass  # feasible
            elif dobj >= INFEAS_CERT_TOL:
                # weak duality: lambda <= -dobj for every point of the affine
                # set, so dobj >= 1e-6 certifies infeasibility with margin
                report.status = "infeasible"
                report.certificate = {
                    "kind": "slack-bound",
                    "violation": float(dobj),
                    "multipliers": report.dual["equalities"],
                    "cones": report.dual["cones"],
                }
            else:
                report.status = "numerical-failure"
                report.note = f"slack {lam} in the undecidable band"
        return report

    if status == "primal infeasible":
        z = np.asarray(sol["z"]).ravel()
        y_red = np.asarray(sol["y"]).ravel() if A_red.shape[0] else np.zeros(0)
        y_full = recover(y_red)
        viol = float(-(h @ z + (b_red @ y_red if y_red.size else 0.0)))
        cert_res = float(
            np.max(np.abs(G.T @ z + (A_red.T @ y_red if y_red.size else 0.0)))
        )
        if viol >= INFEAS_CERT_TOL and cert_res <= 1e-6:
            return SolveReport(
                status="infeasible",
                objective_value=None,
                primal={},
                dual={"equalities": _decode_duals(prog, comp, y_full), "cones": cone_duals(z)},
                residuals=(np.inf, cert_res, 0.0),
                certificate={
                    "kind": "farkas",
                    "violation": viol,
                    "multipliers": _decode_duals(prog, comp, y_full),
                    "cones": cone_duals(z),
                },
                iterations=iters,
            )
        return SolveReport(
            status="numerical-failure",
            objective_value=None,
            primal={},
            dual={},
            residuals=(np.inf, cert_res, np.inf),
            iterations=iters,
            note=f"weak infeasibility certificate (violation {viol})",
        )

    return SolveReport(
        status="numerical-failure",
        objective_value=None,
        primal={},
        dual={},
        residuals=(np.inf, np.inf, np.inf),
        iterations=iters,
        note=f"solver status {status!r}",
    )


def solve_lp(prog: ConicProgram) -> SolveReport:
    """Same contract as :func:`solve`, restricted to scalar/vector variables."""
    if prog._matvars:
        raise ValidationError("solve_lp only accepts scalar and vector variables")
    return solve(prog)


def refine_primal(prog: ConicProgram, primal: dict) -> dict:
    """Minimum-norm projection of a solution onto the equality rows.

    Interior-point answers satisfy equalities only to ~1e-8, which is
    too loose when downstream code rebuilds the right-hand sides and
    compares at 1e-9. The correction has the size of the residual, so a
    strictly interior point stays inside every cone; boundary solutions
    may pick up eigenvalues of that same order, which callers must
    tolerate.
    """
    comp = _compile(prog, prog.objective is None)
    x = np.zeros(comp.nx)
    for v in prog._matvars.values():
        m = np.asarray(primal[v.name], dtype=np.complex128)
        x[comp.offsets[v.name] : comp.offsets[v.name] + v.ncoords] = np.real(
            np.einsum("kij,ji->k", v.basis_stack(), m)
        )
    for v in prog._vecvars.values():
        val = np.atleast_1d(np.asarray(primal[v.name], dtype=float)).ravel()
        x[comp.offsets[v.name] : comp.offsets[v.name] + v.size] = val
    if comp.A.shape[0]:
        residual = comp.A @ x - comp.b
        delta, *_ = np.linalg.lstsq(comp.A, residual, rcond=None)
        x = x - delta
    return _decode_primal(prog, comp, x)
