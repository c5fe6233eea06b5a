"""Process matrices: validity, causal order, causal separability, GYNI.

A bipartite process matrix W on A_I (x) A_O (x) B_I (x) B_O satisfies

    W >= 0,  Tr W = d_AO d_BO,
    R_{AI,AO}(W) = R_{AI,AO,BO}(W),
    R_{BI,BO}(W) = R_{AO,BI,BO}(W),
    W = R_{AO}(W) + R_{BO}(W) - R_{AO,BO}(W),

where R_X is trace-and-replace on the factors X.  In the tripartite
structure used here the third party acts last and has a trivial output,
so W lives on A_I A_O B_I B_O C_I with the analogous identities carrying
a C_I suffix, and the closure condition reads
R_{CI}(W) = R_{AO,CI}(W) + R_{BO,CI}(W) - R_{AO,BO,CI}(W).

Every non-positivity constraint above is a linear identity built from
commuting orthogonal projectors on Hermitian space, so each membership
set (valid, ordered one way or the other) is characterized by one
orthogonal projector.  Those projectors supply orthonormal subspace
bases for the conic programs and a cheap exact projection for random
sampling.

Causal separability asks for W = W1 + W2 with W1 >= 0 ordered A before
B and W2 >= 0 ordered B before A (weights absorbed into the
unnormalized components; q = Tr W1 / Tr W).  Infeasibility is converted
into a causal witness S, normalized against the white-noise process,
with Tr(S W) < 0 but Tr(S V) >= 0 for every causally separable V.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .conic import ConicProgram, herm_to_vec, refine_primal, solve, vec_to_herm
from .errors import (
    DimensionMismatchError,
    ScenarioError,
    SolverFailureError,
    ValidationError,
)
from .instruments import InstrumentSet
from .spaces import LabeledOperator, SpaceLabel, TensorSpace, tensor, trace_and_replace

RESIDUAL_TOL = 1e-9
PSD_FLOOR = -1e-10

BIPARTITE_ORDERS = ("A<B", "B<A")
TRIPARTITE_ORDERS = ("A<B<C", "B<A<C")


@dataclass(frozen=True)
class PartyStructure:
    """Which parties exist and the dimension of each labeled factor."""

    kind: str  # "bipartite" | "tripartite"
    dims: tuple[int, ...]  # ordered as the canonical labels below

    @staticmethod
    def bipartite(d_ai: int, d_ao: int, d_bi: int, d_bo: int) -> "PartyStructure":
        return PartyStructure("bipartite", (d_ai, d_ao, d_bi, d_bo))

    @staticmethod
    def charlie_last(
        d_ai: int, d_ao: int, d_bi: int, d_bo: int, d_ci: int
    ) -> "PartyStructure":
        # the last party only receives: no C output factor
        return PartyStructure("tripartite", (d_ai, d_ao, d_bi, d_bo, d_ci))

    def __post_init__(self) -> None:
        want = 4 if self.kind == "bipartite" else 5
        if self.kind not in ("bipartite", "tripartite") or len(self.dims) != want:
            raise ValidationError(f"bad structure {self.kind} with dims {self.dims}")
        if any(d < 1 for d in self.dims):
            raise DimensionMismatchError("factor dimensions must be >= 1")

    @property
    def labels(self) -> tuple[str, ...]:
        return ("AI", "AO", "BI", "BO") if self.kind == "bipartite" else (
            "AI",
            "AO",
            "BI",
            "BO",
            "CI",
        )

    @property
    def space(self) -> TensorSpace:
        return TensorSpace(tuple(SpaceLabel(n, d) for n, d in zip(self.labels, self.dims)))

    @property
    def dim(self) -> int:
        return self.space.dim

    @property
    def trace_target(self) -> int:
        return self.dims[1] * self.dims[3]  # d_AO * d_BO

    @property
    def orders(self) -> tuple[str, str]:
        return BIPARTITE_ORDERS if self.kind == "bipartite" else TRIPARTITE_ORDERS

    def dim_of(self, label: str) -> int:
        return self.dims[self.labels.index(label)]


class ProcessMatrix:
    """A labeled operator pinned to a party structure, in canonical factor order."""

    __slots__ = ("op", "structure")

    def __init__(self, op: LabeledOperator, structure: PartyStructure):
        from .spaces import permute_to

        want = structure.space
        if sorted(op.space.names) != sorted(want.names):
            raise DimensionMismatchError(
                f"operator factors {op.space.names} do not match structure {want.names}"
            )
        if op.space.names != want.names:
            op = permute_to(op, want)
        if op.space.dims != want.dims:
            raise DimensionMismatchError(
                f"operator dims {op.space.dims} do not match structure {want.dims}"
            )
        object.__setattr__(self, "op", op)
        object.__setattr__(self, "structure", structure)

    @property
    def matrix(self) -> np.ndarray:
        return self.op.matrix


@dataclass
class ValidityReport:
    """Residual of every defining identity plus the smallest eigenvalue."""

    constraints: list[tuple[str, float]]
    min_eigenvalue: float

    @property
    def passed(self) -> bool:
        return (
            all(r <= RESIDUAL_TOL for _, r in self.constraints)
            and self.min_eigenvalue >= PSD_FLOOR
        )

    def residual(self, name: str) -> float:
        for n, r in self.constraints:
            if n == name:
                return r
        raise KeyError(name)


@dataclass
class CausalDecomposition:
    """W = q . component_AB + (1-q) . component_BA, components normalized."""

    q: float
    component_AB: LabeledOperator
    component_BA: LabeledOperator


@dataclass
class CausalWitness:
    """Hermitian S with Tr(S V) >= 0 on the causally separable cone.

    normalization records Tr(S . white-noise process), fixed to 1 where
    possible so witness values are comparable across runs.

    ``ordered_parts`` holds one PSD matrix per causal order whose
    projection onto that order's subspace matches the witness's own;
    the pair certifies dual-cone membership by linear algebra alone,
    since pairing S with an ordered component only sees the projection.
    """

    S: LabeledOperator
    normalization: float
    ordered_parts: tuple[LabeledOperator, ...] | None = None


# -- trace-and-replace projector algebra --------------------------------------


def _r_apply(space: TensorSpace, m: np.ndarray, labels: tuple[str, ...]) -> np.ndarray:
    return trace_and_replace(LabeledOperator(space, m), labels).matrix


@lru_cache(maxsize=64)
def _r_matrix(structure: PartyStructure, labels: tuple[str, ...]) -> np.ndarray:
    """Matrix of R_labels acting on Hermitian coordinates (n^2 x n^2 real)."""
    space = structure.space
    n = space.dim
    basis = vec_to_herm(np.eye(n * n), n)
    cols = np.empty((n * n, n * n))
    for k in range(n * n):
        cols[:, k] = herm_to_vec(_r_apply(space, basis[k], labels))
    return cols


def _membership_projector(structure: PartyStructure, order: str | None) -> np.ndarray:
    """Orthogonal projector (on Hermitian coordinates) for the valid or ordered set."""
    n2 = structure.dim ** 2
    eye = np.eye(n2)

    def R(*labels: str) -> np.ndarray:
        return _r_matrix(structure, tuple(labels))

    if structure.kind == "bipartite":
        kills = [
            R("AI", "AO") @ (eye - R("BO")),
            R("BI", "BO") @ (eye - R("AO")),
            (eye - R("AO")) @ (eye - R("BO")),
        ]
        if order == "A<B":
            kills.append(eye - R("BO"))
        elif order == "B<A":
            kills.append(eye - R("AO"))
        elif order is not None:
            raise ScenarioError(f"order {order!r} incompatible with bipartite structure")
    else:
        kills = [
            R("AI", "AO", "CI") @ (eye - R("BO")),
            R("BI", "BO", "CI") @ (eye - R("AO")),
            R("CI") @ (eye - R("AO")) @ (eye - R("BO")),
        ]
        if order == "A<B<C":
            kills.append(R("CI") @ (eye - R("BO")))
        elif order == "B<A<C":
            kills.append(R("CI") @ (eye - R("AO")))
        elif order is not None:
            raise ScenarioError(f"order {order!r} incompatible with tripartite structure")

    proj = eye
    for c in kills:
        proj = proj @ (eye - c)
    return (proj + proj.T) / 2


@lru_cache(maxsize=64)
def _subspace_cached(structure: PartyStructure, order: str | None):
    proj = _membership_projector(structure, order)
    vals, vecs = np.linalg.eigh(proj)
    inside = vecs[:, vals > 0.5]
    outside = vecs[:, vals <= 0.5]
    n = structure.dim
    return (
        proj,
        np.ascontiguousarray(vec_to_herm(inside.T, n)),
        np.ascontiguousarray(vec_to_herm(outside.T, n)),
    )


def membership_basis(structure: PartyStructure, order: str | None = None) -> np.ndarray:
    """Orthonormal Hermitian basis of the valid (or causally ordered) subspace."""
    return _subspace_cached(structure, order)[1]


def _project_coords(structure: PartyStructure, order: str | None, m: np.ndarray) -> np.ndarray:
    proj = _subspace_cached(structure, order)[0]
    return vec_to_herm(proj @ herm_to_vec(m), structure.dim)


def white_noise_process(structure: PartyStructure) -> ProcessMatrix:
    """Identity scaled to the process trace; valid and ordered every way."""
    n = structure.dim
    mat = np.eye(n) * (structure.trace_target / n)
    return ProcessMatrix(LabeledOperator(structure.space, mat), structure)


# -- validity and order ---------------------------------------------------------


def _canon(op: LabeledOperator, structure: PartyStructure) -> LabeledOperator:
    return ProcessMatrix(op, structure).op


def validate_process(op: LabeledOperator, structure: PartyStructure) -> ValidityReport:
    """Residuals of every process-matrix identity, plus min eigenvalue."""
    w = _canon(op, structure)
    space, m = w.space, w.matrix

    def r(labels):
        return _r_apply(space, m, tuple(labels))

    entries = [("trace", float(abs(np.trace(m).real - structure.trace_target)))]
    entries.append(("hermitian", float(np.max(np.abs(m - m.conj().T)))))
    if structure.kind == "bipartite":
        entries.append(
            ("A-marginal", float(np.max(np.abs(r(("AI", "AO")) - r(("AI", "AO", "BO"))))))
        )
        entries.append(
            ("B-marginal", float(np.max(np.abs(r(("BI", "BO")) - r(("AO", "BI", "BO"))))))
        )
        entries.append(
            (
                "order-closure",
                float(np.max(np.abs(m - r(("AO",)) - r(("BO",)) + r(("AO", "BO"))))),
            )
        )
    else:
        entries.append(
            (
                "A-marginal",
                float(np.max(np.abs(r(("AI", "AO", "CI")) - r(("AI", "AO", "BO", "CI"))))),
            )
        )
        entries.append(
            (
                "B-marginal",
                float(np.max(np.abs(r(("BI", "BO", "CI")) - r(("AO", "BI", "BO", "CI"))))),
            )
        )
        entries.append(
            (
                "order-closure",
                float(
                    np.max(
                        np.abs(
                            r(("CI",))
                            - r(("AO", "CI"))
                            - r(("BO", "CI"))
                            + r(("AO", "BO", "CI"))
                        )
                    )
                ),
            )
        )
    return ValidityReport(entries, float(w.hermitized().min_eigenvalue()))


def is_causally_ordered(process: ProcessMatrix, order: str) -> ValidityReport:
    """Residual of the no-signalling-to-the-earlier-party identity for ``order``."""
    structure = process.structure
    if order not in structure.orders:
        raise ScenarioError(
            f"order {order!r} not defined for {structure.kind} structure; "
            f"expected one of {structure.orders}"
        )
    m = process.matrix
    space = process.op.space

    def r(labels):
        return _r_apply(space, m, tuple(labels))

    if structure.kind == "bipartite":
        blocked = ("BO",) if order == "A<B" else ("AO",)
        res = float(np.max(np.abs(m - r(blocked))))
    else:
        blocked = ("BO", "CI") if order == "A<B<C" else ("AO", "CI")
        res = float(np.max(np.abs(r(("CI",)) - r(blocked))))
    return ValidityReport([(f"ordered[{order}]", res)], float(process.op.hermitized().min_eigenvalue()))


# -- causal separability ---------------------------------------------------------


def _ordered_component(structure: PartyStructure, order: str, mat: np.ndarray, q: float):
    if q > 1e-9:
        return LabeledOperator(structure.space, mat / q)
    return white_noise_process(structure).op


def check_causal_separability(
    process: ProcessMatrix,
) -> CausalDecomposition | CausalWitness:
    """Split W into both causal orders, or produce a witness that none exists."""
    structure = process.structure
    report = validate_process(process.op, structure)
    if not report.passed:
        raise ValidationError(f"not a valid process matrix: {report.constraints}")
    o1, o2 = structure.orders
    n = structure.dim

    prog = ConicProgram()
    prog.add_psd_var("W1", n, basis=membership_basis(structure, o1))
    prog.add_psd_var("W2", n, basis=membership_basis(structure, o2))
    prog.add_op_equality([("W1", 1.0), ("W2", 1.0)], rhs=process.matrix, tag="mix")
    rep = solve(prog)

    if rep.status == "optimal":
        w1, w2 = rep.primal["W1"], rep.primal["W2"]
        q = float(np.real(np.trace(w1)) / structure.trace_target)
        q = min(max(q, 0.0), 1.0)
        return CausalDecomposition(
            q,
            _ordered_component(structure, o1, w1, q),
            _ordered_component(structure, o2, w2, 1.0 - q),
        )
    if rep.status == "infeasible":
        y = rep.certificate["multipliers"]["mix"]
        witness = _witness_from_multiplier(structure, process.matrix, y)
        if witness is None:
            witness = _witness_sdp(structure, process.matrix)
        return witness
    raise SolverFailureError(f"separability membership undecided: {rep.note}")


def _witness_checks(structure: PartyStructure, w: np.ndarray, s: np.ndarray) -> bool:
    value = float(np.real(np.trace(s @ w)))
    if value > -1e-7:
        return False
    for order in structure.orders:
        proj = _project_coords(structure, order, s)
        if np.linalg.eigvalsh((proj + proj.conj().T) / 2)[0] < -1e-10:
            return False
    return True


def _polish_witness(structure, s: np.ndarray) -> np.ndarray | None:
    """Shift by a hair of identity so both ordered projections are exactly PSD.

    Solver duals carry ~1e-9 roundoff; the identity lies inside every
    ordered subspace, so adding c*1 raises each projection's spectrum by
    c without disturbing the separating direction.  Renormalizes against
    the white-noise process afterwards.
    """
    s = (s + s.conj().T) / 2
    worst = 0.0
    for order in structure.orders:
        proj = _project_coords(structure, order, s)
        worst = min(worst, float(np.linalg.eigvalsh((proj + proj.conj().T) / 2)[0]))
    if worst < 0.0:
        s = s + (-worst + 1e-14) * np.eye(structure.dim)
    omega = white_noise_process(structure).matrix
    scale = float(np.real(np.trace(s @ omega)))
    if scale <= 1e-12:
        return None
    return s / scale


def _witness_from_multiplier(structure, w, y) -> CausalWitness | None:
    y = (y + y.conj().T) / 2
    candidate = y if np.real(np.trace(y @ w)) < 0 else -y
    s = _polish_witness(structure, candidate)
    if s is None or not _witness_checks(structure, w, s):
        return None
    # Projections are PSD here, so they serve as their own ordered parts.
    parts = tuple(
        LabeledOperator(structure.space, _project_coords(structure, order, s))
        for order in structure.orders
    )
    return CausalWitness(LabeledOperator(structure.space, s), 1.0, parts)


def _witness_sdp(structure: PartyStructure, w: np.ndarray) -> CausalWitness:
    """Search over the dual cone: min Tr(S W), S normalized on white noise.

    S is confined to the span of both ordered subspaces (directions
    orthogonal to it cannot change any pairing with separable matrices),
    and membership in the dual cone is imposed as: the projection of S
    onto each ordered subspace must match a PSD matrix there.
    """
    n = structure.dim
    o1, o2 = structure.orders
    p1 = _subspace_cached(structure, o1)[0]
    p2 = _subspace_cached(structure, o2)[0]
    union = p1 + p2 - p1 @ p2  # commuting projectors: projector onto the span
    vals, vecs = np.linalg.eigh((union + union.T) / 2)
    span_basis = np.ascontiguousarray(vec_to_herm(vecs[:, vals > 0.5].T, n))

    def proj_map(p):
        return lambda m: vec_to_herm(p @ herm_to_vec(m), n)

    omega = white_noise_process(structure).matrix
    prog = ConicProgram()
    prog.add_free_matrix_var("S", n, basis=span_basis)
    prog.add_psd_var("Z1", n)
    prog.add_psd_var("Z2", n)
    prog.add_op_equality(
        [("S", proj_map(p1)), ("Z1", lambda m: -proj_map(p1)(m))],
        rhs=np.zeros((n, n)),
        tag="dual-cone-1",
    )
    prog.add_op_equality(
        [("S", proj_map(p2)), ("Z2", lambda m: -proj_map(p2)(m))],
        rhs=np.zeros((n, n)),
        tag="dual-cone-2",
    )
    prog.add_scalar_equality(1.0, matrix_terms=[("S", omega)])
    prog.set_objective(matrix_terms=[("S", (w + w.conj().T) / 2)])
    rep = solve(prog)
    if rep.status != "optimal":
        raise SolverFailureError(f"witness search failed: {rep.status} {rep.note}")
    primal = refine_primal(prog, rep.primal)
    s = np.asarray(primal["S"])
    s = (s + s.conj().T) / 2
    # Dual-cone membership is certified by the Z blocks: pairing S with an
    # ordered component only sees its projection, which must agree with a
    # PSD matrix.  Requiring the projection itself to be PSD would reject
    # genuine witnesses whose ordered parts differ off the subspace.
    parts = []
    for p, zname in ((p1, "Z1"), (p2, "Z2")):
        z = np.asarray(primal[zname])
        z = (z + z.conj().T) / 2
        if float(np.linalg.eigvalsh(z)[0]) < -1e-9:
            raise SolverFailureError("ordered certificate lost positivity in refinement")
        gap = float(np.max(np.abs(proj_map(p)(s) - proj_map(p)(z))))
        if gap > 1e-7:
            raise SolverFailureError(f"ordered certificate misses the witness by {gap:.2e}")
        parts.append(z)
    value = float(np.real(np.trace(s @ w)))
    if value > -1e-7:
        raise SolverFailureError(f"witness value {value:.2e} has no usable margin")
    scale = float(np.real(np.trace(s @ omega)))
    if scale <= 1e-12:
        raise SolverFailureError("witness cannot be normalized on white noise")
    labeled = tuple(LabeledOperator(structure.space, z / scale) for z in parts)
    return CausalWitness(LabeledOperator(structure.space, s / scale), 1.0, labeled)


# -- GYNI -----------------------------------------------------------------------


def gyni_bound(d: int) -> float:
    """Best possible guess-your-neighbour's-input success over processes of total dimension d."""
    if d < 1:
        raise ValidationError("dimension must be >= 1")
    return 1.0 - 1.0 / (d + 1.0)


def gyni_operator(a_set: InstrumentSet, b_set: InstrumentSet) -> LabeledOperator:
    """M = (1/4) sum over settings/outcomes with a=y and b=x of A_{a|x} (x) B_{b|y}."""
    if (a_set.settings, a_set.outcomes) != (2, 2) or (b_set.settings, b_set.outcomes) != (2, 2):
        raise ScenarioError("the guessing game needs two settings and two outcomes per party")
    if (a_set.input_label.name, a_set.output_label.name) != ("AI", "AO") or (
        b_set.input_label.name,
        b_set.output_label.name,
    ) != ("BI", "BO"):
        raise ValidationError("instruments must live on AI/AO and BI/BO")
    total = None
    for x in range(2):
        for y in range(2):
            term = tensor(a_set.element(x, y), b_set.element(y, x))  # a=y, b=x
            total = term if total is None else total + term
    return total / 4.0


def max_gyni_over_processes(
    a_set: InstrumentSet, b_set: InstrumentSet, separable_only: bool = False
) -> float:
    """Maximize the guessing functional over valid (or causally separable) W."""
    m = gyni_operator(a_set, b_set)
    structure = PartyStructure.bipartite(
        a_set.input_label.dim, a_set.output_label.dim, b_set.input_label.dim, b_set.output_label.dim
    )
    n = structure.dim
    mm = (m.matrix + m.matrix.conj().T) / 2
    prog = ConicProgram()
    if separable_only:
        o1, o2 = structure.orders
        prog.add_psd_var("W1", n, basis=membership_basis(structure, o1))
        prog.add_psd_var("W2", n, basis=membership_basis(structure, o2))
        prog.add_scalar_equality(
            float(structure.trace_target),
            matrix_terms=[("W1", np.eye(n)), ("W2", np.eye(n))],
        )
        prog.set_objective(matrix_terms=[("W1", -mm), ("W2", -mm)])
    else:
        prog.add_psd_var("W", n, basis=membership_basis(structure, None))
        prog.add_scalar_equality(float(structure.trace_target), matrix_terms=[("W", np.eye(n))])
        prog.set_objective(matrix_terms=[("W", -mm)])
    rep = solve(prog)
    if rep.status != "optimal":
        raise SolverFailureError(f"guessing-game optimization failed: {rep.status} {rep.note}")
    return float(-rep.objective_value)


# -- partial transpose criterion, positivity lemma -------------------------------


def lemma_positivity_margin(a: LabeledOperator) -> float:
    """Minimum eigenvalue of d_min Tr_2(A) (x) 1 - A for PSD A on two factors."""
    if len(a.space) != 2:
        raise ScenarioError("operator must have exactly two factors")
    if a.hermitized().min_eigenvalue() < PSD_FLOOR:
        raise ValidationError("operator is not positive semidefinite")
    d1, d2 = a.space.dims
    d = min(d1, d2)
    from .spaces import partial_trace

    second = a.space.names[1]
    reduced = partial_trace(a, [second]).matrix
    shifted = d * np.kron(reduced, np.eye(d2)) - a.matrix
    return float(np.linalg.eigvalsh((shifted + shifted.conj().T) / 2)[0])


def transpose_criterion(process: ProcessMatrix, party: str) -> str:
    """Partial transpose on one party; 'criterion-applies' when it stays separable.

    When the partially transposed matrix is again a valid, causally
    separable process matrix, the original cannot be certified with
    that party untrusted, so device-independent-style certification is
    off the table and the check reports criterion-applies.
    """
    from .spaces import partial_transpose

    if party not in ("A", "B"):
        raise ScenarioError("party must be 'A' or 'B'")
    if process.structure.kind != "bipartite":
        raise ScenarioError("the transpose criterion is a bipartite test")
    labels = ("AI", "AO") if party == "A" else ("BI", "BO")
    wt = partial_transpose(process.op, labels)
    if not validate_process(wt, process.structure).passed:
        return "criterion-silent"
    outcome = check_causal_separability(ProcessMatrix(wt, process.structure))
    return "criterion-applies" if isinstance(outcome, CausalDecomposition) else "criterion-silent"


# -- random sampling --------------------------------------------------------------


def _psd_mixing_weight(base: np.ndarray, noise: np.ndarray) -> float:
    """Smallest t in [0,1] with (1-t) base + t noise PSD, by 40-step bisection."""

    def ok(t: float) -> bool:
        m = (1 - t) * base + t * noise
        return np.linalg.eigvalsh((m + m.conj().T) / 2)[0] >= 0.0

    if ok(0.0):
        return 0.0
    lo, hi = 0.0, 1.0
    for _ in range(40):
        mid = (lo + hi) / 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _random_in_subspace(
    structure: PartyStructure, order: str | None, seed_or_rng
) -> ProcessMatrix:
    rng = (
        seed_or_rng
        if isinstance(seed_or_rng, np.random.Generator)
        else np.random.default_rng(seed_or_rng)
    )
    n = structure.dim
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    x = g @ g.conj().T
    x *= structure.trace_target / np.trace(x).real
    projected = _project_coords(structure, order, x)
    noise = white_noise_process(structure).matrix
    t = _psd_mixing_weight(projected, noise)
    mat = (1 - t) * projected + t * noise
    return ProcessMatrix(LabeledOperator(structure.space, mat), structure)


def random_process_matrix(structure: PartyStructure, seed: int) -> ProcessMatrix:
    """Wishart sample, projected onto the valid subspace, mixed PSD with white noise."""
    return _random_in_subspace(structure, None, seed)


def random_ordered_process(structure: PartyStructure, order: str, seed: int) -> ProcessMatrix:
    """Random process matrix causally ordered the requested way."""
    if order not in structure.orders:
        raise ScenarioError(f"order {order!r} not available for {structure.kind}")
    return _random_in_subspace(structure, order, seed)


def random_separable_process(structure: PartyStructure, seed: int) -> ProcessMatrix:
    """Random convex mixture of the two causal orders."""
    rng = np.random.default_rng(seed)
    q = rng.uniform()
    o1, o2 = structure.orders
    w1 = _random_in_subspace(structure, o1, rng).matrix
    w2 = _random_in_subspace(structure, o2, rng).matrix
    return ProcessMatrix(
        LabeledOperator(structure.space, q * w1 + (1 - q) * w2), structure
    )
