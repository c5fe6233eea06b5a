"""Assemblages: what tomography on the trusted wires leaves behind.

When only some parties keep characterized devices, each round of the
untrusted boxes steers a conditional operator onto the trusted factors.
The resulting family, indexed by the untrusted outcomes and settings, is
an assemblage.  Five trust layouts appear here, named by which parties
are trusted (T) or untrusted (U) in the order Alice, Bob, Charlie:

- ``SDI-bipartite``: two parties, Alice untrusted; elements w[a,x] live
  on BI (x) BO.
- ``TTU``: Charlie untrusted; elements w[c,z] live on the full bipartite
  factors AI (x) AO (x) BI (x) BO.
- ``TUU``: only Alice trusted; elements w[b,c,y,z] on AI (x) AO.
- ``UTT``: only Alice untrusted; elements w[a,x] on BI (x) BO (x) CI.
- ``UUT``: only Charlie trusted; elements w[a,b,x,y] on CI.

Causal assemblages are sums of one family compatible with Alice acting
first and one with Bob acting first.  Membership is a semidefinite
feasibility problem over the two unnormalized families; its refutations
come with a linear witness that is nonnegative on every causal
assemblage and strictly negative on the tested one.

For TUU, UTT and UUT the validity conditions used here are necessary
for the family to come from a process but are not known to be
sufficient, so their reports carry an outer-approximation marker.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator, Mapping

import numpy as np

from .conic import ConicProgram, herm_to_vec, refine_primal, solve, vec_to_herm
from .errors import (
    DimensionMismatchError,
    IllPosedProgramError,
    ScenarioError,
    SolverFailureError,
    UnsupportedScenarioError,
    ValidationError,
)
from .instruments import InstrumentSet, POVMSet, validate_instruments
from .processes import PartyStructure, ProcessMatrix, _project_coords
from .spaces import (
    LabeledOperator,
    SpaceLabel,
    TensorSpace,
    identity,
    max_entangled,
    partial_trace,
    permute_to,
    tensor,
    trace_and_replace,
)

SDI_BIPARTITE = "SDI-bipartite"
TTU = "TTU"
TUU = "TUU"
UTT = "UTT"
UUT = "UUT"
SCENARIOS = (SDI_BIPARTITE, TTU, TUU, UTT, UUT)

RESIDUAL_TOL = 1e-9
PSD_FLOOR = -1e-10
REPRODUCTION_TOL = 1e-7
WITNESS_MARGIN = 1e-7
SUPPORT_CUT = 1e-10
_PURE_MASS = 1e-6


@dataclass(frozen=True)
class _Layout:
    trusted: tuple[str, ...]  # canonical trusted factor names
    pairs: int                # how many (outcome, setting) index pairs
    outer: bool               # validity is only an outer approximation


_LAYOUTS: dict[str, _Layout] = {
    SDI_BIPARTITE: _Layout(("BI", "BO"), 1, False),
    TTU: _Layout(("AI", "AO", "BI", "BO"), 1, False),
    TUU: _Layout(("AI", "AO"), 2, True),
    UTT: _Layout(("BI", "BO", "CI"), 1, True),
    UUT: _Layout(("CI",), 2, True),
}


def _layout(scenario: str) -> _Layout:
    try:
        return _LAYOUTS[scenario]
    except KeyError:
        raise ScenarioError(f"unknown scenario {scenario!r}; expected one of {SCENARIOS}")


class Assemblage:
    """Family of trusted-side operators indexed by untrusted outcomes, then settings.

    Element order follows the subscripts: w[a,x] for one untrusted party,
    w[b,c,y,z] or w[a,b,x,y] for two.  Elements are stored with factors in
    the canonical trusted order of the scenario.
    """

    __slots__ = ("scenario", "space", "outcomes", "settings", "_elements")

    def __init__(
        self,
        scenario: str,
        space: TensorSpace,
        outcomes: tuple[int, ...],
        settings: tuple[int, ...],
        elements: Mapping[tuple[int, ...], LabeledOperator],
    ) -> None:
        lay = _layout(scenario)
        if space.names != lay.trusted:
            raise DimensionMismatchError(
                f"{scenario} wants trusted factors {lay.trusted}, got {space.names}"
            )
        outcomes = tuple(int(o) for o in outcomes)
        settings = tuple(int(s) for s in settings)
        if len(outcomes) != lay.pairs or len(settings) != lay.pairs:
            raise ScenarioError(
                f"{scenario} indexes {lay.pairs} untrusted part(s), "
                f"got outcomes {outcomes} and settings {settings}"
            )
        if any(n < 1 for n in outcomes + settings):
            raise ValidationError("outcome and setting counts must be >= 1")
        store: dict[tuple[int, ...], LabeledOperator] = {}
        for idx in np.ndindex(*outcomes, *settings):
            try:
                el = elements[tuple(idx)]
            except KeyError:
                raise ValidationError(f"missing assemblage element {tuple(idx)}")
            if sorted(el.space.names) != sorted(space.names):
                raise DimensionMismatchError(
                    f"element {tuple(idx)} on {el.space.names}, expected {space.names}"
                )
            el = permute_to(el, space)
            if el.space.dims != space.dims:
                raise DimensionMismatchError(
                    f"element {tuple(idx)} dims {el.space.dims} != {space.dims}"
                )
            store[tuple(idx)] = el
        object.__setattr__(self, "scenario", scenario)
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "outcomes", outcomes)
        object.__setattr__(self, "settings", settings)
        object.__setattr__(self, "_elements", store)

    def __setattr__(self, name, value):
        raise AttributeError("Assemblage is immutable")

    def indices(self) -> Iterator[tuple[int, ...]]:
        return (tuple(i) for i in np.ndindex(*self.outcomes, *self.settings))

    def element(self, *idx: int) -> LabeledOperator:
        return self._elements[tuple(idx)]

    def matrix(self, *idx: int) -> np.ndarray:
        return self._elements[tuple(idx)].matrix

    def outcome_sum(self, *setting: int) -> np.ndarray:
        """Sum of elements over all outcomes at a fixed setting tuple."""
        total = np.zeros((self.space.dim, self.space.dim), dtype=np.complex128)
        for out in np.ndindex(*self.outcomes):
            total = total + self.matrix(*out, *setting)
        return total

    def allclose(self, other: "Assemblage", tol: float = 1e-9) -> bool:
        if (
            self.scenario != other.scenario
            or self.outcomes != other.outcomes
            or self.settings != other.settings
            or self.space.dims != other.space.dims
        ):
            return False
        return all(
            np.abs(self.matrix(*idx) - other.matrix(*idx)).max() <= tol
            for idx in self.indices()
        )


@dataclass
class AssemblageReport:
    """Residuals of the defining identities plus the worst eigenvalue."""

    scenario: str
    constraints: list[tuple[str, float]]
    min_eigenvalue: float
    outer_approximation: bool

    @property
    def passed(self) -> bool:
        return (
            all(r <= RESIDUAL_TOL for _, r in self.constraints)
            and self.min_eigenvalue >= PSD_FLOOR
        )


@dataclass
class AssemblageCausalDecomposition:
    """Unnormalized per-order families whose sum is the assemblage.

    ``first`` collects the part where Alice acts before Bob (before
    Charlie, where present), ``second`` the opposite order; ``q`` is the
    weight recovered from the first family's normalization.
    """

    scenario: str
    q: float
    first: dict[tuple[int, ...], LabeledOperator]
    second: dict[tuple[int, ...], LabeledOperator]


@dataclass
class AssemblageWitness:
    """Linear functional separating an assemblage from the causal set.

    evaluate() is nonnegative on every causal assemblage of the same
    shape and comes out at ``value`` (< 0) on the assemblage it was
    built from.
    """

    scenario: str
    coefficients: dict[tuple[int, ...], np.ndarray]
    offset: float
    value: float

    def evaluate(self, w: Assemblage) -> float:
        if w.scenario != self.scenario:
            raise ScenarioError(f"witness is for {self.scenario}, got {w.scenario}")
        total = self.offset
        for idx, f in self.coefficients.items():
            total += float(np.real(np.trace(f @ w.matrix(*idx))))
        return total


@dataclass
class AssemblageMembership:
    """Outcome of the causal-membership program."""

    causal: bool
    decomposition: AssemblageCausalDecomposition | None
    witness: AssemblageWitness | None


@dataclass
class SemiDeviceWitness:
    """Behaviour-level functional from a failed trusted-side explanation.

    Coefficients are indexed like the behaviour tensor; evaluate() is
    nonnegative on every behaviour the trusted devices can produce from
    a causal assemblage and negative on the certified one.
    """

    coefficients: np.ndarray
    offset: float
    value: float

    def evaluate(self, behaviour) -> float:
        p = np.asarray(behaviour.p, dtype=float)
        if p.shape != self.coefficients.shape:
            raise DimensionMismatchError(
                f"behaviour shape {p.shape} != witness shape {self.coefficients.shape}"
            )
        return float(np.sum(self.coefficients * p) + self.offset)


@dataclass
class SemiDeviceIndependentVerdict:
    """What the trusted devices alone can say about a behaviour."""

    verdict: str  # certified-noncausal | not-certified | inconsistent-behaviour
    scenario: str
    assemblage: Assemblage | None = None
    witness: SemiDeviceWitness | None = None
    note: str = ""


# -- small algebra helpers ------------------------------------------------------


def _dim_of(space: TensorSpace, name: str) -> int:
    return space.dims[space.names.index(name)]


def _reducer(space: TensorSpace, labels: tuple[str, ...]) -> Callable[[np.ndarray], np.ndarray]:
    def act(m: np.ndarray, _s=space, _l=labels) -> np.ndarray:
        return trace_and_replace(LabeledOperator(_s, m), _l).matrix

    return act


def _minus(f, g):
    return lambda m: f(m) - g(m)


def _id_minus(f):
    return lambda m: m - f(m)


def _hermitize(m: np.ndarray) -> np.ndarray:
    return (m + m.conj().T) / 2


def _proj(vec: np.ndarray) -> np.ndarray:
    return np.outer(vec, vec.conj())


def _basis_proj(dim: int, k: int) -> np.ndarray:
    p = np.zeros((dim, dim), dtype=np.complex128)
    p[k, k] = 1.0
    return p


def _support(m: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Eigenbasis, eigenvalues, 1/sqrt on the support, support indicator."""
    vals, vecs = np.linalg.eigh(_hermitize(m))
    supp = (vals > SUPPORT_CUT).astype(float)
    inv_sqrt = np.where(vals > SUPPORT_CUT, 1.0 / np.sqrt(np.abs(vals)), 0.0)
    return vecs, vals, inv_sqrt, supp


def _psd_clip(m: np.ndarray) -> np.ndarray:
    """Drop the negative eigen-dust a finished solve leaves on a family.

    Realization whitens and renormalizes family elements, which amplifies
    any residual negativity into invalid devices; the exact elements are
    positive, so clipping moves each one by at most the dust size.
    """
    h = _hermitize(m)
    vals, vecs = np.linalg.eigh(h)
    if vals[0] >= 0.0:
        return h
    return (vecs * np.clip(vals, 0.0, None)) @ vecs.conj().T


def _purified(vals: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    """sum_k sqrt(v_k) (Q e_k) (x) e_k, clipping eigen-dust at zero."""
    n = vals.size
    v = np.zeros(n * n, dtype=np.complex128)
    for k in range(n):
        if vals[k] > 0:
            v += np.sqrt(vals[k]) * np.kron(vecs[:, k], np.eye(n)[k])
    return v


def _fuse(op: LabeledOperator, groups: list[tuple[SpaceLabel, tuple[str, ...]]]) -> LabeledOperator:
    """Permute to the flattened member order, then relabel member runs as one factor."""
    order = [name for _, members in groups for name in members]
    op = permute_to(op, order)
    return LabeledOperator(TensorSpace(tuple(lbl for lbl, _ in groups)), op.matrix)


# -- validity -------------------------------------------------------------------


def validate_assemblage(w: Assemblage) -> AssemblageReport:
    """Residuals of every identity the trust layout demands of the family."""
    lay = _layout(w.scenario)
    space = w.space
    herm = max(float(np.abs(m - m.conj().T).max()) for m in (w.matrix(*i) for i in w.indices()))
    min_eig = min(
        float(np.linalg.eigvalsh(_hermitize(w.matrix(*i))).min()) for i in w.indices()
    )
    cons: list[tuple[str, float]] = [("hermitian", herm)]

    if w.scenario == SDI_BIPARTITE:
        d_bo = _dim_of(space, "BO")
        r_bo = _reducer(space, ("BO",))
        tr = max(abs(np.trace(w.outcome_sum(x)).real - d_bo) for x in range(w.settings[0]))
        marg = max(
            float(np.abs(w.outcome_sum(x) - r_bo(w.outcome_sum(x))).max())
            for x in range(w.settings[0])
        )
        cons += [("sum-trace", float(tr)), ("sum-output-marginal", marg)]
    elif w.scenario == TTU:
        from .processes import validate_process

        zind = 0.0
        for z in range(1, w.settings[0]):
            zind = max(zind, float(np.abs(w.outcome_sum(z) - w.outcome_sum(0)).max()))
        struct = PartyStructure.bipartite(*space.dims)
        rep = validate_process(LabeledOperator(space, w.outcome_sum(0)), struct)
        proc = max(r for _, r in rep.constraints)
        cons += [("setting-independence", zind), ("process-sum", float(proc))]
    elif w.scenario == TUU:
        d_ao = _dim_of(space, "AO")
        r_ao = _reducer(space, ("AO",))
        o_b, o_c = w.outcomes
        i_b, i_c = w.settings
        tr = later = marg = 0.0
        for y in range(i_b):
            for z in range(i_c):
                s = w.outcome_sum(y, z)
                tr = max(tr, abs(np.trace(s).real - d_ao))
                marg = max(marg, float(np.abs(s - r_ao(s)).max()))
                if z:
                    for b in range(o_b):
                        pb = sum(w.matrix(b, c, y, z) for c in range(o_c))
                        pb0 = sum(w.matrix(b, c, y, 0) for c in range(o_c))
                        later = max(later, float(np.abs(pb - pb0).max()))
        cons += [
            ("sum-trace", float(tr)),
            ("later-setting-independence", later),
            ("sum-output-marginal", marg),
        ]
    elif w.scenario == UTT:
        d_bo = _dim_of(space, "BO")
        r_ci = _reducer(space, ("CI",))
        r_boci = _reducer(space, ("BO", "CI"))
        tr = marg = 0.0
        for x in range(w.settings[0]):
            s = w.outcome_sum(x)
            tr = max(tr, abs(np.trace(s).real - d_bo))
            marg = max(marg, float(np.abs(r_ci(s) - r_boci(s)).max()))
        cons += [("sum-trace", float(tr)), ("sum-output-marginal", marg)]
    else:  # UUT
        tr = max(
            abs(np.trace(w.outcome_sum(x, y)).real - 1.0)
            for x in range(w.settings[0])
            for y in range(w.settings[1])
        )
        cons += [("sum-trace", float(tr))]

    return AssemblageReport(w.scenario, cons, min_eig, lay.outer)


# -- the causal cone as rows ----------------------------------------------------


@dataclass
class _Row:
    """One linear identity over the component variables.

    kind "op" pairs each named component with a self-adjoint map (or a
    plain coefficient) and a matrix right-hand side; kind "scalar" pairs
    components with Hermitian coefficient matrices under Re Tr and a
    float right-hand side.  ``boxed`` marks rows whose multiplier is
    normalized when the rows are dualized into a witness search.
    """

    kind: str
    terms: tuple[tuple[str, object], ...]
    rhs: object
    tag: str
    boxed: bool = False


def _vn(fam: int, idx: tuple[int, ...]) -> str:
    return f"w{fam}[{','.join(map(str, idx))}]"


def _causal_rows(
    scenario: str, space: TensorSpace, outcomes: tuple[int, ...], settings: tuple[int, ...]
) -> tuple[dict[str, int], list[_Row]]:
    """Components and structural rows of the causal cone for one layout.

    Each family carries exactly the identities that make it a scaled
    valid assemblage of its order; redundant consequences are dropped.
    The single inhomogeneous row normalizes the sum of the two families.
    """
    n = space.dim
    zero = np.zeros((n, n))
    eye = np.eye(n)
    rows: list[_Row] = []
    comps: dict[str, int] = {}
    for fam in (1, 2):
        for idx in np.ndindex(*outcomes, *settings):
            comps[_vn(fam, tuple(idx))] = n

    if scenario == SDI_BIPARTITE:
        (o_a,), (i_a,) = outcomes, settings
        d_bo = _dim_of(space, "BO")
        r_bo = _reducer(space, ("BO",))
        for a in range(o_a):
            for x in range(i_a):
                rows.append(
                    _Row("op", ((_vn(1, (a, x)), _id_minus(r_bo)),), zero, f"ord1[{a},{x}]")
                )
        for x in range(1, i_a):
            terms = tuple((_vn(2, (a, x)), 1.0) for a in range(o_a)) + tuple(
                (_vn(2, (a, 0)), -1.0) for a in range(o_a)
            )
            rows.append(_Row("op", terms, zero, f"ord2[{x}]"))
        rows.append(
            _Row("op", tuple((_vn(2, (a, 0)), _id_minus(r_bo)) for a in range(o_a)), zero, "val2")
        )
        for x in range(1, i_a):
            terms = tuple((_vn(1, (a, x)), eye) for a in range(o_a)) + tuple(
                (_vn(1, (a, 0)), -eye) for a in range(o_a)
            )
            rows.append(_Row("scalar", terms, 0.0, f"tr1[{x}]"))
        norm = tuple((_vn(f, (a, 0)), eye) for f in (1, 2) for a in range(o_a))
        rows.append(_Row("scalar", norm, float(d_bo), "norm", boxed=True))

    elif scenario == TTU:
        (o_c,), (i_c,) = outcomes, settings
        struct = PartyStructure.bipartite(*space.dims)

        def proj_onto(order):
            return lambda m, _o=order: m - _project_coords(struct, _o, m)

        for fam, order in ((1, "A<B"), (2, "B<A")):
            for z in range(1, i_c):
                terms = tuple((_vn(fam, (c, z)), 1.0) for c in range(o_c)) + tuple(
                    (_vn(fam, (c, 0)), -1.0) for c in range(o_c)
                )
                rows.append(_Row("op", terms, zero, f"zind{fam}[{z}]"))
            rows.append(
                _Row(
                    "op",
                    tuple((_vn(fam, (c, 0)), proj_onto(order)) for c in range(o_c)),
                    zero,
                    f"sub{fam}",
                )
            )
        norm = tuple((_vn(f, (c, 0)), eye) for f in (1, 2) for c in range(o_c))
        rows.append(_Row("scalar", norm, float(struct.trace_target), "norm", boxed=True))

    elif scenario == TUU:
        (o_b, o_c), (i_b, i_c) = outcomes, settings
        d_ao = _dim_of(space, "AO")
        r_ao = _reducer(space, ("AO",))
        for fam in (1, 2):
            for b in range(o_b):
                for y in range(i_b):
                    for z in range(1, i_c):
                        terms = tuple(
                            (_vn(fam, (b, c, y, z)), 1.0) for c in range(o_c)
                        ) + tuple((_vn(fam, (b, c, y, 0)), -1.0) for c in range(o_c))
                        rows.append(_Row("op", terms, zero, f"zind{fam}[{b},{y},{z}]"))
        for y in range(1, i_b):
            terms = tuple(
                (_vn(1, (b, c, y, 0)), 1.0) for b in range(o_b) for c in range(o_c)
            ) + tuple((_vn(1, (b, c, 0, 0)), -1.0) for b in range(o_b) for c in range(o_c))
            rows.append(_Row("op", terms, zero, f"ord1[{y}]"))
        rows.append(
            _Row(
                "op",
                tuple(
                    (_vn(1, (b, c, 0, 0)), _id_minus(r_ao))
                    for b in range(o_b)
                    for c in range(o_c)
                ),
                zero,
                "val1",
            )
        )
        for b in range(o_b):
            for y in range(i_b):
                rows.append(
                    _Row(
                        "op",
                        tuple((_vn(2, (b, c, y, 0)), _id_minus(r_ao)) for c in range(o_c)),
                        zero,
                        f"ord2[{b},{y}]",
                    )
                )
        for y in range(1, i_b):
            terms = tuple(
                (_vn(2, (b, c, y, 0)), eye) for b in range(o_b) for c in range(o_c)
            ) + tuple((_vn(2, (b, c, 0, 0)), -eye) for b in range(o_b) for c in range(o_c))
            rows.append(_Row("scalar", terms, 0.0, f"tr2[{y}]"))
        norm = tuple(
            (_vn(f, (b, c, 0, 0)), eye) for f in (1, 2) for b in range(o_b) for c in range(o_c)
        )
        rows.append(_Row("scalar", norm, float(d_ao), "norm", boxed=True))

    elif scenario == UTT:
        (o_a,), (i_a,) = outcomes, settings
        d_bo = _dim_of(space, "BO")
        r_ci = _reducer(space, ("CI",))
        r_boci = _reducer(space, ("BO", "CI"))
        for a in range(o_a):
            for x in range(i_a):
                rows.append(
                    _Row(
                        "op",
                        ((_vn(1, (a, x)), _minus(r_ci, r_boci)),),
                        zero,
                        f"ord1[{a},{x}]",
                    )
                )
        for x in range(1, i_a):
            terms = tuple((_vn(1, (a, x)), eye) for a in range(o_a)) + tuple(
                (_vn(1, (a, 0)), -eye) for a in range(o_a)
            )
            rows.append(_Row("scalar", terms, 0.0, f"tr1[{x}]"))
        for x in range(1, i_a):
            terms = tuple((_vn(2, (a, x)), r_ci) for a in range(o_a)) + tuple(
                (_vn(2, (a, 0)), _minus(lambda m: np.zeros_like(m), r_ci)) for a in range(o_a)
            )
            rows.append(_Row("op", terms, zero, f"ord2[{x}]"))
        rows.append(
            _Row(
                "op",
                tuple((_vn(2, (a, 0)), _minus(r_ci, r_boci)) for a in range(o_a)),
                zero,
                "val2",
            )
        )
        norm = tuple((_vn(f, (a, 0)), eye) for f in (1, 2) for a in range(o_a))
        rows.append(_Row("scalar", norm, float(d_bo), "norm", boxed=True))

    else:  # UUT
        (o_a, o_b), (i_a, i_b) = outcomes, settings
        for a in range(o_a):
            for x in range(i_a):
                for y in range(1, i_b):
                    terms = tuple((_vn(1, (a, b, x, y)), eye) for b in range(o_b)) + tuple(
                        (_vn(1, (a, b, x, 0)), -eye) for b in range(o_b)
                    )
                    rows.append(_Row("scalar", terms, 0.0, f"ord1[{a},{x},{y}]"))
        for x in range(1, i_a):
            terms = tuple(
                (_vn(1, (a, b, x, 0)), eye) for a in range(o_a) for b in range(o_b)
            ) + tuple((_vn(1, (a, b, 0, 0)), -eye) for a in range(o_a) for b in range(o_b))
            rows.append(_Row("scalar", terms, 0.0, f"tr1[{x}]"))
        for b in range(o_b):
            for y in range(i_b):
                for x in range(1, i_a):
                    terms = tuple((_vn(2, (a, b, x, y)), eye) for a in range(o_a)) + tuple(
                        (_vn(2, (a, b, 0, y)), -eye) for a in range(o_a)
                    )
                    rows.append(_Row("scalar", terms, 0.0, f"ord2[{b},{y},{x}]"))
        for y in range(1, i_b):
            terms = tuple(
                (_vn(2, (a, b, 0, y)), eye) for a in range(o_a) for b in range(o_b)
            ) + tuple((_vn(2, (a, b, 0, 0)), -eye) for a in range(o_a) for b in range(o_b))
            rows.append(_Row("scalar", terms, 0.0, f"tr2[{y}]"))
        norm = tuple(
            (_vn(f, (a, b, 0, 0)), eye) for f in (1, 2) for a in range(o_a) for b in range(o_b)
        )
        rows.append(_Row("scalar", norm, 1.0, "norm", boxed=True))

    return comps, rows


def _validity_rows(
    scenario: str, space: TensorSpace, outcomes: tuple[int, ...], settings: tuple[int, ...]
) -> tuple[dict[str, int], list[_Row]]:
    """Single-family general-validity rows (the outer set, no order split)."""
    n = space.dim
    zero = np.zeros((n, n))
    eye = np.eye(n)
    rows: list[_Row] = []
    comps = {_vn(0, tuple(idx)): n for idx in np.ndindex(*outcomes, *settings)}

    if scenario == SDI_BIPARTITE:
        (o_a,), (i_a,) = outcomes, settings
        r_bo = _reducer(space, ("BO",))
        for x in range(i_a):
            rows.append(
                _Row(
                    "op",
                    tuple((_vn(0, (a, x)), _id_minus(r_bo)) for a in range(o_a)),
                    zero,
                    f"marg[{x}]",
                )
            )
            rows.append(
                _Row(
                    "scalar",
                    tuple((_vn(0, (a, x)), eye) for a in range(o_a)),
                    float(_dim_of(space, "BO")),
                    f"tr[{x}]",
                    boxed=True,
                )
            )
    elif scenario == TTU:
        (o_c,), (i_c,) = outcomes, settings
        struct = PartyStructure.bipartite(*space.dims)
        for z in range(1, i_c):
            terms = tuple((_vn(0, (c, z)), 1.0) for c in range(o_c)) + tuple(
                (_vn(0, (c, 0)), -1.0) for c in range(o_c)
            )
            rows.append(_Row("op", terms, zero, f"zind[{z}]"))
        rows.append(
            _Row(
                "op",
                tuple(
                    (_vn(0, (c, 0)), lambda m: m - _project_coords(struct, None, m))
                    for c in range(o_c)
                ),
                zero,
                "sub",
            )
        )
        rows.append(
            _Row(
                "scalar",
                tuple((_vn(0, (c, 0)), eye) for c in range(o_c)),
                float(struct.trace_target),
                "tr",
                boxed=True,
            )
        )
    elif scenario == TUU:
        (o_b, o_c), (i_b, i_c) = outcomes, settings
        r_ao = _reducer(space, ("AO",))
        for b in range(o_b):
            for y in range(i_b):
                for z in range(1, i_c):
                    terms = tuple((_vn(0, (b, c, y, z)), 1.0) for c in range(o_c)) + tuple(
                        (_vn(0, (b, c, y, 0)), -1.0) for c in range(o_c)
                    )
                    rows.append(_Row("op", terms, zero, f"zind[{b},{y},{z}]"))
        for y in range(i_b):
            rows.append(
                _Row(
                    "op",
                    tuple(
                        (_vn(0, (b, c, y, 0)), _id_minus(r_ao))
                        for b in range(o_b)
                        for c in range(o_c)
                    ),
                    zero,
                    f"marg[{y}]",
                )
            )
            rows.append(
                _Row(
                    "scalar",
                    tuple(
                        (_vn(0, (b, c, y, 0)), eye) for b in range(o_b) for c in range(o_c)
                    ),
                    float(_dim_of(space, "AO")),
                    f"tr[{y}]",
                    boxed=True,
                )
            )
    elif scenario == UTT:
        (o_a,), (i_a,) = outcomes, settings
        r_ci = _reducer(space, ("CI",))
        r_boci = _reducer(space, ("BO", "CI"))
        for x in range(i_a):
            rows.append(
                _Row(
                    "op",
                    tuple((_vn(0, (a, x)), _minus(r_ci, r_boci)) for a in range(o_a)),
                    zero,
                    f"marg[{x}]",
                )
            )
            rows.append(
                _Row(
                    "scalar",
                    tuple((_vn(0, (a, x)), eye) for a in range(o_a)),
                    float(_dim_of(space, "BO")),
                    f"tr[{x}]",
                    boxed=True,
                )
            )
    else:  # UUT
        (o_a, o_b), (i_a, i_b) = outcomes, settings
        for x in range(i_a):
            for y in range(i_b):
                rows.append(
                    _Row(
                        "scalar",
                        tuple(
                            (_vn(0, (a, b, x, y)), eye) for a in range(o_a) for b in range(o_b)
                        ),
                        1.0,
                        f"tr[{x},{y}]",
                        boxed=True,
                    )
                )

    return comps, rows


def _attach(prog: ConicProgram, comps: dict[str, int], rows: list[_Row]) -> None:
    for name, side in comps.items():
        prog.add_psd_var(name, side)
    for row in rows:
        if row.kind == "op":
            prog.add_op_equality(matrix_terms=list(row.terms), rhs=row.rhs, tag=row.tag)
        else:
            prog.add_scalar_equality(row.rhs, matrix_terms=list(row.terms), tag=row.tag)


def _effective_multiplier_basis(side: int, payloads: list) -> np.ndarray | None:
    """Orthonormal Hermitian basis of the joint range of self-adjoint maps.

    Multiplier directions killed by every payload touch neither the
    constraints nor the objective of the witness search, so they are cut
    before the solver sees them; leaving them in makes the KKT system
    singular.  Scaling payloads are injective, so those rows keep the
    full space.
    """
    if any(not callable(f) for f in payloads):
        return None
    full = vec_to_herm(np.eye(side * side), side)
    blocks = []
    seen: set[int] = set()
    for f in payloads:
        if id(f) in seen:
            continue
        seen.add(id(f))
        images = np.stack([np.asarray(f(e), dtype=np.complex128) for e in full])
        blocks.append(herm_to_vec((images + np.conj(np.swapaxes(images, 1, 2))) / 2))
    j = np.vstack(blocks)
    _, svals, vt = np.linalg.svd(j, full_matrices=False)
    keep = vt[svals > 1e-9]
    if keep.shape[0] == side * side:
        return None
    if keep.shape[0] == 0:
        raise IllPosedProgramError("a constraint row acts as zero on every component")
    return vec_to_herm(keep, side)


def _witness_search(comps: dict[str, int], rows: list[_Row]):
    """Search multipliers certifying the row system has no PSD solution.

    One multiplier per row (matrix for op rows, scalar otherwise); the
    combination they induce on each component is forced PSD through a
    slack variable, boxed rows are clamped to unit size, and the
    objective drives the total pairing with the right-hand sides
    negative.  Any feasible point with negative value is a separating
    functional by the standard cone-duality argument.
    """
    prog = ConicProgram()
    obj_m: list[tuple[str, np.ndarray]] = []
    obj_v: list[tuple[str, float]] = []
    for j, row in enumerate(rows):
        if row.kind == "op":
            n = row.rhs.shape[0]
            basis = None if row.boxed else _effective_multiplier_basis(
                n, [payload for _, payload in row.terms]
            )
            prog.add_free_matrix_var(f"Y{j}", n, basis=basis)
            if row.boxed:
                eye = np.eye(n)
                prog.add_psd_var(f"Bp{j}", n)
                prog.add_psd_var(f"Bm{j}", n)
                prog.add_op_equality(
                    matrix_terms=[(f"Y{j}", 1.0), (f"Bp{j}", 1.0)], rhs=eye, tag=f"bp{j}"
                )
                prog.add_op_equality(
                    matrix_terms=[(f"Y{j}", -1.0), (f"Bm{j}", 1.0)], rhs=eye, tag=f"bm{j}"
                )
            if np.any(np.abs(row.rhs) > 0):
                obj_m.append((f"Y{j}", np.asarray(row.rhs, dtype=np.complex128)))
        else:
            prog.add_scalar_var(f"y{j}")
            if row.boxed:
                prog.add_upper_bound(1.0, vector_terms=[(f"y{j}", 1.0)])
                prog.add_upper_bound(1.0, vector_terms=[(f"y{j}", -1.0)])
            if row.rhs:
                obj_v.append((f"y{j}", float(row.rhs)))
    for name, side in comps.items():
        prog.add_psd_var(f"slack[{name}]", side)
        mts: list[tuple[str, object]] = [(f"slack[{name}]", -1.0)]
        sts: list[tuple[str, np.ndarray]] = []
        for j, row in enumerate(rows):
            for var, payload in row.terms:
                if var != name:
                    continue
                if row.kind == "op":
                    mts.append((f"Y{j}", payload))
                else:
                    sts.append((f"y{j}", np.asarray(payload, dtype=np.complex128)))
        prog.add_op_equality(
            matrix_terms=mts, scalar_terms=sts, rhs=np.zeros((side, side)), tag=f"cone[{name}]"
        )
    prog.set_objective(matrix_terms=obj_m, vector_terms=obj_v)
    report = solve(prog)
    if report.status != "optimal":
        raise SolverFailureError(
            f"membership was refused but the witness search ended {report.status}"
        )
    return report


def _witness_offset(rows: list[_Row], primal: dict) -> float:
    """Pairing of the structural (non-boxed-data) multipliers with their rhs."""
    offset = 0.0
    for j, row in enumerate(rows):
        if row.kind == "op":
            if np.any(np.abs(row.rhs) > 0):
                offset += float(np.real(np.trace(np.asarray(primal[f"Y{j}"]) @ row.rhs)))
        elif row.rhs:
            offset += float(primal[f"y{j}"]) * float(row.rhs)
    return offset


# -- membership -----------------------------------------------------------------


def _norm_target(scenario: str, space: TensorSpace) -> float:
    if scenario == SDI_BIPARTITE:
        return float(_dim_of(space, "BO"))
    if scenario == TTU:
        return float(_dim_of(space, "AO") * _dim_of(space, "BO"))
    if scenario == TUU:
        return float(_dim_of(space, "AO"))
    if scenario == UTT:
        return float(_dim_of(space, "BO"))
    return 1.0


def is_causal_assemblage(w: Assemblage) -> AssemblageMembership:
    """Split the family into the two order-compatible parts, or refute it.

    Feasibility is decided by a semidefinite program whose variables are
    the unnormalized per-order families; a feasible point is polished
    onto the equality rows so the parts sum back to the input at machine
    precision.  On infeasibility the dual search returns a witness that
    is nonnegative on the whole causal set.
    """
    return _membership(w, want_witness=True)


def _membership(w: Assemblage, want_witness: bool) -> AssemblageMembership:
    rep = validate_assemblage(w)
    if not rep.passed:
        worst = max(rep.constraints, key=lambda c: c[1])
        raise ValidationError(
            f"not a valid {w.scenario} assemblage: {worst[0]} residual {worst[1]:.2e}, "
            f"min eigenvalue {rep.min_eigenvalue:.2e}"
        )
    comps, rows = _causal_rows(w.scenario, w.space, w.outcomes, w.settings)
    data = [
        _Row(
            "op",
            ((_vn(1, idx), 1.0), (_vn(2, idx), 1.0)),
            w.matrix(*idx),
            f"data[{','.join(map(str, idx))}]",
            boxed=True,
        )
        for idx in w.indices()
    ]
    prog = ConicProgram()
    _attach(prog, comps, rows + data)
    report = solve(prog)
    if report.status == "optimal":
        primal = refine_primal(prog, report.primal)
        first = {idx: LabeledOperator(w.space, primal[_vn(1, idx)]) for idx in w.indices()}
        second = {idx: LabeledOperator(w.space, primal[_vn(2, idx)]) for idx in w.indices()}
        zeros = (0,) * len(w.settings)
        mass = sum(np.trace(first[out + zeros].matrix).real for out in np.ndindex(*w.outcomes))
        q = min(1.0, max(0.0, mass / _norm_target(w.scenario, w.space)))
        dec = AssemblageCausalDecomposition(w.scenario, q, first, second)
        gap = max(
            float(np.abs(first[idx].matrix + second[idx].matrix - w.matrix(*idx)).max())
            for idx in w.indices()
        )
        if gap > REPRODUCTION_TOL:
            raise SolverFailureError(f"decomposition misses the input by {gap:.2e}")
        return AssemblageMembership(True, dec, None)
    if report.status == "infeasible":
        if not want_witness:
            return AssemblageMembership(False, None, None)
        all_rows = rows + data
        wrep = _witness_search(comps, all_rows)
        coeffs = {}
        for t, idx in enumerate(w.indices()):
            y = np.asarray(wrep.primal[f"Y{len(rows) + t}"])
            coeffs[idx] = _hermitize(y)
        offset = _witness_offset(rows, wrep.primal)
        value = offset + sum(
            float(np.real(np.trace(coeffs[idx] @ w.matrix(*idx)))) for idx in w.indices()
        )
        if value > -WITNESS_MARGIN:
            raise SolverFailureError(f"witness value {value:.2e} has no usable margin")
        witness = AssemblageWitness(w.scenario, coeffs, offset, value)
        return AssemblageMembership(False, None, witness)
    raise SolverFailureError(f"membership program ended {report.status}: {report.note}")


# -- extraction from processes --------------------------------------------------


def _check_untrusted_instruments(ins: InstrumentSet, in_name: str, out_name: str, space) -> None:
    if ins.input_label.name != in_name or ins.output_label.name != out_name:
        raise DimensionMismatchError(
            f"instruments act on {ins.input_label.name}/{ins.output_label.name}, "
            f"expected {in_name}/{out_name}"
        )
    if ins.input_label.dim != _dim_of(space, in_name) or ins.output_label.dim != _dim_of(
        space, out_name
    ):
        raise DimensionMismatchError("instrument dimensions do not match the process")
    report = validate_instruments(ins)
    if not report.passed:
        raise ValidationError(f"untrusted {in_name[0]} instruments fail validation")


def _check_untrusted_povms(pv: POVMSet, name: str, space) -> None:
    if pv.space.name != name or pv.space.dim != _dim_of(space, name):
        raise DimensionMismatchError(f"POVMs must act on {name} with the process dimension")
    report = validate_instruments(pv)
    if not report.passed:
        raise ValidationError(f"untrusted {name} POVMs fail validation")


def _contract(process: ProcessMatrix, effect: LabeledOperator, keep: tuple[str, ...]) -> LabeledOperator:
    wspace = process.op.space
    drop = tuple(n for n in wspace.names if n not in keep)
    rest = tuple(lbl for lbl in wspace.factors if lbl.name in keep)
    full = tensor(effect, identity(TensorSpace(rest))) if rest else effect
    full = permute_to(full, wspace)
    prod = LabeledOperator(wspace, full.matrix @ process.matrix)
    return permute_to(partial_trace(prod, drop), keep)


def assemblage_from_process(process: ProcessMatrix, untrusted, scenario: str) -> Assemblage:
    """Conditional trusted-side operators produced by given untrusted devices.

    ``untrusted`` is the device set of the untrusted parties: instruments
    for SDI-bipartite (Alice) and UTT (Alice), POVMs for TTU (Charlie),
    (instruments, POVMs) for TUU (Bob, Charlie), and a pair of instrument
    sets for UUT (Alice, Bob).
    """
    lay = _layout(scenario)
    want_kind = "bipartite" if scenario == SDI_BIPARTITE else "tripartite"
    if process.structure.kind != want_kind:
        raise ScenarioError(f"{scenario} needs a {want_kind} process")
    wspace = process.op.space
    space = TensorSpace(tuple(lbl for lbl in wspace.factors if lbl.name in lay.trusted))

    elements: dict[tuple[int, ...], LabeledOperator] = {}
    if scenario == SDI_BIPARTITE:
        _check_untrusted_instruments(untrusted, "AI", "AO", wspace)
        outcomes, settings = (untrusted.outcomes,), (untrusted.settings,)
        for x in range(untrusted.settings):
            for a in range(untrusted.outcomes):
                elements[(a, x)] = _contract(process, untrusted.element(x, a), lay.trusted)
    elif scenario == TTU:
        _check_untrusted_povms(untrusted, "CI", wspace)
        outcomes, settings = (untrusted.outcomes,), (untrusted.settings,)
        for z in range(untrusted.settings):
            for c in range(untrusted.outcomes):
                elements[(c, z)] = _contract(process, untrusted.element(z, c), lay.trusted)
    elif scenario == TUU:
        bob, charlie = untrusted
        _check_untrusted_instruments(bob, "BI", "BO", wspace)
        _check_untrusted_povms(charlie, "CI", wspace)
        outcomes = (bob.outcomes, charlie.outcomes)
        settings = (bob.settings, charlie.settings)
        for b in range(bob.outcomes):
            for c in range(charlie.outcomes):
                for y in range(bob.settings):
                    for z in range(charlie.settings):
                        eff = tensor(bob.element(y, b), charlie.element(z, c))
                        elements[(b, c, y, z)] = _contract(process, eff, lay.trusted)
    elif scenario == UTT:
        _check_untrusted_instruments(untrusted, "AI", "AO", wspace)
        outcomes, settings = (untrusted.outcomes,), (untrusted.settings,)
        for x in range(untrusted.settings):
            for a in range(untrusted.outcomes):
                elements[(a, x)] = _contract(process, untrusted.element(x, a), lay.trusted)
    else:  # UUT
        alice, bob = untrusted
        _check_untrusted_instruments(alice, "AI", "AO", wspace)
        _check_untrusted_instruments(bob, "BI", "BO", wspace)
        outcomes = (alice.outcomes, bob.outcomes)
        settings = (alice.settings, bob.settings)
        for a in range(alice.outcomes):
            for b in range(bob.outcomes):
                for x in range(alice.settings):
                    for y in range(bob.settings):
                        eff = tensor(alice.element(x, a), bob.element(y, b))
                        elements[(a, b, x, y)] = _contract(process, eff, lay.trusted)

    return Assemblage(scenario, space, outcomes, settings, elements)


def nonprocess_assemblage_example() -> Assemblage:
    """A valid family no process can generate: it reads the input and the output.

    w[a,x] = |x><x| (x) |a><a| on qubit BI (x) BO.  Paired with trusted
    instruments that measure BI and reprepare BO by the setting, it
    reproduces the deterministic both-ways-signalling table, which no
    process matrix (causal or not) can reach.
    """
    bi, bo = SpaceLabel("BI", 2), SpaceLabel("BO", 2)
    space = TensorSpace((bi, bo))
    eye = np.eye(2)
    elements = {
        (a, x): LabeledOperator(space, np.kron(_proj(eye[x]), _proj(eye[a])))
        for a in range(2)
        for x in range(2)
    }
    return Assemblage(SDI_BIPARTITE, space, (2,), (2,), elements)


# -- behaviour-level certification ----------------------------------------------


def _trusted_effects(behaviour, trusted, scenario: str):
    """Trusted space, untrusted shape, and per-entry (component idx, effect)."""
    p = behaviour.p
    if scenario == SDI_BIPARTITE:
        if behaviour.arity != "bipartite":
            raise ScenarioError("SDI-bipartite certification needs a two-party behaviour")
        bob = trusted
        if not isinstance(bob, InstrumentSet):
            raise ValidationError("trusted side of SDI-bipartite is one instrument set")
        i_a, i_b, o_a, o_b = p.shape
        if bob.settings != i_b or bob.outcomes != o_b:
            raise DimensionMismatchError("trusted instruments do not match the behaviour shape")
        if not validate_instruments(bob).passed:
            raise ValidationError("trusted instruments fail validation")
        space = TensorSpace(
            (SpaceLabel("BI", bob.input_label.dim), SpaceLabel("BO", bob.output_label.dim))
        )
        outcomes, settings = (o_a,), (i_a,)
        entries = [
            ((a, x), bob.element(y, b).matrix, (x, y, a, b))
            for x in range(i_a)
            for y in range(i_b)
            for a in range(o_a)
            for b in range(o_b)
        ]
        return space, outcomes, settings, entries

    if behaviour.arity != "tripartite":
        raise ScenarioError(f"{scenario} certification needs a three-party behaviour")
    i_a, i_b, i_c, o_a, o_b, o_c = p.shape

    if scenario == TTU:
        alice, bob = trusted
        for ins, (st, oc) in ((alice, (i_a, o_a)), (bob, (i_b, o_b))):
            if not isinstance(ins, InstrumentSet) or ins.settings != st or ins.outcomes != oc:
                raise DimensionMismatchError("trusted instruments do not match the behaviour")
            if not validate_instruments(ins).passed:
                raise ValidationError("trusted instruments fail validation")
        space = TensorSpace(
            (
                SpaceLabel("AI", alice.input_label.dim),
                SpaceLabel("AO", alice.output_label.dim),
                SpaceLabel("BI", bob.input_label.dim),
                SpaceLabel("BO", bob.output_label.dim),
            )
        )
        entries = [
            (
                (c, z),
                np.kron(alice.element(x, a).matrix, bob.element(y, b).matrix),
                (x, y, z, a, b, c),
            )
            for x in range(i_a)
            for y in range(i_b)
            for z in range(i_c)
            for a in range(o_a)
            for b in range(o_b)
            for c in range(o_c)
        ]
        return space, (o_c,), (i_c,), entries

    if scenario == TUU:
        alice = trusted
        if not isinstance(alice, InstrumentSet) or alice.settings != i_a or alice.outcomes != o_a:
            raise DimensionMismatchError("trusted instruments do not match the behaviour")
        if not validate_instruments(alice).passed:
            raise ValidationError("trusted instruments fail validation")
        space = TensorSpace(
            (SpaceLabel("AI", alice.input_label.dim), SpaceLabel("AO", alice.output_label.dim))
        )
        entries = [
            ((b, c, y, z), alice.element(x, a).matrix, (x, y, z, a, b, c))
            for x in range(i_a)
            for y in range(i_b)
            for z in range(i_c)
            for a in range(o_a)
            for b in range(o_b)
            for c in range(o_c)
        ]
        return space, (o_b, o_c), (i_b, i_c), entries

    if scenario == UTT:
        bob, charlie = trusted
        if not isinstance(bob, InstrumentSet) or bob.settings != i_b or bob.outcomes != o_b:
            raise DimensionMismatchError("trusted instruments do not match the behaviour")
        if not isinstance(charlie, POVMSet) or charlie.settings != i_c or charlie.outcomes != o_c:
            raise DimensionMismatchError("trusted POVMs do not match the behaviour")
        if not (validate_instruments(bob).passed and validate_instruments(charlie).passed):
            raise ValidationError("trusted devices fail validation")
        space = TensorSpace(
            (
                SpaceLabel("BI", bob.input_label.dim),
                SpaceLabel("BO", bob.output_label.dim),
                SpaceLabel("CI", charlie.space.dim),
            )
        )
        entries = [
            (
                (a, x),
                np.kron(bob.element(y, b).matrix, charlie.element(z, c).matrix),
                (x, y, z, a, b, c),
            )
            for x in range(i_a)
            for y in range(i_b)
            for z in range(i_c)
            for a in range(o_a)
            for b in range(o_b)
            for c in range(o_c)
        ]
        return space, (o_a,), (i_a,), entries

    charlie = trusted
    if not isinstance(charlie, POVMSet) or charlie.settings != i_c or charlie.outcomes != o_c:
        raise DimensionMismatchError("trusted POVMs do not match the behaviour")
    if not validate_instruments(charlie).passed:
        raise ValidationError("trusted POVMs fail validation")
    space = TensorSpace((SpaceLabel("CI", charlie.space.dim),))
    entries = [
        ((a, b, x, y), charlie.element(z, c).matrix, (x, y, z, a, b, c))
        for x in range(i_a)
        for y in range(i_b)
        for z in range(i_c)
        for a in range(o_a)
        for b in range(o_b)
        for c in range(o_c)
    ]
    return space, (o_a, o_b), (i_a, i_b), entries


def certify_sdi(behaviour, trusted, scenario: str) -> SemiDeviceIndependentVerdict:
    """Decide whether trusted devices certify the behaviour as noncausal.

    Searches for a causal assemblage that reproduces the table through
    the trusted elements.  None existing while a general valid family
    does means the correlations themselves witness noncausality; no
    valid family at all means the table is inconsistent with the claimed
    trusted devices.
    """
    _layout(scenario)
    space, outcomes, settings, entries = _trusted_effects(behaviour, trusted, scenario)
    p = behaviour.p

    comps_v, rows_v = _validity_rows(scenario, space, outcomes, settings)
    prog = ConicProgram()
    data_v = [
        _Row("scalar", ((_vn(0, idx), eff),), float(p[entry]), f"p[{t}]", boxed=True)
        for t, (idx, eff, entry) in enumerate(entries)
    ]
    _attach(prog, comps_v, rows_v + data_v)
    general = solve(prog)
    if general.status == "infeasible":
        return SemiDeviceIndependentVerdict(
            "inconsistent-behaviour",
            scenario,
            note="no valid assemblage reproduces the table through these devices",
        )
    if general.status != "optimal":
        raise SolverFailureError(f"validity stage ended {general.status}: {general.note}")

    comps, rows = _causal_rows(scenario, space, outcomes, settings)
    data = [
        _Row(
            "scalar",
            ((_vn(1, idx), eff), (_vn(2, idx), eff)),
            float(p[entry]),
            f"p[{t}]",
            boxed=True,
        )
        for t, (idx, eff, entry) in enumerate(entries)
    ]
    prog = ConicProgram()
    _attach(prog, comps, rows + data)
    report = solve(prog)
    if report.status == "optimal":
        primal = refine_primal(prog, report.primal)
        elements = {
            idx: LabeledOperator(space, _hermitize(primal[_vn(1, idx)] + primal[_vn(2, idx)]))
            for idx in (tuple(i) for i in np.ndindex(*outcomes, *settings))
        }
        assemblage = Assemblage(scenario, space, outcomes, settings, elements)
        return SemiDeviceIndependentVerdict(
            "not-certified",
            scenario,
            assemblage=assemblage,
            note="a causal assemblage reproduces the behaviour",
        )
    if report.status != "infeasible":
        raise SolverFailureError(f"causal stage ended {report.status}: {report.note}")

    all_rows = rows + data
    wrep = _witness_search(comps, all_rows)
    coeffs = np.zeros(p.shape)
    for t, (_, _, entry) in enumerate(entries):
        coeffs[entry] = float(wrep.primal[f"y{len(rows) + t}"])
    offset = _witness_offset(rows, wrep.primal)
    value = float(np.sum(coeffs * p) + offset)
    if value > -WITNESS_MARGIN:
        raise SolverFailureError(f"witness value {value:.2e} has no usable margin")
    return SemiDeviceIndependentVerdict(
        "certified-noncausal",
        scenario,
        witness=SemiDeviceWitness(coeffs, offset, value),
        note="no causal assemblage is compatible with the behaviour",
    )


# -- realization ----------------------------------------------------------------


def _family_mass(family: dict, outcomes: tuple[int, ...], n_settings: int) -> float:
    zeros = (0,) * n_settings
    return float(
        sum(np.trace(family[out + zeros].matrix).real for out in np.ndindex(*outcomes))
    )


def _one_order_residual(w: Assemblage, fam: int) -> float:
    """Worst violation of one order's structural rows by (w, 0).

    Zero means the whole family already belongs to that order, so the
    single-order construction applies without splitting; the decision is
    linear and avoids trusting solver dust in the other family's mass.
    """
    _, rows = _causal_rows(w.scenario, w.space, w.outcomes, w.settings)
    vals = {_vn(fam, idx): w.matrix(*idx) for idx in w.indices()}
    worst = 0.0
    for row in rows:
        if row.kind == "op":
            acc = -np.asarray(row.rhs, dtype=np.complex128)
            for name, payload in row.terms:
                m = vals.get(name)
                if m is None:
                    continue
                acc = acc + (payload(m) if callable(payload) else payload * m)
            worst = max(worst, float(np.abs(acc).max()))
        else:
            tot = -float(row.rhs)
            for name, e in row.terms:
                m = vals.get(name)
                if m is None:
                    continue
                tot += float(np.real(np.trace(np.asarray(e) @ m)))
            worst = max(worst, abs(tot))
    return worst


def _realize_sdi_pure_ab(w_elems, o_a, i_a, d_bi, d_bo):
    """First-acting Alice: her output is wired straight into Bob's input."""
    ai, ao = SpaceLabel("AI", 1), SpaceLabel("AO", d_bi)
    bi, bo = SpaceLabel("BI", d_bi), SpaceLabel("BO", d_bo)
    ispace = TensorSpace((ai, ao))
    rows = []
    for x in range(i_a):
        row = []
        for a in range(o_a):
            m = w_elems[(a, x)].reshape(d_bi, d_bo, d_bi, d_bo)
            sigma = np.trace(m, axis1=1, axis2=3) / d_bo
            row.append(LabeledOperator(ispace, np.kron(np.eye(1), sigma.T)))
        rows.append(tuple(row))
    wop = tensor(identity(TensorSpace((ai,))), max_entangled(ao, bi), identity(TensorSpace((bo,))))
    process = ProcessMatrix(wop, PartyStructure.bipartite(1, d_bi, d_bi, d_bo))
    return process, InstrumentSet(ai, ao, tuple(rows))


def _realize_sdi_pure_ba(w_elems, o_a, i_a, d_bi, d_bo):
    """Last-acting Alice: Bob's leftovers are teleported into her input.

    Alice's input splits as a purification leg of the common state and a
    maximally entangled copy of Bob's output; measuring the transposed
    elements there (whitened by the state) reproduces the family.
    """
    rho = np.zeros((d_bi, d_bi), dtype=np.complex128)
    for a in range(o_a):
        m = w_elems[(a, 0)].reshape(d_bi, d_bo, d_bi, d_bo)
        rho += np.trace(m, axis1=1, axis2=3) / d_bo
    vecs, vals, inv_sqrt, supp = _support(rho)
    u = np.kron(vecs, np.eye(d_bo))
    sand = np.kron(np.diag(inv_sqrt), np.eye(d_bo))
    pad = np.kron(np.diag(1.0 - supp), np.eye(d_bo))
    ai, ao = SpaceLabel("AI", d_bi * d_bo), SpaceLabel("AO", 1)
    bi, bo = SpaceLabel("BI", d_bi), SpaceLabel("BO", d_bo)
    ispace = TensorSpace((ai, ao))
    rows = []
    for x in range(i_a):
        row = []
        for a in range(o_a):
            wt = (u.conj().T @ w_elems[(a, x)] @ u).T
            elem = sand @ wt @ sand
            if a == 0:
                elem = elem + pad
            row.append(LabeledOperator(ispace, elem))
        rows.append(tuple(row))
    ap = SpaceLabel("APRIME", d_bi)
    app = SpaceLabel("ADOUBLE", d_bo)
    psi = _purified(vals, vecs)
    psi_op = LabeledOperator(TensorSpace((bi, ap)), _proj(psi))
    wop = tensor(psi_op, max_entangled(bo, app), identity(TensorSpace((ao,))))
    wop = _fuse(
        wop, [(ai, ("APRIME", "ADOUBLE")), (ao, ("AO",)), (bi, ("BI",)), (bo, ("BO",))]
    )
    process = ProcessMatrix(wop, PartyStructure.bipartite(d_bi * d_bo, 1, d_bi, d_bo))
    return process, InstrumentSet(ai, ao, tuple(rows))


def _realize_sdi(w: Assemblage, dec: AssemblageCausalDecomposition):
    d_bi, d_bo = w.space.dims
    (o_a,), (i_a,) = w.outcomes, w.settings
    m1 = _family_mass(dec.first, w.outcomes, 1) / d_bo
    m2 = _family_mass(dec.second, w.outcomes, 1) / d_bo
    raw = {idx: _psd_clip(w.matrix(*idx)) for idx in w.indices()}
    if m2 <= _PURE_MASS and _one_order_residual(w, 1) <= RESIDUAL_TOL:
        return _realize_sdi_pure_ab(raw, o_a, i_a, d_bi, d_bo)
    if m1 <= _PURE_MASS and _one_order_residual(w, 2) <= RESIDUAL_TOL:
        return _realize_sdi_pure_ba(raw, o_a, i_a, d_bi, d_bo)

    q = m1
    f1 = {idx: _psd_clip(dec.first[idx].matrix) for idx in w.indices()}
    f2 = {idx: _psd_clip(dec.second[idx].matrix) for idx in w.indices()}
    rho2 = np.zeros((d_bi, d_bi), dtype=np.complex128)
    for a in range(o_a):
        m = f2[(a, 0)].reshape(d_bi, d_bo, d_bi, d_bo)
        rho2 += np.trace(m, axis1=1, axis2=3) / d_bo
    vecs, vals, inv_sqrt, supp = _support(rho2)
    u = np.kron(vecs, np.eye(d_bo))
    sand = np.kron(np.diag(inv_sqrt), np.eye(d_bo))
    pad = np.kron(np.diag(1.0 - supp), np.eye(d_bo))

    d_ac = d_bi * d_bo
    ai = SpaceLabel("AI", 2 * d_ac)
    ao = SpaceLabel("AO", d_bi)
    bi, bo = SpaceLabel("BI", d_bi), SpaceLabel("BO", d_bo)
    ispace = TensorSpace((ai, ao))
    p0, p1 = _basis_proj(2, 0), _basis_proj(2, 1)
    rows = []
    for x in range(i_a):
        row = []
        for a in range(o_a):
            m = f1[(a, x)].reshape(d_bi, d_bo, d_bi, d_bo)
            sigma_hat = np.trace(m, axis1=1, axis2=3) / (d_bo * q)
            lead = np.kron(np.kron(np.eye(d_ac), p0), sigma_hat.T)
            elem2 = sand @ (u.conj().T @ f2[(a, x)] @ u).T @ sand
            if a == 0:
                elem2 = elem2 + pad
            trail = np.kron(np.kron(elem2, p1), np.eye(d_bi) / d_bi)
            row.append(LabeledOperator(ispace, lead + trail))
        rows.append(tuple(row))

    ap = SpaceLabel("APRIME", d_bi)
    app = SpaceLabel("ADOUBLE", d_bo)
    aq = SpaceLabel("AFLAG", 2)
    core = TensorSpace((ap, app))
    w1 = tensor(
        LabeledOperator(core, np.eye(d_ac) / d_ac),
        LabeledOperator(TensorSpace((aq,)), p0),
        max_entangled(ao, bi),
        identity(TensorSpace((bo,))),
    )
    psi = _purified(vals / (1.0 - q), vecs)
    w2 = tensor(
        LabeledOperator(TensorSpace((bi, ap)), _proj(psi)),
        max_entangled(bo, app),
        LabeledOperator(TensorSpace((aq,)), p1),
        identity(TensorSpace((ao,))),
    )
    flat = ("APRIME", "ADOUBLE", "AFLAG", "AO", "BI", "BO")
    total = permute_to(q * w1, flat) + permute_to((1.0 - q) * w2, flat)
    wop = _fuse(
        total,
        [(ai, ("APRIME", "ADOUBLE", "AFLAG")), (ao, ("AO",)), (bi, ("BI",)), (bo, ("BO",))],
    )
    process = ProcessMatrix(wop, PartyStructure.bipartite(2 * d_ac, d_bi, d_bi, d_bo))
    return process, InstrumentSet(ai, ao, tuple(rows))


def _ttu_branch(family, o_c, i_c, n_ab):
    """Purification leg and whitened-transpose POVM blocks for one family."""
    total = np.zeros((n_ab, n_ab), dtype=np.complex128)
    for c in range(o_c):
        total += family[(c, 0)]
    vecs, vals, inv_sqrt, supp = _support(total)
    leg = _purified(vals, vecs)
    blocks = []
    for z in range(i_c):
        row = []
        for c in range(o_c):
            m = np.diag(inv_sqrt) @ (vecs.conj().T @ family[(c, z)] @ vecs).T @ np.diag(inv_sqrt)
            if c == 0:
                m = m + np.diag(1.0 - supp)
            row.append(m)
        blocks.append(row)
    return leg, blocks


def _realize_ttu(w: Assemblage):
    """Charlie reads a purifying leg of the family's common process sum."""
    dims = w.space.dims
    n_ab = w.space.dim
    (o_c,), (i_c,) = w.outcomes, w.settings
    membership = _membership(w, want_witness=False)

    if membership.causal:
        dec = membership.decomposition
        m1 = _family_mass(dec.first, w.outcomes, 1)
        m2 = _family_mass(dec.second, w.outcomes, 1)
        if min(m1, m2) > _PURE_MASS:
            ci = SpaceLabel("CI", 2 * n_ab)
            f1 = {idx: _psd_clip(dec.first[idx].matrix) for idx in w.indices()}
            f2 = {idx: _psd_clip(dec.second[idx].matrix) for idx in w.indices()}
            leg1, blocks1 = _ttu_branch(f1, o_c, i_c, n_ab)
            leg2, blocks2 = _ttu_branch(f2, o_c, i_c, n_ab)
            p0, p1 = _basis_proj(2, 0), _basis_proj(2, 1)
            mat = np.kron(_proj(leg1), p0) + np.kron(_proj(leg2), p1)
            cic = SpaceLabel("CCORE", n_ab)
            ciq = SpaceLabel("CFLAG", 2)
            wspace = TensorSpace(tuple(w.space.factors) + (cic, ciq))
            wop = _fuse(
                LabeledOperator(wspace, mat),
                [(lbl, (lbl.name,)) for lbl in w.space.factors] + [(ci, ("CCORE", "CFLAG"))],
            )
            process = ProcessMatrix(wop, PartyStructure.charlie_last(*dims, 2 * n_ab))
            pspace = TensorSpace((ci,))
            rows = tuple(
                tuple(
                    LabeledOperator(pspace, np.kron(blocks1[z][c], p0) + np.kron(blocks2[z][c], p1))
                    for c in range(o_c)
                )
                for z in range(i_c)
            )
            return process, POVMSet(ci, rows)

    raw = {idx: _psd_clip(w.matrix(*idx)) for idx in w.indices()}
    leg, blocks = _ttu_branch(raw, o_c, i_c, n_ab)
    ci = SpaceLabel("CI", n_ab)
    wspace = TensorSpace(tuple(w.space.factors) + (ci,))
    wop = LabeledOperator(wspace, _proj(leg))
    process = ProcessMatrix(wop, PartyStructure.charlie_last(*dims, n_ab))
    pspace = TensorSpace((ci,))
    rows = tuple(
        tuple(LabeledOperator(pspace, blocks[z][c]) for c in range(o_c)) for z in range(i_c)
    )
    return process, POVMSet(ci, rows)


def _uut_chain_first(family, outcomes, settings, lead):
    """Marginal success rates of the leading party, from the y=0 (x=0) slice."""
    (o_a, o_b), (i_a, i_b) = outcomes, settings
    if lead == "A":
        return {
            (a, x): sum(np.trace(family[(a, b, x, 0)]).real for b in range(o_b))
            for a in range(o_a)
            for x in range(i_a)
        }
    return {
        (b, y): sum(np.trace(family[(a, b, 0, y)]).real for a in range(o_a))
        for b in range(o_b)
        for y in range(i_b)
    }


def _realize_uut_pure(w_elems, outcomes, settings, d_c, lead):
    """One fixed order: the leader broadcasts its outded setting and outcome
    through a maximally entangled wire, the follower conditions on it and
    forwards the (renormalized, transposed) family element to Charlie."""
    (o_a, o_b), (i_a, i_b) = outcomes, settings
    first = _uut_chain_first(w_elems, outcomes, settings, lead)
    if lead == "A":
        s = o_a * i_a
        enc = lambda a, x: a * i_a + x
        ai, ao = SpaceLabel("AI", 1), SpaceLabel("AO", s)
        bi, bo = SpaceLabel("BI", s), SpaceLabel("BO", d_c)
        ci = SpaceLabel("CI", d_c)
        a_rows = []
        for x in range(i_a):
            a_rows.append(
                tuple(
                    LabeledOperator(
                        TensorSpace((ai, ao)),
                        first[(a, x)] * np.kron(np.eye(1), _basis_proj(s, enc(a, x))),
                    )
                    for a in range(o_a)
                )
            )
        b_rows = []
        for y in range(i_b):
            row = []
            for b in range(o_b):
                m = np.zeros((s * d_c, s * d_c), dtype=np.complex128)
                for a in range(o_a):
                    for x in range(i_a):
                        if first[(a, x)] > SUPPORT_CUT:
                            part = (w_elems[(a, b, x, y)] / first[(a, x)]).T
                        else:
                            part = np.eye(d_c) / (o_b * d_c)
                        m += np.kron(_basis_proj(s, enc(a, x)), part)
                row.append(LabeledOperator(TensorSpace((bi, bo)), m))
            b_rows.append(tuple(row))
        wop = tensor(identity(TensorSpace((ai,))), max_entangled(ao, bi), max_entangled(bo, ci))
        process = ProcessMatrix(wop, PartyStructure.charlie_last(1, s, s, d_c, d_c))
        return (
            process,
            InstrumentSet(ai, ao, tuple(a_rows)),
            InstrumentSet(bi, bo, tuple(b_rows)),
        )

    r = o_b * i_b
    enc = lambda b, y: b * i_b + y
    bi, bo = SpaceLabel("BI", 1), SpaceLabel("BO", r)
    ai, ao = SpaceLabel("AI", r), SpaceLabel("AO", d_c)
    ci = SpaceLabel("CI", d_c)
    b_rows = []
    for y in range(i_b):
        b_rows.append(
            tuple(
                LabeledOperator(
                    TensorSpace((bi, bo)),
                    first[(b, y)] * np.kron(np.eye(1), _basis_proj(r, enc(b, y))),
                )
                for b in range(o_b)
            )
        )
    a_rows = []
    for x in range(i_a):
        row = []
        for a in range(o_a):
            m = np.zeros((r * d_c, r * d_c), dtype=np.complex128)
            for b in range(o_b):
                for y in range(i_b):
                    if first[(b, y)] > SUPPORT_CUT:
                        part = (w_elems[(a, b, x, y)] / first[(b, y)]).T
                    else:
                        part = np.eye(d_c) / (o_a * d_c)
                    m += np.kron(_basis_proj(r, enc(b, y)), part)
            row.append(LabeledOperator(TensorSpace((ai, ao)), m))
        a_rows.append(tuple(row))
    wop = tensor(identity(TensorSpace((bi,))), max_entangled(bo, ai), max_entangled(ao, ci))
    process = ProcessMatrix(wop, PartyStructure.charlie_last(r, d_c, 1, r, d_c))
    return (
        process,
        InstrumentSet(ai, ao, tuple(a_rows)),
        InstrumentSet(bi, bo, tuple(b_rows)),
    )


def _realize_uut(w: Assemblage, dec: AssemblageCausalDecomposition):
    d_c = w.space.dim
    (o_a, o_b), (i_a, i_b) = w.outcomes, w.settings
    m1 = _family_mass(dec.first, w.outcomes, 2)
    m2 = _family_mass(dec.second, w.outcomes, 2)
    raw = {idx: _psd_clip(w.matrix(*idx)) for idx in w.indices()}
    if m2 <= _PURE_MASS and _one_order_residual(w, 1) <= RESIDUAL_TOL:
        return _realize_uut_pure(raw, w.outcomes, w.settings, d_c, "A")
    if m1 <= _PURE_MASS and _one_order_residual(w, 2) <= RESIDUAL_TOL:
        return _realize_uut_pure(raw, w.outcomes, w.settings, d_c, "B")

    q = m1
    f1 = {idx: _psd_clip(dec.first[idx].matrix) / q for idx in w.indices()}
    f2 = {idx: _psd_clip(dec.second[idx].matrix) / (1.0 - q) for idx in w.indices()}
    pa1 = _uut_chain_first(f1, w.outcomes, w.settings, "A")
    pb2 = _uut_chain_first(f2, w.outcomes, w.settings, "B")
    s, r = o_a * i_a, o_b * i_b
    enc_ax = lambda a, x: a * i_a + x
    enc_by = lambda b, y: b * i_b + y
    p0, p1 = _basis_proj(2, 0), _basis_proj(2, 1)

    ai = SpaceLabel("AI", 2 * r)
    ao = SpaceLabel("AO", s * d_c)
    bi = SpaceLabel("BI", 2 * s)
    bo = SpaceLabel("BO", r * d_c)
    ci = SpaceLabel("CI", d_c)

    a_rows = []
    for x in range(i_a):
        row = []
        for a in range(o_a):
            lead = np.kron(
                np.kron(np.eye(r), p0),
                np.kron(pa1[(a, x)] * _basis_proj(s, enc_ax(a, x)), np.eye(d_c) / d_c),
            )
            trail = np.zeros((2 * r * s * d_c, 2 * r * s * d_c), dtype=np.complex128)
            for b in range(o_b):
                for y in range(i_b):
                    if pb2[(b, y)] > SUPPORT_CUT:
                        part = (f2[(a, b, x, y)] / pb2[(b, y)]).T
                    else:
                        part = np.eye(d_c) / (o_a * d_c)
                    trail += np.kron(
                        np.kron(_basis_proj(r, enc_by(b, y)), p1),
                        np.kron(np.eye(s) / s, part),
                    )
            row.append(LabeledOperator(TensorSpace((ai, ao)), lead + trail))
        a_rows.append(tuple(row))

    b_rows = []
    for y in range(i_b):
        row = []
        for b in range(o_b):
            lead = np.zeros((2 * s * r * d_c, 2 * s * r * d_c), dtype=np.complex128)
            for a in range(o_a):
                for x in range(i_a):
                    if pa1[(a, x)] > SUPPORT_CUT:
                        part = (f1[(a, b, x, y)] / pa1[(a, x)]).T
                    else:
                        part = np.eye(d_c) / (o_b * d_c)
                    lead += np.kron(
                        np.kron(_basis_proj(s, enc_ax(a, x)), p0),
                        np.kron(np.eye(r) / r, part),
                    )
            trail = np.kron(
                np.kron(np.eye(s), p1),
                np.kron(pb2[(b, y)] * _basis_proj(r, enc_by(b, y)), np.eye(d_c) / d_c),
            )
            row.append(LabeledOperator(TensorSpace((bi, bo)), lead + trail))
        b_rows.append(tuple(row))

    aic, aiq = SpaceLabel("ACORE", r), SpaceLabel("AFLAG", 2)
    ao1, ao2 = SpaceLabel("AOUTA", s), SpaceLabel("AOUTB", d_c)
    bic, biq = SpaceLabel("BCORE", s), SpaceLabel("BFLAG", 2)
    bo1, bo2 = SpaceLabel("BOUTA", r), SpaceLabel("BOUTB", d_c)
    w1 = tensor(
        LabeledOperator(TensorSpace((aic,)), np.eye(r) / r),
        LabeledOperator(TensorSpace((aiq,)), p0),
        max_entangled(ao1, bic),
        identity(TensorSpace((ao2,))),
        LabeledOperator(TensorSpace((biq,)), p0),
        identity(TensorSpace((bo1,))),
        max_entangled(bo2, ci),
    )
    w2 = tensor(
        LabeledOperator(TensorSpace((bic,)), np.eye(s) / s),
        LabeledOperator(TensorSpace((biq,)), p1),
        max_entangled(bo1, aic),
        identity(TensorSpace((bo2,))),
        LabeledOperator(TensorSpace((aiq,)), p1),
        identity(TensorSpace((ao1,))),
        max_entangled(ao2, ci),
    )
    flat = ("ACORE", "AFLAG", "AOUTA", "AOUTB", "BCORE", "BFLAG", "BOUTA", "BOUTB", "CI")
    total = permute_to(q * w1, flat) + permute_to((1.0 - q) * w2, flat)
    wop = _fuse(
        total,
        [
            (ai, ("ACORE", "AFLAG")),
            (ao, ("AOUTA", "AOUTB")),
            (bi, ("BCORE", "BFLAG")),
            (bo, ("BOUTA", "BOUTB")),
            (ci, ("CI",)),
        ],
    )
    process = ProcessMatrix(wop, PartyStructure.charlie_last(2 * r, s * d_c, 2 * s, r * d_c, d_c))
    return (
        process,
        InstrumentSet(ai, ao, tuple(a_rows)),
        InstrumentSet(bi, bo, tuple(b_rows)),
    )


def realize_causal_assemblage(w: Assemblage):
    """Build devices and a process that reproduce the assemblage exactly.

    Returns (process, alice_instruments) for SDI-bipartite, (process,
    charlie_povms) for TTU, and (process, alice_instruments,
    bob_instruments) for UUT.  TTU accepts any valid family (a causal
    one yields a causally separable process); the other two require a
    causal input.  No recipe is known for TUU or UTT.
    """
    if w.scenario in (TUU, UTT):
        raise UnsupportedScenarioError(
            f"no general realization recipe is known for {w.scenario}"
        )
    rep = validate_assemblage(w)
    if not rep.passed:
        raise ValidationError(f"not a valid {w.scenario} assemblage")
    if w.scenario == TTU:
        return _realize_ttu(w)
    membership = is_causal_assemblage(w)
    if not membership.causal:
        raise ValidationError(
            f"the {w.scenario} assemblage is noncausal "
            f"(witness value {membership.witness.value:.3e}); nothing to realize"
        )
    if w.scenario == SDI_BIPARTITE:
        return _realize_sdi(w, membership.decomposition)
    return _realize_uut(w, membership.decomposition)
