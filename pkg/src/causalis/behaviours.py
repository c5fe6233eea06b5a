"""Behaviours: the probability tables an experiment produces.

Evaluates p(ab|xy) and p(abc|xyz) from a process matrix and local
instruments, decides membership in the causal polytope by a weight LP
over deterministic one-way strategies, scores the
guess-your-neighbour's-input game, turns those pieces into
device-dependent / device-independent certification verdicts, and
provides the constructive inverse: explicit instruments and a causally
separable process matrix reproducing any causal behaviour.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy.optimize import nnls

from .conic import ConicProgram, solve, solve_lp
from .errors import (
    DimensionMismatchError,
    ExplosionGuardError,
    InvalidDecompositionError,
    ScenarioError,
    SolverFailureError,
    ValidationError,
)
from .instruments import InstrumentSet, POVMSet, validate_instruments
from .processes import (
    CausalDecomposition,
    PartyStructure,
    ProcessMatrix,
    _project_coords,
    membership_basis,
)
from .spaces import (
    LabeledOperator,
    SpaceLabel,
    TensorSpace,
    identity,
    max_entangled,
    permute_to,
    tensor,
)

ENTRY_FLOOR = -1e-12
SETTING_NORM_TOL = 1e-9
WEIGHT_FIT_TOL = 1e-8
ORDER_TOL = 1e-9
STRATEGY_LIMIT = 10**6
_EDGE = 1e-12


class Behaviour:
    """Joint conditional outcome distribution, indexed [x][y][(z)][a][b][(c)].

    Entries are clipped at zero after a -1e-12 floor check, each setting
    row is renormalized when within 1e-9 of unit sum and rejected
    otherwise, and tripartite tables must have an (a, b) marginal that
    ignores the last party's setting: the third party never signals
    backwards.
    """

    __slots__ = ("settings", "outcomes", "p")

    def __init__(self, p, settings, outcomes):
        settings = tuple(int(s) for s in settings)
        outcomes = tuple(int(o) for o in outcomes)
        if len(settings) != len(outcomes) or len(settings) not in (2, 3):
            raise ScenarioError(
                f"need matching setting/outcome counts for 2 or 3 parties, "
                f"got {settings} / {outcomes}"
            )
        if min(settings) < 1 or min(outcomes) < 1:
            raise ValidationError("setting and outcome counts must be >= 1")
        arr = np.array(p, dtype=float)
        if arr.shape != settings + outcomes:
            raise DimensionMismatchError(
                f"table shape {arr.shape} != settings+outcomes {settings + outcomes}"
            )
        if arr.size and float(arr.min()) < ENTRY_FLOOR:
            raise ValidationError(f"negative probability {arr.min()}")
        arr = np.clip(arr, 0.0, None)
        k = len(outcomes)
        sums = arr.sum(axis=tuple(range(k, 2 * k)))
        if float(np.max(np.abs(sums - 1.0))) > SETTING_NORM_TOL:
            raise ValidationError(
                f"setting normalization off by {np.max(np.abs(sums - 1.0))}"
            )
        arr = arr / sums[(...,) + (None,) * k]
        if k == 3:
            ab = arr.sum(axis=5)
            drift = float(np.max(np.abs(ab - ab[:, :, :1])))
            if drift > SETTING_NORM_TOL:
                raise ValidationError(
                    f"joint marginal of the first two parties shifts with the "
                    f"last party's setting by {drift}"
                )
        arr.setflags(write=False)
        object.__setattr__(self, "settings", settings)
        object.__setattr__(self, "outcomes", outcomes)
        object.__setattr__(self, "p", arr)

    def __setattr__(self, key, value):  # pragma: no cover - guard
        raise AttributeError("Behaviour is immutable")

    @property
    def arity(self) -> str:
        return "bipartite" if len(self.settings) == 2 else "tripartite"

    def allclose(self, other: "Behaviour", tol: float = 1e-9) -> bool:
        return (
            self.settings == other.settings
            and self.outcomes == other.outcomes
            and bool(np.max(np.abs(self.p - other.p)) <= tol)
        )

    def __repr__(self) -> str:
        return f"Behaviour(settings={self.settings}, outcomes={self.outcomes})"


# -- Born rule --------------------------------------------------------------------


def _check_party(iset: InstrumentSet, in_name: str, out_name: str, structure) -> None:
    want_in = SpaceLabel(in_name, structure.dim_of(in_name))
    want_out = SpaceLabel(out_name, structure.dim_of(out_name))
    if iset.input_label != want_in or iset.output_label != want_out:
        raise DimensionMismatchError(
            f"instruments on ({iset.input_label}, {iset.output_label}), "
            f"process wants ({want_in}, {want_out})"
        )


def born(
    process: ProcessMatrix,
    alice: InstrumentSet,
    bob: InstrumentSet,
    charlie: POVMSet | None = None,
) -> Behaviour:
    """Outcome table Tr[(A_{a|x} x B_{b|y} (x M_{c|z})) W]."""
    structure = process.structure
    if (charlie is None) != (structure.kind == "bipartite"):
        raise ScenarioError(
            "bipartite processes take two instrument sets, tripartite ones also "
            "need the last party's POVMs"
        )
    _check_party(alice, "AI", "AO", structure)
    _check_party(bob, "BI", "BO", structure)
    if charlie is not None and charlie.space != SpaceLabel("CI", structure.dim_of("CI")):
        raise DimensionMismatchError(
            f"POVMs on {charlie.space}, process wants CI dim {structure.dim_of('CI')}"
        )
    w = process.matrix
    if charlie is None:
        table = np.empty((alice.settings, bob.settings, alice.outcomes, bob.outcomes))
        for x in range(alice.settings):
            for a in range(alice.outcomes):
                am = alice.element(x, a).matrix
                for y in range(bob.settings):
                    for b in range(bob.outcomes):
                        e = np.kron(am, bob.element(y, b).matrix)
                        table[x, y, a, b] = np.einsum("ij,ji->", e, w).real
        return Behaviour(
            table, (alice.settings, bob.settings), (alice.outcomes, bob.outcomes)
        )
    table = np.empty(
        (alice.settings, bob.settings, charlie.settings)
        + (alice.outcomes, bob.outcomes, charlie.outcomes)
    )
    for x in range(alice.settings):
        for a in range(alice.outcomes):
            am = alice.element(x, a).matrix
            for y in range(bob.settings):
                for b in range(bob.outcomes):
                    ab = np.kron(am, bob.element(y, b).matrix)
                    for z in range(charlie.settings):
                        for c in range(charlie.outcomes):
                            e = np.kron(ab, charlie.element(z, c).matrix)
                            table[x, y, z, a, b, c] = np.einsum("ij,ji->", e, w).real
    return Behaviour(
        table,
        (alice.settings, bob.settings, charlie.settings),
        (alice.outcomes, bob.outcomes, charlie.outcomes),
    )


# -- deterministic one-way strategies ----------------------------------------------


@dataclass(frozen=True)
class DeterministicCausalStrategy:
    """Deterministic responses compatible with one fixed party order.

    The earliest party answers from its own input alone; every later
    party sees all upstream inputs plus its own.  Response tables are
    stored indexed by party inputs in party order: for "B<A" the table
    for A is responses[0][x][y] while B's is responses[1][y].
    """

    order: str
    settings: tuple[int, ...]
    outcomes: tuple[int, ...]
    responses: tuple

    def __post_init__(self) -> None:
        want = 2 if self.order in ("A<B", "B<A") else 3
        if self.order not in ("A<B", "B<A", "A<B<C", "B<A<C"):
            raise ScenarioError(f"unknown order {self.order!r}")
        if len(self.settings) != want or len(self.outcomes) != want:
            raise ScenarioError(
                f"order {self.order} needs {want} parties, got settings {self.settings}"
            )

    def outcomes_for(self, *inputs: int) -> tuple[int, ...]:
        if self.order in ("A<B", "A<B<C"):
            x, y = inputs[0], inputs[1]
            a, b = self.responses[0][x], self.responses[1][x][y]
        else:
            x, y = inputs[0], inputs[1]
            b, a = self.responses[1][y], self.responses[0][x][y]
        if len(inputs) == 2:
            return (a, b)
        z = inputs[2]
        return (a, b, self.responses[2][x][y][z])

    def behaviour(self) -> Behaviour:
        table = np.zeros(self.settings + self.outcomes)
        for inputs in np.ndindex(self.settings):
            table[inputs + self.outcomes_for(*inputs)] = 1.0
        return Behaviour(table, self.settings, self.outcomes)


def deterministic_strategy_count(settings, outcomes, order: str) -> int:
    """Number of deterministic strategies for one party order."""
    if order in ("A<B", "A<B<C"):
        first = outcomes[0] ** settings[0]
        second = outcomes[1] ** (settings[0] * settings[1])
    else:
        first = outcomes[1] ** settings[1]
        second = outcomes[0] ** (settings[0] * settings[1])
    count = first * second
    if order in ("A<B<C", "B<A<C"):
        count *= outcomes[2] ** (settings[0] * settings[1] * settings[2])
    return count


def _tables(n_out: int, *lengths: int):
    """All response tables with the given nesting, lexicographically."""
    it = product(range(n_out), repeat=lengths[-1])
    for n in reversed(lengths[:-1]):
        it = product(tuple(it), repeat=n)  # materialize inner level once
    return it


def enumerate_deterministic_causal(
    settings, outcomes
) -> tuple[DeterministicCausalStrategy, ...]:
    """Every deterministic causal strategy, first-acting-A block then B."""
    settings = tuple(int(s) for s in settings)
    outcomes = tuple(int(o) for o in outcomes)
    if len(settings) not in (2, 3) or len(settings) != len(outcomes):
        raise ScenarioError(f"bad scenario {settings} / {outcomes}")
    orders = ("A<B", "B<A") if len(settings) == 2 else ("A<B<C", "B<A<C")
    total = sum(deterministic_strategy_count(settings, outcomes, o) for o in orders)
    if total > STRATEGY_LIMIT:
        raise ExplosionGuardError(
            f"{total} deterministic strategies exceed the {STRATEGY_LIMIT} cap"
        )
    i_a, i_b = settings[0], settings[1]
    o_a, o_b = outcomes[0], outcomes[1]
    out: list[DeterministicCausalStrategy] = []
    if len(settings) == 2:
        for fa in product(range(o_a), repeat=i_a):
            for fb in _tables(o_b, i_a, i_b):
                out.append(DeterministicCausalStrategy("A<B", settings, outcomes, (fa, fb)))
        for fb in product(range(o_b), repeat=i_b):
            for fa in _tables(o_a, i_a, i_b):
                out.append(DeterministicCausalStrategy("B<A", settings, outcomes, (fa, fb)))
        return tuple(out)
    i_c, o_c = settings[2], outcomes[2]
    for fa in product(range(o_a), repeat=i_a):
        for fb in _tables(o_b, i_a, i_b):
            for fc in _tables(o_c, i_a, i_b, i_c):
                out.append(
                    DeterministicCausalStrategy("A<B<C", settings, outcomes, (fa, fb, fc))
                )
    for fb in product(range(o_b), repeat=i_b):
        for fa in _tables(o_a, i_a, i_b):
            for fc in _tables(o_c, i_a, i_b, i_c):
                out.append(
                    DeterministicCausalStrategy("B<A<C", settings, outcomes, (fa, fb, fc))
                )
    return tuple(out)


# -- causal polytope membership ----------------------------------------------------


@dataclass(frozen=True)
class CausalInequality:
    """Linear functional with value(q) <= bound on every causal behaviour."""

    coefficients: np.ndarray
    bound: float
    violation: float

    def value(self, behaviour: Behaviour) -> float:
        if behaviour.p.shape != self.coefficients.shape:
            raise ScenarioError("inequality and behaviour live in different scenarios")
        return float(np.sum(self.coefficients * behaviour.p))


@dataclass
class CausalMembership:
    """Outcome of the causal-polytope LP: weights or a separating inequality."""

    causal: bool
    strategies: tuple[DeterministicCausalStrategy, ...]
    weights: np.ndarray | None = None
    residual: float | None = None
    inequality: CausalInequality | None = None


def _strategy_matrix(strategies) -> np.ndarray:
    return np.stack([s.behaviour().p.ravel() for s in strategies], axis=1)


def _separating_inequality(d: np.ndarray, target: np.ndarray, shape) -> CausalInequality:
    """Best causal inequality at unit coefficient box, by LP."""
    n_entries, n_strats = d.shape
    prog = ConicProgram()
    prog.add_vector_var("g", n_entries)
    prog.add_scalar_var("t")
    for k in range(n_strats):
        prog.add_upper_bound(0.0, vector_terms=[("g", d[:, k]), ("t", [-1.0])])
    eye_rows = np.eye(n_entries)
    for i in range(n_entries):
        prog.add_upper_bound(1.0, vector_terms=[("g", eye_rows[i])])
        prog.add_upper_bound(1.0, vector_terms=[("g", -eye_rows[i])])
    prog.set_objective(vector_terms=[("g", -target), ("t", [1.0])])
    rep = solve_lp(prog)
    if rep.status != "optimal":
        raise SolverFailureError(f"separation LP failed: {rep.status} {rep.note}")
    g = np.atleast_1d(np.asarray(rep.primal["g"], dtype=float))
    bound = float(np.max(g @ d))
    violation = float(g @ target - bound)
    if violation < 1e-9:
        raise SolverFailureError(
            f"membership LP said noncausal but best separation is {violation}"
        )
    return CausalInequality(g.reshape(shape), bound, violation)


def is_causal_behaviour(behaviour: Behaviour) -> CausalMembership:
    """Mixture weights over deterministic strategies, or a violated inequality."""
    strategies = enumerate_deterministic_causal(behaviour.settings, behaviour.outcomes)
    d = _strategy_matrix(strategies)
    target = behaviour.p.ravel()
    shape = behaviour.p.shape

    prog = ConicProgram()
    prog.add_vector_var("w", len(strategies), nonneg=True)
    for i in range(target.size):
        prog.add_scalar_equality(float(target[i]), vector_terms=[("w", d[i])], tag=f"e{i}")
    rep = solve_lp(prog)

    def polished() -> tuple[np.ndarray, float] | None:
        w, _ = nnls(d, target)
        res = float(np.max(np.abs(d @ w - target)))
        return (w, res) if res <= WEIGHT_FIT_TOL else None

    if rep.status == "optimal":
        fit = polished()
        if fit is None:
            raise SolverFailureError("feasible membership LP but weights do not refit")
        w, res = fit
        return CausalMembership(True, strategies, weights=w, residual=res)
    if rep.status == "infeasible":
        ineq = _separating_inequality(d, target, shape)
        return CausalMembership(False, strategies, inequality=ineq)
    fit = polished()  # solver blinked; the fit settles it either way
    if fit is not None:
        w, res = fit
        return CausalMembership(True, strategies, weights=w, residual=res)
    ineq = _separating_inequality(d, target, shape)
    return CausalMembership(False, strategies, inequality=ineq)


def gyni_success(behaviour: Behaviour) -> float:
    """Guess-your-neighbour's-input score (1/4) sum delta(a,y) delta(b,x) p."""
    if behaviour.arity != "bipartite" or behaviour.settings != (2, 2) or behaviour.outcomes != (2, 2):
        raise ScenarioError("the score is defined for 2-setting/2-outcome bipartite tables")
    p = behaviour.p
    return float(sum(p[x, y, y, x] for x in range(2) for y in range(2)) / 4.0)


# -- certification verdicts --------------------------------------------------------


@dataclass
class DeviceDependentVerdict:
    """Outcome of asking whether trusted instruments plus a causally
    separable process can explain a behaviour."""

    verdict: str  # certified-noncausal | not-certified | inconsistent-behaviour
    w_sep: ProcessMatrix | None = None
    decomposition: CausalDecomposition | None = None
    witness: LabeledOperator | None = None
    functional: np.ndarray | None = None
    bound: float | None = None
    violation: float | None = None
    note: str = ""


@dataclass
class DeviceIndependentVerdict:
    """Outcome of certification from the behaviour alone."""

    verdict: str  # certified-noncausal | not-certified
    inequality: CausalInequality | None = None
    membership: CausalMembership | None = None
    realization: tuple | None = None


def _effects(alice, bob, charlie):
    """Flattened effect operators in behaviour index order."""
    effects = []
    if charlie is None:
        for x in range(alice.settings):
            for y in range(bob.settings):
                for a in range(alice.outcomes):
                    for b in range(bob.outcomes):
                        effects.append(
                            np.kron(alice.element(x, a).matrix, bob.element(y, b).matrix)
                        )
        return effects
    for x in range(alice.settings):
        for y in range(bob.settings):
            for z in range(charlie.settings):
                for a in range(alice.outcomes):
                    for b in range(bob.outcomes):
                        for c in range(charlie.outcomes):
                            ab = np.kron(
                                alice.element(x, a).matrix, bob.element(y, b).matrix
                            )
                            effects.append(np.kron(ab, charlie.element(z, c).matrix))
    return effects


def _dd_witness_sdp(structure, effects, target):
    """Most-violated functional over processes these instruments can reach.

    Searches coefficients g (boxed at 1) and an offset g0 such that
    S = sum g_e E_e + g0 1 has PSD projections onto both ordered
    subspaces; then Tr(S W) >= 0 on every causally separable W while
    the coefficients score the given table strictly negative.
    """
    n = structure.dim
    n_e = len(effects)
    prog = ConicProgram()
    prog.add_vector_var("g", n_e)
    prog.add_scalar_var("g0")
    for k, order in enumerate(structure.orders):
        proj_stack = np.stack([_project_coords(structure, order, e) for e in effects])
        proj_id = _project_coords(structure, order, np.eye(n))
        prog.add_psd_var(f"Z{k}", n)
        prog.add_op_equality(
            matrix_terms=[(f"Z{k}", -1.0)],
            rhs=np.zeros((n, n)),
            scalar_terms=[("g", proj_stack), ("g0", proj_id)],
            tag=f"ordered{k}",
        )
    row = np.zeros(n_e)
    for i in range(n_e):
        row[:] = 0.0
        row[i] = 1.0
        prog.add_upper_bound(1.0, vector_terms=[("g", row.copy())])
        prog.add_upper_bound(1.0, vector_terms=[("g", -row)])
    prog.set_objective(
        vector_terms=[("g", target), ("g0", float(structure.trace_target))]
    )
    rep = solve(prog)
    if rep.status != "optimal":
        raise SolverFailureError(f"witness search failed: {rep.status} {rep.note}")
    g = np.atleast_1d(np.asarray(rep.primal["g"], dtype=float))
    g0 = float(rep.primal["g0"])
    s = sum(ge * e for ge, e in zip(g, effects)) + g0 * np.eye(n)
    s = (s + s.conj().T) / 2
    worst = 0.0
    for order in structure.orders:
        proj = _project_coords(structure, order, s)
        worst = min(worst, float(np.linalg.eigvalsh((proj + proj.conj().T) / 2)[0]))
    if worst < 0.0:
        shift = -worst + 1e-14
        s = s + shift * np.eye(n)
        g0 += shift
    value = float(g @ target + g0 * structure.trace_target)
    if value > -1e-7:
        raise SolverFailureError(
            f"no separable explanation exists yet the witness margin is only {value}"
        )
    for order in structure.orders:
        proj = _project_coords(structure, order, s)
        if np.linalg.eigvalsh((proj + proj.conj().T) / 2)[0] < -1e-10:
            raise SolverFailureError("witness projection check failed after polish")
    return (
        LabeledOperator(structure.space, s),
        -g,
        float(g0 * structure.trace_target),
        -value,
    )


def certify_dd(
    behaviour: Behaviour,
    alice: InstrumentSet,
    bob: InstrumentSet,
    charlie: POVMSet | None = None,
) -> DeviceDependentVerdict:
    """Decide whether the given trusted instruments can pin noncausality on p."""
    for iset in (alice, bob) + (() if charlie is None else (charlie,)):
        report = validate_instruments(iset)
        if not report.passed:
            raise ValidationError(f"instruments fail validation: {report}")
    want_settings = (alice.settings, bob.settings) + (
        () if charlie is None else (charlie.settings,)
    )
    want_outcomes = (alice.outcomes, bob.outcomes) + (
        () if charlie is None else (charlie.outcomes,)
    )
    if behaviour.settings != want_settings or behaviour.outcomes != want_outcomes:
        raise ScenarioError(
            f"behaviour scenario {behaviour.settings}/{behaviour.outcomes} does not "
            f"match instruments {want_settings}/{want_outcomes}"
        )
    if charlie is None:
        structure = PartyStructure.bipartite(
            alice.input_label.dim, alice.output_label.dim,
            bob.input_label.dim, bob.output_label.dim,
        )
    else:
        structure = PartyStructure.charlie_last(
            alice.input_label.dim, alice.output_label.dim,
            bob.input_label.dim, bob.output_label.dim, charlie.space.dim,
        )
    _check_party(alice, "AI", "AO", structure)
    _check_party(bob, "BI", "BO", structure)
    n = structure.dim
    effects = _effects(alice, bob, charlie)
    target = behaviour.p.ravel()

    def add_rows(prog, names):
        prog.add_scalar_equality(
            float(structure.trace_target),
            matrix_terms=[(v, np.eye(n)) for v in names],
            tag="trace",
        )
        for i, e in enumerate(effects):
            prog.add_scalar_equality(
                float(target[i]), matrix_terms=[(v, e) for v in names], tag=f"p{i}"
            )

    any_valid = ConicProgram()
    any_valid.add_psd_var("W", n, basis=membership_basis(structure))
    add_rows(any_valid, ("W",))
    rep = solve(any_valid)
    if rep.status == "infeasible":
        return DeviceDependentVerdict(
            "inconsistent-behaviour",
            note="no valid process matrix reproduces this table with these instruments",
        )
    if rep.status != "optimal":
        raise SolverFailureError(f"reachability check failed: {rep.status} {rep.note}")

    o1, o2 = structure.orders
    sep = ConicProgram()
    sep.add_psd_var("W1", n, basis=membership_basis(structure, o1))
    sep.add_psd_var("W2", n, basis=membership_basis(structure, o2))
    add_rows(sep, ("W1", "W2"))
    rep = solve(sep)
    if rep.status == "optimal":
        w1 = rep.primal["W1"]
        w2 = rep.primal["W2"]
        total = w1 + w2
        fit = max(
            abs(float(np.einsum("ij,ji->", e, total).real) - float(t))
            for e, t in zip(effects, target)
        )
        if fit > 1e-6:
            raise SolverFailureError(f"separable explanation misses the table by {fit}")
        q = float(np.clip(np.trace(w1).real / structure.trace_target, 0.0, 1.0))
        space = structure.space
        omega = np.eye(n) * (structure.trace_target / n)
        comp1 = LabeledOperator(space, w1 / q if q > 1e-9 else omega)
        comp2 = LabeledOperator(space, w2 / (1 - q) if q < 1 - 1e-9 else omega)
        return DeviceDependentVerdict(
            "not-certified",
            w_sep=ProcessMatrix(LabeledOperator(space, total), structure),
            decomposition=CausalDecomposition(q, comp1, comp2),
        )
    if rep.status == "infeasible":
        witness, coeffs, bound, violation = _dd_witness_sdp(structure, effects, target)
        return DeviceDependentVerdict(
            "certified-noncausal",
            witness=witness,
            functional=coeffs.reshape(behaviour.p.shape),
            bound=bound,
            violation=violation,
        )
    raise SolverFailureError(f"separability check failed: {rep.status} {rep.note}")


def certify_di(behaviour: Behaviour) -> DeviceIndependentVerdict:
    """Certification from the table alone: polytope membership plus realization."""
    membership = is_causal_behaviour(behaviour)
    if not membership.causal:
        return DeviceIndependentVerdict(
            "certified-noncausal",
            inequality=membership.inequality,
            membership=membership,
        )
    mixture = _mixture_from_weights(membership.weights, membership.strategies)
    if behaviour.arity == "bipartite":
        realization = realize_causal_behaviour(mixture)
        rebuilt = born(realization[0], realization[1], realization[2])
    else:
        realization = realize_causal_behaviour_tripartite(mixture)
        rebuilt = born(realization[0], realization[1], realization[2], realization[3])
    gap = float(np.max(np.abs(rebuilt.p - behaviour.p)))
    if gap > 1e-7:
        raise SolverFailureError(f"causal realization misses the behaviour by {gap}")
    return DeviceIndependentVerdict(
        "not-certified", membership=membership, realization=realization
    )


def _mixture_from_weights(weights, strategies):
    """Aggregate strategy weights into (q, first-A behaviour, first-B behaviour)."""
    settings = strategies[0].settings
    outcomes = strategies[0].outcomes
    shape = settings + outcomes
    acc = {"A": np.zeros(shape), "B": np.zeros(shape)}
    mass = {"A": 0.0, "B": 0.0}
    for w, s in zip(weights, strategies):
        if w <= 0.0:
            continue
        lead = "A" if s.order in ("A<B", "A<B<C") else "B"
        acc[lead] += w * s.behaviour().p
        mass[lead] += w
    total = mass["A"] + mass["B"]
    q = mass["A"] / total
    fallback = {
        "A": next(s for s in strategies if s.order in ("A<B", "A<B<C")),
        "B": next(s for s in strategies if s.order in ("B<A", "B<A<C")),
    }
    parts = {}
    for lead in ("A", "B"):
        if mass[lead] > 1e-12:
            parts[lead] = Behaviour(acc[lead] / mass[lead], settings, outcomes)
        else:
            parts[lead] = fallback[lead].behaviour()
    return (q, parts["A"], parts["B"])


# -- constructive realization ------------------------------------------------------


def _coerce_decomposition(decomposition, parties: int):
    if (
        isinstance(decomposition, (tuple, list))
        and len(decomposition) == 3
        and isinstance(decomposition[1], Behaviour)
        and isinstance(decomposition[2], Behaviour)
    ):
        q, first, second = decomposition
        q = float(q)
        if q < -1e-9 or q > 1 + 1e-9:
            raise InvalidDecompositionError(f"mixing weight {q} outside [0, 1]")
        q = float(np.clip(q, 0.0, 1.0))
    else:
        pairs = list(decomposition)
        if not pairs:
            raise InvalidDecompositionError("empty strategy mixture")
        weights = np.array([float(w) for w, _ in pairs])
        strategies = [s for _, s in pairs]
        if any(w < -1e-12 for w in weights):
            raise InvalidDecompositionError("negative strategy weight")
        if abs(weights.sum() - 1.0) > 1e-9:
            raise InvalidDecompositionError(
                f"strategy weights sum to {weights.sum()}, expected 1"
            )
        q, first, second = _mixture_from_weights(np.clip(weights, 0, None), strategies)
    if len(first.settings) != parties or first.settings != second.settings \
            or first.outcomes != second.outcomes:
        raise InvalidDecompositionError(
            "components disagree on the scenario or party count"
        )
    return q, first, second


def _require_ordered(behaviour: Behaviour, order: str) -> None:
    p = behaviour.p
    if order == "A<B":
        marg = p.sum(axis=3)
        drift = float(np.max(np.abs(marg - marg[:, :1])))
    elif order == "B<A":
        marg = p.sum(axis=2)
        drift = float(np.max(np.abs(marg - marg[:1])))
    elif order == "A<B<C":
        marg = p.sum(axis=(4, 5))
        drift = float(np.max(np.abs(marg - marg[:, :1, :1])))
    else:
        marg = p.sum(axis=(3, 5))
        drift = float(np.max(np.abs(marg - marg[:1, :, :1])))
    if drift > ORDER_TOL:
        raise InvalidDecompositionError(
            f"component is not {order}-ordered: marginal drifts by {drift}"
        )


def _point(dim: int, idx: int) -> np.ndarray:
    m = np.zeros((dim, dim))
    m[idx, idx] = 1.0
    return m


def _renorm_rows(cond: np.ndarray, axis: int) -> np.ndarray:
    sums = cond.sum(axis=axis, keepdims=True)
    return cond / sums


def _chain_bipartite(behaviour: Behaviour, lead: str):
    """Split an ordered table into first-party and follower conditionals."""
    joint = behaviour.p
    i_a, i_b = behaviour.settings
    o_a, o_b = behaviour.outcomes
    if lead == "A":
        first = joint.sum(axis=3)[:, 0, :]  # [x][a]
        denom = first[:, None, :, None]
        cond = np.where(denom > 1e-12, joint / np.where(denom > 0, denom, 1.0), 1.0 / o_b)
        return first, _renorm_rows(cond, 3)  # cond[x][y][a][b]
    first = joint.sum(axis=2)[0, :, :]  # [y][b]
    denom = first[None, :, None, :]
    cond = np.where(denom > 1e-12, joint / np.where(denom > 0, denom, 1.0), 1.0 / o_a)
    return first, _renorm_rows(cond, 2)  # cond[x][y][a][b], normalized over a


def _instrument(in_name, d_in, out_name, d_out, rows) -> InstrumentSet:
    return InstrumentSet(SpaceLabel(in_name, d_in), SpaceLabel(out_name, d_out), rows)


def _pure_ab(pab: Behaviour):
    i_a, i_b = pab.settings
    o_a, o_b = pab.outcomes
    s = o_a * i_a
    p_a, p_b = _chain_bipartite(pab, "A")
    structure = PartyStructure.bipartite(1, s, s, 1)
    w = tensor(
        identity(TensorSpace.of(("AI", 1))),
        max_entangled(SpaceLabel("AO", s), SpaceLabel("BI", s)),
        identity(TensorSpace.of(("BO", 1))),
    )
    a_space = TensorSpace.of(("AI", 1), ("AO", s))
    a_rows = tuple(
        tuple(
            LabeledOperator(a_space, p_a[x, a] * _point(s, a * i_a + x))
            for a in range(o_a)
        )
        for x in range(i_a)
    )
    b_space = TensorSpace.of(("BI", s), ("BO", 1))
    b_rows = tuple(
        tuple(
            LabeledOperator(
                b_space,
                sum(
                    p_b[x, y, a, b] * _point(s, a * i_a + x)
                    for a in range(o_a)
                    for x in range(i_a)
                ),
            )
            for b in range(o_b)
        )
        for y in range(i_b)
    )
    return (
        ProcessMatrix(w, structure),
        _instrument("AI", 1, "AO", s, a_rows),
        _instrument("BI", s, "BO", 1, b_rows),
    )


def _pure_ba(pba: Behaviour):
    i_a, i_b = pba.settings
    o_a, o_b = pba.outcomes
    r = o_b * i_b
    p_b, p_a = _chain_bipartite(pba, "B")
    structure = PartyStructure.bipartite(r, 1, 1, r)
    w = tensor(
        identity(TensorSpace.of(("BI", 1))),
        max_entangled(SpaceLabel("BO", r), SpaceLabel("AI", r)),
        identity(TensorSpace.of(("AO", 1))),
    )
    b_space = TensorSpace.of(("BI", 1), ("BO", r))
    b_rows = tuple(
        tuple(
            LabeledOperator(b_space, p_b[y, b] * _point(r, b * i_b + y))
            for b in range(o_b)
        )
        for y in range(i_b)
    )
    a_space = TensorSpace.of(("AI", r), ("AO", 1))
    a_rows = tuple(
        tuple(
            LabeledOperator(
                a_space,
                sum(
                    p_a[x, y, a, b] * _point(r, b * i_b + y)
                    for b in range(o_b)
                    for y in range(i_b)
                ),
            )
            for a in range(o_a)
        )
        for x in range(i_a)
    )
    return (
        ProcessMatrix(w, structure),
        _instrument("AI", r, "AO", 1, a_rows),
        _instrument("BI", 1, "BO", r, b_rows),
    )


def _regroup(op: LabeledOperator, plan) -> LabeledOperator:
    """Permute to the concatenated member order, then fuse each group."""
    flat = [name for _, members in plan for name in members]
    op = permute_to(op, flat)
    labels = []
    for new_name, members in plan:
        d = 1
        for m in members:
            d *= op.space.label(m).dim
        labels.append(SpaceLabel(new_name, d))
    return LabeledOperator(TensorSpace(tuple(labels)), op.matrix)


_Q0 = np.array([[1.0, 0.0], [0.0, 0.0]])
_Q1 = np.array([[0.0, 0.0], [0.0, 1.0]])


def _mixed_bipartite(q: float, pab: Behaviour, pba: Behaviour):
    i_a, i_b = pab.settings
    o_a, o_b = pab.outcomes
    s, r = o_a * i_a, o_b * i_b
    pa1, pb1 = _chain_bipartite(pab, "A")
    pb2, pa2 = _chain_bipartite(pba, "B")

    def lop(name, d, mat):
        return LabeledOperator(TensorSpace.of((name, d)), mat)

    w_plan = [("AI", ("AIc", "AIq")), ("AO", ("AO",)), ("BI", ("BIc", "BIq")), ("BO", ("BO",))]
    w1 = tensor(
        lop("AIc", r, np.eye(r) / r),
        lop("AIq", 2, _Q0),
        max_entangled(SpaceLabel("AO", s), SpaceLabel("BIc", s)),
        lop("BIq", 2, _Q0),
        lop("BO", r, np.eye(r)),
    )
    w2 = tensor(
        lop("BIc", s, np.eye(s) / s),
        lop("BIq", 2, _Q1),
        max_entangled(SpaceLabel("BO", r), SpaceLabel("AIc", r)),
        lop("AIq", 2, _Q1),
        lop("AO", s, np.eye(s)),
    )
    w1 = _regroup(w1, w_plan)
    w2 = _regroup(w2, w_plan)
    w = LabeledOperator(w1.space, q * w1.matrix + (1 - q) * w2.matrix)
    structure = PartyStructure.bipartite(2 * r, s, 2 * s, r)

    a_plan = [("AI", ("AIc", "AIq")), ("AO", ("AO",))]
    a_rows = []
    for x in range(i_a):
        row = []
        for a in range(o_a):
            lead = tensor(
                lop("AIc", r, np.eye(r)),
                lop("AIq", 2, _Q0),
                lop("AO", s, pa1[x, a] * _point(s, a * i_a + x)),
            )
            trail_core = sum(
                pa2[x, y, a, b] * _point(r, b * i_b + y)
                for b in range(o_b)
                for y in range(i_b)
            )
            trail = tensor(
                lop("AIc", r, trail_core),
                lop("AIq", 2, _Q1),
                lop("AO", s, np.eye(s) / s),
            )
            row.append(_regroup(lead + trail, a_plan))
        a_rows.append(tuple(row))

    b_plan = [("BI", ("BIc", "BIq")), ("BO", ("BO",))]
    b_rows = []
    for y in range(i_b):
        row = []
        for b in range(o_b):
            lead_core = sum(
                pb1[x, y, a, b] * _point(s, a * i_a + x)
                for a in range(o_a)
                for x in range(i_a)
            )
            lead = tensor(
                lop("BIc", s, lead_core),
                lop("BIq", 2, _Q0),
                lop("BO", r, np.eye(r) / r),
            )
            trail = tensor(
                lop("BIc", s, np.eye(s)),
                lop("BIq", 2, _Q1),
                lop("BO", r, pb2[y, b] * _point(r, b * i_b + y)),
            )
            row.append(_regroup(lead + trail, b_plan))
        b_rows.append(tuple(row))

    return (
        ProcessMatrix(w, structure),
        _instrument("AI", 2 * r, "AO", s, tuple(a_rows)),
        _instrument("BI", 2 * s, "BO", r, tuple(b_rows)),
    )


def realize_causal_behaviour(decomposition):
    """Process matrix plus instruments reproducing a causal bipartite table.

    ``decomposition`` is either (q, p_first_A, p_first_B) with Behaviour
    components, or an iterable of (weight, DeterministicCausalStrategy)
    pairs summing to one.
    """
    q, pab, pba = _coerce_decomposition(decomposition, parties=2)
    _require_ordered(pab, "A<B")
    _require_ordered(pba, "B<A")
    if q >= 1.0 - _EDGE:
        return _pure_ab(pab)
    if q <= _EDGE:
        return _pure_ba(pba)
    return _mixed_bipartite(q, pab, pba)


# -- tripartite realization --------------------------------------------------------


def _chain_tripartite(behaviour: Behaviour, lead: str):
    """first[.], mid[.], last[.] conditionals of an ordered tripartite table."""
    joint = behaviour.p
    o_a, o_b, o_c = behaviour.outcomes
    if lead == "A":
        first = joint.sum(axis=(4, 5))[:, 0, 0, :]  # [x][a]
        pair = joint.sum(axis=5)[:, :, 0]  # [x][y][a][b]
        denom = first[:, None, :, None]
        mid = np.where(denom > 1e-12, pair / np.where(denom > 0, denom, 1.0), 1.0 / o_b)
        mid = _renorm_rows(mid, 3)
        denom = (first[:, None, :, None] * mid)[:, :, None, :, :, None]
        last = np.where(
            denom > 1e-12, joint / np.where(denom > 0, denom, 1.0), 1.0 / o_c
        )
        return first, mid, _renorm_rows(last, 5)
    first = joint.sum(axis=(3, 5))[0, :, 0, :]  # [y][b]
    pair = joint.sum(axis=5)[:, :, 0]  # [x][y][a][b]
    denom = first[None, :, None, :]
    mid = np.where(denom > 1e-12, pair / np.where(denom > 0, denom, 1.0), 1.0 / o_a)
    mid = _renorm_rows(mid, 2)  # [x][y][a][b] normalized over a
    denom = (first[None, :, None, :] * mid)[:, :, None, :, :, None]
    last = np.where(denom > 1e-12, joint / np.where(denom > 0, denom, 1.0), 1.0 / o_c)
    return first, mid, _renorm_rows(last, 5)


def _quad_index(a, b, x, y, o_b, i_a, i_b) -> int:
    return ((a * o_b + b) * i_a + x) * i_b + y


def _trivial_povm(i_c: int, dim: int = 1) -> POVMSet:
    el = LabeledOperator(TensorSpace.of(("CI", dim)), np.eye(dim))
    return POVMSet(SpaceLabel("CI", dim), tuple((el,) for _ in range(i_c)))


def _pure_tri(p: Behaviour, order: str):
    i_a, i_b, i_c = p.settings
    o_a, o_b, o_c = p.outcomes
    u = o_a * o_b * i_a * i_b
    if order == "A<B<C":
        s = o_a * i_a
        p_a, p_b, p_c = _chain_tripartite(p, "A")
        d_bo = u if o_c > 1 else 1
        structure = PartyStructure.charlie_last(1, s, s, d_bo, d_bo)
        pieces = [
            identity(TensorSpace.of(("AI", 1))),
            max_entangled(SpaceLabel("AO", s), SpaceLabel("BI", s)),
        ]
        if o_c > 1:
            pieces.append(max_entangled(SpaceLabel("BO", u), SpaceLabel("CI", u)))
        else:
            pieces.append(identity(TensorSpace.of(("BO", 1), ("CI", 1))))
        w = tensor(*pieces)
        a_space = TensorSpace.of(("AI", 1), ("AO", s))
        a_rows = tuple(
            tuple(
                LabeledOperator(a_space, p_a[x, a] * _point(s, a * i_a + x))
                for a in range(o_a)
            )
            for x in range(i_a)
        )
        b_space = TensorSpace.of(("BI", s), ("BO", d_bo))
        b_rows = tuple(
            tuple(
                LabeledOperator(
                    b_space,
                    sum(
                        p_b[x, y, a, b]
                        * np.kron(
                            _point(s, a * i_a + x),
                            _point(u, _quad_index(a, b, x, y, o_b, i_a, i_b))
                            if o_c > 1
                            else np.eye(1),
                        )
                        for a in range(o_a)
                        for x in range(i_a)
                    ),
                )
                for b in range(o_b)
            )
            for y in range(i_b)
        )
        if o_c > 1:
            c_space = TensorSpace.of(("CI", u))
            c_rows = tuple(
                tuple(
                    LabeledOperator(
                        c_space,
                        sum(
                            p_c[x, y, z, a, b, c]
                            * _point(u, _quad_index(a, b, x, y, o_b, i_a, i_b))
                            for a in range(o_a)
                            for b in range(o_b)
                            for x in range(i_a)
                            for y in range(i_b)
                        ),
                    )
                    for c in range(o_c)
                )
                for z in range(i_c)
            )
            povm = POVMSet(SpaceLabel("CI", u), c_rows)
        else:
            povm = _trivial_povm(i_c)
        return (
            ProcessMatrix(w, structure),
            _instrument("AI", 1, "AO", s, a_rows),
            _instrument("BI", s, "BO", d_bo, b_rows),
            povm,
        )
    r = o_b * i_b
    p_b, p_a, p_c = _chain_tripartite(p, "B")
    d_ao = u if o_c > 1 else 1
    structure = PartyStructure.charlie_last(r, d_ao, 1, r, d_ao)
    pieces = [
        identity(TensorSpace.of(("BI", 1))),
        max_entangled(SpaceLabel("BO", r), SpaceLabel("AI", r)),
    ]
    if o_c > 1:
        pieces.append(max_entangled(SpaceLabel("AO", u), SpaceLabel("CI", u)))
    else:
        pieces.append(identity(TensorSpace.of(("AO", 1), ("CI", 1))))
    w = tensor(*pieces)
    b_space = TensorSpace.of(("BI", 1), ("BO", r))
    b_rows = tuple(
        tuple(
            LabeledOperator(b_space, p_b[y, b] * _point(r, b * i_b + y))
            for b in range(o_b)
        )
        for y in range(i_b)
    )
    a_space = TensorSpace.of(("AI", r), ("AO", d_ao))
    a_rows = tuple(
        tuple(
            LabeledOperator(
                a_space,
                sum(
                    p_a[x, y, a, b]
                    * np.kron(
                        _point(r, b * i_b + y),
                        _point(u, _quad_index(a, b, x, y, o_b, i_a, i_b))
                        if o_c > 1
                        else np.eye(1),
                    )
                    for b in range(o_b)
                    for y in range(i_b)
                ),
            )
            for a in range(o_a)
        )
        for x in range(i_a)
    )
    if o_c > 1:
        c_space = TensorSpace.of(("CI", u))
        c_rows = tuple(
            tuple(
                LabeledOperator(
                    c_space,
                    sum(
                        p_c[x, y, z, a, b, c]
                        * _point(u, _quad_index(a, b, x, y, o_b, i_a, i_b))
                        for a in range(o_a)
                        for b in range(o_b)
                        for x in range(i_a)
                        for y in range(i_b)
                    ),
                )
                for c in range(o_c)
            )
            for z in range(i_c)
        )
        povm = POVMSet(SpaceLabel("CI", u), c_rows)
    else:
        povm = _trivial_povm(i_c)
    return (
        ProcessMatrix(w, structure),
        _instrument("AI", r, "AO", d_ao, a_rows),
        _instrument("BI", 1, "BO", r, b_rows),
        povm,
    )


def _mixed_tri_trivial_c(q: float, p1: Behaviour, p2: Behaviour):
    i_a, i_b, i_c = p1.settings
    o_a, o_b, _ = p1.outcomes
    flat1 = Behaviour(p1.p.sum(axis=5)[:, :, 0], (i_a, i_b), (o_a, o_b))
    flat2 = Behaviour(p2.p.sum(axis=5)[:, :, 0], (i_a, i_b), (o_a, o_b))
    w, a_set, b_set = _mixed_bipartite(q, flat1, flat2)
    structure = PartyStructure.charlie_last(*w.structure.dims, 1)
    w_tri = tensor(w.op, identity(TensorSpace.of(("CI", 1))))
    return ProcessMatrix(w_tri, structure), a_set, b_set, _trivial_povm(i_c)


def _mixed_tri_full(q: float, p1: Behaviour, p2: Behaviour):
    i_a, i_b, i_c = p1.settings
    o_a, o_b, o_c = p1.outcomes
    u = o_a * o_b * i_a * i_b
    pa1, pb1, pc1 = _chain_tripartite(p1, "A")
    pb2, pa2, pc2 = _chain_tripartite(p2, "B")

    def lop(name, d, mat):
        return LabeledOperator(TensorSpace.of((name, d)), mat)

    def quad(a, b, x, y):
        return _point(u, _quad_index(a, b, x, y, o_b, i_a, i_b))

    w_plan = [
        ("AI", ("AIc", "AIq")),
        ("AO", ("AO",)),
        ("BI", ("BIc", "BIq")),
        ("BO", ("BO",)),
        ("CI", ("CIc", "CIq")),
    ]
    w1 = tensor(
        lop("AIc", u, np.eye(u) / u),
        lop("AIq", 2, _Q0),
        max_entangled(SpaceLabel("AO", u), SpaceLabel("BIc", u)),
        lop("BIq", 2, _Q0),
        max_entangled(SpaceLabel("BO", u), SpaceLabel("CIc", u)),
        lop("CIq", 2, _Q0),
    )
    w2 = tensor(
        lop("BIc", u, np.eye(u) / u),
        lop("BIq", 2, _Q1),
        max_entangled(SpaceLabel("BO", u), SpaceLabel("AIc", u)),
        lop("AIq", 2, _Q1),
        max_entangled(SpaceLabel("AO", u), SpaceLabel("CIc", u)),
        lop("CIq", 2, _Q1),
    )
    w1 = _regroup(w1, w_plan)
    w2 = _regroup(w2, w_plan)
    w = LabeledOperator(w1.space, q * w1.matrix + (1 - q) * w2.matrix)
    structure = PartyStructure.charlie_last(2 * u, u, 2 * u, u, 2 * u)

    a_plan = [("AI", ("AIc", "AIq")), ("AO", ("AO",))]
    a_rows = []
    for x in range(i_a):
        row = []
        for a in range(o_a):
            lead = tensor(
                lop("AIc", u, np.eye(u)),
                lop("AIq", 2, _Q0),
                lop("AO", u, pa1[x, a] * _point(u, a * i_a + x)),
            )
            trail_core = sum(
                pa2[x, y, a, b] * np.kron(_point(u, b * i_b + y), quad(a, b, x, y))
                for b in range(o_b)
                for y in range(i_b)
            )
            trail = tensor(
                LabeledOperator(TensorSpace.of(("AIc", u), ("AO", u)), trail_core),
                lop("AIq", 2, _Q1),
            )
            row.append(_regroup(lead + permute_to(trail, ("AIc", "AIq", "AO")), a_plan))
        a_rows.append(tuple(row))

    b_plan = [("BI", ("BIc", "BIq")), ("BO", ("BO",))]
    b_rows = []
    for y in range(i_b):
        row = []
        for b in range(o_b):
            lead_core = sum(
                pb1[x, y, a, b] * np.kron(_point(u, a * i_a + x), quad(a, b, x, y))
                for a in range(o_a)
                for x in range(i_a)
            )
            lead = tensor(
                LabeledOperator(TensorSpace.of(("BIc", u), ("BO", u)), lead_core),
                lop("BIq", 2, _Q0),
            )
            trail = tensor(
                lop("BIc", u, np.eye(u)),
                lop("BIq", 2, _Q1),
                lop("BO", u, pb2[y, b] * _point(u, b * i_b + y)),
            )
            row.append(_regroup(permute_to(lead, ("BIc", "BIq", "BO")) + trail, b_plan))
        b_rows.append(tuple(row))

    c_plan = [("CI", ("CIc", "CIq"))]
    c_rows = []
    for z in range(i_c):
        row = []
        for c in range(o_c):
            m1 = sum(
                pc1[x, y, z, a, b, c] * quad(a, b, x, y)
                for a in range(o_a)
                for b in range(o_b)
                for x in range(i_a)
                for y in range(i_b)
            )
            m2 = sum(
                pc2[x, y, z, a, b, c] * quad(a, b, x, y)
                for a in range(o_a)
                for b in range(o_b)
                for x in range(i_a)
                for y in range(i_b)
            )
            el = tensor(lop("CIc", u, m1), lop("CIq", 2, _Q0)) + tensor(
                lop("CIc", u, m2), lop("CIq", 2, _Q1)
            )
            row.append(_regroup(el, c_plan))
        c_rows.append(tuple(row))
    povm = POVMSet(SpaceLabel("CI", 2 * u), tuple(c_rows))

    return (
        ProcessMatrix(w, structure),
        _instrument("AI", 2 * u, "AO", u, tuple(a_rows)),
        _instrument("BI", 2 * u, "BO", u, tuple(b_rows)),
        povm,
    )


def realize_causal_behaviour_tripartite(decomposition):
    """Process matrix, instruments and POVMs for a causal tripartite table.

    Accepts the same two decomposition forms as the bipartite builder;
    the last party receives only, so both fixed orders share its wire.
    """
    q, p1, p2 = _coerce_decomposition(decomposition, parties=3)
    _require_ordered(p1, "A<B<C")
    _require_ordered(p2, "B<A<C")
    if q >= 1.0 - _EDGE:
        return _pure_tri(p1, "A<B<C")
    if q <= _EDGE:
        return _pure_tri(p2, "B<A<C")
    if p1.outcomes[2] == 1:
        return _mixed_tri_trivial_c(q, p1, p2)
    return _mixed_tri_full(q, p1, p2)
