"""Coherent control of causal order and how much noise it tolerates.

A control qubit routes a target system either through Alice then Bob or
through Bob then Alice before both systems reach Charlie.  With the
control in superposition the resulting process matrix is causally
nonseparable, yet whether that nonseparability can still be certified
depends on which parties keep characterized devices.  This module
builds the switch process family, its reduction onto a control-only
Charlie, the white-noise interpolation, and the critical noise weight
for each of the six trust layouts.  The noise weight enters every
membership program affinely, so each critical value comes out of a
single conic solve with the weight as a free scalar; no bisection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import unitary_group

from .assemblages import (
    TTU,
    TUU,
    UTT,
    UUT,
    AssemblageCausalDecomposition,
    _attach,
    _causal_rows,
    _vn,
    assemblage_from_process,
    is_causal_assemblage,
)
from .behaviours import (
    Behaviour,
    CausalMembership,
    _strategy_matrix,
    born,
    enumerate_deterministic_causal,
    is_causal_behaviour,
)
from .conic import ConicProgram, solve, solve_lp
from .errors import ScenarioError, SolverFailureError, ValidationError
from .instruments import InstrumentSet, POVMSet, random_instruments
from .processes import (
    CausalDecomposition,
    PartyStructure,
    ProcessMatrix,
    check_causal_separability,
    membership_basis,
    white_noise_process,
)
from .spaces import LabeledOperator, SpaceLabel, TensorSpace, partial_trace

SWITCH_SCENARIOS = ("TTT", "TTU", "TUU", "UTT", "UUT", "UUU")

# Critical weights are exact where the membership test itself is exact
# (full tomography) or where a structure theorem pins the value (both
# layouts trusting only Charlie's side, where the switch is always
# causal); the remaining layouts inherit two sources of slack: the
# untrusted devices are fixed rather than optimized, and some causal
# cones are outer approximations.
_BOUND_KIND = {
    "TTT": "exact",
    "TTU": "lower-bound",
    "TUU": "lower-bound",
    "UTT": "lower-bound",
    "UUT": "exact",
    "UUU": "exact",
}

#: Offset above the computed critical weight at which the causal-side
#: certificate is produced; chosen well clear of solver tolerances.
CERTIFICATE_STEP = 1e-4

_NORM_TOL = 1e-12


@dataclass(frozen=True)
class SwitchParams:
    """Target state and control amplitudes selecting one switch process.

    ``psi`` is the pure target input, ``alpha`` weights the
    Alice-then-Bob branch and ``beta`` the reverse one.  Both the state
    and the amplitude pair must be normalized.
    """

    psi: np.ndarray
    alpha: complex
    beta: complex

    def __post_init__(self) -> None:
        psi = np.asarray(self.psi, dtype=np.complex128).reshape(-1)
        if psi.size < 1:
            raise ValidationError("target state must have at least one amplitude")
        if abs(float(np.linalg.norm(psi)) - 1.0) > _NORM_TOL:
            raise ValidationError("target state is not normalized")
        a, b = complex(self.alpha), complex(self.beta)
        if abs(abs(a) ** 2 + abs(b) ** 2 - 1.0) > _NORM_TOL:
            raise ValidationError("branch amplitudes are not normalized")
        psi.setflags(write=False)
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)

    @property
    def dim(self) -> int:
        return self.psi.size


def _switch_vector(params: SwitchParams) -> np.ndarray:
    """Process vector as a tensor indexed (AI, AO, BI, BO, target, control)."""
    d = params.dim
    eye = np.eye(d)
    e0 = np.array([1.0, 0.0])
    e1 = np.array([0.0, 1.0])
    # One branch wires Alice's output to Bob's input and Bob's output to
    # the final target wire; the other swaps the roles.  The wires are
    # unnormalized identity links, so the whole vector has norm d.
    first = np.einsum("i,jk,lm,c->ijklmc", params.psi, eye, eye, e0)
    second = np.einsum("k,li,jm,c->ijklmc", params.psi, eye, eye, e1)
    return params.alpha * first + params.beta * second


def pure_switch(params: SwitchParams) -> ProcessMatrix:
    """Rank-one switch process; Charlie holds the target and the control.

    Charlie's input factor is the target wire tensored with the control
    qubit, in that order.
    """
    d = params.dim
    vec = _switch_vector(params).reshape(-1)
    space = TensorSpace.of(("AI", d), ("AO", d), ("BI", d), ("BO", d), ("CI", 2 * d))
    op = LabeledOperator(space, np.outer(vec, vec.conj()))
    return ProcessMatrix(op, PartyStructure.charlie_last(d, d, d, d, 2 * d))


def reduced_switch() -> ProcessMatrix:
    """Qubit switch at even amplitudes with the target wire traced out.

    Charlie keeps only the control qubit; the result is a rank-two
    process on five qubit factors and the reference object for every
    robustness computation here.
    """
    params = SwitchParams(np.array([1.0, 0.0]), 1.0 / np.sqrt(2.0), 1.0 / np.sqrt(2.0))
    vec = _switch_vector(params).reshape(-1)
    space = TensorSpace.of(
        ("AI", 2), ("AO", 2), ("BI", 2), ("BO", 2), ("TARGET", 2), ("CI", 2)
    )
    op = LabeledOperator(space, np.outer(vec, vec.conj()))
    red = partial_trace(op, ("TARGET",))
    return ProcessMatrix(red, PartyStructure.charlie_last(2, 2, 2, 2, 2))


def noisy_reduced_switch(eta: float) -> ProcessMatrix:
    """Mix the reduced switch with the uniform process at weight ``eta``."""
    eta = float(eta)
    if not 0.0 <= eta <= 1.0:
        raise ValidationError(f"noise weight {eta} is outside [0, 1]")
    red = reduced_switch()
    noise = white_noise_process(red.structure)
    mat = eta * noise.matrix + (1.0 - eta) * red.matrix
    return ProcessMatrix(LabeledOperator(red.op.space, mat), red.structure)


# -- fixed devices for the untrusted parties -----------------------------------


def resend_instruments(input_name: str, output_name: str) -> InstrumentSet:
    """Measure a qubit in the computational or conjugate basis and resend it.

    Setting 0 reads the computational basis, setting 1 the conjugate
    one; either way the observed state is prepared again on the output
    wire.  These are the fixed devices handed to untrusted instrument
    parties in the robustness programs.
    """
    h = 1.0 / np.sqrt(2.0)
    bases = (
        (np.array([1.0, 0.0]), np.array([0.0, 1.0])),
        (np.array([h, h]), np.array([h, -h])),
    )
    space = TensorSpace.of((input_name, 2), (output_name, 2))
    rows = []
    for basis in bases:
        row = []
        for v in basis:
            p = np.outer(v, v.conj())
            row.append(LabeledOperator(space, np.kron(p, p)))
        rows.append(tuple(row))
    return InstrumentSet(SpaceLabel(input_name, 2), SpaceLabel(output_name, 2), tuple(rows))


def control_readout() -> POVMSet:
    """Single-setting readout of the control qubit in the superposition basis."""
    h = 1.0 / np.sqrt(2.0)
    space = SpaceLabel("CI", 2)
    els = tuple(
        LabeledOperator(TensorSpace((space,)), np.outer(v, v.conj()))
        for v in (np.array([h, h]), np.array([h, -h]))
    )
    return POVMSet(space, (els,))


def _untrusted_devices(scenario: str):
    if scenario == TTU:
        return control_readout()
    if scenario == TUU:
        return (resend_instruments("BI", "BO"), control_readout())
    if scenario == UTT:
        return resend_instruments("AI", "AO")
    return (resend_instruments("AI", "AO"), resend_instruments("BI", "BO"))


# -- critical noise weight per trust layout ------------------------------------


@dataclass(frozen=True)
class RobustnessResult:
    """Critical noise weight of the reduced switch in one trust layout.

    ``eta_star`` is the smallest weight at which the noisy switch
    becomes causal for that layout's membership test; below it the
    layout certifies causal nonseparability.  ``certificate`` carries
    the causal-side evidence produced at ``certificate_eta`` (just above
    the critical weight): an ordered decomposition of the process, of
    the assemblage, or strategy weights for the outcome table, depending
    on the layout.  ``residuals`` reports how exactly that certificate
    reproduces its target.
    """

    scenario: str
    eta_star: float
    bound_kind: str
    certificate: object
    certificate_eta: float
    residuals: dict[str, float]


def _read_eta(rep, what: str) -> float:
    if rep.status != "optimal":
        raise SolverFailureError(f"{what} robustness program ended {rep.status}: {rep.note}")
    eta = float(np.atleast_1d(np.asarray(rep.primal["eta"], dtype=float))[0])
    return min(max(eta, 0.0), 1.0)


def _eta_process() -> float:
    """Smallest weight making the noisy switch causally separable."""
    red = reduced_switch()
    structure = red.structure
    s = red.matrix
    n = white_noise_process(structure).matrix
    o1, o2 = structure.orders
    prog = ConicProgram()
    prog.add_psd_var("W1", structure.dim, basis=membership_basis(structure, o1))
    prog.add_psd_var("W2", structure.dim, basis=membership_basis(structure, o2))
    prog.add_scalar_var("eta", nonneg=True)
    prog.add_upper_bound(1.0, vector_terms=[("eta", 1.0)])
    # W1 + W2 = s + eta (n - s), with the weight on the left-hand side.
    prog.add_op_equality(
        [("W1", 1.0), ("W2", 1.0)], rhs=s, scalar_terms=[("eta", s - n)], tag="mix"
    )
    prog.set_objective(vector_terms=[("eta", 1.0)])
    return _read_eta(solve(prog), "process")


def _eta_assemblage(scenario: str) -> float:
    """Smallest weight putting the noisy assemblage in the causal cone."""
    red = reduced_switch()
    noise = white_noise_process(red.structure)
    devices = _untrusted_devices(scenario)
    ws = assemblage_from_process(red, devices, scenario)
    wn = assemblage_from_process(noise, devices, scenario)
    comps, rows = _causal_rows(scenario, ws.space, ws.outcomes, ws.settings)
    prog = ConicProgram()
    _attach(prog, comps, rows)
    prog.add_scalar_var("eta", nonneg=True)
    prog.add_upper_bound(1.0, vector_terms=[("eta", 1.0)])
    for idx in ws.indices():
        s_el = ws.matrix(*idx)
        n_el = wn.matrix(*idx)
        prog.add_op_equality(
            [(_vn(1, idx), 1.0), (_vn(2, idx), 1.0)],
            rhs=s_el,
            scalar_terms=[("eta", s_el - n_el)],
            tag=f"mix[{','.join(map(str, idx))}]",
        )
    prog.set_objective(vector_terms=[("eta", 1.0)])
    return _read_eta(solve(prog), scenario)


def _eta_behaviour() -> float:
    """Smallest weight making the full outcome table causal."""
    red = reduced_switch()
    noise = white_noise_process(red.structure)
    alice = resend_instruments("AI", "AO")
    bob = resend_instruments("BI", "BO")
    charlie = control_readout()
    ps = born(red, alice, bob, charlie).p.ravel()
    pn = born(noise, alice, bob, charlie).p.ravel()
    strategies = enumerate_deterministic_causal((2, 2, 1), (2, 2, 2))
    d = _strategy_matrix(strategies)
    prog = ConicProgram()
    prog.add_vector_var("g", len(strategies), nonneg=True)
    prog.add_scalar_var("eta", nonneg=True)
    prog.add_upper_bound(1.0, vector_terms=[("eta", 1.0)])
    for i in range(ps.size):
        prog.add_scalar_equality(
            float(ps[i]),
            vector_terms=[("g", d[i]), ("eta", float(ps[i] - pn[i]))],
            tag=f"e{i}",
        )
    prog.set_objective(vector_terms=[("eta", 1.0)])
    return _read_eta(solve_lp(prog), "behaviour")


def _process_certificate(eta: float) -> tuple[CausalDecomposition, dict[str, float]]:
    w = noisy_reduced_switch(eta)
    found = check_causal_separability(w)
    if not isinstance(found, CausalDecomposition):
        raise SolverFailureError(f"process still noncausal at weight {eta}")
    mix = (
        found.q * found.component_AB.matrix
        + (1.0 - found.q) * found.component_BA.matrix
    )
    gap = float(np.max(np.abs(mix - w.matrix)))
    return found, {"reconstruction": gap}


def _assemblage_certificate(
    scenario: str, eta: float
) -> tuple[AssemblageCausalDecomposition, dict[str, float]]:
    devices = _untrusted_devices(scenario)
    asm = assemblage_from_process(noisy_reduced_switch(eta), devices, scenario)
    membership = is_causal_assemblage(asm)
    if not membership.causal:
        raise SolverFailureError(f"{scenario} assemblage still noncausal at weight {eta}")
    dec = membership.decomposition
    gap = max(
        float(np.max(np.abs(dec.first[idx].matrix + dec.second[idx].matrix - asm.matrix(*idx))))
        for idx in asm.indices()
    )
    floor = min(
        float(np.linalg.eigvalsh(fam[idx].matrix)[0])
        for fam in (dec.first, dec.second)
        for idx in asm.indices()
    )
    return dec, {"reconstruction": gap, "family_floor": floor}


def _behaviour_certificate(eta: float) -> tuple[CausalMembership, dict[str, float]]:
    alice = resend_instruments("AI", "AO")
    bob = resend_instruments("BI", "BO")
    charlie = control_readout()
    table = born(noisy_reduced_switch(eta), alice, bob, charlie)
    membership = is_causal_behaviour(table)
    if not membership.causal:
        raise SolverFailureError(f"outcome table still noncausal at weight {eta}")
    return membership, {"reconstruction": float(membership.residual)}


def robustness(scenario: str) -> RobustnessResult:
    """Critical white-noise weight of the reduced switch for one layout.

    The weight is found by a single conic program in which it appears as
    a free scalar: the noisy process, assemblage, or outcome table is
    affine in the weight, and membership in the causal set is monotone
    along the noise segment.  Layouts TTT, UUT and UUU are exact; the
    remaining ones fix the untrusted devices (and, where applicable, use
    an outer causal cone), so their value only bounds the true critical
    weight from below.
    """
    if scenario not in SWITCH_SCENARIOS:
        raise ScenarioError(
            f"unknown scenario {scenario!r}, expected one of {SWITCH_SCENARIOS}"
        )
    if scenario == "TTT":
        eta_star = _eta_process()
    elif scenario == "UUU":
        eta_star = _eta_behaviour()
    else:
        eta_star = _eta_assemblage(scenario)
    cert_eta = min(eta_star + CERTIFICATE_STEP, 1.0)
    if scenario == "TTT":
        certificate, residuals = _process_certificate(cert_eta)
    elif scenario == "UUU":
        certificate, residuals = _behaviour_certificate(cert_eta)
    else:
        certificate, residuals = _assemblage_certificate(scenario, cert_eta)
    return RobustnessResult(
        scenario, eta_star, _BOUND_KIND[scenario], certificate, cert_eta, residuals
    )


# -- randomized check that the switch stays causal when only Charlie is trusted --


@dataclass(frozen=True)
class UutCausalityReport:
    """Aggregate outcome of the trusted-Charlie causality sweep.

    ``worst_margin`` is the smallest eigenvalue over every family
    element of every found decomposition (barely negative values are
    solver dust); ``worst_reproduction`` the largest gap between a found
    decomposition and its assemblage; ``split_residual`` the worst
    constraint violation of the two-family split rebuilt directly from
    the outcome probabilities on the fixed-device trial.
    """

    trials: int
    all_causal: bool
    worst_margin: float
    worst_reproduction: float
    split_residual: float


def _haar_resend(input_name: str, output_name: str, rng: np.random.Generator) -> InstrumentSet:
    """Resend instruments conjugated by fresh Haar unitaries per setting."""
    base = resend_instruments(input_name, output_name)
    rows = []
    for x in range(base.settings):
        u = unitary_group.rvs(2, random_state=rng)
        v = unitary_group.rvs(2, random_state=rng)
        g = np.kron(u, v)
        rows.append(
            tuple(
                LabeledOperator(el.space, g @ el.matrix @ g.conj().T)
                for el in base.elements[x]
            )
        )
    return InstrumentSet(base.input_label, base.output_label, tuple(rows))


def _coarse_random(input_name: str, output_name: str, rng: np.random.Generator) -> InstrumentSet:
    """Random four-outcome instruments with the first two outcomes merged."""
    fine = random_instruments(
        2,
        2,
        settings=2,
        outcomes=4,
        rng=rng,
        input_label=SpaceLabel(input_name, 2),
        output_label=SpaceLabel(output_name, 2),
    )
    rows = []
    for x in range(fine.settings):
        els = fine.elements[x]
        rows.append((els[0] + els[1], els[2], els[3]))
    return InstrumentSet(fine.input_label, fine.output_label, tuple(rows))


def _random_party(input_name: str, output_name: str, rng: np.random.Generator) -> InstrumentSet:
    if rng.random() < 0.5:
        return _haar_resend(input_name, output_name, rng)
    return _coarse_random(input_name, output_name, rng)


def _ordered_split_residual(asm) -> float:
    """Rebuild a two-family split from outcome probabilities alone.

    Probabilities of the trusted-Charlie assemblage always form a causal
    table; reweighting each conditional state by the per-order parts of
    that table yields families obeying the per-order trace identities.
    The returned value is the worst violation across reproduction, both
    families' signalling identities, and total normalization.
    """
    o_a, o_b = asm.outcomes
    i_a, i_b = asm.settings
    p = np.empty((i_a, i_b, o_a, o_b))
    for a in range(o_a):
        for b in range(o_b):
            for x in range(i_a):
                for y in range(i_b):
                    p[x, y, a, b] = float(np.real(np.trace(asm.matrix(a, b, x, y))))
    membership = is_causal_behaviour(Behaviour(p, (i_a, i_b), (o_a, o_b)))
    if not membership.causal:
        raise SolverFailureError("assemblage probabilities are not a causal table")
    parts = {"A<B": np.zeros_like(p), "B<A": np.zeros_like(p)}
    for strategy, weight in zip(membership.strategies, membership.weights):
        if weight > 0.0:
            parts[strategy.order] += weight * strategy.behaviour().p
    fams = {}
    for order, table in parts.items():
        fam = np.zeros((o_a, o_b, i_a, i_b) + asm.matrix(0, 0, 0, 0).shape, dtype=complex)
        for a in range(o_a):
            for b in range(o_b):
                for x in range(i_a):
                    for y in range(i_b):
                        mass = p[x, y, a, b]
                        if mass > 0.0:
                            state = asm.matrix(a, b, x, y) / mass
                            fam[a, b, x, y] = table[x, y, a, b] * state
        fams[order] = fam
    first, second = fams["A<B"], fams["B<A"]
    worst = float(membership.residual)
    for a in range(o_a):
        for b in range(o_b):
            for x in range(i_a):
                for y in range(i_b):
                    gap = np.max(
                        np.abs(first[a, b, x, y] + second[a, b, x, y] - asm.matrix(a, b, x, y))
                    )
                    worst = max(worst, float(gap))
    tr1 = np.einsum("abxyii->abxy", first).real
    tr2 = np.einsum("abxyii->abxy", second).real
    # Alice-first family: Alice's marginal mass ignores Bob's setting and
    # the family's total mass ignores both settings; mirrored for the other.
    lead1 = tr1.sum(axis=1)
    worst = max(worst, float(np.max(np.abs(lead1 - lead1[:, :, :1]))))
    total1 = tr1.sum(axis=(0, 1))
    worst = max(worst, float(np.max(np.abs(total1 - total1[0, 0]))))
    lead2 = tr2.sum(axis=0)
    worst = max(worst, float(np.max(np.abs(lead2 - lead2[:, :1, :]))))
    total2 = tr2.sum(axis=(0, 1))
    worst = max(worst, float(np.max(np.abs(total2 - total2[0, 0]))))
    worst = max(worst, abs(float(total1[0, 0] + total2[0, 0]) - 1.0))
    return worst


def verify_uut_causality(trials: int, seed: int) -> UutCausalityReport:
    """Check that the reduced switch never looks noncausal to a trusted Charlie.

    Runs the fixed measure-and-resend devices first, then ``trials``
    random device pairs (per party: either Haar-conjugated resend
    projectors or a coarse-grained three-outcome random instrument), and
    asserts causality of every produced assemblage.  The fixed trial
    additionally rebuilds a two-family split straight from the outcome
    probabilities and reports its worst constraint violation.
    """
    trials = int(trials)
    if trials < 1:
        raise ValidationError("need at least one trial")
    rng = np.random.default_rng(seed)
    red = reduced_switch()
    pairs = [(resend_instruments("AI", "AO"), resend_instruments("BI", "BO"))]
    for _ in range(trials):
        pairs.append((_random_party("AI", "AO", rng), _random_party("BI", "BO", rng)))

    all_causal = True
    worst_margin = np.inf
    worst_reproduction = 0.0
    split_residual = np.inf
    for k, (alice, bob) in enumerate(pairs):
        asm = assemblage_from_process(red, (alice, bob), UUT)
        membership = is_causal_assemblage(asm)
        if not membership.causal:
            all_causal = False
            continue
        dec = membership.decomposition
        for idx in asm.indices():
            gap = np.max(
                np.abs(dec.first[idx].matrix + dec.second[idx].matrix - asm.matrix(*idx))
            )
            worst_reproduction = max(worst_reproduction, float(gap))
            for fam in (dec.first, dec.second):
                floor = float(np.linalg.eigvalsh(fam[idx].matrix)[0])
                worst_margin = min(worst_margin, floor)
        if k == 0:
            split_residual = _ordered_split_residual(asm)
    return UutCausalityReport(
        trials, all_causal, float(worst_margin), worst_reproduction, float(split_residual)
    )
