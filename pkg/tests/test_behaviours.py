"""Behaviour tables, the causal polytope, certification, and realization."""

import numpy as np
import pytest
from hypothesis import given, settings as hyp_settings
from hypothesis import strategies as st

from causalis.behaviours import (
    Behaviour,
    CausalInequality,
    DeterministicCausalStrategy,
    born,
    certify_dd,
    certify_di,
    deterministic_strategy_count,
    enumerate_deterministic_causal,
    gyni_success,
    is_causal_behaviour,
    realize_causal_behaviour,
    realize_causal_behaviour_tripartite,
)
from causalis.errors import (
    DimensionMismatchError,
    ExplosionGuardError,
    InvalidDecompositionError,
    ScenarioError,
    ValidationError,
)
from causalis.instruments import InstrumentSet, POVMSet
from causalis.processes import (
    PartyStructure,
    ProcessMatrix,
    CausalDecomposition,
    check_causal_separability,
    gyni_bound,
    is_causally_ordered,
    random_process_matrix,
    random_separable_process,
    validate_process,
    white_noise_process,
)
from causalis.spaces import LabeledOperator, SpaceLabel, TensorSpace

QUBITS = PartyStructure.bipartite(2, 2, 2, 2)

_KET = {0: np.array([1.0, 0.0]), 1: np.array([0.0, 1.0])}
_PLUS = {0: np.array([1.0, 1.0]) / np.sqrt(2), 1: np.array([1.0, -1.0]) / np.sqrt(2)}


def _proj(v):
    return np.outer(v, v.conj())


def _mr(meas_vec, rho):
    """Measure along a vector, reprepare a state: Choi P^T (x) rho."""
    return np.kron(_proj(meas_vec).T, rho)


def _a_space():
    return TensorSpace.of(("AI", 2), ("AO", 2))


def _b_space():
    return TensorSpace.of(("BI", 2), ("BO", 2))


def signalling_instruments():
    """Alice encodes her setting; Bob either reads out or writes back.

    Alice measures the z basis and reprepares |x>.  Bob's first setting
    reads the z basis; his second measures the x basis and feeds the
    outcome back as a z-basis state.
    """
    a_rows = tuple(
        tuple(LabeledOperator(_a_space(), _mr(_KET[a], _proj(_KET[x]))) for a in range(2))
        for x in range(2)
    )
    b_rows = (
        tuple(LabeledOperator(_b_space(), _mr(_KET[b], _proj(_KET[0]))) for b in range(2)),
        tuple(LabeledOperator(_b_space(), _mr(_PLUS[b], _proj(_KET[b]))) for b in range(2)),
    )
    return (
        InstrumentSet(SpaceLabel("AI", 2), SpaceLabel("AO", 2), a_rows),
        InstrumentSet(SpaceLabel("BI", 2), SpaceLabel("BO", 2), b_rows),
    )


def ocb_process() -> ProcessMatrix:
    """The two-way resource built from z-z and z-x-z correlation terms."""
    sz = np.diag([1.0, -1.0])
    sx = np.array([[0.0, 1.0], [1.0, 0.0]])
    t1 = np.kron(np.kron(np.eye(2), sz), np.kron(sz, np.eye(2)))
    t2 = np.kron(np.kron(sz, np.eye(2)), np.kron(sx, sz))
    w = (np.eye(16) + (t1 + t2) / np.sqrt(2)) / 4.0
    op = LabeledOperator(
        TensorSpace.of(("AI", 2), ("AO", 2), ("BI", 2), ("BO", 2)), w
    )
    return ProcessMatrix(op, QUBITS)


def two_way_swap_table() -> Behaviour:
    """Each party outputs the other's setting with certainty."""
    p = np.zeros((2, 2, 2, 2))
    for x in range(2):
        for y in range(2):
            p[x, y, y, x] = 1.0
    return Behaviour(p, (2, 2), (2, 2))


def random_ordered_table(lead, settings, outcomes, rng) -> Behaviour:
    i_a, i_b = settings[0], settings[1]
    o_a, o_b = outcomes[0], outcomes[1]
    if lead == "A":
        first = rng.dirichlet(np.ones(o_a), size=i_a)
        cond = rng.dirichlet(np.ones(o_b), size=(i_a, i_b, o_a))
        pair = first[:, None, :, None] * cond
    else:
        first = rng.dirichlet(np.ones(o_b), size=i_b)
        cond = rng.dirichlet(np.ones(o_a), size=(i_a, i_b, o_b))
        pair = first[None, :, None, :] * np.moveaxis(cond, 3, 2)
    if len(settings) == 2:
        return Behaviour(pair, settings, outcomes)
    i_c, o_c = settings[2], outcomes[2]
    last = rng.dirichlet(np.ones(o_c), size=(i_a, i_b, i_c, o_a, o_b))
    return Behaviour(pair[:, :, None, :, :, None] * last, settings, outcomes)


class TestBehaviour:
    def test_renormalizes_small_drift(self):
        p = np.full((1, 1, 2, 2), 0.25 + 1e-10)
        b = Behaviour(p, (1, 1), (2, 2))
        assert abs(b.p.sum() - 1.0) < 1e-14

    def test_rejects_negative_entry(self):
        p = np.full((1, 1, 2, 2), 0.25)
        p[0, 0, 0, 0] = -1e-6
        with pytest.raises(ValidationError):
            Behaviour(p, (1, 1), (2, 2))

    def test_clips_tiny_negative_noise(self):
        p = np.array([[[[0.5, 0.5], [-5e-13, 5e-13]]]])
        b = Behaviour(p, (1, 1), (2, 2))
        assert b.p.min() == 0.0

    def test_rejects_bad_normalization(self):
        p = np.full((1, 1, 2, 2), 0.25)
        p[0, 0, 0, 0] = 0.25 + 1e-6
        with pytest.raises(ValidationError):
            Behaviour(p, (1, 1), (2, 2))

    def test_rejects_shape_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            Behaviour(np.zeros((2, 2, 2, 2)), (2, 2), (2, 3))

    def test_rejects_last_party_signalling_backwards(self):
        # a copies z: the (a, b) marginal follows the last setting
        p = np.zeros((1, 1, 2, 2, 1, 1))
        p[0, 0, 0, 0, 0, 0] = 1.0
        p[0, 0, 1, 1, 0, 0] = 1.0
        with pytest.raises(ValidationError):
            Behaviour(p, (1, 1, 2), (2, 1, 1))

    def test_accepts_last_party_receiving(self):
        # c copies z while the (a, b) block stays put
        p = np.zeros((1, 1, 2, 1, 1, 2))
        p[0, 0, 0, 0, 0, 0] = 1.0
        p[0, 0, 1, 0, 0, 1] = 1.0
        b = Behaviour(p, (1, 1, 2), (1, 1, 2))
        assert b.arity == "tripartite"

    def test_immutability(self):
        b = two_way_swap_table()
        with pytest.raises((AttributeError, ValueError)):
            b.p[0, 0, 0, 0] = 0.5


class TestBorn:
    def test_white_noise_is_uniform(self):
        a_set, b_set = signalling_instruments()
        p = born(white_noise_process(QUBITS), a_set, b_set)
        assert np.max(np.abs(p.p - 0.25)) < 1e-12

    def test_two_way_resource_signals_both_ways(self):
        a_set, b_set = signalling_instruments()
        p = born(ocb_process(), a_set, b_set)
        hit = (1 + 1 / np.sqrt(2)) / 2
        for x in range(2):
            assert p.p[x, 0].sum(axis=0)[x] == pytest.approx(hit, abs=1e-12)
        for x in range(2):
            assert p.p[x, 1, 0].sum() == pytest.approx(hit, abs=1e-12)
            assert p.p[x, 0, 0].sum() == pytest.approx(0.5, abs=1e-12)

    def test_matches_direct_trace(self):
        a_set, b_set = signalling_instruments()
        proc = random_process_matrix(QUBITS, seed=11)
        p = born(proc, a_set, b_set)
        w = proc.matrix
        for x in range(2):
            for y in range(2):
                for a in range(2):
                    for b in range(2):
                        e = np.kron(a_set.element(x, a).matrix, b_set.element(y, b).matrix)
                        expect = np.trace(e @ w).real
                        assert p.p[x, y, a, b] == pytest.approx(expect, abs=1e-12)

    def test_tripartite_white_noise(self):
        structure = PartyStructure.charlie_last(2, 2, 2, 2, 2)
        a_rows = tuple(
            tuple(LabeledOperator(_a_space(), _mr(_KET[a], _proj(_KET[x]))) for a in range(2))
            for x in range(2)
        )
        b_rows = tuple(
            tuple(LabeledOperator(_b_space(), _mr(_KET[b], _proj(_KET[y]))) for b in range(2))
            for y in range(2)
        )
        c_space = TensorSpace.of(("CI", 2))
        c_rows = (
            tuple(LabeledOperator(c_space, _proj(_KET[c])) for c in range(2)),
            tuple(LabeledOperator(c_space, _proj(_PLUS[c])) for c in range(2)),
        )
        p = born(
            white_noise_process(structure),
            InstrumentSet(SpaceLabel("AI", 2), SpaceLabel("AO", 2), a_rows),
            InstrumentSet(SpaceLabel("BI", 2), SpaceLabel("BO", 2), b_rows),
            POVMSet(SpaceLabel("CI", 2), c_rows),
        )
        assert p.p.shape == (2, 2, 2, 2, 2, 2)
        assert np.max(np.abs(p.p - 0.125)) < 1e-12

    def test_arity_mismatch_raises(self):
        a_set, b_set = signalling_instruments()
        c = POVMSet(
            SpaceLabel("CI", 2),
            (tuple(LabeledOperator(TensorSpace.of(("CI", 2)), _proj(_KET[c])) for c in range(2)),),
        )
        with pytest.raises(ScenarioError):
            born(white_noise_process(QUBITS), a_set, b_set, c)

    def test_dimension_mismatch_raises(self):
        a_set, b_set = signalling_instruments()
        big = PartyStructure.bipartite(3, 2, 2, 2)
        with pytest.raises(DimensionMismatchError):
            born(white_noise_process(big), a_set, b_set)


class TestStrategies:
    def test_counts_two_setting_qubit_scenario(self):
        assert deterministic_strategy_count((2, 2), (2, 2), "A<B") == 64
        assert deterministic_strategy_count((2, 2), (2, 2), "B<A") == 64
        strategies = enumerate_deterministic_causal((2, 2), (2, 2))
        assert len(strategies) == 128

    def test_counts_tripartite(self):
        count = deterministic_strategy_count((2, 2, 2), (2, 2, 2), "A<B<C")
        assert count == 2**2 * 2**4 * 2**8
        strategies = enumerate_deterministic_causal((2, 2, 2), (2, 2, 2))
        assert len(strategies) == 2 * 16384

    def test_enumeration_is_duplicate_free(self):
        strategies = enumerate_deterministic_causal((2, 2), (2, 2))
        seen = {(s.order, s.responses) for s in strategies}
        assert len(seen) == len(strategies)

    def test_first_block_is_first_acting_a(self):
        strategies = enumerate_deterministic_causal((2, 2), (2, 2))
        assert all(s.order == "A<B" for s in strategies[:64])
        assert all(s.order == "B<A" for s in strategies[64:])

    def test_strategy_behaviour_is_deterministic(self):
        s = DeterministicCausalStrategy(
            "A<B", (2, 2), (2, 2), ((0, 1), ((0, 1), (1, 0)))
        )
        b = s.behaviour()
        assert b.p[0, 1, 0, 1] == 1.0
        assert b.p[1, 0, 1, 1] == 1.0
        assert b.p.sum() == 4.0

    def test_later_party_sees_upstream_inputs(self):
        # in B<A the first party's table depends only on its own setting
        s = DeterministicCausalStrategy(
            "B<A", (2, 2), (2, 2), (((0, 1), (1, 1)), (1, 0))
        )
        assert s.outcomes_for(0, 0) == (0, 1)
        assert s.outcomes_for(1, 0) == (1, 1)
        assert s.outcomes_for(1, 1) == (1, 0)

    def test_explosion_guard(self):
        with pytest.raises(ExplosionGuardError):
            enumerate_deterministic_causal((3, 3), (4, 4))


class TestMembership:
    def test_deterministic_vertices_are_causal(self):
        strategies = enumerate_deterministic_causal((2, 2), (2, 2))
        for s in (strategies[0], strategies[37], strategies[100]):
            res = is_causal_behaviour(s.behaviour())
            assert res.causal
            assert res.residual <= 1e-8

    def test_strategy_mixtures_are_causal(self):
        rng = np.random.default_rng(3)
        strategies = enumerate_deterministic_causal((2, 2), (2, 2))
        for _ in range(5):
            w = rng.dirichlet(np.ones(8))
            picks = rng.choice(len(strategies), size=8, replace=False)
            p = sum(wi * strategies[k].behaviour().p for wi, k in zip(w, picks))
            res = is_causal_behaviour(Behaviour(p, (2, 2), (2, 2)))
            assert res.causal

    def test_weights_reproduce_the_table(self):
        rng = np.random.default_rng(5)
        strategies = enumerate_deterministic_causal((2, 2), (2, 2))
        w = rng.dirichlet(np.ones(6))
        picks = rng.choice(len(strategies), size=6, replace=False)
        p = sum(wi * strategies[k].behaviour().p for wi, k in zip(w, picks))
        res = is_causal_behaviour(Behaviour(p, (2, 2), (2, 2)))
        rebuilt = sum(
            wi * s.behaviour().p for wi, s in zip(res.weights, res.strategies)
        )
        assert np.max(np.abs(rebuilt - p)) <= 1e-8

    def test_two_way_swap_is_noncausal_with_certificate(self):
        res = is_causal_behaviour(two_way_swap_table())
        assert not res.causal
        ineq = res.inequality
        assert ineq.violation >= 0.2
        top = max(ineq.value(s.behaviour()) for s in res.strategies)
        assert top <= ineq.bound + 1e-12
        assert ineq.value(two_way_swap_table()) > ineq.bound + 0.2

    def test_separable_processes_give_causal_tables(self):
        a_set, b_set = signalling_instruments()
        for seed in range(6):
            proc = random_separable_process(QUBITS, seed=seed)
            res = is_causal_behaviour(born(proc, a_set, b_set))
            assert res.causal

    @hyp_settings(max_examples=15, deadline=None)
    @given(st.integers(min_value=0, max_value=127), st.integers(min_value=0, max_value=127),
           st.floats(min_value=0.0, max_value=1.0))
    def test_pairwise_mixtures_stay_causal(self, i, j, t):
        strategies = enumerate_deterministic_causal((2, 2), (2, 2))
        p = t * strategies[i].behaviour().p + (1 - t) * strategies[j].behaviour().p
        assert is_causal_behaviour(Behaviour(p, (2, 2), (2, 2))).causal


class TestGyniSuccess:
    def test_two_way_swap_wins_always(self):
        assert gyni_success(two_way_swap_table()) == pytest.approx(1.0)

    def test_uniform_quarter(self):
        p = np.full((2, 2, 2, 2), 0.25)
        assert gyni_success(Behaviour(p, (2, 2), (2, 2))) == pytest.approx(0.25)

    def test_causal_maximum_is_one_half(self):
        strategies = enumerate_deterministic_causal((2, 2), (2, 2))
        best = max(gyni_success(s.behaviour()) for s in strategies)
        assert best == pytest.approx(gyni_bound(1))
        assert best == pytest.approx(0.5)

    def test_wrong_scenario_raises(self):
        p = np.full((1, 1, 2, 2), 0.25)
        with pytest.raises(ScenarioError):
            gyni_success(Behaviour(p, (1, 1), (2, 2)))


class TestCertifyDD:
    def test_two_way_resource_is_certified(self):
        a_set, b_set = signalling_instruments()
        proc = ocb_process()
        p = born(proc, a_set, b_set)
        v = certify_dd(p, a_set, b_set)
        assert v.verdict == "certified-noncausal"
        assert v.violation is not None and v.violation > 0.25
        # the witness itself flags the generating process
        assert float(np.trace(v.witness.matrix @ proc.matrix).real) < -1e-7
        # and respects the bound on causally separable samples
        for seed in range(5):
            wsep = random_separable_process(QUBITS, seed=seed)
            score = float(np.sum(v.functional * born(wsep, a_set, b_set).p))
            assert score <= v.bound + 1e-7

    def test_white_noise_not_certified_with_explanation(self):
        a_set, b_set = signalling_instruments()
        p = born(white_noise_process(QUBITS), a_set, b_set)
        v = certify_dd(p, a_set, b_set)
        assert v.verdict == "not-certified"
        rebuilt = born(v.w_sep, a_set, b_set)
        assert np.max(np.abs(rebuilt.p - p.p)) <= 1e-6
        assert isinstance(v.decomposition, CausalDecomposition)

    def test_unreachable_table_is_inconsistent(self):
        a_set, b_set = signalling_instruments()
        v = certify_dd(two_way_swap_table(), a_set, b_set)
        assert v.verdict == "inconsistent-behaviour"

    def test_scenario_mismatch_raises(self):
        a_set, b_set = signalling_instruments()
        p = np.full((1, 1, 2, 2), 0.25)
        with pytest.raises(ScenarioError):
            certify_dd(Behaviour(p, (1, 1), (2, 2)), a_set, b_set)


class TestCertifyDI:
    def test_noncausal_table_is_certified(self):
        a_set, b_set = signalling_instruments()
        p = born(ocb_process(), a_set, b_set)
        di = certify_di(p)
        assert di.verdict == "certified-noncausal"
        assert isinstance(di.inequality, CausalInequality)
        assert di.inequality.violation > 0.2

    def test_causal_table_gets_explicit_model(self):
        rng = np.random.default_rng(21)
        pab = random_ordered_table("A", (2, 2), (2, 2), rng)
        pba = random_ordered_table("B", (2, 2), (2, 2), rng)
        p = Behaviour(0.4 * pab.p + 0.6 * pba.p, (2, 2), (2, 2))
        di = certify_di(p)
        assert di.verdict == "not-certified"
        w, a_set, b_set = di.realization
        rebuilt = born(w, a_set, b_set)
        assert np.max(np.abs(rebuilt.p - p.p)) <= 1e-7
        assert validate_process(w.op, w.structure).passed

    def test_tripartite_causal_table(self):
        rng = np.random.default_rng(2)
        p1 = random_ordered_table("A", (1, 1, 2), (2, 1, 2), rng)
        p2 = random_ordered_table("B", (1, 1, 2), (2, 1, 2), rng)
        p = Behaviour(0.5 * p1.p + 0.5 * p2.p, (1, 1, 2), (2, 1, 2))
        di = certify_di(p)
        assert di.verdict == "not-certified"
        w, a_set, b_set, c_povm = di.realization
        rebuilt = born(w, a_set, b_set, c_povm)
        assert np.max(np.abs(rebuilt.p - p.p)) <= 1e-7


class TestRealize:
    def test_pure_lead_a(self):
        rng = np.random.default_rng(7)
        pab = random_ordered_table("A", (2, 2), (2, 2), rng)
        pba = random_ordered_table("B", (2, 2), (2, 2), rng)
        w, a_set, b_set = realize_causal_behaviour((1.0, pab, pba))
        assert np.max(np.abs(born(w, a_set, b_set).p - pab.p)) <= 1e-9
        assert validate_process(w.op, w.structure).passed
        assert is_causally_ordered(w, "A<B").passed
        assert isinstance(check_causal_separability(w), CausalDecomposition)

    def test_pure_lead_b(self):
        rng = np.random.default_rng(8)
        pab = random_ordered_table("A", (2, 2), (2, 2), rng)
        pba = random_ordered_table("B", (2, 2), (2, 2), rng)
        w, a_set, b_set = realize_causal_behaviour((0.0, pab, pba))
        assert np.max(np.abs(born(w, a_set, b_set).p - pba.p)) <= 1e-9
        assert is_causally_ordered(w, "B<A").passed

    def test_proper_mixture(self):
        rng = np.random.default_rng(9)
        pab = random_ordered_table("A", (2, 2), (2, 2), rng)
        pba = random_ordered_table("B", (2, 2), (2, 2), rng)
        w, a_set, b_set = realize_causal_behaviour((0.5, pab, pba))
        mix = 0.5 * pab.p + 0.5 * pba.p
        assert np.max(np.abs(born(w, a_set, b_set).p - mix)) <= 1e-9
        assert validate_process(w.op, w.structure).passed
        assert w.structure.dim == 1024

    def test_many_random_mixtures_round_trip(self):
        rng = np.random.default_rng(10)
        for _ in range(10):
            pab = random_ordered_table("A", (1, 1), (2, 2), rng)
            pba = random_ordered_table("B", (1, 1), (2, 2), rng)
            q = float(rng.uniform(0.1, 0.9))
            w, a_set, b_set = realize_causal_behaviour((q, pab, pba))
            mix = q * pab.p + (1 - q) * pba.p
            assert np.max(np.abs(born(w, a_set, b_set).p - mix)) <= 1e-9

    def test_strategy_weight_form(self):
        strategies = enumerate_deterministic_causal((2, 2), (2, 2))
        pairs = [(0.25, strategies[3]), (0.35, strategies[17]), (0.4, strategies[80])]
        target = sum(wt * s.behaviour().p for wt, s in pairs)
        w, a_set, b_set = realize_causal_behaviour(pairs)
        assert np.max(np.abs(born(w, a_set, b_set).p - target)) <= 1e-9

    def test_rejects_signalling_component(self):
        rng = np.random.default_rng(11)
        pab = random_ordered_table("A", (2, 2), (2, 2), rng)
        pba = random_ordered_table("B", (2, 2), (2, 2), rng)
        with pytest.raises(InvalidDecompositionError):
            realize_causal_behaviour((0.5, pba, pab))  # slots swapped

    def test_rejects_bad_weight(self):
        rng = np.random.default_rng(12)
        pab = random_ordered_table("A", (2, 2), (2, 2), rng)
        pba = random_ordered_table("B", (2, 2), (2, 2), rng)
        with pytest.raises(InvalidDecompositionError):
            realize_causal_behaviour((1.5, pab, pba))

    def test_rejects_unnormalized_strategy_weights(self):
        strategies = enumerate_deterministic_causal((2, 2), (2, 2))
        with pytest.raises(InvalidDecompositionError):
            realize_causal_behaviour([(0.25, strategies[0]), (0.25, strategies[70])])


class TestRealizeTripartite:
    def test_pure_lead_a(self):
        rng = np.random.default_rng(13)
        p1 = random_ordered_table("A", (1, 1, 1), (2, 2, 2), rng)
        p2 = random_ordered_table("B", (1, 1, 1), (2, 2, 2), rng)
        w, a_set, b_set, c_povm = realize_causal_behaviour_tripartite((1.0, p1, p2))
        assert np.max(np.abs(born(w, a_set, b_set, c_povm).p - p1.p)) <= 1e-9
        assert validate_process(w.op, w.structure).passed
        assert is_causally_ordered(w, "A<B<C").passed

    def test_pure_lead_b(self):
        rng = np.random.default_rng(14)
        p1 = random_ordered_table("A", (1, 1, 1), (2, 2, 2), rng)
        p2 = random_ordered_table("B", (1, 1, 1), (2, 2, 2), rng)
        w, a_set, b_set, c_povm = realize_causal_behaviour_tripartite((0.0, p1, p2))
        assert np.max(np.abs(born(w, a_set, b_set, c_povm).p - p2.p)) <= 1e-9
        assert is_causally_ordered(w, "B<A<C").passed

    def test_mixture_with_trivial_last_outcome(self):
        rng = np.random.default_rng(15)
        p1 = random_ordered_table("A", (2, 2, 2), (2, 2, 1), rng)
        p2 = random_ordered_table("B", (2, 2, 2), (2, 2, 1), rng)
        w, a_set, b_set, c_povm = realize_causal_behaviour_tripartite((0.3, p1, p2))
        mix = 0.3 * p1.p + 0.7 * p2.p
        assert np.max(np.abs(born(w, a_set, b_set, c_povm).p - mix)) <= 1e-9
        assert validate_process(w.op, w.structure).passed

    def test_full_mixture(self):
        rng = np.random.default_rng(16)
        p1 = random_ordered_table("A", (1, 1, 1), (2, 1, 2), rng)
        p2 = random_ordered_table("B", (1, 1, 1), (2, 1, 2), rng)
        w, a_set, b_set, c_povm = realize_causal_behaviour_tripartite((0.6, p1, p2))
        mix = 0.6 * p1.p + 0.4 * p2.p
        assert np.max(np.abs(born(w, a_set, b_set, c_povm).p - mix)) <= 1e-9
        assert validate_process(w.op, w.structure).passed

    def test_rejects_scenario_mismatch(self):
        rng = np.random.default_rng(17)
        p1 = random_ordered_table("A", (1, 1, 1), (2, 2, 2), rng)
        p2 = random_ordered_table("B", (1, 1, 1), (2, 2, 1), rng)
        with pytest.raises(InvalidDecompositionError):
            realize_causal_behaviour_tripartite((0.5, p1, p2))
