import numpy as np
import pytest

from causalis.errors import ScenarioError, ValidationError
from causalis.instruments import switch_instruments, unitary_instrument
from causalis.processes import (
    CausalDecomposition,
    CausalWitness,
    PartyStructure,
    ProcessMatrix,
    check_causal_separability,
    gyni_bound,
    gyni_operator,
    is_causally_ordered,
    lemma_positivity_margin,
    max_gyni_over_processes,
    membership_basis,
    random_ordered_process,
    random_process_matrix,
    random_separable_process,
    transpose_criterion,
    validate_process,
    white_noise_process,
)
from causalis.spaces import (
    LabeledOperator,
    SpaceLabel,
    TensorSpace,
    identity,
    max_entangled,
    tensor,
    uniform_state,
)

QUBITS = PartyStructure.bipartite(2, 2, 2, 2)
S_Z = np.diag([1.0, -1.0]).astype(complex)
S_X = np.array([[0, 1], [1, 0]], dtype=complex)


def channel_process() -> ProcessMatrix:
    """1/d (x) |Phi+><Phi+| (x) 1: Alice's output wired into Bob's input."""
    w = tensor(
        LabeledOperator(TensorSpace.of(("AI", 2)), np.eye(2) / 2),
        max_entangled(SpaceLabel("AO", 2), SpaceLabel("BI", 2)),
        identity(TensorSpace.of(("BO", 2))),
    )
    return ProcessMatrix(w, QUBITS)


def ocb_process() -> ProcessMatrix:
    """The two-way signalling qubit process built from anticommuting corrections."""
    term1 = np.kron(np.kron(np.eye(2), S_Z), np.kron(S_Z, np.eye(2)))
    term2 = np.kron(np.kron(S_Z, np.eye(2)), np.kron(S_X, S_Z))
    w = (np.eye(16) + (term1 + term2) / np.sqrt(2)) / 4
    return ProcessMatrix(LabeledOperator(QUBITS.space, w), QUBITS)


class TestValidity:
    def test_white_noise_valid_bipartite(self):
        rep = validate_process(white_noise_process(QUBITS).op, QUBITS)
        assert rep.passed

    def test_white_noise_valid_tripartite(self):
        tri = PartyStructure.charlie_last(2, 2, 2, 2, 2)
        assert validate_process(white_noise_process(tri).op, tri).passed

    def test_channel_process_valid(self):
        assert validate_process(channel_process().op, QUBITS).passed

    def test_ocb_valid(self):
        assert validate_process(ocb_process().op, QUBITS).passed

    def test_identity_feedback_loop_invalid(self):
        # |Phi+><Phi+| on AI,AO feeds A's output back to its input
        w = tensor(
            max_entangled(SpaceLabel("AI", 2), SpaceLabel("AO", 2)),
            identity(TensorSpace.of(("BI", 2), ("BO", 2))),
        )
        rep = validate_process(w, QUBITS)
        assert not rep.passed
        assert rep.residual("B-marginal") > 0.1

    def test_trace_residual(self):
        w = white_noise_process(QUBITS).op * 1.5
        rep = validate_process(w, QUBITS)
        assert rep.residual("trace") > 1.0


class TestCausalOrder:
    def test_channel_ordered_a_first_only(self):
        proc = channel_process()
        assert is_causally_ordered(proc, "A<B").passed
        assert not is_causally_ordered(proc, "B<A").passed

    def test_white_noise_ordered_both_ways(self):
        proc = white_noise_process(QUBITS)
        assert is_causally_ordered(proc, "A<B").passed
        assert is_causally_ordered(proc, "B<A").passed

    def test_structure_mismatch(self):
        with pytest.raises(ScenarioError):
            is_causally_ordered(white_noise_process(QUBITS), "A<B<C")

    def test_tripartite_order_residuals(self):
        tri = PartyStructure.charlie_last(2, 2, 2, 2, 2)
        proc = random_ordered_process(tri, "A<B<C", seed=3)
        assert validate_process(proc.op, tri).passed
        assert is_causally_ordered(proc, "A<B<C").passed


class TestMembershipBasis:
    @pytest.mark.parametrize("order", [None, "A<B", "B<A"])
    def test_orthonormal(self, order):
        basis = membership_basis(QUBITS, order)
        flat = basis.reshape(basis.shape[0], -1)
        gram = flat @ flat.conj().T
        assert np.allclose(gram, np.eye(basis.shape[0]), atol=1e-10)

    def test_ordered_subspaces_inside_valid(self):
        dim_valid = membership_basis(QUBITS, None).shape[0]
        dim_ab = membership_basis(QUBITS, "A<B").shape[0]
        assert dim_ab < dim_valid

    def test_identity_in_every_subspace(self):
        for order in (None, "A<B", "B<A"):
            basis = membership_basis(QUBITS, order)
            coords = np.einsum("kij,ji->k", basis, np.eye(16) / 4)
            recon = np.einsum("k,kij->ij", coords, basis)
            assert np.allclose(recon, np.eye(16) / 4, atol=1e-10)


class TestSeparability:
    def test_white_noise_separable(self):
        outcome = check_causal_separability(white_noise_process(QUBITS))
        assert isinstance(outcome, CausalDecomposition)
        w = white_noise_process(QUBITS).matrix
        mix = outcome.q * outcome.component_AB.matrix + (1 - outcome.q) * outcome.component_BA.matrix
        assert np.max(np.abs(mix - w)) <= 1e-7

    def test_components_are_ordered_processes(self):
        proc = random_separable_process(QUBITS, seed=11)
        outcome = check_causal_separability(proc)
        assert isinstance(outcome, CausalDecomposition)
        assert validate_process(outcome.component_AB, QUBITS).passed
        assert is_causally_ordered(
            ProcessMatrix(outcome.component_AB, QUBITS), "A<B"
        ).passed
        assert is_causally_ordered(
            ProcessMatrix(outcome.component_BA, QUBITS), "B<A"
        ).passed
        mix = outcome.q * outcome.component_AB.matrix + (1 - outcome.q) * outcome.component_BA.matrix
        assert np.max(np.abs(mix - proc.matrix)) <= 1e-7

    def test_ocb_yields_witness(self):
        outcome = check_causal_separability(ocb_process())
        assert isinstance(outcome, CausalWitness)
        value = np.real(np.trace(outcome.S.matrix @ ocb_process().matrix))
        assert value <= -1e-7

    def test_witness_nonnegative_on_separable_samples(self):
        outcome = check_causal_separability(ocb_process())
        s = outcome.S.matrix
        for seed in range(100):
            v = random_separable_process(QUBITS, seed).matrix
            assert np.real(np.trace(s @ v)) >= -1e-9

    def test_witness_normalized_on_white_noise(self):
        outcome = check_causal_separability(ocb_process())
        omega = white_noise_process(QUBITS).matrix
        assert np.isclose(np.real(np.trace(outcome.S.matrix @ omega)), 1.0, atol=1e-7)

    def test_invalid_input_rejected(self):
        w = tensor(
            max_entangled(SpaceLabel("AI", 2), SpaceLabel("AO", 2)),
            identity(TensorSpace.of(("BI", 2), ("BO", 2))),
        )
        with pytest.raises(ValidationError):
            check_causal_separability(ProcessMatrix(w, QUBITS))


class TestGyni:
    def test_bound_values(self):
        assert np.isclose(gyni_bound(16), 16.0 / 17.0)
        assert np.isclose(gyni_bound(1), 0.5)

    def test_bound_monotone(self):
        vals = [gyni_bound(d) for d in (1, 2, 4, 16, 256, 10_000)]
        assert all(b > a for a, b in zip(vals, vals[1:]))
        assert vals[-1] < 1.0

    def test_max_over_processes_respects_dimension_bound(self):
        a_set, b_set, _ = switch_instruments()
        val = max_gyni_over_processes(a_set, b_set)
        assert val <= gyni_bound(16) + 1e-6
        # the unrestricted set contains the separable one
        sep = max_gyni_over_processes(a_set, b_set, separable_only=True)
        assert val >= sep - 1e-6

    def test_identity_channel_instruments_give_quarter(self):
        a_set = _identity_pair("AI", "AO")
        b_set = _identity_pair("BI", "BO")
        val = max_gyni_over_processes(a_set, b_set)
        assert np.isclose(val, 0.25, atol=1e-6)

    def test_separable_variant_capped_at_half(self):
        a_set, b_set, _ = switch_instruments()
        val = max_gyni_over_processes(a_set, b_set, separable_only=True)
        assert val <= 0.5 + 1e-6

    def test_gyni_operator_is_hermitian(self):
        a_set, b_set, _ = switch_instruments()
        m = gyni_operator(a_set, b_set)
        assert m.is_hermitian(tol=1e-12)


def _identity_pair(in_name, out_name):
    from causalis.instruments import InstrumentSet

    base = unitary_instrument(
        np.eye(2), SpaceLabel(in_name, 2), SpaceLabel(out_name, 2)
    ).element(0, 0)
    half = base * 0.5
    return InstrumentSet(
        SpaceLabel(in_name, 2),
        SpaceLabel(out_name, 2),
        ((half, half), (half, half)),
    )


class TestLemma:
    def test_max_entangled_margin_zero(self):
        a = max_entangled(SpaceLabel("1", 2), SpaceLabel("2", 2))
        assert abs(lemma_positivity_margin(a)) <= 1e-12

    def test_product_margin_nonnegative(self):
        rng = np.random.default_rng(0)
        for _ in range(5):
            g = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
            rho = g @ g.conj().T
            g2 = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
            sig = g2 @ g2.conj().T
            op = LabeledOperator(TensorSpace.of(("1", 3), ("2", 2)), np.kron(rho, sig))
            assert lemma_positivity_margin(op) >= -1e-9

    def test_random_wishart_margins(self):
        rng = np.random.default_rng(42)
        space = TensorSpace.of(("1", 4), ("2", 4))
        for _ in range(200):
            g = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
            op = LabeledOperator(space, g @ g.conj().T)
            assert lemma_positivity_margin(op) >= -1e-9

    def test_rejects_non_psd(self):
        op = LabeledOperator(TensorSpace.of(("1", 2), ("2", 2)), -np.eye(4))
        with pytest.raises(ValidationError):
            lemma_positivity_margin(op)


class TestTransposeCriterion:
    def test_classical_process_applies(self):
        # diagonal matrices are fixed points of any partial transpose, and the
        # transposed matrix is then the same separable process
        proc = _classical_channel_process()
        assert transpose_criterion(proc, "A") == "criterion-applies"

    def test_ocb_transpose_invariant_hence_silent(self):
        # every A-side factor of the two-way signalling process carries only
        # 1 or a diagonal Pauli, so the partial transpose returns the matrix
        # itself, which is nonseparable: the criterion cannot apply
        assert transpose_criterion(ocb_process(), "A") == "criterion-silent"

    def test_non_psd_transpose_silent(self):
        # valid process whose partial transpose on B is not PSD
        proc = _entangled_state_process()
        assert transpose_criterion(proc, "B") == "criterion-silent"


def _classical_channel_process():
    """Classical copy wire from A's outcome register to B's input."""
    copy = np.zeros((4, 4), dtype=complex)
    copy[0, 0] = copy[3, 3] = 1.0
    wire = LabeledOperator(TensorSpace.of(("AO", 2), ("BI", 2)), copy)
    w = tensor(
        uniform_state(TensorSpace.of(("AI", 2))),
        wire,
        identity(TensorSpace.of(("BO", 2))),
    )
    return ProcessMatrix(w, QUBITS)


def _entangled_state_process():
    """Shared maximally entangled state between the two input factors."""
    phi = max_entangled(SpaceLabel("AI", 2), SpaceLabel("BI", 2))
    w = tensor(phi, identity(TensorSpace.of(("AO", 2), ("BO", 2))))
    return ProcessMatrix(w / 2.0, QUBITS)


class TestRandomSampling:
    def test_valid_for_any_seed(self):
        for seed in (0, 1, 7, 123):
            proc = random_process_matrix(QUBITS, seed)
            assert validate_process(proc.op, QUBITS).passed

    def test_deterministic(self):
        a = random_process_matrix(QUBITS, 5).matrix
        b = random_process_matrix(QUBITS, 5).matrix
        assert np.array_equal(a, b)

    def test_mean_approaches_white_noise(self):
        acc = np.zeros((16, 16), dtype=complex)
        n = 100
        for seed in range(n):
            acc += random_process_matrix(QUBITS, seed).matrix
        omega = white_noise_process(QUBITS).matrix
        assert np.max(np.abs(acc / n - omega)) < 0.05

    def test_ordered_sampling(self):
        proc = random_ordered_process(QUBITS, "B<A", seed=9)
        assert is_causally_ordered(proc, "B<A").passed
        assert validate_process(proc.op, QUBITS).passed

    def test_tripartite_sampling(self):
        tri = PartyStructure.charlie_last(2, 2, 2, 2, 2)
        proc = random_process_matrix(tri, seed=2)
        assert validate_process(proc.op, tri).passed
