import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from causalis.errors import (
    DimensionMismatchError,
    DuplicateLabelError,
    MismatchedFactorsError,
    UnknownLabelError,
)
from causalis.spaces import (
    LabeledOperator,
    SpaceLabel,
    TensorSpace,
    embed,
    identity,
    max_entangled,
    partial_trace,
    partial_transpose,
    permute_to,
    tensor,
    trace_and_replace,
    uniform_state,
)

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)


def rand_op(space: TensorSpace, seed: int, hermitian: bool = True) -> LabeledOperator:
    rng = np.random.default_rng(seed)
    d = space.dim
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    if hermitian:
        m = (m + m.conj().T) / 2
    return LabeledOperator(space, m)


def brute_partial_trace(op: LabeledOperator, names: list[str]) -> np.ndarray:
    """Index-tuple loop oracle, no reshape tricks."""
    space = op.space
    dims = space.dims
    keep = [i for i, n in enumerate(space.names) if n not in names]
    drop = [i for i, n in enumerate(space.names) if n in names]
    dk = int(np.prod([dims[i] for i in keep])) if keep else 1
    out = np.zeros((dk, dk), dtype=complex)

    def flat(idx):
        v = 0
        for i, d in zip(idx, dims):
            v = v * d + i
        return v

    keep_ranges = [range(dims[i]) for i in keep]
    drop_ranges = [range(dims[i]) for i in drop]
    import itertools

    for ki, krow in enumerate(itertools.product(*keep_ranges)):
        for kj, kcol in enumerate(itertools.product(*keep_ranges)):
            s = 0.0 + 0.0j
            for t in itertools.product(*drop_ranges):
                row = [0] * len(dims)
                col = [0] * len(dims)
                for pos, val in zip(keep, krow):
                    row[pos] = val
                for pos, val in zip(keep, kcol):
                    col[pos] = val
                for pos, val in zip(drop, t):
                    row[pos] = val
                    col[pos] = val
                s += op.matrix[flat(row), flat(col)]
            out[ki, kj] = s
    return out


class TestSpaces:
    def test_label_validation(self):
        with pytest.raises(DimensionMismatchError):
            SpaceLabel("X", 0)
        with pytest.raises(ValueError):
            SpaceLabel("", 2)

    def test_duplicate_names_rejected(self):
        with pytest.raises(DuplicateLabelError):
            TensorSpace.of(("AI", 2), ("AI", 3))

    def test_dims_and_index(self):
        s = TensorSpace.of(("AI", 2), ("AO", 3), ("BI", 4))
        assert s.dim == 24
        assert s.dims == (2, 3, 4)
        assert s.index("AO") == 1
        assert s.dim_of(["AI", "BI"]) == 8
        assert s.without(["AO"]).names == ("AI", "BI")
        with pytest.raises(UnknownLabelError):
            s.index("CI")

    def test_operator_shape_checked(self):
        s = TensorSpace.of(("A", 2), ("B", 2))
        with pytest.raises(DimensionMismatchError):
            LabeledOperator(s, np.eye(3))

    def test_operator_immutable(self):
        op = identity(TensorSpace.of(("A", 2)))
        with pytest.raises(ValueError):
            op.matrix[0, 0] = 5.0


class TestTensor:
    def test_sx_kron_sz(self):
        a = LabeledOperator(TensorSpace.of(("A", 2)), SX)
        b = LabeledOperator(TensorSpace.of(("B", 2)), SZ)
        got = tensor(a, b)
        want = np.array(
            [
                [0, 0, 1, 0],
                [0, 0, 0, -1],
                [1, 0, 0, 0],
                [0, -1, 0, 0],
            ],
            dtype=complex,
        )
        assert got.space.names == ("A", "B")
        assert np.array_equal(got.matrix, want)

    def test_duplicate_label_rejected(self):
        a = identity(TensorSpace.of(("A", 2)))
        with pytest.raises(DuplicateLabelError):
            tensor(a, a)

    def test_three_factor_assoc(self):
        ops = [rand_op(TensorSpace.of((n, 2)), i) for i, n in enumerate("XYZ")]
        got = tensor(*ops)
        want = np.kron(np.kron(ops[0].matrix, ops[1].matrix), ops[2].matrix)
        assert np.allclose(got.matrix, want)


class TestPartialTrace:
    @pytest.mark.parametrize("names", [["AI"], ["AO"], ["AI", "BI"], ["AO", "AI"], []])
    def test_against_loop_oracle(self, names):
        s = TensorSpace.of(("AI", 2), ("AO", 3), ("BI", 2))
        op = rand_op(s, 7, hermitian=False)
        got = partial_trace(op, names)
        assert np.allclose(got.matrix, brute_partial_trace(op, names), atol=1e-12)

    def test_survivor_order(self):
        s = TensorSpace.of(("A", 2), ("B", 3), ("C", 2))
        op = rand_op(s, 3)
        assert partial_trace(op, ["B"]).space.names == ("A", "C")

    def test_product_state_factorizes(self):
        a = rand_op(TensorSpace.of(("A", 3)), 1)
        b = rand_op(TensorSpace.of(("B", 2)), 2)
        w = tensor(a, b)
        assert np.allclose(partial_trace(w, ["B"]).matrix, a.matrix * b.trace())
        assert np.allclose(partial_trace(w, ["A"]).matrix, b.matrix * a.trace())

    def test_full_trace(self):
        op = rand_op(TensorSpace.of(("A", 2), ("B", 2)), 11)
        full = partial_trace(op, ["A", "B"])
        assert full.space.names == ()
        assert np.isclose(full.matrix[0, 0], op.trace())

    def test_unknown_label(self):
        op = identity(TensorSpace.of(("A", 2)))
        with pytest.raises(UnknownLabelError):
            partial_trace(op, ["Q"])


class TestTraceAndReplace:
    def test_explicit_qubit_pair(self):
        # R_B(M) on A(x)B must equal Tr_B(M) (x) eye/2 entrywise
        s = TensorSpace.of(("A", 2), ("B", 2))
        op = rand_op(s, 5)
        got = trace_and_replace(op, ["B"])
        ta = brute_partial_trace(op, ["B"])
        want = np.kron(ta, np.eye(2) / 2)
        assert np.allclose(got.matrix, want, atol=1e-12)
        assert got.space.names == ("A", "B")

    def test_replaces_in_place_not_at_end(self):
        # R_A on A(x)B: identity goes on the FIRST slot
        s = TensorSpace.of(("A", 2), ("B", 3))
        op = rand_op(s, 6)
        got = trace_and_replace(op, ["A"])
        want = np.kron(np.eye(2) / 2, brute_partial_trace(op, ["A"]))
        assert np.allclose(got.matrix, want, atol=1e-12)

    def test_trace_preserved(self):
        s = TensorSpace.of(("A", 2), ("B", 3), ("C", 2))
        op = rand_op(s, 8)
        for names in (["A"], ["B"], ["A", "C"], ["A", "B", "C"]):
            assert np.isclose(trace_and_replace(op, names).trace(), op.trace())

    def test_idempotent(self):
        s = TensorSpace.of(("A", 2), ("B", 3))
        op = rand_op(s, 9)
        once = trace_and_replace(op, ["B"])
        twice = trace_and_replace(once, ["B"])
        assert once.allclose(twice, tol=1e-12)

    def test_disjoint_maps_commute(self):
        s = TensorSpace.of(("A", 2), ("B", 2), ("C", 3))
        op = rand_op(s, 10)
        ab = trace_and_replace(trace_and_replace(op, ["A"]), ["C"])
        ba = trace_and_replace(trace_and_replace(op, ["C"]), ["A"])
        assert ab.allclose(ba, tol=1e-12)
        joint = trace_and_replace(op, ["A", "C"])
        assert ab.allclose(joint, tol=1e-12)


class TestPartialTranspose:
    def test_phi_plus_gives_swap(self):
        # PT on one half of unnormalized |Phi+><Phi+| is the SWAP operator
        pp = max_entangled(SpaceLabel("A", 2), SpaceLabel("B", 2))
        swapped = partial_transpose(pp, ["B"])
        swap = np.array(
            [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
        )
        assert np.allclose(swapped.matrix, swap)
        eig = np.linalg.eigvalsh(swapped.hermitized().matrix)
        assert np.allclose(np.sort(eig), [-1, 1, 1, 1])

    def test_involution(self):
        s = TensorSpace.of(("A", 2), ("B", 3))
        op = rand_op(s, 12, hermitian=False)
        assert partial_transpose(partial_transpose(op, ["A"]), ["A"]).allclose(op, tol=0)

    def test_full_transpose(self):
        s = TensorSpace.of(("A", 2), ("B", 2))
        op = rand_op(s, 13, hermitian=False)
        got = partial_transpose(op, ["A", "B"])
        assert np.allclose(got.matrix, op.matrix.T)


class TestPermute:
    def test_swap_two_qubits(self):
        a = rand_op(TensorSpace.of(("A", 2)), 1)
        b = rand_op(TensorSpace.of(("B", 3)), 2)
        ab = tensor(a, b)
        ba = permute_to(ab, ["B", "A"])
        assert ba.space.names == ("B", "A")
        assert np.allclose(ba.matrix, np.kron(b.matrix, a.matrix))

    def test_not_a_permutation(self):
        op = identity(TensorSpace.of(("A", 2), ("B", 2)))
        with pytest.raises(MismatchedFactorsError):
            permute_to(op, ["A", "C"])

    def test_dim_mismatch_in_target_space(self):
        op = identity(TensorSpace.of(("A", 2), ("B", 2)))
        with pytest.raises(DimensionMismatchError):
            permute_to(op, TensorSpace.of(("B", 3), ("A", 2)))

    @settings(max_examples=40, deadline=None)
    @given(st.permutations(["P", "Q", "R", "S"]), st.integers(0, 10_000))
    def test_round_trip_property(self, order, seed):
        s = TensorSpace.of(("P", 2), ("Q", 3), ("R", 2), ("S", 2))
        op = rand_op(s, seed, hermitian=False)
        back = permute_to(permute_to(op, list(order)), list(s.names))
        assert back.allclose(op, tol=0)
        # trace is permutation invariant
        assert np.isclose(permute_to(op, list(order)).trace(), op.trace())


class TestConstructors:
    def test_max_entangled_trace_is_dim(self):
        for d in (2, 3, 4):
            pp = max_entangled(SpaceLabel("X", d), SpaceLabel("Y", d))
            assert np.isclose(pp.trace(), d)
            # projector up to normalization: pp @ pp = d * pp
            assert np.allclose(pp.matrix @ pp.matrix, d * pp.matrix)

    def test_max_entangled_dim_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            max_entangled(SpaceLabel("X", 2), SpaceLabel("Y", 3))

    def test_uniform_state(self):
        u = uniform_state(TensorSpace.of(("A", 2), ("B", 3)))
        assert np.isclose(u.trace(), 1.0)

    def test_embed_orders_and_pads(self):
        a = rand_op(TensorSpace.of(("AO", 2)), 4)
        target = TensorSpace.of(("AI", 3), ("AO", 2), ("BI", 2))
        wide = embed(a, target)
        assert wide.space.names == ("AI", "AO", "BI")
        want = np.kron(np.eye(3), np.kron(a.matrix, np.eye(2)))
        assert np.allclose(wide.matrix, want)

    def test_embed_checks_dims(self):
        a = rand_op(TensorSpace.of(("AO", 2)), 4)
        with pytest.raises(DimensionMismatchError):
            embed(a, TensorSpace.of(("AO", 3), ("BI", 2)))

    def test_hermitian_helpers(self):
        s = TensorSpace.of(("A", 2))
        h = rand_op(s, 20)
        assert h.is_hermitian()
        nh = LabeledOperator(s, np.array([[0, 1], [0, 0]], dtype=complex))
        assert not nh.is_hermitian()
        assert nh.hermitized().is_hermitian()
        assert np.isclose(nh.hermitized().min_eigenvalue(), -0.5)
