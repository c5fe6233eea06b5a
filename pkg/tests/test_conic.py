import numpy as np
import pytest

from causalis.conic import (
    ConicProgram,
    herm_to_vec,
    real_embed,
    real_unembed,
    solve,
    solve_lp,
    vec_to_herm,
)
from causalis.errors import IllPosedProgramError, ValidationError


def rand_herm(n, seed):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (m + m.conj().T) / 2


class TestCoordinates:
    def test_round_trip(self):
        h = rand_herm(5, 1)
        assert np.allclose(vec_to_herm(herm_to_vec(h), 5), h, atol=1e-14)

    def test_isometry(self):
        a, b = rand_herm(4, 2), rand_herm(4, 3)
        lhs = herm_to_vec(a) @ herm_to_vec(b)
        assert np.isclose(lhs, np.real(np.trace(a @ b)), atol=1e-12)

    def test_stacked(self):
        stack = np.stack([rand_herm(3, s) for s in range(4)])
        v = herm_to_vec(stack)
        assert v.shape == (4, 9)
        assert np.allclose(vec_to_herm(v, 3), stack)


class TestRealEmbedding:
    def test_round_trip_exact(self):
        m = rand_herm(4, 7)
        assert np.array_equal(real_unembed(real_embed(m)), m)

    def test_eigenvalues_doubled(self):
        m = rand_herm(3, 8)
        ce = np.sort(np.linalg.eigvalsh(m))
        re = np.sort(np.linalg.eigvalsh(real_embed(m)))
        assert np.allclose(re, np.sort(np.concatenate([ce, ce])), atol=1e-12)

    def test_pairing_adjoint_identity(self):
        # Tr(E(M) P) = 2 Tr(M unembed(P)) for symmetric P
        m = rand_herm(3, 9)
        rng = np.random.default_rng(10)
        p = rng.normal(size=(6, 6))
        p = (p + p.T) / 2
        lhs = np.trace(real_embed(m) @ p)
        rhs = 2 * np.trace(m @ real_unembed(p))
        assert np.isclose(lhs, np.real(rhs), atol=1e-12)
        assert abs(np.imag(rhs)) < 1e-12


class TestSdp:
    def test_min_t_with_unit_offdiag(self):
        # minimize t s.t. [[t,1],[1,t]] PSD; optimum t=1
        prog = ConicProgram()
        prog.add_psd_var("X", 2)
        sx = np.array([[0, 1], [1, 0]], dtype=complex)
        sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
        prog.add_scalar_equality(2.0, matrix_terms=[("X", sx)])  # 2 Re X01 = 2
        prog.add_scalar_equality(0.0, matrix_terms=[("X", sy)])  # 2 Im X01 = 0
        prog.add_scalar_equality(0.0, matrix_terms=[("X", np.diag([1.0, -1.0]))])
        prog.set_objective(matrix_terms=[("X", np.diag([1.0, 0.0]))])
        rep = solve(prog)
        assert rep.status == "optimal"
        assert abs(rep.objective_value - 1.0) < 1e-6
        assert np.allclose(rep.primal["X"], np.ones((2, 2)) / 1.0, atol=1e-5)

    def test_feasibility_unit_trace(self):
        prog = ConicProgram()
        prog.add_psd_var("X", 3)
        prog.add_scalar_equality(1.0, matrix_terms=[("X", np.eye(3))])
        rep = solve(prog)
        assert rep.status == "optimal"
        # the most PSD unit-trace matrix is 1/3: slack = 1/3
        assert abs(rep.slack - 1.0 / 3.0) < 1e-6
        assert abs(np.trace(rep.primal["X"]).real - 1.0) < 1e-7

    def test_infeasible_negative_trace(self):
        prog = ConicProgram()
        prog.add_psd_var("X", 2)
        prog.add_scalar_equality(-1.0, matrix_terms=[("X", np.eye(2))])
        rep = solve(prog)
        assert rep.status == "infeasible"
        assert rep.certificate is not None
        assert rep.certificate["violation"] >= 1e-6

    def test_min_eig_objective_matches_eigh(self):
        # min Tr(E X), Tr X = 1, X PSD  ->  smallest eigenvalue of E
        e = rand_herm(4, 11)
        prog = ConicProgram()
        prog.add_psd_var("X", 4)
        prog.add_scalar_equality(1.0, matrix_terms=[("X", np.eye(4))])
        prog.set_objective(matrix_terms=[("X", e)])
        rep = solve(prog)
        assert rep.status == "optimal"
        assert abs(rep.objective_value - np.linalg.eigvalsh(e)[0]) < 1e-6

    def test_weak_duality(self):
        e = rand_herm(3, 12)
        prog = ConicProgram()
        prog.add_psd_var("X", 3)
        prog.add_scalar_equality(1.0, matrix_terms=[("X", np.eye(3))])
        prog.set_objective(matrix_terms=[("X", e)])
        rep = solve(prog)
        assert rep.dual_objective <= rep.objective_value + 1e-6

    def test_op_equality_pins_variable(self):
        m0 = rand_herm(2, 13)
        m0 = m0 @ m0.conj().T + 0.1 * np.eye(2)  # strictly PD
        prog = ConicProgram()
        prog.add_psd_var("X", 2)
        prog.add_op_equality([("X", 1.0)], rhs=m0)
        rep = solve(prog)
        assert rep.status == "optimal"
        assert np.allclose(rep.primal["X"], m0, atol=1e-6)
        assert abs(rep.slack - np.linalg.eigvalsh(m0)[0]) < 1e-6

    def test_subspace_basis_absorbed(self):
        # X restricted to span{1, sx}: X = a*1 + b*sx PSD iff a >= |b|
        sx = np.array([[0, 1], [1, 0]], dtype=complex)
        basis = np.stack([np.eye(2) / np.sqrt(2), sx / np.sqrt(2)])
        prog = ConicProgram()
        prog.add_psd_var("X", 2, basis=basis)
        prog.add_scalar_equality(1.0, matrix_terms=[("X", np.eye(2))])
        prog.set_objective(matrix_terms=[("X", sx)])
        rep = solve(prog)
        assert rep.status == "optimal"
        assert abs(rep.objective_value - (-1.0)) < 1e-6
        assert np.allclose(rep.primal["X"], (np.eye(2) - sx) / 2, atol=1e-5)

    def test_scalar_var_in_op_equality(self):
        # X + eta*1 = 2*1, X PSD, maximize eta: optimum eta=2, X=0
        prog = ConicProgram()
        prog.add_psd_var("X", 2)
        prog.add_scalar_var("eta")
        prog.add_op_equality(
            [("X", 1.0)], rhs=2 * np.eye(2), scalar_terms=[("eta", np.eye(2))]
        )
        prog.set_objective(vector_terms=[("eta", -1.0)])
        rep = solve(prog)
        assert rep.status == "optimal"
        assert abs(rep.primal["eta"] - 2.0) < 1e-6

    def test_reproducible(self):
        e = rand_herm(3, 14)
        reports = []
        for _ in range(2):
            prog = ConicProgram()
            prog.add_psd_var("X", 3)
            prog.add_scalar_equality(1.0, matrix_terms=[("X", np.eye(3))])
            prog.set_objective(matrix_terms=[("X", e)])
            reports.append(solve(prog))
        assert abs(reports[0].objective_value - reports[1].objective_value) < 1e-9
        assert np.max(np.abs(reports[0].primal["X"] - reports[1].primal["X"])) < 1e-9

    def test_inconsistent_equalities_farkas(self):
        prog = ConicProgram()
        prog.add_scalar_var("x")
        prog.add_scalar_equality(1.0, vector_terms=[("x", 1.0)])
        prog.add_scalar_equality(2.0, vector_terms=[("x", 1.0)])
        rep = solve(prog)
        assert rep.status == "infeasible"
        assert rep.certificate["kind"] == "equality-farkas"

    def test_empty_program_rejected(self):
        with pytest.raises(IllPosedProgramError):
            solve(ConicProgram())

    def test_non_hermitian_rhs_rejected(self):
        prog = ConicProgram()
        prog.add_psd_var("X", 2)
        with pytest.raises(ValidationError):
            prog.add_op_equality([("X", 1.0)], rhs=np.array([[0, 1], [0, 0]], dtype=complex))

    def test_maxiter_env_forces_failure(self, monkeypatch):
        monkeypatch.setenv("CAUSALIS_SOLVER_MAXITER", "1")
        e = rand_herm(3, 15)
        prog = ConicProgram()
        prog.add_psd_var("X", 3)
        prog.add_scalar_equality(1.0, matrix_terms=[("X", np.eye(3))])
        prog.set_objective(matrix_terms=[("X", e)])
        rep = solve(prog)
        assert rep.status == "numerical-failure"

    def test_equality_duals_decoded_by_tag(self):
        prog = ConicProgram()
        prog.add_psd_var("X", 2)
        prog.add_op_equality([("X", 1.0)], rhs=np.eye(2) / 2, tag="pin")
        prog.set_objective(matrix_terms=[("X", np.diag([1.0, 0.0]))])
        rep = solve(prog)
        assert rep.status == "optimal"
        assert rep.dual["equalities"]["pin"].shape == (2, 2)


class TestLp:
    def test_max_x_below_three(self):
        prog = ConicProgram()
        prog.add_scalar_var("x", nonneg=True)
        prog.add_upper_bound(3.0, vector_terms=[("x", 1.0)])
        prog.set_objective(vector_terms=[("x", -1.0)])
        rep = solve_lp(prog)
        assert rep.status == "optimal"
        assert abs(rep.objective_value + 3.0) < 1e-7
        assert abs(rep.primal["x"] - 3.0) < 1e-6

    def test_simplex_feasible(self):
        prog = ConicProgram()
        prog.add_vector_var("q", 2, nonneg=True)
        prog.add_scalar_equality(1.0, vector_terms=[("q", np.ones(2))])
        rep = solve_lp(prog)
        assert rep.status == "optimal"
        assert rep.slack >= 0.4  # q = (1/2, 1/2) has margin 1/2

    def test_contradictory_bound_infeasible(self):
        prog = ConicProgram()
        prog.add_scalar_var("q", nonneg=True)
        prog.add_scalar_equality(2.0, vector_terms=[("q", 1.0)])
        prog.add_upper_bound(1.0, vector_terms=[("q", 1.0)])
        rep = solve_lp(prog)
        assert rep.status == "infeasible"
        assert rep.certificate["violation"] >= 1e-6

    def test_rejects_matrix_vars(self):
        prog = ConicProgram()
        prog.add_psd_var("X", 2)
        with pytest.raises(ValidationError):
            solve_lp(prog)
