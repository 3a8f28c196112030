import numpy as np
import pytest

from jordanred import (
    BlockStructure,
    ConicProgram,
    ReductionForm,
    SymBlockMatrix,
    build_affine_data,
    decompose_ideals,
    lift_dual,
    lift_primal,
    optimal_admissible_subspace,
    optimal_coordinate_subspace,
    reformulate_isomorphic,
    reformulate_restriction,
    smat,
    svec,
    verify_reduction,
)
from jordanred.instances import HammingGraphSpec, theta_sdp

from conftest import random_program


def reduced_feasible_points(red, count, seed):
    """Affine-feasible points of the reduced program around its min-norm point."""
    aff = build_affine_data(red.program)
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        z = rng.standard_normal(red.program.structure.dim)
        out.append(smat(svec(aff.Y_Lperp) + aff.project_L_svec(z),
                        red.program.structure))
    return out


def test_restriction_of_ambient_drops_dependent_rows():
    prog = random_program(1, n=3, m=3)
    # duplicate a constraint row to create a dependency
    import scipy.sparse as sp
    A = sp.vstack([prog.A, prog.A.getrow(0)]).tocsr()
    b = np.concatenate([prog.b, prog.b[:1]])
    prog2 = ConicProgram(prog.structure, prog.C, A, b)
    from jordanred import SubspaceBasis
    ambient = SubspaceBasis(prog.structure, np.eye(prog.structure.dim))
    red = reformulate_restriction(prog2, ambient)
    assert red.form is ReductionForm.RESTRICTION
    assert red.num_kept == 3
    assert red.kept_constraints == (0, 1, 2)  # earliest independent rows kept
    assert (red.program.C - prog.C).norm() < 1e-12


def test_restriction_to_coordinate_subspace_never_grows_nnz():
    for seed in (5, 6, 7):
        prog = random_program(seed, n=4, m=3)
        aff = build_affine_data(prog)
        _, S_coord = optimal_coordinate_subspace(aff)
        red = reformulate_restriction(prog, S_coord)
        assert red.program.nnz <= prog.nnz


def test_restriction_objective_preserved_on_feasible_points():
    prog = random_program(9, n=4, m=3)
    aff = build_affine_data(prog)
    S = optimal_admissible_subspace(aff)
    red = reformulate_restriction(prog, S)
    rng = np.random.default_rng(0)
    for _ in range(50):
        z = rng.standard_normal(prog.structure.dim)
        x = svec(aff.Y_Lperp) + aff.project_L_svec(z)
        px = S.project_svec(x)
        obj_x = float(np.dot(svec(prog.C), x))
        obj_px = float(np.dot(svec(prog.C), px))
        assert obj_px == pytest.approx(obj_x, rel=1e-8, abs=1e-8)
        assert np.max(np.abs(prog.A @ px - prog.b)) < 1e-8


def test_kept_count_matches_projected_rank():
    prog = random_program(13, n=4, m=6)
    aff = build_affine_data(prog)
    S = optimal_admissible_subspace(aff)
    red = reformulate_restriction(prog, S)
    coords = np.asarray((prog.A @ S.Q.T))
    assert red.num_kept == np.linalg.matrix_rank(coords, tol=1e-8)


def test_isomorphic_reformulation_identity_case():
    prog = random_program(21, n=3, m=3)
    aff = build_affine_data(prog)
    S = optimal_admissible_subspace(aff)
    assert S.dim == prog.structure.dim  # generic data saturates
    dec = decompose_ideals(S)
    red = reformulate_isomorphic(prog, dec)
    assert red is not None
    assert red.program.ranks == (3,)
    assert red.num_kept == prog.m


def test_isomorphic_hamming_collapses_to_orthant():
    prog = theta_sdp(HammingGraphSpec(7, {5, 6}))
    aff = build_affine_data(prog)
    S = optimal_admissible_subspace(aff)
    dec = decompose_ideals(S)
    red = reformulate_isomorphic(prog, dec)
    assert red.program.ranks == (1, 1, 1, 1, 1)
    # dual variable count = number of kept equations
    assert red.num_kept == 2

    # uniform weights give a feasible point of the reduced LP; its lift
    # satisfies the original trace and edge constraints
    aff_red = build_affine_data(red.program)
    Xhat = aff_red.Y_Lperp
    X = lift_primal(red, Xhat)
    assert prog.constraint_residual(X) < 1e-8
    assert red.program.objective(Xhat) == pytest.approx(prog.objective(X),
                                                        rel=1e-8)


def test_lift_primal_dual_feasibility_and_objective():
    prog = random_program(33, n=4, m=4)
    aff = build_affine_data(prog)
    S = optimal_admissible_subspace(aff)
    dec = decompose_ideals(S)
    red = reformulate_isomorphic(prog, dec)
    for Xhat in reduced_feasible_points(red, 50, seed=3):
        X = lift_primal(red, Xhat)
        assert prog.constraint_residual(X) < 1e-7 * max(1.0, np.linalg.norm(prog.b))
        assert prog.objective(X) == pytest.approx(red.program.objective(Xhat),
                                                  rel=1e-8, abs=1e-8)
        if Xhat.min_eigenvalue() >= 0:
            assert X.min_eigenvalue() >= -1e-9
    # dual side: S_hat = Phi*(C) - sum y_i Phi*(A_i) lifts to C + L^perp
    rng = np.random.default_rng(4)
    Chat = red.phi.adjoint(prog.C)
    for _ in range(20):
        y = 0.01 * rng.standard_normal(red.program.m)
        Shat = smat(svec(Chat) - red.program.A.T @ y, red.program.structure)
        Slift = lift_dual(red, Shat)
        diff = svec(Slift) - svec(prog.C)
        # difference must lie in span{A_i} = L^perp
        resid = diff - aff.Lperp_basis.project_svec(diff)
        assert np.linalg.norm(resid) < 1e-7 * max(1.0, np.linalg.norm(diff))
        if Shat.min_eigenvalue() >= 0:
            assert Slift.min_eigenvalue() >= -1e-9


def test_zero_objective_lift():
    prog = random_program(41, n=3, m=2)
    prog.C = SymBlockMatrix.zeros(prog.structure)
    aff = build_affine_data(prog)
    S = optimal_admissible_subspace(aff)
    dec = decompose_ideals(S)
    red = reformulate_isomorphic(prog, dec)
    Xhat = reduced_feasible_points(red, 1, seed=0)[0]
    assert red.program.objective(Xhat) == pytest.approx(0.0, abs=1e-12)
    assert prog.objective(lift_primal(red, Xhat)) == pytest.approx(0.0, abs=1e-12)


def test_closure_idempotent_after_restriction():
    prog = random_program(47, n=4, m=2)
    aff = build_affine_data(prog)
    S = optimal_admissible_subspace(aff)
    red = reformulate_restriction(prog, S)
    aff2 = build_affine_data(red.program)
    S2 = optimal_admissible_subspace(aff2)
    assert S2.dim == S.dim


def test_verify_reduction_passes_for_identity_reduction():
    prog = random_program(51, n=3, m=2)
    from jordanred import SubspaceBasis
    ambient = SubspaceBasis(prog.structure, np.eye(prog.structure.dim))
    red = reformulate_restriction(prog, ambient)
    rep = verify_reduction(prog, red, samples=20, seed=0)
    assert rep.passed, rep.messages


def test_verify_reduction_flags_corrupted_transport():
    prog = random_program(57, n=4, m=3)
    aff = build_affine_data(prog)
    S = optimal_admissible_subspace(aff)
    dec = decompose_ideals(S)
    red = reformulate_isomorphic(prog, dec)
    rep = verify_reduction(prog, red, samples=20, seed=0)
    assert rep.passed, rep.messages

    red.phi.matrix = red.phi.matrix.copy()
    red.phi.matrix[:, -1] *= -1.0  # sign-flip one transport column
    bad = verify_reduction(prog, red, samples=20, seed=0)
    assert not bad.passed
    assert any("homomorphism" in msg or "isometry" in msg or "constraint" in msg
               for msg in bad.messages)
