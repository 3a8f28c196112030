import numpy as np
import pytest

from jordanred import (
    BlockStructure,
    CapacityError,
    ConicProgram,
    InfeasibleAffineError,
    SubspaceBasis,
    SymBlockMatrix,
    build_affine_data,
    check_admissible,
    optimal_admissible_subspace,
    orthonormalize,
    star_algebra_subspace,
    svec,
)
from jordanred.instances import HammingGraphSpec, theta_sdp
from jordanred.jordan import unit_element

from conftest import random_block_matrix, random_program


def make_program(structure, C, constraints, name=""):
    return ConicProgram.from_constraints(structure, C, constraints, name=name)


def sym(mat):
    arr = np.asarray(mat, dtype=float)
    return 0.5 * (arr + arr.T)


# ---------------------------------------------------------------------------
# build_affine_data
# ---------------------------------------------------------------------------

def test_affine_data_trace_constraint():
    st = BlockStructure((2,))
    I = SymBlockMatrix.identity(st)
    prog = make_program(st, I, [(I, 1.0)])
    aff = build_affine_data(prog)
    assert np.allclose(aff.Y_Lperp.blocks[0], np.eye(2) / 2)


def test_affine_data_orthogonal_cost():
    st = BlockStructure((2,))
    E11 = SymBlockMatrix(st, [np.diag([1.0, 0.0])])
    C = SymBlockMatrix(st, [sym([[0, 1], [1, 0]])])
    prog = make_program(st, C, [(E11, 3.0)])
    aff = build_affine_data(prog)
    assert np.allclose(aff.Y_Lperp.blocks[0], np.diag([3.0, 0.0]))
    assert (aff.C_L - C).norm() < 1e-12  # C is orthogonal to A_1


def test_affine_data_theta_k2():
    prog = theta_sdp(HammingGraphSpec(1, {1}))
    aff = build_affine_data(prog)
    Y = aff.Y_Lperp
    assert Y.trace() == pytest.approx(1.0, abs=1e-10)
    assert abs(Y.blocks[0][0, 1]) < 1e-10


def test_affine_data_inconsistent_constraints():
    st = BlockStructure((2,))
    I = SymBlockMatrix.identity(st)
    prog = make_program(st, I, [(I, 1.0), (I, 2.0)])
    with pytest.raises(InfeasibleAffineError):
        build_affine_data(prog)


def test_affine_data_projections_split(rng):
    prog = random_program(7, n=4, m=3)
    aff = build_affine_data(prog)
    X = random_block_matrix(rng, prog.structure)
    PL = aff.project_L(X)
    PLp = aff.project_Lperp(X)
    assert (PL + PLp - X).norm() < 1e-10
    # P_L lands orthogonal to every constraint matrix
    assert np.max(np.abs(prog.A @ svec(PL))) < 1e-9


# ---------------------------------------------------------------------------
# check_admissible
# ---------------------------------------------------------------------------

def test_ambient_space_is_admissible():
    prog = random_program(3, n=3, m=2)
    aff = build_affine_data(prog)
    ambient = SubspaceBasis(prog.structure, np.eye(prog.structure.dim))
    rep = check_admissible(ambient, aff)
    assert rep.contains_points and rep.L_invariant and rep.square_closed


def test_worked_4x4_restriction_subspace_is_admissible():
    # the 4x4 pair whose solutions are caught by span{E12+E21, E11, E22, E33}
    st = BlockStructure((4,))

    def basis_mat(entries):
        M = np.zeros((4, 4))
        for i, j, v in entries:
            M[i, j] = v
            M[j, i] = v
        return SymBlockMatrix(st, [M], symmetrize=False)

    # primal data: X = [[x1, 1, x3, x4], [1, x2, x4, -x3],
    #                   [x3, x4, 1, x5], [x4, -x3, x5, 0]]
    # free entries parametrized by L; fixed entries produce Y.
    A_constraints = []
    # entries fixed: X12 = 1, X33 = 1, X44 = 0, X13 = X3 free...
    # L^perp is spanned by the constraint matrices of the fixed entries and
    # the two coupling patterns (X13 = -X24, X14 = X23).
    A_constraints.append((basis_mat([(0, 1, 1.0)]), 2.0))        # <E12+E21, X> = 2
    A_constraints.append((basis_mat([(2, 2, 1.0)]), 1.0))        # X33 = 1
    A_constraints.append((basis_mat([(3, 3, 1.0)]), 0.0))        # X44 = 0
    A_constraints.append((basis_mat([(0, 2, 1.0), (1, 3, 1.0)]), 0.0))
    A_constraints.append((basis_mat([(0, 3, 1.0), (1, 2, -1.0)]), 0.0))
    C = basis_mat([(0, 0, 1.0), (1, 1, 1.0)])                    # x1 + x2
    prog = make_program(st, C, A_constraints, name="worked-4x4")
    aff = build_affine_data(prog)
    S = orthonormalize([basis_mat([(0, 1, 1.0)]),
                        basis_mat([(0, 0, 1.0)]),
                        basis_mat([(1, 1, 1.0)]),
                        basis_mat([(2, 2, 1.0)])])
    rep = check_admissible(S, aff)
    assert rep.contains_points and rep.L_invariant and rep.square_closed
    # and the closure agrees: S_opt is contained in S
    S_opt = optimal_admissible_subspace(aff)
    assert S.contains_subspace(S_opt, tol=1e-8)


def test_offdiagonal_span_not_square_closed():
    prog = random_program(11, n=2, m=1)
    aff = build_affine_data(prog)
    st = prog.structure
    E12 = SymBlockMatrix(st, [sym([[0, 1], [1, 0]])])
    S = orthonormalize([E12])
    rep = check_admissible(S, aff)
    assert not rep.square_closed


# ---------------------------------------------------------------------------
# optimal_admissible_subspace
# ---------------------------------------------------------------------------

def test_diagonal_data_reduces_to_diagonal():
    st = BlockStructure((3,))
    rng = np.random.default_rng(5)
    C = SymBlockMatrix(st, [np.diag(rng.standard_normal(3))])
    A1 = SymBlockMatrix(st, [np.diag([1.0, 1.0, 1.0])])
    A2 = SymBlockMatrix(st, [np.diag([1.0, 2.0, 3.0])])
    prog = make_program(st, C, [(A1, 1.0), (A2, 2.0)])
    aff = build_affine_data(prog)
    S = optimal_admissible_subspace(aff)
    diag_basis = SubspaceBasis(st, np.eye(st.dim)[[0, 3, 5]])
    assert diag_basis.contains_subspace(S, tol=1e-9)


def test_generic_instance_saturates_ambient():
    prog = random_program(23, n=3, m=2)
    aff = build_affine_data(prog)
    S = optimal_admissible_subspace(aff)
    assert S.dim == prog.structure.dim == 6


def test_hamming_7_5_6_dimension():
    prog = theta_sdp(HammingGraphSpec(7, {5, 6}))
    aff = build_affine_data(prog)
    S = optimal_admissible_subspace(aff)
    assert S.dim == 5
    rep = check_admissible(S, aff)
    assert rep.contains_points and rep.L_invariant and rep.square_closed


def test_closure_idempotence_and_positivity(rng):
    prog = random_program(31, n=4, m=2)
    aff = build_affine_data(prog)
    S = optimal_admissible_subspace(aff)
    # positivity of P_S on random psd matrices
    for _ in range(100):
        W = random_block_matrix(rng, prog.structure)
        psd = SymBlockMatrix(prog.structure,
                             [blk @ blk.T for blk in W.blocks],
                             symmetrize=False)
        proj = S.project(psd)
        assert proj.min_eigenvalue() >= -1e-8 * max(1.0, psd.norm())
    # unit element under matrix multiplication
    E = unit_element(S, seed=0)
    for B in S.matrices:
        prod = [e @ b for e, b in zip(E.blocks, B.blocks)]
        assert max(np.max(np.abs(p - q)) for p, q in zip(prod, B.blocks)) < 1e-8
    sq = E.square()
    assert (sq - E).norm() < 1e-8


def test_degenerate_zero_instance_gives_zero_subspace(caplog):
    st = BlockStructure((2,))
    E11 = SymBlockMatrix(st, [np.diag([1.0, 0.0])])
    prog = make_program(st, E11, [(E11, 0.0)])  # C in L^perp, b = 0
    aff = build_affine_data(prog)
    S = optimal_admissible_subspace(aff)
    assert S.dim == 0


# ---------------------------------------------------------------------------
# star_algebra_subspace
# ---------------------------------------------------------------------------

def test_star_algebra_identity_generates_itself():
    st = BlockStructure((3,))
    I = SymBlockMatrix.identity(st)
    prog = make_program(st, I, [])
    S = star_algebra_subspace(prog)
    assert S.dim == 1


def test_star_algebra_two_diagonal_idempotents():
    st = BlockStructure((2,))
    E11 = SymBlockMatrix(st, [np.diag([1.0, 0.0])])
    E22 = SymBlockMatrix(st, [np.diag([0.0, 1.0])])
    prog = make_program(st, E11, [(E22, 1.0)])
    S = star_algebra_subspace(prog)
    assert S.dim == 2


def test_star_algebra_connected_graph_saturates():
    # edge symmetrizers of a connected graph generate the full matrix algebra
    st = BlockStructure((4,))
    edges = [(0, 1), (1, 2), (2, 3), (3, 0)]
    mats = []
    for u, v in edges:
        M = np.zeros((4, 4))
        M[u, v] = M[v, u] = 1.0
        mats.append(SymBlockMatrix(st, [M], symmetrize=False))
    prog = make_program(st, SymBlockMatrix(st, [-np.ones((4, 4))]),
                        [(SymBlockMatrix.identity(st), 1.0)]
                        + [(M, 0.0) for M in mats])
    S = star_algebra_subspace(prog)
    assert S.dim == st.dim  # symmetric part of the full matrix algebra


def test_star_algebra_capacity_guard():
    prog = random_program(4, n=4, m=3)
    with pytest.raises(CapacityError):
        star_algebra_subspace(prog, cap=2)


def test_theta_data_algebra_saturation_certificate():
    """The (7, {5,6}) Hamming graph is connected, so S_data is everything.

    Walk argument validated numerically on small graphs by
    test_star_algebra_connected_graph_saturates; here only the graph
    connectivity (the certificate hypothesis) is checked at full scale.
    """
    spec = HammingGraphSpec(7, {5, 6})
    n = spec.num_vertices
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in spec.edges():
        parent[find(u)] = find(v)
    roots = {find(u) for u in range(n)}
    assert len(roots) == 1
    full_sym_dim = n * (n + 1) // 2
    assert full_sym_dim == 8256  # the saturated S_data dimension
