import numpy as np
import pytest

from jordanred import (
    BlockStructure,
    StructureMismatchError,
    SymBlockMatrix,
    inner,
    jordan_product,
    orthonormalize,
    project_onto_span,
    smat,
    svec,
)

from conftest import random_block_matrix


def unit(structure, block, i, j):
    blocks = [np.zeros((n, n)) for n in structure.orders]
    blocks[block][i, j] = 1.0
    blocks[block][j, i] = 1.0
    return SymBlockMatrix(structure, blocks, symmetrize=False)


def test_structure_dimensions():
    st = BlockStructure((3, 2))
    assert st.dim == 6 + 3
    assert st.full_dim == 9 + 4
    with pytest.raises(ValueError):
        BlockStructure((0,))


def test_inner_identity():
    st = BlockStructure((3,))
    I = SymBlockMatrix.identity(st)
    assert inner(I, I) == pytest.approx(3.0)


def test_inner_offdiagonal_pair():
    st = BlockStructure((2,))
    E = unit(st, 0, 0, 1)
    assert inner(E, E) == pytest.approx(2.0)


def test_inner_matches_svec_dot(rng):
    st = BlockStructure((3, 2))
    X = random_block_matrix(rng, st)
    Y = random_block_matrix(rng, st)
    direct = sum(
        X.blocks[k][i, j] * Y.blocks[k][i, j]
        for k, n in enumerate(st.orders) for i in range(n) for j in range(n))
    assert inner(X, Y) == pytest.approx(direct, rel=1e-12)
    assert inner(X, Y) == pytest.approx(float(np.dot(svec(X), svec(Y))),
                                        rel=1e-12)


def test_inner_structure_mismatch():
    X = SymBlockMatrix.identity(BlockStructure((2,)))
    Y = SymBlockMatrix.identity(BlockStructure((3,)))
    with pytest.raises(StructureMismatchError):
        inner(X, Y)


def test_jordan_product_unit(rng):
    st = BlockStructure((3,))
    X = random_block_matrix(rng, st)
    I = SymBlockMatrix.identity(st)
    assert (jordan_product(I, X) - X).norm() < 1e-14


def test_jordan_product_hand_value():
    st = BlockStructure((2,))
    E11 = SymBlockMatrix(st, [np.array([[1.0, 0.0], [0.0, 0.0]])])
    E12 = unit(st, 0, 0, 1)
    out = jordan_product(E11, E12)
    assert np.allclose(out.blocks[0], 0.5 * E12.blocks[0])


def test_polarization_identity(rng):
    st = BlockStructure((4,))
    for _ in range(5):
        X = random_block_matrix(rng, st)
        Y = random_block_matrix(rng, st)
        lhs = X.blocks[0] @ Y.blocks[0] + Y.blocks[0] @ X.blocks[0]
        rhs = ((X + Y).square() - X.square() - Y.square()).blocks[0]
        assert np.max(np.abs(lhs - rhs)) < 1e-12 * max(1.0, X.norm() * Y.norm())


def test_svec_roundtrip(rng):
    st = BlockStructure((3, 2))
    X = random_block_matrix(rng, st)
    back = smat(svec(X), st)
    assert (back - X).norm() < 1e-14 * max(1.0, X.norm())


def test_orthonormalize_drops_dependent():
    st = BlockStructure((2,))
    E11 = SymBlockMatrix(st, [np.array([[1.0, 0.0], [0.0, 0.0]])])
    basis = orthonormalize([E11, 2.0 * E11])
    assert basis.dim == 1


def test_orthonormalize_keeps_orthogonal_set():
    st = BlockStructure((2,))
    mats = [SymBlockMatrix(st, [np.diag([1.0, 0.0])]),
            SymBlockMatrix(st, [np.diag([0.0, 1.0])]),
            unit(st, 0, 0, 1)]
    basis = orthonormalize(mats)
    assert basis.dim == 3


def test_orthonormalize_rank_matches_svd(rng):
    st = BlockStructure((5,))
    mats = [random_block_matrix(rng, st) for _ in range(20)]
    basis = orthonormalize(mats)
    stacked = np.asarray([svec(m) for m in mats])
    rank = np.linalg.matrix_rank(stacked, tol=1e-9)
    assert basis.dim == rank == min(20, st.dim)
    gram = basis.gram()
    assert np.max(np.abs(gram - np.eye(basis.dim))) < 1e-10


def test_orthonormalize_span_invariant_under_permutation(rng):
    st = BlockStructure((4,))
    mats = [random_block_matrix(rng, st) for _ in range(6)]
    b1 = orthonormalize(mats)
    b2 = orthonormalize(mats[::-1])
    assert b1.contains_subspace(b2, tol=1e-9)
    assert b2.contains_subspace(b1, tol=1e-9)


def test_projection_onto_own_span(rng):
    st = BlockStructure((3,))
    X = random_block_matrix(rng, st)
    basis = orthonormalize([X])
    assert (project_onto_span(basis, X) - X).norm() < 1e-12 * X.norm()


def test_projection_of_orthogonal_matrix_is_zero():
    st = BlockStructure((2,))
    E11 = SymBlockMatrix(st, [np.diag([1.0, 0.0])])
    E22 = SymBlockMatrix(st, [np.diag([0.0, 1.0])])
    basis = orthonormalize([E11])
    assert project_onto_span(basis, E22).norm() < 1e-14


def test_projection_idempotent_and_self_adjoint(rng):
    st = BlockStructure((4,))
    basis = orthonormalize([random_block_matrix(rng, st) for _ in range(4)])
    for _ in range(5):
        X = random_block_matrix(rng, st)
        Y = random_block_matrix(rng, st)
        PX = basis.project(X)
        assert (basis.project(PX) - PX).norm() <= 1e-12 * max(1.0, X.norm())
        assert inner(PX, Y) == pytest.approx(inner(X, basis.project(Y)),
                                             rel=1e-10, abs=1e-10)
        # contraction
        assert PX.norm() <= X.norm() * (1 + 1e-12)
