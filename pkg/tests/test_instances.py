import numpy as np
import pytest

from jordanred import build_affine_data, check_admissible, decompose_ideals
from jordanred.combinat import optimal_partition_subspace
from jordanred.instances import (
    HammingGraphSpec,
    Z_MATRIX,
    cprank_instance,
    cprank_sdp,
    planted_symmetry_sdp,
    theta_sdp,
)
from jordanred.subspace import optimal_admissible_subspace


def test_theta_k2_shape():
    prog = theta_sdp(HammingGraphSpec(1, {1}))
    assert prog.ranks == (2,)
    assert prog.m == 2
    assert np.allclose(prog.C.blocks[0], -np.ones((2, 2)))


def test_theta_matching_graph_structure():
    # q=2, distance {2}: complement pairs form a perfect matching
    spec = HammingGraphSpec(2, {2})
    prog = theta_sdp(spec)
    assert spec.edges() == [(0, 3), (1, 2)]
    assert prog.ranks == (4,)
    assert prog.m == 3


def test_theta_hamming_7_5_6_sizes():
    spec = HammingGraphSpec(7, {5, 6})
    prog = theta_sdp(spec)
    assert prog.ranks == (128,)
    assert prog.m == 1 + 1792


def test_theta_constraints_pairwise_orthogonal():
    prog = theta_sdp(HammingGraphSpec(3, {1, 2}))
    G = (prog.A @ prog.A.T).toarray()
    assert np.max(np.abs(G - np.diag(np.diag(G)))) == 0.0


def test_theta_rejects_bad_spec():
    with pytest.raises(ValueError):
        HammingGraphSpec(3, {4})
    with pytest.raises(ValueError):
        theta_sdp(HammingGraphSpec(11, {1}))


def test_cprank_z_table_shape():
    prog = cprank_sdp(Z_MATRIX)
    assert prog.ranks == (10, 9) + (1,) * 9
    assert prog.m == 37
    assert prog.nnz == 172


def test_cprank_smoke_1x1():
    prog = cprank_sdp(np.array([[1.0]]))
    assert prog.ranks == (2, 1, 1)
    assert prog.m == 2


def test_cprank_zxz_shape():
    prog = cprank_instance("ZxZ")
    assert prog.ranks[:2] == (82, 81)
    assert len(prog.ranks) == 2 + 81
    assert prog.m == 2026
    assert prog.nnz == 13204


def test_cprank_rejects_bad_input():
    with pytest.raises(ValueError):
        cprank_sdp(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        cprank_sdp(np.array([[1.0, -2.0], [-2.0, 1.0]]))


def test_planted_instances_admissible_orbit_subspace():
    for group in ("cyclic", "dihedral", "trivial"):
        prog = planted_symmetry_sdp(4, group, seed=1)
        aff = build_affine_data(prog)
        _, S_part = optimal_partition_subspace(aff)
        rep = check_admissible(S_part, aff, tol=1e-8)
        assert rep.contains_points and rep.L_invariant and rep.square_closed


def test_blockcopy_instance_recovers_tied_structure():
    prog = planted_symmetry_sdp(5, "blockcopy", seed=2)
    aff = build_affine_data(prog)
    S = optimal_admissible_subspace(aff)
    dec = decompose_ideals(S)
    assert list(dec.rank_tuple) == [2, 1]
    assert [i.dim for i in dec.ideals] == [3, 1]


def test_planted_interior_point_is_feasible():
    prog = planted_symmetry_sdp(5, "cyclic", seed=4)
    aff = build_affine_data(prog)
    # the planted rhs admits a point: the min-norm solution must be consistent
    assert prog.constraint_residual(aff.Y_Lperp) < 1e-8
