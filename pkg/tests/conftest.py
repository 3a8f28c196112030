import numpy as np
import pytest
import scipy.sparse as sp

from jordanred import BlockStructure, ConicProgram, SymBlockMatrix, svec


def random_symmetric(rng, n):
    M = rng.standard_normal((n, n))
    return 0.5 * (M + M.T)


def random_block_matrix(rng, structure):
    return SymBlockMatrix(structure,
                          [random_symmetric(rng, n) for n in structure.orders])


def random_program(seed, n=4, m=3, orders=None):
    """Random equality-form program with a planted interior point.

    b comes from X0 = I + small noise (primal strictly feasible) and the cost
    is psd-shifted so y = 0 is dual strictly feasible.
    """
    rng = np.random.default_rng(seed)
    structure = BlockStructure(tuple(orders) if orders else (n,))
    X0 = SymBlockMatrix(structure, [np.eye(k) + 0.1 * random_symmetric(rng, k)
                                    for k in structure.orders])
    constraints = []
    for _ in range(m):
        Ai = random_block_matrix(rng, structure)
        constraints.append((Ai, float(np.dot(svec(Ai), svec(X0)))))
    C = SymBlockMatrix(structure, [2.0 * np.eye(k) + random_symmetric(rng, k)
                                   for k in structure.orders])
    prog = ConicProgram.from_constraints(structure, C, constraints,
                                         name=f"random_{seed}")
    prog.interior_point = X0  # test-only attribute
    return prog


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
