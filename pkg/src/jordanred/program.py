"""Equality-form conic programs  min <C,X> s.t. <A_i,X> = b_i,  X in a psd product.

Constraint matrices are kept as sparse svec rows; `constraint(i)` materializes
the dense SymBlockMatrix on demand (Z-kron instances have 10^5 constraints over
order ~700 blocks, which rules out dense per-constraint storage).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np
import scipy.sparse as sp

from .symspace import BlockStructure, SymBlockMatrix, smat, svec


@dataclass
class ConicProgram:
    structure: BlockStructure
    C: SymBlockMatrix
    A: sp.csr_matrix            # m x ambient-svec-dim constraint rows
    b: np.ndarray
    name: str = ""
    # optional free-variable part: m x p coefficients and cost on p free scalars
    free_A: np.ndarray | None = None
    free_c: np.ndarray | None = None

    def __post_init__(self):
        self.A = sp.csr_matrix(self.A)
        self.A.eliminate_zeros()
        self.b = np.asarray(self.b, dtype=float)
        if self.A.shape != (self.b.shape[0], self.structure.dim):
            raise ValueError(
                f"constraint matrix shape {self.A.shape} inconsistent with "
                f"m={self.b.shape[0]}, ambient dim {self.structure.dim}")
        if self.C.structure != self.structure:
            raise ValueError("cost matrix has a different block structure")

    # ---- constructors ---------------------------------------------------
    @staticmethod
    def from_constraints(structure: BlockStructure, C: SymBlockMatrix,
                         constraints: Iterable[tuple[SymBlockMatrix, float]],
                         name: str = "") -> "ConicProgram":
        mats, rhs = [], []
        for Ai, bi in constraints:
            mats.append(svec(Ai))
            rhs.append(float(bi))
        if mats:
            A = sp.csr_matrix(np.asarray(mats))
        else:
            A = sp.csr_matrix((0, structure.dim))
        return ConicProgram(structure, C, A, np.asarray(rhs), name=name)

    # ---- accessors --------------------------------------------------------
    @property
    def m(self) -> int:
        return int(self.b.shape[0])

    @property
    def num_free(self) -> int:
        return 0 if self.free_A is None else self.free_A.shape[1]

    def constraint(self, i: int) -> SymBlockMatrix:
        row = np.asarray(self.A.getrow(i).todense()).ravel()
        return smat(row, self.structure)

    def iter_constraints(self) -> Iterator[tuple[SymBlockMatrix, float]]:
        for i in range(self.m):
            yield self.constraint(i), float(self.b[i])

    @property
    def ranks(self) -> tuple[int, ...]:
        """The tuple (n_1, ..., n_r) of block orders."""
        return self.structure.orders

    @property
    def nnz(self) -> int:
        """Nonzero floating-point numbers needed to store C and all A_i.

        Counted over vectorized dense blocks (off-diagonal entries twice),
        matching the storage of full per-block matrices.
        """
        from .symspace import svec_diag_mask
        diag = svec_diag_mask(self.structure.orders)
        weights = np.where(diag, 1, 2)
        c = svec(self.C)
        total = int(np.sum(weights[np.abs(c) > 0]))
        coo = self.A.tocoo()
        total += int(np.sum(weights[coo.col]))
        return total

    def objective(self, X: SymBlockMatrix) -> float:
        return float(np.dot(svec(self.C), svec(X)))

    def constraint_residual(self, X: SymBlockMatrix) -> float:
        if self.m == 0:
            return 0.0
        r = self.A @ svec(X) - self.b
        return float(np.linalg.norm(r, ord=np.inf))

    def __repr__(self):
        return (f"ConicProgram(name={self.name!r}, ranks={self.ranks}, "
                f"m={self.m}, nnz={self.nnz})")
