"""Block symmetric matrix space S^{n_1} x ... x S^{n_r} with trace inner product.

Everything downstream works in isometric svec coordinates: per block the upper
triangle is flattened row-wise with off-diagonal entries scaled by sqrt(2), so
the Euclidean dot product of two coordinate vectors equals the trace inner
product of the matrices they encode.  Orthogonal projection, Gram-Schmidt and
rank decisions then reduce to plain dense (or sparse) linear algebra.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

#: default relative tolerance for rank / drop decisions, configurable globally
DEFAULT_TOL = 1e-9

_SQRT2 = float(np.sqrt(2.0))


class StructureMismatchError(ValueError):
    """Operands live over different block structures."""


@dataclass(frozen=True)
class BlockStructure:
    """Block orders (n_1, ..., n_r) of the ambient cone product."""

    orders: tuple[int, ...]

    def __post_init__(self):
        if len(self.orders) == 0:
            raise ValueError("structure needs at least one block")
        if any(int(n) < 1 for n in self.orders):
            raise ValueError("block orders must be >= 1")
        object.__setattr__(self, "orders", tuple(int(n) for n in self.orders))

    @property
    def num_blocks(self) -> int:
        return len(self.orders)

    @property
    def dim(self) -> int:
        """Ambient vector-space dimension sum n_i (n_i + 1) / 2."""
        return sum(n * (n + 1) // 2 for n in self.orders)

    @property
    def full_dim(self) -> int:
        """Dimension sum n_i^2 of the non-symmetric block matrix space."""
        return sum(n * n for n in self.orders)

    @property
    def svec_offsets(self) -> tuple[int, ...]:
        offs = [0]
        for n in self.orders:
            offs.append(offs[-1] + n * (n + 1) // 2)
        return tuple(offs)

    @property
    def entry_offsets(self) -> tuple[int, ...]:
        """Offsets of the flattened per-block n_k x n_k entry grids."""
        offs = [0]
        for n in self.orders:
            offs.append(offs[-1] + n * n)
        return tuple(offs)

    @property
    def num_entries(self) -> int:
        return self.entry_offsets[-1]


@lru_cache(maxsize=None)
def _triu_cache(n: int):
    iu, ju = np.triu_indices(n)
    scale = np.where(iu == ju, 1.0, _SQRT2)
    return iu, ju, scale


@lru_cache(maxsize=None)
def svec_diag_mask(orders: tuple[int, ...]) -> np.ndarray:
    """Boolean mask of svec coordinates that sit on a block diagonal."""
    parts = []
    for n in orders:
        iu, ju, _ = _triu_cache(n)
        parts.append(iu == ju)
    return np.concatenate(parts)


def _check_same_structure(x: "SymBlockMatrix", y: "SymBlockMatrix"):
    if x.structure != y.structure:
        raise StructureMismatchError(
            f"structures differ: {x.structure.orders} vs {y.structure.orders}"
        )


class SymBlockMatrix:
    """An element of S^{n_1} x ... x S^{n_r}, stored as dense symmetric blocks."""

    __slots__ = ("structure", "blocks")

    def __init__(self, structure: BlockStructure, blocks: Sequence[np.ndarray],
                 symmetrize: bool = True):
        if len(blocks) != structure.num_blocks:
            raise StructureMismatchError("wrong number of blocks")
        mats = []
        for n, blk in zip(structure.orders, blocks):
            arr = np.asarray(blk, dtype=float)
            if arr.shape != (n, n):
                raise StructureMismatchError(f"block shape {arr.shape} != ({n},{n})")
            if symmetrize:
                arr = 0.5 * (arr + arr.T)
            mats.append(arr)
        self.structure = structure
        self.blocks = mats

    # ---- constructors -------------------------------------------------
    @staticmethod
    def zeros(structure: BlockStructure) -> "SymBlockMatrix":
        return SymBlockMatrix(
            structure, [np.zeros((n, n)) for n in structure.orders], symmetrize=False
        )

    @staticmethod
    def identity(structure: BlockStructure) -> "SymBlockMatrix":
        return SymBlockMatrix(
            structure, [np.eye(n) for n in structure.orders], symmetrize=False
        )

    @staticmethod
    def from_svec(structure: BlockStructure, coords: np.ndarray) -> "SymBlockMatrix":
        return smat(coords, structure)

    # ---- linear structure ---------------------------------------------
    def copy(self) -> "SymBlockMatrix":
        return SymBlockMatrix(self.structure, [b.copy() for b in self.blocks],
                              symmetrize=False)

    def __add__(self, other: "SymBlockMatrix") -> "SymBlockMatrix":
        _check_same_structure(self, other)
        return SymBlockMatrix(self.structure,
                              [a + b for a, b in zip(self.blocks, other.blocks)],
                              symmetrize=False)

    def __sub__(self, other: "SymBlockMatrix") -> "SymBlockMatrix":
        _check_same_structure(self, other)
        return SymBlockMatrix(self.structure,
                              [a - b for a, b in zip(self.blocks, other.blocks)],
                              symmetrize=False)

    def __mul__(self, scalar: float) -> "SymBlockMatrix":
        return SymBlockMatrix(self.structure, [scalar * b for b in self.blocks],
                              symmetrize=False)

    __rmul__ = __mul__

    def __neg__(self) -> "SymBlockMatrix":
        return self * (-1.0)

    # ---- metric --------------------------------------------------------
    def svec(self) -> np.ndarray:
        return svec(self)

    def norm(self) -> float:
        return float(np.sqrt(sum(np.sum(b * b) for b in self.blocks)))

    def max_abs(self) -> float:
        return max(float(np.max(np.abs(b))) if b.size else 0.0 for b in self.blocks)

    def trace(self) -> float:
        return float(sum(np.trace(b) for b in self.blocks))

    # ---- products -------------------------------------------------------
    def square(self) -> "SymBlockMatrix":
        """Blockwise matrix square X^2 (a Jordan square)."""
        return SymBlockMatrix(self.structure, [b @ b for b in self.blocks],
                              symmetrize=False)

    def matmul(self, other: "SymBlockMatrix") -> list[np.ndarray]:
        """Blockwise plain matrix product; the result is not symmetric in general."""
        _check_same_structure(self, other)
        return [a @ b for a, b in zip(self.blocks, other.blocks)]

    def eigvalsh(self) -> np.ndarray:
        return np.concatenate([np.linalg.eigvalsh(b) for b in self.blocks])

    def min_eigenvalue(self) -> float:
        return float(self.eigvalsh().min())

    def __repr__(self):
        return f"SymBlockMatrix(orders={self.structure.orders}, norm={self.norm():.3g})"


# ---------------------------------------------------------------------------
# svec / smat
# ---------------------------------------------------------------------------

def svec(X: SymBlockMatrix) -> np.ndarray:
    """Isometric coordinates: upper triangle per block, off-diagonal * sqrt(2)."""
    parts = []
    for n, blk in zip(X.structure.orders, X.blocks):
        iu, ju, scale = _triu_cache(n)
        parts.append(blk[iu, ju] * scale)
    return np.concatenate(parts)


def smat(coords: np.ndarray, structure: BlockStructure) -> SymBlockMatrix:
    """Inverse of :func:`svec`; off-diagonal entries are divided by sqrt(2)."""
    coords = np.asarray(coords, dtype=float)
    if coords.shape != (structure.dim,):
        raise StructureMismatchError(
            f"coordinate length {coords.shape} != ({structure.dim},)")
    blocks = []
    offs = structure.svec_offsets
    for k, n in enumerate(structure.orders):
        iu, ju, scale = _triu_cache(n)
        vals = coords[offs[k]:offs[k + 1]] / scale
        blk = np.zeros((n, n))
        blk[iu, ju] = vals
        blk[ju, iu] = vals
        blocks.append(blk)
    return SymBlockMatrix(structure, blocks, symmetrize=False)


# ---------------------------------------------------------------------------
# inner product and Jordan product
# ---------------------------------------------------------------------------

def inner(X: SymBlockMatrix, Y: SymBlockMatrix) -> float:
    """Trace inner product sum_k trace(X_k Y_k)."""
    _check_same_structure(X, Y)
    return float(sum(np.sum(a * b) for a, b in zip(X.blocks, Y.blocks)))


def jordan_product(X: SymBlockMatrix, Y: SymBlockMatrix) -> SymBlockMatrix:
    """The symmetrized product (X, Y) -> (XY + YX) / 2."""
    _check_same_structure(X, Y)
    return SymBlockMatrix(
        X.structure,
        [0.5 * (a @ b + b @ a) for a, b in zip(X.blocks, Y.blocks)],
        symmetrize=False,
    )


# ---------------------------------------------------------------------------
# Orthonormal bases of subspaces
# ---------------------------------------------------------------------------

def extend_orthonormal(Q: np.ndarray, candidates: np.ndarray, drop_tol: float
                       ) -> np.ndarray:
    """Extend orthonormal rows Q by MGS over candidate rows.

    A candidate is dropped when its residual norm is <= drop_tol (an absolute
    threshold; callers scale it).  One batched re-orthogonalization pass keeps
    the result orthonormal to ~1e-14 without per-vector loops.
    """
    if candidates.size == 0:
        return Q
    V = np.array(candidates, dtype=float, copy=True)
    if Q.shape[0]:
        V -= (V @ Q.T) @ Q
        V -= (V @ Q.T) @ Q
    rows = [Q] if Q.shape[0] else []
    new_rows = []
    for v in V:
        if new_rows:
            W = np.asarray(new_rows)
            v = v - (W.T @ (W @ v))
            v = v - (W.T @ (W @ v))
        nrm = np.linalg.norm(v)
        if nrm > drop_tol:
            new_rows.append(v / nrm)
    if new_rows:
        rows.append(np.asarray(new_rows))
    if not rows:
        return Q
    return np.vstack(rows)


class SubspaceBasis:
    """An orthonormal basis of a subspace of S^{n_1} x ... x S^{n_r}.

    Rows of ``Q`` are svec coordinates of the basis elements.  ``Q`` may be a
    dense ndarray or a scipy sparse matrix (coordinate/partition bases and the
    orthogonal-constraint fast path stay sparse).
    """

    def __init__(self, structure: BlockStructure, Q, tol: float = DEFAULT_TOL):
        if sp.issparse(Q):
            Q = Q.tocsr()
        else:
            Q = np.atleast_2d(np.asarray(Q, dtype=float))
            if Q.size == 0:
                Q = np.zeros((0, structure.dim))
        if Q.shape[1] != structure.dim:
            raise StructureMismatchError(
                f"basis width {Q.shape[1]} != ambient dim {structure.dim}")
        self.structure = structure
        self.Q = Q
        self.tol = tol
        self._matrices: list[SymBlockMatrix] | None = None

    @staticmethod
    def empty(structure: BlockStructure, tol: float = DEFAULT_TOL) -> "SubspaceBasis":
        return SubspaceBasis(structure, np.zeros((0, structure.dim)), tol)

    @property
    def dim(self) -> int:
        return self.Q.shape[0]

    @property
    def matrices(self) -> list[SymBlockMatrix]:
        if self._matrices is None:
            dense = self.Q.toarray() if sp.issparse(self.Q) else self.Q
            self._matrices = [smat(row, self.structure) for row in dense]
        return self._matrices

    def coords(self, X: SymBlockMatrix) -> np.ndarray:
        return self.Q @ svec(X)

    def from_coords(self, c: np.ndarray) -> SymBlockMatrix:
        return smat(self.Q.T @ np.asarray(c, dtype=float), self.structure)

    def project_svec(self, v: np.ndarray) -> np.ndarray:
        return self.Q.T @ (self.Q @ v)

    def project(self, X: SymBlockMatrix) -> SymBlockMatrix:
        return smat(self.project_svec(svec(X)), self.structure)

    def residual(self, X: SymBlockMatrix) -> float:
        v = svec(X)
        return float(np.linalg.norm(v - self.project_svec(v)))

    def contains(self, X: SymBlockMatrix, tol: float | None = None) -> bool:
        tol = self.tol if tol is None else tol
        return self.residual(X) <= tol * max(1.0, X.norm())

    def contains_subspace(self, other: "SubspaceBasis", tol: float = 1e-8) -> bool:
        """True if span(other) is contained in span(self), by projection residuals."""
        if other.dim == 0:
            return True
        OQ = other.Q.toarray() if sp.issparse(other.Q) else other.Q
        R = OQ - (self.Q.T @ (self.Q @ OQ.T)).T
        return float(np.max(np.linalg.norm(R, axis=1))) <= tol

    def gram(self) -> np.ndarray:
        Q = self.Q.toarray() if sp.issparse(self.Q) else self.Q
        return Q @ Q.T

    def __repr__(self):
        return f"SubspaceBasis(dim={self.dim}, ambient={self.structure.dim})"


def orthonormalize(vectors: Iterable[SymBlockMatrix], tol: float = DEFAULT_TOL,
                   structure: BlockStructure | None = None) -> SubspaceBasis:
    """Modified Gram-Schmidt with re-orthogonalization in svec coordinates.

    Vectors whose residual norm is <= tol * (largest input norm) are dropped.
    An empty input yields an empty basis.
    """
    mats = list(vectors)
    if not mats:
        if structure is None:
            raise ValueError("structure required for an empty input")
        return SubspaceBasis.empty(structure, tol)
    structure = mats[0].structure
    V = np.asarray([svec(m) for m in mats])
    ref = float(np.max(np.linalg.norm(V, axis=1)))
    if ref == 0.0:
        return SubspaceBasis.empty(structure, tol)
    Q = extend_orthonormal(np.zeros((0, structure.dim)), V, drop_tol=tol * ref)
    return SubspaceBasis(structure, Q, tol)


def project_onto_span(basis: SubspaceBasis, X: SymBlockMatrix) -> SymBlockMatrix:
    """Orthogonal projection sum_B <B, X> B onto the span of the basis."""
    if basis.structure != X.structure:
        raise StructureMismatchError("basis and matrix structures differ")
    return basis.project(X)
