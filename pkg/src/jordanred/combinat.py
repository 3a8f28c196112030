"""Partition, coordinate and 0/1-basis subspace refinement.

All three variants iterate on sampled point evaluations of the polynomial
matrices f_L(t;B) = sum t_B P_L(B) and f_{X^2}(t;B) = (sum t_B B)^2.  With 0/1
bases and integer coefficients in [1, 2^20] the f_{X^2} entries are exact
integers below 2^53, so entry clustering for the combinatorial state is exact
equality; f_L evaluations are floating point and use tolerance clustering.
Every refinement step uses two independently seeded samples (partitions are
met, relations unioned) to push false coincidences below ~1e-12.

Index convention: entries are (block, i, j) with 0-based indices inside each
block; cross-block positions are structurally zero and never indexed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np
import scipy.sparse as sp

from .subspace import AffineData
from .symspace import (
    DEFAULT_TOL,
    BlockStructure,
    SubspaceBasis,
    SymBlockMatrix,
    smat,
    svec,
)


class EntryIndex(NamedTuple):
    block: int
    i: int
    j: int


SAMPLE_RANGE = 2 ** 20  # coefficients are uniform integers in [1, 2^20]


# ---------------------------------------------------------------------------
# flat entry indexing helpers
# ---------------------------------------------------------------------------

def _flatten(X: SymBlockMatrix) -> np.ndarray:
    return np.concatenate([blk.ravel() for blk in X.blocks])


def _unflatten(flat: np.ndarray, structure: BlockStructure) -> list[np.ndarray]:
    offs = structure.entry_offsets
    return [flat[offs[k]:offs[k + 1]].reshape(n, n)
            for k, n in enumerate(structure.orders)]


def _entry_of_flat(structure: BlockStructure, pos: int) -> EntryIndex:
    offs = structure.entry_offsets
    for k, n in enumerate(structure.orders):
        if pos < offs[k + 1]:
            local = pos - offs[k]
            return EntryIndex(k, local // n, local % n)
    raise IndexError(pos)


def _transpose_perm(structure: BlockStructure) -> np.ndarray:
    """Permutation mapping flat position of (b,i,j) to that of (b,j,i)."""
    parts = []
    for k, n in enumerate(structure.orders):
        idx = np.arange(n * n).reshape(n, n).T.ravel()
        parts.append(idx + structure.entry_offsets[k])
    return np.concatenate(parts)


def _canonical_labels(raw: np.ndarray) -> np.ndarray:
    """Renumber labels by first occurrence in scan order (deterministic)."""
    _, first, inv = np.unique(raw, return_index=True, return_inverse=True)
    order = np.argsort(first, kind="stable")
    remap = np.empty_like(order)
    remap[order] = np.arange(order.size)
    return remap[inv]


# ---------------------------------------------------------------------------
# partitions of [n]x[n] (blockwise)
# ---------------------------------------------------------------------------

class PartitionNxN:
    """Partition of the within-block entry positions, symmetric classes."""

    def __init__(self, structure: BlockStructure, labels: np.ndarray):
        labels = np.asarray(labels, dtype=np.int64)
        if labels.shape != (structure.num_entries,):
            raise ValueError("label array does not match the entry grid")
        self.structure = structure
        self.labels = _canonical_labels(labels)

    # -- constructors -----------------------------------------------------
    @staticmethod
    def one_class(structure: BlockStructure) -> "PartitionNxN":
        return PartitionNxN(structure, np.zeros(structure.num_entries))

    @staticmethod
    def discrete(structure: BlockStructure) -> "PartitionNxN":
        """Finest partition with symmetric classes: {(i,j),(j,i)} pairs."""
        raw = np.arange(structure.num_entries)
        return PartitionNxN(structure,
                            np.minimum(raw, raw[_transpose_perm(structure)]))

    @staticmethod
    def from_matrix(T: SymBlockMatrix, tol: float = 0.0) -> "PartitionNxN":
        return PartitionNxN(T.structure, _value_classes(_flatten(T), tol))

    # -- basic queries ------------------------------------------------------
    @property
    def num_classes(self) -> int:
        return int(self.labels.max()) + 1 if self.labels.size else 0

    def class_of(self, entry: EntryIndex) -> int:
        k, i, j = entry
        n = self.structure.orders[k]
        return int(self.labels[self.structure.entry_offsets[k] + i * n + j])

    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self.labels,
                                   self.labels[_transpose_perm(self.structure)]))

    # -- lattice operations --------------------------------------------------
    def meet(self, other: "PartitionNxN") -> "PartitionNxN":
        """Coarsest partition refining both (pairwise label intersection)."""
        combined = self.labels * (int(other.labels.max()) + 1) + other.labels
        return PartitionNxN(self.structure, _canonical_labels(combined))

    def refine_by_matrix(self, T: SymBlockMatrix, tol: float = 0.0
                         ) -> "PartitionNxN":
        return self.meet(PartitionNxN.from_matrix(T, tol))

    # -- characteristic matrices ---------------------------------------------
    def characteristic_matrices(self) -> list[SymBlockMatrix]:
        out = []
        for c in range(self.num_classes):
            flat = (self.labels == c).astype(float)
            out.append(SymBlockMatrix(self.structure,
                                      _unflatten(flat, self.structure),
                                      symmetrize=False))
        return out

    def subspace(self, tol: float = DEFAULT_TOL) -> SubspaceBasis:
        return _zeroone_span(self.structure,
                             [self.labels == c for c in range(self.num_classes)],
                             tol)

    def __eq__(self, other):
        return (isinstance(other, PartitionNxN)
                and np.array_equal(self.labels, other.labels))

    def __repr__(self):
        return f"PartitionNxN(classes={self.num_classes})"


def _value_classes(values: np.ndarray, tol: float) -> np.ndarray:
    """Cluster scalar values; gaps <= tol*max(1,|v|) merge adjacent values."""
    order = np.argsort(values, kind="stable")
    sv = values[order]
    labels_sorted = np.zeros(values.size, dtype=np.int64)
    cls = 0
    for t in range(1, sv.size):
        gap = sv[t] - sv[t - 1]
        if gap > tol * max(1.0, abs(sv[t - 1])):
            cls += 1
        labels_sorted[t] = cls
    labels = np.empty_like(labels_sorted)
    labels[order] = labels_sorted
    return labels


def _zeroone_span(structure: BlockStructure, masks: Iterable[np.ndarray],
                  tol: float) -> SubspaceBasis:
    """Orthonormal span of disjoint-support 0/1 matrices, kept sparse in svec."""
    svec_rows = []
    offs = structure.svec_offsets
    for mask in masks:
        blocks = _unflatten(np.asarray(mask, dtype=float), structure)
        data, cols = [], []
        for k, n in enumerate(structure.orders):
            iu, ju = np.triu_indices(n)
            vals = blocks[k][iu, ju]
            scale = np.where(iu == ju, 1.0, np.sqrt(2.0))
            nz = np.flatnonzero(vals)
            data.append(vals[nz] * scale[nz])
            cols.append(nz + offs[k])
        data = np.concatenate(data)
        cols = np.concatenate(cols)
        if data.size == 0:
            continue
        data = data / np.linalg.norm(data)
        svec_rows.append((data, cols))
    if not svec_rows:
        return SubspaceBasis.empty(structure, tol)
    indptr = np.cumsum([0] + [d.size for d, _ in svec_rows])
    data = np.concatenate([d for d, _ in svec_rows])
    indices = np.concatenate([c for _, c in svec_rows])
    Q = sp.csr_matrix((data, indices, indptr),
                      shape=(len(svec_rows), structure.dim))
    return SubspaceBasis(structure, Q, tol)


# ---------------------------------------------------------------------------
# symmetric relations (sparsity patterns)
# ---------------------------------------------------------------------------

class SymRelation:
    """A symmetric subset of the within-block entry positions."""

    def __init__(self, structure: BlockStructure, mask: np.ndarray):
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (structure.num_entries,):
            raise ValueError("mask does not match the entry grid")
        self.structure = structure
        self.mask = mask

    @staticmethod
    def empty(structure: BlockStructure) -> "SymRelation":
        return SymRelation(structure, np.zeros(structure.num_entries, dtype=bool))

    @staticmethod
    def from_support(T: SymBlockMatrix, tol: float = DEFAULT_TOL) -> "SymRelation":
        flat = _flatten(T)
        ref = T.max_abs()
        return SymRelation(T.structure, np.abs(flat) > tol * max(ref, 1e-300))

    @property
    def size(self) -> int:
        return int(self.mask.sum())

    def members(self) -> frozenset[EntryIndex]:
        return frozenset(_entry_of_flat(self.structure, int(p))
                         for p in np.flatnonzero(self.mask))

    def contains(self, entry: EntryIndex) -> bool:
        k, i, j = entry
        n = self.structure.orders[k]
        return bool(self.mask[self.structure.entry_offsets[k] + i * n + j])

    def union(self, other: "SymRelation") -> "SymRelation":
        return SymRelation(self.structure, self.mask | other.mask)

    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self.mask,
                                   self.mask[_transpose_perm(self.structure)]))

    def is_transitive(self) -> bool:
        for M in _unflatten(self.mask.astype(np.int64), self.structure):
            B = M > 0
            if np.any((B @ B) & ~B):
                return False
        return True

    def diagonal_classes(self) -> list[list[int]]:
        """Equivalence classes of {i : (i,i) in R} per block, concatenated.

        Indices are offset by the block start so classes of distinct blocks
        stay distinct; only meaningful once the relation is transitive.
        """
        classes = []
        row_off = 0
        for M in _unflatten(self.mask.astype(np.int64), self.structure):
            B = M > 0
            n = B.shape[0]
            seen = set()
            for i in range(n):
                if B[i, i] and i not in seen:
                    cls = [j for j in range(n) if B[i, j] and B[j, j]]
                    seen.update(cls)
                    classes.append([row_off + j for j in cls])
            row_off += n
        return classes

    def characteristic_matrices(self) -> list[SymBlockMatrix]:
        """The 0/1 basis {E_ii} ∪ {E_ij + E_ji} over the upper-triangle members."""
        out = []
        blocks_mask = _unflatten(self.mask, self.structure)
        for k, n in enumerate(self.structure.orders):
            M = blocks_mask[k]
            for i in range(n):
                for j in range(i, n):
                    if M[i, j]:
                        B = np.zeros((n, n))
                        B[i, j] = B[j, i] = 1.0
                        blocks = [np.zeros((m, m)) for m in self.structure.orders]
                        blocks[k] = B
                        out.append(SymBlockMatrix(self.structure, blocks,
                                                  symmetrize=False))
        return out

    def subspace(self, tol: float = DEFAULT_TOL) -> SubspaceBasis:
        """Span of {E_ij + E_ji : (i,j) in R}: axis-aligned in svec coordinates."""
        cols = []
        offs = self.structure.svec_offsets
        blocks_mask = _unflatten(self.mask, self.structure)
        for k, n in enumerate(self.structure.orders):
            M = blocks_mask[k]
            iu, ju = np.triu_indices(n)
            sel = np.flatnonzero(M[iu, ju])
            cols.append(sel + offs[k])
        cols = np.concatenate(cols)
        if cols.size == 0:
            return SubspaceBasis.empty(self.structure, tol)
        Q = sp.csr_matrix(
            (np.ones(cols.size), cols, np.arange(cols.size + 1)),
            shape=(cols.size, self.structure.dim))
        return SubspaceBasis(self.structure, Q, tol)

    def __eq__(self, other):
        return (isinstance(other, SymRelation)
                and np.array_equal(self.mask, other.mask))

    def __repr__(self):
        return f"SymRelation(size={self.size})"


class PartitionOfRelation:
    """A partition of the members of a symmetric relation (the 0/1 basis)."""

    def __init__(self, relation: SymRelation, labels: np.ndarray):
        labels = np.asarray(labels, dtype=np.int64)
        if labels.shape != relation.mask.shape:
            raise ValueError("label array does not match the entry grid")
        if np.any(labels[~relation.mask] != -1):
            raise ValueError("labels outside the relation must be -1")
        self.relation = relation
        members = labels[relation.mask]
        canon = _canonical_labels(members) if members.size else members
        full = np.full(labels.shape, -1, dtype=np.int64)
        full[relation.mask] = canon
        self.labels = full

    @staticmethod
    def from_matrix(T: SymBlockMatrix, relation: SymRelation,
                    tol: float = 0.0) -> "PartitionOfRelation":
        flat = _flatten(T)
        labels = np.full(flat.shape, -1, dtype=np.int64)
        members = np.flatnonzero(relation.mask)
        if members.size:
            labels[members] = _value_classes(flat[members], tol)
        return PartitionOfRelation(relation, labels)

    @property
    def structure(self) -> BlockStructure:
        return self.relation.structure

    @property
    def num_classes(self) -> int:
        inside = self.labels[self.relation.mask]
        return int(inside.max()) + 1 if inside.size else 0

    def class_of(self, entry: EntryIndex) -> int:
        k, i, j = entry
        n = self.structure.orders[k]
        return int(self.labels[self.structure.entry_offsets[k] + i * n + j])

    def meet_with_matrix(self, T: SymBlockMatrix, tol: float = 0.0
                         ) -> "PartitionOfRelation":
        other = PartitionOfRelation.from_matrix(T, self.relation, tol)
        members = self.relation.mask
        combined = np.full(self.labels.shape, -1, dtype=np.int64)
        width = int(other.labels[members].max()) + 1 if members.any() else 1
        combined[members] = self.labels[members] * width + other.labels[members]
        return PartitionOfRelation(self.relation, combined)

    def extend(self, relation: SymRelation) -> "PartitionOfRelation":
        """Grow to a larger relation; new positions form one added class."""
        if not np.all(relation.mask | ~self.relation.mask):
            raise ValueError("new relation must contain the old one")
        labels = self.labels.copy()
        fresh = relation.mask & ~self.relation.mask
        if fresh.any():
            labels[fresh] = self.labels.max() + 1
        return PartitionOfRelation(relation, labels)

    def characteristic_matrices(self) -> list[SymBlockMatrix]:
        out = []
        for c in range(self.num_classes):
            flat = (self.labels == c).astype(float)
            out.append(SymBlockMatrix(self.structure,
                                      _unflatten(flat, self.structure),
                                      symmetrize=False))
        return out

    def subspace(self, tol: float = DEFAULT_TOL) -> SubspaceBasis:
        return _zeroone_span(self.structure,
                             [self.labels == c for c in range(self.num_classes)],
                             tol)

    def __repr__(self):
        return (f"PartitionOfRelation(size={self.relation.size}, "
                f"classes={self.num_classes})")


# ---------------------------------------------------------------------------
# sampled polynomial-matrix evaluations
# ---------------------------------------------------------------------------

def combine(basis: list[SymBlockMatrix], coeffs: np.ndarray) -> SymBlockMatrix:
    structure = basis[0].structure
    out = [np.zeros((n, n)) for n in structure.orders]
    for c, B in zip(coeffs, basis):
        for k, blk in enumerate(B.blocks):
            out[k] += float(c) * blk
    return SymBlockMatrix(structure, out, symmetrize=False)


def f_square_at(basis: list[SymBlockMatrix], coeffs: np.ndarray) -> SymBlockMatrix:
    """(sum_B t_B B)^2 at an explicit coefficient vector."""
    return combine(basis, coeffs).square()


def f_L_at(basis: list[SymBlockMatrix], aff: AffineData,
           coeffs: np.ndarray) -> SymBlockMatrix:
    """sum_B t_B P_L(B): by linearity P_L acts once on the combination."""
    return aff.project_L(combine(basis, coeffs))


def _sample_coeffs(size: int, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.integers(1, SAMPLE_RANGE + 1, size=size).astype(float)


def sample_f_square(basis: list[SymBlockMatrix], seed) -> SymBlockMatrix:
    return f_square_at(basis, _sample_coeffs(len(basis), seed))


def sample_f_L(basis: list[SymBlockMatrix], aff: AffineData, seed) -> SymBlockMatrix:
    return f_L_at(basis, aff, _sample_coeffs(len(basis), seed))


def _subseed(seed: int, *key: int):
    return np.random.SeedSequence([int(seed), *key])


# ---------------------------------------------------------------------------
# entry partition / support of a single matrix
# ---------------------------------------------------------------------------

def entry_partition(T: SymBlockMatrix, tol: float = 0.0) -> PartitionNxN:
    """Partition of entry positions by (tolerance-clustered) values."""
    return PartitionNxN.from_matrix(T, tol)


def entry_support(T: SymBlockMatrix, tol: float = DEFAULT_TOL) -> SymRelation:
    """Relation of entries with |T_ij| above tol * max|T|."""
    return SymRelation.from_support(T, tol)


# ---------------------------------------------------------------------------
# the three optimal combinatorial subspaces
# ---------------------------------------------------------------------------

def optimal_partition_subspace(aff: AffineData, seed: int = 0,
                               tol: float = DEFAULT_TOL
                               ) -> tuple[PartitionNxN, SubspaceBasis]:
    """Coarsest admissible partition of the entry grid (S_part)."""
    P = PartitionNxN.from_matrix(aff.Y_Lperp, tol).meet(
        PartitionNxN.from_matrix(aff.C_L, tol))
    counter = 0
    while True:
        before = P.num_classes
        basis = P.characteristic_matrices()
        for rep in range(2):
            P = P.refine_by_matrix(
                sample_f_L(basis, aff, _subseed(seed, 1, counter, rep)), tol)
        basis = P.characteristic_matrices()
        for rep in range(2):
            P = P.refine_by_matrix(
                sample_f_square(basis, _subseed(seed, 2, counter, rep)), 0.0)
        counter += 1
        if P.num_classes == before:
            break
    return P, P.subspace(tol)


def optimal_coordinate_subspace(aff: AffineData, seed: int = 0,
                                tol: float = DEFAULT_TOL
                                ) -> tuple[SymRelation, SubspaceBasis]:
    """Smallest admissible sparsity pattern (S_coord)."""
    R = SymRelation.from_support(aff.Y_Lperp, tol).union(
        SymRelation.from_support(aff.C_L, tol))
    counter = 0
    while True:
        before = R.size
        basis = R.characteristic_matrices()
        if not basis:
            break
        for rep in range(2):
            R = R.union(SymRelation.from_support(
                sample_f_L(basis, aff, _subseed(seed, 3, counter, rep)), tol))
        basis = R.characteristic_matrices()
        for rep in range(2):
            R = R.union(SymRelation.from_support(
                sample_f_square(basis, _subseed(seed, 4, counter, rep)), tol))
        counter += 1
        if R.size == before:
            break
    return R, R.subspace(tol)


def optimal_zeroone_subspace(aff: AffineData, seed: int = 0,
                             tol: float = DEFAULT_TOL
                             ) -> tuple[PartitionOfRelation, SubspaceBasis]:
    """Smallest admissible subspace with a pairwise-orthogonal 0/1 basis (S_01)."""
    R = SymRelation.from_support(aff.Y_Lperp, tol).union(
        SymRelation.from_support(aff.C_L, tol))
    P = PartitionOfRelation.from_matrix(aff.Y_Lperp, R, tol)
    P = P.meet_with_matrix(aff.C_L, tol)
    counter = 0
    while True:
        before = (R.size, P.num_classes)
        for tag, use_square in ((5, False), (6, True)):
            basis = P.characteristic_matrices()
            samples = []
            for rep in range(2):
                s = _subseed(seed, tag, counter, rep)
                samples.append(sample_f_square(basis, s) if use_square
                               else sample_f_L(basis, aff, s))
            supp = SymRelation.from_support(samples[0], tol).union(
                SymRelation.from_support(samples[1], tol))
            R = R.union(supp)
            P = P.extend(R)
            for T in samples:
                P = P.meet_with_matrix(T, 0.0 if use_square else tol)
        counter += 1
        if (R.size, P.num_classes) == before:
            break
    return P, P.subspace(tol)


# ---------------------------------------------------------------------------
# verification utilities (matrix equitable partitions, Jordan configurations,
# invariant coordinate subspaces)
# ---------------------------------------------------------------------------

def is_matrix_equitable(P: PartitionNxN, aff: AffineData,
                        tol: float = 1e-8) -> bool:
    """True iff P_L(X) ∘ Y is a scalar multiple of Y for all X, Y in B_P."""
    if not P.is_symmetric():
        raise ValueError("characteristic matrices must be symmetric")
    basis = P.characteristic_matrices()
    images = [aff.project_L(X) for X in basis]
    scale = max(1.0, max(im.max_abs() for im in images))
    for T in images:
        flat = _flatten(T)
        for c in range(P.num_classes):
            vals = flat[P.labels == c]
            if vals.size and (vals.max() - vals.min()) > tol * scale:
                return False
    return True


def coarsest_jordan_configuration(P: PartitionNxN, seed: int = 0
                                  ) -> PartitionNxN:
    """Coarsest refinement of P whose 0/1 span is square-closed and unital."""
    if not P.is_symmetric():
        raise ValueError("characteristic matrices must be symmetric")
    I = SymBlockMatrix.identity(P.structure)
    Q = P.meet(PartitionNxN.from_matrix(I))
    counter = 0
    while True:
        before = Q.num_classes
        basis = Q.characteristic_matrices()
        for rep in range(2):
            Q = Q.refine_by_matrix(
                sample_f_square(basis, _subseed(seed, 7, counter, rep)), 0.0)
        counter += 1
        if Q.num_classes == before:
            return Q


def invariant_coordinate_components(aff: AffineData, tol: float = DEFAULT_TOL
                                    ) -> list[SymRelation]:
    """Connected components of the P_L coupling graph on {E_ij + E_ji}.

    Unions of the returned relations are exactly the coordinate subspaces
    invariant under P_L.
    """
    structure = aff.structure
    dim = structure.dim
    Q = aff.Lperp_basis.Q
    Qd = Q.toarray() if sp.issparse(Q) else Q
    M = np.eye(dim) - Qd.T @ Qd if Qd.shape[0] else np.eye(dim)
    from scipy.sparse.csgraph import connected_components
    adj = sp.csr_matrix(np.abs(M) > tol)
    ncomp, assign = connected_components(adj, directed=False)

    comps = []
    offs = structure.svec_offsets
    for c in range(ncomp):
        mask = np.zeros(structure.num_entries, dtype=bool)
        coords = np.flatnonzero(assign == c)
        for pos in coords:
            for k, n in enumerate(structure.orders):
                if pos < offs[k + 1]:
                    local = int(pos - offs[k])
                    iu, ju = np.triu_indices(n)
                    i, j = int(iu[local]), int(ju[local])
                    base = structure.entry_offsets[k]
                    mask[base + i * n + j] = True
                    mask[base + j * n + i] = True
                    break
        comps.append(SymRelation(structure, mask))
    comps.sort(key=lambda r: int(np.flatnonzero(r.mask)[0]))
    return comps
