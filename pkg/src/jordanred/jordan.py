"""Minimal-ideal decomposition of admissible subspaces.

An admissible subspace is a Jordan subalgebra of the block symmetric space, so
it splits into pairwise-orthogonal minimal ideals.  The split is found by
sampling a generic element of the center and clustering its eigenvalues; each
ideal is classified by (dim, rank) and, for ideals of real symmetric type, an
explicit isometric isomorphism onto S^r is assembled from a Jordan frame and
its Peirce spaces.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .symspace import (
    DEFAULT_TOL,
    BlockStructure,
    SubspaceBasis,
    SymBlockMatrix,
    jordan_product,
    orthonormalize,
    smat,
    svec,
)

_GAP = 1e-6  # relative eigenvalue gap separating clusters


class DecompositionError(RuntimeError):
    """Sampling failed to produce an unambiguous decomposition."""


class IsoClass(enum.Enum):
    REAL_SYM = "real_symmetric"
    COMPLEX_HERM = "complex_hermitian"
    QUATERNION_HERM = "quaternion_hermitian"
    SPIN = "spin_factor"
    UNCLASSIFIED = "unclassified"


@dataclass
class Ideal:
    basis: SubspaceBasis
    unit: SymBlockMatrix
    dim: int
    rank: int
    iso_class: IsoClass = IsoClass.UNCLASSIFIED
    frame: list[SymBlockMatrix] | None = None


@dataclass
class IdealDecomposition:
    ideals: list[Ideal]
    subspace: SubspaceBasis
    phi: "JordanIsomorphism | None" = None

    @property
    def rank_tuple(self) -> "RankTuple":
        return RankTuple([ideal.rank for ideal in self.ideals])

    @property
    def all_real(self) -> bool:
        return all(i.iso_class is IsoClass.REAL_SYM for i in self.ideals)


class RankTuple:
    """Multiset of ideal ranks, reported sorted descending."""

    def __init__(self, ranks):
        self.ranks = tuple(sorted((int(r) for r in ranks), reverse=True))

    def __eq__(self, other):
        other = other.ranks if isinstance(other, RankTuple) else tuple(
            sorted((int(r) for r in other), reverse=True))
        return self.ranks == other

    def __iter__(self):
        return iter(self.ranks)

    def __len__(self):
        return len(self.ranks)

    def __repr__(self):
        return f"RankTuple{self.ranks}"


def weakly_majorizes(x, y) -> bool:
    """Descending partial sums of x dominate those of y at every length."""
    xs = sorted((int(v) for v in x), reverse=True)
    ys = sorted((int(v) for v in y), reverse=True)
    for l in range(1, max(len(xs), len(ys)) + 1):
        if sum(xs[: min(l, len(xs))]) < sum(ys[: min(l, len(ys))]):
            return False
    return True


# ---------------------------------------------------------------------------
# Multiplication operators, unit, center
# ---------------------------------------------------------------------------

def multiplication_operator(S: SubspaceBasis, X: SymBlockMatrix) -> np.ndarray:
    """Matrix of v -> X∘v in the orthonormal basis of S."""
    cols = [S.coords(jordan_product(X, B)) for B in S.matrices]
    return np.asarray(cols).T


def _mult_operator_table(S: SubspaceBasis) -> np.ndarray:
    """L[i][:, j] = coordinates of B_i ∘ B_j (symmetric in i, j)."""
    mats = S.matrices
    d = len(mats)
    L = np.zeros((d, d, d))
    for i in range(d):
        for j in range(i, d):
            c = S.coords(jordan_product(mats[i], mats[j]))
            L[i][:, j] = c
            L[j][:, i] = c
    return L


def unit_element(S: SubspaceBasis, seed: int = 0, tol: float = 1e-8
                 ) -> SymBlockMatrix:
    """The unit of S, recovered from the eigenprojections of a max-rank sample.

    A generic combination Z of the basis has maximal rank within S; the sum of
    its nonzero-eigenvalue projections acts as the matrix unit on S and is
    cleaned by projecting back onto S.
    """
    if S.dim == 0:
        raise ValueError("the zero subspace has no unit")
    rng = np.random.default_rng(seed)
    Z = S.from_coords(rng.standard_normal(S.dim))
    scale = max(Z.norm(), 1e-300)
    blocks = []
    for blk in Z.blocks:
        lam, U = np.linalg.eigh(blk)
        keep = np.abs(lam) > tol * scale
        blocks.append(U[:, keep] @ U[:, keep].T)
    E0 = SymBlockMatrix(Z.structure, blocks, symmetrize=False)
    E = S.project(E0)
    resid = max(
        (jordan_product(E, B) - B).norm() for B in S.matrices
    )
    if resid > 100 * tol * max(1.0, E.norm()):
        raise DecompositionError(
            f"subspace does not contain a unit (residual {resid:.2e}); "
            "is it closed under squaring?")
    return E


def _unit_coords(S: SubspaceBasis, L: np.ndarray, tol: float) -> np.ndarray:
    """Solve sum_i u_i L_i = Id in least squares; u gives the unit of S."""
    d = L.shape[0]
    Amat = L.transpose(1, 2, 0).reshape(d * d, d)
    rhs = np.eye(d).ravel()
    u, *_ = np.linalg.lstsq(Amat, rhs, rcond=None)
    resid = np.linalg.norm(Amat @ u - rhs)
    if resid > 100 * tol * d:
        raise DecompositionError(
            f"subspace is not unital (identity residual {resid:.2e})")
    return u


def _center_basis(L: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """Null space of the stacked associator system over basis pairs.

    Accumulates the Gram matrix of the operators M_ij : c -> B_i∘(B_j∘c) -
    (B_i∘B_j)∘c; its near-null eigenvectors span the center.
    """
    d = L.shape[0]
    G = np.zeros((d, d))
    for i in range(d):
        Mi = L[i] @ L - np.einsum("kj,kab->jab", L[i], L)
        G += np.einsum("jab,jac->bc", Mi, Mi)
    lam, V = np.linalg.eigh(G)
    lam_max = float(lam[-1]) if lam.size else 0.0
    # Gram eigenvalues are squared singular values; the numerical noise floor
    # of the accumulation sits near d*eps*lam_max, far below genuine
    # non-central directions (Theta(lam_max)).
    thr = max(tol ** 2, 1e3 * d * np.finfo(float).eps) * max(lam_max, 1.0)
    null = V[:, lam <= thr]
    if null.shape[1] == 0:
        raise DecompositionError("empty center; the unit should be central")
    return null


# ---------------------------------------------------------------------------
# Ideal decomposition
# ---------------------------------------------------------------------------

def _cluster(values: np.ndarray, gap: float) -> list[np.ndarray]:
    """Indices of values grouped by sorted-gap clustering."""
    order = np.argsort(values)
    sv = values[order]
    scale = max(1.0, float(np.max(np.abs(sv)))) if sv.size else 1.0
    groups, current = [], [order[0]]
    for prev, idx in zip(sv[:-1], order[1:]):
        if values[idx] - prev > gap * scale:
            groups.append(np.asarray(current))
            current = []
        current.append(idx)
    groups.append(np.asarray(current))
    return groups


def _check_square_closed(S: SubspaceBasis, seed: int, tol: float):
    rng = np.random.default_rng(seed)
    for _ in range(3):
        X = S.from_coords(rng.standard_normal(S.dim))
        sq = X.square()
        if S.residual(sq) > 1e-7 * max(1.0, sq.norm()):
            raise ValueError("subspace is not closed under squaring; "
                             "decomposition requires a Jordan subalgebra")


def decompose_ideals(S: SubspaceBasis, seed: int = 0,
                     tol: float = DEFAULT_TOL) -> IdealDecomposition:
    """Split a Jordan subalgebra into minimal ideals.

    A generic central element is sampled, shifted by three units so kernel
    eigenvalues separate cleanly, and its eigenvalue clusters define the ideal
    projections P_i; the ideals are the orthonormalized spans {P_i S P_i}.
    Eigenvalue-cluster ambiguity triggers a resample (up to 5 attempts).
    """
    if S.dim == 0:
        raise ValueError("cannot decompose the zero subspace")
    _check_square_closed(S, seed, tol)
    L = _mult_operator_table(S)
    u = _unit_coords(S, L, tol)
    W = _center_basis(L)

    last_err = None
    for attempt in range(5):
        rng = np.random.default_rng(np.random.SeedSequence([seed, attempt, 17]))
        z = W @ rng.standard_normal(W.shape[1])
        z /= max(np.linalg.norm(z), 1e-300)
        zb = z + 3.0 * u
        Zb = S.from_coords(zb)

        vals, vecs, blocks_of = [], [], []
        for k, blk in enumerate(Zb.blocks):
            lam, U = np.linalg.eigh(blk)
            vals.append(lam)
            vecs.append(U)
            blocks_of.append(np.full(lam.shape, k))
        lam_all = np.concatenate(vals)
        blocks_all = np.concatenate(blocks_of)
        col_all = np.concatenate([np.arange(v.size) for v in vals])

        keep = lam_all > 1.0  # ideal eigenvalues sit in [2, 4], kernel at 0
        if not np.any(keep):
            last_err = DecompositionError("central sample vanished")
            continue
        groups = _cluster(lam_all[keep], _GAP)
        kept_idx = np.flatnonzero(keep)

        # ambiguity guard: inter-cluster gaps must clear 10*tol*scale
        centers = sorted(float(np.mean(lam_all[kept_idx[g]])) for g in groups)
        scale = max(abs(c) for c in centers)
        if any(b - a < 10 * tol * scale for a, b in zip(centers, centers[1:])):
            last_err = DecompositionError("ambiguous eigenvalue clusters")
            continue

        ideals = []
        total = 0
        ok = True
        for g in groups:
            idx = kept_idx[g]
            blocks = [np.zeros((n, n)) for n in S.structure.orders]
            for t in idx:
                k = int(blocks_all[t])
                v = vecs[k][:, int(col_all[t])]
                blocks[k] += np.outer(v, v)
            P = SymBlockMatrix(S.structure, blocks, symmetrize=False)
            compressed = []
            for B in S.matrices:
                compressed.append(SymBlockMatrix(
                    S.structure,
                    [p @ b @ p for p, b in zip(P.blocks, B.blocks)],
                    symmetrize=False))
            basis = orthonormalize(compressed, tol=1e-8, structure=S.structure)
            if basis.dim == 0:
                ok = False
                break
            unit = basis.project(P)
            ideals.append(Ideal(basis=basis, unit=unit, dim=basis.dim, rank=0))
            total += basis.dim
        if not ok or total != S.dim:
            last_err = DecompositionError(
                f"ideal dims sum to {total} != {S.dim}")
            continue

        for ideal in ideals:
            ideal.rank = ideal_rank(ideal, seed=seed, tol=tol)
            ideal.iso_class = classify_ideal(ideal)
        ideals.sort(key=_ideal_sort_key)
        return IdealDecomposition(ideals=ideals, subspace=S)
    raise last_err or DecompositionError("decomposition failed")


def _ideal_sort_key(ideal: Ideal):
    sv = svec(ideal.unit)
    support = np.flatnonzero(np.abs(sv) > 1e-8)
    first = int(support[0]) if support.size else 0
    return (-ideal.dim, -int(round(ideal.unit.trace())), first)


# ---------------------------------------------------------------------------
# Rank and classification
# ---------------------------------------------------------------------------

def _range_bases(unit: SymBlockMatrix) -> list[np.ndarray]:
    out = []
    for blk in unit.blocks:
        lam, U = np.linalg.eigh(blk)
        out.append(U[:, lam > 0.5])
    return out


def _restricted_eigvals(X: SymBlockMatrix, ranges: list[np.ndarray]) -> np.ndarray:
    vals = []
    for blk, R in zip(X.blocks, ranges):
        if R.shape[1]:
            vals.append(np.linalg.eigvalsh(R.T @ blk @ R))
    return np.concatenate(vals) if vals else np.zeros(0)


def ideal_rank(ideal: Ideal, seed: int = 0, tol: float = DEFAULT_TOL) -> int:
    """Number of distinct eigenvalues of a generic element, cross-checked by degree.

    The degree estimate counts the largest m with {e, x, x^2, ..., x^m} linearly
    independent; both estimates must agree (3 reseeds, then an error).
    """
    ranges = _range_bases(ideal.unit)
    for attempt in range(3):
        rng = np.random.default_rng(np.random.SeedSequence([seed, attempt, 29]))
        x = ideal.basis.from_coords(rng.standard_normal(ideal.dim))
        nrm = x.norm()
        if nrm == 0.0:
            continue
        x = x * (1.0 / nrm)
        lam = _restricted_eigvals(x, ranges)
        if lam.size == 0:
            continue
        n_distinct = len(_cluster(lam, _GAP))

        rows = [svec(ideal.unit * (1.0 / max(ideal.unit.norm(), 1e-300)))]
        power = ideal.unit
        for _ in range(n_distinct + 2):
            power = SymBlockMatrix(
                x.structure,
                [p @ b for p, b in zip(power.blocks, x.blocks)],
                symmetrize=False)
            nrmp = power.norm()
            if nrmp == 0.0:
                break
            rows.append(svec(power * (1.0 / nrmp)))
        sing = np.linalg.svd(np.asarray(rows), compute_uv=False)
        degree_rank = int(np.sum(sing > 1e-9 * sing[0]))
        if degree_rank == n_distinct:
            return n_distinct
    raise DecompositionError(
        "eigenvalue count and degree estimate disagree for ideal rank")


def classify_ideal(ideal: Ideal) -> IsoClass:
    """Match (dim, rank) against the simple formally-real algebra families."""
    d, r = ideal.dim, ideal.rank
    if r < 1 or d < r:
        return IsoClass.UNCLASSIFIED
    if r == 1:
        return IsoClass.REAL_SYM
    if d == r * (r + 1) // 2:
        return IsoClass.REAL_SYM
    if d == r * r:
        return IsoClass.COMPLEX_HERM
    if d == r * (2 * r - 1):
        return IsoClass.QUATERNION_HERM
    if r == 2 and d >= 3:
        return IsoClass.SPIN
    return IsoClass.UNCLASSIFIED


# ---------------------------------------------------------------------------
# Explicit isomorphisms for real symmetric ideals
# ---------------------------------------------------------------------------

class ClassificationInconsistencyError(RuntimeError):
    pass


class JordanIsomorphism:
    """Linear isometry from a product of S^{r_i} onto the decomposed subspace.

    Columns of ``matrix`` are svec images of the reduced coordinate basis.  The
    per-ideal scale (the Frobenius norm of a primitive frame idempotent, >1 for
    ideals made of tied block copies) is stored so the scale-corrected map
    s_k * Phi_k is an exact Jordan homomorphism.
    """

    def __init__(self, ambient: BlockStructure, reduced: BlockStructure,
                 matrix: np.ndarray, scales: tuple[float, ...]):
        self.ambient = ambient
        self.reduced = reduced
        self.matrix = matrix
        self.scales = scales

    def apply(self, Xhat: SymBlockMatrix) -> SymBlockMatrix:
        return smat(self.matrix @ svec(Xhat), self.ambient)

    def adjoint(self, X: SymBlockMatrix) -> SymBlockMatrix:
        return smat(self.matrix.T @ svec(X), self.reduced)

    def subspace(self, tol: float = DEFAULT_TOL) -> SubspaceBasis:
        return SubspaceBasis(self.ambient, self.matrix.T.copy(), tol)

    def isometry_residual(self) -> float:
        G = self.matrix.T @ self.matrix
        return float(np.max(np.abs(G - np.eye(G.shape[0]))))

    def _scaled_matrix(self) -> np.ndarray:
        col_scales = []
        for r, s in zip(self.reduced.orders, self.scales):
            col_scales.extend([s] * (r * (r + 1) // 2))
        return self.matrix * np.asarray(col_scales)

    def homomorphism_residual(self, samples: int = 8, seed: int = 0) -> float:
        """Max residual of Psi(u∘v) - Psi(u)∘Psi(v) over random reduced pairs."""
        rng = np.random.default_rng(seed)
        M = self._scaled_matrix()
        worst = 0.0
        for _ in range(samples):
            u = smat(rng.standard_normal(self.reduced.dim), self.reduced)
            v = smat(rng.standard_normal(self.reduced.dim), self.reduced)
            lhs = smat(M @ svec(jordan_product(u, v)), self.ambient)
            pu = smat(M @ svec(u), self.ambient)
            pv = smat(M @ svec(v), self.ambient)
            rhs = jordan_product(pu, pv)
            worst = max(worst, (lhs - rhs).norm() /
                        max(1.0, u.norm() * v.norm()))
        return worst


def _peirce_generator(ideal: Ideal, Lops: list[np.ndarray], j: int, k: int,
                      tol: float) -> np.ndarray:
    D = ideal.dim
    Mj = Lops[j] - 0.5 * np.eye(D)
    Mk = Lops[k] - 0.5 * np.eye(D)
    G = Mj.T @ Mj + Mk.T @ Mk
    lam, V = np.linalg.eigh(G)
    thr = max(lam[-1], 1.0) * 1e-12
    null_dim = int(np.sum(lam <= max(thr, (100 * tol) ** 2)))
    if null_dim != 1:
        raise ClassificationInconsistencyError(
            f"Peirce space V_{{{j + 1}{k + 1}}} has dimension {null_dim}, "
            "expected 1 for a real symmetric ideal")
    v = V[:, 0]
    pivot = int(np.argmax(np.abs(v)))
    if v[pivot] < 0:
        v = -v
    return v / np.linalg.norm(v)


def construct_isomorphism(decomp: IdealDecomposition, seed: int = 0,
                          tol: float = DEFAULT_TOL) -> JordanIsomorphism:
    """Assemble the explicit isometry for the real symmetric ideals.

    Ideals of other types are recorded in ``skipped`` on the result and the
    caller is expected to fall back to the restriction formulation.
    """
    ambient = decomp.subspace.structure
    cols: list[np.ndarray] = []
    orders: list[int] = []
    scales: list[float] = []
    skipped: list[int] = []

    for idx, ideal in enumerate(decomp.ideals):
        if ideal.iso_class is not IsoClass.REAL_SYM:
            skipped.append(idx)
            continue
        r = ideal.rank
        frame = _jordan_frame(ideal, seed=seed, tol=tol)
        s = frame[0].norm()
        if any(abs(e.norm() - s) > 1e-6 * max(1.0, s) for e in frame):
            raise ClassificationInconsistencyError(
                "frame idempotents of a simple ideal have unequal norms")
        gens: dict[tuple[int, int], SymBlockMatrix] = {}
        if r > 1:
            Lops = [multiplication_operator(ideal.basis, e) for e in frame]
            for k in range(1, r):
                v = _peirce_generator(ideal, Lops, 0, k, tol)
                gens[(0, k)] = ideal.basis.from_coords(v)
            for j in range(1, r):
                for k in range(j + 1, r):
                    w = jordan_product(gens[(0, j)], gens[(0, k)]) * 2.0
                    nrm = w.norm()
                    if nrm <= tol:
                        raise ClassificationInconsistencyError(
                            "degenerate Peirce chaining product")
                    gens[(j, k)] = w * (1.0 / nrm)
        for j in range(r):
            cols.append(svec(frame[j]) / s)
            for k in range(j + 1, r):
                cols.append(svec(gens[(j, k)]))
        orders.append(r)
        scales.append(float(s))
        ideal.frame = frame

    reduced = BlockStructure(tuple(orders)) if orders else BlockStructure((1,))
    matrix = np.asarray(cols).T if cols else np.zeros((ambient.dim, 0))
    phi = JordanIsomorphism(ambient, reduced, matrix, tuple(scales))
    phi.skipped = tuple(skipped)
    decomp.phi = phi
    return phi


def _jordan_frame(ideal: Ideal, seed: int, tol: float) -> list[SymBlockMatrix]:
    """Primitive idempotents e_1..e_r from a regular element's eigenprojections."""
    ranges = _range_bases(ideal.unit)
    r = ideal.rank
    if r == 1:
        return [ideal.unit]
    for attempt in range(5):
        rng = np.random.default_rng(np.random.SeedSequence([seed, attempt, 41]))
        x = ideal.basis.from_coords(rng.standard_normal(ideal.dim))
        nrm = x.norm()
        if nrm == 0.0:
            continue
        x = x * (1.0 / nrm)
        lam_blocks = []
        offs = [0]
        lam_parts = []
        for blk, R in zip(x.blocks, ranges):
            if R.shape[1]:
                lmb, U = np.linalg.eigh(R.T @ blk @ R)
            else:
                lmb, U = np.zeros(0), np.zeros((0, 0))
            lam_blocks.append((lmb, U))
            lam_parts.append(lmb)
            offs.append(offs[-1] + lmb.size)
        lam = np.concatenate(lam_parts)
        if lam.size == 0:
            continue
        groups = _cluster(lam, _GAP)
        if len(groups) != r:
            continue
        frame = []
        for g in sorted(groups, key=lambda g: float(np.mean(lam[g]))):
            gset = set(int(t) for t in g)
            blocks = []
            for k, (R, (lmb, U)) in enumerate(zip(ranges, lam_blocks)):
                n = ideal.unit.blocks[k].shape[0]
                P = np.zeros((n, n))
                for local in range(lmb.size):
                    if offs[k] + local in gset:
                        w = R @ U[:, local]
                        P += np.outer(w, w)
                blocks.append(P)
            e = ideal.basis.project(SymBlockMatrix(
                ideal.unit.structure, blocks, symmetrize=False))
            frame.append(e)
        resid = max((jordan_product(e, e) - e).norm() for e in frame)
        if resid <= 1e-6 * max(1.0, max(e.norm() for e in frame)):
            return frame
    raise DecompositionError("failed to extract a Jordan frame")


# ---------------------------------------------------------------------------
# Cone membership via multiplication operators
# ---------------------------------------------------------------------------

def cone_membership(S: SubspaceBasis, X: SymBlockMatrix,
                    tol: float = 1e-8) -> bool:
    """X in S+^n ∩ S, decided by the multiplication operator L(X) on S."""
    if S.residual(X) > tol * max(1.0, X.norm()):
        raise ValueError("X does not lie in the subspace")
    L = multiplication_operator(S, X)
    lam = np.linalg.eigvalsh(0.5 * (L + L.T))
    return bool(lam.min() >= -tol * max(1.0, X.norm()))
