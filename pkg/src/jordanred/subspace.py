"""Admissibility checks and the closure algorithm for the optimal admissible subspace.

A subspace S is admissible iff it contains the distinguished points Y_{L⊥} and
C_L, is invariant under the projection P_L onto the constraint-orthogonal
subspace L, and is closed under matrix squaring.  The closure driver grows
span{C_L, Y_{L⊥}} by alternating P_L images and symmetrized pairwise products
until the dimension stabilizes; the result is the unique minimum-dimension
admissible subspace.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .program import ConicProgram
from .symspace import (
    DEFAULT_TOL,
    BlockStructure,
    SubspaceBasis,
    SymBlockMatrix,
    extend_orthonormal,
    smat,
    svec,
)

log = logging.getLogger(__name__)


class InfeasibleAffineError(ValueError):
    """The equality constraints are inconsistent."""


class CapacityError(RuntimeError):
    """An intermediate basis outgrew the configured cap."""


# ---------------------------------------------------------------------------
# Affine data
# ---------------------------------------------------------------------------

@dataclass
class AffineData:
    """Orthonormal basis of L⊥ = span{A_i}, rhs b, and the points C_L, Y_{L⊥}."""

    structure: BlockStructure
    Lperp_basis: SubspaceBasis
    b: np.ndarray
    C: SymBlockMatrix
    C_L: SymBlockMatrix
    Y_Lperp: SymBlockMatrix

    def project_Lperp_svec(self, v: np.ndarray) -> np.ndarray:
        return self.Lperp_basis.project_svec(v)

    def project_L_svec(self, v: np.ndarray) -> np.ndarray:
        return v - self.Lperp_basis.project_svec(v)

    def project_L(self, X: SymBlockMatrix) -> SymBlockMatrix:
        return smat(self.project_L_svec(svec(X)), self.structure)

    def project_Lperp(self, X: SymBlockMatrix) -> SymBlockMatrix:
        return smat(self.project_Lperp_svec(svec(X)), self.structure)


def build_affine_data(program: ConicProgram, tol: float = DEFAULT_TOL) -> AffineData:
    """Orthonormalize span{A_i}, solve for the min-norm feasible point, split C.

    Pairwise-orthogonal constraint rows (theta SDPs) are detected from the Gram
    matrix and keep the L⊥ basis sparse; otherwise a pivoted dense QR is used.
    Least-squares residual above 1e-6 relative raises InfeasibleAffineError.
    """
    A = program.A
    b = program.b
    structure = program.structure
    m = program.m
    if m == 0:
        Q = SubspaceBasis.empty(structure, tol)
        Y = SymBlockMatrix.zeros(structure)
        return AffineData(structure, Q, b, program.C, program.C.copy(), Y)

    G = (A @ A.T).tocsr()
    offdiag = G - sp.diags(G.diagonal())
    offdiag_max = np.max(np.abs(offdiag.data)) if offdiag.nnz else 0.0
    diag = G.diagonal()
    scale = float(np.max(diag)) if diag.size else 0.0
    if scale == 0.0:
        if np.linalg.norm(b, ord=np.inf) > 1e-6 * max(1.0, float(np.linalg.norm(b))):
            raise InfeasibleAffineError("all-zero constraint matrix with nonzero rhs")
        Qb = SubspaceBasis.empty(structure, tol)
        Y = SymBlockMatrix.zeros(structure)
        return AffineData(structure, Qb, b, program.C,
                          program.C - Qb.project(program.C), Y)

    if offdiag_max <= 1e-14 * scale:
        # rows are pairwise orthogonal: normalize, solve diagonal normal equations
        keep = diag > tol * scale
        if np.any(~keep) and np.linalg.norm(b[~keep], ord=np.inf) > 1e-6:
            raise InfeasibleAffineError("zero constraint row with nonzero rhs")
        norms = np.sqrt(diag[keep])
        D = sp.diags(1.0 / norms)
        Qmat = (D @ A[np.flatnonzero(keep)]).tocsr()
        y = A.T @ np.where(keep, b / np.where(keep, diag, 1.0), 0.0)
        resid = np.linalg.norm(A @ y - b)
    else:
        Ad = A.toarray()
        y, _, _, _ = np.linalg.lstsq(Ad, b, rcond=None)
        resid = np.linalg.norm(Ad @ y - b)
        Qfac, R, _ = _pivoted_qr(Ad.T)
        rdiag = np.abs(np.diag(R))
        rank = int(np.sum(rdiag > tol * (rdiag[0] if rdiag.size else 0.0)))
        Qmat = Qfac[:, :rank].T.copy()

    if resid > 1e-6 * max(1.0, float(np.linalg.norm(b))):
        raise InfeasibleAffineError(
            f"affine constraints inconsistent (residual {resid:.3e})")

    Lperp = SubspaceBasis(structure, Qmat, tol)
    Y_Lperp = smat(y, structure)
    C_L = program.C - Lperp.project(program.C)
    return AffineData(structure, Lperp, b, program.C, C_L, Y_Lperp)


def _pivoted_qr(M: np.ndarray):
    import scipy.linalg
    return scipy.linalg.qr(M, mode="economic", pivoting=True)


# ---------------------------------------------------------------------------
# Admissibility report
# ---------------------------------------------------------------------------

@dataclass
class AdmissibilityReport:
    contains_points: bool
    L_invariant: bool
    square_closed: bool
    max_residual: float = 0.0

    @property
    def all_ok(self) -> bool:
        return self.contains_points and self.L_invariant and self.square_closed


def check_admissible(S: SubspaceBasis, aff: AffineData,
                     tol: float = 1e-8) -> AdmissibilityReport:
    """Theorem-style admissibility check of a subspace against affine data."""
    worst = 0.0

    contains = True
    for V in (aff.Y_Lperp, aff.C_L):
        r = S.residual(V) / max(1.0, V.norm())
        worst = max(worst, r)
        contains = contains and r <= tol

    Qd = S.Q.toarray() if sp.issparse(S.Q) else S.Q
    invariant = True
    if S.dim:
        PL = np.asarray([aff.project_L_svec(q) for q in Qd])
        R = PL - (PL @ Qd.T) @ Qd
        r = float(np.max(np.linalg.norm(R, axis=1))) if R.size else 0.0
        worst = max(worst, r)
        invariant = r <= tol

    closed = True
    mats = S.matrices
    for i in range(len(mats)):
        for j in range(i, len(mats)):
            prods = [a @ b + b @ a
                     for a, b in zip(mats[i].blocks, mats[j].blocks)]
            P = SymBlockMatrix(S.structure, prods, symmetrize=False)
            r = S.residual(P) / max(1.0, P.norm())
            worst = max(worst, r)
            if r > tol:
                closed = False
    return AdmissibilityReport(contains, invariant, closed, worst)


# ---------------------------------------------------------------------------
# The closure algorithm
# ---------------------------------------------------------------------------

def _square_closure(Q: np.ndarray, structure: BlockStructure, tol: float,
                    frontier_start: int = 0) -> np.ndarray:
    """Grow rows of Q until the span is closed under symmetrized products."""
    processed = frontier_start
    while True:
        d = Q.shape[0]
        if d == 0:
            return Q
        mats = [smat(q, structure) for q in Q]
        cands = []
        for i in range(d):
            j0 = max(i, processed)
            for j in range(j0, d):
                cands.append(svec(SymBlockMatrix(
                    structure,
                    [a @ b + b @ a for a, b in zip(mats[i].blocks, mats[j].blocks)],
                    symmetrize=False)))
        processed = d
        if not cands:
            return Q
        V = np.asarray(cands)
        ref = float(np.max(np.linalg.norm(V, axis=1)))
        if ref == 0.0:
            return Q
        Q = extend_orthonormal(Q, V, drop_tol=tol * max(1.0, ref))
        if Q.shape[0] == d:
            return Q


def optimal_admissible_subspace(aff: AffineData, tol: float = DEFAULT_TOL,
                                seed: int = 0) -> SubspaceBasis:
    """Closure of span{C_L, Y_{L⊥}} under P_L and squaring.

    Deterministic; the seed parameter exists for interface uniformity with the
    randomized variants and is unused.  The squaring step runs to a fixed point
    before each P_L pass, and the driver stops when one full outer iteration
    leaves the dimension unchanged (at most ambient-dim iterations).
    """
    del seed
    structure = aff.structure
    seeds = np.asarray([svec(aff.C_L), svec(aff.Y_Lperp)])
    ref = float(np.max(np.linalg.norm(seeds, axis=1)))
    if ref <= 1e-300:
        log.info("degenerate instance: C_L = Y_Lperp = 0, optimal subspace is {0}")
        return SubspaceBasis.empty(structure, tol)
    Q = extend_orthonormal(np.zeros((0, structure.dim)), seeds, drop_tol=tol * ref)
    Q = _square_closure(Q, structure, tol)
    for _ in range(structure.dim + 1):
        d0 = Q.shape[0]
        PL = np.asarray([aff.project_L_svec(q) for q in Q])
        refp = float(np.max(np.linalg.norm(PL, axis=1))) if PL.size else 0.0
        if refp > 0.0:
            Q = extend_orthonormal(Q, PL, drop_tol=tol * max(1.0, refp))
        Q = _square_closure(Q, structure, tol, frontier_start=d0)
        if Q.shape[0] == d0:
            break
    return SubspaceBasis(structure, Q, tol)


# ---------------------------------------------------------------------------
# *-algebra comparison subspace
# ---------------------------------------------------------------------------

def _full_vec(blocks: list[np.ndarray]) -> np.ndarray:
    return np.concatenate([blk.ravel() for blk in blocks])


def star_algebra_subspace(program: ConicProgram, tol: float = DEFAULT_TOL,
                          cap: int | None = None) -> SubspaceBasis:
    """Symmetric part of the *-algebra generated by {C, A_1, ..., A_m}.

    The closure is run in the full (non-symmetric) block matrix space by
    right-multiplying the current word basis with the generators; since all
    generators are symmetric the span is automatically transpose-closed at
    convergence.  Aborts with CapacityError if the intermediate dimension
    exceeds the cap (default: the ambient full-matrix dimension).
    """
    structure = program.structure
    full_dim = structure.full_dim
    cap = full_dim if cap is None else int(cap)

    gens = [program.C.blocks] + [program.constraint(i).blocks
                                 for i in range(program.m)]
    V = np.asarray([_full_vec(g) for g in gens])
    ref = float(np.max(np.linalg.norm(V, axis=1))) if V.size else 0.0
    if ref == 0.0:
        return SubspaceBasis.empty(structure, tol)
    norms = np.linalg.norm(V, axis=1)
    gen_mats = [[blk / n for blk in g] for g, n in zip(gens, norms) if n > tol * ref]

    Q = extend_orthonormal(np.zeros((0, full_dim)), V, drop_tol=tol * ref)
    frontier = Q
    while frontier.shape[0] and Q.shape[0] < full_dim:
        if Q.shape[0] > cap:
            raise CapacityError(
                f"*-algebra dimension {Q.shape[0]} exceeds cap {cap}")
        cands = []
        for row in frontier:
            W = _unvec_full(row, structure)
            for g in gen_mats:
                cands.append(_full_vec([w @ gb for w, gb in zip(W, g)]))
        V = np.asarray(cands)
        refc = float(np.max(np.linalg.norm(V, axis=1)))
        if refc == 0.0:
            break
        d0 = Q.shape[0]
        Q = extend_orthonormal(Q, V, drop_tol=tol * max(1.0, refc))
        frontier = Q[d0:]
    if Q.shape[0] > cap:
        raise CapacityError(f"*-algebra dimension {Q.shape[0]} exceeds cap {cap}")

    # symmetric part: symmetrize every word and re-orthonormalize in svec coords
    sym_rows = []
    for row in Q:
        W = _unvec_full(row, structure)
        M = SymBlockMatrix(structure, [0.5 * (w + w.T) for w in W], symmetrize=False)
        sym_rows.append(svec(M))
    V = np.asarray(sym_rows)
    refs = float(np.max(np.linalg.norm(V, axis=1))) if V.size else 0.0
    if refs == 0.0:
        return SubspaceBasis.empty(structure, tol)
    Qs = extend_orthonormal(np.zeros((0, structure.dim)), V, drop_tol=tol * refs)
    return SubspaceBasis(structure, Qs, tol)


def _unvec_full(row: np.ndarray, structure: BlockStructure) -> list[np.ndarray]:
    offs = structure.entry_offsets
    return [row[offs[k]:offs[k + 1]].reshape(n, n)
            for k, n in enumerate(structure.orders)]
