"""Equivalent smaller programs and solution transport.

Two output forms: the isomorphic reformulation re-expresses the program over
the product cone of the ideal decomposition (one psd block of order rank(S_i)
per ideal), while the restriction form keeps the original cone and projects
cost and constraints onto the subspace.  Both drop dependent constraint rows,
keeping the earliest maximal independent subset.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .jordan import IdealDecomposition, JordanIsomorphism, construct_isomorphism
from .program import ConicProgram
from .subspace import AffineData, build_affine_data, check_admissible
from .symspace import (
    DEFAULT_TOL,
    BlockStructure,
    SubspaceBasis,
    SymBlockMatrix,
    jordan_product,
    smat,
    svec,
)


class ReductionForm(enum.Enum):
    ISOMORPHIC = "isomorphic"
    RESTRICTION = "restriction"


@dataclass
class ReducedProgram:
    program: ConicProgram
    subspace: SubspaceBasis
    form: ReductionForm
    kept_constraints: tuple[int, ...]
    phi: JordanIsomorphism | None = None

    @property
    def num_kept(self) -> int:
        return len(self.kept_constraints)


def independent_rows(rows: np.ndarray, tol: float = DEFAULT_TOL) -> list[int]:
    """Indices of a maximal independent subset, keeping the earliest rows.

    Sequential Gram-Schmidt in original order; a row is dependent when its
    residual falls below tol times its own norm.
    """
    kept: list[int] = []
    Q: list[np.ndarray] = []
    for i, row in enumerate(np.asarray(rows, dtype=float)):
        nrm0 = np.linalg.norm(row)
        if nrm0 == 0.0:
            continue
        v = row.copy()
        for q in Q:
            v -= np.dot(q, v) * q
        for q in Q:
            v -= np.dot(q, v) * q
        nrm = np.linalg.norm(v)
        if nrm > tol * nrm0:
            Q.append(v / nrm)
            kept.append(i)
    return kept


def _sparse_from_dense_rows(rows: np.ndarray, width: int) -> sp.csr_matrix:
    if rows.size == 0:
        return sp.csr_matrix((0, width))
    out = sp.csr_matrix(np.asarray(rows))
    out.eliminate_zeros()
    return out


def reformulate_restriction(program: ConicProgram, S: SubspaceBasis,
                            tol: float = DEFAULT_TOL) -> ReducedProgram:
    """Same cone, data replaced by P_S projections, dependent rows dropped."""
    C_proj = S.project(program.C)
    prod = program.A @ S.Q.T  # m x dim(S): constraint coefficients in the S basis
    coords = np.asarray(prod.todense()) if sp.issparse(prod) else np.asarray(prod)
    kept = independent_rows(coords, tol)
    orig_norms = np.sqrt(np.asarray(program.A.multiply(program.A)
                                    .sum(axis=1)).ravel())
    dropped_rhs = [i for i in range(program.m)
                   if np.linalg.norm(coords[i]) <= tol * max(1.0, orig_norms[i])
                   and abs(program.b[i]) > 1e-8]
    if dropped_rhs:
        raise ValueError(
            f"constraints {dropped_rhs} project to zero with nonzero rhs; "
            "the subspace is not admissible for this program")
    if sp.issparse(S.Q):
        A_red = (sp.csr_matrix(coords[kept]) @ S.Q).tocsr()
        A_red.eliminate_zeros()
    else:
        A_red = _sparse_from_dense_rows(coords[kept] @ S.Q,
                                        program.structure.dim)
    reduced = ConicProgram(
        structure=program.structure,
        C=C_proj,
        A=A_red,
        b=program.b[list(kept)],
        name=f"{program.name}|restricted" if program.name else "restricted",
    )
    return ReducedProgram(program=reduced, subspace=S,
                          form=ReductionForm.RESTRICTION,
                          kept_constraints=tuple(kept))


def reformulate_isomorphic(program: ConicProgram, decomp: IdealDecomposition,
                           tol: float = DEFAULT_TOL) -> ReducedProgram | None:
    """Program over the product cone of the decomposition, or None as the
    fallback signal when a non-real ideal blocks the explicit isomorphism."""
    if not decomp.all_real:
        return None
    phi = decomp.phi
    if phi is None or getattr(phi, "skipped", ()) != ():
        phi = construct_isomorphism(decomp)
    if phi.skipped != ():
        return None

    M = phi.matrix  # ambient_svec x reduced_svec, orthonormal columns
    C_hat = smat(M.T @ svec(program.C), phi.reduced)
    coords = np.asarray(program.A @ M)  # m x reduced_dim
    kept = independent_rows(coords, tol)
    zero_rows = [i for i in range(program.m)
                 if np.linalg.norm(coords[i]) <= tol and abs(program.b[i]) > 1e-8]
    if zero_rows:
        raise ValueError(
            f"constraints {zero_rows} vanish on the subspace with nonzero rhs")
    reduced = ConicProgram(
        structure=phi.reduced,
        C=C_hat,
        A=_sparse_from_dense_rows(coords[kept], phi.reduced.dim),
        b=program.b[list(kept)],
        name=f"{program.name}|isomorphic" if program.name else "isomorphic",
    )
    return ReducedProgram(program=reduced, subspace=decomp.subspace,
                          form=ReductionForm.ISOMORPHIC,
                          kept_constraints=tuple(kept), phi=phi)


def lift_primal(red: ReducedProgram, Xhat: SymBlockMatrix) -> SymBlockMatrix:
    """Transport a reduced primal point back to the original ambient space."""
    if red.form is ReductionForm.RESTRICTION:
        return Xhat
    return red.phi.apply(Xhat)


def lift_dual(red: ReducedProgram, Shat: SymBlockMatrix) -> SymBlockMatrix:
    """Transport a reduced dual point; Phi (Phi*Phi)^{-1} is Phi for an isometry."""
    if red.form is ReductionForm.RESTRICTION:
        return Shat
    return red.phi.apply(Shat)


# ---------------------------------------------------------------------------
# End-to-end verification
# ---------------------------------------------------------------------------

@dataclass
class VerificationReport:
    admissible: bool
    isometry_residual: float
    homomorphism_residual: float | None
    max_affine_residual: float
    max_objective_drift: float
    min_projected_eigenvalue: float
    lift_affine_residual: float | None
    lift_objective_drift: float | None
    messages: list[str] = field(default_factory=list)
    passed: bool = True

    def as_dict(self) -> dict:
        return {
            "admissible": self.admissible,
            "isometry_residual": self.isometry_residual,
            "homomorphism_residual": self.homomorphism_residual,
            "max_affine_residual": self.max_affine_residual,
            "max_objective_drift": self.max_objective_drift,
            "min_projected_eigenvalue": self.min_projected_eigenvalue,
            "lift_affine_residual": self.lift_affine_residual,
            "lift_objective_drift": self.lift_objective_drift,
            "messages": list(self.messages),
            "passed": self.passed,
        }


def verify_reduction(program: ConicProgram, red: ReducedProgram,
                     samples: int = 50, seed: int = 0,
                     tol: float = 1e-7) -> VerificationReport:
    """Audit a reduction: admissibility, transport isometry, sampled transport.

    Sampled original affine-feasible points must project into the subspace with
    preserved feasibility and objective; random psd matrices must project to
    psd matrices; for isomorphic reductions, lifted reduced-feasible points
    must satisfy the original constraints with matching objective.
    """
    aff = build_affine_data(program)
    S = red.subspace
    msgs: list[str] = []
    ok = True

    adm = check_admissible(S, aff, tol=max(tol, 1e-8))
    if not adm.all_ok:
        ok = False
        msgs.append(f"subspace failed admissibility: {adm}")

    iso_resid = 0.0
    hom_resid = None
    if red.form is ReductionForm.ISOMORPHIC:
        iso_resid = red.phi.isometry_residual()
        if iso_resid > tol:
            ok = False
            msgs.append(f"transport map is not an isometry ({iso_resid:.2e})")
        hom_resid = red.phi.homomorphism_residual(samples=min(8, max(samples, 1)),
                                                  seed=seed)
        if hom_resid > tol:
            ok = False
            msgs.append(f"Jordan homomorphism residual {hom_resid:.2e}")

    rng = np.random.default_rng(seed)
    max_aff = 0.0
    max_obj = 0.0
    min_eig = np.inf
    c_svec = svec(program.C)
    for _ in range(max(samples, 1)):
        # affine-feasible sample: Y_{L⊥} plus a random L component
        z = rng.standard_normal(program.structure.dim)
        x = svec(aff.Y_Lperp) + aff.project_L_svec(z)
        px = S.project_svec(x)
        if program.m:
            max_aff = max(max_aff, float(np.linalg.norm(
                program.A @ px - program.b, ord=np.inf)))
        scale = max(1.0, abs(float(np.dot(c_svec, x))))
        max_obj = max(max_obj, abs(float(np.dot(c_svec, px))
                                   - float(np.dot(c_svec, x))) / scale)
        # positivity of the projection on a random psd matrix
        W = smat(rng.standard_normal(program.structure.dim), program.structure)
        psd = SymBlockMatrix(program.structure,
                             [blk @ blk.T for blk in W.blocks], symmetrize=False)
        proj = S.project(psd)
        min_eig = min(min_eig, proj.min_eigenvalue() / max(1.0, psd.norm()))
    if max_aff > 1e-7 * max(1.0, float(np.linalg.norm(program.b))):
        ok = False
        msgs.append(f"projected points violate affine constraints ({max_aff:.2e})")
    if max_obj > 1e-8 * 10:
        ok = False
        msgs.append(f"objective drift under projection ({max_obj:.2e})")
    if min_eig < -1e-8:
        ok = False
        msgs.append(f"projection is not positive (min eig {min_eig:.2e})")

    lift_aff = None
    lift_obj = None
    if red.form is ReductionForm.ISOMORPHIC and red.program.m:
        lift_aff = 0.0
        lift_obj = 0.0
        red_aff = build_affine_data(red.program)
        for _ in range(max(samples, 1)):
            zh = rng.standard_normal(red.program.structure.dim)
            xh = svec(red_aff.Y_Lperp) + red_aff.project_L_svec(zh)
            Xhat = smat(xh, red.program.structure)
            X = lift_primal(red, Xhat)
            if program.m:
                lift_aff = max(lift_aff, float(np.linalg.norm(
                    program.A @ svec(X) - program.b, ord=np.inf)))
            obj_hat = red.program.objective(Xhat)
            obj = program.objective(X)
            lift_obj = max(lift_obj, abs(obj - obj_hat) / max(1.0, abs(obj_hat)))
        if lift_aff > 1e-7 * max(1.0, float(np.linalg.norm(program.b))):
            ok = False
            msgs.append(f"lifted points violate original constraints ({lift_aff:.2e})")
        if lift_obj > 1e-7:
            ok = False
            msgs.append(f"lifted objective drift ({lift_obj:.2e})")

    return VerificationReport(
        admissible=adm.all_ok,
        isometry_residual=iso_resid,
        homomorphism_residual=hom_resid,
        max_affine_residual=max_aff,
        max_objective_drift=max_obj,
        min_projected_eigenvalue=float(min_eig) if np.isfinite(min_eig) else 0.0,
        lift_affine_residual=lift_aff,
        lift_objective_drift=lift_obj,
        messages=msgs,
        passed=ok,
    )
