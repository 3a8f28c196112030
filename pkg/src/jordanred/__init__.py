"""Jordan-algebraic preprocessing for semidefinite programs.

Restricts an SDP to a provably sufficient low-dimensional Jordan subalgebra of
block symmetric matrices, decomposes the subalgebra into minimal ideals, and
emits an equivalent smaller conic program together with solution-lifting maps.
"""

from .combinat import (
    EntryIndex,
    PartitionNxN,
    PartitionOfRelation,
    SymRelation,
    coarsest_jordan_configuration,
    entry_partition,
    entry_support,
    invariant_coordinate_components,
    is_matrix_equitable,
    optimal_coordinate_subspace,
    optimal_partition_subspace,
    optimal_zeroone_subspace,
    sample_f_L,
    sample_f_square,
)
from .jordan import (
    Ideal,
    IdealDecomposition,
    IsoClass,
    JordanIsomorphism,
    RankTuple,
    classify_ideal,
    cone_membership,
    construct_isomorphism,
    decompose_ideals,
    ideal_rank,
    unit_element,
    weakly_majorizes,
)
from .program import ConicProgram
from .reduce import (
    ReducedProgram,
    ReductionForm,
    lift_dual,
    lift_primal,
    reformulate_isomorphic,
    reformulate_restriction,
    verify_reduction,
)
from .sdpa import (
    FreeElimination,
    SdpaFile,
    SdpaParseError,
    eliminate_free_variables,
    parse_sdpa,
    program_from_sdpa,
    sdpa_from_program,
    write_sdpa,
)
from .subspace import (
    AffineData,
    AdmissibilityReport,
    CapacityError,
    InfeasibleAffineError,
    build_affine_data,
    check_admissible,
    optimal_admissible_subspace,
    star_algebra_subspace,
)
from .symspace import (
    DEFAULT_TOL,
    BlockStructure,
    StructureMismatchError,
    SubspaceBasis,
    SymBlockMatrix,
    inner,
    jordan_product,
    orthonormalize,
    project_onto_span,
    smat,
    svec,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
