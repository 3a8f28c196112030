"""SDPA sparse format parsing/writing and free-variable elimination.

The file's constraint vector is interpreted as the equality right-hand side b
and matrix 0 as the cost C, i.e. the file describes
    min <C, X>  s.t.  <A_i, X> = b_i,  X in the psd product cone,
with negative block sizes denoting diagonal (LP) blocks that expand to order-1
psd blocks internally.  write(parse(text)) normalizes entry order (ascending
lexicographic), swaps i > j entries and sums duplicates, after which
parse∘write∘parse is a fixed point.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .program import ConicProgram
from .symspace import BlockStructure, SymBlockMatrix

_SQRT2 = float(np.sqrt(2.0))


class SdpaParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{message}{where}")


@dataclass
class SdpaFile:
    m: int
    block_sizes: list[int]          # negative = diagonal/LP block
    b: np.ndarray
    entries: list[tuple[int, int, int, int, float]]  # (matno, block, i, j, val)
    name: str = ""

    @property
    def nblocks(self) -> int:
        return len(self.block_sizes)

    def normalized(self) -> "SdpaFile":
        """Swap i > j, sum duplicate positions, sort ascending lexicographic."""
        acc: dict[tuple[int, int, int, int], float] = {}
        for matno, blk, i, j, val in self.entries:
            if i > j:
                i, j = j, i
            key = (matno, blk, i, j)
            acc[key] = acc.get(key, 0.0) + float(val)
        entries = [(k[0], k[1], k[2], k[3], v)
                   for k, v in sorted(acc.items()) if v != 0.0]
        return SdpaFile(self.m, list(self.block_sizes),
                        np.asarray(self.b, dtype=float), entries, self.name)


def parse_sdpa(text: str) -> SdpaFile:
    """Parse SDPA sparse input; raises SdpaParseError with a line number."""
    header: list[float] = []
    entries: list[tuple[int, int, int, int, float]] = []
    m = nblocks = None
    block_sizes: list[int] = []
    bvec: list[float] = []
    stage = 0  # 0: m, 1: nblocks, 2: sizes, 3: b, 4: entries

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("*") or line.startswith('"'):
            continue
        cleaned = line.replace(",", " ").replace("{", " ").replace("}", " ") \
                      .replace("(", " ").replace(")", " ")
        tokens = cleaned.split()
        if not tokens:
            continue
        try:
            if stage == 0:
                m = int(float(tokens[0]))
                stage = 1
                continue
            if stage == 1:
                nblocks = int(float(tokens[0]))
                stage = 2
                continue
            if stage == 2:
                block_sizes.extend(int(float(t)) for t in tokens)
                if len(block_sizes) > nblocks:
                    raise SdpaParseError("too many block sizes", lineno)
                if len(block_sizes) == nblocks:
                    stage = 3
                continue
            if stage == 3:
                bvec.extend(float(t) for t in tokens)
                if len(bvec) > m:
                    raise SdpaParseError("too many rhs entries", lineno)
                if len(bvec) == m:
                    stage = 4
                continue
            if len(tokens) % 5 != 0:
                raise SdpaParseError(
                    f"expected 5-tuples, got {len(tokens)} tokens", lineno)
            for ofs in range(0, len(tokens), 5):
                matno = int(float(tokens[ofs]))
                blk = int(float(tokens[ofs + 1]))
                i = int(float(tokens[ofs + 2]))
                j = int(float(tokens[ofs + 3]))
                val = float(tokens[ofs + 4])
                if matno < 0 or matno > m:
                    raise SdpaParseError(f"matrix index {matno} out of range",
                                         lineno)
                if blk < 1 or blk > nblocks:
                    raise SdpaParseError(f"block index {blk} out of range",
                                         lineno)
                size = abs(block_sizes[blk - 1])
                if not (1 <= i <= size and 1 <= j <= size):
                    raise SdpaParseError(f"entry ({i},{j}) outside block", lineno)
                entries.append((matno, blk, i, j, val))
        except SdpaParseError:
            raise
        except ValueError as exc:
            raise SdpaParseError(f"malformed token: {exc}", lineno) from None

    if stage < 4:
        raise SdpaParseError("truncated file (header incomplete)")
    return SdpaFile(m, block_sizes, np.asarray(bvec), entries).normalized()


def write_sdpa(f: SdpaFile) -> str:
    """Serialize with normalized entry order and round-trip-exact floats."""
    f = f.normalized()
    lines = [
        str(f.m),
        str(f.nblocks),
        " ".join(str(s) for s in f.block_sizes),
        " ".join(repr(float(v)) for v in f.b),
    ]
    for matno, blk, i, j, val in f.entries:
        lines.append(f"{matno} {blk} {i} {j} {repr(float(val))}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# conversion to/from ConicProgram
# ---------------------------------------------------------------------------

def program_from_sdpa(f: SdpaFile) -> ConicProgram:
    f = f.normalized()
    orders: list[int] = []
    # block -> (first internal block, is_diagonal)
    placement: list[tuple[int, bool]] = []
    for size in f.block_sizes:
        if size < 0:
            placement.append((len(orders), True))
            orders.extend([1] * (-size))
        else:
            placement.append((len(orders), False))
            orders.append(size)
    structure = BlockStructure(tuple(orders))

    C = SymBlockMatrix.zeros(structure)
    rows, cols, vals = [], [], []
    for matno, blk, i, j, val in f.entries:
        base, diagonal = placement[blk - 1]
        if diagonal:
            if i != j:
                raise SdpaParseError(
                    f"off-diagonal entry ({i},{j}) in diagonal block {blk}")
            tgt, ii, jj = base + i - 1, 0, 0
        else:
            tgt, ii, jj = base, i - 1, j - 1
        if matno == 0:
            C.blocks[tgt][ii, jj] = val
            C.blocks[tgt][jj, ii] = val
        else:
            scale = 1.0 if ii == jj else _SQRT2
            n = structure.orders[tgt]
            coord = (structure.svec_offsets[tgt]
                     + ii * n - ii * (ii - 1) // 2 + (jj - ii))
            rows.append(matno - 1)
            cols.append(coord)
            vals.append(val * scale)
    A = sp.csr_matrix((vals, (rows, cols)), shape=(f.m, structure.dim))
    return ConicProgram(structure, C, A, f.b, name=f.name)


def sdpa_from_program(program: ConicProgram) -> SdpaFile:
    """Convert back to SDPA blocks, collapsing runs of >= 2 order-1 blocks."""
    if program.num_free:
        raise ValueError("eliminate free variables before writing SDPA")
    orders = program.structure.orders
    block_sizes: list[int] = []
    # internal block -> (file block index (1-based), offset inside diag block)
    mapping: list[tuple[int, int]] = []
    k = 0
    while k < len(orders):
        if orders[k] == 1:
            run = 0
            while k + run < len(orders) and orders[k + run] == 1:
                run += 1
            if run >= 2:
                block_sizes.append(-run)
                for t in range(run):
                    mapping.append((len(block_sizes), t))
                k += run
                continue
        block_sizes.append(orders[k])
        mapping.append((len(block_sizes), 0))
        k += 1

    entries: list[tuple[int, int, int, int, float]] = []

    def emit(matno: int, blk_internal: int, i: int, j: int, val: float):
        fileblk, ofs = mapping[blk_internal]
        if block_sizes[fileblk - 1] < 0:
            entries.append((matno, fileblk, ofs + 1, ofs + 1, val))
        else:
            entries.append((matno, fileblk, i + 1, j + 1, val))

    for k, blk in enumerate(program.C.blocks):
        n = blk.shape[0]
        for i in range(n):
            for j in range(i, n):
                if blk[i, j] != 0.0:
                    emit(0, k, i, j, blk[i, j])

    coo = program.A.tocoo()
    offs = program.structure.svec_offsets
    triu = {k: np.triu_indices(n) for k, n in enumerate(orders)}
    for row, coord, val in zip(coo.row, coo.col, coo.data):
        for k, n in enumerate(orders):
            if coord < offs[k + 1]:
                local = int(coord - offs[k])
                i = int(triu[k][0][local])
                j = int(triu[k][1][local])
                emit(int(row) + 1, k, i, j,
                     float(val) if i == j else float(val) / _SQRT2)
                break

    return SdpaFile(program.m, block_sizes, program.b.copy(), entries,
                    name=program.name).normalized()


# ---------------------------------------------------------------------------
# free-variable elimination
# ---------------------------------------------------------------------------

@dataclass
class FreeElimination:
    """Cone-only program plus the back-substitution transport for solutions."""

    program: ConicProgram
    objective_offset: float
    # z = back_cols @ inv(Sigma) @ (rhs - rows @ svec X)
    _rows: np.ndarray = field(repr=False, default=None)
    _rhs: np.ndarray = field(repr=False, default=None)
    _sigma: np.ndarray = field(repr=False, default=None)
    _back_cols: np.ndarray = field(repr=False, default=None)

    def extend(self, X: SymBlockMatrix) -> np.ndarray:
        """Free-variable values completing a cone-feasible X."""
        if self._sigma is None or self._sigma.size == 0:
            return np.zeros(0 if self._back_cols is None
                            else self._back_cols.shape[0])
        from .symspace import svec as _svec
        z1 = (self._rhs - self._rows @ _svec(X)) / self._sigma
        return self._back_cols @ z1


def eliminate_free_variables(program: ConicProgram,
                             tol: float = 1e-10) -> FreeElimination:
    """Remove free scalar variables by orthogonal factorization of their columns.

    With F = U S V^T, the first r transformed constraint rows determine the
    pinned free directions (recorded for back-substitution) and the remaining
    rows involve only cone variables.  A transformed row with vanishing
    coefficients but nonzero rhs signals infeasibility; objective weight on an
    unpinned free direction signals unboundedness.
    """
    if program.num_free == 0:
        return FreeElimination(program=program, objective_offset=0.0,
                               _rows=np.zeros((0, program.structure.dim)),
                               _rhs=np.zeros(0), _sigma=np.zeros(0),
                               _back_cols=np.zeros((0, 0)))
    from .symspace import smat, svec as _svec

    F = np.asarray(program.free_A, dtype=float)
    cf = (np.zeros(F.shape[1]) if program.free_c is None
          else np.asarray(program.free_c, dtype=float))
    U, sig, Vt = np.linalg.svd(F, full_matrices=True)
    scale = sig[0] if sig.size else 0.0
    r = int(np.sum(sig > tol * max(scale, 1.0)))

    w_all = Vt @ cf
    if np.linalg.norm(w_all[r:]) > 1e-9 * max(1.0, np.linalg.norm(cf)):
        raise ValueError("objective is unbounded along a free direction")

    At = U.T @ program.A.toarray()
    bt = U.T @ program.b
    A_keep, b_keep = At[r:], bt[r:]
    for k in range(A_keep.shape[0]):
        if np.linalg.norm(A_keep[k]) <= tol and abs(b_keep[k]) > 1e-8:
            raise ValueError("free-variable elimination exposes an "
                             "inconsistent constraint")

    offset = 0.0
    C_new = program.C
    if r:
        w = w_all[:r] / sig[:r]
        offset = float(np.dot(w, bt[:r]))
        C_new = smat(_svec(program.C) - At[:r].T @ w, program.structure)

    reduced = ConicProgram(
        structure=program.structure,
        C=C_new,
        A=sp.csr_matrix(A_keep),
        b=b_keep,
        name=f"{program.name}|nofree" if program.name else "nofree",
    )
    return FreeElimination(program=reduced, objective_offset=offset,
                           _rows=At[:r], _rhs=bt[:r], _sigma=sig[:r],
                           _back_cols=Vt[:r].T)
