"""Generators for the reproducible instance families used by the tests.

theta_sdp builds the Lovász theta SDP of a Hamming-distance graph; cprank_sdp
builds the completely-positive-rank lower-bound SDP in primal equality form;
planted_symmetry_sdp manufactures instances whose data are invariant under an
explicit permutation group, so the orbit partition is a known admissible
subspace to test against.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .program import ConicProgram
from .symspace import BlockStructure, SymBlockMatrix

_SQRT2 = float(np.sqrt(2.0))


# ---------------------------------------------------------------------------
# Lovász theta for Hamming-distance graphs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HammingGraphSpec:
    """Vertices are q-bit labels; u ~ v iff popcount(u^v) is in `distances`."""

    q: int
    distances: frozenset[int]

    def __init__(self, q: int, distances):
        object.__setattr__(self, "q", int(q))
        object.__setattr__(self, "distances", frozenset(int(d) for d in distances))
        if not self.distances:
            raise ValueError("need at least one adjacency distance")
        if any(d < 1 or d > self.q for d in self.distances):
            raise ValueError("distances must lie in [1, q]")

    @property
    def num_vertices(self) -> int:
        return 2 ** self.q

    def edges(self) -> list[tuple[int, int]]:
        n = self.num_vertices
        out = []
        for u in range(n):
            for v in range(u + 1, n):
                if bin(u ^ v).count("1") in self.distances:
                    out.append((u, v))
        return out

    @property
    def name(self) -> str:
        ds = "_".join(str(d) for d in sorted(self.distances))
        return f"hamming_{self.q}_{ds}"


def _svec_index(structure: BlockStructure, block: int, i: int, j: int) -> int:
    """Flat svec coordinate of entry (i <= j) inside a block."""
    if i > j:
        i, j = j, i
    n = structure.orders[block]
    return structure.svec_offsets[block] + i * n - i * (i - 1) // 2 + (j - i)


def theta_sdp(spec: HammingGraphSpec) -> ConicProgram:
    """Eq-form theta SDP: minimize <-11^T, X>, trace X = 1, X_uv = 0 on edges."""
    if spec.q > 10:
        raise ValueError("q > 10 is beyond desk scale")
    n = spec.num_vertices
    structure = BlockStructure((n,))
    C = SymBlockMatrix(structure, [-np.ones((n, n))], symmetrize=False)

    edges = spec.edges()
    m = 1 + len(edges)
    rows, cols, vals = [], [], []
    # trace X = 1
    for i in range(n):
        rows.append(0)
        cols.append(_svec_index(structure, 0, i, i))
        vals.append(1.0)
    b = np.zeros(m)
    b[0] = 1.0
    for t, (u, v) in enumerate(edges, start=1):
        rows.append(t)
        cols.append(_svec_index(structure, 0, u, v))
        vals.append(_SQRT2)  # E_uv + E_vu has svec coordinate sqrt(2)
    A = sp.csr_matrix((vals, (rows, cols)), shape=(m, structure.dim))
    return ConicProgram(structure, C, A, b, name=spec.name)


# ---------------------------------------------------------------------------
# cp-rank lower-bound SDP
# ---------------------------------------------------------------------------

Z_MATRIX = np.array([[4.0, 0.0, 1.0],
                     [0.0, 4.0, 1.0],
                     [1.0, 1.0, 3.0]])


def cprank_sdp(W: np.ndarray, name: str = "") -> ConicProgram:
    """Equality-form cp-rank lower-bound SDP for an entrywise-nonnegative W.

    Blocks: the homogenized moment block [[t, vec(W)^T], [vec(W), X]] of order
    n^2+1, the dominance block W⊗W - X of order n^2, and n^2 order-one slack
    blocks for the entry bounds X_{ij,ij} <= W_ij^2.  Rows (n(n+1)/2)^2 + 1 in
    total: the homogenization M_00 = 1; per vec position one row pinning the
    first-moment entry together with its slack; and the pairwise couplings of
    X against W⊗W, where moment positions sharing a row or column of the index
    grid get their own row and all-distinct positions are paired with their
    column-swapped partner (the moment symmetry X_{ij,kl} = X_{il,jk}).
    For W = Z this reproduces ranks (10, 9, 1x9), 37 equations and 172 stored
    nonzeros.
    """
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValueError("W must be square")
    if not np.allclose(W, W.T):
        raise ValueError("W must be symmetric")
    if np.any(W < 0):
        raise ValueError("W must be entrywise nonnegative")
    n = W.shape[0]
    n2 = n * n

    def vec_index(i: int, j: int) -> int:
        # column-major stacking of the n x n grid
        return i + j * n

    def vec_decode(a: int) -> tuple[int, int]:
        return a % n, a // n

    structure = BlockStructure((n2 + 1, n2) + (1,) * n2)
    wvec = np.array([W[i, j] for j in range(n) for i in range(n)])
    WW = np.kron(W, W)

    rows, cols, vals, b = [], [], [], []
    eq = 0

    def add(block: int, i: int, j: int, value: float):
        if i > j:
            i, j = j, i
        scale = 1.0 if i == j else _SQRT2
        rows.append(eq)
        cols.append(_svec_index(structure, block, i, j))
        vals.append(value * scale)

    def endrow(rhs: float):
        nonlocal eq
        b.append(float(rhs))
        eq += 1

    # homogenization
    add(0, 0, 0, 1.0)
    endrow(1.0)

    # first-moment pins with their slack couplings
    for a in range(n2):
        add(0, 0, 1 + a, 1.0)
        add(2 + a, 0, 0, 1.0)
        endrow(2.0 * wvec[a] + wvec[a] ** 2)

    # dominance couplings over off-diagonal moment slots
    paired = set()
    for a in range(n2):
        for c in range(a + 1, n2):
            i, j = vec_decode(a)
            k, l = vec_decode(c)
            if i == k or j == l:
                add(0, 1 + a, 1 + c, 1.0)
                add(1, a, c, 1.0)
                endrow(2.0 * WW[a, c])
            else:
                if (a, c) in paired:
                    continue
                a2, c2 = vec_index(i, l), vec_index(k, j)
                partner = (min(a2, c2), max(a2, c2))
                paired.add((a, c))
                paired.add(partner)
                rhs = 0.0
                for (x, y) in sorted({(a, c), partner}):
                    add(0, 1 + x, 1 + y, 1.0)
                    add(1, x, y, 1.0)
                    rhs += 2.0 * WW[x, y]
                endrow(rhs)

    C = SymBlockMatrix.zeros(structure)
    A = sp.csr_matrix((vals, (rows, cols)), shape=(eq, structure.dim))
    return ConicProgram(structure, C, A, np.asarray(b),
                        name=name or f"cprank_{n}x{n}")


def cprank_instance(tag: str) -> ConicProgram:
    """Named instances Z, ZxZ, ZxZxZ from the 3x3 seed matrix."""
    key = tag.upper().replace("X", "x")
    if key == "Z":
        return cprank_sdp(Z_MATRIX, name="cprank_Z")
    if key == "ZxZ":
        return cprank_sdp(np.kron(Z_MATRIX, Z_MATRIX), name="cprank_ZxZ")
    if key == "ZxZxZ":
        W = np.kron(np.kron(Z_MATRIX, Z_MATRIX), Z_MATRIX)
        return cprank_sdp(W, name="cprank_ZxZxZ")
    raise ValueError(f"unknown cp-rank instance {tag!r}")


# ---------------------------------------------------------------------------
# planted-symmetry instances
# ---------------------------------------------------------------------------

def _group_permutations(n: int, group: str) -> list[np.ndarray]:
    if group == "cyclic":
        return [np.roll(np.arange(n), k) for k in range(n)]
    if group == "dihedral":
        rots = [np.roll(np.arange(n), k) for k in range(n)]
        return rots + [r[::-1] for r in rots]
    if group == "trivial":
        return [np.arange(n)]
    raise ValueError(f"unknown group {group!r}")


def _reynolds(M: np.ndarray, perms: list[np.ndarray]) -> np.ndarray:
    out = np.zeros_like(M)
    for p in perms:
        out += M[np.ix_(p, p)]
    return out / len(perms)


def orbit_partition_labels(n: int, perms: list[np.ndarray]) -> np.ndarray:
    """Orbit labels of the pair action on the n x n entry grid."""
    labels = -np.ones((n, n), dtype=np.int64)
    nxt = 0
    for i in range(n):
        for j in range(n):
            if labels[i, j] >= 0:
                continue
            stack = [(i, j)]
            labels[i, j] = nxt
            while stack:
                a, b = stack.pop()
                for p in perms:
                    na, nb = int(p[a]), int(p[b])
                    if labels[na, nb] < 0:
                        labels[na, nb] = nxt
                        stack.append((na, nb))
            nxt += 1
    return labels.ravel()


def planted_symmetry_sdp(n: int, group: str = "cyclic", seed: int = 0,
                         m: int = 3) -> ConicProgram:
    """Random instance whose data are invariant under a permutation group.

    The constraint rhs comes from a planted invariant interior point, so the
    instance is primal feasible by construction; blockcopy plants two tied
    2 x 2 copies plus a scalar (n is then fixed at 5), reproducing the tied
    ideal pattern.
    """
    if n > 8:
        raise ValueError("planted instances are desk scale (n <= 8)")
    rng = np.random.default_rng(seed)

    if group == "blockcopy":
        n = 5
        structure = BlockStructure((n,))

        def sample():
            B = rng.standard_normal((2, 2))
            B = 0.5 * (B + B.T)
            gamma = rng.standard_normal()
            M = np.zeros((n, n))
            M[:2, :2] = B
            M[2:4, 2:4] = B
            M[4, 4] = gamma
            return M
    else:
        perms = _group_permutations(n, group)
        structure = BlockStructure((n,))

        def sample():
            M = rng.standard_normal((n, n))
            return _reynolds(0.5 * (M + M.T), perms)

    C = SymBlockMatrix(structure, [sample() + 2.0 * np.eye(n)])
    X0 = SymBlockMatrix(structure, [sample() * 0.2 + np.eye(n)])
    constraints = []
    for _ in range(m):
        Ai = SymBlockMatrix(structure, [sample()])
        constraints.append((Ai, float(np.sum(Ai.blocks[0] * X0.blocks[0]))))
    return ConicProgram.from_constraints(
        structure, C, constraints, name=f"planted_{group}_{n}")
