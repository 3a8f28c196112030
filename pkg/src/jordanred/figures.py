"""Matplotlib figures rendered next to the JSON report.

Two files per run: a dimension/rank summary and a before/after aggregate
sparsity pattern of the problem data.  Rendering is deterministic (fixed dpi,
Agg backend, no timestamps in metadata).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .program import ConicProgram
from .report import ReductionReport

_SAVE_OPTS = dict(dpi=110, metadata={"Software": "jordanred"})


def _aggregate_pattern(program: ConicProgram) -> np.ndarray:
    """Boolean block-diagonal support of |C| + sum |A_i| as one dense matrix."""
    orders = program.structure.orders
    total = sum(orders)
    out = np.zeros((total, total), dtype=bool)
    acc = [np.abs(blk) > 0 for blk in program.C.blocks]
    coo = program.A.tocoo()
    offs = program.structure.svec_offsets
    for coord in coo.col:
        for k, n in enumerate(orders):
            if coord < offs[k + 1]:
                local = int(coord - offs[k])
                iu, ju = np.triu_indices(n)
                acc[k][iu[local], ju[local]] = True
                acc[k][ju[local], iu[local]] = True
                break
    pos = 0
    for k, n in enumerate(orders):
        out[pos:pos + n, pos:pos + n] = acc[k]
        pos += n
    return out


def render_report_figures(report: ReductionReport, original: ConicProgram,
                          reduced: ConicProgram, out_dir: Path,
                          stem: str) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    # --- dimensions and rank tuple -------------------------------------
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.4))
    names = sorted(report.dims)
    axes[0].bar(range(len(names)), [report.dims[k] for k in names],
                color="#4878a8")
    axes[0].set_xticks(range(len(names)))
    axes[0].set_xticklabels(names, rotation=30, ha="right", fontsize=8)
    axes[0].set_ylabel("subspace dimension")
    axes[0].set_yscale("log")
    axes[0].set_title("subspace dimensions")

    before = sorted(original.ranks, reverse=True)
    after = sorted(reduced.ranks, reverse=True)
    axes[1].plot(range(1, len(before) + 1), before, "o-", label="original",
                 color="#a85448", markersize=3)
    axes[1].plot(range(1, len(after) + 1), after, "s-", label="reduced",
                 color="#48a878", markersize=3)
    axes[1].set_xlabel("block index (sorted)")
    axes[1].set_ylabel("block order")
    axes[1].set_title("cone block orders")
    axes[1].legend(fontsize=8)
    fig.tight_layout()
    p = out_dir / f"{stem}_dims.png"
    fig.savefig(p, **_SAVE_OPTS)
    plt.close(fig)
    written.append(p)

    # --- aggregate sparsity pattern -------------------------------------
    if max(sum(original.ranks), sum(reduced.ranks)) <= 600:
        fig, axes = plt.subplots(1, 2, figsize=(8, 4))
        for ax, prog, label in ((axes[0], original, "original"),
                                (axes[1], reduced, "reduced")):
            ax.spy(_aggregate_pattern(prog), markersize=1.2, color="#333355")
            ax.set_title(f"{label} data support", fontsize=9)
            ax.tick_params(labelsize=7)
        fig.tight_layout()
        p = out_dir / f"{stem}_pattern.png"
        fig.savefig(p, **_SAVE_OPTS)
        plt.close(fig)
        written.append(p)
    return written
