"""Reduction reports serialized as stable, key-sorted JSON (schema 1).

Timings are collected but omitted from the canonical document: identical
inputs, seed and flags must produce byte-identical reports, and wall-clock
phases never would.  Pass include_timings=True to embed them anyway.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field


@dataclass
class ReductionReport:
    method: str
    form: str
    dims: dict[str, int] = field(default_factory=dict)
    rank_tuples: dict[str, list[int]] = field(default_factory=dict)
    nnz_before: int = 0
    nnz_after: int = 0
    kept_constraints: int = 0
    constraints_before: int = 0
    iso_classes: list[str] = field(default_factory=list)
    seed: int = 0
    tol: float = 0.0
    instance: str = ""
    verification: dict | None = None
    timings: dict[str, float] = field(default_factory=dict)
    schema: int = 1

    def as_dict(self, include_timings: bool = False) -> dict:
        doc = {
            "schema": self.schema,
            "instance": self.instance,
            "method": self.method,
            "form": self.form,
            "dims": {k: int(v) for k, v in self.dims.items()},
            "rank_tuples": {k: [int(r) for r in v]
                            for k, v in self.rank_tuples.items()},
            "nnz_before": int(self.nnz_before),
            "nnz_after": int(self.nnz_after),
            "constraints_before": int(self.constraints_before),
            "kept_constraints": int(self.kept_constraints),
            "iso_classes": list(self.iso_classes),
            "seed": int(self.seed),
            "tol": float(self.tol),
        }
        if self.verification is not None:
            doc["verification"] = self.verification
        if include_timings:
            doc["timings"] = {k: float(v) for k, v in self.timings.items()}
        return doc

    def to_json(self, include_timings: bool = False) -> str:
        return json.dumps(self.as_dict(include_timings), sort_keys=True,
                          indent=2) + "\n"
