"""Command-line driver: read or generate an instance, reduce it, write outputs.

Exit codes: 0 success, 1 I/O or numerical failure, 2 verification failure.
The optional JR_THREADS environment variable caps BLAS parallelism and must be
honored before numpy loads, so all heavy imports happen inside main().
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path


def _configure_threads():
    cap = os.environ.get("JR_THREADS")
    if cap:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
            os.environ.setdefault(var, cap)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="jordanred",
        description="Reduce a semidefinite program by restriction to a "
                    "provably sufficient Jordan subalgebra.")
    ap.add_argument("--method",
                    choices=["optimal", "partition", "coordinate", "zeroone",
                             "data"],
                    default="optimal", help="subspace construction to use")
    ap.add_argument("--form", choices=["isomorphic", "restriction", "auto"],
                    default="auto", help="output formulation")
    ap.add_argument("--input", type=Path, help="SDPA sparse input file")
    ap.add_argument("--generate",
                    help="generate an instance: hamming:q:d1[,d2] or "
                         "cprank:{Z|ZxZ|ZxZxZ}")
    ap.add_argument("--output", type=Path, help="reduced SDPA output file")
    ap.add_argument("--report", type=Path, help="JSON reduction report path")
    ap.add_argument("--seed", type=int, default=0, help="RNG seed (u64)")
    ap.add_argument("--tol", type=float, default=1e-9,
                    help="relative rank/drop tolerance")
    ap.add_argument("--verify", type=int, default=0, metavar="SAMPLES",
                    help="audit the reduction with this many samples")
    ap.add_argument("--no-figures", action="store_true",
                    help="skip matplotlib figures next to the report")
    ap.add_argument("--timings", action="store_true",
                    help="embed wall-clock timings in the report "
                         "(breaks byte-reproducibility)")
    return ap


def _generate(spec: str):
    from .instances import HammingGraphSpec, cprank_instance, theta_sdp

    kind, _, rest = spec.partition(":")
    if kind == "hamming":
        q_str, _, dist_str = rest.partition(":")
        if not dist_str:
            raise ValueError("expected hamming:q:d1[,d2]")
        distances = [int(d) for d in dist_str.split(",") if d]
        return theta_sdp(HammingGraphSpec(int(q_str), distances))
    if kind == "cprank":
        return cprank_instance(rest)
    raise ValueError(f"unknown generator {spec!r}")


def run(args) -> int:
    from . import jordan, reduce as red, subspace as subs
    from .combinat import (optimal_coordinate_subspace,
                           optimal_partition_subspace,
                           optimal_zeroone_subspace)
    from .report import ReductionReport
    from .sdpa import parse_sdpa, program_from_sdpa, sdpa_from_program, write_sdpa

    timings: dict[str, float] = {}
    t0 = time.perf_counter()

    if bool(args.input) == bool(args.generate):
        print("error: provide exactly one of --input / --generate",
              file=sys.stderr)
        return 1
    if args.input:
        program = program_from_sdpa(parse_sdpa(args.input.read_text()))
        program.name = program.name or args.input.stem
    else:
        program = _generate(args.generate)
    timings["load"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    aff = subs.build_affine_data(program, tol=args.tol)
    method_key = {"optimal": "S_opt", "partition": "S_part",
                  "coordinate": "S_coord", "zeroone": "S_01",
                  "data": "S_data"}[args.method]
    if args.method == "optimal":
        S = subs.optimal_admissible_subspace(aff, tol=args.tol, seed=args.seed)
    elif args.method == "partition":
        _, S = optimal_partition_subspace(aff, seed=args.seed, tol=args.tol)
    elif args.method == "coordinate":
        _, S = optimal_coordinate_subspace(aff, seed=args.seed, tol=args.tol)
    elif args.method == "zeroone":
        _, S = optimal_zeroone_subspace(aff, seed=args.seed, tol=args.tol)
    else:
        S = subs.star_algebra_subspace(program, tol=args.tol)
    timings["subspace"] = time.perf_counter() - t0

    report = ReductionReport(method=args.method, form="", seed=args.seed,
                             tol=args.tol, instance=program.name,
                             timings=timings)
    report.dims[method_key] = S.dim
    report.dims["S_full"] = program.structure.dim
    report.nnz_before = program.nnz
    report.constraints_before = program.m

    t0 = time.perf_counter()
    reduced = None
    if S.dim == 0:
        print("warning: degenerate instance, optimal subspace is {0}; "
              "objective value is 0", file=sys.stderr)
        reduced = red.reformulate_restriction(program, S, tol=args.tol)
    if reduced is None and args.form in ("isomorphic", "auto"):
        try:
            decomp = jordan.decompose_ideals(S, seed=args.seed,
                                             tol=max(args.tol, 1e-9))
            report.rank_tuples[method_key] = list(decomp.rank_tuple)
            report.iso_classes = [i.iso_class.value for i in decomp.ideals]
            reduced = red.reformulate_isomorphic(program, decomp, tol=args.tol)
            if reduced is None and args.form == "isomorphic":
                print("error: non-real ideal present; rerun with "
                      "--form restriction or auto", file=sys.stderr)
                return 1
        except Exception:
            if args.form == "isomorphic":
                raise
            reduced = None
    if reduced is None:
        reduced = red.reformulate_restriction(program, S, tol=args.tol)
    timings["reformulate"] = time.perf_counter() - t0

    report.form = reduced.form.value
    report.kept_constraints = reduced.num_kept
    report.nnz_after = reduced.program.nnz
    if reduced.form.value == "isomorphic":
        report.rank_tuples["reduced"] = sorted(
            (int(r) for r in reduced.program.ranks), reverse=True)

    code = 0
    if args.verify:
        t0 = time.perf_counter()
        audit = red.verify_reduction(program, reduced, samples=args.verify,
                                     seed=args.seed)
        timings["verify"] = time.perf_counter() - t0
        report.verification = audit.as_dict()
        if not audit.passed:
            for msg in audit.messages:
                print(f"verification: {msg}", file=sys.stderr)
            code = 2

    if args.output:
        args.output.parent.mkdir(parents=True, exist_ok=True)
        args.output.write_text(write_sdpa(sdpa_from_program(reduced.program)))
    if args.report:
        args.report.parent.mkdir(parents=True, exist_ok=True)
        args.report.write_text(report.to_json(include_timings=args.timings))
        if not args.no_figures:
            from .figures import render_report_figures
            render_report_figures(report, program, reduced.program,
                                  args.report.parent, args.report.stem)
    return code


def cli_run(argv: list[str]) -> int:
    """Parse argv and run; returns the process exit code."""
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except BrokenPipeError:
        return 1
    except Exception as exc:  # I/O, parse and numerical failures -> exit 1
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    _configure_threads()
    sys.exit(cli_run(sys.argv[1:]))


if __name__ == "__main__":
    main()
