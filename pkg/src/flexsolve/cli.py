"""Command line front end: denoising, optical flow and segmentation.

Exit codes: 0 when the solver converged or exhausted its budget, 2 on
input or usage errors, 3 when the iteration diverged.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .io import FlowField, PgmImage, PgmParseError, read_pgm, write_flo, write_flow_csv, write_pgm
from .linalg import GridDims, vectorize
from .problem import Problem
from .solver import DivergenceError, StopConfig
from .terms import make_data_term, make_gradient_term, make_labeling_term, make_optical_flow_term

__all__ = ["main", "cmd_rof", "cmd_flow", "cmd_segment"]


def _stop_config(args) -> StopConfig:
    return StopConfig(
        max_iters=args.max_iters,
        check_every=args.check_every,
        tolerance=args.tol,
    )


def _progress(out):
    def cb(iteration, report):
        print(
            f"iter {iteration}: primal={report.primal:.6e} "
            f"dual={report.dual:.6e} scaled={report.scaled_total:.6e}",
            file=out,
        )

    return cb


def _finish(summary, out):
    final = summary.final
    state = "converged" if summary.converged else "budget exhausted"
    if final is not None:
        print(
            f"{state} after {summary.iterations} iterations, "
            f"scaled residual {final.scaled_total:.6e}",
            file=out,
        )
    else:
        print(f"{state} after {summary.iterations} iterations", file=out)


def cmd_rof(args, out=None) -> int:
    out = sys.stdout if out is None else out
    img = read_pgm(args.input)
    f = img.as_array()
    dims = GridDims(f.shape)
    p = Problem()
    u = p.add_primal_var(dims)
    p.add_term(make_data_term("l2", 1.0, vectorize(f, dims)), u)
    p.add_term(make_gradient_term("l1-iso", args.alpha, dims), u)
    summary = p.run(_stop_config(args), callback=_progress(out))
    _finish(summary, out)
    result = np.clip(p.get_primal(u), 0.0, 1.0)
    write_pgm(PgmImage.from_array(result, img.maxval), args.output)
    return 0


def cmd_flow(args, out=None) -> int:
    out = sys.stdout if out is None else out
    img1 = read_pgm(args.first)
    img2 = read_pgm(args.second)
    if (img1.width, img1.height) != (img2.width, img2.height):
        raise ValueError(
            f"frame sizes differ: {img1.width}x{img1.height} vs "
            f"{img2.width}x{img2.height}"
        )
    f1 = img1.as_array()
    f2 = img2.as_array()
    dims = GridDims(f1.shape)
    p = Problem()
    v1 = p.add_primal_var(dims)
    v2 = p.add_primal_var(dims)
    p.add_term(
        make_optical_flow_term("l1", 1.0, vectorize(f1, dims), vectorize(f2, dims), dims),
        (v1, v2),
    )
    p.add_term(make_gradient_term("l1-iso", args.alpha1, dims), v1)
    p.add_term(make_gradient_term("l1-iso", args.alpha2, dims), v2)
    summary = p.run(_stop_config(args), callback=_progress(out))
    _finish(summary, out)
    # axis 0 runs down the image rows, so the first component is vertical
    vert = p.get_primal(v1)
    horiz = p.get_primal(v2)
    field = FlowField(img1.width, img1.height, u=horiz, v=vert)
    if args.csv:
        write_flow_csv(field, args.output)
    else:
        write_flo(field, args.output)
    return 0


def cmd_segment(args, out=None) -> int:
    out = sys.stdout if out is None else out
    img = read_pgm(args.input)
    f = img.as_array()
    dims = GridDims(f.shape)
    k = args.num_labels
    if k < 1:
        raise ValueError(f"need at least one label, got {k}")
    if args.labels is not None:
        labels = np.asarray(
            [float(t) for t in args.labels.split(",")], dtype=np.float64
        )
        if labels.size != k:
            raise ValueError(
                f"expected {k} label values, got {labels.size}"
            )
    else:
        if args.seed is None:
            raise ValueError("random labels need an explicit --seed")
        rng = np.random.default_rng(args.seed)
        labels = rng.uniform(0.0, 1.0, size=k)
    print("labels: " + ", ".join(f"{v:.6f}" for v in labels), file=out)
    p = Problem()
    vars_ = [p.add_primal_var(dims) for _ in range(k)]
    p.add_term(make_labeling_term(1.0, vectorize(f, dims), labels, dims), vars_)
    for v in vars_:
        p.add_term(make_gradient_term("l1-iso", args.alpha, dims), v)
    summary = p.run(_stop_config(args), callback=_progress(out))
    _finish(summary, out)
    masks = np.stack([p.get_primal(v) for v in vars_], axis=0)
    for i in range(k):
        write_pgm(
            PgmImage.from_array(np.clip(masks[i], 0.0, 1.0), 255),
            f"{args.output_prefix}_mask{i}.pgm",
        )
    argmax = np.argmax(masks, axis=0)
    if k > 1:
        level_map = argmax.astype(np.float64) / (k - 1)
    else:
        level_map = np.zeros_like(argmax, dtype=np.float64)
    write_pgm(
        PgmImage.from_array(level_map, 255), f"{args.output_prefix}_labels.pgm"
    )
    return 0


def _add_shared(sub):
    sub.add_argument("--max-iters", type=int, default=10000)
    sub.add_argument("--check-every", type=int, default=100)
    sub.add_argument("--tol", type=float, default=1e-5)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flexsolve",
        description="Convex variational solvers for imaging problems",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    rof = subs.add_parser("rof", help="total variation denoising of a PGM image")
    rof.add_argument("input")
    rof.add_argument("output")
    rof.add_argument("--alpha", type=float, default=0.08)
    _add_shared(rof)
    rof.set_defaults(func=cmd_rof)

    flow = subs.add_parser("flow", help="optical flow between two PGM frames")
    flow.add_argument("first")
    flow.add_argument("second")
    flow.add_argument("output")
    flow.add_argument("--alpha1", type=float, default=0.05)
    flow.add_argument("--alpha2", type=float, default=0.05)
    flow.add_argument("--csv", action="store_true", help="write CSV instead of .flo")
    _add_shared(flow)
    flow.set_defaults(func=cmd_flow)

    seg = subs.add_parser("segment", help="multi-label segmentation of a PGM image")
    seg.add_argument("input")
    seg.add_argument("num_labels", type=int)
    seg.add_argument("output_prefix")
    seg.add_argument("--alpha", type=float, default=0.5)
    seg.add_argument("--labels", help="comma-separated label values")
    seg.add_argument("--seed", type=int, help="seed for random label values")
    _add_shared(seg)
    seg.set_defaults(func=cmd_segment)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        return args.func(args)
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (PgmParseError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
