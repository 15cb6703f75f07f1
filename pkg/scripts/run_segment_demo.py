"""Segment the banded phantom into three labels and report how many
pixels land on the correct one."""

import argparse

import numpy as np

from flexsolve import (
    GridDims,
    Problem,
    StopConfig,
    make_gradient_term,
    make_labeling_term,
    vectorize,
)
from flexsolve.io import PgmImage, write_pgm

from phantoms import three_regions


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=32)
    ap.add_argument("--alpha", type=float, default=0.5)
    ap.add_argument("--prefix", help="optional output prefix for mask images")
    args = ap.parse_args()

    img, labels, truth = three_regions(args.size)
    dims = GridDims(img.shape)
    p = Problem()
    vars_ = [p.add_primal_var(dims) for _ in labels]
    p.add_term(make_labeling_term(1.0, vectorize(img, dims), labels, dims), vars_)
    for v in vars_:
        p.add_term(make_gradient_term("l1-iso", args.alpha, dims), v)
    summary = p.run(StopConfig())
    state = "converged" if summary.converged else "stopped"
    print(
        f"{state} after {summary.iterations} iterations, "
        f"scaled residual {summary.final.scaled_total:.3e}"
    )
    masks = np.stack([p.get_primal(v) for v in vars_])
    accuracy = float(np.mean(np.argmax(masks, axis=0) == truth))
    print(f"label accuracy: {accuracy:.4f}")
    if args.prefix:
        for i in range(masks.shape[0]):
            path = f"{args.prefix}_mask{i}.pgm"
            write_pgm(PgmImage.from_array(np.clip(masks[i], 0.0, 1.0)), path)
            print(f"wrote {path}")


if __name__ == "__main__":
    main()
