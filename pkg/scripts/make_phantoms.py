"""Write the synthetic test images as PGM files for use with the CLI.

Produces a noisy block image, a shifted ramp frame pair, and a banded
label image in the chosen directory.
"""

import argparse
import pathlib

from flexsolve.io import PgmImage, write_pgm

from phantoms import noisy_blocks, ramp_frames, three_regions


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out_dir", help="directory for the generated images")
    ap.add_argument("--size", type=int, default=32)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    out = pathlib.Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_pgm(PgmImage.from_array(noisy_blocks(args.size, args.seed)), out / "blocks.pgm")
    f1, f2 = ramp_frames(args.size)
    write_pgm(PgmImage.from_array(f1), out / "ramp_a.pgm")
    write_pgm(PgmImage.from_array(f2), out / "ramp_b.pgm")
    img, _, _ = three_regions(args.size)
    write_pgm(PgmImage.from_array(img), out / "bands.pgm")
    print(f"wrote blocks.pgm, ramp_a.pgm, ramp_b.pgm, bands.pgm to {out}")


if __name__ == "__main__":
    main()
