"""Command line entry point: shd2spke --input <h5> --output <spke>
[--valid-fraction F --seed S].

Without --valid-fraction the archive converts to a single SPKE file. With
it, the conversion is followed by a deterministic split into
<output stem>.train.spke and <output stem>.valid.spke.
"""

from __future__ import annotations

import argparse
import os
import sys

from .convert import ConvertError, convert, split_train_valid


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="shd2spke", description=__doc__)
    ap.add_argument("--input", required=True, help="HDF5 archive (SHD/SSC layout)")
    ap.add_argument("--output", required=True, help="SPKE output path")
    ap.add_argument("--valid-fraction", type=float,
                    help="also split off this fraction as a validation file")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if args.valid_fraction is not None and not (0.0 < args.valid_fraction < 1.0):
        ap.error("--valid-fraction must be in (0, 1)")
    try:
        data = convert(args.input, args.output)
        print(f"wrote {len(data.samples)} samples "
              f"({data.n_classes} classes) to {args.output}")
        if args.valid_fraction is not None:
            stem, _ = os.path.splitext(args.output)
            n_tr, n_va = split_train_valid(
                args.output, stem + ".train.spke", stem + ".valid.spke",
                1.0 - args.valid_fraction, seed=args.seed)
            print(f"split: {n_tr} train / {n_va} valid (seed {args.seed})")
    except (ConvertError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
