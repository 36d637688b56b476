#!/usr/bin/env python3
"""Generate a seeded synthetic real/fake image corpus for desk-scale runs."""

import argparse
from pathlib import Path

from fakeatlas.synthetic import write_image_corpus


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, required=True, help="corpus root directory")
    parser.add_argument("--per-class", type=int, default=200)
    parser.add_argument("--size", type=int, default=64)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    manifest = write_image_corpus(args.out, n_per_class=args.per_class,
                                  size=args.size, seed=args.seed)
    counts = manifest.class_counts
    print(f"wrote {counts[0]} real + {counts[1]} fake images under {args.out}")


if __name__ == "__main__":
    main()
