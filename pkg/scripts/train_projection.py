#!/usr/bin/env python3
"""Train a text-forgetting projection artifact from a small 3-class corpus.

The corpus directory must contain natural/, text/ and overlay/ subfolders;
use fakeatlas.synthetic.write_forget_corpus to synthesize one.
"""

import argparse
from pathlib import Path

from fakeatlas.adapters import build_adapter
from fakeatlas.encoder import save_projection, train_forget_projection
from fakeatlas.synthetic import write_forget_corpus


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--corpus", type=Path, default=None,
                        help="3-class corpus root (default: synthesize a toy one)")
    parser.add_argument("--out", type=Path, required=True, help="projection artifact path")
    parser.add_argument("--adapter", choices=["mock", "tiny", "clip"], default="mock")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--steps", type=int, default=300)
    args = parser.parse_args()

    corpus = args.corpus
    if corpus is None:
        corpus = args.out.parent / "forget-corpus"
        write_forget_corpus(corpus, n_per_class=20, seed=args.seed)
        print(f"synthesized toy corpus under {corpus}")

    adapter = build_adapter({"name": args.adapter, "seed": args.seed})
    projection = train_forget_projection(corpus, adapter, seed=args.seed, steps=args.steps)
    save_projection(projection, args.out)
    print(f"projection written to {args.out} "
          f"(orthonormality defect {projection.orthonormality_defect():.3e})")


if __name__ == "__main__":
    main()
