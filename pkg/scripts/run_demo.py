#!/usr/bin/env python3
"""End-to-end demo: synthesize a corpus, train a detector, build a snapshot.

Prints the serve command at the end; point the explorer frontend at it.
"""

import argparse
import subprocess
import sys
from pathlib import Path


def run(cmd: list[str]) -> None:
    print("+", " ".join(cmd))
    subprocess.run(cmd, check=True)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--workdir", type=Path, default=Path("demo-workdir"))
    parser.add_argument("--per-class", type=int, default=200)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--epochs", type=int, default=10)
    args = parser.parse_args()

    corpus = args.workdir / "corpus"
    model_dir = args.workdir / "model"
    store = args.workdir / "store"
    run([sys.executable, str(Path(__file__).parent / "make_mock_corpus.py"),
         "--out", str(corpus), "--per-class", str(args.per_class),
         "--seed", str(args.seed)])
    run(["fakeatlas", "train", "--manifest", str(corpus), "--out", str(model_dir),
         "--seed", str(args.seed), "--epochs", str(args.epochs)])
    run(["fakeatlas", "analyze", "--manifest", str(corpus),
         "--checkpoint", str(model_dir / "checkpoint.bin"),
         "--projection", str(model_dir / "projection.bin"),
         "--out", str(store), "--seed", str(args.seed), "--name", "demo"])
    print("\ndone. serve the API with:")
    print(f"  fakeatlas serve --store {store} --addr 127.0.0.1:8000")


if __name__ == "__main__":
    main()
