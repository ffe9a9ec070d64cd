#!/usr/bin/env python3
"""Generate a small synthetic corpus (embeddings + run + qrels) to try the CLI on.

Usage:
    python3 scripts/make_demo_data.py --out demo/ --seed 0 --queries 20

Then, for example:
    recipnn rerank --embeddings demo/vectors.emb --run demo/geo.run \
        --qrels demo/judgments.qrels --output demo/rnn.run --k 10 --tau 0.5 --lambda 0.45
    recipnn eval --run demo/rnn.run --qrels demo/judgments.qrels
"""

import argparse
from pathlib import Path

from recipnn.embeddings import write_embeddings
from recipnn.ir_eval import write_qrels, write_run
from recipnn.synthetic import planted_corpus


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("demo"))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--queries", type=int, default=20)
    ap.add_argument("--depth", type=int, default=50)
    args = ap.parse_args()

    corpus = planted_corpus(seed=args.seed, n_queries=args.queries, depth=args.depth)
    args.out.mkdir(parents=True, exist_ok=True)
    write_embeddings(corpus.embeddings, args.out / "vectors.emb")
    write_run(corpus.run, args.out / "geo.run", tag="geometric")
    write_qrels(corpus.qrels, args.out / "judgments.qrels")
    print(f"wrote {len(corpus.embeddings)} vectors, {len(corpus.run)} queries, "
          f"depth {args.depth} -> {args.out}/")


if __name__ == "__main__":
    main()
