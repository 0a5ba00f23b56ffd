#!/usr/bin/env python3
"""Generate the synthetic EML corpora used by the end-to-end tests.

Writes the realistic multi-service corpus plus the verdict-grid corpus,
each with its registry and network snapshots, then prints a summary.
"""

import argparse
import json
from pathlib import Path

from inboxaudit.synth import make_grid_corpus, make_synthetic_corpus


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out", type=Path, help="output directory")
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--days", type=int, default=60)
    args = parser.parse_args()

    main_corpus = make_synthetic_corpus(args.out / "main", seed=args.seed,
                                        n_days=args.days)
    grid = make_grid_corpus(args.out / "grid")

    print(json.dumps({
        "main": {k: str(v) if isinstance(v, Path) else v
                 for k, v in vars(main_corpus).items() if k != "expected"},
        "main_expected": main_corpus.expected,
        "grid_messages": grid.expected["n_messages"],
    }, indent=2, default=str))


if __name__ == "__main__":
    main()
