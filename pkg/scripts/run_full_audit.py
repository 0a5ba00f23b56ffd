#!/usr/bin/env python3
"""Generate a synthetic corpus and run the whole pipeline over it.

Smoke-test driver: builds the corpus in a work directory, writes a
config file pointing at it, then runs ingest, classify and analyze and
prints where the artifacts landed.
"""

import argparse
from pathlib import Path

from inboxaudit.config import build_config
from inboxaudit.pipeline import run_report
from inboxaudit.synth import TRUSTED_MX, make_synthetic_corpus


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("workdir", type=Path)
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args()

    corpus = make_synthetic_corpus(args.workdir / "corpus", seed=args.seed)
    cfg = build_config(overrides={
        "corpus_dir": str(corpus.eml_dir),
        "registry_path": str(corpus.registry_path),
        "ip2asn_path": str(corpus.ip2asn_path),
        "abuse_path": str(corpus.abuse_path),
        "org_map_path": str(corpus.org_map_path),
        "sector_map_path": str(corpus.sector_map_path),
        "trusted_mx": TRUSTED_MX,
        "seed": args.seed,
        "output_dir": str(args.workdir / "out"),
    })
    report = run_report(cfg)
    print(f"artifacts in {cfg.output_dir}:")
    for name in report["artifacts"]:
        print(f"  {name}")
    print(f"ingested {report['ingest']['ok']} messages, "
          f"k={report['analysis']['selected_k']}, "
          f"silhouette={report['analysis']['silhouette']:.3f}")


if __name__ == "__main__":
    main()
