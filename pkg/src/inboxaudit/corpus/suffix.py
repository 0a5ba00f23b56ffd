"""Registrable-domain extraction against a bundled public-suffix snapshot.

No network fetch at runtime: the snapshot ships with the package so the
same address maps to the same root domain on every run. Matching follows
the standard suffix-list algorithm (exception > wildcard > plain rule,
longest rule wins, implicit `*` for unknown TLDs).
"""

from __future__ import annotations

from functools import lru_cache
from importlib import resources


class SuffixTable:
    def __init__(self, rules: set[str], wildcards: set[str], exceptions: set[str]):
        self.rules = rules            # plain rules, e.g. "co.uk"
        self.wildcards = wildcards    # parents of "*.xx" rules, e.g. "ck"
        self.exceptions = exceptions  # "!www.ck" stored as "www.ck"

    @classmethod
    def parse(cls, text: str) -> "SuffixTable":
        rules: set[str] = set()
        wildcards: set[str] = set()
        exceptions: set[str] = set()
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("//"):
                continue
            line = line.lower()
            if line.startswith("!"):
                exceptions.add(line[1:])
            elif line.startswith("*."):
                wildcards.add(line[2:])
            else:
                rules.add(line)
        return cls(rules, wildcards, exceptions)

    def public_suffix(self, domain: str) -> str:
        labels = domain.lower().rstrip(".").split(".")
        best: list[str] = [labels[-1]]  # implicit * rule
        for start in range(len(labels)):
            candidate = ".".join(labels[start:])
            if candidate in self.exceptions:
                # exception rule: suffix is the rule minus its first label
                return ".".join(labels[start + 1:])
            if candidate in self.rules and len(labels) - start > len(best):
                best = labels[start:]
            parent = ".".join(labels[start + 1:])
            if parent and parent in self.wildcards and len(labels) - start > len(best):
                best = labels[start:]
        return ".".join(best)

    def registrable_domain(self, domain: str) -> str:
        domain = domain.lower().rstrip(".")
        suffix = self.public_suffix(domain)
        if domain == suffix:
            return domain
        n_suffix = suffix.count(".") + 1
        labels = domain.split(".")
        return ".".join(labels[-(n_suffix + 1):])


@lru_cache(maxsize=1)
def default_table() -> SuffixTable:
    text = resources.files("inboxaudit").joinpath(
        "data/public_suffix_snapshot.dat").read_text(encoding="utf-8")
    return SuffixTable.parse(text)


def root_domain(address: str, table: SuffixTable | None = None) -> str:
    """Registrable domain of an email address's domain part."""
    if "@" not in address:
        raise ValueError(f"not an email address (no @): {address!r}")
    domain = address.rsplit("@", 1)[1].strip().strip(">").strip()
    if not domain:
        raise ValueError(f"empty domain part: {address!r}")
    return (table or default_table()).registrable_domain(domain)
