"""Corpus store: deterministic ingestion of an EML directory plus JSONL I/O."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable

from .aliases import AliasRegistry
from .eml import PARSE_OK, PARSE_UNPARSEABLE, UNMATCHED, EmailRecord, parse_eml

log = logging.getLogger(__name__)

_EPOCH = datetime.fromtimestamp(0, tz=timezone.utc)


@dataclass
class IngestReport:
    files: int = 0
    ok: int = 0
    unparseable: int = 0
    unmatched: int = 0
    duplicates: int = 0

    def to_dict(self) -> dict:
        return {
            "files": self.files,
            "ok": self.ok,
            "unparseable": self.unparseable,
            "unmatched": self.unmatched,
            "duplicates": self.duplicates,
        }


@dataclass
class CorpusStore:
    records: list[EmailRecord] = field(default_factory=list)
    by_service: dict[str, list[EmailRecord]] = field(default_factory=dict)
    by_root_domain: dict[str, list[EmailRecord]] = field(default_factory=dict)

    @classmethod
    def from_records(cls, records: Iterable[EmailRecord]) -> "CorpusStore":
        ordered = sorted(records, key=_sort_key)
        by_service: dict[str, list[EmailRecord]] = {}
        by_root: dict[str, list[EmailRecord]] = {}
        for rec in ordered:
            by_service.setdefault(rec.service_name, []).append(rec)
            if rec.from_root_domain:
                by_root.setdefault(rec.from_root_domain, []).append(rec)
        return cls(records=ordered, by_service=by_service, by_root_domain=by_root)

    def __len__(self) -> int:
        return len(self.records)

    def service_records(self, service_name: str) -> list[EmailRecord]:
        return self.by_service.get(service_name, [])

    def services(self) -> list[str]:
        """Service names with at least one email, UNMATCHED excluded, sorted."""
        return sorted(name for name in self.by_service if name != UNMATCHED)

    def ok_records(self) -> list[EmailRecord]:
        return [r for r in self.records if r.parse_status == PARSE_OK]


def _sort_key(rec: EmailRecord) -> tuple[datetime, str]:
    return (rec.received_utc or _EPOCH, rec.message_id)


def ingest_corpus(directory: str | Path,
                  registry: AliasRegistry,
                  audit_timezone: str = "UTC",
                  trusted_mx: str = "") -> tuple[CorpusStore, IngestReport]:
    """Parse every *.eml under ``directory`` and bind records to the registry.

    Deterministic regardless of filesystem order: files are visited
    sorted, duplicates resolve first-writer-wins on message_id, and the
    final store is sorted by (received_utc, message_id).
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise OSError(f"not a readable directory: {directory}")

    report = IngestReport()
    seen: dict[str, EmailRecord] = {}
    for path in sorted(directory.rglob("*.eml")):
        report.files += 1
        raw = path.read_bytes()
        rec = parse_eml(raw, registry=registry, audit_timezone=audit_timezone,
                        trusted_mx=trusted_mx)
        if rec.message_id in seen:
            report.duplicates += 1
            continue
        seen[rec.message_id] = rec
        if rec.parse_status == PARSE_UNPARSEABLE:
            report.unparseable += 1
        else:
            report.ok += 1
            # unparseable records have no recipient to match, so the
            # unmatched count covers parsed mail only
            if rec.alias == UNMATCHED:
                report.unmatched += 1

    if report.files == 0:
        log.warning("no .eml files under %s", directory)
    store = CorpusStore.from_records(seen.values())
    return store, report


def write_corpus_jsonl(store: CorpusStore, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for rec in store.records:
            fh.write(json.dumps(rec.to_dict(), ensure_ascii=False,
                                sort_keys=True) + "\n")


def read_corpus_jsonl(path: str | Path) -> CorpusStore:
    records: list[EmailRecord] = []
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(EmailRecord.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad corpus line: {exc}") from exc
    return CorpusStore.from_records(records)
