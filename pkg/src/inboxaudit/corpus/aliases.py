"""Alias registry: the per-service `<name><index>@domain` assignment scheme.

Indices 000-099 are online services, 100-149 mobile apps; each audited
service gets exactly one alias, so the recipient local-part is the
provenance anchor for every message in the corpus.
"""

from __future__ import annotations

import csv
import logging
import re
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Iterable, Iterator

log = logging.getLogger(__name__)

ONLINE_SERVICE = "online_service"
MOBILE_APP = "mobile_app"

_LOCAL_RE = re.compile(r"^([a-z]+)(\d{3})$")
_MIN_INDEX, _MAX_INDEX = 0, 149
_KIND_SPLIT = 100  # 0-99 online services, 100-149 mobile apps


class RegistryIntegrityError(ValueError):
    """Registry violates an invariant (duplicate index, kind mismatch)."""


class RegistryParseError(ValueError):
    """Registry file row cannot be parsed."""


def expected_kind(index: int) -> str:
    return ONLINE_SERVICE if index < _KIND_SPLIT else MOBILE_APP


@dataclass(frozen=True)
class AliasEntry:
    local_part: str
    index: int
    service_name: str
    service_kind: str
    registration_date: date

    def __post_init__(self):
        if not (_MIN_INDEX <= self.index <= _MAX_INDEX):
            raise RegistryIntegrityError(f"index out of range: {self.index}")
        m = _LOCAL_RE.match(self.local_part)
        if not m:
            raise RegistryIntegrityError(
                f"local part {self.local_part!r} does not match <letters><3 digits>"
            )
        if int(m.group(2)) != self.index:
            raise RegistryIntegrityError(
                f"local part {self.local_part!r} encodes index {m.group(2)}, "
                f"registry says {self.index}"
            )
        if self.service_kind != expected_kind(self.index):
            raise RegistryIntegrityError(
                f"index {self.index} must be {expected_kind(self.index)}, "
                f"got {self.service_kind}"
            )

    def to_dict(self) -> dict:
        return {
            "local_part": self.local_part,
            "index": self.index,
            "service_name": self.service_name,
            "service_kind": self.service_kind,
            "registration_date": self.registration_date.isoformat(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AliasEntry":
        return cls(
            local_part=d["local_part"],
            index=int(d["index"]),
            service_name=d["service_name"],
            service_kind=d["service_kind"],
            registration_date=date.fromisoformat(d["registration_date"]),
        )


def generate_alias(name_seed: str, index: int, domain: str) -> str:
    """Format the deterministic alias address for one service slot."""
    if not name_seed or not name_seed.isascii() or not name_seed.islower() \
            or not name_seed.isalpha():
        raise ValueError(f"name seed must be nonempty lowercase letters: {name_seed!r}")
    if not (_MIN_INDEX <= index <= _MAX_INDEX):
        raise ValueError(f"alias index out of range 0-149: {index}")
    return f"{name_seed}{index:03d}@{domain}"


def parse_alias_local(local_part: str) -> tuple[str, int] | None:
    """Split a local part into (name_seed, index); None when not alias-shaped."""
    m = _LOCAL_RE.match(local_part)
    if not m:
        return None
    return m.group(1), int(m.group(2))


class AliasRegistry:
    """Validated set of alias entries with local-part lookup."""

    def __init__(self, entries: Iterable[AliasEntry]):
        self.entries: list[AliasEntry] = sorted(entries, key=lambda e: e.index)
        seen_idx: dict[int, AliasEntry] = {}
        seen_local: dict[str, AliasEntry] = {}
        for e in self.entries:
            if e.index in seen_idx:
                raise RegistryIntegrityError(f"duplicate index {e.index:03d}")
            if e.local_part in seen_local:
                raise RegistryIntegrityError(f"duplicate local part {e.local_part!r}")
            seen_idx[e.index] = e
            seen_local[e.local_part] = e
        self._by_local = seen_local

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[AliasEntry]:
        return iter(self.entries)

    def match(self, local_part: str) -> AliasEntry | None:
        return self._by_local.get(local_part.lower())

    def service_names(self) -> list[str]:
        return sorted({e.service_name for e in self.entries})


_REQUIRED_COLUMNS = ("local_part", "index", "service_name", "service_kind",
                     "registration_date")


def load_alias_registry(path: str | Path) -> AliasRegistry:
    """Load the registry from a delimited text file with a header row."""
    path = Path(path)
    entries: list[AliasEntry] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            log.warning("empty alias registry: %s", path)
            return AliasRegistry([])
        missing = [c for c in _REQUIRED_COLUMNS if c not in reader.fieldnames]
        if missing:
            raise RegistryParseError(f"{path}: missing columns {missing}")
        for rownum, row in enumerate(reader, start=2):
            try:
                entries.append(AliasEntry(
                    local_part=row["local_part"].strip().lower(),
                    index=int(row["index"]),
                    service_name=row["service_name"].strip(),
                    service_kind=row["service_kind"].strip(),
                    registration_date=date.fromisoformat(
                        row["registration_date"].strip()),
                ))
            except RegistryIntegrityError:
                raise
            except (KeyError, TypeError, ValueError, AttributeError) as exc:
                raise RegistryParseError(f"{path}: row {rownum}: {exc}") from exc
    if not entries:
        log.warning("alias registry has no rows: %s", path)
    return AliasRegistry(entries)
