from .aliases import (
    MOBILE_APP,
    ONLINE_SERVICE,
    AliasEntry,
    AliasRegistry,
    RegistryIntegrityError,
    RegistryParseError,
    expected_kind,
    generate_alias,
    load_alias_registry,
    parse_alias_local,
)
from .eml import (
    PARSE_OK,
    PARSE_UNPARSEABLE,
    UNMATCHED,
    EmailRecord,
    html_to_text,
    parse_eml,
    recipient_local_part,
)
from .store import (
    CorpusStore,
    IngestReport,
    ingest_corpus,
    read_corpus_jsonl,
    write_corpus_jsonl,
)
from .suffix import SuffixTable, default_table, root_domain

__all__ = [
    "MOBILE_APP",
    "ONLINE_SERVICE",
    "AliasEntry",
    "AliasRegistry",
    "RegistryIntegrityError",
    "RegistryParseError",
    "expected_kind",
    "generate_alias",
    "load_alias_registry",
    "parse_alias_local",
    "PARSE_OK",
    "PARSE_UNPARSEABLE",
    "UNMATCHED",
    "EmailRecord",
    "html_to_text",
    "parse_eml",
    "recipient_local_part",
    "CorpusStore",
    "IngestReport",
    "ingest_corpus",
    "read_corpus_jsonl",
    "write_corpus_jsonl",
    "SuffixTable",
    "default_table",
    "root_domain",
]
